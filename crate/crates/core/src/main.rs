fn main() {
    std::process::exit(gprior_mix::cli::run(std::env::args_os()));
}
