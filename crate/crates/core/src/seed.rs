//! Deterministic seed derivation.
//!
//! Every random stream in an experiment is seeded by folding a path of
//! integer labels into the base seed with the SplitMix64 finalizer:
//!
//! ```text
//! s_0 = base;  s_{k+1} = mix(s_k ^ mix(label_k + GOLDEN))
//! ```
//!
//! A replicate's stream depends only on its own path, so changing one
//! replicate index never perturbs another replicate's output.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the stream addressed by `path` under `base`.
pub fn derive(base: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(mix(base), |s, &label| mix(s ^ mix(label.wrapping_add(GOLDEN))))
}

/// FNV-1a hash of a text label, for streams keyed by name.
pub fn label(text: &str) -> u64 {
    text.bytes().fold(0xCBF2_9CE4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01B3)
    })
}

/// Stream labels used by the experiment layer.
pub mod stream {
    pub const TRUTH: u64 = 1;
    pub const DATA: u64 = 2;
    pub const CHAIN: u64 = 3;
    pub const MODEL: u64 = 4;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivation_is_stable_and_path_sensitive() {
        assert_eq!(derive(42, &[1, 2, 3]), derive(42, &[1, 2, 3]));
        assert_ne!(derive(42, &[1, 2, 3]), derive(42, &[1, 2, 4]));
        assert_ne!(derive(42, &[1, 2]), derive(42, &[2, 1]));
        assert_ne!(derive(42, &[]), derive(43, &[]));
        // Pinned so that reports stay reproducible across releases.
        assert_eq!(mix(0), 0xE220_A839_7B1D_CDAF);
        assert_eq!(label(""), 0xCBF2_9CE4_8422_2325);
        assert_eq!(label("a"), 0xAF63_DC4C_8601_EC8C);
    }
}
