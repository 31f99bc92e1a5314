//! Centered-design regression statistics for arbitrary submodels.
//!
//! Every candidate model contains the intercept. For a model `alpha` the
//! design is `Z = (1, X_alpha)` and all projections are obtained from a
//! Householder QR factorization of `Z` with column pivoting; normal
//! equations are never formed.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative cutoff on pivoted `|R_kk|` below which a design is declared rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Absolute tolerance (per observation) on column sums of a centered design.
pub const CENTERING_TOLERANCE: f64 = 1e-9;

/// A candidate model: sorted, duplicate-free 1-based regressor indices.
///
/// The empty index set is the intercept-only null model. Ordering is by
/// model size first and then lexicographic on the indices, which is the
/// tie-break order used when selecting a top model.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct ModelIndex(Vec<usize>);

impl ModelIndex {
    pub fn null() -> Self {
        ModelIndex(Vec::new())
    }

    /// Builds a model from 1-based indices in any order. Duplicates and zero are rejected.
    pub fn new(mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        if indices.first() == Some(&0) {
            return Err(Error::InvalidInput("model indices are 1-based".into()));
        }
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput(format!(
                "duplicate index in model {indices:?}"
            )));
        }
        Ok(ModelIndex(indices))
    }

    /// `{1, 2, ..., k}`.
    pub fn prefix(k: usize) -> Self {
        ModelIndex((1..=k).collect())
    }

    pub fn full(p: usize) -> Self {
        Self::prefix(p)
    }

    /// Bit `j` of the mask marks regressor `j + 1`.
    pub fn from_mask(mask: u128) -> Self {
        let mut v = Vec::with_capacity(mask.count_ones() as usize);
        let mut m = mask;
        while m != 0 {
            let j = m.trailing_zeros() as usize;
            v.push(j + 1);
            m &= m - 1;
        }
        ModelIndex(v)
    }

    pub fn to_mask(&self) -> u128 {
        self.0.iter().fold(0u128, |acc, &j| acc | (1u128 << (j - 1)))
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    /// `p(alpha)`, the number of regressors in the model.
    pub fn size(&self) -> usize {
        self.0.len()
    }

    pub fn is_null(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.0.binary_search(&j).is_ok()
    }

    pub fn is_subset_of(&self, other: &ModelIndex) -> bool {
        self.0.iter().all(|j| other.contains(*j))
    }

    pub fn check_within(&self, p: usize) -> Result<()> {
        match self.0.last() {
            Some(&last) if last > p => Err(Error::InvalidInput(format!(
                "model {self} refers to regressor {last} but only {p} exist"
            ))),
            _ => Ok(()),
        }
    }
}

impl TryFrom<Vec<usize>> for ModelIndex {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        ModelIndex::new(v)
    }
}

impl From<ModelIndex> for Vec<usize> {
    fn from(m: ModelIndex) -> Self {
        m.0
    }
}

impl PartialOrd for ModelIndex {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ModelIndex {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl fmt::Display for ModelIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, j) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{j}")?;
        }
        write!(f, "}}")
    }
}

/// Response vector and centered design matrix.
#[derive(Clone, Debug)]
pub struct Dataset {
    y: Vec<f64>,
    degenerate: bool,
    /// Unpivoted Householder factorization `X = Q R` of the centered design.
    basis: PivotedQr,
    /// Upper triangle of `R`, column-major `p x p`.
    compressed: Vec<f64>,
    /// First `p` entries of `Q' (y - ybar 1)`.
    qty: Vec<f64>,
    /// Squared norm of the remaining `n - p` entries of `Q' (y - ybar 1)`.
    rss_full: f64,
    /// Column-major `n x p`, columns centered.
    x: Vec<f64>,
    /// Column-major `n x p` as supplied, kept so the data can be written back exactly.
    raw: Vec<f64>,
    column_means: Vec<f64>,
    n: usize,
    p: usize,
    s_y2: f64,
}

/// Subtracts the column mean from every column.
///
/// Columns are given as separate vectors of equal length `n`.
pub fn center_columns(columns: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = columns.first().map_or(0, Vec::len);
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "centering needs at least two rows, got {n}"
        )));
    }
    columns
        .iter()
        .enumerate()
        .map(|(j, col)| {
            if col.len() != n {
                return Err(Error::InvalidInput(format!(
                    "column {} has {} rows, expected {n}",
                    j + 1,
                    col.len()
                )));
            }
            let mean = col.iter().sum::<f64>() / n as f64;
            Ok(col.iter().map(|v| v - mean).collect())
        })
        .collect()
}

impl Dataset {
    /// Builds a dataset from a response and raw (uncentered) regressor columns.
    pub fn new(y: Vec<f64>, columns: Vec<Vec<f64>>) -> Result<Self> {
        let means: Vec<f64> = columns
            .iter()
            .map(|c| c.iter().sum::<f64>() / c.len().max(1) as f64)
            .collect();
        let centered = center_columns(&columns)?;
        let raw = columns.into_iter().flatten().collect();
        Self::assemble(y, centered, means, Some(raw))
    }

    /// Builds a dataset from columns that are already centered.
    pub fn from_centered(y: Vec<f64>, columns: Vec<Vec<f64>>) -> Result<Self> {
        let n = y.len() as f64;
        for (j, col) in columns.iter().enumerate() {
            let s: f64 = col.iter().sum();
            if s.abs() > CENTERING_TOLERANCE * n {
                return Err(Error::InvalidInput(format!(
                    "column {} is not centered (sum {s:e})",
                    j + 1
                )));
            }
        }
        let p = columns.len();
        Self::assemble(y, columns, vec![0.0; p], None)
    }

    fn assemble(
        y: Vec<f64>,
        columns: Vec<Vec<f64>>,
        column_means: Vec<f64>,
        raw: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = y.len();
        let p = columns.len();
        if n < 3 {
            return Err(Error::InvalidInput(format!("need n >= 3, got n = {n}")));
        }
        if p < 1 {
            return Err(Error::InvalidInput("need at least one regressor".into()));
        }
        if p >= n {
            return Err(Error::InvalidRegime(format!(
                "p < n is required, got p = {p}, n = {n}"
            )));
        }
        if let Some(j) = columns.iter().position(|c| c.len() != n) {
            return Err(Error::InvalidInput(format!(
                "column {} has {} rows, expected {n}",
                j + 1,
                columns[j].len()
            )));
        }
        if y.iter().chain(columns.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite value in data".into()));
        }
        let mean = y.iter().sum::<f64>() / n as f64;
        let s_y2 = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        let x: Vec<f64> = columns.into_iter().flatten().collect();
        let raw = raw.unwrap_or_else(|| x.clone());
        let scale = y.iter().map(|v| v * v).sum::<f64>() / n as f64;
        let degenerate = !(s_y2 > 1e-28 * scale.max(f64::MIN_POSITIVE));
        let basis = PivotedQr::factor_unpivoted(n, p, x.clone());
        let mut compressed = vec![0.0; p * p];
        for j in 0..p {
            compressed[j * p..j * p + j].copy_from_slice(&basis.a[j * n..j * n + j]);
            compressed[j * p + j] = basis.diag[j];
        }
        let y_centered: Vec<f64> = y.iter().map(|v| v - mean).collect();
        let rotated = basis.apply_transpose(&y_centered);
        let rss_full = rotated[p..].iter().map(|v| v * v).sum();
        Ok(Dataset {
            y,
            x,
            raw,
            degenerate,
            basis,
            compressed,
            qty: rotated[..p].to_vec(),
            rss_full,
            column_means,
            n,
            p,
            s_y2,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Centered column `j` (0-based).
    pub fn column(&self, j: usize) -> &[f64] {
        &self.x[j * self.n..(j + 1) * self.n]
    }

    /// Column `j` (0-based) as supplied at construction.
    pub fn raw_column(&self, j: usize) -> &[f64] {
        &self.raw[j * self.n..(j + 1) * self.n]
    }

    /// Means subtracted from the raw columns at construction.
    pub fn column_means(&self) -> &[f64] {
        &self.column_means
    }

    /// `S_y^2 = ||y - ybar 1||^2 / n`.
    pub fn s_y2(&self) -> f64 {
        self.s_y2
    }

    /// True when the response has no spread relative to its magnitude.
    pub fn is_response_degenerate(&self) -> bool {
        self.degenerate
    }
}

/// Sums of squares and coefficient of determination for one model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegressionStats {
    pub s_y2: f64,
    pub r2: f64,
    pub rss: f64,
    pub p_alpha: usize,
    pub effective_rank: usize,
}

/// Householder QR with column pivoting of an `n x m` column-major matrix.
#[derive(Clone, Debug)]
struct PivotedQr {
    n: usize,
    m: usize,
    /// Householder vectors stored in place below (and on) the diagonal.
    a: Vec<f64>,
    tau: Vec<f64>,
    diag: Vec<f64>,
}

impl PivotedQr {
    fn factor(n: usize, m: usize, a: Vec<f64>) -> Self {
        Self::factor_with(n, m, a, true)
    }

    fn factor_unpivoted(n: usize, m: usize, a: Vec<f64>) -> Self {
        Self::factor_with(n, m, a, false)
    }

    fn factor_with(n: usize, m: usize, mut a: Vec<f64>, pivot: bool) -> Self {
        debug_assert_eq!(a.len(), n * m);
        let mut tau = vec![0.0; m];
        let mut diag = vec![0.0f64; m];
        let sq = |c: &[f64]| c.iter().map(|v| v * v).sum::<f64>();
        // Partial column norms, downdated after each step and recomputed on
        // heavy cancellation.
        let mut norms: Vec<f64> = (0..m).map(|j| sq(&a[j * n..(j + 1) * n])).collect();
        let mut reference = norms.clone();
        for k in 0..m {
            let best = if pivot {
                (k..m)
                    .max_by(|&i, &j| norms[i].total_cmp(&norms[j]).then(j.cmp(&i)))
                    .expect("non-empty range")
            } else {
                k
            };
            if best != k {
                for i in 0..n {
                    a.swap(k * n + i, best * n + i);
                }
                norms.swap(k, best);
                reference.swap(k, best);
            }
            let norm = sq(&a[k * n + k..(k + 1) * n]).sqrt();
            if norm == 0.0 {
                continue;
            }
            let x0 = a[k * n + k];
            let alpha = if x0 >= 0.0 { -norm } else { norm };
            a[k * n + k] = x0 - alpha;
            // v'v = 2 norm (norm + |x0|)
            tau[k] = 1.0 / (norm * (norm + x0.abs()));
            diag[k] = alpha;
            let (head, tail) = a.split_at_mut((k + 1) * n);
            let v = &head[k * n + k..(k + 1) * n];
            for j in 0..(m - k - 1) {
                let col = &mut tail[j * n + k..(j + 1) * n];
                let s: f64 = v.iter().zip(col.iter()).map(|(a, b)| a * b).sum();
                let s = s * tau[k];
                for (c, vi) in col.iter_mut().zip(v) {
                    *c -= s * vi;
                }
                let jj = k + 1 + j;
                norms[jj] -= col[0] * col[0];
                if norms[jj] <= 1e-4 * reference[jj] {
                    norms[jj] = sq(&col[1..]);
                    reference[jj] = norms[jj];
                }
            }
        }
        PivotedQr {
            n,
            m,
            a,
            tau,
            diag,
        }
    }

    /// Number of diagonal entries of `R` above `RANK_TOLERANCE * scale`.
    fn rank(&self, scale: f64) -> usize {
        self.diag
            .iter()
            .filter(|d| d.abs() > RANK_TOLERANCE * scale)
            .count()
    }

    fn max_diag(&self) -> f64 {
        self.diag.iter().fold(0.0f64, |acc, d| acc.max(d.abs()))
    }

    /// `Q' v`.
    fn apply_transpose(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut w = v.to_vec();
        for k in 0..self.m {
            if self.tau[k] == 0.0 {
                continue;
            }
            let h = &self.a[k * n + k..(k + 1) * n];
            let s: f64 = h.iter().zip(&w[k..]).map(|(a, b)| a * b).sum();
            let s = s * self.tau[k];
            for (wi, hi) in w[k..].iter_mut().zip(h) {
                *wi -= s * hi;
            }
        }
        w
    }

    /// Squared norm of the component of `v` orthogonal to the column space.
    fn residual_norm2(&self, v: &[f64]) -> f64 {
        self.apply_transpose(v)[self.m..].iter().map(|v| v * v).sum()
    }
}

/// Pivoted QR of the columns of `R` selected by `alpha`.
///
/// With `X = Q R`, the columns of `X_alpha` are `Q R_alpha`, so `R_alpha`
/// (`p x p(alpha)`) carries the same geometry in `p` coordinates. Centered
/// columns are orthogonal to the intercept, so `Z = (1, X_alpha)` has rank one
/// more than `X_alpha` and contributes `sqrt(n)` to the scale of `R`.
fn factor_model(d: &Dataset, alpha: &ModelIndex) -> Result<PivotedQr> {
    alpha.check_within(d.p)?;
    let p = d.p;
    let m = alpha.size();
    let mut a = Vec::with_capacity(p * m);
    for &j in alpha.indices() {
        a.extend_from_slice(&d.compressed[(j - 1) * p..j * p]);
    }
    let qr = PivotedQr::factor(p, m, a);
    let scale = qr.max_diag().max((d.n as f64).sqrt());
    let rank = 1 + qr.rank(scale);
    if rank < m + 1 {
        return Err(Error::DegenerateDesign {
            model: alpha.clone(),
            rank,
            required: m + 1,
        });
    }
    Ok(qr)
}

/// Residual sum of squares of a centered vector whose rotation `Q' v` splits
/// into `head` (first `p` entries) and a tail with squared norm `tail`.
fn projected_rss(d: &Dataset, alpha: &ModelIndex, head: &[f64], tail: f64) -> Result<f64> {
    if alpha.is_null() {
        return Ok(tail + head.iter().map(|v| v * v).sum::<f64>());
    }
    let qr = factor_model(d, alpha)?;
    Ok(tail + qr.residual_norm2(head))
}

/// `S_y^2`, `R^2_alpha` and the residual sum of squares of model `alpha`.
pub fn fit_stats(d: &Dataset, alpha: &ModelIndex) -> Result<RegressionStats> {
    if d.is_response_degenerate() {
        return Err(Error::DegenerateResponse);
    }
    let tss = d.n as f64 * d.s_y2;
    if alpha.is_null() {
        return Ok(RegressionStats {
            s_y2: d.s_y2,
            r2: 0.0,
            rss: tss,
            p_alpha: 0,
            effective_rank: 1,
        });
    }
    let rss = projected_rss(d, alpha, &d.qty, d.rss_full)?;
    let r2 = (1.0 - rss / tss).clamp(0.0, 1.0);
    Ok(RegressionStats {
        s_y2: d.s_y2,
        r2,
        rss,
        p_alpha: alpha.size(),
        effective_rank: alpha.size() + 1,
    })
}

/// `mu' (I - P_n(alpha)) mu`, the sigma-free kernel of the model-false divergence.
pub fn residual_quadratic(mu: &[f64], alpha: &ModelIndex, d: &Dataset) -> Result<f64> {
    if mu.len() != d.n {
        return Err(Error::InvalidInput(format!(
            "mean vector has length {}, expected {}",
            mu.len(),
            d.n
        )));
    }
    alpha.check_within(d.p)?;
    let mean = mu.iter().sum::<f64>() / d.n as f64;
    let centered: Vec<f64> = mu.iter().map(|v| v - mean).collect();
    let rotated = d.basis.apply_transpose(&centered);
    let tail = rotated[d.p..].iter().map(|v| v * v).sum();
    projected_rss(d, alpha, &rotated[..d.p], tail)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Dataset {
        let x1 = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let x2 = vec![2.0, -1.0, 0.5, 3.0, 1.0, -2.0];
        let y = vec![1.1, 1.9, 3.2, 3.9, 5.1, 6.0];
        Dataset::new(y, vec![x1, x2]).unwrap()
    }

    #[test]
    fn centering_examples() {
        let c = center_columns(&[vec![1.0, 2.0, 3.0]]).unwrap();
        assert_eq!(c[0], vec![-1.0, 0.0, 1.0]);
        let c = center_columns(&[vec![-1.0, 0.0, 1.0]]).unwrap();
        assert_eq!(c[0], vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn centering_rejects_ragged_and_short() {
        assert!(center_columns(&[vec![1.0, 2.0], vec![1.0]]).is_err());
        assert!(center_columns(&[vec![1.0]]).is_err());
    }

    #[test]
    fn model_index_validation_and_order() {
        assert!(ModelIndex::new(vec![2, 2]).is_err());
        assert!(ModelIndex::new(vec![0, 1]).is_err());
        let m = ModelIndex::new(vec![3, 1]).unwrap();
        assert_eq!(m.indices(), &[1, 3]);
        assert_eq!(m.to_string(), "{1,3}");
        assert_eq!(ModelIndex::from_mask(m.to_mask()), m);
        assert!(ModelIndex::null() < ModelIndex::new(vec![5]).unwrap());
        assert!(ModelIndex::new(vec![1, 9]).unwrap() < ModelIndex::new(vec![2, 3]).unwrap());
        assert!(ModelIndex::new(vec![9]).unwrap() < ModelIndex::new(vec![1, 2]).unwrap());
    }

    #[test]
    fn dataset_regime_checks() {
        let err = Dataset::new(vec![1.0, 2.0, 3.0], vec![vec![1.0, 2.0, 4.0]; 3]).unwrap_err();
        assert!(matches!(err, Error::InvalidRegime(_)));
        assert!(Dataset::new(vec![1.0, 2.0], vec![vec![1.0, 2.0]]).is_err());
        assert!(Dataset::from_centered(vec![1.0, 2.0, 3.0, 4.0], vec![vec![1.0, 1.0, 1.0, 1.0]]).is_err());
    }

    #[test]
    fn null_model_stats() {
        let d = toy();
        let s = fit_stats(&d, &ModelIndex::null()).unwrap();
        assert_eq!(s.r2, 0.0);
        assert!((s.rss - d.n() as f64 * d.s_y2()).abs() < 1e-12);
    }

    #[test]
    fn perfect_fit_has_unit_r2() {
        let x1 = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let y: Vec<f64> = x1.iter().map(|v| 2.0 + 3.0 * v).collect();
        let d = Dataset::new(y, vec![x1, vec![0.3, -1.0, 2.0, 0.1, 0.7]]).unwrap();
        let s = fit_stats(&d, &ModelIndex::prefix(1)).unwrap();
        assert!((s.r2 - 1.0).abs() < 1e-8);
        assert!(s.rss < 1e-8 * d.n() as f64 * d.s_y2());
    }

    #[test]
    fn rank_deficient_design_is_reported() {
        let x1 = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let x2: Vec<f64> = x1.iter().map(|v| 2.0 * v).collect();
        let d = Dataset::new(vec![1.0, 0.0, 2.0, 5.0, 3.0], vec![x1, x2]).unwrap();
        match fit_stats(&d, &ModelIndex::full(2)) {
            Err(Error::DegenerateDesign { rank, required, .. }) => {
                assert_eq!(rank, 2);
                assert_eq!(required, 3);
            }
            other => panic!("expected degenerate design, got {other:?}"),
        }
    }

    #[test]
    fn constant_response_is_degenerate() {
        let d = Dataset::new(vec![5.0; 4], vec![vec![1.0, 2.0, 3.0, 5.0]]).unwrap();
        assert!(matches!(
            fit_stats(&d, &ModelIndex::prefix(1)),
            Err(Error::DegenerateResponse)
        ));
    }

    #[test]
    fn residual_quadratic_on_span_and_complement() {
        let d = toy();
        let mu: Vec<f64> = (0..6).map(|i| 1.5 - 0.5 * d.column(0)[i]).collect();
        assert!(residual_quadratic(&mu, &ModelIndex::prefix(1), &d).unwrap() < 1e-8);
        assert!(residual_quadratic(&[1.0; 5], &ModelIndex::prefix(1), &d).is_err());
        let s = fit_stats(&d, &ModelIndex::full(2)).unwrap();
        let q = residual_quadratic(d.y(), &ModelIndex::full(2), &d).unwrap();
        assert!((s.rss - q).abs() <= 1e-12 * s.rss.max(1.0));
    }

    #[test]
    fn out_of_range_model_rejected() {
        assert!(fit_stats(&toy(), &ModelIndex::new(vec![3]).unwrap()).is_err());
    }
}
