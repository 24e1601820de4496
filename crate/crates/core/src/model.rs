//! Table/partition/contrast data model and the `(theta^P, nu)`
//! reparametrization.
//!
//! Cells of a table are flattened row-major into indices `0..r`. A
//! [`Partition`] groups those indices into the blocks of a margin (e.g. the
//! rows), a [`ContrastMatrix`] holds the exponents `c` defining a vector of
//! generalized odds ratios `psi_j = prod_i theta_i^{c_{i,j}}`.

use crate::{Error, Result};

/// Disjoint blocks of cell indices covering `0..r`, in a fixed order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
    r: usize,
}

impl Partition {
    /// Builds a partition from zero-based index blocks. Blocks must be
    /// nonempty, pairwise disjoint, and cover `0..r` exactly.
    pub fn new(blocks: Vec<Vec<usize>>, r: usize) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::PartitionMismatch("no blocks".into()));
        }
        let mut seen = vec![false; r];
        for (bi, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::PartitionMismatch(format!("block {bi} is empty")));
            }
            for &i in block {
                if i >= r {
                    return Err(Error::PartitionMismatch(format!(
                        "index {i} out of range for r={r}"
                    )));
                }
                if seen[i] {
                    return Err(Error::PartitionMismatch(format!("index {i} repeated")));
                }
                seen[i] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::PartitionMismatch("blocks do not cover all cells".into()));
        }
        Ok(Self { blocks, r })
    }

    /// Same as [`Partition::new`] but with one-based indices, matching the
    /// usual written convention for cells `1..r`.
    pub fn from_one_based(blocks: Vec<Vec<usize>>, r: usize) -> Result<Self> {
        let shifted = blocks
            .into_iter()
            .map(|b| {
                b.into_iter()
                    .map(|i| {
                        i.checked_sub(1)
                            .ok_or_else(|| Error::PartitionMismatch("one-based index 0".into()))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(shifted, r)
    }

    /// Row partition of a row-major `nrows x ncols` table.
    pub fn rows(nrows: usize, ncols: usize) -> Self {
        let blocks = (0..nrows)
            .map(|i| (i * ncols..(i + 1) * ncols).collect())
            .collect();
        Self {
            blocks,
            r: nrows * ncols,
        }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn r(&self) -> usize {
        self.r
    }

    /// Blockwise sums of a real vector of length `r`.
    pub fn block_sums(&self, v: &[f64]) -> Vec<f64> {
        self.blocks
            .iter()
            .map(|b| b.iter().map(|&i| v[i]).sum())
            .collect()
    }
}

/// Flattened table of nonnegative counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountVector {
    counts: Vec<u64>,
}

impl CountVector {
    pub fn new(counts: Vec<u64>) -> Self {
        Self { counts }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Total count `n`.
    pub fn n(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64).collect()
    }
}

/// Partition sums `x^P = (sum_{i in P} x_i)_{P}`.
pub fn partition_sums(x: &CountVector, p: &Partition) -> Result<Vec<u64>> {
    if p.r() != x.len() {
        return Err(Error::PartitionMismatch(format!(
            "partition over {} cells, table has {}",
            p.r(),
            x.len()
        )));
    }
    Ok(p.blocks()
        .iter()
        .map(|b| b.iter().map(|&i| x.counts[i]).sum())
        .collect())
}

/// Exponents of a vector of generalized odds ratios, stored by column:
/// `cols[j][i]` is `c_{i,j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContrastMatrix {
    cols: Vec<Vec<f64>>,
    r: usize,
}

impl ContrastMatrix {
    pub fn new(cols: Vec<Vec<f64>>) -> Result<Self> {
        if cols.is_empty() {
            return Err(Error::Domain("contrast needs at least one column".into()));
        }
        let r = cols[0].len();
        if r == 0 {
            return Err(Error::Domain("contrast column of length zero".into()));
        }
        for col in &cols {
            if col.len() != r {
                return Err(Error::Domain("ragged contrast columns".into()));
            }
            if col.iter().any(|v| !v.is_finite()) {
                return Err(Error::Domain("non-finite contrast entry".into()));
            }
        }
        Ok(Self { cols, r })
    }

    /// Single-column contrast.
    pub fn column_vector(col: Vec<f64>) -> Result<Self> {
        Self::new(vec![col])
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn d(&self) -> usize {
        self.cols.len()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.cols[j]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.cols
    }

    /// Blockwise coefficient sums `c^P_j` of column `j`.
    pub fn block_column_sums(&self, j: usize, p: &Partition) -> Vec<f64> {
        p.block_sums(&self.cols[j])
    }

    /// Odds-ratio contrast `(1, -1, -1, 1)` for a row-major 2x2 table.
    pub fn or_2x2() -> Self {
        Self::column_vector(vec![1.0, -1.0, -1.0, 1.0]).unwrap()
    }

    /// Local odds ratio at cell `(i, j)` of a row-major `nrows x ncols`
    /// table: `theta_{i,j} theta_{i+1,j+1} / (theta_{i+1,j} theta_{i,j+1})`.
    pub fn local_or(nrows: usize, ncols: usize, i: usize, j: usize) -> Result<Self> {
        if nrows < 2 || ncols < 2 || i + 1 >= nrows || j + 1 >= ncols {
            return Err(Error::Domain(format!(
                "local odds ratio at ({i},{j}) needs a 2x2 window inside {nrows}x{ncols}"
            )));
        }
        let mut col = vec![0.0; nrows * ncols];
        col[i * ncols + j] = 1.0;
        col[(i + 1) * ncols + j + 1] = 1.0;
        col[(i + 1) * ncols + j] = -1.0;
        col[i * ncols + j + 1] = -1.0;
        Self::column_vector(col)
    }

    /// `(k-1)`-th order odds ratio on a `2^k` table: cell `(j_1,..,j_k)` gets
    /// sign `(-1)^{|j|}` with `|j| = sum j_i mod 2`.
    pub fn higher_order(k: u32) -> Result<Self> {
        if k == 0 || k > 20 {
            return Err(Error::Domain(format!("higher-order contrast needs 1 <= k <= 20, got {k}")));
        }
        let r = 1usize << k;
        let col = (0..r)
            .map(|idx| if idx.count_ones() % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        Self::column_vector(col)
    }
}

/// Strictly positive Dirichlet concentration parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletPrior {
    alpha: Vec<f64>,
}

impl DirichletPrior {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::Domain("empty concentration vector".into()));
        }
        if alpha.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
            return Err(Error::Domain("concentration parameters must be > 0".into()));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }
}

/// Marginal block probabilities `theta^P` plus per-block conditional
/// probabilities `nu^P`.
#[derive(Debug, Clone, PartialEq)]
pub struct Reparam {
    pub theta_marg: Vec<f64>,
    pub nu: Vec<Vec<f64>>,
}

/// The marginal-only and conditional-only components of `log psi`:
/// `log psi_j = tau_j + rho_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecomposedLogOdds {
    pub tau: Vec<f64>,
    pub rho: Vec<f64>,
}

fn check_simplex(theta: &[f64]) -> Result<()> {
    if theta.iter().any(|&t| !(t > 0.0) || !t.is_finite()) {
        return Err(Error::Degenerate("theta must be strictly positive".into()));
    }
    let s: f64 = theta.iter().sum();
    if (s - 1.0).abs() > 1e-8 {
        return Err(Error::Degenerate(format!("theta sums to {s}, not 1")));
    }
    Ok(())
}

/// Splits `theta` into `(theta^P, nu)` with `theta^P_P = sum_{i in P} theta_i`
/// and `nu^P_i = theta_i / theta^P_P`.
pub fn reparametrize(theta: &[f64], p: &Partition) -> Result<Reparam> {
    if p.r() != theta.len() {
        return Err(Error::PartitionMismatch(format!(
            "partition over {} cells, theta has {}",
            p.r(),
            theta.len()
        )));
    }
    check_simplex(theta)?;
    let theta_marg = p.block_sums(theta);
    if theta_marg.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::Degenerate("zero block probability".into()));
    }
    let nu = p
        .blocks()
        .iter()
        .zip(&theta_marg)
        .map(|(b, &tp)| b.iter().map(|&i| theta[i] / tp).collect())
        .collect();
    Ok(Reparam { theta_marg, nu })
}

/// Inverse of [`reparametrize`]: `theta_i = theta^P_P * nu^P_i` for `i in P`.
pub fn reconstruct(rep: &Reparam, p: &Partition) -> Result<Vec<f64>> {
    if rep.theta_marg.len() != p.num_blocks() {
        return Err(Error::PartitionMismatch("block count mismatch".into()));
    }
    let mut theta = vec![0.0; p.r()];
    for ((block, &tp), nu) in p.blocks().iter().zip(&rep.theta_marg).zip(&rep.nu) {
        if block.len() != nu.len() {
            return Err(Error::PartitionMismatch("nu length mismatch".into()));
        }
        for (&i, &v) in block.iter().zip(nu) {
            theta[i] = tp * v;
        }
    }
    Ok(theta)
}

/// `log psi_j = sum_i c_{i,j} log theta_i`.
pub fn log_godds(theta: &[f64], c: &ContrastMatrix) -> Result<Vec<f64>> {
    if c.r() != theta.len() {
        return Err(Error::Domain(format!(
            "contrast over {} cells, theta has {}",
            c.r(),
            theta.len()
        )));
    }
    if theta.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::Domain("theta must be strictly positive".into()));
    }
    let log_theta: Vec<f64> = theta.iter().map(|t| t.ln()).collect();
    Ok(c.columns()
        .iter()
        .map(|col| col.iter().zip(&log_theta).map(|(ci, lt)| ci * lt).sum())
        .collect())
}

/// The vector of generalized odds ratios `psi_j = prod_i theta_i^{c_{i,j}}`,
/// evaluated in the log domain.
pub fn godds(theta: &[f64], c: &ContrastMatrix) -> Result<Vec<f64>> {
    Ok(log_godds(theta, c)?.into_iter().map(f64::exp).collect())
}

/// Splits `log psi` into `tau_j = sum_P c^P_j log theta^P_P` and
/// `rho_j = sum_P sum_{i in P} c_{i,j} log nu^P_i`.
pub fn decompose_log_odds(
    rep: &Reparam,
    c: &ContrastMatrix,
    p: &Partition,
) -> Result<DecomposedLogOdds> {
    if c.r() != p.r() {
        return Err(Error::PartitionMismatch("contrast/partition size mismatch".into()));
    }
    let log_marg: Vec<f64> = rep.theta_marg.iter().map(|t| t.ln()).collect();
    let mut tau = Vec::with_capacity(c.d());
    let mut rho = Vec::with_capacity(c.d());
    for j in 0..c.d() {
        let col = c.column(j);
        let block_sums = c.block_column_sums(j, p);
        tau.push(block_sums.iter().zip(&log_marg).map(|(s, lm)| s * lm).sum());
        let mut rj = 0.0;
        for (block, nu) in p.blocks().iter().zip(&rep.nu) {
            for (&i, &v) in block.iter().zip(nu) {
                rj += col[i] * v.ln();
            }
        }
        rho.push(rj);
    }
    Ok(DecomposedLogOdds { tau, rho })
}

/// Tolerance for blockwise coefficient sums; integer-valued contrasts sum
/// exactly in f64, so the common cases are decided exactly.
const MARGIN_FREE_TOL: f64 = 1e-12;

/// True iff every blockwise sum of every contrast column vanishes, i.e. the
/// contrast does not depend on the marginal probabilities `theta^P`.
pub fn margin_free(c: &ContrastMatrix, p: &Partition) -> bool {
    (0..c.d()).all(|j| {
        c.block_column_sums(j, p)
            .iter()
            .all(|s| s.abs() <= MARGIN_FREE_TOL)
    })
}

/// Checks the sample-size condition on column `j`: with
/// `K+ = {P : c^P_j > 0}` and `K- = {P : c^P_j < 0}`, either `|K+| > 0` and
/// `n >= |K+|`, or `|K-| > 0` and `n >= |K-|`.
pub fn sample_size_condition(c: &ContrastMatrix, p: &Partition, j: usize, n: u64) -> bool {
    let sums = c.block_column_sums(j, p);
    let k_plus = sums.iter().filter(|&&s| s > MARGIN_FREE_TOL).count() as u64;
    let k_minus = sums.iter().filter(|&&s| s < -MARGIN_FREE_TOL).count() as u64;
    (k_plus > 0 && n >= k_plus) || (k_minus > 0 && n >= k_minus)
}
