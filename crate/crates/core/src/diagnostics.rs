//! Decision machinery: two-sample Kolmogorov-Smirnov tests (plain and
//! importance-weighted), CF-grid comparison, the Monte Carlo CF oracle, a
//! weighted Gaussian KDE, and the posterior concentration study.

use crate::cf::{CfGrid, Scheme};
use crate::model::{ContrastMatrix, DirichletPrior, Partition};
use crate::samplers::{self, counts_for, rng_for, WeightedSample};
use crate::specfun::Complex64;
use crate::{Error, Result};
use serde::Serialize;

/// Asymptotic Kolmogorov critical value at level 0.01.
const KS_C01: f64 = 1.628;

/// Outcome of a two-sample KS comparison. `n1`/`n2` are effective sample
/// sizes (raw sizes when weights are unit).
#[derive(Debug, Clone, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub n1: f64,
    pub n2: f64,
    pub significant_at_01: bool,
}

fn ks_threshold(n1: f64, n2: f64) -> f64 {
    KS_C01 * ((n1 + n2) / (n1 * n2)).sqrt()
}

/// Two-sample KS test with significance from the asymptotic Kolmogorov
/// threshold at level 0.01.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("ks_two_sample needs nonempty samples".into()));
    }
    let wa = WeightedSample::unit(a.to_vec());
    let wb = WeightedSample::unit(b.to_vec());
    let statistic = weighted_ecdf_distance(&wa, &wb);
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    Ok(KsResult {
        statistic,
        n1,
        n2,
        significant_at_01: statistic > ks_threshold(n1, n2),
    })
}

/// Weighted two-sample KS test; the effective sample size replaces the raw
/// size in the significance threshold.
pub fn ks_weighted(a: &WeightedSample, b: &WeightedSample) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("ks_weighted needs nonempty samples".into()));
    }
    if !(a.total_weight() > 0.0) || !(b.total_weight() > 0.0) {
        return Err(Error::Degenerate("nonpositive total weight".into()));
    }
    let (e1, e2) = (a.ess(), b.ess());
    if e1 < 10.0 || e2 < 10.0 {
        return Err(Error::Unreliable(format!(
            "effective sample sizes {e1:.1}, {e2:.1} below 10"
        )));
    }
    let statistic = weighted_ecdf_distance(a, b);
    Ok(KsResult {
        statistic,
        n1: e1,
        n2: e2,
        significant_at_01: statistic > ks_threshold(e1, e2),
    })
}

/// Sup-distance between two weighted ECDFs, evaluated by a merge sweep over
/// the pooled jump points.
fn weighted_ecdf_distance(a: &WeightedSample, b: &WeightedSample) -> f64 {
    let sorted = |s: &WeightedSample| -> Vec<(f64, f64)> {
        let mut pairs: Vec<(f64, f64)> = s
            .values
            .iter()
            .cloned()
            .zip(s.weights.iter().cloned())
            .collect();
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
        pairs
    };
    let pa = sorted(a);
    let pb = sorted(b);
    let (wa, wb) = (a.total_weight(), b.total_weight());
    let (mut ia, mut ib) = (0usize, 0usize);
    let (mut fa, mut fb) = (0.0f64, 0.0f64);
    let mut sup: f64 = 0.0;
    while ia < pa.len() || ib < pb.len() {
        let next = match (pa.get(ia), pb.get(ib)) {
            (Some(&(va, _)), Some(&(vb, _))) => va.min(vb),
            (Some(&(va, _)), None) => va,
            (None, Some(&(vb, _))) => vb,
            (None, None) => break,
        };
        while ia < pa.len() && pa[ia].0 <= next {
            fa += pa[ia].1;
            ia += 1;
        }
        while ib < pb.len() && pb[ib].0 <= next {
            fb += pb[ib].1;
            ib += 1;
        }
        sup = sup.max((fa / wa - fb / wb).abs());
    }
    sup
}

/// Sup over a shared grid of `|phi_u(t) - phi_c(t)|` and the `t` attaining
/// it.
pub fn cf_grid_compare(u: &CfGrid, c: &CfGrid) -> Result<(f64, f64)> {
    if u.t != c.t {
        return Err(Error::GridMismatch("CF grids differ".into()));
    }
    let mut max_diff = 0.0;
    let mut argmax_t = u.t[0];
    for ((t, vu), vc) in u.t.iter().zip(&u.values).zip(&c.values) {
        let d = (vu - vc).norm();
        if d > max_diff {
            max_diff = d;
            argmax_t = *t;
        }
    }
    Ok((max_diff, argmax_t))
}

/// Weighted empirical characteristic function `E[e^{itV}]` at `t`.
pub fn mc_cf_estimate(s: &WeightedSample, t: f64) -> Complex64 {
    let sw = s.total_weight();
    let mut acc = Complex64::new(0.0, 0.0);
    for (v, w) in s.values.iter().zip(&s.weights) {
        acc += Complex64::new((t * v).cos(), (t * v).sin()) * *w;
    }
    acc / sw
}

/// A kernel density estimate on a grid.
#[derive(Debug, Clone)]
pub struct DensityCurve {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub bandwidth: f64,
}

impl DensityCurve {
    /// Trapezoid integral over the grid.
    pub fn integral(&self) -> f64 {
        self.grid
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(g, d)| 0.5 * (g[1] - g[0]) * (d[0] + d[1]))
            .sum()
    }

    /// CSV serialization: `grid,density`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("grid,density\n");
        for (g, d) in self.grid.iter().zip(&self.density) {
            out.push_str(&format!("{g},{d}\n"));
        }
        out
    }
}

/// Silverman's rule on the effective sample size.
fn silverman_bandwidth(s: &WeightedSample) -> Result<f64> {
    let sd = s.weighted_variance().sqrt();
    let iqr = s.weighted_quantile(0.75) - s.weighted_quantile(0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    if !(spread > 0.0) {
        return Err(Error::Degenerate("zero-variance sample, KDE undefined".into()));
    }
    Ok(0.9 * spread * s.ess().powf(-0.2))
}

/// Gaussian-kernel weighted density estimate. `bandwidth = None` selects
/// Silverman's rule on the ESS.
pub fn kde(s: &WeightedSample, grid: &[f64], bandwidth: Option<f64>) -> Result<DensityCurve> {
    if s.is_empty() {
        return Err(Error::Empty("kde needs a nonempty sample".into()));
    }
    let h = match bandwidth {
        Some(h) if h > 0.0 => h,
        Some(h) => return Err(Error::Domain(format!("bandwidth must be > 0, got {h}"))),
        None => silverman_bandwidth(s)?,
    };
    let sw = s.total_weight();
    let norm = 1.0 / (h * (2.0 * std::f64::consts::PI).sqrt());
    let density = grid
        .iter()
        .map(|&g| {
            s.values
                .iter()
                .zip(&s.weights)
                .map(|(v, w)| {
                    let z = (g - v) / h;
                    w * norm * (-0.5 * z * z).exp()
                })
                .sum::<f64>()
                / sw
        })
        .collect();
    Ok(DensityCurve {
        grid: grid.to_vec(),
        density,
        bandwidth: h,
    })
}

/// Default KDE grid: sample range extended by 4 bandwidths so the curve
/// integrates to ~1.
pub fn kde_grid(s: &WeightedSample, points: usize) -> Result<Vec<f64>> {
    let h = silverman_bandwidth(s)?;
    let lo = s.values.iter().cloned().fold(f64::INFINITY, f64::min) - 4.0 * h;
    let hi = s.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 4.0 * h;
    crate::cf::linspace(lo, hi, points)
}

/// One row of the concentration study.
#[derive(Debug, Clone, Serialize)]
pub struct ConcentrationRow {
    pub n: u64,
    pub variance: f64,
}

/// Posterior variance of `log psi` (first contrast column) at counts
/// `x(n) ~ n * theta0`, for each `n`.
pub fn concentration_study(
    theta0: &[f64],
    c: &ContrastMatrix,
    p: &Partition,
    n_list: &[u64],
    scheme: Scheme,
    n_draws: usize,
    seed: u64,
) -> Result<Vec<ConcentrationRow>> {
    let alpha = DirichletPrior::new(vec![1.0; theta0.len()])?;
    n_list
        .iter()
        .map(|&n| {
            let x = counts_for(theta0, n)?;
            let sample = match scheme {
                Scheme::Unconstrained => {
                    let mut rng = rng_for(seed ^ n, samplers::streams::UNCONSTRAINED);
                    samplers::posterior_unconstrained(&alpha, &x, c, n_draws, &mut rng)?
                }
                Scheme::Constrained => {
                    let mut rng = rng_for(seed ^ n, samplers::streams::CONSTRAINED);
                    samplers::posterior_constrained(&alpha, &x, p, c, n_draws, &mut rng)?
                }
            };
            Ok(ConcentrationRow {
                n,
                variance: sample[0].weighted_variance(),
            })
        })
        .collect()
}

/// Variance of the prior `tau` component under `theta^P ~ Dirichlet(alpha^P)`,
/// by direct simulation; the constrained posterior variance of `log psi`
/// cannot fall below this floor.
pub fn prior_tau_variance(
    alpha: &DirichletPrior,
    c: &ContrastMatrix,
    p: &Partition,
    j: usize,
    n_draws: usize,
    seed: u64,
) -> Result<f64> {
    let alpha_marg = p.block_sums(alpha.alpha());
    let block_c = c.block_column_sums(j, p);
    let mut rng = rng_for(seed, samplers::streams::DIAGNOSTICS);
    let values: Vec<f64> = (0..n_draws)
        .map(|_| {
            let tm = samplers::sample_dirichlet(&alpha_marg, &mut rng);
            block_c.iter().zip(&tm).map(|(cm, t)| cm * t.ln()).sum()
        })
        .collect();
    Ok(WeightedSample::unit(values).weighted_variance())
}
