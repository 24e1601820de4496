//! Posterior samplers for the four sampling schemes.
//!
//! All randomness flows through [`ChaCha8Rng`]; [`rng_for`] derives one
//! stream per scheme from a single 64-bit seed, so runs are reproducible
//! across platforms. A single sampler call is sequential; parallel runs use
//! independent seeds and concatenate.

use crate::cf::Scheme;
use crate::fnch::{fnch_log_pmf, FnchParams};
use crate::model::{
    log_godds, ContrastMatrix, CountVector, DirichletPrior, Partition,
};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream ids used by [`rng_for`], one per sampling scheme plus one for
/// diagnostics machinery.
pub mod streams {
    pub const UNCONSTRAINED: u64 = 0;
    pub const CONSTRAINED: u64 = 1;
    pub const DEPENDENT: u64 = 2;
    pub const DOUBLE: u64 = 3;
    pub const DIAGNOSTICS: u64 = 4;
}

/// ChaCha8 generator seeded from `seed`, on the given stream.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws of `log psi` with importance weights; direct samplers use unit
/// weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSample {
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
}

impl WeightedSample {
    pub fn unit(values: Vec<f64>) -> Self {
        let weights = vec![1.0; values.len()];
        Self { values, weights }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Effective sample size `(sum w)^2 / sum w^2`.
    pub fn ess(&self) -> f64 {
        let sw: f64 = self.weights.iter().sum();
        let sw2: f64 = self.weights.iter().map(|w| w * w).sum();
        if sw2 > 0.0 {
            sw * sw / sw2
        } else {
            0.0
        }
    }

    pub fn weighted_mean(&self) -> f64 {
        let sw = self.total_weight();
        self.values
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| v * w)
            .sum::<f64>()
            / sw
    }

    pub fn weighted_variance(&self) -> f64 {
        let mean = self.weighted_mean();
        let sw = self.total_weight();
        self.values
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| w * (v - mean) * (v - mean))
            .sum::<f64>()
            / sw
    }

    /// Weighted quantile by the inverse of the weighted ECDF.
    pub fn weighted_quantile(&self, q: f64) -> f64 {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| self.values[a].total_cmp(&self.values[b]));
        let target = q * self.total_weight();
        let mut cum = 0.0;
        for &i in &order {
            cum += self.weights[i];
            if cum >= target {
                return self.values[i];
            }
        }
        self.values[order[order.len() - 1]]
    }

    /// CSV serialization: `value,weight` with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("value,weight\n");
        for (v, w) in self.values.iter().zip(&self.weights) {
            out.push_str(&format!("{v},{w}\n"));
        }
        out
    }
}

/// Gamma(shape, 1) variate by the Marsaglia-Tsang squeeze, with the
/// `U^{1/shape}` boost for shape < 1.
pub fn sample_gamma(shape: f64, rng: &mut ChaCha8Rng) -> f64 {
    debug_assert!(shape > 0.0);
    if shape < 1.0 {
        let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        return sample_gamma(shape + 1.0, rng) * u.powf(1.0 / shape);
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let mut x: f64;
        let mut v: f64;
        loop {
            x = sample_standard_normal(rng);
            v = 1.0 + c * x;
            if v > 0.0 {
                break;
            }
        }
        v = v * v * v;
        let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        if u < 1.0 - 0.0331 * x * x * x * x {
            return d * v;
        }
        if u.ln() < 0.5 * x * x + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

fn sample_standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Marsaglia polar method.
    loop {
        let u: f64 = rng.gen_range(-1.0f64..1.0);
        let v: f64 = rng.gen_range(-1.0f64..1.0);
        let s = u * u + v * v;
        if s > 0.0 && s < 1.0 {
            return u * (-2.0 * s.ln() / s).sqrt();
        }
    }
}

/// Dirichlet draw via normalized independent Gamma variates.
pub fn sample_dirichlet(alpha: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut g: Vec<f64> = alpha.iter().map(|&a| sample_gamma(a, rng)).collect();
    let s: f64 = g.iter().sum();
    for v in &mut g {
        *v /= s;
    }
    g
}

fn sample_beta(a: f64, b: f64, rng: &mut ChaCha8Rng) -> f64 {
    let x = sample_gamma(a, rng);
    let y = sample_gamma(b, rng);
    x / (x + y)
}

fn columns_from_draws(draws: Vec<Vec<f64>>, d: usize) -> Vec<WeightedSample> {
    (0..d)
        .map(|j| WeightedSample::unit(draws.iter().map(|row| row[j]).collect()))
        .collect()
}

/// Posterior draws of `log psi` under the unconstrained (multinomial)
/// scheme: `theta | X = x ~ Dirichlet(alpha + x)`. One [`WeightedSample`]
/// per contrast column, unit weights.
pub fn posterior_unconstrained(
    alpha: &DirichletPrior,
    x: &CountVector,
    c: &ContrastMatrix,
    n_draws: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<WeightedSample>> {
    if alpha.len() != x.len() || c.r() != x.len() {
        return Err(Error::Domain("alpha/table/contrast length mismatch".into()));
    }
    let post: Vec<f64> = alpha
        .alpha()
        .iter()
        .zip(x.counts())
        .map(|(&a, &xi)| a + xi as f64)
        .collect();
    let draws = (0..n_draws)
        .map(|_| {
            let theta = sample_dirichlet(&post, rng);
            log_godds(&theta, c)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(columns_from_draws(draws, c.d()))
}

/// Posterior draws of `log psi` under the margin-constrained scheme:
/// `theta^P ~ Dirichlet(alpha^P)` stays at its prior, while per block
/// `nu^P | X = x ~ Dirichlet(alpha_P + x_P)`.
pub fn posterior_constrained(
    alpha: &DirichletPrior,
    x: &CountVector,
    p: &Partition,
    c: &ContrastMatrix,
    n_draws: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<WeightedSample>> {
    if alpha.len() != x.len() || c.r() != x.len() || p.r() != x.len() {
        return Err(Error::Domain("alpha/table/contrast/partition mismatch".into()));
    }
    let alpha_marg = p.block_sums(alpha.alpha());
    let block_post: Vec<Vec<f64>> = p
        .blocks()
        .iter()
        .map(|b| {
            b.iter()
                .map(|&i| alpha.alpha()[i] + x.counts()[i] as f64)
                .collect()
        })
        .collect();
    let d = c.d();
    let block_c: Vec<Vec<f64>> = (0..d).map(|j| c.block_column_sums(j, p)).collect();
    let draws: Vec<Vec<f64>> = (0..n_draws)
        .map(|_| {
            let theta_marg = sample_dirichlet(&alpha_marg, rng);
            let nus: Vec<Vec<f64>> = block_post
                .iter()
                .map(|bp| sample_dirichlet(bp, rng))
                .collect();
            (0..d)
                .map(|j| {
                    let col = c.column(j);
                    let mut tau = 0.0;
                    for (cm, tm) in block_c[j].iter().zip(&theta_marg) {
                        tau += cm * tm.ln();
                    }
                    let mut rho = 0.0;
                    for (block, nu) in p.blocks().iter().zip(&nus) {
                        for (&i, &v) in block.iter().zip(nu) {
                            rho += col[i] * v.ln();
                        }
                    }
                    tau + rho
                })
                .collect()
        })
        .collect();
    Ok(columns_from_draws(draws, d))
}

/// Posterior draws of the `rho` component only. Its posterior is the same
/// under both schemes (`nu^P | X = x ~ Dirichlet(alpha_P + x_P)` either
/// way); the scheme picks the RNG stream so the two can be compared as
/// independent samples.
pub fn posterior_rho(
    alpha: &DirichletPrior,
    x: &CountVector,
    p: &Partition,
    c: &ContrastMatrix,
    n_draws: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<WeightedSample>> {
    if alpha.len() != x.len() || c.r() != x.len() || p.r() != x.len() {
        return Err(Error::Domain("alpha/table/contrast/partition mismatch".into()));
    }
    let block_post: Vec<Vec<f64>> = p
        .blocks()
        .iter()
        .map(|b| {
            b.iter()
                .map(|&i| alpha.alpha()[i] + x.counts()[i] as f64)
                .collect()
        })
        .collect();
    let d = c.d();
    let draws: Vec<Vec<f64>> = (0..n_draws)
        .map(|_| {
            let nus: Vec<Vec<f64>> = block_post
                .iter()
                .map(|bp| sample_dirichlet(bp, rng))
                .collect();
            (0..d)
                .map(|j| {
                    let col = c.column(j);
                    let mut rho = 0.0;
                    for (block, nu) in p.blocks().iter().zip(&nus) {
                        for (&i, &v) in block.iter().zip(nu) {
                            rho += col[i] * v.ln();
                        }
                    }
                    rho
                })
                .collect()
        })
        .collect();
    Ok(columns_from_draws(draws, d))
}

/// Posterior draws of the log odds ratio for the dependent-prior example
/// (`nu^{1,2}` coincides with the first margin almost surely).
///
/// `log psi = logit(nu_1) - logit(nu_3)`, with the Beta posteriors
/// `nu_1 | X ~ Beta(a1 + 2 x1 + x2, a2 + x2 + x3 + x4)` (unconstrained) or
/// `Beta(a1 + x1, a2 + x2)` (constrained), and
/// `nu_3 | X ~ Beta(a3 + x3, a4 + x4)` in both.
pub fn posterior_dependent_example(
    alpha: &[f64; 4],
    x: &CountVector,
    scheme: Scheme,
    n_draws: usize,
    rng: &mut ChaCha8Rng,
) -> Result<WeightedSample> {
    if x.len() != 4 {
        return Err(Error::Domain("dependent example needs r = 4".into()));
    }
    if alpha.iter().any(|&a| !(a > 0.0)) {
        return Err(Error::Domain("alpha must be > 0".into()));
    }
    let xf = x.as_f64();
    let (a1, b1) = match scheme {
        Scheme::Unconstrained => (
            alpha[0] + 2.0 * xf[0] + xf[1],
            alpha[1] + xf[1] + xf[2] + xf[3],
        ),
        Scheme::Constrained => (alpha[0] + xf[0], alpha[1] + xf[1]),
    };
    let (a3, b3) = (alpha[2] + xf[2], alpha[3] + xf[3]);
    let values = (0..n_draws)
        .map(|_| {
            let nu1 = sample_beta(a1, b1, rng);
            let nu3 = sample_beta(a3, b3, rng);
            (nu1 / (1.0 - nu1)).ln() - (nu3 / (1.0 - nu3)).ln()
        })
        .collect();
    Ok(WeightedSample::unit(values))
}

/// Importance-sampled posterior of the log odds ratio for a 2x2 table with
/// both margins fixed: proposals `theta ~ Dirichlet(alpha)` from the prior,
/// weighted by the Fisher noncentral hypergeometric likelihood of the
/// observed (1,1) cell given the margins and `psi(theta)`.
pub fn posterior_double_constrained(
    alpha: &DirichletPrior,
    x: &CountVector,
    n_draws: usize,
    rng: &mut ChaCha8Rng,
) -> Result<WeightedSample> {
    if x.len() != 4 || alpha.len() != 4 {
        return Err(Error::Domain("double constraint implemented for 2x2 tables".into()));
    }
    let counts = x.counts();
    let (n1, n2) = (counts[0] + counts[1], counts[2] + counts[3]);
    let m1 = counts[0] + counts[2];
    let c = ContrastMatrix::or_2x2();
    let mut values = Vec::with_capacity(n_draws);
    let mut weights = Vec::with_capacity(n_draws);
    for _ in 0..n_draws {
        let theta = sample_dirichlet(alpha.alpha(), rng);
        let log_psi = log_godds(&theta, &c)?[0];
        let params = FnchParams::new(n1, n2, m1, log_psi.exp())?;
        values.push(log_psi);
        weights.push(fnch_log_pmf(counts[0], &params)?.exp());
    }
    Ok(WeightedSample { values, weights })
}

/// `theta` draws under either scheme, for diagnostics that need the full
/// parameter rather than `log psi`.
pub fn posterior_theta(
    alpha: &DirichletPrior,
    x: &CountVector,
    p: &Partition,
    scheme: Scheme,
    n_draws: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<f64>>> {
    match scheme {
        Scheme::Unconstrained => {
            let post: Vec<f64> = alpha
                .alpha()
                .iter()
                .zip(x.counts())
                .map(|(&a, &xi)| a + xi as f64)
                .collect();
            Ok((0..n_draws).map(|_| sample_dirichlet(&post, rng)).collect())
        }
        Scheme::Constrained => {
            let alpha_marg = p.block_sums(alpha.alpha());
            let block_post: Vec<Vec<f64>> = p
                .blocks()
                .iter()
                .map(|b| {
                    b.iter()
                        .map(|&i| alpha.alpha()[i] + x.counts()[i] as f64)
                        .collect()
                })
                .collect();
            Ok((0..n_draws)
                .map(|_| {
                    let tm = sample_dirichlet(&alpha_marg, rng);
                    let mut theta = vec![0.0; p.r()];
                    for ((block, &t), bp) in p.blocks().iter().zip(&tm).zip(&block_post) {
                        let nu = sample_dirichlet(bp, rng);
                        for (&i, v) in block.iter().zip(nu) {
                            theta[i] = t * v;
                        }
                    }
                    theta
                })
                .collect())
        }
    }
}

/// Deterministic counts `x(n) ~ n * theta0`, rounded and adjusted to sum to
/// `n` (the largest cell absorbs the rounding slack).
pub fn counts_for(theta0: &[f64], n: u64) -> Result<CountVector> {
    if theta0.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::Degenerate("theta0 must be strictly positive".into()));
    }
    let mut counts: Vec<i64> = theta0
        .iter()
        .map(|&t| (t * n as f64).round() as i64)
        .collect();
    let slack = n as i64 - counts.iter().sum::<i64>();
    let argmax = theta0
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    counts[argmax] += slack;
    if counts.iter().any(|&c| c < 0) {
        return Err(Error::Degenerate("rounding produced a negative count".into()));
    }
    Ok(CountVector::new(counts.into_iter().map(|c| c as u64).collect()))
}
