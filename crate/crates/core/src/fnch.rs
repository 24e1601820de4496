//! Fisher's noncentral hypergeometric pmf for 2x2 tables with both margins
//! fixed, evaluated in the log domain.

use crate::specfun::lgamma_real;
use crate::{Error, Result};

/// Parameters of the distribution: row totals `n1`, `n2`, first column total
/// `m1`, and odds ratio `psi > 0`. The random quantity is the (1,1) cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FnchParams {
    pub n1: u64,
    pub n2: u64,
    pub m1: u64,
    pub psi: f64,
}

impl FnchParams {
    pub fn new(n1: u64, n2: u64, m1: u64, psi: f64) -> Result<Self> {
        if !(psi > 0.0) || !psi.is_finite() {
            return Err(Error::Domain(format!("psi must be positive, got {psi}")));
        }
        if m1 > n1 + n2 {
            return Err(Error::Domain(format!(
                "infeasible margins: m1={m1} > n1+n2={}",
                n1 + n2
            )));
        }
        Ok(Self { n1, n2, m1, psi })
    }
}

/// Support of the (1,1) cell: `max(0, m1 - n2) ..= min(n1, m1)`.
pub fn fnch_support(params: &FnchParams) -> (u64, u64) {
    let lo = params.m1.saturating_sub(params.n2);
    let hi = params.n1.min(params.m1);
    (lo, hi)
}

fn log_choose(n: u64, k: u64) -> Result<f64> {
    debug_assert!(k <= n);
    Ok(lgamma_real((n + 1) as f64)?
        - lgamma_real((k + 1) as f64)?
        - lgamma_real((n - k + 1) as f64)?)
}

fn log_numerator(a: u64, params: &FnchParams) -> Result<f64> {
    Ok(log_choose(params.n1, a)?
        + log_choose(params.n2, params.m1 - a)?
        + (a as f64) * params.psi.ln())
}

/// `log pmf(a)`: `C(n1,a) C(n2,m1-a) psi^a`, normalized by log-sum-exp over
/// the full support.
pub fn fnch_log_pmf(a: u64, params: &FnchParams) -> Result<f64> {
    let (lo, hi) = fnch_support(params);
    if a < lo || a > hi {
        return Err(Error::Domain(format!(
            "a={a} outside support [{lo}, {hi}]"
        )));
    }
    let terms = (lo..=hi)
        .map(|u| log_numerator(u, params))
        .collect::<Result<Vec<_>>>()?;
    Ok(log_numerator(a, params)? - log_sum_exp(&terms))
}

/// Numerically stable `log(sum(exp(v)))`.
pub fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}
