//! `godds`: batch experiments on posterior distributions of generalized odds
//! ratios under unconstrained vs margin-constrained sampling.
//!
//! Exit codes: 0 success / invariant, 2 non-invariant finding, 1 usage or
//! numerical error.

mod config;

use anyhow::{bail, Context, Result};
use clap::Parser;
use config::{Experiment, ExperimentConfig, PriorKind, SchemeSpec};
use godds_core::cf::{
    cf_dependent_example, cf_logpsi, grid_pair_csv, linspace, CfGrid, Scheme,
};
use godds_core::diagnostics::{
    cf_grid_compare, concentration_study, kde, kde_grid, ks_two_sample, ks_weighted,
};
use godds_core::model::{sample_size_condition, margin_free};
use godds_core::samplers::{
    posterior_constrained, posterior_dependent_example, posterior_double_constrained,
    posterior_unconstrained, rng_for, streams, WeightedSample,
};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// CF-grid differences above this are analytic evidence that the posteriors
/// differ; below it, equality is decided by the exact dichotomy.
const CF_DECISION_TOL: f64 = 1e-6;

#[derive(Parser)]
#[command(name = "godds", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Subcommand)]
enum Command {
    /// Decide whether fixing the margin changes the posterior of psi.
    Invariance(CommonOpts),
    /// Emit characteristic-function grids (unconstrained vs constrained).
    Cf(CommonOpts),
    /// Emit KDE curves for the row-fixed vs doubly-fixed log odds ratio.
    Figure(CommonOpts),
    /// Posterior summaries of each log psi_j per scheme.
    Analyze(CommonOpts),
    /// Posterior variance of log psi as n grows.
    Concentration(CommonOpts),
}

#[derive(clap::Args)]
struct CommonOpts {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of posterior draws.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    tmin: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    tmax: Option<f64>,
    #[arg(long)]
    tpoints: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Scheme for single-scheme commands.
    #[arg(long, value_enum)]
    scheme: Option<SchemeSpec>,
}

impl CommonOpts {
    fn load(&self) -> Result<Experiment> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(samples) = self.samples {
            cfg.samples = samples;
        }
        if let Some(tmin) = self.tmin {
            cfg.t_grid.min = tmin;
        }
        if let Some(tmax) = self.tmax {
            cfg.t_grid.max = tmax;
        }
        if let Some(tpoints) = self.tpoints {
            cfg.t_grid.points = tpoints;
        }
        if let Some(out) = &self.out {
            cfg.out_dir = out.display().to_string();
        }
        if let Some(scheme) = self.scheme {
            cfg.scheme = scheme;
        }
        cfg.build()
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap uses exit code 2 for usage errors; 2 is reserved for
            // non-invariant findings here, so remap.
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Invariance(opts) => cmd_invariance(opts),
        Command::Cf(opts) => cmd_cf(opts),
        Command::Figure(opts) => cmd_figure(opts),
        Command::Analyze(opts) => cmd_analyze(opts),
        Command::Concentration(opts) => cmd_concentration(opts),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn t_grid(exp: &Experiment) -> Result<Vec<f64>> {
    Ok(linspace(
        exp.config.t_grid.min,
        exp.config.t_grid.max,
        exp.config.t_grid.points,
    )?)
}

/// Grid pair of the log psi_j CF under both schemes.
fn cf_pair(exp: &Experiment, j: usize, t: &[f64]) -> Result<(CfGrid, CfGrid)> {
    let make = |scheme: Scheme| -> Result<CfGrid> {
        Ok(CfGrid::evaluate(t.to_vec(), scheme, |ti| match exp.config.prior {
            PriorKind::Dirichlet => cf_logpsi(
                ti,
                &exp.alpha,
                &exp.x,
                &exp.contrast,
                j,
                &exp.partition,
                scheme,
            ),
            PriorKind::Dependent => {
                let a: [f64; 4] = exp.alpha.alpha().try_into().expect("validated r = 4");
                cf_dependent_example(ti, &a, &exp.x, scheme)
            }
        })?)
    };
    Ok((make(Scheme::Unconstrained)?, make(Scheme::Constrained)?))
}

fn scheme_samples(exp: &Experiment, scheme: Scheme) -> Result<Vec<WeightedSample>> {
    let seed = exp.config.seed;
    let n = exp.config.samples;
    match (exp.config.prior, scheme) {
        (PriorKind::Dirichlet, Scheme::Unconstrained) => Ok(posterior_unconstrained(
            &exp.alpha,
            &exp.x,
            &exp.contrast,
            n,
            &mut rng_for(seed, streams::UNCONSTRAINED),
        )?),
        (PriorKind::Dirichlet, Scheme::Constrained) => Ok(posterior_constrained(
            &exp.alpha,
            &exp.x,
            &exp.partition,
            &exp.contrast,
            n,
            &mut rng_for(seed, streams::CONSTRAINED),
        )?),
        (PriorKind::Dependent, _) => {
            let a: [f64; 4] = exp.alpha.alpha().try_into().expect("validated r = 4");
            let stream = match scheme {
                Scheme::Unconstrained => streams::UNCONSTRAINED,
                Scheme::Constrained => streams::CONSTRAINED,
            };
            Ok(vec![posterior_dependent_example(
                &a,
                &exp.x,
                scheme,
                n,
                &mut rng_for(seed, stream),
            )?])
        }
    }
}

fn cmd_invariance(opts: &CommonOpts) -> Result<ExitCode> {
    let exp = opts.load()?;
    let n = exp.x.n();
    let mf = margin_free(&exp.contrast, &exp.partition);
    println!("margin_free: {mf}");
    let mut any_size_ok = false;
    for j in 0..exp.contrast.d() {
        let ok = sample_size_condition(&exp.contrast, &exp.partition, j, n);
        any_size_ok |= ok;
        println!("sample_size_condition[column {j}]: {ok}");
    }

    let t = t_grid(&exp)?;
    let mut max_diff: f64 = 0.0;
    let mut argmax_t = 0.0;
    let ncols = match exp.config.prior {
        PriorKind::Dirichlet => exp.contrast.d(),
        PriorKind::Dependent => 1,
    };
    for j in 0..ncols {
        let (u, c) = cf_pair(&exp, j, &t)?;
        let (d, at) = cf_grid_compare(&u, &c)?;
        println!("cf_max_diff[column {j}]: {d:.3e} at t = {at}");
        if d > max_diff {
            max_diff = d;
            argmax_t = at;
        }
    }

    let us = scheme_samples(&exp, Scheme::Unconstrained)?;
    let cs = scheme_samples(&exp, Scheme::Constrained)?;
    for (j, (a, b)) in us.iter().zip(&cs).enumerate() {
        let ks = ks_two_sample(&a.values, &b.values)?;
        println!(
            "ks[column {j}]: statistic = {:.5}, significant_at_01 = {}",
            ks.statistic, ks.significant_at_01
        );
    }

    if max_diff > CF_DECISION_TOL {
        println!(
            "verdict: NON-INVARIANT (CF grids differ by {max_diff:.3e} at t = {argmax_t})"
        );
        return Ok(ExitCode::from(2));
    }
    println!("verdict: invariant (max CF-grid difference {max_diff:.3e})");
    if !mf && !any_size_ok {
        println!(
            "note: some contrast coefficients do not sum to zero within blocks, \
             but the sample-size condition fails, so equal posteriors are \
             consistent with the theory"
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_cf(opts: &CommonOpts) -> Result<ExitCode> {
    let exp = opts.load()?;
    let t = t_grid(&exp)?;
    let out = Path::new(&exp.config.out_dir);
    let ncols = match exp.config.prior {
        PriorKind::Dirichlet => exp.contrast.d(),
        PriorKind::Dependent => 1,
    };
    for j in 0..ncols {
        let (u, c) = cf_pair(&exp, j, &t)?;
        let csv = grid_pair_csv(&u, &c)?;
        let name = format!("cf_col{j}.csv");
        write_atomic(out, &name, &csv)?;
        println!("wrote {}", out.join(name).display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_figure(opts: &CommonOpts) -> Result<ExitCode> {
    let exp = opts.load()?;
    if exp.x.len() != 4 {
        bail!("figure command needs a 2x2 table");
    }
    let n = exp.config.samples;
    let seed = exp.config.seed;
    let row_fixed = posterior_constrained(
        &exp.alpha,
        &exp.x,
        &exp.partition,
        &exp.contrast,
        n,
        &mut rng_for(seed, streams::CONSTRAINED),
    )?
    .remove(0);
    let double_fixed = posterior_double_constrained(
        &exp.alpha,
        &exp.x,
        n,
        &mut rng_for(seed, streams::DOUBLE),
    )?;
    let ess = double_fixed.ess();
    println!("doubly-fixed ESS: {ess:.1} of {n} draws");
    if ess < 0.01 * n as f64 {
        eprintln!("warning: degenerate importance weights (ESS < 1% of draws)");
    }

    // One shared grid so the two curves are directly comparable.
    let mut grid = kde_grid(&row_fixed, 512)?;
    let dgrid = kde_grid(&double_fixed, 512)?;
    let lo = grid[0].min(dgrid[0]);
    let hi = grid[grid.len() - 1].max(dgrid[dgrid.len() - 1]);
    grid = linspace(lo, hi, 512)?;

    let out = Path::new(&exp.config.out_dir);
    let row_curve = kde(&row_fixed, &grid, None)?;
    let double_curve = kde(&double_fixed, &grid, None)?;
    write_atomic(out, "figure_rowfixed.csv", &row_curve.to_csv())?;
    write_atomic(out, "figure_doublefixed.csv", &double_curve.to_csv())?;

    let ks = ks_weighted(&row_fixed, &double_fixed)?;
    let report = serde_json::json!({
        "ess_double_fixed": ess,
        "ks": ks,
    });
    write_atomic(out, "figure_report.json", &serde_json::to_string_pretty(&report)?)?;
    println!(
        "weighted KS: statistic = {:.5}, significant_at_01 = {}",
        ks.statistic, ks.significant_at_01
    );
    println!("wrote {}", out.join("figure_rowfixed.csv").display());
    println!("wrote {}", out.join("figure_doublefixed.csv").display());
    Ok(ExitCode::SUCCESS)
}

fn summarize(name: &str, j: usize, s: &WeightedSample) {
    let mean = s.weighted_mean();
    let sd = s.weighted_variance().sqrt();
    let qs: Vec<f64> = [0.025, 0.25, 0.5, 0.75, 0.975]
        .iter()
        .map(|&q| s.weighted_quantile(q))
        .collect();
    println!(
        "{name}[column {j}]: mean = {mean:.6}, sd = {sd:.6}, q2.5 = {:.6}, q25 = {:.6}, \
         median = {:.6}, q75 = {:.6}, q97.5 = {:.6}",
        qs[0], qs[1], qs[2], qs[3], qs[4]
    );
}

fn cmd_analyze(opts: &CommonOpts) -> Result<ExitCode> {
    let exp = opts.load()?;
    if exp.config.scheme == SchemeSpec::Double {
        let s = posterior_double_constrained(
            &exp.alpha,
            &exp.x,
            exp.config.samples,
            &mut rng_for(exp.config.seed, streams::DOUBLE),
        )?;
        summarize("double_constrained", 0, &s);
        println!("ess: {:.1}", s.ess());
        return Ok(ExitCode::SUCCESS);
    }
    let us = scheme_samples(&exp, Scheme::Unconstrained)?;
    let cs = scheme_samples(&exp, Scheme::Constrained)?;
    let mut any_diff = false;
    for (j, (a, b)) in us.iter().zip(&cs).enumerate() {
        summarize("unconstrained", j, a);
        summarize("constrained", j, b);
        let ks = ks_two_sample(&a.values, &b.values)?;
        if ks.significant_at_01 {
            any_diff = true;
        }
        println!(
            "difference[column {j}]: {}",
            if ks.significant_at_01 { "DIFFERS" } else { "no evidence" }
        );
    }
    let _ = any_diff;
    Ok(ExitCode::SUCCESS)
}

fn cmd_concentration(opts: &CommonOpts) -> Result<ExitCode> {
    let exp = opts.load()?;
    let theta0 = exp
        .config
        .theta0
        .clone()
        .context("concentration study needs 'theta0' in the config")?;
    let scheme = match exp.config.scheme {
        SchemeSpec::Unconstrained => Scheme::Unconstrained,
        SchemeSpec::Constrained => Scheme::Constrained,
        other => bail!("concentration study supports unconstrained/constrained, got {other:?}"),
    };
    let rows = concentration_study(
        &theta0,
        &exp.contrast,
        &exp.partition,
        &exp.config.n_list,
        scheme,
        exp.config.samples,
        exp.config.seed,
    )?;
    let mut csv = String::from("n,variance\n");
    for row in &rows {
        println!("n = {:>8}: variance of log psi = {:.6}", row.n, row.variance);
        csv.push_str(&format!("{},{}\n", row.n, row.variance));
    }
    let out = Path::new(&exp.config.out_dir);
    write_atomic(out, "concentration.csv", &csv)?;
    println!("wrote {}", out.join("concentration.csv").display());
    Ok(ExitCode::SUCCESS)
}

/// Write-temp-then-rename so partially written outputs are never observed.
fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))?;
    let tmp = dir.join(format!(".{name}.tmp"));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, dir.join(name))?;
    Ok(())
}
