//! Experiment configuration: a single JSON file, cross-validated against the
//! core model at load time, with a handful of command-line overrides.

use anyhow::{bail, Context, Result};
use godds_core::model::{ContrastMatrix, CountVector, DirichletPrior, Partition};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Flattened (row-major) table counts.
    pub counts: Vec<u64>,
    /// Partition blocks, one-based cell indices.
    pub partition: Vec<Vec<usize>>,
    pub contrast: ContrastSpec,
    pub alpha: Vec<f64>,
    #[serde(default)]
    pub prior: PriorKind,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub t_grid: TGridSpec,
    #[serde(default = "default_out_dir")]
    pub out_dir: String,
    /// Data-generating probabilities for the concentration study.
    #[serde(default)]
    pub theta0: Option<Vec<f64>>,
    /// Sample sizes for the concentration study.
    #[serde(default = "default_n_list")]
    pub n_list: Vec<u64>,
    #[serde(default)]
    pub scheme: SchemeSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorKind {
    #[default]
    Dirichlet,
    /// The dependent-prior counterexample (first margin coincides with
    /// `nu^{1,2}` almost surely); 2x2 tables with the odds-ratio contrast.
    Dependent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SchemeSpec {
    #[default]
    Unconstrained,
    Constrained,
    Double,
    Dependent,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ContrastSpec {
    Builder {
        builder: String,
        #[serde(default)]
        rows: Option<usize>,
        #[serde(default)]
        cols: Option<usize>,
        #[serde(default)]
        i: Option<usize>,
        #[serde(default)]
        j: Option<usize>,
        #[serde(default)]
        k: Option<u32>,
    },
    /// Explicit matrix, given as a list of columns of length r.
    Matrix { matrix: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TGridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Default for TGridSpec {
    fn default() -> Self {
        Self {
            min: -10.0,
            max: 10.0,
            points: 401,
        }
    }
}

fn default_samples() -> usize {
    100_000
}

fn default_out_dir() -> String {
    "out".into()
}

fn default_n_list() -> Vec<u64> {
    vec![100, 1000, 10_000]
}

/// Validated, model-level view of a configuration.
pub struct Experiment {
    pub x: CountVector,
    pub partition: Partition,
    pub contrast: ContrastMatrix,
    pub alpha: DirichletPrior,
    pub config: ExperimentConfig,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: Self = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        Ok(cfg)
    }

    pub fn build(self) -> Result<Experiment> {
        let r = self.counts.len();
        let x = CountVector::new(self.counts.clone());
        let partition = Partition::from_one_based(self.partition.clone(), r)?;
        let contrast = build_contrast(&self.contrast, r)?;
        if contrast.r() != r {
            bail!(
                "contrast is over {} cells but the table has {r}",
                contrast.r()
            );
        }
        let alpha = DirichletPrior::new(self.alpha.clone())?;
        if alpha.len() != r {
            bail!("alpha has length {}, table has {r} cells", alpha.len());
        }
        if self.prior == PriorKind::Dependent && r != 4 {
            bail!("the dependent prior is defined for 2x2 tables only");
        }
        Ok(Experiment {
            x,
            partition,
            contrast,
            alpha,
            config: self,
        })
    }
}

fn build_contrast(spec: &ContrastSpec, r: usize) -> Result<ContrastMatrix> {
    match spec {
        ContrastSpec::Matrix { matrix } => Ok(ContrastMatrix::new(matrix.clone())?),
        ContrastSpec::Builder {
            builder,
            rows,
            cols,
            i,
            j,
            k,
        } => match builder.as_str() {
            "or2x2" => Ok(ContrastMatrix::or_2x2()),
            "local" => {
                let (rows, cols) = (
                    rows.context("local builder needs 'rows'")?,
                    cols.context("local builder needs 'cols'")?,
                );
                Ok(ContrastMatrix::local_or(
                    rows,
                    cols,
                    i.context("local builder needs 'i'")?,
                    j.context("local builder needs 'j'")?,
                )?)
            }
            "higher_order" => Ok(ContrastMatrix::higher_order(
                k.context("higher_order builder needs 'k'")?,
            )?),
            "constant" => {
                // All-0.5 contrast used in the margin-dependent examples.
                Ok(ContrastMatrix::column_vector(vec![0.5; r])?)
            }
            other => bail!("unknown contrast builder '{other}'"),
        },
    }
}
