use std::path::PathBuf;
use std::sync::Arc;

use clap::Args;
use nilspec_core::algebra::{LieAlgebra, Metric};
use nilspec_core::catalog::{self, ExampleName, ExampleRecord};
use nilspec_core::group::Lattice;
use nilspec_core::io::{read_json, AlgebraFile, LatticeFile, MetricFile};

use crate::CliError;

#[derive(Debug, Clone, Args)]
pub struct SourceArgs {
    /// Built-in example I, II, III, IV or V.
    #[arg(long, conflicts_with_all = ["algebra", "lattice", "metric"])]
    pub example: Option<ExampleName>,
    /// Algebra definition file (JSON).
    #[arg(long)]
    pub algebra: Option<PathBuf>,
    /// Lattice definition file (JSON); repeat for a pair.
    #[arg(long)]
    pub lattice: Vec<PathBuf>,
    /// Metric frame file (JSON); identity when omitted.
    #[arg(long)]
    pub metric: Option<PathBuf>,
}

/// Inputs resolved from an example or from files.
pub struct Loaded {
    pub label: String,
    pub example: Option<ExampleRecord>,
    pub algebra: Arc<LieAlgebra>,
    pub metric: Metric,
    /// Each lattice or the reason it was rejected.
    pub lattices: Vec<Result<Lattice, String>>,
}

impl SourceArgs {
    pub fn load(&self) -> Result<Loaded, CliError> {
        if let Some(name) = self.example {
            let ex = catalog::example(name);
            return Ok(Loaded {
                label: format!("example {name}"),
                algebra: ex.algebra.clone(),
                metric: ex.metric.clone(),
                lattices: ex.lattices.iter().cloned().map(Ok).collect(),
                example: Some(ex),
            });
        }
        let Some(path) = &self.algebra else {
            return Err(CliError::Usage("pass --example NAME or --algebra FILE".into()));
        };
        let algebra = Arc::new(read_json::<AlgebraFile>(path)?.to_algebra()?);
        let metric = match &self.metric {
            Some(p) => read_json::<MetricFile>(p)?.to_metric()?,
            None => Metric::identity(algebra.dim()),
        };
        if metric.dim() != algebra.dim() {
            return Err(CliError::Usage(format!(
                "metric has dimension {} but the algebra has dimension {}",
                metric.dim(),
                algebra.dim()
            )));
        }
        let mut lattices = Vec::new();
        for p in &self.lattice {
            let f: LatticeFile = read_json(p)?;
            lattices.push(f.to_lattice(algebra.clone()).map_err(|e| format!("{}: {e}", p.display())));
        }
        Ok(Loaded { label: path.display().to_string(), example: None, algebra, metric, lattices })
    }
}

impl Loaded {
    pub fn deep_radius(&self, over: Option<i64>) -> i64 {
        over.or(self.example.as_ref().map(|e| e.deep_radius)).unwrap_or(3)
    }

    /// All lattices, failing on the first rejected one.
    pub fn require_lattices(&self, count: usize) -> Result<Vec<&Lattice>, CliError> {
        if self.lattices.len() < count {
            return Err(CliError::Usage(format!("need {count} lattice(s), got {}", self.lattices.len())));
        }
        self.lattices.iter().map(|l| l.as_ref().map_err(|e| CliError::Usage(e.clone()))).collect()
    }
}
