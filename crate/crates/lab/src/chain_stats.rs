//! Monte Carlo statistics of freely-jointed and freely-rotating chain
//! ensembles next to their closed-form values.

use std::path::Path;

use polyrl_core::chain::{self, ChainModel, EnsembleAccumulator, EnsembleSummary};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::csvio;
use crate::error::{LabError, Result};

const BLOCK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Fjc,
    Frc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainStatsParams {
    pub model: ModelKind,
    pub dim: usize,
    pub n_bonds: usize,
    pub b0: f64,
    /// Bond angle for the freely-rotating chain.
    pub theta: f64,
    pub n_chains: usize,
    pub seed: u64,
    pub max_lag: usize,
}

impl ChainStatsParams {
    pub fn chain_model(&self) -> ChainModel {
        match self.model {
            ModelKind::Fjc => ChainModel::Fjc,
            ModelKind::Frc => ChainModel::Frc { theta: self.theta },
        }
    }

    /// Cosine between consecutive bonds (0 for the freely-jointed chain).
    pub fn bond_cos(&self) -> f64 {
        match self.model {
            ModelKind::Fjc => 0.0,
            ModelKind::Frc => self.theta.cos(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_chains == 0 {
            return Err(LabError::Config("need at least one chain".into()));
        }
        if self.max_lag >= self.n_bonds {
            return Err(LabError::Config(format!(
                "max_lag {} must be below n_bonds {}",
                self.max_lag, self.n_bonds
            )));
        }
        if !(self.b0 > 0.0) {
            return Err(LabError::Config("b0 must be > 0".into()));
        }
        if self.model == ModelKind::Frc {
            chain::persistence_number(self.theta).map_err(|e| LabError::Config(e.to_string()))?;
            if self.dim < 2 {
                return Err(LabError::Config("freely-rotating chains need dim >= 2".into()));
            }
        } else if self.dim == 0 {
            return Err(LabError::Config("dim must be >= 1".into()));
        }
        Ok(())
    }
}

/// Mean squared distance spanned by `m` consecutive bonds whose orientation
/// correlation decays as `c^k`.
pub fn mean_sq_span(m: usize, c: f64, b0: f64) -> f64 {
    let mf = m as f64;
    if c == 0.0 {
        return mf * b0 * b0;
    }
    mf * b0 * b0 * ((1.0 + c) / (1.0 - c) - 2.0 * c * (1.0 - c.powi(m as i32)) / (mf * (1.0 - c) * (1.0 - c)))
}

/// Expected squared radius of gyration (divisor: number of states minus one).
pub fn mean_gyration_sq(n_bonds: usize, c: f64, b0: f64) -> f64 {
    let n_states = (n_bonds + 1) as f64;
    let pair_sum: f64 = (1..=n_bonds)
        .map(|m| (n_states - m as f64) * mean_sq_span(m, c, b0))
        .sum();
    pair_sum / (n_states * (n_states - 1.0))
}

pub const CORRELATION_HEADER: &[&str] = &["lag", "correlation", "se", "reference"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub lag: usize,
    pub correlation: f64,
    pub se: f64,
    pub reference: f64,
}

pub const SUMMARY_HEADER: &[&str] = &["quantity", "value", "se", "reference"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub quantity: String,
    pub value: f64,
    pub se: f64,
    pub reference: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ChainReport {
    pub summary: EnsembleSummary,
    pub correlation: Vec<CorrelationRow>,
    pub quantities: Vec<SummaryRow>,
}

impl ChainReport {
    pub fn quantity(&self, name: &str) -> Option<&SummaryRow> {
        self.quantities.iter().find(|q| q.quantity == name)
    }
}

/// Ensemble statistics. Chains are generated in parallel blocks and merged
/// in a fixed order, so the report depends only on the parameters.
pub fn ensemble_summary(p: &ChainStatsParams) -> Result<EnsembleSummary> {
    p.validate()?;
    let model = p.chain_model();
    let n_blocks = p.n_chains.div_ceil(BLOCK);
    let partial: Vec<polyrl_core::Result<EnsembleAccumulator>> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let mut acc = EnsembleAccumulator::new(p.max_lag);
            for i in b * BLOCK..((b + 1) * BLOCK).min(p.n_chains) {
                let mut rng = polyrl_core::rng::substream(p.seed, i as u64);
                acc.push(&model.generate(p.dim, p.n_bonds, p.b0, &mut rng)?)?;
            }
            Ok(acc)
        })
        .collect();
    let mut total = EnsembleAccumulator::new(p.max_lag);
    for acc in partial {
        total.merge(&acc?)?;
    }
    Ok(total.finish()?)
}

pub fn chain_stats(p: &ChainStatsParams) -> Result<ChainReport> {
    let summary = ensemble_summary(p)?;
    let c = p.bond_cos();
    let b0_sq = p.b0 * p.b0;
    let n = p.n_bonds;
    let correlation = summary
        .correlation
        .iter()
        .enumerate()
        .map(|(lag, e)| CorrelationRow {
            lag,
            correlation: e.mean,
            se: e.se,
            reference: if lag == 0 { 1.0 } else { c.powi(lag as i32) },
        })
        .collect();
    let per_bond = n as f64 * b0_sq;
    let row = |q: &str, value: f64, se: f64, reference: Option<f64>| SummaryRow {
        quantity: q.to_string(),
        value,
        se,
        reference,
    };
    let mut quantities = vec![
        row("mean_bond_sq", summary.mean_bond_sq, 0.0, Some(b0_sq)),
        row(
            "end_to_end_sq",
            summary.end_to_end_sq.mean,
            summary.end_to_end_sq.se,
            Some(mean_sq_span(n, c, p.b0)),
        ),
        row("end_to_end", summary.end_to_end.mean, summary.end_to_end.se, None),
        row(
            "gyration_sq",
            summary.gyration_sq.mean,
            summary.gyration_sq.se,
            Some(mean_gyration_sq(n, c, p.b0)),
        ),
        row("gyration", summary.gyration.mean, summary.gyration.se, None),
    ];
    // long-chain limit of the squared end-to-end distance per bond
    let limit = match p.model {
        ModelKind::Fjc => 1.0,
        ModelKind::Frc => chain::expansion_ratio(chain::persistence_number(p.theta)?)?,
    };
    quantities.push(row(
        "expansion_ratio",
        summary.end_to_end_sq.mean / per_bond,
        summary.end_to_end_sq.se / per_bond,
        Some(limit),
    ));
    if p.model == ModelKind::Frc {
        let lp = chain::persistence_number(p.theta)?;
        quantities.push(row("persistence_number", lp, 0.0, Some(lp)));
    }
    Ok(ChainReport {
        summary,
        correlation,
        quantities,
    })
}

/// Writes `correlation.csv` and `summary.csv` into `dir`.
pub fn write_report(report: &ChainReport, dir: &Path) -> Result<()> {
    csvio::write_csv(&dir.join("correlation.csv"), CORRELATION_HEADER, &report.correlation)?;
    csvio::write_csv(&dir.join("summary.csv"), SUMMARY_HEADER, &report.quantities)
}
