//! Configuration, seeded orchestration and report emission.
//!
//! [`run`] validates a configuration, dispatches on its kind and wraps the
//! results in a [`RunRecord`]. Raw results depend only on the configuration;
//! the start time and wall clock live in [`RunMetadata`], which is written
//! to JSON archives only.

mod config;
mod report;
mod runs;

use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

pub use config::{
    ExperimentConfig, ExperimentKind, Mesh, NormParams, PhiParams, SampleParams, ShapeParams, ThetaParams,
};
pub use report::{convergence_svg, csv_header, emit_report, write_csv, Formats};
pub use runs::{
    calibrate, norm_table, run_beta, run_convergence_phi, run_phi, run_sample, run_shape_study, run_theta,
    run_wulff, shape_box, Calibration, PhiOutcome, PhiReplicate, PhiStudy, SampleResult, ScaleSummary, ShapeOutcome,
    ShapeReplicate, ShapeStudy, ShapeSummary, ThetaSource, ThetaValue, Trend,
};

use crate::flow::NormTable;
use crate::percolation::PercolationEstimates;
use crate::Result;

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Completed,
    /// Every replicate exhausted its rejection attempts.
    NoValidSamples,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateSeed {
    pub n: Option<usize>,
    pub replicate: usize,
    pub seed: u64,
    pub attempts: usize,
    pub accepted_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "kebab-case")]
pub enum RunResults {
    Sample(SampleResult),
    Theta(PercolationEstimates),
    Beta(NormTable),
    Wulff(Calibration),
    Phi(PhiStudy),
    Shape(ShapeStudy),
    Convergence(PhiStudy),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    /// Seconds since the Unix epoch at the start of the run.
    pub started_at: u64,
    pub wall_clock_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub tool_version: String,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub outcome: Outcome,
    pub seeds: Vec<ReplicateSeed>,
    pub results: RunResults,
    pub metadata: RunMetadata,
}

impl RunRecord {
    pub fn kind(&self) -> ExperimentKind {
        self.config.kind
    }

    /// File stem shared by every artifact of this record.
    pub fn stem(&self) -> String {
        format!("{}-{}", self.kind().as_str(), &self.config_hash[..12])
    }

    pub fn from_json(s: &str) -> Result<RunRecord> {
        Ok(serde_json::from_str(s)?)
    }
}

fn phi_seeds(reps: &[PhiReplicate]) -> Vec<ReplicateSeed> {
    reps.iter()
        .map(|r| ReplicateSeed {
            n: Some(r.n),
            replicate: r.replicate,
            seed: r.seed,
            attempts: r.attempts,
            accepted_seed: r.accepted_seed,
        })
        .collect()
}

fn outcome_of(any_accepted: bool) -> Outcome {
    if any_accepted {
        Outcome::Completed
    } else {
        Outcome::NoValidSamples
    }
}

/// Validates `config`, runs the experiment it names and records the result.
pub fn run(config: &ExperimentConfig) -> Result<RunRecord> {
    config.validate()?;
    let started_at = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let clock = Instant::now();
    let mut outcome = Outcome::Completed;
    let mut seeds = Vec::new();
    let results = match config.kind {
        ExperimentKind::Sample => {
            let (r, _) = run_sample(config)?;
            seeds.push(ReplicateSeed {
                n: None,
                replicate: 0,
                seed: r.seed,
                attempts: 1,
                accepted_seed: Some(r.seed),
            });
            RunResults::Sample(r)
        }
        ExperimentKind::Theta => RunResults::Theta(run_theta(config)?),
        ExperimentKind::Beta => RunResults::Beta(run_beta(config)?),
        ExperimentKind::Wulff => RunResults::Wulff(run_wulff(config)?),
        ExperimentKind::Phi | ExperimentKind::Convergence => {
            let study = if config.kind == ExperimentKind::Phi {
                run_phi(config)?
            } else {
                run_convergence_phi(config)?
            };
            seeds = phi_seeds(&study.replicates);
            outcome = outcome_of(study.replicates.iter().any(|r| r.outcome.is_some()));
            if config.kind == ExperimentKind::Phi {
                RunResults::Phi(study)
            } else {
                RunResults::Convergence(study)
            }
        }
        ExperimentKind::Shape => {
            let study = run_shape_study(config)?;
            seeds = study
                .replicates
                .iter()
                .map(|r| ReplicateSeed {
                    n: Some(r.n),
                    replicate: r.replicate,
                    seed: r.seed,
                    attempts: r.attempts,
                    accepted_seed: r.accepted_seed,
                })
                .collect();
            outcome = outcome_of(study.replicates.iter().any(|r| r.outcome.is_some()));
            RunResults::Shape(study)
        }
    };
    Ok(RunRecord {
        schema_version: SCHEMA_VERSION,
        tool_version: TOOL_VERSION.into(),
        config_hash: config.hash(),
        config: config.clone(),
        outcome,
        seeds,
        results,
        metadata: RunMetadata {
            started_at,
            wall_clock_secs: clock.elapsed().as_secs_f64(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Error;

    fn full_lattice_convergence(d: usize, ns: Vec<usize>) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(ExperimentKind::Convergence, d, 1.0);
        c.n = ns;
        c.replicates = 2;
        c.norm.mesh = Mesh::AxisDiagonal;
        c.norm.n = 8;
        c.norm.replicates = 2;
        c.theta.half_width = 6;
        c.theta.replicates = 4;
        c.phi.anneal_steps = 500;
        c
    }

    #[test]
    fn full_lattice_convergence_is_exact_in_the_plane() {
        let rec = run(&full_lattice_convergence(2, vec![10, 12])).unwrap();
        let RunResults::Convergence(study) = &rec.results else { panic!() };
        let cal = study.calibration.as_ref().unwrap();
        assert_eq!(cal.theta.value, 1.0);
        assert_eq!(cal.constant.ratio, 4.0);
        for s in &study.summary {
            assert_eq!(s.mean_scaled, 4.0);
            assert_eq!(s.gap, Some(0.0));
        }
        assert_eq!(study.trend.as_ref().unwrap().nonincreasing, 1);
        assert_eq!(rec.seeds.len(), 4);
        assert_eq!(rec.outcome, Outcome::Completed);
    }

    #[test]
    fn empty_p_gives_no_valid_samples() {
        let mut c = ExperimentConfig::new(ExperimentKind::Shape, 2, 0.0);
        c.n = vec![4];
        c.replicates = 3;
        c.phi.max_attempts = 5;
        c.theta.half_width = 4;
        c.theta.replicates = 3;
        let rec = run(&c).unwrap();
        assert_eq!(rec.outcome, Outcome::NoValidSamples);
        let RunResults::Shape(study) = &rec.results else { panic!() };
        assert!(study.calibration.is_none());
        assert!(study.replicates.iter().all(|r| r.outcome.is_none() && r.attempts == 5));
        assert_eq!(study.summary[0].rejected, 3);
        assert_eq!(study.trend.steps, 0);
    }

    #[test]
    fn stage_failures_are_named() {
        let mut c = full_lattice_convergence(2, vec![6]);
        c.norm.table = Some("/nonexistent/table.json".into());
        let e = run(&c).unwrap_err();
        assert!(matches!(e, Error::Stage { stage: "norm", .. }), "{e}");
        assert!(matches!(e.root(), Error::Config(_)));
    }

    #[test]
    fn records_round_trip_through_json() {
        let mut c = ExperimentConfig::new(ExperimentKind::Sample, 2, 0.6);
        c.sample.half_width = 6;
        c.seed = 9;
        let rec = run(&c).unwrap();
        let back = RunRecord::from_json(&serde_json::to_string(&rec).unwrap()).unwrap();
        assert_eq!(back, rec);
        assert!(rec.stem().starts_with("sample-"));
    }

    #[test]
    fn phi_runs_are_reproducible() {
        let mut c = ExperimentConfig::new(ExperimentKind::Phi, 2, 0.7);
        c.n = vec![6, 8];
        c.replicates = 3;
        c.seed = 5;
        c.phi.anneal_steps = 1000;
        let a = run(&c).unwrap();
        let b = run(&c).unwrap();
        assert_eq!(a.results, b.results);
        assert_eq!(a.seeds, b.seeds);
        let RunResults::Phi(study) = &a.results else { panic!() };
        for r in &study.replicates {
            let o = r.outcome.as_ref().unwrap();
            assert!(o.best.ratio <= o.parametric.ratio && o.best.ratio <= o.local_search.ratio);
            assert!(o.best.volume <= r.n * r.n);
        }
    }
}
