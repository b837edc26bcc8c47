//! Seeded experiment drivers.
//!
//! Seeds. Replicate `r` at scale `n` starts from
//! `s0 = mix(mix(master, n, PHI), r, PHI)` (tag `SHAPE` for shape studies);
//! attempt `a >= 1` of the rejection loop uses `mix(s0, a, REJECTION)`. The
//! annealing stream of an accepted configuration with seed `s` is
//! `mix(s, 0, ANNEAL)`. The calibration uses `mix(master, 0, THETA)` for
//! `theta` and `mix(master, 0, BETA)` for the norm table.
//!
//! `phi_n` runs use [`pipeline_box`]. Shape studies use [`shape_box`], twice
//! as wide, so that translates of `nW` around the minimizer stay inside the
//! analysis region where the cluster mask is known.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Mesh};
use crate::cheeger::{
    phi_pipeline, pipeline_box, AnchoredSubgraph, CertificateSummary, PipelineOptions, RatioKind, RatioResult,
    Schedule,
};
use crate::flow::{axis_and_diagonals, build_norm_table, circle_directions, fibonacci_sphere, NormOptions, NormTable};
use crate::geometry::{isoperimetric_constant, IsoperimetricConstant, NormEvaluator, Polytope, WulffShape};
use crate::lattice::BoxSpec;
use crate::percolation::{
    estimate_theta, infinite_cluster_proxy, label_clusters, sample_configuration, BondConfiguration,
    PercolationEstimates,
};
use crate::rng::{mix, tag};
use crate::shape::{
    cluster_mask, continuous_set_and_perimeter, decompose_holes, default_profile_delta, enclosed_set,
    measure_compare, profile_family, rasterize_translate, symmetric_difference_distance, EmpiricalMeasure,
    SearchOptions, VoxelMeasure, VoxelSet,
};
use crate::stats::{median, summarize};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThetaSource {
    Given,
    Estimated,
}

/// The one `theta` value used for Wulff normalisation, raster mass and
/// measure comparison within a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaValue {
    pub value: f64,
    pub ci_radius: f64,
    pub source: ThetaSource,
    pub estimate: Option<PercolationEstimates>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub theta: ThetaValue,
    pub norm: NormTable,
    pub wulff: WulffShape,
    pub constant: IsoperimetricConstant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleResult {
    pub seed: u64,
    pub half_width: i64,
    pub margin: i64,
    pub edges: usize,
    pub open: usize,
    pub open_fraction: f64,
    pub origin_cluster_size: usize,
    pub origin_reaches_boundary: bool,
    pub largest_cluster_size: usize,
    pub cluster_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiOutcome {
    pub best: RatioResult,
    pub parametric: RatioResult,
    pub local_search: RatioResult,
    pub certificate: Option<CertificateSummary>,
    pub certificate_skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiReplicate {
    pub n: usize,
    pub replicate: usize,
    /// Seed of the first attempt.
    pub seed: u64,
    /// Configurations drawn, accepted or not.
    pub attempts: usize,
    pub accepted_seed: Option<u64>,
    /// `None` when every attempt was rejected.
    pub outcome: Option<PhiOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleSummary {
    pub n: usize,
    pub accepted: usize,
    pub rejected: usize,
    /// Mean of `n phi_n` over accepted replicates, with its 95% CI radius.
    pub mean_scaled: f64,
    pub ci_radius: f64,
    pub median_scaled: f64,
    /// `|mean_scaled - constant|` when a constant is known.
    pub gap: Option<f64>,
}

/// A per-scale statistic ordered by `n`, and how many of its steps do not
/// increase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trend {
    pub values: Vec<f64>,
    pub steps: usize,
    pub nonincreasing: usize,
}

impl Trend {
    pub fn of(values: &[f64]) -> Trend {
        let steps = values.len().saturating_sub(1);
        let nonincreasing = values.windows(2).filter(|w| w[1] <= w[0]).count();
        Trend {
            values: values.to_vec(),
            steps,
            nonincreasing,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiStudy {
    pub calibration: Option<Calibration>,
    pub replicates: Vec<PhiReplicate>,
    pub summary: Vec<ScaleSummary>,
    /// Trend of the gap to the constant (convergence runs).
    pub trend: Option<Trend>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeOutcome {
    pub best: RatioResult,
    /// Best translation at unit scale.
    pub x: Vec<f64>,
    pub mismatch: usize,
    pub distance: f64,
    pub evaluations: usize,
    pub large_holes: usize,
    pub small_hole_volume: usize,
    /// Face perimeter of the enclosed set, divided by `n^(d-1)`.
    pub scaled_perimeter: f64,
    /// Largest discrepancy between the empirical measure of `G` and
    /// `theta` times Lebesgue measure on the best translate.
    pub discrepancy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeReplicate {
    pub n: usize,
    pub replicate: usize,
    pub seed: u64,
    pub attempts: usize,
    pub accepted_seed: Option<u64>,
    pub outcome: Option<ShapeOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeSummary {
    pub n: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub median_distance: f64,
    pub mean_distance: f64,
    pub ci_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeStudy {
    pub calibration: Option<Calibration>,
    pub replicates: Vec<ShapeReplicate>,
    pub summary: Vec<ShapeSummary>,
    /// Trend of the median distance.
    pub trend: Trend,
    /// `d = 2`: the minimizer against the best translate, first accepted
    /// replicate at the largest scale.
    pub overlay_svg: Option<String>,
}

/// `theta`, norm table, Wulff crystal and constant, each stage named on
/// failure. `None` when `theta` comes out as zero.
pub fn calibrate(config: &ExperimentConfig) -> Result<Option<Calibration>> {
    let theta = theta_value(config).map_err(|e| e.in_stage("theta"))?;
    if theta.value <= 0.0 {
        return Ok(None);
    }
    let norm = norm_table(config).map_err(|e| e.in_stage("norm"))?;
    let wulff = WulffShape::build(&norm, theta.value).map_err(|e| e.in_stage("wulff"))?;
    let eval = NormEvaluator::new(&norm, config.norm.interpolate).map_err(|e| e.in_stage("wulff"))?;
    let constant = isoperimetric_constant(&wulff, &eval).map_err(|e| e.in_stage("wulff"))?;
    Ok(Some(Calibration {
        theta,
        norm,
        wulff,
        constant,
    }))
}

fn theta_value(config: &ExperimentConfig) -> Result<ThetaValue> {
    if let Some(v) = config.theta.value {
        return Ok(ThetaValue {
            value: v,
            ci_radius: 0.0,
            source: ThetaSource::Given,
            estimate: None,
        });
    }
    let est = estimate_theta_for(config)?;
    Ok(ThetaValue {
        value: est.theta_hat,
        ci_radius: est.ci_radius,
        source: ThetaSource::Estimated,
        estimate: Some(est),
    })
}

fn estimate_theta_for(config: &ExperimentConfig) -> Result<PercolationEstimates> {
    let spec = BoxSpec::with_default_margin(config.d, config.theta.half_width)?;
    estimate_theta(
        config.d,
        config.p,
        spec,
        config.theta.replicates,
        mix(config.seed, 0, tag::THETA),
    )
}

pub fn norm_table(config: &ExperimentConfig) -> Result<NormTable> {
    let nm = &config.norm;
    if let Some(path) = &nm.table {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let table = NormTable::from_json(&text)?;
        if table.d != config.d {
            return Err(Error::Config(format!(
                "norm table is for d = {}, configuration has d = {}",
                table.d, config.d
            )));
        }
        return Ok(table);
    }
    let dirs = match nm.mesh {
        Mesh::Circle => circle_directions(nm.directions),
        Mesh::Fibonacci => fibonacci_sphere(nm.directions),
        Mesh::AxisDiagonal => axis_and_diagonals(config.d),
    };
    let opts = NormOptions {
        n: nm.n,
        h_rel: nm.h_rel,
        replicates: nm.replicates,
        seed: mix(config.seed, 0, tag::BETA),
        symmetry: nm.symmetry,
        ci_threshold: None,
    };
    build_norm_table(config.p, &dirs, opts)
}

pub fn run_sample(config: &ExperimentConfig) -> Result<(SampleResult, BondConfiguration)> {
    let s = &config.sample;
    let spec = match s.margin {
        Some(m) => BoxSpec::new(config.d, s.half_width, m)?,
        None => BoxSpec::with_default_margin(config.d, s.half_width)?,
    };
    let bonds = sample_configuration(spec, config.p, config.seed)?;
    let lab = label_clusters(&bonds);
    let result = SampleResult {
        seed: config.seed,
        half_width: spec.half_width,
        margin: spec.margin,
        edges: bonds.edge_count(),
        open: bonds.open_count(),
        open_fraction: bonds.open_fraction(),
        origin_cluster_size: lab.size_of(lab.origin),
        origin_reaches_boundary: lab.touches_outer_face(lab.label(lab.origin)),
        largest_cluster_size: lab.size_of(lab.largest),
        cluster_count: lab.cluster_count(),
    };
    Ok((result, bonds))
}

pub fn run_theta(config: &ExperimentConfig) -> Result<PercolationEstimates> {
    estimate_theta_for(config).map_err(|e| e.in_stage("theta"))
}

pub fn run_beta(config: &ExperimentConfig) -> Result<NormTable> {
    norm_table(config).map_err(|e| e.in_stage("norm"))
}

pub fn run_wulff(config: &ExperimentConfig) -> Result<Calibration> {
    calibrate(config)?.ok_or_else(|| {
        Error::Conditioning("theta is zero, so there is no Wulff crystal".into()).in_stage("theta")
    })
}

/// Half width `ceil(2.5 n) + 1` with the default margin: analysis half
/// width about `2n`.
pub fn shape_box(d: usize, n: usize) -> Result<BoxSpec> {
    BoxSpec::with_default_margin(d, (2.5 * n as f64).ceil() as i64 + 1)
}

/// A configuration in the box whose origin cluster reaches the outer
/// face, by rejection.
struct Draw {
    seed: u64,
    attempts: usize,
    accepted: Option<(u64, BondConfiguration)>,
}

fn draw_conditioned(config: &ExperimentConfig, spec: BoxSpec, n: usize, replicate: usize, stage: u64) -> Result<Draw> {
    let s0 = mix(mix(config.seed, n as u64, stage), replicate as u64, stage);
    for a in 0..config.phi.max_attempts {
        let seed = if a == 0 { s0 } else { mix(s0, a as u64, tag::REJECTION) };
        let bonds = sample_configuration(spec, config.p, seed)?;
        if !infinite_cluster_proxy(&label_clusters(&bonds), bonds.lattice()).is_empty() {
            return Ok(Draw {
                seed: s0,
                attempts: a + 1,
                accepted: Some((seed, bonds)),
            });
        }
    }
    Ok(Draw {
        seed: s0,
        attempts: config.phi.max_attempts,
        accepted: None,
    })
}

fn pipeline_options(config: &ExperimentConfig, accepted_seed: u64, wulff: Option<&Polytope>) -> PipelineOptions {
    let ph = &config.phi;
    PipelineOptions {
        vol_cap: ph.vol_cap,
        schedule: Schedule {
            steps: ph.anneal_steps,
            t_start: ph.t_start,
            t_end: ph.t_end,
            seed: mix(accepted_seed, 0, tag::ANNEAL),
        },
        wulff: wulff.map(|w| w.scaled(ph.certificate_dilation)),
        delta: ph.delta,
    }
}

fn jobs(config: &ExperimentConfig) -> Vec<(usize, usize)> {
    config
        .n
        .iter()
        .flat_map(|&n| (0..config.replicates).map(move |r| (n, r)))
        .collect()
}

fn phi_replicate(
    config: &ExperimentConfig,
    n: usize,
    r: usize,
    wulff: Option<&Polytope>,
) -> Result<(PhiReplicate, Option<AnchoredSubgraph>)> {
    let draw = draw_conditioned(config, pipeline_box(config.d, n)?, n, r, tag::PHI)?;
    let Some((seed, bonds)) = draw.accepted else {
        return Ok((
            PhiReplicate {
                n,
                replicate: r,
                seed: draw.seed,
                attempts: draw.attempts,
                accepted_seed: None,
                outcome: None,
            },
            None,
        ));
    };
    let report = phi_pipeline(&bonds, n, &pipeline_options(config, seed, wulff))?;
    let pick = |k: RatioKind| report.candidates.iter().find(|c| c.kind == k).cloned();
    let outcome = PhiOutcome {
        parametric: pick(RatioKind::Parametric).expect("parametric candidate"),
        local_search: pick(RatioKind::LocalSearch).expect("local-search candidate"),
        best: report.best,
        certificate: report.certificate,
        certificate_skipped: report.certificate_skipped,
    };
    Ok((
        PhiReplicate {
            n,
            replicate: r,
            seed: draw.seed,
            attempts: draw.attempts,
            accepted_seed: Some(seed),
            outcome: Some(outcome),
        },
        Some(report.best_set),
    ))
}

/// Sorted copy, so sums do not depend on completion order.
fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

fn phi_summary(ns: &[usize], reps: &[PhiReplicate], constant: Option<f64>) -> Vec<ScaleSummary> {
    ns.iter()
        .map(|&n| {
            let at: Vec<&PhiReplicate> = reps.iter().filter(|r| r.n == n).collect();
            let vals = sorted(at.iter().filter_map(|r| r.outcome.as_ref()).map(|o| o.best.scaled()).collect());
            let s = summarize(&vals);
            ScaleSummary {
                n,
                accepted: vals.len(),
                rejected: at.len() - vals.len(),
                mean_scaled: s.mean,
                ci_radius: s.ci_radius,
                median_scaled: median(&vals).unwrap_or(f64::NAN),
                gap: constant.filter(|_| !vals.is_empty()).map(|c| (s.mean - c).abs()),
            }
        })
        .collect()
}

fn sorted_scales(config: &ExperimentConfig) -> Vec<usize> {
    let mut ns = config.n.clone();
    ns.sort_unstable();
    ns.dedup();
    ns
}

/// `n phi_n` replicates per scale. With `with_constant`, the constant
/// `I(W) / (theta vol(W))` is computed and the gap trend reported.
fn run_phi_study(config: &ExperimentConfig, with_constant: bool) -> Result<PhiStudy> {
    let calibration = if with_constant || config.phi.certificate {
        calibrate(config)?
    } else {
        None
    };
    let wulff = if config.phi.certificate {
        calibration.as_ref().map(|c| &c.wulff.polytope)
    } else {
        None
    };
    let mut replicates: Vec<PhiReplicate> = jobs(config)
        .into_par_iter()
        .map(|(n, r)| phi_replicate(config, n, r, wulff).map(|x| x.0))
        .collect::<Result<_>>()
        .map_err(|e| e.in_stage("phi"))?;
    replicates.sort_by_key(|r| (r.n, r.replicate));
    let accepted = replicates.iter().any(|r| r.outcome.is_some());
    if accepted && with_constant && calibration.is_none() {
        return Err(Error::Conditioning("theta estimate is zero but samples were accepted".into()).in_stage("theta"));
    }
    let constant = calibration.as_ref().map(|c| c.constant.ratio).filter(|_| with_constant);
    let ns = sorted_scales(config);
    let summary = phi_summary(&ns, &replicates, constant);
    let trend = constant.map(|_| {
        Trend::of(&summary.iter().filter_map(|s| s.gap).collect::<Vec<_>>())
    });
    Ok(PhiStudy {
        calibration,
        replicates,
        summary,
        trend,
    })
}

pub fn run_phi(config: &ExperimentConfig) -> Result<PhiStudy> {
    run_phi_study(config, false)
}

/// Mean `n phi_n` per scale against the Wulff constant.
pub fn run_convergence_phi(config: &ExperimentConfig) -> Result<PhiStudy> {
    run_phi_study(config, true)
}

fn shape_replicate(
    config: &ExperimentConfig,
    cal: Option<&Calibration>,
    n: usize,
    r: usize,
    want_overlay: bool,
) -> Result<(ShapeReplicate, Option<String>)> {
    let draw = draw_conditioned(config, shape_box(config.d, n)?, n, r, tag::SHAPE)?;
    let mut rec = ShapeReplicate {
        n,
        replicate: r,
        seed: draw.seed,
        attempts: draw.attempts,
        accepted_seed: None,
        outcome: None,
    };
    let Some((seed, bonds)) = draw.accepted else {
        return Ok((rec, None));
    };
    rec.accepted_seed = Some(seed);
    let cal = cal.ok_or_else(|| Error::Conditioning("theta estimate is zero but a sample was accepted".into()))?;
    let theta = cal.theta.value;
    let w = &cal.wulff.polytope;
    let report = phi_pipeline(&bonds, n, &pipeline_options(config, seed, None))?;
    let g = &report.best_set;
    let lat = bonds.lattice();
    let gmask = VoxelSet::from_ranks(lat, &g.vertices)?;
    let cluster = cluster_mask(&bonds)?;
    let sh = &config.shape;
    let opts = SearchOptions {
        initial_step: sh.initial_step,
        min_step: sh.min_step,
        max_evaluations: sh.max_evaluations,
    };
    let sd = symmetric_difference_distance(&gmask, &cluster, w, n, opts)?;
    let holes = decompose_holes(g, &bonds, n)?;
    let enclosed = continuous_set_and_perimeter(lat, &enclosed_set(g, &bonds, &holes), n)?;
    let translate = rasterize_translate(w, n, &sd.x, &cluster)?;
    let mu = EmpiricalMeasure::from_ranks(lat, &g.vertices, n)?;
    let nu = VoxelMeasure {
        voxels: translate.clone(),
        n,
        theta,
    };
    let delta = sh.profile_delta.unwrap_or_else(|| default_profile_delta(w));
    let family = profile_family(w, std::slice::from_ref(&sd.x), delta)?;
    let disc = measure_compare(&mu, &nu, &family)?;
    let overlay = if want_overlay && config.d == 2 {
        Some(VoxelSet::overlay_svg(&gmask, &translate.intersection(&cluster)?, 4.0)?)
    } else {
        None
    };
    rec.outcome = Some(ShapeOutcome {
        best: report.best,
        x: sd.x,
        mismatch: sd.mismatch,
        distance: sd.value,
        evaluations: sd.evaluations,
        large_holes: holes.m(),
        small_hole_volume: holes.small_volume(),
        scaled_perimeter: enclosed.scaled_perimeter,
        discrepancy: disc.sup,
    });
    Ok((rec, overlay))
}

/// Symmetric-difference distance of the best candidate to the nearest
/// translate of the Wulff estimate, per scale.
pub fn run_shape_study(config: &ExperimentConfig) -> Result<ShapeStudy> {
    let calibration = calibrate(config)?;
    let ns = sorted_scales(config);
    let nmax = *ns.last().expect("validated nonempty");
    let out: Vec<(ShapeReplicate, Option<String>)> = jobs(config)
        .into_par_iter()
        .map(|(n, r)| shape_replicate(config, calibration.as_ref(), n, r, n == nmax))
        .collect::<Result<_>>()
        .map_err(|e| e.in_stage("shape"))?;
    let mut pairs = out;
    pairs.sort_by_key(|(r, _)| (r.n, r.replicate));
    let overlay_svg = pairs
        .iter()
        .find(|(r, o)| r.n == nmax && r.outcome.is_some() && o.is_some())
        .and_then(|(_, o)| o.clone());
    let replicates: Vec<ShapeReplicate> = pairs.into_iter().map(|(r, _)| r).collect();
    let summary: Vec<ShapeSummary> = ns
        .iter()
        .map(|&n| {
            let at: Vec<&ShapeReplicate> = replicates.iter().filter(|r| r.n == n).collect();
            let vals = sorted(at.iter().filter_map(|r| r.outcome.as_ref()).map(|o| o.distance).collect());
            let s = summarize(&vals);
            ShapeSummary {
                n,
                accepted: vals.len(),
                rejected: at.len() - vals.len(),
                median_distance: median(&vals).unwrap_or(f64::NAN),
                mean_distance: s.mean,
                ci_radius: s.ci_radius,
            }
        })
        .collect();
    let trend = Trend::of(
        &summary
            .iter()
            .filter(|s| s.accepted > 0)
            .map(|s| s.median_distance)
            .collect::<Vec<_>>(),
    );
    Ok(ShapeStudy {
        calibration,
        replicates,
        summary,
        trend,
        overlay_svg,
    })
}
