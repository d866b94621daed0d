//! Searches driven by the simulator: PE sweeps, minimal FIFO depths and
//! cost-model calibration.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    simulate, simulate_with_resources, CostModel, DfsimError, FifoConfig, SimConfig, SimReport,
    Stage, StageConfig,
};
use crate::alloc::{allocation_for, Allocation, ResourceEstimate, Variant, Workload};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub pes: u32,
    pub alloc: Allocation,
    pub report: SimReport,
    pub resources: ResourceEstimate,
}

/// One simulation and resource estimate per PE multiplier, in the order
/// given. See [`allocation_for`] for what a PE count means per variant.
pub fn sweep_pes(
    variant: Variant,
    pes: &[u32],
    w: &Workload,
    cfg: &SimConfig,
) -> Result<Vec<SweepPoint>, DfsimError> {
    if pes.is_empty() {
        return Err(DfsimError::Cost("empty PE range".into()));
    }
    pes.par_iter()
        .map(|&p| {
            let alloc = allocation_for(variant, w, p)?;
            let (report, resources) = simulate_with_resources(variant, &alloc, w, cfg)?;
            Ok(SweepPoint {
                pes: p,
                alloc,
                report,
                resources,
            })
        })
        .collect()
}

/// Smallest per-channel FIFO depths that keep the unbounded-FIFO interval.
///
/// Starts from the peak occupancies of an unbounded run, binary-searches
/// each channel in turn until a full pass changes nothing, then checks that
/// lowering any single depth by one deadlocks or slows the pipeline.
pub fn min_fifo_depths(
    variant: Variant,
    alloc: &Allocation,
    w: &Workload,
    cfg: &SimConfig,
) -> Result<FifoConfig, DfsimError> {
    let mut base = cfg.clone();
    base.fifos = FifoConfig::unbounded();
    let free = simulate(variant, alloc, w, &base)?;
    let target = free.timing.interval_cycles;
    let names: Vec<String> = free.fifos.iter().map(|f| f.channel.clone()).collect();
    let mut depths: Vec<usize> = free.fifos.iter().map(|f| f.peak.max(1)).collect();

    let config = |d: &[usize]| FifoConfig {
        default_depth: None,
        depths: names.iter().cloned().zip(d.iter().copied()).collect(),
    };
    let mut trial = base.clone();
    let mut ok = |d: &[usize]| {
        trial.fifos = config(d);
        matches!(simulate(variant, alloc, w, &trial), Ok(r) if r.timing.interval_cycles == target)
    };

    loop {
        let mut changed = false;
        for c in 0..depths.len() {
            let (mut lo, mut hi) = (1, depths[c]);
            while lo < hi {
                let mid = lo + (hi - lo) / 2;
                let mut d = depths.clone();
                d[c] = mid;
                if ok(&d) {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            if hi != depths[c] {
                depths[c] = hi;
                changed = true;
            }
        }
        if changed {
            continue;
        }
        let mut lowered = false;
        for c in 0..depths.len() {
            if depths[c] > 1 {
                let mut d = depths.clone();
                d[c] -= 1;
                if ok(&d) {
                    depths = d;
                    lowered = true;
                }
            }
        }
        if !lowered {
            break;
        }
    }
    Ok(config(&depths))
}

/// Cost-model constants the calibration may move. Each applies to every
/// stage it is meaningful for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalParam {
    Ii,
    Width,
    /// Pipeline depth of the three MLP stages.
    Depth,
    LoadWidth,
    Overhead,
    /// 0 or 1; see [`CostModel::drain`].
    Drain,
    Buffers,
}

impl CalParam {
    pub const ALL: [CalParam; 7] = [
        CalParam::Ii,
        CalParam::Width,
        CalParam::Depth,
        CalParam::LoadWidth,
        CalParam::Overhead,
        CalParam::Drain,
        CalParam::Buffers,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CalParam::Ii => "ii",
            CalParam::Width => "width",
            CalParam::Depth => "depth",
            CalParam::LoadWidth => "load_width",
            CalParam::Overhead => "overhead",
            CalParam::Drain => "drain",
            CalParam::Buffers => "buffers",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        CalParam::ALL.into_iter().find(|p| p.name() == s)
    }

    pub fn default_range(self) -> (u32, u32) {
        match self {
            CalParam::Ii => (1, 8),
            CalParam::Width => (1, 32),
            CalParam::Depth => (1, 128),
            CalParam::LoadWidth => (0, 128),
            CalParam::Overhead => (0, 256),
            CalParam::Drain => (0, 1),
            CalParam::Buffers => (1, 4),
        }
    }

    fn mlp_stages() -> [Stage; 3] {
        [Stage::Edge, Stage::Node, Stage::Classifier]
    }

    pub fn get(self, c: &CostModel) -> u32 {
        match self {
            CalParam::Ii => c.edge.ii,
            CalParam::Width => c.edge.width,
            CalParam::Depth => c.edge.depth,
            CalParam::LoadWidth => c.load_width,
            CalParam::Overhead => c.overhead,
            CalParam::Drain => c.drain as u32,
            CalParam::Buffers => c.buffers,
        }
    }

    pub fn set(self, c: &mut CostModel, v: u32) {
        match self {
            CalParam::Ii => Stage::ALL.iter().for_each(|&s| c.stage_mut(s).ii = v),
            CalParam::Width => Stage::ALL.iter().for_each(|&s| c.stage_mut(s).width = v),
            CalParam::Depth => CalParam::mlp_stages()
                .iter()
                .for_each(|&s| c.stage_mut(s).depth = v),
            CalParam::LoadWidth => c.load_width = v,
            CalParam::Overhead => c.overhead = v,
            CalParam::Drain => c.drain = v != 0,
            CalParam::Buffers => c.buffers = v,
        }
    }
}

impl fmt::Display for CalParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreeParam {
    pub param: CalParam,
    pub lo: u32,
    pub hi: u32,
}

impl FreeParam {
    pub fn new(param: CalParam) -> Self {
        let (lo, hi) = param.default_range();
        FreeParam { param, lo, hi }
    }

    pub fn range(param: CalParam, lo: u32, hi: u32) -> Self {
        FreeParam { param, lo, hi }
    }

    fn len(&self) -> u64 {
        (self.hi - self.lo) as u64 + 1
    }
}

/// A measured latency and interval for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalTarget {
    pub name: String,
    pub variant: Variant,
    pub alloc: Allocation,
    pub workload: Workload,
    pub latency_cycles: u64,
    pub interval_cycles: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetFit {
    pub name: String,
    pub variant: Variant,
    pub target_latency: u64,
    pub target_interval: u64,
    /// `None` if the simulation failed.
    pub latency: Option<u64>,
    pub interval: Option<u64>,
    pub latency_error: f64,
    pub interval_error: f64,
}

impl TargetFit {
    pub fn max_error(&self) -> f64 {
        self.latency_error.max(self.interval_error)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub cost: CostModel,
    /// Largest relative error over all targets, latency and interval.
    pub residual: f64,
    pub fits: Vec<TargetFit>,
    pub evaluations: u64,
    pub exhaustive: bool,
}

fn rel(sim: Option<u64>, target: u64) -> f64 {
    match sim {
        Some(s) => (s as f64 - target as f64).abs() / target.max(1) as f64,
        None => f64::INFINITY,
    }
}

/// Simulates every target under `cost`.
pub fn evaluate(targets: &[CalTarget], cost: &CostModel, base: &SimConfig) -> Vec<TargetFit> {
    let mut cfg = base.clone();
    cfg.cost = *cost;
    targets
        .iter()
        .map(|t| {
            let r = simulate(t.variant, &t.alloc, &t.workload, &cfg).ok();
            let latency = r.as_ref().map(|r| r.timing.latency_cycles);
            let interval = r.as_ref().map(|r| r.timing.interval_cycles);
            TargetFit {
                name: t.name.clone(),
                variant: t.variant,
                target_latency: t.latency_cycles,
                target_interval: t.interval_cycles,
                latency,
                interval,
                latency_error: rel(latency, t.latency_cycles),
                interval_error: rel(interval, t.interval_cycles),
            }
        })
        .collect()
}

/// (max error, summed error); smaller is better.
type Score = (f64, f64);

fn score(fits: &[TargetFit]) -> Score {
    let max = fits.iter().map(TargetFit::max_error).fold(0.0, f64::max);
    let sum = fits
        .iter()
        .map(|f| f.latency_error + f.interval_error)
        .sum();
    (max, sum)
}

fn better(a: Score, b: Score) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

/// Grid sizes up to this many points are searched exhaustively.
const GRID_LIMIT: u64 = 20_000;
/// Coarse grid points per parameter and descents started from it.
const COARSE: u64 = 6;
const SEEDS: usize = 4;

/// Fits up to four cost-model constants so that simulated latency and
/// interval match the targets, minimizing the largest relative error.
///
/// Small search spaces are enumerated; larger ones use coordinate descent
/// with exhaustive one-dimensional sweeps from several starting points.
/// The best fit is returned even when it misses the targets.
pub fn calibrate(
    targets: &[CalTarget],
    free: &[FreeParam],
    start: &CostModel,
    base: &SimConfig,
) -> Result<Calibration, DfsimError> {
    if targets.is_empty() {
        return Err(DfsimError::Calibration("no targets".into()));
    }
    if free.is_empty() || free.len() > 4 {
        return Err(DfsimError::Calibration(
            "between one and four free parameters are allowed".into(),
        ));
    }
    for (i, f) in free.iter().enumerate() {
        let (min, max) = match f.param {
            CalParam::LoadWidth | CalParam::Overhead => (0, u32::MAX),
            CalParam::Drain => (0, 1),
            _ => (1, u32::MAX),
        };
        if f.lo > f.hi || f.lo < min || f.hi > max {
            return Err(DfsimError::Calibration(format!(
                "bad range for {}",
                f.param
            )));
        }
        if free[..i].iter().any(|g| g.param == f.param) {
            return Err(DfsimError::Calibration(format!("{} listed twice", f.param)));
        }
    }
    start.check()?;

    let with = |values: &[u32]| {
        let mut c = *start;
        for (f, &v) in free.iter().zip(values) {
            f.param.set(&mut c, v);
        }
        c
    };
    let eval = |values: &[u32]| score(&evaluate(targets, &with(values), base));

    let grid: u64 = free.iter().map(FreeParam::len).product();
    let (best, evaluations, exhaustive) = if grid <= GRID_LIMIT {
        let points: Vec<Vec<u32>> = (0..grid)
            .map(|mut i| {
                free.iter()
                    .map(|f| {
                        let v = f.lo + (i % f.len()) as u32;
                        i /= f.len();
                        v
                    })
                    .collect()
            })
            .collect();
        let scores: Vec<Score> = points.par_iter().map(|p| eval(p)).collect();
        let mut best = 0;
        for i in 1..points.len() {
            if better(scores[i], scores[best]) {
                best = i;
            }
        }
        (points[best].clone(), grid, true)
    } else {
        // Seeds: the starting model plus the best points of a coarse grid.
        let clamp = |f: &FreeParam, v: u32| v.clamp(f.lo, f.hi);
        let coarse: Vec<Vec<u32>> = free
            .iter()
            .map(|f| {
                let mut v: Vec<u32> = (0..COARSE)
                    .map(|i| f.lo + ((f.hi - f.lo) as u64 * i / (COARSE - 1)) as u32)
                    .collect();
                v.dedup();
                v
            })
            .collect();
        let n_coarse: usize = coarse.iter().map(Vec::len).product();
        let points: Vec<Vec<u32>> = (0..n_coarse)
            .map(|mut i| {
                coarse
                    .iter()
                    .map(|vals| {
                        let v = vals[i % vals.len()];
                        i /= vals.len();
                        v
                    })
                    .collect()
            })
            .collect();
        let mut scored: Vec<(Score, Vec<u32>)> =
            points.par_iter().map(|p| (eval(p), p.clone())).collect();
        scored.sort_by(|a, b| {
            a.0 .0
                .total_cmp(&b.0 .0)
                .then(a.0 .1.total_cmp(&b.0 .1))
                .then(a.1.cmp(&b.1))
        });
        let mut starts: Vec<Vec<u32>> =
            vec![free.iter().map(|f| clamp(f, f.param.get(start))).collect()];
        starts.extend(scored.into_iter().take(SEEDS).map(|(_, p)| p));
        let mut evaluations = n_coarse as u64;
        let mut overall: Option<(Vec<u32>, Score)> = None;
        for mut cur in starts {
            let mut cur_score = eval(&cur);
            evaluations += 1;
            loop {
                let mut improved = false;
                for (k, f) in free.iter().enumerate() {
                    let values: Vec<u32> = (f.lo..=f.hi).collect();
                    let scores: Vec<Score> = values
                        .par_iter()
                        .map(|&v| {
                            let mut p = cur.clone();
                            p[k] = v;
                            eval(&p)
                        })
                        .collect();
                    evaluations += values.len() as u64;
                    for (&v, &s) in values.iter().zip(&scores) {
                        if better(s, cur_score) {
                            cur[k] = v;
                            cur_score = s;
                            improved = true;
                        }
                    }
                }
                if !improved {
                    break;
                }
            }
            if overall.as_ref().is_none_or(|(_, s)| better(cur_score, *s)) {
                overall = Some((cur, cur_score));
            }
        }
        (overall.expect("at least one start").0, evaluations, false)
    };
    let cost = with(&best);
    let fits = evaluate(targets, &cost, base);
    Ok(Calibration {
        residual: score(&fits).0,
        cost,
        fits,
        evaluations,
        exhaustive,
    })
}

/// The three measured rows: flat design with 8 PEs, one PE per group, and
/// the data-aware allocation, each on the nominal graph at 200 MHz.
pub fn reference_targets() -> Vec<CalTarget> {
    let rows = [
        (Variant::Mpa, 8, 633, 96),
        (Variant::Geo, 1, 538, 85),
        (Variant::GeoRsrc, 1, 414, 62),
    ];
    rows.iter()
        .map(|&(variant, pes, latency, interval)| {
            let workload = Workload::nominal(variant);
            CalTarget {
                name: variant.label().to_string(),
                variant,
                alloc: allocation_for(variant, &workload, pes)
                    .expect("nominal workload covers every group"),
                workload,
                latency_cycles: latency,
                interval_cycles: interval,
            }
        })
        .collect()
}

/// Free constants and ranges used to fit [`reference_targets`].
pub fn reference_free_params() -> Vec<FreeParam> {
    vec![
        FreeParam::new(CalParam::Width),
        FreeParam::range(CalParam::LoadWidth, 0, 64),
        FreeParam::range(CalParam::Depth, 1, 256),
        FreeParam::range(CalParam::Overhead, 0, 64),
    ]
}

/// Result of calibrating [`reference_free_params`] on the flat and uniform
/// geometric rows of [`reference_targets`], starting from the defaults.
pub fn calibrated_cost_model() -> CostModel {
    let mlp = StageConfig::new(1, 11, 152);
    CostModel {
        edge: mlp,
        aggregate: StageConfig::new(1, 11, 2),
        node: mlp,
        classifier: mlp,
        load_width: 9,
        overhead: 0,
        drain: false,
        buffers: 2,
    }
}
