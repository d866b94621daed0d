//! Cycle-approximate model of the streaming accelerator: Edgeblock,
//! Aggregate, Nodeblock and classifier stages joined by bounded FIFOs.
//!
//! The flat design is a chain of four units. The geometric designs get one
//! unit per group and stage:
//!
//! ```text
//! edge[s-r] -> aggregate[s-r] -> node[r] -> classifier[p] for every pair p touching r
//! ```
//!
//! `node[B1]` has no incoming aggregates and reads straight from the input.

pub mod engine;
mod search;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alloc::{
    estimate_resources, AllocError, Allocation, ResourceEstimate, Variant, Workload, BRAM_BITS,
};
use crate::fxp::WORD_BITS;
use crate::inet::ModelShape;

pub use engine::{ChannelSpec, Network, Outcome, UnitKind, UnitSpec};
pub use search::{
    calibrate, calibrated_cost_model, evaluate, min_fifo_depths, reference_free_params,
    reference_targets, sweep_pes, CalParam, CalTarget, Calibration, FreeParam, SweepPoint,
    TargetFit,
};

/// Throughput requirement in MGPS.
pub const REQUIRED_MGPS: f64 = 2.22;
pub const DEFAULT_CLOCK_MHZ: f64 = 200.0;
/// Graphs streamed per simulation.
pub const DEFAULT_GRAPHS: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DfsimError {
    #[error("deadlock at cycle {cycle}: {unit} blocked on channel {channel}")]
    Deadlock {
        cycle: u64,
        unit: String,
        channel: String,
    },
    #[error("invalid topology: {0}")]
    Topology(String),
    #[error("{0} has no processing elements")]
    NoPes(String),
    #[error("invalid FIFO configuration: {0}")]
    Fifo(String),
    #[error("workload does not fit the {0} architecture")]
    Workload(Variant),
    #[error("invalid cost model: {0}")]
    Cost(String),
    #[error("calibration: {0}")]
    Calibration(String),
    #[error(transparent)]
    Alloc(#[from] AllocError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Edge,
    Aggregate,
    Node,
    Classifier,
}

impl Stage {
    pub const ALL: [Stage; 4] = [
        Stage::Edge,
        Stage::Aggregate,
        Stage::Node,
        Stage::Classifier,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Edge => "edge",
            Stage::Aggregate => "aggregate",
            Stage::Node => "node",
            Stage::Classifier => "classifier",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-PE timing of one stage: a PE starts `width` elements every `ii`
/// cycles and each takes `depth` further cycles to come out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StageConfig {
    pub ii: u32,
    pub width: u32,
    pub depth: u32,
}

impl StageConfig {
    pub const fn new(ii: u32, width: u32, depth: u32) -> Self {
        StageConfig { ii, width, depth }
    }
}

/// Timing constants of the whole pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CostModel {
    pub edge: StageConfig,
    pub aggregate: StageConfig,
    pub node: StageConfig,
    pub classifier: StageConfig,
    /// Node features written into an Edgeblock node array per cycle before
    /// each graph; 0 leaves the load out of the model.
    pub load_width: u32,
    /// Fixed cycles every unit spends per graph.
    pub overhead: u32,
    /// Units finish one graph completely before starting the next.
    #[serde(default)]
    pub drain: bool,
    /// Graph buffers in each Aggregate and classifier unit.
    #[serde(default = "two")]
    pub buffers: u32,
}

fn two() -> u32 {
    2
}

impl CostModel {
    /// One element per cycle per PE; MLP stages take 4 cycles per layer.
    pub fn for_shape(shape: &ModelShape) -> Self {
        let mlp = StageConfig::new(1, 1, 4 * (shape.hidden_depth as u32 + 1));
        CostModel {
            edge: mlp,
            aggregate: StageConfig::new(1, 1, 2),
            node: mlp,
            classifier: mlp,
            load_width: 0,
            overhead: 0,
            drain: false,
            buffers: 2,
        }
    }

    pub fn stage(&self, s: Stage) -> &StageConfig {
        match s {
            Stage::Edge => &self.edge,
            Stage::Aggregate => &self.aggregate,
            Stage::Node => &self.node,
            Stage::Classifier => &self.classifier,
        }
    }

    pub fn stage_mut(&mut self, s: Stage) -> &mut StageConfig {
        match s {
            Stage::Edge => &mut self.edge,
            Stage::Aggregate => &mut self.aggregate,
            Stage::Node => &mut self.node,
            Stage::Classifier => &mut self.classifier,
        }
    }

    pub fn check(&self) -> Result<(), DfsimError> {
        for s in Stage::ALL {
            let c = self.stage(s);
            if c.ii == 0 || c.width == 0 || c.depth == 0 {
                return Err(DfsimError::Cost(format!(
                    "{s} stage needs ii, width and depth of at least 1"
                )));
            }
        }
        if self.buffers == 0 {
            return Err(DfsimError::Cost("at least one buffer is needed".into()));
        }
        Ok(())
    }

    fn load(&self, nodes: usize) -> u64 {
        match self.load_width {
            0 => 0,
            w => nodes.div_ceil(w as usize) as u64,
        }
    }
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel::for_shape(&ModelShape::default())
    }
}

/// FIFO depths by channel name, with a fallback for unnamed channels.
/// `None` means unbounded.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FifoConfig {
    pub default_depth: Option<usize>,
    #[serde(default)]
    pub depths: BTreeMap<String, usize>,
}

impl FifoConfig {
    pub fn unbounded() -> Self {
        FifoConfig::default()
    }

    pub fn uniform(depth: usize) -> Self {
        FifoConfig {
            default_depth: Some(depth),
            depths: BTreeMap::new(),
        }
    }

    pub fn with(mut self, channel: impl Into<String>, depth: usize) -> Self {
        self.depths.insert(channel.into(), depth);
        self
    }

    pub fn depth_for(&self, channel: &str) -> Option<usize> {
        self.depths.get(channel).copied().or(self.default_depth)
    }

    pub fn check(&self) -> Result<(), DfsimError> {
        if self.default_depth == Some(0) {
            return Err(DfsimError::Fifo("default depth must be at least 1".into()));
        }
        if let Some((name, _)) = self.depths.iter().find(|(_, &d)| d == 0) {
            return Err(DfsimError::Fifo(format!("channel {name} has depth 0")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub clock_mhz: f64,
    pub cost: CostModel,
    pub fifos: FifoConfig,
    pub graphs: usize,
    pub shape: ModelShape,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            clock_mhz: DEFAULT_CLOCK_MHZ,
            cost: CostModel::default(),
            fifos: FifoConfig::unbounded(),
            graphs: DEFAULT_GRAPHS,
            shape: ModelShape::default(),
        }
    }
}

/// Latency and graph interval in cycles at a clock frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub latency_cycles: u64,
    pub interval_cycles: u64,
    pub clock_mhz: f64,
}

/// `x` truncated to three decimals, as an integer count of thousandths.
fn thousandths(num: f64, den: f64) -> i64 {
    let q = num * 1000.0 / den;
    // Guard against the quotient landing a hair under an exact integer.
    let r = q.round();
    if (q - r).abs() < 1e-9 * r.abs().max(1.0) {
        r as i64
    } else {
        q.floor() as i64
    }
}

fn render_thousandths(v: i64) -> String {
    let sign = if v < 0 { "-" } else { "" };
    format!("{sign}{}.{:03}", v.abs() / 1000, v.abs() % 1000)
}

impl Timing {
    pub fn new(latency_cycles: u64, interval_cycles: u64, clock_mhz: f64) -> Self {
        Timing {
            latency_cycles,
            interval_cycles,
            clock_mhz,
        }
    }

    pub fn latency_us(&self) -> f64 {
        self.latency_cycles as f64 / self.clock_mhz
    }

    pub fn interval_us(&self) -> f64 {
        self.interval_cycles as f64 / self.clock_mhz
    }

    /// Million graphs per second: clock over interval.
    pub fn throughput_mgps(&self) -> f64 {
        self.clock_mhz / self.interval_cycles as f64
    }

    /// Throughput truncated to thousandths.
    pub fn mgps_thousandths(&self) -> i64 {
        thousandths(self.clock_mhz, self.interval_cycles as f64)
    }

    /// Throughput with three decimals, truncated.
    pub fn mgps_string(&self) -> String {
        render_thousandths(self.mgps_thousandths())
    }

    pub fn latency_us_string(&self) -> String {
        format!("{:.3}", self.latency_us())
    }

    pub fn interval_us_string(&self) -> String {
        format!("{:.3}", self.interval_us())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageStats {
    pub stage: Stage,
    pub units: usize,
    pub busy_cycles: u64,
    pub stall_cycles: u64,
    pub elements_in: u64,
    pub elements_out: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FifoStats {
    pub channel: String,
    pub depth: Option<usize>,
    pub peak: usize,
    pub words: usize,
}

impl FifoStats {
    /// Storage in bits: the configured depth, or the peak if unbounded.
    pub fn bits(&self) -> u64 {
        (self.depth.unwrap_or(self.peak) * self.words) as u64 * WORD_BITS as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub variant: Variant,
    pub timing: Timing,
    pub graph_done: Vec<u64>,
    pub stages: Vec<StageStats>,
    pub fifos: Vec<FifoStats>,
}

impl SimReport {
    fn from_outcome(variant: Variant, clock_mhz: f64, out: &Outcome) -> Self {
        let done = &out.done;
        let latency = done[0];
        // Averaged over the last two spacings: ping-pong buffers can make
        // consecutive spacings alternate.
        let g = done.len();
        let interval = match g {
            0 | 1 => latency,
            2 => done[1] - done[0],
            _ => (done[g - 1] - done[g - 3]).div_ceil(2),
        };
        let stages = Stage::ALL
            .iter()
            .filter_map(|&s| {
                let us: Vec<_> = out.units.iter().filter(|u| u.stage == s).collect();
                (!us.is_empty()).then(|| StageStats {
                    stage: s,
                    units: us.len(),
                    busy_cycles: us.iter().map(|u| u.busy).sum(),
                    stall_cycles: us.iter().map(|u| u.stall).sum(),
                    elements_in: us.iter().map(|u| u.tokens_in).sum(),
                    elements_out: us.iter().map(|u| u.tokens_out).sum(),
                })
            })
            .collect();
        let fifos = out
            .channels
            .iter()
            .map(|c| FifoStats {
                channel: c.name.clone(),
                depth: c.depth,
                peak: c.peak,
                words: c.words,
            })
            .collect();
        SimReport {
            variant,
            timing: Timing::new(latency, interval.max(1), clock_mhz),
            graph_done: done.clone(),
            stages,
            fifos,
        }
    }

    pub fn fifo_bits(&self) -> Vec<u64> {
        self.fifos.iter().map(FifoStats::bits).collect()
    }
}

/// Outcome of the throughput requirement check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RequirementCheck {
    pub pass: bool,
    pub throughput_mgps: f64,
    pub required_mgps: f64,
    /// Truncated throughput minus the requirement, in thousandths.
    pub margin_thousandths: i64,
}

impl RequirementCheck {
    pub fn margin_string(&self) -> String {
        render_thousandths(self.margin_thousandths)
    }
}

/// Passes when throughput is strictly above [`REQUIRED_MGPS`].
pub fn check_requirement(t: &Timing) -> RequirementCheck {
    let required_milli = (REQUIRED_MGPS * 1000.0).round() as i64;
    // clock / interval > 2.22  <=>  clock * 1000 > 2220 * interval
    let pass = t.clock_mhz * 1000.0 > required_milli as f64 * t.interval_cycles as f64;
    RequirementCheck {
        pass,
        throughput_mgps: t.throughput_mgps(),
        required_mgps: REQUIRED_MGPS,
        margin_thousandths: t.mgps_thousandths() - required_milli,
    }
}

fn ceil_log2(n: usize) -> u64 {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as u64
    }
}

fn unit(
    name: String,
    stage: Stage,
    kind: UnitKind,
    lanes: u32,
    cost: &CostModel,
    setup: u64,
) -> UnitSpec {
    UnitSpec {
        name,
        stage,
        kind,
        inputs: Vec::new(),
        outputs: Vec::new(),
        lanes,
        cost: *cost.stage(stage),
        setup: setup + cost.overhead as u64,
        drain: cost.drain,
    }
}

/// Builds the unit network of a variant.
pub fn build_network(
    variant: Variant,
    alloc: &Allocation,
    w: &Workload,
    cost: &CostModel,
    fifos: &FifoConfig,
    shape: &ModelShape,
) -> Result<Network, DfsimError> {
    cost.check()?;
    fifos.check()?;
    w.check()?;
    if variant.is_geometric() != w.is_geometric()
        || (!variant.is_geometric() && (w.nodes.len() != 1 || w.edges.len() != 1))
    {
        return Err(DfsimError::Workload(variant));
    }
    if !alloc.matches(w) {
        return Err(AllocError::Structure(
            "allocation does not match the workload's groups".into(),
        )
        .into());
    }
    let mut net = Network::default();
    let channel = |net: &mut Network, from: &str, to: &str, words: usize| {
        let name = format!("{from}->{to}");
        let depth = fifos.depth_for(&name);
        net.add_channel(name, depth, words)
    };
    let tag = |base: &str, label: &str| {
        if variant.is_geometric() {
            format!("{base}[{label}]")
        } else {
            base.to_string()
        }
    };

    let node_names: Vec<String> = w.nodes.iter().map(|n| tag("node", &n.label)).collect();
    let mut node_units: Vec<UnitSpec> = w
        .nodes
        .iter()
        .zip(&node_names)
        .zip(&alloc.node)
        .map(|((n, name), &pes)| {
            unit(
                name.clone(),
                Stage::Node,
                UnitKind::Map { items: n.nodes },
                pes,
                cost,
                0,
            )
        })
        .collect();
    let mut edge_side = Vec::new();
    let mut classifiers = Vec::new();
    for (k, e) in w.edges.iter().enumerate() {
        let (s, r) = (w.nodes[e.sender].nodes, w.nodes[e.receiver].nodes);
        let array = if e.sender == e.receiver { s } else { s + r };
        let edge_name = tag("edge", &e.label);
        let agg_name = tag("aggregate", &e.label);
        let cls_name = tag("classifier", &e.label);
        let mut eu = unit(
            edge_name.clone(),
            Stage::Edge,
            UnitKind::Map { items: e.edges },
            alloc.edge[k],
            cost,
            cost.load(array),
        );
        let mut au = unit(
            agg_name.clone(),
            Stage::Aggregate,
            UnitKind::Barrier {
                ingest: vec![e.edges],
                emit: r,
                epilogue: ceil_log2(e.max_in_degree),
                ingest_depth: cost.aggregate.depth,
                buffers: cost.buffers as usize,
            },
            alloc.aggregate[k],
            cost,
            0,
        );
        let ea = channel(&mut net, &edge_name, &agg_name, shape.d_edge);
        eu.outputs.push(ea);
        au.inputs.push(ea);
        let an = channel(&mut net, &agg_name, &node_names[e.receiver], shape.d_edge);
        au.outputs.push(an);
        node_units[e.receiver].inputs.push(an);

        let ingest = if e.sender == e.receiver {
            vec![s]
        } else {
            vec![s, r]
        };
        let mut cu = unit(
            cls_name.clone(),
            Stage::Classifier,
            // Filling the node arrays is a plain memory write.
            UnitKind::Barrier {
                ingest,
                emit: e.edges,
                epilogue: 0,
                ingest_depth: 1,
                buffers: cost.buffers as usize,
            },
            alloc.edge[k],
            cost,
            0,
        );
        let ends: &[usize] = if e.sender == e.receiver {
            &[e.sender]
        } else {
            &[e.sender, e.receiver]
        };
        for &g in ends {
            let c = channel(&mut net, &node_names[g], &cls_name, shape.d_node);
            node_units[g].outputs.push(c);
            cu.inputs.push(c);
        }
        edge_side.push(eu);
        edge_side.push(au);
        classifiers.push(cu);
    }
    for u in edge_side.into_iter().chain(node_units).chain(classifiers) {
        net.add_unit(u);
    }
    net.check()?;
    Ok(net)
}

/// Streams `cfg.graphs` graphs back to back through the variant's pipeline.
/// Latency is the completion cycle of the first graph; the interval is the
/// spacing between the last two completions.
pub fn simulate(
    variant: Variant,
    alloc: &Allocation,
    w: &Workload,
    cfg: &SimConfig,
) -> Result<SimReport, DfsimError> {
    if !(cfg.clock_mhz.is_finite() && cfg.clock_mhz > 0.0) {
        return Err(DfsimError::Cost("clock must be positive".into()));
    }
    if cfg.graphs < 2 {
        return Err(DfsimError::Cost(
            "at least two graphs are needed to measure an interval".into(),
        ));
    }
    let net = build_network(variant, alloc, w, &cfg.cost, &cfg.fifos, &cfg.shape)?;
    let out = engine::run(&net, cfg.graphs)?;
    Ok(SimReport::from_outcome(variant, cfg.clock_mhz, &out))
}

/// Simulation plus the matching resource estimate.
pub fn simulate_with_resources(
    variant: Variant,
    alloc: &Allocation,
    w: &Workload,
    cfg: &SimConfig,
) -> Result<(SimReport, ResourceEstimate), DfsimError> {
    let report = simulate(variant, alloc, w, cfg)?;
    let res = estimate_resources(alloc, w, &cfg.shape, &report.fifo_bits())?;
    Ok((report, res))
}

pub const CSV_HEADER: &str = "variant,pes,latency_cycles,interval_cycles,latency_us,interval_us,mgps,meets_requirement,\
node_array_brams,fifo_brams,brams,max_pe_node_array_bits,max_pe_bram_equivalent,multipliers,register_bits";

/// One report row; see [`CSV_HEADER`].
pub fn csv_row(variant: Variant, pes: u32, t: &Timing, r: &ResourceEstimate) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{:.4},{},{}",
        variant.label(),
        pes,
        t.latency_cycles,
        t.interval_cycles,
        t.latency_us_string(),
        t.interval_us_string(),
        t.mgps_string(),
        check_requirement(t).pass,
        r.node_array_brams,
        r.fifo_brams,
        r.brams,
        r.max_pe_node_array_bits,
        r.max_pe_bram_equivalent,
        r.multipliers,
        r.register_bits,
    )
}

/// Block memories a node array of `bits` occupies, as a fraction.
pub fn bram_fraction(bits: u64) -> f64 {
    bits as f64 / BRAM_BITS as f64
}
