//! Command-line front end.
//!
//! [`execute`] does the work and returns the files a command produces;
//! [`run`] also writes them to `--out` and prints the primary one.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::alloc::{
    allocate_by_type, allocation_for, estimate_resources, AllocError, Allocation, Variant, Workload,
};
use crate::dfsim::{
    calibrate, calibrated_cost_model, check_requirement, csv_row, evaluate, min_fifo_depths,
    reference_free_params, reference_targets, simulate_with_resources, sweep_pes, CalParam,
    CostModel, DfsimError, FifoConfig, FreeParam, SimConfig, TargetFit, CSV_HEADER, DEFAULT_GRAPHS,
};
use crate::geom::{self, validate, GeomError, HitGraph, ValidationReport};
use crate::inet::{self, InetError, InferConfig, Mode, ModelParams, ModelShape, Scores};
use crate::io::{self, IoError};
use crate::synth::{self, Profile, SynthError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_VALIDATION: i32 = 4;
pub const EXIT_REQUIREMENT: i32 = 5;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("invalid graph:\n{0}")]
    Invalid(ValidationReport),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Inet(#[from] InetError),
    #[error(transparent)]
    Alloc(#[from] AllocError),
    #[error(transparent)]
    Sim(#[from] DfsimError),
    #[error(transparent)]
    Synth(#[from] SynthError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io(IoError::File { .. }) => EXIT_OTHER,
            CliError::Io(_) => EXIT_PARSE,
            CliError::Invalid(_)
            | CliError::Geom(GeomError::Invalid(_))
            | CliError::Inet(InetError::Geom(GeomError::Invalid(_))) => EXIT_VALIDATION,
            _ => EXIT_OTHER,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Real,
    Fixed,
    Both,
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse().map_err(|e: AllocError| e.to_string())
}

#[derive(Debug, Clone, Parser)]
#[command(
    name = "trackgnn",
    version,
    about = "GNN edge-classifier inference and accelerator modelling"
)]
pub struct RunConfig {
    /// Seed for generated graphs and weights.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, default_value_t = crate::dfsim::DEFAULT_CLOCK_MHZ)]
    pub clock_mhz: f64,
    /// mpa, geo or geo-rsrc.
    #[arg(long, global = true, default_value = "geo-rsrc", value_parser = parse_variant)]
    pub variant: Variant,
    #[arg(long, global = true, value_enum, default_value_t = ModeArg::Both)]
    pub mode: ModeArg,
    /// Directory for output files; created if missing.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Check indices and layer pairs of a graph file.
    Validate { graph: PathBuf },
    /// Split a graph into layer and layer-pair groups.
    Partition { graph: PathBuf },
    /// Edge scores for a graph.
    Infer {
        graph: PathBuf,
        /// Weight file; random weights from --seed if omitted.
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        iterations: usize,
        #[arg(long, default_value_t = 8)]
        hidden_width: usize,
        #[arg(long, default_value_t = 2)]
        hidden_depth: usize,
        /// Run group by group on the partitioned graph.
        #[arg(long)]
        partitioned: bool,
    },
    /// PE allocation and resource estimate.
    Allocate {
        #[command(flatten)]
        load: LoadArgs,
        /// Type-level sizes A,B,A-A,A-B,B-B; prints the per-type PE counts.
        #[arg(long, value_delimiter = ',')]
        type_sizes: Option<Vec<usize>>,
    },
    /// Simulate one variant.
    Simulate {
        #[command(flatten)]
        load: LoadArgs,
        #[command(flatten)]
        sim: SimArgs,
        /// Uniform FIFO depth; unbounded if omitted.
        #[arg(long)]
        fifo_depth: Option<usize>,
        /// Per-channel depth, CHANNEL=N. Repeatable.
        #[arg(long = "fifo", value_name = "CHANNEL=N")]
        fifos: Vec<String>,
        /// Search the smallest FIFO depths keeping the unbounded interval.
        #[arg(long)]
        min_fifo: bool,
        /// Exit with the requirement code when throughput is too low.
        #[arg(long)]
        require: bool,
    },
    /// Simulate 1..=max-pes PE multiples.
    Sweep {
        #[command(flatten)]
        load: LoadArgs,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, default_value_t = 8)]
        max_pes: u32,
    },
    /// All three variants, slowest first.
    CompareVariants {
        #[command(flatten)]
        sim: SimArgs,
        /// Graph whose workload replaces the nominal one.
        #[arg(long)]
        graph: Option<PathBuf>,
    },
    /// Fit cost-model constants to the reference measurements.
    Calibrate {
        /// PARAM or PARAM=LO..HI. Defaults to the stock four.
        #[arg(long = "free", value_name = "PARAM[=LO..HI]")]
        free: Vec<String>,
        /// Variants fitted; the rest are predicted.
        #[arg(long, value_delimiter = ',', value_parser = parse_variant, default_value = "mpa,geo")]
        fit: Vec<Variant>,
    },
    /// Synthetic graph and random weights.
    Generate {
        /// Random profile with this many nodes instead of the nominal one.
        #[arg(long)]
        nodes: Option<usize>,
        #[arg(long, default_value_t = 1.7)]
        edge_factor: f64,
        /// Number of graphs; seeds count up from --seed.
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
}

#[derive(Debug, Clone, Args)]
pub struct LoadArgs {
    /// Graph whose workload replaces the nominal one.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// PE multiplier; defaults to 8 for mpa and 1 otherwise.
    #[arg(long)]
    pub pes: Option<u32>,
}

#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    /// Graphs streamed per run.
    #[arg(long, default_value_t = DEFAULT_GRAPHS)]
    pub graphs: usize,
    /// Use the stock cost model instead of the calibrated one.
    #[arg(long)]
    pub uncalibrated: bool,
}

/// Files a command produced, the primary one first, and its exit status.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub files: Vec<(String, String)>,
    pub status: i32,
}

impl Outcome {
    fn new(files: Vec<(String, String)>) -> Self {
        Outcome {
            files,
            status: EXIT_OK,
        }
    }

    pub fn file(&self, name: &str) -> Option<&str> {
        self.files
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| c.as_str())
    }
}

fn json(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn default_pes(v: Variant) -> u32 {
    if v == Variant::Mpa {
        8
    } else {
        1
    }
}

fn load_valid(path: &Path) -> Result<HitGraph, CliError> {
    let g = io::load_graph(path)?;
    let report = validate(&g);
    if !report.is_empty() {
        return Err(CliError::Invalid(report));
    }
    Ok(g)
}

fn workload(variant: Variant, graph: &Option<PathBuf>) -> Result<Workload, CliError> {
    Ok(match graph {
        Some(p) => Workload::from_graph(&load_valid(p)?, variant)?,
        None => Workload::nominal(variant),
    })
}

fn sim_config(cfg: &RunConfig, sim: &SimArgs) -> SimConfig {
    SimConfig {
        clock_mhz: cfg.clock_mhz,
        cost: if sim.uncalibrated {
            CostModel::default()
        } else {
            calibrated_cost_model()
        },
        graphs: sim.graphs,
        ..SimConfig::default()
    }
}

fn parse_fifos(depth: Option<usize>, specs: &[String]) -> Result<FifoConfig, CliError> {
    let mut f = depth.map_or_else(FifoConfig::unbounded, FifoConfig::uniform);
    for s in specs {
        let (ch, n) = s
            .rsplit_once('=')
            .ok_or_else(|| CliError::Usage(format!("--fifo expects CHANNEL=N, got {s:?}")))?;
        let n = n
            .parse()
            .map_err(|_| CliError::Usage(format!("bad FIFO depth in {s:?}")))?;
        f = f.with(ch, n);
    }
    Ok(f)
}

fn parse_free(s: &str) -> Result<FreeParam, CliError> {
    let bad = || CliError::Usage(format!("bad free parameter {s:?}"));
    let (name, range) = match s.split_once('=') {
        Some((n, r)) => (n, Some(r)),
        None => (s, None),
    };
    let p = CalParam::parse(name).ok_or_else(bad)?;
    Ok(match range {
        None => FreeParam::new(p),
        Some(r) => {
            let (lo, hi) = r.split_once("..").ok_or_else(bad)?;
            FreeParam::range(
                p,
                lo.parse().map_err(|_| bad())?,
                hi.parse().map_err(|_| bad())?,
            )
        }
    })
}

fn fx_score(s: &Scores, i: usize) -> Option<(i16, f64)> {
    match s {
        Scores::Fixed(v) => Some((v[i].raw(), v[i].to_f64())),
        Scores::Real(_) => None,
    }
}

#[derive(Serialize)]
struct DeviationSummary {
    edges: usize,
    max_abs_deviation: f64,
    mean_abs_deviation: f64,
}

fn infer_cmd(
    cfg: &RunConfig,
    graph: &Path,
    weights: &Option<PathBuf>,
    icfg: InferConfig,
    partitioned: bool,
) -> Result<Outcome, CliError> {
    let g = load_valid(graph)?;
    let params = match weights {
        Some(p) => io::load_weights(p)?,
        None => ModelParams::random(&icfg.shape, &mut ChaCha8Rng::seed_from_u64(cfg.seed)),
    };
    let modes: &[Mode] = match cfg.mode {
        ModeArg::Real => &[Mode::Real],
        ModeArg::Fixed => &[Mode::Fixed],
        ModeArg::Both => &[Mode::Fixed, Mode::Real],
    };
    let part = if partitioned {
        Some(geom::partition(&g)?)
    } else {
        None
    };
    let mut fixed = None;
    let mut real = None;
    for &mode in modes {
        let c = InferConfig { mode, ..icfg };
        let s = match &part {
            Some(p) => inet::run_partitioned(p, &params, &c)?,
            None => inet::run(&g, &params, &c)?,
        };
        match mode {
            Mode::Fixed => fixed = Some(s),
            Mode::Real => real = Some(s.to_f64()),
        }
    }
    let mut csv = String::from("edge,sender,receiver");
    if fixed.is_some() {
        csv.push_str(",fixed_raw,fixed");
    }
    if real.is_some() {
        csv.push_str(",real");
    }
    if fixed.is_some() && real.is_some() {
        csv.push_str(",abs_deviation");
    }
    csv.push('\n');
    let (mut max, mut sum) = (0.0f64, 0.0f64);
    for i in 0..g.n_edges() {
        write!(csv, "{i},{},{}", g.senders()[i], g.receivers()[i]).unwrap();
        let f = fixed.as_ref().and_then(|s| fx_score(s, i));
        if let Some((raw, v)) = f {
            write!(csv, ",{raw},{v:.7}").unwrap();
        }
        if let Some(r) = &real {
            write!(csv, ",{:.9}", r[i]).unwrap();
            if let Some((_, v)) = f {
                let d = (v - r[i]).abs();
                max = max.max(d);
                sum += d;
                write!(csv, ",{d:.9}").unwrap();
            }
        }
        csv.push('\n');
    }
    let mut files = vec![("scores.csv".to_string(), csv)];
    if cfg.mode == ModeArg::Both {
        let n = g.n_edges();
        let summary = DeviationSummary {
            edges: n,
            max_abs_deviation: max,
            mean_abs_deviation: if n == 0 { 0.0 } else { sum / n as f64 },
        };
        files.insert(0, ("deviation.json".into(), json(&summary)));
    }
    Ok(Outcome::new(files))
}

fn allocation_csv(w: &Workload, a: &Allocation) -> String {
    let mut s = String::from("stage,group,elements,pes\n");
    for (n, &p) in w.nodes.iter().zip(&a.node) {
        writeln!(s, "node,{},{},{p}", n.label, n.nodes).unwrap();
    }
    for (stage, pes) in [("edge", &a.edge), ("aggregate", &a.aggregate)] {
        for (e, &p) in w.edges.iter().zip(pes) {
            writeln!(s, "{stage},{},{},{p}", e.label, e.edges).unwrap();
        }
    }
    s
}

fn sim_rows(
    rows: &[(
        Variant,
        u32,
        crate::dfsim::Timing,
        crate::alloc::ResourceEstimate,
    )],
) -> String {
    let mut s = format!("{CSV_HEADER}\n");
    for (v, p, t, r) in rows {
        writeln!(s, "{}", csv_row(*v, *p, t, r)).unwrap();
    }
    s
}

fn fits_csv(fits: &[TargetFit], fitted: &[Variant]) -> String {
    let mut s = String::from(
        "target,role,target_latency,latency,latency_error,target_interval,interval,interval_error\n",
    );
    let opt = |v: Option<u64>| v.map_or("-".to_string(), |x| x.to_string());
    for f in fits {
        let role = if fitted.contains(&f.variant) {
            "fit"
        } else {
            "predicted"
        };
        writeln!(
            s,
            "{},{role},{},{},{:.4},{},{},{:.4}",
            f.name,
            f.target_latency,
            opt(f.latency),
            f.latency_error,
            f.target_interval,
            opt(f.interval),
            f.interval_error
        )
        .unwrap();
    }
    s
}

/// Runs a command without touching the file system beyond its inputs.
pub fn execute(cfg: &RunConfig) -> Result<Outcome, CliError> {
    if !(cfg.clock_mhz.is_finite() && cfg.clock_mhz > 0.0) {
        return Err(CliError::Usage("--clock-mhz must be positive".into()));
    }
    let variant = cfg.variant;
    match &cfg.command {
        Command::Validate { graph } => {
            let g = io::load_graph(graph)?;
            let report = validate(&g);
            let mut o = Outcome::new(vec![("validation.txt".into(), report.to_string())]);
            if !report.is_empty() {
                o.status = EXIT_VALIDATION;
            }
            Ok(o)
        }
        Command::Partition { graph } => {
            let g = load_valid(graph)?;
            let p = geom::partition(&g)?;
            if p.reassemble() != g {
                return Err(CliError::Usage("partition did not reassemble".into()));
            }
            let mut s = String::from("kind,group,type,elements,node_array\n");
            for ng in p.node_groups() {
                writeln!(
                    s,
                    "node,{},{},{},",
                    ng.layer,
                    ng.layer.node_type(),
                    ng.len()
                )
                .unwrap();
            }
            for (k, eg) in p.edge_groups().iter().enumerate() {
                let pair = eg.pair;
                writeln!(
                    s,
                    "edge,{},{},{},{}",
                    pair.label(),
                    pair.pair_type(),
                    eg.len(),
                    p.node_array_capacity(k)
                )
                .unwrap();
            }
            Ok(Outcome::new(vec![("partition.csv".into(), s)]))
        }
        Command::Infer {
            graph,
            weights,
            iterations,
            hidden_width,
            hidden_depth,
            partitioned,
        } => {
            let shape = ModelShape {
                hidden_width: *hidden_width,
                hidden_depth: *hidden_depth,
                ..ModelShape::default()
            };
            let icfg = InferConfig {
                shape,
                iterations: *iterations,
                mode: Mode::Fixed,
            };
            icfg.validate()?;
            infer_cmd(cfg, graph, weights, icfg, *partitioned)
        }
        Command::Allocate { load, type_sizes } => {
            if let Some(t) = type_sizes {
                if t.len() != 5 {
                    return Err(CliError::Usage("--type-sizes takes five counts".into()));
                }
                let r = allocate_by_type([t[0], t[1]], [t[2], t[3], t[4]]);
                let s = format!(
                    "A,B,A-A,A-B,B-B\n{},{},{},{},{}\n",
                    r[0], r[1], r[2], r[3], r[4]
                );
                return Ok(Outcome::new(vec![("type_allocation.csv".into(), s)]));
            }
            let w = workload(variant, &load.graph)?;
            let a = allocation_for(variant, &w, load.pes.unwrap_or(default_pes(variant)))?;
            let r = estimate_resources(&a, &w, &ModelShape::default(), &[])?;
            Ok(Outcome::new(vec![
                ("allocation.csv".into(), allocation_csv(&w, &a)),
                ("resources.json".into(), json(&r)),
            ]))
        }
        Command::Simulate {
            load,
            sim,
            fifo_depth,
            fifos,
            min_fifo,
            require,
        } => {
            let w = workload(variant, &load.graph)?;
            let pes = load.pes.unwrap_or(default_pes(variant));
            let a = allocation_for(variant, &w, pes)?;
            let mut sc = sim_config(cfg, sim);
            sc.fifos = parse_fifos(*fifo_depth, fifos)?;
            let mut files = Vec::new();
            if *min_fifo {
                sc.fifos = min_fifo_depths(variant, &a, &w, &sc)?;
            }
            let (report, res) = simulate_with_resources(variant, &a, &w, &sc)?;
            let check = check_requirement(&report.timing);
            files.push((
                "simulate.csv".into(),
                sim_rows(&[(variant, pes, report.timing, res.clone())]),
            ));
            if *min_fifo {
                let mut s = String::from("channel,depth,words\n");
                for f in &report.fifos {
                    writeln!(
                        s,
                        "{},{},{}",
                        f.channel,
                        f.depth.map_or("-".into(), |d| d.to_string()),
                        f.words
                    )
                    .unwrap();
                }
                files.push(("fifos.csv".into(), s));
            }
            #[derive(Serialize)]
            struct Full<'a> {
                report: &'a crate::dfsim::SimReport,
                resources: &'a crate::alloc::ResourceEstimate,
                requirement: crate::dfsim::RequirementCheck,
                allocation: &'a Allocation,
            }
            files.push((
                "report.json".into(),
                json(&Full {
                    report: &report,
                    resources: &res,
                    requirement: check,
                    allocation: &a,
                }),
            ));
            let mut o = Outcome::new(files);
            if *require && !check.pass {
                o.status = EXIT_REQUIREMENT;
            }
            Ok(o)
        }
        Command::Sweep { load, sim, max_pes } => {
            if load.pes.is_some() {
                return Err(CliError::Usage("sweep takes --max-pes, not --pes".into()));
            }
            if *max_pes == 0 {
                return Err(CliError::Usage("--max-pes must be at least 1".into()));
            }
            let w = workload(variant, &load.graph)?;
            let pes: Vec<u32> = (1..=*max_pes).collect();
            let pts = sweep_pes(variant, &pes, &w, &sim_config(cfg, sim))?;
            let rows: Vec<_> = pts
                .iter()
                .map(|p| (variant, p.pes, p.report.timing, p.resources.clone()))
                .collect();
            Ok(Outcome::new(vec![("sweep.csv".into(), sim_rows(&rows))]))
        }
        Command::CompareVariants { sim, graph } => {
            let sc = sim_config(cfg, sim);
            let mut rows = Vec::new();
            for v in Variant::ALL {
                let w = workload(v, graph)?;
                let pes = default_pes(v);
                let a = allocation_for(v, &w, pes)?;
                let (r, res) = simulate_with_resources(v, &a, &w, &sc)?;
                rows.push((v, pes, r.timing, res));
            }
            rows.sort_by_key(|r| std::cmp::Reverse(r.2.interval_cycles));
            Ok(Outcome::new(vec![("compare.csv".into(), sim_rows(&rows))]))
        }
        Command::Calibrate { free, fit } => {
            let free = if free.is_empty() {
                reference_free_params()
            } else {
                free.iter()
                    .map(|s| parse_free(s))
                    .collect::<Result<_, _>>()?
            };
            let all = reference_targets();
            let targets: Vec<_> = all
                .iter()
                .filter(|t| fit.contains(&t.variant))
                .cloned()
                .collect();
            let base = SimConfig {
                clock_mhz: cfg.clock_mhz,
                ..SimConfig::default()
            };
            let c = calibrate(&targets, &free, &CostModel::default(), &base)?;
            let fits = evaluate(&all, &c.cost, &base);
            #[derive(Serialize)]
            struct Full<'a> {
                calibration: &'a crate::dfsim::Calibration,
                all_targets: &'a [TargetFit],
            }
            Ok(Outcome::new(vec![
                ("calibration.csv".into(), fits_csv(&fits, fit)),
                (
                    "calibration.json".into(),
                    json(&Full {
                        calibration: &c,
                        all_targets: &fits,
                    }),
                ),
            ]))
        }
        Command::Generate {
            nodes,
            edge_factor,
            count,
        } => {
            if !(edge_factor.is_finite() && *edge_factor >= 0.0) {
                return Err(CliError::Usage("--edge-factor must be non-negative".into()));
            }
            let mut files = Vec::new();
            for i in 0..*count {
                let seed = cfg.seed + i as u64;
                let profile = match nodes {
                    Some(n) => {
                        Profile::random(*n, *edge_factor, &mut ChaCha8Rng::seed_from_u64(seed))
                    }
                    None => Profile::default(),
                };
                let g = synth::generate(seed, &profile)?;
                let name = if *count == 1 {
                    "graph.csv".to_string()
                } else {
                    format!("graph_{i:03}.csv")
                };
                files.push((name, io::format_graph(&g)));
            }
            let params = ModelParams::random(
                &ModelShape::default(),
                &mut ChaCha8Rng::seed_from_u64(cfg.seed),
            );
            files.push(("weights.json".into(), io::format_weights(&params)));
            Ok(Outcome::new(files))
        }
    }
}

/// Executes `cfg`, writes its files under `--out` and prints the primary
/// file, or the error. Returns the process exit code.
pub fn run(cfg: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let result = execute(cfg).and_then(|o| {
        if let Some(dir) = &cfg.out {
            std::fs::create_dir_all(dir).map_err(|source| IoError::File {
                path: dir.display().to_string(),
                source,
            })?;
            for (name, contents) in &o.files {
                io::write_file(&dir.join(name), contents)?;
            }
        }
        Ok(o)
    });
    match result {
        Ok(o) => {
            if let Some((_, primary)) = o.files.first() {
                let _ = stdout.write_all(primary.as_bytes());
            }
            if o.status == EXIT_REQUIREMENT {
                let _ = writeln!(stderr, "throughput requirement not met");
            }
            o.status
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
