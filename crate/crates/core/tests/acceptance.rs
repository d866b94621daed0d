//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines always reach stdout.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use trackgnn::alloc::{
    allocate_data_aware, allocation_for, type_workloads, Allocation, Variant, Workload,
};
use trackgnn::dfsim::{
    calibrate, calibrated_cost_model, check_requirement, evaluate, min_fifo_depths,
    reference_free_params, reference_targets, simulate, sweep_pes, CalParam, CalTarget, CostModel,
    DfsimError, FifoConfig, FreeParam, SimConfig, Timing,
};
use trackgnn::geom::{partition, PairType};
use trackgnn::inet::{
    aggregate, aggregate_grouped, infer, infer_partitioned, InferConfig, ModelParams, ModelShape,
};
use trackgnn::synth::{generate, random_graph, Profile};
use trackgnn::{Fx, Matrix};

type Outcome = Result<String, String>;
type Criterion = (&'static str, &'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

const RAW_MIN: i64 = -(1 << 13);
const RAW_MAX: i64 = (1 << 13) - 1;

fn fx(raw: i64) -> Fx {
    Fx::from_raw(raw).unwrap()
}

/// Exact rational product, rounded to the nearest 2^-7 with ties to even,
/// clamped to the 14-bit range. Works in raw units throughout.
fn mul_oracle(a: i64, b: i64) -> i64 {
    let x = Ratio::new(a, 128) * Ratio::new(b, 128);
    let scaled = x * Ratio::from_integer(128);
    let floor = scaled.floor();
    let frac = scaled - floor;
    let half = Ratio::new(1, 2);
    let mut q = floor.to_integer();
    if frac > half || (frac == half && q % 2 != 0) {
        q += 1;
    }
    q.clamp(RAW_MIN, RAW_MAX)
}

fn add_oracle(a: i64, b: i64) -> i64 {
    let x = Ratio::new(a, 128) + Ratio::new(b, 128);
    (x * Ratio::from_integer(128))
        .to_integer()
        .clamp(RAW_MIN, RAW_MAX)
}

fn c1_fixed_point() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut checked = 0u64;
    // Every operand paired with the edge and near-edge values.
    let special = [
        RAW_MIN,
        RAW_MIN + 1,
        -8191,
        -4096,
        -129,
        -128,
        -127,
        -65,
        -64,
        -63,
        -2,
        -1,
        0,
        1,
        2,
        63,
        64,
        65,
        127,
        128,
        129,
        4096,
        RAW_MAX - 1,
        RAW_MAX,
    ];
    for &a in &special {
        for b in RAW_MIN..=RAW_MAX {
            let got = fx(a).saturating_mul(fx(b)).raw() as i64;
            ensure!(
                got == mul_oracle(a, b),
                "fx_mul({a}, {b}) = {got}, oracle {}",
                mul_oracle(a, b)
            );
            checked += 1;
        }
    }
    for _ in 0..10_000_000 {
        let (a, b) = (
            rng.gen_range(RAW_MIN..=RAW_MAX),
            rng.gen_range(RAW_MIN..=RAW_MAX),
        );
        let got = fx(a).saturating_mul(fx(b)).raw() as i64;
        ensure!(
            got == mul_oracle(a, b),
            "fx_mul({a}, {b}) = {got}, oracle {}",
            mul_oracle(a, b)
        );
        checked += 1;
    }
    for _ in 0..10_000_000 {
        let (a, b) = (
            rng.gen_range(RAW_MIN..=RAW_MAX),
            rng.gen_range(RAW_MIN..=RAW_MAX),
        );
        let got = fx(a).saturating_add(fx(b)).raw() as i64;
        ensure!(
            got == add_oracle(a, b),
            "fx_add({a}, {b}) = {got}, oracle {}",
            add_oracle(a, b)
        );
    }
    Ok(format!(
        "{checked} mul pairs and 10000000 add pairs, 0 mismatches"
    ))
}

fn c2_partition() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for i in 0..1000u64 {
        let n = rng.gen_range(10..=1000);
        let g = random_graph(1000 + i, n);
        let p = partition(&g).map_err(|e| e.to_string())?;
        ensure!(p.reassemble() == g, "graph {i}: reassembly differs");
        ensure!(
            p.node_groups().len() == 11,
            "graph {i}: {} node groups",
            p.node_groups().len()
        );
        ensure!(
            p.edge_groups().len() == 13,
            "graph {i}: {} edge groups",
            p.edge_groups().len()
        );
        let count = |t| {
            p.edge_groups()
                .iter()
                .filter(|e| e.pair.pair_type() == t)
                .count()
        };
        let types = [
            count(PairType::AA),
            count(PairType::AB),
            count(PairType::BB),
        ];
        ensure!(types == [3, 4, 6], "graph {i}: pair types {types:?}");
        let edges: usize = p.edge_groups().iter().map(|e| e.len()).sum();
        ensure!(edges == g.n_edges(), "graph {i}: edges lost");
    }
    Ok("1000 graphs reassembled bit-identically, 11/13 groups, types 3/4/6".into())
}

fn c3_partitioned_inference() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for i in 0..1000u64 {
        let g = random_graph(2000 + i, rng.gen_range(10..=1000));
        let params = ModelParams::random(&ModelShape::default(), &mut rng);
        let cfg = InferConfig {
            iterations: rng.gen_range(1..=3),
            ..InferConfig::default()
        };
        let p = partition(&g).map_err(|e| e.to_string())?;
        let whole: Vec<Fx> = infer(&g, &params, &cfg).map_err(|e| e.to_string())?;
        let parts: Vec<Fx> = infer_partitioned(&p, &params, &cfg).map_err(|e| e.to_string())?;
        ensure!(whole == parts, "graph {i}: partitioned scores differ");
    }
    Ok("1000 graphs, fixed-mode scores bit-identical".into())
}

fn oracle_sum(
    feats: &Matrix<Fx>,
    receivers: &[usize],
    keep: impl Fn(usize) -> bool,
    v: usize,
) -> Vec<Fx> {
    let mut acc = vec![Fx::ZERO; feats.cols()];
    for (e, &r) in receivers.iter().enumerate() {
        if r == v && keep(e) {
            for (a, &x) in acc.iter_mut().zip(feats.row(e)) {
                *a = a.saturating_add(x);
            }
        }
    }
    acc
}

fn c4_aggregation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let n = rng.gen_range(1..=120);
        let m = rng.gen_range(0..=600);
        let d = rng.gen_range(1..=6);
        // Half the instances use the full range so sums saturate often.
        let span = if i % 2 == 0 { 64 } else { RAW_MAX };
        let data: Vec<Fx> = (0..m * d)
            .map(|_| fx(rng.gen_range(-span..=span)))
            .collect();
        let feats = Matrix::from_vec(m, d, data).unwrap();
        let receivers: Vec<usize> = (0..m).map(|_| rng.gen_range(0..n)).collect();
        let n_groups = rng.gen_range(1..=13);
        let groups: Vec<usize> = (0..m).map(|_| rng.gen_range(0..n_groups)).collect();

        let flat = aggregate(&feats, &receivers, n).map_err(|e| e.to_string())?;
        let grouped = aggregate_grouped(&feats, &receivers, &groups, n_groups, n)
            .map_err(|e| e.to_string())?;
        for v in 0..n {
            ensure!(
                flat.row(v) == oracle_sum(&feats, &receivers, |_| true, v).as_slice(),
                "instance {i}: node {v} differs"
            );
            let mut two = vec![Fx::ZERO; d];
            for k in 0..n_groups {
                let part = oracle_sum(&feats, &receivers, |e| groups[e] == k, v);
                for (a, p) in two.iter_mut().zip(part) {
                    *a = a.saturating_add(p);
                }
            }
            ensure!(
                grouped.row(v) == two.as_slice(),
                "instance {i}: grouped node {v} differs"
            );
        }

        let real: Vec<f64> = (0..m * d).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let real = Matrix::from_vec(m, d, real).unwrap();
        let mut order: Vec<usize> = (0..m).collect();
        order.shuffle(&mut rng);
        let shuffled = real.select_rows(&order);
        let shuffled_recv: Vec<usize> = order.iter().map(|&e| receivers[e]).collect();
        let a = aggregate(&real, &receivers, n).map_err(|e| e.to_string())?;
        let b = aggregate(&shuffled, &shuffled_recv, n).map_err(|e| e.to_string())?;
        for v in 0..n {
            for (x, y) in a.row(v).iter().zip(b.row(v)) {
                worst = worst.max((x - y).abs());
            }
        }
    }
    ensure!(worst <= 1e-12, "real-mode reordering differs by {worst:e}");
    Ok(format!(
        "1000 instances bit-exact; real-mode reorder max diff {worst:.1e}"
    ))
}

fn c5_type_allocation() -> Outcome {
    let alloc = allocate_data_aware(&type_workloads([138, 62], [277, 77, 87]))
        .map_err(|e| e.to_string())?;
    let got = alloc.type_summary().ok_or("no type summary")?;
    ensure!(got == [2, 1, 4, 1, 1], "got {got:?}");
    Ok(format!("A,B,A-A,A-B,B-B = {got:?}"))
}

fn c6_throughput() -> Outcome {
    let rows = [
        (96, "0.480", "2.083", false),
        (85, "0.425", "2.352", true),
        (62, "0.310", "3.225", true),
    ];
    let mut out = Vec::new();
    for (cycles, us, mgps, pass) in rows {
        let t = Timing::new(0, cycles, 200.0);
        ensure!(
            t.interval_us_string() == us,
            "interval {} for {cycles}",
            t.interval_us_string()
        );
        ensure!(
            t.mgps_string() == mgps,
            "{} MGPS, expected {mgps}",
            t.mgps_string()
        );
        let c = check_requirement(&t);
        ensure!(c.pass == pass, "{mgps}: requirement pass = {}", c.pass);
        out.push(format!("{mgps}({})", if c.pass { "pass" } else { "fail" }));
    }
    Ok(out.join(" "))
}

fn c7a_calibration() -> Outcome {
    let all = reference_targets();
    let fit: Vec<CalTarget> = all
        .iter()
        .filter(|t| t.variant != Variant::GeoRsrc)
        .cloned()
        .collect();
    let base = SimConfig::default();
    let c = calibrate(&fit, &reference_free_params(), &CostModel::default(), &base)
        .map_err(|e| e.to_string())?;
    ensure!(
        c.cost == calibrated_cost_model(),
        "fit {:?} differs from the frozen constants",
        c.cost
    );
    let fits = evaluate(&all, &c.cost, &base);
    let rsrc = fits.iter().find(|f| f.variant == Variant::GeoRsrc).unwrap();
    let verdict = if rsrc.interval_error <= 0.20 {
        "meets"
    } else {
        "misses"
    };
    Ok(format!(
        "fit residual {:.3}; held-out MPA_geo_rsrc latency {}/{} ({:.1}%), interval {}/{} ({:.1}%), {verdict} the 20% target (reported, not asserted)",
        c.residual,
        rsrc.latency.unwrap_or(0),
        rsrc.target_latency,
        100.0 * rsrc.latency_error,
        rsrc.interval.unwrap_or(0),
        rsrc.target_interval,
        100.0 * rsrc.interval_error
    ))
}

fn c7b_round_trip() -> Outcome {
    let base = SimConfig::default();
    let mut truth = CostModel::default();
    CalParam::Width.set(&mut truth, 3);
    CalParam::Depth.set(&mut truth, 17);
    CalParam::Overhead.set(&mut truth, 6);
    let configs = [(Variant::Mpa, 4), (Variant::Geo, 1), (Variant::GeoRsrc, 2)];
    let mut targets = Vec::new();
    for (v, pes) in configs {
        let w = Workload::nominal(v);
        let alloc = allocation_for(v, &w, pes).map_err(|e| e.to_string())?;
        let cfg = SimConfig {
            cost: truth,
            ..base.clone()
        };
        let r = simulate(v, &alloc, &w, &cfg).map_err(|e| e.to_string())?;
        targets.push(CalTarget {
            name: format!("{}x{pes}", v.label()),
            variant: v,
            alloc,
            workload: w,
            latency_cycles: r.timing.latency_cycles,
            interval_cycles: r.timing.interval_cycles,
        });
    }
    let free = [
        FreeParam::range(CalParam::Width, 1, 8),
        FreeParam::range(CalParam::Depth, 1, 30),
        FreeParam::range(CalParam::Overhead, 0, 10),
    ];
    let c = calibrate(&targets, &free, &CostModel::default(), &base).map_err(|e| e.to_string())?;
    ensure!(c.exhaustive, "expected an exhaustive search");
    ensure!(c.residual == 0.0, "residual {}", c.residual);
    let same = free
        .iter()
        .all(|f| f.param.get(&c.cost) == f.param.get(&truth));
    Ok(format!(
        "{} evaluations, residual 0, parameters {}",
        c.evaluations,
        if same {
            "recovered exactly"
        } else {
            "differ but reproduce every target"
        }
    ))
}

fn c8_scaling() -> Outcome {
    let start = Instant::now();
    let cfg = SimConfig {
        cost: calibrated_cost_model(),
        ..SimConfig::default()
    };
    let pes: Vec<u32> = (1..=8).collect();
    let mut sweeps = Vec::new();
    for v in Variant::ALL {
        let pts = sweep_pes(v, &pes, &Workload::nominal(v), &cfg).map_err(|e| e.to_string())?;
        for w in pts.windows(2) {
            let (a, b) = (&w[0].report.timing, &w[1].report.timing);
            ensure!(
                b.interval_cycles <= a.interval_cycles,
                "{v}: interval rises at {} PEs",
                w[1].pes
            );
            ensure!(
                b.latency_cycles <= a.latency_cycles,
                "{v}: latency rises at {} PEs",
                w[1].pes
            );
        }
        sweeps.push(pts);
    }
    for (m, g) in sweeps[0].iter().zip(&sweeps[1]) {
        let (mb, gb) = (
            m.resources.max_pe_bram_equivalent,
            g.resources.max_pe_bram_equivalent,
        );
        ensure!(
            gb < mb,
            "at {} PEs geo per-PE node array {gb} not below flat {mb}",
            m.pes
        );
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    let first = &sweeps[1][0].report.timing;
    let last = &sweeps[1][7].report.timing;
    Ok(format!(
        "3 variants x 8 PE counts non-increasing (geo interval {} -> {} cycles); per-PE node array {:.3} vs {:.3} blocks",
        first.interval_cycles,
        last.interval_cycles,
        sweeps[1][0].resources.max_pe_bram_equivalent,
        sweeps[0][0].resources.max_pe_bram_equivalent
    ))
}

/// Largest graph-score deviation measured over the 100 graphs below.
const DEVIATION_BASELINE: f64 = 0.0165;

fn c9_deviation() -> Outcome {
    let cfg = InferConfig::default();
    let mut worst = 0.0f64;
    for seed in 0..100u64 {
        let g = generate(seed, &Profile::default()).map_err(|e| e.to_string())?;
        let params = ModelParams::random(&cfg.shape, &mut ChaCha8Rng::seed_from_u64(10_000 + seed));
        let f: Vec<Fx> = infer(&g, &params, &cfg).map_err(|e| e.to_string())?;
        let r: Vec<f64> = infer(&g, &params, &cfg).map_err(|e| e.to_string())?;
        for (a, b) in f.iter().zip(&r) {
            worst = worst.max((a.to_f64() - b).abs());
        }
    }
    ensure!(worst <= 0.05, "max deviation {worst:.4} above 0.05");
    ensure!(
        worst <= DEVIATION_BASELINE,
        "max deviation {worst:.4} regressed past baseline {DEVIATION_BASELINE}"
    );
    Ok(format!(
        "100 graphs, max |fixed - real| = {worst:.4} (bound 0.05, baseline {DEVIATION_BASELINE})"
    ))
}

fn interval(
    v: Variant,
    a: &Allocation,
    w: &Workload,
    cfg: &SimConfig,
    f: FifoConfig,
) -> Result<u64, DfsimError> {
    let c = SimConfig {
        fifos: f,
        ..cfg.clone()
    };
    simulate(v, a, w, &c).map(|r| r.timing.interval_cycles)
}

fn c10_fifo_search() -> Outcome {
    let start = Instant::now();
    let cfg = SimConfig {
        cost: calibrated_cost_model(),
        ..SimConfig::default()
    };
    let mut notes = Vec::new();
    for (v, pes) in [(Variant::Mpa, 8), (Variant::Geo, 1), (Variant::GeoRsrc, 1)] {
        let w = Workload::nominal(v);
        let a = allocation_for(v, &w, pes).map_err(|e| e.to_string())?;
        let free = interval(v, &a, &w, &cfg, FifoConfig::unbounded()).map_err(|e| e.to_string())?;
        let depths = min_fifo_depths(v, &a, &w, &cfg).map_err(|e| e.to_string())?;
        let got = interval(v, &a, &w, &cfg, depths.clone()).map_err(|e| e.to_string())?;
        ensure!(
            got == free,
            "{v}: interval {got} with searched depths, {free} unbounded"
        );
        let mut floor = 0;
        for (ch, &d) in &depths.depths {
            if d == 1 {
                floor += 1;
                continue;
            }
            let lower = depths.clone().with(ch.clone(), d - 1);
            match interval(v, &a, &w, &cfg, lower) {
                Err(DfsimError::Deadlock { .. }) => {}
                Ok(i) if i > free => {}
                Ok(i) => {
                    return Err(format!(
                        "{v}: {ch} at depth {} still gives interval {i}",
                        d - 1
                    ))
                }
                Err(e) => return Err(format!("{v}: {ch}: {e}")),
            }
        }
        let total: usize = depths.depths.values().sum();
        notes.push(format!(
            "{} {} channels/{} slots ({} at depth 1)",
            v.label(),
            depths.depths.len(),
            total,
            floor
        ));
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    Ok(format!("{}; every depth minimal", notes.join(", ")))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("1", "fixed-point oracle equivalence", c1_fixed_point),
        ("2", "partition losslessness and legality", c2_partition),
        (
            "3",
            "partitioned inference equivalence",
            c3_partitioned_inference,
        ),
        ("4", "aggregation brute-force oracle", c4_aggregation),
        (
            "5",
            "data-aware allocation of the reference group sizes",
            c5_type_allocation,
        ),
        (
            "6",
            "throughput arithmetic and requirement check",
            c6_throughput,
        ),
        (
            "7a",
            "calibration on the flat and uniform rows",
            c7a_calibration,
        ),
        (
            "7b",
            "calibration round trip on simulated targets",
            c7b_round_trip,
        ),
        (
            "8",
            "PE scaling monotonicity and node-array memory",
            c8_scaling,
        ),
        ("9", "quantization deviation bound", c9_deviation),
        ("10", "minimal deadlock-free FIFO depths", c10_fifo_search),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (id, name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|x| x == id) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {id:>2} PASS {name}: {detail} [{secs:.1} s]"),
            Err(why) => {
                failed += 1;
                println!("criterion {id:>2} FAIL {name}: {why} [{secs:.1} s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
