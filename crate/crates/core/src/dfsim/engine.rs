//! Cycle-stepped simulation of a network of pipelined units joined by
//! bounded FIFOs.
//!
//! Timing rules:
//!
//! * A unit issues a bundle of up to `lanes * width` tokens every `ii`
//!   cycles. A bundle issued at cycle `t` is visible downstream at
//!   `t + ii + depth`.
//! * A token pushed during cycle `t` can be popped from cycle `t + 1`.
//!   Free space is judged against the occupancy at the start of the cycle,
//!   so a pop frees its slot one cycle later.
//! * When the oldest finished bundle cannot be written because an output
//!   is full, the whole pipeline of that unit freezes for the cycle and
//!   nothing new issues.
//! * A unit with `drain` set starts a graph only once its pipeline is
//!   empty, so consecutive graphs do not overlap inside it.
//! * A graph with no elements still sends one marker token through every
//!   channel, so stages stay in step.
//!
//! Cycles in which nothing changes are skipped up to the next timer; if
//! there is no timer left the network is deadlocked.

use std::collections::VecDeque;

use super::{DfsimError, Stage, StageConfig};

pub type ChannelId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelSpec {
    pub name: String,
    /// `None` is unbounded.
    pub depth: Option<usize>,
    /// 14-bit words per token.
    pub words: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UnitKind {
    /// Joins one token from every input into one token on every output.
    /// Without inputs the unit is a source.
    Map { items: usize },
    /// Ingests each input completely into one of `buffers` buffers, then
    /// emits `emit` tokens from it while the next buffer fills. Ingest uses
    /// `ingest_depth` in place of the unit's pipeline depth.
    Barrier {
        ingest: Vec<usize>,
        emit: usize,
        epilogue: u64,
        ingest_depth: u32,
        buffers: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitSpec {
    pub name: String,
    pub stage: Stage,
    pub kind: UnitKind,
    pub inputs: Vec<ChannelId>,
    /// No outputs means the unit feeds the sink.
    pub outputs: Vec<ChannelId>,
    pub lanes: u32,
    pub cost: StageConfig,
    /// Cycles spent before the first issue of every graph.
    pub setup: u64,
    /// Wait for the pipeline to empty before starting the next graph.
    pub drain: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Network {
    pub channels: Vec<ChannelSpec>,
    pub units: Vec<UnitSpec>,
}

/// Tokens per graph for `n` elements.
pub fn tokens(n: usize) -> usize {
    n.max(1)
}

impl Network {
    pub fn add_channel(
        &mut self,
        name: impl Into<String>,
        depth: Option<usize>,
        words: usize,
    ) -> ChannelId {
        self.channels.push(ChannelSpec {
            name: name.into(),
            depth,
            words,
        });
        self.channels.len() - 1
    }

    pub fn add_unit(&mut self, unit: UnitSpec) -> usize {
        self.units.push(unit);
        self.units.len() - 1
    }

    pub fn channel_id(&self, name: &str) -> Option<ChannelId> {
        self.channels.iter().position(|c| c.name == name)
    }

    fn produced(&self, u: &UnitSpec) -> usize {
        match &u.kind {
            UnitKind::Map { items } => tokens(*items),
            UnitKind::Barrier { emit, .. } => tokens(*emit),
        }
    }

    /// Every channel needs exactly one producer and one consumer that agree
    /// on the tokens per graph.
    pub fn check(&self) -> Result<(), DfsimError> {
        let topo = |m: String| Err(DfsimError::Topology(m));
        let mut producer = vec![None; self.channels.len()];
        let mut consumer = vec![None; self.channels.len()];
        for (i, u) in self.units.iter().enumerate() {
            if u.lanes == 0 {
                return Err(DfsimError::NoPes(u.name.clone()));
            }
            let c = &u.cost;
            if c.ii == 0 || c.width == 0 || c.depth == 0 {
                return topo(format!(
                    "{}: ii, width and depth must be at least 1",
                    u.name
                ));
            }
            for &ch in u.inputs.iter().chain(&u.outputs) {
                if ch >= self.channels.len() {
                    return topo(format!("{} references unknown channel {ch}", u.name));
                }
            }
            if let UnitKind::Barrier {
                ingest,
                ingest_depth,
                buffers,
                ..
            } = &u.kind
            {
                if ingest.len() != u.inputs.len() || u.inputs.is_empty() {
                    return topo(format!(
                        "{}: a barrier needs one ingest count per input",
                        u.name
                    ));
                }
                if *ingest_depth == 0 || *buffers == 0 {
                    return topo(format!(
                        "{}: ingest depth and buffer count must be at least 1",
                        u.name
                    ));
                }
            }
            for &ch in &u.outputs {
                if producer[ch].replace(i).is_some() {
                    return topo(format!(
                        "channel {} has two producers",
                        self.channels[ch].name
                    ));
                }
            }
            for (k, &ch) in u.inputs.iter().enumerate() {
                if consumer[ch].replace((i, k)).is_some() {
                    return topo(format!(
                        "channel {} has two consumers",
                        self.channels[ch].name
                    ));
                }
            }
        }
        for (ch, spec) in self.channels.iter().enumerate() {
            if spec.depth == Some(0) {
                return Err(DfsimError::Fifo(format!(
                    "channel {} has depth 0",
                    spec.name
                )));
            }
            let (Some(p), Some((c, k))) = (producer[ch], consumer[ch]) else {
                return topo(format!(
                    "channel {} is not connected at both ends",
                    spec.name
                ));
            };
            let sent = self.produced(&self.units[p]);
            let expected = match &self.units[c].kind {
                UnitKind::Map { items } => tokens(*items),
                UnitKind::Barrier { ingest, .. } => tokens(ingest[k]),
            };
            if sent != expected {
                return topo(format!(
                    "channel {} carries {sent} tokens per graph but {expected} are expected",
                    spec.name
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitStats {
    pub name: String,
    pub stage: Stage,
    /// Issue slots used, in cycles.
    pub busy: u64,
    /// Cycles frozen on a full output.
    pub stall: u64,
    pub tokens_in: u64,
    pub tokens_out: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelStats {
    pub name: String,
    pub depth: Option<usize>,
    pub words: usize,
    pub peak: usize,
    pub pushed: u64,
    pub popped: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    /// Cycle at which the last token of each graph reached the sink.
    pub done: Vec<u64>,
    pub units: Vec<UnitStats>,
    pub channels: Vec<ChannelStats>,
}

struct Chan {
    cap: usize,
    occ: usize,
    incoming: usize,
    popped: usize,
    peak: usize,
    pushed_total: u64,
    popped_total: u64,
}

impl Chan {
    fn visible(&self) -> usize {
        self.occ - self.popped
    }

    fn space(&self) -> usize {
        self.cap.saturating_sub(self.occ + self.incoming)
    }
}

#[derive(Clone, Copy)]
struct Bundle {
    ready: u64,
    n: usize,
    graph: usize,
    last: bool,
}

struct Pipe {
    cap: usize,
    ii: u64,
    latency: u64,
    inflight: VecDeque<Bundle>,
    next_issue: u64,
    frozen: bool,
}

impl Pipe {
    fn new(lanes: u32, cost: &StageConfig) -> Self {
        Pipe {
            cap: lanes as usize * cost.width as usize,
            ii: cost.ii as u64,
            latency: cost.ii as u64 + cost.depth as u64,
            inflight: VecDeque::new(),
            next_issue: 0,
            frozen: false,
        }
    }

    fn issue(&mut self, t: u64, n: usize, graph: usize, last: bool) {
        self.inflight.push_back(Bundle {
            ready: t + self.latency,
            n,
            graph,
            last,
        });
        self.next_issue = t + self.ii;
    }

    /// Retire cycle of the oldest bundle.
    fn retire_at(&self) -> Option<u64> {
        self.inflight.front().map(|b| b.ready - 1)
    }

    fn freeze(&mut self, cycles: u64) {
        for b in &mut self.inflight {
            b.ready += cycles;
        }
    }
}

enum State {
    Map {
        pipe: Pipe,
        graph: usize,
        remaining: usize,
    },
    Barrier {
        ingest: Pipe,
        emit: Pipe,
        in_graph: usize,
        in_active: bool,
        in_remaining: Vec<usize>,
        buffers: usize,
        filled: VecDeque<u64>,
        out_graph: usize,
        out_active: bool,
        out_remaining: usize,
    },
}

struct Sim<'a> {
    net: &'a Network,
    graphs: usize,
    chans: Vec<Chan>,
    states: Vec<State>,
    stats: Vec<UnitStats>,
    done: Vec<u64>,
    progress: bool,
}

/// Writes the oldest finished bundles of `pipe` to `outputs`, freezing the
/// pipe if one of them is full. Returns the graphs whose last bundle left.
fn retire(
    t: u64,
    pipe: &mut Pipe,
    outputs: &[ChannelId],
    chans: &mut [Chan],
    stats: &mut UnitStats,
    progress: &mut bool,
    finished: &mut Vec<usize>,
) {
    pipe.frozen = false;
    while let Some(b) = pipe.inflight.front().copied() {
        if b.ready > t + 1 {
            break;
        }
        if outputs.iter().any(|&c| chans[c].space() < b.n) {
            pipe.frozen = true;
            pipe.freeze(1);
            break;
        }
        for &c in outputs {
            chans[c].incoming += b.n;
            chans[c].pushed_total += b.n as u64;
        }
        stats.tokens_out += b.n as u64;
        pipe.inflight.pop_front();
        *progress = true;
        if b.last {
            finished.push(b.graph);
        }
    }
}

fn out_cap(outputs: &[ChannelId], chans: &[Chan]) -> usize {
    outputs
        .iter()
        .map(|&c| chans[c].cap)
        .min()
        .unwrap_or(usize::MAX)
}

impl<'a> Sim<'a> {
    fn new(net: &'a Network, graphs: usize) -> Self {
        let chans = net
            .channels
            .iter()
            .map(|c| Chan {
                cap: c.depth.unwrap_or(usize::MAX),
                occ: 0,
                incoming: 0,
                popped: 0,
                peak: 0,
                pushed_total: 0,
                popped_total: 0,
            })
            .collect();
        let states = net
            .units
            .iter()
            .map(|u| match &u.kind {
                UnitKind::Map { items } => {
                    let mut pipe = Pipe::new(u.lanes, &u.cost);
                    pipe.next_issue = u.setup;
                    State::Map {
                        pipe,
                        graph: 0,
                        remaining: tokens(*items),
                    }
                }
                UnitKind::Barrier {
                    ingest,
                    ingest_depth,
                    ..
                } => State::Barrier {
                    ingest: Pipe::new(
                        u.lanes,
                        &StageConfig {
                            depth: *ingest_depth,
                            ..u.cost
                        },
                    ),
                    emit: Pipe::new(u.lanes, &u.cost),
                    in_graph: 0,
                    in_active: false,
                    in_remaining: vec![0; ingest.len()],
                    buffers: 0,
                    filled: VecDeque::new(),
                    out_graph: 0,
                    out_active: false,
                    out_remaining: 0,
                },
            })
            .collect();
        let stats = net
            .units
            .iter()
            .map(|u| UnitStats {
                name: u.name.clone(),
                stage: u.stage,
                busy: 0,
                stall: 0,
                tokens_in: 0,
                tokens_out: 0,
            })
            .collect();
        Sim {
            net,
            graphs,
            chans,
            states,
            stats,
            done: vec![0; graphs],
            progress: false,
        }
    }

    fn record_sink(&mut self, unit: usize, t: u64, finished: &[usize]) {
        if self.net.units[unit].outputs.is_empty() {
            for &g in finished {
                self.done[g] = self.done[g].max(t + 1);
            }
        }
    }

    fn retire_all(&mut self, t: u64) {
        let mut finished = Vec::new();
        for i in 0..self.states.len() {
            let spec = &self.net.units[i];
            finished.clear();
            match &mut self.states[i] {
                State::Map { pipe, .. } => {
                    retire(
                        t,
                        pipe,
                        &spec.outputs,
                        &mut self.chans,
                        &mut self.stats[i],
                        &mut self.progress,
                        &mut finished,
                    );
                    if pipe.frozen {
                        self.stats[i].stall += 1;
                    }
                }
                State::Barrier {
                    ingest,
                    emit,
                    filled,
                    buffers,
                    ..
                } => {
                    let UnitKind::Barrier { epilogue, .. } = spec.kind else {
                        unreachable!()
                    };
                    while let Some(b) = ingest.inflight.front().copied() {
                        if b.ready > t + 1 {
                            break;
                        }
                        ingest.inflight.pop_front();
                        self.progress = true;
                        if b.last {
                            filled.push_back(b.ready + epilogue);
                        }
                    }
                    retire(
                        t,
                        emit,
                        &spec.outputs,
                        &mut self.chans,
                        &mut self.stats[i],
                        &mut self.progress,
                        &mut finished,
                    );
                    if emit.frozen {
                        self.stats[i].stall += 1;
                    }
                    *buffers -= finished.len();
                }
            }
            if !finished.is_empty() {
                self.record_sink(i, t, &finished);
            }
        }
    }

    fn issue_all(&mut self, t: u64) {
        for i in 0..self.states.len() {
            let spec = &self.net.units[i];
            let stats = &mut self.stats[i];
            let chans = &mut self.chans;
            match &mut self.states[i] {
                State::Map {
                    pipe,
                    graph,
                    remaining,
                } => {
                    if pipe.frozen || *graph >= self.graphs || t < pipe.next_issue {
                        continue;
                    }
                    let UnitKind::Map { items } = spec.kind else {
                        unreachable!()
                    };
                    if spec.drain && *remaining == tokens(items) && !pipe.inflight.is_empty() {
                        continue;
                    }
                    let mut b = pipe.cap.min(*remaining).min(out_cap(&spec.outputs, chans));
                    for &c in &spec.inputs {
                        b = b.min(chans[c].visible());
                    }
                    if b == 0 {
                        continue;
                    }
                    for &c in &spec.inputs {
                        chans[c].popped += b;
                        chans[c].popped_total += b as u64;
                        stats.tokens_in += b as u64;
                    }
                    *remaining -= b;
                    let last = *remaining == 0;
                    pipe.issue(t, b, *graph, last);
                    stats.busy += pipe.ii;
                    self.progress = true;
                    if last {
                        *graph += 1;
                        *remaining = tokens(items);
                        pipe.next_issue += spec.setup;
                    }
                }
                State::Barrier {
                    ingest,
                    emit,
                    in_graph,
                    in_active,
                    in_remaining,
                    buffers,
                    filled,
                    out_graph,
                    out_active,
                    out_remaining,
                } => {
                    let UnitKind::Barrier {
                        ingest: counts,
                        emit: emit_count,
                        buffers: max_buffers,
                        ..
                    } = &spec.kind
                    else {
                        unreachable!()
                    };
                    if !*in_active
                        && *in_graph < self.graphs
                        && *buffers < *max_buffers
                        && (!spec.drain || ingest.inflight.is_empty())
                    {
                        *in_active = true;
                        *buffers += 1;
                        for (r, &n) in in_remaining.iter_mut().zip(counts) {
                            *r = tokens(n);
                        }
                        ingest.next_issue = ingest.next_issue.max(t + spec.setup);
                        self.progress = true;
                    }
                    if *in_active && t >= ingest.next_issue {
                        let mut total = 0;
                        for (k, &c) in spec.inputs.iter().enumerate() {
                            let b = ingest.cap.min(in_remaining[k]).min(chans[c].visible());
                            chans[c].popped += b;
                            chans[c].popped_total += b as u64;
                            in_remaining[k] -= b;
                            total += b;
                        }
                        if total > 0 {
                            stats.tokens_in += total as u64;
                            let last = in_remaining.iter().all(|&r| r == 0);
                            ingest.issue(t, total, *in_graph, last);
                            stats.busy += ingest.ii;
                            self.progress = true;
                            if last {
                                *in_active = false;
                                *in_graph += 1;
                            }
                        }
                    }
                    if !*out_active
                        && *out_graph < self.graphs
                        && filled.front().is_some_and(|&r| r <= t)
                        && (!spec.drain || emit.inflight.is_empty())
                    {
                        filled.pop_front();
                        *out_active = true;
                        *out_remaining = tokens(*emit_count);
                        self.progress = true;
                    }
                    if *out_active && !emit.frozen && t >= emit.next_issue {
                        let b = emit
                            .cap
                            .min(*out_remaining)
                            .min(out_cap(&spec.outputs, chans));
                        *out_remaining -= b;
                        let last = *out_remaining == 0;
                        emit.issue(t, b, *out_graph, last);
                        stats.busy += emit.ii;
                        self.progress = true;
                        if last {
                            *out_active = false;
                            *out_graph += 1;
                        }
                    }
                }
            }
        }
    }

    fn commit(&mut self) {
        for c in &mut self.chans {
            c.peak = c.peak.max(c.occ + c.incoming);
            c.occ = c.occ - c.popped + c.incoming;
            c.incoming = 0;
            c.popped = 0;
        }
    }

    fn finished(&self) -> bool {
        self.states.iter().all(|s| match s {
            State::Map { pipe, graph, .. } => *graph >= self.graphs && pipe.inflight.is_empty(),
            State::Barrier {
                emit, out_graph, ..
            } => *out_graph >= self.graphs && emit.inflight.is_empty(),
        })
    }

    /// Earliest cycle after `t` at which a timer may let something happen.
    fn next_timer(&self, t: u64) -> Option<u64> {
        let mut next: Option<u64> = None;
        let mut consider = |c: u64| {
            if c > t {
                next = Some(next.map_or(c, |n: u64| n.min(c)));
            }
        };
        for s in &self.states {
            match s {
                State::Map { pipe, graph, .. } => {
                    if !pipe.frozen {
                        pipe.retire_at().map(&mut consider);
                    }
                    if *graph < self.graphs {
                        consider(pipe.next_issue);
                    }
                }
                State::Barrier {
                    ingest,
                    emit,
                    in_active,
                    filled,
                    out_active,
                    ..
                } => {
                    ingest.retire_at().map(&mut consider);
                    if !emit.frozen {
                        emit.retire_at().map(&mut consider);
                    }
                    if *in_active {
                        consider(ingest.next_issue);
                    }
                    if *out_active {
                        consider(emit.next_issue);
                    } else if let Some(&r) = filled.front() {
                        consider(r);
                    }
                }
            }
        }
        next
    }

    /// Skips `cycles` idle cycles; frozen pipes stay frozen throughout.
    fn skip(&mut self, cycles: u64) {
        for (s, st) in self.states.iter_mut().zip(&mut self.stats) {
            let pipe = match s {
                State::Map { pipe, .. } => pipe,
                State::Barrier { emit, .. } => emit,
            };
            if pipe.frozen {
                pipe.freeze(cycles);
                st.stall += cycles;
            }
        }
    }

    fn diagnose(&self, t: u64) -> DfsimError {
        let chan = |c: ChannelId| self.net.channels[c].name.clone();
        // A unit frozen on a full output is the most direct culprit.
        for (i, s) in self.states.iter().enumerate() {
            let spec = &self.net.units[i];
            let frozen = match s {
                State::Map { pipe, .. } => pipe.frozen,
                State::Barrier { emit, .. } => emit.frozen,
            };
            if frozen {
                let full = spec
                    .outputs
                    .iter()
                    .copied()
                    .find(|&c| self.chans[c].space() == 0)
                    .unwrap_or(spec.outputs[0]);
                return DfsimError::Deadlock {
                    cycle: t,
                    unit: spec.name.clone(),
                    channel: chan(full),
                };
            }
        }
        for (i, s) in self.states.iter().enumerate() {
            let spec = &self.net.units[i];
            let starving = match s {
                State::Map { graph, .. } if *graph < self.graphs => spec
                    .inputs
                    .iter()
                    .copied()
                    .find(|&c| self.chans[c].visible() == 0),
                State::Barrier {
                    in_active: true,
                    in_remaining,
                    ..
                } => spec
                    .inputs
                    .iter()
                    .zip(in_remaining)
                    .find(|&(&c, &r)| r > 0 && self.chans[c].visible() == 0)
                    .map(|(&c, _)| c),
                _ => None,
            };
            if let Some(c) = starving {
                return DfsimError::Deadlock {
                    cycle: t,
                    unit: spec.name.clone(),
                    channel: chan(c),
                };
            }
        }
        DfsimError::Deadlock {
            cycle: t,
            unit: "?".into(),
            channel: "?".into(),
        }
    }

    fn run(mut self) -> Result<Outcome, DfsimError> {
        let mut t = 0u64;
        while !self.finished() {
            self.progress = false;
            self.retire_all(t);
            self.issue_all(t);
            self.commit();
            if self.progress {
                t += 1;
                continue;
            }
            match self.next_timer(t) {
                Some(next) => {
                    self.skip(next - t - 1);
                    t = next;
                }
                None => return Err(self.diagnose(t)),
            }
        }
        let units = self.stats;
        let channels = self
            .net
            .channels
            .iter()
            .zip(&self.chans)
            .map(|(spec, c)| ChannelStats {
                name: spec.name.clone(),
                depth: spec.depth,
                words: spec.words,
                peak: c.peak,
                pushed: c.pushed_total,
                popped: c.popped_total,
            })
            .collect();
        Ok(Outcome {
            done: self.done,
            units,
            channels,
        })
    }
}

/// Streams `graphs` back-to-back graphs through the network.
pub fn run(net: &Network, graphs: usize) -> Result<Outcome, DfsimError> {
    net.check()?;
    if graphs == 0 {
        return Err(DfsimError::Topology(
            "at least one graph must be streamed".into(),
        ));
    }
    if !net.units.iter().any(|u| u.outputs.is_empty()) {
        return Err(DfsimError::Topology("no unit feeds the sink".into()));
    }
    Sim::new(net, graphs).run()
}
