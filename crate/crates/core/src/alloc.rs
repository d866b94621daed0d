//! Processing-element allocation and first-order FPGA resource estimates.
//!
//! Three architecture variants are modelled:
//!
//! * `Mpa`: every PE sees the whole graph; node arrays hold all nodes.
//! * `Geo`: one PE per node group and per edge group of the layer partition.
//! * `GeoRsrc`: like `Geo`, with PE counts proportional to group sizes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fxp::WORD_BITS;
use crate::geom::{
    legal_pairs, HitGraph, LayerId, LayerPair, NodeType, PairType, Partition, NUM_LAYERS, NUM_PAIRS,
};
use crate::inet::ModelShape;
use crate::synth::{self, Profile};

/// Bits in one block memory (36 Kib).
pub const BRAM_BITS: u64 = 36 * 1024;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AllocError {
    #[error("missing {0} in the workload")]
    MissingGroup(String),
    #[error("duplicate {0} in the workload")]
    DuplicateGroup(String),
    #[error("{0}")]
    Structure(String),
    #[error("unknown variant {0:?} (expected mpa, geo or geo-rsrc)")]
    UnknownVariant(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    Mpa,
    Geo,
    GeoRsrc,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Mpa, Variant::Geo, Variant::GeoRsrc];

    pub fn is_geometric(self) -> bool {
        self != Variant::Mpa
    }

    /// Name used in reports.
    pub fn label(self) -> &'static str {
        match self {
            Variant::Mpa => "MPA",
            Variant::Geo => "MPA_geo",
            Variant::GeoRsrc => "MPA_geo_rsrc",
        }
    }

    /// Name used on the command line.
    pub fn cli_name(self) -> &'static str {
        match self {
            Variant::Mpa => "mpa",
            Variant::Geo => "geo",
            Variant::GeoRsrc => "geo-rsrc",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Variant {
    type Err = AllocError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.cli_name().eq_ignore_ascii_case(s) || v.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| AllocError::UnknownVariant(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroupKind {
    Node,
    Edge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroupId {
    Node(LayerId),
    Edge(LayerPair),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroupType {
    Node(NodeType),
    Edge(PairType),
}

impl GroupId {
    pub fn kind(self) -> GroupKind {
        match self {
            GroupId::Node(_) => GroupKind::Node,
            GroupId::Edge(_) => GroupKind::Edge,
        }
    }

    pub fn group_type(self) -> GroupType {
        match self {
            GroupId::Node(l) => GroupType::Node(l.node_type()),
            GroupId::Edge(p) => GroupType::Edge(p.pair_type()),
        }
    }
}

impl fmt::Display for GroupId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupId::Node(l) => write!(f, "node group {l}"),
            GroupId::Edge(p) => write!(f, "edge group {p}"),
        }
    }
}

impl fmt::Display for GroupType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupType::Node(t) => write!(f, "{t}"),
            GroupType::Edge(t) => write!(f, "{t}"),
        }
    }
}

/// Element count of one node or edge group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupWorkload {
    pub group: GroupId,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeLoad {
    pub label: String,
    pub nodes: usize,
}

/// An edge stream between two node groups. `sender` and `receiver` index
/// [`Workload::nodes`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeLoad {
    pub label: String,
    pub edges: usize,
    pub sender: usize,
    pub receiver: usize,
    pub max_in_degree: usize,
}

/// Per-graph element counts as seen by the hardware: one node group and one
/// edge group for the flat architecture, 11 and 13 for the geometric ones.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Workload {
    pub nodes: Vec<NodeLoad>,
    pub edges: Vec<EdgeLoad>,
}

impl Workload {
    /// Single group holding the whole graph.
    pub fn flat(n_nodes: usize, n_edges: usize, max_in_degree: usize) -> Self {
        Workload {
            nodes: vec![NodeLoad {
                label: "all".into(),
                nodes: n_nodes,
            }],
            edges: vec![EdgeLoad {
                label: "all".into(),
                edges: n_edges,
                sender: 0,
                receiver: 0,
                max_in_degree,
            }],
        }
    }

    /// One group per layer and one per legal pair.
    pub fn geometric(
        nodes: [usize; NUM_LAYERS],
        edges: [usize; NUM_PAIRS],
        max_in_degree: [usize; NUM_PAIRS],
    ) -> Self {
        Workload {
            nodes: LayerId::ALL
                .iter()
                .map(|l| NodeLoad {
                    label: l.to_string(),
                    nodes: nodes[l.index()],
                })
                .collect(),
            edges: legal_pairs()
                .iter()
                .enumerate()
                .map(|(k, p)| EdgeLoad {
                    label: p.label(),
                    edges: edges[k],
                    sender: p.inner.index(),
                    receiver: p.outer.index(),
                    max_in_degree: max_in_degree[k],
                })
                .collect(),
        }
    }

    pub fn from_partition(p: &Partition) -> Self {
        let mut nodes = [0; NUM_LAYERS];
        for l in LayerId::ALL {
            nodes[l.index()] = p.node_group(l).len();
        }
        let mut edges = [0; NUM_PAIRS];
        let mut deg = [0; NUM_PAIRS];
        for (k, eg) in p.edge_groups().iter().enumerate() {
            edges[k] = eg.len();
            let mut count = vec![0usize; p.node_group(eg.pair.outer).len()];
            for &r in &eg.receivers {
                count[r] += 1;
            }
            deg[k] = count.into_iter().max().unwrap_or(0);
        }
        Workload::geometric(nodes, edges, deg)
    }

    /// The flat or geometric view of a graph, depending on the variant.
    pub fn from_graph(g: &HitGraph, variant: Variant) -> Result<Self, crate::geom::GeomError> {
        if variant.is_geometric() {
            Ok(Workload::from_partition(&crate::geom::partition(g)?))
        } else {
            Ok(Workload::flat(g.n_nodes(), g.n_edges(), g.max_in_degree()))
        }
    }

    /// The nominal 739-node, 1252-edge graph, from the default synthetic
    /// profile with seed 0.
    pub fn nominal(variant: Variant) -> Self {
        let g = synth::generate(0, &Profile::default()).expect("default profile is feasible");
        Workload::from_graph(&g, variant).expect("synthetic graphs are valid")
    }

    pub fn is_geometric(&self) -> bool {
        self.nodes.len() == NUM_LAYERS && self.edges.len() == NUM_PAIRS
    }

    pub fn total_nodes(&self) -> usize {
        self.nodes.iter().map(|n| n.nodes).sum()
    }

    pub fn total_edges(&self) -> usize {
        self.edges.iter().map(|e| e.edges).sum()
    }

    /// Workloads keyed by group identity (geometric workloads only).
    pub fn group_workloads(&self) -> Vec<GroupWorkload> {
        let mut out = Vec::new();
        if self.is_geometric() {
            out.extend(LayerId::ALL.iter().map(|&l| GroupWorkload {
                group: GroupId::Node(l),
                size: self.nodes[l.index()].nodes,
            }));
            out.extend(
                legal_pairs()
                    .iter()
                    .enumerate()
                    .map(|(k, &p)| GroupWorkload {
                        group: GroupId::Edge(p),
                        size: self.edges[k].edges,
                    }),
            );
        }
        out
    }

    /// Every edge group scaled by `f` (rounded), every node group likewise.
    pub fn scaled(&self, f: f64) -> Self {
        let s = |n: usize| (n as f64 * f).round() as usize;
        Workload {
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeLoad {
                    label: n.label.clone(),
                    nodes: s(n.nodes),
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeLoad {
                    edges: s(e.edges),
                    ..e.clone()
                })
                .collect(),
        }
    }

    pub fn check(&self) -> Result<(), AllocError> {
        if self.nodes.is_empty() {
            return Err(AllocError::Structure("workload has no node groups".into()));
        }
        for e in &self.edges {
            if e.sender >= self.nodes.len() || e.receiver >= self.nodes.len() {
                return Err(AllocError::Structure(format!(
                    "edge group {} references a missing node group",
                    e.label
                )));
            }
        }
        Ok(())
    }
}

/// PE counts per group and stage. The classifier stage reuses the Edgeblock
/// counts. Vectors are aligned with the workload's group lists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Allocation {
    pub node: Vec<u32>,
    pub edge: Vec<u32>,
    pub aggregate: Vec<u32>,
}

impl Allocation {
    /// `pes` system PEs over the whole graph.
    pub fn flat(pes: u32) -> Self {
        Allocation {
            node: vec![pes],
            edge: vec![pes],
            aggregate: vec![pes],
        }
    }

    /// Every group count multiplied by `k`.
    pub fn times(&self, k: u32) -> Self {
        let m = |v: &Vec<u32>| v.iter().map(|&x| x * k).collect();
        Allocation {
            node: m(&self.node),
            edge: m(&self.edge),
            aggregate: m(&self.aggregate),
        }
    }

    pub fn total_node(&self) -> u32 {
        self.node.iter().sum()
    }

    pub fn total_edge(&self) -> u32 {
        self.edge.iter().sum()
    }

    pub fn total_aggregate(&self) -> u32 {
        self.aggregate.iter().sum()
    }

    pub fn total(&self) -> u32 {
        self.total_node() + self.total_edge() + self.total_aggregate()
    }

    pub fn matches(&self, w: &Workload) -> bool {
        self.node.len() == w.nodes.len()
            && self.edge.len() == w.edges.len()
            && self.aggregate.len() == w.edges.len()
    }

    /// PE counts of the first group of each type: node A, node B, edge A-A,
    /// A-B, B-B. Only meaningful for geometric allocations.
    pub fn type_summary(&self) -> Option<[u32; 5]> {
        if self.node.len() != NUM_LAYERS || self.edge.len() != NUM_PAIRS {
            return None;
        }
        let node = |t| {
            LayerId::ALL
                .iter()
                .position(|l| l.node_type() == t)
                .map(|i| self.node[i])
        };
        let edge = |t| {
            legal_pairs()
                .iter()
                .position(|p| p.pair_type() == t)
                .map(|i| self.edge[i])
        };
        Some([
            node(NodeType::A)?,
            node(NodeType::B)?,
            edge(PairType::AA)?,
            edge(PairType::AB)?,
            edge(PairType::BB)?,
        ])
    }
}

fn index_groups(
    groups: &[GroupWorkload],
) -> Result<([usize; NUM_LAYERS], [usize; NUM_PAIRS]), AllocError> {
    let mut nodes: [Option<usize>; NUM_LAYERS] = [None; NUM_LAYERS];
    let mut edges: [Option<usize>; NUM_PAIRS] = [None; NUM_PAIRS];
    for g in groups {
        let slot = match g.group {
            GroupId::Node(l) => &mut nodes[l.index()],
            GroupId::Edge(p) => {
                let k = p
                    .index()
                    .ok_or_else(|| AllocError::Structure(format!("{p} is not a legal pair")))?;
                &mut edges[k]
            }
        };
        if slot.replace(g.size).is_some() {
            return Err(AllocError::DuplicateGroup(g.group.to_string()));
        }
    }
    let mut n = [0; NUM_LAYERS];
    for (i, v) in nodes.iter().enumerate() {
        n[i] =
            v.ok_or_else(|| AllocError::MissingGroup(GroupId::Node(LayerId::ALL[i]).to_string()))?;
    }
    let mut e = [0; NUM_PAIRS];
    for (k, v) in edges.iter().enumerate() {
        e[k] =
            v.ok_or_else(|| AllocError::MissingGroup(GroupId::Edge(legal_pairs()[k]).to_string()))?;
    }
    Ok((n, e))
}

/// One PE per group per stage.
pub fn allocate_uniform(groups: &[GroupWorkload]) -> Result<Allocation, AllocError> {
    index_groups(groups)?;
    Ok(Allocation {
        node: vec![1; NUM_LAYERS],
        edge: vec![1; NUM_PAIRS],
        aggregate: vec![1; NUM_PAIRS],
    })
}

/// `round(size / smallest)` PEs per group, at least one; `smallest` is the
/// minimum size over groups of the same kind. A zero minimum falls back to
/// one PE per group of that kind.
fn ratio_to_smallest(sizes: &[usize]) -> Vec<u32> {
    let min = sizes.iter().copied().min().unwrap_or(0);
    if min == 0 {
        return vec![1; sizes.len()];
    }
    // Half-up integer rounding of size / min.
    sizes
        .iter()
        .map(|&s| ((2 * s + min) / (2 * min)).max(1) as u32)
        .collect()
}

/// Data-aware allocation: larger groups get proportionally more PEs.
pub fn allocate_data_aware(groups: &[GroupWorkload]) -> Result<Allocation, AllocError> {
    let (nodes, edges) = index_groups(groups)?;
    let edge = ratio_to_smallest(&edges);
    Ok(Allocation {
        node: ratio_to_smallest(&nodes),
        aggregate: edge.clone(),
        edge,
    })
}

/// Group workloads where every group has its type's size.
pub fn type_workloads(node_sizes: [usize; 2], edge_sizes: [usize; 3]) -> Vec<GroupWorkload> {
    let mut out: Vec<GroupWorkload> = LayerId::ALL
        .iter()
        .map(|&l| GroupWorkload {
            group: GroupId::Node(l),
            size: match l.node_type() {
                NodeType::A => node_sizes[0],
                NodeType::B => node_sizes[1],
            },
        })
        .collect();
    out.extend(legal_pairs().iter().map(|&p| GroupWorkload {
        group: GroupId::Edge(p),
        size: match p.pair_type() {
            PairType::AA => edge_sizes[0],
            PairType::AB => edge_sizes[1],
            PairType::BB => edge_sizes[2],
        },
    }));
    out
}

/// Per-type PE counts `[A, B, A-A, A-B, B-B]` for per-type workloads.
pub fn allocate_by_type(node_sizes: [usize; 2], edge_sizes: [usize; 3]) -> [u32; 5] {
    allocate_data_aware(&type_workloads(node_sizes, edge_sizes))
        .expect("type workloads cover every group")
        .type_summary()
        .expect("geometric allocation")
}

/// The allocation each variant uses for a given PE multiplier: `pes` system
/// PEs for the flat design, `pes` times the per-group policy otherwise.
pub fn allocation_for(
    variant: Variant,
    workload: &Workload,
    pes: u32,
) -> Result<Allocation, AllocError> {
    let base = match variant {
        Variant::Mpa => return Ok(Allocation::flat(pes)),
        Variant::Geo => allocate_uniform(&workload.group_workloads())?,
        Variant::GeoRsrc => allocate_data_aware(&workload.group_workloads())?,
    };
    Ok(base.times(pes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceEstimate {
    pub edge_pes: u32,
    pub aggregate_pes: u32,
    pub node_pes: u32,
    pub classifier_pes: u32,
    /// Largest node array held by any single Edgeblock or Aggregate PE.
    pub max_pe_node_array_bits: u64,
    /// That array as a fraction of block memories.
    pub max_pe_bram_equivalent: f64,
    /// Sum over PEs of whole block memories used by node arrays.
    pub node_array_brams: u64,
    pub fifo_brams: u64,
    pub brams: u64,
    pub multipliers: u64,
    /// MLP weight and bias storage, held in registers.
    pub register_bits: u64,
}

fn mlp_multiplies(in_dim: usize, shape: &ModelShape, out_dim: usize) -> u64 {
    let (w, h) = (shape.hidden_width, shape.hidden_depth);
    let mut dims = vec![in_dim];
    dims.extend(std::iter::repeat_n(w, h));
    dims.push(out_dim);
    dims.windows(2).map(|d| (d[0] * d[1]) as u64).sum()
}

fn mlp_params(in_dim: usize, shape: &ModelShape, out_dim: usize) -> u64 {
    let (w, h) = (shape.hidden_width, shape.hidden_depth);
    let mut dims = vec![in_dim];
    dims.extend(std::iter::repeat_n(w, h));
    dims.push(out_dim);
    dims.windows(2).map(|d| (d[0] * d[1] + d[1]) as u64).sum()
}

fn blocks(bits: u64) -> u64 {
    bits.div_ceil(BRAM_BITS)
}

/// Node-array, FIFO, multiplier and register estimate.
///
/// Each Edgeblock PE holds a node array sized to the larger of its sender and
/// receiver groups; each Aggregate PE holds one sized to its receiver group.
/// For the flat design both groups are the whole graph. An array of
/// `capacity` nodes costs `capacity * d_node * 14` bits, rounded up to whole
/// block memories per PE. `fifo_bits` lists the storage of every FIFO.
pub fn estimate_resources(
    alloc: &Allocation,
    workload: &Workload,
    shape: &ModelShape,
    fifo_bits: &[u64],
) -> Result<ResourceEstimate, AllocError> {
    workload.check()?;
    if !alloc.matches(workload) {
        return Err(AllocError::Structure(
            "allocation does not match the workload's groups".into(),
        ));
    }
    let word = WORD_BITS as u64;
    let array_bits = |capacity: usize| capacity as u64 * shape.d_node as u64 * word;

    let mut max_bits = 0u64;
    let mut node_array_brams = 0u64;
    for (k, e) in workload.edges.iter().enumerate() {
        let s = workload.nodes[e.sender].nodes;
        let r = workload.nodes[e.receiver].nodes;
        let edge_bits = array_bits(s.max(r));
        let agg_bits = array_bits(r);
        if alloc.edge[k] > 0 {
            max_bits = max_bits.max(edge_bits);
        }
        if alloc.aggregate[k] > 0 {
            max_bits = max_bits.max(agg_bits);
        }
        node_array_brams +=
            alloc.edge[k] as u64 * blocks(edge_bits) + alloc.aggregate[k] as u64 * blocks(agg_bits);
    }

    let edge_pes = alloc.total_edge();
    let node_pes = alloc.total_node();
    let aggregate_pes = alloc.total_aggregate();
    let classifier_pes = edge_pes;
    let (edge_in, node_in) = (shape.edge_in(), shape.node_in());
    let multipliers = edge_pes as u64 * mlp_multiplies(edge_in, shape, shape.d_edge)
        + node_pes as u64 * mlp_multiplies(node_in, shape, shape.d_node)
        + classifier_pes as u64 * mlp_multiplies(edge_in, shape, 1);
    let register_bits = word
        * (edge_pes as u64 * mlp_params(edge_in, shape, shape.d_edge)
            + node_pes as u64 * mlp_params(node_in, shape, shape.d_node)
            + classifier_pes as u64 * mlp_params(edge_in, shape, 1));
    let any_pe = alloc.total() > 0;
    let fifo_brams = if any_pe {
        fifo_bits.iter().map(|&b| blocks(b)).sum()
    } else {
        0
    };

    Ok(ResourceEstimate {
        edge_pes,
        aggregate_pes,
        node_pes,
        classifier_pes,
        max_pe_node_array_bits: max_bits,
        max_pe_bram_equivalent: max_bits as f64 / BRAM_BITS as f64,
        node_array_brams,
        fifo_brams,
        brams: node_array_brams + fifo_brams,
        multipliers,
        register_bits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_allocation_counts() {
        let a = allocate_uniform(&Workload::nominal(Variant::Geo).group_workloads()).unwrap();
        assert_eq!(a.total_node(), 11);
        assert_eq!(a.total_edge(), 13);
        assert_eq!(a.total_aggregate(), 13);
        assert_eq!(a.total(), 37);
        assert!(a.node.iter().chain(&a.edge).all(|&c| c == 1));
    }

    #[test]
    fn missing_or_duplicate_groups_rejected() {
        let mut groups = type_workloads([1, 1], [1, 1, 1]);
        groups.pop();
        assert!(matches!(
            allocate_uniform(&groups),
            Err(AllocError::MissingGroup(_))
        ));
        let mut groups = type_workloads([1, 1], [1, 1, 1]);
        groups.push(groups[0]);
        assert!(matches!(
            allocate_data_aware(&groups),
            Err(AllocError::DuplicateGroup(_))
        ));
    }

    #[test]
    fn table_rows() {
        assert_eq!(allocate_by_type([138, 62], [277, 77, 87]), [2, 1, 4, 1, 1]);
        assert_eq!(allocate_by_type([5, 5], [9, 9, 9]), [1, 1, 1, 1, 1]);
    }

    #[test]
    fn zero_minimum_falls_back() {
        assert_eq!(allocate_by_type([100, 0], [50, 0, 10]), [1, 1, 1, 1, 1]);
    }

    #[test]
    fn single_pe_flat_array() {
        let w = Workload::flat(739, 1252, 4);
        let est =
            estimate_resources(&Allocation::flat(1), &w, &ModelShape::default(), &[]).unwrap();
        assert_eq!(est.max_pe_node_array_bits, 31_038);
        // One block for the Edgeblock array, one for the Aggregate array.
        assert_eq!(est.node_array_brams, 2);
        assert!(est.max_pe_bram_equivalent < 1.0);
    }

    #[test]
    fn geometric_capacity_below_flat() {
        let flat = Workload::nominal(Variant::Mpa);
        let geo = Workload::nominal(Variant::Geo);
        let shape = ModelShape::default();
        let a = estimate_resources(&Allocation::flat(1), &flat, &shape, &[]).unwrap();
        let g = estimate_resources(
            &allocation_for(Variant::Geo, &geo, 1).unwrap(),
            &geo,
            &shape,
            &[],
        )
        .unwrap();
        assert!(g.max_pe_node_array_bits < a.max_pe_node_array_bits);
        let b1b2 = &geo.edges[0];
        let cap = geo.nodes[b1b2.sender]
            .nodes
            .max(geo.nodes[b1b2.receiver].nodes);
        assert!(cap < 739);
    }

    #[test]
    fn zero_pes_zero_resources() {
        let w = Workload::flat(739, 1252, 4);
        let est = estimate_resources(&Allocation::flat(0), &w, &ModelShape::default(), &[100_000])
            .unwrap();
        assert_eq!(
            (
                est.brams,
                est.multipliers,
                est.register_bits,
                est.max_pe_node_array_bits
            ),
            (0, 0, 0, 0)
        );
    }

    #[test]
    fn fifo_blocks_counted() {
        let w = Workload::flat(10, 10, 1);
        let est = estimate_resources(
            &Allocation::flat(1),
            &w,
            &ModelShape::default(),
            &[1, BRAM_BITS + 1],
        )
        .unwrap();
        assert_eq!(est.fifo_brams, 3);
        assert_eq!(est.brams, est.node_array_brams + 3);
    }

    #[test]
    fn multiplier_count() {
        let w = Workload::flat(10, 10, 1);
        let est =
            estimate_resources(&Allocation::flat(1), &w, &ModelShape::default(), &[]).unwrap();
        // edge 10*8+8*8+8*4, node 7*8+8*8+8*3, classifier 10*8+8*8+8*1
        assert_eq!(est.multipliers, 176 + 144 + 152);
    }

    #[test]
    fn variant_names() {
        for v in Variant::ALL {
            assert_eq!(v.cli_name().parse::<Variant>().unwrap(), v);
            assert_eq!(v.label().parse::<Variant>().unwrap(), v);
        }
        assert!("fast".parse::<Variant>().is_err());
    }

    proptest! {
        #[test]
        fn data_aware_is_scale_invariant(
            nodes in proptest::array::uniform2(1usize..500),
            edges in proptest::array::uniform3(1usize..500),
            k in 1usize..20,
        ) {
            let base = allocate_by_type(nodes, edges);
            let scaled = allocate_by_type(nodes.map(|n| n * k), edges.map(|e| e * k));
            prop_assert_eq!(base, scaled);
        }

        #[test]
        fn data_aware_is_monotone(
            nodes in proptest::array::uniform2(1usize..500),
            edges in proptest::array::uniform3(1usize..500),
            bump in 0usize..500,
        ) {
            // Raising the largest edge type keeps the minimum fixed.
            let (i, _) = edges.iter().enumerate().max_by_key(|(_, &e)| e).unwrap();
            let mut bigger = edges;
            bigger[i] += bump;
            let a = allocate_by_type(nodes, edges);
            let b = allocate_by_type(nodes, bigger);
            prop_assert!(b[2 + i] >= a[2 + i]);
            prop_assert!(a.iter().all(|&c| c >= 1));
        }

        #[test]
        fn geometric_capacity_never_exceeds_flat(seed in 0u64..200, n in 1usize..400) {
            let g = synth::random_graph(seed, n);
            let geo = Workload::from_graph(&g, Variant::Geo).unwrap();
            for e in &geo.edges {
                let cap = geo.nodes[e.sender].nodes.max(geo.nodes[e.receiver].nodes);
                prop_assert!(cap <= g.n_nodes());
            }
        }
    }
}
