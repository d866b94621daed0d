use std::ops::Add;

use serde::{Deserialize, Serialize};

use super::{
    legal_pairs, validate, GeomError, HitGraph, LayerId, LayerPair, NUM_LAYERS, NUM_PAIRS,
};
use crate::fxp::Fx;
use crate::matrix::Matrix;

/// All hits of one layer, in ascending global index order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeGroup {
    pub layer: LayerId,
    pub nodes: Vec<usize>,
    pub features: Matrix<Fx>,
}

impl NodeGroup {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// All edges of one legal pair, in ascending global edge id. `senders` index
/// into the inner layer's node group, `receivers` into the outer layer's.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeGroup {
    pub pair: LayerPair,
    pub edges: Vec<usize>,
    pub features: Matrix<Fx>,
    pub senders: Vec<usize>,
    pub receivers: Vec<usize>,
}

impl EdgeGroup {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    n_nodes: usize,
    n_edges: usize,
    d_node: usize,
    d_edge: usize,
    node_groups: Vec<NodeGroup>,
    edge_groups: Vec<EdgeGroup>,
    local_index: Vec<usize>,
}

impl Partition {
    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_edges(&self) -> usize {
        self.n_edges
    }

    pub fn d_node(&self) -> usize {
        self.d_node
    }

    pub fn d_edge(&self) -> usize {
        self.d_edge
    }

    /// Indexed by [`LayerId::index`].
    pub fn node_groups(&self) -> &[NodeGroup] {
        &self.node_groups
    }

    pub fn node_group(&self, layer: LayerId) -> &NodeGroup {
        &self.node_groups[layer.index()]
    }

    /// In [`legal_pairs`] order.
    pub fn edge_groups(&self) -> &[EdgeGroup] {
        &self.edge_groups
    }

    /// Position of a global node inside its layer's group.
    pub fn local_index(&self, node: usize) -> usize {
        self.local_index[node]
    }

    /// Node-array entries a PE serving edge group `k` must hold: the larger of
    /// its two node groups.
    pub fn node_array_capacity(&self, k: usize) -> usize {
        let pair = self.edge_groups[k].pair;
        self.node_group(pair.inner)
            .len()
            .max(self.node_group(pair.outer).len())
    }

    /// Rebuilds the global graph. Node and edge order, features and
    /// endpoints come back unchanged.
    pub fn reassemble(&self) -> HitGraph {
        let mut node_features = Matrix::zeros(self.n_nodes, self.d_node);
        let mut node_layers = vec![LayerId::B1; self.n_nodes];
        for group in &self.node_groups {
            for (local, &global) in group.nodes.iter().enumerate() {
                node_features
                    .row_mut(global)
                    .copy_from_slice(group.features.row(local));
                node_layers[global] = group.layer;
            }
        }
        let mut edge_features = Matrix::zeros(self.n_edges, self.d_edge);
        let mut senders = vec![0; self.n_edges];
        let mut receivers = vec![0; self.n_edges];
        for group in &self.edge_groups {
            let inner = &self.node_group(group.pair.inner).nodes;
            let outer = &self.node_group(group.pair.outer).nodes;
            for (local, &edge) in group.edges.iter().enumerate() {
                edge_features
                    .row_mut(edge)
                    .copy_from_slice(group.features.row(local));
                senders[edge] = inner[group.senders[local]];
                receivers[edge] = outer[group.receivers[local]];
            }
        }
        HitGraph::new(
            node_features,
            node_layers,
            edge_features,
            senders,
            receivers,
        )
        .expect("partition tables are consistent")
    }
}

/// Groups nodes by layer and routes every edge to its layer pair's group.
pub fn partition(g: &HitGraph) -> Result<Partition, GeomError> {
    let report = validate(g);
    if !report.is_empty() {
        return Err(GeomError::Invalid(report));
    }

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); NUM_LAYERS];
    let mut local_index = vec![0; g.n_nodes()];
    for (node, layer) in g.node_layers().iter().enumerate() {
        let list = &mut members[layer.index()];
        local_index[node] = list.len();
        list.push(node);
    }
    let node_groups = LayerId::ALL
        .iter()
        .zip(members)
        .map(|(&layer, nodes)| NodeGroup {
            layer,
            features: g.node_features().select_rows(&nodes),
            nodes,
        })
        .collect();

    let mut edge_members: Vec<Vec<usize>> = vec![Vec::new(); NUM_PAIRS];
    for (edge, (&s, &r)) in g.senders().iter().zip(g.receivers()).enumerate() {
        let k = super::pair_index(g.node_layers()[s], g.node_layers()[r])
            .expect("validated graph has only legal pairs");
        edge_members[k].push(edge);
    }
    let edge_groups = legal_pairs()
        .iter()
        .zip(edge_members)
        .map(|(&pair, edges)| EdgeGroup {
            pair,
            features: g.edge_features().select_rows(&edges),
            senders: edges.iter().map(|&e| local_index[g.senders()[e]]).collect(),
            receivers: edges
                .iter()
                .map(|&e| local_index[g.receivers()[e]])
                .collect(),
            edges,
        })
        .collect();

    Ok(Partition {
        n_nodes: g.n_nodes(),
        n_edges: g.n_edges(),
        d_node: g.d_node(),
        d_edge: g.d_edge(),
        node_groups,
        edge_groups,
        local_index,
    })
}

/// Combines per-edge-group partial aggregates into one row per global node.
///
/// `partials[k]` holds one row per node of edge group `k`'s receiver layer.
/// Each node's row starts at zero and adds the partials of the groups that
/// target its layer in [`legal_pairs`] order. Nodes no group targets stay zero.
pub fn merge_aggregates<T>(partials: &[Matrix<T>], p: &Partition) -> Result<Matrix<T>, GeomError>
where
    T: Copy + Default + Add<Output = T>,
{
    if partials.len() != NUM_PAIRS {
        return Err(GeomError::Shape {
            what: "partial aggregate count",
            expected: NUM_PAIRS,
            found: partials.len(),
        });
    }
    let d = partials[0].cols();
    let mut out = Matrix::zeros(p.n_nodes(), d);
    for (partial, group) in partials.iter().zip(p.edge_groups()) {
        let targets = &p.node_group(group.pair.outer).nodes;
        if partial.cols() != d {
            return Err(GeomError::Shape {
                what: "partial aggregate width",
                expected: d,
                found: partial.cols(),
            });
        }
        if partial.rows() != targets.len() {
            return Err(GeomError::Shape {
                what: "partial aggregate rows",
                expected: targets.len(),
                found: partial.rows(),
            });
        }
        for (local, &global) in targets.iter().enumerate() {
            let acc = out.row_mut(global);
            for (a, &v) in acc.iter_mut().zip(partial.row(local)) {
                *a = *a + v;
            }
        }
    }
    Ok(out)
}
