use std::fmt;

use serde::{Deserialize, Serialize};

use super::{pair_index, GeomError, LayerId};
use crate::fxp::Fx;
use crate::matrix::Matrix;

/// Hits as nodes, candidate track segments as directed edges.
///
/// Construction only checks that the tables line up; [`validate`] checks
/// indices, self-loops and layer adjacency.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HitGraph {
    node_features: Matrix<Fx>,
    node_layers: Vec<LayerId>,
    edge_features: Matrix<Fx>,
    senders: Vec<usize>,
    receivers: Vec<usize>,
}

impl HitGraph {
    pub fn new(
        node_features: Matrix<Fx>,
        node_layers: Vec<LayerId>,
        edge_features: Matrix<Fx>,
        senders: Vec<usize>,
        receivers: Vec<usize>,
    ) -> Result<Self, GeomError> {
        let shape = |what, expected, found| {
            if expected == found {
                Ok(())
            } else {
                Err(GeomError::Shape {
                    what,
                    expected,
                    found,
                })
            }
        };
        shape("node layer count", node_features.rows(), node_layers.len())?;
        shape("sender count", edge_features.rows(), senders.len())?;
        shape("receiver count", edge_features.rows(), receivers.len())?;
        Ok(HitGraph {
            node_features,
            node_layers,
            edge_features,
            senders,
            receivers,
        })
    }

    pub fn empty(d_node: usize, d_edge: usize) -> Self {
        HitGraph {
            node_features: Matrix::zeros(0, d_node),
            node_layers: Vec::new(),
            edge_features: Matrix::zeros(0, d_edge),
            senders: Vec::new(),
            receivers: Vec::new(),
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.node_layers.len()
    }

    pub fn n_edges(&self) -> usize {
        self.senders.len()
    }

    pub fn d_node(&self) -> usize {
        self.node_features.cols()
    }

    pub fn d_edge(&self) -> usize {
        self.edge_features.cols()
    }

    pub fn node_features(&self) -> &Matrix<Fx> {
        &self.node_features
    }

    pub fn node_layers(&self) -> &[LayerId] {
        &self.node_layers
    }

    pub fn edge_features(&self) -> &Matrix<Fx> {
        &self.edge_features
    }

    pub fn senders(&self) -> &[usize] {
        &self.senders
    }

    pub fn receivers(&self) -> &[usize] {
        &self.receivers
    }

    /// Same topology, new feature tables (row counts must match).
    pub fn with_features(
        &self,
        node_features: Matrix<Fx>,
        edge_features: Matrix<Fx>,
    ) -> Result<Self, GeomError> {
        if node_features.rows() != self.n_nodes() {
            return Err(GeomError::Shape {
                what: "node feature rows",
                expected: self.n_nodes(),
                found: node_features.rows(),
            });
        }
        if edge_features.rows() != self.n_edges() {
            return Err(GeomError::Shape {
                what: "edge feature rows",
                expected: self.n_edges(),
                found: edge_features.rows(),
            });
        }
        HitGraph::new(
            node_features,
            self.node_layers.clone(),
            edge_features,
            self.senders.clone(),
            self.receivers.clone(),
        )
    }

    /// Largest number of edges sharing one receiver.
    pub fn max_in_degree(&self) -> usize {
        let mut deg = vec![0usize; self.n_nodes()];
        for &r in &self.receivers {
            if r < deg.len() {
                deg[r] += 1;
            }
        }
        deg.into_iter().max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Diagnostic {
    IndexOutOfRange {
        edge: usize,
        index: usize,
        n_nodes: usize,
    },
    SelfLoop {
        edge: usize,
        node: usize,
    },
    IllegalPair {
        edge: usize,
        sender: LayerId,
        receiver: LayerId,
    },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::IndexOutOfRange {
                edge,
                index,
                n_nodes,
            } => {
                write!(
                    f,
                    "edge {edge}: node index {index} out of range (graph has {n_nodes} nodes)"
                )
            }
            Diagnostic::SelfLoop { edge, node } => {
                write!(f, "edge {edge}: self-loop on node {node}")
            }
            Diagnostic::IllegalPair {
                edge,
                sender,
                receiver,
            } => {
                write!(
                    f,
                    "edge {edge}: layer pair {sender}->{receiver} is not a legal pair"
                )
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub diagnostics: Vec<Diagnostic>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.diagnostics.is_empty()
    }

    pub fn len(&self) -> usize {
        self.diagnostics.len()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.diagnostics {
            writeln!(f, "{d}")?;
        }
        Ok(())
    }
}

/// Collects every out-of-range index, self-loop and illegal layer pair.
pub fn validate(g: &HitGraph) -> ValidationReport {
    let n = g.n_nodes();
    let mut diagnostics = Vec::new();
    for (edge, (&s, &r)) in g.senders.iter().zip(&g.receivers).enumerate() {
        let mut in_range = true;
        for index in [s, r] {
            if index >= n {
                diagnostics.push(Diagnostic::IndexOutOfRange {
                    edge,
                    index,
                    n_nodes: n,
                });
                in_range = false;
            }
        }
        if !in_range {
            continue;
        }
        if s == r {
            diagnostics.push(Diagnostic::SelfLoop { edge, node: s });
            continue;
        }
        let (ls, lr) = (g.node_layers[s], g.node_layers[r]);
        if pair_index(ls, lr).is_none() {
            diagnostics.push(Diagnostic::IllegalPair {
                edge,
                sender: ls,
                receiver: lr,
            });
        }
    }
    ValidationReport { diagnostics }
}
