//! Interaction-network inference for edge classification.
//!
//! One message-passing iteration runs Edgeblock, Aggregate and Nodeblock:
//!
//! ```text
//! e'_ij = MLP_edge([x_i | x_j | e_ij])
//! a_v   = sum of e'_ij over edges with receiver v
//! x'_v  = MLP_node([x_v | a_v])
//! ```
//!
//! after which every edge is scored with `hard_sigmoid(MLP_cls([x_i | x_j | e_ij]))`.
//! All blocks are generic over [`Scalar`], so the same code runs in double
//! precision and in bit-exact Q7.7.
//!
//! Fixed-point addition saturates and is therefore not associative. Graph
//! aggregation uses one canonical reduction shape: each receiver first sums
//! its incoming edges per edge group (legal layer pair) in ascending edge id,
//! then combines the per-group partials in legal-pair order. That is exactly
//! what a partitioned run computes, which is why [`infer_partitioned`] and
//! [`infer`] agree bit for bit.

mod mlp;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use mlp::{DenseLayer, Mlp, Scalar};

use crate::fxp::Fx;
use crate::geom::{
    self, merge_aggregates, pair_index, validate, GeomError, HitGraph, Partition, NUM_PAIRS,
};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InetError {
    #[error("{what}: expected {expected}, found {found}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("{what} index {index} out of range for {len} rows")]
    Index {
        what: &'static str,
        index: usize,
        len: usize,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("weights must be finite")]
    NonFiniteWeight,
    #[error("stored raw weights do not equal the quantized real weights")]
    QuantizationMismatch,
    #[error(transparent)]
    Geom(#[from] GeomError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Real,
    Fixed,
}

/// Feature widths and MLP sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelShape {
    pub d_node: usize,
    pub d_edge: usize,
    pub hidden_width: usize,
    pub hidden_depth: usize,
}

impl Default for ModelShape {
    fn default() -> Self {
        ModelShape {
            d_node: 3,
            d_edge: 4,
            hidden_width: 8,
            hidden_depth: 2,
        }
    }
}

impl ModelShape {
    pub fn edge_in(&self) -> usize {
        2 * self.d_node + self.d_edge
    }

    pub fn node_in(&self) -> usize {
        self.d_node + self.d_edge
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InferConfig {
    pub shape: ModelShape,
    pub iterations: usize,
    pub mode: Mode,
}

impl Default for InferConfig {
    fn default() -> Self {
        InferConfig {
            shape: ModelShape::default(),
            iterations: 1,
            mode: Mode::Fixed,
        }
    }
}

impl InferConfig {
    pub fn with_mode(mode: Mode) -> Self {
        InferConfig {
            mode,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), InetError> {
        let s = &self.shape;
        if self.iterations == 0 {
            return Err(InetError::Config(
                "iteration count must be at least 1".into(),
            ));
        }
        if s.d_node == 0 || s.d_edge == 0 || s.hidden_width == 0 {
            return Err(InetError::Config("dimensions must be at least 1".into()));
        }
        Ok(())
    }
}

/// Edgeblock, Nodeblock and classifier MLPs. The same parameters are reused
/// on every message-passing iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub edge_mlp: Mlp,
    pub node_mlp: Mlp,
    pub classifier_mlp: Mlp,
}

impl ModelParams {
    pub fn new(edge_mlp: Mlp, node_mlp: Mlp, classifier_mlp: Mlp) -> Result<Self, InetError> {
        let d_edge = edge_mlp.out_dim();
        let d_node = node_mlp.out_dim();
        let check = |what, expected, found| {
            if expected == found {
                Ok(())
            } else {
                Err(InetError::Dimension {
                    what,
                    expected,
                    found,
                })
            }
        };
        check("edge MLP input", 2 * d_node + d_edge, edge_mlp.in_dim())?;
        check("node MLP input", d_node + d_edge, node_mlp.in_dim())?;
        check(
            "classifier MLP input",
            2 * d_node + d_edge,
            classifier_mlp.in_dim(),
        )?;
        check("classifier MLP output", 1, classifier_mlp.out_dim())?;
        Ok(ModelParams {
            edge_mlp,
            node_mlp,
            classifier_mlp,
        })
    }

    /// Glorot-style uniform weights (capped at 1) and biases in [-0.1, 0.1].
    pub fn random(shape: &ModelShape, rng: &mut impl Rng) -> Self {
        let (w, h) = (shape.hidden_width, shape.hidden_depth);
        ModelParams {
            edge_mlp: Mlp::random(shape.edge_in(), w, h, shape.d_edge, rng),
            node_mlp: Mlp::random(shape.node_in(), w, h, shape.d_node, rng),
            classifier_mlp: Mlp::random(shape.edge_in(), w, h, 1, rng),
        }
    }

    pub fn d_node(&self) -> usize {
        self.node_mlp.out_dim()
    }

    pub fn d_edge(&self) -> usize {
        self.edge_mlp.out_dim()
    }

    fn check_graph(&self, d_node: usize, d_edge: usize) -> Result<(), InetError> {
        if d_node != self.d_node() {
            return Err(InetError::Dimension {
                what: "node feature width",
                expected: self.d_node(),
                found: d_node,
            });
        }
        if d_edge != self.d_edge() {
            return Err(InetError::Dimension {
                what: "edge feature width",
                expected: self.d_edge(),
                found: d_edge,
            });
        }
        Ok(())
    }
}

/// Converts a quantized feature table into the working scalar type.
pub fn features_as<T: Scalar>(m: &Matrix<Fx>) -> Matrix<T> {
    m.map(|&v| T::from_fx(v))
}

fn check_indices(what: &'static str, idx: &[usize], len: usize) -> Result<(), InetError> {
    match idx.iter().find(|&&i| i >= len) {
        Some(&index) => Err(InetError::Index { what, index, len }),
        None => Ok(()),
    }
}

fn edge_inputs<T: Scalar>(buf: &mut Vec<T>, xi: &[T], xj: &[T], e: &[T]) {
    buf.clear();
    buf.extend_from_slice(xi);
    buf.extend_from_slice(xj);
    buf.extend_from_slice(e);
}

/// Edgeblock: `e'_ij = MLP_edge([x_i | x_j | e_ij])` for every edge. Senders
/// index `sender_nodes`, receivers index `receiver_nodes`; for a whole graph
/// both are the same table.
pub fn edge_block<T: Scalar>(
    sender_nodes: &Matrix<T>,
    receiver_nodes: &Matrix<T>,
    edges: &Matrix<T>,
    senders: &[usize],
    receivers: &[usize],
    mlp: &Mlp,
) -> Result<Matrix<T>, InetError> {
    check_edge_tables(sender_nodes, receiver_nodes, edges, senders, receivers, mlp)?;
    let mut out = Matrix::zeros(0, mlp.out_dim());
    let mut input = Vec::with_capacity(mlp.in_dim());
    for (k, (&s, &r)) in senders.iter().zip(receivers).enumerate() {
        edge_inputs(
            &mut input,
            sender_nodes.row(s),
            receiver_nodes.row(r),
            edges.row(k),
        );
        out.push_row(&mlp.forward(&input));
    }
    Ok(out)
}

fn check_edge_tables<T>(
    sender_nodes: &Matrix<T>,
    receiver_nodes: &Matrix<T>,
    edges: &Matrix<T>,
    senders: &[usize],
    receivers: &[usize],
    mlp: &Mlp,
) -> Result<(), InetError> {
    let width = sender_nodes.cols() + receiver_nodes.cols() + edges.cols();
    if width != mlp.in_dim() {
        return Err(InetError::Dimension {
            what: "edge MLP input",
            expected: mlp.in_dim(),
            found: width,
        });
    }
    if senders.len() != edges.rows() || receivers.len() != edges.rows() {
        return Err(InetError::Dimension {
            what: "edge index count",
            expected: edges.rows(),
            found: senders.len().min(receivers.len()),
        });
    }
    check_indices("sender", senders, sender_nodes.rows())?;
    check_indices("receiver", receivers, receiver_nodes.rows())
}

/// Aggregate: sums edge rows into their receivers in ascending edge id.
/// Receivers without incoming edges get zero rows.
pub fn aggregate<T: Scalar>(
    edge_feats: &Matrix<T>,
    receivers: &[usize],
    n_nodes: usize,
) -> Result<Matrix<T>, InetError> {
    if receivers.len() != edge_feats.rows() {
        return Err(InetError::Dimension {
            what: "receiver count",
            expected: edge_feats.rows(),
            found: receivers.len(),
        });
    }
    check_indices("receiver", receivers, n_nodes)?;
    let mut out = Matrix::zeros(n_nodes, edge_feats.cols());
    for (row, &r) in edge_feats.iter_rows().zip(receivers) {
        for (acc, &v) in out.row_mut(r).iter_mut().zip(row) {
            *acc = *acc + v;
        }
    }
    Ok(out)
}

/// Canonical two-level aggregation: per `(receiver, group)` partial sums in
/// ascending edge id, then partials combined in ascending group id.
pub fn aggregate_grouped<T: Scalar>(
    edge_feats: &Matrix<T>,
    receivers: &[usize],
    groups: &[usize],
    n_groups: usize,
    n_nodes: usize,
) -> Result<Matrix<T>, InetError> {
    if groups.len() != edge_feats.rows() {
        return Err(InetError::Dimension {
            what: "group label count",
            expected: edge_feats.rows(),
            found: groups.len(),
        });
    }
    check_indices("group", groups, n_groups)?;
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_groups];
    for (e, &g) in groups.iter().enumerate() {
        members[g].push(e);
    }
    let mut out = Matrix::zeros(n_nodes, edge_feats.cols());
    for edges in members {
        let partial = aggregate(
            &edge_feats.select_rows(&edges),
            &pick(receivers, &edges),
            n_nodes,
        )?;
        for v in 0..n_nodes {
            for (acc, &p) in out.row_mut(v).iter_mut().zip(partial.row(v)) {
                *acc = *acc + p;
            }
        }
    }
    Ok(out)
}

fn pick(values: &[usize], idx: &[usize]) -> Vec<usize> {
    idx.iter().map(|&i| values[i]).collect()
}

/// Nodeblock: `x'_v = MLP_node([x_v | a_v])`.
pub fn node_block<T: Scalar>(
    nodes: &Matrix<T>,
    aggregated: &Matrix<T>,
    mlp: &Mlp,
) -> Result<Matrix<T>, InetError> {
    if aggregated.rows() != nodes.rows() {
        return Err(InetError::Dimension {
            what: "aggregate rows",
            expected: nodes.rows(),
            found: aggregated.rows(),
        });
    }
    let width = nodes.cols() + aggregated.cols();
    if width != mlp.in_dim() {
        return Err(InetError::Dimension {
            what: "node MLP input",
            expected: mlp.in_dim(),
            found: width,
        });
    }
    let mut out = Matrix::zeros(0, mlp.out_dim());
    let mut input = Vec::with_capacity(width);
    for (x, a) in nodes.iter_rows().zip(aggregated.iter_rows()) {
        input.clear();
        input.extend_from_slice(x);
        input.extend_from_slice(a);
        out.push_row(&mlp.forward(&input));
    }
    Ok(out)
}

/// Edge scores `hard_sigmoid(MLP_cls([x_i | x_j | e_ij]))`, each in [0, 1].
pub fn classify_edges<T: Scalar>(
    sender_nodes: &Matrix<T>,
    receiver_nodes: &Matrix<T>,
    edges: &Matrix<T>,
    senders: &[usize],
    receivers: &[usize],
    mlp: &Mlp,
) -> Result<Vec<T>, InetError> {
    check_edge_tables(sender_nodes, receiver_nodes, edges, senders, receivers, mlp)?;
    if mlp.out_dim() != 1 {
        return Err(InetError::Dimension {
            what: "classifier output",
            expected: 1,
            found: mlp.out_dim(),
        });
    }
    let mut input = Vec::with_capacity(mlp.in_dim());
    Ok(senders
        .iter()
        .zip(receivers)
        .enumerate()
        .map(|(k, (&s, &r))| {
            edge_inputs(
                &mut input,
                sender_nodes.row(s),
                receiver_nodes.row(r),
                edges.row(k),
            );
            mlp.forward(&input)[0].hard_sigmoid()
        })
        .collect())
}

/// Edge-group id of every edge of a valid graph.
pub fn edge_group_labels(g: &HitGraph) -> Vec<usize> {
    g.senders()
        .iter()
        .zip(g.receivers())
        .map(|(&s, &r)| pair_index(g.node_layers()[s], g.node_layers()[r]).expect("legal pair"))
        .collect()
}

fn check_run(
    g_d_node: usize,
    g_d_edge: usize,
    params: &ModelParams,
    cfg: &InferConfig,
) -> Result<(), InetError> {
    cfg.validate()?;
    params.check_graph(g_d_node, g_d_edge)?;
    if params.d_node() != cfg.shape.d_node || params.d_edge() != cfg.shape.d_edge {
        return Err(InetError::Config(format!(
            "parameters are for d_node={}, d_edge={} but the configuration says d_node={}, d_edge={}",
            params.d_node(),
            params.d_edge(),
            cfg.shape.d_node,
            cfg.shape.d_edge
        )));
    }
    Ok(())
}

/// Whole-graph inference in arithmetic `T`. `cfg.mode` is not consulted
/// here; see [`run`] for mode dispatch.
pub fn infer<T: Scalar>(
    g: &HitGraph,
    params: &ModelParams,
    cfg: &InferConfig,
) -> Result<Vec<T>, InetError> {
    check_run(g.d_node(), g.d_edge(), params, cfg)?;
    let report = validate(g);
    if !report.is_empty() {
        return Err(GeomError::Invalid(report).into());
    }
    let groups = edge_group_labels(g);
    let (senders, receivers) = (g.senders(), g.receivers());
    let mut nodes: Matrix<T> = features_as(g.node_features());
    let mut edges: Matrix<T> = features_as(g.edge_features());
    for _ in 0..cfg.iterations {
        edges = edge_block(&nodes, &nodes, &edges, senders, receivers, &params.edge_mlp)?;
        let agg = aggregate_grouped(&edges, receivers, &groups, NUM_PAIRS, g.n_nodes())?;
        nodes = node_block(&nodes, &agg, &params.node_mlp)?;
    }
    classify_edges(
        &nodes,
        &nodes,
        &edges,
        senders,
        receivers,
        &params.classifier_mlp,
    )
}

/// Inference on a partition: every edge group and node group is processed on
/// its own (in parallel), partial aggregates are merged in canonical order,
/// and scores come back in global edge order.
pub fn infer_partitioned<T: Scalar>(
    p: &Partition,
    params: &ModelParams,
    cfg: &InferConfig,
) -> Result<Vec<T>, InetError> {
    check_run(p.d_node(), p.d_edge(), params, cfg)?;
    let mut nodes: Vec<Matrix<T>> = p
        .node_groups()
        .iter()
        .map(|ng| features_as(&ng.features))
        .collect();
    let mut edges: Vec<Matrix<T>> = p
        .edge_groups()
        .iter()
        .map(|eg| features_as(&eg.features))
        .collect();

    for _ in 0..cfg.iterations {
        let updated: Vec<(Matrix<T>, Matrix<T>)> = p
            .edge_groups()
            .par_iter()
            .zip(edges.par_iter())
            .map(|(eg, feats)| {
                let inner = &nodes[eg.pair.inner.index()];
                let outer = &nodes[eg.pair.outer.index()];
                let e = edge_block(
                    inner,
                    outer,
                    feats,
                    &eg.senders,
                    &eg.receivers,
                    &params.edge_mlp,
                )?;
                let partial = aggregate(&e, &eg.receivers, outer.rows())?;
                Ok((e, partial))
            })
            .collect::<Result<_, InetError>>()?;
        let (new_edges, partials): (Vec<_>, Vec<_>) = updated.into_iter().unzip();
        let merged = merge_aggregates(&partials, p)?;
        nodes = p
            .node_groups()
            .par_iter()
            .zip(nodes.par_iter())
            .map(|(ng, x)| node_block(x, &merged.select_rows(&ng.nodes), &params.node_mlp))
            .collect::<Result<_, _>>()?;
        edges = new_edges;
    }

    let per_group: Vec<Vec<T>> = p
        .edge_groups()
        .par_iter()
        .zip(edges.par_iter())
        .map(|(eg, e)| {
            let inner = &nodes[eg.pair.inner.index()];
            let outer = &nodes[eg.pair.outer.index()];
            classify_edges(
                inner,
                outer,
                e,
                &eg.senders,
                &eg.receivers,
                &params.classifier_mlp,
            )
        })
        .collect::<Result<_, _>>()?;
    let mut scores = vec![T::default(); p.n_edges()];
    for (eg, s) in p.edge_groups().iter().zip(per_group) {
        for (&edge, v) in eg.edges.iter().zip(s) {
            scores[edge] = v;
        }
    }
    Ok(scores)
}

/// Scores in the arithmetic chosen by the configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum Scores {
    Real(Vec<f64>),
    Fixed(Vec<Fx>),
}

impl Scores {
    pub fn len(&self) -> usize {
        match self {
            Scores::Real(v) => v.len(),
            Scores::Fixed(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            Scores::Real(v) => v.clone(),
            Scores::Fixed(v) => v.iter().map(|x| x.to_f64()).collect(),
        }
    }
}

pub fn run(g: &HitGraph, params: &ModelParams, cfg: &InferConfig) -> Result<Scores, InetError> {
    Ok(match cfg.mode {
        Mode::Real => Scores::Real(infer(g, params, cfg)?),
        Mode::Fixed => Scores::Fixed(infer(g, params, cfg)?),
    })
}

pub fn run_partitioned(
    p: &Partition,
    params: &ModelParams,
    cfg: &InferConfig,
) -> Result<Scores, InetError> {
    Ok(match cfg.mode {
        Mode::Real => Scores::Real(infer_partitioned(p, params, cfg)?),
        Mode::Fixed => Scores::Fixed(infer_partitioned(p, params, cfg)?),
    })
}

/// Partitions `g` and runs [`run_partitioned`].
pub fn run_geometric(
    g: &HitGraph,
    params: &ModelParams,
    cfg: &InferConfig,
) -> Result<Scores, InetError> {
    let p = geom::partition(g)?;
    run_partitioned(&p, params, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::LayerId::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fx(x: f64) -> Fx {
        Fx::quantize(x).unwrap()
    }

    fn linear(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64, bias: Vec<f64>) -> Mlp {
        let w = (0..rows * cols).map(|k| f(k / cols, k % cols)).collect();
        Mlp::new(vec![DenseLayer::new(
            Matrix::from_vec(rows, cols, w).unwrap(),
            bias,
        )
        .unwrap()])
        .unwrap()
    }

    fn two_node_graph() -> HitGraph {
        HitGraph::new(
            Matrix::from_rows(
                3,
                vec![
                    vec![fx(0.5), fx(-0.25), fx(1.0)],
                    vec![fx(0.75), fx(0.0), fx(-1.0)],
                ],
            )
            .unwrap(),
            vec![B1, B2],
            Matrix::from_rows(4, vec![vec![fx(0.125), fx(-0.5), fx(0.25), fx(2.0)]]).unwrap(),
            vec![0],
            vec![1],
        )
        .unwrap()
    }

    #[test]
    fn zero_weights_give_bias() {
        let g = two_node_graph();
        let mlp = linear(4, 10, |_, _| 0.0, vec![0.5, -0.25, 1.0, 0.0]);
        let nodes: Matrix<Fx> = features_as(g.node_features());
        let edges: Matrix<Fx> = features_as(g.edge_features());
        let out = edge_block(&nodes, &nodes, &edges, g.senders(), g.receivers(), &mlp).unwrap();
        assert_eq!(out.row(0), &[fx(0.5), fx(-0.25), fx(1.0), fx(0.0)]);
    }

    #[test]
    fn identity_selects_edge_feature() {
        let g = two_node_graph();
        let mlp = linear(
            4,
            10,
            |o, i| if i == 6 + o { 1.0 } else { 0.0 },
            vec![0.0; 4],
        );
        let nodes: Matrix<Fx> = features_as(g.node_features());
        let edges: Matrix<Fx> = features_as(g.edge_features());
        let out = edge_block(&nodes, &nodes, &edges, g.senders(), g.receivers(), &mlp).unwrap();
        assert_eq!(out, *g.edge_features());
    }

    #[test]
    fn edge_block_dimension_mismatch() {
        let g = two_node_graph();
        let mlp = linear(4, 9, |_, _| 0.0, vec![0.0; 4]);
        let nodes: Matrix<f64> = features_as(g.node_features());
        let edges: Matrix<f64> = features_as(g.edge_features());
        assert!(matches!(
            edge_block(&nodes, &nodes, &edges, g.senders(), g.receivers(), &mlp),
            Err(InetError::Dimension { .. })
        ));
    }

    #[test]
    fn aggregate_examples() {
        let empty: Matrix<Fx> = Matrix::zeros(0, 2);
        assert_eq!(aggregate(&empty, &[], 4).unwrap(), Matrix::zeros(4, 2));
        let feats = Matrix::from_rows(1, vec![vec![fx(1.0)], vec![fx(2.5)]]).unwrap();
        let out = aggregate(&feats, &[3, 3], 5).unwrap();
        for v in 0..5 {
            let expected = if v == 3 { fx(3.5) } else { Fx::ZERO };
            assert_eq!(out.row(v), &[expected]);
        }
        assert!(matches!(
            aggregate(&feats, &[3, 5], 5),
            Err(InetError::Index { index: 5, .. })
        ));
    }

    #[test]
    fn node_block_examples() {
        let g = two_node_graph();
        let nodes: Matrix<Fx> = features_as(g.node_features());
        let zero_agg = Matrix::zeros(2, 4);
        let bias = linear(3, 7, |_, _| 0.0, vec![0.25, 0.5, -0.75]);
        let out = node_block(&nodes, &zero_agg, &bias).unwrap();
        assert!(out.iter_rows().all(|r| r == [fx(0.25), fx(0.5), fx(-0.75)]));
        let ident = linear(3, 7, |o, i| if o == i { 1.0 } else { 0.0 }, vec![0.0; 3]);
        assert_eq!(node_block(&nodes, &zero_agg, &ident).unwrap(), nodes);
        assert!(node_block(&nodes, &Matrix::zeros(1, 4), &ident).is_err());
    }

    #[test]
    fn classifier_examples() {
        let g = two_node_graph();
        let nodes: Matrix<Fx> = features_as(g.node_features());
        let edges: Matrix<Fx> = features_as(g.edge_features());
        let zero = linear(1, 10, |_, _| 0.0, vec![0.0]);
        let s = classify_edges(&nodes, &nodes, &edges, g.senders(), g.receivers(), &zero).unwrap();
        assert_eq!(s, vec![Fx::HALF]);
        let big = linear(1, 10, |_, _| 0.0, vec![4.0]);
        let s = classify_edges(&nodes, &nodes, &edges, g.senders(), g.receivers(), &big).unwrap();
        assert_eq!(s, vec![Fx::ONE]);
    }

    #[test]
    fn empty_graph_gives_empty_scores() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let params = ModelParams::random(&ModelShape::default(), &mut rng);
        let cfg = InferConfig::default();
        let g = HitGraph::empty(3, 4);
        assert!(infer::<Fx>(&g, &params, &cfg).unwrap().is_empty());
        let p = geom::partition(&g).unwrap();
        assert!(infer_partitioned::<Fx>(&p, &params, &cfg)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn zero_iterations_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let params = ModelParams::random(&ModelShape::default(), &mut rng);
        let cfg = InferConfig {
            iterations: 0,
            ..Default::default()
        };
        assert!(matches!(
            infer::<f64>(&two_node_graph(), &params, &cfg),
            Err(InetError::Config(_))
        ));
    }

    #[test]
    fn params_shape_checks() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = ModelParams::random(&ModelShape::default(), &mut rng);
        let b = ModelParams::random(
            &ModelShape {
                d_node: 2,
                ..Default::default()
            },
            &mut rng,
        );
        assert!(ModelParams::new(
            a.edge_mlp.clone(),
            b.node_mlp.clone(),
            a.classifier_mlp.clone()
        )
        .is_err());
        assert!(ModelParams::new(
            a.edge_mlp.clone(),
            a.node_mlp.clone(),
            a.classifier_mlp.clone()
        )
        .is_ok());
        let cfg = InferConfig {
            shape: ModelShape {
                d_node: 2,
                ..Default::default()
            },
            ..Default::default()
        };
        assert!(infer::<Fx>(&two_node_graph(), &a, &cfg).is_err());
    }

    #[test]
    fn invalid_graph_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let params = ModelParams::random(&ModelShape::default(), &mut rng);
        let g = HitGraph::new(
            Matrix::zeros(2, 3),
            vec![B1, B3],
            Matrix::zeros(1, 4),
            vec![0],
            vec![1],
        )
        .unwrap();
        assert!(matches!(
            infer::<Fx>(&g, &params, &InferConfig::default()),
            Err(InetError::Geom(_))
        ));
    }
}
