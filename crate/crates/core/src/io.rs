//! Graph and weight files.
//!
//! A graph file has a node section and an edge section of comma-separated
//! rows. Features are raw Q7.7 integers.
//!
//! ```text
//! [nodes] dim=3
//! id,layer,f0,f1,f2
//! 0,B1,12,-40,128
//! [edges] dim=4
//! id,sender,receiver,f0,f1,f2,f3
//! 0,0,1,5,0,-3,7
//! ```
//!
//! Ids must count up from 0. Writing a loaded canonical file reproduces it
//! byte for byte.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fxp::Fx;
use crate::geom::{HitGraph, LayerId};
use crate::inet::{DenseLayer, InetError, Mlp, ModelParams};
use crate::matrix::Matrix;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("weights: {0}")]
    Json(#[from] serde_json::Error),
    #[error("weights: {0}")]
    Weights(#[from] InetError),
}

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> IoError {
    IoError::Parse {
        line,
        column,
        message: message.into(),
    }
}

pub fn read_file(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), IoError> {
    std::fs::write(path, contents).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })
}

pub fn format_graph(g: &HitGraph) -> String {
    let mut s = String::new();
    let feats = |s: &mut String, row: &[Fx]| {
        for v in row {
            write!(s, ",{}", v.raw()).unwrap();
        }
        s.push('\n');
    };
    writeln!(s, "[nodes] dim={}", g.d_node()).unwrap();
    s.push_str("id,layer");
    (0..g.d_node()).for_each(|k| write!(s, ",f{k}").unwrap());
    s.push('\n');
    for (i, (row, layer)) in g
        .node_features()
        .iter_rows()
        .zip(g.node_layers())
        .enumerate()
    {
        write!(s, "{i},{layer}").unwrap();
        feats(&mut s, row);
    }
    writeln!(s, "[edges] dim={}", g.d_edge()).unwrap();
    s.push_str("id,sender,receiver");
    (0..g.d_edge()).for_each(|k| write!(s, ",f{k}").unwrap());
    s.push('\n');
    for (i, row) in g.edge_features().iter_rows().enumerate() {
        write!(s, "{i},{},{}", g.senders()[i], g.receivers()[i]).unwrap();
        feats(&mut s, row);
    }
    s
}

struct Lines<'a> {
    inner: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            inner: text.lines().enumerate().peekable(),
            last: 0,
        }
    }

    /// Next non-blank line with its 1-based number.
    fn next(&mut self) -> Option<(usize, &'a str)> {
        for (i, l) in self.inner.by_ref() {
            self.last = i + 1;
            if !l.trim().is_empty() {
                return Some((i + 1, l.trim_end_matches('\r')));
            }
        }
        None
    }

    fn peek_section(&mut self) -> bool {
        while let Some((_, l)) = self.inner.peek() {
            if l.trim().is_empty() {
                self.inner.next();
            } else {
                return l.starts_with('[');
            }
        }
        true
    }
}

fn section(lines: &mut Lines, name: &str) -> Result<usize, IoError> {
    let Some((n, l)) = lines.next() else {
        return Err(parse_err(
            lines.last + 1,
            1,
            format!("missing [{name}] section"),
        ));
    };
    let rest = l
        .strip_prefix(&format!("[{name}]"))
        .ok_or_else(|| parse_err(n, 1, format!("expected [{name}] section header")))?;
    let dim = rest
        .trim()
        .strip_prefix("dim=")
        .ok_or_else(|| parse_err(n, name.len() + 3, "expected dim=<n>"))?;
    dim.parse()
        .map_err(|_| parse_err(n, name.len() + 7, format!("bad dimension {dim:?}")))
}

fn header(lines: &mut Lines, fixed: &[&str], dim: usize) -> Result<(), IoError> {
    let Some((n, l)) = lines.next() else {
        return Err(parse_err(lines.last + 1, 1, "missing column header"));
    };
    let expected: Vec<String> = fixed
        .iter()
        .map(|s| s.to_string())
        .chain((0..dim).map(|k| format!("f{k}")))
        .collect();
    if l.split(',')
        .map(str::trim)
        .ne(expected.iter().map(String::as_str))
    {
        return Err(parse_err(
            n,
            1,
            format!("expected header {}", expected.join(",")),
        ));
    }
    Ok(())
}

/// Splits a row into fields with their 1-based starting columns.
fn fields(l: &str) -> Vec<(usize, &str)> {
    let mut col = 1;
    l.split(',')
        .map(|f| {
            let c = col;
            col += f.len() + 1;
            (c, f.trim())
        })
        .collect()
}

fn int<T: std::str::FromStr>(n: usize, (col, f): (usize, &str), what: &str) -> Result<T, IoError> {
    f.parse()
        .map_err(|_| parse_err(n, col, format!("{what}: cannot parse {f:?}")))
}

fn feature(n: usize, field: (usize, &str)) -> Result<Fx, IoError> {
    let raw: i64 = int(n, field, "feature")?;
    Fx::from_raw(raw).map_err(|e| parse_err(n, field.0, format!("feature: {e}")))
}

/// Parses a graph file. Edge endpoints must name existing nodes; layer
/// adjacency is left to [`crate::geom::validate`].
pub fn parse_graph(text: &str) -> Result<HitGraph, IoError> {
    let mut lines = Lines::new(text);
    let d_node = section(&mut lines, "nodes")?;
    header(&mut lines, &["id", "layer"], d_node)?;
    let mut layers = Vec::new();
    let mut nfeat = Vec::new();
    while !lines.peek_section() {
        let (n, l) = lines.next().unwrap();
        let f = fields(l);
        if f.len() != 2 + d_node {
            return Err(parse_err(
                n,
                1,
                format!("expected {} fields, found {}", 2 + d_node, f.len()),
            ));
        }
        let id: usize = int(n, f[0], "node id")?;
        if id != layers.len() {
            return Err(parse_err(
                n,
                f[0].0,
                format!("node id {id} out of sequence, expected {}", layers.len()),
            ));
        }
        layers.push(
            f[1].1
                .parse::<LayerId>()
                .map_err(|e| parse_err(n, f[1].0, e.to_string()))?,
        );
        for &field in &f[2..] {
            nfeat.push(feature(n, field)?);
        }
    }
    let d_edge = section(&mut lines, "edges")?;
    header(&mut lines, &["id", "sender", "receiver"], d_edge)?;
    let (mut senders, mut receivers, mut efeat) = (Vec::new(), Vec::new(), Vec::new());
    while let Some((n, l)) = lines.next() {
        if l.starts_with('[') {
            return Err(parse_err(n, 1, "unexpected section"));
        }
        let f = fields(l);
        if f.len() != 3 + d_edge {
            return Err(parse_err(
                n,
                1,
                format!("expected {} fields, found {}", 3 + d_edge, f.len()),
            ));
        }
        let id: usize = int(n, f[0], "edge id")?;
        if id != senders.len() {
            return Err(parse_err(
                n,
                f[0].0,
                format!("edge id {id} out of sequence, expected {}", senders.len()),
            ));
        }
        for (k, list) in [(1, &mut senders), (2, &mut receivers)] {
            let v: usize = int(n, f[k], "node index")?;
            if v >= layers.len() {
                return Err(parse_err(
                    n,
                    f[k].0,
                    format!("node index {v} out of range for {} nodes", layers.len()),
                ));
            }
            list.push(v);
        }
        for &field in &f[3..] {
            efeat.push(feature(n, field)?);
        }
    }
    let nodes = Matrix::from_vec(layers.len(), d_node, nfeat).expect("row lengths checked");
    let edges = Matrix::from_vec(senders.len(), d_edge, efeat).expect("row lengths checked");
    Ok(HitGraph::new(nodes, layers, edges, senders, receivers).expect("tables line up"))
}

pub fn load_graph(path: &Path) -> Result<HitGraph, IoError> {
    parse_graph(&read_file(path)?)
}

pub fn save_graph(g: &HitGraph, path: &Path) -> Result<(), IoError> {
    write_file(path, &format_graph(g))
}

/// One dense layer in the weight file; `weights` is `out x in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerRecord {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub weights_raw: Vec<Vec<i64>>,
    pub bias_raw: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightFile {
    pub format: String,
    pub version: u32,
    pub d_node: usize,
    pub d_edge: usize,
    pub edge_mlp: Vec<LayerRecord>,
    pub node_mlp: Vec<LayerRecord>,
    pub classifier_mlp: Vec<LayerRecord>,
}

pub const WEIGHTS_FORMAT: &str = "trackgnn-weights";
pub const WEIGHTS_VERSION: u32 = 1;

fn layer_record(l: &DenseLayer) -> LayerRecord {
    LayerRecord {
        in_dim: l.in_dim(),
        out_dim: l.out_dim(),
        weights: l.real_weights().iter_rows().map(<[f64]>::to_vec).collect(),
        bias: l.real_bias().to_vec(),
        weights_raw: l
            .fx_weights()
            .iter_rows()
            .map(|r| r.iter().map(|v| v.raw() as i64).collect())
            .collect(),
        bias_raw: l.fx_bias().iter().map(|v| v.raw() as i64).collect(),
    }
}

fn layer_from_record(r: &LayerRecord) -> Result<DenseLayer, InetError> {
    let dim = |what, expected: usize, found: usize| {
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
    dim("weight rows", r.out_dim, r.weights.len())?;
    dim("raw weight rows", r.out_dim, r.weights_raw.len())?;
    for (w, q) in r.weights.iter().zip(&r.weights_raw) {
        dim("weight columns", r.in_dim, w.len())?;
        dim("raw weight columns", r.in_dim, q.len())?;
    }
    let fx = |v: &i64| Fx::from_raw(*v).map_err(|_| InetError::QuantizationMismatch);
    let weights = Matrix::from_vec(r.out_dim, r.in_dim, r.weights.concat()).expect("checked");
    let raw: Vec<Fx> = r
        .weights_raw
        .iter()
        .flatten()
        .map(fx)
        .collect::<Result<_, _>>()?;
    let bias_raw: Vec<Fx> = r.bias_raw.iter().map(fx).collect::<Result<_, _>>()?;
    dim("raw bias length", r.bias.len(), bias_raw.len())?;
    DenseLayer::with_quantized(
        weights,
        r.bias.clone(),
        Matrix::from_vec(r.out_dim, r.in_dim, raw).expect("checked"),
        bias_raw,
    )
}

fn mlp_from_records(rs: &[LayerRecord]) -> Result<Mlp, InetError> {
    Mlp::new(rs.iter().map(layer_from_record).collect::<Result<_, _>>()?)
}

pub fn weights_to_file(p: &ModelParams) -> WeightFile {
    let recs = |m: &Mlp| m.layers().iter().map(layer_record).collect();
    WeightFile {
        format: WEIGHTS_FORMAT.into(),
        version: WEIGHTS_VERSION,
        d_node: p.d_node(),
        d_edge: p.d_edge(),
        edge_mlp: recs(&p.edge_mlp),
        node_mlp: recs(&p.node_mlp),
        classifier_mlp: recs(&p.classifier_mlp),
    }
}

pub fn weights_from_file(f: &WeightFile) -> Result<ModelParams, InetError> {
    if f.format != WEIGHTS_FORMAT || f.version != WEIGHTS_VERSION {
        return Err(InetError::Config(format!(
            "unsupported weight format {} v{}",
            f.format, f.version
        )));
    }
    let p = ModelParams::new(
        mlp_from_records(&f.edge_mlp)?,
        mlp_from_records(&f.node_mlp)?,
        mlp_from_records(&f.classifier_mlp)?,
    )?;
    if p.d_node() != f.d_node || p.d_edge() != f.d_edge {
        return Err(InetError::Config(
            "declared feature widths do not match the layers".into(),
        ));
    }
    Ok(p)
}

pub fn format_weights(p: &ModelParams) -> String {
    let mut s = serde_json::to_string_pretty(&weights_to_file(p)).expect("serializable");
    s.push('\n');
    s
}

pub fn parse_weights(text: &str) -> Result<ModelParams, IoError> {
    let f: WeightFile = serde_json::from_str(text)?;
    Ok(weights_from_file(&f)?)
}

pub fn load_weights(path: &Path) -> Result<ModelParams, IoError> {
    parse_weights(&read_file(path)?)
}

pub fn save_weights(p: &ModelParams, path: &Path) -> Result<(), IoError> {
    write_file(path, &format_weights(p))
}
