//! Detector geometry: tracker layers, the legal layer-pair adjacency, hit
//! graphs, and the partition of a hit graph into per-layer node groups and
//! per-pair edge groups.
//!
//! One z-sector of the inner tracker has four barrel layers (B1..B4) and
//! seven endcap disks (E1..E7). Particles travel outward, so an edge always
//! runs from an inner layer to the next layer out. The adjacency used here is
//! `Bk -> Bk+1`, `Bk -> E1` and `Ek -> Ek+1`, which gives 13 ordered pairs.

mod graph;
mod hits;
mod partition;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use graph::{validate, Diagnostic, HitGraph, ValidationReport};
pub use hits::{
    build_graph, percentile_size, sector_split, AcceptAll, DetectorLayer, EdgeCut, FeatureScale,
    Hit, RawHit, WindowCut,
};
pub use partition::{merge_aggregates, partition, EdgeGroup, NodeGroup, Partition};

pub const NUM_LAYERS: usize = 11;
pub const NUM_PAIRS: usize = 13;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("{what}: expected {expected}, found {found}")]
    Shape {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invalid graph:\n{0}")]
    Invalid(ValidationReport),
    #[error("unknown layer label {0:?}")]
    UnknownLayer(String),
    #[error("barrel layer index {0} outside 1..=4")]
    BadBarrel(u8),
    #[error("sector {sector} has {disks} endcap disks, at most 7 are supported")]
    TooManyDisks { sector: usize, disks: usize },
    #[error("hit {0} has a non-finite coordinate")]
    NonFiniteHit(usize),
    #[error("percentile {0} outside [0, 100]")]
    BadPercentile(f64),
    #[error("empty dataset")]
    EmptyDataset,
}

/// A tracker layer within one z-sector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum LayerId {
    B1,
    B2,
    B3,
    B4,
    E1,
    E2,
    E3,
    E4,
    E5,
    E6,
    E7,
}

/// Node-group type: barrel layers carry more hits than endcap disks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NodeType {
    A,
    B,
}

/// Edge-group type, from the types of its two node groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PairType {
    AA,
    AB,
    BB,
}

impl LayerId {
    pub const ALL: [LayerId; NUM_LAYERS] = [
        LayerId::B1,
        LayerId::B2,
        LayerId::B3,
        LayerId::B4,
        LayerId::E1,
        LayerId::E2,
        LayerId::E3,
        LayerId::E4,
        LayerId::E5,
        LayerId::E6,
        LayerId::E7,
    ];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<LayerId> {
        LayerId::ALL.get(i).copied()
    }

    pub fn barrel(k: u8) -> Option<LayerId> {
        (1..=4).contains(&k).then(|| LayerId::ALL[k as usize - 1])
    }

    pub fn endcap(k: u8) -> Option<LayerId> {
        (1..=7).contains(&k).then(|| LayerId::ALL[k as usize + 3])
    }

    pub fn is_barrel(self) -> bool {
        self.index() < 4
    }

    pub fn node_type(self) -> NodeType {
        if self.is_barrel() {
            NodeType::A
        } else {
            NodeType::B
        }
    }

    pub fn as_str(self) -> &'static str {
        const NAMES: [&str; NUM_LAYERS] = [
            "B1", "B2", "B3", "B4", "E1", "E2", "E3", "E4", "E5", "E6", "E7",
        ];
        NAMES[self.index()]
    }
}

impl fmt::Display for LayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LayerId {
    type Err = GeomError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LayerId::ALL
            .iter()
            .copied()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| GeomError::UnknownLayer(s.to_string()))
    }
}

impl fmt::Display for NodeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NodeType::A => "A",
            NodeType::B => "B",
        })
    }
}

impl fmt::Display for PairType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PairType::AA => "A-A",
            PairType::AB => "A-B",
            PairType::BB => "B-B",
        })
    }
}

/// An ordered (inner, outer) layer pair. Edges run inner -> outer, so the
/// inner layer holds senders and the outer layer holds receivers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LayerPair {
    pub inner: LayerId,
    pub outer: LayerId,
}

impl LayerPair {
    pub const fn new(inner: LayerId, outer: LayerId) -> Self {
        LayerPair { inner, outer }
    }

    pub fn pair_type(self) -> PairType {
        match (self.inner.node_type(), self.outer.node_type()) {
            (NodeType::A, NodeType::A) => PairType::AA,
            (NodeType::B, NodeType::B) => PairType::BB,
            _ => PairType::AB,
        }
    }

    /// Position in [`legal_pairs`], if legal.
    pub fn index(self) -> Option<usize> {
        pair_index(self.inner, self.outer)
    }

    pub fn label(self) -> String {
        format!("{}-{}", self.inner, self.outer)
    }
}

impl fmt::Display for LayerPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.inner, self.outer)
    }
}

use LayerId::*;

static LEGAL_PAIRS: [LayerPair; NUM_PAIRS] = [
    LayerPair::new(B1, B2),
    LayerPair::new(B2, B3),
    LayerPair::new(B3, B4),
    LayerPair::new(B1, E1),
    LayerPair::new(B2, E1),
    LayerPair::new(B3, E1),
    LayerPair::new(B4, E1),
    LayerPair::new(E1, E2),
    LayerPair::new(E2, E3),
    LayerPair::new(E3, E4),
    LayerPair::new(E4, E5),
    LayerPair::new(E5, E6),
    LayerPair::new(E6, E7),
];

/// The 13 legal pairs in canonical order. This order is also the order in
/// which per-group partial sums are combined.
pub fn legal_pairs() -> &'static [LayerPair; NUM_PAIRS] {
    &LEGAL_PAIRS
}

pub fn pair_index(inner: LayerId, outer: LayerId) -> Option<usize> {
    LEGAL_PAIRS
        .iter()
        .position(|p| p.inner == inner && p.outer == outer)
}
