//! Seeded synthetic hit graphs with prescribed per-layer and per-pair sizes.

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fxp::Fx;
use crate::geom::{legal_pairs, HitGraph, LayerId, NodeType, PairType, NUM_LAYERS, NUM_PAIRS};
use crate::matrix::Matrix;

/// Nominal graph: the size covering 95% of collision events in one z-sector.
pub const NOMINAL_NODES: usize = 739;
pub const NOMINAL_EDGES: usize = 1252;

/// Representative per-group sizes: node types A and B, edge types A-A, A-B, B-B.
pub const TYPE_NODE_SIZES: [usize; 2] = [138, 62];
pub const TYPE_EDGE_SIZES: [usize; 3] = [277, 77, 87];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynthError {
    #[error(
        "pair {pair} asks for {edges} edges but only {max} sender/receiver combinations exist"
    )]
    TooManyEdges {
        pair: String,
        edges: usize,
        max: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Profile {
    /// Indexed by [`LayerId::index`].
    pub nodes: [usize; NUM_LAYERS],
    /// Indexed like [`legal_pairs`].
    pub edges: [usize; NUM_PAIRS],
    pub d_node: usize,
    pub d_edge: usize,
}

impl Default for Profile {
    /// Type-level ratios rescaled to exactly the nominal node and edge totals.
    fn default() -> Self {
        Profile::from_type_sizes(
            TYPE_NODE_SIZES,
            TYPE_EDGE_SIZES,
            NOMINAL_NODES,
            NOMINAL_EDGES,
        )
    }
}

/// Largest-remainder apportionment of `total` over `weights`; ties go to the
/// earlier index.
fn apportion(weights: &[usize], total: usize) -> Vec<usize> {
    let sum: usize = weights.iter().sum();
    if sum == 0 {
        return vec![0; weights.len()];
    }
    let mut out: Vec<usize> = weights.iter().map(|&w| w * total / sum).collect();
    let mut rema: Vec<(usize, usize)> = weights
        .iter()
        .enumerate()
        .map(|(i, &w)| (w * total % sum, i))
        .collect();
    rema.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let missing = total - out.iter().sum::<usize>();
    for &(_, i) in rema.iter().take(missing) {
        out[i] += 1;
    }
    out
}

impl Profile {
    pub fn empty() -> Self {
        Profile {
            nodes: [0; NUM_LAYERS],
            edges: [0; NUM_PAIRS],
            d_node: 3,
            d_edge: 4,
        }
    }

    /// Gives every layer its type's size and every pair its type's size, then
    /// rescales each kind to the requested total.
    pub fn from_type_sizes(
        node_sizes: [usize; 2],
        edge_sizes: [usize; 3],
        total_nodes: usize,
        total_edges: usize,
    ) -> Self {
        let node_w: Vec<usize> = LayerId::ALL
            .iter()
            .map(|l| match l.node_type() {
                NodeType::A => node_sizes[0],
                NodeType::B => node_sizes[1],
            })
            .collect();
        let edge_w: Vec<usize> = legal_pairs()
            .iter()
            .map(|p| match p.pair_type() {
                PairType::AA => edge_sizes[0],
                PairType::AB => edge_sizes[1],
                PairType::BB => edge_sizes[2],
            })
            .collect();
        Profile {
            nodes: apportion(&node_w, total_nodes).try_into().unwrap(),
            edges: apportion(&edge_w, total_edges).try_into().unwrap(),
            d_node: 3,
            d_edge: 4,
        }
    }

    /// A random feasible profile with `n_nodes` nodes and roughly
    /// `edge_factor * n_nodes` edges.
    pub fn random(n_nodes: usize, edge_factor: f64, rng: &mut impl Rng) -> Self {
        let mut nodes = [0usize; NUM_LAYERS];
        for _ in 0..n_nodes {
            // Barrel layers twice as likely.
            let k = rng.gen_range(0..NUM_LAYERS + 4);
            nodes[if k < 8 { k / 2 } else { k - 4 }] += 1;
        }
        let target = (edge_factor * n_nodes as f64) as usize;
        let mut edges = [0usize; NUM_PAIRS];
        let caps: Vec<usize> = legal_pairs()
            .iter()
            .map(|p| nodes[p.inner.index()] * nodes[p.outer.index()])
            .collect();
        let cap_total: usize = caps.iter().sum();
        if cap_total > 0 {
            for _ in 0..target.min(cap_total) {
                let mut pick = rng.gen_range(0..cap_total);
                for (k, &c) in caps.iter().enumerate() {
                    if pick < c {
                        if edges[k] < c {
                            edges[k] += 1;
                        }
                        break;
                    }
                    pick -= c;
                }
            }
        }
        Profile {
            nodes,
            edges,
            d_node: 3,
            d_edge: 4,
        }
    }

    pub fn total_nodes(&self) -> usize {
        self.nodes.iter().sum()
    }

    pub fn total_edges(&self) -> usize {
        self.edges.iter().sum()
    }
}

fn uniform_fx(rng: &mut impl Rng) -> Fx {
    Fx::quantize(rng.gen_range(-1.0..=1.0)).expect("finite")
}

/// Builds a graph whose layer occupancies and pair edge counts equal the
/// profile. Node and edge orders are shuffled; features are uniform in
/// [-1, 1] before quantization. Identical seeds give identical graphs.
pub fn generate(seed: u64, profile: &Profile) -> Result<HitGraph, SynthError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (k, p) in legal_pairs().iter().enumerate() {
        let max = profile.nodes[p.inner.index()] * profile.nodes[p.outer.index()];
        if profile.edges[k] > max {
            return Err(SynthError::TooManyEdges {
                pair: p.label(),
                edges: profile.edges[k],
                max,
            });
        }
    }

    let mut layers: Vec<LayerId> = LayerId::ALL
        .iter()
        .flat_map(|&l| std::iter::repeat_n(l, profile.nodes[l.index()]))
        .collect();
    layers.shuffle(&mut rng);
    let mut by_layer: Vec<Vec<usize>> = vec![Vec::new(); NUM_LAYERS];
    for (i, l) in layers.iter().enumerate() {
        by_layer[l.index()].push(i);
    }

    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(profile.total_edges());
    for (k, p) in legal_pairs().iter().enumerate() {
        let inner = &by_layer[p.inner.index()];
        let outer = &by_layer[p.outer.index()];
        if profile.edges[k] == 0 {
            continue;
        }
        let mut picks =
            index::sample(&mut rng, inner.len() * outer.len(), profile.edges[k]).into_vec();
        picks.sort_unstable();
        pairs.extend(
            picks
                .into_iter()
                .map(|c| (inner[c / outer.len()], outer[c % outer.len()])),
        );
    }
    pairs.shuffle(&mut rng);

    let n = layers.len();
    let node_features = Matrix::from_vec(
        n,
        profile.d_node,
        (0..n * profile.d_node)
            .map(|_| uniform_fx(&mut rng))
            .collect(),
    )
    .unwrap();
    let m = pairs.len();
    let edge_features = Matrix::from_vec(
        m,
        profile.d_edge,
        (0..m * profile.d_edge)
            .map(|_| uniform_fx(&mut rng))
            .collect(),
    )
    .unwrap();
    let (senders, receivers) = pairs.into_iter().unzip();
    Ok(
        HitGraph::new(node_features, layers, edge_features, senders, receivers)
            .expect("consistent tables"),
    )
}

/// A random valid graph with `n_nodes` nodes, for tests and sweeps.
pub fn random_graph(seed: u64, n_nodes: usize) -> HitGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let factor = rng.gen_range(1.0..2.5);
    let profile = Profile::random(n_nodes, factor, &mut rng);
    generate(seed, &profile).expect("random profiles are feasible")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{partition, validate};

    #[test]
    fn default_profile_hits_nominal_totals() {
        let p = Profile::default();
        assert_eq!(p.total_nodes(), 739);
        assert_eq!(p.total_edges(), 1252);
        // Type-A layers are all larger than type-B layers.
        assert!(p.nodes[..4].iter().min() > p.nodes[4..].iter().max());
        let g = generate(0, &p).unwrap();
        assert_eq!((g.n_nodes(), g.n_edges()), (739, 1252));
        assert!(validate(&g).is_empty());
        let part = partition(&g).unwrap();
        for (k, eg) in part.edge_groups().iter().enumerate() {
            assert_eq!(eg.len(), p.edges[k]);
        }
        for l in LayerId::ALL {
            assert_eq!(part.node_group(l).len(), p.nodes[l.index()]);
        }
    }

    #[test]
    fn apportion_sums_exactly() {
        assert_eq!(apportion(&[1, 1, 1], 10), vec![4, 3, 3]);
        assert_eq!(apportion(&[0, 0], 5), vec![0, 0]);
        assert_eq!(apportion(&[138, 62], 200), vec![138, 62]);
    }

    #[test]
    fn empty_profile_gives_empty_graph() {
        let g = generate(5, &Profile::empty()).unwrap();
        assert_eq!((g.n_nodes(), g.n_edges()), (0, 0));
    }

    #[test]
    fn deterministic_given_seed() {
        assert_eq!(
            generate(42, &Profile::default()).unwrap(),
            generate(42, &Profile::default()).unwrap()
        );
        assert_ne!(
            generate(42, &Profile::default()).unwrap(),
            generate(43, &Profile::default()).unwrap()
        );
    }

    #[test]
    fn infeasible_profile_rejected() {
        let mut p = Profile::empty();
        p.nodes[0] = 1;
        p.nodes[1] = 1;
        p.edges[0] = 2;
        assert!(matches!(
            generate(0, &p),
            Err(SynthError::TooManyEdges { .. })
        ));
    }

    #[test]
    fn features_in_unit_range() {
        let g = random_graph(9, 200);
        assert!(validate(&g).is_empty());
        assert_eq!(g.n_nodes(), 200);
        let in_range = |v: &Fx| v.to_f64().abs() <= 1.0;
        assert!(g.node_features().as_slice().iter().all(in_range));
        assert!(g.edge_features().as_slice().iter().all(in_range));
    }
}
