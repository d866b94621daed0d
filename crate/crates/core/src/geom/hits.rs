use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{legal_pairs, GeomError, HitGraph, LayerId};
use crate::fxp::Fx;
use crate::matrix::Matrix;

/// Detector label of a hit before the z-sector split. Endcap disks carry an
/// arbitrary detector id; they are renumbered per sector by distance from
/// the interaction point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DetectorLayer {
    Barrel(u8),
    Endcap(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawHit {
    pub r: f64,
    pub phi: f64,
    pub z: f64,
    pub layer: DetectorLayer,
}

/// A hit labelled with its sector-local layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub r: f64,
    pub phi: f64,
    pub z: f64,
    pub layer: LayerId,
}

/// Splits hits by the sign of z (z >= 0 goes to sector 0) and relabels the
/// endcap disks of each sector E1.. by increasing |z|.
pub fn sector_split(hits: &[RawHit]) -> Result<[Vec<Hit>; 2], GeomError> {
    let mut sectors: [Vec<(usize, &RawHit)>; 2] = [Vec::new(), Vec::new()];
    for (i, h) in hits.iter().enumerate() {
        if !(h.r.is_finite() && h.phi.is_finite() && h.z.is_finite()) {
            return Err(GeomError::NonFiniteHit(i));
        }
        sectors[usize::from(h.z < 0.0)].push((i, h));
    }

    let mut out: [Vec<Hit>; 2] = [Vec::new(), Vec::new()];
    for (sector, members) in sectors.iter().enumerate() {
        // Disk position: the smallest |z| seen on it.
        let mut disk_z: BTreeMap<u32, f64> = BTreeMap::new();
        for (_, h) in members {
            if let DetectorLayer::Endcap(id) = h.layer {
                let e = disk_z.entry(id).or_insert(f64::INFINITY);
                *e = e.min(h.z.abs());
            }
        }
        if disk_z.len() > 7 {
            return Err(GeomError::TooManyDisks {
                sector,
                disks: disk_z.len(),
            });
        }
        let mut order: Vec<(u32, f64)> = disk_z.into_iter().collect();
        order.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        let rank: BTreeMap<u32, u8> = order
            .iter()
            .enumerate()
            .map(|(k, &(id, _))| (id, k as u8 + 1))
            .collect();

        for (_, h) in members {
            let layer = match h.layer {
                DetectorLayer::Barrel(k) => LayerId::barrel(k).ok_or(GeomError::BadBarrel(k))?,
                DetectorLayer::Endcap(id) => LayerId::endcap(rank[&id]).expect("at most 7 disks"),
            };
            out[sector].push(Hit {
                r: h.r,
                phi: h.phi,
                z: h.z,
                layer,
            });
        }
    }
    Ok(out)
}

/// Normalisation applied before quantizing coordinates into Q7.7.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureScale {
    pub r: f64,
    pub phi: f64,
    pub z: f64,
}

impl Default for FeatureScale {
    fn default() -> Self {
        FeatureScale {
            r: 1000.0,
            phi: PI,
            z: 1000.0,
        }
    }
}

/// Segment acceptance test between an inner and an outer hit.
pub trait EdgeCut {
    fn accept(&self, inner: &Hit, outer: &Hit) -> bool;
}

impl<F: Fn(&Hit, &Hit) -> bool> EdgeCut for F {
    fn accept(&self, inner: &Hit, outer: &Hit) -> bool {
        self(inner, outer)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AcceptAll;

impl EdgeCut for AcceptAll {
    fn accept(&self, _: &Hit, _: &Hit) -> bool {
        true
    }
}

/// Accepts a segment when |Δφ| and |Δz| both fall inside the window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowCut {
    pub max_dphi: f64,
    pub max_dz: f64,
}

impl EdgeCut for WindowCut {
    fn accept(&self, inner: &Hit, outer: &Hit) -> bool {
        wrap_phi(outer.phi - inner.phi).abs() <= self.max_dphi
            && (outer.z - inner.z).abs() <= self.max_dz
    }
}

fn wrap_phi(d: f64) -> f64 {
    let mut d = d % (2.0 * PI);
    if d > PI {
        d -= 2.0 * PI;
    } else if d < -PI {
        d += 2.0 * PI;
    }
    d
}

fn q(x: f64) -> Fx {
    // Coordinates are finite by construction; NaN only from a zero scale.
    Fx::quantize(x).unwrap_or(Fx::ZERO)
}

/// Node features `(r, φ, z)` and edge features `(Δr, Δφ, Δz, √(Δr²+Δz²))`,
/// all divided by `scale` and quantized.
///
/// Edges are produced pair by pair in canonical order, inner hits in input
/// order, outer hits in input order.
pub fn build_graph(hits: &[Hit], cut: &impl EdgeCut, scale: &FeatureScale) -> HitGraph {
    let mut node_features = Matrix::zeros(0, 3);
    for h in hits {
        node_features.push_row(&[q(h.r / scale.r), q(h.phi / scale.phi), q(h.z / scale.z)]);
    }
    let mut by_layer: Vec<Vec<usize>> = vec![Vec::new(); LayerId::ALL.len()];
    for (i, h) in hits.iter().enumerate() {
        by_layer[h.layer.index()].push(i);
    }

    let mut edge_features = Matrix::zeros(0, 4);
    let mut senders = Vec::new();
    let mut receivers = Vec::new();
    for pair in legal_pairs() {
        for &i in &by_layer[pair.inner.index()] {
            for &j in &by_layer[pair.outer.index()] {
                let (a, b) = (&hits[i], &hits[j]);
                if !cut.accept(a, b) {
                    continue;
                }
                let dr = b.r - a.r;
                let dz = b.z - a.z;
                edge_features.push_row(&[
                    q(dr / scale.r),
                    q(wrap_phi(b.phi - a.phi) / scale.phi),
                    q(dz / scale.z),
                    q((dr * dr + dz * dz).sqrt() / scale.r),
                ]);
                senders.push(i);
                receivers.push(j);
            }
        }
    }
    let layers = hits.iter().map(|h| h.layer).collect();
    HitGraph::new(node_features, layers, edge_features, senders, receivers)
        .expect("tables built row by row")
}

/// Nearest-rank percentile of node and edge counts, each dimension on its own.
pub fn percentile_size(sizes: &[(usize, usize)], p: f64) -> Result<(usize, usize), GeomError> {
    if !(0.0..=100.0).contains(&p) {
        return Err(GeomError::BadPercentile(p));
    }
    if sizes.is_empty() {
        return Err(GeomError::EmptyDataset);
    }
    let n = sizes.len();
    let rank = ((p / 100.0 * n as f64).ceil() as usize).clamp(1, n);
    let mut nodes: Vec<usize> = sizes.iter().map(|s| s.0).collect();
    let mut edges: Vec<usize> = sizes.iter().map(|s| s.1).collect();
    nodes.sort_unstable();
    edges.sort_unstable();
    Ok((nodes[rank - 1], edges[rank - 1]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{partition, validate};

    fn raw(z: f64, layer: DetectorLayer) -> RawHit {
        RawHit {
            r: 30.0,
            phi: 0.1,
            z,
            layer,
        }
    }

    #[test]
    fn split_by_z_sign() {
        let hits = [
            raw(10.0, DetectorLayer::Barrel(1)),
            raw(-10.0, DetectorLayer::Barrel(1)),
        ];
        let [s0, s1] = sector_split(&hits).unwrap();
        assert_eq!((s0.len(), s1.len()), (1, 1));
        assert_eq!(s0[0].z, 10.0);

        let [s0, s1] = sector_split(&[raw(5.0, DetectorLayer::Barrel(2))]).unwrap();
        assert_eq!((s0.len(), s1.len()), (1, 0));

        let [s0, _] = sector_split(&[raw(0.0, DetectorLayer::Barrel(2))]).unwrap();
        assert_eq!(s0.len(), 1);
    }

    #[test]
    fn endcaps_renumbered_by_abs_z() {
        let hits = [
            raw(1500.0, DetectorLayer::Endcap(40)),
            raw(600.0, DetectorLayer::Endcap(7)),
            raw(-600.0, DetectorLayer::Endcap(3)),
            raw(1100.0, DetectorLayer::Endcap(12)),
        ];
        let [s0, s1] = sector_split(&hits).unwrap();
        let layers: Vec<LayerId> = s0.iter().map(|h| h.layer).collect();
        assert_eq!(layers, vec![LayerId::E3, LayerId::E1, LayerId::E2]);
        assert_eq!(s1[0].layer, LayerId::E1);
    }

    #[test]
    fn split_errors() {
        assert!(matches!(
            sector_split(&[raw(f64::NAN, DetectorLayer::Barrel(1))]),
            Err(GeomError::NonFiniteHit(0))
        ));
        assert!(matches!(
            sector_split(&[raw(1.0, DetectorLayer::Barrel(5))]),
            Err(GeomError::BadBarrel(5))
        ));
        let many: Vec<RawHit> = (0..8)
            .map(|d| raw(100.0 + d as f64, DetectorLayer::Endcap(d)))
            .collect();
        assert!(matches!(
            sector_split(&many),
            Err(GeomError::TooManyDisks {
                sector: 0,
                disks: 8
            })
        ));
    }

    fn radial_line() -> Vec<Hit> {
        LayerId::ALL
            .iter()
            .enumerate()
            .map(|(k, &layer)| Hit {
                r: 30.0 + 40.0 * k as f64,
                phi: 0.2,
                z: 50.0 * k as f64,
                layer,
            })
            .collect()
    }

    #[test]
    fn one_hit_per_layer_gives_thirteen_edges() {
        let g = build_graph(&radial_line(), &AcceptAll, &FeatureScale::default());
        assert_eq!(g.n_nodes(), 11);
        assert_eq!(g.n_edges(), 13);
        assert!(validate(&g).is_empty());
        let p = partition(&g).unwrap();
        assert!(p.edge_groups().iter().all(|eg| eg.len() == 1));
    }

    #[test]
    fn rejecting_cut_gives_no_edges() {
        let g = build_graph(
            &radial_line(),
            &|_: &Hit, _: &Hit| false,
            &FeatureScale::default(),
        );
        assert_eq!(g.n_edges(), 0);
    }

    #[test]
    fn two_by_two_combinations() {
        let h = |r, layer| Hit {
            r,
            phi: 0.0,
            z: 0.0,
            layer,
        };
        let hits = [
            h(30.0, LayerId::B1),
            h(31.0, LayerId::B1),
            h(70.0, LayerId::B2),
            h(71.0, LayerId::B2),
        ];
        let g = build_graph(&hits, &AcceptAll, &FeatureScale::default());
        assert_eq!(g.n_edges(), 4);
        assert_eq!(partition(&g).unwrap().edge_groups()[0].len(), 4);
    }

    #[test]
    fn window_cut_filters() {
        let cut = WindowCut {
            max_dphi: 0.05,
            max_dz: 100.0,
        };
        let a = Hit {
            r: 30.0,
            phi: 3.13,
            z: 0.0,
            layer: LayerId::B1,
        };
        let b = Hit {
            r: 70.0,
            phi: -3.13,
            z: 20.0,
            layer: LayerId::B2,
        };
        assert!(cut.accept(&a, &b), "wraps around ±π");
        let c = Hit { phi: 0.0, ..b };
        assert!(!cut.accept(&a, &c));
    }

    #[test]
    fn edge_features_are_scaled_differences() {
        let g = build_graph(
            &radial_line()[..2],
            &AcceptAll,
            &FeatureScale {
                r: 100.0,
                phi: 1.0,
                z: 100.0,
            },
        );
        let e = g.edge_features().row(0);
        assert_eq!(e[0], Fx::quantize(0.4).unwrap());
        assert_eq!(e[1], Fx::ZERO);
        assert_eq!(e[2], Fx::quantize(0.5).unwrap());
        assert_eq!(e[3], Fx::quantize((0.16f64 + 0.25).sqrt()).unwrap());
    }

    #[test]
    fn percentile_examples() {
        let data = [(10, 40), (30, 20), (20, 30)];
        assert_eq!(percentile_size(&data, 100.0).unwrap(), (30, 40));
        assert_eq!(percentile_size(&[(10, 20)], 37.0).unwrap(), (10, 20));
        assert_eq!(percentile_size(&data, 50.0).unwrap(), (20, 30));
        assert_eq!(percentile_size(&data, 0.0).unwrap(), (10, 20));
        assert!(matches!(
            percentile_size(&[], 95.0),
            Err(GeomError::EmptyDataset)
        ));
        assert!(percentile_size(&data, 101.0).is_err());
    }

    #[test]
    fn percentile_covers_fraction() {
        let data: Vec<(usize, usize)> = (0..100).map(|i| (i, 2 * (99 - i))).collect();
        let (n, e) = percentile_size(&data, 95.0).unwrap();
        assert_eq!((n, e), (94, 188));
        let covered_n = data.iter().filter(|s| s.0 <= n).count();
        let covered_e = data.iter().filter(|s| s.1 <= e).count();
        assert!(covered_n >= 95 && covered_e >= 95);
    }
}
