//! Homomorphism densities, density fingerprints and Gâteaux derivatives.

use std::collections::BTreeMap;

use num::{BigInt, Integer, One, Zero};
use serde::{Serialize, Serializer};

use super::graph::{connected_graphs_up_to, SimpleGraph};
use super::{common_refinement, BlockKernel, StepGraphon};
use crate::error::{Error, Result};
use crate::rational::{fmt_q, Q};

/// Vertex order in which every vertex after the first of its component has
/// an earlier neighbour, together with that neighbour.
fn search_order(h: &SimpleGraph) -> Vec<(usize, Option<usize>)> {
    let adj = h.adjacency();
    let mut seen = vec![false; h.vertex_count()];
    let mut order = Vec::with_capacity(h.vertex_count());
    for start in 0..h.vertex_count() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        order.push((start, None));
        let mut head = order.len() - 1;
        while head < order.len() {
            let v = order[head].0;
            head += 1;
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    order.push((w, Some(v)));
                }
            }
        }
    }
    order
}

/// Numerators over a shared denominator.
fn over_common(xs: &[&Q]) -> (Vec<BigInt>, BigInt) {
    let denom = xs.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let nums = xs.iter().map(|x| x.numer() * (&denom / x.denom())).collect();
    (nums, denom)
}

/// `Σ_{φ: V(H)→[k]} Π_v μ_{φ(v)} Π_{e} K_e(φ(e))` where edge `e` (in the
/// order of `h.edges()`) reads kernel `kernels[e]`. Branches are pruned on
/// zero entries, which keeps sparse kernels cheap. The sum runs over
/// integer numerators and is divided out once at the end.
fn weighted_hom_sum(h: &SimpleGraph, measures: &[Q], kernels: &[&[Vec<Q>]]) -> Q {
    let k = measures.len();
    let (measures, measure_denom) = over_common(&measures.iter().collect::<Vec<_>>());
    let mut denom = num::pow(measure_denom, h.vertex_count());
    let kernels: Vec<Vec<Vec<BigInt>>> = kernels
        .iter()
        .map(|m| {
            let (flat, d) = over_common(&m.iter().flatten().collect::<Vec<_>>());
            denom *= d;
            flat.chunks(k).map(|r| r.to_vec()).collect()
        })
        .collect();
    let edges: Vec<(usize, usize)> = h.edges().collect();
    let order = search_order(h);
    let mut position = vec![0; h.vertex_count()];
    for (p, &(v, _)) in order.iter().enumerate() {
        position[v] = p;
    }
    // edges checked when their later endpoint is placed
    let mut closing: Vec<Vec<(usize, usize)>> = vec![Vec::new(); order.len()];
    for (e, &(a, b)) in edges.iter().enumerate() {
        let (early, late) = if position[a] < position[b] { (a, b) } else { (b, a) };
        closing[position[late]].push((e, early));
    }
    // nonzero pattern per edge kernel, for candidate generation
    let support: Vec<Vec<Vec<usize>>> = kernels
        .iter()
        .map(|m| {
            (0..k)
                .map(|i| (0..k).filter(|&j| !m[i][j].is_zero()).collect())
                .collect()
        })
        .collect();
    let parent_edge: Vec<Option<(usize, usize)>> = order
        .iter()
        .map(|&(v, parent)| {
            parent.map(|p| {
                let e = edges
                    .iter()
                    .position(|&(a, b)| (a == v && b == p) || (a == p && b == v))
                    .expect("parent is adjacent");
                (e, p)
            })
        })
        .collect();

    struct Ctx<'a> {
        order: &'a [(usize, Option<usize>)],
        closing: &'a [Vec<(usize, usize)>],
        parent_edge: &'a [Option<(usize, usize)>],
        support: &'a [Vec<Vec<usize>>],
        kernels: &'a [Vec<Vec<BigInt>>],
        measures: &'a [BigInt],
        image: Vec<usize>,
    }

    fn rec(ctx: &mut Ctx<'_>, pos: usize, weight: BigInt) -> BigInt {
        if pos == ctx.order.len() {
            return weight;
        }
        let v = ctx.order[pos].0;
        let candidates: Vec<usize> = match ctx.parent_edge[pos] {
            Some((e, p)) => ctx.support[e][ctx.image[p]].clone(),
            None => (0..ctx.measures.len()).collect(),
        };
        let mut total = BigInt::zero();
        'cand: for c in candidates {
            let mut w = &weight * &ctx.measures[c];
            for &(e, u) in &ctx.closing[pos] {
                let val = &ctx.kernels[e][c][ctx.image[u]];
                if val.is_zero() {
                    continue 'cand;
                }
                w *= val;
            }
            ctx.image[v] = c;
            total += rec(ctx, pos + 1, w);
        }
        total
    }

    let mut ctx = Ctx {
        order: &order,
        closing: &closing,
        parent_edge: &parent_edge,
        support: &support,
        kernels: &kernels,
        measures: &measures,
        image: vec![0; h.vertex_count()],
    };
    Q::new(rec(&mut ctx, 0, BigInt::one()), denom)
}

/// `t(H, K)` for any block kernel.
pub fn hom_density_kernel(h: &SimpleGraph, k: &BlockKernel) -> Q {
    let kernels = vec![k.values(); h.edge_count()];
    weighted_hom_sum(h, k.measures(), &kernels)
}

/// `t(H, W) = Σ_{φ: V(H)→[k]} Π_{ij∈E(H)} W_{φ(i)φ(j)} Π_v μ_{φ(v)}`.
pub fn hom_density(h: &SimpleGraph, w: &StepGraphon) -> Q {
    hom_density_kernel(h, w.kernel())
}

/// `hom(H, G) / |V(G)|^{|V(H)|}` by direct enumeration of vertex maps.
pub fn hom_density_graph(h: &SimpleGraph, g: &SimpleGraph) -> Q {
    let (nh, ng) = (h.vertex_count(), g.vertex_count());
    if ng == 0 {
        return if nh == 0 { Q::one() } else { Q::zero() };
    }
    let edges: Vec<(usize, usize)> = h.edges().collect();
    fn count(
        v: usize,
        nh: usize,
        g: &SimpleGraph,
        edges: &[(usize, usize)],
        map: &mut Vec<usize>,
    ) -> u64 {
        if v == nh {
            return 1;
        }
        let mut total = 0;
        for x in 0..g.vertex_count() {
            map[v] = x;
            // edges whose later endpoint is v
            let ok = edges
                .iter()
                .filter(|&&(a, b)| a.max(b) == v)
                .all(|&(a, b)| g.has_edge(map[a], map[b]));
            if ok {
                total += count(v + 1, nh, g, edges, map);
            }
        }
        total
    }
    let homs = count(0, nh, g, &edges, &mut vec![0; nh]);
    Q::new(homs.into(), num::pow(num::BigInt::from(ng), nh))
}

pub const MAX_FINGERPRINT_EDGES: usize = 5;

/// Densities of all connected simple graphs with at most `max_edges` edges,
/// keyed by the graph6 string of the canonical form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DensityFingerprint {
    pub max_edges: usize,
    pub densities: BTreeMap<String, Q>,
}

impl DensityFingerprint {
    pub fn get(&self, h: &SimpleGraph) -> Option<&Q> {
        self.densities.get(&h.canonical().graph6())
    }

    /// Equal fingerprints: the graphons cannot be told apart by densities of
    /// graphs with at most `max_edges` edges.
    pub fn indistinguishable(&self, other: &DensityFingerprint) -> bool {
        self == other
    }
}

impl Serialize for DensityFingerprint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_map(self.densities.iter().map(|(k, v)| (k, fmt_q(v))))
    }
}

pub fn density_fingerprint(w: &StepGraphon, max_edges: usize) -> Result<DensityFingerprint> {
    if max_edges > MAX_FINGERPRINT_EDGES {
        return Err(Error::TooLarge {
            what: "fingerprint edge bound",
            size: max_edges,
            limit: MAX_FINGERPRINT_EDGES,
        });
    }
    let densities = connected_graphs_up_to(max_edges)
        .into_iter()
        .map(|h| (h.graph6(), hom_density(&h, w)))
        .collect();
    Ok(DensityFingerprint {
        max_edges,
        densities,
    })
}

/// Directional derivative of `t(H, ·)` at `W` along the symmetric kernel
/// `D`: `Σ_e ∫ D(x_e) Π_{f≠e} W(x_f) Π dx`. `D` is brought to the common
/// partition with `W` first.
pub fn gateaux_density_derivative(h: &SimpleGraph, w: &BlockKernel, d: &BlockKernel) -> Result<Q> {
    let (w, d) = common_refinement(w, d);
    if w.measures() != d.measures() {
        return Err(Error::Refinement("kernels do not share a partition".into()));
    }
    let m = h.edge_count();
    let mut total = Q::zero();
    for e in 0..m {
        let kernels: Vec<&[Vec<Q>]> = (0..m)
            .map(|f| if f == e { d.values() } else { w.values() })
            .collect();
        total += weighted_hom_sum(h, w.measures(), &kernels);
    }
    Ok(total)
}
