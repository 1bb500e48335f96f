//! Utility metrics: clustering coefficients and degree similarity.

use serde::{Deserialize, Serialize};

use crate::graph::{Graph, VertexId};

/// Number of triangles.
pub fn triangle_count(g: &Graph) -> u64 {
    let mut count = 0;
    for u in 0..g.n() {
        let nu = g.neighbors(u);
        for &v in nu.iter().filter(|&&v| v > u) {
            count += sorted_common_above(nu, g.neighbors(v), v);
        }
    }
    count
}

/// Common elements greater than `floor` of two sorted lists.
fn sorted_common_above(a: &[VertexId], b: &[VertexId], floor: VertexId) -> u64 {
    let (mut i, mut j, mut c) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                c += (a[i] > floor) as u64;
                i += 1;
                j += 1;
            }
        }
    }
    c
}

/// Edges among the neighbours of `v`.
fn closed_pairs(g: &Graph, v: VertexId) -> u64 {
    let nv = g.neighbors(v);
    nv.iter()
        .map(|&w| sorted_common_above(nv, g.neighbors(w), w))
        .sum()
}

fn pairs(d: usize) -> u64 {
    (d * d.saturating_sub(1) / 2) as u64
}

/// Three times the triangles over the connected triples; 0 without triples.
pub fn global_clustering(g: &Graph) -> f64 {
    let triples: u64 = (0..g.n()).map(|v| pairs(g.deg(v))).sum();
    if triples == 0 {
        0.0
    } else {
        3.0 * triangle_count(g) as f64 / triples as f64
    }
}

/// Edges among neighbours over `C(deg, 2)`; 0 for degree below 2.
pub fn local_clustering(g: &Graph, v: VertexId) -> f64 {
    let d = g.deg(v);
    if d < 2 {
        0.0
    } else {
        closed_pairs(g, v) as f64 / pairs(d) as f64
    }
}

pub fn avg_local_clustering(g: &Graph) -> f64 {
    if g.n() == 0 {
        return 0.0;
    }
    (0..g.n()).map(|v| local_clustering(g, v)).sum::<f64>() / g.n() as f64
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    match (na == 0.0, nb == 0.0) {
        (true, true) => 1.0,
        (true, false) | (false, true) => 0.0,
        _ => (dot / (na * nb)).clamp(0.0, 1.0),
    }
}

/// Cosine between degree-frequency histograms (index = degree).
pub fn degree_cosine_similarity(g1: &Graph, g2: &Graph) -> f64 {
    let len = g1.degrees().into_iter().chain(g2.degrees()).max().map_or(0, |m| m + 1);
    let hist = |g: &Graph| {
        let mut h = vec![0.0; len];
        for d in g.degrees() {
            h[d] += 1.0;
        }
        h
    };
    cosine(&hist(g1), &hist(g2))
}

/// Cosine between per-vertex degree vectors of two graphs on the same
/// vertex set (vertex `i` of one is vertex `i` of the other).
pub fn degree_vector_cosine(g1: &Graph, g2: &Graph) -> f64 {
    assert_eq!(g1.n(), g2.n(), "degree vectors need a common vertex set");
    let v = |g: &Graph| g.degrees().into_iter().map(|d| d as f64).collect::<Vec<_>>();
    cosine(&v(g1), &v(g2))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UtilityReport {
    pub gcc_before: f64,
    pub gcc_after: f64,
    pub avg_lcc_before: f64,
    pub avg_lcc_after: f64,
    /// Per-vertex degree vectors.
    pub degree_cosine: f64,
    /// Degree-frequency histograms.
    pub degree_hist_cosine: f64,
    pub edges_added: usize,
    pub edges_removed: usize,
}

/// Compares `before` with the part of `after` that corresponds to it:
/// `alignment[v]` is the id of `before`'s vertex `v` in `after`. Vertices of
/// `after` outside the alignment (dummies) are left out.
pub fn utility_report(before: &Graph, after: &Graph, alignment: &[VertexId]) -> UtilityReport {
    let (restricted, _) = after
        .induced_subgraph(alignment)
        .expect("alignment is injective into the published graph");
    let eb = before.edge_set();
    let ea = restricted.edge_set();
    UtilityReport {
        gcc_before: global_clustering(before),
        gcc_after: global_clustering(&restricted),
        avg_lcc_before: avg_local_clustering(before),
        avg_lcc_after: avg_local_clustering(&restricted),
        degree_cosine: degree_vector_cosine(before, &restricted),
        degree_hist_cosine: degree_cosine_similarity(before, &restricted),
        edges_added: ea.difference(&eb).count(),
        edges_removed: eb.difference(&ea).count(),
    }
}
