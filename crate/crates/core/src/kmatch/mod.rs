//! K-Match: k-symmetry by edge copying along a vertex alignment table.
//!
//! The graph is padded with isolated dummy vertices to `r * k` vertices and
//! arranged in an `r x k` table. Shifting every row `t` columns to the right
//! defines a map `γ_t`; adding every shift image of every edge turns all
//! `γ_t` into automorphisms, so each vertex shares its orbit with the other
//! `k - 1` vertices of its row.

pub mod partition;

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automorphism::VertexMapping;
use crate::graph::{Graph, VertexId};
use crate::rng;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum KMatchError {
    #[error("k must be at least 2, got {0}")]
    KTooSmall(usize),
    #[error("inconsistent alignment table: {0}")]
    InconsistentVat(String),
}

/// The `r x k` vertex alignment table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexAlignmentTable {
    pub k: usize,
    pub rows: Vec<Vec<VertexId>>,
    /// Padding vertices; always the ids `n .. r * k` of the padded graph.
    pub dummies: Vec<VertexId>,
}

impl VertexAlignmentTable {
    /// Validates a table for a graph with `n` original vertices.
    pub fn new(k: usize, rows: Vec<Vec<VertexId>>, n: usize) -> Result<Self, KMatchError> {
        if k < 2 {
            return Err(KMatchError::KTooSmall(k));
        }
        let total = rows.len() * k;
        if let Some(i) = rows.iter().position(|r| r.len() != k) {
            return Err(KMatchError::InconsistentVat(format!(
                "row {i} has {} cells, expected {k}",
                rows[i].len()
            )));
        }
        if rows.len() != n.div_ceil(k) {
            return Err(KMatchError::InconsistentVat(format!(
                "{} rows of {k} do not pad {n} vertices to the next multiple of {k}",
                rows.len()
            )));
        }
        let mut seen = vec![false; total];
        for &v in rows.iter().flatten() {
            if v >= total {
                return Err(KMatchError::InconsistentVat(format!("cell {v} out of range 0..{total}")));
            }
            if std::mem::replace(&mut seen[v], true) {
                return Err(KMatchError::InconsistentVat(format!("vertex {v} appears twice")));
            }
        }
        Ok(VertexAlignmentTable {
            k,
            rows,
            dummies: (n..total).collect(),
        })
    }

    /// Builds a table from labelled rows of a fixture.
    pub fn from_labels(fixture: &crate::fixtures::Fixture, rows: &[&[&str]]) -> Result<Self, KMatchError> {
        let k = rows.first().map_or(0, |r| r.len());
        let ids = rows
            .iter()
            .map(|r| r.iter().map(|l| fixture.vertex(l)).collect())
            .collect();
        Self::new(k, ids, fixture.graph.n())
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    /// Order of the padded graph.
    pub fn padded_order(&self) -> usize {
        self.rows.len() * self.k
    }

    /// Number of original (non-dummy) vertices.
    pub fn original_order(&self) -> usize {
        self.padded_order() - self.dummies.len()
    }

    pub fn is_dummy(&self, v: VertexId) -> bool {
        v >= self.original_order()
    }

    /// `(row, column)` of every vertex.
    pub fn positions(&self) -> Vec<(usize, usize)> {
        let mut pos = vec![(0, 0); self.padded_order()];
        for (i, row) in self.rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                pos[v] = (i, j);
            }
        }
        pos
    }

    /// `γ_t`: every vertex moves `t` columns to the right within its row.
    pub fn gamma(&self, t: usize) -> VertexMapping {
        let mut image = vec![0; self.padded_order()];
        for row in &self.rows {
            for (j, &v) in row.iter().enumerate() {
                image[v] = row[(j + t) % self.k];
            }
        }
        VertexMapping::new(image).expect("rows are disjoint")
    }

    pub fn gammas(&self) -> Vec<VertexMapping> {
        (1..self.k).map(|t| self.gamma(t)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KMatchResult {
    pub graph_out: Graph,
    pub vat: VertexAlignmentTable,
    pub added_edges: Vec<(VertexId, VertexId)>,
    pub gamma: Vec<VertexMapping>,
}

impl KMatchResult {
    pub fn original_order(&self) -> usize {
        self.vat.original_order()
    }
}

/// Tuning for the row-alignment hill climb.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KMatchOptions {
    /// Maximum number of candidate row swaps evaluated.
    pub swap_budget: usize,
}

impl Default for KMatchOptions {
    fn default() -> Self {
        KMatchOptions { swap_budget: 20_000 }
    }
}

fn padded(g: &Graph, k: usize) -> Graph {
    let mut out = g.clone();
    let extra = (k - g.n() % k) % k;
    out.add_vertices(extra);
    out
}

/// Orbit bookkeeping for the alignment hill climb. An edge between cells
/// `(a, i)` and `(b, j)` belongs to the shift orbit identified by its rows
/// and column offset; the closure adds every edge of every touched orbit.
struct OrbitCounter {
    k: usize,
    rows: usize,
    count: Vec<u32>,
    cost: usize,
}

impl OrbitCounter {
    fn key(&self, (a, i): (usize, usize), (b, j): (usize, usize)) -> (usize, usize) {
        let k = self.k;
        let ((a, i), (b, j)) = if a <= b { ((a, i), (b, j)) } else { ((b, j), (a, i)) };
        let mut d = (j + k - i) % k;
        if a == b {
            d = d.min(k - d);
        }
        let size = if a == b && (2 * d).is_multiple_of(k) { k / 2 } else { k };
        ((a * self.rows + b) * k + d, size)
    }

    fn add(&mut self, p: (usize, usize), q: (usize, usize)) {
        let (key, size) = self.key(p, q);
        if self.count[key] == 0 {
            self.cost += size;
        }
        self.count[key] += 1;
    }

    fn remove(&mut self, p: (usize, usize), q: (usize, usize)) {
        let (key, size) = self.key(p, q);
        self.count[key] -= 1;
        if self.count[key] == 0 {
            self.cost -= size;
        }
    }
}

/// Number of edges in the closure of `g` under the table, computed from the
/// orbit structure.
pub fn closure_size(g: &Graph, vat: &VertexAlignmentTable) -> usize {
    let pos = vat.positions();
    let mut counter = OrbitCounter {
        k: vat.k,
        rows: vat.row_count(),
        count: vec![0; vat.row_count() * vat.row_count() * vat.k],
        cost: 0,
    };
    for (u, v) in g.edges() {
        counter.add(pos[u], pos[v]);
    }
    counter.cost
}

/// Swaps rows within columns while that shrinks the closure.
fn align_rows(g: &Graph, rows: &mut [Vec<VertexId>], k: usize, budget: usize) {
    let r = rows.len();
    let mut pos = vec![(0, 0); r * k];
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            pos[v] = (i, j);
        }
    }
    let mut counter = OrbitCounter {
        k,
        rows: r,
        count: vec![0; r * r * k],
        cost: 0,
    };
    for (u, v) in g.edges() {
        counter.add(pos[u], pos[v]);
    }
    let mut evaluations = 0;
    let mut touched: Vec<(VertexId, VertexId)> = Vec::new();
    loop {
        let mut improved = false;
        for c in 0..k {
            for a in 0..r {
                for b in a + 1..r {
                    if evaluations >= budget {
                        return;
                    }
                    evaluations += 1;
                    let (x, y) = (rows[a][c], rows[b][c]);
                    touched.clear();
                    touched.extend(g.neighbors(x).iter().map(|&w| (x, w)));
                    touched.extend(g.neighbors(y).iter().filter(|&&w| w != x).map(|&w| (y, w)));
                    if touched.is_empty() {
                        continue;
                    }
                    let before = counter.cost;
                    for &(u, w) in &touched {
                        counter.remove(pos[u], pos[w]);
                    }
                    pos.swap(x, y);
                    for &(u, w) in &touched {
                        counter.add(pos[u], pos[w]);
                    }
                    if counter.cost < before {
                        rows[a][c] = y;
                        rows[b][c] = x;
                        improved = true;
                    } else {
                        for &(u, w) in &touched {
                            counter.remove(pos[u], pos[w]);
                        }
                        pos.swap(x, y);
                        for &(u, w) in &touched {
                            counter.add(pos[u], pos[w]);
                        }
                    }
                }
            }
        }
        if !improved {
            return;
        }
    }
}

/// Pads `g`, splits the padded vertex set into `k` equal groups with few
/// edges between them, places one group per column (rows ordered by degree)
/// and swaps rows to reduce the number of copied edges.
pub fn build_vat(g: &Graph, k: usize, rng_seed: u64) -> Result<VertexAlignmentTable, KMatchError> {
    build_vat_with(g, k, rng_seed, &KMatchOptions::default())
}

pub fn build_vat_with(
    g: &Graph,
    k: usize,
    rng_seed: u64,
    options: &KMatchOptions,
) -> Result<VertexAlignmentTable, KMatchError> {
    if k < 2 {
        return Err(KMatchError::KTooSmall(k));
    }
    let full = padded(g, k);
    let r = full.n() / k;
    let mut rng = rng::rng(rng::derive_named(rng_seed, "partition"));
    let part = partition::balanced_partition(&full, k, &mut rng);
    let mut columns: Vec<Vec<VertexId>> = vec![Vec::with_capacity(r); k];
    for (v, &p) in part.iter().enumerate() {
        columns[p].push(v);
    }
    for col in &mut columns {
        col.sort_by_key(|&v| (std::cmp::Reverse(full.deg(v)), v));
    }
    let mut rows: Vec<Vec<VertexId>> = (0..r).map(|i| columns.iter().map(|c| c[i]).collect()).collect();
    align_rows(&full, &mut rows, k, options.swap_budget);
    VertexAlignmentTable::new(k, rows, g.n())
}

/// Adds every shift image of every edge until the edge set is closed.
pub fn edge_copy_closure(g: &Graph, vat: &VertexAlignmentTable) -> Result<KMatchResult, KMatchError> {
    let n = vat.original_order();
    if g.n() != n && g.n() != vat.padded_order() {
        return Err(KMatchError::InconsistentVat(format!(
            "table covers {} original vertices, graph has {}",
            n,
            g.n()
        )));
    }
    let mut out = g.clone();
    out.add_vertices(vat.padded_order() - g.n());
    if let Some((u, v)) = g.edges().find(|&(u, v)| vat.is_dummy(u) || vat.is_dummy(v)) {
        return Err(KMatchError::InconsistentVat(format!("padding vertex on input edge ({u}, {v})")));
    }
    let gamma = vat.gammas();
    let mut added = BTreeSet::new();
    let mut work: VecDeque<(VertexId, VertexId)> = out.edges().collect();
    while let Some((u, v)) = work.pop_front() {
        for map in &gamma {
            let (a, b) = (map.apply(u), map.apply(v));
            if out.add_edge(a, b).expect("images are distinct vertices in range") {
                added.insert((a.min(b), a.max(b)));
                work.push_back((a, b));
            }
        }
    }
    Ok(KMatchResult {
        graph_out: out,
        vat: vat.clone(),
        added_edges: added.into_iter().collect(),
        gamma,
    })
}

pub fn kmatch(g: &Graph, k: usize, rng_seed: u64) -> Result<KMatchResult, KMatchError> {
    let vat = build_vat(g, k, rng_seed)?;
    let result = edge_copy_closure(g, &vat)?;
    debug_assert!(g.edges().all(|(u, v)| result.graph_out.has_edge(u, v)));
    Ok(result)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// `γ_t` fixes `vertex`.
    FixedPoint { vertex: VertexId, t: usize },
    /// `γ_i` and `γ_j` agree on `vertex`.
    Coincide { vertex: VertexId, i: usize, j: usize },
    /// `γ_{i+j}`, `γ_i ∘ γ_j` and `γ_j ∘ γ_i` disagree on `vertex`.
    NotComposable { vertex: VertexId, i: usize, j: usize },
    /// `γ_t` maps `edge` to a non-edge.
    MissingImage { edge: (VertexId, VertexId), t: usize },
    /// A map has the wrong domain.
    WrongOrder { t: usize, len: usize },
}

/// Checks that the `γ_t` are fixed-point free, pairwise distinct at every
/// vertex, compose cyclically, and are automorphisms of the output.
pub fn verify_kmatch_conditions(result: &KMatchResult) -> (bool, Vec<Violation>) {
    let g = &result.graph_out;
    let gamma = &result.gamma;
    let k = gamma.len() + 1;
    let n = g.n();
    let mut out = Vec::new();
    for (idx, map) in gamma.iter().enumerate() {
        if map.len() != n {
            out.push(Violation::WrongOrder { t: idx + 1, len: map.len() });
        }
    }
    if !out.is_empty() {
        return (false, out);
    }
    let at = |t: usize, v: VertexId| if t.is_multiple_of(k) { v } else { gamma[t % k - 1].apply(v) };
    for v in 0..n {
        for i in 1..k {
            if at(i, v) == v {
                out.push(Violation::FixedPoint { vertex: v, t: i });
            }
            for j in i + 1..k {
                if at(i, v) == at(j, v) {
                    out.push(Violation::Coincide { vertex: v, i, j });
                }
                let sum = at(i + j, v);
                if sum != at(i, at(j, v)) || sum != at(j, at(i, v)) {
                    out.push(Violation::NotComposable { vertex: v, i, j });
                }
            }
        }
    }
    for (u, v) in g.edges() {
        for (idx, map) in gamma.iter().enumerate() {
            if !g.has_edge(map.apply(u), map.apply(v)) {
                out.push(Violation::MissingImage { edge: (u, v), t: idx + 1 });
            }
        }
    }
    (out.is_empty(), out)
}

/// Condition 1: the output contains every vertex and edge of the input.
pub fn is_supergraph(input: &Graph, result: &KMatchResult) -> bool {
    result.graph_out.n() >= input.n() && input.edges().all(|(u, v)| result.graph_out.has_edge(u, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automorphism::automorphism_orbits;
    use crate::fixtures;
    use crate::generators::er_graph_seeded;

    fn fig2() -> (fixtures::Fixture, VertexAlignmentTable) {
        let fx = fixtures::sybil_fragment();
        let rows: Vec<&[&str]> = fixtures::SYBIL_FRAGMENT_VAT.iter().map(|r| &r[..]).collect();
        let vat = VertexAlignmentTable::from_labels(&fx, &rows).unwrap();
        (fx, vat)
    }

    #[test]
    fn padding_arithmetic() {
        let vat = build_vat(&Graph::new(7), 3, 1).unwrap();
        assert_eq!(vat.row_count(), 3);
        assert_eq!(vat.dummies, vec![7, 8]);
        let empty = build_vat(&Graph::new(4), 2, 1).unwrap();
        assert_eq!(empty.row_count(), 2);
        assert!(empty.dummies.is_empty());
        assert!(edge_copy_closure(&Graph::new(4), &empty).unwrap().added_edges.is_empty());
        assert_eq!(build_vat(&Graph::new(4), 1, 1), Err(KMatchError::KTooSmall(1)));
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(VertexAlignmentTable::new(2, vec![vec![0, 1], vec![1, 2]], 4).is_err());
        assert!(VertexAlignmentTable::new(2, vec![vec![0, 1]], 4).is_err());
        assert!(VertexAlignmentTable::new(2, vec![vec![0, 1], vec![2]], 3).is_err());
        assert!(VertexAlignmentTable::new(2, vec![vec![0, 1], vec![2, 5]], 4).is_err());
        // three rows of two would pad 4 vertices with 2 dummies, one too many
        assert!(VertexAlignmentTable::new(2, vec![vec![0, 1], vec![2, 3], vec![4, 5]], 4).is_err());
    }

    #[test]
    fn worked_table_reads_off_rotations() {
        let (fx, vat) = fig2();
        let f1 = vat.gamma(1);
        let f2 = vat.gamma(2);
        let l = |s: &str| fx.vertex(s);
        for (a, b) in [("1", "F"), ("F", "D"), ("D", "1"), ("C", "A"), ("A", "B"), ("B", "C"), ("2", "3"), ("3", "E"), ("E", "2")] {
            assert_eq!(f1.apply(l(a)), l(b));
        }
        for (a, b) in [("1", "D"), ("F", "1"), ("D", "F"), ("C", "B"), ("A", "C"), ("B", "A"), ("2", "E"), ("3", "2"), ("E", "3")] {
            assert_eq!(f2.apply(l(a)), l(b));
        }
    }

    #[test]
    fn worked_table_copies() {
        let (fx, vat) = fig2();
        let res = edge_copy_closure(&fx.graph, &vat).unwrap();
        let l = |s: &str| fx.vertex(s);
        assert!(!fx.graph.has_edge(l("C"), l("A")));
        assert!(res.graph_out.has_edge(l("C"), l("A")));
        assert!(!fx.graph.has_edge(l("A"), l("3")));
        assert!(res.graph_out.has_edge(l("A"), l("3")));
        let (ok, violations) = verify_kmatch_conditions(&res);
        assert!(ok, "{violations:?}");
        assert!(automorphism_orbits(&res.graph_out).min_block_size() >= 3);
    }

    #[test]
    fn mirror_table_on_path_adds_nothing() {
        let vat = VertexAlignmentTable::new(2, vec![vec![0, 3], vec![1, 2]], 4).unwrap();
        let res = edge_copy_closure(&Graph::path(4), &vat).unwrap();
        assert!(res.added_edges.is_empty());
        assert_eq!(res.graph_out, Graph::path(4));
    }

    #[test]
    fn removing_a_copy_is_reported() {
        let (fx, vat) = fig2();
        let mut res = edge_copy_closure(&fx.graph, &vat).unwrap();
        let (a, b) = (fx.vertex("C"), fx.vertex("A"));
        res.graph_out.remove_edge(a, b);
        let (ok, violations) = verify_kmatch_conditions(&res);
        assert!(!ok);
        // the edge A-B maps onto the removed C-A under the 2-shift
        let ab = (fx.vertex("A").min(fx.vertex("B")), fx.vertex("A").max(fx.vertex("B")));
        assert!(violations.contains(&Violation::MissingImage { edge: ab, t: 2 }));
    }

    #[test]
    fn broken_maps_are_reported() {
        let mut res = kmatch(&Graph::cycle(6), 3, 0).unwrap();
        res.gamma[0] = VertexMapping::identity(6);
        let (ok, violations) = verify_kmatch_conditions(&res);
        assert!(!ok);
        assert!(violations.contains(&Violation::FixedPoint { vertex: 0, t: 1 }));
        assert!(violations.iter().any(|v| matches!(v, Violation::NotComposable { .. })));
    }

    #[test]
    fn outputs_are_k_symmetric() {
        for seed in 0..30 {
            for k in [2, 3, 5] {
                let g = er_graph_seeded(20, 0.3, seed).unwrap();
                let res = kmatch(&g, k, seed).unwrap();
                assert!(is_supergraph(&g, &res));
                assert!(verify_kmatch_conditions(&res).0);
                assert!(automorphism_orbits(&res.graph_out).min_block_size() >= k);
                assert_eq!(res.graph_out.edge_count(), g.edge_count() + res.added_edges.len());
                assert_eq!(closure_size(&g, &res.vat), res.graph_out.edge_count());
            }
        }
    }

    #[test]
    fn closure_is_idempotent_and_deterministic() {
        let g = er_graph_seeded(30, 0.2, 9).unwrap();
        let res = kmatch(&g, 3, 4).unwrap();
        let again = edge_copy_closure(&res.graph_out, &res.vat).unwrap();
        assert!(again.added_edges.is_empty());
        assert_eq!(kmatch(&g, 3, 4).unwrap(), res);
    }

    #[test]
    fn alignment_reduces_copies() {
        let mut better = 0;
        for seed in 0..10 {
            let g = er_graph_seeded(40, 0.1, seed).unwrap();
            let tuned = build_vat(&g, 4, seed).unwrap();
            let raw = build_vat_with(&g, 4, seed, &KMatchOptions { swap_budget: 0 }).unwrap();
            let (a, b) = (closure_size(&g, &tuned), closure_size(&g, &raw));
            assert!(a <= b);
            better += (a < b) as usize;
        }
        assert!(better > 0);
    }
}
