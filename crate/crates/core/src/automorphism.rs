//! Isomorphism testing and automorphism orbits.
//!
//! The engine is colour refinement followed by individualisation-refinement
//! backtracking. Refinement only ever depends on colours and adjacency, so
//! running it in lockstep on two graphs yields corresponding cells; any
//! isomorphism respecting the initial colours must respect every refined
//! colouring, which makes the backtracking search exhaustive over the
//! surviving branches.
//!
//! Orbits are built by testing, inside each equitable cell, whether an
//! automorphism maps a cell representative onto each remaining vertex.
//! Every automorphism found merges all of its cycles, so most pairs are
//! settled without a search of their own.

use thiserror::Error;

use crate::graph::{Graph, VertexId};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AutomorphismError {
    #[error("brute-force orbit enumeration refused: n = {n} exceeds the limit of {limit}")]
    TooLarge { n: usize, limit: usize },
    #[error("automorphism group has more than {cap} elements")]
    GroupTooLarge { cap: usize },
}

/// Vertex limit for [`orbits_bruteforce`].
pub const BRUTEFORCE_LIMIT: usize = 10;

/// A total injective map from `0..len` onto vertex ids of another graph.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VertexMapping {
    image: Vec<VertexId>,
}

impl VertexMapping {
    /// Wraps `image` after checking that it is injective.
    pub fn new(image: Vec<VertexId>) -> Option<Self> {
        let mut seen = std::collections::HashSet::with_capacity(image.len());
        image
            .iter()
            .all(|v| seen.insert(*v))
            .then_some(VertexMapping { image })
    }

    pub fn identity(n: usize) -> Self {
        VertexMapping {
            image: (0..n).collect(),
        }
    }

    #[inline]
    pub fn apply(&self, v: VertexId) -> VertexId {
        self.image[v]
    }

    pub fn len(&self) -> usize {
        self.image.len()
    }

    pub fn is_empty(&self) -> bool {
        self.image.is_empty()
    }

    pub fn as_slice(&self) -> &[VertexId] {
        &self.image
    }

    pub fn into_vec(self) -> Vec<VertexId> {
        self.image
    }

    /// Inverse of a permutation of `0..len`.
    pub fn inverse(&self) -> VertexMapping {
        let mut inv = vec![0; self.image.len()];
        for (v, &w) in self.image.iter().enumerate() {
            inv[w] = v;
        }
        VertexMapping { image: inv }
    }

    /// `self ∘ other`: first `other`, then `self`.
    pub fn compose(&self, other: &VertexMapping) -> VertexMapping {
        VertexMapping {
            image: other.image.iter().map(|&v| self.image[v]).collect(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.image.iter().enumerate().all(|(i, &v)| i == v)
    }

    /// True if this mapping is an isomorphism from `g1` onto `g2`.
    pub fn is_isomorphism(&self, g1: &Graph, g2: &Graph) -> bool {
        is_isomorphism(&self.image, g1, g2)
    }
}

fn is_isomorphism(image: &[VertexId], g1: &Graph, g2: &Graph) -> bool {
    if image.len() != g1.n() || g1.n() != g2.n() || g1.edge_count() != g2.edge_count() {
        return false;
    }
    let mut hit = vec![false; g2.n()];
    for &w in image {
        if w >= g2.n() || std::mem::replace(&mut hit[w], true) {
            return false;
        }
    }
    g1.edges().all(|(u, v)| g2.has_edge(image[u], image[v]))
}

/// Partition of the vertex set into automorphism orbits.
///
/// Blocks are sorted internally and ordered by their smallest vertex, so two
/// partitions of the same set compare equal iff they are the same partition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrbitPartition {
    blocks: Vec<Vec<VertexId>>,
    block_of: Vec<usize>,
}

impl OrbitPartition {
    fn from_roots(roots: &[usize]) -> Self {
        let n = roots.len();
        let mut index = vec![usize::MAX; n];
        let mut blocks: Vec<Vec<VertexId>> = Vec::new();
        let mut block_of = vec![0; n];
        for v in 0..n {
            let r = roots[v];
            if index[r] == usize::MAX {
                index[r] = blocks.len();
                blocks.push(Vec::new());
            }
            block_of[v] = index[r];
            blocks[index[r]].push(v);
        }
        OrbitPartition { blocks, block_of }
    }

    pub fn blocks(&self) -> &[Vec<VertexId>] {
        &self.blocks
    }

    pub fn block_of(&self, v: VertexId) -> usize {
        self.block_of[v]
    }

    pub fn block_containing(&self, v: VertexId) -> &[VertexId] {
        &self.blocks[self.block_of[v]]
    }

    pub fn same_orbit(&self, u: VertexId, v: VertexId) -> bool {
        self.block_of[u] == self.block_of[v]
    }

    /// Smallest block size; `usize::MAX` for the empty graph.
    pub fn min_block_size(&self) -> usize {
        self.blocks.iter().map(Vec::len).min().unwrap_or(usize::MAX)
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // keep the smaller id as root so roots are block minima
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }

    fn roots(&mut self) -> Vec<usize> {
        (0..self.parent.len()).map(|v| self.find(v)).collect()
    }
}

// ---------------------------------------------------------------------------
// Colour refinement

#[inline]
fn mix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn distinct(colours: &[u32]) -> usize {
    let mut seen = vec![false; colours.len() + 1];
    let mut count = 0;
    for &c in colours {
        if !std::mem::replace(&mut seen[c as usize], true) {
            count += 1;
        }
    }
    count
}

/// Replaces arbitrary colour values by their ranks among the distinct values
/// that occur on any side.
fn canonical_ranks(sides: &[&[u32]]) -> Vec<Vec<u32>> {
    let mut values: Vec<u32> = sides.iter().flat_map(|s| s.iter().copied()).collect();
    values.sort_unstable();
    values.dedup();
    sides
        .iter()
        .map(|s| {
            s.iter()
                .map(|c| values.binary_search(c).unwrap() as u32)
                .collect()
        })
        .collect()
}

/// Refines one or two colourings to the coarsest common equitable partition.
/// Colours are kept as dense ranks `0..cells`. Returns `false` as soon as the
/// sides disagree on a cell size.
fn refine(sides: &mut [(&Graph, &mut Vec<u32>)]) -> bool {
    let mut keys: Vec<Vec<(u32, u64)>> = sides.iter().map(|(g, _)| Vec::with_capacity(g.n())).collect();
    let mut cells = distinct(sides[0].1);
    loop {
        for (side, (g, col)) in sides.iter().enumerate() {
            let key = &mut keys[side];
            key.clear();
            for v in 0..g.n() {
                let mut h = 0u64;
                for &u in g.neighbors(v) {
                    h = h.wrapping_add(mix(col[u] as u64));
                }
                key.push((col[v], h));
            }
        }
        let mut table: Vec<(u32, u64)> = keys.iter().flat_map(|k| k.iter().copied()).collect();
        table.sort_unstable();
        table.dedup();
        let new_cells = table.len();
        for (side, (_, col)) in sides.iter_mut().enumerate() {
            for (v, key) in keys[side].iter().enumerate() {
                col[v] = table.binary_search(key).unwrap() as u32;
            }
        }
        if sides.len() > 1 {
            let mut counts = vec![0i64; new_cells];
            for &c in sides[0].1.iter() {
                counts[c as usize] += 1;
            }
            for (_, col) in sides.iter().skip(1) {
                let mut other = vec![0i64; new_cells];
                for &c in col.iter() {
                    other[c as usize] += 1;
                }
                if other != counts {
                    return false;
                }
            }
        }
        if new_cells == cells {
            return true;
        }
        cells = new_cells;
    }
}

/// Gives `v` its own cell, placed just before the rest of its old cell.
fn individualize(col: &mut [u32], v: VertexId) {
    let c = col[v];
    for (u, cu) in col.iter_mut().enumerate() {
        if *cu > c || (*cu == c && u != v) {
            *cu += 1;
        }
    }
}

fn cell_members(col: &[u32], colour: u32) -> impl Iterator<Item = VertexId> + '_ {
    col.iter()
        .enumerate()
        .filter(move |(_, &c)| c == colour)
        .map(|(v, _)| v)
}

/// Smallest non-singleton cell; ties broken by lowest colour.
fn target_cell(col: &[u32]) -> Option<u32> {
    let mut sizes = vec![0usize; col.len() + 1];
    for &c in col {
        sizes[c as usize] += 1;
    }
    sizes
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > 1)
        .min_by_key(|(c, &s)| (s, *c))
        .map(|(c, _)| c as u32)
}

/// Pairs the i-th smallest vertex of every cell on side one with the i-th
/// smallest of the same cell on side two.
fn aligned_guess(col1: &[u32], col2: &[u32]) -> Vec<VertexId> {
    let n = col1.len();
    let mut buckets: Vec<Vec<VertexId>> = vec![Vec::new(); n + 1];
    for (v, &c) in col2.iter().enumerate() {
        buckets[c as usize].push(v);
    }
    let mut cursor = vec![0usize; n + 1];
    let mut image = vec![0; n];
    for (v, &c) in col1.iter().enumerate() {
        let c = c as usize;
        image[v] = buckets[c][cursor[c]];
        cursor[c] += 1;
    }
    image
}

struct Search<'a> {
    g1: &'a Graph,
    g2: &'a Graph,
}

impl Search<'_> {
    /// First colour-respecting isomorphism below this node, if any.
    fn first(&self, mut c1: Vec<u32>, mut c2: Vec<u32>) -> Option<Vec<VertexId>> {
        if !refine(&mut [(self.g1, &mut c1), (self.g2, &mut c2)]) {
            return None;
        }
        let guess = aligned_guess(&c1, &c2);
        if is_isomorphism(&guess, self.g1, self.g2) {
            return Some(guess);
        }
        let target = target_cell(&c1)?; // discrete and the guess failed
        let x = cell_members(&c1, target).next().unwrap();
        for y in cell_members(&c2, target) {
            let (mut d1, mut d2) = (c1.clone(), c2.clone());
            individualize(&mut d1, x);
            individualize(&mut d2, y);
            if let Some(found) = self.first(d1, d2) {
                return Some(found);
            }
        }
        None
    }

    /// Every colour-respecting isomorphism below this node.
    fn all(
        &self,
        mut c1: Vec<u32>,
        mut c2: Vec<u32>,
        out: &mut Vec<Vec<VertexId>>,
        cap: usize,
    ) -> Result<(), AutomorphismError> {
        if !refine(&mut [(self.g1, &mut c1), (self.g2, &mut c2)]) {
            return Ok(());
        }
        match target_cell(&c1) {
            None => {
                let image = aligned_guess(&c1, &c2);
                if is_isomorphism(&image, self.g1, self.g2) {
                    if out.len() == cap {
                        return Err(AutomorphismError::GroupTooLarge { cap });
                    }
                    out.push(image);
                }
                Ok(())
            }
            Some(target) => {
                let x = cell_members(&c1, target).next().unwrap();
                let ys: Vec<VertexId> = cell_members(&c2, target).collect();
                for y in ys {
                    let (mut d1, mut d2) = (c1.clone(), c2.clone());
                    individualize(&mut d1, x);
                    individualize(&mut d2, y);
                    self.all(d1, d2, out, cap)?;
                }
                Ok(())
            }
        }
    }
}

/// Automorphisms and isomorphisms are unchanged by complementation; working
/// on the sparser side keeps refinement cheap on dense inputs.
fn sparse_view(g: &Graph) -> std::borrow::Cow<'_, Graph> {
    let n = g.n();
    let pairs = n * n.saturating_sub(1) / 2;
    if g.edge_count() * 2 > pairs {
        std::borrow::Cow::Owned(g.complement())
    } else {
        std::borrow::Cow::Borrowed(g)
    }
}

/// An isomorphism from `g1` onto `g2`, if one exists.
pub fn find_isomorphism(g1: &Graph, g2: &Graph) -> Option<VertexMapping> {
    find_isomorphism_colored(g1, &vec![0; g1.n()], g2, &vec![0; g2.n()])
}

/// An isomorphism from `g1` onto `g2` that maps every vertex to one of the
/// same colour.
pub fn find_isomorphism_colored(
    g1: &Graph,
    colours1: &[u32],
    g2: &Graph,
    colours2: &[u32],
) -> Option<VertexMapping> {
    if g1.n() != g2.n() || g1.edge_count() != g2.edge_count() {
        return None;
    }
    let mut d1 = g1.degrees();
    let mut d2 = g2.degrees();
    d1.sort_unstable();
    d2.sort_unstable();
    if d1 != d2 {
        return None;
    }
    let (s1, s2) = (sparse_view(g1), sparse_view(g2));
    let mut ranks = canonical_ranks(&[colours1, colours2]);
    let c2 = ranks.pop().unwrap();
    let c1 = ranks.pop().unwrap();
    let search = Search { g1: &s1, g2: &s2 };
    search
        .first(c1, c2)
        .map(|image| VertexMapping { image })
}

/// Exact automorphism orbits of `g`.
pub fn automorphism_orbits(g: &Graph) -> OrbitPartition {
    automorphism_orbits_colored(g, &vec![0; g.n()])
}

/// Orbits of the group of colour-preserving automorphisms.
pub fn automorphism_orbits_colored(g: &Graph, colours: &[u32]) -> OrbitPartition {
    let n = g.n();
    let work = sparse_view(g);
    let mut col = canonical_ranks(&[colours]).pop().unwrap();
    refine(&mut [(&work, &mut col)]);

    let mut uf = UnionFind::new(n);
    let mut cells: Vec<Vec<VertexId>> = vec![Vec::new(); n + 1];
    for v in 0..n {
        cells[col[v] as usize].push(v);
    }
    let search = Search {
        g1: &work,
        g2: &work,
    };
    for cell in cells.iter().filter(|c| c.len() > 1) {
        let mut reps: Vec<VertexId> = Vec::new();
        for &w in cell {
            let rw = uf.find(w);
            if reps.iter().any(|&r| uf.find(r) == rw) {
                continue;
            }
            let mut merged = false;
            for &r in &reps {
                let (mut c1, mut c2) = (col.clone(), col.clone());
                individualize(&mut c1, r);
                individualize(&mut c2, w);
                if let Some(image) = search.first(c1, c2) {
                    for (v, &img) in image.iter().enumerate() {
                        uf.union(v, img);
                    }
                    merged = true;
                    break;
                }
            }
            if !merged {
                reps.push(w);
            }
        }
    }
    OrbitPartition::from_roots(&uf.roots())
}

/// All automorphisms of `g`, refusing groups larger than `cap`.
pub fn enumerate_automorphisms(g: &Graph, cap: usize) -> Result<Vec<VertexMapping>, AutomorphismError> {
    let work = sparse_view(g);
    let search = Search {
        g1: &work,
        g2: &work,
    };
    let mut out = Vec::new();
    search.all(vec![0; g.n()], vec![0; g.n()], &mut out, cap)?;
    Ok(out.into_iter().map(|image| VertexMapping { image }).collect())
}

/// Orbits by exhaustive enumeration of vertex permutations (pruned only by
/// adjacency consistency of the partial assignment). Test oracle.
pub fn orbits_bruteforce(g: &Graph) -> Result<OrbitPartition, AutomorphismError> {
    let n = g.n();
    if n > BRUTEFORCE_LIMIT {
        return Err(AutomorphismError::TooLarge {
            n,
            limit: BRUTEFORCE_LIMIT,
        });
    }
    let mut uf = UnionFind::new(n);
    let mut image = vec![usize::MAX; n];
    let mut used = vec![false; n];
    fn extend(
        g: &Graph,
        depth: usize,
        image: &mut Vec<usize>,
        used: &mut Vec<bool>,
        uf: &mut UnionFind,
    ) {
        let n = g.n();
        if depth == n {
            for (v, &w) in image.iter().enumerate() {
                uf.union(v, w);
            }
            return;
        }
        for w in 0..n {
            if used[w] {
                continue;
            }
            let consistent = (0..depth).all(|u| g.has_edge(u, depth) == g.has_edge(image[u], w));
            if !consistent {
                continue;
            }
            used[w] = true;
            image[depth] = w;
            extend(g, depth + 1, image, used, uf);
            used[w] = false;
        }
    }
    extend(g, 0, &mut image, &mut used, &mut uf);
    Ok(OrbitPartition::from_roots(&uf.roots()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::generators::er_graph_seeded;

    fn blocks(p: &OrbitPartition) -> Vec<Vec<usize>> {
        p.blocks().to_vec()
    }

    #[test]
    fn isomorphism_examples() {
        let k3 = Graph::complete(3);
        let m = find_isomorphism(&k3, &k3).unwrap();
        assert!(m.is_isomorphism(&k3, &k3));

        let p4 = Graph::path(4);
        let s3 = Graph::star(3);
        assert!(find_isomorphism(&p4, &s3).is_none());

        let a = fixtures::fig3a().graph;
        let mirrored = a.relabel(&fixtures::fig3a_mirror());
        // the mirror is an automorphism, so relabelling gives back the same graph
        assert_eq!(mirrored, a);
        let shuffled = a.relabel(&[3, 0, 7, 1, 9, 2, 5, 8, 6, 4]);
        let iso = find_isomorphism(&a, &shuffled).unwrap();
        assert!(iso.is_isomorphism(&a, &shuffled));
    }

    #[test]
    fn mirror_is_an_automorphism_of_fig3a() {
        let a = fixtures::fig3a().graph;
        let m = VertexMapping::new(fixtures::fig3a_mirror()).unwrap();
        assert!(m.is_isomorphism(&a, &a));
        assert!(!m.is_identity());
    }

    #[test]
    fn orbit_examples() {
        assert_eq!(blocks(&automorphism_orbits(&Graph::complete(4))), vec![vec![0, 1, 2, 3]]);

        let a = fixtures::fig3a().graph;
        assert!(automorphism_orbits(&a).min_block_size() >= 2);

        let b = fixtures::fig3b();
        let orbits = automorphism_orbits(&b.graph);
        assert_eq!(orbits.block_containing(b.vertex("v3")), &[b.vertex("v3")]);
        assert_eq!(orbits, orbits_bruteforce(&b.graph).unwrap());
    }

    #[test]
    fn bruteforce_examples() {
        assert_eq!(blocks(&orbits_bruteforce(&Graph::cycle(5)).unwrap()), vec![vec![0, 1, 2, 3, 4]]);
        assert_eq!(blocks(&orbits_bruteforce(&Graph::path(3)).unwrap()), vec![vec![0, 2], vec![1]]);

        let t = fixtures::fig4_tree();
        let got = orbits_bruteforce(&t.graph).unwrap();
        let mut expected: Vec<Vec<usize>> = vec![
            vec![t.vertex("u")],
            vec![t.vertex("v3"), t.vertex("v4")],
            vec![t.vertex("v1"), t.vertex("v2"), t.vertex("v5"), t.vertex("v6")],
        ];
        for b in &mut expected {
            b.sort();
        }
        expected.sort();
        let mut got_blocks = blocks(&got);
        got_blocks.sort();
        assert_eq!(got_blocks, expected);
        assert_eq!(automorphism_orbits(&t.graph), got);

        assert_eq!(
            orbits_bruteforce(&Graph::new(11)),
            Err(AutomorphismError::TooLarge { n: 11, limit: 10 })
        );
    }

    #[test]
    fn orbits_agree_with_bruteforce_on_random_graphs() {
        for seed in 0..300u64 {
            let n = 4 + (seed % 7) as usize;
            let d = (seed % 11) as f64 / 10.0;
            let g = er_graph_seeded(n, d, seed).unwrap();
            assert_eq!(automorphism_orbits(&g), orbits_bruteforce(&g).unwrap(), "seed {seed}");
        }
    }

    #[test]
    fn orbit_members_have_equal_degree_and_neighbour_orbits() {
        for seed in 0..50u64 {
            let g = er_graph_seeded(30, 0.15, seed).unwrap();
            let orbits = automorphism_orbits(&g);
            let signature = |v: usize| {
                let mut s: Vec<usize> = g.neighbors(v).iter().map(|&u| orbits.block_of(u)).collect();
                s.sort_unstable();
                s
            };
            for block in orbits.blocks() {
                for &v in &block[1..] {
                    assert_eq!(g.deg(v), g.deg(block[0]));
                    assert_eq!(signature(v), signature(block[0]));
                }
            }
        }
    }

    #[test]
    fn symmetric_and_dense_graphs() {
        let empty = Graph::new(120);
        assert_eq!(automorphism_orbits(&empty).len(), 1);
        let k = Graph::complete(150);
        assert_eq!(automorphism_orbits(&k).len(), 1);
        // disjoint union of a triangle and a path: orbits {tri}, {ends}, {middle}
        let g = Graph::from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5)]).unwrap();
        assert_eq!(blocks(&automorphism_orbits(&g)), vec![vec![0, 1, 2], vec![3, 5], vec![4]]);
    }

    #[test]
    fn colored_isomorphism_respects_colours() {
        let p3 = Graph::path(3);
        // root at an end vs root at the centre
        assert!(find_isomorphism_colored(&p3, &[1, 0, 0], &p3, &[0, 1, 0]).is_none());
        let m = find_isomorphism_colored(&p3, &[1, 0, 0], &p3, &[0, 0, 1]).unwrap();
        assert_eq!(m.apply(0), 2);
    }

    #[test]
    fn enumerate_group_sizes() {
        assert_eq!(enumerate_automorphisms(&Graph::complete(4), 100).unwrap().len(), 24);
        assert_eq!(enumerate_automorphisms(&Graph::cycle(6), 100).unwrap().len(), 12);
        assert_eq!(enumerate_automorphisms(&fixtures::fig4_tree().graph, 100).unwrap().len(), 8);
        assert_eq!(
            enumerate_automorphisms(&Graph::complete(6), 100),
            Err(AutomorphismError::GroupTooLarge { cap: 100 })
        );
    }
}
