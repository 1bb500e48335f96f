//! Undirected simple graphs with dense vertex ids, plus the edge-list
//! interchange format.
//!
//! Format: the first meaningful line holds the vertex count `n`; every
//! further non-empty line that does not start with `#` is an edge `u v`
//! (0-based, space separated). Writers always emit `u < v`, edges sorted,
//! LF line endings.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

/// Dense vertex identifier in `0..n`.
pub type VertexId = usize;

/// A set of vertices of some graph.
pub type VertexSet = BTreeSet<VertexId>;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("vertex {vertex} out of range for graph of order {n}")]
    VertexOutOfRange { vertex: VertexId, n: usize },
    #[error("self-loop at vertex {0}")]
    SelfLoop(VertexId),
    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(VertexId, VertexId),
    #[error("vertex {0} listed twice")]
    DuplicateVertex(VertexId),
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: self-loop at vertex {vertex}")]
    SelfLoop { line: usize, vertex: VertexId },
    #[error("line {line}: duplicate edge {u}-{v}")]
    DuplicateEdge { line: usize, u: VertexId, v: VertexId },
    #[error("line {line}: vertex {vertex} out of range (n = {n})")]
    OutOfRange { line: usize, vertex: VertexId, n: usize },
    #[error("missing vertex count")]
    MissingHeader,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Undirected simple graph. Neighbour lists are kept sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Graph {
    adj: Vec<Vec<VertexId>>,
    m: usize,
}

impl Graph {
    /// Edgeless graph on `n` vertices.
    pub fn new(n: usize) -> Self {
        Graph {
            adj: vec![Vec::new(); n],
            m: 0,
        }
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Graph::new(n);
        for u in 0..n {
            g.adj[u] = (0..n).filter(|&v| v != u).collect();
        }
        g.m = n * n.saturating_sub(1) / 2;
        g
    }

    pub fn cycle(n: usize) -> Self {
        let mut g = Graph::new(n);
        for u in 0..n {
            let _ = g.add_edge(u, (u + 1) % n);
        }
        g
    }

    pub fn path(n: usize) -> Self {
        let mut g = Graph::new(n);
        for u in 1..n {
            let _ = g.add_edge(u - 1, u);
        }
        g
    }

    /// Star with one centre (vertex 0) and `leaves` leaves.
    pub fn star(leaves: usize) -> Self {
        let mut g = Graph::new(leaves + 1);
        for v in 1..=leaves {
            let _ = g.add_edge(0, v);
        }
        g
    }

    /// Builds a graph from an edge list. Duplicate edges and self-loops are
    /// rejected.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (VertexId, VertexId)>,
    {
        let mut g = Graph::new(n);
        for (u, v) in edges {
            if !g.add_edge(u, v)? {
                return Err(GraphError::DuplicateEdge(u.min(v), u.max(v)));
            }
        }
        Ok(g)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.adj.len()
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.m
    }

    /// Adds `{u, v}`; returns `false` if the edge was already present.
    pub fn add_edge(&mut self, u: VertexId, v: VertexId) -> Result<bool, GraphError> {
        self.check(u)?;
        self.check(v)?;
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        match self.adj[u].binary_search(&v) {
            Ok(_) => Ok(false),
            Err(pos) => {
                self.adj[u].insert(pos, v);
                let pos_v = self.adj[v].binary_search(&u).unwrap_err();
                self.adj[v].insert(pos_v, u);
                self.m += 1;
                Ok(true)
            }
        }
    }

    /// Removes `{u, v}`; returns `false` if it was absent.
    pub fn remove_edge(&mut self, u: VertexId, v: VertexId) -> bool {
        if u >= self.n() || v >= self.n() {
            return false;
        }
        match self.adj[u].binary_search(&v) {
            Ok(pos) => {
                self.adj[u].remove(pos);
                let pos_v = self.adj[v].binary_search(&u).unwrap();
                self.adj[v].remove(pos_v);
                self.m -= 1;
                true
            }
            Err(_) => false,
        }
    }

    /// Appends `count` isolated vertices and returns the id of the first one.
    pub fn add_vertices(&mut self, count: usize) -> VertexId {
        let first = self.n();
        self.adj.resize(first + count, Vec::new());
        first
    }

    #[inline]
    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        u < self.n() && self.adj[u].binary_search(&v).is_ok()
    }

    #[inline]
    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.adj[v]
    }

    pub fn degree(&self, v: VertexId) -> Result<usize, GraphError> {
        self.check(v)?;
        Ok(self.adj[v].len())
    }

    /// Degree without range checking; panics on an invalid id.
    #[inline]
    pub fn deg(&self, v: VertexId) -> usize {
        self.adj[v].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adj.iter().map(Vec::len).collect()
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, ns)| ns.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    pub fn edge_set(&self) -> BTreeSet<(VertexId, VertexId)> {
        self.edges().collect()
    }

    pub fn check(&self, v: VertexId) -> Result<(), GraphError> {
        if v < self.n() {
            Ok(())
        } else {
            Err(GraphError::VertexOutOfRange {
                vertex: v,
                n: self.n(),
            })
        }
    }

    /// Subgraph induced by `vertices`. Vertex `i` of the result corresponds
    /// to `vertices[i]`; the returned table maps new ids back to old ones.
    pub fn induced_subgraph(
        &self,
        vertices: &[VertexId],
    ) -> Result<(Graph, Vec<VertexId>), GraphError> {
        let mut index = vec![usize::MAX; self.n()];
        for (i, &v) in vertices.iter().enumerate() {
            self.check(v)?;
            if index[v] != usize::MAX {
                return Err(GraphError::DuplicateVertex(v));
            }
            index[v] = i;
        }
        let mut sub = Graph::new(vertices.len());
        for (i, &v) in vertices.iter().enumerate() {
            for &w in &self.adj[v] {
                let j = index[w];
                if j != usize::MAX && i < j {
                    sub.add_edge(i, j).expect("valid by construction");
                }
            }
        }
        Ok((sub, vertices.to_vec()))
    }

    /// Relabels vertices: vertex `v` becomes `perm[v]`. `perm` must be a
    /// permutation of `0..n`.
    pub fn relabel(&self, perm: &[VertexId]) -> Graph {
        assert_eq!(perm.len(), self.n(), "permutation length mismatch");
        let mut adj = vec![Vec::new(); self.n()];
        for (u, ns) in self.adj.iter().enumerate() {
            let mut mapped: Vec<VertexId> = ns.iter().map(|&v| perm[v]).collect();
            mapped.sort_unstable();
            adj[perm[u]] = mapped;
        }
        Graph { adj, m: self.m }
    }

    pub fn complement(&self) -> Graph {
        let n = self.n();
        let mut adj = Vec::with_capacity(n);
        for u in 0..n {
            let ns = &self.adj[u];
            let mut out = Vec::with_capacity(n - 1 - ns.len());
            let mut it = ns.iter().peekable();
            for v in 0..n {
                if v == u {
                    continue;
                }
                if it.peek() == Some(&&v) {
                    it.next();
                } else {
                    out.push(v);
                }
            }
            adj.push(out);
        }
        let m = n * n.saturating_sub(1) / 2 - self.m;
        Graph { adj, m }
    }

    /// Breadth-first distances from `source`; `None` for unreachable vertices.
    pub fn bfs_distances(&self, source: VertexId) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.n()];
        dist[source] = Some(0);
        let mut queue = std::collections::VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].unwrap();
            for &v in &self.adj[u] {
                if dist[v].is_none() {
                    dist[v] = Some(d + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Serialises to the edge-list format.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::with_capacity(8 + self.m * 8);
        let _ = writeln!(out, "{}", self.n());
        for (u, v) in self.edges() {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }

    pub fn parse_edge_list(text: &str) -> Result<Graph, ParseError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or(ParseError::MissingHeader)?;
        let n: usize = header.parse().map_err(|_| ParseError::Malformed {
            line: hline,
            message: format!("expected vertex count, found {header:?}"),
        })?;
        let mut g = Graph::new(n);
        for (line, text) in lines {
            let mut parts = text.split_whitespace();
            let parse = |tok: Option<&str>| -> Result<VertexId, ParseError> {
                tok.and_then(|t| t.parse().ok())
                    .ok_or_else(|| ParseError::Malformed {
                        line,
                        message: format!("expected \"u v\", found {text:?}"),
                    })
            };
            let u = parse(parts.next())?;
            let v = parse(parts.next())?;
            if parts.next().is_some() {
                return Err(ParseError::Malformed {
                    line,
                    message: format!("trailing tokens in {text:?}"),
                });
            }
            match g.add_edge(u, v) {
                Ok(true) => {}
                Ok(false) => {
                    return Err(ParseError::DuplicateEdge {
                        line,
                        u: u.min(v),
                        v: u.max(v),
                    })
                }
                Err(GraphError::SelfLoop(vertex)) => return Err(ParseError::SelfLoop { line, vertex }),
                Err(GraphError::VertexOutOfRange { vertex, n }) => {
                    return Err(ParseError::OutOfRange { line, vertex, n })
                }
                Err(e) => unreachable!("{e}"),
            }
        }
        Ok(g)
    }

    pub fn load_edge_list(path: impl AsRef<Path>) -> Result<Graph, ParseError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_edge_list(&text)
    }

    pub fn save_edge_list(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        std::fs::write(path, self.to_edge_list())
    }
}

/// Dense adjacency bit matrix for constant-time edge queries in hot loops.
#[derive(Clone, Debug)]
pub struct AdjMatrix {
    words: usize,
    bits: Vec<u64>,
}

impl AdjMatrix {
    pub fn new(g: &Graph) -> Self {
        let n = g.n();
        let words = n.div_ceil(64).max(1);
        let mut bits = vec![0u64; n * words];
        for (u, v) in g.edges() {
            bits[u * words + v / 64] |= 1 << (v % 64);
            bits[v * words + u / 64] |= 1 << (u % 64);
        }
        AdjMatrix { words, bits }
    }

    #[inline]
    pub fn has(&self, u: VertexId, v: VertexId) -> bool {
        self.bits[u * self.words + v / 64] >> (v % 64) & 1 == 1
    }
}
