//! Small labelled example graphs used as regression fixtures: the
//! incomparability examples (three graphs), the k-automorphism
//! counterexample tree, and a sybil-extended fragment with a hand-made
//! alignment table.

use serde::{Deserialize, Serialize};

use crate::graph::{Graph, VertexId};
use crate::privacy::Property;

/// A graph whose vertices carry human-readable labels.
#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: &'static str,
    pub graph: Graph,
    pub labels: Vec<&'static str>,
}

impl Fixture {
    fn build(name: &'static str, labels: &[&'static str], edges: &[(&str, &str)]) -> Self {
        let index = |l: &str| {
            labels
                .iter()
                .position(|x| *x == l)
                .unwrap_or_else(|| panic!("unknown label {l}"))
        };
        let graph = Graph::from_edges(labels.len(), edges.iter().map(|(a, b)| (index(a), index(b))))
            .expect("fixture edges are valid");
        Fixture {
            name,
            graph,
            labels: labels.to_vec(),
        }
    }

    pub fn vertex(&self, label: &str) -> VertexId {
        self.labels
            .iter()
            .position(|x| *x == label)
            .unwrap_or_else(|| panic!("{}: unknown label {label}", self.name))
    }

    pub fn label(&self, v: VertexId) -> &'static str {
        self.labels[v]
    }

    /// Edge-list text with a comment header naming every vertex.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("# {}\n", self.name);
        for (i, l) in self.labels.iter().enumerate() {
            out.push_str(&format!("# {i} = {l}\n"));
        }
        out.push_str(&self.graph.to_edge_list());
        out
    }
}

const V10: [&str; 10] = ["v1", "v2", "v3", "v4", "v5", "v6", "v7", "v8", "v9", "v10"];

/// Two 4-cycles joined by a 3-edge path; the left-right mirror makes it
/// 2-symmetric.
pub fn fig3a() -> Fixture {
    Fixture::build(
        "fig3a",
        &V10,
        &[
            ("v1", "v2"),
            ("v2", "v4"),
            ("v4", "v5"),
            ("v5", "v6"),
            ("v6", "v7"),
            ("v7", "v8"),
            ("v8", "v10"),
            ("v10", "v9"),
            ("v9", "v7"),
            ("v1", "v3"),
            ("v3", "v4"),
        ],
    )
}

/// The mirror permutation of [`fig3a`] (as 0-based ids).
pub fn fig3a_mirror() -> Vec<VertexId> {
    // v1<->v10, v2<->v8, v3<->v9, v4<->v7, v5<->v6
    vec![9, 7, 8, 6, 5, 4, 3, 1, 2, 0]
}

/// Bowtie: two triangles sharing v3.
pub fn fig3b() -> Fixture {
    Fixture::build(
        "fig3b",
        &V10[..5],
        &[
            ("v3", "v1"),
            ("v1", "v2"),
            ("v2", "v3"),
            ("v3", "v4"),
            ("v4", "v5"),
            ("v5", "v3"),
        ],
    )
}

/// K4 on v1..v4, bridge v4-v5, triangle v5 v6 v7.
pub fn fig3c() -> Fixture {
    Fixture::build(
        "fig3c",
        &V10[..7],
        &[
            ("v1", "v2"),
            ("v2", "v4"),
            ("v4", "v5"),
            ("v5", "v6"),
            ("v6", "v7"),
            ("v7", "v5"),
            ("v4", "v3"),
            ("v3", "v1"),
            ("v1", "v4"),
            ("v2", "v3"),
        ],
    )
}

/// Seven-vertex tree: u in the middle of v3-u-v4, each of v3 and v4 with two
/// leaves.
pub fn fig4_tree() -> Fixture {
    Fixture::build(
        "fig4",
        &["u", "v1", "v2", "v3", "v4", "v5", "v6"],
        &[
            ("v1", "v3"),
            ("v2", "v3"),
            ("v3", "u"),
            ("u", "v4"),
            ("v4", "v5"),
            ("v4", "v6"),
        ],
    )
}

/// Sybil-extended fragment with sybils 1, 2, 3 and users A..F.
///
/// The worked alignment-table example pins the edges A-B and B-E and the
/// non-edges C-A and A-3; the remaining edges are an illustrative
/// reconstruction.
pub fn sybil_fragment() -> Fixture {
    Fixture::build(
        "sybil_fragment",
        &["1", "2", "3", "A", "B", "C", "D", "E", "F"],
        &[
            ("A", "B"),
            ("B", "E"),
            ("E", "F"),
            ("C", "F"),
            ("C", "D"),
            ("D", "F"),
            ("1", "2"),
            ("2", "3"),
            ("1", "E"),
            ("1", "F"),
            ("2", "F"),
        ],
    )
}

/// Rows of the worked 3-column alignment table for [`sybil_fragment`].
pub const SYBIL_FRAGMENT_VAT: [[&str; 3]; 3] = [["1", "F", "D"], ["C", "A", "B"], ["2", "3", "E"]];

/// All fixtures that the `fixtures` command writes out.
pub fn all() -> Vec<Fixture> {
    vec![fig3a(), fig3b(), fig3c(), fig4_tree()]
}

/// A property verdict a fixture is known to have.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expectation {
    pub property: Property,
    pub k: usize,
    pub l: Option<usize>,
    pub holds: bool,
}

const fn expect(property: Property, k: usize, l: Option<usize>, holds: bool) -> Expectation {
    Expectation { property, k, l, holds }
}

/// The verdicts each figure graph is drawn to illustrate.
pub fn expectations(name: &str) -> Vec<Expectation> {
    use Property::*;
    match name {
        "fig3a" => vec![
            expect(KSymmetry, 2, None, true),
            expect(KlAnonymity, 2, Some(2), false),
        ],
        "fig3b" => vec![
            expect(KlAnonymity, 2, Some(1), true),
            expect(KSymmetry, 2, None, false),
            expect(KDegree, 2, None, false),
        ],
        "fig3c" => vec![
            expect(KSymmetry, 2, None, false),
            expect(KlAnonymity, 2, Some(2), false),
        ],
        "fig4" => vec![
            expect(KAutomorphism, 2, None, true),
            expect(KDegree, 2, None, false),
        ],
        _ => Vec::new(),
    }
}
