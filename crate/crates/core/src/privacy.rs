//! Checkers for structural privacy properties.
//!
//! Passive-attack properties: k-degree anonymity, k-neighbourhood anonymity,
//! k-automorphism (in the weak form that allows fixed points) and
//! k-symmetry. Active-attack properties: (k,ℓ)-anonymity and
//! (k,ℓ)-adjacency anonymity, both checked exactly by enumerating candidate
//! sybil sets under an explicit budget, or sampled.
//!
//! (k,ℓ) conventions: for every non-empty `S` with `|S| <= ℓ` and every
//! `u ∉ S`, at least `k` vertices of `V \ S` (counting `u`) must share
//! `u`'s representation with respect to `S`. Representations list distances
//! (or adjacency bits) in ascending id order of `S`; unreachable vertices get
//! an infinite distance.

use std::collections::HashMap;

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automorphism::{self, AutomorphismError, VertexMapping};
use crate::graph::{Graph, VertexId};
use crate::rng;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PrivacyError {
    #[error("enumeration budget exceeded: {needed} candidate sets needed, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u64 },
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error(transparent)]
    Automorphism(#[from] AutomorphismError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Property {
    KDegree,
    KNeighbourhood,
    KAutomorphism,
    KSymmetry,
    KlAnonymity,
    KlAdjacencyAnonymity,
}

impl Property {
    pub const ALL: [Property; 6] = [
        Property::KDegree,
        Property::KNeighbourhood,
        Property::KAutomorphism,
        Property::KSymmetry,
        Property::KlAnonymity,
        Property::KlAdjacencyAnonymity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Property::KDegree => "k-degree",
            Property::KNeighbourhood => "k-neighbourhood",
            Property::KAutomorphism => "k-automorphism",
            Property::KSymmetry => "k-symmetry",
            Property::KlAnonymity => "kl-anonymity",
            Property::KlAdjacencyAnonymity => "kl-adjacency-anonymity",
        }
    }

    pub fn parse(name: &str) -> Option<Property> {
        Property::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn needs_l(self) -> bool {
        matches!(self, Property::KlAnonymity | Property::KlAdjacencyAnonymity)
    }
}

/// Why a property fails.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub detail: String,
    /// Vertices whose equivalence class is too small.
    pub vertices: Vec<VertexId>,
    /// The candidate sybil set, for the (k,ℓ) properties.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sybil_set: Option<Vec<VertexId>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub property: Property,
    pub k: usize,
    pub l: Option<usize>,
    pub holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

impl PropertyReport {
    fn new(property: Property, k: usize, l: Option<usize>, witness: Option<Witness>) -> Self {
        PropertyReport {
            property,
            k,
            l,
            holds: witness.is_none(),
            witness,
        }
    }
}

/// Limits for the enumerative checkers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    /// Maximum number of candidate sybil sets for the exact (k,ℓ) checkers.
    pub max_subsets: u64,
    /// Maximum automorphism group size enumerated for k-automorphism.
    pub max_group: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_subsets: 10_000_000,
            max_group: 100_000,
        }
    }
}

// ---------------------------------------------------------------------------
// passive properties

/// Smallest equivalence class of `key`, and one vertex in it.
fn smallest_class<K: std::hash::Hash + Eq>(keys: impl Iterator<Item = (VertexId, K)>) -> Option<(usize, Vec<VertexId>)> {
    let mut classes: HashMap<K, Vec<VertexId>> = HashMap::new();
    for (v, k) in keys {
        classes.entry(k).or_default().push(v);
    }
    classes
        .into_values()
        .min_by_key(|c| (c.len(), c[0]))
        .map(|c| (c.len(), c))
}

/// Largest k for which `g` is k-degree anonymous (0 for the empty graph).
pub fn max_k_degree(g: &Graph) -> usize {
    smallest_class((0..g.n()).map(|v| (v, g.deg(v))))
        .map(|(k, _)| k)
        .unwrap_or(0)
}

/// The closed neighbourhood of `v` as a graph rooted at vertex 0.
fn rooted_neighbourhood(g: &Graph, v: VertexId) -> Graph {
    let mut members = vec![v];
    members.extend_from_slice(g.neighbors(v));
    g.induced_subgraph(&members).unwrap().0
}

/// Partition of the vertices by rooted-neighbourhood isomorphism class.
pub fn neighbourhood_classes(g: &Graph) -> Vec<Vec<VertexId>> {
    let hoods: Vec<Graph> = (0..g.n()).map(|v| rooted_neighbourhood(g, v)).collect();
    let invariant = |h: &Graph| {
        let mut degs = h.degrees();
        let root = degs[0];
        degs.sort_unstable();
        (h.n(), h.edge_count(), root, degs)
    };
    let mut buckets: HashMap<_, Vec<VertexId>> = HashMap::new();
    for v in 0..g.n() {
        buckets.entry(invariant(&hoods[v])).or_default().push(v);
    }
    let mut classes: Vec<Vec<VertexId>> = Vec::new();
    for bucket in buckets.into_values() {
        let mut local: Vec<Vec<VertexId>> = Vec::new();
        for v in bucket {
            let h = &hoods[v];
            let mut colours = vec![0u32; h.n()];
            colours[0] = 1;
            let found = local.iter_mut().find(|class| {
                let r = &hoods[class[0]];
                automorphism::find_isomorphism_colored(h, &colours, r, &colours).is_some()
            });
            match found {
                Some(class) => class.push(v),
                None => local.push(vec![v]),
            }
        }
        classes.extend(local);
    }
    classes.sort();
    classes
}

/// Largest k for which `g` is k-neighbourhood anonymous.
pub fn max_k_neighbourhood(g: &Graph) -> usize {
    neighbourhood_classes(g).iter().map(Vec::len).min().unwrap_or(0)
}

/// Largest k for which `g` is k-symmetric (smallest orbit size).
pub fn max_k_symmetry(g: &Graph) -> usize {
    let orbits = automorphism::automorphism_orbits(g);
    if orbits.is_empty() {
        0
    } else {
        orbits.min_block_size()
    }
}

pub fn is_k_symmetric(g: &Graph, k: usize) -> bool {
    g.n() == 0 || automorphism::automorphism_orbits(g).min_block_size() >= k
}

/// k-automorphism in its weak form: `k - 1` non-identity automorphisms whose
/// images differ pairwise at every vertex. Fixed points are allowed.
pub fn is_k_automorphic_def6(g: &Graph, k: usize, budget: &Budget) -> Result<bool, PrivacyError> {
    Ok(k_automorphism_witness(g, k, budget)?.is_some())
}

/// The `k - 1` automorphisms certifying weak k-automorphism, if they exist.
pub fn k_automorphism_witness(
    g: &Graph,
    k: usize,
    budget: &Budget,
) -> Result<Option<Vec<VertexMapping>>, PrivacyError> {
    if k == 0 {
        return Err(PrivacyError::Parameter("k must be at least 1".into()));
    }
    if k == 1 {
        return Ok(Some(Vec::new()));
    }
    let group: Vec<VertexMapping> = automorphism::enumerate_automorphisms(g, budget.max_group)?
        .into_iter()
        .filter(|a| !a.is_identity())
        .collect();
    let disagree = |a: &VertexMapping, b: &VertexMapping| {
        a.as_slice().iter().zip(b.as_slice()).all(|(x, y)| x != y)
    };
    fn grow(
        chosen: &mut Vec<usize>,
        start: usize,
        need: usize,
        group: &[VertexMapping],
        disagree: &dyn Fn(&VertexMapping, &VertexMapping) -> bool,
    ) -> bool {
        if chosen.len() == need {
            return true;
        }
        for i in start..group.len() {
            if chosen.iter().all(|&c| disagree(&group[c], &group[i])) {
                chosen.push(i);
                if grow(chosen, i + 1, need, group, disagree) {
                    return true;
                }
                chosen.pop();
            }
        }
        false
    }
    let mut chosen = Vec::new();
    if grow(&mut chosen, 0, k - 1, &group, &disagree) {
        Ok(Some(chosen.into_iter().map(|i| group[i].clone()).collect()))
    } else {
        Ok(None)
    }
}

// ---------------------------------------------------------------------------
// (k, ℓ) properties

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Knowledge {
    Distance,
    Adjacency,
}

const UNREACHABLE: u32 = u32::MAX;

fn distance_matrix(g: &Graph) -> Vec<Vec<u32>> {
    (0..g.n())
        .map(|s| {
            g.bfs_distances(s)
                .into_iter()
                .map(|d| d.unwrap_or(UNREACHABLE))
                .collect()
        })
        .collect()
}

fn binomial_sum(n: usize, l: usize) -> u128 {
    let mut total: u128 = 0;
    let mut c: u128 = 1;
    for i in 1..=l.min(n) {
        c = c * (n - i + 1) as u128 / i as u128;
        total = total.saturating_add(c);
    }
    total
}

/// Checks one candidate sybil set; returns the violating class if any.
fn violation_for(
    n: usize,
    sybils: &[VertexId],
    k: usize,
    knowledge: Knowledge,
    dist: &[Vec<u32>],
) -> Option<Witness> {
    let mut in_s = vec![false; n];
    for &s in sybils {
        in_s[s] = true;
    }
    let repr = |u: VertexId| -> Vec<u32> {
        sybils
            .iter()
            .map(|&s| match knowledge {
                Knowledge::Distance => dist[s][u],
                Knowledge::Adjacency => (dist[s][u] == 1) as u32,
            })
            .collect()
    };
    let (size, class) = smallest_class((0..n).filter(|&u| !in_s[u]).map(|u| (u, repr(u))))?;
    (size < k).then(|| Witness {
        detail: format!(
            "{} vertices share representation {:?} with respect to the candidate sybil set",
            size,
            repr(class[0])
        ),
        vertices: class,
        sybil_set: Some(sybils.to_vec()),
    })
}

/// Next `size`-subset of `0..n` in lexicographic order.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let size = c.len();
    let mut i = size;
    while i > 0 {
        i -= 1;
        if c[i] < n - size + i {
            c[i] += 1;
            for j in i + 1..size {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn check_kl(
    g: &Graph,
    k: usize,
    l: usize,
    knowledge: Knowledge,
    budget: &Budget,
) -> Result<Option<Witness>, PrivacyError> {
    if l == 0 || k == 0 {
        return Err(PrivacyError::Parameter("k and ℓ must be at least 1".into()));
    }
    let n = g.n();
    let needed = binomial_sum(n, l);
    if needed > budget.max_subsets as u128 {
        return Err(PrivacyError::BudgetExceeded {
            needed,
            budget: budget.max_subsets,
        });
    }
    let dist = distance_matrix(g);
    // sizes in increasing order, then candidate sets grouped by first member
    for size in 1..=l.min(n) {
        let found = (0..=n - size).into_par_iter().find_map_first(|first| {
            let mut rest: Vec<usize> = (first + 1..first + size).collect();
            loop {
                let mut s = Vec::with_capacity(size);
                s.push(first);
                s.extend_from_slice(&rest);
                if let Some(w) = violation_for(n, &s, k, knowledge, &dist) {
                    return Some(w);
                }
                if rest.is_empty() {
                    return None;
                }
                // combinations of the remaining members drawn from first+1..n
                let mut shifted: Vec<usize> = rest.iter().map(|x| x - first - 1).collect();
                if !next_combination(&mut shifted, n - first - 1) {
                    return None;
                }
                rest = shifted.into_iter().map(|x| x + first + 1).collect();
            }
        });
        if found.is_some() {
            return Ok(found);
        }
    }
    Ok(None)
}

pub fn is_kl_anonymous(g: &Graph, k: usize, l: usize, budget: &Budget) -> Result<bool, PrivacyError> {
    Ok(check_kl(g, k, l, Knowledge::Distance, budget)?.is_none())
}

pub fn is_kl_adjacency_anonymous(
    g: &Graph,
    k: usize,
    l: usize,
    budget: &Budget,
) -> Result<bool, PrivacyError> {
    Ok(check_kl(g, k, l, Knowledge::Adjacency, budget)?.is_none())
}

/// One-sided verdict of the sampling checker.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampledVerdict {
    pub samples: usize,
    /// A violation, if one was found; `None` means "none found in `samples`
    /// draws", not that the property holds.
    pub violation: Option<Witness>,
}

/// Monte-Carlo (k,ℓ) check over uniformly drawn candidate sets: the size is
/// uniform in `1..=ℓ`, then the members uniform among all vertices.
pub fn sample_kl(
    g: &Graph,
    k: usize,
    l: usize,
    knowledge: Knowledge,
    samples: usize,
    seed: u64,
) -> SampledVerdict {
    use rand::Rng as _;
    let n = g.n();
    let dist = distance_matrix(g);
    let mut r = rng::rng(seed);
    for i in 0..samples {
        let size = r.gen_range(1..=l.min(n).max(1));
        let mut s = sample(&mut r, n, size.min(n)).into_vec();
        s.sort_unstable();
        if let Some(w) = violation_for(n, &s, k, knowledge, &dist) {
            return SampledVerdict {
                samples: i + 1,
                violation: Some(w),
            };
        }
    }
    SampledVerdict {
        samples,
        violation: None,
    }
}

// ---------------------------------------------------------------------------
// reports

/// Runs one checker and packages the result.
pub fn check(
    g: &Graph,
    property: Property,
    k: usize,
    l: Option<usize>,
    budget: &Budget,
) -> Result<PropertyReport, PrivacyError> {
    let class_witness = |size: usize, vertices: Vec<VertexId>, what: &str| {
        (size < k).then(|| Witness {
            detail: format!("{what} class of size {size} < {k}"),
            vertices,
            sybil_set: None,
        })
    };
    let witness = match property {
        Property::KDegree => smallest_class((0..g.n()).map(|v| (v, g.deg(v))))
            .and_then(|(size, class)| class_witness(size, class, "degree")),
        Property::KNeighbourhood => neighbourhood_classes(g)
            .into_iter()
            .min_by_key(|c| (c.len(), c[0]))
            .and_then(|c| class_witness(c.len(), c, "neighbourhood")),
        Property::KSymmetry => {
            let orbits = automorphism::automorphism_orbits(g);
            orbits
                .blocks()
                .iter()
                .min_by_key(|b| (b.len(), b[0]))
                .and_then(|b| class_witness(b.len(), b.clone(), "orbit"))
        }
        Property::KAutomorphism => match k_automorphism_witness(g, k, budget)? {
            Some(_) => None,
            None => Some(Witness {
                detail: format!("no {} pairwise-disagreeing non-trivial automorphisms", k - 1),
                vertices: Vec::new(),
                sybil_set: None,
            }),
        },
        Property::KlAnonymity | Property::KlAdjacencyAnonymity => {
            let l = l.ok_or_else(|| PrivacyError::Parameter(format!("{} needs ℓ", property.name())))?;
            let knowledge = if property == Property::KlAnonymity {
                Knowledge::Distance
            } else {
                Knowledge::Adjacency
            };
            check_kl(g, k, l, knowledge, budget)?
        }
    };
    let l = if property.needs_l() { l } else { None };
    Ok(PropertyReport::new(property, k, l, witness))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::generators::er_graph_seeded;

    fn budget() -> Budget {
        Budget::default()
    }

    #[test]
    fn degree_examples() {
        assert_eq!(max_k_degree(&fixtures::fig4_tree().graph), 1);
        assert_eq!(max_k_degree(&Graph::cycle(6)), 6);
        assert_eq!(max_k_degree(&fixtures::fig3b().graph), 1);
    }

    #[test]
    fn neighbourhood_examples() {
        assert_eq!(max_k_neighbourhood(&Graph::complete(5)), 5);
        assert_eq!(max_k_neighbourhood(&Graph::cycle(6)), 6);
        let t = fixtures::fig4_tree();
        let classes = neighbourhood_classes(&t.graph);
        let u_class = classes.iter().find(|c| c.contains(&t.vertex("u"))).unwrap();
        assert_eq!(u_class, &vec![t.vertex("u")]);
        assert_eq!(max_k_neighbourhood(&t.graph), 1);
    }

    #[test]
    fn neighbourhood_is_rooted() {
        // P3: the two ends have neighbourhood P2 rooted at an end, the centre
        // P3 rooted at its middle
        assert_eq!(
            neighbourhood_classes(&Graph::path(3)),
            vec![vec![0, 2], vec![1]]
        );
    }

    #[test]
    fn def6_examples() {
        let t = fixtures::fig4_tree();
        assert!(is_k_automorphic_def6(&t.graph, 2, &budget()).unwrap());
        assert_eq!(max_k_degree(&t.graph), 1);
        assert!(is_k_automorphic_def6(&Graph::complete(3), 3, &budget()).unwrap());
        // the only non-trivial automorphism of P3 fixes the centre
        assert!(is_k_automorphic_def6(&Graph::path(3), 2, &budget()).unwrap());
        assert!(!is_k_automorphic_def6(&Graph::path(3), 3, &budget()).unwrap());
        // rigid graph: the asymmetric 6-vertex tree has no non-trivial automorphism
        let rigid = Graph::from_edges(7, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (2, 6)]).unwrap();
        assert!(!is_k_automorphic_def6(&rigid, 2, &budget()).unwrap());
    }

    #[test]
    fn symmetry_examples() {
        assert!(is_k_symmetric(&fixtures::fig3a().graph, 2));
        assert!(!is_k_symmetric(&fixtures::fig3b().graph, 2));
        assert!(!is_k_symmetric(&fixtures::fig3c().graph, 2));
    }

    #[test]
    fn kl_anonymity_examples() {
        let b = budget();
        assert!(is_kl_anonymous(&fixtures::fig3b().graph, 2, 1, &b).unwrap());
        assert!(!is_kl_anonymous(&fixtures::fig3a().graph, 2, 2, &b).unwrap());
        assert!(!is_kl_anonymous(&fixtures::fig3c().graph, 2, 2, &b).unwrap());
    }

    #[test]
    fn kl_adjacency_examples() {
        let b = budget();
        for n in 3..8 {
            for l in 1..n {
                let k = n - l;
                assert!(is_kl_adjacency_anonymous(&Graph::complete(n), k, l, &b).unwrap());
                assert!(!is_kl_adjacency_anonymous(&Graph::complete(n), k + 1, l, &b).unwrap());
            }
        }
        assert!(is_kl_adjacency_anonymous(&fixtures::fig3b().graph, 2, 1, &b).unwrap());
    }

    #[test]
    fn star_adjacency_singletons() {
        // centre 0 plus five leaves
        let star = Graph::star(5);
        let n = star.n();
        let dist = distance_matrix(&star);
        // S = {centre}: every leaf is adjacent to it, one class of five
        assert!(violation_for(n, &[0], 2, Knowledge::Adjacency, &dist).is_none());
        // S = {leaf}: the centre is the only vertex adjacent to the leaf
        let w = violation_for(n, &[1], 2, Knowledge::Adjacency, &dist).unwrap();
        assert_eq!(w.vertices, vec![0]);
        assert!(!is_kl_adjacency_anonymous(&star, 2, 1, &budget()).unwrap());
    }

    #[test]
    fn budget_refusal_names_the_budget() {
        let g = Graph::new(40);
        let small = Budget {
            max_subsets: 100,
            ..Budget::default()
        };
        let err = is_kl_anonymous(&g, 2, 3, &small).unwrap_err();
        assert_eq!(
            err,
            PrivacyError::BudgetExceeded {
                needed: 40 + 780 + 9880,
                budget: 100
            }
        );
        assert!(err.to_string().contains("budget is 100"));
    }

    #[test]
    fn sampled_check_finds_fig3a_violation() {
        let a = fixtures::fig3a().graph;
        let verdict = sample_kl(&a, 2, 2, Knowledge::Distance, 5000, 1);
        assert!(verdict.violation.is_some());
        let fine = sample_kl(&fixtures::fig3b().graph, 2, 1, Knowledge::Distance, 200, 1);
        assert!(fine.violation.is_none());
        assert_eq!(fine.samples, 200);
    }

    #[test]
    fn reports_carry_witness_iff_failing() {
        let b = budget();
        for fx in fixtures::all() {
            for p in Property::ALL {
                for k in 1..4 {
                    let r = check(&fx.graph, p, k, Some(2), &b).unwrap();
                    assert_eq!(r.holds, r.witness.is_none());
                }
            }
        }
    }

    #[test]
    fn monotone_in_k_and_l() {
        let b = budget();
        for seed in 0..40 {
            let g = er_graph_seeded(8, 0.4, seed).unwrap();
            for p in Property::ALL {
                for l in 1..3 {
                    let holds: Vec<bool> = (1..5)
                        .map(|k| check(&g, p, k, Some(l), &b).unwrap().holds)
                        .collect();
                    for w in holds.windows(2) {
                        assert!(w[0] || !w[1], "{p:?} not monotone in k");
                    }
                }
            }
            for k in 1..4 {
                for l in 2..4 {
                    if is_kl_anonymous(&g, k, l, &b).unwrap() {
                        assert!(is_kl_anonymous(&g, k, l - 1, &b).unwrap());
                    }
                    if is_kl_anonymous(&g, k, l, &b).unwrap() {
                        assert!(is_kl_adjacency_anonymous(&g, k, l, &b).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn combination_enumeration_is_complete() {
        let mut c = vec![0, 1, 2];
        let mut count = 1;
        while next_combination(&mut c, 6) {
            count += 1;
        }
        assert_eq!(count, 20);
        assert_eq!(binomial_sum(6, 3), 6 + 15 + 20);
    }
}
