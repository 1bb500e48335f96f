//! Exact adversary oracle for small instances.
//!
//! The adversary's guess is an injective map `ρ` from its own vertices
//! (sybils then victims, as in the attacker subgraph) into the published
//! graph. The support holds every `ρ` under which the published attacker
//! subgraph agrees with the adversary's knowledge on every pair that is not
//! victim-victim; all of them are equally likely. The success probability
//! on victim `u` is the mass of the guesses with `ρ(u) = φ(u)`.
//!
//! If no guess agrees exactly (the defender added edges among the attacker's
//! vertices), the support falls back to the guesses with the fewest
//! disagreeing pairs and the distribution is flagged as relaxed.
//!
//! A weaker adversary only distinguishes guesses up to isomorphism of the
//! attacker subgraph they expose; [`enumerate_isomorphic_guesses`] covers
//! that reading.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automorphism::find_isomorphism;
use crate::graph::{AdjMatrix, Graph, VertexId};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("instance too large: {vars} attacker vertices (limit {max_vars}), {n} published vertices (limit {max_n})")]
    TooLarge {
        vars: usize,
        n: usize,
        max_vars: usize,
        max_n: usize,
    },
    #[error("support exceeds {0} mappings")]
    SupportTooLarge(usize),
    #[error("local vertex {0} is not a victim")]
    NotAVictim(usize),
    #[error("knowledge has {knowledge} vertices but {sybils} sybils were declared")]
    Shape { knowledge: usize, sybils: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleBudget {
    pub max_vars: usize,
    pub max_n: usize,
    pub max_support: usize,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget {
            max_vars: 7,
            max_n: 16,
            max_support: 2_000_000,
        }
    }
}

/// Uniform distribution over the consistent guesses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MappingDistribution {
    pub sybils: usize,
    /// `mappings[i][a]` is the published vertex guessed for local vertex `a`.
    pub mappings: Vec<Vec<VertexId>>,
    /// Weight of every mapping in the support.
    pub weight: BigRational,
    /// Isomorphism class of each mapping's published attacker subgraph.
    pub class_index: Vec<usize>,
    /// Disagreeing pairs of every mapping in the support (0 unless relaxed).
    pub mismatch: usize,
    pub relaxed: bool,
}

impl MappingDistribution {
    pub fn total_weight(&self) -> BigRational {
        &self.weight * BigRational::from_integer(BigInt::from(self.mappings.len()))
    }
}

/// Pairs of local vertices the adversary knows about: all but victim-victim.
fn known_pairs(vars: usize, sybils: usize) -> Vec<(usize, usize)> {
    (0..vars)
        .flat_map(|b| (0..b).map(move |a| (a, b)))
        .filter(|&(a, _)| a < sybils)
        .collect()
}

/// The attacker subgraph a guess exposes in the published graph.
fn exposed_subgraph(adj: &AdjMatrix, rho: &[VertexId], sybils: usize) -> Graph {
    let mut g = Graph::new(rho.len());
    for (a, b) in known_pairs(rho.len(), sybils) {
        if adj.has(rho[a], rho[b]) {
            g.add_edge(a, b).unwrap();
        }
    }
    g
}

pub fn enumerate_consistent_mappings(
    g_pub: &Graph,
    knowledge: &Graph,
    sybils: usize,
    budget: &OracleBudget,
) -> Result<MappingDistribution, OracleError> {
    let vars = knowledge.n();
    let n = g_pub.n();
    if sybils > vars {
        return Err(OracleError::Shape {
            knowledge: vars,
            sybils,
        });
    }
    if vars > budget.max_vars || n > budget.max_n {
        return Err(OracleError::TooLarge {
            vars,
            n,
            max_vars: budget.max_vars,
            max_n: budget.max_n,
        });
    }
    let adj = AdjMatrix::new(g_pub);
    // for each local vertex, the earlier local vertices it is compared with
    let earlier: Vec<Vec<(usize, bool)>> = (0..vars)
        .map(|b| {
            (0..b)
                .filter(|&a| a < sybils)
                .map(|a| (a, knowledge.has_edge(a, b)))
                .collect()
        })
        .collect();

    struct Dfs<'a> {
        adj: &'a AdjMatrix,
        earlier: &'a [Vec<(usize, bool)>],
        n: usize,
        rho: Vec<VertexId>,
        used: Vec<bool>,
        best: usize,
        found: Vec<Vec<VertexId>>,
        cap: usize,
        overflow: bool,
    }
    fn go(d: &mut Dfs<'_>, depth: usize, mismatch: usize) {
        if d.overflow {
            return;
        }
        if depth == d.earlier.len() {
            if mismatch < d.best {
                d.best = mismatch;
                d.found.clear();
            }
            if d.found.len() == d.cap {
                d.overflow = true;
                return;
            }
            d.found.push(d.rho.clone());
            return;
        }
        for v in 0..d.n {
            if d.used[v] {
                continue;
            }
            let extra = d.earlier[depth]
                .iter()
                .filter(|&&(a, e)| d.adj.has(d.rho[a], v) != e)
                .count();
            if mismatch + extra > d.best {
                continue;
            }
            d.used[v] = true;
            d.rho.push(v);
            go(d, depth + 1, mismatch + extra);
            d.rho.pop();
            d.used[v] = false;
        }
    }
    let mut dfs = Dfs {
        adj: &adj,
        earlier: &earlier,
        n,
        rho: Vec::with_capacity(vars),
        used: vec![false; n],
        best: usize::MAX,
        found: Vec::new(),
        cap: budget.max_support,
        overflow: false,
    };
    go(&mut dfs, 0, 0);
    if dfs.overflow {
        return Err(OracleError::SupportTooLarge(budget.max_support));
    }
    let mappings = dfs.found;
    let mismatch = if mappings.is_empty() { 0 } else { dfs.best };
    let weight = if mappings.is_empty() {
        BigRational::zero()
    } else {
        BigRational::new(BigInt::one(), BigInt::from(mappings.len()))
    };
    let class_index = classify(&adj, &mappings, sybils);
    Ok(MappingDistribution {
        sybils,
        mappings,
        weight,
        class_index,
        mismatch,
        relaxed: mismatch > 0,
    })
}

/// Groups mappings by the isomorphism class of their exposed subgraphs.
fn classify(adj: &AdjMatrix, mappings: &[Vec<VertexId>], sybils: usize) -> Vec<usize> {
    let mut reps: Vec<Graph> = Vec::new();
    let mut by_pattern: std::collections::HashMap<Vec<(usize, usize)>, usize> = Default::default();
    mappings
        .iter()
        .map(|rho| {
            let sub = exposed_subgraph(adj, rho, sybils);
            let pattern: Vec<(usize, usize)> = sub.edges().collect();
            *by_pattern.entry(pattern).or_insert_with(|| {
                match reps.iter().position(|r| find_isomorphism(r, &sub).is_some()) {
                    Some(i) => i,
                    None => {
                        reps.push(sub);
                        reps.len() - 1
                    }
                }
            })
        })
        .collect()
}

/// The mass of guesses that send local victim `u` to `target`.
pub fn victim_success_probability(
    dist: &MappingDistribution,
    u: usize,
    target: VertexId,
) -> Result<BigRational, OracleError> {
    let vars = dist.mappings.first().map_or(usize::MAX, Vec::len);
    if u < dist.sybils || (vars != usize::MAX && u >= vars) {
        return Err(OracleError::NotAVictim(u));
    }
    let hits = dist.mappings.iter().filter(|rho| rho[u] == target).count();
    Ok(&dist.weight * BigRational::from_integer(BigInt::from(hits)))
}

/// How the adversary tells guesses apart.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdversaryModel {
    /// A guess must reproduce the knowledge vertex by vertex
    /// ([`enumerate_consistent_mappings`]).
    Labelled,
    /// A guess only needs an attacker subgraph isomorphic to the knowledge;
    /// all such guesses are equally likely ([`enumerate_isomorphic_guesses`]).
    Isomorphic,
}

impl AdversaryModel {
    pub const ALL: [AdversaryModel; 2] = [AdversaryModel::Labelled, AdversaryModel::Isomorphic];

    pub fn name(self) -> &'static str {
        match self {
            AdversaryModel::Labelled => "labelled",
            AdversaryModel::Isomorphic => "isomorphic",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }
}

/// Guesses grouped by image: every pair of a sybil image set and a victim
/// image set whose attacker subgraph is isomorphic to the knowledge. Each
/// pair stands for `|S|! |I|!` equally likely guesses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IsomorphicGuesses {
    pub sybils: usize,
    pub victims: usize,
    pub images: Vec<(Vec<VertexId>, Vec<VertexId>)>,
}

impl IsomorphicGuesses {
    /// Mass of the guesses that send a given victim to `target`.
    pub fn success_probability(&self, target: VertexId) -> BigRational {
        if self.images.is_empty() || self.victims == 0 {
            return BigRational::zero();
        }
        let hits = self.images.iter().filter(|(_, i)| i.contains(&target)).count();
        BigRational::new(
            BigInt::from(hits),
            BigInt::from(self.images.len() * self.victims),
        )
    }
}

fn for_each_subset(items: &[VertexId], size: usize, f: &mut impl FnMut(&[VertexId])) {
    fn go(items: &[VertexId], size: usize, from: usize, cur: &mut Vec<VertexId>, f: &mut impl FnMut(&[VertexId])) {
        if cur.len() == size {
            f(cur);
            return;
        }
        for i in from..items.len() {
            if items.len() - i < size - cur.len() {
                break;
            }
            cur.push(items[i]);
            go(items, size, i + 1, cur, f);
            cur.pop();
        }
    }
    go(items, size, 0, &mut Vec::with_capacity(size), f);
}

pub fn enumerate_isomorphic_guesses(
    g_pub: &Graph,
    knowledge: &Graph,
    sybils: usize,
    budget: &OracleBudget,
) -> Result<IsomorphicGuesses, OracleError> {
    let vars = knowledge.n();
    let n = g_pub.n();
    if sybils > vars {
        return Err(OracleError::Shape {
            knowledge: vars,
            sybils,
        });
    }
    if vars > budget.max_vars || n > budget.max_n {
        return Err(OracleError::TooLarge {
            vars,
            n,
            max_vars: budget.max_vars,
            max_n: budget.max_n,
        });
    }
    let adj = AdjMatrix::new(g_pub);
    let edges = knowledge.edge_count();
    let mut degrees = knowledge.degrees();
    degrees.sort_unstable();
    let all: Vec<VertexId> = (0..n).collect();
    let mut images = Vec::new();
    let mut overflow = false;
    for_each_subset(&all, sybils, &mut |s| {
        let rest: Vec<VertexId> = all.iter().copied().filter(|v| !s.contains(v)).collect();
        for_each_subset(&rest, vars - sybils, &mut |i| {
            if overflow {
                return;
            }
            let rho: Vec<VertexId> = s.iter().chain(i).copied().collect();
            let sub = exposed_subgraph(&adj, &rho, sybils);
            if sub.edge_count() != edges {
                return;
            }
            let mut d = sub.degrees();
            d.sort_unstable();
            if d != degrees || find_isomorphism(knowledge, &sub).is_none() {
                return;
            }
            if images.len() == budget.max_support {
                overflow = true;
                return;
            }
            images.push((s.to_vec(), i.to_vec()));
        });
    });
    if overflow {
        return Err(OracleError::SupportTooLarge(budget.max_support));
    }
    Ok(IsomorphicGuesses {
        sybils,
        victims: vars - sybils,
        images,
    })
}

/// The strongest attack found by [`max_attack_success`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttackBound {
    pub value: BigRational,
    pub sybils: Vec<VertexId>,
    pub victims: Vec<VertexId>,
    pub victim: VertexId,
}

fn subsets(items: &[VertexId], max_size: usize, min_size: usize) -> Vec<Vec<VertexId>> {
    let mut out = Vec::new();
    let n = items.len();
    for mask in 0u64..(1u64 << n) {
        let size = mask.count_ones() as usize;
        if (min_size..=max_size).contains(&size) {
            out.push((0..n).filter(|&i| mask >> i & 1 == 1).map(|i| items[i]).collect());
        }
    }
    out
}

/// Highest success probability any adversary with at most `ell` sybils
/// placed among the vertices of `g` (published as is) reaches on any victim.
/// Every sybil set `S` and non-empty victim set `I` with
/// `|S u I| <= max_vars` is tried.
pub fn max_attack_success(
    g: &Graph,
    ell: usize,
    model: AdversaryModel,
    budget: &OracleBudget,
) -> Result<AttackBound, OracleError> {
    let n = g.n();
    if n > budget.max_n || n > 20 {
        return Err(OracleError::TooLarge {
            vars: ell + 1,
            n,
            max_vars: budget.max_vars,
            max_n: budget.max_n.min(20),
        });
    }
    let all: Vec<VertexId> = (0..n).collect();
    let mut best: Option<AttackBound> = None;
    for s in subsets(&all, ell.min(budget.max_vars.saturating_sub(1)), 0) {
        let rest: Vec<VertexId> = all.iter().copied().filter(|v| !s.contains(v)).collect();
        for i in subsets(&rest, budget.max_vars - s.len(), 1) {
            let mut members = s.clone();
            members.extend_from_slice(&i);
            let (mut knowledge, _) = g.induced_subgraph(&members).unwrap();
            for a in s.len()..members.len() {
                for b in a + 1..members.len() {
                    knowledge.remove_edge(a, b);
                }
            }
            let probs: Vec<BigRational> = match model {
                AdversaryModel::Labelled => {
                    let dist = enumerate_consistent_mappings(g, &knowledge, s.len(), budget)?;
                    (0..i.len())
                        .map(|local| victim_success_probability(&dist, s.len() + local, i[local]))
                        .collect::<Result<_, _>>()?
                }
                AdversaryModel::Isomorphic => {
                    let guesses = enumerate_isomorphic_guesses(g, &knowledge, s.len(), budget)?;
                    i.iter().map(|&u| guesses.success_probability(u)).collect()
                }
            };
            for (p, &u) in probs.into_iter().zip(&i) {
                if best.as_ref().is_none_or(|b| p > b.value) {
                    best = Some(AttackBound {
                        value: p,
                        sybils: s.clone(),
                        victims: i.clone(),
                        victim: u,
                    });
                }
            }
        }
    }
    best.ok_or(OracleError::TooLarge {
        vars: 0,
        n,
        max_vars: budget.max_vars,
        max_n: budget.max_n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automorphism::enumerate_automorphisms;
    use crate::fixtures;

    fn r(a: i64, b: i64) -> BigRational {
        BigRational::new(BigInt::from(a), BigInt::from(b))
    }

    fn edge_knowledge() -> Graph {
        Graph::from_edges(2, [(0, 1)]).unwrap()
    }

    #[test]
    fn k4_single_edge_support() {
        let d = enumerate_consistent_mappings(&Graph::complete(4), &edge_knowledge(), 1, &OracleBudget::default())
            .unwrap();
        assert_eq!(d.mappings.len(), 12);
        assert_eq!(d.weight, r(1, 12));
        assert_eq!(d.total_weight(), r(1, 1));
        assert!(!d.relaxed);
        assert!(d.class_index.iter().all(|&c| c == 0));
    }

    #[test]
    fn k5_one_sybil_one_victim() {
        let d = enumerate_consistent_mappings(&Graph::complete(5), &edge_knowledge(), 1, &OracleBudget::default())
            .unwrap();
        // every ordered pair is consistent; the victim lands on its true
        // image in 4 of the 20
        assert_eq!(victim_success_probability(&d, 1, 3).unwrap(), r(1, 5));
        assert_eq!(victim_success_probability(&d, 0, 3), Err(OracleError::NotAVictim(0)));
    }

    #[test]
    fn support_is_closed_under_automorphisms() {
        let g = fixtures::fig3a().graph;
        let knowledge = Graph::from_edges(3, [(0, 1), (0, 2)]).unwrap();
        let d = enumerate_consistent_mappings(&g, &knowledge, 1, &OracleBudget::default()).unwrap();
        let set: std::collections::HashSet<_> = d.mappings.iter().cloned().collect();
        for a in enumerate_automorphisms(&g, 100).unwrap() {
            for rho in &d.mappings {
                let image: Vec<_> = rho.iter().map(|&v| a.apply(v)).collect();
                assert!(set.contains(&image));
            }
        }
    }

    #[test]
    fn relaxed_support_when_nothing_fits() {
        // knowledge wants a non-edge between sybil and victim; K3 has none
        let knowledge = Graph::new(2);
        let d = enumerate_consistent_mappings(&Graph::complete(3), &knowledge, 1, &OracleBudget::default()).unwrap();
        assert!(d.relaxed);
        assert_eq!(d.mismatch, 1);
        assert_eq!(d.mappings.len(), 6);
    }

    #[test]
    fn budget_refusal() {
        let err = enumerate_consistent_mappings(&Graph::new(20), &Graph::new(2), 1, &OracleBudget::default());
        assert!(matches!(err, Err(OracleError::TooLarge { n: 20, .. })));
    }

    #[test]
    fn max_attack_examples() {
        let b = OracleBudget::default();
        for model in AdversaryModel::ALL {
            assert_eq!(max_attack_success(&Graph::complete(4), 1, model, &b).unwrap().value, r(1, 4));
            assert_eq!(max_attack_success(&Graph::cycle(6), 0, model, &b).unwrap().value, r(1, 6));
        }
    }

    #[test]
    fn fig3c_two_sybils() {
        let b = OracleBudget::default();
        let c = fixtures::fig3c();
        let bound = max_attack_success(&c.graph, 2, AdversaryModel::Isomorphic, &b).unwrap();
        assert!(bound.value <= r(1, 2), "{bound:?}");
        // sybils on v1 and v4 single out v5, the only vertex adjacent to v4 alone
        let labelled = max_attack_success(&c.graph, 2, AdversaryModel::Labelled, &b).unwrap();
        assert_eq!(labelled.value, r(1, 1));
    }

    #[test]
    fn isomorphic_guesses_on_k4() {
        let d = enumerate_isomorphic_guesses(&Graph::complete(4), &edge_knowledge(), 1, &OracleBudget::default())
            .unwrap();
        assert_eq!(d.images.len(), 12);
        assert_eq!(d.success_probability(2), r(1, 4));
    }
}
