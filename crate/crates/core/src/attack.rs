//! The active attack as a three-stage game.
//!
//! 1. The attacker appends `ℓ` sybils, links them among themselves and to a
//!    victim set, giving every victim a distinct non-empty fingerprint (the
//!    set of sybils it is linked to).
//! 2. The defender pseudonymises the graph and optionally perturbs it.
//! 3. The attacker searches the published graph for the ordered sybil tuples
//!    that best match its own subgraph, then matches victims by fingerprint.
//!
//! The re-identification stage is a noise-tolerant reconstruction: a tuple
//! `X = (x_0, .., x_{ℓ-1})` scores the number of sybil pairs whose adjacency
//! differs from the attacker's subgraph plus `w_d` times the total degree
//! difference. All tuples within `θ` of the best score are kept. Victims are
//! then assigned to distinct published vertices outside `X`, minimising the
//! total Hamming distance between fingerprints and observed adjacency to
//! `X`; every cost-minimal assignment counts as equally likely.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automorphism::{automorphism_orbits_colored, VertexMapping};
use crate::graph::{AdjMatrix, Graph, VertexId};
use crate::kmatch::{self, KMatchError, KMatchResult};
use crate::rng;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AttackError {
    #[error("{victims} victims cannot get distinct non-empty fingerprints over {sybils} sybils")]
    TooManyVictims { victims: usize, sybils: usize },
    #[error("at most 63 sybils are supported, got {0}")]
    TooManySybils(usize),
    #[error("at least one sybil is required")]
    NoSybils,
    #[error("vertex {0} is not in the graph")]
    UnknownVertex(VertexId),
    #[error("vertex {0} is listed twice or as both sybil and victim")]
    Overlap(VertexId),
    #[error(transparent)]
    KMatch(#[from] KMatchError),
}

/// State after the attacker's first move.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttackEnvironment {
    pub g_original: Graph,
    /// The sybil-extended graph; sybils are the ids `n .. n + ℓ`.
    pub g_plus: Graph,
    pub sybils: Vec<VertexId>,
    pub victims: Vec<VertexId>,
    /// Attacker subgraph with local ids: sybils `0..ℓ`, then victims.
    pub knowledge: Graph,
    /// Bit `i` of `fingerprints[j]` is set iff `victims[j]` is linked to
    /// `sybils[i]`.
    pub fingerprints: Vec<u64>,
}

impl AttackEnvironment {
    pub fn ell(&self) -> usize {
        self.sybils.len()
    }
}

/// Draws `count` distinct victims uniformly from `0..n`, in ascending order.
pub fn choose_victims(n: usize, count: usize, seed: u64) -> Vec<VertexId> {
    let mut r = rng::rng(seed);
    let mut v = sample(&mut r, n, count.min(n)).into_vec();
    v.sort_unstable();
    v
}

/// Default victim count: a tenth of the vertices, capped by the number of
/// distinct fingerprints.
pub fn default_victim_count(n: usize, ell: usize) -> usize {
    let distinct = if ell >= 63 { u64::MAX } else { (1u64 << ell) - 1 };
    ((n / 10) as u64).min(distinct) as usize
}

/// How the attacker designs its sybil subgraph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SybilOptions {
    /// Redraw the design (sybil edges and fingerprints) until no
    /// automorphism of the attacker subgraph moves a sybil, for at most this
    /// many draws; 1 keeps the first draw.
    pub max_draws: usize,
}

impl Default for SybilOptions {
    fn default() -> Self {
        SybilOptions { max_draws: 64 }
    }
}

/// No automorphism of the attacker subgraph moves a sybil.
pub fn sybils_are_rigid(knowledge: &Graph, ell: usize) -> bool {
    let colours: Vec<u32> = (0..knowledge.n()).map(|v| (v < ell) as u32).collect();
    let orbits = automorphism_orbits_colored(knowledge, &colours);
    (0..ell).all(|s| orbits.block_containing(s).len() == 1)
}

pub fn inject_sybils(
    g: &Graph,
    ell: usize,
    victims: &[VertexId],
    rng_seed: u64,
) -> Result<AttackEnvironment, AttackError> {
    inject_sybils_with(g, ell, victims, rng_seed, &SybilOptions::default())
}

/// Appends `ℓ` sybils joined by a path plus random extra edges (probability
/// 1/2 each) and links each victim to a distinct random non-empty subset.
pub fn inject_sybils_with(
    g: &Graph,
    ell: usize,
    victims: &[VertexId],
    rng_seed: u64,
    options: &SybilOptions,
) -> Result<AttackEnvironment, AttackError> {
    if ell == 0 {
        return Err(AttackError::NoSybils);
    }
    if ell > 63 {
        return Err(AttackError::TooManySybils(ell));
    }
    let distinct = (1u64 << ell) - 1;
    if victims.is_empty() || victims.len() as u64 > distinct {
        return Err(AttackError::TooManyVictims {
            victims: victims.len(),
            sybils: ell,
        });
    }
    let mut seen = HashSet::new();
    for &v in victims {
        g.check(v).map_err(|_| AttackError::UnknownVertex(v))?;
        if !seen.insert(v) {
            return Err(AttackError::Overlap(v));
        }
    }
    let mut r = rng::rng(rng_seed);
    let mut draws = 0;
    loop {
        draws += 1;
        let env = draw_design(g, ell, victims, distinct, &mut r)?;
        if draws >= options.max_draws.max(1) || sybils_are_rigid(&env.knowledge, ell) {
            assert!(edges_confined(&env), "sybil edges escaped S x (S u I)");
            return Ok(env);
        }
    }
}

fn draw_design(
    g: &Graph,
    ell: usize,
    victims: &[VertexId],
    distinct: u64,
    r: &mut rng::Rng,
) -> Result<AttackEnvironment, AttackError> {
    let mut g_plus = g.clone();
    let first = g_plus.add_vertices(ell);
    let sybils: Vec<VertexId> = (first..first + ell).collect();
    for i in 0..ell {
        for j in i + 1..ell {
            let coin = r.gen_bool(0.5);
            if j == i + 1 || coin {
                g_plus.add_edge(sybils[i], sybils[j]).unwrap();
            }
        }
    }
    let mut used = HashSet::new();
    let mut fingerprints = Vec::with_capacity(victims.len());
    for &v in victims {
        let mask = loop {
            let m = r.gen_range(1..=distinct);
            if used.insert(m) {
                break m;
            }
        };
        fingerprints.push(mask);
        for (i, &s) in sybils.iter().enumerate() {
            if mask >> i & 1 == 1 {
                g_plus.add_edge(s, v).unwrap();
            }
        }
    }
    let knowledge = adversary_knowledge(&g_plus, &sybils, victims)?;
    Ok(AttackEnvironment {
        g_original: g.clone(),
        g_plus,
        sybils,
        victims: victims.to_vec(),
        knowledge,
        fingerprints,
    })
}

/// Every edge of `g_plus` missing from the original lies in `S x (S u I)`.
pub fn edges_confined(env: &AttackEnvironment) -> bool {
    let s: HashSet<_> = env.sybils.iter().collect();
    let i: HashSet<_> = env.victims.iter().collect();
    env.g_plus.edges().all(|(u, v)| {
        (u < env.g_original.n() && v < env.g_original.n() && env.g_original.has_edge(u, v))
            || (s.contains(&u) && (s.contains(&v) || i.contains(&v)))
            || (s.contains(&v) && i.contains(&u))
    })
}

/// The attacker subgraph on `S u I` without victim-victim edges; local ids
/// list `sybils` first, then `victims`, in the given orders.
pub fn adversary_knowledge(g_plus: &Graph, sybils: &[VertexId], victims: &[VertexId]) -> Result<Graph, AttackError> {
    let mut members: Vec<VertexId> = sybils.to_vec();
    members.extend_from_slice(victims);
    let mut seen = HashSet::new();
    for &v in &members {
        g_plus.check(v).map_err(|_| AttackError::UnknownVertex(v))?;
        if !seen.insert(v) {
            return Err(AttackError::Overlap(v));
        }
    }
    let (mut sub, _) = g_plus.induced_subgraph(&members).expect("members validated");
    let ell = sybils.len();
    for a in ell..members.len() {
        for b in a + 1..members.len() {
            sub.remove_edge(a, b);
        }
    }
    Ok(sub)
}

/// Uniformly random relabelling; `phi[v]` is the published id of `v`.
pub fn pseudonymize(g: &Graph, rng_seed: u64) -> (Graph, VertexMapping) {
    let mut perm: Vec<VertexId> = (0..g.n()).collect();
    perm.shuffle(&mut rng::rng(rng_seed));
    let published = g.relabel(&perm);
    (published, VertexMapping::new(perm).expect("a shuffle is a permutation"))
}

/// Parameters of the re-identification search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct AttackParams {
    /// Tuples scoring at most `best + theta` are kept.
    pub theta: u64,
    /// Weight of the per-sybil degree difference.
    pub degree_weight: u64,
    /// A candidate for sybil `j` needs published degree at least
    /// `deg(s_j) - degree_slack_below`.
    pub degree_slack_below: usize,
    /// ... and at most `deg(s_j) + degree_slack_above` (unbounded if `None`).
    pub degree_slack_above: Option<usize>,
    pub candidate_cap: usize,
    pub matching_cap: u64,
    /// Search-node budget for one tuple search.
    pub node_cap: u64,
    /// Count optimal matchings for every candidate, not only those where the
    /// true matching is optimal.
    pub count_all_matchings: bool,
    /// Among structurally tied tuples keep only those whose best victim
    /// matching is cheapest.
    pub matching_tiebreak: bool,
}

impl Default for AttackParams {
    fn default() -> Self {
        AttackParams {
            theta: 0,
            degree_weight: 1,
            degree_slack_below: 0,
            degree_slack_above: None,
            candidate_cap: 10_000,
            matching_cap: 10_000,
            node_cap: 5_000_000,
            count_all_matchings: false,
            matching_tiebreak: true,
        }
    }
}

/// Published ids of the true sybils and victims.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Truth {
    pub sybils: Vec<VertexId>,
    pub victims: Vec<VertexId>,
}

impl Truth {
    pub fn from_env(env: &AttackEnvironment, phi: &VertexMapping) -> Self {
        Truth {
            sybils: env.sybils.iter().map(|&s| phi.apply(s)).collect(),
            victims: env.victims.iter().map(|&v| phi.apply(v)).collect(),
        }
    }
}

/// One retrieved sybil tuple and its fingerprint-matching outcome.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub tuple: Vec<VertexId>,
    pub score: u64,
    /// Minimum total Hamming cost; `None` when not needed.
    pub min_cost: Option<u64>,
    /// Cost of the true matching; `None` if it overlaps the tuple or no
    /// ground truth was given.
    pub truth_cost: Option<u64>,
    /// Number of cost-minimal matchings; `None` when not counted.
    pub matching_count: Option<u64>,
    pub matchings_truncated: bool,
}

impl Candidate {
    /// The true matching is among the cost-minimal ones.
    pub fn truth_hit(&self) -> bool {
        matches!((self.truth_cost, self.min_cost), (Some(t), Some(m)) if t == m)
    }

    /// `p_X` of the success-rate formula. A truncated count is replaced by
    /// the cap, which over-estimates `p_X`.
    pub fn p(&self) -> BigRational {
        match (self.truth_hit(), self.matching_count) {
            (true, Some(c)) => BigRational::new(BigInt::from(1), BigInt::from(c.max(1))),
            _ => BigRational::zero(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReidentificationResult {
    /// The equally most likely sybil tuples.
    pub candidates: Vec<Candidate>,
    pub best_score: Option<u64>,
    /// Candidate cap or search-node budget exceeded.
    pub truncated: bool,
    pub search_nodes: u64,
}

impl ReidentificationResult {
    pub fn any_matchings_truncated(&self) -> bool {
        self.candidates.iter().any(|c| c.matchings_truncated)
    }
}

/// Mean of `p_X` over the retrieved tuples, 0 if none was retrieved.
pub fn success_rate(result: &ReidentificationResult) -> BigRational {
    if result.candidates.is_empty() {
        return BigRational::zero();
    }
    let total: BigRational = result.candidates.iter().map(Candidate::p).sum();
    total / BigRational::from_integer(BigInt::from(result.candidates.len()))
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

struct TupleSearch<'a> {
    adj: &'a AdjMatrix,
    n: usize,
    ell: usize,
    sybil_adj: Vec<u64>,
    candidates: Vec<Vec<(u64, VertexId)>>,
    /// `rest[j]`: sum of the smallest penalties of positions `j..ℓ`.
    rest: Vec<u64>,
    node_cap: u64,
    nodes: u64,
    cap: usize,
    theta: u64,
    bound: u64,
    found: Vec<(u64, Vec<VertexId>)>,
    best: Option<u64>,
    overflow: bool,
}

impl TupleSearch<'_> {
    fn run(&mut self, bound: u64) {
        self.bound = bound;
        let mut used = vec![false; self.n];
        let mut tuple = Vec::with_capacity(self.ell);
        self.dfs(0, 0, &mut tuple, &mut used);
    }

    fn dfs(&mut self, j: usize, partial: u64, tuple: &mut Vec<VertexId>, used: &mut [bool]) {
        if self.overflow {
            return;
        }
        if j == self.ell {
            self.record(partial, tuple.clone());
            return;
        }
        for idx in 0..self.candidates[j].len() {
            let (pen, v) = self.candidates[j][idx];
            if partial + pen + self.rest[j + 1] > self.bound {
                break;
            }
            if used[v] {
                continue;
            }
            self.nodes += 1;
            if self.nodes > self.node_cap {
                self.overflow = true;
                return;
            }
            let mismatch = tuple
                .iter()
                .enumerate()
                .filter(|&(i, &x)| self.adj.has(x, v) != (self.sybil_adj[j] >> i & 1 == 1))
                .count() as u64;
            let score = partial + pen + mismatch;
            if score + self.rest[j + 1] > self.bound {
                continue;
            }
            used[v] = true;
            tuple.push(v);
            self.dfs(j + 1, score, tuple, used);
            tuple.pop();
            used[v] = false;
            if self.overflow {
                return;
            }
        }
    }

    fn record(&mut self, score: u64, tuple: Vec<VertexId>) {
        if self.best.is_none_or(|b| score < b) {
            self.best = Some(score);
            self.bound = self.bound.min(score + self.theta);
            let limit = self.bound;
            self.found.retain(|(s, _)| *s <= limit);
        }
        self.found.push((score, tuple));
        if self.found.len() > self.cap {
            self.overflow = true;
        }
    }
}

/// Minimum-cost assignment of every row to a distinct column
/// (`rows <= cols`); returns the cost.
pub fn min_assignment_cost(cost: &[Vec<u64>]) -> Option<u64> {
    let n = cost.len();
    if n == 0 {
        return Some(0);
    }
    let m = cost[0].len();
    if m < n {
        return None;
    }
    // potentials-based Hungarian method, 1-indexed
    let inf = i64::MAX / 4;
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] as i64 - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    Some((1..=m).filter(|&j| p[j] != 0).map(|j| cost[p[j] - 1][j - 1]).sum())
}

/// Enumerates assignments of total cost `target` (rows to distinct columns).
/// Stops after `cap` assignments; the flag reports truncation.
pub fn enumerate_optimal_assignments(
    cost: &[Vec<u64>],
    target: u64,
    cap: u64,
    mut visit: impl FnMut(&[usize]),
) -> (u64, bool) {
    let n = cost.len();
    if n == 0 {
        visit(&[]);
        return (1, false);
    }
    let row_min: Vec<u64> = cost.iter().map(|r| *r.iter().min().unwrap_or(&0)).collect();
    let floor: u64 = row_min.iter().sum();
    if target < floor {
        return (0, false);
    }
    let slack = target - floor;
    // rows with the fewest admissible columns first
    let admissible: Vec<Vec<usize>> = cost
        .iter()
        .zip(&row_min)
        .map(|(r, &lo)| (0..r.len()).filter(|&c| r[c] <= lo + slack).collect())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| admissible[i].len());

    struct State<'a, F: FnMut(&[usize])> {
        cost: &'a [Vec<u64>],
        row_min: &'a [u64],
        admissible: &'a [Vec<usize>],
        order: &'a [usize],
        assign: Vec<usize>,
        used: Vec<bool>,
        count: u64,
        cap: u64,
        truncated: bool,
        visit: F,
    }
    fn go<F: FnMut(&[usize])>(st: &mut State<'_, F>, depth: usize, extra: u64, slack: u64) {
        if st.truncated {
            return;
        }
        if depth == st.order.len() {
            if extra == slack {
                if st.count == st.cap {
                    st.truncated = true;
                    return;
                }
                st.count += 1;
                (st.visit)(&st.assign);
            }
            return;
        }
        let row = st.order[depth];
        for idx in 0..st.admissible[row].len() {
            let c = st.admissible[row][idx];
            let e = extra + st.cost[row][c] - st.row_min[row];
            if e > slack || st.used[c] {
                continue;
            }
            st.used[c] = true;
            st.assign[row] = c;
            go(st, depth + 1, e, slack);
            st.used[c] = false;
            if st.truncated {
                return;
            }
        }
    }
    let cols = cost[0].len();
    let mut st = State {
        cost,
        row_min: &row_min,
        admissible: &admissible,
        order: &order,
        assign: vec![usize::MAX; n],
        used: vec![false; cols],
        count: 0,
        cap,
        truncated: false,
        visit: &mut visit,
    };
    go(&mut st, 0, 0, slack);
    (st.count, st.truncated)
}

/// Retrieves the sybil tuples and matches victims for each.
pub fn reidentify(
    g_pub: &Graph,
    knowledge: &Graph,
    ell: usize,
    params: &AttackParams,
    truth: Option<&Truth>,
) -> ReidentificationResult {
    let n = g_pub.n();
    let adj = AdjMatrix::new(g_pub);
    let victims = knowledge.n() - ell;
    let sybil_deg: Vec<usize> = (0..ell).map(|s| knowledge.deg(s)).collect();
    let sybil_adj: Vec<u64> = (0..ell)
        .map(|j| (0..j).filter(|&i| knowledge.has_edge(i, j)).fold(0, |m, i| m | 1 << i))
        .collect();
    let fingerprints: Vec<u64> = (ell..knowledge.n())
        .map(|v| knowledge.neighbors(v).iter().filter(|&&s| s < ell).fold(0, |m, &s| m | 1 << s))
        .collect();
    let candidates: Vec<Vec<(u64, VertexId)>> = sybil_deg
        .iter()
        .map(|&d| {
            let lo = d.saturating_sub(params.degree_slack_below);
            let hi = params.degree_slack_above.map_or(usize::MAX, |a| d.saturating_add(a));
            let mut c: Vec<(u64, VertexId)> = (0..n)
                .filter(|&v| (lo..=hi).contains(&g_pub.deg(v)))
                .map(|v| (params.degree_weight * g_pub.deg(v).abs_diff(d) as u64, v))
                .collect();
            c.sort_unstable();
            c
        })
        .collect();
    let mut rest = vec![0u64; ell + 1];
    for j in (0..ell).rev() {
        rest[j] = rest[j + 1] + candidates[j].first().map_or(u64::MAX / 4, |c| c.0);
    }
    let mut search = TupleSearch {
        adj: &adj,
        n,
        ell,
        sybil_adj,
        candidates,
        rest: rest.clone(),
        node_cap: params.node_cap,
        nodes: 0,
        cap: params.candidate_cap,
        theta: params.theta,
        bound: 0,
        found: Vec::new(),
        best: None,
        overflow: false,
    };
    let feasible = rest[0] < u64::MAX / 4 && n >= ell + victims;
    if feasible {
        let floor = rest[0];
        let ceiling: u64 = search.candidates.iter().map(|c| c.last().unwrap().0).sum::<u64>()
            + (ell * ell.saturating_sub(1) / 2) as u64;
        let mut step = 0u64;
        loop {
            let bound = (floor + step).min(ceiling);
            search.run(bound);
            if search.best.is_some() || search.overflow || bound >= ceiling {
                break;
            }
            step = 2 * step + 1;
        }
        // a positive tolerance may reach past the bound that first succeeded
        if let Some(best) = search.best {
            if !search.overflow && best + params.theta > search.bound {
                search.found.clear();
                search.best = None;
                search.run(best + params.theta);
            }
        }
    }
    let truncated = search.overflow;
    let best = search.best;
    let mut found = std::mem::take(&mut search.found);
    if let Some(b) = best {
        found.retain(|(s, _)| *s <= b + params.theta);
    }
    found.sort();
    let mut candidates: Vec<Candidate> = found
        .into_iter()
        .map(|(score, tuple)| price_candidate(&adj, n, tuple, score, &fingerprints, params, truth))
        .collect();
    if params.matching_tiebreak {
        if let Some(cheapest) = candidates.iter().filter_map(|c| c.min_cost).min() {
            candidates.retain(|c| c.min_cost == Some(cheapest));
        }
    }
    for c in &mut candidates {
        let Some(target) = c.min_cost else { continue };
        if c.truth_hit() || params.count_all_matchings || truth.is_none() {
            let (cost, _) = matching_costs(&adj, n, &c.tuple, &fingerprints);
            let (count, truncated) = enumerate_optimal_assignments(&cost, target, params.matching_cap, |_| {});
            c.matching_count = Some(count);
            c.matchings_truncated = truncated;
        }
    }
    ReidentificationResult {
        candidates,
        best_score: best,
        truncated,
        search_nodes: search.nodes,
    }
}

/// Hamming costs between fingerprints (rows) and the observed adjacency to
/// `tuple` of every vertex outside it (columns), plus the column vertices.
fn matching_costs(adj: &AdjMatrix, n: usize, tuple: &[VertexId], fingerprints: &[u64]) -> (Vec<Vec<u64>>, Vec<VertexId>) {
    let mut in_x = vec![false; n];
    for &x in tuple {
        in_x[x] = true;
    }
    let columns: Vec<VertexId> = (0..n).filter(|&y| !in_x[y]).collect();
    let masks: Vec<u64> = columns.iter().map(|&y| observed_mask(adj, tuple, y)).collect();
    let cost = fingerprints
        .iter()
        .map(|&f| masks.iter().map(|&m| (f ^ m).count_ones() as u64).collect())
        .collect();
    (cost, columns)
}

fn observed_mask(adj: &AdjMatrix, tuple: &[VertexId], y: VertexId) -> u64 {
    tuple
        .iter()
        .enumerate()
        .filter(|&(_, &x)| adj.has(x, y))
        .fold(0u64, |m, (i, _)| m | 1 << i)
}

/// Fills in the truth cost and, when it can matter, the minimum matching
/// cost of one tuple.
fn price_candidate(
    adj: &AdjMatrix,
    n: usize,
    tuple: Vec<VertexId>,
    score: u64,
    fingerprints: &[u64],
    params: &AttackParams,
    truth: Option<&Truth>,
) -> Candidate {
    let truth_cost = truth.and_then(|t| {
        if t.victims.iter().any(|v| tuple.contains(v)) {
            return None;
        }
        Some(
            t.victims
                .iter()
                .zip(fingerprints)
                .map(|(&v, &f)| (f ^ observed_mask(adj, &tuple, v)).count_ones() as u64)
                .sum(),
        )
    });
    let needed = params.matching_tiebreak || params.count_all_matchings || truth.is_none() || truth_cost.is_some();
    let min_cost = if needed {
        let (cost, _) = matching_costs(adj, n, &tuple, fingerprints);
        let floor: u64 = cost.iter().map(|r| *r.iter().min().unwrap_or(&0)).sum();
        if truth_cost == Some(floor) {
            Some(floor)
        } else {
            min_assignment_cost(&cost)
        }
    } else {
        None
    };
    Candidate {
        tuple,
        score,
        min_cost,
        truth_cost,
        matching_count: None,
        matchings_truncated: false,
    }
}

/// The defender's move.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Defence {
    PseudonymOnly,
    Kmatch,
}

impl Defence {
    pub fn name(self) -> &'static str {
        match self {
            Defence::PseudonymOnly => "pseudonym-only",
            Defence::Kmatch => "kmatch",
        }
    }
}

/// The published graph with everything needed to score an attack on it.
#[derive(Clone, Debug)]
pub struct Publication {
    /// Graph before pseudonymisation (the sybil-extended graph, perturbed).
    pub perturbed: Graph,
    pub published: Graph,
    pub phi: VertexMapping,
    pub kmatch: Option<KMatchResult>,
}

/// Perturbs (if requested) and pseudonymises the sybil-extended graph.
pub fn publish(env: &AttackEnvironment, defence: Defence, k: usize, seed: u64) -> Result<Publication, AttackError> {
    let (perturbed, kmatch) = match defence {
        Defence::PseudonymOnly => (env.g_plus.clone(), None),
        Defence::Kmatch => {
            let res = kmatch::kmatch(&env.g_plus, k, rng::derive_named(seed, "kmatch"))?;
            (res.graph_out.clone(), Some(res))
        }
    };
    let (published, phi) = pseudonymize(&perturbed, rng::derive_named(seed, "pseudonym"));
    Ok(Publication {
        perturbed,
        published,
        phi,
        kmatch,
    })
}

/// One full game on `g`: victims, sybils, publication, re-identification.
#[derive(Clone, Debug)]
pub struct GameOutcome {
    pub env: AttackEnvironment,
    pub publication: Publication,
    pub result: ReidentificationResult,
    pub success: BigRational,
}

/// Builds the attack environment for one instance.
pub fn prepare(g: &Graph, ell: usize, victim_count: Option<usize>, seed: u64) -> Result<AttackEnvironment, AttackError> {
    let count = victim_count.unwrap_or_else(|| default_victim_count(g.n(), ell)).max(1);
    let victims = choose_victims(g.n(), count, rng::derive_named(seed, "victims"));
    inject_sybils(g, ell, &victims, rng::derive_named(seed, "sybils"))
}

pub fn play(
    env: &AttackEnvironment,
    defence: Defence,
    k: usize,
    params: &AttackParams,
    seed: u64,
) -> Result<GameOutcome, AttackError> {
    let publication = publish(env, defence, k, seed)?;
    let truth = Truth::from_env(env, &publication.phi);
    let result = reidentify(&publication.published, &env.knowledge, env.ell(), params, Some(&truth));
    let success = success_rate(&result);
    Ok(GameOutcome {
        env: env.clone(),
        publication,
        result,
        success,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automorphism::{automorphism_orbits, find_isomorphism};
    use crate::generators::er_graph_seeded;

    fn ratio(a: i64, b: i64) -> BigRational {
        BigRational::new(BigInt::from(a), BigInt::from(b))
    }

    fn cand(hit: bool, count: u64) -> Candidate {
        Candidate {
            tuple: vec![],
            score: 0,
            min_cost: Some(1),
            truth_cost: Some(if hit { 1 } else { 2 }),
            matching_count: Some(count),
            matchings_truncated: false,
        }
    }

    fn result(c: Vec<Candidate>) -> ReidentificationResult {
        ReidentificationResult {
            candidates: c,
            best_score: Some(0),
            truncated: false,
            search_nodes: 0,
        }
    }

    #[test]
    fn success_rate_examples() {
        assert_eq!(success_rate(&result(vec![])), BigRational::zero());
        assert_eq!(success_rate(&result(vec![cand(true, 1)])), ratio(1, 1));
        assert_eq!(success_rate(&result(vec![cand(true, 2), cand(false, 1)])), ratio(1, 4));
    }

    #[test]
    fn knowledge_drops_victim_pairs() {
        // s1=0, s2=1, a=2, b=3
        let g = Graph::from_edges(4, [(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap();
        let k = adversary_knowledge(&g, &[0, 1], &[2, 3]).unwrap();
        assert_eq!(k.edge_set(), [(0, 1), (0, 2), (1, 3)].into_iter().collect());
        let only_s = adversary_knowledge(&g, &[0, 1], &[]).unwrap();
        assert_eq!(only_s.edge_count(), 1);
        assert_eq!(adversary_knowledge(&g, &[0, 1], &[1]), Err(AttackError::Overlap(1)));
    }

    #[test]
    fn injection_invariants() {
        let g = er_graph_seeded(30, 0.3, 1).unwrap();
        let env = inject_sybils(&g, 3, &[4, 9], 7).unwrap();
        assert_eq!(env.sybils, vec![30, 31, 32]);
        assert_eq!(env.fingerprints.len(), 2);
        assert_ne!(env.fingerprints[0], env.fingerprints[1]);
        assert!(env.fingerprints.iter().all(|&f| f != 0 && f < 8));
        assert!(edges_confined(&env));
        for (j, &v) in env.victims.iter().enumerate() {
            for (i, &s) in env.sybils.iter().enumerate() {
                assert_eq!(env.g_plus.has_edge(s, v), env.fingerprints[j] >> i & 1 == 1);
            }
        }
        for w in env.sybils.windows(2) {
            assert!(env.g_plus.has_edge(w[0], w[1]));
        }
        assert!(matches!(
            inject_sybils(&g, 2, &[1, 2, 3, 4], 0),
            Err(AttackError::TooManyVictims { .. })
        ));
        // 2^3 - 1 victims use every non-empty subset
        let full = inject_sybils(&g, 3, &[0, 1, 2, 3, 4, 5, 6], 3).unwrap();
        let mut f = full.fingerprints.clone();
        f.sort_unstable();
        assert_eq!(f, (1..8).collect::<Vec<u64>>());
    }

    #[test]
    fn pseudonymisation_is_an_isomorphism() {
        let g = er_graph_seeded(25, 0.3, 4).unwrap();
        let (p, phi) = pseudonymize(&g, 11);
        assert!(phi.is_isomorphism(&g, &p));
        assert!(find_isomorphism(&g, &p).is_some());
        let (mut a, mut b) = (g.degrees(), p.degrees());
        a.sort_unstable();
        b.sort_unstable();
        assert_eq!(a, b);
        assert_eq!(pseudonymize(&g, 11).1, phi);
    }

    #[test]
    fn hungarian_matches_brute_force() {
        use rand::Rng as _;
        let mut r = rng::rng(8);
        for _ in 0..200 {
            let rows = r.gen_range(1..5);
            let cols = r.gen_range(rows..7);
            let cost: Vec<Vec<u64>> = (0..rows).map(|_| (0..cols).map(|_| r.gen_range(0..5)).collect()).collect();
            // brute force over injective assignments
            fn best(cost: &[Vec<u64>], row: usize, used: &mut Vec<bool>, acc: u64, out: &mut (u64, u64)) {
                if row == cost.len() {
                    if acc < out.0 {
                        *out = (acc, 1);
                    } else if acc == out.0 {
                        out.1 += 1;
                    }
                    return;
                }
                for c in 0..cost[row].len() {
                    if !used[c] {
                        used[c] = true;
                        best(cost, row + 1, used, acc + cost[row][c], out);
                        used[c] = false;
                    }
                }
            }
            let mut out = (u64::MAX, 0);
            best(&cost, 0, &mut vec![false; cols], 0, &mut out);
            let min = min_assignment_cost(&cost).unwrap();
            assert_eq!(min, out.0);
            let (count, truncated) = enumerate_optimal_assignments(&cost, min, 1_000_000, |_| {});
            assert!(!truncated);
            assert_eq!(count, out.1);
        }
    }

    #[test]
    fn assignment_enumeration_respects_cap() {
        let cost = vec![vec![0; 6]; 3];
        assert_eq!(enumerate_optimal_assignments(&cost, 0, 1000, |_| {}), (120, false));
        assert_eq!(enumerate_optimal_assignments(&cost, 0, 50, |_| {}), (50, true));
    }

    #[test]
    fn exact_copy_is_fully_reidentified() {
        let mut wins = 0;
        for seed in 0..20 {
            let g = er_graph_seeded(50, 0.5, seed).unwrap();
            let env = prepare(&g, 4, None, seed).unwrap();
            let out = play(&env, Defence::PseudonymOnly, 2, &AttackParams::default(), seed).unwrap();
            let truth = Truth::from_env(&env, &out.publication.phi);
            assert!(out.result.candidates.iter().any(|c| c.tuple == truth.sybils));
            assert_eq!(out.result.best_score, Some(0));
            wins += (out.success == ratio(1, 1)) as usize;
        }
        assert!(wins >= 18, "{wins}/20");
    }

    #[test]
    fn kmatch_creates_twins() {
        for seed in 0..10 {
            let g = er_graph_seeded(30, 0.3, seed).unwrap();
            let env = prepare(&g, 3, Some(3), seed).unwrap();
            let out = play(&env, Defence::Kmatch, 2, &AttackParams::default(), seed).unwrap();
            let truth = Truth::from_env(&env, &out.publication.phi);
            let orbits = automorphism_orbits(&out.publication.published);
            assert!(truth.sybils.iter().all(|&s| orbits.block_containing(s).len() >= 2));
            let x = out.result.candidates.len();
            let y_max = out.result.candidates.iter().filter_map(|c| c.matching_count).max().unwrap_or(0);
            assert!(x >= 2 || y_max >= 2, "seed {seed}: |X| = {x}, max |Y| = {y_max}");
            assert!(to_f64(&out.success) <= 0.5 + 1e-12);
        }
    }
}
