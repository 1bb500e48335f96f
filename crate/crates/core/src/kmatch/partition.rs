//! Multilevel balanced k-way partitioning.
//!
//! Heavy-edge matching coarsens the graph, greedy region growing splits the
//! coarsest level, boundary moves refine while projecting back, and a final
//! pass moves vertices until every part holds exactly `n / parts` vertices.

use rand::seq::SliceRandom;

use crate::graph::Graph;
use crate::rng::Rng;

struct Weighted {
    adj: Vec<Vec<(usize, u32)>>,
    weight: Vec<u32>,
}

impl Weighted {
    fn from_graph(g: &Graph) -> Self {
        Weighted {
            adj: (0..g.n())
                .map(|v| g.neighbors(v).iter().map(|&w| (w, 1)).collect())
                .collect(),
            weight: vec![1; g.n()],
        }
    }

    fn n(&self) -> usize {
        self.weight.len()
    }

    /// Heavy-edge matching; returns the coarse graph and the fine-to-coarse
    /// map. Pairs heavier than `cap` are not merged.
    fn coarsen(&self, cap: u32, rng: &mut Rng) -> (Weighted, Vec<usize>) {
        let n = self.n();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut map = vec![usize::MAX; n];
        let mut next = 0;
        for &v in &order {
            if map[v] != usize::MAX {
                continue;
            }
            let mate = self.adj[v]
                .iter()
                .filter(|&&(w, _)| map[w] == usize::MAX && self.weight[v] + self.weight[w] <= cap)
                .max_by_key(|&&(w, ew)| (ew, std::cmp::Reverse(self.weight[w])))
                .map(|&(w, _)| w);
            map[v] = next;
            if let Some(w) = mate {
                map[w] = next;
            }
            next += 1;
        }
        let mut weight = vec![0; next];
        let mut acc: Vec<std::collections::BTreeMap<usize, u32>> = vec![Default::default(); next];
        for v in 0..n {
            weight[map[v]] += self.weight[v];
            for &(w, ew) in &self.adj[v] {
                if map[v] != map[w] {
                    *acc[map[v]].entry(map[w]).or_default() += ew;
                }
            }
        }
        let adj = acc.into_iter().map(|m| m.into_iter().collect()).collect();
        (Weighted { adj, weight }, map)
    }

    /// Edge weight from `v` into each part.
    fn links(&self, v: usize, part: &[usize], parts: usize) -> Vec<u32> {
        let mut out = vec![0; parts];
        for &(w, ew) in &self.adj[v] {
            out[part[w]] += ew;
        }
        out
    }
}

fn grow(g: &Weighted, parts: usize, target: u32, rng: &mut Rng) -> Vec<usize> {
    let n = g.n();
    let mut part = vec![usize::MAX; n];
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    for p in 0..parts.saturating_sub(1) {
        let mut load = 0;
        let mut conn = vec![0u32; n];
        while load < target {
            // most connected unassigned vertex that still fits, else any that fits
            let pick = (0..n)
                .filter(|&v| part[v] == usize::MAX && load + g.weight[v] <= target)
                .max_by_key(|&v| (conn[v], std::cmp::Reverse(order[v])));
            let Some(v) = pick else { break };
            part[v] = p;
            load += g.weight[v];
            for &(w, ew) in &g.adj[v] {
                conn[w] += ew;
            }
        }
    }
    for p in part.iter_mut().filter(|p| **p == usize::MAX) {
        *p = parts - 1;
    }
    part
}

/// Greedy boundary moves with positive gain that keep every part within
/// `[low, high]`.
fn refine(g: &Weighted, part: &mut [usize], parts: usize, low: u32, high: u32, passes: usize) {
    let mut load = vec![0u32; parts];
    for v in 0..g.n() {
        load[part[v]] += g.weight[v];
    }
    for _ in 0..passes {
        let mut moved = false;
        for v in 0..g.n() {
            let from = part[v];
            let links = g.links(v, part, parts);
            let best = (0..parts)
                .filter(|&p| p != from && links[p] > links[from])
                .filter(|&p| load[p] + g.weight[v] <= high && load[from] >= low + g.weight[v])
                .max_by_key(|&p| (links[p], std::cmp::Reverse(p)));
            if let Some(to) = best {
                part[v] = to;
                load[from] -= g.weight[v];
                load[to] += g.weight[v];
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
}

/// Moves unit-weight vertices from overfull to underfull parts, cheapest cut
/// increase first, until all parts have exactly `target` vertices.
fn force_balance(g: &Weighted, part: &mut [usize], parts: usize, target: u32) {
    let mut load = vec![0u32; parts];
    for v in 0..g.n() {
        load[part[v]] += 1;
    }
    while let Some(from) = (0..parts).find(|&p| load[p] > target) {
        let mut best: Option<(i64, usize, usize)> = None;
        for v in (0..g.n()).filter(|&v| part[v] == from) {
            let links = g.links(v, part, parts);
            for to in (0..parts).filter(|&p| load[p] < target) {
                let gain = links[to] as i64 - links[from] as i64;
                if best.is_none_or(|(b, _, _)| gain > b) {
                    best = Some((gain, v, to));
                }
            }
        }
        let (_, v, to) = best.expect("an underfull part exists while one is overfull");
        part[v] = to;
        load[from] -= 1;
        load[to] += 1;
    }
}

/// Splits the vertices of `g` into `parts` groups of exactly `n / parts`
/// vertices with few edges between groups. `n` must be a multiple of
/// `parts`.
pub fn balanced_partition(g: &Graph, parts: usize, rng: &mut Rng) -> Vec<usize> {
    let n = g.n();
    assert!(parts > 0 && n.is_multiple_of(parts), "{n} vertices do not split into {parts} equal parts");
    let target = (n / parts) as u32;
    if n == 0 {
        return Vec::new();
    }
    let mut levels: Vec<(Weighted, Vec<usize>)> = Vec::new();
    let mut current = Weighted::from_graph(g);
    let stop = (4 * parts).max(20);
    let cap = target.div_ceil(2).max(1);
    while current.n() > stop {
        let (coarse, map) = current.coarsen(cap, rng);
        if coarse.n() * 10 > current.n() * 9 {
            break;
        }
        levels.push((current, map));
        current = coarse;
    }
    let mut part = grow(&current, parts, target, rng);
    let slack = target / 10 + 1;
    refine(&current, &mut part, parts, target.saturating_sub(slack), target + slack, 4);
    while let Some((fine, map)) = levels.pop() {
        part = map.iter().map(|&c| part[c]).collect();
        current = fine;
        refine(&current, &mut part, parts, target.saturating_sub(slack), target + slack, 4);
    }
    force_balance(&current, &mut part, parts, target);
    refine(&current, &mut part, parts, target, target, 2);
    part
}

/// Number of edges whose endpoints lie in different parts.
pub fn cut_size(g: &Graph, part: &[usize]) -> usize {
    g.edges().filter(|&(u, v)| part[u] != part[v]).count()
}
