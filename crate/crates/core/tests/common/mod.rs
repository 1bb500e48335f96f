//! Helpers shared by the integration test targets.

#![allow(dead_code)]

use graphanon::attack::{self, AttackEnvironment, Defence, Publication};
use graphanon::generators::er_graph_seeded;
use graphanon::Graph;

/// Brute-force triangle count over all vertex triples.
pub fn triangles_bruteforce(g: &Graph) -> u64 {
    let n = g.n();
    let mut c = 0;
    for a in 0..n {
        for b in a + 1..n {
            if !g.has_edge(a, b) {
                continue;
            }
            for d in b + 1..n {
                if g.has_edge(a, d) && g.has_edge(b, d) {
                    c += 1;
                }
            }
        }
    }
    c
}

/// A small attack published by K-Match: at most 12 published vertices and
/// at most 6 attacker vertices. Returns the environment, the publication
/// and k.
pub fn micro_instance(seed: u64) -> (AttackEnvironment, Publication, usize) {
    let k = 2 + (seed % 2) as usize;
    let ell = 1 + (seed / 2 % 2) as usize;
    let n0 = 5 + (seed % 5) as usize;
    let cap = (12 / k) * k - ell;
    let n0 = n0.min(cap);
    let density = [0.2, 0.35, 0.5][(seed % 3) as usize];
    let g = er_graph_seeded(n0, density, 1000 + seed).unwrap();
    let max_victims = ((1usize << ell) - 1).min(6 - ell).min(n0);
    let victims = 1 + (seed as usize / 4) % max_victims;
    let env = attack::prepare(&g, ell, Some(victims), seed).unwrap();
    let publication = attack::publish(&env, Defence::Kmatch, k, seed).unwrap();
    assert!(publication.published.n() <= 12);
    (env, publication, k)
}

/// Random graph for the cross-check suites.
pub fn random_graph(n: usize, seed: u64) -> Graph {
    let density = [0.15, 0.3, 0.5, 0.7][(seed % 4) as usize];
    er_graph_seeded(n, density, seed).unwrap()
}

/// A graph with a non-trivial automorphism: two copies of a random graph
/// on `half` vertices, vertex `i` of one copy joined to vertex `i` of the
/// other when a coin comes up heads.
pub fn mirrored_graph(half: usize, seed: u64) -> Graph {
    let h = random_graph(half, seed);
    let links = er_graph_seeded(half + 1, 0.5, seed ^ 0x5eed).unwrap();
    let mut g = Graph::new(2 * half);
    for (u, v) in h.edges() {
        g.add_edge(u, v).unwrap();
        g.add_edge(half + u, half + v).unwrap();
    }
    for i in 0..half {
        if links.has_edge(i, half) {
            g.add_edge(i, half + i).unwrap();
        }
    }
    g
}
