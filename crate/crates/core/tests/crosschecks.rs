//! Production routines against brute-force counterparts.

mod common;

use graphanon::automorphism::{automorphism_orbits, orbits_bruteforce};
use graphanon::metrics::{global_clustering, triangle_count};
use graphanon::privacy::{max_k_degree, max_k_neighbourhood, max_k_symmetry};

use common::{mirrored_graph, random_graph, triangles_bruteforce};

fn sorted_blocks(p: &graphanon::automorphism::OrbitPartition) -> Vec<Vec<usize>> {
    let mut b: Vec<Vec<usize>> = p.blocks().iter().map(|b| {
        let mut b = b.clone();
        b.sort_unstable();
        b
    }).collect();
    b.sort();
    b
}

#[test]
fn orbits_match_bruteforce() {
    for seed in 0..200u64 {
        let g = if seed % 2 == 0 {
            random_graph(4 + (seed % 7) as usize, seed)
        } else {
            mirrored_graph(2 + (seed % 4) as usize, seed)
        };
        let fast = automorphism_orbits(&g);
        let slow = orbits_bruteforce(&g).unwrap();
        assert_eq!(sorted_blocks(&fast), sorted_blocks(&slow), "seed {seed}");
    }
}

#[test]
fn triangles_match_bruteforce() {
    for seed in 0..60u64 {
        let g = random_graph(5 + (seed % 40) as usize, seed);
        assert_eq!(triangle_count(&g), triangles_bruteforce(&g), "seed {seed}");
    }
}

#[test]
fn clustering_from_bruteforce_triangles() {
    let g = random_graph(30, 3);
    let triples: u64 = g.degrees().iter().map(|&d| (d * d.saturating_sub(1) / 2) as u64).sum();
    let expected = 3.0 * triangles_bruteforce(&g) as f64 / triples as f64;
    assert!((global_clustering(&g) - expected).abs() < 1e-12);
}

#[test]
fn symmetry_implies_neighbourhood_implies_degree() {
    for seed in 0..150u64 {
        let g = if seed % 3 == 0 {
            mirrored_graph(3 + (seed % 5) as usize, seed)
        } else {
            random_graph(5 + (seed % 8) as usize, seed)
        };
        let (s, nb, d) = (max_k_symmetry(&g), max_k_neighbourhood(&g), max_k_degree(&g));
        assert!(s <= nb && nb <= d, "seed {seed}: {s} {nb} {d}");
    }
}
