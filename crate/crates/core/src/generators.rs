//! Erdős–Rényi and Barabási–Albert random graphs.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Graph;
use crate::rng::{self, Rng};

#[derive(Debug, Error, PartialEq)]
pub enum GeneratorError {
    #[error("density {0} outside [0, 1]")]
    InvalidDensity(f64),
    #[error("m = {m} exceeds the current graph order {order}")]
    TooManyTargets { m: usize, order: usize },
    #[error("invalid parameters: {0}")]
    Invalid(String),
}

/// Seed graph used to start preferential attachment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedKind {
    Complete,
    RingLattice,
    ErHalf,
}

impl SeedKind {
    pub const ALL: [SeedKind; 3] = [SeedKind::Complete, SeedKind::RingLattice, SeedKind::ErHalf];
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorSpec {
    Er {
        n: usize,
        density: f64,
        rng_seed: u64,
    },
    Ba {
        m: usize,
        seed_order: usize,
        growth: usize,
        rng_seed: u64,
    },
}

impl GeneratorSpec {
    pub fn order(&self) -> usize {
        match *self {
            GeneratorSpec::Er { n, .. } => n,
            GeneratorSpec::Ba {
                seed_order, growth, ..
            } => seed_order + growth,
        }
    }

    pub fn rng_seed(&self) -> u64 {
        match *self {
            GeneratorSpec::Er { rng_seed, .. } | GeneratorSpec::Ba { rng_seed, .. } => rng_seed,
        }
    }

    /// Builds the graph; BA specs draw their seed kind uniformly from the
    /// same stream.
    pub fn generate(&self) -> Result<Graph, GeneratorError> {
        match *self {
            GeneratorSpec::Er { .. } => er_graph(self),
            GeneratorSpec::Ba { rng_seed, .. } => {
                let kind = pick_seed_kind(&mut rng::rng(rng::derive_named(rng_seed, "seed-kind")));
                ba_graph(self, kind)
            }
        }
    }
}

fn er_with(n: usize, density: f64, rng: &mut Rng) -> Result<Graph, GeneratorError> {
    if !(0.0..=1.0).contains(&density) {
        return Err(GeneratorError::InvalidDensity(density));
    }
    let mut g = Graph::new(n);
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen::<f64>() < density {
                g.add_edge(u, v).unwrap();
            }
        }
    }
    Ok(g)
}

/// G(n, d): every pair independently with probability `d`.
pub fn er_graph(spec: &GeneratorSpec) -> Result<Graph, GeneratorError> {
    match *spec {
        GeneratorSpec::Er {
            n,
            density,
            rng_seed,
        } => er_with(n, density, &mut rng::rng(rng_seed)),
        _ => Err(GeneratorError::Invalid("er_graph needs an ER spec".into())),
    }
}

pub fn er_graph_seeded(n: usize, density: f64, seed: u64) -> Result<Graph, GeneratorError> {
    er_graph(&GeneratorSpec::Er {
        n,
        density,
        rng_seed: seed,
    })
}

/// Ring lattice on `n` vertices: each vertex is joined to the `m / 2`
/// nearest vertices on either side, plus the diametrically opposite vertex
/// when `m` is odd and `n` even. Offsets that wrap onto each other are
/// merged, so the degree saturates at `n - 1`.
pub fn ring_lattice(n: usize, m: usize) -> Graph {
    let mut g = Graph::new(n);
    if n < 2 {
        return g;
    }
    let mut offsets: Vec<usize> = (1..=m / 2).filter(|&o| o < n).collect();
    if m % 2 == 1 && n.is_multiple_of(2) {
        offsets.push(n / 2);
    }
    for u in 0..n {
        for &o in &offsets {
            let v = (u + o) % n;
            if v != u {
                let _ = g.add_edge(u, v);
            }
        }
    }
    g
}

/// Uniform choice among the three seed kinds.
pub fn pick_seed_kind(rng: &mut Rng) -> SeedKind {
    SeedKind::ALL[rng.gen_range(0..3)]
}

/// Preferential attachment grown from a seed graph of the given kind.
///
/// Targets are drawn from the repeated-node list (each vertex appears once
/// per incident edge end); duplicates are re-drawn. When fewer than `m`
/// vertices have positive degree, all of them are taken and the rest are
/// filled uniformly from the degree-zero vertices.
pub fn ba_graph(spec: &GeneratorSpec, seed_kind: SeedKind) -> Result<Graph, GeneratorError> {
    let GeneratorSpec::Ba {
        m,
        seed_order,
        growth,
        rng_seed,
    } = *spec
    else {
        return Err(GeneratorError::Invalid("ba_graph needs a BA spec".into()));
    };
    if m == 0 {
        return Err(GeneratorError::Invalid("m must be at least 1".into()));
    }
    if seed_order < m {
        return Err(GeneratorError::TooManyTargets {
            m,
            order: seed_order,
        });
    }
    let mut rng = rng::rng(rng_seed);
    let mut g = match seed_kind {
        SeedKind::Complete => Graph::complete(seed_order),
        SeedKind::RingLattice => ring_lattice(seed_order, m),
        SeedKind::ErHalf => er_with(seed_order, 0.5, &mut rng)?,
    };
    let mut repeated: Vec<usize> = g.edges().flat_map(|(u, v)| [u, v]).collect();
    for _ in 0..growth {
        let order = g.n();
        if m > order {
            return Err(GeneratorError::TooManyTargets { m, order });
        }
        let positive = (0..order).filter(|&v| g.deg(v) > 0).count();
        let mut targets: Vec<usize> = Vec::with_capacity(m);
        if positive >= m {
            while targets.len() < m {
                let t = *repeated.choose(&mut rng).unwrap();
                if !targets.contains(&t) {
                    targets.push(t);
                }
            }
        } else {
            targets.extend((0..order).filter(|&v| g.deg(v) > 0));
            let mut zero: Vec<usize> = (0..order).filter(|&v| g.deg(v) == 0).collect();
            zero.shuffle(&mut rng);
            targets.extend(zero.into_iter().take(m - positive));
        }
        let new = g.add_vertices(1);
        for t in targets {
            g.add_edge(new, t).unwrap();
            repeated.push(new);
            repeated.push(t);
        }
    }
    Ok(g)
}
