//! Seeded synthetic graphs for tests and benchmarks.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{HotsError, Result};
use crate::graph::SparseMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SynthModel {
    /// The cycle `0 → 1 → … → n−1 → 0` plus `chords` distinct random arcs.
    /// Always strongly connected.
    CyclePlusChords { chords: usize },
    /// Growth with preferential attachment. Each new page is dangling with
    /// probability `dangling_prob`; otherwise it links to `out_degree`
    /// earlier pages chosen with probability proportional to in-degree + 1.
    /// It also receives `back_links` arcs from random earlier non-dangling
    /// pages. Produces dangling pages and a reducible graph.
    Preferential {
        out_degree: usize,
        back_links: usize,
        dangling_prob: f64,
    },
}

impl SynthModel {
    /// Preferential model with about ten arcs per page.
    pub fn preferential() -> Self {
        SynthModel::Preferential {
            out_degree: 8,
            back_links: 3,
            dangling_prob: 0.1,
        }
    }
}

/// Generates an arc list, deterministic for a given seed.
pub fn synth_graph(n: usize, model: SynthModel, seed: u64) -> Result<Vec<(usize, usize)>> {
    if n < 2 {
        return Err(HotsError::InvalidParameter(format!("need at least 2 nodes, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match model {
        SynthModel::CyclePlusChords { chords } => {
            let mut arcs: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
            let mut present: HashSet<(usize, usize)> = arcs.iter().copied().collect();
            let room = n * (n - 1) - present.len().min(n * (n - 1));
            let target = chords.min(room);
            while arcs.len() < n + target {
                let u = rng.random_range(0..n);
                let v = rng.random_range(0..n);
                if u != v && present.insert((u, v)) {
                    arcs.push((u, v));
                }
            }
            Ok(arcs)
        }
        SynthModel::Preferential {
            out_degree,
            back_links,
            dangling_prob,
        } => {
            if !(0.0..1.0).contains(&dangling_prob) {
                return Err(HotsError::InvalidParameter(format!(
                    "dangling probability must lie in [0, 1), got {dangling_prob}"
                )));
            }
            let mut arcs = vec![(0, 1), (1, 0)];
            // each node once, plus once per received arc
            let mut ballot: Vec<usize> = vec![0, 1, 0, 1];
            let mut linkers: Vec<usize> = vec![0, 1];
            let mut chosen = HashSet::new();
            for t in 2..n {
                let dangling = rng.random::<f64>() < dangling_prob;
                if !dangling {
                    chosen.clear();
                    let k = out_degree.min(t);
                    while chosen.len() < k {
                        chosen.insert(ballot[rng.random_range(0..ballot.len())]);
                    }
                    let mut targets: Vec<usize> = chosen.iter().copied().collect();
                    targets.sort_unstable();
                    for v in targets {
                        arcs.push((t, v));
                        ballot.push(v);
                    }
                }
                chosen.clear();
                let r = back_links.min(linkers.len());
                while chosen.len() < r {
                    chosen.insert(linkers[rng.random_range(0..linkers.len())]);
                }
                let mut sources: Vec<usize> = chosen.iter().copied().collect();
                sources.sort_unstable();
                for u in sources {
                    arcs.push((u, t));
                    ballot.push(t);
                }
                ballot.push(t);
                if !dangling {
                    linkers.push(t);
                }
            }
            Ok(arcs)
        }
    }
}

/// Unit-weight matrix of an arc list on `n` nodes.
pub fn arcs_to_matrix(n: usize, arcs: &[(usize, usize)]) -> Result<SparseMatrix> {
    SparseMatrix::from_triplets(n, arcs.iter().map(|&(i, j)| (i, j, 1.0)))
}
