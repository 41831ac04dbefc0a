#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use smh::dataset::{load_csv, Dataset, Record};
use smh::graph::Graph;
use smh::spectral::decompose_with_default_signal;
use std::path::PathBuf;

/// (file, SMILES column, target column).
pub const DATASETS: [(&str, &str, &str); 3] = [
    ("ESOL.csv", "smiles", "measured log solubility in mols per litre"),
    ("FreeSolv.csv", "smiles", "expt"),
    ("Lipophilicity.csv", "smiles", "exp"),
];

pub fn data_path(file: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(file)
}

pub fn load(file: &str) -> Dataset {
    let (_, smiles, target) = DATASETS.iter().find(|d| d.0 == file).expect("known dataset");
    load_csv(data_path(file), smiles, target).expect("dataset loads")
}

pub fn esol() -> Dataset {
    load("ESOL.csv")
}

/// Connected graph on `n` nodes: a random spanning tree plus `extra`
/// attempted chords.
pub fn random_connected(rng: &mut impl Rng, n: usize, extra: usize) -> Graph {
    let mut edges: Vec<(usize, usize)> = (1..n).map(|v| (rng.random_range(0..v), v)).collect();
    for _ in 0..extra {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        if a != b {
            edges.push((a, b));
        }
    }
    Graph::unlabeled(n, edges).expect("valid graph")
}

/// Tree-like graph with degree at most 4 and up to two rings, 8 to 30
/// nodes.
pub fn molecule_like(rng: &mut impl Rng) -> Graph {
    let n = rng.random_range(8..=30);
    let mut deg = vec![0usize; n];
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for v in 1..n {
        let u = loop {
            let u = rng.random_range(0..v);
            if deg[u] < 4 {
                break u;
            }
        };
        edges.push((u, v));
        deg[u] += 1;
        deg[v] += 1;
    }
    for _ in 0..rng.random_range(0..=2) {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        let pair = (a.min(b), a.max(b));
        if a != b && deg[a] < 4 && deg[b] < 4 && !edges.iter().any(|&(u, v)| (u.min(v), u.max(v)) == pair) {
            edges.push((a, b));
            deg[a] += 1;
            deg[b] += 1;
        }
    }
    Graph::unlabeled(n, edges).expect("valid graph")
}

/// 800 molecule-like graphs. With `f = -ln(λ_1 + λ_2 / 2)` standardized
/// over the set, the target is `-exp(f) + 0.1·ε`: most values sit near
/// zero and a long tail stretches to the left.
pub fn spectral_benchmark() -> Dataset {
    const SIZE: usize = 800;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut graphs = Vec::with_capacity(SIZE);
    let mut feats = Vec::with_capacity(SIZE);
    for _ in 0..SIZE {
        let g = molecule_like(&mut rng);
        let d = decompose_with_default_signal(&g).expect("connected graph");
        feats.push(-(d.eigenvalues[1] + 0.5 * d.eigenvalues[2]).ln());
        graphs.push(g);
    }
    let mean = feats.iter().sum::<f64>() / SIZE as f64;
    let sd = (feats.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / SIZE as f64).sqrt();
    let records = graphs
        .into_iter()
        .zip(feats)
        .enumerate()
        .map(|(i, (graph, f))| {
            let noise: f64 = rng.sample(StandardNormal);
            Record {
                graph,
                target: -((f - mean) / sd).exp() + 0.1 * noise,
                source_row: i,
            }
        })
        .collect();
    Dataset::from_records("spectral-benchmark", records)
}
