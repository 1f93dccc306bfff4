//! Synthetic fixtures: small assortative graphs with class-correlated
//! features, plus a writer producing the on-disk dataset layout.

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub name: String,
    pub edges: Vec<(u64, u64)>,
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub num_classes: usize,
}

/// Two equally sized blocks with dense intra-block wiring and a few cross
/// edges; features carry a block-specific signal plus uniform noise of
/// amplitude 0.2. The graph is connected by construction (a ring inside
/// each block and at least one guaranteed bridge).
pub fn two_block(nodes_per_block: usize, feature_dim: usize, seed: u64) -> Result<SynthDataset> {
    two_block_noisy(nodes_per_block, feature_dim, 0.2, seed)
}

/// [`two_block`] with an explicit uniform-noise amplitude. Raising `noise`
/// toward (and past) the signal level 1.0 makes single-node features
/// unreliable, so classification leans on neighborhood aggregation.
pub fn two_block_noisy(
    nodes_per_block: usize,
    feature_dim: usize,
    noise: f64,
    seed: u64,
) -> Result<SynthDataset> {
    if nodes_per_block < 3 {
        return Err(Error::InvalidInput(
            "need at least 3 nodes per block".into(),
        ));
    }
    if feature_dim < 2 {
        return Err(Error::InvalidInput("need at least 2 feature dims".into()));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "noise amplitude {noise} must be finite and non-negative"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 2 * nodes_per_block;
    let block = |u: usize| u / nodes_per_block;
    let mut edges: Vec<(u64, u64)> = Vec::new();
    for b in 0..2usize {
        let base = b * nodes_per_block;
        for i in 0..nodes_per_block {
            let u = base + i;
            let v = base + (i + 1) % nodes_per_block;
            edges.push((u as u64, v as u64));
        }
    }
    // Extra intra-block edges thicken each community.
    for u in 0..n {
        for _ in 0..2 {
            let base = block(u) * nodes_per_block;
            let v = base + rng.random_range(0..nodes_per_block);
            if v != u {
                edges.push((u as u64, v as u64));
            }
        }
    }
    edges.push((0, nodes_per_block as u64));
    let cross = (nodes_per_block / 10).max(1);
    for _ in 0..cross {
        let u = rng.random_range(0..nodes_per_block);
        let v = nodes_per_block + rng.random_range(0..nodes_per_block);
        edges.push((u as u64, v as u64));
    }

    let half = feature_dim / 2;
    let mut features = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for u in 0..n {
        let b = block(u);
        let mut row = vec![0f64; feature_dim];
        for (k, slot) in row.iter_mut().enumerate() {
            let in_signal = if b == 0 { k < half } else { k >= half };
            let base = if in_signal { 1.0 } else { 0.0 };
            *slot = base + noise * rng.random::<f64>();
        }
        features.push(row);
        labels.push(b);
    }
    Ok(SynthDataset {
        name: format!("two_block_{nodes_per_block}x2"),
        edges,
        features,
        labels,
        num_classes: 2,
    })
}

/// Writes the four dataset files (dense feature layout) into `dir`.
pub fn write_dataset_dir(dir: &Path, ds: &SynthDataset) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, content: String| -> Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, content).map_err(|e| Error::io(&path, e))
    };
    let mut edges = String::new();
    for &(u, v) in &ds.edges {
        edges.push_str(&format!("{u} {v}\n"));
    }
    write("graph.edges", edges)?;
    let mut feats = String::new();
    for row in &ds.features {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        feats.push_str(&cells.join(","));
        feats.push('\n');
    }
    write("features.csv", feats)?;
    let mut labels = String::new();
    for &l in &ds.labels {
        labels.push_str(&format!("{l}\n"));
    }
    write("labels.csv", labels)?;
    let meta = serde_json::json!({
        "name": ds.name,
        "num_classes": ds.num_classes,
        "features": "dense",
    });
    write("meta.json", format!("{}\n", serde_json::to_string_pretty(&meta).unwrap()))
}
