//! How distinct are the inferences generated for different events of one
//! sentence? Inferences are embedded, projected to 2D with t-SNE for
//! plotting, and scored with the silhouette coefficient of their event
//! labels in the original embedding space.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modelkit::EmbeddingBackend;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    /// `None` picks `max(n / early_exaggeration / 4, 50)`.
    pub learning_rate: Option<f64>,
    pub early_exaggeration: f64,
    pub exaggeration_iters: usize,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        TsneConfig {
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: None,
            early_exaggeration: 12.0,
            exaggeration_iters: 250,
            seed: 42,
        }
    }
}

fn sq_dists(x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let s: f64 = x[i].iter().zip(&x[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            d[i][j] = s;
            d[j][i] = s;
        }
    }
    d
}

/// Symmetrised input affinities, each row calibrated to `perplexity`.
fn affinities(d: &[Vec<f64>], perplexity: f64) -> Vec<Vec<f64>> {
    let n = d.len();
    let target = perplexity.ln();
    let mut p = vec![vec![0.0; n]; n];
    for i in 0..n {
        let (mut beta, mut lo, mut hi) = (1.0f64, 0.0f64, f64::INFINITY);
        let mut row = vec![0.0; n];
        for _ in 0..100 {
            let mut sum = 0.0;
            for j in 0..n {
                row[j] = if j == i { 0.0 } else { (-beta * d[i][j]).exp() };
                sum += row[j];
            }
            if sum == 0.0 {
                // every neighbour underflowed; widen the kernel
                hi = beta;
                beta = (lo + hi) / 2.0;
                continue;
            }
            let mut entropy = 0.0;
            for j in 0..n {
                row[j] /= sum;
                if row[j] > 0.0 {
                    entropy -= row[j] * row[j].ln();
                }
            }
            if (entropy - target).abs() < 1e-5 {
                break;
            }
            if entropy > target {
                lo = beta;
                beta = if hi.is_finite() { (beta + hi) / 2.0 } else { beta * 2.0 };
            } else {
                hi = beta;
                beta = (beta + lo) / 2.0;
            }
        }
        p[i] = row;
    }
    let mut sym = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            sym[i][j] = ((p[i][j] + p[j][i]) / (2.0 * n as f64)).max(1e-12);
        }
    }
    sym
}

/// Exact t-SNE to two dimensions.
pub fn tsne(x: &[Vec<f64>], config: &TsneConfig) -> Vec<[f64; 2]> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![[0.0, 0.0]];
    }
    let perplexity = config.perplexity.min((n - 1) as f64 / 3.0).max(1.0);
    let p = affinities(&sq_dists(x), perplexity);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let normal = Normal::new(0.0, 1e-4).expect("valid std");
    let mut y: Vec<[f64; 2]> = (0..n).map(|_| [normal.sample(&mut rng), normal.sample(&mut rng)]).collect();
    let lr = config.learning_rate.unwrap_or_else(|| (n as f64 / config.early_exaggeration / 4.0).max(50.0));
    let mut update = vec![[0.0f64; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];
    let mut num = vec![vec![0.0; n]; n];
    for it in 0..config.iterations {
        let exaggeration = if it < config.exaggeration_iters { config.early_exaggeration } else { 1.0 };
        let momentum = if it < config.exaggeration_iters { 0.5 } else { 0.8 };
        let mut z = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let dx = y[i][0] - y[j][0];
                let dy = y[i][1] - y[j][1];
                let q = 1.0 / (1.0 + dx * dx + dy * dy);
                num[i][j] = q;
                num[j][i] = q;
                z += 2.0 * q;
            }
        }
        for i in 0..n {
            let mut grad = [0.0f64; 2];
            for j in 0..n {
                if i == j {
                    continue;
                }
                let mult = (exaggeration * p[i][j] - num[i][j] / z) * num[i][j];
                grad[0] += 4.0 * mult * (y[i][0] - y[j][0]);
                grad[1] += 4.0 * mult * (y[i][1] - y[j][1]);
            }
            for k in 0..2 {
                gains[i][k] = if (grad[k] > 0.0) != (update[i][k] > 0.0) {
                    gains[i][k] + 0.2
                } else {
                    (gains[i][k] * 0.8).max(0.01)
                };
                update[i][k] = momentum * update[i][k] - lr * gains[i][k] * grad[k];
            }
        }
        for i in 0..n {
            y[i][0] += update[i][0];
            y[i][1] += update[i][1];
        }
        let mean = [y.iter().map(|v| v[0]).sum::<f64>() / n as f64, y.iter().map(|v| v[1]).sum::<f64>() / n as f64];
        for v in &mut y {
            v[0] -= mean[0];
            v[1] -= mean[1];
        }
    }
    y
}

/// Mean silhouette coefficient under Euclidean distance. Points in
/// singleton clusters contribute 0.
pub fn silhouette(x: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    let mut distinct: Vec<usize> = labels.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::TooFewClusters(distinct.len()));
    }
    let n = x.len();
    let d: Vec<Vec<f64>> = sq_dists(x).into_iter().map(|row| row.into_iter().map(f64::sqrt).collect()).collect();
    let mut total = 0.0;
    for i in 0..n {
        let mut sums = vec![0.0; distinct.len()];
        let mut counts = vec![0usize; distinct.len()];
        for j in 0..n {
            if j != i {
                let c = distinct.binary_search(&labels[j]).expect("label present");
                sums[c] += d[i][j];
                counts[c] += 1;
            }
        }
        let own = distinct.binary_search(&labels[i]).expect("label present");
        if counts[own] == 0 {
            continue;
        }
        let a = sums[own] / counts[own] as f64;
        let b = (0..distinct.len())
            .filter(|&c| c != own && counts[c] > 0)
            .map(|c| sums[c] / counts[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let m = a.max(b);
        if m > 0.0 {
            total += (b - a) / m;
        }
    }
    Ok(total / n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectedPoint {
    pub x: f64,
    pub y: f64,
    pub event: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiversityResult {
    pub points: Vec<ProjectedPoint>,
    pub silhouette: f64,
}

/// Embeds the inferences of each event, projects them and scores how well
/// they separate by event.
pub fn diversity_projection(
    inferences_by_event: &[(String, Vec<String>)],
    embedder: &dyn EmbeddingBackend,
    config: &TsneConfig,
) -> Result<DiversityResult> {
    if inferences_by_event.len() < 2 {
        return Err(Error::TooFewClusters(inferences_by_event.len()));
    }
    let mut vectors = Vec::new();
    let mut labels = Vec::new();
    let mut meta = Vec::new();
    for (label, (event, texts)) in inferences_by_event.iter().enumerate() {
        if texts.len() < 2 {
            return Err(Error::config(format!("event {event:?} needs at least 2 inferences, has {}", texts.len())));
        }
        for t in texts {
            vectors.push(embedder.embed(t)?.into_iter().map(f64::from).collect::<Vec<f64>>());
            labels.push(label);
            meta.push((event.clone(), t.clone()));
        }
    }
    let score = silhouette(&vectors, &labels)?;
    let coords = tsne(&vectors, config);
    let points = coords
        .into_iter()
        .zip(meta)
        .map(|([x, y], (event, text))| ProjectedPoint { x, y, event, text })
        .collect();
    Ok(DiversityResult { points, silhouette: score })
}

/// Plot data as `x,y,event,text` CSV.
pub fn write_plot_csv(points: &[ProjectedPoint], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for p in points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modelkit::TableEmbedder;

    #[test]
    fn silhouette_of_orthogonal_groups() {
        // two tight pairs on orthogonal axes
        let x = vec![vec![1.0, 0.0], vec![0.9, 0.0], vec![0.0, 1.0], vec![0.0, 0.9]];
        let s = silhouette(&x, &[0, 0, 1, 1]).unwrap();
        // point 0: a = 0.1, b = (√2 + √1.81)/2
        let b0 = (2f64.sqrt() + 1.81f64.sqrt()) / 2.0;
        let s0 = (b0 - 0.1) / b0;
        // point 1: a = 0.1, b = (√1.81 + √1.62)/2
        let b1 = (1.81f64.sqrt() + 1.62f64.sqrt()) / 2.0;
        let s1 = (b1 - 0.1) / b1;
        assert!((s - (s0 + s1) / 2.0).abs() < 1e-12);
        assert!(s > 0.5);
    }

    #[test]
    fn silhouette_edge_cases() {
        let x = vec![vec![0.0], vec![0.0], vec![0.0], vec![0.0]];
        assert_eq!(silhouette(&x, &[0, 0, 1, 1]).unwrap(), 0.0);
        assert!(matches!(silhouette(&x, &[0, 0, 0, 0]), Err(Error::TooFewClusters(1))));
        let y = vec![vec![0.0], vec![1.0], vec![5.0]];
        // the singleton contributes 0
        let s = silhouette(&y, &[0, 0, 1]).unwrap();
        let expected = ((5.0 - 1.0) / 5.0 + (4.0 - 1.0) / 4.0) / 3.0;
        assert!((s - expected).abs() < 1e-12);
    }

    #[test]
    fn tsne_separates_clusters_and_is_seeded() {
        let mut x = Vec::new();
        for i in 0..10 {
            let e = i as f64 * 0.01;
            x.push(vec![1.0 + e, 0.0, 0.0]);
            x.push(vec![0.0, 1.0 + e, 0.0]);
        }
        let cfg = TsneConfig { iterations: 400, ..Default::default() };
        let y = tsne(&x, &cfg);
        assert_eq!(y, tsne(&x, &cfg));
        let y2: Vec<Vec<f64>> = y.iter().map(|p| p.to_vec()).collect();
        let labels: Vec<usize> = (0..20).map(|i| i % 2).collect();
        let s = silhouette(&y2, &labels).unwrap();
        assert!(s > 0.5);
    }

    #[test]
    fn projection_requires_two_events() {
        let e = TableEmbedder::new(1).with("a", vec![1.0]).with("b", vec![1.0]);
        let one = vec![("e".to_string(), vec!["a".to_string(), "b".to_string()])];
        let err = diversity_projection(&one, &e, &TsneConfig::default()).unwrap_err();
        assert_eq!(err.to_string(), "need ≥2 clusters, got 1");
    }

    #[test]
    fn identical_inference_sets_do_not_separate() {
        let e = TableEmbedder::new(2).with("a", vec![1.0, 0.0]).with("b", vec![0.0, 1.0]);
        let same = vec!["a".to_string(), "b".to_string()];
        let r = diversity_projection(
            &[("e1".into(), same.clone()), ("e2".into(), same)],
            &e,
            &TsneConfig { iterations: 50, ..Default::default() },
        )
        .unwrap();
        assert!(r.silhouette <= 1e-12);
        assert_eq!(r.points.len(), 4);
    }
}
