//! Histogram-binned random regression forest.
//!
//! Trees grow on bootstrap resamples and split by variance reduction over a
//! random feature subset at each node. Split candidates come from a per-feature
//! binned summary (at most 255 thresholds), so split search costs one O(n)
//! histogram pass plus O(bins) per candidate feature. Thresholds are stored as
//! raw feature values, which keeps prediction independent of the binning
//! tables and bit-identical to an unbinned tree that split at the same values.

use crate::rng::{derive_rng, Stream};
use ndarray::Array2;
use rand::RngExt;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const MAX_BINS: usize = 256;

/// Relative tolerance a split's score must beat the parent's by. Guards
/// against floating-point noise manufacturing splits on constant targets.
const GAIN_EPS: f64 = 1e-10;

/// Feature matrix quantized to at most `MAX_BINS` levels per feature.
///
/// `code(v) = #{edges < v}` satisfies `code(v) <= b  ⟺  v <= edges[b]`, so a
/// tree trained on codes and evaluated on raw values agrees exactly.
pub(crate) struct BinnedDesign {
    n: usize,
    p: usize,
    /// Column-major: `codes[f * n + i]` is the bin code of row i, feature f.
    codes: Vec<u8>,
    /// Ascending candidate thresholds per feature.
    edges: Vec<Vec<f64>>,
}

impl BinnedDesign {
    pub fn new(features: &Array2<f64>) -> Self {
        let n = features.nrows();
        let p = features.ncols();
        let mut codes = vec![0u8; n * p];
        let mut edges = Vec::with_capacity(p);
        let mut col = vec![0.0f64; n];
        for f in 0..p {
            for i in 0..n {
                col[i] = features[(i, f)];
            }
            col.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut e: Vec<f64> = (1..MAX_BINS)
                .map(|b| col[n * b / MAX_BINS])
                .collect();
            e.dedup();
            debug_assert!(e.len() < MAX_BINS);
            for i in 0..n {
                let v = features[(i, f)];
                codes[f * n + i] = e.partition_point(|&edge| edge < v) as u8;
            }
            edges.push(e);
        }
        Self { n, p, codes, edges }
    }

    fn codes_for(&self, f: usize) -> &[u8] {
        &self.codes[f * self.n..(f + 1) * self.n]
    }
}

#[derive(Debug, Clone, Copy)]
enum Node {
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        value: f64,
    },
}

#[derive(Debug, Clone)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0usize;
        loop {
            match self.nodes[at] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if x[feature as usize] <= threshold {
                        left as usize
                    } else {
                        right as usize
                    };
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Forest {
    trees: Vec<Tree>,
}

impl Forest {
    /// Mean of the tree predictions, summed in tree order.
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut sum = 0.0;
        for tree in &self.trees {
            sum += tree.predict(x);
        }
        sum / self.trees.len() as f64
    }
}

/// Grow a forest on pre-binned features. Each tree draws its own RNG from a
/// structural seed, so the result does not depend on thread scheduling.
pub(crate) fn grow_forest(
    design: &BinnedDesign,
    targets: &[f64],
    n_trees: usize,
    max_depth: usize,
    min_leaf: usize,
    mtry: usize,
    seed: u64,
) -> Forest {
    assert_eq!(design.n, targets.len());
    let trees = (0..n_trees)
        .into_par_iter()
        .map(|t| {
            let rng = derive_rng(seed, &[Stream::Tree as u64, t as u64]);
            grow_tree(design, targets, max_depth, min_leaf, mtry, rng)
        })
        .collect();
    Forest { trees }
}

struct Grower<'a> {
    design: &'a BinnedDesign,
    targets: &'a [f64],
    max_depth: usize,
    min_leaf: usize,
    mtry: usize,
    rng: ChaCha8Rng,
    feat_buf: Vec<u32>,
    counts: Vec<u32>,
    sums: Vec<f64>,
    nodes: Vec<Node>,
}

fn grow_tree(
    design: &BinnedDesign,
    targets: &[f64],
    max_depth: usize,
    min_leaf: usize,
    mtry: usize,
    mut rng: ChaCha8Rng,
) -> Tree {
    let n = design.n;
    let mut sample: Vec<u32> = (0..n).map(|_| rng.random_range(0..n) as u32).collect();
    let mut grower = Grower {
        design,
        targets,
        max_depth,
        min_leaf,
        mtry,
        rng,
        feat_buf: (0..design.p as u32).collect(),
        counts: vec![0u32; MAX_BINS],
        sums: vec![0.0f64; MAX_BINS],
        nodes: Vec::new(),
    };
    grower.grow(&mut sample, 0);
    Tree {
        nodes: grower.nodes,
    }
}

struct BestSplit {
    score: f64,
    feature: usize,
    bin: usize,
}

impl Grower<'_> {
    fn grow(&mut self, rows: &mut [u32], depth: usize) -> u32 {
        let count = rows.len();
        let mut sum = 0.0;
        for &i in rows.iter() {
            sum += self.targets[i as usize];
        }
        let mean = sum / count as f64;
        if depth >= self.max_depth || count < 2 * self.min_leaf {
            return self.push(Node::Leaf { value: mean });
        }
        let parent_score = sum * sum / count as f64;
        let min_score = parent_score + GAIN_EPS * (1.0 + parent_score.abs());
        let mut best: Option<BestSplit> = None;
        for j in 0..self.mtry.min(self.design.p) {
            let r = self.rng.random_range(j..self.design.p);
            self.feat_buf.swap(j, r);
            let f = self.feat_buf[j] as usize;
            if let Some(split) = self.scan_feature(f, rows, sum, min_score) {
                if best.as_ref().is_none_or(|b| split.score > b.score) {
                    best = Some(split);
                }
            }
        }
        let Some(best) = best else {
            return self.push(Node::Leaf { value: mean });
        };
        let codes = self.design.codes_for(best.feature);
        let mut i = 0;
        let mut j = rows.len();
        while i < j {
            if codes[rows[i] as usize] as usize <= best.bin {
                i += 1;
            } else {
                j -= 1;
                rows.swap(i, j);
            }
        }
        let id = self.push(Node::Leaf { value: mean });
        let (left_rows, right_rows) = rows.split_at_mut(i);
        let left = self.grow(left_rows, depth + 1);
        let right = self.grow(right_rows, depth + 1);
        self.nodes[id as usize] = Node::Split {
            feature: best.feature as u32,
            threshold: self.design.edges[best.feature][best.bin],
            left,
            right,
        };
        id
    }

    /// Best bin boundary for one feature, or None if no split beats
    /// `min_score` with both children at least `min_leaf` large.
    fn scan_feature(
        &mut self,
        f: usize,
        rows: &[u32],
        total_sum: f64,
        min_score: f64,
    ) -> Option<BestSplit> {
        let n_bins = self.design.edges[f].len() + 1;
        if n_bins < 2 {
            return None;
        }
        self.counts[..n_bins].fill(0);
        self.sums[..n_bins].fill(0.0);
        let codes = self.design.codes_for(f);
        for &i in rows {
            let c = codes[i as usize] as usize;
            self.counts[c] += 1;
            self.sums[c] += self.targets[i as usize];
        }
        let total_count = rows.len();
        let mut best: Option<BestSplit> = None;
        let mut left_count = 0usize;
        let mut left_sum = 0.0;
        for b in 0..n_bins - 1 {
            left_count += self.counts[b] as usize;
            left_sum += self.sums[b];
            let right_count = total_count - left_count;
            if left_count < self.min_leaf || right_count < self.min_leaf {
                continue;
            }
            let right_sum = total_sum - left_sum;
            let score = left_sum * left_sum / left_count as f64
                + right_sum * right_sum / right_count as f64;
            if score > min_score && best.as_ref().is_none_or(|x| score > x.score) {
                best = Some(BestSplit {
                    score,
                    feature: f,
                    bin: b,
                });
            }
        }
        best
    }

    fn push(&mut self, node: Node) -> u32 {
        self.nodes.push(node);
        (self.nodes.len() - 1) as u32
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn matrix(rows: &[Vec<f64>]) -> Array2<f64> {
        let n = rows.len();
        let p = rows[0].len();
        Array2::from_shape_fn((n, p), |(i, j)| rows[i][j])
    }

    #[test]
    fn binning_codes_agree_with_raw_thresholds() {
        // The defining property: code(v) <= b exactly when v <= edges[b].
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rows: Vec<Vec<f64>> = (0..400)
            .map(|_| vec![rng.random::<f64>() * 10.0 - 5.0])
            .collect();
        let features = matrix(&rows);
        let design = BinnedDesign::new(&features);
        let codes = design.codes_for(0);
        for (i, row) in rows.iter().enumerate() {
            for (b, &edge) in design.edges[0].iter().enumerate() {
                assert_eq!(
                    (codes[i] as usize) <= b,
                    row[0] <= edge,
                    "row {i} value {} edge {edge}",
                    row[0]
                );
            }
        }
    }

    #[test]
    fn constant_feature_never_splits() {
        let rows: Vec<Vec<f64>> = (0..50).map(|i| vec![3.0, i as f64]).collect();
        let features = matrix(&rows);
        let design = BinnedDesign::new(&features);
        // Feature 0 offers no usable boundary: every row has the same code.
        let codes = design.codes_for(0);
        assert!(codes.iter().all(|&c| c == codes[0]));
    }

    #[test]
    fn step_function_recovery() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let train: Vec<Vec<f64>> = (0..500)
            .map(|_| vec![rng.random::<f64>() * 2.0 - 1.0])
            .collect();
        let targets: Vec<f64> = train.iter().map(|r| f64::from(r[0] > 0.0)).collect();
        let features = matrix(&train);
        let design = BinnedDesign::new(&features);
        let forest = grow_forest(&design, &targets, 100, 20, 5, 1, 99);
        let mut mse = 0.0;
        let m = 200;
        for k in 0..m {
            let x = -1.0 + 2.0 * (k as f64 + 0.5) / m as f64;
            let truth = f64::from(x > 0.0);
            mse += (forest.predict(&[x]) - truth).powi(2);
        }
        mse /= m as f64;
        assert!(mse < 0.05, "out-of-sample MSE {mse}");
    }

    #[test]
    #[ignore = "timing probe, run manually with --nocapture"]
    fn bench_forest_growth() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 1600;
        let p = 100;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..p).map(|_| rng.random::<f64>()).collect())
            .collect();
        let targets: Vec<f64> = rows.iter().map(|r| r[0] + r[1] * r[2]).collect();
        let features = matrix(&rows);
        let t0 = std::time::Instant::now();
        let design = BinnedDesign::new(&features);
        let binned = t0.elapsed();
        let t1 = std::time::Instant::now();
        let forest = grow_forest(&design, &targets, 200, 20, 5, 10, 3);
        let grown = t1.elapsed();
        let t2 = std::time::Instant::now();
        let mut acc = 0.0;
        for row in rows.iter().take(400) {
            acc += forest.predict(row);
        }
        let predicted = t2.elapsed();
        println!("bin {binned:?}  grow 200 trees {grown:?}  predict 400 rows {predicted:?}  (acc {acc:.3})");
    }

    #[test]
    fn deterministic_across_thread_pools() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<f64>> = (0..200)
            .map(|_| vec![rng.random::<f64>(), rng.random::<f64>()])
            .collect();
        let targets: Vec<f64> = rows.iter().map(|r| r[0] + 2.0 * r[1]).collect();
        let features = matrix(&rows);
        let design = BinnedDesign::new(&features);
        let a = grow_forest(&design, &targets, 30, 10, 5, 2, 42);
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = single.install(|| grow_forest(&design, &targets, 30, 10, 5, 2, 42));
        for probe in [[0.1, 0.9], [0.5, 0.5], [0.9, 0.2]] {
            assert_eq!(a.predict(&probe).to_bits(), b.predict(&probe).to_bits());
        }
    }
}
