//! Independent reference implementations used by the integration and
//! acceptance tests. None of these share code with the library paths they
//! check.

#![allow(dead_code)]

use rand::Rng;

/// AUC by counting every (positive, negative) pair; ties count one half.
pub fn pair_count_auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        if !positive[i] {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if positive[j] {
                continue;
            }
            pairs += 1.0;
            if si > sj {
                wins += 1.0;
            } else if si == sj {
                wins += 0.5;
            }
        }
    }
    (pairs > 0.0).then(|| wins / pairs)
}

/// Macro one-vs-rest AUC over classes with both positives and negatives.
pub fn pair_count_macro_auc(scores: &[Vec<f64>], labels: &[usize], classes: usize) -> Option<f64> {
    let per_class: Vec<f64> = (0..classes)
        .filter_map(|c| {
            let col: Vec<f64> = scores.iter().map(|r| r[c]).collect();
            let pos: Vec<bool> = labels.iter().map(|&l| l == c).collect();
            pair_count_auc(&col, &pos)
        })
        .collect();
    (!per_class.is_empty()).then(|| per_class.iter().sum::<f64>() / per_class.len() as f64)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Greedy k-center recomputing every nearest-center distance from scratch at
/// each step. Ties go to the lowest position in `candidates`.
pub fn naive_k_center(centers: &[Vec<f64>], candidates: &[Vec<f64>], budget: usize) -> Vec<usize> {
    let mut chosen: Vec<usize> = Vec::new();
    for _ in 0..budget {
        let mut best: Option<(usize, f64)> = None;
        for (i, x) in candidates.iter().enumerate() {
            if chosen.contains(&i) {
                continue;
            }
            let d = centers
                .iter()
                .chain(chosen.iter().map(|&k| &candidates[k]))
                .map(|c| dist(x, c))
                .fold(f64::INFINITY, f64::min);
            if best.is_none_or(|(_, bd)| d > bd) {
                best = Some((i, d));
            }
        }
        chosen.push(best.unwrap().0);
    }
    chosen
}

/// Largest distance from any candidate to its nearest center in
/// `centers ∪ chosen`.
pub fn covering_radius(centers: &[Vec<f64>], candidates: &[Vec<f64>], chosen: &[usize]) -> f64 {
    candidates
        .iter()
        .map(|x| {
            centers
                .iter()
                .chain(chosen.iter().map(|&k| &candidates[k]))
                .map(|c| dist(x, c))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Smallest covering radius over every size-`budget` subset of the candidates.
pub fn optimal_k_center_radius(centers: &[Vec<f64>], candidates: &[Vec<f64>], budget: usize) -> f64 {
    let n = candidates.len();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != budget {
            continue;
        }
        let chosen: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        best = best.min(covering_radius(centers, candidates, &chosen));
    }
    best
}

/// Average ranks (1-based), ties sharing their mean rank.
pub fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    r
}

pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    if va == 0.0 || vb == 0.0 {
        0.0
    } else {
        cov / (va * vb).sqrt()
    }
}

/// Multinomial logistic regression with an L2 penalty on every parameter,
/// minimized by damped Newton iterations to a gradient norm below 1e-11.
pub struct ConvexSoftmax {
    /// Row `c` holds the `dim` weights of class `c` followed by its bias.
    pub params: Vec<f64>,
    pub dim: usize,
    pub classes: usize,
}

fn augmented(x: &[f64]) -> Vec<f64> {
    let mut a = x.to_vec();
    a.push(1.0);
    a
}

fn softmax_probs(params: &[f64], xa: &[f64], classes: usize) -> Vec<f64> {
    let w = xa.len();
    let z: Vec<f64> = (0..classes)
        .map(|c| params[c * w..(c + 1) * w].iter().zip(xa).map(|(a, v)| a * v).sum::<f64>())
        .collect();
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Solves `a · x = b` by Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            let pivot_row = a[col].clone();
            for (v, p) in a[row][col..].iter_mut().zip(&pivot_row[col..]) {
                *v -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

impl ConvexSoftmax {
    fn objective(params: &[f64], data: &[(Vec<f64>, usize)], classes: usize, l2: f64) -> f64 {
        let n = data.len() as f64;
        let ce: f64 = data
            .iter()
            .map(|(xa, y)| -softmax_probs(params, xa, classes)[*y].ln())
            .sum::<f64>()
            / n;
        ce + 0.5 * l2 * params.iter().map(|v| v * v).sum::<f64>()
    }

    pub fn fit(examples: &[(Vec<f64>, usize)], dim: usize, classes: usize, l2: f64) -> Self {
        let data: Vec<(Vec<f64>, usize)> = examples.iter().map(|(x, y)| (augmented(x), *y)).collect();
        let w = dim + 1;
        let np = classes * w;
        let n = data.len() as f64;
        let mut params = vec![0.0; np];
        for _ in 0..100 {
            let mut grad: Vec<f64> = params.iter().map(|v| l2 * v).collect();
            let mut hess = vec![vec![0.0; np]; np];
            for (i, row) in hess.iter_mut().enumerate() {
                row[i] = l2;
            }
            for (xa, y) in &data {
                let p = softmax_probs(&params, xa, classes);
                for c in 0..classes {
                    let r = p[c] - if c == *y { 1.0 } else { 0.0 };
                    for j in 0..w {
                        grad[c * w + j] += r * xa[j] / n;
                    }
                    for k in 0..classes {
                        let s = p[c] * (if c == k { 1.0 } else { 0.0 } - p[k]) / n;
                        for j in 0..w {
                            for l in 0..w {
                                hess[c * w + j][k * w + l] += s * xa[j] * xa[l];
                            }
                        }
                    }
                }
            }
            if grad.iter().map(|g| g * g).sum::<f64>().sqrt() < 1e-11 {
                break;
            }
            let step = solve(hess, grad);
            let f0 = Self::objective(&params, &data, classes, l2);
            let mut t = 1.0;
            loop {
                let trial: Vec<f64> = params.iter().zip(&step).map(|(p, s)| p - t * s).collect();
                if Self::objective(&trial, &data, classes, l2) <= f0 || t < 1e-12 {
                    params = trial;
                    break;
                }
                t *= 0.5;
            }
        }
        Self { params, dim, classes }
    }

    pub fn predict(&self, x: &[f64]) -> Vec<f64> {
        softmax_probs(&self.params, &augmented(x), self.classes)
    }

    /// Weights (class-major) and bias, split for building a linear head.
    pub fn layer_parts(&self) -> (Vec<f64>, Vec<f64>) {
        let w = self.dim + 1;
        let mut weights = Vec::with_capacity(self.classes * self.dim);
        let mut bias = Vec::with_capacity(self.classes);
        for c in 0..self.classes {
            weights.extend_from_slice(&self.params[c * w..c * w + self.dim]);
            bias.push(self.params[c * w + self.dim]);
        }
        (weights, bias)
    }

    pub fn mean_entropy(&self, eval: &[Vec<f64>]) -> f64 {
        eval.iter()
            .map(|x| -self.predict(x).iter().filter(|&&p| p > 0.0).map(|p| p * p.ln()).sum::<f64>())
            .sum::<f64>()
            / eval.len() as f64
    }
}

/// Information gain of each candidate under full retraining:
/// `H(L) − Σ_c p(c|x) · H(L ∪ {(x, c)})`.
pub fn retrained_information_gain(
    labeled: &[(Vec<f64>, usize)],
    candidates: &[Vec<f64>],
    eval: &[Vec<f64>],
    classes: usize,
    l2: f64,
) -> (ConvexSoftmax, Vec<f64>) {
    let dim = candidates[0].len();
    let base = ConvexSoftmax::fit(labeled, dim, classes, l2);
    let h1 = base.mean_entropy(eval);
    let gains = candidates
        .iter()
        .map(|x| {
            let p = base.predict(x);
            let expected: f64 = (0..classes)
                .map(|c| {
                    let mut grown = labeled.to_vec();
                    grown.push((x.clone(), c));
                    p[c] * ConvexSoftmax::fit(&grown, dim, classes, l2).mean_entropy(eval)
                })
                .sum();
            h1 - expected
        })
        .collect();
    (base, gains)
}

pub fn gaussian_vec(rng: &mut impl Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let z: f64 = rng.sample(rand_distr::StandardNormal);
            z * scale
        })
        .collect()
}
