//! Reference solvers shared by the solver tests and the acceptance suite.
#![allow(dead_code)]

use limeaudit_core::rng::rng_from_seed;
use limeaudit_core::Matrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub struct Instance {
    pub x: Matrix,
    pub y: Vec<f64>,
    pub w: Vec<f64>,
}

pub fn random_instance(seed: u64, n: usize, p: usize) -> Instance {
    let mut rng = rng_from_seed(seed);
    let data: Vec<f64> = (0..n * p).map(|_| StandardNormal.sample(&mut rng)).collect();
    let x = Matrix::from_vec(n, p, data).unwrap();
    let beta: Vec<f64> = (0..p)
        .map(|_| if rng.random::<f64>() < 0.4 { rng.random_range(-2.0..2.0) } else { 0.0 })
        .collect();
    let y = x
        .row_iter()
        .map(|r| r.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>() + 0.3 * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let w = (0..n)
        .map(|_| if rng.random::<f64>() < 0.05 { 0.0 } else { rng.random::<f64>() })
        .collect();
    Instance { x, y, w }
}

/// λ above which every coefficient is zero, from weighted centering.
pub fn lambda_max(inst: &Instance) -> f64 {
    let total: f64 = inst.w.iter().sum();
    let ybar = inst.w.iter().zip(&inst.y).map(|(w, y)| w * y).sum::<f64>() / total;
    (0..inst.x.cols())
        .map(|j| {
            let xj = inst.x.column(j);
            let xbar = inst.w.iter().zip(&xj).map(|(w, v)| w * v).sum::<f64>() / total;
            let g: f64 = (0..xj.len()).map(|i| inst.w[i] * (xj[i] - xbar) * (inst.y[i] - ybar)).sum();
            (g / total).abs()
        })
        .fold(0.0, f64::max)
}

/// Accelerated proximal gradient with adaptive restart on the joint
/// (intercept, β) vector, operating directly on the rows.
pub fn ista_oracle(inst: &Instance, lambda: f64) -> (Vec<f64>, f64) {
    let (n, p) = (inst.x.rows(), inst.x.cols());
    let total: f64 = inst.w.iter().sum();
    let apply = |theta: &[f64]| -> Vec<f64> {
        // gradient of the smooth part: Aᵀ W (Aθ − y) / Σw with A = [1 X]
        let mut g = vec![0.0; p + 1];
        for i in 0..n {
            let row = inst.x.row(i);
            let r = theta[0] + row.iter().zip(&theta[1..]).map(|(a, b)| a * b).sum::<f64>() - inst.y[i];
            let wr = inst.w[i] * r / total;
            g[0] += wr;
            for j in 0..p {
                g[j + 1] += wr * row[j];
            }
        }
        g
    };
    // Lipschitz constant by power iteration on AᵀWA / Σw
    let mut v = vec![1.0; p + 1];
    let mut lip = 0.0;
    for _ in 0..200 {
        let mut av = vec![0.0; p + 1];
        for i in 0..n {
            let row = inst.x.row(i);
            let s = v[0] + row.iter().zip(&v[1..]).map(|(a, b)| a * b).sum::<f64>();
            let ws = inst.w[i] * s / total;
            av[0] += ws;
            for j in 0..p {
                av[j + 1] += ws * row[j];
            }
        }
        let norm = av.iter().map(|a| a * a).sum::<f64>().sqrt();
        lip = norm / v.iter().map(|a| a * a).sum::<f64>().sqrt();
        v = av.iter().map(|a| a / norm).collect();
    }
    let step = 1.0 / (lip * 1.01);
    let prox = |z: &[f64]| -> Vec<f64> {
        let mut out = z.to_vec();
        for b in &mut out[1..] {
            *b = b.signum() * (b.abs() - step * lambda).max(0.0);
        }
        out
    };
    let mut theta = vec![0.0; p + 1];
    let mut momentum = theta.clone();
    let mut t = 1.0f64;
    for _ in 0..400_000 {
        let g = apply(&momentum);
        let z: Vec<f64> = momentum.iter().zip(&g).map(|(m, gi)| m - step * gi).collect();
        let next = prox(&z);
        let change = next.iter().zip(&theta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let restart = (0..=p).map(|j| (momentum[j] - next[j]) * (next[j] - theta[j])).sum::<f64>() > 0.0;
        if restart {
            momentum = next.clone();
            t = 1.0;
        } else {
            momentum = (0..=p).map(|j| next[j] + (t - 1.0) / t_next * (next[j] - theta[j])).collect();
            t = t_next;
        }
        theta = next;
        if change < 1e-14 {
            break;
        }
    }
    (theta[1..].to_vec(), theta[0])
}

/// Best size-`k` subset by weighted residual sum of squares, found by
/// enumerating every combination.
pub fn best_subset(x: &Matrix, y: &[f64], w: &[f64], k: usize) -> Vec<usize> {
    fn combos(p: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for j in start..p {
            cur.push(j);
            combos(p, k, j + 1, cur, out);
            cur.pop();
        }
    }
    let mut all = Vec::new();
    combos(x.cols(), k, 0, &mut Vec::new(), &mut all);
    let mut best = (f64::INFINITY, Vec::new());
    for subset in all {
        let (coef, b0) = qr_wls(&x.select_columns(&subset), y, w);
        let rss: f64 = (0..x.rows())
            .map(|i| {
                let pred = b0 + subset.iter().zip(&coef).map(|(&j, c)| x.get(i, j) * c).sum::<f64>();
                w[i] * (y[i] - pred).powi(2)
            })
            .sum();
        if rss < best.0 {
            best = (rss, subset);
        }
    }
    best.1
}

/// Weighted least squares with intercept through a Householder QR of
/// `√w · [1 X]`.
pub fn qr_wls(x: &Matrix, y: &[f64], w: &[f64]) -> (Vec<f64>, f64) {
    let (n, p) = (x.rows(), x.cols() + 1);
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let s = w[i].sqrt();
            std::iter::once(s).chain(x.row(i).iter().map(|v| v * s)).collect()
        })
        .collect();
    let mut b: Vec<f64> = (0..n).map(|i| y[i] * w[i].sqrt()).collect();
    for col in 0..p {
        let norm = (col..n).map(|i| a[i][col].powi(2)).sum::<f64>().sqrt();
        let alpha = if a[col][col] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (col..n).map(|i| a[i][col]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|t| t * t).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for c in col..p {
            let d: f64 = (col..n).map(|i| v[i - col] * a[i][c]).sum::<f64>() * 2.0 / vnorm2;
            for i in col..n {
                a[i][c] -= d * v[i - col];
            }
        }
        let d: f64 = (col..n).map(|i| v[i - col] * b[i]).sum::<f64>() * 2.0 / vnorm2;
        for i in col..n {
            b[i] -= d * v[i - col];
        }
    }
    let mut theta = vec![0.0; p];
    for r in (0..p).rev() {
        let s: f64 = ((r + 1)..p).map(|c| a[r][c] * theta[c]).sum();
        theta[r] = (b[r] - s) / a[r][r];
    }
    (theta[1..].to_vec(), theta[0])
}

/// Planted-support regression: p = 8, three active coefficients of magnitude
/// in [0.5, 2), noise σ = 0.05, n = 500, weights in [0.1, 1). Returns the
/// instance and its sorted support.
pub fn planted_instance(seed: u64) -> (Instance, Vec<usize>) {
    let mut rng = rng_from_seed(seed);
    let (n, p) = (500, 8);
    let mut support: Vec<usize> = rand::seq::index::sample(&mut rng, p, 3).into_vec();
    support.sort_unstable();
    let mut beta = vec![0.0; p];
    for &j in &support {
        let mag: f64 = rng.random_range(0.5..2.0);
        beta[j] = if rng.random::<bool>() { mag } else { -mag };
    }
    let data: Vec<f64> = (0..n * p).map(|_| StandardNormal.sample(&mut rng)).collect();
    let x = Matrix::from_vec(n, p, data).unwrap();
    let y: Vec<f64> = x
        .row_iter()
        .map(|r| r.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>() + 0.05 * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
    (Instance { x, y, w }, support)
}
