//! Weighted LASSO by cyclic coordinate descent, and the K-LASSO selection
//! procedure used as the interpretable surrogate.
//!
//! The solver minimises
//!
//! ```text
//! (1 / Σw) · Σᵢ wᵢ (yᵢ − b − xᵢᵀβ)² / 2  +  λ ‖β‖₁
//! ```
//!
//! over an unpenalised intercept `b` and coefficients `β`. The intercept is
//! profiled out by weighted centering, after which every coordinate update
//! only needs the weighted Gram matrix of the centred columns. Building that
//! matrix costs one pass over the data; the λ path then runs in `O(p²)` per
//! sweep regardless of the sample count.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, cholesky_solve, Matrix};

pub const DEFAULT_TOL: f64 = 1e-7;
pub const DEFAULT_MAX_ITER: usize = 10_000;
pub const DEFAULT_GRID_POINTS: usize = 100;
pub const DEFAULT_MIN_RATIO: f64 = 1e-3;
/// Diagonal added to the refit normal equations when they are singular.
pub const REFIT_RIDGE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoFit {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub lambda: f64,
    /// Indices with a nonzero coefficient, ascending.
    pub active_set: Vec<usize>,
    /// Number of full coordinate sweeps performed.
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KLassoSelection {
    /// Selected feature indices in the order they entered the path.
    pub selected: Vec<usize>,
    /// Weighted least-squares coefficients, aligned with `selected`.
    pub refit_coefficients: Vec<f64>,
    pub refit_intercept: f64,
    pub lambda_at_selection: f64,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WlsFit {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    /// True when the normal equations were singular and the ridge fallback
    /// was used.
    pub ridge_used: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KLassoOptions {
    pub grid_points: usize,
    pub min_ratio: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for KLassoOptions {
    fn default() -> Self {
        KLassoOptions {
            grid_points: DEFAULT_GRID_POINTS,
            min_ratio: DEFAULT_MIN_RATIO,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

#[inline]
pub fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

fn check_inputs(x: &Matrix, y: &[f64], w: &[f64]) -> Result<f64> {
    if x.rows() != y.len() || y.len() != w.len() {
        return Err(Error::arg(format!(
            "dimension mismatch: X has {} rows, y has {}, w has {}",
            x.rows(),
            y.len(),
            w.len()
        )));
    }
    if x.rows() == 0 {
        return Err(Error::arg("no samples"));
    }
    if !x.is_finite() || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::arg("non-finite value in X or y"));
    }
    if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::arg("weights must be finite and nonnegative"));
    }
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return Err(Error::arg("all sample weights are zero"));
    }
    Ok(total)
}

/// Sufficient statistics of a weighted least-squares problem after
/// profiling out the intercept.
#[derive(Debug, Clone)]
struct CenteredProblem {
    p: usize,
    x_mean: Vec<f64>,
    y_mean: f64,
    /// Σ vᵢ (xᵢ − x̄)(xᵢ − x̄)ᵀ with normalised weights v, row-major p×p.
    gram: Vec<f64>,
    /// Σ vᵢ (xᵢ − x̄)(yᵢ − ȳ).
    xty: Vec<f64>,
    /// Σ vᵢ (yᵢ − ȳ)².
    yy: f64,
    /// Rounding floor for correlations: below it a column is treated as
    /// uncorrelated with the target.
    noise_floor: f64,
}

impl CenteredProblem {
    fn new(x: &Matrix, y: &[f64], w: &[f64]) -> Result<Self> {
        let total = check_inputs(x, y, w)?;
        let p = x.cols();
        let mut x_mean = vec![0.0; p];
        let mut y_mean = 0.0;
        for ((row, &yi), &wi) in x.row_iter().zip(y).zip(w) {
            let v = wi / total;
            for (m, &xij) in x_mean.iter_mut().zip(row) {
                *m += v * xij;
            }
            y_mean += v * yi;
        }
        let mut gram = vec![0.0; p * p];
        let mut xty = vec![0.0; p];
        let mut yy = 0.0;
        let mut xc = vec![0.0; p];
        for ((row, &yi), &wi) in x.row_iter().zip(y).zip(w) {
            if wi == 0.0 {
                continue;
            }
            let v = wi / total;
            for j in 0..p {
                xc[j] = row[j] - x_mean[j];
            }
            let yc = yi - y_mean;
            yy += v * yc * yc;
            for j in 0..p {
                let vxj = v * xc[j];
                xty[j] += vxj * yc;
                for k in j..p {
                    gram[j * p + k] += vxj * xc[k];
                }
            }
        }
        for j in 0..p {
            for k in 0..j {
                gram[j * p + k] = gram[k * p + j];
            }
        }
        let y_scale = y.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
        let x_scale = (0..p).fold(0.0, |m: f64, j| m.max(gram[j * p + j].sqrt()));
        Ok(CenteredProblem {
            p,
            x_mean,
            y_mean,
            gram,
            xty,
            yy,
            noise_floor: 1e-12 * y_scale * x_scale,
        })
    }

    /// Smallest λ at which the all-zero solution satisfies the KKT conditions.
    fn lambda_max(&self) -> f64 {
        let lmax = self.xty.iter().fold(0.0, |m: f64, c| m.max(c.abs()));
        if lmax <= self.noise_floor {
            0.0
        } else {
            lmax
        }
    }

    fn objective(&self, beta: &[f64], lambda: f64) -> f64 {
        let p = self.p;
        let mut quad = 0.0;
        for j in 0..p {
            let gj: f64 = (0..p).map(|k| self.gram[j * p + k] * beta[k]).sum();
            quad += beta[j] * gj;
        }
        let lin: f64 = self.xty.iter().zip(beta).map(|(c, b)| c * b).sum();
        let l1: f64 = beta.iter().map(|b| b.abs()).sum();
        0.5 * (self.yy - 2.0 * lin + quad) + lambda * l1
    }

    fn intercept(&self, beta: &[f64]) -> f64 {
        self.y_mean - self.x_mean.iter().zip(beta).map(|(m, b)| m * b).sum::<f64>()
    }

    /// Coordinate descent from the warm start in `beta`. Returns
    /// `(sweeps, converged)`.
    fn solve(
        &self,
        lambda: f64,
        beta: &mut [f64],
        tol: f64,
        max_iter: usize,
        mut trace: Option<&mut Vec<f64>>,
    ) -> (usize, bool) {
        let p = self.p;
        // gb = G·β, kept in sync with every coordinate move
        let mut gb = vec![0.0; p];
        for j in 0..p {
            if beta[j] != 0.0 {
                for k in 0..p {
                    gb[k] += self.gram[k * p + j] * beta[j];
                }
            }
        }
        if let Some(t) = trace.as_deref_mut() {
            t.push(self.objective(beta, lambda));
        }
        for sweep in 1..=max_iter {
            let mut max_delta: f64 = 0.0;
            for j in 0..p {
                let gjj = self.gram[j * p + j];
                let old = beta[j];
                let new = if gjj > 0.0 {
                    let rho = self.xty[j] - gb[j] + gjj * old;
                    soft_threshold(rho, lambda) / gjj
                } else {
                    0.0
                };
                let delta = new - old;
                if delta != 0.0 {
                    beta[j] = new;
                    for k in 0..p {
                        gb[k] += self.gram[k * p + j] * delta;
                    }
                    max_delta = max_delta.max(delta.abs());
                }
            }
            if let Some(t) = trace.as_deref_mut() {
                t.push(self.objective(beta, lambda));
            }
            if max_delta < tol {
                return (sweep, true);
            }
        }
        (max_iter, false)
    }

    fn fit(&self, lambda: f64, beta: Vec<f64>, tol: f64, max_iter: usize) -> LassoFit {
        self.fit_traced(lambda, beta, tol, max_iter, None)
    }

    fn fit_traced(
        &self,
        lambda: f64,
        mut beta: Vec<f64>,
        tol: f64,
        max_iter: usize,
        trace: Option<&mut Vec<f64>>,
    ) -> LassoFit {
        let (iterations, converged) = self.solve(lambda, &mut beta, tol, max_iter, trace);
        let active_set = active_indices(&beta);
        LassoFit {
            intercept: self.intercept(&beta),
            coefficients: beta,
            lambda,
            active_set,
            iterations,
            converged,
        }
    }
}

fn active_indices(beta: &[f64]) -> Vec<usize> {
    beta.iter()
        .enumerate()
        .filter(|(_, b)| **b != 0.0)
        .map(|(j, _)| j)
        .collect()
}

fn check_solver_params(lambda: f64, tol: f64) -> Result<()> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::arg(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    if !(tol > 0.0) {
        return Err(Error::arg(format!("tolerance must be positive, got {tol}")));
    }
    Ok(())
}

/// Weighted LASSO at a single λ, started from zero.
pub fn fit_weighted_lasso(
    x: &Matrix,
    y: &[f64],
    w: &[f64],
    lambda: f64,
    tol: f64,
    max_iter: usize,
) -> Result<LassoFit> {
    check_solver_params(lambda, tol)?;
    let problem = CenteredProblem::new(x, y, w)?;
    Ok(problem.fit(lambda, vec![0.0; x.cols()], tol, max_iter))
}

/// Like [`fit_weighted_lasso`], additionally returning the objective value
/// before the first sweep and after every sweep.
pub fn fit_weighted_lasso_traced(
    x: &Matrix,
    y: &[f64],
    w: &[f64],
    lambda: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(LassoFit, Vec<f64>)> {
    check_solver_params(lambda, tol)?;
    let problem = CenteredProblem::new(x, y, w)?;
    let mut trace = Vec::new();
    let fit = problem.fit_traced(lambda, vec![0.0; x.cols()], tol, max_iter, Some(&mut trace));
    Ok((fit, trace))
}

/// Value of the weighted LASSO objective at `(intercept, coefficients)`,
/// evaluated directly on the data.
pub fn lasso_objective(
    x: &Matrix,
    y: &[f64],
    w: &[f64],
    coefficients: &[f64],
    intercept: f64,
    lambda: f64,
) -> Result<f64> {
    let total = check_inputs(x, y, w)?;
    let loss: f64 = x
        .row_iter()
        .zip(y)
        .zip(w)
        .map(|((row, &yi), &wi)| {
            let r = yi - intercept - crate::linalg::dot(row, coefficients);
            wi * r * r
        })
        .sum();
    let l1: f64 = coefficients.iter().map(|b| b.abs()).sum();
    Ok(0.5 * loss / total + lambda * l1)
}

/// Largest violation of the LASSO optimality conditions for `fit`, computed
/// from the raw data: `|gⱼ| − λ` for inactive and `|gⱼ − λ·sign(βⱼ)|` for
/// active coordinates, where `gⱼ` is the weighted residual correlation of
/// column `j`.
pub fn kkt_violation(x: &Matrix, y: &[f64], w: &[f64], fit: &LassoFit) -> Result<f64> {
    let total = check_inputs(x, y, w)?;
    let p = x.cols();
    let mut g = vec![0.0; p];
    for ((row, &yi), &wi) in x.row_iter().zip(y).zip(w) {
        let r = yi - fit.intercept - crate::linalg::dot(row, &fit.coefficients);
        for j in 0..p {
            g[j] += wi * row[j] * r;
        }
    }
    let mut worst: f64 = 0.0;
    for j in 0..p {
        let gj = g[j] / total;
        let b = fit.coefficients[j];
        let v = if b == 0.0 {
            gj.abs() - fit.lambda
        } else {
            (gj - fit.lambda * b.signum()).abs()
        };
        worst = worst.max(v);
    }
    Ok(worst)
}

/// Weighted least squares on the given columns plus an intercept.
///
/// Singular normal equations (collinear or constant columns) are silently
/// regularised with a [`REFIT_RIDGE`] diagonal.
pub fn wls_refit(x_sub: &Matrix, y: &[f64], w: &[f64]) -> Result<WlsFit> {
    let problem = CenteredProblem::new(x_sub, y, w)?;
    Ok(refit_from_problem(&problem))
}

fn refit_from_problem(problem: &CenteredProblem) -> WlsFit {
    let p = problem.p;
    if p == 0 {
        return WlsFit {
            coefficients: Vec::new(),
            intercept: problem.y_mean,
            ridge_used: false,
        };
    }
    let (coefficients, ridge_used) = match cholesky(&problem.gram, p) {
        Some(l) => (cholesky_solve(&l, p, &problem.xty), false),
        None => {
            let mut a = problem.gram.clone();
            for j in 0..p {
                a[j * p + j] += REFIT_RIDGE;
            }
            let beta = match cholesky(&a, p) {
                Some(l) => cholesky_solve(&l, p, &problem.xty),
                // only all-constant columns end up here
                None => vec![0.0; p],
            };
            (beta, true)
        }
    };
    WlsFit {
        intercept: problem.intercept(&coefficients),
        coefficients,
        ridge_used,
    }
}

fn sub_problem(problem: &CenteredProblem, cols: &[usize]) -> CenteredProblem {
    let p = problem.p;
    let q = cols.len();
    let mut gram = vec![0.0; q * q];
    for (a, &i) in cols.iter().enumerate() {
        for (b, &j) in cols.iter().enumerate() {
            gram[a * q + b] = problem.gram[i * p + j];
        }
    }
    CenteredProblem {
        p: q,
        x_mean: cols.iter().map(|&j| problem.x_mean[j]).collect(),
        y_mean: problem.y_mean,
        gram,
        xty: cols.iter().map(|&j| problem.xty[j]).collect(),
        yy: problem.yy,
        noise_floor: problem.noise_floor,
    }
}

/// Geometric λ grid from `lambda_max` down to `min_ratio · lambda_max`.
pub fn lambda_grid(lambda_max: f64, points: usize, min_ratio: f64) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lambda_max],
        n => {
            let step = min_ratio.ln() / (n - 1) as f64;
            (0..n)
                .map(|i| lambda_max * (step * i as f64).exp())
                .collect()
        }
    }
}

/// K-LASSO with default path options.
pub fn k_lasso_select(x: &Matrix, y: &[f64], w: &[f64], k: usize) -> Result<KLassoSelection> {
    k_lasso_select_with(x, y, w, k, &KLassoOptions::default())
}

/// Selects at most `k` features by walking a warm-started λ path until the
/// active set first reaches `k`, then refits the selected columns by weighted
/// least squares.
pub fn k_lasso_select_with(
    x: &Matrix,
    y: &[f64],
    w: &[f64],
    k: usize,
    opts: &KLassoOptions,
) -> Result<KLassoSelection> {
    if k == 0 {
        return Err(Error::arg("K must be at least 1"));
    }
    let problem = CenteredProblem::new(x, y, w)?;
    let p = problem.p;
    let lambda_max = problem.lambda_max();

    // grid step at which each feature first became active
    let mut entry: Vec<Option<usize>> = vec![None; p];
    let mut beta = vec![0.0; p];
    let mut chosen: Option<(Vec<usize>, f64)> = None;
    let mut last_lambda = lambda_max;

    if lambda_max > 0.0 {
        for (step, &lambda) in lambda_grid(lambda_max, opts.grid_points, opts.min_ratio)
            .iter()
            .enumerate()
        {
            let fit = problem.fit(lambda, beta, opts.tol, opts.max_iter);
            beta = fit.coefficients;
            last_lambda = lambda;
            for &j in &fit.active_set {
                entry[j].get_or_insert(step);
            }
            if fit.active_set.len() >= k {
                let mut ranked = fit.active_set.clone();
                ranked.sort_by(|&a, &b| beta[b].abs().total_cmp(&beta[a].abs()).then(a.cmp(&b)));
                ranked.truncate(k);
                chosen = Some((ranked, lambda));
                break;
            }
        }
    }

    let (mut selected, lambda_at_selection) = chosen.unwrap_or_else(|| {
        let ever: Vec<usize> = (0..p).filter(|&j| entry[j].is_some()).collect();
        (ever, last_lambda)
    });
    selected.sort_by_key(|&j| (entry[j].unwrap_or(usize::MAX), j));
    selected.truncate(k);

    let refit = refit_from_problem(&sub_problem(&problem, &selected));
    Ok(KLassoSelection {
        selected,
        refit_coefficients: refit.coefficients,
        refit_intercept: refit.intercept,
        lambda_at_selection,
        k,
    })
}
