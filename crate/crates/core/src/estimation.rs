//! Maximum-likelihood fits of support-point locations and of θ.

use serde::{Deserialize, Serialize};

use crate::basis::Basis;
use crate::error::{Error, Result};
use crate::error_models::ErrorModel;
use crate::linalg::{spd_inverse, Matrix, Vector};

const GRID_POINTS: usize = 512;
const SEEDS: usize = 3;
const MAX_NEWTON: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub theta_hat: Vec<f64>,
    /// Fitted location at each distinct basis row, in order of first appearance.
    pub eta_hat: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub final_gradient_norm: f64,
}

/// Tolerance on the group score for a point to count as stationary.
pub fn stationarity_tol(model: &ErrorModel, count: usize) -> f64 {
    1e-8 * (1.0 + count as f64) / model.scale()
}

/// Score tolerance for one support group at `eta`, widened by the score
/// change across the few-ulp bracket the root finder can resolve.
pub fn group_stationarity_tol(model: &ErrorModel, ys: &[f64], eta: f64) -> f64 {
    let curvature: f64 = ys.iter().map(|&y| model.info_kernel(y - eta).abs()).sum();
    let resolution = 8.0 * f64::EPSILON * eta.abs().max(model.scale());
    stationarity_tol(model, ys.len()) + curvature * resolution
}

fn group_loglik(model: &ErrorModel, ys: &[f64], eta: f64) -> f64 {
    ys.iter().map(|&y| model.log_kernel(y - eta)).sum()
}

fn group_score(model: &ErrorModel, ys: &[f64], eta: f64) -> (f64, f64) {
    ys.iter().fold((0.0, 0.0), |(s, i), &y| {
        let r = y - eta;
        (s + model.score_kernel(r), i + model.info_kernel(r))
    })
}

/// Safeguarded Newton on the score inside a bracket with `S(lo) > 0 > S(hi)`.
fn polish(model: &ErrorModel, ys: &[f64], mut lo: f64, mut hi: f64) -> Result<f64> {
    let tol = 0.01 * stationarity_tol(model, ys.len());
    let mut x = 0.5 * (lo + hi);
    for _ in 0..MAX_NEWTON {
        let (s, info) = group_score(model, ys, x);
        if s.abs() <= tol {
            return Ok(x);
        }
        if s > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x + s / info;
        let next = if info > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if next == x || hi - lo <= 4.0 * f64::EPSILON * x.abs().max(model.scale()) {
            return Ok(x);
        }
        x = next;
    }
    Err(Error::Numeric(format!(
        "location MLE did not converge in {MAX_NEWTON} Newton steps (bracket [{lo}, {hi}])"
    )))
}

/// Global maximiser of the group log-likelihood for a location family.
///
/// The log-likelihood is scanned on a 512-point grid over
/// `[min(y) - τ, max(y) + τ]`; the three best grid-local maxima are polished
/// by bracketed Newton and the highest polished point wins.
pub fn mle_location(model: &ErrorModel, responses: &[f64]) -> Result<f64> {
    if model.is_hetero() {
        return Err(Error::NotApplicable(
            "the heteroscedastic law needs precisions; use weighted_location".into(),
        ));
    }
    if responses.is_empty() {
        return Err(Error::InvalidInput("location MLE needs at least one response".into()));
    }
    if responses.iter().any(|y| !y.is_finite()) {
        return Err(Error::InvalidInput("responses must be finite".into()));
    }
    if model.is_homoscedastic_normal() {
        return Ok(responses.iter().sum::<f64>() / responses.len() as f64);
    }

    let tau = model.scale();
    let (min, max) = responses
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &y| (a.min(y), b.max(y)));
    let (a, b) = (min - tau, max + tau);
    let step = (b - a) / (GRID_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..GRID_POINTS).map(|k| a + step * k as f64).collect();
    let values: Vec<f64> = grid.iter().map(|&e| group_loglik(model, responses, e)).collect();

    let mut peaks: Vec<usize> = (0..GRID_POINTS)
        .filter(|&k| {
            let left = k == 0 || values[k] >= values[k - 1];
            let right = k + 1 == GRID_POINTS || values[k] >= values[k + 1];
            left && right
        })
        .collect();
    peaks.sort_by(|&i, &j| values[j].total_cmp(&values[i]).then(i.cmp(&j)));
    peaks.truncate(SEEDS);

    let score_at = |k: usize| group_score(model, responses, grid[k]).0;
    let mut best: Option<(f64, f64)> = None;
    for k in peaks {
        // Walk to the nearest sign change of the score; the grid ends always
        // have S(a) > 0 and S(b) < 0.
        let (lo, hi) = if score_at(k) >= 0.0 {
            let mut j = k;
            while j + 1 < GRID_POINTS && score_at(j + 1) > 0.0 {
                j += 1;
            }
            (grid[j], grid[(j + 1).min(GRID_POINTS - 1)])
        } else {
            let mut j = k;
            while j > 0 && score_at(j - 1) < 0.0 {
                j -= 1;
            }
            (grid[j.saturating_sub(1)], grid[j])
        };
        let x = polish(model, responses, lo, hi)?;
        let l = group_loglik(model, responses, x);
        // Equal maxima (e.g. two well-separated Cauchy points) resolve to the
        // leftmost, which keeps the fit shift-equivariant.
        let better = best.is_none_or(|(bx, bl)| {
            let tie = (l - bl).abs() <= 1e-10 * (1.0 + bl.abs());
            if tie {
                x < bx
            } else {
                l > bl
            }
        });
        if better {
            best = Some((x, l));
        }
    }
    best.map(|(x, _)| x)
        .ok_or_else(|| Error::Numeric("location likelihood has no finite maximiser".into()))
}

/// Precision-weighted mean, the exact location MLE under known precisions.
pub fn weighted_location(responses: &[f64], precisions: &[f64]) -> Result<f64> {
    if responses.is_empty() || responses.len() != precisions.len() {
        return Err(Error::Dimension {
            context: "weighted location",
            expected: responses.len(),
            got: precisions.len(),
        });
    }
    let (num, den) = responses
        .iter()
        .zip(precisions)
        .fold((0.0, 0.0), |(n, d), (&y, &a)| (n + a * y, d + a));
    Ok(num / den)
}

/// One observation for a θ fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation<'a> {
    pub x: &'a [f64],
    pub response: f64,
    pub precision: Option<f64>,
}

struct Grouped {
    rows: Vec<Vector>,
    members: Vec<Vec<usize>>,
}

fn group_rows(basis: Basis, obs: &[Observation<'_>]) -> Result<(Grouped, Vec<Vector>)> {
    let mut rows: Vec<Vector> = Vec::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    let mut per_obs = Vec::with_capacity(obs.len());
    for (j, o) in obs.iter().enumerate() {
        let f = basis.row(o.x)?;
        match rows.iter().position(|r| *r == f) {
            Some(k) => members[k].push(j),
            None => {
                rows.push(f.clone());
                members.push(vec![j]);
            }
        }
        per_obs.push(f);
    }
    Ok((Grouped { rows, members }, per_obs))
}

fn solve_square(rows: &[Vector], rhs: &[f64]) -> Result<Vector> {
    let p = rows.len();
    let x = Matrix::from_fn(p, p, |i, j| rows[i][j]);
    x.lu()
        .solve(&Vector::from_column_slice(rhs))
        .ok_or_else(|| Error::Singular("saturated design matrix is singular".into()))
}

/// MLE of θ for `y = f(x)ᵀθ + ε`.
///
/// Known precisions give an exact weighted least-squares solution. Saturated
/// designs (as many distinct rows as parameters) map per-group location MLEs
/// through the inverse design matrix. Anything else runs Fisher scoring with
/// backtracking from the least-squares start.
pub fn mle_theta(model: &ErrorModel, basis: Basis, observations: &[Observation<'_>]) -> Result<FitResult> {
    if observations.is_empty() {
        return Err(Error::InvalidInput("no observations to fit".into()));
    }
    let (grouped, rows) = group_rows(basis, observations)?;
    let p = rows[0].len();
    let n = observations.len();

    if model.is_hetero() {
        let mut xtx = Matrix::zeros(p, p);
        let mut xty = Vector::zeros(p);
        for (f, o) in rows.iter().zip(observations) {
            let a = o.precision.ok_or_else(|| {
                Error::InvalidInput("heteroscedastic fit needs a precision for every response".into())
            })?;
            xtx += f * f.transpose() * a;
            xty += f * (a * o.response);
        }
        let theta = spd_inverse(&xtx, "weighted design matrix")? * xty;
        let eta_hat = grouped.rows.iter().map(|f| f.dot(&theta)).collect();
        return Ok(FitResult {
            theta_hat: theta.iter().copied().collect(),
            eta_hat,
            iterations: 1,
            converged: true,
            final_gradient_norm: 0.0,
        });
    }

    if grouped.rows.len() == p {
        let eta_hat = grouped
            .members
            .iter()
            .map(|m| {
                let ys: Vec<f64> = m.iter().map(|&j| observations[j].response).collect();
                mle_location(model, &ys)
            })
            .collect::<Result<Vec<f64>>>()?;
        let theta = solve_square(&grouped.rows, &eta_hat)?;
        let grad = theta_gradient(model, &rows, observations, &theta);
        return Ok(FitResult {
            theta_hat: theta.iter().copied().collect(),
            eta_hat,
            iterations: 1,
            converged: true,
            final_gradient_norm: grad.norm(),
        });
    }

    fisher_scoring(model, &grouped, &rows, observations, n, p)
}

fn theta_gradient(model: &ErrorModel, rows: &[Vector], obs: &[Observation<'_>], theta: &Vector) -> Vector {
    rows.iter()
        .zip(obs)
        .fold(Vector::zeros(theta.len()), |acc, (f, o)| {
            acc + f * model.score_kernel(o.response - f.dot(theta))
        })
}

fn theta_loglik(model: &ErrorModel, rows: &[Vector], obs: &[Observation<'_>], theta: &Vector) -> f64 {
    rows.iter()
        .zip(obs)
        .map(|(f, o)| model.log_kernel(o.response - f.dot(theta)))
        .sum()
}

fn fisher_scoring(
    model: &ErrorModel,
    grouped: &Grouped,
    rows: &[Vector],
    obs: &[Observation<'_>],
    n: usize,
    p: usize,
) -> Result<FitResult> {
    let xtx = rows.iter().fold(Matrix::zeros(p, p), |acc, f| acc + f * f.transpose());
    let xtx_inv = spd_inverse(&xtx, "design matrix")?;
    let xty = rows
        .iter()
        .zip(obs)
        .fold(Vector::zeros(p), |acc, (f, o)| acc + f * o.response);
    let mut theta = &xtx_inv * xty;
    let scoring = xtx_inv / model.elemental_info();
    let tol = stationarity_tol(model, n);

    let mut ll = theta_loglik(model, rows, obs, &theta);
    let mut grad = theta_gradient(model, rows, obs, &theta);
    let mut iterations = 0;
    while grad.norm() > tol && iterations < MAX_NEWTON {
        iterations += 1;
        // Newton when the observed information is positive definite, Fisher scoring otherwise.
        let observed = rows.iter().zip(obs).fold(Matrix::zeros(p, p), |acc, (f, o)| {
            acc + f * f.transpose() * model.info_kernel(o.response - f.dot(&theta))
        });
        let dir = match observed.cholesky() {
            Some(ch) => ch.solve(&grad),
            None => &scoring * &grad,
        };
        let mut t = 1.0;
        loop {
            let cand = &theta + &dir * t;
            let cand_ll = theta_loglik(model, rows, obs, &cand);
            if cand_ll >= ll || t < 1e-12 {
                theta = cand;
                ll = cand_ll;
                break;
            }
            t *= 0.5;
        }
        grad = theta_gradient(model, rows, obs, &theta);
    }
    let norm = grad.norm();
    if norm > tol {
        return Err(Error::Numeric(format!(
            "Fisher scoring did not converge after {iterations} iterations (gradient norm {norm:.3e})"
        )));
    }
    Ok(FitResult {
        eta_hat: grouped.rows.iter().map(|f| f.dot(&theta)).collect(),
        theta_hat: theta.iter().copied().collect(),
        iterations,
        converged: true,
        final_gradient_norm: norm,
    })
}
