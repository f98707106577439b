//! Relevant-subset information and the u/v decomposition.
//!
//! For a location family the within-group residual configuration is
//! ancillary. Conditioning on it, the location shift `t = η - η̂` has density
//! proportional to `Π f(yⱼ - η̂ - t)`, and the relevant-subset information
//! `h` is the conditional mean of the observed information under that
//! density. `g = h / μ` has expectation equal to the group size.

use serde::{Deserialize, Serialize};

use crate::basis::Basis;
use crate::designs::{fisher_information, Design};
use crate::error::{Error, Result};
use crate::error_models::ErrorModel;
use crate::estimation::group_stationarity_tol;
use crate::linalg::{spd_inverse, Matrix, Vector};
use crate::quadrature::Quadrature;

/// Responses observed at one support point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportGroup {
    pub support_index: usize,
    pub responses: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precisions: Option<Vec<f64>>,
    pub eta_hat: f64,
}

impl SupportGroup {
    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoSummary {
    pub eta_hat: Vec<f64>,
    pub h: Vec<f64>,
    pub g: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    #[serde(with = "crate::linalg::rows")]
    pub relevant_info: Matrix,
    #[serde(with = "crate::linalg::rows")]
    pub fisher_info: Matrix,
}

const SHIFT_BREAKS: [f64; 6] = [0.0, 1.0, 3.0, 8.0, 20.0, 50.0];
const H_REL_TOL: f64 = 1e-7;

/// Relevant-subset information about one support point's location.
pub fn relevant_info_eta(model: &ErrorModel, group: &SupportGroup) -> Result<f64> {
    if group.is_empty() {
        return Err(Error::Precondition("relevant information needs a non-empty group".into()));
    }
    if model.is_hetero() {
        let a = group.precisions.as_ref().ok_or_else(|| {
            Error::InvalidInput("the heteroscedastic law needs observed precisions".into())
        })?;
        if a.len() != group.len() {
            return Err(Error::Dimension {
                context: "group precisions",
                expected: group.len(),
                got: a.len(),
            });
        }
        return Ok(a.iter().sum());
    }
    if group.precisions.is_some() {
        return Err(Error::InvalidInput("precisions are only defined for the heteroscedastic law".into()));
    }
    if model.is_homoscedastic_normal() {
        return Ok(group.len() as f64 * model.info_kernel(0.0));
    }

    let residuals: Vec<f64> = group.responses.iter().map(|y| y - group.eta_hat).collect();
    if residuals.iter().any(|r| !r.is_finite()) {
        return Err(Error::InvalidInput("responses and eta_hat must be finite".into()));
    }
    let score: f64 = residuals.iter().map(|&r| model.score_kernel(r)).sum();
    let tol = group_stationarity_tol(model, &group.responses, group.eta_hat);
    if score.abs() > tol {
        return Err(Error::Precondition(format!(
            "eta_hat is not stationary: group score {score:.3e} exceeds {tol:.3e}"
        )));
    }

    let tau = model.scale();
    let base: f64 = residuals.iter().map(|&r| model.log_kernel(r)).sum();
    // A sharply peaked likelihood has most of its mass well inside one scale
    // unit, so the panels also follow the curvature at the fit.
    let curvature: f64 = residuals.iter().map(|&r| model.info_kernel(r)).sum();
    let width = 1.0 / curvature.sqrt();
    let mut half: Vec<f64> = SHIFT_BREAKS[1..].iter().map(|b| b * tau).collect();
    if width.is_finite() && width < 0.5 * tau {
        half.extend(SHIFT_BREAKS[1..].iter().map(|b| b * width).filter(|&x| x < 0.5 * tau));
    }
    half.sort_by(f64::total_cmp);
    let breaks: Vec<f64> = half
        .iter()
        .rev()
        .map(|x| -x)
        .chain(std::iter::once(0.0))
        .chain(half.iter().copied())
        .collect();
    let quad = Quadrature {
        rel_tol: H_REL_TOL,
        abs_tol: 0.0,
        max_segments: 20_000,
    };
    let est = quad.integrate_vec(
        |t| {
            let (mut log_w, mut info) = (-base, 0.0);
            for &r in &residuals {
                log_w += model.log_kernel(r - t);
                info += model.info_kernel(r - t);
            }
            let w = log_w.exp();
            [info * w, w]
        },
        &breaks,
    )?;
    let [num, den] = est.value;
    if !(den > 0.0) {
        return Err(Error::Numeric("conditional density integrated to zero".into()));
    }
    let h = num / den;
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::Numeric(format!("relevant information is not positive: {h}")));
    }
    Ok(h)
}

/// `g = h / μ`.
pub fn invariant_info(h: f64, mu: f64) -> Result<f64> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidInput(format!("elemental information must be positive, got {mu}")));
    }
    Ok(h / mu)
}

/// `uᵢ = gᵢ - wᵢΣg` and `vᵢ = wᵢ(Σg - n)`.
pub fn uv_statistics(g: &[f64], w: &[f64], n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if g.len() != w.len() {
        return Err(Error::Dimension {
            context: "u/v statistics",
            expected: w.len(),
            got: g.len(),
        });
    }
    if w.iter().any(|&x| !(x > 0.0)) || (w.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput("weights must be positive and sum to 1".into()));
    }
    let total: f64 = g.iter().sum();
    let mut u: Vec<f64> = g.iter().zip(w).map(|(gi, wi)| gi - wi * total).collect();
    // Remove rounding drift so that Σu = 0 to machine precision.
    let drift = u.iter().sum::<f64>();
    let wsum: f64 = w.iter().sum();
    for (ui, wi) in u.iter_mut().zip(w) {
        *ui -= drift * wi / wsum;
    }
    let v = w.iter().map(|wi| wi * (total - n as f64)).collect();
    Ok((u, v))
}

/// `F = nμ Σ wᵢ f(xᵢ)f(xᵢ)ᵀ`, with its normalised form `M = F / (nμ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherMatrix {
    pub fisher: Matrix,
    pub normalised: Matrix,
    pub condition_number: f64,
    /// Set when the condition number exceeds 1e12.
    pub singular: bool,
}

pub fn fisher_matrix(design: &Design, basis: Basis, model: &ErrorModel) -> Result<FisherMatrix> {
    let fisher = fisher_information(design, basis, model)?;
    let normalised = &fisher / (design.n as f64 * model.elemental_info());
    let condition_number = crate::linalg::condition_number(&fisher);
    Ok(FisherMatrix {
        singular: !(condition_number <= crate::linalg::SINGULAR_CONDITION),
        fisher,
        normalised,
        condition_number,
    })
}

/// `H = Σ hᵢ f(xᵢ)f(xᵢ)ᵀ`.
pub fn relevant_info_matrix(h: &[f64], design: &Design, basis: Basis) -> Result<Matrix> {
    if h.len() != design.len() {
        return Err(Error::Dimension {
            context: "relevant information",
            expected: design.len(),
            got: h.len(),
        });
    }
    if h.iter().any(|&x| !(x >= 0.0)) {
        return Err(Error::InvalidInput("relevant information must be non-negative".into()));
    }
    crate::designs::moment_matrix(&design.rows(basis)?, h)
}

/// Leading-order `n²cᵀ(E[H⁻¹] - F⁻¹)c` implied by given u and v covariances:
/// `tr{D(Var u + Var v)} / (nμ)` with `Dᵢⱼ = rᵢrⱼsᵢⱼ`,
/// `rᵢ = f(xᵢ)ᵀM⁻¹c`, `sᵢⱼ = f(xᵢ)ᵀM⁻¹f(xⱼ)`.
pub fn asymptotic_gap(
    design: &Design,
    basis: Basis,
    model: &ErrorModel,
    contrast: &[f64],
    var_u: &Matrix,
    var_v: &Matrix,
) -> Result<f64> {
    let d = design.len();
    for m in [var_u, var_v] {
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::Dimension {
                context: "u/v covariance",
                expected: d,
                got: m.nrows(),
            });
        }
    }
    let rows = design.rows(basis)?;
    let c = Vector::from_column_slice(contrast);
    if c.len() != rows[0].len() {
        return Err(Error::Dimension {
            context: "contrast",
            expected: rows[0].len(),
            got: c.len(),
        });
    }
    let m_inv = spd_inverse(&design.moment_matrix(basis)?, "normalised information")?;
    let r: Vec<f64> = rows.iter().map(|f| f.dot(&(&m_inv * &c))).collect();
    let dm = Matrix::from_fn(d, d, |i, j| r[i] * r[j] * rows[i].dot(&(&m_inv * &rows[j])));
    let total = var_u + var_v;
    Ok((dm * total).trace() / (design.n as f64 * model.elemental_info()))
}

/// Standardised ancillary contribution `(i/μ - 1 - ν₁₁ l̇/μ) / γ`.
pub fn q_statistic(model: &ErrorModel, residual: f64) -> Result<f64> {
    let m = model.moment_table();
    if m.gamma_alt == 0.0 {
        return Err(Error::NotApplicable("q is undefined when the information is constant".into()));
    }
    let i = model.observed_info(residual)?;
    let s = model.score(residual)?;
    Ok((i / m.mu - 1.0 - m.nu_11 * s / m.mu) / m.gamma_alt)
}

/// Per-group fit and information for the observed data.
pub fn summarize(
    model: &ErrorModel,
    design: &Design,
    basis: Basis,
    groups: &[SupportGroup],
) -> Result<InfoSummary> {
    if groups.len() != design.len() {
        return Err(Error::Dimension {
            context: "support groups",
            expected: design.len(),
            got: groups.len(),
        });
    }
    let mu = model.elemental_info();
    let h = groups
        .iter()
        .map(|grp| relevant_info_eta(model, grp))
        .collect::<Result<Vec<_>>>()?;
    let g = h.iter().map(|&x| invariant_info(x, mu)).collect::<Result<Vec<_>>>()?;
    let (u, v) = uv_statistics(&g, &design.weights, design.n)?;
    Ok(InfoSummary {
        eta_hat: groups.iter().map(|grp| grp.eta_hat).collect(),
        relevant_info: relevant_info_matrix(&h, design, basis)?,
        fisher_info: fisher_information(design, basis, model)?,
        h,
        g,
        u,
        v,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::mle_location;

    fn group(model: &ErrorModel, ys: &[f64]) -> SupportGroup {
        SupportGroup {
            support_index: 0,
            responses: ys.to_vec(),
            precisions: None,
            eta_hat: mle_location(model, ys).unwrap(),
        }
    }

    #[test]
    fn hetero_sum_of_precisions() {
        let m = ErrorModel::hetero_normal_gamma(0.25, 0.25).unwrap();
        let grp = SupportGroup {
            support_index: 0,
            responses: vec![0.3, -0.2],
            precisions: Some(vec![0.8, 1.1]),
            eta_hat: 0.0,
        };
        assert!((relevant_info_eta(&m, &grp).unwrap() - 1.9).abs() < 1e-15);
    }

    #[test]
    fn normal_group_is_count() {
        let m = ErrorModel::generalized_normal(2.0, 1.0).unwrap();
        assert_eq!(relevant_info_eta(&m, &group(&m, &[0.1, 2.0, -4.0])).unwrap(), 3.0);
    }

    #[test]
    fn cauchy_matches_trapezoid_oracle() {
        let m = ErrorModel::cauchy(1.0).unwrap();
        let grp = group(&m, &[-0.6, 0.0, 0.6]);
        assert!(grp.eta_hat.abs() < 1e-12);
        // Trapezoid rule on [-50, 50] with 2e6 nodes.
        const FROZEN: f64 = 2.546_245_295_862_658_7;
        let h = relevant_info_eta(&m, &grp).unwrap();
        assert!((h - FROZEN).abs() / FROZEN < 1e-6, "{h}");
    }

    #[test]
    fn score_squared_identity() {
        // ∫ i p = ∫ l̇² p for the conditional density p ∝ exp(l).
        let m = ErrorModel::generalized_normal(10.0, 1.0).unwrap();
        let ys = [0.2, -0.5, 0.9, 0.4];
        let grp = group(&m, &ys);
        let h = relevant_info_eta(&m, &grp).unwrap();
        let q = Quadrature::with_rel_tol(1e-10);
        let base: f64 = ys.iter().map(|y| m.log_kernel(y - grp.eta_hat)).sum();
        let est = q
            .integrate_vec(
                |t| {
                    let (mut l, mut s) = (-base, 0.0);
                    for y in ys {
                        l += m.log_kernel(y - grp.eta_hat - t);
                        s += m.score_kernel(y - grp.eta_hat - t);
                    }
                    [s * s * l.exp(), l.exp()]
                },
                &[-3.0, -1.0, 0.0, 1.0, 3.0],
            )
            .unwrap();
        assert!((h - est.value[0] / est.value[1]).abs() / h < 1e-6);
    }

    #[test]
    fn non_stationary_eta_rejected() {
        let m = ErrorModel::cauchy(1.0).unwrap();
        let mut grp = group(&m, &[0.0, 1.0]);
        grp.eta_hat += 0.1;
        assert!(matches!(relevant_info_eta(&m, &grp), Err(Error::Precondition(_))));
    }

    #[test]
    fn uv_examples() {
        let (u, v) = uv_statistics(&[1.9, 4.0], &[0.5, 0.5], 4).unwrap();
        assert!((u[0] + 1.05).abs() < 1e-12 && (u[1] - 1.05).abs() < 1e-12);
        assert!((v[0] - 0.95).abs() < 1e-12 && (v[1] - 0.95).abs() < 1e-12);
        let (u, v) = uv_statistics(&[3.0, 1.0, 2.0], &[1.0 / 3.0; 3], 6).unwrap();
        assert!((u[0] - 1.0).abs() < 1e-12 && (u[1] + 1.0).abs() < 1e-12 && u[2].abs() < 1e-12);
        assert!(v.iter().all(|x| x.abs() < 1e-12));
        assert!(uv_statistics(&[1.0], &[0.5, 0.5], 2).is_err());
    }

    #[test]
    fn invariant_info_division() {
        assert_eq!(invariant_info(0.5, 0.5).unwrap(), 1.0);
        assert!(invariant_info(1.0, 0.0).is_err());
    }

    #[test]
    fn relevant_matrix_by_hand() {
        let d = Design::new(vec![vec![1.0, 1.0], vec![1.0, 0.0]], vec![0.5, 0.5], 4).unwrap();
        let h = relevant_info_matrix(&[1.9, 4.0], &d, Basis::Identity).unwrap();
        let expect = Matrix::from_row_slice(2, 2, &[5.9, 1.9, 1.9, 1.9]);
        assert!((h - expect).amax() < 1e-12);

        let m = ErrorModel::cauchy(1.0).unwrap();
        let expected_h: Vec<f64> = d.weights.iter().map(|w| 4.0 * w * m.elemental_info()).collect();
        let h = relevant_info_matrix(&expected_h, &d, Basis::Identity).unwrap();
        let f = fisher_matrix(&d, Basis::Identity, &m).unwrap();
        assert!((h - &f.fisher).amax() < 1e-12);
        assert!(!f.singular);
    }

    #[test]
    fn gap_zero_and_scalar() {
        let d = Design::new(vec![vec![1.0, 1.0], vec![1.0, 0.0]], vec![0.5, 0.5], 10).unwrap();
        let m = ErrorModel::cauchy(1.0).unwrap();
        let z = Matrix::zeros(2, 2);
        assert_eq!(asymptotic_gap(&d, Basis::Identity, &m, &[0.0, 1.0], &z, &z).unwrap(), 0.0);

        let single = Design::new(vec![vec![2.0]], vec![1.0], 10).unwrap();
        let vu = Matrix::from_element(1, 1, 3.0);
        let vv = Matrix::from_element(1, 1, 1.0);
        // M = 4, r = c/2 = 0.5, s = 1, D = 0.25.
        let got = asymptotic_gap(&single, Basis::Identity, &m, &[1.0], &vu, &vv).unwrap();
        assert!((got - 0.25 * 4.0 / (10.0 * 0.5)).abs() < 1e-12);
    }

    #[test]
    fn q_needs_variation() {
        let n = ErrorModel::generalized_normal(2.0, 1.0).unwrap();
        assert!(matches!(q_statistic(&n, 0.1), Err(Error::NotApplicable(_))));
        let c = ErrorModel::cauchy(1.0).unwrap();
        assert!(q_statistic(&c, 0.0).unwrap().is_finite());
    }
}
