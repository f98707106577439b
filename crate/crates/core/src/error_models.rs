//! Location-family error laws and the heteroscedastic normal/gamma law.
//!
//! Each model exposes the per-observation log density, score
//! `∂/∂η log f(y|η)`, observed information `-∂²/∂η² log f(y|η)` (all as
//! functions of the residual `ε = y - η`), the elemental information
//! `μ = E[i]` and the moment coefficients behind the γ constant.
//!
//! Normalising constants and moments are computed once, by quadrature, when
//! the model is built; an [`ErrorModel`] is immutable afterwards.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_cauchy_expectation, Quadrature};

/// Structured-text form of an error law, e.g. `{"family":"cauchy","tau":1.0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    /// Density proportional to `exp(-|ε/τ|^ζ / ζ)`.
    GeneralizedNormal { zeta: f64, tau: f64 },
    /// Density proportional to `1 / (1 + (ε/τ)²)`.
    Cauchy { tau: f64 },
    /// `A ~ Gamma(alpha, rate beta)`, `ε | A = a ~ N(0, 1/a)`; the precision is observed.
    HeteroNormalGamma { alpha: f64, beta: f64 },
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        fn positive(name: &str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::schema(name, format!("must be a positive finite number, got {v}")))
            }
        }
        match *self {
            ModelSpec::GeneralizedNormal { zeta, tau } => {
                if !(zeta.is_finite() && zeta >= 2.0) {
                    return Err(Error::schema(
                        "zeta",
                        format!("generalized normal shape must be finite and >= 2, got {zeta}"),
                    ));
                }
                positive("tau", tau)
            }
            ModelSpec::Cauchy { tau } => positive("tau", tau),
            ModelSpec::HeteroNormalGamma { alpha, beta } => {
                positive("alpha", alpha)?;
                positive("beta", beta)
            }
        }
    }
}

/// Moment coefficients of the per-observation information.
///
/// `nu_kl = E[l̇^k (l̈ + E[l̇²])^l]`. `gamma` follows the Condition-3 formula
/// `[(ν02 ν20 - ν11) / ν20³]^{1/2}`; `gamma_alt` is the direct standard
/// deviation of `i / μ`. The two agree for symmetric laws (ν11 = 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentTable {
    pub mu: f64,
    pub gamma: f64,
    pub gamma_alt: f64,
    pub nu_20: f64,
    pub nu_02: f64,
    pub nu_11: f64,
}

/// One simulated observation error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Draw {
    pub residual: f64,
    /// Observed precision (heteroscedastic normal/gamma law only).
    pub precision: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "ModelSpec", try_from = "ModelSpec")]
pub struct ErrorModel {
    spec: ModelSpec,
    log_norm: f64,
    moments: MomentTable,
}

impl From<ErrorModel> for ModelSpec {
    fn from(m: ErrorModel) -> Self {
        m.spec
    }
}

impl TryFrom<ModelSpec> for ErrorModel {
    type Error = Error;
    fn try_from(spec: ModelSpec) -> Result<Self> {
        ErrorModel::new(spec)
    }
}

const GND_BREAKS: [f64; 13] = [
    -50.0, -10.0, -5.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0,
];

fn check_finite(residual: f64) -> Result<()> {
    if residual.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("residual must be finite, got {residual}")))
    }
}

impl ErrorModel {
    pub fn new(spec: ModelSpec) -> Result<Self> {
        spec.validate()?;
        let mut model = ErrorModel {
            spec,
            log_norm: 0.0,
            moments: MomentTable {
                mu: f64::NAN,
                gamma: f64::NAN,
                gamma_alt: f64::NAN,
                nu_20: f64::NAN,
                nu_02: f64::NAN,
                nu_11: f64::NAN,
            },
        };
        model.log_norm = model.compute_log_norm()?;
        model.moments = model.compute_moments()?;
        Ok(model)
    }

    pub fn generalized_normal(zeta: f64, tau: f64) -> Result<Self> {
        Self::new(ModelSpec::GeneralizedNormal { zeta, tau })
    }

    pub fn cauchy(tau: f64) -> Result<Self> {
        Self::new(ModelSpec::Cauchy { tau })
    }

    pub fn hetero_normal_gamma(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(ModelSpec::HeteroNormalGamma { alpha, beta })
    }

    pub fn spec(&self) -> ModelSpec {
        self.spec
    }

    /// Scale used to size search grids and integration ranges.
    pub fn scale(&self) -> f64 {
        match self.spec {
            ModelSpec::GeneralizedNormal { tau, .. } | ModelSpec::Cauchy { tau } => tau,
            ModelSpec::HeteroNormalGamma { alpha, beta } => (beta / alpha).sqrt(),
        }
    }

    pub fn is_hetero(&self) -> bool {
        matches!(self.spec, ModelSpec::HeteroNormalGamma { .. })
    }

    /// True when every observation carries the same information (normal errors).
    pub fn is_homoscedastic_normal(&self) -> bool {
        matches!(self.spec, ModelSpec::GeneralizedNormal { zeta, .. } if zeta == 2.0)
    }

    fn compute_log_norm(&self) -> Result<f64> {
        match self.spec {
            ModelSpec::GeneralizedNormal { zeta, tau } => {
                let q = Quadrature::with_rel_tol(1e-13);
                let est = q.integrate(|x| (-x.abs().powf(zeta) / zeta).exp(), &GND_BREAKS)?;
                Ok(-(est.value[0] * tau).ln())
            }
            ModelSpec::Cauchy { tau } => Ok(-(std::f64::consts::PI * tau).ln()),
            ModelSpec::HeteroNormalGamma { .. } => Ok(f64::NAN),
        }
    }

    // Unchecked kernels for the location families; callers guarantee finite input.

    #[inline]
    pub(crate) fn log_kernel(&self, r: f64) -> f64 {
        match self.spec {
            ModelSpec::GeneralizedNormal { zeta, tau } => -(r / tau).abs().powf(zeta) / zeta,
            ModelSpec::Cauchy { tau } => -(r / tau).powi(2).ln_1p(),
            ModelSpec::HeteroNormalGamma { .. } => -0.5 * r * r,
        }
    }

    #[inline]
    pub(crate) fn score_kernel(&self, r: f64) -> f64 {
        match self.spec {
            ModelSpec::GeneralizedNormal { zeta, tau } => {
                let z = r / tau;
                z.signum() * z.abs().powf(zeta - 1.0) / tau
            }
            ModelSpec::Cauchy { tau } => 2.0 * r / (tau * tau + r * r),
            ModelSpec::HeteroNormalGamma { .. } => r,
        }
    }

    #[inline]
    pub(crate) fn info_kernel(&self, r: f64) -> f64 {
        match self.spec {
            ModelSpec::GeneralizedNormal { zeta, tau } => {
                if zeta == 2.0 {
                    1.0 / (tau * tau)
                } else {
                    (zeta - 1.0) * (r / tau).abs().powf(zeta - 2.0) / (tau * tau)
                }
            }
            ModelSpec::Cauchy { tau } => {
                let t2 = tau * tau;
                let r2 = r * r;
                2.0 * (t2 - r2) / ((t2 + r2) * (t2 + r2))
            }
            ModelSpec::HeteroNormalGamma { .. } => 1.0,
        }
    }

    fn location_only(&self, what: &str) -> Result<()> {
        if self.is_hetero() {
            Err(Error::NotApplicable(format!(
                "{what} of the heteroscedastic normal/gamma law needs the observed precision; \
                 use the *_weighted variant"
            )))
        } else {
            Ok(())
        }
    }

    /// `log f(ε | 0)` including the normalising constant.
    pub fn log_density(&self, residual: f64) -> Result<f64> {
        self.location_only("log density")?;
        check_finite(residual)?;
        Ok(self.log_norm + self.log_kernel(residual))
    }

    /// `∂/∂η log f(y|η)` at `ε = y - η`.
    pub fn score(&self, residual: f64) -> Result<f64> {
        self.location_only("score")?;
        check_finite(residual)?;
        Ok(self.score_kernel(residual))
    }

    /// `-∂²/∂η² log f(y|η)` at `ε = y - η`. Can be negative (Cauchy, |ε| > τ).
    pub fn observed_info(&self, residual: f64) -> Result<f64> {
        self.location_only("observed information")?;
        check_finite(residual)?;
        Ok(self.info_kernel(residual))
    }

    /// Log density of `N(0, 1/precision)` at `residual`.
    pub fn log_density_weighted(&self, residual: f64, precision: f64) -> Result<f64> {
        self.weighted_check(residual, precision)?;
        Ok(0.5 * (precision / (2.0 * std::f64::consts::PI)).ln() - 0.5 * precision * residual * residual)
    }

    pub fn score_weighted(&self, residual: f64, precision: f64) -> Result<f64> {
        self.weighted_check(residual, precision)?;
        Ok(precision * residual)
    }

    pub fn observed_info_weighted(&self, residual: f64, precision: f64) -> Result<f64> {
        self.weighted_check(residual, precision)?;
        Ok(precision)
    }

    fn weighted_check(&self, residual: f64, precision: f64) -> Result<()> {
        if !self.is_hetero() {
            return Err(Error::NotApplicable(
                "weighted evaluation applies to the heteroscedastic normal/gamma law only".into(),
            ));
        }
        check_finite(residual)?;
        if !(precision.is_finite() && precision > 0.0) {
            return Err(Error::InvalidInput(format!("precision must be positive, got {precision}")));
        }
        Ok(())
    }

    /// Elemental information `μ = E[i_Y]`.
    pub fn elemental_info(&self) -> f64 {
        self.moments.mu
    }

    pub fn moment_table(&self) -> MomentTable {
        self.moments
    }

    /// `E[g(ε)]` under the model, by adaptive quadrature.
    pub fn expectation<const N: usize, F>(&self, rel_tol: f64, mut g: F) -> Result<[f64; N]>
    where
        F: FnMut(f64) -> [f64; N],
    {
        let q = Quadrature::with_rel_tol(rel_tol);
        match self.spec {
            ModelSpec::GeneralizedNormal { tau, .. } => {
                let breaks: Vec<f64> = GND_BREAKS.iter().map(|b| b * tau).collect();
                let log_norm = self.log_norm;
                let est = q.integrate_vec(
                    |x| {
                        let w = (log_norm + self.log_kernel(x)).exp();
                        let v = g(x);
                        std::array::from_fn(|k| if w == 0.0 { 0.0 } else { v[k] * w })
                    },
                    &breaks,
                )?;
                Ok(est.value)
            }
            ModelSpec::Cauchy { tau } => Ok(integrate_cauchy_expectation(&q, tau, g)?.value),
            ModelSpec::HeteroNormalGamma { .. } => Err(Error::NotApplicable(
                "quadrature expectations are defined for the location families".into(),
            )),
        }
    }

    fn compute_moments(&self) -> Result<MomentTable> {
        if let ModelSpec::HeteroNormalGamma { alpha, beta } = self.spec {
            let mu = alpha / beta;
            let gamma = 1.0 / alpha.sqrt();
            return Ok(MomentTable {
                mu,
                gamma,
                gamma_alt: gamma,
                nu_20: mu,
                nu_02: alpha / (beta * beta),
                nu_11: 0.0,
            });
        }

        let [mu, nu_20] = self.expectation(1e-11, |r| {
            let s = self.score_kernel(r);
            [self.info_kernel(r), s * s]
        })?;
        if !(mu.is_finite() && mu > 0.0) {
            return Err(Error::Numeric(format!("elemental information is not positive: {mu}")));
        }
        if self.is_homoscedastic_normal() {
            return Ok(MomentTable {
                mu,
                gamma: 0.0,
                gamma_alt: 0.0,
                nu_20: nu_20,
                nu_02: 0.0,
                nu_11: 0.0,
            });
        }
        let [var_i, nu_02, nu_11] = self.expectation(1e-10, |r| {
            let i = self.info_kernel(r);
            let s = self.score_kernel(r);
            [(i - mu) * (i - mu), (nu_20 - i) * (nu_20 - i), s * (nu_20 - i)]
        })?;
        let gamma_sq = (nu_02 * nu_20 - nu_11) / nu_20.powi(3);
        Ok(MomentTable {
            mu,
            gamma: gamma_sq.max(0.0).sqrt(),
            gamma_alt: (var_i / (mu * mu)).sqrt(),
            nu_20,
            nu_02,
            nu_11,
        })
    }

    /// Draw one observation error.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Draw {
        match self.spec {
            ModelSpec::GeneralizedNormal { zeta, tau } => {
                // |ε/τ|^ζ / ζ ~ Gamma(1/ζ, 1)
                let t: f64 = Gamma::new(1.0 / zeta, 1.0)
                    .expect("validated shape")
                    .sample(rng);
                let magnitude = tau * (zeta * t).powf(1.0 / zeta);
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                Draw {
                    residual: sign * magnitude,
                    precision: None,
                }
            }
            ModelSpec::Cauchy { tau } => {
                let u: f64 = rng.random();
                Draw {
                    residual: tau * (std::f64::consts::PI * (u - 0.5)).tan(),
                    precision: None,
                }
            }
            ModelSpec::HeteroNormalGamma { alpha, beta } => {
                let a: f64 = Gamma::new(alpha, 1.0 / beta)
                    .expect("validated parameters")
                    .sample(rng)
                    .max(f64::MIN_POSITIVE);
                let z: f64 = StandardNormal.sample(rng);
                Draw {
                    residual: z / a.sqrt(),
                    precision: Some(a),
                }
            }
        }
    }
}

pub fn log_density(model: &ErrorModel, residual: f64) -> Result<f64> {
    model.log_density(residual)
}

pub fn score(model: &ErrorModel, residual: f64) -> Result<f64> {
    model.score(residual)
}

pub fn observed_info(model: &ErrorModel, residual: f64) -> Result<f64> {
    model.observed_info(residual)
}

pub fn elemental_info(model: &ErrorModel) -> f64 {
    model.elemental_info()
}

pub fn moment_table(model: &ErrorModel) -> MomentTable {
    model.moment_table()
}
