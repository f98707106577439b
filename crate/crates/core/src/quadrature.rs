//! Globally adaptive Gauss–Kronrod (7/15 point) quadrature.
//!
//! The integrator bisects the panel carrying the largest error estimate
//! until every component of the (possibly vector-valued) integral meets
//! `max(abs_tol, rel_tol * |I|)`. Vector-valued integrands share panels,
//! which is what the relevant-subset information needs: the numerator and
//! the normalising constant of the conditional density are integrated over
//! the same refinement.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_segments: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-14,
            max_segments: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Estimate<const N: usize> {
    pub value: [f64; N],
    pub abs_error: [f64; N],
    pub evaluations: usize,
    pub segments: usize,
}

#[derive(Clone, Copy)]
struct Panel<const N: usize> {
    a: f64,
    b: f64,
    value: [f64; N],
    error: [f64; N],
}

fn kronrod<const N: usize, F>(f: &mut F, a: f64, b: f64) -> Result<Panel<N>>
where
    F: FnMut(f64) -> [f64; N],
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut gauss = [0.0; N];
    let mut kron = [0.0; N];

    let fc = f(center);
    for k in 0..N {
        kron[k] = WGK[7] * fc[k];
        gauss[k] = WG[3] * fc[k];
    }
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        for k in 0..N {
            let s = f1[k] + f2[k];
            kron[k] += WGK[j] * s;
            if j % 2 == 1 {
                gauss[k] += WG[j / 2] * s;
            }
        }
    }

    let mut value = [0.0; N];
    let mut error = [0.0; N];
    for k in 0..N {
        value[k] = kron[k] * half;
        error[k] = ((kron[k] - gauss[k]) * half).abs();
        if !value[k].is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite integrand on [{a}, {b}] (component {k})"
            )));
        }
    }
    Ok(Panel { a, b, value, error })
}

impl Quadrature {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }

    /// Integrate a scalar function over the partition given by `breaks`
    /// (at least two increasing points).
    pub fn integrate<F>(&self, mut f: F, breaks: &[f64]) -> Result<Estimate<1>>
    where
        F: FnMut(f64) -> f64,
    {
        self.integrate_vec(|x| [f(x)], breaks)
    }

    pub fn integrate_vec<const N: usize, F>(&self, mut f: F, breaks: &[f64]) -> Result<Estimate<N>>
    where
        F: FnMut(f64) -> [f64; N],
    {
        if breaks.len() < 2 || breaks.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidInput(
                "quadrature breakpoints must be strictly increasing".into(),
            ));
        }

        let mut panels = Vec::with_capacity(64);
        for w in breaks.windows(2) {
            panels.push(kronrod(&mut f, w[0], w[1])?);
        }
        let mut evaluations = 15 * panels.len();

        loop {
            let mut total = [0.0; N];
            let mut err = [0.0; N];
            for p in &panels {
                for k in 0..N {
                    total[k] += p.value[k];
                    err[k] += p.error[k];
                }
            }
            let tol: [f64; N] = std::array::from_fn(|k| self.abs_tol.max(self.rel_tol * total[k].abs()));
            if (0..N).all(|k| err[k] <= tol[k]) {
                return Ok(Estimate {
                    value: total,
                    abs_error: err,
                    evaluations,
                    segments: panels.len(),
                });
            }
            if panels.len() >= self.max_segments {
                return Err(Error::Numeric(format!(
                    "quadrature did not converge after {} panels ({} evaluations): \
                     error {:?} vs tolerance {:?}",
                    panels.len(),
                    evaluations,
                    err,
                    tol
                )));
            }

            // Split the panel with the largest error relative to its component tolerance.
            let (worst, _) = panels
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    let score = (0..N)
                        .map(|k| p.error[k] / tol[k])
                        .fold(0.0_f64, f64::max);
                    (i, score)
                })
                .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
            let p = panels.swap_remove(worst);
            let mid = 0.5 * (p.a + p.b);
            if !(p.a < mid && mid < p.b) {
                return Err(Error::Numeric(format!(
                    "quadrature panel [{}, {}] cannot be bisected further",
                    p.a, p.b
                )));
            }
            panels.push(kronrod(&mut f, p.a, mid)?);
            panels.push(kronrod(&mut f, mid, p.b)?);
            evaluations += 30;
        }
    }
}

/// Integrate `g(x) * density(x)` for a Cauchy-type law by mapping
/// `x = scale * tan(phi)`, `phi` in (-pi/2, pi/2). The Cauchy density cancels
/// the Jacobian, leaving `g(scale * tan(phi)) / pi` on a finite interval.
pub fn integrate_cauchy_expectation<const N: usize, F>(
    quad: &Quadrature,
    scale: f64,
    mut g: F,
) -> Result<Estimate<N>>
where
    F: FnMut(f64) -> [f64; N],
{
    let h = std::f64::consts::FRAC_PI_2;
    let inv_pi = std::f64::consts::FRAC_1_PI;
    quad.integrate_vec(
        |phi| {
            let v = g(scale * phi.tan());
            std::array::from_fn(|k| v[k] * inv_pi)
        },
        &[-h, -h / 2.0, 0.0, h / 2.0, h],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let q = Quadrature::default();
        let est = q.integrate(|x| x.powi(6) - 2.0 * x + 1.0, &[0.0, 2.0]).unwrap();
        assert!((est.value[0] - (128.0 / 7.0 - 4.0 + 2.0)).abs() < 1e-12);
        assert_eq!(est.segments, 1);
    }

    #[test]
    fn gaussian_on_wide_interval() {
        let q = Quadrature::default();
        let est = q
            .integrate(|x| (-0.5 * x * x).exp(), &[-50.0, -1.0, 0.0, 1.0, 50.0])
            .unwrap();
        assert!((est.value[0] - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn vector_components_share_panels() {
        let q = Quadrature::default();
        let est = q
            .integrate_vec(|x| [x.sin(), x.cos()], &[0.0, std::f64::consts::PI])
            .unwrap();
        assert!((est.value[0] - 2.0).abs() < 1e-12);
        assert!(est.value[1].abs() < 1e-12);
    }

    #[test]
    fn cauchy_substitution_integrates_density_to_one() {
        let q = Quadrature::default();
        let est = integrate_cauchy_expectation(&q, 3.0, |_| [1.0]).unwrap();
        assert!((est.value[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_convergence_is_reported() {
        let q = Quadrature {
            max_segments: 4,
            ..Quadrature::default()
        };
        let err = q.integrate(|x| 1.0 / x.abs().sqrt(), &[-1.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::Numeric(_)));
    }

    #[test]
    fn rejects_bad_breakpoints() {
        let q = Quadrature::default();
        assert!(q.integrate(|x| x, &[1.0, 1.0]).is_err());
    }
}
