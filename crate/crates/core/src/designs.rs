//! A-priori designs, optimality criteria and the Cramér–Rao bound.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::basis::Basis;
use crate::error::{Error, Result};
use crate::error_models::ErrorModel;
use crate::linalg::{is_psd, spd_inverse, Matrix, Vector};

/// An n-point deterministic design: support points, weights and budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Design {
    pub support: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub n: usize,
}

impl Design {
    pub fn new(support: Vec<Vec<f64>>, weights: Vec<f64>, n: usize) -> Result<Self> {
        let d = Design { support, weights, n };
        d.validate()?;
        Ok(d)
    }

    /// Build from integer allocations.
    pub fn from_counts(support: Vec<Vec<f64>>, counts: &[usize]) -> Result<Self> {
        let n: usize = counts.iter().sum();
        if n == 0 {
            return Err(Error::schema("weights", "allocation counts sum to zero"));
        }
        let weights = counts.iter().map(|&c| c as f64 / n as f64).collect();
        Self::new(support, weights, n)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.support.len();
        if d == 0 {
            return Err(Error::schema("support", "a design needs at least one support point"));
        }
        if self.weights.len() != d {
            return Err(Error::schema(
                "weights",
                format!("expected {d} weights, got {}", self.weights.len()),
            ));
        }
        if self.n == 0 {
            return Err(Error::schema("n", "budget must be positive"));
        }
        let s = self.support[0].len();
        for (i, x) in self.support.iter().enumerate() {
            if x.len() != s || x.iter().any(|v| !v.is_finite()) {
                return Err(Error::schema(
                    format!("support[{i}]"),
                    format!("expected {s} finite coordinates"),
                ));
            }
            if self.support[..i].contains(x) {
                return Err(Error::schema(format!("support[{i}]"), "support points must be distinct"));
            }
        }
        for (i, &w) in self.weights.iter().enumerate() {
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::schema(format!("weights[{i}]"), format!("weight {w} outside [0, 1]")));
            }
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::schema("weights", format!("weights sum to {total}, not 1")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Exact allocations `n·wᵢ` when they are all integers.
    pub fn exact_counts(&self) -> Option<Vec<usize>> {
        integral_counts(&self.weights, self.n)
    }

    pub fn rows(&self, basis: Basis) -> Result<Vec<Vector>> {
        self.support.iter().map(|x| basis.row(x)).collect()
    }

    /// Normalised information `M = Σ wᵢ f(xᵢ)f(xᵢ)ᵀ`.
    pub fn moment_matrix(&self, basis: Basis) -> Result<Matrix> {
        moment_matrix(&self.rows(basis)?, &self.weights)
    }
}

/// `m·wᵢ` rounded, if every product is within 1e-9 of an integer.
pub fn integral_counts(weights: &[f64], m: usize) -> Option<Vec<usize>> {
    let counts: Vec<usize> = weights.iter().map(|w| (w * m as f64).round() as usize).collect();
    let ok = weights
        .iter()
        .zip(&counts)
        .all(|(w, &c)| (w * m as f64 - c as f64).abs() <= 1e-9 * (m as f64).max(1.0));
    (ok && counts.iter().sum::<usize>() == m).then_some(counts)
}

pub(crate) fn moment_matrix(rows: &[Vector], weights: &[f64]) -> Result<Matrix> {
    let p = rows.first().map(|r| r.len()).unwrap_or(0);
    if rows.len() != weights.len() {
        return Err(Error::Dimension {
            context: "weights",
            expected: rows.len(),
            got: weights.len(),
        });
    }
    Ok(rows
        .iter()
        .zip(weights)
        .fold(Matrix::zeros(p, p), |acc, (f, &w)| acc + f * f.transpose() * w))
}

/// A data-independent random design: a distribution over deterministic designs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomDesign {
    pub atoms: Vec<Atom>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Atom {
    pub design: Design,
    pub probability: f64,
}

impl RandomDesign {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        let r = RandomDesign { atoms };
        r.validate()?;
        Ok(r)
    }

    pub fn point_mass(design: Design) -> Self {
        RandomDesign {
            atoms: vec![Atom { design, probability: 1.0 }],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let first = self
            .atoms
            .first()
            .ok_or_else(|| Error::schema("atoms", "a random design needs at least one atom"))?;
        for (k, atom) in self.atoms.iter().enumerate() {
            atom.design.validate().map_err(|e| e.under(&format!("atoms[{k}].design")))?;
            if atom.design.support != first.design.support || atom.design.n != first.design.n {
                return Err(Error::schema(
                    format!("atoms[{k}].design"),
                    "all atoms must share support and budget",
                ));
            }
            if !(atom.probability > 0.0 && atom.probability <= 1.0) {
                return Err(Error::schema(
                    format!("atoms[{k}].probability"),
                    format!("probability {} outside (0, 1]", atom.probability),
                ));
            }
        }
        let total: f64 = self.atoms.iter().map(|a| a.probability).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::schema("atoms", format!("probabilities sum to {total}, not 1")));
        }
        Ok(())
    }

    pub fn support(&self) -> &[Vec<f64>] {
        &self.atoms[0].design.support
    }

    pub fn n(&self) -> usize {
        self.atoms[0].design.n
    }

    pub fn is_deterministic(&self) -> bool {
        self.atoms.len() == 1
    }
}

/// Draw one deterministic design from `random`.
pub fn sample_design<'a, R: Rng + ?Sized>(random: &'a RandomDesign, rng: &mut R) -> &'a Design {
    if random.atoms.len() == 1 {
        return &random.atoms[0].design;
    }
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for atom in &random.atoms {
        acc += atom.probability;
        if u < acc {
            return &atom.design;
        }
    }
    &random.atoms[random.atoms.len() - 1].design
}

/// Fisher information `F = nμ Σ wᵢ f(xᵢ)f(xᵢ)ᵀ`.
pub fn fisher_information(design: &Design, basis: Basis, model: &ErrorModel) -> Result<Matrix> {
    Ok(design.moment_matrix(basis)? * (design.n as f64 * model.elemental_info()))
}

/// Cramér–Rao bound `F⁻¹`.
pub fn crlb(design: &Design, basis: Basis, model: &ErrorModel) -> Result<Matrix> {
    spd_inverse(&fisher_information(design, basis, model)?, "Fisher information")
}

/// Probability-weighted average of the atoms' bounds.
pub fn random_crlb(random: &RandomDesign, basis: Basis, model: &ErrorModel) -> Result<Matrix> {
    let mut acc: Option<Matrix> = None;
    for atom in &random.atoms {
        let c = crlb(&atom.design, basis, model)? * atom.probability;
        acc = Some(match acc {
            Some(a) => a + c,
            None => c,
        });
    }
    acc.ok_or_else(|| Error::InvalidInput("empty random design".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CriterionKind {
    D,
    A,
    G,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Criterion {
    pub kind: CriterionKind,
    #[serde(default = "default_grid")]
    pub g_grid: usize,
}

fn default_grid() -> usize {
    1001
}

impl Criterion {
    pub fn new(kind: CriterionKind) -> Self {
        Criterion { kind, g_grid: default_grid() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.g_grid < 2 {
            return Err(Error::schema("g_grid", "grid needs at least two points"));
        }
        Ok(())
    }
}

/// Box-shaped design region used by the G criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Domain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Domain {
    pub fn interval(lo: f64, hi: f64) -> Self {
        Domain { lower: vec![lo], upper: vec![hi] }
    }

    /// Region spanned by a design's support.
    pub fn bounding(support: &[Vec<f64>]) -> Self {
        let s = support[0].len();
        let lower = (0..s).map(|k| support.iter().map(|x| x[k]).fold(f64::INFINITY, f64::min)).collect();
        let upper = (0..s).map(|k| support.iter().map(|x| x[k]).fold(f64::NEG_INFINITY, f64::max)).collect();
        Domain { lower, upper }
    }

    /// Uniform grid with `points` values on a 1-d domain, or about `points`
    /// values in total spread evenly across axes otherwise.
    fn grid(&self, points: usize) -> Vec<Vec<f64>> {
        let s = self.lower.len();
        let per_axis = if s == 1 {
            points
        } else {
            ((points as f64).powf(1.0 / s as f64).round() as usize).max(2)
        };
        let axis = |k: usize| -> Vec<f64> {
            (0..per_axis)
                .map(|j| self.lower[k] + (self.upper[k] - self.lower[k]) * j as f64 / (per_axis - 1) as f64)
                .collect()
        };
        let mut out: Vec<Vec<f64>> = vec![Vec::new()];
        for k in 0..s {
            let values = axis(k);
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    values.iter().map(move |&v| {
                        let mut p = prefix.clone();
                        p.push(v);
                        p
                    })
                })
                .collect();
        }
        out
    }
}

fn g_value(cov: &Matrix, basis: Basis, domain: &Domain, points: usize) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for x in domain.grid(points) {
        let f = basis.row(&x)?;
        best = best.max(f.dot(&(cov * &f)));
    }
    Ok(best)
}

/// Ψ in the conventional orientation: D takes the information matrix
/// (`|F|^{-1/p}`), A and G take the covariance-scale matrix `F⁻¹`.
pub fn criterion_value(matrix: &Matrix, criterion: Criterion, basis: Basis, domain: &Domain) -> Result<f64> {
    criterion.validate()?;
    if !is_psd(matrix, 1e-10) {
        return Err(Error::InvalidInput("criterion input must be symmetric positive semi-definite".into()));
    }
    let p = matrix.nrows() as f64;
    match criterion.kind {
        CriterionKind::D => {
            let det = matrix.determinant();
            if det <= 0.0 {
                return Err(Error::Singular("D criterion needs a nonsingular information matrix".into()));
            }
            Ok(det.powf(-1.0 / p))
        }
        CriterionKind::A => Ok(matrix.trace()),
        CriterionKind::G => g_value(matrix, basis, domain, criterion.g_grid),
    }
}

/// Ψ applied uniformly to a covariance-scale matrix: `|C|^{1/p}`, `tr C` or
/// `max_x f(x)ᵀC f(x)`. Smaller is better for all three.
pub fn covariance_criterion(cov: &Matrix, criterion: Criterion, basis: Basis, domain: &Domain) -> Result<f64> {
    criterion.validate()?;
    if !is_psd(cov, 1e-10) {
        return Err(Error::InvalidInput("covariance must be symmetric positive semi-definite".into()));
    }
    match criterion.kind {
        CriterionKind::D => {
            let det = cov.determinant();
            if det <= 0.0 {
                return Err(Error::Singular("covariance matrix is singular".into()));
            }
            Ok(det.powf(1.0 / cov.nrows() as f64))
        }
        CriterionKind::A => Ok(cov.trace()),
        CriterionKind::G => g_value(cov, basis, domain, criterion.g_grid),
    }
}

/// Ψ-optimal approximate weights on a fixed support by multiplicative
/// iteration. G uses the D solution (equivalence theorem).
pub fn optimal_weights(support: &[Vec<f64>], basis: Basis, kind: CriterionKind) -> Result<Vec<f64>> {
    let rows: Vec<Vector> = support.iter().map(|x| basis.row(x)).collect::<Result<_>>()?;
    let d = rows.len();
    let p = rows[0].len() as f64;
    let mut w = vec![1.0 / d as f64; d];
    for _ in 0..100_000 {
        let minv = spd_inverse(&moment_matrix(&rows, &w)?, "moment matrix")?;
        let sens: Vec<f64> = match kind {
            CriterionKind::D | CriterionKind::G => rows.iter().map(|f| f.dot(&(&minv * f)) / p).collect(),
            CriterionKind::A => {
                let m2 = &minv * &minv;
                let tr = minv.trace();
                rows.iter().map(|f| f.dot(&(&m2 * f)) / tr).collect()
            }
        };
        // The square-root step avoids the period-two cycle of the plain A update.
        let power = if kind == CriterionKind::A { 0.5 } else { 1.0 };
        let next: Vec<f64> = w.iter().zip(&sens).map(|(wi, s)| wi * s.powf(power)).collect();
        let total: f64 = next.iter().sum();
        let next: Vec<f64> = next.iter().map(|v| v / total).collect();
        let delta = next.iter().zip(&w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        w = next;
        if delta < 1e-12 {
            // Sensitivities must equal one on the support at the optimum.
            let gap = sens.iter().zip(&w).filter(|(_, &wi)| wi > 1e-6).map(|(s, _)| (s - 1.0).abs()).fold(0.0, f64::max);
            if gap < 1e-8 || delta == 0.0 {
                return Ok(w);
            }
        }
    }
    Err(Error::Numeric("multiplicative weight iteration did not converge".into()))
}

/// CRLB of the Ψ-optimal approximate design with budget `n` on `support`.
pub fn reference_crlb(
    support: &[Vec<f64>],
    n: usize,
    basis: Basis,
    model: &ErrorModel,
    kind: CriterionKind,
) -> Result<Matrix> {
    let w = optimal_weights(support, basis, kind)?;
    let rows: Vec<Vector> = support.iter().map(|x| basis.row(x)).collect::<Result<_>>()?;
    let f = moment_matrix(&rows, &w)? * (n as f64 * model.elemental_info());
    spd_inverse(&f, "reference information")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuiltinName {
    Balanced2,
    Factorial22,
    GOptimalQuadratic,
}

/// A named design: its basis, the deterministic version, and the random
/// version (a point mass unless the budget leaves a remainder).
#[derive(Debug, Clone, PartialEq)]
pub struct Builtin {
    pub basis: Basis,
    pub deterministic: Design,
    pub random: RandomDesign,
    pub domain: Domain,
}

pub fn builtin_design(name: BuiltinName, n: usize) -> Result<Builtin> {
    let (basis, support, domain) = match name {
        BuiltinName::Balanced2 => (Basis::Identity, vec![vec![1.0, 1.0], vec![1.0, 0.0]], Domain {
            lower: vec![1.0, 0.0],
            upper: vec![1.0, 1.0],
        }),
        BuiltinName::Factorial22 => (
            Basis::Interaction,
            vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]],
            Domain { lower: vec![0.0, 0.0], upper: vec![1.0, 1.0] },
        ),
        BuiltinName::GOptimalQuadratic => (
            Basis::Quadratic,
            vec![vec![-1.0], vec![0.0], vec![1.0]],
            Domain::interval(-1.0, 1.0),
        ),
    };
    let d = support.len();
    if n < d {
        return Err(Error::schema("n", format!("budget {n} is smaller than the {d} support points")));
    }
    let base = n / d;
    let extra = n % d;
    let deterministic = {
        let counts: Vec<usize> = (0..d).map(|i| base + usize::from(i < extra)).collect();
        Design::from_counts(support.clone(), &counts)?
    };
    let random = if extra == 0 || name != BuiltinName::GOptimalQuadratic {
        RandomDesign::point_mass(deterministic.clone())
    } else {
        // Every way of spreading the remainder over distinct points, equally likely.
        let subsets = combinations(d, extra);
        let prob = 1.0 / subsets.len() as f64;
        let atoms = subsets
            .into_iter()
            .map(|chosen| {
                let counts: Vec<usize> = (0..d).map(|i| base + usize::from(chosen.contains(&i))).collect();
                Ok(Atom {
                    design: Design::from_counts(support.clone(), &counts)?,
                    probability: prob,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        RandomDesign::new(atoms)?
    };
    Ok(Builtin { basis, deterministic, random, domain })
}

fn combinations(d: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    (0..d)
        .flat_map(|first| {
            combinations(d, k - 1)
                .into_iter()
                .filter(move |rest| rest.iter().all(|&r| r > first))
                .map(move |rest| {
                    let mut v = vec![first];
                    v.extend(rest);
                    v
                })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn factorial_crlb_matches_published_table() {
        let b = builtin_design(BuiltinName::Factorial22, 60).unwrap();
        let m = ErrorModel::cauchy(1.0).unwrap();
        let c = crlb(&b.deterministic, b.basis, &m).unwrap() * 60.0;
        assert!((c[(0, 0)] - 8.0).abs() < 1e-10);
        assert!((c[(1, 1)] - 16.0).abs() < 1e-10);
        assert!((c[(3, 3)] - 32.0).abs() < 1e-10);
    }

    #[test]
    fn balanced_contrast_bound() {
        let b = builtin_design(BuiltinName::Balanced2, 36).unwrap();
        let m = ErrorModel::hetero_normal_gamma(0.125, 0.125).unwrap();
        let c = crlb(&b.deterministic, b.basis, &m).unwrap();
        assert!((c[(1, 1)] - 1.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn fisher_matrix_by_hand() {
        let d = Design::new(vec![vec![1.0, 1.0], vec![1.0, 0.0]], vec![0.5, 0.5], 4).unwrap();
        let m = ErrorModel::generalized_normal(2.0, 1.0).unwrap();
        let f = fisher_information(&d, Basis::Identity, &m).unwrap();
        let expect = Matrix::from_row_slice(2, 2, &[4.0, 2.0, 2.0, 2.0]);
        assert!((f - expect).amax() < 1e-12);
    }

    #[test]
    fn single_point_is_singular() {
        let d = Design::new(vec![vec![1.0, 1.0]], vec![1.0], 4).unwrap();
        let m = ErrorModel::cauchy(1.0).unwrap();
        assert!(matches!(crlb(&d, Basis::Identity, &m), Err(Error::Singular(_))));
    }

    #[test]
    fn criterion_examples() {
        let dom = Domain::interval(-1.0, 1.0);
        let id = Matrix::identity(2, 2);
        let d = criterion_value(&id, Criterion::new(CriterionKind::D), Basis::Identity, &dom).unwrap();
        assert!((d - 1.0).abs() < 1e-15);
        let inv = Matrix::from_diagonal(&Vector::from_vec(vec![0.5, 0.125]));
        let a = criterion_value(&inv, Criterion::new(CriterionKind::A), Basis::Identity, &dom).unwrap();
        assert!((a - 0.625).abs() < 1e-15);
    }

    #[test]
    fn g_value_grid_resolution() {
        let b = builtin_design(BuiltinName::GOptimalQuadratic, 9).unwrap();
        let m = ErrorModel::generalized_normal(10.0, 1.0).unwrap();
        let c = crlb(&b.deterministic, b.basis, &m).unwrap();
        let coarse = criterion_value(&c, Criterion::new(CriterionKind::G), b.basis, &b.domain).unwrap();
        let fine = criterion_value(&c, Criterion { kind: CriterionKind::G, g_grid: 1_000_001 }, b.basis, &b.domain).unwrap();
        assert!((coarse - fine).abs() / fine < 1e-4);
        // Equal thirds: f(x)ᵀM⁻¹f(x) peaks at p = 3.
        assert!((coarse * 9.0 * m.elemental_info() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn g_optimal_remainders() {
        let b = builtin_design(BuiltinName::GOptimalQuadratic, 9).unwrap();
        assert!(b.random.is_deterministic());
        assert_eq!(b.deterministic.exact_counts().unwrap(), vec![3, 3, 3]);

        let b = builtin_design(BuiltinName::GOptimalQuadratic, 10).unwrap();
        assert_eq!(b.deterministic.exact_counts().unwrap(), vec![4, 3, 3]);
        let counts: Vec<Vec<usize>> = b.random.atoms.iter().map(|a| a.design.exact_counts().unwrap()).collect();
        assert_eq!(counts, vec![vec![4, 3, 3], vec![3, 4, 3], vec![3, 3, 4]]);
        assert!(b.random.atoms.iter().all(|a| (a.probability - 1.0 / 3.0).abs() < 1e-15));

        let b = builtin_design(BuiltinName::GOptimalQuadratic, 13).unwrap();
        let counts: Vec<Vec<usize>> = b.random.atoms.iter().map(|a| a.design.exact_counts().unwrap()).collect();
        assert_eq!(counts, vec![vec![5, 4, 4], vec![4, 5, 4], vec![4, 4, 5]]);

        let b = builtin_design(BuiltinName::GOptimalQuadratic, 8).unwrap();
        assert_eq!(b.deterministic.exact_counts().unwrap(), vec![3, 3, 2]);
        let counts: Vec<Vec<usize>> = b.random.atoms.iter().map(|a| a.design.exact_counts().unwrap()).collect();
        assert_eq!(counts, vec![vec![3, 3, 2], vec![3, 2, 3], vec![2, 3, 3]]);
    }

    #[test]
    fn sampling_frequencies() {
        let b = builtin_design(BuiltinName::GOptimalQuadratic, 10).unwrap();
        let mut rng = stream(5, 0);
        let mut hits = [0usize; 3];
        for _ in 0..30_000 {
            let d = sample_design(&b.random, &mut rng);
            let k = b.random.atoms.iter().position(|a| a.design == *d).unwrap();
            hits[k] += 1;
        }
        for h in hits {
            assert!((h as f64 / 30_000.0 - 1.0 / 3.0).abs() < 0.01);
        }
        let single = RandomDesign::point_mass(b.deterministic.clone());
        assert_eq!(sample_design(&single, &mut rng), &b.deterministic);
    }

    #[test]
    fn multiplicative_weights() {
        let s = vec![vec![-1.0], vec![0.0], vec![1.0]];
        let d = optimal_weights(&s, Basis::Quadratic, CriterionKind::D).unwrap();
        assert!(d.iter().all(|w| (w - 1.0 / 3.0).abs() < 1e-8));
        let a = optimal_weights(&s, Basis::Quadratic, CriterionKind::A).unwrap();
        assert!((a[0] - 0.25).abs() < 1e-6 && (a[1] - 0.5).abs() < 1e-6, "{a:?}");
    }

    #[test]
    fn invalid_designs() {
        assert!(Design::new(vec![vec![0.0], vec![0.0]], vec![0.5, 0.5], 2).is_err());
        assert!(Design::new(vec![vec![0.0]], vec![0.9], 2).is_err());
        assert!(builtin_design(BuiltinName::Factorial22, 3).is_err());
    }
}
