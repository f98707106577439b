//! Monte Carlo estimation of the relevant-subset bound, MLE covariance and
//! efficiency metrics.
//!
//! Iteration `k` draws everything from substreams keyed by `(seed, k, attempt)`:
//! slot 0 for design and allocation randomness, slot `1 + i` for the errors
//! at support point `i`. Strategies run with the same seed therefore see the
//! same error sequence at every support point (common random numbers), and
//! results do not depend on the number of worker threads.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adaptive::{allocate, initialize, Mode, Response};
use crate::basis::Basis;
use crate::designs::{
    builtin_design, covariance_criterion, random_crlb, reference_crlb, sample_design, Atom, BuiltinName,
    Criterion, Design, Domain, RandomDesign,
};
use crate::error::{parse_json, Error, Result};
use crate::error_models::ErrorModel;
use crate::estimation::{mle_location, mle_theta, weighted_location, Observation};
use crate::information::{invariant_info, relevant_info_eta, relevant_info_matrix, uv_statistics, SupportGroup};
use crate::linalg::{quad_form, spd_inverse, Matrix, Vector};
use crate::rng::{stream, substream_key, StreamRng, DESIGN_SLOT, ERROR_SLOT_BASE};

pub const SCHEMA_VERSION: u32 = 1;
const MAX_RETRIES: u64 = 3;
const BOOTSTRAP_RESAMPLES: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Fixed,
    Rrsd,
    Drsd,
}

impl Strategy {
    pub fn label(&self) -> &'static str {
        match self {
            Strategy::Fixed => "fixed",
            Strategy::Rrsd => "rrsd",
            Strategy::Drsd => "drsd",
        }
    }
}

/// Design block of a scenario; the budget comes from the scenario's `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DesignSpec {
    Builtin {
        name: BuiltinName,
        /// Use the randomized version (differs from the deterministic one only
        /// when the budget leaves a remainder).
        #[serde(default)]
        randomized: bool,
    },
    Fixed {
        support: Vec<Vec<f64>>,
        weights: Vec<f64>,
    },
    Random {
        support: Vec<Vec<f64>>,
        atoms: Vec<AtomSpec>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    pub weights: Vec<f64>,
    pub probability: f64,
}

impl DesignSpec {
    /// Basis, design distribution and domain for a budget of `n`.
    pub fn resolve(&self, basis: Option<Basis>, n: usize) -> Result<(Basis, RandomDesign, Domain)> {
        Ok(match self {
            DesignSpec::Builtin { name, randomized } => {
                let b = builtin_design(*name, n).map_err(|e| e.under("design"))?;
                if basis.is_some_and(|x| x != b.basis) {
                    return Err(Error::schema("basis", "conflicts with the builtin design's basis"));
                }
                let design = if *randomized {
                    b.random
                } else {
                    RandomDesign::point_mass(b.deterministic)
                };
                (b.basis, design, b.domain)
            }
            DesignSpec::Fixed { support, weights } => {
                let basis = basis.ok_or_else(|| Error::schema("basis", "required for explicit designs"))?;
                let d = Design::new(support.clone(), weights.clone(), n).map_err(|e| e.under("design"))?;
                let domain = Domain::bounding(support);
                (basis, RandomDesign::point_mass(d), domain)
            }
            DesignSpec::Random { support, atoms } => {
                let basis = basis.ok_or_else(|| Error::schema("basis", "required for explicit designs"))?;
                let atoms = atoms
                    .iter()
                    .map(|a| {
                        Ok(Atom {
                            design: Design::new(support.clone(), a.weights.clone(), n)?,
                            probability: a.probability,
                        })
                    })
                    .collect::<Result<Vec<_>>>()
                    .map_err(|e| e.under("design.atoms"))?;
                let design = RandomDesign::new(atoms).map_err(|e| e.under("design"))?;
                (basis, design, Domain::bounding(support))
            }
        })
    }
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

fn default_iterations() -> usize {
    2000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub model: ErrorModel,
    pub design: DesignSpec,
    /// Required for explicit designs; implied by builtin ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<Basis>,
    pub strategy: Strategy,
    pub theta_true: Vec<f64>,
    pub n: usize,
    /// First-run size for adaptive strategies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n1: Option<usize>,
    /// Exact first-run counts per support point, overriding the weight rule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_run_counts: Option<Vec<usize>>,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contrast: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub criterion: Option<Criterion>,
    /// Run the scenario once per budget listed here instead of once at `n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Vec<usize>>,
}

/// A validated scenario with its design resolved.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub model: ErrorModel,
    pub basis: Basis,
    pub design: RandomDesign,
    pub domain: Domain,
    pub theta: Vector,
    rows: Vec<Vector>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = parse_json(text)?;
        cfg.resolve()?;
        Ok(cfg)
    }

    pub fn with_n(&self, n: usize) -> Self {
        ScenarioConfig {
            n,
            sweep: None,
            ..self.clone()
        }
    }

    pub fn resolve(&self) -> Result<Scenario> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::schema(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        if self.iterations == 0 {
            return Err(Error::schema("iterations", "at least one iteration is required"));
        }
        let (basis, design, domain) = self.design.resolve(self.basis, self.n)?;
        let rows: Vec<Vector> = design.support().iter().map(|x| basis.row(x)).collect::<Result<_>>()?;
        let p = rows[0].len();
        if self.theta_true.len() != p {
            return Err(Error::schema(
                "theta_true",
                format!("expected {p} coefficients, got {}", self.theta_true.len()),
            ));
        }
        if let Some(c) = &self.contrast {
            if c.len() != p {
                return Err(Error::schema("contrast", format!("expected {p} entries, got {}", c.len())));
            }
        }
        if let Some(c) = &self.criterion {
            c.validate().map_err(|e| e.under("criterion"))?;
        }
        let d = rows.len();
        if self.strategy != Strategy::Fixed {
            let n1 = self.n1.ok_or_else(|| Error::schema("n1", "required for adaptive strategies"))?;
            if n1 > self.n || n1 < d {
                return Err(Error::schema("n1", format!("must lie in [{d}, {}]", self.n)));
            }
            if let Some(counts) = &self.first_run_counts {
                if counts.len() != d || counts.iter().sum::<usize>() != n1 {
                    return Err(Error::schema(
                        "first_run_counts",
                        format!("expected {d} counts summing to n1 = {n1}"),
                    ));
                }
            }
        }
        if let Some(sweep) = &self.sweep {
            if sweep.is_empty() {
                return Err(Error::schema("sweep", "list at least one budget"));
            }
        }
        Ok(Scenario {
            config: self.clone(),
            model: self.model,
            basis,
            design,
            domain,
            theta: Vector::from_column_slice(&self.theta_true),
            rows,
        })
    }
}

/// Everything kept from one successful iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub attempts: u64,
    pub atom: usize,
    pub h_inverse: Matrix,
    pub theta_hat: Vector,
    pub counts: Vec<usize>,
    pub g: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub iteration: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub schema_version: u32,
    pub config: ScenarioConfig,
    pub strategy: Strategy,
    pub n: usize,
    pub seed: u64,
    pub iterations: usize,
    pub r_effective: usize,
    pub retries: u64,
    pub excluded: Vec<Exclusion>,
    /// Estimate of the relevant-subset bound `E[H⁻¹]`.
    #[serde(with = "crate::linalg::rows")]
    pub mean_hinv: Matrix,
    #[serde(with = "crate::linalg::rows")]
    pub mean_hinv_se: Matrix,
    #[serde(with = "crate::linalg::rows")]
    pub var_mle: Matrix,
    #[serde(with = "crate::linalg::rows")]
    pub var_mle_se: Matrix,
    pub mean_theta: Vec<f64>,
    pub mean_theta_se: Vec<f64>,
    /// Cramér–Rao bound of the initializing design (atom average for random designs).
    #[serde(with = "crate::linalg::rows")]
    pub crlb: Matrix,
    pub mean_counts: Vec<f64>,
    #[serde(with = "crate::linalg::rows")]
    pub var_u: Matrix,
    #[serde(with = "crate::linalg::rows")]
    pub var_v: Matrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contrast: Option<ContrastSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub criterion: Option<CriterionSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastSummary {
    pub c: Vec<f64>,
    pub crlb: f64,
    pub mean_hinv: f64,
    pub mean_hinv_se: f64,
    pub var_mle: f64,
    pub var_mle_se: f64,
    /// `cᵀF⁻¹c / cᵀÊ[H⁻¹]c`, at most one up to noise.
    pub lb_eff: f64,
    pub lb_eff_se: f64,
    /// The same ratio the other way up.
    pub lb_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionSummary {
    pub criterion: Criterion,
    #[serde(with = "crate::linalg::rows")]
    pub reference_crlb: Matrix,
    pub reference_value: f64,
    /// `Ψ(F_ref⁻¹) / Ψ(Var̂[θ̂])`.
    pub var_eff: f64,
    pub var_eff_se: f64,
    /// `Ψ(F_ref⁻¹) / Ψ(Ê[H⁻¹])`.
    pub lb_eff: f64,
    pub lb_eff_se: f64,
    pub var_ratio: f64,
    pub lb_ratio: f64,
}

/// A report together with the per-iteration records behind it.
#[derive(Debug, Clone)]
pub struct SimulationRun {
    pub scenario: Scenario,
    pub report: SimulationReport,
    pub records: Vec<IterationRecord>,
}

// ---------------------------------------------------------------------------
// One iteration

struct Sampler<'a> {
    scenario: &'a Scenario,
    streams: Vec<StreamRng>,
}

impl Sampler<'_> {
    fn draw(&mut self, support: usize) -> Response {
        let mean = self.scenario.rows[support].dot(&self.scenario.theta);
        let e = self.scenario.model.sample(&mut self.streams[support]);
        Response {
            response: mean + e.residual,
            precision: e.precision,
        }
    }
}

struct GroupFit {
    eta_hat: f64,
    h: f64,
}

fn fit_group(model: &ErrorModel, index: usize, data: &[Response]) -> Result<GroupFit> {
    if data.is_empty() {
        return Ok(GroupFit { eta_hat: f64::NAN, h: 0.0 });
    }
    let ys: Vec<f64> = data.iter().map(|r| r.response).collect();
    let precisions: Option<Vec<f64>> = model
        .is_hetero()
        .then(|| data.iter().map(|r| r.precision.unwrap_or(f64::NAN)).collect());
    let eta_hat = match &precisions {
        Some(a) => weighted_location(&ys, a)?,
        None => mle_location(model, &ys)?,
    };
    let h = relevant_info_eta(
        model,
        &SupportGroup {
            support_index: index,
            responses: ys,
            precisions,
            eta_hat,
        },
    )?;
    Ok(GroupFit { eta_hat, h })
}

fn attempt(scenario: &Scenario, k: usize, attempt: u64) -> Result<IterationRecord> {
    let cfg = &scenario.config;
    let key = substream_key(cfg.seed, k as u64, attempt);
    let mut design_rng = stream(key, DESIGN_SLOT);
    let design = sample_design(&scenario.design, &mut design_rng);
    let atom = scenario
        .design
        .atoms
        .iter()
        .position(|a| &a.design == design)
        .unwrap_or(0);
    let d = design.len();
    let mut sampler = Sampler {
        scenario,
        streams: (0..d).map(|i| stream(key, ERROR_SLOT_BASE + i as u64)).collect(),
    };
    let model = &scenario.model;

    let mut data: Vec<Vec<Response>> = vec![Vec::new(); d];
    let (eta_hat, h): (Vec<f64>, Vec<f64>) = match cfg.strategy {
        Strategy::Fixed => {
            let alloc = allocate(&design.weights, design.n, true, &mut design_rng);
            for i in alloc {
                let r = sampler.draw(i);
                data[i].push(r);
            }
            let fits = data
                .iter()
                .enumerate()
                .map(|(i, grp)| fit_group(model, i, grp))
                .collect::<Result<Vec<_>>>()?;
            fits.iter().map(|f| (f.eta_hat, f.h)).unzip()
        }
        Strategy::Rrsd | Strategy::Drsd => {
            let mode = if cfg.strategy == Strategy::Rrsd { Mode::Rrsd } else { Mode::Drsd };
            let n1 = cfg.n1.expect("validated");
            let mut state = initialize(design.clone(), *model, n1, mode, key ^ 0xA5A5_5A5A_F00D_BEEF)?;
            if let Some(counts) = &cfg.first_run_counts {
                state.set_first_run(counts)?;
            }
            while let Some(alloc) = state.pending_allocations().map(<[usize]>::to_vec) {
                let responses: Vec<Response> = alloc
                    .iter()
                    .map(|&i| {
                        let r = sampler.draw(i);
                        data[i].push(r);
                        r
                    })
                    .collect();
                state.record_run(&responses)?;
            }
            state
                .groups
                .iter()
                .map(|g| (g.eta_hat.unwrap_or(f64::NAN), g.h))
                .unzip()
        }
    };

    let counts: Vec<usize> = data.iter().map(Vec::len).collect();
    let relevant = relevant_info_matrix(&h, design, scenario.basis)?;
    let h_inverse = spd_inverse(&relevant, "relevant information")?;

    let p = scenario.rows[0].len();
    let theta_hat = if d == p {
        let x = Matrix::from_fn(p, p, |i, j| scenario.rows[i][j]);
        x.lu()
            .solve(&Vector::from_column_slice(&eta_hat))
            .ok_or_else(|| Error::Singular("saturated design matrix is singular".into()))?
    } else {
        let obs: Vec<Observation<'_>> = data
            .iter()
            .enumerate()
            .flat_map(|(i, grp)| {
                grp.iter().map(move |r| Observation {
                    x: &design.support[i],
                    response: r.response,
                    precision: r.precision,
                })
            })
            .collect();
        Vector::from_vec(mle_theta(model, scenario.basis, &obs)?.theta_hat)
    };

    let mu = model.elemental_info();
    let g = h.iter().map(|&x| invariant_info(x, mu)).collect::<Result<Vec<_>>>()?;
    let (u, v) = uv_statistics(&g, &design.weights, design.n)?;
    Ok(IterationRecord {
        iteration: k,
        attempts: attempt + 1,
        atom,
        h_inverse,
        theta_hat,
        counts,
        g,
        u,
        v,
    })
}

fn run_iteration(scenario: &Scenario, k: usize) -> std::result::Result<IterationRecord, Exclusion> {
    let mut last = String::new();
    for a in 0..=MAX_RETRIES {
        match attempt(scenario, k, a) {
            Ok(r) => return Ok(r),
            Err(e) => last = e.to_string(),
        }
    }
    Err(Exclusion {
        iteration: k,
        reason: last,
    })
}

// ---------------------------------------------------------------------------
// Aggregation

fn mean_and_se<F: Fn(&IterationRecord) -> f64>(records: &[IterationRecord], f: F) -> (f64, f64) {
    let r = records.len() as f64;
    let mean = records.iter().map(&f).sum::<f64>() / r;
    let var = if records.len() > 1 {
        records.iter().map(|x| (f(x) - mean).powi(2)).sum::<f64>() / (r - 1.0)
    } else {
        0.0
    };
    (mean, (var / r).sqrt())
}

fn matrix_mean(records: &[IterationRecord], p: usize, f: impl Fn(&IterationRecord, usize, usize) -> f64) -> (Matrix, Matrix) {
    let mut mean = Matrix::zeros(p, p);
    let mut se = Matrix::zeros(p, p);
    for i in 0..p {
        for j in 0..=i {
            let (m, s) = mean_and_se(records, |r| f(r, i, j));
            mean[(i, j)] = m;
            mean[(j, i)] = m;
            se[(i, j)] = s;
            se[(j, i)] = s;
        }
    }
    (mean, se)
}

fn sample_cov(vectors: &[&[f64]]) -> Matrix {
    let r = vectors.len();
    let p = vectors[0].len();
    let mean: Vec<f64> = (0..p).map(|j| vectors.iter().map(|v| v[j]).sum::<f64>() / r as f64).collect();
    let mut cov = Matrix::zeros(p, p);
    if r < 2 {
        return cov;
    }
    for v in vectors {
        for i in 0..p {
            for j in 0..=i {
                cov[(i, j)] += (v[i] - mean[i]) * (v[j] - mean[j]);
            }
        }
    }
    for i in 0..p {
        for j in 0..=i {
            cov[(i, j)] /= (r - 1) as f64;
            cov[(j, i)] = cov[(i, j)];
        }
    }
    cov
}

/// Covariance of θ̂ over the given records.
pub fn mle_covariance(records: &[IterationRecord]) -> Matrix {
    let v: Vec<&[f64]> = records.iter().map(|r| r.theta_hat.as_slice()).collect();
    sample_cov(&v)
}

/// Mean of H⁻¹ over the given records.
pub fn mean_h_inverse(records: &[IterationRecord]) -> Matrix {
    let p = records[0].h_inverse.nrows();
    records.iter().fold(Matrix::zeros(p, p), |acc, r| acc + &r.h_inverse) / records.len() as f64
}

fn bootstrap_rng(seed: u64, salt: u64) -> StreamRng {
    stream(substream_key(seed, u64::MAX - salt, 0), DESIGN_SLOT)
}

fn resample<R: Rng>(records: &[IterationRecord], rng: &mut R) -> Vec<IterationRecord> {
    let r = records.len();
    (0..r).map(|_| records[rng.random_range(0..r)].clone()).collect()
}

fn std_dev(xs: &[f64]) -> f64 {
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)).sqrt()
}

/// Run every iteration of a scenario and aggregate.
pub fn simulate(config: &ScenarioConfig) -> Result<SimulationRun> {
    let scenario = config.resolve()?;
    let outcomes: Vec<std::result::Result<IterationRecord, Exclusion>> = (0..config.iterations)
        .into_par_iter()
        .map(|k| run_iteration(&scenario, k))
        .collect();
    let mut records = Vec::with_capacity(outcomes.len());
    let mut excluded = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => records.push(r),
            Err(e) => excluded.push(e),
        }
    }
    if records.len() < 2 {
        return Err(Error::Numeric(format!(
            "only {} of {} iterations succeeded; first failure: {}",
            records.len(),
            config.iterations,
            excluded.first().map_or("none", |e| e.reason.as_str())
        )));
    }
    let report = aggregate(&scenario, &records, excluded)?;
    Ok(SimulationRun {
        scenario,
        report,
        records,
    })
}

/// Monte Carlo report for one scenario.
pub fn run_scenario(config: &ScenarioConfig) -> Result<SimulationReport> {
    Ok(simulate(config)?.report)
}

fn aggregate(scenario: &Scenario, records: &[IterationRecord], excluded: Vec<Exclusion>) -> Result<SimulationReport> {
    let cfg = &scenario.config;
    let p = scenario.theta.len();
    let d = scenario.rows.len();
    let r = records.len() as f64;

    let (mean_hinv, mean_hinv_se) = matrix_mean(records, p, |x, i, j| x.h_inverse[(i, j)]);
    let mean_theta: Vec<f64> = (0..p).map(|j| mean_and_se(records, |x| x.theta_hat[j]).0).collect();
    let mean_theta_se: Vec<f64> = (0..p).map(|j| mean_and_se(records, |x| x.theta_hat[j]).1).collect();
    let var_mle = mle_covariance(records);
    let (_, prod_se) = matrix_mean(records, p, |x, i, j| {
        (x.theta_hat[i] - mean_theta[i]) * (x.theta_hat[j] - mean_theta[j])
    });
    let var_mle_se = prod_se * (r / (r - 1.0));
    let crlb = random_crlb(&scenario.design, scenario.basis, &scenario.model)?;
    let mean_counts = (0..d)
        .map(|i| records.iter().map(|x| x.counts[i] as f64).sum::<f64>() / r)
        .collect();
    let us: Vec<&[f64]> = records.iter().map(|x| x.u.as_slice()).collect();
    let vs: Vec<&[f64]> = records.iter().map(|x| x.v.as_slice()).collect();

    let contrast = cfg
        .contrast
        .as_ref()
        .map(|c| contrast_summary(records, &crlb, c))
        .transpose()?;
    let criterion = cfg
        .criterion
        .map(|crit| criterion_summary(scenario, records, &mean_hinv, &var_mle, crit))
        .transpose()?;

    Ok(SimulationReport {
        schema_version: SCHEMA_VERSION,
        config: cfg.clone(),
        strategy: cfg.strategy,
        n: cfg.n,
        seed: cfg.seed,
        iterations: cfg.iterations,
        r_effective: records.len(),
        retries: records.iter().map(|x| x.attempts - 1).sum::<u64>() + excluded.len() as u64 * MAX_RETRIES,
        excluded,
        mean_hinv,
        mean_hinv_se,
        var_mle,
        var_mle_se,
        mean_theta,
        mean_theta_se,
        crlb,
        mean_counts,
        var_u: sample_cov(&us),
        var_v: sample_cov(&vs),
        contrast,
        criterion,
    })
}

fn contrast_summary(records: &[IterationRecord], crlb: &Matrix, c: &[f64]) -> Result<ContrastSummary> {
    let cv = Vector::from_column_slice(c);
    if cv.norm() == 0.0 {
        return Err(Error::schema("contrast", "contrast must be non-zero"));
    }
    let r = records.len() as f64;
    let (mean_hinv, mean_hinv_se) = mean_and_se(records, |x| quad_form(&x.h_inverse, &cv));
    let (mean_lin, _) = mean_and_se(records, |x| cv.dot(&x.theta_hat));
    let (sq, sq_se) = mean_and_se(records, |x| (cv.dot(&x.theta_hat) - mean_lin).powi(2));
    let bound = quad_form(crlb, &cv);
    let lb_eff = bound / mean_hinv;
    Ok(ContrastSummary {
        c: c.to_vec(),
        crlb: bound,
        mean_hinv,
        mean_hinv_se,
        var_mle: sq * r / (r - 1.0),
        var_mle_se: sq_se * r / (r - 1.0),
        lb_eff,
        lb_eff_se: lb_eff * mean_hinv_se / mean_hinv,
        lb_ratio: 1.0 / lb_eff,
    })
}

fn criterion_summary(
    scenario: &Scenario,
    records: &[IterationRecord],
    mean_hinv: &Matrix,
    var_mle: &Matrix,
    criterion: Criterion,
) -> Result<CriterionSummary> {
    let cfg = &scenario.config;
    let reference = reference_crlb(scenario.design.support(), cfg.n, scenario.basis, &scenario.model, criterion.kind)?;
    let psi = |m: &Matrix| covariance_criterion(m, criterion, scenario.basis, &scenario.domain);
    let reference_value = psi(&reference)?;
    let var_eff = reference_value / psi(var_mle)?;
    let lb_eff = reference_value / psi(mean_hinv)?;

    let mut rng = bootstrap_rng(cfg.seed, 0);
    let mut var_boot = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    let mut lb_boot = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    for _ in 0..BOOTSTRAP_RESAMPLES {
        let sample = resample(records, &mut rng);
        if let Ok(v) = psi(&mle_covariance(&sample)) {
            var_boot.push(reference_value / v);
        }
        lb_boot.push(reference_value / psi(&mean_h_inverse(&sample))?);
    }
    Ok(CriterionSummary {
        criterion,
        reference_crlb: reference,
        reference_value,
        var_eff,
        var_eff_se: std_dev(&var_boot),
        lb_eff,
        lb_eff_se: std_dev(&lb_boot),
        var_ratio: 1.0 / var_eff,
        lb_ratio: 1.0 / lb_eff,
    })
}

/// Criterion-scale efficiencies of a finished run under any criterion.
pub fn criterion_report(run: &SimulationRun, criterion: Criterion) -> Result<CriterionSummary> {
    criterion.validate()?;
    criterion_summary(&run.scenario, &run.records, &run.report.mean_hinv, &run.report.var_mle, criterion)
}

/// `cᵀF⁻¹c / cᵀÊ[H⁻¹]c` for a contrast, from a report.
pub fn lb_efficiency(report: &SimulationReport, c: &[f64]) -> Result<f64> {
    let cv = Vector::from_column_slice(c);
    if cv.len() != report.crlb.nrows() {
        return Err(Error::Dimension {
            context: "contrast",
            expected: report.crlb.nrows(),
            got: cv.len(),
        });
    }
    let denom = quad_form(&report.mean_hinv, &cv);
    if !(denom > 0.0) {
        return Err(Error::Numeric("relevant-subset bound is not positive for this contrast".into()));
    }
    Ok(quad_form(&report.crlb, &cv) / denom)
}

/// `Ψ(reference) / Ψ(Var̂[θ̂])` on the covariance scale.
pub fn var_efficiency(
    report: &SimulationReport,
    criterion: Criterion,
    basis: Basis,
    domain: &Domain,
    reference_crlb: &Matrix,
) -> Result<f64> {
    let num = covariance_criterion(reference_crlb, criterion, basis, domain)?;
    let den = covariance_criterion(&report.var_mle, criterion, basis, domain)?;
    Ok(num / den)
}

/// Empirical covariances of `u` and `v` across iterations.
pub fn uv_variance_study(config: &ScenarioConfig) -> Result<(Matrix, Matrix)> {
    let report = run_scenario(config)?;
    Ok((report.var_u, report.var_v))
}

/// Gaps in the chain `cᵀVar̂c ≥ cᵀÊ[H⁻¹]c ≥ cᵀF⁻¹c` with their Monte Carlo errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderingCheck {
    pub variance_over_bound: f64,
    pub variance_over_bound_se: f64,
    pub bound_over_crlb: f64,
    pub bound_over_crlb_se: f64,
}

impl OrderingCheck {
    /// Both gaps are non-negative up to `k` standard errors.
    pub fn holds(&self, k: f64) -> bool {
        self.variance_over_bound >= -k * self.variance_over_bound_se
            && self.bound_over_crlb >= -k * self.bound_over_crlb_se - 1e-12 * self.bound_over_crlb.abs().max(1.0)
    }
}

pub fn ordering_check(run: &SimulationRun, c: &[f64]) -> Result<OrderingCheck> {
    let cv = Vector::from_column_slice(c);
    if cv.len() != run.report.crlb.nrows() {
        return Err(Error::Dimension {
            context: "contrast",
            expected: run.report.crlb.nrows(),
            got: cv.len(),
        });
    }
    let recs = &run.records;
    let r = recs.len() as f64;
    let (centre, _) = mean_and_se(recs, |x| cv.dot(&x.theta_hat));
    let (gap, gap_se) = mean_and_se(recs, |x| {
        (cv.dot(&x.theta_hat) - centre).powi(2) * r / (r - 1.0) - quad_form(&x.h_inverse, &cv)
    });
    let (bound, bound_se) = mean_and_se(recs, |x| quad_form(&x.h_inverse, &cv));
    Ok(OrderingCheck {
        variance_over_bound: gap,
        variance_over_bound_se: gap_se,
        bound_over_crlb: bound - quad_form(&run.report.crlb, &cv),
        bound_over_crlb_se: bound_se,
    })
}

// ---------------------------------------------------------------------------
// Paired comparisons

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedComparison {
    /// Statistic of the first run minus that of the second.
    pub difference: f64,
    pub lower_95: f64,
    pub upper_95: f64,
    /// Share of bootstrap replicates with a non-positive difference.
    pub p_not_greater: f64,
    pub pairs: usize,
}

/// Paired bootstrap of `stat(a) - stat(b)` over iterations present in both runs.
pub fn paired_bootstrap<F>(a: &[IterationRecord], b: &[IterationRecord], seed: u64, stat: F) -> Result<PairedComparison>
where
    F: Fn(&[IterationRecord]) -> Result<f64>,
{
    let mut left = Vec::new();
    let mut right = Vec::new();
    let mut j = 0;
    for ra in a {
        while j < b.len() && b[j].iteration < ra.iteration {
            j += 1;
        }
        if j < b.len() && b[j].iteration == ra.iteration {
            left.push(ra.clone());
            right.push(b[j].clone());
        }
    }
    if left.len() < 2 {
        return Err(Error::InvalidInput("runs share fewer than two iterations".into()));
    }
    let difference = stat(&left)? - stat(&right)?;
    let mut rng = bootstrap_rng(seed, 1);
    let m = left.len();
    let mut diffs = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    for _ in 0..BOOTSTRAP_RESAMPLES {
        let idx: Vec<usize> = (0..m).map(|_| rng.random_range(0..m)).collect();
        let la: Vec<IterationRecord> = idx.iter().map(|&i| left[i].clone()).collect();
        let lb: Vec<IterationRecord> = idx.iter().map(|&i| right[i].clone()).collect();
        if let (Ok(x), Ok(y)) = (stat(&la), stat(&lb)) {
            diffs.push(x - y);
        }
    }
    diffs.sort_by(f64::total_cmp);
    let q = |p: f64| diffs[((diffs.len() - 1) as f64 * p).round() as usize];
    Ok(PairedComparison {
        difference,
        lower_95: q(0.025),
        upper_95: q(0.975),
        p_not_greater: diffs.iter().filter(|&&x| x <= 0.0).count() as f64 / diffs.len() as f64,
        pairs: m,
    })
}

/// Paired comparison of covariance-scale efficiencies `Ψ(ref)/Ψ(Var̂)` between two runs.
pub fn compare_var_eff(a: &SimulationRun, b: &SimulationRun, criterion: Criterion) -> Result<PairedComparison> {
    let sc = &a.scenario;
    let reference = reference_crlb(sc.design.support(), sc.config.n, sc.basis, &sc.model, criterion.kind)?;
    let psi_ref = covariance_criterion(&reference, criterion, sc.basis, &sc.domain)?;
    paired_bootstrap(&a.records, &b.records, sc.config.seed, |recs| {
        Ok(psi_ref / covariance_criterion(&mle_covariance(recs), criterion, sc.basis, &sc.domain)?)
    })
}

// ---------------------------------------------------------------------------
// Tabular output

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub n: usize,
    pub strategy: String,
    pub metric: String,
    pub value: f64,
    pub mc_se: f64,
}

impl SimulationReport {
    /// Flat rows for plotting, labelled with `strategy`.
    pub fn csv_rows(&self, strategy: &str) -> Vec<CsvRow> {
        let row = |metric: String, value: f64, mc_se: f64| CsvRow {
            n: self.n,
            strategy: strategy.to_string(),
            metric,
            value,
            mc_se,
        };
        let mut out = Vec::new();
        if let Some(c) = &self.contrast {
            out.push(row("lb_eff".into(), c.lb_eff, c.lb_eff_se));
            out.push(row("contrast_mean_hinv".into(), c.mean_hinv, c.mean_hinv_se));
            out.push(row("contrast_var_mle".into(), c.var_mle, c.var_mle_se));
            out.push(row("contrast_crlb".into(), c.crlb, 0.0));
        }
        if let Some(c) = &self.criterion {
            let tag = format!("{:?}", c.criterion.kind);
            out.push(row(format!("lb_eff_{tag}"), c.lb_eff, c.lb_eff_se));
            out.push(row(format!("var_eff_{tag}"), c.var_eff, c.var_eff_se));
        }
        out
    }
}

pub fn write_csv(rows: &[CsvRow]) -> String {
    let mut s = String::from("n,strategy,metric,value,mc_se\n");
    for r in rows {
        s.push_str(&format!("{},{},{},{},{}\n", r.n, r.strategy, r.metric, r.value, r.mc_se));
    }
    s
}
