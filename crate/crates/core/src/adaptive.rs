//! Randomized (RRSD) and deterministic (DRSD) relevant-subset allocation.
//!
//! An [`ExperimentState`] always carries the allocations of the run that is
//! waiting for responses. Recording those responses refits the affected
//! groups, recomputes `u` from all data so far and, if budget remains,
//! plans and allocates the next run.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::designs::{integral_counts, Design};
use crate::error::{Error, Result};
use crate::error_models::ErrorModel;
use crate::estimation::{mle_location, weighted_location};
use crate::information::{invariant_info, relevant_info_eta, uv_statistics, SupportGroup};
use crate::rng::{stream, substream_key, StreamRng, DESIGN_SLOT};
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Rrsd,
    Drsd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RunPlan {
    /// `size` observations, each placed at support point `i` with probability `probs[i]`.
    Randomized { size: usize, probs: Vec<f64>, capped: bool },
    /// One observation at `index`; `scores` are `wᵢ - uᵢ`.
    Deterministic { index: usize, scores: Vec<f64> },
}

impl RunPlan {
    pub fn size(&self) -> usize {
        match self {
            RunPlan::Randomized { size, .. } => *size,
            RunPlan::Deterministic { .. } => 1,
        }
    }
}

/// Ceiling that ignores floating-point noise just above an integer.
pub fn tolerant_ceil(x: f64) -> f64 {
    (x - 1e-9 * x.abs().max(1.0)).ceil()
}

/// RRSD run size and probabilities from the current `u`.
pub fn rrsd_plan(u: &[f64], w: &[f64], remaining: usize) -> Result<RunPlan> {
    if u.len() != w.len() {
        return Err(Error::Dimension {
            context: "rrsd plan",
            expected: w.len(),
            got: u.len(),
        });
    }
    if remaining == 0 {
        return Err(Error::Precondition("no budget remains".into()));
    }
    let needed = u
        .iter()
        .zip(w)
        .map(|(ui, wi)| ui / wi)
        .fold(f64::NEG_INFINITY, f64::max);
    let size = tolerant_ceil(needed);
    if size < 1.0 {
        return Ok(RunPlan::Randomized {
            size: 1,
            probs: w.to_vec(),
            capped: false,
        });
    }
    if size > remaining as f64 {
        return Ok(RunPlan::Randomized {
            size: remaining,
            probs: w.to_vec(),
            capped: true,
        });
    }
    let size_f = size;
    let raw: Vec<f64> = u.iter().zip(w).map(|(ui, wi)| (wi - ui / size_f).max(0.0)).collect();
    let total: f64 = raw.iter().sum();
    Ok(RunPlan::Randomized {
        size: size as usize,
        probs: raw.iter().map(|p| p / total).collect(),
        capped: false,
    })
}

/// DRSD choice: `argmax (wᵢ - uᵢ)`, lowest index on ties.
pub fn drsd_choice(u: &[f64], w: &[f64]) -> Result<RunPlan> {
    if u.len() != w.len() || u.is_empty() {
        return Err(Error::Dimension {
            context: "drsd choice",
            expected: w.len(),
            got: u.len(),
        });
    }
    let scores: Vec<f64> = w.iter().zip(u).map(|(wi, ui)| wi - ui).collect();
    let index = scores
        .iter()
        .enumerate()
        .fold(0, |best, (i, &s)| if s > scores[best] { i } else { best });
    Ok(RunPlan::Deterministic { index, scores })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Observation {
    pub support: usize,
    pub response: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<f64>,
}

/// A response for the pending run; precision only for the heteroscedastic law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Response {
    pub response: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub count: usize,
    pub eta_hat: Option<f64>,
    pub h: f64,
    pub g: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendingRun {
    /// 1-based run number.
    pub run: usize,
    pub plan: RunPlan,
    pub allocations: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentState {
    pub design: Design,
    pub model: ErrorModel,
    pub mode: Mode,
    pub n1: usize,
    pub seed: u64,
    /// Completed runs.
    pub run_index: usize,
    pub observations: Vec<Observation>,
    pub groups: Vec<GroupStats>,
    pub g_current: Vec<f64>,
    pub u_current: Vec<f64>,
    pub remaining: usize,
    pub capped: bool,
    pub pending: Option<PendingRun>,
}

fn allocation_rng(seed: u64, run: usize) -> StreamRng {
    stream(substream_key(seed, run as u64, 0), DESIGN_SLOT)
}

fn draw_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Allocate `size` observations: exactly `size·pᵢ` each when those are
/// integers, otherwise independently with probabilities `p`.
pub fn allocate<R: Rng + ?Sized>(probs: &[f64], size: usize, exact_if_integral: bool, rng: &mut R) -> Vec<usize> {
    if exact_if_integral {
        if let Some(counts) = integral_counts(probs, size) {
            return counts
                .iter()
                .enumerate()
                .flat_map(|(i, &c)| std::iter::repeat_n(i, c))
                .collect();
        }
    }
    (0..size).map(|_| draw_index(probs, rng)).collect()
}

/// Start an experiment: fix the first run's allocations.
pub fn initialize(design: Design, model: ErrorModel, n1: usize, mode: Mode, seed: u64) -> Result<ExperimentState> {
    design.validate()?;
    let d = design.len();
    if n1 > design.n {
        return Err(Error::InvalidInput(format!(
            "first run size {n1} exceeds the budget {}",
            design.n
        )));
    }
    if n1 < d {
        return Err(Error::InvalidInput(format!(
            "first run size {n1} is smaller than the {d} support points"
        )));
    }
    if design.weights.iter().any(|&w| w <= 0.0) {
        return Err(Error::InvalidInput("adaptive designs need strictly positive weights".into()));
    }
    let mut rng = allocation_rng(seed, 1);
    let allocations = allocate(&design.weights, n1, true, &mut rng);
    let plan = RunPlan::Randomized {
        size: n1,
        probs: design.weights.clone(),
        capped: false,
    };
    Ok(ExperimentState {
        groups: vec![GroupStats { count: 0, eta_hat: None, h: 0.0, g: 0.0 }; d],
        g_current: vec![0.0; d],
        u_current: vec![0.0; d],
        remaining: design.n,
        design,
        model,
        mode,
        n1,
        seed,
        run_index: 0,
        observations: Vec::new(),
        capped: false,
        pending: Some(PendingRun { run: 1, plan, allocations }),
    })
}

impl ExperimentState {
    pub fn is_complete(&self) -> bool {
        self.remaining == 0
    }

    pub fn pending_allocations(&self) -> Option<&[usize]> {
        self.pending.as_ref().map(|p| p.allocations.as_slice())
    }

    /// Replace the first run's allocation with exact per-point counts.
    pub fn set_first_run(&mut self, counts: &[usize]) -> Result<()> {
        if self.run_index != 0 {
            return Err(Error::Precondition("the first run has already been recorded".into()));
        }
        if counts.len() != self.design.len() {
            return Err(Error::Dimension {
                context: "first-run counts",
                expected: self.design.len(),
                got: counts.len(),
            });
        }
        if counts.iter().sum::<usize>() != self.n1 || counts.contains(&0) {
            return Err(Error::InvalidInput(format!(
                "first-run counts must be positive and sum to {}",
                self.n1
            )));
        }
        let pending = self.pending.as_mut().expect("a fresh state has a pending run");
        pending.allocations = counts
            .iter()
            .enumerate()
            .flat_map(|(i, &c)| std::iter::repeat_n(i, c))
            .collect();
        Ok(())
    }

    /// Responses observed at support point `i`, with precisions if any.
    pub fn group(&self, i: usize) -> (Vec<f64>, Option<Vec<f64>>) {
        let obs: Vec<&Observation> = self.observations.iter().filter(|o| o.support == i).collect();
        let ys = obs.iter().map(|o| o.response).collect();
        let precisions = self
            .model
            .is_hetero()
            .then(|| obs.iter().map(|o| o.precision.unwrap_or(f64::NAN)).collect());
        (ys, precisions)
    }

    fn check_planning(&self) -> Result<()> {
        if self.run_index == 0 {
            return Err(Error::Precondition("the first run's responses have not been recorded".into()));
        }
        if self.remaining == 0 {
            return Err(Error::Precondition("the experiment is complete".into()));
        }
        Ok(())
    }

    /// RRSD plan for the next run.
    pub fn plan_next_run(&self) -> Result<RunPlan> {
        self.check_planning()?;
        rrsd_plan(&self.u_current, &self.design.weights, self.remaining)
    }

    /// DRSD choice for the next single observation.
    pub fn drsd_next_point(&self) -> Result<RunPlan> {
        self.check_planning()?;
        drsd_choice(&self.u_current, &self.design.weights)
    }

    pub fn next_plan(&self) -> Result<RunPlan> {
        match self.mode {
            Mode::Rrsd => self.plan_next_run(),
            Mode::Drsd => self.drsd_next_point(),
        }
    }

    /// Record responses for the pending run, in allocation order.
    pub fn record_run(&mut self, responses: &[Response]) -> Result<()> {
        let pending = self
            .pending
            .take()
            .ok_or_else(|| Error::Precondition("no run is pending; the experiment is complete".into()))?;
        if responses.len() != pending.allocations.len() {
            let expected = pending.allocations.len();
            self.pending = Some(pending);
            return Err(Error::Dimension {
                context: "run responses",
                expected,
                got: responses.len(),
            });
        }
        for r in responses {
            let bad_precision = match (self.model.is_hetero(), r.precision) {
                (true, Some(a)) => !(a.is_finite() && a > 0.0),
                (true, None) | (false, Some(_)) => true,
                (false, None) => false,
            };
            if !r.response.is_finite() || bad_precision {
                self.pending = Some(pending);
                return Err(Error::InvalidInput(
                    "responses must be finite, with a positive precision exactly when the model observes one"
                        .into(),
                ));
            }
        }

        let mut touched = vec![false; self.design.len()];
        for (&support, r) in pending.allocations.iter().zip(responses) {
            touched[support] = true;
            self.observations.push(Observation {
                support,
                response: r.response,
                precision: r.precision,
            });
        }
        if let RunPlan::Randomized { capped: true, .. } = pending.plan {
            self.capped = true;
        }
        self.run_index += 1;
        self.remaining = self.design.n - self.observations.len();

        for (i, _) in touched.iter().enumerate().filter(|(_, &t)| t) {
            self.groups[i] = self.refit_group(i)?;
        }
        self.g_current = self.groups.iter().map(|s| s.g).collect();
        let (u, _) = uv_statistics(&self.g_current, &self.design.weights, self.design.n)?;
        self.u_current = u;

        if self.remaining > 0 {
            let plan = self.next_plan()?;
            let run = pending.run + 1;
            let allocations = match &plan {
                RunPlan::Randomized { size, probs, .. } => {
                    allocate(probs, *size, false, &mut allocation_rng(self.seed, run))
                }
                RunPlan::Deterministic { index, .. } => vec![*index],
            };
            self.pending = Some(PendingRun { run, plan, allocations });
        }
        Ok(())
    }

    fn refit_group(&self, i: usize) -> Result<GroupStats> {
        let (ys, precisions) = self.group(i);
        let eta_hat = match &precisions {
            Some(a) => weighted_location(&ys, a)?,
            None => mle_location(&self.model, &ys)?,
        };
        let count = ys.len();
        let h = relevant_info_eta(
            &self.model,
            &SupportGroup {
                support_index: i,
                responses: ys,
                precisions,
                eta_hat,
            },
        )?;
        Ok(GroupStats {
            count,
            eta_hat: Some(eta_hat),
            h,
            g: invariant_info(h, self.model.elemental_info())?,
        })
    }

    /// SHA-256 of the canonical serialisation, used to detect stale files.
    pub fn state_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("state serialises");
        hex::encode(Sha256::digest(bytes))
    }
}
