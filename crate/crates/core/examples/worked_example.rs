//! First run of a two-treatment experiment under the heteroscedastic
//! normal/gamma law, followed by the randomized and deterministic advice for
//! run two.

use rsdesign::adaptive::{initialize, Mode, Response, RunPlan};
use rsdesign::designs::{builtin_design, BuiltinName};
use rsdesign::ErrorModel;

fn main() -> rsdesign::Result<()> {
    let model = ErrorModel::hetero_normal_gamma(0.25, 0.25)?;
    let design = builtin_design(BuiltinName::Balanced2, 36)?.deterministic;

    // Two observations per treatment; the precisions are observed alongside.
    let first_run = [(0.3, 0.8), (-0.4, 1.1), (1.2, 1.8), (0.9, 2.2)].map(|(y, a)| Response {
        response: y,
        precision: Some(a),
    });

    for mode in [Mode::Rrsd, Mode::Drsd] {
        let mut state = initialize(design.clone(), model, 4, mode, 2024)?;
        println!("{mode:?}: run 1 allocates {:?}", state.pending_allocations().unwrap());
        state.record_run(&first_run)?;
        println!("  h = {:?}", state.groups.iter().map(|g| g.h).collect::<Vec<_>>());
        println!("  u = {:?}", state.u_current);
        match &state.pending.as_ref().unwrap().plan {
            RunPlan::Randomized { size, probs, .. } => {
                println!("  run 2: {size} observations, treatment probabilities {probs:?}")
            }
            RunPlan::Deterministic { index, scores } => {
                println!("  run 2: one observation on treatment {} (scores {scores:?})", index + 1)
            }
        }
    }
    Ok(())
}
