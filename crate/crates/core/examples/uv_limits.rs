//! Spread of the allocation statistics u and v under a fixed design and under
//! RRSD, and the leading-order gap between the relevant-subset bound and the
//! Cramér-Rao bound that they imply.

use rsdesign::designs::{builtin_design, BuiltinName};
use rsdesign::information::asymptotic_gap;
use rsdesign::montecarlo::{run_scenario, DesignSpec, ScenarioConfig, Strategy, SCHEMA_VERSION};
use rsdesign::ErrorModel;

fn main() -> rsdesign::Result<()> {
    let model = ErrorModel::cauchy(1.0)?;
    let gamma2 = model.moment_table().gamma_alt.powi(2);
    let n = 100;
    let base = ScenarioConfig {
        schema_version: SCHEMA_VERSION,
        model,
        design: DesignSpec::Builtin {
            name: BuiltinName::Balanced2,
            randomized: false,
        },
        basis: None,
        strategy: Strategy::Fixed,
        theta_true: vec![0.0, 0.0],
        n,
        n1: Some(10),
        first_run_counts: None,
        iterations: 400,
        seed: 19,
        contrast: Some(vec![0.0, 1.0]),
        criterion: None,
        sweep: None,
    };
    let design = builtin_design(BuiltinName::Balanced2, n)?;
    println!("limit gamma^2 w(1-w) = gamma^2 w^2 = {:.4}", gamma2 / 4.0);
    for s in [Strategy::Fixed, Strategy::Rrsd] {
        let r = run_scenario(&ScenarioConfig { strategy: s, ..base.clone() })?;
        let gap = asymptotic_gap(&design.deterministic, design.basis, &model, &[0.0, 1.0], &r.var_u, &r.var_v)?;
        let c = r.contrast.as_ref().unwrap();
        println!(
            "{:<6} Var[u1]/n {:.4}  Var[v1]/n {:.4}  predicted n^2 gap {:.3}  observed {:.3}",
            s.label(),
            r.var_u[(0, 0)] / n as f64,
            r.var_v[(0, 0)] / n as f64,
            gap,
            (n * n) as f64 * (c.mean_hinv - c.crlb)
        );
    }
    Ok(())
}
