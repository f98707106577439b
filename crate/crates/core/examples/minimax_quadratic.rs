//! Quadratic regression on [-1, 1] with light-tailed errors: G- and
//! D-efficiency of the G-optimal design, its randomized version, and DRSD
//! started from each.

use rsdesign::cli::{fig2_config, Fig2Design};
use rsdesign::designs::{optimal_weights, Criterion, CriterionKind};
use rsdesign::montecarlo::{compare_var_eff, criterion_report, simulate};
use rsdesign::Basis;

fn main() -> rsdesign::Result<()> {
    let support = vec![vec![-1.0], vec![0.0], vec![1.0]];
    for kind in [CriterionKind::D, CriterionKind::A] {
        println!("{kind:?}-optimal weights: {:?}", optimal_weights(&support, Basis::Quadratic, kind)?);
    }

    let iterations = 400;
    for n in [8, 13, 31] {
        println!("\nn = {n}");
        let mut runs = Vec::new();
        for d in Fig2Design::ALL {
            let run = simulate(&fig2_config(d, n, 3, iterations)?)?;
            let g = criterion_report(&run, Criterion::new(CriterionKind::G))?;
            let dd = criterion_report(&run, Criterion::new(CriterionKind::D))?;
            println!(
                "  {:<10} Var-EFF G {:.3} ± {:.3}   D {:.3} ± {:.3}",
                d.label(),
                g.var_eff,
                g.var_eff_se,
                dd.var_eff,
                dd.var_eff_se
            );
            runs.push(run);
        }
        let cmp = compare_var_eff(&runs[3], &runs[1], Criterion::new(CriterionKind::G))?;
        println!(
            "  drsd_pi_g - pi_g: {:+.3} (95% interval {:+.3} .. {:+.3})",
            cmp.difference, cmp.lower_95, cmp.upper_95
        );
    }
    Ok(())
}
