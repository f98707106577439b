//! Information measures of the three error laws and the relevant-subset
//! information of a small Cauchy sample.

use rsdesign::error_models::ErrorModel;
use rsdesign::estimation::mle_location;
use rsdesign::information::{invariant_info, q_statistic, relevant_info_eta, SupportGroup};

fn main() -> rsdesign::Result<()> {
    let laws = [
        ("normal", ErrorModel::generalized_normal(2.0, 1.0)?),
        ("generalized normal, shape 10", ErrorModel::generalized_normal(10.0, 1.0)?),
        ("cauchy", ErrorModel::cauchy(1.0)?),
        ("normal/gamma (1/4, 1/4)", ErrorModel::hetero_normal_gamma(0.25, 0.25)?),
    ];
    println!("{:<30} {:>10} {:>10} {:>10}", "law", "mu", "gamma", "gamma_alt");
    for (name, law) in &laws {
        let m = law.moment_table();
        println!("{name:<30} {:>10.5} {:>10.5} {:>10.5}", m.mu, m.gamma, m.gamma_alt);
    }

    let cauchy = ErrorModel::cauchy(1.0)?;
    let ys = vec![-0.6, 0.0, 0.6];
    let eta_hat = mle_location(&cauchy, &ys)?;
    let h = relevant_info_eta(
        &cauchy,
        &SupportGroup {
            support_index: 0,
            responses: ys.clone(),
            precisions: None,
            eta_hat,
        },
    )?;
    let mu = cauchy.elemental_info();
    println!("\nsample {ys:?}: location {eta_hat:.6}, h = {h:.6}");
    println!("expected information n*mu = {:.6}, g = h/mu = {:.6}", ys.len() as f64 * mu, invariant_info(h, mu)?);
    for r in [0.0, 0.5, 1.0, 2.0, 5.0] {
        println!("q({r}) = {:+.4}", q_statistic(&cauchy, r)?);
    }
    Ok(())
}
