//! Scaled relevant-subset bound and MLE variance for a 2x2 factorial with
//! Cauchy errors.

use rsdesign::cli::table1_config;
use rsdesign::montecarlo::{run_scenario, Strategy};

fn print(title: &str, m: &rsdesign::linalg::Matrix, n: f64) {
    println!("{title}");
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:7.2}", n * m[(i, j)])).collect();
        println!("  {}", row.join(" "));
    }
}

fn main() -> rsdesign::Result<()> {
    let iterations = 400;
    for s in [Strategy::Fixed, Strategy::Rrsd, Strategy::Drsd] {
        let r = run_scenario(&table1_config(s, 11, iterations)?)?;
        let n = r.n as f64;
        if s == Strategy::Fixed {
            print("n * CRLB", &r.crlb, n);
        }
        print(&format!("n * E[H^-1] ({})", s.label()), &r.mean_hinv, n);
        print(&format!("n * Var[theta_hat] ({})", s.label()), &r.var_mle, n);
    }
    Ok(())
}
