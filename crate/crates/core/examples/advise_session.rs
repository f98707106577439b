//! A live experiment driven run by run through saved state files, the way the
//! `advise` command is used. Responses here come from a simulated Cauchy
//! process.

use rand::Rng;
use rsdesign::adaptive::{Mode, Response};
use rsdesign::cli::{advance, start_experiment, Advice, AdviceStatus, AdviseConfig, ResponsesFile, StateFile};
use rsdesign::montecarlo::DesignSpec;
use rsdesign::designs::BuiltinName;
use rsdesign::rng::stream;
use rsdesign::ErrorModel;

fn main() -> rsdesign::Result<()> {
    let config = AdviseConfig {
        schema_version: 1,
        model: ErrorModel::cauchy(1.0)?,
        design: DesignSpec::Builtin {
            name: BuiltinName::Factorial22,
            randomized: false,
        },
        basis: None,
        n: 24,
        n1: 8,
        mode: Mode::Rrsd,
        seed: 77,
        first_run_counts: None,
    };
    let true_means = [1.0, 2.0, 2.0, 4.0];
    let mut lab = stream(1234, 0);

    let mut saved = serde_json::to_string(&StateFile::new(start_experiment(&config)?)).unwrap();
    loop {
        let file = StateFile::parse(&saved)?;
        let advice = Advice::for_state(&file.state);
        if advice.status == AdviceStatus::Complete {
            println!("{}", advice.message);
            break;
        }
        let pending = advice.pending.unwrap();
        println!("run {}: observe at support points {:?}", pending.run, pending.allocations);

        let responses = pending
            .allocations
            .iter()
            .map(|&i| Response {
                response: true_means[i] + (std::f64::consts::PI * (lab.random::<f64>() - 0.5)).tan(),
                precision: None,
            })
            .collect();
        let reply = ResponsesFile {
            schema_version: 1,
            state_hash: file.state_hash.clone(),
            responses,
        };
        saved = serde_json::to_string(&StateFile::new(advance(&file, &reply)?)).unwrap();
    }

    let file = StateFile::parse(&saved)?;
    for (i, g) in file.state.groups.iter().enumerate() {
        println!(
            "point {i}: {} observations, location {:.3}, h = {:.3}",
            g.count,
            g.eta_hat.unwrap_or(f64::NAN),
            g.h
        );
    }
    Ok(())
}
