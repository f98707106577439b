use proptest::prelude::*;
use rsdesign::adaptive::{allocate, drsd_choice, rrsd_plan, tolerant_ceil, RunPlan};
use rsdesign::designs::{criterion_value, Criterion, CriterionKind, Domain};
use rsdesign::error_models::ErrorModel;
use rsdesign::estimation::mle_location;
use rsdesign::information::{relevant_info_eta, uv_statistics, SupportGroup};
use rsdesign::linalg::Matrix;
use rsdesign::rng::stream;
use rsdesign::Basis;

fn weights(raw: &[f64]) -> Vec<f64> {
    let s: f64 = raw.iter().sum();
    raw.iter().map(|x| x / s).collect()
}

fn model_strategy() -> impl Strategy<Value = ErrorModel> {
    prop_oneof![
        (2.0f64..12.0, 0.3f64..3.0).prop_map(|(z, t)| ErrorModel::generalized_normal(z, t).unwrap()),
        (0.3f64..3.0).prop_map(|t| ErrorModel::cauchy(t).unwrap()),
    ]
}

fn group(ys: Vec<f64>, eta_hat: f64) -> SupportGroup {
    SupportGroup {
        support_index: 0,
        responses: ys,
        precisions: None,
        eta_hat,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn rrsd_plans_are_distributions(
        raw_w in prop::collection::vec(0.05f64..1.0, 2..6),
        raw_g in prop::collection::vec(0.0f64..30.0, 6),
        remaining in 1usize..80,
    ) {
        let w = weights(&raw_w);
        let g = &raw_g[..w.len()];
        let total: usize = 20;
        let (u, _) = uv_statistics(g, &w, total).unwrap();
        prop_assert!(u.iter().sum::<f64>().abs() < 1e-9);
        match rrsd_plan(&u, &w, remaining).unwrap() {
            RunPlan::Randomized { size, probs, capped } => {
                prop_assert!(size >= 1 && size <= remaining);
                prop_assert!(probs.iter().all(|&p| (0.0..=1.0 + 1e-12).contains(&p)));
                prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                if capped {
                    prop_assert_eq!(size, remaining);
                }
            }
            RunPlan::Deterministic { .. } => prop_assert!(false, "rrsd must randomize"),
        }
    }

    #[test]
    fn drsd_picks_largest_deficit(
        raw_w in prop::collection::vec(0.05f64..1.0, 2..6),
        u in prop::collection::vec(-5.0f64..5.0, 6),
    ) {
        let w = weights(&raw_w);
        let u = &u[..w.len()];
        let RunPlan::Deterministic { index, scores } = drsd_choice(u, &w).unwrap() else {
            return Err(TestCaseError::fail("drsd must be deterministic"));
        };
        let best = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(scores[index], best);
        prop_assert!(scores[..index].iter().all(|&s| s < best));
    }

    #[test]
    fn allocation_has_requested_size(
        raw_w in prop::collection::vec(0.05f64..1.0, 1..6),
        size in 0usize..40,
        seed in any::<u64>(),
    ) {
        let w = weights(&raw_w);
        let a = allocate(&w, size, true, &mut stream(seed, 0));
        prop_assert_eq!(a.len(), size);
        prop_assert!(a.iter().all(|&i| i < w.len()));
    }

    #[test]
    fn ceiling_tolerates_rounding(k in 0u32..1000, eps in -1e-12f64..1e-12) {
        prop_assert_eq!(tolerant_ceil(k as f64 + eps), k as f64);
        prop_assert_eq!(tolerant_ceil(k as f64 + 0.25), k as f64 + 1.0);
    }

    #[test]
    fn location_fit_is_equivariant(
        model in model_strategy(),
        ys in prop::collection::vec(-4.0f64..4.0, 2..9),
        shift in -100.0f64..100.0,
    ) {
        let a = mle_location(&model, &ys).unwrap();
        let moved: Vec<f64> = ys.iter().map(|y| y + shift).collect();
        let b = mle_location(&model, &moved).unwrap();
        prop_assert!((b - a - shift).abs() < 1e-7 * (1.0 + shift.abs()), "{a} {b} {shift}");

        let h = relevant_info_eta(&model, &group(ys, a)).unwrap();
        let h_moved = relevant_info_eta(&model, &group(moved, b)).unwrap();
        prop_assert!((h_moved / h - 1.0).abs() < 1e-8, "{h} {h_moved}");
    }

    #[test]
    fn score_and_info_match_finite_differences(model in model_strategy(), e in -3.0f64..3.0) {
        let step = 1e-5;
        let fd_score = -(model.log_density(e + step).unwrap() - model.log_density(e - step).unwrap()) / (2.0 * step);
        let fd_info = (model.score(e + step).unwrap() - model.score(e - step).unwrap()) / (2.0 * step);
        let s = model.score(e).unwrap();
        let i = model.observed_info(e).unwrap();
        prop_assert!((fd_score - s).abs() <= 1e-6 * s.abs().max(1.0));
        prop_assert!((fd_info - i).abs() <= 1e-6 * i.abs().max(1.0));
    }

    #[test]
    fn criteria_respect_loewner_order(
        b in prop::collection::vec(-2.0f64..2.0, 9),
        c in prop::collection::vec(-1.0f64..1.0, 9),
    ) {
        let bm = Matrix::from_row_slice(3, 3, &b);
        let cm = Matrix::from_row_slice(3, 3, &c);
        let smaller = &bm * bm.transpose() + Matrix::identity(3, 3) * 0.1;
        let larger = &smaller + &cm * cm.transpose();
        let domain = Domain::interval(-1.0, 1.0);
        let eval = |m: &Matrix, kind| criterion_value(m, Criterion::new(kind), Basis::Quadratic, &domain).unwrap();
        let inv = |m: &Matrix| {
            let i = m.clone().try_inverse().unwrap();
            (&i + i.transpose()) * 0.5
        };
        let tol = 1e-9;
        prop_assert!(eval(&larger, CriterionKind::D) <= eval(&smaller, CriterionKind::D) * (1.0 + tol));
        prop_assert!(eval(&inv(&larger), CriterionKind::A) <= eval(&inv(&smaller), CriterionKind::A) * (1.0 + tol));
        prop_assert!(eval(&inv(&larger), CriterionKind::G) <= eval(&inv(&smaller), CriterionKind::G) * (1.0 + tol));
    }
}
