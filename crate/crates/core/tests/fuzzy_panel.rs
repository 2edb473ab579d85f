use approx::assert_abs_diff_eq;
use efem_core::fuzzy::{
    defuzzify_centroid, derive_loss_weights, expert_weight, pairwise_similarity, sam_aggregate,
    sam_aggregate_with_beta, Education, ExpertProfile, LinguisticTerm, MetricScoreTable, OpinionMatrix, Position,
    TrapezoidalFuzzyNumber,
};
use proptest::prelude::*;

const EXPECTED_SCORES: [(&str, f64); 10] = [
    ("MAE", 0.588),
    ("MAPE", 0.588),
    ("MSE", 0.601),
    ("RMSE", 0.675),
    ("SSE", 0.400),
    ("EditDistance", 0.459),
    ("DTW", 0.780),
    ("TDI", 0.641),
    ("CrossCorrelation", 0.548),
    ("LCS", 0.601),
];

#[test]
fn reference_panel_weights_round_to_the_expected_values() {
    let w = expert_weight(&OpinionMatrix::reference().experts).unwrap();
    let rounded: Vec<String> = w.iter().map(|v| format!("{v:.3}")).collect();
    assert_eq!(rounded, ["0.286", "0.222", "0.159", "0.190", "0.143"]);
}

#[test]
fn reference_panel_reproduces_every_metric_score() {
    let scores = OpinionMatrix::reference().evaluate().unwrap();
    assert_eq!(scores.0.len(), EXPECTED_SCORES.len());
    for (metric, want) in EXPECTED_SCORES {
        let got = scores.get(metric).unwrap();
        assert!((got - want).abs() <= 0.02, "{metric}: {got:.4} vs {want}");
    }
}

#[test]
fn expected_scores_normalize_to_the_reference_weights() {
    let table = MetricScoreTable(EXPECTED_SCORES.iter().map(|(m, s)| (m.to_string(), *s)).collect());
    let w = derive_loss_weights(&table).unwrap();
    assert_abs_diff_eq!(w.shape, 0.372, epsilon = 1e-3);
    assert_abs_diff_eq!(w.time, 0.306, epsilon = 1e-3);
    assert_abs_diff_eq!(w.space, 0.322, epsilon = 1e-3);
}

#[test]
fn single_step_upgrades_never_lower_a_score() {
    let panel = OpinionMatrix::reference();
    let weights = expert_weight(&panel.experts).unwrap();
    for (m, row) in panel.ratings.iter().enumerate() {
        let opinions: Vec<_> = row.iter().map(|t| t.fuzzy()).collect();
        let (_, before) = sam_aggregate(&opinions, &weights).unwrap();
        for (e, term) in row.iter().enumerate() {
            let Some(up) = term.upgrade() else { continue };
            let mut raised = opinions.clone();
            raised[e] = up.fuzzy();
            let (_, after) = sam_aggregate(&raised, &weights).unwrap();
            assert!(
                after >= before - 1e-12,
                "{} expert {}: {before} -> {after}",
                panel.metrics[m],
                e + 1
            );
        }
    }
}

#[test]
fn opinion_file_errors_carry_line_numbers() {
    let text = "expert,position,years,education\n1,Professor,10,PhD\nmetric,e1\nDTW,XX\n";
    let err = OpinionMatrix::parse(text).unwrap_err();
    assert_eq!(err.class(), "parse");
    assert!(err.to_string().starts_with("line 4:"), "{err}");
}

#[test]
fn symmetric_trapezoids_defuzzify_to_their_midpoint() {
    for term in LinguisticTerm::ALL {
        let [a1, a2, a3, a4] = term.fuzzy().components();
        if (a2 - a1 - (a4 - a3)).abs() < 1e-12 {
            assert_abs_diff_eq!(defuzzify_centroid(&term.fuzzy()), (a1 + a4) / 2.0, epsilon = 1e-12);
        }
    }
}

fn trapezoid() -> impl Strategy<Value = TrapezoidalFuzzyNumber> {
    prop::array::uniform4(0.0f64..=1.0).prop_map(|mut a| {
        a.sort_by(f64::total_cmp);
        TrapezoidalFuzzyNumber::new(a[0], a[1], a[2], a[3]).unwrap()
    })
}

fn profile() -> impl Strategy<Value = ExpertProfile> {
    let position = prop::sample::select(vec![
        Position::Professor,
        Position::AssociateProfessor,
        Position::AssistantProfessor,
        Position::Technician,
    ]);
    let education = prop::sample::select(vec![Education::PhD, Education::Master, Education::Bachelor]);
    (position, 0u32..40, education).prop_map(|(p, y, e)| ExpertProfile::new(p, y, e))
}

proptest! {
    #[test]
    fn expert_weights_sum_to_one(panel in prop::collection::vec(profile(), 1..8)) {
        let w = expert_weight(&panel).unwrap();
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(w.iter().all(|v| *v > 0.0));
    }

    #[test]
    fn similarity_is_symmetric_and_bounded(a in trapezoid(), b in trapezoid()) {
        let s = pairwise_similarity(&a, &b);
        prop_assert!((s - pairwise_similarity(&b, &a)).abs() < 1e-15);
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert_eq!(pairwise_similarity(&a, &a), 1.0);
    }

    #[test]
    fn identical_opinions_aggregate_to_themselves(
        f in trapezoid(),
        raw in prop::collection::vec(0.01f64..1.0, 2..7),
        beta in 0.0f64..=1.0,
    ) {
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let opinions = vec![f; weights.len()];
        let (agg, score) = sam_aggregate_with_beta(&opinions, &weights, beta).unwrap();
        for (a, b) in agg.components().iter().zip(f.components()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        prop_assert!((score - defuzzify_centroid(&f)).abs() < 1e-12);
    }

    #[test]
    fn aggregate_score_stays_within_the_opinions(
        terms in prop::collection::vec(prop::sample::select(LinguisticTerm::ALL.to_vec()), 2..7),
    ) {
        let opinions: Vec<_> = terms.iter().map(|t| t.fuzzy()).collect();
        let weights = vec![1.0 / terms.len() as f64; terms.len()];
        let (_, score) = sam_aggregate(&opinions, &weights).unwrap();
        let scores: Vec<f64> = opinions.iter().map(defuzzify_centroid).collect();
        let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(score >= lo - 1e-12 && score <= hi + 1e-12);
    }
}
