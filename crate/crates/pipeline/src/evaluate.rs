//! Batch metric evaluation over parsed records.

use statecheck_core::chess::fen::parse_placement;
use statecheck_core::chess::Chess;
use statecheck_core::estimators::{precision_recall, EstimatorConfig};
use statecheck_core::metrics::{
    board_accuracy_placements, edit_distance, edit_kernel, exact_match, MetricBundle, MetricConfig,
};

use crate::parse::extract_fen_span;
use crate::records::{EvalRecord, ParseStatus};

/// A record plus its scores. `index` is the record's position in the input
/// batch and doubles as the record id in reports.
#[derive(Clone, Debug)]
pub struct EvaluatedRecord {
    pub index: usize,
    pub record: EvalRecord,
    pub bundle: MetricBundle,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn score_one(
    record: &EvalRecord,
    metric_config: &MetricConfig,
    estimator_config: &EstimatorConfig,
) -> MetricBundle {
    let chess = Chess;
    let truth = &record.task.true_state;
    let true_text = metric_config.comparison_text(truth);

    // String comparison target: the canonical predicted FEN when it parsed
    // (so formatting noise does not count as error), the extracted span for
    // malformed or illegal output, empty when no FEN was found at all.
    let predicted_text = match (&record.predicted_state, record.parse_status) {
        (Some(state), _) => metric_config.comparison_text(state),
        (None, ParseStatus::NoFenFound) => String::new(),
        (None, _) => extract_fen_span(&record.raw_response)
            .unwrap_or("")
            .to_string(),
    };
    let distance = edit_distance(&true_text, &predicted_text);

    // Board accuracy degrades gracefully: an invalid prediction whose
    // placement field still parses gets the per-square score, anything less
    // gets zero.
    let board_acc = match &record.predicted_state {
        Some(state) => board_accuracy_placements(truth.placement(), state.placement()),
        None => extract_fen_span(&record.raw_response)
            .and_then(|span| span.split_whitespace().next())
            .and_then(parse_placement)
            .map(|placement| board_accuracy_placements(truth.placement(), &placement))
            .unwrap_or(0.0),
    };

    let matches = record
        .predicted_state
        .as_ref()
        .map(|state| exact_match(metric_config, truth, state))
        .unwrap_or(false);

    let pr = precision_recall(
        &chess,
        truth,
        record.predicted_state.as_ref(),
        estimator_config,
    );

    MetricBundle {
        exact_match: matches,
        edit_distance: distance,
        edit_kernel: edit_kernel(distance, metric_config.kernel_lambda),
        board_accuracy: board_acc,
        precision_m: Some(pr.precision.p_hat),
        recall_m: Some(pr.recall.p_hat),
        depth_m: estimator_config.depth_m,
    }
}

/// Score every record. Each record gets its own seed derived from the base
/// seed and its index, so results are deterministic and independent of
/// evaluation order (records evaluate in parallel under the `parallel`
/// feature).
pub fn evaluate_records(
    records: &[EvalRecord],
    metric_config: &MetricConfig,
    estimator_config: &EstimatorConfig,
) -> Vec<EvaluatedRecord> {
    crate::map_range(records.len(), |index| {
        let per_record = EstimatorConfig {
            seed: splitmix64(estimator_config.seed ^ index as u64),
            ..*estimator_config
        };
        EvaluatedRecord {
            index,
            record: records[index].clone(),
            bundle: score_one(&records[index], metric_config, &per_record),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::records::EvalRecord;
    use crate::task::EvalTask;
    use statecheck_core::chess::fen::format_fen;
    use statecheck_core::chess::ChessState;
    use statecheck_core::estimators::EstimatorKind;

    fn task() -> EvalTask {
        EvalTask {
            game_id: "g".into(),
            moves: Vec::new(),
            truncation_length: 0,
            group_label: 0,
            true_state: ChessState::initial(),
        }
    }

    fn record(raw: &str) -> EvalRecord {
        EvalRecord::from_response(task(), raw.to_string(), "mock", "fp")
    }

    fn config_m1() -> EstimatorConfig {
        EstimatorConfig {
            depth_m: 1,
            max_frontier: 100,
            seed: 0,
            estimator_kind: EstimatorKind::Naive,
            resampling: statecheck_core::estimators::Resampling::WeightProportional,
        }
    }

    #[test]
    fn perfect_prediction_scores_perfectly() {
        let truth_fen = format_fen(&ChessState::initial());
        let records = vec![record(&truth_fen)];
        let evaluated = evaluate_records(&records, &MetricConfig::default(), &config_m1());
        let bundle = &evaluated[0].bundle;
        assert!(bundle.exact_match);
        assert_eq!(bundle.edit_distance, 0);
        assert_eq!(bundle.edit_kernel, 1.0);
        assert_eq!(bundle.board_accuracy, 1.0);
        assert_eq!(bundle.precision_m, Some(1.0));
        assert_eq!(bundle.recall_m, Some(1.0));
        assert_eq!(bundle.depth_m, 1);
    }

    #[test]
    fn counter_only_differences_still_match_exactly() {
        // Move counters carry no affordance content; the default comparison
        // ignores them, so every metric sits at its optimum.
        let records = vec![record(
            "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 7 9",
        )];
        let evaluated = evaluate_records(&records, &MetricConfig::default(), &config_m1());
        let bundle = &evaluated[0].bundle;
        assert!(bundle.exact_match);
        assert_eq!(bundle.edit_distance, 0);
        assert_eq!(bundle.board_accuracy, 1.0);
        assert_eq!(bundle.precision_m, Some(1.0));
        assert_eq!(bundle.recall_m, Some(1.0));
    }

    #[test]
    fn no_fen_found_scores_zero_affordances() {
        let records = vec![record("I cannot tell.")];
        let evaluated = evaluate_records(&records, &MetricConfig::default(), &config_m1());
        let bundle = &evaluated[0].bundle;
        assert!(!bundle.exact_match);
        assert_eq!(bundle.precision_m, Some(0.0));
        assert_eq!(bundle.recall_m, Some(0.0));
        assert_eq!(bundle.board_accuracy, 0.0);
        // Distance to the empty string is the full true text length.
        assert!(bundle.edit_distance > 40);
    }

    #[test]
    fn knight_deleted_prediction_gets_the_enumerated_scores() {
        let records = vec![record(
            "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/R1BQKBNR w KQkq - 0 1",
        )];
        let evaluated = evaluate_records(&records, &MetricConfig::default(), &config_m1());
        let bundle = &evaluated[0].bundle;
        assert!(!bundle.exact_match);
        assert_eq!(bundle.precision_m, Some(18.0 / 19.0));
        assert_eq!(bundle.recall_m, Some(0.9));
        assert!((bundle.board_accuracy - 63.0 / 64.0).abs() < 1e-12);
        assert_eq!(bundle.edit_distance, 1);
    }

    #[test]
    fn kingless_prediction_scores_zero_affordance_but_high_board_accuracy() {
        let records = vec![record(
            "rnbq1bnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1",
        )];
        let evaluated = evaluate_records(&records, &MetricConfig::default(), &config_m1());
        assert_eq!(evaluated[0].record.parse_status, ParseStatus::IllegalPosition);
        let bundle = &evaluated[0].bundle;
        assert_eq!(bundle.precision_m, Some(0.0));
        assert_eq!(bundle.recall_m, Some(0.0));
        assert!(bundle.board_accuracy > 0.98);
        assert!(!bundle.exact_match);
    }

    #[test]
    fn evaluation_is_deterministic() {
        let records = vec![
            record("rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/R1BQKBNR w KQkq - 0 1"),
            record("no fen here"),
        ];
        let cfg = EstimatorConfig {
            depth_m: 2,
            ..config_m1()
        };
        let a = evaluate_records(&records, &MetricConfig::default(), &cfg);
        let b = evaluate_records(&records, &MetricConfig::default(), &cfg);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.bundle, y.bundle);
        }
    }
}
