//! Built-in estimator validation studies: the homogeneous-tree law and the
//! naive-versus-intermediate variance comparison on a fixed pair of
//! divergent chess positions. Writes tidy CSVs for plotting.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use statecheck_core::chess::fen::format_fen;
use statecheck_core::chess::movegen::apply_move;
use statecheck_core::chess::{Chess, ChessState};
use statecheck_core::estimators::{
    seeded_estimates, EstimatorConfig, EstimatorKind, Resampling,
};
use statecheck_core::fsa::Automaton;
use statecheck_core::metrics::edit_distance;
use statecheck_core::synthetic::BranchingTree;

use crate::stats::{mean, sample_std};

/// Two developed middlegame positions with the same side to move, far apart
/// as strings but sharing enough legal moves that the affordance overlap is
/// small-but-nonzero out to depth 8. Built by replaying fixed openings so
/// the states are correct by construction.
const LINE_A: [&str; 8] = [
    "e2e4", "e7e5", "g1f3", "b8c6", "f1b5", "a7a6", "b5a4", "g8f6",
];
const LINE_B: [&str; 8] = [
    "d2d4", "d7d5", "c2c4", "e7e6", "b1c3", "g8f6", "c1g5", "f8e7",
];

fn replay(line: &[&str]) -> ChessState {
    let mut state = ChessState::initial();
    for uci in line {
        state = apply_move(&state, uci.parse().unwrap()).expect("fixed line is legal");
    }
    state
}

/// The fixed divergent pair used by the variance studies.
pub fn divergent_state_pair() -> (ChessState, ChessState) {
    (replay(&LINE_A), replay(&LINE_B))
}

/// Full-FEN edit distance between the fixed pair.
pub fn divergent_pair_edit_distance() -> usize {
    let (a, b) = divergent_state_pair();
    edit_distance(&format_fen(&a), &format_fen(&b))
}

#[derive(Clone, Debug)]
pub struct ValidateConfig {
    pub out_dir: PathBuf,
    pub seeds: usize,
    pub samples: usize,
}

impl Default for ValidateConfig {
    fn default() -> ValidateConfig {
        ValidateConfig {
            out_dir: PathBuf::from("validate-out"),
            seeds: 50,
            samples: 500,
        }
    }
}

#[derive(Clone, Debug)]
pub struct StudyRow {
    pub estimator: EstimatorKind,
    pub depth_m: usize,
    pub n_samples: usize,
    pub mean_p_hat: f64,
    pub std_p_hat: f64,
    pub expected: Option<f64>,
}

#[derive(Clone, Debug, Default)]
pub struct ValidateSummary {
    pub synthetic: Vec<StudyRow>,
    pub variance_vs_depth: Vec<StudyRow>,
    pub variance_vs_samples: Vec<StudyRow>,
    pub pair_edit_distance: usize,
    pub files: Vec<PathBuf>,
}

fn kind_name(kind: EstimatorKind) -> &'static str {
    match kind {
        EstimatorKind::Naive => "naive",
        EstimatorKind::Intermediate => "intermediate",
    }
}

fn run_rows<A: Automaton>(
    fsa: &A,
    pair: (&A::State, &A::State),
    config: &EstimatorConfig,
    seeds: usize,
    expected: Option<f64>,
) -> StudyRow {
    let seed_list: Vec<u64> = (0..seeds as u64).collect();
    let results = seeded_estimates(fsa, pair.0, pair.1, config, &seed_list);
    let values: Vec<f64> = results.iter().map(|r| r.p_hat).collect();
    StudyRow {
        estimator: config.estimator_kind,
        depth_m: config.depth_m,
        n_samples: config.max_frontier,
        mean_p_hat: mean(&values),
        std_p_hat: sample_std(&values),
        expected,
    }
}

fn study_config(kind: EstimatorKind, depth_m: usize, n_samples: usize) -> EstimatorConfig {
    EstimatorConfig {
        depth_m,
        max_frontier: n_samples,
        seed: 0,
        estimator_kind: kind,
        resampling: Resampling::WeightProportional,
    }
}

fn rows_to_csv(rows: &[StudyRow]) -> String {
    let mut out = String::from("estimator,depth_m,n_samples,mean_p_hat,std_p_hat,expected\n");
    for row in rows {
        let expected = row.expected.map(|e| e.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{expected}",
            kind_name(row.estimator),
            row.depth_m,
            row.n_samples,
            row.mean_p_hat,
            row.std_p_hat,
        );
    }
    out
}

fn write_csv(dir: &Path, name: &str, rows: &[StudyRow]) -> std::io::Result<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, rows_to_csv(rows))?;
    Ok(path)
}

/// Homogeneous-tree study: intermediate and naive estimates against the
/// closed-form decay `p^m` for branching 8, acceptance fraction 0.75.
pub fn synthetic_tree_study(seeds: usize, samples: usize) -> Vec<StudyRow> {
    let tree = BranchingTree::new(8);
    let source = tree.state(8);
    let acceptor = tree.state(6);
    let p = 0.75f64;
    let mut rows = Vec::new();
    for kind in [EstimatorKind::Intermediate, EstimatorKind::Naive] {
        for m in 1..=8 {
            rows.push(run_rows(
                &tree,
                (&source, &acceptor),
                &study_config(kind, m, samples),
                seeds,
                Some(p.powi(m as i32)),
            ));
        }
    }
    rows
}

/// Variance of both estimators against depth at fixed sample budget.
pub fn variance_vs_depth_study(seeds: usize, samples: usize) -> Vec<StudyRow> {
    let chess = Chess;
    let (a, b) = divergent_state_pair();
    let mut rows = Vec::new();
    for kind in [EstimatorKind::Naive, EstimatorKind::Intermediate] {
        for m in 4..=8 {
            rows.push(run_rows(&chess, (&a, &b), &study_config(kind, m, samples), seeds, None));
        }
    }
    rows
}

/// Variance of both estimators against sample budget at depth 4.
pub fn variance_vs_samples_study(seeds: usize, budgets: &[usize]) -> Vec<StudyRow> {
    let chess = Chess;
    let (a, b) = divergent_state_pair();
    let mut rows = Vec::new();
    for kind in [EstimatorKind::Naive, EstimatorKind::Intermediate] {
        for &n in budgets {
            rows.push(run_rows(&chess, (&a, &b), &study_config(kind, 4, n), seeds, None));
        }
    }
    rows
}

/// Run all three studies and write their CSVs.
pub fn run_validate(config: &ValidateConfig) -> std::io::Result<ValidateSummary> {
    std::fs::create_dir_all(&config.out_dir)?;
    let mut summary = ValidateSummary {
        synthetic: synthetic_tree_study(config.seeds, config.samples),
        variance_vs_depth: variance_vs_depth_study(config.seeds, config.samples),
        variance_vs_samples: variance_vs_samples_study(config.seeds, &[50, 100, config.samples]),
        pair_edit_distance: divergent_pair_edit_distance(),
        files: Vec::new(),
    };
    summary.files.push(write_csv(
        &config.out_dir,
        "synthetic_tree.csv",
        &summary.synthetic,
    )?);
    summary.files.push(write_csv(
        &config.out_dir,
        "variance_vs_depth.csv",
        &summary.variance_vs_depth,
    )?);
    summary.files.push(write_csv(
        &config.out_dir,
        "variance_vs_samples.csv",
        &summary.variance_vs_samples,
    )?);
    Ok(summary)
}
