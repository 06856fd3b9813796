//! Monte Carlo estimation of the affordance precision/recall probabilities.
//!
//! Two estimators target the same quantity, the probability that a
//! trajectory branch-sampled from a source state stays legal from an
//! acceptor state for `depth_m` steps:
//!
//! * [`naive_estimate`] expands the whole frontier of source sequences level
//!   by level, uniformly subsampling down to `max_frontier` when it
//!   overflows, and reports the accepted fraction of the surviving
//!   sequences.
//! * [`intermediate_estimate`] keeps a weighted frontier of paired
//!   (source, acceptor) states, splits each entry's weight uniformly over
//!   its children, drops acceptor-illegal children, and reconstructs the
//!   probability as the product of per-level survival ratios. Its sample
//!   cost grows quadratically rather than exponentially in `depth_m`.
//!
//! Both are deterministic given `(inputs, seed, config)`: randomness comes
//! from per-level ChaCha streams and frontier expansion preserves entry
//! order, with or without the `parallel` feature.
//!
//! A branch whose source state goes terminal (empty legal set) before depth
//! `m` counts as accepted iff the paired acceptor state is terminal at the
//! same point: a correctly predicted final position affords exactly the same
//! empty continuation set, and any other rule would punish it.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::exec;
use crate::fsa::{Automaton, Trajectory};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Naive,
    Intermediate,
}

/// What happens when the frontier overflows `max_frontier`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resampling {
    /// Keep a uniform subsample and scale every kept weight by
    /// `len / max_frontier`. The literal reading of "weights are rescaled".
    UniformRescale,
    /// Systematic resampling proportional to weight, every survivor then
    /// carrying `total / max_frontier`. Unbiased and lower variance; the
    /// default.
    WeightProportional,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EstimatorConfig {
    /// Trajectory depth m.
    pub depth_m: usize,
    /// Frontier cap N.
    pub max_frontier: usize,
    pub seed: u64,
    pub estimator_kind: EstimatorKind,
    pub resampling: Resampling,
}

impl Default for EstimatorConfig {
    fn default() -> EstimatorConfig {
        EstimatorConfig {
            depth_m: 4,
            max_frontier: 500,
            seed: 0,
            estimator_kind: EstimatorKind::Intermediate,
            resampling: Resampling::WeightProportional,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.depth_m == 0 {
            return Err("depth_m must be at least 1".into());
        }
        if self.max_frontier == 0 {
            return Err("max_frontier must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateStatus {
    Ok,
    /// The predicted state failed validation; the estimate is pinned to 0.
    InvalidPrediction,
}

/// Result of one estimation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub p_hat: f64,
    /// Per-level conditional survival estimates v_i. For the intermediate
    /// estimator `p_hat` is exactly their product; empty for the others.
    pub level_values: Vec<f64>,
    pub standard_error: f64,
    /// Sequences contributing to the final estimate.
    pub samples_used: usize,
    /// Frontier entries that hit a terminal source state before depth m.
    pub early_termination_count: usize,
    pub status: EstimateStatus,
    /// Rule-of-three upper bound `3/N`, attached when `p_hat` is exactly 0
    /// so downstream ranking still has a non-degenerate uncertainty.
    pub zero_upper_bound: Option<f64>,
}

impl EstimateResult {
    /// The pinned-to-zero result for predictions that failed validation.
    pub fn invalid_prediction(samples: usize) -> EstimateResult {
        EstimateResult {
            p_hat: 0.0,
            level_values: Vec::new(),
            standard_error: 0.0,
            samples_used: 0,
            early_termination_count: 0,
            status: EstimateStatus::InvalidPrediction,
            zero_upper_bound: Some(3.0 / samples.max(1) as f64),
        }
    }
}

/// Binomial standard error of a mean over `n` samples.
pub fn standard_error(p_hat: f64, n: usize) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p_hat) && n >= 1);
    (p_hat * (1.0 - p_hat) / n as f64).sqrt()
}

/// Sample size needed for a signal-to-noise ratio of order one, per the
/// homogeneous-tree analysis: the naive estimator needs about `1/p^m`
/// sequences (exponential in m), the intermediate one about
/// `c * m^2 (1-p)^2 p` with `c = 1` (quadratic in m).
pub fn required_samples(kind: EstimatorKind, p: f64, m: usize) -> u64 {
    assert!(p > 0.0 && p < 1.0, "p must lie strictly between 0 and 1");
    assert!(m >= 1);
    let raw = match kind {
        EstimatorKind::Naive => p.powi(-(m as i32)),
        EstimatorKind::Intermediate => (m * m) as f64 * (1.0 - p) * (1.0 - p) * p,
    };
    // Guarded ceil: absorb float noise so that e.g. 1/0.5^10 stays 1024.
    ((raw - 1e-9).ceil() as u64).max(1)
}

/// Independent ChaCha stream for one level of one run.
fn level_rng(seed: u64, level: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(level);
    rng
}

/// Uniform branch sampling: draw uniformly from the legal set at each step,
/// stopping at `depth` or when the legal set empties.
pub fn sample_trajectory<A: Automaton>(
    fsa: &A,
    start: &A::State,
    depth: usize,
    rng: &mut impl Rng,
) -> Trajectory<A::State, A::Action> {
    let mut state = start.clone();
    let mut actions = Vec::with_capacity(depth);
    for _ in 0..depth {
        let successors = fsa.successors(&state);
        if successors.is_empty() {
            return Trajectory {
                state,
                actions,
                terminated_early: true,
            };
        }
        let (action, next) = successors[rng.gen_range(0..successors.len())].clone();
        actions.push(action);
        state = next;
    }
    Trajectory {
        state,
        actions,
        terminated_early: false,
    }
}

// ---------------------------------------------------------------------------
// Naive frontier estimator
// ---------------------------------------------------------------------------

enum SeqEntry<S> {
    Active { source: S, acceptor: Option<S> },
    Settled { accepted: bool },
}

impl<S: Clone> Clone for SeqEntry<S> {
    fn clone(&self) -> Self {
        match self {
            SeqEntry::Active { source, acceptor } => SeqEntry::Active {
                source: source.clone(),
                acceptor: acceptor.clone(),
            },
            SeqEntry::Settled { accepted } => SeqEntry::Settled {
                accepted: *accepted,
            },
        }
    }
}

/// Keep a uniform subsample of `n` entries, preserving relative order.
fn uniform_subsample<T>(entries: &mut Vec<T>, n: usize, rng: &mut impl Rng) {
    let len = entries.len();
    debug_assert!(n <= len);
    let mut picked = rand::seq::index::sample(rng, len, n).into_vec();
    picked.sort_unstable();
    let mut keep = picked.into_iter().peekable();
    let mut index = 0;
    entries.retain(|_| {
        let keep_this = keep.peek() == Some(&index);
        if keep_this {
            keep.next();
        }
        index += 1;
        keep_this
    });
}

/// Frontier expansion estimator: grow all source sequences level by level,
/// uniformly subsampling to `max_frontier`, then report the fraction the
/// acceptor accepts.
pub fn naive_estimate<A: Automaton>(
    fsa: &A,
    source: &A::State,
    acceptor: &A::State,
    config: &EstimatorConfig,
) -> EstimateResult {
    let mut frontier: Vec<SeqEntry<A::State>> = vec![SeqEntry::Active {
        source: source.clone(),
        acceptor: Some(acceptor.clone()),
    }];
    let mut early_terminations = 0usize;

    for level in 1..=config.depth_m {
        let expanded = exec::map_frontier(&frontier, |entry| match entry {
            SeqEntry::Settled { accepted } => vec![SeqEntry::Settled { accepted: *accepted }],
            SeqEntry::Active { source, acceptor } => {
                let children = fsa.successors(source);
                if children.is_empty() {
                    let accepted = acceptor
                        .as_ref()
                        .map(|a| fsa.legal_actions(a).is_empty())
                        .unwrap_or(false);
                    return vec![SeqEntry::Settled { accepted }];
                }
                let acceptor_succ: Option<Vec<(A::Action, A::State)>> =
                    acceptor.as_ref().map(|a| fsa.successors(a));
                children
                    .into_iter()
                    .map(|(action, child)| {
                        let acc_child = acceptor_succ.as_ref().and_then(|succ| {
                            succ.iter()
                                .find(|(a, _)| *a == action)
                                .map(|(_, s)| s.clone())
                        });
                        SeqEntry::Active {
                            source: child,
                            acceptor: acc_child,
                        }
                    })
                    .collect()
            }
        });

        let mut next: Vec<SeqEntry<A::State>> = Vec::new();
        for (parent, batch) in frontier.iter().zip(&expanded) {
            if matches!(parent, SeqEntry::Active { .. })
                && matches!(batch.as_slice(), [SeqEntry::Settled { .. }])
            {
                early_terminations += 1;
            }
        }
        for batch in expanded {
            next.extend(batch);
        }
        if next.len() > config.max_frontier {
            let mut rng = level_rng(config.seed, level as u64);
            uniform_subsample(&mut next, config.max_frontier, &mut rng);
        }
        frontier = next;
    }

    let total = frontier.len();
    let accepted = frontier
        .iter()
        .filter(|entry| match entry {
            SeqEntry::Active { acceptor, .. } => acceptor.is_some(),
            SeqEntry::Settled { accepted } => *accepted,
        })
        .count();
    let p_hat = accepted as f64 / total.max(1) as f64;
    EstimateResult {
        p_hat,
        level_values: Vec::new(),
        standard_error: standard_error(p_hat, total.max(1)),
        samples_used: total,
        early_termination_count: early_terminations,
        status: EstimateStatus::Ok,
        zero_upper_bound: (p_hat == 0.0).then(|| 3.0 / total.max(1) as f64),
    }
}

// ---------------------------------------------------------------------------
// Intermediate (weighted frontier) estimator
// ---------------------------------------------------------------------------

/// Weighted frontier of paired states, exposed for inspection. Every entry's
/// acceptor state is live by construction: rejected branches are dropped at
/// insertion, and their lost weight is what the level survival ratios
/// measure. `settled_mass` is weight locked in by branches that ended (both
/// sides terminal) before full depth.
#[derive(Clone, Debug)]
pub struct WeightedFrontier<S> {
    pub entries: Vec<(S, S, f64)>,
    pub settled_mass: f64,
    pub level: usize,
}

enum Expansion<S> {
    Settled {
        weight: f64,
        accepted: bool,
    },
    Children {
        child_weight: f64,
        total_children: usize,
        kept: Vec<(S, S)>,
    },
}

/// Systematic resampling proportional to weight; survivors each carry
/// `total / n`.
fn systematic_resample<S: Clone>(entries: &mut Vec<(S, S, f64)>, n: usize, rng: &mut impl Rng) {
    let total: f64 = entries.iter().map(|(_, _, w)| *w).sum();
    debug_assert!(total > 0.0);
    let step = total / n as f64;
    let mut position = rng.gen::<f64>() * step;
    let mut cumulative = 0.0;
    let mut picked = Vec::with_capacity(n);
    let mut index = 0;
    for _ in 0..n {
        while index < entries.len() && cumulative + entries[index].2 < position {
            cumulative += entries[index].2;
            index += 1;
        }
        let index = index.min(entries.len() - 1);
        let (src, acc, _) = &entries[index];
        picked.push((src.clone(), acc.clone(), step));
        position += step;
    }
    *entries = picked;
}

/// Uniform subsample with weight rescaling by `len / n`.
fn rescale_resample<S>(entries: &mut Vec<(S, S, f64)>, n: usize, rng: &mut impl Rng) {
    let scale = entries.len() as f64 / n as f64;
    uniform_subsample(entries, n, rng);
    for (_, _, w) in entries.iter_mut() {
        *w *= scale;
    }
}

/// Weighted-frontier estimator reconstructing `p_m` as the product of
/// per-level survival ratios.
///
/// Each ratio divides the surviving child mass by the total child mass of
/// the same level, accumulated in one pass in identical order, so a level
/// where nothing is rejected contributes exactly 1.0 and a reflexive pair
/// estimates exactly 1.0 regardless of rounding.
pub fn intermediate_estimate<A: Automaton>(
    fsa: &A,
    source: &A::State,
    acceptor: &A::State,
    config: &EstimatorConfig,
) -> EstimateResult {
    let mut frontier = WeightedFrontier {
        entries: vec![(source.clone(), acceptor.clone(), 1.0)],
        settled_mass: 0.0,
        level: 0,
    };
    let mut p_hat = 1.0;
    let mut level_values = Vec::with_capacity(config.depth_m);
    let mut early_terminations = 0usize;
    let mut settled_count = 0usize;

    for level in 1..=config.depth_m {
        if frontier.entries.is_empty() {
            break;
        }
        let expanded = exec::map_frontier(&frontier.entries, |(src, acc, weight)| {
            let children = fsa.successors(src);
            if children.is_empty() {
                let accepted = fsa.legal_actions(acc).is_empty();
                return Expansion::Settled {
                    weight: *weight,
                    accepted,
                };
            }
            let total_children = children.len();
            let child_weight = *weight / total_children as f64;
            let acceptor_succ = fsa.successors(acc);
            let kept = children
                .into_iter()
                .filter_map(|(action, child)| {
                    acceptor_succ
                        .iter()
                        .find(|(a, _)| *a == action)
                        .map(|(_, acc_child)| (child, acc_child.clone()))
                })
                .collect();
            Expansion::Children {
                child_weight,
                total_children,
                kept,
            }
        });

        // Survival ratio for this level: surviving mass over total mass,
        // both including previously settled mass. The two sums accumulate
        // term-by-term in the same order, and an entry with nothing dropped
        // contributes the identical product to both, so an all-survive level
        // divides two bitwise-equal sums and yields exactly 1.0.
        let mut surviving = frontier.settled_mass;
        let mut total = frontier.settled_mass;
        let mut next_entries = Vec::new();
        for expansion in expanded {
            match expansion {
                Expansion::Settled { weight, accepted } => {
                    early_terminations += 1;
                    total += weight;
                    if accepted {
                        surviving += weight;
                        frontier.settled_mass += weight;
                        settled_count += 1;
                    }
                }
                Expansion::Children {
                    child_weight,
                    total_children,
                    kept,
                } => {
                    total += child_weight * total_children as f64;
                    surviving += child_weight * kept.len() as f64;
                    for (child, acc_child) in kept {
                        next_entries.push((child, acc_child, child_weight));
                    }
                }
            }
        }

        let v = if total > 0.0 { surviving / total } else { 0.0 };
        level_values.push(v);
        p_hat *= v;
        frontier.entries = next_entries;
        frontier.level = level;

        if frontier.entries.len() > config.max_frontier {
            let mut rng = level_rng(config.seed, level as u64);
            match config.resampling {
                Resampling::WeightProportional => {
                    systematic_resample(&mut frontier.entries, config.max_frontier, &mut rng)
                }
                Resampling::UniformRescale => {
                    rescale_resample(&mut frontier.entries, config.max_frontier, &mut rng)
                }
            }
        }
        if p_hat == 0.0 {
            break;
        }
    }

    // Error model: per-level error (1 - v_i) * sqrt(v_i / N), summed.
    let n = config.max_frontier as f64;
    let standard_error = level_values
        .iter()
        .map(|v| (1.0 - v) * (v.max(0.0) / n).sqrt())
        .sum();

    EstimateResult {
        p_hat,
        level_values,
        standard_error,
        samples_used: frontier.entries.len() + settled_count,
        early_termination_count: early_terminations,
        status: EstimateStatus::Ok,
        zero_upper_bound: (p_hat == 0.0).then(|| 3.0 / config.max_frontier as f64),
    }
}

/// Pure path-sampling reference estimator: `n` independent uniform-branch
/// trajectories from the source, each accepted iff the acceptor stays legal
/// along it. This samples trajectories exactly from the branch distribution,
/// whereas [`naive_estimate`]'s frontier subsampling weights sequences
/// uniformly over reachable sequences; the two distributions differ on trees
/// with uneven branching.
pub fn path_sampling_estimate<A: Automaton>(
    fsa: &A,
    source: &A::State,
    acceptor: &A::State,
    depth_m: usize,
    n_samples: usize,
    seed: u64,
) -> EstimateResult {
    let outcomes = exec::map_range(n_samples, |i| {
        let mut rng = level_rng(seed, i as u64);
        let trajectory = sample_trajectory(fsa, source, depth_m, &mut rng);
        let mut acc = acceptor.clone();
        for action in &trajectory.actions {
            match fsa.apply(&acc, action) {
                crate::fsa::FsaState::Live(next) => acc = next,
                crate::fsa::FsaState::Sink => return (false, trajectory.terminated_early),
            }
        }
        let accepted = if trajectory.terminated_early {
            fsa.legal_actions(&acc).is_empty()
        } else {
            true
        };
        (accepted, trajectory.terminated_early)
    });
    let accepted = outcomes.iter().filter(|(a, _)| *a).count();
    let early = outcomes.iter().filter(|(_, e)| *e).count();
    let p_hat = accepted as f64 / n_samples.max(1) as f64;
    EstimateResult {
        p_hat,
        level_values: Vec::new(),
        standard_error: standard_error(p_hat, n_samples.max(1)),
        samples_used: n_samples,
        early_termination_count: early,
        status: EstimateStatus::Ok,
        zero_upper_bound: (p_hat == 0.0).then(|| 3.0 / n_samples.max(1) as f64),
    }
}

/// Run the estimator selected by `config.estimator_kind`.
pub fn estimate<A: Automaton>(
    fsa: &A,
    source: &A::State,
    acceptor: &A::State,
    config: &EstimatorConfig,
) -> EstimateResult {
    match config.estimator_kind {
        EstimatorKind::Naive => naive_estimate(fsa, source, acceptor, config),
        EstimatorKind::Intermediate => intermediate_estimate(fsa, source, acceptor, config),
    }
}

/// Precision and recall estimates for one (true, predicted) pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRecall {
    pub precision: EstimateResult,
    pub recall: EstimateResult,
}

/// Precision samples from the predicted state and asks whether the true
/// state accepts; recall swaps the roles. A missing prediction (failed
/// parse or validation) pins both to 0 with a status flag: an invalid state
/// affords nothing, and skipping it would bias aggregates upward.
pub fn precision_recall<A: Automaton>(
    fsa: &A,
    true_state: &A::State,
    predicted: Option<&A::State>,
    config: &EstimatorConfig,
) -> PrecisionRecall {
    match predicted {
        Some(predicted) => PrecisionRecall {
            precision: estimate(fsa, predicted, true_state, config),
            recall: estimate(fsa, true_state, predicted, config),
        },
        None => PrecisionRecall {
            precision: EstimateResult::invalid_prediction(config.max_frontier),
            recall: EstimateResult::invalid_prediction(config.max_frontier),
        },
    }
}

/// One estimate per seed, in parallel with the `parallel` feature.
pub fn seeded_estimates<A: Automaton>(
    fsa: &A,
    source: &A::State,
    acceptor: &A::State,
    config: &EstimatorConfig,
    seeds: &[u64],
) -> Vec<EstimateResult> {
    exec::map_range(seeds.len(), |i| {
        let run = EstimatorConfig {
            seed: seeds[i],
            ..*config
        };
        estimate(fsa, source, acceptor, &run)
    })
}

/// Sequential twin of [`seeded_estimates`] for benchmarking the parallel
/// speedup.
pub fn seeded_estimates_serial<A: Automaton>(
    fsa: &A,
    source: &A::State,
    acceptor: &A::State,
    config: &EstimatorConfig,
    seeds: &[u64],
) -> Vec<EstimateResult> {
    exec::map_range_serial(seeds.len(), |i| {
        let run = EstimatorConfig {
            seed: seeds[i],
            ..*config
        };
        estimate(fsa, source, acceptor, &run)
    })
}
