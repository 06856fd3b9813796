//! Aggregation statistics: means, standard errors, Kendall's tau-b, and a
//! small bootstrap helper for comparing sample standard deviations.

use thiserror::Error;

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (n-1 denominator); 0 for fewer than 2 values.
pub fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64;
    var.sqrt()
}

/// Standard error of the mean: sample std over sqrt(n).
pub fn standard_error_of_mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    sample_std(values) / (values.len() as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TauError {
    #[error("input lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least two observations")]
    TooShort,
    /// All pairs tied on one side: the coefficient is undefined, which is
    /// reported rather than coerced to 0.
    #[error("tau undefined: one input is constant")]
    DegenerateInput,
}

/// Count inversions (strict descents) in `values` by merge sort.
fn count_inversions(values: &mut [f64]) -> u64 {
    let n = values.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let (left, right) = values.split_at_mut(mid);
    let mut inversions = count_inversions(left) + count_inversions(right);
    let mut merged = Vec::with_capacity(n);
    let (mut i, mut j) = (0, 0);
    while i < left.len() && j < right.len() {
        if right[j] < left[i] {
            // right[j] precedes everything left of it in `left`.
            inversions += (left.len() - i) as u64;
            merged.push(right[j]);
            j += 1;
        } else {
            merged.push(left[i]);
            i += 1;
        }
    }
    merged.extend_from_slice(&left[i..]);
    merged.extend_from_slice(&right[j..]);
    values.copy_from_slice(&merged);
    inversions
}

fn tie_pairs(sorted: &[f64]) -> u64 {
    let mut pairs = 0u64;
    let mut run = 1u64;
    for window in sorted.windows(2) {
        if window[0] == window[1] {
            run += 1;
        } else {
            pairs += run * (run - 1) / 2;
            run = 1;
        }
    }
    pairs + run * (run - 1) / 2
}

/// Kendall's tau-b, tie-corrected:
/// `(concordant - discordant) / sqrt((n0 - t_x)(n0 - t_y))`.
///
/// O(n log n): sort by (x, y), count discordant pairs as y-inversions, and
/// correct for ties in x, y, and joint ties.
pub fn kendall_tau_b(xs: &[f64], ys: &[f64]) -> Result<f64, TauError> {
    if xs.len() != ys.len() {
        return Err(TauError::LengthMismatch(xs.len(), ys.len()));
    }
    let n = xs.len();
    if n < 2 {
        return Err(TauError::TooShort);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        xs[a]
            .total_cmp(&xs[b])
            .then_with(|| ys[a].total_cmp(&ys[b]))
    });

    let n0 = n as u64 * (n as u64 - 1) / 2;

    // Tie counts in x and joint (x, y) ties over the sorted order.
    let mut tie_x = 0u64;
    let mut tie_xy = 0u64;
    let mut run_x = 1u64;
    let mut run_xy = 1u64;
    for w in order.windows(2) {
        let same_x = xs[w[0]] == xs[w[1]];
        let same_xy = same_x && ys[w[0]] == ys[w[1]];
        if same_x {
            run_x += 1;
        } else {
            tie_x += run_x * (run_x - 1) / 2;
            run_x = 1;
        }
        if same_xy {
            run_xy += 1;
        } else {
            tie_xy += run_xy * (run_xy - 1) / 2;
            run_xy = 1;
        }
    }
    tie_x += run_x * (run_x - 1) / 2;
    tie_xy += run_xy * (run_xy - 1) / 2;

    let mut y_in_x_order: Vec<f64> = order.iter().map(|&i| ys[i]).collect();
    let discordant = count_inversions(&mut y_in_x_order);

    let mut y_sorted: Vec<f64> = ys.to_vec();
    y_sorted.sort_by(f64::total_cmp);
    let tie_y = tie_pairs(&y_sorted);

    let denom_x = n0 - tie_x;
    let denom_y = n0 - tie_y;
    if denom_x == 0 || denom_y == 0 {
        return Err(TauError::DegenerateInput);
    }
    // concordant - discordant = n0 - t_x - t_y + t_xy - 2 * discordant
    let con_minus_dis =
        n0 as f64 - tie_x as f64 - tie_y as f64 + tie_xy as f64 - 2.0 * discordant as f64;
    let tau = con_minus_dis / (denom_x as f64 * denom_y as f64).sqrt();
    Ok(tau.clamp(-1.0, 1.0))
}

/// Percentile bootstrap for the difference `std(b) - std(a)` between two
/// independent samples. Returns the (2.5%, 97.5%) interval over
/// `replicates` resamples.
pub fn bootstrap_std_difference(
    a: &[f64],
    b: &[f64],
    replicates: usize,
    seed: u64,
) -> (f64, f64) {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut diffs = Vec::with_capacity(replicates);
    for _ in 0..replicates {
        let resample = |rng: &mut rand_chacha::ChaCha8Rng, xs: &[f64]| -> Vec<f64> {
            (0..xs.len()).map(|_| xs[rng.gen_range(0..xs.len())]).collect()
        };
        let ra = resample(&mut rng, a);
        let rb = resample(&mut rng, b);
        diffs.push(sample_std(&rb) - sample_std(&ra));
    }
    diffs.sort_by(f64::total_cmp);
    let lo = diffs[(replicates as f64 * 0.025) as usize];
    let hi = diffs[((replicates as f64 * 0.975) as usize).min(replicates - 1)];
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// O(n^2) pair-counting oracle for tau-b.
    fn tau_b_oracle(xs: &[f64], ys: &[f64]) -> Option<f64> {
        let n = xs.len();
        let (mut con, mut dis, mut tie_x, mut tie_y) = (0i64, 0i64, 0i64, 0i64);
        for i in 0..n {
            for j in (i + 1)..n {
                let dx = xs[i].partial_cmp(&xs[j]).unwrap();
                let dy = ys[i].partial_cmp(&ys[j]).unwrap();
                use std::cmp::Ordering::*;
                match (dx, dy) {
                    (Equal, Equal) => {}
                    (Equal, _) => tie_x += 1,
                    (_, Equal) => tie_y += 1,
                    (a, b) if a == b => con += 1,
                    _ => dis += 1,
                }
            }
        }
        let joint = |ties: i64| con + dis + ties;
        let denom = ((joint(tie_x) as f64) * (joint(tie_y) as f64)).sqrt();
        if joint(tie_x) == 0 || joint(tie_y) == 0 {
            return None;
        }
        Some((con - dis) as f64 / denom)
    }

    #[test]
    fn perfect_concordance_and_discordance() {
        assert_eq!(
            kendall_tau_b(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap(),
            1.0
        );
        assert_eq!(
            kendall_tau_b(&[1.0, 2.0, 3.0], &[30.0, 20.0, 10.0]).unwrap(),
            -1.0
        );
    }

    #[test]
    fn tied_example_matches_oracle() {
        let xs = [1.0, 2.0, 2.0, 3.0];
        let ys = [1.0, 3.0, 2.0, 4.0];
        let fast = kendall_tau_b(&xs, &ys).unwrap();
        let slow = tau_b_oracle(&xs, &ys).unwrap();
        assert!((fast - slow).abs() < 1e-12, "{fast} vs {slow}");
    }

    #[test]
    fn degenerate_inputs_error() {
        assert_eq!(
            kendall_tau_b(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(TauError::DegenerateInput)
        );
        assert_eq!(
            kendall_tau_b(&[1.0], &[1.0]),
            Err(TauError::TooShort)
        );
        assert_eq!(
            kendall_tau_b(&[1.0, 2.0], &[1.0]),
            Err(TauError::LengthMismatch(2, 1))
        );
    }

    #[test]
    fn mean_and_std_basics() {
        assert_eq!(mean(&[1.0, 2.0, 3.0]), 2.0);
        assert!((sample_std(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]) - 2.138089935299395).abs() < 1e-12);
        assert_eq!(sample_std(&[5.0]), 0.0);
        assert_eq!(standard_error_of_mean(&[]), 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        /// The merge-count implementation agrees with pair counting,
        /// including heavy ties.
        #[test]
        fn tau_matches_pair_counting_oracle(
            pairs in proptest::collection::vec((0u8..6, 0u8..6), 2..40)
        ) {
            let xs: Vec<f64> = pairs.iter().map(|(x, _)| *x as f64).collect();
            let ys: Vec<f64> = pairs.iter().map(|(_, y)| *y as f64).collect();
            match (kendall_tau_b(&xs, &ys), tau_b_oracle(&xs, &ys)) {
                (Ok(fast), Some(slow)) => {
                    prop_assert!((fast - slow).abs() < 1e-10, "{} vs {}", fast, slow);
                    prop_assert!((-1.0..=1.0).contains(&fast));
                }
                (Err(TauError::DegenerateInput), None) => {}
                (fast, slow) => prop_assert!(false, "{:?} vs {:?}", fast, slow),
            }
        }

        /// Antisymmetry: negating one argument flips the sign.
        #[test]
        fn tau_is_antisymmetric(
            pairs in proptest::collection::vec((0u8..8, 0u8..8), 2..30)
        ) {
            let xs: Vec<f64> = pairs.iter().map(|(x, _)| *x as f64).collect();
            let ys: Vec<f64> = pairs.iter().map(|(_, y)| *y as f64).collect();
            let neg_ys: Vec<f64> = ys.iter().map(|y| -y).collect();
            match (kendall_tau_b(&xs, &ys), kendall_tau_b(&xs, &neg_ys)) {
                (Ok(t), Ok(t_neg)) => prop_assert!((t + t_neg).abs() < 1e-10),
                (Err(a), Err(b)) => prop_assert_eq!(a, b),
                (a, b) => prop_assert!(false, "{:?} vs {:?}", a, b),
            }
        }
    }
}
