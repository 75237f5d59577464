use super::DspError;
use crate::model::{AffectLabel, AnnotationValues, DiscreteState, Level};

/// Normalised arousal/valence range.
pub const AV_RANGE: (f64, f64) = (0.5, 9.5);
/// Upper edge (inclusive) of the low bin.
pub const AV_LOW_MAX: f64 = 5.0;

/// Outcome of resolving one window's annotations.
pub type LabelOutcome = Option<AffectLabel>;

/// Mean-rounding of retained protocol codes.
///
/// Codes outside 1..=4 are discarded; the window is dropped when fewer than
/// half of its samples survive. The mean is rounded to the nearest code with
/// ties going to the larger one. All arithmetic is on integer counts, so the
/// result depends only on the multiset of codes.
pub fn resolve_label_discrete(codes: &[i64]) -> LabelOutcome {
    let (mut retained, mut sum) = (0i64, 0i64);
    for &c in codes {
        if DiscreteState::from_code(c).is_some() {
            retained += 1;
            sum += c;
        }
    }
    if retained == 0 || 2 * retained < codes.len() as i64 {
        return None;
    }
    // floor(mean + 1/2) == floor((2 sum + n) / 2n)
    let code = (2 * sum + retained).div_euclid(2 * retained);
    DiscreteState::from_code(code).map(AffectLabel::State)
}

fn level(mean: f64) -> Level {
    if mean <= AV_LOW_MAX {
        Level::Low
    } else {
        Level::High
    }
}

fn order_free_mean(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v.iter().sum::<f64>() / v.len() as f64
}

/// Quadrant of the per-axis window means; `Ok(None)` for an empty slice.
pub fn resolve_label_av(values: &[(f64, f64)]) -> Result<LabelOutcome, DspError> {
    let (lo, hi) = AV_RANGE;
    for &(a, v) in values {
        for x in [a, v] {
            if !(lo..=hi).contains(&x) {
                return Err(DspError::ValueOutOfRange { value: x });
            }
        }
    }
    if values.is_empty() {
        return Ok(None);
    }
    let arousal = order_free_mean(values.iter().map(|p| p.0).collect());
    let valence = order_free_mean(values.iter().map(|p| p.1).collect());
    Ok(Some(AffectLabel::Quadrant { arousal: level(arousal), valence: level(valence) }))
}

/// Resolves an annotation slice `[start, end)` of either scheme.
pub fn resolve_label(values: &AnnotationValues, start: usize, end: usize) -> Result<LabelOutcome, DspError> {
    match values {
        AnnotationValues::Discrete(codes) => Ok(resolve_label_discrete(&codes[start..end])),
        AnnotationValues::ArousalValence(av) => resolve_label_av(&av[start..end]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn state(s: DiscreteState) -> LabelOutcome {
        Some(AffectLabel::State(s))
    }

    #[test]
    fn constant_slice() {
        assert_eq!(resolve_label_discrete(&[2; 100]), state(DiscreteState::Stress));
    }

    #[test]
    fn mixed_slice_rounds_mean() {
        let mut codes = vec![1; 60];
        codes.extend([2; 40]);
        assert_eq!(resolve_label_discrete(&codes), state(DiscreteState::Baseline));
    }

    #[test]
    fn mostly_transient_is_dropped() {
        let mut codes = vec![0; 70];
        codes.extend([1; 30]);
        assert_eq!(resolve_label_discrete(&codes), None);
    }

    #[test]
    fn discarded_codes_do_not_vote() {
        let mut codes = vec![6; 40];
        codes.extend([4; 60]);
        assert_eq!(resolve_label_discrete(&codes), state(DiscreteState::Meditation));
    }

    #[test]
    fn exactly_half_retained_is_kept() {
        assert_eq!(resolve_label_discrete(&[0, 0, 3, 3]), state(DiscreteState::Amusement));
    }

    #[test]
    fn tie_goes_to_larger_code() {
        // mean 1.5
        assert_eq!(resolve_label_discrete(&[1, 2]), state(DiscreteState::Stress));
        // mean 3.5
        assert_eq!(resolve_label_discrete(&[3, 4, 3, 4]), state(DiscreteState::Meditation));
    }

    #[test]
    fn empty_slice_is_dropped() {
        assert_eq!(resolve_label_discrete(&[]), None);
    }

    #[test]
    fn av_quadrants() {
        let q = |a, v| Some(AffectLabel::Quadrant { arousal: a, valence: v });
        assert_eq!(resolve_label_av(&[(2.0, 8.0); 5]).unwrap(), q(Level::Low, Level::High));
        assert_eq!(resolve_label_av(&[(5.0, 5.0); 3]).unwrap(), q(Level::Low, Level::Low));
        assert_eq!(resolve_label_av(&[(5.01, 9.5)]).unwrap(), q(Level::High, Level::High));
    }

    #[test]
    fn av_out_of_range() {
        assert_eq!(
            resolve_label_av(&[(9.6, 5.0)]),
            Err(DspError::ValueOutOfRange { value: 9.6 })
        );
        assert!(resolve_label_av(&[(5.0, 0.4)]).is_err());
    }

    proptest! {
        #[test]
        fn discrete_resolution_is_permutation_invariant(
            codes in proptest::collection::vec(0i64..8, 1..200),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut shuffled = codes.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(resolve_label_discrete(&codes), resolve_label_discrete(&shuffled));
        }

        #[test]
        fn av_resolution_is_permutation_invariant(
            values in proptest::collection::vec((0.5f64..9.5, 0.5f64..9.5), 1..100),
        ) {
            let mut rev = values.clone();
            rev.reverse();
            prop_assert_eq!(resolve_label_av(&values).unwrap(), resolve_label_av(&rev).unwrap());
        }
    }
}
