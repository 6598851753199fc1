/// Arithmetic mean; `None` for an empty slice.
pub fn mean(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    Some(xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Middle value, or the mean of the two middle values.
pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 0 { (v[mid - 1] + v[mid]) / 2.0 } else { v[mid] })
}

fn sum_sq_dev(xs: &[f64]) -> Option<f64> {
    let m = mean(xs)?;
    Some(xs.iter().map(|x| (x - m).powi(2)).sum())
}

/// Standard deviation with the n − 1 denominator; 0 for a single value.
pub fn sample_std(xs: &[f64]) -> Option<f64> {
    let ss = sum_sq_dev(xs)?;
    Some(if xs.len() < 2 { 0.0 } else { (ss / (xs.len() - 1) as f64).sqrt() })
}

/// Standard deviation with the n denominator.
pub fn population_std(xs: &[f64]) -> Option<f64> {
    Some((sum_sq_dev(xs)? / xs.len() as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_cases() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[6.0, 9.0]), Some(7.5));
        assert_eq!(population_std(&[6.0, 9.0]), Some(1.5));
        assert_eq!(sample_std(&[5.0]), Some(0.0));
        assert_eq!(mean(&[]), None);
    }

    proptest! {
        #[test]
        fn mean_permutation_invariant(mut xs in prop::collection::vec(0u32..=10, 1..30), seed in any::<u64>()) {
            use rand::{seq::SliceRandom, SeedableRng};
            let a: Vec<f64> = xs.iter().map(|&x| f64::from(x)).collect();
            xs.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let b: Vec<f64> = xs.iter().map(|&x| f64::from(x)).collect();
            prop_assert!((mean(&a).unwrap() - mean(&b).unwrap()).abs() < 1e-12);
            prop_assert_eq!(median(&a), median(&b));
        }
    }
}
