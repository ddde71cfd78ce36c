use std::collections::BTreeMap;

use super::AnalyticsError;

/// Cohen's kappa between two raters' categorical labels.
///
/// Computed from integer counts so the result is exactly symmetric:
/// `kappa = (n * agree - sum_k a_k b_k) / (n^2 - sum_k a_k b_k)`, where `a_k`
/// and `b_k` count label `k` in each sequence. When chance agreement is total
/// (both raters used one and the same label) the result is 1 for identical
/// sequences and 0 otherwise.
pub fn cohen_kappa<T: Ord>(labels_a: &[T], labels_b: &[T]) -> Result<f64, AnalyticsError> {
    if labels_a.len() != labels_b.len() {
        return Err(AnalyticsError::LengthMismatch {
            left: labels_a.len(),
            right: labels_b.len(),
        });
    }
    if labels_a.is_empty() {
        return Err(AnalyticsError::EmptyInput);
    }

    let n = labels_a.len() as i128;
    let mut counts: BTreeMap<&T, (i128, i128)> = BTreeMap::new();
    let mut agree = 0i128;
    for (a, b) in labels_a.iter().zip(labels_b) {
        counts.entry(a).or_default().0 += 1;
        counts.entry(b).or_default().1 += 1;
        if a == b {
            agree += 1;
        }
    }
    let chance: i128 = counts.values().map(|(ca, cb)| ca * cb).sum();
    let denominator = n * n - chance;
    if denominator == 0 {
        return Ok(if agree == n { 1.0 } else { 0.0 });
    }
    Ok((n * agree - chance) as f64 / denominator as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_case() {
        // p_o = 3/4, p_e = (2/4)(1/4) + (2/4)(3/4) = 1/2, kappa = 0.25 / 0.5
        let k = cohen_kappa(&["x", "x", "y", "y"], &["x", "y", "y", "y"]).unwrap();
        assert_eq!(k, 0.5);
    }

    #[test]
    fn identical_and_constant_sequences() {
        assert_eq!(cohen_kappa(&[1, 2, 3, 1], &[1, 2, 3, 1]).unwrap(), 1.0);
        assert_eq!(cohen_kappa(&["a"; 5], &["a"; 5]).unwrap(), 1.0);
        // one constant rater against a varied one: p_o = p_e
        assert_eq!(cohen_kappa(&["a"; 4], &["a", "b", "a", "b"]).unwrap(), 0.0);
    }

    #[test]
    fn complete_disagreement_is_negative() {
        assert_eq!(cohen_kappa(&[0, 1, 0, 1], &[1, 0, 1, 0]).unwrap(), -1.0);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            cohen_kappa(&[1, 2], &[1]),
            Err(AnalyticsError::LengthMismatch { left: 2, right: 1 })
        ));
        assert!(matches!(
            cohen_kappa::<u8>(&[], &[]),
            Err(AnalyticsError::EmptyInput)
        ));
    }
}
