//! Expected F-measure and threshold-based answer-set selection.
//!
//! Sorting objects by decreasing ESP, the expected F-measure of the prefixes rises
//! and then falls, so the best answer set is the prefix at the peak.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Weight of precision relative to recall, in `(0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Alpha<T>(T);

impl<T: Scalar> Alpha<T> {
    pub fn new(value: T) -> Result<Self> {
        if value > T::zero() && value <= T::one() {
            Ok(Alpha(value))
        } else {
            Err(Error::Config(format!("alpha {value} not in (0, 1]")))
        }
    }

    pub fn one() -> Self {
        Alpha(T::one())
    }

    pub fn value(&self) -> T {
        self.0
    }
}

/// `(1+α)·Σ_A P / (α·Σ_O P + |A|)`; zero for an empty answer.
pub fn expected_f_alpha<T: Scalar>(answer_esp_sum: T, answer_size: usize, total_esp_sum: T, alpha: Alpha<T>) -> T {
    if answer_size == 0 {
        return T::zero();
    }
    let a = alpha.value();
    let den = a * total_esp_sum + T::lit(answer_size as f64);
    if den <= T::zero() {
        return T::zero();
    }
    (T::one() + a) * answer_esp_sum / den
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnswerSelection<T, I> {
    /// Sorted by descending ESP, ties by ascending id.
    pub answer_ids: Vec<I>,
    /// ESP of the last included object; `1` when the answer is empty.
    pub threshold: T,
    pub expected_f: T,
    pub answer_esp_sum: T,
    pub total_esp_sum: T,
}

impl<T: Scalar, I> AnswerSelection<T, I> {
    pub fn len(&self) -> usize {
        self.answer_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.answer_ids.is_empty()
    }
}

/// Chooses the expected-F-maximizing answer set.
///
/// Scans prefixes of the descending-ESP order and stops at the first decrease. A
/// tied score is accepted only when the new object's ESP equals the previous one,
/// so duplicates at the boundary are kept together.
pub fn select_answer_set<T: Scalar, I: Ord + Clone>(esps: &[(I, T)], alpha: Alpha<T>) -> AnswerSelection<T, I> {
    let mut order: Vec<&(I, T)> = esps.iter().collect();
    order.sort_by(|a, b| b.1.total_cmp_s(&a.1).then_with(|| a.0.cmp(&b.0)));
    let total: T = esps.iter().map(|(_, p)| *p).sum();

    let mut best = T::zero();
    let mut sum = T::zero();
    let mut taken = 0usize;
    for (k, (_, p)) in order.iter().enumerate() {
        let next_sum = sum + *p;
        let score = expected_f_alpha(next_sum, k + 1, total, alpha);
        let tie_with_equal = k > 0 && score == best && *p == order[k - 1].1;
        if score > best || tie_with_equal {
            best = score;
            sum = next_sum;
            taken = k + 1;
        } else {
            break;
        }
    }
    let answer_ids: Vec<I> = order[..taken].iter().map(|(id, _)| id.clone()).collect();
    let threshold = if taken == 0 { T::one() } else { order[taken - 1].1 };
    AnswerSelection { answer_ids, threshold, expected_f: best, answer_esp_sum: sum, total_esp_sum: total }
}

/// Checks the two threshold inequalities at 1-based `tau_index` over ESPs sorted in
/// descending order:
///
/// * `P_τ > (P_1 + … + P_{τ-1}) / (τ - 1 + α·K)`
/// * `P_{τ+1} < (P_1 + … + P_τ) / (τ + α·K)` (vacuous when `τ = n`)
///
/// where `K` is the sum of all ESPs.
pub fn verify_threshold<T: Scalar>(sorted_esps: &[T], tau_index: usize, alpha: Alpha<T>) -> Result<bool> {
    let n = sorted_esps.len();
    if tau_index == 0 || tau_index > n {
        return Err(Error::IndexOutOfRange { index: tau_index, len: n });
    }
    let k: T = sorted_esps.iter().copied().sum::<T>() * alpha.value();
    let before: T = sorted_esps[..tau_index - 1].iter().copied().sum();
    let tau = T::lit(tau_index as f64);
    let first = sorted_esps[tau_index - 1] > before / (tau - T::one() + k);
    let second = tau_index == n || sorted_esps[tau_index] < (before + sorted_esps[tau_index - 1]) / (tau + k);
    Ok(first && second)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn worked_esps() -> Vec<(&'static str, f64)> {
        vec![("o1", 0.9), ("o2", 0.3), ("o3", 0.2), ("o4", 0.8), ("o5", 0.75)]
    }

    #[test]
    fn expected_f_values() {
        let a = Alpha::one();
        let k = 2.95;
        assert!(f64::abs(expected_f_alpha(2.45, 3, k, a) - 4.9 / 5.95) < 1e-12);
        assert!(f64::abs(expected_f_alpha(0.9, 1, k, a) - 1.8 / 3.95) < 1e-12);
        assert!(f64::abs(expected_f_alpha(5.0_f64, 5, 5.0, a) - 1.0) < 1e-12);
        assert_eq!(expected_f_alpha(0.0_f64, 0, 0.0, a), 0.0);
    }

    #[test]
    fn worked_example_selection() {
        let s = select_answer_set(&worked_esps(), Alpha::one());
        assert_eq!(s.answer_ids, vec!["o1", "o4", "o5"]);
        assert_eq!(s.threshold, 0.75);
        assert!((s.expected_f - 0.8235).abs() < 1e-4);
        assert!((s.total_esp_sum - 2.95).abs() < 1e-12);
    }

    #[test]
    fn single_object() {
        let s = select_answer_set(&[(1, 0.6f64)], Alpha::one());
        assert_eq!(s.answer_ids, vec![1]);
        assert!((s.expected_f - 0.75).abs() < 1e-12);
    }

    #[test]
    fn empty_and_all_zero() {
        let s = select_answer_set::<f64, u32>(&[], Alpha::one());
        assert!(s.is_empty());
        assert_eq!(s.threshold, 1.0);
        let s = select_answer_set(&[(1, 0.0f64), (2, 0.0)], Alpha::one());
        assert!(s.is_empty());
        assert_eq!(s.threshold, 1.0);
        assert_eq!(s.expected_f, 0.0);
    }

    #[test]
    fn duplicate_boundary_values_stay_together() {
        let s = select_answer_set(&[(1, 1.0f64), (2, 1.0), (3, 1.0)], Alpha::one());
        assert_eq!(s.answer_ids, vec![1, 2, 3]);
        assert!((s.expected_f - 1.0).abs() < 1e-12);
    }

    #[test]
    fn threshold_verification() {
        let sorted = [0.9f64, 0.8, 0.75, 0.3, 0.2];
        assert!(verify_threshold(&sorted, 3, Alpha::one()).unwrap());
        assert!(!verify_threshold(&sorted, 4, Alpha::one()).unwrap());
        assert!(!verify_threshold(&sorted, 2, Alpha::one()).unwrap());
        assert!(matches!(verify_threshold(&sorted, 0, Alpha::one()), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(verify_threshold(&sorted, 6, Alpha::one()), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn alpha_range() {
        assert!(Alpha::new(0.0f64).is_err());
        assert!(Alpha::new(1.5f64).is_err());
        assert!(Alpha::new(0.5f64).is_ok());
    }
}
