//! Answer quality against ground truth, gain and progressiveness.

use log::warn;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FMeasures {
    pub precision: f64,
    pub recall: f64,
    pub f_alpha: f64,
}

/// Precision, recall and F_α of an answer of size `answer_size` with
/// `hits` correct members, against `truth_size` satisfying objects.
/// An empty answer has precision 0; an empty truth set has recall 1.
pub fn f_measures_from_counts(answer_size: usize, truth_size: usize, hits: usize, alpha: f64) -> FMeasures {
    let precision = if answer_size == 0 { 0.0 } else { hits as f64 / answer_size as f64 };
    let recall = if truth_size == 0 { 1.0 } else { hits as f64 / truth_size as f64 };
    let f_alpha = if truth_size == 0 {
        if answer_size == 0 { 1.0 } else { 0.0 }
    } else if precision + recall == 0.0 {
        0.0
    } else {
        (1.0 + alpha) * precision * recall / (alpha * precision + recall)
    };
    FMeasures { precision, recall, f_alpha }
}

/// Quality of `answer` (object indices) against the membership mask `truth`.
pub fn true_f_measures(answer: &[usize], truth: &[bool], alpha: f64) -> FMeasures {
    let hits = answer.iter().filter(|o| truth[**o]).count();
    let truth_size = truth.iter().filter(|t| **t).count();
    f_measures_from_counts(answer.len(), truth_size, hits, alpha)
}

/// Normalized improvement `(f_t - f_0)/(f_max - f_0)` clamped to [0, 1];
/// 0 when `f_max ≤ f_0`.
pub fn gain(f_t: f64, f_0: f64, f_max: f64) -> f64 {
    if f_max <= f_0 {
        warn!("gain undefined: maximum {f_max} does not exceed initial {f_0}");
        return 0.0;
    }
    ((f_t - f_0) / (f_max - f_0)).clamp(0.0, 1.0)
}

/// How improvements at the sample points are weighted.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Weighting {
    /// `W(v_i) = max(1 - v_{i-1}/v_last, 0)`.
    LinearDecreasing,
    /// A single point with weight 1.
    BudgetSinglePoint,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProgressConfig {
    /// Sample points v_1 < … < v_last; v_0 = 0 is implicit.
    pub points: Vec<f64>,
    pub weighting: Weighting,
}

impl ProgressConfig {
    /// `intervals` equal steps up to `horizon`.
    pub fn uniform(horizon: f64, intervals: usize) -> Self {
        ProgressConfig {
            points: (1..=intervals).map(|i| horizon * i as f64 / intervals as f64).collect(),
            weighting: Weighting::LinearDecreasing,
        }
    }

    pub fn budget(bg: f64) -> Self {
        ProgressConfig { points: vec![bg], weighting: Weighting::BudgetSinglePoint }
    }

    pub fn weights(&self) -> Vec<f64> {
        match self.weighting {
            Weighting::BudgetSinglePoint => vec![1.0; self.points.len()],
            Weighting::LinearDecreasing => {
                let last = *self.points.last().unwrap_or(&1.0);
                let mut prev = 0.0;
                self.points
                    .iter()
                    .map(|v| {
                        let w = (1.0 - prev / last).max(0.0);
                        prev = *v;
                        w
                    })
                    .collect()
            }
        }
    }
}

/// Step function of quality over elapsed cost.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Timeline {
    /// (elapsed, expected F, true F) with strictly increasing elapsed.
    pub samples: Vec<(f64, f64, f64)>,
}

impl Timeline {
    /// True F at `t`: the value of the last sample at or before `t`.
    pub fn true_f_at(&self, t: f64) -> f64 {
        let i = self.samples.partition_point(|s| s.0 <= t);
        if i == 0 {
            self.samples.first().map_or(0.0, |s| s.2)
        } else {
            self.samples[i - 1].2
        }
    }
}

/// Weighted sum of quality improvements between consecutive sample points.
pub fn progressiveness(timeline: &Timeline, config: &ProgressConfig) -> Result<f64> {
    if timeline.samples.is_empty() {
        return Err(Error::Config("empty timeline".into()));
    }
    if config.points.is_empty() || config.points.windows(2).any(|w| w[0] >= w[1]) || config.points[0] <= 0.0 {
        return Err(Error::Config("sample points must be positive and strictly increasing".into()));
    }
    let weights = config.weights();
    let mut prev = timeline.true_f_at(0.0);
    let mut total = 0.0;
    for (v, w) in config.points.iter().zip(weights) {
        let f = timeline.true_f_at(*v);
        total += w * (f - prev);
        prev = f;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_measure_cases() {
        let t = [true, true, false, false];
        assert_eq!(true_f_measures(&[0, 1], &t, 1.0), FMeasures { precision: 1.0, recall: 1.0, f_alpha: 1.0 });
        assert_eq!(true_f_measures(&[2, 3], &t, 1.0), FMeasures { precision: 0.0, recall: 0.0, f_alpha: 0.0 });
        let m = f_measures_from_counts(4, 5, 3, 1.0);
        assert_eq!((m.precision, m.recall), (0.75, 0.6));
        assert!((m.f_alpha - 0.9 / 1.35).abs() < 1e-12);
        let e = f_measures_from_counts(2, 0, 0, 1.0);
        assert_eq!((e.recall, e.f_alpha), (1.0, 0.0));
        assert_eq!(f_measures_from_counts(0, 3, 0, 1.0).precision, 0.0);
    }

    #[test]
    fn gain_cases() {
        assert_eq!(gain(0.9, 0.49, 0.9), 1.0);
        assert_eq!(gain(0.49, 0.49, 0.9), 0.0);
        assert!((gain(0.8, 0.49, 0.9) - 0.31 / 0.41).abs() < 1e-12);
        assert_eq!(gain(0.8, 0.9, 0.9), 0.0);
    }

    #[test]
    fn weights_decrease_from_one() {
        let w = ProgressConfig::uniform(10.0, 10).weights();
        assert_eq!(w[0], 1.0);
        assert!(w.windows(2).all(|p| p[0] > p[1]));
        assert!((w[9] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn all_improvement_in_first_interval() {
        let tl = Timeline { samples: vec![(0.0, 0.0, 0.2), (0.5, 0.0, 0.9)] };
        let q = progressiveness(&tl, &ProgressConfig::uniform(10.0, 10)).unwrap();
        assert!((q - 0.7).abs() < 1e-12);
    }

    #[test]
    fn linear_rise() {
        let samples = (0..=10).map(|i| (i as f64, 0.0, i as f64 / 10.0)).collect();
        let q = progressiveness(&Timeline { samples }, &ProgressConfig::uniform(10.0, 10)).unwrap();
        assert!((q - 0.55).abs() < 1e-12);
    }

    #[test]
    fn unit_weights_telescope() {
        let samples = vec![(0.0, 0.0, 0.1), (1.5, 0.0, 0.4), (3.2, 0.0, 0.35), (7.0, 0.0, 0.8)];
        let tl = Timeline { samples };
        let cfg = ProgressConfig { points: vec![1.0, 2.0, 4.0, 8.0], weighting: Weighting::BudgetSinglePoint };
        assert!((progressiveness(&tl, &cfg).unwrap() - 0.7).abs() < 1e-12);
        assert!(progressiveness(&Timeline::default(), &cfg).is_err());
    }
}
