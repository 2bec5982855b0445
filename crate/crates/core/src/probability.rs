//! Predicate probabilities, expression satisfiability probability (ESP), and entropy.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{Expression, Node, Op};
use crate::scalar::Scalar;

/// Quality-weighted combination of the executed functions' outputs for one predicate.
///
/// `outputs` holds `(f, q)` pairs: the function's probability for the predicate's tag
/// and the function's quality. Weights are `q / Σq` over the executed functions only.
pub fn combine_predicate_probability<T: Scalar>(outputs: &[(T, T)], op: Op) -> Result<T> {
    if outputs.is_empty() {
        return Err(Error::NoOutputs);
    }
    let mut num = T::zero();
    let mut den = T::zero();
    for &(f, q) in outputs {
        if !(f >= T::zero() && f <= T::one()) {
            return Err(Error::OutOfUnitRange(f.to_f64_lossy()));
        }
        let g = match op {
            Op::Equal => f,
            Op::NotEqual => T::one() - f,
        };
        num = num + q * g;
        den = den + q;
    }
    Ok((num / den).max(T::zero()).min(T::one()))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EspDiagnostic {
    /// An AND joined two `=` predicates on different tags of one tag type.
    MutuallyExclusiveAnd { tag_type: String },
    /// The mutually exclusive sum under an OR exceeded one and was clamped.
    OrSumClamped { tag_type: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct EspOutcome<T> {
    pub value: T,
    pub diagnostics: Vec<EspDiagnostic>,
}

/// Expression satisfiability probability of one object given one probability per leaf.
///
/// Predicates on different tag types are independent; `=` predicates on different tags
/// of one tag type are mutually exclusive.
pub fn esp<T: Scalar>(expr: &Expression, leaf_probs: &[T]) -> EspOutcome<T> {
    assert_eq!(leaf_probs.len(), expr.predicates.len(), "one probability per leaf");
    let mut diagnostics = Vec::new();
    let value = eval(&expr.root, expr, leaf_probs, &mut diagnostics);
    EspOutcome { value, diagnostics }
}

/// [`esp`] without diagnostics.
pub fn esp_value<T: Scalar>(expr: &Expression, leaf_probs: &[T]) -> T {
    esp(expr, leaf_probs).value
}

fn eval<T: Scalar>(node: &Node, expr: &Expression, p: &[T], diag: &mut Vec<EspDiagnostic>) -> T {
    match node {
        Node::Leaf(i) => p[*i],
        Node::And(children) => {
            let mut seen: BTreeMap<usize, usize> = BTreeMap::new();
            for c in children {
                if let Node::Leaf(i) = c {
                    let pred = &expr.predicates[*i];
                    if pred.op != Op::Equal {
                        continue;
                    }
                    if let Some(&tag) = seen.get(&pred.tag_type_index) {
                        if tag != pred.tag_index {
                            diag.push(EspDiagnostic::MutuallyExclusiveAnd { tag_type: pred.tag_type.clone() });
                            return T::zero();
                        }
                    }
                    seen.insert(pred.tag_type_index, pred.tag_index);
                }
            }
            children.iter().fold(T::one(), |acc, c| acc * eval(c, expr, p, diag))
        }
        Node::Or(children) => {
            // Exclusive `=` leaves of one tag type add; everything else combines as
            // independent events.
            let mut groups: BTreeMap<usize, (T, Vec<usize>)> = BTreeMap::new();
            let mut independent = Vec::new();
            for c in children {
                match c {
                    Node::Leaf(i) if expr.predicates[*i].op == Op::Equal => {
                        let pred = &expr.predicates[*i];
                        let g = groups.entry(pred.tag_type_index).or_insert((T::zero(), Vec::new()));
                        if g.1.contains(&pred.tag_index) {
                            // Same event twice: not exclusive with itself.
                            independent.push(p[*i]);
                        } else {
                            g.0 = g.0 + p[*i];
                            g.1.push(pred.tag_index);
                        }
                    }
                    other => independent.push(eval(other, expr, p, diag)),
                }
            }
            for (tt, (sum, _)) in groups {
                let v = if sum > T::one() {
                    diag.push(EspDiagnostic::OrSumClamped { tag_type: expr_tag_type_name(expr, tt) });
                    T::one()
                } else {
                    sum
                };
                independent.push(v);
            }
            T::one() - independent.into_iter().fold(T::one(), |acc, v| acc * (T::one() - v))
        }
    }
}

fn expr_tag_type_name(expr: &Expression, tag_type_index: usize) -> String {
    expr.predicates
        .iter()
        .find(|p| p.tag_type_index == tag_type_index)
        .map(|p| p.tag_type.clone())
        .unwrap_or_default()
}

/// Binary entropy in bits, with `0·log 0 = 0`.
pub fn entropy<T: Scalar>(p: T) -> T {
    if p <= T::zero() || p >= T::one() {
        return T::zero();
    }
    let q = T::one() - p;
    -(p * p.log2()) - q * q.log2()
}

/// Both solutions `(low, high)` of `entropy(p) = h`, with `low = 1 - high`.
pub fn entropy_roots<T: Scalar>(h: T) -> Result<(T, T)> {
    if !(h >= T::zero() && h <= T::one()) {
        return Err(Error::OutOfUnitRange(h.to_f64_lossy()));
    }
    let half = T::lit(0.5);
    // entropy is strictly decreasing on [0.5, 1].
    let (mut lo, mut hi) = (half, T::one());
    for _ in 0..256 {
        let mid = (lo + hi) * half;
        if mid <= lo || mid >= hi {
            break;
        }
        if entropy(mid) > h {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let high = if (entropy(lo) - h).abs() <= (entropy(hi) - h).abs() { lo } else { hi };
    Ok((T::one() - high, high))
}

/// The root of `entropy(p) = h` on the same side of 0.5 as `current_p`.
pub fn inverse_entropy<T: Scalar>(h: T, current_p: T) -> Result<T> {
    let (low, high) = entropy_roots(h)?;
    Ok(if current_p >= T::lit(0.5) { high } else { low })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::expr::parse_expression;
    use crate::model::schema::{EnrichmentFunctionSpec, Schema, TagType};

    fn schema() -> Schema {
        let tt = |id: &str, tags: &[&str]| TagType {
            id: id.into(),
            tags: tags.iter().map(|s| s.to_string()).collect(),
            functions: vec![EnrichmentFunctionSpec {
                id: format!("{id}_f"),
                tag_type: id.into(),
                quality: 0.8,
                cost: 1.0,
                model: Default::default(),
                cost_jitter: 0.0,
            }],
            priors: None,
        };
        Schema::new(vec![
            tt("Person", &["John", "David"]),
            tt("Expression", &["Smile", "Neutral"]),
        ])
        .unwrap()
    }

    #[test]
    fn combine_single() {
        let p = combine_predicate_probability(&[(0.8f64, 0.7)], Op::Equal).unwrap();
        assert!((p - 0.8).abs() < 1e-15);
    }

    #[test]
    fn combine_weighted() {
        let p = combine_predicate_probability(&[(0.8f64, 0.6), (0.6, 0.9)], Op::Equal).unwrap();
        assert!((p - 0.68).abs() < 1e-12);
    }

    #[test]
    fn combine_not_equal() {
        let p = combine_predicate_probability(&[(0.8f64, 0.9)], Op::NotEqual).unwrap();
        assert!((p - 0.2).abs() < 1e-12);
    }

    #[test]
    fn combine_errors() {
        assert!(matches!(combine_predicate_probability::<f64>(&[], Op::Equal), Err(Error::NoOutputs)));
        assert!(matches!(
            combine_predicate_probability(&[(1.2f64, 0.9)], Op::Equal),
            Err(Error::OutOfUnitRange(_))
        ));
    }

    #[test]
    fn esp_rules() {
        let s = schema();
        let and = parse_expression(r#"Person("John") AND Expression("Smile")"#, &s).unwrap();
        assert!((esp_value(&and, &[0.6f64, 0.8]) - 0.48).abs() < 1e-12);

        let or_same = parse_expression(r#"Person("John") OR Person("David")"#, &s).unwrap();
        let out = esp(&or_same, &[0.6f64, 0.2]);
        assert!((out.value - 0.8).abs() < 1e-12);
        assert!(out.diagnostics.is_empty());

        let or_indep = parse_expression(r#"Person("John") OR Expression("Smile")"#, &s).unwrap();
        assert!((esp_value(&or_indep, &[0.5f64, 0.5]) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn esp_mutual_exclusion_and_clamp() {
        let s = schema();
        let and = parse_expression(r#"Person("John") AND Person("David")"#, &s).unwrap();
        let out = esp(&and, &[0.6f64, 0.5]);
        assert_eq!(out.value, 0.0);
        assert_eq!(out.diagnostics, vec![EspDiagnostic::MutuallyExclusiveAnd { tag_type: "Person".into() }]);

        let or = parse_expression(r#"Person("John") OR Person("David")"#, &s).unwrap();
        let out = esp(&or, &[0.7f64, 0.6]);
        assert_eq!(out.value, 1.0);
        assert_eq!(out.diagnostics.len(), 1);
    }

    #[test]
    fn entropy_values() {
        assert!((entropy(0.5f64) - 1.0).abs() < 1e-15);
        assert_eq!(entropy(0.0f64), 0.0);
        assert_eq!(entropy(1.0f64), 0.0);
        // -0.84 log2 0.84 - 0.16 log2 0.16
        let expected = -(0.84f64 * 0.84f64.log2()) - 0.16 * 0.16f64.log2();
        assert!((entropy(0.84f64) - expected).abs() < 1e-15);
        assert!((entropy(0.84f64) - 0.634).abs() < 5e-4);
    }

    #[test]
    fn inverse_entropy_worked_pair() {
        let h = 0.92f64 - 0.28;
        let (lo, hi) = entropy_roots(h).unwrap();
        assert!((hi - 0.84).abs() < 0.01, "{hi}");
        assert!((lo - 0.16).abs() < 0.01, "{lo}");
        assert!((entropy(hi) - h).abs() <= 1e-9);
        assert_eq!(inverse_entropy(h, 0.7).unwrap(), hi);
    }

    #[test]
    fn inverse_entropy_edges() {
        assert!((inverse_entropy(1.0f64, 0.3).unwrap() - 0.5).abs() < 1e-9);
        assert_eq!(inverse_entropy(0.0f64, 0.7).unwrap(), 1.0);
        assert_eq!(inverse_entropy(0.0f64, 0.2).unwrap(), 0.0);
        assert!(matches!(inverse_entropy(1.5f64, 0.5), Err(Error::OutOfUnitRange(_))));
        assert!(matches!(inverse_entropy(-0.1f64, 0.5), Err(Error::OutOfUnitRange(_))));
    }

    #[test]
    fn works_in_f32() {
        let (_, hi) = entropy_roots(0.64f32).unwrap();
        assert!((hi - 0.84).abs() < 0.01);
        let p = combine_predicate_probability(&[(0.8f32, 0.6), (0.6, 0.9)], Op::Equal).unwrap();
        assert!((p - 0.68).abs() < 1e-6);
    }
}
