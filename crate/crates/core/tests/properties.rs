use enrichq::answer::{expected_f_alpha, select_answer_set, verify_threshold, Alpha};
use enrichq::model::{EnrichmentFunctionSpec, Expression, Op, Schema, TagType};
use enrichq::planner::{PlanQueue, Triple};
use enrichq::probability::{combine_predicate_probability, entropy, entropy_roots, esp_value, inverse_entropy};
use proptest::prelude::*;

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
    Schema::new(vec![tt("Person", &["John", "Mary", "Ann"]), tt("Mood", &["Smile", "Neutral"])]).unwrap()
}

/// Random expression text over the test schema.
fn expr_text() -> impl Strategy<Value = String> {
    let atom = (any::<bool>(), 0usize..5).prop_map(|(neg, k)| {
        let (tt, tag) = [("Person", "John"), ("Person", "Mary"), ("Person", "Ann"), ("Mood", "Smile"), ("Mood", "Neutral")][k];
        format!("{}{tt}(\"{tag}\")", if neg { "NOT " } else { "" })
    });
    atom.prop_recursive(3, 12, 3, |inner| {
        (prop::collection::vec(inner, 2..4), any::<bool>()).prop_map(|(parts, and)| {
            format!("({})", parts.join(if and { " AND " } else { " OR " }))
        })
    })
}

fn sorted_desc(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

proptest! {
    #[test]
    fn expression_display_round_trips(text in expr_text()) {
        let s = schema();
        let e = Expression::parse(&text, &s).unwrap();
        let again = Expression::parse(&e.to_string(), &s).unwrap();
        prop_assert_eq!(&again, &e);
        prop_assert_eq!(again.to_string(), e.to_string());
    }

    #[test]
    fn esp_is_a_monotone_probability(
        text in expr_text(),
        probs in prop::collection::vec(0.0f64..=1.0, 16),
        bump in 0.0f64..1.0,
        which in 0usize..16,
    ) {
        let e = Expression::parse(&text, &schema()).unwrap();
        let n = e.predicates.len();
        let p: Vec<f64> = probs[..n].to_vec();
        let v = esp_value(&e, &p);
        prop_assert!((0.0..=1.0).contains(&v));
        let mut q = p.clone();
        let i = which % n;
        q[i] = (q[i] + bump).min(1.0);
        prop_assert!(esp_value(&e, &q) >= v - 1e-12);
    }

    #[test]
    fn entropy_is_symmetric_and_bounded(p in 0.0f64..=1.0) {
        let h = entropy(p);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&h));
        prop_assert!((h - entropy(1.0 - p)).abs() < 1e-12);
    }

    #[test]
    fn inverse_entropy_recovers_the_root(p in 0.001f64..0.999) {
        let (lo, hi) = entropy_roots(entropy(p)).unwrap();
        prop_assert!(lo <= 0.5 && hi >= 0.5);
        prop_assert!((lo + hi - 1.0).abs() < 1e-12);
        prop_assert!((inverse_entropy(entropy(p), p).unwrap() - p).abs() < 1e-7);
    }

    #[test]
    fn combine_is_convex(pairs in prop::collection::vec((0.0f64..=1.0, 0.5f64..=1.0), 1..6)) {
        let c = combine_predicate_probability(&pairs, Op::Equal).unwrap();
        let lo = pairs.iter().map(|x| x.0).fold(f64::INFINITY, f64::min);
        let hi = pairs.iter().map(|x| x.0).fold(0.0, f64::max);
        prop_assert!(c >= lo - 1e-12 && c <= hi + 1e-12);
        let n = combine_predicate_probability(&pairs, Op::NotEqual).unwrap();
        prop_assert!((c + n - 1.0).abs() < 1e-12);
    }

    #[test]
    fn prefix_scores_are_unimodal(esps in prop::collection::vec(0.0f64..=1.0, 1..200), a in 0.05f64..=1.0) {
        let alpha = Alpha::new(a).unwrap();
        let sorted = sorted_desc(esps.clone());
        let total: f64 = sorted.iter().sum();
        let mut sum = 0.0;
        let scores: Vec<f64> = sorted.iter().enumerate().map(|(k, p)| { sum += p; expected_f_alpha(sum, k + 1, total, alpha) }).collect();
        let peak = scores.iter().cloned().fold(0.0, f64::max);
        let top = scores.iter().position(|s| *s == peak).unwrap();
        prop_assert!(scores[..=top].windows(2).all(|w| w[1] >= w[0] - 1e-12));
        prop_assert!(scores[top..].windows(2).all(|w| w[1] <= w[0] + 1e-12));

        let ids: Vec<(usize, f64)> = esps.iter().copied().enumerate().collect();
        let sel = select_answer_set(&ids, alpha);
        prop_assert!((sel.expected_f - peak).abs() < 1e-12);
        if !sel.is_empty() {
            prop_assert_eq!(scores[sel.len() - 1], peak);
            let strict = sel.len() == sorted.len() || scores[sel.len()] < peak;
            if strict && sorted[sel.len() - 1] > 0.0 {
                prop_assert!(verify_threshold(&sorted, sel.len(), alpha).unwrap());
            }
        }
    }

    #[test]
    fn selection_ignores_input_order(esps in prop::collection::vec(0.0f64..=1.0, 1..60), seed in any::<u64>()) {
        let ids: Vec<(usize, f64)> = esps.iter().copied().enumerate().collect();
        let mut shuffled = ids.clone();
        let n = shuffled.len();
        let mut x = seed;
        for i in (1..n).rev() {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (x >> 33) as usize % (i + 1));
        }
        let a = select_answer_set(&ids, Alpha::one());
        let b = select_answer_set(&shuffled, Alpha::one());
        prop_assert_eq!(a.answer_ids, b.answer_ids);
        prop_assert_eq!(a.threshold, b.threshold);
    }

    #[test]
    fn selection_splits_at_the_threshold(esps in prop::collection::vec(0.0f64..=1.0, 1..100)) {
        let ids: Vec<(usize, f64)> = esps.iter().copied().enumerate().collect();
        let sel = select_answer_set(&ids, Alpha::one());
        let mut inside = vec![false; esps.len()];
        for o in &sel.answer_ids {
            inside[*o] = true;
            prop_assert!(esps[*o] >= sel.threshold);
        }
        for (o, p) in esps.iter().enumerate() {
            if !inside[o] {
                prop_assert!(*p <= sel.threshold);
            }
        }
    }

    #[test]
    fn queue_pops_in_priority_order(entries in prop::collection::vec((0usize..30, 0usize..2, 0.0f64..2.0, 0.01f64..1.0), 1..80)) {
        let mut q = PlanQueue::new();
        for (o, r, b, c) in &entries {
            q.push(Triple { object: *o, predicate: *r, function: 0, benefit: *b, esp_before: 0.5, esp_delta_est: 0.0, cost: *c });
        }
        let mut last: Option<Triple<f64>> = None;
        let mut popped = 0;
        while let Some(t) = q.pop() {
            if let Some(l) = last {
                let ok = l.benefit > t.benefit
                    || (l.benefit == t.benefit && (l.cost < t.cost || (l.cost == t.cost && (l.object, l.predicate) < (t.object, t.predicate))));
                prop_assert!(ok, "{:?} before {:?}", l, t);
            }
            last = Some(t);
            popped += 1;
        }
        let mut keys: Vec<(usize, usize)> = entries.iter().map(|e| (e.0, e.1)).collect();
        keys.sort_unstable();
        keys.dedup();
        prop_assert_eq!(popped, keys.len());
    }
}
