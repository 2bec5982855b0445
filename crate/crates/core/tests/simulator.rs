use std::collections::BTreeMap;

use enrichq::model::{EnrichmentFunctionSpec, Object, Schema, ScoreModelKind, TagType};
use enrichq::sim::{inv_norm_cdf, ScoreModel, Simulator, ValidationSet};
use statrs::distribution::{ContinuousCDF, Normal};

const QUALITIES: [f64; 4] = [0.6, 0.7, 0.84, 0.89];

fn schema(q: f64) -> Schema {
    Schema::new(vec![TagType {
        id: "Gender".into(),
        tags: vec!["Male".into(), "Female".into()],
        functions: vec![EnrichmentFunctionSpec {
            id: "f".into(),
            tag_type: "Gender".into(),
            quality: q,
            cost: 1.0,
            model: ScoreModelKind::Binormal,
            cost_jitter: 0.0,
        }],
        priors: None,
    }])
    .unwrap()
}

fn objects(n: usize) -> Vec<Object> {
    (0..n)
        .map(|i| {
            let mut truth = BTreeMap::new();
            truth.insert("Gender".to_string(), if i % 2 == 0 { "Male" } else { "Female" }.to_string());
            Object { id: format!("v{i}"), precise: BTreeMap::new(), truth }
        })
        .collect()
}

#[test]
fn quantile_matches_reference() {
    let n = Normal::new(0.0, 1.0).unwrap();
    for p in [1e-6, 0.001, 0.02425, 0.1, 0.5, 0.6, 0.84, 0.89, 0.97575, 0.999, 1.0 - 1e-6] {
        assert!((inv_norm_cdf(p) - n.inverse_cdf(p)).abs() < 1e-8, "{p}");
    }
}

#[test]
fn separation_gives_the_configured_area() {
    // For unit-variance normals with mean gap d the ROC area is Φ(d/√2).
    let n = Normal::new(0.0, 1.0).unwrap();
    for q in QUALITIES {
        let d = ScoreModel::from_quality(q).separation;
        assert!((n.cdf(d / std::f64::consts::SQRT_2) - q).abs() < 1e-9, "{q}");
    }
}

#[test]
fn learned_area_matches_quality() {
    let objs = objects(10_000);
    for q in QUALITIES {
        let v = ValidationSet::record(&schema(q), &objs, &Simulator::new(17));
        let a = v.learn_quality_auc(0, 0);
        assert!((a - q).abs() <= 0.02, "quality {q}: learned {a}");
    }
}

#[test]
fn reliability_by_decile() {
    let objs = objects(50_000);
    let sim = Simulator::new(5);
    for q in QUALITIES {
        let f = &schema(q).tag_types[0].functions[0];
        let mut bins = vec![(0.0, 0usize, 0usize); 10];
        for o in &objs {
            let p = sim.probability(f, o, "Male", 0.5);
            let b = ((p * 10.0) as usize).min(9);
            bins[b].0 += p;
            bins[b].1 += 1;
            bins[b].2 += usize::from(o.truth["Gender"] == "Male");
        }
        for (i, (sum, n, pos)) in bins.iter().enumerate() {
            if *n < 500 {
                continue;
            }
            let predicted = sum / *n as f64;
            let observed = *pos as f64 / *n as f64;
            assert!((predicted - observed).abs() <= 0.03, "quality {q} decile {i}: {predicted} vs {observed} over {n}");
        }
    }
}

#[test]
fn prior_shifts_the_posterior() {
    let m = ScoreModel::from_quality(0.84);
    let s = 0.4;
    assert!(m.posterior(s, 0.2) < m.posterior(s, 0.5));
    let d = m.separation;
    let equal = 1.0 / (1.0 + (d * d / 2.0 - d * s).exp());
    assert!((m.posterior(s, 0.5) - equal).abs() < 1e-15);
}
