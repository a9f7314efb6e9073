use std::collections::BTreeMap;

use lpgkit::synth::{generate, PlantedSpec, PLANTED_KEY};
use lpgkit::PropertyValue;

/// Plug-in mutual information (nats) between a discrete feature and the class.
fn mutual_information(pairs: &[(String, usize)]) -> f64 {
    let n = pairs.len() as f64;
    let mut joint: BTreeMap<(&str, usize), f64> = BTreeMap::new();
    let mut fx: BTreeMap<&str, f64> = BTreeMap::new();
    let mut fy: BTreeMap<usize, f64> = BTreeMap::new();
    for (x, y) in pairs {
        *joint.entry((x.as_str(), *y)).or_default() += 1.0;
        *fx.entry(x.as_str()).or_default() += 1.0;
        *fy.entry(*y).or_default() += 1.0;
    }
    joint.iter().map(|(&(x, y), &c)| c / n * (c * n / (fx[x] * fy[&y])).ln()).sum()
}

fn discretized(value: &PropertyValue) -> String {
    match value {
        PropertyValue::Real(r) => format!("bin{}", (r * 4.0).floor() as i64),
        PropertyValue::Text(t) => t.clone(),
        other => format!("{other:?}"),
    }
}

#[test]
fn noise_keys_carry_no_class_information() {
    let spec = PlantedSpec { noise_categorical: 2, noise_scalar: 2, noise_text: 2, ..PlantedSpec::default() };
    let f = generate(&spec).unwrap();
    for key in spec.noise_keys() {
        let pairs: Vec<(String, usize)> = f
            .graph
            .vertices()
            .iter()
            .zip(&f.classes)
            .map(|(v, &c)| (discretized(&v.properties[&key][0]), c))
            .collect();
        let mi = mutual_information(&pairs);
        assert!(mi < 0.01, "{key}: {mi}");
    }
    let planted: Vec<(String, usize)> = f
        .graph
        .vertices()
        .iter()
        .zip(&f.classes)
        .map(|(v, &c)| (discretized(&v.properties[PLANTED_KEY][0]), c))
        .collect();
    assert!(mutual_information(&planted) > 0.5);
}

#[test]
fn edge_count_near_expectation() {
    let spec = PlantedSpec::default();
    let f = generate(&spec).unwrap();
    let per_class = spec.n / spec.classes;
    let intra_pairs = spec.classes * per_class * (per_class - 1) / 2;
    let all_pairs = spec.n * (spec.n - 1) / 2;
    let expected = intra_pairs as f64 * spec.p_intra + (all_pairs - intra_pairs) as f64 * spec.p_inter;
    let found = f.graph.edge_count() as f64;
    assert!((found - expected).abs() < 0.1 * expected, "{found} vs {expected}");
}

#[test]
fn certificate_values() {
    let f = generate(&PlantedSpec { n: 400, ..PlantedSpec::default() }).unwrap();
    assert!((f.certificate.property_bayes_accuracy - 0.925).abs() < 1e-12);
    assert_eq!(f.certificate.class_prior, 0.25);
    assert!(f.certificate.structure_majority_accuracy > 0.25);
    let f1 = generate(&PlantedSpec { n: 400, rho: 1.0, ..PlantedSpec::default() }).unwrap();
    assert_eq!(f1.certificate.property_bayes_accuracy, 1.0);
}

#[test]
fn written_files() {
    let dir = tempfile::tempdir().unwrap();
    let f = generate(&PlantedSpec { n: 100, p_intra: 0.1, p_inter: 0.01, ..PlantedSpec::default() }).unwrap();
    let files = f.write(dir.path()).unwrap();
    assert_eq!(files.len(), 3);
    let g = lpgkit::io::load_lpg_jsonl(&files[0]).unwrap();
    assert_eq!(g, f.graph);
    let targets = std::fs::read_to_string(&files[1]).unwrap();
    assert_eq!(targets.lines().count(), 101);
    let cert: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&files[2]).unwrap()).unwrap();
    assert_eq!(cert["property_bayes_accuracy"], 0.925);
}
