use std::path::PathBuf;

use lpgkit::encoder::encode_vertices;
use lpgkit::graph::{PropertyGraph, PropertyValue};
use lpgkit::io::{dataset_stats, load_lpg_jsonl, read_lpg_jsonl, write_lpg_jsonl};
use lpgkit::schema::{infer_schema, SchemaOptions};
use lpgkit::EntityKind;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

const ALL: [&str; 5] = ["citations-mini.jsonl", "golden-3.jsonl", "social-mini.jsonl", "all-kinds.jsonl", "empty.jsonl"];

fn render(g: &PropertyGraph) -> Vec<u8> {
    let mut out = Vec::new();
    write_lpg_jsonl(g, &mut out).unwrap();
    out
}

#[test]
fn round_trip_every_fixture() {
    for name in ALL {
        let g = load_lpg_jsonl(fixture(name)).unwrap();
        let text = render(&g);
        let back = read_lpg_jsonl(text.as_slice()).unwrap();
        assert_eq!(back, g, "{name}");
        assert_eq!(render(&back), text, "{name}");
    }
}

#[test]
fn all_value_kinds_survive() {
    let g = load_lpg_jsonl(fixture("all-kinds.jsonl")).unwrap();
    let back = read_lpg_jsonl(render(&g).as_slice()).unwrap();
    let v = back.vertex(3).unwrap();
    let kinds: Vec<_> = v.properties.values().map(|vals| vals[0].kind_name()).collect();
    for k in ["integer", "real", "boolean", "text", "realvec"] {
        assert!(kinds.contains(&k), "{k} missing from {kinds:?}");
    }
    assert_eq!(v.properties["int"][2], PropertyValue::Integer(9_007_199_254_740_993));
    assert_eq!(v.properties["real"][2], PropertyValue::Real(1e300));
    assert_eq!(v.properties["text"][1], PropertyValue::Text("ünïcödé \"quoted\"\n".into()));
    assert_eq!(v.properties["vec"][1], PropertyValue::RealVector(vec![1.0 / 3.0, -0.0, 5e-324]));
    // integral reals stay real
    assert_eq!(back.vertex(2).unwrap().properties["real"][0], PropertyValue::Real(2.0));
    assert_eq!(back.vertex(2).unwrap().properties["int"][0], PropertyValue::Integer(2));
    assert_eq!(back.edge(7).unwrap().properties["w"].len(), 2);
    assert!(back.vertex(1).unwrap().labels.is_empty());
}

#[test]
fn citation_stats() {
    let s = dataset_stats(&load_lpg_jsonl(fixture("citations-mini.jsonl")).unwrap());
    assert_eq!((s.n_vertices, s.n_edges, s.n_labels), (9, 11, 3));
    assert_eq!(s.n_edge_labels, 3);
    assert!((s.label_fractions["author"] - 4.0 / 9.0).abs() < 1e-15);
    let empty = dataset_stats(&load_lpg_jsonl(fixture("empty.jsonl")).unwrap());
    assert_eq!((empty.n_vertices, empty.n_edges, empty.n_labels), (0, 0, 0));
}

#[test]
fn record_order_does_not_matter() {
    let text = std::fs::read_to_string(fixture("citations-mini.jsonl")).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines[1..].reverse();
    lines[1..].rotate_left(5);
    let shuffled = lines.join("\n");
    let a = load_lpg_jsonl(fixture("citations-mini.jsonl")).unwrap();
    let b = read_lpg_jsonl(shuffled.as_bytes()).unwrap();
    assert_eq!(a, b);
    let opts = SchemaOptions::default();
    let fa = encode_vertices(&infer_schema(&a, EntityKind::Vertex, &opts).unwrap(), &a).unwrap();
    let fb = encode_vertices(&infer_schema(&b, EntityKind::Vertex, &opts).unwrap(), &b).unwrap();
    assert_eq!(fa, fb);
    assert!(fa.data.iter().all(|x| x.is_finite()));
}

#[test]
fn malformed_inputs_fail() {
    let bad = [
        "",
        "{\"kind\":\"vertex\",\"id\":1}\n",
        "{\"kind\":\"header\",\"version\":2,\"directed\":true}\n",
        "{\"kind\":\"header\",\"version\":1,\"directed\":true}\n{\"kind\":\"edge\",\"id\":1,\"src\":1,\"dst\":2}\n",
        "{\"kind\":\"header\",\"version\":1,\"directed\":true}\n{\"kind\":\"vertex\",\"id\":1,\"props\":{\"x\":[null]}}\n",
        "{\"kind\":\"header\",\"version\":1,\"directed\":true}\nnot json\n",
        "{\"kind\":\"header\",\"version\":1,\"directed\":true}\n{\"kind\":\"vertex\",\"id\":1,\"props\":{\"x\":[1,1]}}\n",
    ];
    for text in bad {
        assert!(read_lpg_jsonl(text.as_bytes()).is_err(), "{text:?}");
    }
}
