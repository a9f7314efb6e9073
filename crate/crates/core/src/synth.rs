//! Seeded planted-signal fixtures: a stochastic block graph whose vertices
//! carry one class-revealing property, class-correlated labels and
//! class-independent noise properties.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Edge, GraphBuilder, PropertyGraph, PropertyValue, Vertex};
use crate::io::save_lpg_jsonl;

pub const PLANTED_KEY: &str = "planted";
pub const PLANTED_SCALAR_KEY: &str = "planted_score";
pub const CLASS_LABEL_PREFIX: &str = "L";

/// Free-text noise pool. Long enough to be hashed as text, and small enough
/// that a value never identifies a vertex.
const NOISE_SENTENCES: [&str; 8] = [
    "graph stores keep vertex and edge records",
    "the query planner merges index scans",
    "a batch of papers arrived from the venue",
    "authors split the table into shards",
    "training tokens pass through the hash layer",
    "cache misses route reads to the next field",
    "every label model scores the same route",
    "the merge step rewrites one vertex index",
];

const NOISE_LEVELS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantedSpec {
    pub n: usize,
    pub classes: usize,
    pub p_intra: f64,
    pub p_inter: f64,
    /// Probability that the planted key shows the true class.
    pub rho: f64,
    /// Per-class mean step of the optional planted scalar key.
    pub sigma_sep: Option<f64>,
    pub noise_categorical: usize,
    pub noise_scalar: usize,
    pub noise_text: usize,
    /// Probability that the class label `L{c}` is the true class.
    pub rho_label: f64,
    pub seed: u64,
}

impl Default for PlantedSpec {
    fn default() -> Self {
        PlantedSpec {
            n: 2000,
            classes: 4,
            p_intra: 0.012,
            p_inter: 0.002,
            rho: 0.9,
            sigma_sep: None,
            noise_categorical: 1,
            noise_scalar: 1,
            noise_text: 1,
            rho_label: 0.9,
            seed: 0,
        }
    }
}

impl PlantedSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if self.classes < 2 {
            return bad(format!("need at least 2 classes, got {}", self.classes));
        }
        if self.n < self.classes {
            return bad(format!("{} vertices cannot cover {} classes", self.n, self.classes));
        }
        if !(self.rho > 0.5 && self.rho <= 1.0) {
            return bad(format!("rho must be in (0.5, 1], got {}", self.rho));
        }
        if !(self.rho_label > 0.5 && self.rho_label <= 1.0) {
            return bad(format!("rho_label must be in (0.5, 1], got {}", self.rho_label));
        }
        if !(self.p_inter >= 0.0 && self.p_intra > self.p_inter && self.p_intra <= 1.0) {
            return bad(format!("need 0 <= p_inter < p_intra <= 1, got {} and {}", self.p_inter, self.p_intra));
        }
        if let Some(s) = self.sigma_sep {
            if !s.is_finite() {
                return bad("sigma_sep must be finite".into());
            }
        }
        Ok(())
    }

    pub fn noise_keys(&self) -> Vec<String> {
        let mut keys: Vec<String> = (0..self.noise_categorical).map(|i| format!("noise_cat{i}")).collect();
        keys.extend((0..self.noise_scalar).map(|i| format!("noise_num{i}")));
        keys.extend((0..self.noise_text).map(|i| format!("noise_text{i}")));
        keys
    }

    pub fn class_labels(&self) -> Vec<String> {
        (0..self.classes).map(|c| format!("{CLASS_LABEL_PREFIX}{c}")).collect()
    }

    /// `ρ + (1 − ρ)/C`: best accuracy from the planted key alone.
    pub fn property_bayes_accuracy(&self) -> f64 {
        self.rho + (1.0 - self.rho) / self.classes as f64
    }

    /// Chance that the class label agrees with the class.
    pub fn label_agreement(&self) -> f64 {
        self.rho_label + (1.0 - self.rho_label) / self.classes as f64
    }

    /// Best accuracy for predicting the class label from the planted key:
    /// guess the label equal to the Bayes class.
    pub fn label_completion_bayes_accuracy(&self) -> f64 {
        let q = self.property_bayes_accuracy();
        let miss = (1.0 - self.rho_label) / self.classes as f64;
        self.label_agreement() * q + (1.0 - q) * miss
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub property_bayes_accuracy: f64,
    pub label_agreement: f64,
    pub label_completion_bayes_accuracy: f64,
    /// Accuracy of the 1-hop neighbor-class majority vote (ties to the
    /// smallest class, isolated vertices to class 0).
    pub structure_majority_accuracy: f64,
    pub class_prior: f64,
    pub n_vertices: usize,
    pub n_edges: usize,
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub spec: PlantedSpec,
    pub graph: PropertyGraph,
    /// Class per vertex position (ids are `0..n`).
    pub classes: Vec<usize>,
    pub certificate: Certificate,
}

impl Fixture {
    /// Classes as trainer targets.
    pub fn targets(&self) -> Vec<f64> {
        self.classes.iter().map(|&c| c as f64).collect()
    }

    pub fn targets_csv(&self) -> String {
        let mut s = String::from("vertex_id,class\n");
        for (v, c) in self.graph.vertices().iter().zip(&self.classes) {
            s.push_str(&format!("{},{}\n", v.id, c));
        }
        s
    }

    /// Writes `graph.jsonl`, `targets.csv` and `certificate.json` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let graph = dir.join("graph.jsonl");
        save_lpg_jsonl(&self.graph, &graph)?;
        let targets = dir.join("targets.csv");
        fs::write(&targets, self.targets_csv())?;
        let cert = dir.join("certificate.json");
        let mut json = serde_json::to_string_pretty(&self.certificate)?;
        json.push('\n');
        fs::write(&cert, json)?;
        Ok(vec![graph, targets, cert])
    }
}

fn other_class(rng: &mut ChaCha8Rng, reliability: f64, class: usize, classes: usize) -> usize {
    if rng.gen_bool(reliability) {
        class
    } else {
        rng.gen_range(0..classes)
    }
}

/// Uniform draws, stratified separately inside every class: the m members of
/// a class get one value from each of the m strata `[j/m, (j+1)/m)` in random
/// order. Each value is still marginally uniform and independent of the class,
/// and every class ends up with nearly the same empirical distribution.
fn stratified_unit(rng: &mut ChaCha8Rng, members: &[Vec<usize>], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for group in members {
        let m = group.len();
        let mut strata: Vec<usize> = (0..m).collect();
        strata.shuffle(rng);
        for (&i, &j) in group.iter().zip(&strata) {
            out[i] = (j as f64 + rng.gen::<f64>()) / m as f64;
        }
    }
    out
}

pub fn generate(spec: &PlantedSpec) -> Result<Fixture> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n;
    let c = spec.classes;
    let mut classes: Vec<usize> = (0..n).map(|i| i % c).collect();
    classes.shuffle(&mut rng);

    let mut members = vec![Vec::new(); c];
    for (i, &class) in classes.iter().enumerate() {
        members[class].push(i);
    }
    let strata = |rng: &mut ChaCha8Rng| stratified_unit(rng, &members, n);
    let levels = |rng: &mut ChaCha8Rng, k: usize| strata(rng).into_iter().map(|u| ((u * k as f64) as usize).min(k - 1)).collect();
    let cat_noise: Vec<Vec<usize>> = (0..spec.noise_categorical).map(|_| levels(&mut rng, NOISE_LEVELS)).collect();
    let num_noise: Vec<Vec<f64>> = (0..spec.noise_scalar).map(|_| strata(&mut rng)).collect();
    let text_noise: Vec<Vec<usize>> =
        (0..spec.noise_text).map(|_| levels(&mut rng, NOISE_SENTENCES.len())).collect();

    let mut builder = GraphBuilder::new(false);
    for (i, &class) in classes.iter().enumerate() {
        let label = other_class(&mut rng, spec.rho_label, class, c);
        let shown = other_class(&mut rng, spec.rho, class, c);
        let mut v = Vertex::new(i as u64)
            .with_label(format!("{CLASS_LABEL_PREFIX}{label}"))
            .with_property(PLANTED_KEY, PropertyValue::Text(format!("v{shown}")));
        if let Some(sep) = spec.sigma_sep {
            let z: f64 = StandardNormal.sample(&mut rng);
            v = v.with_property(PLANTED_SCALAR_KEY, PropertyValue::Real(class as f64 * sep + z));
        }
        for (k, col) in cat_noise.iter().enumerate() {
            v = v.with_property(format!("noise_cat{k}"), PropertyValue::Text(format!("n{}", col[i])));
        }
        for (k, col) in num_noise.iter().enumerate() {
            v = v.with_property(format!("noise_num{k}"), PropertyValue::Real(col[i]));
        }
        for (k, col) in text_noise.iter().enumerate() {
            v = v.with_property(format!("noise_text{k}"), PropertyValue::Text(NOISE_SENTENCES[col[i]].to_string()));
        }
        builder.add_vertex(v)?;
    }

    let mut edge_id = 0u64;
    for i in 0..n {
        for j in i + 1..n {
            let p = if classes[i] == classes[j] { spec.p_intra } else { spec.p_inter };
            if rng.gen_bool(p) {
                builder.add_edge(Edge::new(edge_id, i as u64, j as u64).with_label("link"))?;
                edge_id += 1;
            }
        }
    }
    let graph = builder.freeze();
    let certificate = Certificate {
        property_bayes_accuracy: spec.property_bayes_accuracy(),
        label_agreement: spec.label_agreement(),
        label_completion_bayes_accuracy: spec.label_completion_bayes_accuracy(),
        structure_majority_accuracy: neighbor_majority_accuracy(&graph, &classes, c),
        class_prior: (0..c).map(|k| classes.iter().filter(|&&x| x == k).count()).max().unwrap_or(0) as f64 / n as f64,
        n_vertices: n,
        n_edges: graph.edge_count(),
    };
    Ok(Fixture { spec: spec.clone(), graph, classes, certificate })
}

/// Fraction of vertices whose neighbors' majority class is their own.
pub fn neighbor_majority_accuracy(graph: &PropertyGraph, classes: &[usize], num_classes: usize) -> f64 {
    let csr = graph.csr(crate::graph::AdjacencyView::Symmetric);
    let mut correct = 0usize;
    let mut counts = vec![0usize; num_classes];
    for (i, &class) in classes.iter().enumerate() {
        counts.iter_mut().for_each(|x| *x = 0);
        for &j in csr.row(i) {
            if j != i {
                counts[classes[j]] += 1;
            }
        }
        let vote = (1..num_classes).fold(0, |b, k| if counts[k] > counts[b] { k } else { b });
        correct += usize::from(vote == class);
    }
    correct as f64 / classes.len().max(1) as f64
}
