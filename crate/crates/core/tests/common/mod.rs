#![allow(dead_code)]

use lpgkit::gnn::{
    DenseMatrix, GatLayer, GcnLayer, GinLayer, GnnModel, Gradients, NormalizedAdjacency, Parameterized,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random undirected edge list on `n` vertices.
pub fn random_edges(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(p) {
                edges.push((i, j));
            }
        }
    }
    edges
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix<f64> {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

/// Dense `N(i) ∪ {i}` membership from an edge list, self-loops collapsed.
pub fn dense_adjacency(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut a = vec![vec![false; n]; n];
    for &(i, j) in edges {
        a[i][j] = true;
        a[j][i] = true;
    }
    a
}

/// Â·H·W + b computed with dense loops.
pub fn dense_gcn(n: usize, edges: &[(usize, usize)], h: &DenseMatrix<f64>, w: &DenseMatrix<f64>, b: &[f64]) -> Vec<Vec<f64>> {
    let a = dense_adjacency(n, edges);
    let deg: Vec<f64> = (0..n).map(|i| (0..n).filter(|&j| j != i && a[i][j]).count() as f64).collect();
    let mut a_hat = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j || a[i][j] {
                a_hat[i][j] = 1.0 / ((deg[i] + 1.0) * (deg[j] + 1.0)).sqrt();
            }
        }
    }
    let mut out = vec![vec![0.0; w.cols()]; n];
    for i in 0..n {
        for q in 0..w.cols() {
            let mut s = b[q];
            for j in 0..n {
                for p in 0..h.cols() {
                    s += a_hat[i][j] * h.get(j, p) * w.get(p, q);
                }
            }
            out[i][q] = s;
        }
    }
    out
}

/// `(1+ε) h_i + Σ_j h_j` by naive neighbor summation.
pub fn naive_gin_sum(n: usize, edges: &[(usize, usize)], h: &DenseMatrix<f64>, eps: f64) -> Vec<Vec<f64>> {
    let a = dense_adjacency(n, edges);
    (0..n)
        .map(|i| {
            (0..h.cols())
                .map(|p| (1.0 + eps) * h.get(i, p) + (0..n).filter(|&j| j != i && a[i][j]).map(|j| h.get(j, p)).sum::<f64>())
                .collect()
        })
        .collect()
}

/// Per-edge softmax attention and outputs for every head.
pub fn naive_gat(
    n: usize,
    edges: &[(usize, usize)],
    layer: &GatLayer<f64>,
    h: &DenseMatrix<f64>,
) -> (Vec<Vec<f64>>, Vec<Vec<Vec<f64>>>) {
    let a = dense_adjacency(n, edges);
    let f = layer.head_dim();
    let z: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..layer.weight.cols()).map(|q| (0..h.cols()).map(|p| h.get(i, p) * layer.weight.get(p, q)).sum()).collect())
        .collect();
    let mut out = vec![vec![0.0; layer.weight.cols()]; n];
    // alpha[k][i][j]
    let mut alpha = vec![vec![vec![0.0; n]; n]; layer.heads];
    for k in 0..layer.heads {
        for i in 0..n {
            let hood: Vec<usize> = (0..n).filter(|&j| j == i || a[i][j]).collect();
            let scores: Vec<f64> = hood
                .iter()
                .map(|&j| {
                    let mut s = 0.0;
                    for c in 0..f {
                        s += layer.att_src[k * f + c] * z[i][k * f + c] + layer.att_dst[k * f + c] * z[j][k * f + c];
                    }
                    if s > 0.0 { s } else { 0.2 * s }
                })
                .collect();
            let denom: f64 = scores.iter().map(|s| s.exp()).sum();
            for (&j, s) in hood.iter().zip(&scores) {
                alpha[k][i][j] = s.exp() / denom;
                for c in 0..f {
                    out[i][k * f + c] += alpha[k][i][j] * z[j][k * f + c];
                }
            }
            for c in 0..f {
                out[i][k * f + c] += layer.bias[k * f + c];
            }
        }
    }
    (out, alpha)
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Max relative error between analytic gradients and central differences of
/// the scalar `Σ R ⊙ f(θ)` for every parameter entry and input entry.
pub fn gradient_check<P, F, B>(
    params: &mut P,
    input: &DenseMatrix<f64>,
    upstream: &DenseMatrix<f64>,
    forward: F,
    backward: B,
    step: f64,
) -> f64
where
    P: Parameterized<f64>,
    F: Fn(&P, &DenseMatrix<f64>) -> DenseMatrix<f64>,
    B: Fn(&P, &DenseMatrix<f64>, &DenseMatrix<f64>) -> (Gradients<f64>, DenseMatrix<f64>),
{
    let objective = |p: &P, x: &DenseMatrix<f64>| -> f64 {
        let y = forward(p, x);
        y.data().iter().zip(upstream.data()).map(|(a, b)| a * b).sum()
    };
    let (grads, dx) = backward(params, input, upstream);
    let mut worst: f64 = 0.0;
    let shapes: Vec<usize> = params.params().iter().map(|p| p.len()).collect();
    for (t, len) in shapes.into_iter().enumerate() {
        for idx in 0..len {
            let orig = params.params()[t][idx];
            params.params_mut()[t][idx] = orig + step;
            let plus = objective(params, input);
            params.params_mut()[t][idx] = orig - step;
            let minus = objective(params, input);
            params.params_mut()[t][idx] = orig;
            let numeric = (plus - minus) / (2.0 * step);
            worst = worst.max(relative_error(grads[t][idx], numeric));
        }
    }
    let mut x = input.clone();
    for idx in 0..x.data().len() {
        let orig = x.data()[idx];
        x.data_mut()[idx] = orig + step;
        let plus = objective(params, &x);
        x.data_mut()[idx] = orig - step;
        let minus = objective(params, &x);
        x.data_mut()[idx] = orig;
        worst = worst.max(relative_error(dx.data()[idx], (plus - minus) / (2.0 * step)));
    }
    worst
}

pub struct Instance {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
    pub adj: NormalizedAdjacency<f64>,
    pub x: DenseMatrix<f64>,
}

pub fn random_instance(rng: &mut ChaCha8Rng, max_n: usize, d: usize) -> Instance {
    let n = rng.gen_range(2..=max_n);
    let edges = random_edges(rng, n, 0.3);
    let adj = NormalizedAdjacency::from_undirected_edges(n, &edges);
    let x = random_matrix(rng, n, d);
    Instance { n, edges, adj, x }
}

pub fn gcn_check(rng: &mut ChaCha8Rng, inst: &Instance, out: usize) -> f64 {
    let mut layer = GcnLayer::new(rng, inst.x.cols(), out);
    layer.linear.bias = (0..out).map(|_| rng.gen_range(-0.5..0.5)).collect();
    let g = random_matrix(rng, inst.n, out);
    let adj = &inst.adj;
    gradient_check(
        &mut layer,
        &inst.x,
        &g,
        |l, x| l.forward(adj, x).unwrap().0,
        |l, x, g| {
            let (_, c) = l.forward(adj, x).unwrap();
            l.backward(adj, &c, g).unwrap()
        },
        1e-5,
    )
}

pub fn gin_check(rng: &mut ChaCha8Rng, inst: &Instance, out: usize) -> f64 {
    let mut layer = GinLayer::new(rng, inst.x.cols(), out);
    layer.eps[0] = rng.gen_range(-0.3..0.3);
    let g = random_matrix(rng, inst.n, out);
    let adj = &inst.adj;
    gradient_check(
        &mut layer,
        &inst.x,
        &g,
        |l, x| l.forward(adj, x).unwrap().0,
        |l, x, g| {
            let (_, c) = l.forward(adj, x).unwrap();
            l.backward(adj, &c, g).unwrap()
        },
        1e-5,
    )
}

pub fn gat_check(rng: &mut ChaCha8Rng, inst: &Instance, out: usize, heads: usize) -> f64 {
    let mut layer = GatLayer::new(rng, inst.x.cols(), out, heads).unwrap();
    let g = random_matrix(rng, inst.n, out);
    let adj = &inst.adj;
    gradient_check(
        &mut layer,
        &inst.x,
        &g,
        |l, x| l.forward(adj, x).unwrap().0,
        |l, x, g| {
            let (_, c) = l.forward(adj, x).unwrap();
            l.backward(adj, &c, g).unwrap()
        },
        1e-5,
    )
}

pub fn model_check(model: &mut GnnModel<f64>, inst: &Instance, rng: &mut ChaCha8Rng) -> f64 {
    let g = random_matrix(rng, inst.n, model.config.out_dim);
    let adj = &inst.adj;
    let mut scratch = model.clone();
    let (grads, dx) = {
        scratch.forward(adj, &inst.x).unwrap();
        scratch.backward(adj, &g).unwrap()
    };
    gradient_check(
        model,
        &inst.x,
        &g,
        |m, x| m.predict(adj, x).unwrap(),
        |_, _, _| (grads.clone(), dx.clone()),
        1e-5,
    )
}
