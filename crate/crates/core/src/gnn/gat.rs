use rand::Rng;

use super::linear::glorot;
use super::matrix::{axpy, dot};
use super::{DenseMatrix, Gradients, NormalizedAdjacency, Parameterized};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const GAT_NEGATIVE_SLOPE: f64 = 0.2;

/// Multi-head graph attention with concatenated heads.
///
/// Per head `k`: `z = H W_k`, `e_ij = LeakyReLU(a_src·z_i + a_dst·z_j)` over
/// `j ∈ N(i) ∪ {i}`, `α_ij = softmax_j(e_ij)`, `h'_i = Σ_j α_ij z_j`. The
/// split `a = [a_src ‖ a_dst]` is the usual decomposition of `aᵀ[z_i ‖ z_j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GatLayer<T> {
    pub heads: usize,
    /// `in x (heads * head_dim)`; head `k` owns columns `k*head_dim..`.
    pub weight: DenseMatrix<T>,
    pub att_src: Vec<T>,
    pub att_dst: Vec<T>,
    pub bias: Vec<T>,
}

#[derive(Debug, Clone)]
pub struct GatCache<T> {
    input: DenseMatrix<T>,
    projected: DenseMatrix<T>,
    /// Per head, attention aligned with the adjacency's weighted rows.
    alpha: Vec<Vec<T>>,
    /// Per head, pre-LeakyReLU scores.
    scores: Vec<Vec<T>>,
}

impl<T: Scalar> GatCache<T> {
    pub fn attention(&self) -> &[Vec<T>] {
        &self.alpha
    }
}

impl<T: Scalar> GatLayer<T> {
    pub fn new<R: Rng>(rng: &mut R, in_dim: usize, out_dim: usize, heads: usize) -> Result<Self> {
        if heads == 0 || !out_dim.is_multiple_of(heads) {
            return Err(Error::DimMismatch(format!("{out_dim} outputs cannot split over {heads} heads")));
        }
        let head_dim = out_dim / heads;
        let weight = glorot(rng, in_dim, out_dim);
        let att_src = glorot(rng, heads, head_dim).into_data();
        let att_dst = glorot(rng, heads, head_dim).into_data();
        Ok(GatLayer { heads, weight, att_src, att_dst, bias: vec![T::zero(); out_dim] })
    }

    pub fn head_dim(&self) -> usize {
        self.weight.cols() / self.heads
    }

    pub fn forward(&self, adj: &NormalizedAdjacency<T>, x: &DenseMatrix<T>) -> Result<(DenseMatrix<T>, GatCache<T>)> {
        if x.rows() != adj.vertex_count() {
            return Err(Error::DimMismatch(format!("{} rows for {} vertices", x.rows(), adj.vertex_count())));
        }
        if x.cols() != self.weight.rows() {
            return Err(Error::DimMismatch(format!("gat expects {} inputs, got {}", self.weight.rows(), x.cols())));
        }
        let n = x.rows();
        let f = self.head_dim();
        let slope = T::from_f64_lossy(GAT_NEGATIVE_SLOPE);
        let projected = x.matmul(&self.weight)?;
        let mut out = DenseMatrix::zeros(n, self.weight.cols());
        let mut alpha = Vec::with_capacity(self.heads);
        let mut scores = Vec::with_capacity(self.heads);
        for k in 0..self.heads {
            let cols = k * f..(k + 1) * f;
            let a_src = &self.att_src[cols.clone()];
            let a_dst = &self.att_dst[cols.clone()];
            let src: Vec<T> = (0..n).map(|i| dot(&projected.row(i)[cols.clone()], a_src)).collect();
            let dst: Vec<T> = (0..n).map(|i| dot(&projected.row(i)[cols.clone()], a_dst)).collect();
            let mut head_alpha = vec![T::zero(); adj.weighted_nnz()];
            let mut head_scores = vec![T::zero(); adj.weighted_nnz()];
            for i in 0..n {
                let range = adj.row_range(i);
                let (targets, _) = adj.weighted_row(i);
                let mut max = T::neg_infinity();
                for (e, &j) in range.clone().zip(targets) {
                    let s = src[i] + dst[j];
                    head_scores[e] = s;
                    let activated = if s > T::zero() { s } else { slope * s };
                    head_alpha[e] = activated;
                    max = max.max(activated);
                }
                let mut total = T::zero();
                for e in range.clone() {
                    let w = (head_alpha[e] - max).exp();
                    head_alpha[e] = w;
                    total += w;
                }
                let out_row = &mut out.row_mut(i)[cols.clone()];
                for (e, &j) in range.zip(targets) {
                    head_alpha[e] /= total;
                    axpy(head_alpha[e], &projected.row(j)[cols.clone()], out_row);
                }
            }
            alpha.push(head_alpha);
            scores.push(head_scores);
        }
        out.add_row_vector(&self.bias);
        Ok((out, GatCache { input: x.clone(), projected, alpha, scores }))
    }

    pub fn backward(
        &self,
        adj: &NormalizedAdjacency<T>,
        cache: &GatCache<T>,
        grad: &DenseMatrix<T>,
    ) -> Result<(Gradients<T>, DenseMatrix<T>)> {
        let n = grad.rows();
        let f = self.head_dim();
        let slope = T::from_f64_lossy(GAT_NEGATIVE_SLOPE);
        let z = &cache.projected;
        let mut dz = DenseMatrix::zeros(n, self.weight.cols());
        let mut d_att_src = vec![T::zero(); self.att_src.len()];
        let mut d_att_dst = vec![T::zero(); self.att_dst.len()];
        let mut d_alpha = Vec::new();
        for k in 0..self.heads {
            let cols = k * f..(k + 1) * f;
            let alpha = &cache.alpha[k];
            let scores = &cache.scores[k];
            let mut d_src = vec![T::zero(); n];
            let mut d_dst = vec![T::zero(); n];
            for i in 0..n {
                let range = adj.row_range(i);
                let (targets, _) = adj.weighted_row(i);
                let g_i = &grad.row(i)[cols.clone()];
                d_alpha.clear();
                d_alpha.extend(targets.iter().map(|&j| dot(g_i, &z.row(j)[cols.clone()])));
                let weighted: T = range.clone().zip(&d_alpha).fold(T::zero(), |s, (e, &da)| s + alpha[e] * da);
                for ((e, &j), &da) in range.zip(targets).zip(&d_alpha) {
                    let de = alpha[e] * (da - weighted);
                    let d_score = if scores[e] > T::zero() { de } else { de * slope };
                    d_src[i] += d_score;
                    d_dst[j] += d_score;
                    axpy(alpha[e], g_i, &mut dz.row_mut(j)[cols.clone()]);
                }
            }
            let a_src = &self.att_src[cols.clone()];
            let a_dst = &self.att_dst[cols.clone()];
            for i in 0..n {
                let z_i = &z.row(i)[cols.clone()];
                axpy(d_src[i], z_i, &mut d_att_src[cols.clone()]);
                axpy(d_dst[i], z_i, &mut d_att_dst[cols.clone()]);
                let dz_i = &mut dz.row_mut(i)[cols.clone()];
                axpy(d_src[i], a_src, dz_i);
                axpy(d_dst[i], a_dst, dz_i);
            }
        }
        let dw = cache.input.t_matmul(&dz)?;
        let dx = dz.matmul_t(&self.weight)?;
        let db = grad.column_sums();
        Ok((vec![dw.into_data(), d_att_src, d_att_dst, db], dx))
    }
}

impl<T: Scalar> Parameterized<T> for GatLayer<T> {
    fn param_names(&self) -> Vec<String> {
        vec!["weight".into(), "att_src".into(), "att_dst".into(), "bias".into()]
    }
    fn params(&self) -> Vec<&[T]> {
        vec![self.weight.data(), &self.att_src, &self.att_dst, &self.bias]
    }
    fn params_mut(&mut self) -> Vec<&mut [T]> {
        vec![self.weight.data_mut(), &mut self.att_src, &mut self.att_dst, &mut self.bias]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn equal_scores_split_evenly() {
        let layer: GatLayer<f64> = GatLayer::new(&mut rand_chacha::ChaCha8Rng::seed_from_u64(5), 2, 4, 2).unwrap();
        // star centre 0 with two twins; every vertex has identical features
        let adj = NormalizedAdjacency::from_undirected_edges(3, &[(0, 1), (0, 2)]);
        let h = DenseMatrix::new(3, 2, vec![0.3, 0.9, 0.3, 0.9, 0.3, 0.9]).unwrap();
        let (_, cache) = layer.forward(&adj, &h).unwrap();
        for head in cache.attention() {
            for e in adj.row_range(0) {
                assert!((head[e] - 1.0 / 3.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn isolated_vertex_attends_to_itself() {
        let layer: GatLayer<f64> = GatLayer::new(&mut rand_chacha::ChaCha8Rng::seed_from_u64(6), 3, 4, 4).unwrap();
        let adj = NormalizedAdjacency::from_undirected_edges(1, &[]);
        let h = DenseMatrix::new(1, 3, vec![1.0, -2.0, 0.5]).unwrap();
        let (y, cache) = layer.forward(&adj, &h).unwrap();
        assert!(cache.attention().iter().all(|a| a == &vec![1.0]));
        assert_eq!(y, h.matmul(&layer.weight).unwrap());
    }

    #[test]
    fn rejects_bad_head_split() {
        assert!(GatLayer::<f64>::new(&mut rand_chacha::ChaCha8Rng::seed_from_u64(0), 3, 5, 2).is_err());
    }
}
