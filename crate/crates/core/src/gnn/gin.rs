use rand::Rng;

use super::linear::{Linear, PRelu};
use super::matrix::axpy;
use super::{DenseMatrix, Gradients, NormalizedAdjacency, Parameterized};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Graph isomorphism layer: `H'_i = MLP((1 + ε) H_i + Σ_{j ∈ N(i)} H_j)`
/// with a two-layer perceptron `Linear → PReLU → Linear` and learned `ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct GinLayer<T> {
    pub eps: Vec<T>,
    pub lin1: Linear<T>,
    pub act: PRelu<T>,
    pub lin2: Linear<T>,
}

#[derive(Debug, Clone)]
pub struct GinCache<T> {
    input: DenseMatrix<T>,
    summed: DenseMatrix<T>,
    hidden_pre: DenseMatrix<T>,
    hidden: DenseMatrix<T>,
}

impl<T: Scalar> GinLayer<T> {
    pub fn new<R: Rng>(rng: &mut R, in_dim: usize, out_dim: usize) -> Self {
        GinLayer {
            eps: vec![T::zero()],
            lin1: Linear::new(rng, in_dim, out_dim),
            act: PRelu::default(),
            lin2: Linear::new(rng, out_dim, out_dim),
        }
    }

    /// `(1 + ε) H_i + Σ_j H_j`, the input of the perceptron.
    pub fn aggregate(&self, adj: &NormalizedAdjacency<T>, x: &DenseMatrix<T>) -> DenseMatrix<T> {
        let scale = T::one() + self.eps[0];
        let mut out = x.map(|v| v * scale);
        for i in 0..x.rows() {
            for &j in adj.neighbors(i) {
                axpy(T::one(), x.row(j), out.row_mut(i));
            }
        }
        out
    }

    pub fn forward(&self, adj: &NormalizedAdjacency<T>, x: &DenseMatrix<T>) -> Result<(DenseMatrix<T>, GinCache<T>)> {
        if x.rows() != adj.vertex_count() {
            return Err(Error::DimMismatch(format!("{} rows for {} vertices", x.rows(), adj.vertex_count())));
        }
        let summed = self.aggregate(adj, x);
        let hidden_pre = self.lin1.forward(&summed)?;
        let hidden = self.act.forward(&hidden_pre);
        let y = self.lin2.forward(&hidden)?;
        Ok((y, GinCache { input: x.clone(), summed, hidden_pre, hidden }))
    }

    pub fn backward(
        &self,
        adj: &NormalizedAdjacency<T>,
        cache: &GinCache<T>,
        grad: &DenseMatrix<T>,
    ) -> Result<(Gradients<T>, DenseMatrix<T>)> {
        let (g2, d_hidden) = self.lin2.backward(&cache.hidden, grad)?;
        let (ga, d_pre) = self.act.backward(&cache.hidden_pre, &d_hidden);
        let (g1, d_sum) = self.lin1.backward(&cache.summed, &d_pre)?;
        let d_eps = super::matrix::dot(d_sum.data(), cache.input.data());
        let scale = T::one() + self.eps[0];
        let mut dx = d_sum.map(|v| v * scale);
        for i in 0..d_sum.rows() {
            for &j in adj.neighbors(i) {
                axpy(T::one(), d_sum.row(i), dx.row_mut(j));
            }
        }
        let mut grads = vec![vec![d_eps]];
        grads.extend(g1);
        grads.extend(ga);
        grads.extend(g2);
        Ok((grads, dx))
    }
}

impl<T: Scalar> Parameterized<T> for GinLayer<T> {
    fn param_names(&self) -> Vec<String> {
        let mut names = vec!["eps".to_owned()];
        names.extend(self.lin1.param_names().into_iter().map(|n| format!("mlp1.{n}")));
        names.extend(self.act.param_names().into_iter().map(|n| format!("mlp_act.{n}")));
        names.extend(self.lin2.param_names().into_iter().map(|n| format!("mlp2.{n}")));
        names
    }
    fn params(&self) -> Vec<&[T]> {
        let mut p: Vec<&[T]> = vec![&self.eps];
        p.extend(self.lin1.params());
        p.extend(self.act.params());
        p.extend(self.lin2.params());
        p
    }
    fn params_mut(&mut self) -> Vec<&mut [T]> {
        let mut p: Vec<&mut [T]> = vec![&mut self.eps];
        p.extend(self.lin1.params_mut());
        p.extend(self.act.params_mut());
        p.extend(self.lin2.params_mut());
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn isolated_vertex_is_plain_mlp() {
        let layer: GinLayer<f64> = GinLayer::new(&mut rand_chacha::ChaCha8Rng::seed_from_u64(2), 3, 4);
        let adj = NormalizedAdjacency::from_undirected_edges(1, &[]);
        let h = DenseMatrix::new(1, 3, vec![0.5, -1.5, 0.25]).unwrap();
        let y = layer.forward(&adj, &h).unwrap().0;
        let direct = layer.lin2.forward(&layer.act.forward(&layer.lin1.forward(&h).unwrap())).unwrap();
        assert_eq!(y, direct);
    }

    #[test]
    fn twin_neighbor_doubles_input() {
        let layer: GinLayer<f64> = GinLayer::new(&mut rand_chacha::ChaCha8Rng::seed_from_u64(2), 2, 2);
        let adj = NormalizedAdjacency::from_undirected_edges(2, &[(0, 1)]);
        let h = DenseMatrix::new(2, 2, vec![0.5, -1.5, 0.5, -1.5]).unwrap();
        let summed = layer.aggregate(&adj, &h);
        assert_eq!(summed.row(0), &[1.0, -3.0]);
    }
}
