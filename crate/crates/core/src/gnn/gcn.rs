use rand::Rng;

use super::linear::Linear;
use super::matrix::axpy;
use super::{DenseMatrix, Gradients, NormalizedAdjacency, Parameterized};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Graph convolution `H' = Â H W + b`, with `Â` the self-looped,
/// symmetric-normalized adjacency.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnLayer<T> {
    pub linear: Linear<T>,
}

#[derive(Debug, Clone)]
pub struct GcnCache<T> {
    aggregated: DenseMatrix<T>,
}

/// `Â X`.
pub(crate) fn propagate<T: Scalar>(adj: &NormalizedAdjacency<T>, x: &DenseMatrix<T>) -> DenseMatrix<T> {
    let mut out = DenseMatrix::zeros(x.rows(), x.cols());
    for i in 0..x.rows() {
        let (cols, weights) = adj.weighted_row(i);
        let row = out.row_mut(i);
        for (&j, &w) in cols.iter().zip(weights) {
            axpy(w, x.row(j), row);
        }
    }
    out
}

/// `Âᵀ G`.
pub(crate) fn propagate_transpose<T: Scalar>(adj: &NormalizedAdjacency<T>, g: &DenseMatrix<T>) -> DenseMatrix<T> {
    let mut out = DenseMatrix::zeros(g.rows(), g.cols());
    for i in 0..g.rows() {
        let (cols, weights) = adj.weighted_row(i);
        for (&j, &w) in cols.iter().zip(weights) {
            axpy(w, g.row(i), out.row_mut(j));
        }
    }
    out
}

impl<T: Scalar> GcnLayer<T> {
    pub fn new<R: Rng>(rng: &mut R, in_dim: usize, out_dim: usize) -> Self {
        GcnLayer { linear: Linear::new(rng, in_dim, out_dim) }
    }

    pub fn forward(&self, adj: &NormalizedAdjacency<T>, x: &DenseMatrix<T>) -> Result<(DenseMatrix<T>, GcnCache<T>)> {
        if x.rows() != adj.vertex_count() {
            return Err(Error::DimMismatch(format!("{} rows for {} vertices", x.rows(), adj.vertex_count())));
        }
        let aggregated = propagate(adj, x);
        let y = self.linear.forward(&aggregated)?;
        Ok((y, GcnCache { aggregated }))
    }

    pub fn backward(
        &self,
        adj: &NormalizedAdjacency<T>,
        cache: &GcnCache<T>,
        grad: &DenseMatrix<T>,
    ) -> Result<(Gradients<T>, DenseMatrix<T>)> {
        let (grads, d_agg) = self.linear.backward(&cache.aggregated, grad)?;
        Ok((grads, propagate_transpose(adj, &d_agg)))
    }
}

impl<T: Scalar> Parameterized<T> for GcnLayer<T> {
    fn param_names(&self) -> Vec<String> {
        self.linear.param_names()
    }
    fn params(&self) -> Vec<&[T]> {
        self.linear.params()
    }
    fn params_mut(&mut self) -> Vec<&mut [T]> {
        self.linear.params_mut()
    }
}
