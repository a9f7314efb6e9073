use rand::Rng;

use super::{DenseMatrix, Gradients, Parameterized};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_PRELU_SLOPE: f64 = 0.25;

/// Affine map `y = x W + b` with `W` of shape `in x out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear<T> {
    pub weight: DenseMatrix<T>,
    pub bias: Vec<T>,
}

pub(crate) fn glorot<T: Scalar, R: Rng>(rng: &mut R, fan_in: usize, fan_out: usize) -> DenseMatrix<T> {
    let limit = (6.0 / (fan_in + fan_out).max(1) as f64).sqrt();
    DenseMatrix::from_fn(fan_in, fan_out, |_, _| T::from_f64_lossy(rng.gen_range(-limit..limit)))
}

impl<T: Scalar> Linear<T> {
    /// Glorot-uniform weights, zero bias.
    pub fn new<R: Rng>(rng: &mut R, in_dim: usize, out_dim: usize) -> Self {
        Linear { weight: glorot(rng, in_dim, out_dim), bias: vec![T::zero(); out_dim] }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn forward(&self, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        if x.cols() != self.in_dim() {
            return Err(Error::DimMismatch(format!("linear expects {} inputs, got {}", self.in_dim(), x.cols())));
        }
        let mut y = x.matmul(&self.weight)?;
        y.add_row_vector(&self.bias);
        Ok(y)
    }

    /// Returns `[dW, db]` and `dx`, given the forward input `x`.
    pub fn backward(&self, x: &DenseMatrix<T>, grad: &DenseMatrix<T>) -> Result<(Gradients<T>, DenseMatrix<T>)> {
        let dx = grad.matmul_t(&self.weight)?;
        Ok((self.param_grads(x, grad)?, dx))
    }

    /// `[dW, db]` only.
    pub fn param_grads(&self, x: &DenseMatrix<T>, grad: &DenseMatrix<T>) -> Result<Gradients<T>> {
        let dw = x.t_matmul(grad)?;
        Ok(vec![dw.into_data(), grad.column_sums()])
    }
}

impl<T: Scalar> Parameterized<T> for Linear<T> {
    fn param_names(&self) -> Vec<String> {
        vec!["weight".into(), "bias".into()]
    }
    fn params(&self) -> Vec<&[T]> {
        vec![self.weight.data(), &self.bias]
    }
    fn params_mut(&mut self) -> Vec<&mut [T]> {
        vec![self.weight.data_mut(), &mut self.bias]
    }
}

/// Parametric ReLU with one learned slope.
#[derive(Debug, Clone, PartialEq)]
pub struct PRelu<T> {
    pub slope: Vec<T>,
}

impl<T: Scalar> Default for PRelu<T> {
    fn default() -> Self {
        PRelu { slope: vec![T::from_f64_lossy(DEFAULT_PRELU_SLOPE)] }
    }
}

impl<T: Scalar> PRelu<T> {
    pub fn forward(&self, x: &DenseMatrix<T>) -> DenseMatrix<T> {
        let a = self.slope[0];
        x.map(|v| if v > T::zero() { v } else { a * v })
    }

    /// Returns `[da]` and `dx`, given the pre-activation `x`.
    pub fn backward(&self, x: &DenseMatrix<T>, grad: &DenseMatrix<T>) -> (Gradients<T>, DenseMatrix<T>) {
        let a = self.slope[0];
        let mut da = T::zero();
        let mut dx = grad.clone();
        for (d, &v) in dx.data_mut().iter_mut().zip(x.data()) {
            if v <= T::zero() {
                da += *d * v;
                *d *= a;
            }
        }
        (vec![vec![da]], dx)
    }
}

impl<T: Scalar> Parameterized<T> for PRelu<T> {
    fn param_names(&self) -> Vec<String> {
        vec!["slope".into()]
    }
    fn params(&self) -> Vec<&[T]> {
        vec![&self.slope]
    }
    fn params_mut(&mut self) -> Vec<&mut [T]> {
        vec![&mut self.slope]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn weight_gradient_is_xt_g() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let lin: Linear<f64> = Linear::new(&mut rng, 3, 2);
        let x = DenseMatrix::from_fn(4, 3, |r, c| (r * 3 + c) as f64 * 0.1 - 0.4);
        let g = DenseMatrix::from_fn(4, 2, |r, c| if (r + c) % 2 == 0 { 1.0 } else { -0.5 });
        let (grads, dx) = lin.backward(&x, &g).unwrap();
        // dW[p][q] = sum_i x[i][p] g[i][q]
        for p in 0..3 {
            for q in 0..2 {
                let expect: f64 = (0..4).map(|i| x.get(i, p) * g.get(i, q)).sum();
                assert!((grads[0][p * 2 + q] - expect).abs() < 1e-15);
            }
        }
        assert_eq!(dx.shape(), (4, 3));
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let lin: Linear<f64> = Linear::new(&mut rng, 3, 2);
        let x = DenseMatrix::from_fn(2, 3, |r, c| (r + c) as f64);
        let (grads, dx) = lin.backward(&x, &DenseMatrix::zeros(2, 2)).unwrap();
        assert!(grads.iter().flatten().all(|&g| g == 0.0));
        assert!(dx.data().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn prelu_slope() {
        let p: PRelu<f64> = PRelu::default();
        let x = DenseMatrix::new(1, 3, vec![-2.0, 0.0, 3.0]).unwrap();
        assert_eq!(p.forward(&x).data(), &[-0.5, 0.0, 3.0]);
        let (g, dx) = p.backward(&x, &DenseMatrix::new(1, 3, vec![1.0, 1.0, 1.0]).unwrap());
        assert_eq!(g[0][0], -2.0);
        assert_eq!(dx.data(), &[0.25, 0.25, 1.0]);
    }
}
