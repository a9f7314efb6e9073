use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::gat::{GatCache, GatLayer};
use super::gcn::{GcnCache, GcnLayer};
use super::gin::{GinCache, GinLayer};
use super::linear::{Linear, PRelu};
use super::{DenseMatrix, Gradients, NormalizedAdjacency, Parameterized};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConvKind {
    Gcn,
    Gin,
    Gat,
}

impl ConvKind {
    pub const ALL: [ConvKind; 3] = [ConvKind::Gcn, ConvKind::Gin, ConvKind::Gat];

    pub fn as_str(self) -> &'static str {
        match self {
            ConvKind::Gcn => "gcn",
            ConvKind::Gin => "gin",
            ConvKind::Gat => "gat",
        }
    }
}

impl std::str::FromStr for ConvKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gcn" => Ok(ConvKind::Gcn),
            "gin" => Ok(ConvKind::Gin),
            "gat" => Ok(ConvKind::Gat),
            other => Err(Error::InvalidConfig(format!("unknown model {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub kind: ConvKind,
    pub in_dim: usize,
    pub hidden: usize,
    pub out_dim: usize,
    pub heads: usize,
    pub seed: u64,
}

impl ModelConfig {
    pub fn new(kind: ConvKind, in_dim: usize, out_dim: usize) -> Self {
        ModelConfig { kind, in_dim, hidden: 64, out_dim, heads: 4, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Conv<T> {
    Gcn(GcnLayer<T>),
    Gin(GinLayer<T>),
    Gat(GatLayer<T>),
}

#[derive(Debug, Clone)]
enum ConvCache<T> {
    Gcn(GcnCache<T>),
    Gin(GinCache<T>),
    Gat(GatCache<T>),
}

impl<T: Scalar> Conv<T> {
    fn new(rng: &mut ChaCha8Rng, config: &ModelConfig) -> Result<Self> {
        let h = config.hidden;
        Ok(match config.kind {
            ConvKind::Gcn => Conv::Gcn(GcnLayer::new(rng, h, h)),
            ConvKind::Gin => Conv::Gin(GinLayer::new(rng, h, h)),
            ConvKind::Gat => Conv::Gat(GatLayer::new(rng, h, h, config.heads)?),
        })
    }

    fn forward(&self, adj: &NormalizedAdjacency<T>, x: &DenseMatrix<T>) -> Result<(DenseMatrix<T>, ConvCache<T>)> {
        Ok(match self {
            Conv::Gcn(l) => {
                let (y, c) = l.forward(adj, x)?;
                (y, ConvCache::Gcn(c))
            }
            Conv::Gin(l) => {
                let (y, c) = l.forward(adj, x)?;
                (y, ConvCache::Gin(c))
            }
            Conv::Gat(l) => {
                let (y, c) = l.forward(adj, x)?;
                (y, ConvCache::Gat(c))
            }
        })
    }

    fn backward(
        &self,
        adj: &NormalizedAdjacency<T>,
        cache: &ConvCache<T>,
        grad: &DenseMatrix<T>,
    ) -> Result<(Gradients<T>, DenseMatrix<T>)> {
        match (self, cache) {
            (Conv::Gcn(l), ConvCache::Gcn(c)) => l.backward(adj, c, grad),
            (Conv::Gin(l), ConvCache::Gin(c)) => l.backward(adj, c, grad),
            (Conv::Gat(l), ConvCache::Gat(c)) => l.backward(adj, c, grad),
            _ => Err(Error::NoForwardCache),
        }
    }

    fn as_params(&self) -> &dyn Parameterized<T> {
        match self {
            Conv::Gcn(l) => l,
            Conv::Gin(l) => l,
            Conv::Gat(l) => l,
        }
    }

    fn as_params_mut(&mut self) -> &mut dyn Parameterized<T> {
        match self {
            Conv::Gcn(l) => l,
            Conv::Gin(l) => l,
            Conv::Gat(l) => l,
        }
    }
}

#[derive(Debug, Clone)]
struct ModelCache<T> {
    input: DenseMatrix<T>,
    pre_out: DenseMatrix<T>,
    conv_in: [DenseMatrix<T>; 2],
    conv_cache: [ConvCache<T>; 2],
    conv_out: [DenseMatrix<T>; 2],
    post_in: DenseMatrix<T>,
}

/// Pre-MLP → two GNN layers → post-MLP, PReLU after every hidden stage.
#[derive(Debug, Clone)]
pub struct GnnModel<T> {
    pub config: ModelConfig,
    pub pre: Linear<T>,
    pub pre_act: PRelu<T>,
    pub convs: [Conv<T>; 2],
    pub conv_acts: [PRelu<T>; 2],
    pub post: Linear<T>,
    cache: Option<ModelCache<T>>,
}

impl<T: Scalar> GnnModel<T> {
    /// Seeded Glorot initialization.
    pub fn new(config: ModelConfig) -> Result<Self> {
        if config.hidden == 0 || config.out_dim == 0 {
            return Err(Error::InvalidConfig("hidden and output widths must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let pre = Linear::new(&mut rng, config.in_dim, config.hidden);
        let convs = [Conv::new(&mut rng, &config)?, Conv::new(&mut rng, &config)?];
        let post = Linear::new(&mut rng, config.hidden, config.out_dim);
        Ok(GnnModel {
            config,
            pre,
            pre_act: PRelu::default(),
            convs,
            conv_acts: [PRelu::default(), PRelu::default()],
            post,
            cache: None,
        })
    }

    fn run(&self, adj: &NormalizedAdjacency<T>, x: &DenseMatrix<T>) -> Result<(DenseMatrix<T>, ModelCache<T>)> {
        if x.cols() != self.config.in_dim {
            return Err(Error::DimMismatch(format!("model expects {} features, got {}", self.config.in_dim, x.cols())));
        }
        let pre_out = self.pre.forward(x)?;
        let h0 = self.pre_act.forward(&pre_out);
        let (c0, cache0) = self.convs[0].forward(adj, &h0)?;
        let h1 = self.conv_acts[0].forward(&c0);
        let (c1, cache1) = self.convs[1].forward(adj, &h1)?;
        let h2 = self.conv_acts[1].forward(&c1);
        let y = self.post.forward(&h2)?;
        Ok((
            y,
            ModelCache {
                input: x.clone(),
                pre_out,
                conv_in: [h0, h1],
                conv_cache: [cache0, cache1],
                conv_out: [c0, c1],
                post_in: h2,
            },
        ))
    }

    /// Forward pass that caches activations for [`GnnModel::backward`].
    pub fn forward(&mut self, adj: &NormalizedAdjacency<T>, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        let (y, cache) = self.run(adj, x)?;
        self.cache = Some(cache);
        Ok(y)
    }

    /// Inference without caching.
    pub fn predict(&self, adj: &NormalizedAdjacency<T>, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        Ok(self.run(adj, x)?.0)
    }

    /// Consumes the cached forward pass; returns parameter gradients aligned
    /// with [`Parameterized::params`] and the gradient w.r.t. the input.
    pub fn backward(
        &mut self,
        adj: &NormalizedAdjacency<T>,
        grad: &DenseMatrix<T>,
    ) -> Result<(Gradients<T>, DenseMatrix<T>)> {
        let (grads, dx) = self.backprop(adj, grad, true)?;
        Ok((grads, dx.expect("input gradient requested")))
    }

    /// Like [`GnnModel::backward`] but skips the input gradient.
    pub fn backward_params(&mut self, adj: &NormalizedAdjacency<T>, grad: &DenseMatrix<T>) -> Result<Gradients<T>> {
        Ok(self.backprop(adj, grad, false)?.0)
    }

    fn backprop(
        &mut self,
        adj: &NormalizedAdjacency<T>,
        grad: &DenseMatrix<T>,
        with_input: bool,
    ) -> Result<(Gradients<T>, Option<DenseMatrix<T>>)> {
        let cache = self.cache.take().ok_or(Error::NoForwardCache)?;
        let (g_post, d_h2) = self.post.backward(&cache.post_in, grad)?;
        let (g_act1, d_c1) = self.conv_acts[1].backward(&cache.conv_out[1], &d_h2);
        let (g_conv1, d_h1) = self.convs[1].backward(adj, &cache.conv_cache[1], &d_c1)?;
        let (g_act0, d_c0) = self.conv_acts[0].backward(&cache.conv_out[0], &d_h1);
        let (g_conv0, d_h0) = self.convs[0].backward(adj, &cache.conv_cache[0], &d_c0)?;
        debug_assert_eq!(d_h0.shape(), cache.conv_in[0].shape());
        let (g_pre_act, d_pre) = self.pre_act.backward(&cache.pre_out, &d_h0);
        let (g_pre, dx) = if with_input {
            let (g, dx) = self.pre.backward(&cache.input, &d_pre)?;
            (g, Some(dx))
        } else {
            (self.pre.param_grads(&cache.input, &d_pre)?, None)
        };
        let mut grads = g_pre;
        grads.extend(g_pre_act);
        grads.extend(g_conv0);
        grads.extend(g_act0);
        grads.extend(g_conv1);
        grads.extend(g_act1);
        grads.extend(g_post);
        Ok((grads, dx))
    }

    pub fn has_cache(&self) -> bool {
        self.cache.is_some()
    }

    pub fn snapshot(&self) -> Vec<Vec<T>> {
        self.params().into_iter().map(<[T]>::to_vec).collect()
    }

    pub fn restore(&mut self, values: &[Vec<T>]) -> Result<()> {
        let mut params = self.params_mut();
        if params.len() != values.len() || params.iter().zip(values).any(|(p, v)| p.len() != v.len()) {
            return Err(Error::ShapeMismatch("parameter snapshot does not match model".into()));
        }
        for (p, v) in params.iter_mut().zip(values) {
            p.copy_from_slice(v);
        }
        Ok(())
    }
}

impl<T: Scalar> Parameterized<T> for GnnModel<T> {
    fn param_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        let mut push = |prefix: &str, inner: Vec<String>| names.extend(inner.into_iter().map(|n| format!("{prefix}.{n}")));
        push("pre", self.pre.param_names());
        push("pre_act", self.pre_act.param_names());
        push("conv0", self.convs[0].as_params().param_names());
        push("conv0_act", self.conv_acts[0].param_names());
        push("conv1", self.convs[1].as_params().param_names());
        push("conv1_act", self.conv_acts[1].param_names());
        push("post", self.post.param_names());
        names
    }

    fn params(&self) -> Vec<&[T]> {
        let mut p = self.pre.params();
        p.extend(self.pre_act.params());
        p.extend(self.convs[0].as_params().params());
        p.extend(self.conv_acts[0].params());
        p.extend(self.convs[1].as_params().params());
        p.extend(self.conv_acts[1].params());
        p.extend(self.post.params());
        p
    }

    fn params_mut(&mut self) -> Vec<&mut [T]> {
        let [conv0, conv1] = &mut self.convs;
        let [act0, act1] = &mut self.conv_acts;
        let mut p = self.pre.params_mut();
        p.extend(self.pre_act.params_mut());
        p.extend(conv0.as_params_mut().params_mut());
        p.extend(act0.params_mut());
        p.extend(conv1.as_params_mut().params_mut());
        p.extend(act1.params_mut());
        p.extend(self.post.params_mut());
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backward_without_forward() {
        let mut m: GnnModel<f64> = GnnModel::new(ModelConfig::new(ConvKind::Gcn, 3, 2)).unwrap();
        let adj = NormalizedAdjacency::from_undirected_edges(2, &[(0, 1)]);
        assert!(matches!(m.backward(&adj, &DenseMatrix::zeros(2, 2)), Err(Error::NoForwardCache)));
    }

    #[test]
    fn zero_upstream_zero_gradients() {
        for kind in ConvKind::ALL {
            let mut m: GnnModel<f64> = GnnModel::new(ModelConfig { hidden: 8, heads: 2, ..ModelConfig::new(kind, 3, 2) }).unwrap();
            let adj = NormalizedAdjacency::from_undirected_edges(3, &[(0, 1), (1, 2)]);
            let x = DenseMatrix::from_fn(3, 3, |r, c| (r as f64 - c as f64) * 0.3);
            m.forward(&adj, &x).unwrap();
            let (grads, dx) = m.backward(&adj, &DenseMatrix::zeros(3, 2)).unwrap();
            assert_eq!(grads.len(), m.params().len());
            for (g, p) in grads.iter().zip(m.params()) {
                assert_eq!(g.len(), p.len());
                assert!(g.iter().all(|&v| v == 0.0));
            }
            assert!(dx.data().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn names_align_with_params() {
        for kind in ConvKind::ALL {
            let m: GnnModel<f32> = GnnModel::new(ModelConfig::new(kind, 5, 3)).unwrap();
            assert_eq!(m.param_names().len(), m.params().len());
        }
    }

    #[test]
    fn seeded_init_is_reproducible() {
        let a: GnnModel<f64> = GnnModel::new(ModelConfig::new(ConvKind::Gat, 4, 2)).unwrap();
        let b: GnnModel<f64> = GnnModel::new(ModelConfig::new(ConvKind::Gat, 4, 2)).unwrap();
        assert_eq!(a.snapshot(), b.snapshot());
    }
}
