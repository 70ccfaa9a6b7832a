use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Fully connected network with tanh hidden layers and a linear output.
///
/// All weights live in one flat vector; layer `l` stores its weight matrix
/// (row-major, `out x in`) followed by its bias.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

/// Per-layer activations saved by [`Mlp::forward`] for the backward pass.
#[derive(Debug, Clone, Default)]
pub struct MlpCache {
    acts: Vec<Vec<f64>>,
    delta: Vec<f64>,
    next_delta: Vec<f64>,
}

impl Mlp {
    /// `sizes` lists input width, hidden widths and output width. Hidden
    /// layers use N(0, 1/fan_in) weights scaled by `sqrt(2)`; the output
    /// layer is scaled by `output_gain`. Biases start at zero.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], output_gain: f64, rng: &mut R) -> Self {
        assert!(
            sizes.len() >= 2,
            "an MLP needs at least input and output widths"
        );
        let n_params = Self::param_count(sizes);
        let mut params = Vec::with_capacity(n_params);
        let n_layers = sizes.len() - 1;
        for l in 0..n_layers {
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            let gain = if l + 1 == n_layers {
                output_gain
            } else {
                std::f64::consts::SQRT_2
            };
            let scale = gain / (fan_in as f64).sqrt();
            for _ in 0..fan_in * fan_out {
                let z: f64 = StandardNormal.sample(rng);
                params.push(scale * z);
            }
            params.extend(std::iter::repeat_n(0.0, fan_out));
        }
        Self {
            sizes: sizes.to_vec(),
            params,
        }
    }

    pub fn from_parts(sizes: Vec<usize>, params: Vec<f64>) -> Option<Self> {
        (sizes.len() >= 2 && params.len() == Self::param_count(&sizes))
            .then_some(Self { sizes, params })
    }

    pub fn param_count(sizes: &[usize]) -> usize {
        sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("non-empty sizes")
    }

    /// Forward pass; the returned slice is the network output.
    pub fn forward<'c>(&self, x: &[f64], cache: &'c mut MlpCache) -> &'c [f64] {
        debug_assert_eq!(x.len(), self.input_dim());
        let n_layers = self.sizes.len() - 1;
        cache.acts.resize_with(n_layers + 1, Vec::new);
        cache.acts[0].clear();
        cache.acts[0].extend_from_slice(x);
        let mut offset = 0;
        for l in 0..n_layers {
            let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
            let (w, rest) = self.params[offset..].split_at(fan_in * fan_out);
            let b = &rest[..fan_out];
            offset += fan_in * fan_out + fan_out;
            let (head, tail) = cache.acts.split_at_mut(l + 1);
            let input = &head[l];
            let out = &mut tail[0];
            out.clear();
            let last = l + 1 == n_layers;
            for (row, bias) in w.chunks_exact(fan_in).zip(b) {
                let z = bias + row.iter().zip(input).map(|(a, b)| a * b).sum::<f64>();
                out.push(if last { z } else { z.tanh() });
            }
        }
        &cache.acts[n_layers]
    }

    /// Accumulates d(loss)/d(params) into `grads` given d(loss)/d(output)
    /// for the sample whose activations are in `cache`.
    pub fn backward(&self, cache: &mut MlpCache, grad_out: &[f64], grads: &mut [f64]) {
        debug_assert_eq!(grads.len(), self.params.len());
        let n_layers = self.sizes.len() - 1;
        cache.delta.clear();
        cache.delta.extend_from_slice(grad_out);
        let mut offset = self.params.len();
        for l in (0..n_layers).rev() {
            let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
            offset -= fan_in * fan_out + fan_out;
            let w = &self.params[offset..offset + fan_in * fan_out];
            let (gw, gb) =
                grads[offset..offset + fan_in * fan_out + fan_out].split_at_mut(fan_in * fan_out);
            let input = &cache.acts[l];
            for ((grow, gbias), d) in gw
                .chunks_exact_mut(fan_in)
                .zip(gb.iter_mut())
                .zip(&cache.delta)
            {
                *gbias += d;
                for (g, a) in grow.iter_mut().zip(input) {
                    *g += d * a;
                }
            }
            if l == 0 {
                break;
            }
            // Propagate through W^T and the tanh of the previous layer.
            cache.next_delta.clear();
            cache.next_delta.resize(fan_in, 0.0);
            for (row, d) in w.chunks_exact(fan_in).zip(&cache.delta) {
                for (nd, wv) in cache.next_delta.iter_mut().zip(row) {
                    *nd += d * wv;
                }
            }
            for (nd, a) in cache.next_delta.iter_mut().zip(input) {
                *nd *= 1.0 - a * a;
            }
            std::mem::swap(&mut cache.delta, &mut cache.next_delta);
        }
    }

    pub fn predict(&self, x: &[f64]) -> Vec<f64> {
        let mut cache = MlpCache::default();
        self.forward(x, &mut cache).to_vec()
    }
}
