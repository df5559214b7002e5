//! Small complex-valued convolutional network for map-to-map regression and
//! detection-driven training.
//!
//! The architecture is a fixed chain: complex conv, CReLU, complex batch
//! norm after every layer except the last, which is a bare conv. Channels
//! default to 1 -> 4 -> 2 -> 1 over rank-3 maps. Kernels are either dense
//! 3-D or separable (one 1-D factor per axis); both keep spatial dims via
//! zero padding and stride 1, so the network maps a spectrum map to a
//! spectrum map of the same shape.
//!
//! Backward passes are hand-written reverse mode over this fixed graph. The
//! convention for complex gradients of real losses is `dL/dre + j dL/dim`
//! throughout; parameter gradients are accumulated in f64 and exposed as a
//! flat vector in a pinned order for the optimizer.

pub mod adam;
pub mod batchnorm;
pub mod conv;

pub use adam::{adam_step, AdamParams, AdamState};
pub use batchnorm::{
    bn_backward, bn_forward_eval, bn_forward_train, bn_update_running, BnBatchStats, BnCache,
    BnGrads, BnParams,
};
pub use conv::{
    conv_axis_accum, conv_generic_accum, conv_generic_backward, conv_separable_accum,
    conv_separable_backward, flip_conj, Kernel3,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{C64, Complex, ComplexTensor, Error, Result, Scalar};

/// Kernel storage layout of a layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelMode {
    /// Dense taps: `prod(K_d)` complex values per channel pair.
    Generic,
    /// One 1-D factor per axis: `sum(K_d)` complex values per channel pair.
    Separable,
}

/// Network shape: one kernel geometry shared by all layers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kernel_extent: [usize; 3],
    pub mode: KernelMode,
    /// Channel counts, input first. Every adjacent pair is one conv layer;
    /// all but the last layer are followed by CReLU and batch norm.
    pub channels: Vec<usize>,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            kernel_extent: [3, 3, 3],
            mode: KernelMode::Separable,
            channels: vec![1, 4, 2, 1],
        }
    }
}

impl ModelSpec {
    pub fn new(kernel_extent: [usize; 3], mode: KernelMode) -> Self {
        Self {
            kernel_extent,
            mode,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kernel_extent.iter().any(|&k| k == 0 || k % 2 == 0) {
            return Err(Error::invalid(
                "kernel_extent",
                format!("extents must be odd, got {:?}", self.kernel_extent),
            ));
        }
        if self.channels.len() < 2 || self.channels.iter().any(|&c| c == 0) {
            return Err(Error::invalid(
                "channels",
                format!("need at least one layer of nonzero channels, got {:?}", self.channels),
            ));
        }
        Ok(())
    }

    pub fn num_layers(&self) -> usize {
        self.channels.len() - 1
    }

    fn kernel_values_per_pair(&self) -> usize {
        match self.mode {
            KernelMode::Generic => self.kernel_extent.iter().product(),
            KernelMode::Separable => self.kernel_extent.iter().sum(),
        }
    }

    /// Total real trainable parameters: 2 per complex kernel value, 2 per
    /// complex bias, 5 per normalized channel (3 gamma + 2 shift).
    pub fn param_count(&self) -> usize {
        let mut total = 0;
        for l in 0..self.num_layers() {
            let pairs = self.channels[l] * self.channels[l + 1];
            total += pairs * self.kernel_values_per_pair() * 2;
            total += self.channels[l + 1] * 2;
            if l + 1 < self.num_layers() {
                total += self.channels[l + 1] * 5;
            }
        }
        total
    }
}

/// Kernels of one layer, `out * in` channel pairs, out-major.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelStore<T> {
    Generic(Vec<Kernel3<T>>),
    Separable(Vec<[Vec<Complex<T>>; 3]>),
}

/// One conv layer's trainables.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerWeights<T> {
    pub kernels: KernelStore<T>,
    pub bias: Vec<Complex<T>>,
}

/// The network: spec, weights, normalization state, and the forward cache
/// consumed by [`Model::backward`].
#[derive(Debug, Clone)]
pub struct Model<T: Scalar> {
    spec: ModelSpec,
    pub layers: Vec<LayerWeights<T>>,
    pub bns: Vec<BnParams<T>>,
    cache: Option<Cache<T>>,
}

/// Activations retained by a training-mode forward.
#[derive(Debug, Clone)]
struct Cache<T> {
    /// Input to conv layer `l`, `[layer][sample][channel]`.
    conv_in: Vec<Vec<Vec<ComplexTensor<T>>>>,
    /// CReLU output (= batch norm input) per normalized layer.
    relu_out: Vec<Vec<Vec<ComplexTensor<T>>>>,
    bn_caches: Vec<BnCache>,
}

/// Forward phase: training caches activations and uses batch statistics;
/// evaluation uses running statistics and caches nothing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Train,
    Eval,
}

/// Componentwise ReLU on real and imaginary parts.
pub fn crelu<T: Scalar>(input: &ComplexTensor<T>) -> ComplexTensor<T> {
    let mut out = input.clone();
    let (re, im) = out.planes_mut();
    for v in re.iter_mut() {
        if *v < T::zero() {
            *v = T::zero();
        }
    }
    for v in im.iter_mut() {
        if *v < T::zero() {
            *v = T::zero();
        }
    }
    out
}

/// Gradient through [`crelu`]: passes where the forward output is positive.
/// `fwd_out` is the CReLU output (positivity of the output and of the input
/// coincide).
pub fn crelu_backward<T: Scalar>(
    fwd_out: &ComplexTensor<T>,
    gout: &ComplexTensor<T>,
) -> ComplexTensor<T> {
    let mut g = gout.clone();
    let (gr, gi) = g.planes_mut();
    for (v, &r) in gr.iter_mut().zip(fwd_out.re()) {
        if r <= T::zero() {
            *v = T::zero();
        }
    }
    for (v, &i) in gi.iter_mut().zip(fwd_out.im()) {
        if i <= T::zero() {
            *v = T::zero();
        }
    }
    g
}

/// Parameter gradients in f64, mirroring the model structure.
#[derive(Debug, Clone)]
pub struct ModelGrads {
    pub layers: Vec<LayerGrads>,
    pub bns: Vec<BnGrads>,
}

#[derive(Debug, Clone)]
pub struct LayerGrads {
    pub kernels: KernelGradStore,
    pub bias: Vec<C64>,
}

#[derive(Debug, Clone)]
pub enum KernelGradStore {
    Generic(Vec<Vec<C64>>),
    Separable(Vec<[Vec<C64>; 3]>),
}

impl<T: Scalar> Model<T> {
    /// Random initialization: complex Glorot kernels (variance
    /// `2/(fan_in+fan_out)` split evenly between re and im; separable
    /// factors take the cube root so their product matches) plus a
    /// deterministic pass-through bias on each kernel's center tap, zero
    /// biases, identity-like batch norm.
    ///
    /// The bias makes an untrained network act approximately as an
    /// identity map: each output channel averages its inputs through the
    /// kernel center, so spectral peaks survive the stack instead of being
    /// smeared into the noise floor. The bias sign alternates across
    /// output channels; paired `+z`/`-z` copies keep both half-planes of
    /// every activation alive through CReLU. Off-center noise stays a
    /// fraction of the pass-through weight so depth does not blur peaks
    /// below the detection threshold before training starts.
    pub fn init(spec: ModelSpec, seed: u64) -> Result<Self> {
        const NOISE_SCALE: f64 = 0.25;
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut normal = |sd: f64| -> f64 {
            let g: f64 = StandardNormal.sample(&mut rng);
            g * sd
        };
        let mut layers = Vec::with_capacity(spec.num_layers());
        for l in 0..spec.num_layers() {
            let (cin, cout) = (spec.channels[l], spec.channels[l + 1]);
            let taps: usize = spec.kernel_extent.iter().product();
            let var = 2.0 / ((cin * taps + cout * taps) as f64);
            // Pair p maps input channel p % cin to output channel p / cin.
            let pair_sign = |p: usize| if (p / cin) % 2 == 0 { 1.0 } else { -1.0 };
            let kernels = match spec.mode {
                KernelMode::Generic => {
                    let sd = (var / 2.0).sqrt() * NOISE_SCALE;
                    let center = (taps - 1) / 2;
                    let boost = 1.0 / cin as f64;
                    KernelStore::Generic(
                        (0..cin * cout)
                            .map(|p| {
                                let mut taps: Vec<Complex<T>> = (0..taps)
                                    .map(|_| {
                                        Complex::new(
                                            T::from_f64_lossy(normal(sd)),
                                            T::from_f64_lossy(normal(sd)),
                                        )
                                    })
                                    .collect();
                                taps[center].re = taps[center].re
                                    + T::from_f64_lossy(pair_sign(p) * boost);
                                Kernel3 {
                                    extent: spec.kernel_extent,
                                    taps,
                                }
                            })
                            .collect(),
                    )
                }
                KernelMode::Separable => {
                    let factor_var = var.powf(1.0 / 3.0);
                    let sd = (factor_var / 2.0).sqrt() * NOISE_SCALE;
                    // Per-factor bias so the outer product's center tap
                    // carries the same +-1/cin pass-through weight.
                    let boost = (1.0 / cin as f64).powf(1.0 / 3.0);
                    KernelStore::Separable(
                        (0..cin * cout)
                            .map(|p| {
                                let mut f = |len: usize| {
                                    let mut v: Vec<Complex<T>> = (0..len)
                                        .map(|_| {
                                            Complex::new(
                                                T::from_f64_lossy(normal(sd)),
                                                T::from_f64_lossy(normal(sd)),
                                            )
                                        })
                                        .collect();
                                    v[len / 2].re = v[len / 2].re
                                        + T::from_f64_lossy(pair_sign(p) * boost);
                                    v
                                };
                                [
                                    f(spec.kernel_extent[0]),
                                    f(spec.kernel_extent[1]),
                                    f(spec.kernel_extent[2]),
                                ]
                            })
                            .collect(),
                    )
                }
            };
            layers.push(LayerWeights {
                kernels,
                bias: vec![Complex::new(T::zero(), T::zero()); cout],
            });
        }
        let bns = (0..spec.num_layers().saturating_sub(1))
            .map(|l| BnParams::identity_init(spec.channels[l + 1]))
            .collect();
        Ok(Self {
            spec,
            layers,
            bns,
            cache: None,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn param_count(&self) -> usize {
        self.spec.param_count()
    }

    fn conv_layer_forward(
        &self,
        l: usize,
        inputs: &[Vec<ComplexTensor<T>>],
    ) -> Result<Vec<Vec<ComplexTensor<T>>>> {
        let (cin, cout) = (self.spec.channels[l], self.spec.channels[l + 1]);
        let dims = inputs[0][0].dims();
        let mut t1 = ComplexTensor::zeros(dims);
        let mut t2 = ComplexTensor::zeros(dims);
        let mut out_batch = Vec::with_capacity(inputs.len());
        for sample in inputs {
            let mut outs = Vec::with_capacity(cout);
            for oc in 0..cout {
                let mut acc = ComplexTensor::zeros(dims);
                for (ic, x) in sample.iter().enumerate().take(cin) {
                    match &self.layers[l].kernels {
                        KernelStore::Generic(ks) => {
                            conv_generic_accum(x, &ks[oc * cin + ic], &mut acc)?
                        }
                        KernelStore::Separable(fs) => conv_separable_accum(
                            x,
                            &fs[oc * cin + ic],
                            &mut acc,
                            &mut t1,
                            &mut t2,
                        )?,
                    }
                }
                let b = self.layers[l].bias[oc];
                let (ar, ai) = acc.planes_mut();
                for v in ar.iter_mut() {
                    *v += b.re;
                }
                for v in ai.iter_mut() {
                    *v += b.im;
                }
                outs.push(acc);
            }
            out_batch.push(outs);
        }
        Ok(out_batch)
    }

    fn conv_layer_backward(
        &self,
        l: usize,
        inputs: &[Vec<ComplexTensor<T>>],
        gout: &[Vec<ComplexTensor<T>>],
    ) -> Result<(Vec<Vec<ComplexTensor<T>>>, LayerGrads)> {
        let (cin, cout) = (self.spec.channels[l], self.spec.channels[l + 1]);
        let dims = inputs[0][0].dims();
        let mut scratch: Vec<ComplexTensor<T>> =
            (0..4).map(|_| ComplexTensor::zeros(dims)).collect();

        let mut kernel_grads = match &self.layers[l].kernels {
            KernelStore::Generic(ks) => KernelGradStore::Generic(
                ks.iter()
                    .map(|k| vec![C64::new(0.0, 0.0); k.taps.len()])
                    .collect(),
            ),
            KernelStore::Separable(fs) => KernelGradStore::Separable(
                fs.iter()
                    .map(|f| {
                        [
                            vec![C64::new(0.0, 0.0); f[0].len()],
                            vec![C64::new(0.0, 0.0); f[1].len()],
                            vec![C64::new(0.0, 0.0); f[2].len()],
                        ]
                    })
                    .collect(),
            ),
        };
        let mut bias_grads = vec![C64::new(0.0, 0.0); cout];
        let mut gin: Vec<Vec<ComplexTensor<T>>> = inputs
            .iter()
            .map(|s| s.iter().map(|t| ComplexTensor::zeros(t.dims())).collect())
            .collect();

        for (si, (sample_in, sample_g)) in inputs.iter().zip(gout).enumerate() {
            for oc in 0..cout {
                let g = &sample_g[oc];
                let mut acc = C64::new(0.0, 0.0);
                for (&r, &i) in g.re().iter().zip(g.im()) {
                    acc.re += r.to_f64_lossy();
                    acc.im += i.to_f64_lossy();
                }
                bias_grads[oc] += acc;

                for ic in 0..cin {
                    let x = &sample_in[ic];
                    match (&self.layers[l].kernels, &mut kernel_grads) {
                        (KernelStore::Generic(ks), KernelGradStore::Generic(gks)) => {
                            let gw = conv_generic_backward(
                                x,
                                &ks[oc * cin + ic],
                                g,
                                &mut gin[si][ic],
                            )?;
                            for (dst, src) in gks[oc * cin + ic].iter_mut().zip(gw) {
                                *dst += src;
                            }
                        }
                        (KernelStore::Separable(fs), KernelGradStore::Separable(gfs)) => {
                            let (a, rest) = scratch.split_at_mut(1);
                            let (b, rest) = rest.split_at_mut(1);
                            let (c, d) = rest.split_at_mut(1);
                            let gw = conv_separable_backward(
                                x,
                                &fs[oc * cin + ic],
                                g,
                                &mut gin[si][ic],
                                &mut a[0],
                                &mut b[0],
                                &mut c[0],
                                &mut d[0],
                            )?;
                            let dst = &mut gfs[oc * cin + ic];
                            for axis in 0..3 {
                                for (dw, sw) in dst[axis].iter_mut().zip(&gw[axis]) {
                                    *dw += *sw;
                                }
                            }
                        }
                        _ => unreachable!("kernel store and grad store always match"),
                    }
                }
            }
        }

        Ok((
            gin,
            LayerGrads {
                kernels: kernel_grads,
                bias: bias_grads,
            },
        ))
    }

    /// Runs the network over a batch of single-channel maps. In training
    /// phase, activations are cached for [`Model::backward`] and batch-norm
    /// running statistics are updated.
    pub fn forward(
        &mut self,
        inputs: &[ComplexTensor<T>],
        phase: Phase,
    ) -> Result<Vec<ComplexTensor<T>>> {
        self.spec.validate()?;
        if inputs.is_empty() {
            return Err(Error::invalid("batch", "empty input batch"));
        }
        if self.spec.channels[0] != 1 {
            return Err(Error::invalid(
                "channels",
                "forward expects a single-channel input layer",
            ));
        }
        let dims = inputs[0].dims();
        for t in inputs {
            if t.dims() != dims {
                return Err(Error::ShapeMismatch {
                    context: "model forward",
                    expected: dims.to_vec(),
                    got: t.dims().to_vec(),
                });
            }
        }

        let train = phase == Phase::Train;
        let mut cache = Cache {
            conv_in: Vec::new(),
            relu_out: Vec::new(),
            bn_caches: Vec::new(),
        };

        let mut a: Vec<Vec<ComplexTensor<T>>> =
            inputs.iter().map(|t| vec![t.clone()]).collect();
        let num_layers = self.spec.num_layers();
        for l in 0..num_layers {
            if train {
                cache.conv_in.push(a.clone());
            }
            let z = self.conv_layer_forward(l, &a)?;
            if l + 1 == num_layers {
                a = z;
                break;
            }
            let r: Vec<Vec<ComplexTensor<T>>> = z
                .iter()
                .map(|s| s.iter().map(crelu).collect())
                .collect();
            if train {
                let (b, bn_cache, stats) = bn_forward_train(&self.bns[l], &r)?;
                bn_update_running(&mut self.bns[l], &stats);
                cache.relu_out.push(r);
                cache.bn_caches.push(bn_cache);
                a = b;
            } else {
                a = bn_forward_eval(&self.bns[l], &r)?;
            }
        }

        self.cache = if train { Some(cache) } else { None };
        Ok(a.into_iter().map(|mut s| s.pop().expect("one channel")).collect())
    }

    /// Reverse-mode pass over the cached forward. Returns parameter
    /// gradients and the gradient with respect to the input maps; errors if
    /// no training-mode forward preceded it. Consumes the cache.
    pub fn backward(
        &mut self,
        gout: &[ComplexTensor<T>],
    ) -> Result<(ModelGrads, Vec<ComplexTensor<T>>)> {
        let cache = self.cache.take().ok_or(Error::BackwardBeforeForward)?;
        let num_layers = self.spec.num_layers();
        let batch = cache.conv_in[0].len();
        if gout.len() != batch {
            return Err(Error::ShapeMismatch {
                context: "model backward",
                expected: vec![batch],
                got: vec![gout.len()],
            });
        }

        let mut layer_grads: Vec<Option<LayerGrads>> = (0..num_layers).map(|_| None).collect();
        let mut bn_grads: Vec<Option<BnGrads>> =
            (0..num_layers.saturating_sub(1)).map(|_| None).collect();

        let mut g: Vec<Vec<ComplexTensor<T>>> =
            gout.iter().map(|t| vec![t.clone()]).collect();

        for l in (0..num_layers).rev() {
            let (gin, lg) = self.conv_layer_backward(l, &cache.conv_in[l], &g)?;
            layer_grads[l] = Some(lg);
            if l == 0 {
                g = gin;
                break;
            }
            let bn_idx = l - 1;
            let (gr, bg) = bn_backward(
                &self.bns[bn_idx],
                &cache.bn_caches[bn_idx],
                &cache.relu_out[bn_idx],
                &gin,
            )?;
            bn_grads[bn_idx] = Some(bg);
            g = cache.relu_out[bn_idx]
                .iter()
                .zip(&gr)
                .map(|(rs, gs)| {
                    rs.iter()
                        .zip(gs)
                        .map(|(r, gq)| crelu_backward(r, gq))
                        .collect()
                })
                .collect();
        }

        let input_grads = g
            .into_iter()
            .map(|mut s| s.pop().expect("one channel"))
            .collect();
        Ok((
            ModelGrads {
                layers: layer_grads.into_iter().map(|o| o.expect("filled")).collect(),
                bns: bn_grads.into_iter().map(|o| o.expect("filled")).collect(),
            },
            input_grads,
        ))
    }

    /// Trainable parameters as one flat vector. Order (pinned, matches
    /// [`Model::set_flat_params`] and [`ModelGrads::flatten`]): per layer,
    /// kernels pair-major (out-major over pairs; dense taps row-major,
    /// separable factors axis 0/1/2 concatenated) with each complex value as
    /// (re, im); then biases; then, for normalized layers, per channel
    /// gamma (rr, ri, ii) followed by beta (re, im).
    pub fn flat_params(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in 0..self.spec.num_layers() {
            match &self.layers[l].kernels {
                KernelStore::Generic(ks) => {
                    for k in ks {
                        for t in &k.taps {
                            out.push(t.re);
                            out.push(t.im);
                        }
                    }
                }
                KernelStore::Separable(fs) => {
                    for f in fs {
                        for axis in f {
                            for t in axis {
                                out.push(t.re);
                                out.push(t.im);
                            }
                        }
                    }
                }
            }
            for b in &self.layers[l].bias {
                out.push(b.re);
                out.push(b.im);
            }
            if l < self.bns.len() {
                let bn = &self.bns[l];
                for ch in 0..bn.channels() {
                    out.extend_from_slice(&bn.gamma[ch]);
                    out.push(bn.beta[ch].re);
                    out.push(bn.beta[ch].im);
                }
            }
        }
        debug_assert_eq!(out.len(), self.param_count());
        out
    }

    /// Loads a flat vector produced by [`Model::flat_params`].
    pub fn set_flat_params(&mut self, flat: &[T]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::ShapeMismatch {
                context: "set_flat_params",
                expected: vec![self.param_count()],
                got: vec![flat.len()],
            });
        }
        let mut it = flat.iter().copied();
        let mut next = || it.next().expect("length checked");
        for l in 0..self.spec.num_layers() {
            match &mut self.layers[l].kernels {
                KernelStore::Generic(ks) => {
                    for k in ks {
                        for t in k.taps.iter_mut() {
                            t.re = next();
                            t.im = next();
                        }
                    }
                }
                KernelStore::Separable(fs) => {
                    for f in fs {
                        for axis in f {
                            for t in axis.iter_mut() {
                                t.re = next();
                                t.im = next();
                            }
                        }
                    }
                }
            }
            for b in self.layers[l].bias.iter_mut() {
                b.re = next();
                b.im = next();
            }
            if l < self.bns.len() {
                let bn = &mut self.bns[l];
                for ch in 0..bn.gamma.len() {
                    for j in 0..3 {
                        bn.gamma[ch][j] = next();
                    }
                    bn.beta[ch].re = next();
                    bn.beta[ch].im = next();
                }
            }
        }
        Ok(())
    }

    /// Non-trainable state (batch norm running estimates) as a flat vector:
    /// per normalized layer, per channel: mean (re, im), cov (a, b, c).
    pub fn running_stats(&self) -> Vec<T> {
        let mut out = Vec::new();
        for bn in &self.bns {
            for ch in 0..bn.channels() {
                out.push(bn.running_mean[ch].re);
                out.push(bn.running_mean[ch].im);
                out.extend_from_slice(&bn.running_cov[ch]);
            }
        }
        out
    }

    pub fn set_running_stats(&mut self, flat: &[T]) -> Result<()> {
        let expect: usize = self.bns.iter().map(|b| b.channels() * 5).sum();
        if flat.len() != expect {
            return Err(Error::ShapeMismatch {
                context: "set_running_stats",
                expected: vec![expect],
                got: vec![flat.len()],
            });
        }
        let mut it = flat.iter().copied();
        let mut next = || it.next().expect("length checked");
        for bn in &mut self.bns {
            for ch in 0..bn.gamma.len() {
                bn.running_mean[ch].re = next();
                bn.running_mean[ch].im = next();
                for j in 0..3 {
                    bn.running_cov[ch][j] = next();
                }
            }
        }
        Ok(())
    }
}

impl ModelGrads {
    /// Flat f64 gradients aligned with [`Model::flat_params`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (l, lg) in self.layers.iter().enumerate() {
            match &lg.kernels {
                KernelGradStore::Generic(ks) => {
                    for k in ks {
                        for t in k {
                            out.push(t.re);
                            out.push(t.im);
                        }
                    }
                }
                KernelGradStore::Separable(fs) => {
                    for f in fs {
                        for axis in f {
                            for t in axis {
                                out.push(t.re);
                                out.push(t.im);
                            }
                        }
                    }
                }
            }
            for b in &lg.bias {
                out.push(b.re);
                out.push(b.im);
            }
            if l < self.bns.len() {
                let bg = &self.bns[l];
                for ch in 0..bg.gamma.len() {
                    out.extend_from_slice(&bg.gamma[ch]);
                    out.extend_from_slice(&bg.beta[ch]);
                }
            }
        }
        out
    }
}
