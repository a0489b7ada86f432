//! Fully-connected scalar network with forward jets and reverse accumulation.
//!
//! The network maps a point `X ∈ R^d` to a scalar `u(X)` through affine layers
//! with `tanh` on every hidden layer and an affine output layer. Besides the
//! value, the forward pass can carry the input gradient and the diagonal of the
//! input Hessian: for each neuron the triple `(v, g, h)` is mapped
//!
//! ```text
//! affine:      (v, g, h) -> (W v + b, W g, W h)
//! activation:  v -> σ(v),  g_i -> σ'(v) g_i,  h_i -> σ''(v) g_i² + σ'(v) h_i
//! ```
//!
//! which is exact for diagonal entries because the activation acts pointwise.
//! Parameter gradients of any linear functional of the jet are obtained by
//! running the adjoint of that program backwards ([`BatchEvaluator::backward`]).
//!
//! Batches are stored channel-major: an activation block for `P` points has
//! shape `(width, C·P)` where channel `0` is the value, channels `1..=d` the
//! gradient and `d+1..=2d` the Hessian diagonal. Every layer is then a single
//! matrix product over all channels at once.

use std::fmt::Debug;

use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, LinalgScalar};
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Floating point type the batched kernels run in.
pub trait Real: LinalgScalar + Float + Send + Sync + Debug {
    fn of(v: f64) -> Self;
    fn get(self) -> f64;
}

impl Real for f64 {
    #[inline]
    fn of(v: f64) -> Self {
        v
    }
    #[inline]
    fn get(self) -> f64 {
        self
    }
}

impl Real for f32 {
    #[inline]
    fn of(v: f64) -> Self {
        v as f32
    }
    #[inline]
    fn get(self) -> f64 {
        self as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    F64,
    F32,
}

/// How much of the jet a batched pass computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Order {
    Value,
    Gradient,
    Laplacian,
}

impl Order {
    pub fn channels(self, dim: usize) -> usize {
        match self {
            Order::Value => 1,
            Order::Gradient => 1 + dim,
            Order::Laplacian => 1 + 2 * dim,
        }
    }
}

/// Value, input gradient and input Hessian diagonal of `u` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess_diag: Vec<f64>,
}

impl Jet {
    pub fn laplacian(&self) -> f64 {
        self.hess_diag.iter().sum()
    }
}

/// Adjoint seeds: weights on the value, gradient and Hessian-diagonal entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Cotangents {
    pub w_value: f64,
    pub w_grad: Vec<f64>,
    pub w_lap: Vec<f64>,
}

impl Cotangents {
    pub fn zeros(dim: usize) -> Self {
        Cotangents {
            w_value: 0.0,
            w_grad: vec![0.0; dim],
            w_lap: vec![0.0; dim],
        }
    }
}

/// Weights (`fan_out × fan_in`) and biases of every layer.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub layer_sizes: Vec<usize>,
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

pub fn validate_layer_sizes(layer_sizes: &[usize]) -> Result<()> {
    if layer_sizes.len() < 2 {
        return Err(Error::Config(format!(
            "layer_sizes needs at least an input and an output width, got {layer_sizes:?}"
        )));
    }
    if layer_sizes.contains(&0) {
        return Err(Error::Config(format!(
            "layer widths must be positive, got {layer_sizes:?}"
        )));
    }
    if *layer_sizes.last().unwrap() != 1 {
        return Err(Error::Config(format!(
            "output width must be 1, got {layer_sizes:?}"
        )));
    }
    Ok(())
}

/// Number of scalars in the flat parameter vector.
pub fn parameter_count(layer_sizes: &[usize]) -> usize {
    layer_sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

/// Glorot-normal initialization: `N(0, 2/(fan_in+fan_out))` weights, zero biases.
pub fn xavier_init(layer_sizes: &[usize], seed: u64) -> Result<NetworkParams> {
    validate_layer_sizes(layer_sizes)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = Vec::with_capacity(layer_sizes.len() - 1);
    let mut biases = Vec::with_capacity(layer_sizes.len() - 1);
    for w in layer_sizes.windows(2) {
        let (fan_in, fan_out) = (w[0], w[1]);
        let std = (2.0 / (fan_in + fan_out) as f64).sqrt();
        let normal = Normal::new(0.0, std).expect("positive standard deviation");
        let entries: Vec<f64> = (0..fan_in * fan_out)
            .map(|_| normal.sample(&mut rng))
            .collect();
        weights.push(Array2::from_shape_vec((fan_out, fan_in), entries).expect("shape"));
        biases.push(Array1::zeros(fan_out));
    }
    Ok(NetworkParams {
        layer_sizes: layer_sizes.to_vec(),
        weights,
        biases,
    })
}

impl NetworkParams {
    pub fn new(
        layer_sizes: Vec<usize>,
        weights: Vec<Array2<f64>>,
        biases: Vec<Array1<f64>>,
    ) -> Result<Self> {
        validate_layer_sizes(&layer_sizes)?;
        let layers = layer_sizes.len() - 1;
        if weights.len() != layers || biases.len() != layers {
            return Err(Error::Config(format!(
                "expected {layers} weight matrices and bias vectors, got {} and {}",
                weights.len(),
                biases.len()
            )));
        }
        for (l, win) in layer_sizes.windows(2).enumerate() {
            if weights[l].dim() != (win[1], win[0]) || biases[l].len() != win[1] {
                return Err(Error::Config(format!(
                    "layer {l}: weight shape {:?} / bias length {} incompatible with {} -> {}",
                    weights[l].dim(),
                    biases[l].len(),
                    win[0],
                    win[1]
                )));
            }
        }
        let params = NetworkParams {
            layer_sizes,
            weights,
            biases,
        };
        if !params.flatten().iter().all(|v| v.is_finite()) {
            return Err(Error::Config("network parameters must be finite".into()));
        }
        Ok(params)
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn parameter_count(&self) -> usize {
        parameter_count(&self.layer_sizes)
    }

    /// Layer by layer: weights row-major, then biases.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.iter().copied());
            out.extend(b.iter().copied());
        }
        out
    }

    pub fn unflatten(flat: &[f64], layer_sizes: &[usize]) -> Result<Self> {
        validate_layer_sizes(layer_sizes)?;
        let expected = parameter_count(layer_sizes);
        if flat.len() != expected {
            return Err(Error::Usage(format!(
                "flat parameter vector has length {}, layer sizes {layer_sizes:?} need {expected}",
                flat.len()
            )));
        }
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        let mut at = 0;
        for w in layer_sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let n = fan_in * fan_out;
            weights.push(
                Array2::from_shape_vec((fan_out, fan_in), flat[at..at + n].to_vec())
                    .expect("shape"),
            );
            at += n;
            biases.push(Array1::from(flat[at..at + fan_out].to_vec()));
            at += fan_out;
        }
        Ok(NetworkParams {
            layer_sizes: layer_sizes.to_vec(),
            weights,
            biases,
        })
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::Usage(format!(
                "point has dimension {}, network expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        let eval = BatchEvaluator::<f64>::new(self);
        let (jets, _) = eval.forward(x, Order::Value);
        Ok(jets.values[0])
    }

    pub fn forward_jet(&self, x: &[f64]) -> Result<Jet> {
        self.check_point(x)?;
        let eval = BatchEvaluator::<f64>::new(self);
        let (jets, _) = eval.forward(x, Order::Laplacian);
        Ok(jets.jet(0))
    }

    /// Parameter gradient of `w_value·u + w_grad·∇u + Σ w_lap_i ∂²u/∂x_i²` at `x`.
    pub fn vjp_jet(&self, x: &[f64], cot: &Cotangents) -> Result<Vec<f64>> {
        self.check_point(x)?;
        let d = self.input_dim();
        if cot.w_grad.len() != d || cot.w_lap.len() != d {
            return Err(Error::Usage(format!(
                "cotangent dimension does not match input dimension {d}"
            )));
        }
        let eval = BatchEvaluator::<f64>::new(self);
        let (_, tape) = eval.forward(x, Order::Laplacian);
        let mut seeds = BatchCotangents::zeros(Order::Laplacian, d, 1);
        seeds.set_value(0, cot.w_value);
        for k in 0..d {
            seeds.set_grad(0, k, cot.w_grad[k]);
            seeds.set_hess(0, k, cot.w_lap[k]);
        }
        let mut grad = vec![0.0; self.parameter_count()];
        eval.backward(&tape, &seeds, &mut grad);
        Ok(grad)
    }
}

/// Jets of a batch of points; `grads` and `hess_diag` are point-major (`p*d + k`).
#[derive(Debug, Clone)]
pub struct BatchJets {
    pub order: Order,
    pub dim: usize,
    pub values: Vec<f64>,
    pub grads: Vec<f64>,
    pub hess_diag: Vec<f64>,
}

impl BatchJets {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn grad(&self, p: usize) -> &[f64] {
        &self.grads[p * self.dim..(p + 1) * self.dim]
    }

    pub fn hess(&self, p: usize) -> &[f64] {
        &self.hess_diag[p * self.dim..(p + 1) * self.dim]
    }

    pub fn jet(&self, p: usize) -> Jet {
        let d = self.dim;
        Jet {
            value: self.values[p],
            grad: if self.order >= Order::Gradient {
                self.grad(p).to_vec()
            } else {
                vec![0.0; d]
            },
            hess_diag: if self.order >= Order::Laplacian {
                self.hess(p).to_vec()
            } else {
                vec![0.0; d]
            },
        }
    }
}

/// Output-layer adjoint seeds for a batch, in the channel-major column layout.
#[derive(Debug, Clone)]
pub struct BatchCotangents {
    order: Order,
    dim: usize,
    points: usize,
    seeds: Vec<f64>,
}

impl BatchCotangents {
    pub fn zeros(order: Order, dim: usize, points: usize) -> Self {
        BatchCotangents {
            order,
            dim,
            points,
            seeds: vec![0.0; order.channels(dim) * points],
        }
    }

    pub fn set_value(&mut self, p: usize, w: f64) {
        self.seeds[p] = w;
    }

    pub fn set_grad(&mut self, p: usize, k: usize, w: f64) {
        debug_assert!(self.order >= Order::Gradient);
        self.seeds[(1 + k) * self.points + p] = w;
    }

    pub fn set_hess(&mut self, p: usize, k: usize, w: f64) {
        debug_assert!(self.order >= Order::Laplacian);
        self.seeds[(1 + self.dim + k) * self.points + p] = w;
    }
}

/// Intermediate blocks of a batched forward pass, kept for the adjoint sweep.
pub struct BatchTape<T> {
    order: Order,
    points: usize,
    /// `inputs[l]` is the block fed into layer `l`.
    inputs: Vec<Array2<T>>,
    /// `pre[l]` is the pre-activation block produced by layer `l`.
    pre: Vec<Array2<T>>,
}

/// Network weights converted to the kernel precision.
pub struct BatchEvaluator<T: Real> {
    layer_sizes: Vec<usize>,
    weights: Vec<Array2<T>>,
    biases: Vec<Array1<T>>,
}

impl<T: Real> BatchEvaluator<T> {
    pub fn new(params: &NetworkParams) -> Self {
        BatchEvaluator {
            layer_sizes: params.layer_sizes.clone(),
            weights: params.weights.iter().map(|w| w.mapv(T::of)).collect(),
            biases: params.biases.iter().map(|b| b.mapv(T::of)).collect(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    /// Runs the jet program on `points` (flat, `p*d + k`).
    pub fn forward(&self, points: &[f64], order: Order) -> (BatchJets, BatchTape<T>) {
        let d = self.input_dim();
        assert_eq!(
            points.len() % d,
            0,
            "flat point buffer not a multiple of the dimension"
        );
        let np = points.len() / d;
        let ch = order.channels(d);
        let layers = self.weights.len();

        let mut input = Array2::<T>::zeros((d, ch * np));
        for p in 0..np {
            for k in 0..d {
                input[[k, p]] = T::of(points[p * d + k]);
                if order >= Order::Gradient {
                    input[[k, (1 + k) * np + p]] = T::one();
                }
            }
        }

        let mut inputs = Vec::with_capacity(layers);
        let mut pre = Vec::with_capacity(layers);
        let mut a = input;
        for l in 0..layers {
            let w = &self.weights[l];
            let mut z = Array2::<T>::zeros((w.nrows(), ch * np));
            general_mat_mul(T::one(), w, &a, T::zero(), &mut z);
            for (mut row, &b) in z.rows_mut().into_iter().zip(self.biases[l].iter()) {
                for v in row.iter_mut().take(np) {
                    *v = *v + b;
                }
            }
            let next = if l + 1 < layers {
                activation_forward(&z, np, d, order)
            } else {
                Array2::zeros((0, 0))
            };
            inputs.push(std::mem::replace(&mut a, next));
            pre.push(z);
        }

        let out = pre.last().expect("at least one layer");
        let row = out.row(0);
        let values = (0..np).map(|p| row[p].get()).collect();
        let mut grads = Vec::new();
        let mut hess_diag = Vec::new();
        if order >= Order::Gradient {
            grads = vec![0.0; np * d];
            for p in 0..np {
                for k in 0..d {
                    grads[p * d + k] = row[(1 + k) * np + p].get();
                }
            }
        }
        if order >= Order::Laplacian {
            hess_diag = vec![0.0; np * d];
            for p in 0..np {
                for k in 0..d {
                    hess_diag[p * d + k] = row[(1 + d + k) * np + p].get();
                }
            }
        }
        (
            BatchJets {
                order,
                dim: d,
                values,
                grads,
                hess_diag,
            },
            BatchTape {
                order,
                points: np,
                inputs,
                pre,
            },
        )
    }

    /// Adds `Σ_p seeds_p · ∂jet_p/∂θ` into `grad` (flat layout of [`NetworkParams::flatten`]).
    pub fn backward(&self, tape: &BatchTape<T>, seeds: &BatchCotangents, grad: &mut [f64]) {
        let d = self.input_dim();
        let np = tape.points;
        let ch = tape.order.channels(d);
        assert_eq!(seeds.order, tape.order, "seed order differs from the tape");
        assert_eq!(seeds.points, np, "seed batch size differs from the tape");
        assert_eq!(grad.len(), parameter_count(&self.layer_sizes));

        let layers = self.weights.len();
        let mut offsets = Vec::with_capacity(layers);
        let mut at = 0;
        for w in &self.weights {
            offsets.push(at);
            at += w.len() + w.nrows();
        }

        let mut dz = Array2::<T>::from_shape_vec(
            (1, ch * np),
            seeds.seeds.iter().map(|&v| T::of(v)).collect(),
        )
        .expect("shape");

        for l in (0..layers).rev() {
            let w = &self.weights[l];
            let (n_out, n_in) = w.dim();
            let mut gw = Array2::<T>::zeros((n_out, n_in));
            general_mat_mul(T::one(), &dz, &tape.inputs[l].t(), T::zero(), &mut gw);
            let base = offsets[l];
            for (dst, src) in grad[base..base + n_out * n_in].iter_mut().zip(gw.iter()) {
                *dst += src.get();
            }
            let bias_base = base + n_out * n_in;
            for (i, row) in dz.rows().into_iter().enumerate() {
                let mut acc = T::zero();
                for &v in row.iter().take(np) {
                    acc = acc + v;
                }
                grad[bias_base + i] += acc.get();
            }
            if l > 0 {
                let mut da = Array2::<T>::zeros((n_in, ch * np));
                general_mat_mul(T::one(), &w.t(), &dz, T::zero(), &mut da);
                activation_backward(
                    &mut da,
                    &tape.pre[l - 1],
                    &tape.inputs[l],
                    np,
                    d,
                    tape.order,
                );
                dz = da;
            }
        }
    }
}

fn activation_forward<T: Real>(z: &Array2<T>, np: usize, d: usize, order: Order) -> Array2<T> {
    let mut a = Array2::<T>::zeros(z.raw_dim());
    let two = T::of(2.0);
    for (zr, mut ar) in z.rows().into_iter().zip(a.rows_mut()) {
        let zr = zr.as_slice().expect("standard layout");
        let ar = ar.as_slice_mut().expect("standard layout");
        for p in 0..np {
            let s = zr[p].tanh();
            let s1 = T::one() - s * s;
            let s2 = -two * s * s1;
            ar[p] = s;
            if order >= Order::Gradient {
                for k in 0..d {
                    let g = (1 + k) * np + p;
                    ar[g] = s1 * zr[g];
                    if order >= Order::Laplacian {
                        let h = (1 + d + k) * np + p;
                        ar[h] = s2 * zr[g] * zr[g] + s1 * zr[h];
                    }
                }
            }
        }
    }
    a
}

/// Maps adjoints of the activation outputs to adjoints of the pre-activations, in place.
fn activation_backward<T: Real>(
    da: &mut Array2<T>,
    pre: &Array2<T>,
    post: &Array2<T>,
    np: usize,
    d: usize,
    order: Order,
) {
    let two = T::of(2.0);
    let four = T::of(4.0);
    for ((mut dr, zr), sr) in da.rows_mut().into_iter().zip(pre.rows()).zip(post.rows()) {
        let dr = dr.as_slice_mut().expect("standard layout");
        let zr = zr.as_slice().expect("standard layout");
        let sr = sr.as_slice().expect("standard layout");
        for p in 0..np {
            let s = sr[p];
            let s1 = T::one() - s * s;
            let s2 = -two * s * s1;
            let s3 = -two * s1 * s1 + four * s * s * s1;
            let mut dzv = dr[p] * s1;
            if order >= Order::Gradient {
                for k in 0..d {
                    let g = (1 + k) * np + p;
                    let zg = zr[g];
                    let dag = dr[g];
                    let mut dzg = dag * s1;
                    dzv = dzv + dag * s2 * zg;
                    if order >= Order::Laplacian {
                        let h = (1 + d + k) * np + p;
                        let zh = zr[h];
                        let dah = dr[h];
                        dr[h] = dah * s1;
                        dzg = dzg + dah * two * s2 * zg;
                        dzv = dzv + dah * (s3 * zg * zg + s2 * zh);
                    }
                    dr[g] = dzg;
                }
            }
            dr[p] = dzv;
        }
    }
}
