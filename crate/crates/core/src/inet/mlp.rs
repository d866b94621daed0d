use std::fmt::Debug;
use std::ops::Add;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::InetError;
use crate::fxp::Fx;
use crate::matrix::Matrix;

/// Scalar arithmetic shared by the double-precision reference path and the
/// bit-exact Q7.7 path.
pub trait Scalar: Copy + Default + Debug + PartialEq + Add<Output = Self> + Send + Sync {
    fn mul(self, rhs: Self) -> Self;
    fn relu(self) -> Self;
    /// Piecewise-linear squashing of an edge logit into [0, 1].
    fn hard_sigmoid(self) -> Self;
    fn from_fx(v: Fx) -> Self;
    fn weights(layer: &DenseLayer) -> &Matrix<Self>;
    fn bias(layer: &DenseLayer) -> &[Self];
}

impl Scalar for Fx {
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        self.saturating_mul(rhs)
    }
    #[inline]
    fn relu(self) -> Self {
        Fx::relu(self)
    }
    fn hard_sigmoid(self) -> Self {
        Fx::hard_sigmoid(self)
    }
    fn from_fx(v: Fx) -> Self {
        v
    }
    fn weights(layer: &DenseLayer) -> &Matrix<Self> {
        &layer.weights_fx
    }
    fn bias(layer: &DenseLayer) -> &[Self] {
        &layer.bias_fx
    }
}

impl Scalar for f64 {
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        self * rhs
    }
    #[inline]
    fn relu(self) -> Self {
        self.max(0.0)
    }
    fn hard_sigmoid(self) -> Self {
        (0.125 * self + 0.5).clamp(0.0, 1.0)
    }
    fn from_fx(v: Fx) -> Self {
        v.to_f64()
    }
    fn weights(layer: &DenseLayer) -> &Matrix<Self> {
        &layer.weights
    }
    fn bias(layer: &DenseLayer) -> &[Self] {
        &layer.bias
    }
}

/// Fully connected layer, `out x in` weights. The real values are kept next
/// to their quantized copies; the copies are made once, at construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    weights: Matrix<f64>,
    bias: Vec<f64>,
    weights_fx: Matrix<Fx>,
    bias_fx: Vec<Fx>,
}

impl DenseLayer {
    pub fn new(weights: Matrix<f64>, bias: Vec<f64>) -> Result<Self, InetError> {
        if bias.len() != weights.rows() {
            return Err(InetError::Dimension {
                what: "bias length",
                expected: weights.rows(),
                found: bias.len(),
            });
        }
        let quantize = |x: &f64| Fx::quantize(*x).map_err(|_| InetError::NonFiniteWeight);
        let weights_fx = Matrix::from_vec(
            weights.rows(),
            weights.cols(),
            weights
                .as_slice()
                .iter()
                .map(quantize)
                .collect::<Result<_, _>>()?,
        )
        .expect("same shape");
        let bias_fx = bias.iter().map(quantize).collect::<Result<_, _>>()?;
        Ok(DenseLayer {
            weights,
            bias,
            weights_fx,
            bias_fx,
        })
    }

    /// Builds a layer from raw quantized values alongside the reals they came
    /// from; the raw values must equal the quantized reals.
    pub fn with_quantized(
        weights: Matrix<f64>,
        bias: Vec<f64>,
        weights_fx: Matrix<Fx>,
        bias_fx: Vec<Fx>,
    ) -> Result<Self, InetError> {
        let layer = DenseLayer::new(weights, bias)?;
        if layer.weights_fx != weights_fx || layer.bias_fx != bias_fx {
            return Err(InetError::QuantizationMismatch);
        }
        Ok(layer)
    }

    /// Weights uniform in `±min(1, sqrt(6 / (in + out)))`, biases in `±0.1`.
    pub fn random(in_dim: usize, out_dim: usize, rng: &mut impl Rng) -> Self {
        let limit = (6.0 / (in_dim + out_dim).max(1) as f64).sqrt().min(1.0);
        let w = (0..in_dim * out_dim)
            .map(|_| rng.gen_range(-limit..=limit))
            .collect();
        let b = (0..out_dim).map(|_| rng.gen_range(-0.1..=0.1)).collect();
        DenseLayer::new(Matrix::from_vec(out_dim, in_dim, w).unwrap(), b).expect("finite")
    }

    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn real_weights(&self) -> &Matrix<f64> {
        &self.weights
    }

    pub fn real_bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn fx_weights(&self) -> &Matrix<Fx> {
        &self.weights_fx
    }

    pub fn fx_bias(&self) -> &[Fx] {
        &self.bias_fx
    }

    /// `y[o] = (sum_i w[o][i] * x[i]) + b[o]`; the sum runs in ascending `i`
    /// from zero and the bias is added last.
    pub fn forward<T: Scalar>(&self, x: &[T], y: &mut Vec<T>) {
        debug_assert_eq!(x.len(), self.in_dim());
        let w = T::weights(self);
        y.clear();
        y.extend(w.iter_rows().zip(T::bias(self)).map(|(row, &b)| {
            let dot = row
                .iter()
                .zip(x)
                .fold(T::default(), |acc, (&wi, &xi)| acc + wi.mul(xi));
            dot + b
        }));
    }

    /// Number of multipliers in a fully unrolled implementation.
    pub fn multiplies(&self) -> usize {
        self.in_dim() * self.out_dim()
    }
}

/// Multi-layer perceptron: ReLU after every layer except the last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    layers: Vec<DenseLayer>,
}

impl Mlp {
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self, InetError> {
        if layers.is_empty() {
            return Err(InetError::Config("an MLP needs at least one layer".into()));
        }
        for pair in layers.windows(2) {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(InetError::Dimension {
                    what: "chained layer width",
                    expected: pair[0].out_dim(),
                    found: pair[1].in_dim(),
                });
            }
        }
        Ok(Mlp { layers })
    }

    /// `hidden_depth` hidden layers of `hidden_width`, then the output layer.
    pub fn random(
        in_dim: usize,
        hidden_width: usize,
        hidden_depth: usize,
        out_dim: usize,
        rng: &mut impl Rng,
    ) -> Self {
        let mut dims = vec![in_dim];
        dims.extend(std::iter::repeat_n(hidden_width, hidden_depth));
        dims.push(out_dim);
        let layers = dims
            .windows(2)
            .map(|d| DenseLayer::random(d[0], d[1], rng))
            .collect();
        Mlp { layers }
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().unwrap().out_dim()
    }

    pub fn multiplies(&self) -> usize {
        self.layers.iter().map(DenseLayer::multiplies).sum()
    }

    pub fn forward<T: Scalar>(&self, input: &[T]) -> Vec<T> {
        let mut x = input.to_vec();
        let mut y = Vec::new();
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            layer.forward(&x, &mut y);
            if k != last {
                y.iter_mut().for_each(|v| *v = v.relu());
            }
            std::mem::swap(&mut x, &mut y);
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn layer(rows: Vec<Vec<f64>>, bias: Vec<f64>) -> DenseLayer {
        let cols = rows[0].len();
        DenseLayer::new(Matrix::from_rows(cols, rows).unwrap(), bias).unwrap()
    }

    #[test]
    fn dense_forward_both_modes() {
        let l = layer(vec![vec![0.5, -1.0], vec![2.0, 0.25]], vec![0.125, -0.5]);
        let mut y = Vec::new();
        l.forward(&[1.0f64, 2.0], &mut y);
        assert_eq!(y, vec![0.5 - 2.0 + 0.125, 2.0 + 0.5 - 0.5]);
        let x: Vec<Fx> = [1.0, 2.0]
            .iter()
            .map(|&v| Fx::quantize(v).unwrap())
            .collect();
        let mut yq = Vec::new();
        l.forward(&x, &mut yq);
        let yq: Vec<f64> = yq.iter().map(|v| v.to_f64()).collect();
        assert_eq!(yq, y);
    }

    #[test]
    fn hidden_layers_use_relu_and_output_is_linear() {
        let mlp = Mlp::new(vec![
            layer(vec![vec![1.0]], vec![0.0]),
            layer(vec![vec![1.0]], vec![-1.0]),
        ])
        .unwrap();
        assert_eq!(mlp.forward(&[-3.0f64]), vec![-1.0]);
        assert_eq!(mlp.forward(&[3.0f64]), vec![2.0]);
    }

    #[test]
    fn rejects_bad_chains() {
        let err = Mlp::new(vec![
            layer(vec![vec![1.0, 1.0]], vec![0.0]),
            layer(vec![vec![1.0, 1.0]], vec![0.0]),
        ]);
        assert!(matches!(err, Err(InetError::Dimension { .. })));
        assert!(Mlp::new(vec![]).is_err());
        assert!(DenseLayer::new(Matrix::zeros(2, 2), vec![0.0]).is_err());
        assert!(
            DenseLayer::new(Matrix::from_vec(1, 1, vec![f64::NAN]).unwrap(), vec![0.0]).is_err()
        );
    }

    #[test]
    fn quantized_copies_match() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mlp = Mlp::random(10, 8, 2, 4, &mut rng);
        assert_eq!(mlp.layers().len(), 3);
        assert_eq!((mlp.in_dim(), mlp.out_dim()), (10, 4));
        for l in mlp.layers() {
            for (w, q) in l
                .real_weights()
                .as_slice()
                .iter()
                .zip(l.fx_weights().as_slice())
            {
                assert_eq!(Fx::quantize(*w).unwrap(), *q);
            }
        }
        let l = &mlp.layers()[0];
        assert!(DenseLayer::with_quantized(
            l.real_weights().clone(),
            l.real_bias().to_vec(),
            l.fx_weights().map(|v| *v + Fx::LSB),
            l.fx_bias().to_vec()
        )
        .is_err());
    }

    #[test]
    fn real_hard_sigmoid() {
        assert_eq!(0.0f64.hard_sigmoid(), 0.5);
        assert_eq!(9.0f64.hard_sigmoid(), 1.0);
        assert_eq!((-9.0f64).hard_sigmoid(), 0.0);
        assert_eq!(2.0f64.hard_sigmoid(), 0.75);
    }
}
