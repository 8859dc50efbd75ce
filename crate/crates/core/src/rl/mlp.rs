use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::RlError;

/// One affine layer, `out = W·in + b`, with `W` stored as `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
}

impl Layer {
    pub fn zeros(input: usize, output: usize) -> Self {
        Self { weights: DMatrix::zeros(output, input), bias: DVector::zeros(output) }
    }

    pub fn input_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.nrows()
    }
}

/// Fully connected network: tanh on every hidden layer, identity on the last.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Layer>,
}

/// Activations retained by [`Mlp::forward_batch`] for the backward pass.
/// Column `j` of every matrix belongs to sample `j`.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    activations: Vec<DMatrix<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &DMatrix<f64> {
        self.activations.last().expect("cache holds the input at least")
    }
}

/// Parameter gradients with the same layout as the network.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGradient {
    pub layers: Vec<Layer>,
}

impl MlpGradient {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self { layers: net.layers.iter().map(|l| Layer::zeros(l.input_dim(), l.output_dim())).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.layers.iter().all(|l| l.weights.iter().chain(l.bias.iter()).all(|v| *v == 0.0))
    }

    pub fn flatten_into(&self, out: &mut Vec<f64>) {
        flatten_layers(&self.layers, out);
    }
}

fn flatten_layers(layers: &[Layer], out: &mut Vec<f64>) {
    for l in layers {
        for r in 0..l.weights.nrows() {
            out.extend(l.weights.row(r).iter());
        }
        out.extend(l.bias.iter());
    }
}

/// `W·A + b` accumulated column by column in a fixed order, so a sample's
/// output does not depend on how many other samples share the batch.
fn affine_columns(weights: &DMatrix<f64>, bias: &DVector<f64>, inputs: &DMatrix<f64>) -> DMatrix<f64> {
    let mut z = DMatrix::zeros(weights.nrows(), inputs.ncols());
    for (mut out, input) in z.column_iter_mut().zip(inputs.column_iter()) {
        out.copy_from(bias);
        for (k, a) in input.iter().enumerate() {
            out.axpy(*a, &weights.column(k), 1.0);
        }
    }
    z
}

impl Mlp {
    pub fn new(layers: Vec<Layer>) -> Result<Self, RlError> {
        if layers.is_empty() {
            return Err(RlError::Shape("network needs at least one layer".into()));
        }
        for (k, l) in layers.iter().enumerate() {
            if l.bias.len() != l.output_dim() {
                return Err(RlError::Shape(format!("layer {k}: bias length {} vs {} outputs", l.bias.len(), l.output_dim())));
            }
        }
        for (k, pair) in layers.windows(2).enumerate() {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(RlError::Shape(format!(
                    "layer {k} emits {} values but layer {} takes {}",
                    pair[0].output_dim(),
                    k + 1,
                    pair[1].input_dim()
                )));
            }
        }
        Ok(Self { layers })
    }

    /// All-zero network with the given layer widths, `sizes = [in, h1, …, out]`.
    pub fn zeros(sizes: &[usize]) -> Result<Self, RlError> {
        if sizes.len() < 2 {
            return Err(RlError::Shape("need input and output widths".into()));
        }
        Self::new(sizes.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect())
    }

    /// Gaussian initialization with variance `1/fan_in`, zero biases. The last
    /// layer is further scaled by `output_gain`, which keeps the initial policy
    /// close to its mean action when small.
    pub fn random<R: Rng + ?Sized>(sizes: &[usize], output_gain: f64, rng: &mut R) -> Result<Self, RlError> {
        let mut net = Self::zeros(sizes)?;
        let last = net.layers.len() - 1;
        for (k, l) in net.layers.iter_mut().enumerate() {
            let gain = if k == last { output_gain } else { 1.0 };
            let std = gain / (l.input_dim() as f64).sqrt();
            let normal = Normal::new(0.0, std).map_err(|e| RlError::Shape(e.to_string()))?;
            l.weights.iter_mut().for_each(|w| *w = normal.sample(rng));
        }
        Ok(net)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        self.layers.iter().map(|l| (l.input_dim(), l.output_dim())).collect()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Appends parameters layer by layer: weights row-major, then bias.
    pub fn flatten_into(&self, out: &mut Vec<f64>) {
        flatten_layers(&self.layers, out);
    }

    /// Inverse of [`Mlp::flatten_into`]; returns the number of values consumed.
    pub fn load_flat(&mut self, params: &[f64]) -> Result<usize, RlError> {
        if params.len() < self.param_count() {
            return Err(RlError::Shape(format!("{} parameters for a {}-parameter network", params.len(), self.param_count())));
        }
        let mut it = params.iter();
        for l in &mut self.layers {
            for r in 0..l.weights.nrows() {
                for c in 0..l.weights.ncols() {
                    l.weights[(r, c)] = *it.next().expect("length checked");
                }
            }
            l.bias.iter_mut().for_each(|b| *b = *it.next().expect("length checked"));
        }
        Ok(self.param_count())
    }

    pub fn forward(&self, input: &[f64]) -> Result<DVector<f64>, RlError> {
        if input.len() != self.input_dim() {
            return Err(RlError::Dimension { expected: self.input_dim(), got: input.len() });
        }
        // Same arithmetic as the batched path, so single and batched outputs
        // agree bit for bit.
        let cache = self.forward_batch(&DMatrix::from_column_slice(input.len(), 1, input))?;
        Ok(cache.output().column(0).into_owned())
    }

    /// Forward pass over the columns of `inputs` (one sample per column).
    pub fn forward_batch(&self, inputs: &DMatrix<f64>) -> Result<ForwardCache, RlError> {
        if inputs.nrows() != self.input_dim() {
            return Err(RlError::Dimension { expected: self.input_dim(), got: inputs.nrows() });
        }
        let last = self.layers.len() - 1;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(inputs.clone());
        for (k, l) in self.layers.iter().enumerate() {
            let mut z = affine_columns(&l.weights, &l.bias, activations.last().expect("nonempty"));
            if k != last {
                z.apply(|v| *v = v.tanh());
            }
            activations.push(z);
        }
        Ok(ForwardCache { activations })
    }

    /// Reverse pass for `Σ_j upstream_jᵀ · output_j`, summed over the batch.
    pub fn backward(&self, cache: &ForwardCache, upstream: &DMatrix<f64>) -> Result<MlpGradient, RlError> {
        let out = cache.output();
        if upstream.nrows() != out.nrows() || upstream.ncols() != out.ncols() {
            return Err(RlError::Dimension { expected: out.nrows(), got: upstream.nrows() });
        }
        let n = self.layers.len();
        let mut grads = Vec::with_capacity(n);
        let mut delta = upstream.clone();
        for k in (0..n).rev() {
            let input = &cache.activations[k];
            let weights = delta.clone() * input.transpose();
            let bias = delta.column_sum();
            if k > 0 {
                let mut back = self.layers[k].weights.transpose() * &delta;
                back.zip_apply(input, |d, h| *d *= 1.0 - h * h);
                delta = back;
            }
            grads.push(Layer { weights, bias });
        }
        grads.reverse();
        Ok(MlpGradient { layers: grads })
    }

    /// Gradient of `upstreamᵀ · net(input)` with respect to every parameter.
    pub fn gradient(&self, input: &[f64], upstream: &[f64]) -> Result<MlpGradient, RlError> {
        if upstream.len() != self.output_dim() {
            return Err(RlError::Dimension { expected: self.output_dim(), got: upstream.len() });
        }
        let cache = self.forward_batch(&DMatrix::from_column_slice(input.len(), 1, input))?;
        self.backward(&cache, &DMatrix::from_column_slice(upstream.len(), 1, upstream))
    }
}

pub fn mlp_forward(net: &Mlp, input: &[f64]) -> Result<DVector<f64>, RlError> {
    net.forward(input)
}

pub fn mlp_gradient(net: &Mlp, input: &[f64], upstream: &[f64]) -> Result<MlpGradient, RlError> {
    net.gradient(input, upstream)
}

/// Serialized layer: shapes plus row-major weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct LayerRecord {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Mlp {
    pub(crate) fn to_records(&self) -> Vec<LayerRecord> {
        self.layers
            .iter()
            .map(|l| {
                let mut weights = Vec::with_capacity(l.weights.len());
                for r in 0..l.weights.nrows() {
                    weights.extend(l.weights.row(r).iter());
                }
                LayerRecord { inputs: l.input_dim(), outputs: l.output_dim(), weights, bias: l.bias.as_slice().to_vec() }
            })
            .collect()
    }

    pub(crate) fn from_records(records: &[LayerRecord]) -> Result<Self, RlError> {
        let layers = records
            .iter()
            .map(|r| {
                if r.weights.len() != r.inputs * r.outputs {
                    return Err(RlError::Shape(format!(
                        "{} weights for a {}x{} layer",
                        r.weights.len(),
                        r.outputs,
                        r.inputs
                    )));
                }
                Ok(Layer {
                    weights: DMatrix::from_row_slice(r.outputs, r.inputs, &r.weights),
                    bias: DVector::from_vec(r.bias.clone()),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(layers)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar_net(w1: f64, w2: f64) -> Mlp {
        Mlp::new(vec![
            Layer { weights: DMatrix::from_element(1, 1, w1), bias: DVector::zeros(1) },
            Layer { weights: DMatrix::from_element(1, 1, w2), bias: DVector::zeros(1) },
        ])
        .unwrap()
    }

    #[test]
    fn zero_network_outputs_zero() {
        let net = Mlp::zeros(&[3, 5, 2]).unwrap();
        assert_eq!(net.forward(&[1.0, -2.0, 3.0]).unwrap().as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn identity_layer_passes_input() {
        let net = Mlp::new(vec![Layer { weights: DMatrix::identity(3, 3), bias: DVector::zeros(3) }]).unwrap();
        assert_eq!(net.forward(&[0.5, -1.0, 7.0]).unwrap().as_slice(), &[0.5, -1.0, 7.0]);
    }

    #[test]
    fn one_one_one_hand_value() {
        let y = scalar_net(1.0, 2.0).forward(&[0.5]).unwrap()[0];
        assert!((y - 2.0 * 0.5f64.tanh()).abs() < 1e-15);
        assert!((y - 0.924_234).abs() < 1e-6);
    }

    #[test]
    fn shape_errors() {
        assert!(Mlp::new(vec![Layer::zeros(2, 3), Layer::zeros(4, 1)]).is_err());
        let net = Mlp::zeros(&[2, 1]).unwrap();
        assert!(matches!(net.forward(&[1.0]), Err(RlError::Dimension { expected: 2, got: 1 })));
        assert!(net.gradient(&[1.0, 2.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn zero_upstream_zero_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = Mlp::random(&[3, 4, 2], 1.0, &mut rng).unwrap();
        assert!(net.gradient(&[0.1, 0.2, 0.3], &[0.0, 0.0]).unwrap().is_zero());
    }

    #[test]
    fn linear_layer_gradient_is_outer_product() {
        let net = Mlp::zeros(&[2, 3]).unwrap();
        let g = net.gradient(&[2.0, -1.0], &[1.0, 0.5, -3.0]).unwrap();
        let expected = DMatrix::from_row_slice(3, 2, &[2.0, -1.0, 1.0, -0.5, -6.0, 3.0]);
        assert_eq!(g.layers[0].weights, expected);
        assert_eq!(g.layers[0].bias.as_slice(), &[1.0, 0.5, -3.0]);
    }

    #[test]
    fn batch_matches_single_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = Mlp::random(&[3, 5, 5, 2], 1.0, &mut rng).unwrap();
        let inputs = DMatrix::from_fn(3, 4, |r, c| (r as f64 - c as f64) * 0.3);
        let ups = DMatrix::from_fn(2, 4, |r, c| 1.0 + r as f64 - 0.5 * c as f64);
        let cache = net.forward_batch(&inputs).unwrap();
        let batch = net.backward(&cache, &ups).unwrap();
        let mut summed = MlpGradient::zeros_like(&net);
        for c in 0..4 {
            let x: Vec<f64> = inputs.column(c).iter().copied().collect();
            let u: Vec<f64> = ups.column(c).iter().copied().collect();
            let y = net.forward(&x).unwrap();
            assert!((cache.output().column(c) - &y).amax() < 1e-14);
            let g = net.gradient(&x, &u).unwrap();
            for (s, l) in summed.layers.iter_mut().zip(&g.layers) {
                s.weights += &l.weights;
                s.bias += &l.bias;
            }
        }
        for (a, b) in batch.layers.iter().zip(&summed.layers) {
            assert!((&a.weights - &b.weights).amax() < 1e-12);
            assert!((&a.bias - &b.bias).amax() < 1e-12);
        }
    }

    #[test]
    fn flatten_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = Mlp::random(&[2, 3, 1], 0.5, &mut rng).unwrap();
        let mut flat = Vec::new();
        net.flatten_into(&mut flat);
        assert_eq!(flat.len(), net.param_count());
        let mut other = Mlp::zeros(&[2, 3, 1]).unwrap();
        assert_eq!(other.load_flat(&flat).unwrap(), flat.len());
        assert_eq!(other, net);
        assert_eq!(Mlp::from_records(&net.to_records()).unwrap(), net);
    }
}
