//! Model parameters, forward/backward passes, SGD update, MC-dropout.

use ndarray::{Array1, Array2, Axis};

use crate::nn::NnError;
use crate::rng::{Prng, DROPOUT_STREAM};

/// One affine layer: `weights` is out x in, ReLU on hidden layers, identity
/// on the 2-logit output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Array2<f64>,
    pub biases: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub layers: Vec<Layer>,
}

impl Model {
    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.ncols()
    }

    /// Class predictions in eval mode; argmax with ties toward class 0.
    pub fn predict(&self, inputs: &Array2<f64>) -> Result<Vec<u8>, NnError> {
        let (logits, _) = forward(self, inputs, 0.0, None)?;
        Ok(logits
            .rows()
            .into_iter()
            .map(|r| u8::from(r[1] > r[0]))
            .collect())
    }

    /// Softmax probability of class 1 per row, eval mode.
    pub fn class1_probabilities(&self, inputs: &Array2<f64>) -> Result<Vec<f64>, NnError> {
        let (logits, _) = forward(self, inputs, 0.0, None)?;
        Ok(class1_probs(&logits))
    }
}

pub(crate) fn class1_probs(logits: &Array2<f64>) -> Vec<f64> {
    logits
        .rows()
        .into_iter()
        .map(|r| {
            let m = r[0].max(r[1]);
            let e0 = (r[0] - m).exp();
            let e1 = (r[1] - m).exp();
            e1 / (e0 + e1)
        })
        .collect()
}

/// Per-parameter partials of the scalar loss; shape-congruent with a Model.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub layers: Vec<(Array2<f64>, Array1<f64>)>,
}

impl Gradients {
    pub fn norm(&self) -> f64 {
        self.layers
            .iter()
            .map(|(w, b)| {
                w.iter().map(|v| v * v).sum::<f64>() + b.iter().map(|v| v * v).sum::<f64>()
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// Weights uniform in [-sqrt(6/fan_in), +sqrt(6/fan_in)] per layer from
/// `prng_from(weight_seed, layer_index)`; biases zero.
pub fn init_model(input_dim: usize, hidden_sizes: &[usize], weight_seed: u64) -> Model {
    assert!(input_dim >= 1, "input_dim must be positive");
    let mut dims = vec![input_dim];
    dims.extend_from_slice(hidden_sizes);
    dims.push(2);
    let layers = dims
        .windows(2)
        .enumerate()
        .map(|(l, pair)| {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let mut rng = Prng::from_parts(weight_seed, l as u64);
            let bound = (6.0 / fan_in as f64).sqrt();
            let weights = Array2::from_shape_fn((fan_out, fan_in), |_| {
                bound * (2.0 * rng.next_uniform() - 1.0)
            });
            Layer {
                weights,
                biases: Array1::zeros(fan_out),
            }
        })
        .collect();
    Model { layers }
}

/// Everything backward needs from a forward pass.
#[derive(Debug)]
pub struct ForwardCache {
    /// Input to each layer (after the previous layer's ReLU and dropout).
    pub inputs: Vec<Array2<f64>>,
    /// Pre-activation of each hidden layer.
    pub preacts: Vec<Array2<f64>>,
    /// Dropout mask per hidden layer; entries are 0 or 1/(1-rate).
    pub masks: Vec<Option<Array2<f64>>>,
    pub logits: Array2<f64>,
}

/// Forward pass. With dropout, each hidden unit is zeroed with probability
/// `dropout_rate` and survivors scaled by 1/(1-rate) (inverted dropout);
/// mask entries are drawn row-major from `dropout_rng`.
pub fn forward(
    model: &Model,
    inputs: &Array2<f64>,
    dropout_rate: f64,
    mut dropout_rng: Option<&mut Prng>,
) -> Result<(Array2<f64>, ForwardCache), NnError> {
    if (dropout_rate > 0.0) != dropout_rng.is_some() {
        return Err(NnError::DropoutRngMismatch);
    }
    let n_layers = model.layers.len();
    let mut cache = ForwardCache {
        inputs: Vec::with_capacity(n_layers),
        preacts: Vec::with_capacity(n_layers - 1),
        masks: Vec::with_capacity(n_layers - 1),
        logits: Array2::zeros((0, 0)),
    };
    let mut act = inputs.clone();
    for (l, layer) in model.layers.iter().enumerate() {
        if act.ncols() != layer.weights.ncols() {
            return Err(NnError::DimensionMismatch {
                layer: l,
                expected: layer.weights.ncols(),
                got: act.ncols(),
            });
        }
        let mut z = act.dot(&layer.weights.t());
        z += &layer.biases;
        cache.inputs.push(act);
        if l + 1 == n_layers {
            cache.logits = z.clone();
            return Ok((z, cache));
        }
        cache.preacts.push(z.clone());
        z.mapv_inplace(|v| v.max(0.0));
        let mask = dropout_rng.as_deref_mut().map(|rng| {
            let scale = 1.0 / (1.0 - dropout_rate);
            Array2::from_shape_fn(z.dim(), |_| {
                if rng.next_uniform() < dropout_rate {
                    0.0
                } else {
                    scale
                }
            })
        });
        if let Some(m) = &mask {
            z *= m;
        }
        cache.masks.push(mask);
        act = z;
    }
    unreachable!("output layer returns inside the loop")
}

/// Exact analytic gradients given dL/dlogits; dropout masks and ReLU gates
/// from the forward pass are respected.
pub fn backward(model: &Model, cache: &ForwardCache, dlogits: &Array2<f64>) -> Gradients {
    let n_layers = model.layers.len();
    let mut grads: Vec<(Array2<f64>, Array1<f64>)> = vec![Default::default(); n_layers];
    let mut dz = dlogits.clone();
    for l in (0..n_layers).rev() {
        let dw = dz.t().dot(&cache.inputs[l]);
        let db = dz.sum_axis(Axis(0));
        grads[l] = (dw, db);
        if l == 0 {
            break;
        }
        // gradient wrt the previous layer's (masked) activation
        let mut dh = dz.dot(&model.layers[l].weights);
        if let Some(mask) = &cache.masks[l - 1] {
            dh *= mask;
        }
        let gate = cache.preacts[l - 1].mapv(|z| f64::from(z > 0.0));
        dh *= &gate;
        dz = dh;
    }
    Gradients { layers: grads }
}

/// theta <- theta - lr * g, elementwise.
pub fn sgd_step(model: &mut Model, grads: &Gradients, learning_rate: f64) {
    for (layer, (dw, db)) in model.layers.iter_mut().zip(&grads.layers) {
        layer.weights.scaled_add(-learning_rate, dw);
        layer.biases.scaled_add(-learning_rate, db);
    }
}

/// Population standard deviation of the class-1 probability per example over
/// `passes` stochastic dropout forward passes.
pub fn mc_dropout_uncertainty(
    model: &Model,
    inputs: &Array2<f64>,
    passes: usize,
    dropout_rate: f64,
    seed: u64,
) -> Result<Vec<f64>, NnError> {
    if !(dropout_rate > 0.0 && dropout_rate < 1.0) || passes < 2 {
        return Err(NnError::BadMcDropout);
    }
    let n = inputs.nrows();
    let mut sum = vec![0.0f64; n];
    let mut sumsq = vec![0.0f64; n];
    let mut rng = Prng::from_parts(seed, DROPOUT_STREAM);
    for _ in 0..passes {
        let (logits, _) = forward(model, inputs, dropout_rate, Some(&mut rng))?;
        for (i, p) in class1_probs(&logits).into_iter().enumerate() {
            sum[i] += p;
            sumsq[i] += p * p;
        }
    }
    let m = passes as f64;
    Ok((0..n)
        .map(|i| {
            let mean = sum[i] / m;
            (sumsq[i] / m - mean * mean).max(0.0).sqrt()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn init_is_deterministic_with_expected_shapes() {
        let a = init_model(10, &[64], 42);
        let b = init_model(10, &[64], 42);
        assert_eq!(a, b);
        assert_eq!(a.layers[0].weights.dim(), (64, 10));
        assert_eq!(a.layers[0].biases.len(), 64);
        assert_eq!(a.layers[1].weights.dim(), (2, 64));
        assert_eq!(a.layers[1].biases.len(), 2);
        assert!(a.layers.iter().all(|l| l.biases.iter().all(|&b| b == 0.0)));
        let bound = (6.0 / 10.0f64).sqrt();
        assert!(a.layers[0].weights.iter().all(|&w| w.abs() <= bound));
        let c = init_model(10, &[64], 43);
        assert_ne!(a, c);
    }

    #[test]
    fn forward_zero_model_gives_half_probs() {
        let model = Model {
            layers: vec![
                Layer {
                    weights: Array2::zeros((3, 2)),
                    biases: Array1::zeros(3),
                },
                Layer {
                    weights: Array2::zeros((2, 3)),
                    biases: Array1::zeros(2),
                },
            ],
        };
        let x = array![[1.0, -2.0], [0.5, 0.25]];
        let (logits, _) = forward(&model, &x, 0.0, None).unwrap();
        assert!(logits.iter().all(|&v| v == 0.0));
        let probs = class1_probs(&logits);
        assert!(probs.iter().all(|&p| (p - 0.5).abs() < 1e-15));
    }

    #[test]
    fn relu_gates_negative_preactivation() {
        // 1-hidden-unit net, Wx < 0 -> hidden activation 0 -> logits = biases
        let model = Model {
            layers: vec![
                Layer {
                    weights: array![[1.0, 1.0]],
                    biases: Array1::zeros(1),
                },
                Layer {
                    weights: array![[3.0], [-3.0]],
                    biases: array![0.5, 0.25],
                },
            ],
        };
        let x = array![[-1.0, -2.0]];
        let (logits, cache) = forward(&model, &x, 0.0, None).unwrap();
        assert_eq!(cache.preacts[0][(0, 0)], -3.0);
        assert_eq!(logits[(0, 0)], 0.5);
        assert_eq!(logits[(0, 1)], 0.25);
    }

    #[test]
    fn forward_dimension_mismatch_names_layer() {
        let model = init_model(4, &[3], 0);
        let x = Array2::zeros((2, 5));
        match forward(&model, &x, 0.0, None) {
            Err(NnError::DimensionMismatch { layer, expected, got }) => {
                assert_eq!((layer, expected, got), (0, 4, 5));
            }
            other => panic!("expected mismatch, got {other:?}"),
        }
    }

    #[test]
    fn dropout_rng_contract() {
        let model = init_model(3, &[4], 0);
        let x = Array2::zeros((1, 3));
        assert!(matches!(
            forward(&model, &x, 0.5, None),
            Err(NnError::DropoutRngMismatch)
        ));
        let mut rng = Prng::from_parts(0, DROPOUT_STREAM);
        assert!(matches!(
            forward(&model, &x, 0.0, Some(&mut rng)),
            Err(NnError::DropoutRngMismatch)
        ));
    }

    #[test]
    fn inverted_dropout_preserves_expectation() {
        // averaging >= 1e4 masks recovers the unmasked hidden vector within 1%
        let model = init_model(5, &[8], 3);
        let x = Array2::from_shape_fn((1, 5), |(_, j)| 0.3 + j as f64 * 0.1);
        let (_, clean) = forward(&model, &x, 0.0, None).unwrap();
        let clean_hidden: Vec<f64> = clean.preacts[0].iter().map(|&z| z.max(0.0)).collect();
        let mut rng = Prng::from_parts(7, DROPOUT_STREAM);
        let mut acc = vec![0.0; clean_hidden.len()];
        let trials = 60_000;
        for _ in 0..trials {
            let (_, cache) = forward(&model, &x, 0.3, Some(&mut rng)).unwrap();
            let masked = cache.preacts[0].mapv(|z| z.max(0.0)) * cache.masks[0].as_ref().unwrap();
            for (a, &m) in acc.iter_mut().zip(masked.iter()) {
                *a += m;
            }
        }
        for (a, &h) in acc.iter().zip(&clean_hidden) {
            let mean = a / trials as f64;
            if h > 1e-9 {
                assert!((mean - h).abs() / h < 0.01, "mean {mean} vs {h}");
            }
        }
    }

    #[test]
    fn sgd_step_cases() {
        let mut model = init_model(2, &[2], 1);
        let zero_grads = Gradients {
            layers: model
                .layers
                .iter()
                .map(|l| {
                    (
                        Array2::zeros(l.weights.dim()),
                        Array1::zeros(l.biases.len()),
                    )
                })
                .collect(),
        };
        let before = model.clone();
        sgd_step(&mut model, &zero_grads, 0.5);
        assert_eq!(model, before);

        // single scalar param: theta=1, g=2, lr=0.1 -> 0.8
        let mut tiny = Model {
            layers: vec![Layer {
                weights: array![[1.0]],
                biases: array![0.0],
            }],
        };
        let g = Gradients {
            layers: vec![(array![[2.0]], array![0.0])],
        };
        sgd_step(&mut tiny, &g, 0.1);
        assert!((tiny.layers[0].weights[(0, 0)] - 0.8).abs() < 1e-15);
        sgd_step(&mut tiny, &g, 0.0);
        assert!((tiny.layers[0].weights[(0, 0)] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn mc_dropout_zero_model_and_determinism() {
        let model = Model {
            layers: vec![
                Layer {
                    weights: Array2::zeros((3, 2)),
                    biases: Array1::zeros(3),
                },
                Layer {
                    weights: Array2::zeros((2, 3)),
                    biases: Array1::zeros(2),
                },
            ],
        };
        let x = array![[1.0, 2.0], [0.0, -1.0]];
        let stds = mc_dropout_uncertainty(&model, &x, 50, 0.5, 9).unwrap();
        assert!(stds.iter().all(|&s| s == 0.0));
        let again = mc_dropout_uncertainty(&model, &x, 50, 0.5, 9).unwrap();
        assert_eq!(stds, again);
        assert!(mc_dropout_uncertainty(&model, &x, 50, 0.0, 9).is_err());
        assert!(mc_dropout_uncertainty(&model, &x, 1, 0.5, 9).is_err());
    }

    #[test]
    fn mc_dropout_two_point_distribution() {
        // one hidden unit dropped w.p. 0.5 toggles p between two values;
        // std converges to |p_a - p_b| / 2
        let model = Model {
            layers: vec![
                Layer {
                    weights: array![[1.0]],
                    biases: array![0.0],
                },
                Layer {
                    weights: array![[1.0], [-1.0]],
                    biases: array![0.0, 0.0],
                },
            ],
        };
        let x = array![[1.0]];
        // kept (scale 2): h=2 -> logits (2,-2), p1 = sigmoid(-4)
        // dropped: h=0 -> p1 = 0.5
        let p_a = 1.0 / (1.0 + 4.0f64.exp());
        let p_b = 0.5;
        let expected = (p_a - p_b).abs() / 2.0;
        let passes = 10_000;
        let stds = mc_dropout_uncertainty(&model, &x, passes, 0.5, 11).unwrap();
        // 3 sigma binomial tolerance on the two-point std
        let sigma = (p_b - p_a).abs() / 2.0 / (passes as f64).sqrt() * 3.0 * 2.0;
        assert!(
            (stds[0] - expected).abs() < sigma.max(1e-3),
            "std {} expected {expected}",
            stds[0]
        );
    }
}
