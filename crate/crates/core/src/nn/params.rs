use rand::Rng;

use crate::env::Action;
use crate::error::NnError;

use super::matrix::Matrix;
use super::scalar::Scalar;

/// Gate blocks, in row order of the stacked LSTM matrices.
pub const GATES: [&str; 4] = ["input", "forget", "cell", "output"];

/// Stacked LSTM weights; rows `[kH, (k+1)H)` belong to gate `GATES[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams<T> {
    pub input_weights: Matrix<T>,
    pub recurrent_weights: Matrix<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> LstmParams<T> {
    pub fn zeros(input_size: usize, hidden_size: usize) -> Self {
        Self {
            input_weights: Matrix::zeros(4 * hidden_size, input_size),
            recurrent_weights: Matrix::zeros(4 * hidden_size, hidden_size),
            bias: vec![T::ZERO; 4 * hidden_size],
        }
    }

    pub fn input_size(&self) -> usize {
        self.input_weights.cols()
    }

    pub fn hidden_size(&self) -> usize {
        self.recurrent_weights.cols()
    }

    pub fn forget_bias(&self) -> &[T] {
        let h = self.hidden_size();
        &self.bias[h..2 * h]
    }
}

/// `q = W·h + b`, one output per action.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearParams<T> {
    pub weights: Matrix<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> LinearParams<T> {
    pub fn zeros(hidden_size: usize) -> Self {
        Self {
            weights: Matrix::zeros(Action::COUNT, hidden_size),
            bias: vec![T::ZERO; Action::COUNT],
        }
    }
}

/// All trainable parameters of one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<T> {
    pub lstm: LstmParams<T>,
    pub head: LinearParams<T>,
}

/// Gradients share the parameter layout.
pub type Gradients<T> = Network<T>;

impl<T: Scalar> Network<T> {
    pub fn zeros(input_size: usize, hidden_size: usize) -> Self {
        Self {
            lstm: LstmParams::zeros(input_size, hidden_size),
            head: LinearParams::zeros(hidden_size),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.input_size(), self.hidden_size())
    }

    pub fn input_size(&self) -> usize {
        self.lstm.input_size()
    }

    pub fn hidden_size(&self) -> usize {
        self.lstm.hidden_size()
    }

    /// Checks internal consistency of all tensor shapes.
    pub fn validate(&self) -> Result<(), NnError> {
        let (d, h) = (self.input_size(), self.hidden_size());
        let checks = [
            ("lstm.input_weights", self.lstm.input_weights.shape(), (4 * h, d)),
            ("lstm.recurrent_weights", self.lstm.recurrent_weights.shape(), (4 * h, h)),
            ("lstm.bias", (self.lstm.bias.len(), 1), (4 * h, 1)),
            ("head.weights", self.head.weights.shape(), (Action::COUNT, h)),
            ("head.bias", (self.head.bias.len(), 1), (Action::COUNT, 1)),
        ];
        for (name, got, want) in checks {
            if got != want {
                return Err(NnError::shape(name, format!("{want:?}"), format!("{got:?}")));
            }
        }
        Ok(())
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.input_size() == other.input_size() && self.hidden_size() == other.hidden_size()
    }

    /// Parameter tensors in canonical order.
    pub fn tensors(&self) -> [&[T]; 5] {
        [
            self.lstm.input_weights.data(),
            self.lstm.recurrent_weights.data(),
            &self.lstm.bias,
            self.head.weights.data(),
            &self.head.bias,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [T]; 5] {
        [
            self.lstm.input_weights.data_mut(),
            self.lstm.recurrent_weights.data_mut(),
            &mut self.lstm.bias,
            self.head.weights.data_mut(),
            &mut self.head.bias,
        ]
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> + '_ {
        self.tensors().into_iter().flat_map(|t| t.iter())
    }

    pub fn to_flat(&self) -> Vec<T> {
        self.iter().copied().collect()
    }

    pub fn load_flat(&mut self, flat: &[T]) -> Result<(), NnError> {
        if flat.len() != self.num_params() {
            return Err(NnError::shape("load_flat", self.num_params(), flat.len()));
        }
        let mut offset = 0;
        for t in self.tensors_mut() {
            let n = t.len();
            t.copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }

    pub fn add_assign(&mut self, other: &Self) -> Result<(), NnError> {
        if !self.same_shape(other) {
            return Err(NnError::shape(
                "Network::add_assign",
                format!("D={} H={}", self.input_size(), self.hidden_size()),
                format!("D={} H={}", other.input_size(), other.hidden_size()),
            ));
        }
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (x, &y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        Ok(())
    }

    pub fn scale(&mut self, factor: T) {
        for t in self.tensors_mut() {
            for x in t.iter_mut() {
                *x *= factor;
            }
        }
    }

    /// Euclidean norm over all parameters, accumulated in f64.
    pub fn norm(&self) -> f64 {
        self.iter()
            .map(|&v| {
                let v = v.to_f64();
                v * v
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }

    pub fn cast<U: Scalar>(&self) -> Network<U> {
        let conv = |v: T| U::from_f64(v.to_f64());
        Network {
            lstm: LstmParams {
                input_weights: self.lstm.input_weights.map(conv),
                recurrent_weights: self.lstm.recurrent_weights.map(conv),
                bias: self.lstm.bias.iter().map(|&v| conv(v)).collect(),
            },
            head: LinearParams {
                weights: self.head.weights.map(conv),
                bias: self.head.bias.iter().map(|&v| conv(v)).collect(),
            },
        }
    }
}

/// Uniform(±1/√fan_in) weights; zero biases except the forget gate at 1.
///
/// The gate units see `input_size + hidden_size` inputs; the head sees
/// `hidden_size`.
pub fn init_params<T: Scalar, R: Rng + ?Sized>(
    rng: &mut R,
    input_size: usize,
    hidden_size: usize,
) -> Network<T> {
    assert!(input_size > 0 && hidden_size > 0, "network sizes must be positive");
    let mut net = Network::zeros(input_size, hidden_size);
    let gate_bound = 1.0 / ((input_size + hidden_size) as f64).sqrt();
    let head_bound = 1.0 / (hidden_size as f64).sqrt();
    let mut fill = |data: &mut [T], bound: f64| {
        for v in data {
            *v = T::from_f64(rng.random_range(-bound..bound));
        }
    };
    fill(net.lstm.input_weights.data_mut(), gate_bound);
    fill(net.lstm.recurrent_weights.data_mut(), gate_bound);
    fill(net.head.weights.data_mut(), head_bound);
    for b in &mut net.lstm.bias[hidden_size..2 * hidden_size] {
        *b = T::ONE;
    }
    net
}
