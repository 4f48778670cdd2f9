//! The `[1, H, 1]` feedforward network: tanh hidden layer, linear output.
//!
//! Besides evaluation, this module computes per-sample residuals and the
//! analytic Jacobian of residuals with respect to all parameters, which is
//! what the Levenberg-Marquardt trainer consumes. The fixed parameter
//! ordering is `w1[0..H), b1[0..H), w2[0..H), b2`.

use nalgebra::DMatrix;
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dataset::NormParams;
use crate::ingest::SamplePair;

#[derive(Debug, Error)]
pub enum MlpError {
    #[error("hidden layer needs at least one neuron")]
    ZeroHidden,
    #[error("non-finite input {0}")]
    NonFiniteInput(f64),
    #[error("empty sample list")]
    EmptySamples,
    #[error("model file: {0}")]
    BadModelFile(String),
}

/// Weights and biases of a `[1, H, 1]` network.
///
/// `forward(x) = b2 + sum_j w2[j] * tanh(w1[j] * x + b1[j])`
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

impl MlpModel {
    pub fn zeros(hidden: usize) -> Self {
        Self {
            w1: vec![0.0; hidden],
            b1: vec![0.0; hidden],
            w2: vec![0.0; hidden],
            b2: 0.0,
        }
    }

    pub fn hidden_count(&self) -> usize {
        self.w1.len()
    }

    /// Total parameter count `P = 3H + 1`.
    pub fn param_count(&self) -> usize {
        3 * self.hidden_count() + 1
    }

    /// Parameters in the fixed ordering `w1, b1, w2, b2`.
    pub fn flatten(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.param_count());
        p.extend_from_slice(&self.w1);
        p.extend_from_slice(&self.b1);
        p.extend_from_slice(&self.w2);
        p.push(self.b2);
        p
    }

    /// Inverse of [`MlpModel::flatten`].
    ///
    /// Panics if `params.len() != 3 * hidden + 1`.
    pub fn from_params(hidden: usize, params: &[f64]) -> Self {
        assert_eq!(params.len(), 3 * hidden + 1, "parameter vector length");
        Self {
            w1: params[0..hidden].to_vec(),
            b1: params[hidden..2 * hidden].to_vec(),
            w2: params[2 * hidden..3 * hidden].to_vec(),
            b2: params[3 * hidden],
        }
    }

    pub(crate) fn eval(&self, x: f64) -> f64 {
        let mut acc = self.b2;
        for j in 0..self.hidden_count() {
            acc += self.w2[j] * (self.w1[j] * x + self.b1[j]).tanh();
        }
        acc
    }

    /// Evaluate the network on one (finite) input.
    pub fn forward(&self, x: f64) -> Result<f64, MlpError> {
        if !x.is_finite() {
            return Err(MlpError::NonFiniteInput(x));
        }
        Ok(self.eval(x))
    }
}

/// Seeded initialization: every parameter uniform on `[-0.5, 0.5]`.
pub fn init_model(hidden: usize, seed: u64) -> Result<MlpModel, MlpError> {
    if hidden == 0 {
        return Err(MlpError::ZeroHidden);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Uniform::new_inclusive(-0.5, 0.5);
    let p: Vec<f64> = (0..3 * hidden + 1).map(|_| dist.sample(&mut rng)).collect();
    Ok(MlpModel::from_params(hidden, &p))
}

/// Residuals `y_i - forward(x_i)` with their summed and mean squares.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub residuals: Vec<f64>,
    pub sse: f64,
    pub mse: f64,
}

pub fn batch_residuals(
    model: &MlpModel,
    samples: &[SamplePair],
) -> Result<ResidualReport, MlpError> {
    if samples.is_empty() {
        return Err(MlpError::EmptySamples);
    }
    let residuals: Vec<f64> = samples.iter().map(|s| s.y - model.eval(s.x)).collect();
    let sse: f64 = residuals.iter().map(|r| r * r).sum();
    Ok(ResidualReport {
        mse: sse / samples.len() as f64,
        sse,
        residuals,
    })
}

/// Analytic Jacobian of the residuals, one row per sample, one column per
/// parameter in the fixed ordering.
///
/// With `z_j = w1[j] x + b1[j]` and `t_j = tanh(z_j)`:
/// `dr/dw1[j] = -w2[j] (1 - t_j^2) x`, `dr/db1[j] = -w2[j] (1 - t_j^2)`,
/// `dr/dw2[j] = -t_j`, `dr/db2 = -1`.
pub fn jacobian(model: &MlpModel, samples: &[SamplePair]) -> Result<DMatrix<f64>, MlpError> {
    if samples.is_empty() {
        return Err(MlpError::EmptySamples);
    }
    let h = model.hidden_count();
    let p = model.param_count();
    let mut j = DMatrix::zeros(samples.len(), p);
    for (i, s) in samples.iter().enumerate() {
        for k in 0..h {
            let t = (model.w1[k] * s.x + model.b1[k]).tanh();
            let sech2 = 1.0 - t * t;
            j[(i, k)] = -model.w2[k] * sech2 * s.x;
            j[(i, h + k)] = -model.w2[k] * sech2;
            j[(i, 2 * h + k)] = -t;
        }
        j[(i, 3 * h)] = -1.0;
    }
    Ok(j)
}

/// A model bundled with the normalization it was trained under, as stored in
/// the model file.
#[derive(Debug, Clone, PartialEq)]
pub struct SavedModel {
    pub model: MlpModel,
    pub norm: NormParams,
}

const MODEL_MAGIC: &str = "maintlm-model v1";

/// Serialize a model plus its normalization to the text model format.
///
/// Parameters are written as shortest round-trip decimals, so loading
/// reproduces them bit-exactly.
pub fn write_model(model: &MlpModel, norm: &NormParams) -> String {
    let params: Vec<String> = model.flatten().iter().map(|v| format!("{v}")).collect();
    format!(
        "{MODEL_MAGIC}\nH={}\n{} {} {} {}\n{}\n",
        model.hidden_count(),
        norm.x_min,
        norm.x_max,
        norm.y_min,
        norm.y_max,
        params.join(" ")
    )
}

pub fn read_model(text: &str) -> Result<SavedModel, MlpError> {
    let bad = |msg: &str| MlpError::BadModelFile(msg.to_string());
    let mut lines = text.lines();
    if lines.next() != Some(MODEL_MAGIC) {
        return Err(bad("bad magic line"));
    }
    let h: usize = lines
        .next()
        .and_then(|l| l.strip_prefix("H="))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| bad("bad H line"))?;
    if h == 0 {
        return Err(MlpError::ZeroHidden);
    }
    let norm_vals: Vec<f64> = lines
        .next()
        .ok_or_else(|| bad("missing normalization line"))?
        .split_whitespace()
        .map(|v| v.parse::<f64>().map_err(|_| bad("bad normalization value")))
        .collect::<Result<_, _>>()?;
    let [x_min, x_max, y_min, y_max] = norm_vals[..] else {
        return Err(bad("normalization line needs 4 values"));
    };
    let norm = NormParams::new(x_min, x_max, y_min, y_max)
        .map_err(|e| bad(&format!("invalid normalization: {e}")))?;
    let params: Vec<f64> = lines
        .next()
        .ok_or_else(|| bad("missing parameter line"))?
        .split_whitespace()
        .map(|v| v.parse::<f64>().map_err(|_| bad("bad parameter value")))
        .collect::<Result<_, _>>()?;
    if params.len() != 3 * h + 1 {
        return Err(bad("parameter count does not match H"));
    }
    if params.iter().any(|v| !v.is_finite()) {
        return Err(bad("non-finite parameter"));
    }
    Ok(SavedModel {
        model: MlpModel::from_params(h, &params),
        norm,
    })
}
