//! A small feed-forward network that outputs a hedging ratio directly.
//!
//! The trainable part maps standardized option features through two hidden
//! ReLU layers (30 nodes each) to a linear output clamped to [0, 1]; puts
//! shift the ratio down by one. A non-trainable replication transform turns
//! the ratio into an end-of-period replication value, so the network can be
//! trained against observed option prices.

mod train;

pub use train::{grad_check, kink_margin, train, EpochStats, TrainConfig};

use crate::datapipe::{Horizon, Sample};
use crate::error::{Error, Result};
use crate::num::Real;
use crate::Scalar;
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

/// Feature sets for the trainable part. Every set also feeds the put/call
/// flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureSet {
    /// Moneyness and root total implied variance.
    MoneynessSigTau,
    /// Delta, vega and inverse root maturity.
    DeltaVegaTau,
    /// Delta, vega, vanna and inverse root maturity.
    DeltaVegaVannaTau,
}

impl FeatureSet {
    pub fn input_dim(self) -> usize {
        match self {
            FeatureSet::MoneynessSigTau => 3,
            FeatureSet::DeltaVegaTau => 4,
            FeatureSet::DeltaVegaVannaTau => 5,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            FeatureSet::MoneynessSigTau => "m_sigtau",
            FeatureSet::DeltaVegaTau => "delta_vega_tau",
            FeatureSet::DeltaVegaVannaTau => "delta_vega_vanna_tau",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "m_sigtau" => Ok(FeatureSet::MoneynessSigTau),
            "delta_vega_tau" => Ok(FeatureSet::DeltaVegaTau),
            "delta_vega_vanna_tau" => Ok(FeatureSet::DeltaVegaVannaTau),
            other => Err(Error::Config(format!("unknown feature set {other:?}"))),
        }
    }

    /// Raw (unstandardized) feature vector of one sample.
    pub fn extract(self, s: &Sample, out: &mut [Scalar]) {
        let cp = Scalar::from(s.cp_flag);
        match self {
            FeatureSet::MoneynessSigTau => {
                out[0] = s.moneyness;
                out[1] = s.sqrt_total_implied_variance;
                out[2] = cp;
            }
            FeatureSet::DeltaVegaTau => {
                out[0] = s.delta_bs;
                out[1] = s.vega_bs;
                out[2] = 1.0 / s.tau.sqrt();
                out[3] = cp;
            }
            FeatureSet::DeltaVegaVannaTau => {
                out[0] = s.delta_bs;
                out[1] = s.vega_bs;
                out[2] = s.vanna_bs;
                out[3] = 1.0 / s.tau.sqrt();
                out[4] = cp;
            }
        }
    }
}

/// Architecture description.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetConfig {
    pub feature_set: FeatureSet,
    pub hidden: [usize; 2],
}

impl NetConfig {
    pub fn new(feature_set: FeatureSet) -> Self {
        NetConfig { feature_set, hidden: [30, 30] }
    }
}

/// Per-feature training-set mean and standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<Scalar>,
    pub std: Vec<Scalar>,
}

impl Standardizer {
    /// Fit on raw feature rows. Zero-variance features (a single-class
    /// table's flag column) get unit scale so the transform stays invertible.
    pub fn fit(rows: &Array2<Scalar>) -> Self {
        let n = rows.nrows().max(1) as Scalar;
        let d = rows.ncols();
        let mut mean = vec![0.0; d];
        let mut std = vec![0.0; d];
        for j in 0..d {
            let col = rows.column(j);
            let m = col.sum() / n;
            let v = col.iter().map(|x| (x - m) * (x - m)).sum::<Scalar>() / n;
            mean[j] = m;
            std[j] = if v.sqrt() > 0.0 { v.sqrt() } else { 1.0 };
        }
        Standardizer { mean, std }
    }

    pub fn apply(&self, raw: &mut [Scalar]) {
        for (j, v) in raw.iter_mut().enumerate() {
            *v = (*v - self.mean[j]) / self.std[j];
        }
    }

    pub fn invert(&self, standardized: &mut [Scalar]) {
        for (j, v) in standardized.iter_mut().enumerate() {
            *v = *v * self.std[j] + self.mean[j];
        }
    }
}

/// Fully-connected network weights. Layer `k` maps through
/// `x W_k + b_k`; all but the last use ReLU.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub weights: Vec<Array2<Scalar>>,
    pub biases: Vec<Array1<Scalar>>,
}

impl Mlp {
    /// Layer widths including input and output, e.g. [4, 30, 30, 1].
    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.weights[0].nrows()];
        d.extend(self.weights.iter().map(|w| w.ncols()));
        d
    }

    pub fn zeros(dims: &[usize]) -> Self {
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for w in dims.windows(2) {
            weights.push(Array2::zeros((w[0], w[1])));
            biases.push(Array1::zeros(w[1]));
        }
        Mlp { weights, biases }
    }

    /// Xavier-uniform initialization with bounds sqrt(6/(fan_in+fan_out)).
    pub fn xavier_uniform<R: rand::Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Self {
        let mut net = Mlp::zeros(dims);
        for w in &mut net.weights {
            let limit = (6.0 / (w.nrows() + w.ncols()) as Scalar).sqrt();
            for v in w.iter_mut() {
                *v = Scalar::sample_uniform(rng, -limit, limit);
            }
        }
        net
    }

    /// Raw output of the network for one standardized feature vector,
    /// before clamping.
    pub fn raw_output(&self, features: &[Scalar]) -> Scalar {
        let mut cur: Vec<Scalar> = features.to_vec();
        let last = self.weights.len() - 1;
        for (k, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut next = vec![0.0; w.ncols()];
            for (j, nj) in next.iter_mut().enumerate() {
                let mut acc = b[j];
                for (i, ci) in cur.iter().enumerate() {
                    acc += ci * w[[i, j]];
                }
                *nj = if k < last { acc.max(0.0) } else { acc };
            }
            cur = next;
        }
        cur[0]
    }

    pub fn squared_weight_norm(&self) -> Scalar {
        self.weights.iter().map(|w| w.iter().map(|v| v * v).sum::<Scalar>()).sum()
    }
}

#[derive(Serialize, Deserialize)]
struct LayerData {
    rows: usize,
    cols: usize,
    /// Row-major weight entries.
    weights: Vec<Scalar>,
    bias: Vec<Scalar>,
}

impl Serialize for Mlp {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let layers: Vec<LayerData> = self
            .weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| LayerData {
                rows: w.nrows(),
                cols: w.ncols(),
                weights: w.iter().copied().collect(),
                bias: b.to_vec(),
            })
            .collect();
        layers.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Mlp {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let layers = Vec::<LayerData>::deserialize(deserializer)?;
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in layers {
            let w = Array2::from_shape_vec((l.rows, l.cols), l.weights)
                .map_err(serde::de::Error::custom)?;
            weights.push(w);
            biases.push(Array1::from_vec(l.bias));
        }
        Ok(Mlp { weights, biases })
    }
}

/// End-of-period value of the hedge portfolio implied by an effective
/// hedging ratio: delta S1 + R (C0 - delta S0).
pub fn replication_value(delta: Scalar, s: &Sample, horizon: Horizon) -> Scalar {
    let gross = s.gross_return(horizon);
    delta * s.s1 + gross * (s.c0 - delta * s.s0)
}

/// A trained network with its feature standardizer and training history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedNet {
    pub config: NetConfig,
    pub standardizer: Standardizer,
    pub mlp: Mlp,
    pub best_epoch: u32,
    pub history: Vec<EpochStats>,
    /// Training updates whose raw output sat outside [0, 1], where the
    /// clamp kills the gradient.
    pub dead_clamp_updates: u64,
}

impl TrainedNet {
    /// Clamped network ratio in [0, 1], before the put shift.
    pub fn raw_ratio(&self, sample: &Sample) -> Result<Scalar> {
        if !sample.is_normalized() {
            return Err(Error::Input("network inputs must be normalized".into()));
        }
        let d = self.config.feature_set.input_dim();
        let mut feats = vec![0.0; d];
        self.config.feature_set.extract(sample, &mut feats);
        self.standardizer.apply(&mut feats);
        Ok(self.mlp.raw_output(&feats).clamp(0.0, 1.0))
    }

    /// Effective hedging ratio (puts are shifted down by one).
    pub fn delta(&self, sample: &Sample) -> Result<Scalar> {
        Ok(self.raw_ratio(sample)? - Scalar::from(sample.cp_flag))
    }

    /// Hedging ratio and replication value for one sample.
    pub fn forward(&self, sample: &Sample, horizon: Horizon) -> Result<(Scalar, Scalar)> {
        let delta = self.delta(sample)?;
        Ok((delta, replication_value(delta, sample, horizon)))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::Input(format!("network serialization failed: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::Input(format!("network deserialization failed: {e}")))
    }
}
