//! Mini-batch Adam training of the hedging network, with early stopping on
//! the validation loss and a finite-difference gradient checker.

use super::{FeatureSet, Mlp, NetConfig, Standardizer, TrainedNet};
use crate::datapipe::SampleTable;
use crate::error::{Error, Result};
use crate::hedgers::regression_target;
use crate::Scalar;
use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

/// Optimization hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: Scalar,
    pub batch_size: usize,
    pub epochs: u32,
    /// L2 penalty on the weights (biases are not penalized).
    pub l2_alpha: Scalar,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(l2_alpha: Scalar, seed: u64) -> Self {
        TrainConfig { learning_rate: 1e-4, batch_size: 64, epochs: 300, l2_alpha, seed }
    }

    fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0
            || self.batch_size == 0
            || self.epochs == 0
            || self.l2_alpha < 0.0
        {
            return Err(Error::Config("training hyperparameters must be positive".into()));
        }
        Ok(())
    }
}

/// One epoch of the loss history. Losses are the data term only, on the
/// normalized price scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: u32,
    pub train_loss: Scalar,
    pub val_loss: Scalar,
}

/// Feature matrix plus hedging targets of one table.
struct Prepared {
    feats: Array2<Scalar>,
    x: Vec<Scalar>,
    y: Vec<Scalar>,
    cp: Vec<Scalar>,
}

fn prepare(table: &SampleTable, fs: FeatureSet) -> Result<Prepared> {
    let n = table.len();
    let d = fs.input_dim();
    let mut feats = Array2::zeros((n, d));
    let mut x = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut cp = vec![0.0; n];
    let mut row = vec![0.0; d];
    for (i, sample) in table.rows.iter().enumerate() {
        fs.extract(sample, &mut row);
        for j in 0..d {
            feats[[i, j]] = row[j];
        }
        let (xt, yt) = regression_target(sample, table.horizon)?;
        x[i] = xt;
        y[i] = yt;
        cp[i] = Scalar::from(sample.cp_flag);
    }
    Ok(Prepared { feats, x, y, cp })
}

fn standardize_in_place(feats: &mut Array2<Scalar>, std: &Standardizer) {
    for j in 0..feats.ncols() {
        let (m, s) = (std.mean[j], std.std[j]);
        for v in feats.column_mut(j).iter_mut() {
            *v = (*v - m) / s;
        }
    }
}

/// Gradients (and value) of the batch loss
/// mean((clamp(net(f)) - cp) x - y)^2 + alpha ||W||^2.
struct BatchGrad {
    loss_data: Scalar,
    d_weights: Vec<Array2<Scalar>>,
    d_biases: Vec<Array1<Scalar>>,
    dead_clamp: u64,
}

fn batch_gradients(
    mlp: &Mlp,
    feats: &Array2<Scalar>,
    x: &[Scalar],
    y: &[Scalar],
    cp: &[Scalar],
    alpha: Scalar,
) -> BatchGrad {
    let b = feats.nrows();
    let bf = b as Scalar;

    // Forward.
    let mut z1 = mlp.biases[0].broadcast((b, mlp.biases[0].len())).unwrap().to_owned();
    general_mat_mul(1.0, feats, &mlp.weights[0], 1.0, &mut z1);
    let a1 = z1.mapv(|v| v.max(0.0));
    let mut z2 = mlp.biases[1].broadcast((b, mlp.biases[1].len())).unwrap().to_owned();
    general_mat_mul(1.0, &a1, &mlp.weights[1], 1.0, &mut z2);
    let a2 = z2.mapv(|v| v.max(0.0));
    let mut z3 = mlp.biases[2].broadcast((b, 1)).unwrap().to_owned();
    general_mat_mul(1.0, &a2, &mlp.weights[2], 1.0, &mut z3);

    // Loss and output gradient through the clamp.
    let mut g3 = Array2::zeros((b, 1));
    let mut loss = 0.0;
    let mut dead = 0u64;
    for i in 0..b {
        let raw = z3[[i, 0]];
        let clamped = raw.clamp(0.0, 1.0);
        let delta = clamped - cp[i];
        let err = delta * x[i] - y[i];
        loss += err * err;
        let active = raw > 0.0 && raw < 1.0;
        if active {
            g3[[i, 0]] = 2.0 * err * x[i] / bf;
        } else {
            dead += 1;
        }
    }
    loss /= bf;

    // Backward.
    let mut d_w3 = Array2::zeros(mlp.weights[2].raw_dim());
    general_mat_mul(1.0, &a2.t().to_owned(), &g3, 0.0, &mut d_w3);
    let d_b3 = Array1::from_vec(vec![g3.sum()]);

    let mut g2 = Array2::zeros((b, mlp.weights[1].ncols()));
    general_mat_mul(1.0, &g3, &mlp.weights[2].t().to_owned(), 0.0, &mut g2);
    g2.zip_mut_with(&z2, |g, z| {
        if *z <= 0.0 {
            *g = 0.0;
        }
    });
    let mut d_w2 = Array2::zeros(mlp.weights[1].raw_dim());
    general_mat_mul(1.0, &a1.t().to_owned(), &g2, 0.0, &mut d_w2);
    let d_b2 = g2.sum_axis(ndarray::Axis(0));

    let mut g1 = Array2::zeros((b, mlp.weights[0].ncols()));
    general_mat_mul(1.0, &g2, &mlp.weights[1].t().to_owned(), 0.0, &mut g1);
    g1.zip_mut_with(&z1, |g, z| {
        if *z <= 0.0 {
            *g = 0.0;
        }
    });
    let mut d_w1 = Array2::zeros(mlp.weights[0].raw_dim());
    general_mat_mul(1.0, &feats.t().to_owned(), &g1, 0.0, &mut d_w1);
    let d_b1 = g1.sum_axis(ndarray::Axis(0));

    let mut d_weights = vec![d_w1, d_w2, d_w3];
    for (dw, w) in d_weights.iter_mut().zip(&mlp.weights) {
        dw.zip_mut_with(w, |d, w| *d += 2.0 * alpha * w);
    }

    BatchGrad { loss_data: loss, d_weights, d_biases: vec![d_b1, d_b2, d_b3], dead_clamp: dead }
}

/// Data-term loss over a whole prepared set, evaluated in chunks.
fn dataset_loss(mlp: &Mlp, prep: &Prepared) -> Scalar {
    let n = prep.feats.nrows();
    let mut acc = 0.0;
    let chunk = 4096;
    let mut start = 0;
    while start < n {
        let end = (start + chunk).min(n);
        let feats = prep.feats.slice(s![start..end, ..]);
        let b = end - start;
        let mut z1 = mlp.biases[0].broadcast((b, mlp.biases[0].len())).unwrap().to_owned();
        general_mat_mul(1.0, &feats.to_owned(), &mlp.weights[0], 1.0, &mut z1);
        let a1 = z1.mapv(|v| v.max(0.0));
        let mut z2 = mlp.biases[1].broadcast((b, mlp.biases[1].len())).unwrap().to_owned();
        general_mat_mul(1.0, &a1, &mlp.weights[1], 1.0, &mut z2);
        let a2 = z2.mapv(|v| v.max(0.0));
        let mut z3 = mlp.biases[2].broadcast((b, 1)).unwrap().to_owned();
        general_mat_mul(1.0, &a2, &mlp.weights[2], 1.0, &mut z3);
        for i in 0..b {
            let delta = z3[[i, 0]].clamp(0.0, 1.0) - prep.cp[start + i];
            let err = delta * prep.x[start + i] - prep.y[start + i];
            acc += err * err;
        }
        start = end;
    }
    acc / n as Scalar
}

struct Adam {
    m_w: Vec<Array2<Scalar>>,
    v_w: Vec<Array2<Scalar>>,
    m_b: Vec<Array1<Scalar>>,
    v_b: Vec<Array1<Scalar>>,
    t: u64,
}

const ADAM_BETA1: Scalar = 0.9;
const ADAM_BETA2: Scalar = 0.999;
const ADAM_EPS: Scalar = 1e-8;
/// Moment estimates of parameters with (near-)zero gradients decay
/// geometrically into the subnormal range, where arithmetic is orders of
/// magnitude slower; flushing them to exact zero leaves the updates
/// unchanged at working precision.
const MOMENT_FLUSH: Scalar = 1e-300;

#[inline]
fn flush_tiny(v: Scalar) -> Scalar {
    if v.abs() < MOMENT_FLUSH {
        0.0
    } else {
        v
    }
}

impl Adam {
    fn new(mlp: &Mlp) -> Self {
        Adam {
            m_w: mlp.weights.iter().map(|w| Array2::zeros(w.raw_dim())).collect(),
            v_w: mlp.weights.iter().map(|w| Array2::zeros(w.raw_dim())).collect(),
            m_b: mlp.biases.iter().map(|b| Array1::zeros(b.len())).collect(),
            v_b: mlp.biases.iter().map(|b| Array1::zeros(b.len())).collect(),
            t: 0,
        }
    }

    fn step(&mut self, mlp: &mut Mlp, grad: &BatchGrad, lr: Scalar) {
        self.t += 1;
        let bc1 = 1.0 - ADAM_BETA1.powi(self.t as i32);
        let bc2 = 1.0 - ADAM_BETA2.powi(self.t as i32);
        for k in 0..mlp.weights.len() {
            let (m, v) = (&mut self.m_w[k], &mut self.v_w[k]);
            ndarray::Zip::from(&mut mlp.weights[k])
                .and(m)
                .and(v)
                .and(&grad.d_weights[k])
                .for_each(|w, m, v, g| {
                    *m = flush_tiny(ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g);
                    *v = flush_tiny(ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g);
                    *w -= lr * (*m / bc1) / ((*v / bc2).sqrt() + ADAM_EPS);
                });
            let (m, v) = (&mut self.m_b[k], &mut self.v_b[k]);
            ndarray::Zip::from(&mut mlp.biases[k])
                .and(m)
                .and(v)
                .and(&grad.d_biases[k])
                .for_each(|w, m, v, g| {
                    *m = flush_tiny(ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g);
                    *v = flush_tiny(ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g);
                    *w -= lr * (*m / bc1) / ((*v / bc2).sqrt() + ADAM_EPS);
                });
        }
    }
}

/// Train a network on the training table, early-stopping on the validation
/// table: the returned parameters are the epoch snapshot with the smallest
/// validation loss. Batches are reshuffled deterministically per
/// (seed, epoch), so a fixed configuration reproduces its history bit for
/// bit.
pub fn train(
    train_table: &SampleTable,
    val_table: &SampleTable,
    net_cfg: &NetConfig,
    train_cfg: &TrainConfig,
) -> Result<TrainedNet> {
    train_cfg.validate()?;
    if train_table.is_empty() {
        return Err(Error::Config("training set is empty".into()));
    }
    if val_table.is_empty() {
        return Err(Error::Config("validation set is empty".into()));
    }
    let fs = net_cfg.feature_set;
    let mut train_prep = prepare(train_table, fs)?;
    let mut val_prep = prepare(val_table, fs)?;
    let standardizer = Standardizer::fit(&train_prep.feats);
    standardize_in_place(&mut train_prep.feats, &standardizer);
    standardize_in_place(&mut val_prep.feats, &standardizer);

    let dims = [fs.input_dim(), net_cfg.hidden[0], net_cfg.hidden[1], 1];
    let mut init_rng = ChaCha12Rng::seed_from_u64(train_cfg.seed);
    init_rng.set_stream(0);
    let mut mlp = Mlp::xavier_uniform(&dims, &mut init_rng);
    let mut adam = Adam::new(&mlp);

    let n = train_prep.feats.nrows();
    let d = fs.input_dim();
    let bs = train_cfg.batch_size;
    let mut order: Vec<usize> = (0..n).collect();
    let mut batch_feats = Array2::zeros((bs, d));
    let mut batch_x = vec![0.0; bs];
    let mut batch_y = vec![0.0; bs];
    let mut batch_cp = vec![0.0; bs];

    let mut history = Vec::with_capacity(train_cfg.epochs as usize);
    let mut best: Option<(Scalar, u32, Mlp)> = None;
    let mut dead_clamp_updates = 0u64;

    for epoch in 0..train_cfg.epochs {
        // Deterministic reshuffle per (seed, epoch).
        let mut rng = ChaCha12Rng::seed_from_u64(train_cfg.seed);
        rng.set_stream(epoch as u64 + 1);
        for i in (1..n).rev() {
            let j = rand::Rng::gen_range(&mut rng, 0..=i);
            order.swap(i, j);
        }

        let mut epoch_loss = 0.0;
        let mut seen = 0usize;
        let mut start = 0usize;
        while start < n {
            let end = (start + bs).min(n);
            let cur = end - start;
            for (bi, &idx) in order[start..end].iter().enumerate() {
                for j in 0..d {
                    batch_feats[[bi, j]] = train_prep.feats[[idx, j]];
                }
                batch_x[bi] = train_prep.x[idx];
                batch_y[bi] = train_prep.y[idx];
                batch_cp[bi] = train_prep.cp[idx];
            }
            let feats_view = batch_feats.slice(s![..cur, ..]).to_owned();
            let grad = batch_gradients(
                &mlp,
                &feats_view,
                &batch_x[..cur],
                &batch_y[..cur],
                &batch_cp[..cur],
                train_cfg.l2_alpha,
            );
            dead_clamp_updates += grad.dead_clamp;
            epoch_loss += grad.loss_data * cur as Scalar;
            seen += cur;
            adam.step(&mut mlp, &grad, train_cfg.learning_rate);
            start = end;
        }

        let val_loss = dataset_loss(&mlp, &val_prep);
        history.push(EpochStats {
            epoch,
            train_loss: epoch_loss / seen as Scalar,
            val_loss,
        });
        let improved = best.as_ref().map_or(true, |(b, _, _)| val_loss < *b);
        if improved {
            best = Some((val_loss, epoch, mlp.clone()));
        }
    }

    let (_, best_epoch, best_mlp) = best.expect("at least one epoch ran");
    Ok(TrainedNet {
        config: *net_cfg,
        standardizer,
        mlp: best_mlp,
        best_epoch,
        history,
        dead_clamp_updates,
    })
}

/// Smallest distance of any ReLU preactivation to zero, or of the raw
/// output to the clamp boundaries, over a batch. Finite differences are
/// only trustworthy when this margin exceeds the perturbation size.
pub fn kink_margin(net: &TrainedNet, batch: &SampleTable) -> Result<Scalar> {
    let fs = net.config.feature_set;
    let mut prep = prepare(batch, fs)?;
    standardize_in_place(&mut prep.feats, &net.standardizer);
    let mlp = &net.mlp;
    let mut margin = Scalar::INFINITY;
    for i in 0..prep.feats.nrows() {
        let mut cur: Vec<Scalar> = prep.feats.row(i).to_vec();
        let last = mlp.weights.len() - 1;
        for (k, (w, b)) in mlp.weights.iter().zip(&mlp.biases).enumerate() {
            let mut next = vec![0.0; w.ncols()];
            for (j, nj) in next.iter_mut().enumerate() {
                let mut acc = b[j];
                for (ii, ci) in cur.iter().enumerate() {
                    acc += ci * w[[ii, j]];
                }
                if k < last {
                    margin = margin.min(acc.abs());
                    *nj = acc.max(0.0);
                } else {
                    margin = margin.min((acc - 0.0).abs()).min((acc - 1.0).abs());
                    *nj = acc;
                }
            }
            cur = next;
        }
    }
    Ok(margin)
}

/// Compare backpropagation gradients against central finite differences of
/// the full loss over one batch; returns the largest relative error.
pub fn grad_check(net: &TrainedNet, batch: &SampleTable, alpha: Scalar) -> Result<Scalar> {
    if batch.is_empty() {
        return Err(Error::Input("gradient check needs a non-empty batch".into()));
    }
    let fs = net.config.feature_set;
    let mut prep = prepare(batch, fs)?;
    standardize_in_place(&mut prep.feats, &net.standardizer);

    let loss_of = |mlp: &Mlp| -> Scalar {
        dataset_loss(mlp, &prep) + alpha * mlp.squared_weight_norm()
    };
    let grad = batch_gradients(&net.mlp, &prep.feats, &prep.x, &prep.y, &prep.cp, alpha);

    let h = 1e-6;
    let mut worst = 0.0_f64;
    let mut mlp = net.mlp.clone();
    for k in 0..mlp.weights.len() {
        for idx in 0..mlp.weights[k].len() {
            let orig = mlp.weights[k].as_slice_mut().unwrap()[idx];
            mlp.weights[k].as_slice_mut().unwrap()[idx] = orig + h;
            let up = loss_of(&mlp);
            mlp.weights[k].as_slice_mut().unwrap()[idx] = orig - h;
            let down = loss_of(&mlp);
            mlp.weights[k].as_slice_mut().unwrap()[idx] = orig;
            let fd = (up - down) / (2.0 * h);
            let bp = grad.d_weights[k].as_slice().unwrap()[idx];
            let rel = (fd - bp).abs() / fd.abs().max(bp.abs()).max(1e-8);
            worst = worst.max(rel);
        }
        for idx in 0..mlp.biases[k].len() {
            let orig = mlp.biases[k][idx];
            mlp.biases[k][idx] = orig + h;
            let up = loss_of(&mlp);
            mlp.biases[k][idx] = orig - h;
            let down = loss_of(&mlp);
            mlp.biases[k][idx] = orig;
            let fd = (up - down) / (2.0 * h);
            let bp = grad.d_biases[k][idx];
            let rel = (fd - bp).abs() / fd.abs().max(bp.abs()).max(1e-8);
            worst = worst.max(rel);
        }
    }
    Ok(worst)
}
