//! Sigmoid MLP: greedy sparse-autoencoder pretraining, then softmax
//! fine-tuning with mini-batch gradient descent.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extrema::MorphologyClass;
use crate::linalg::{flat, Standardizer};

/// Hidden layer sizes per morphology.
pub fn hidden_sizes(m: MorphologyClass) -> &'static [usize] {
    match m {
        MorphologyClass::M2 => &[170, 85, 42],
        _ => &[128, 64, 32],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NnConfig {
    pub epochs: usize,
    pub pretrain_epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub momentum: f64,
    pub l2: f64,
    /// Target mean activation of autoencoder hidden units.
    pub sparsity_target: f64,
    pub sparsity_weight: f64,
    pub seed: u64,
}

impl Default for NnConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            pretrain_epochs: 50,
            lr: 0.05,
            batch_size: 32,
            momentum: 0.9,
            l2: 1e-4,
            sparsity_target: 0.05,
            sparsity_weight: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    /// `inputs x outputs`.
    #[serde(with = "flat")]
    pub w: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl Dense {
    fn init(inputs: usize, outputs: usize, rng: &mut ChaCha8Rng) -> Self {
        let a = (6.0 / (inputs + outputs) as f64).sqrt();
        Self {
            w: DMatrix::from_fn(inputs, outputs, |_, _| rng.random_range(-a..a)),
            b: DVector::zeros(outputs),
        }
    }

    fn affine(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut z = x * &self.w;
        for mut row in z.row_iter_mut() {
            row += self.b.transpose();
        }
        z
    }

    fn zeros_like(&self) -> Self {
        Self {
            w: DMatrix::zeros(self.w.nrows(), self.w.ncols()),
            b: DVector::zeros(self.b.len()),
        }
    }

    fn axpy(&mut self, a: f64, g: &Dense) {
        self.w += &g.w * a;
        self.b += &g.b * a;
    }
}

fn sigmoid(z: DMatrix<f64>) -> DMatrix<f64> {
    z.map(|v| 1.0 / (1.0 + (-v).exp()))
}

fn softmax_rows(mut z: DMatrix<f64>) -> DMatrix<f64> {
    for mut row in z.row_iter_mut() {
        let m = row.max();
        row.apply(|v| *v = (*v - m).exp());
        let s = row.sum();
        row /= s;
    }
    z
}

fn col_sums(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(m.ncols(), m.column_iter().map(|c| c.sum()))
}

/// Sigmoid hidden layers followed by a softmax output layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub layers: Vec<Dense>,
}

impl Network {
    /// Activations of every layer, input first.
    fn forward(&self, x: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
        let mut acts = vec![x.clone()];
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            let z = l.affine(acts.last().unwrap());
            acts.push(if i == last {
                softmax_rows(z)
            } else {
                sigmoid(z)
            });
        }
        acts
    }

    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        let xm = DMatrix::from_row_slice(1, x.len(), x);
        self.forward(&xm).pop().unwrap().iter().copied().collect()
    }

    /// Mean cross-entropy plus `l2/2 * sum(W^2)` and its gradient.
    pub fn loss_and_grad(&self, x: &DMatrix<f64>, y: &[usize], l2: f64) -> (f64, Vec<Dense>) {
        let n = x.nrows() as f64;
        let acts = self.forward(x);
        let p = acts.last().unwrap();
        let mut loss = 0.0;
        for (i, &c) in y.iter().enumerate() {
            loss -= p[(i, c)].max(1e-300).ln();
        }
        loss /= n;
        loss += 0.5 * l2 * self.layers.iter().map(|l| l.w.norm_squared()).sum::<f64>();

        let mut delta = p.clone();
        for (i, &c) in y.iter().enumerate() {
            delta[(i, c)] -= 1.0;
        }
        delta /= n;
        let mut grads = vec![];
        for k in (0..self.layers.len()).rev() {
            let a_prev = &acts[k];
            let gw = a_prev.transpose() * &delta + &self.layers[k].w * l2;
            let gb = col_sums(&delta);
            if k > 0 {
                let back = &delta * self.layers[k].w.transpose();
                delta = back.component_mul(&a_prev.map(|a| a * (1.0 - a)));
            }
            grads.push(Dense { w: gw, b: gb });
        }
        grads.reverse();
        (loss, grads)
    }
}

/// One autoencoder stage: sigmoid encoder, linear decoder.
#[derive(Debug, Clone, PartialEq)]
pub struct AutoEncoder {
    pub enc: Dense,
    pub dec: Dense,
}

impl AutoEncoder {
    /// `1/(2n) |X^ - X|^2 + l2/2 (|W1|^2 + |W2|^2) + beta * sum KL(rho | rho^_j)`.
    pub fn loss_and_grad(&self, x: &DMatrix<f64>, cfg: &NnConfig) -> (f64, Dense, Dense) {
        let n = x.nrows() as f64;
        let h = sigmoid(self.enc.affine(x));
        let xhat = self.dec.affine(&h);
        let diff = &xhat - x;
        let rho = cfg.sparsity_target;
        let beta = cfg.sparsity_weight;
        let rho_hat = col_sums(&h).map(|v| (v / n).clamp(1e-12, 1.0 - 1e-12));

        let kl: f64 = rho_hat
            .iter()
            .map(|&q| rho * (rho / q).ln() + (1.0 - rho) * ((1.0 - rho) / (1.0 - q)).ln())
            .sum();
        let loss = 0.5 * diff.norm_squared() / n
            + 0.5 * cfg.l2 * (self.enc.w.norm_squared() + self.dec.w.norm_squared())
            + beta * kl;

        let d2 = diff / n;
        let gw2 = h.transpose() * &d2 + &self.dec.w * cfg.l2;
        let gb2 = col_sums(&d2);
        let mut dh = &d2 * self.dec.w.transpose();
        let sparse = rho_hat.map(|q| beta * (-rho / q + (1.0 - rho) / (1.0 - q)) / n);
        for mut row in dh.row_iter_mut() {
            row += sparse.transpose();
        }
        let d1 = dh.component_mul(&h.map(|a| a * (1.0 - a)));
        let gw1 = x.transpose() * &d1 + &self.enc.w * cfg.l2;
        let gb1 = col_sums(&d1);
        (loss, Dense { w: gw1, b: gb1 }, Dense { w: gw2, b: gb2 })
    }
}

fn rows_of(data: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), data.ncols(), |i, j| data[(idx[i], j)])
}

/// Runs mini-batch gradient descent with momentum over `params`.
fn descend<F>(
    params: &mut [Dense],
    n: usize,
    epochs: usize,
    cfg: &NnConfig,
    rng: &mut ChaCha8Rng,
    mut grad: F,
) -> Result<()>
where
    F: FnMut(&[Dense], &[usize]) -> (f64, Vec<Dense>),
{
    let mut vel: Vec<Dense> = params.iter().map(|p| p.zeros_like()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    let bs = cfg.batch_size.max(1);
    for epoch in 0..epochs {
        order.shuffle(rng);
        for batch in order.chunks(bs) {
            let (loss, g) = grad(params, batch);
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss(epoch));
            }
            for ((p, v), g) in params.iter_mut().zip(vel.iter_mut()).zip(&g) {
                v.w *= cfg.momentum;
                v.b *= cfg.momentum;
                v.axpy(-cfg.lr, g);
                p.axpy(1.0, v);
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnModel {
    pub standardizer: Standardizer,
    pub net: Network,
    /// Label of each output unit.
    pub classes: Vec<usize>,
}

impl NnModel {
    pub fn fit(
        rows: &[Vec<f64>],
        labels: &[usize],
        hidden: &[usize],
        cfg: &NnConfig,
    ) -> Result<Self> {
        let mut classes: Vec<usize> = labels.to_vec();
        classes.sort_unstable();
        classes.dedup();
        if classes.len() < 2 {
            return Err(Error::InsufficientData(
                "network needs at least two classes".into(),
            ));
        }
        let standardizer = Standardizer::fit(rows.iter().map(|r| r.as_slice()));
        let d = standardizer.dims();
        let x = DMatrix::from_fn(rows.len(), d, |i, j| {
            (rows[i][j] - standardizer.mean[j]) / standardizer.std[j]
        });
        let y: Vec<usize> = labels
            .iter()
            .map(|l| classes.binary_search(l).unwrap())
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

        // Stage 1: greedy layer-wise autoencoders.
        let mut layers = vec![];
        let mut input = x.clone();
        for &h in hidden {
            let ae = AutoEncoder {
                enc: Dense::init(input.ncols(), h, &mut rng),
                dec: Dense::init(h, input.ncols(), &mut rng),
            };
            let mut params = [ae.enc, ae.dec];
            let data = input.clone();
            descend(
                &mut params,
                data.nrows(),
                cfg.pretrain_epochs,
                cfg,
                &mut rng,
                |p, batch| {
                    let ae = AutoEncoder {
                        enc: p[0].clone(),
                        dec: p[1].clone(),
                    };
                    let (l, g1, g2) = ae.loss_and_grad(&rows_of(&data, batch), cfg);
                    (l, vec![g1, g2])
                },
            )?;
            let [enc, _] = params;
            input = sigmoid(enc.affine(&input));
            layers.push(enc);
        }

        // Stage 2: softmax head and end-to-end fine-tuning.
        layers.push(Dense::init(input.ncols(), classes.len(), &mut rng));
        descend(
            &mut layers,
            x.nrows(),
            cfg.epochs,
            cfg,
            &mut rng,
            |p, batch| {
                let net = Network { layers: p.to_vec() };
                let yb: Vec<usize> = batch.iter().map(|&i| y[i]).collect();
                net.loss_and_grad(&rows_of(&x, batch), &yb, cfg.l2)
            },
        )?;

        Ok(Self {
            standardizer,
            net: Network { layers },
            classes,
        })
    }

    /// Arg-max class and its softmax probability.
    pub fn predict(&self, x: &[f64]) -> (usize, f64) {
        let p = self.net.predict_proba(&self.standardizer.apply(x));
        let (i, &v) = p
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        (self.classes[i], v)
    }
}
