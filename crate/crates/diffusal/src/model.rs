//! Committee classifier over diffused features.
//!
//! Each committee member applies its own dropout-regularized linear layer
//! with ReLU; member outputs are summed into a shared latent that feeds one
//! softmax head. Training is full-batch Adam with early stopping on
//! validation accuracy.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{FeatureMatrix, LabelVector};

#[derive(Debug, Clone, PartialEq)]
pub struct QbcConfig {
    /// Committee size.
    pub members: usize,
    /// Hidden width of each member.
    pub hidden: usize,
    /// Dropout probability on inputs and member activations.
    pub dropout: f64,
    pub learning_rate: f64,
    /// L2 coefficient; the loss carries `weight_decay / 2 * ||theta||^2`.
    pub weight_decay: f64,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping. Zero stops
    /// after the first epoch.
    pub patience: usize,
    pub seed: u64,
}

impl Default for QbcConfig {
    fn default() -> Self {
        QbcConfig {
            members: 5,
            hidden: 16,
            dropout: 0.5,
            learning_rate: 0.01,
            weight_decay: 5e-4,
            max_epochs: 300,
            patience: 20,
            seed: 0,
        }
    }
}

impl QbcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.members == 0 {
            return Err(Error::InvalidConfig("members must be positive".into()));
        }
        if self.hidden == 0 {
            return Err(Error::InvalidConfig("hidden must be positive".into()));
        }
        if !(self.dropout >= 0.0 && self.dropout < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "dropout {} outside [0, 1)",
                self.dropout
            )));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "learning_rate {} must be positive",
                self.learning_rate
            )));
        }
        if self.weight_decay < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "weight_decay {} must be non-negative",
                self.weight_decay
            )));
        }
        if self.max_epochs == 0 {
            return Err(Error::InvalidConfig("max_epochs must be positive".into()));
        }
        Ok(())
    }
}

/// All trainable tensors, kept in one bundle so snapshots and optimizer
/// state share a fixed flattening order: member weights then biases in
/// member order, then the shared head.
#[derive(Debug, Clone, PartialEq)]
struct ParamSet {
    w1: Vec<Array2<f64>>,
    b1: Vec<Array1<f64>>,
    w2: Array2<f64>,
    b2: Array1<f64>,
}

impl ParamSet {
    fn zeros(members: usize, d: usize, h: usize, c: usize) -> Self {
        ParamSet {
            w1: (0..members).map(|_| Array2::zeros((d, h))).collect(),
            b1: (0..members).map(|_| Array1::zeros(h)).collect(),
            w2: Array2::zeros((h, c)),
            b2: Array1::zeros(c),
        }
    }

    fn len(&self) -> usize {
        self.w1.iter().map(|w| w.len()).sum::<usize>()
            + self.b1.iter().map(|b| b.len()).sum::<usize>()
            + self.w2.len()
            + self.b2.len()
    }

    fn for_each_slice(&self, mut f: impl FnMut(&[f64])) {
        for w in &self.w1 {
            f(w.as_slice().expect("standard layout"));
        }
        for b in &self.b1 {
            f(b.as_slice().expect("standard layout"));
        }
        f(self.w2.as_slice().expect("standard layout"));
        f(self.b2.as_slice().expect("standard layout"));
    }

    fn for_each_slice_mut(&mut self, mut f: impl FnMut(&mut [f64])) {
        for w in &mut self.w1 {
            f(w.as_slice_mut().expect("standard layout"));
        }
        for b in &mut self.b1 {
            f(b.as_slice_mut().expect("standard layout"));
        }
        f(self.w2.as_slice_mut().expect("standard layout"));
        f(self.b2.as_slice_mut().expect("standard layout"));
    }

    fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        self.for_each_slice(|s| out.extend_from_slice(s));
        out
    }

    fn assign_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} parameters, got {}",
                self.len(),
                flat.len()
            )));
        }
        let mut offset = 0usize;
        self.for_each_slice_mut(|s| {
            s.copy_from_slice(&flat[offset..offset + s.len()]);
            offset += s.len();
        });
        Ok(())
    }

    fn sq_norm(&self) -> f64 {
        let mut total = 0.0;
        self.for_each_slice(|s| total += s.iter().map(|v| v * v).sum::<f64>());
        total
    }
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone)]
struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl AdamState {
    fn new(len: usize) -> Self {
        AdamState {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut ParamSet, grads: &ParamSet, lr: f64) {
        self.t += 1;
        let bc1 = 1.0 - ADAM_BETA1.powi(self.t as i32);
        let bc2 = 1.0 - ADAM_BETA2.powi(self.t as i32);
        let g = grads.flatten();
        let mut offset = 0usize;
        params.for_each_slice_mut(|s| {
            for (i, p) in s.iter_mut().enumerate() {
                let gi = g[offset + i];
                let m = &mut self.m[offset + i];
                let v = &mut self.v[offset + i];
                *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * gi;
                *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * gi * gi;
                let m_hat = *m / bc1;
                let v_hat = *v / bc2;
                *p -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
            }
            offset += s.len();
        });
    }
}

/// Per-step dropout masks, pre-scaled by `1 / (1 - p)` (inverted dropout).
struct DropoutMasks {
    input: Array2<f64>,
    hidden: Vec<Array2<f64>>,
}

struct ForwardCache {
    /// Input after shared dropout, reused by every member's backward pass.
    xd: Array2<f64>,
    /// Pre-activation per member.
    z: Vec<Array2<f64>>,
    /// Sum of (dropped) member activations.
    latent: Array2<f64>,
    probs: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs_run: usize,
    pub best_val_accuracy: f64,
    pub final_train_loss: f64,
}

#[derive(Debug, Clone)]
pub struct QbcModel {
    cfg: QbcConfig,
    input_dim: usize,
    num_classes: usize,
    params: ParamSet,
    adam: AdamState,
    rng: ChaCha8Rng,
}

fn softmax_rows(logits: &mut Array2<f64>) {
    for mut row in logits.axis_iter_mut(Axis(0)) {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum: f64 = row.iter().sum();
        row.mapv_inplace(|v| v / sum);
    }
}

/// Shannon entropy in nats; zero probabilities contribute zero.
pub fn shannon_entropy(probs: ArrayView1<f64>) -> f64 {
    probs
        .iter()
        .map(|&p| if p > 0.0 { -p * p.ln() } else { 0.0 })
        .sum()
}

impl QbcModel {
    /// Fresh committee with uniform `[-k, k]` init, `k = 1/sqrt(fan_in)`.
    /// All randomness (init and later dropout) comes from one seeded stream.
    pub fn init(cfg: &QbcConfig, input_dim: usize, num_classes: usize) -> Result<Self> {
        cfg.validate()?;
        if input_dim == 0 || num_classes == 0 {
            return Err(Error::InvalidInput(
                "input_dim and num_classes must be positive".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut uniform = |k: f64| -> f64 { (2.0 * rng.random::<f64>() - 1.0) * k };
        let k1 = 1.0 / (input_dim as f64).sqrt();
        let k2 = 1.0 / (cfg.hidden as f64).sqrt();
        let mut params = ParamSet::zeros(cfg.members, input_dim, cfg.hidden, num_classes);
        for j in 0..cfg.members {
            params.w1[j].mapv_inplace(|_| uniform(k1));
            params.b1[j].mapv_inplace(|_| uniform(k1));
        }
        params.w2.mapv_inplace(|_| uniform(k2));
        params.b2.mapv_inplace(|_| uniform(k2));
        let len = params.len();
        Ok(QbcModel {
            cfg: cfg.clone(),
            input_dim,
            num_classes,
            params,
            adam: AdamState::new(len),
            rng,
        })
    }

    pub fn config(&self) -> &QbcConfig {
        &self.cfg
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn hidden_dim(&self) -> usize {
        self.cfg.hidden
    }

    /// Flat view of all parameters in a stable order.
    pub fn param_vector(&self) -> Vec<f64> {
        self.params.flatten()
    }

    pub fn set_param_vector(&mut self, flat: &[f64]) -> Result<()> {
        self.params.assign_flat(flat)
    }

    fn check_rows(&self, px: &FeatureMatrix, labels: &LabelVector) -> Result<()> {
        if px.ncols() != self.input_dim {
            return Err(Error::InvalidInput(format!(
                "feature dim {} does not match model input dim {}",
                px.ncols(),
                self.input_dim
            )));
        }
        if labels.num_classes != self.num_classes {
            return Err(Error::InvalidInput(format!(
                "label classes {} do not match model classes {}",
                labels.num_classes, self.num_classes
            )));
        }
        if labels.len() != px.nrows() {
            return Err(Error::InvalidInput(format!(
                "{} labels for {} feature rows",
                labels.len(),
                px.nrows()
            )));
        }
        Ok(())
    }

    fn gather(&self, px: &FeatureMatrix, nodes: &[usize]) -> Result<Array2<f64>> {
        if let Some(&bad) = nodes.iter().find(|&&u| u >= px.nrows()) {
            return Err(Error::InvalidInput(format!(
                "node {bad} out of range for {} rows",
                px.nrows()
            )));
        }
        Ok(px.select(Axis(0), nodes))
    }

    fn sample_masks(&mut self, t: usize) -> Option<DropoutMasks> {
        let p = self.cfg.dropout;
        if p == 0.0 {
            return None;
        }
        let scale = 1.0 / (1.0 - p);
        let (d, h, members) = (self.input_dim, self.cfg.hidden, self.cfg.members);
        let rng = &mut self.rng;
        let mut draw = |rows: usize, cols: usize| -> Array2<f64> {
            let mut mask = Array2::<f64>::zeros((rows, cols));
            mask.mapv_inplace(|_| if rng.random::<f64>() >= p { scale } else { 0.0 });
            mask
        };
        let input = draw(t, d);
        let hidden = (0..members).map(|_| draw(t, h)).collect();
        Some(DropoutMasks { input, hidden })
    }

    fn forward_cache(&self, x: &Array2<f64>, masks: Option<&DropoutMasks>) -> ForwardCache {
        let xd = match masks {
            Some(m) => x * &m.input,
            None => x.clone(),
        };
        let t = x.nrows();
        let mut latent = Array2::<f64>::zeros((t, self.cfg.hidden));
        let mut z = Vec::with_capacity(self.cfg.members);
        for j in 0..self.cfg.members {
            let zj = xd.dot(&self.params.w1[j]) + &self.params.b1[j];
            let mut hj = zj.mapv(|v| v.max(0.0));
            if let Some(m) = masks {
                hj *= &m.hidden[j];
            }
            latent += &hj;
            z.push(zj);
        }
        let mut probs = latent.dot(&self.params.w2) + &self.params.b2;
        softmax_rows(&mut probs);
        ForwardCache {
            xd,
            z,
            latent,
            probs,
        }
    }

    /// Class probabilities for `nodes` with dropout disabled.
    pub fn predict_proba(&self, px: &FeatureMatrix, nodes: &[usize]) -> Result<Array2<f64>> {
        let x = self.gather(px, nodes)?;
        Ok(self.forward_cache(&x, None).probs)
    }

    /// Summed member activations with dropout disabled, for all nodes.
    pub fn latents(&self, px: &FeatureMatrix) -> Result<Array2<f64>> {
        if px.ncols() != self.input_dim {
            return Err(Error::InvalidInput(format!(
                "feature dim {} does not match model input dim {}",
                px.ncols(),
                self.input_dim
            )));
        }
        let mut latent = Array2::<f64>::zeros((px.nrows(), self.cfg.hidden));
        for j in 0..self.cfg.members {
            let zj = px.dot(&self.params.w1[j]) + &self.params.b1[j];
            latent += &zj.mapv(|v| v.max(0.0));
        }
        Ok(latent)
    }

    /// Cross-entropy plus L2 on the given rows; `masks` must cover them.
    fn loss_grads(
        &self,
        x: &Array2<f64>,
        y: &[usize],
        masks: Option<&DropoutMasks>,
    ) -> (f64, ParamSet) {
        let t = x.nrows();
        let cache = self.forward_cache(x, masks);
        let mut ce = 0.0;
        for (i, &yi) in y.iter().enumerate() {
            ce -= cache.probs[[i, yi]].ln();
        }
        ce /= t as f64;
        let wd = self.cfg.weight_decay;
        let loss = ce + 0.5 * wd * self.params.sq_norm();

        // dL/dlogits = (probs - onehot) / t
        let mut dlogits = cache.probs.clone();
        for (i, &yi) in y.iter().enumerate() {
            dlogits[[i, yi]] -= 1.0;
        }
        dlogits.mapv_inplace(|v| v / t as f64);

        let mut grads = ParamSet::zeros(
            self.cfg.members,
            self.input_dim,
            self.cfg.hidden,
            self.num_classes,
        );
        grads.w2 = cache.latent.t().dot(&dlogits) + &(wd * &self.params.w2);
        grads.b2 = dlogits.sum_axis(Axis(0)) + &(wd * &self.params.b2);
        let dlatent = dlogits.dot(&self.params.w2.t());
        for j in 0..self.cfg.members {
            let mut dz = match masks {
                Some(m) => &dlatent * &m.hidden[j],
                None => dlatent.clone(),
            };
            dz.zip_mut_with(&cache.z[j], |g, &zv| {
                if zv <= 0.0 {
                    *g = 0.0;
                }
            });
            grads.w1[j] = cache.xd.t().dot(&dz) + &(wd * &self.params.w1[j]);
            grads.b1[j] = dz.sum_axis(Axis(0)) + &(wd * &self.params.b1[j]);
        }
        (loss, grads)
    }

    /// Loss and flat gradient with dropout disabled; pairs with
    /// [`param_vector`](Self::param_vector) for finite-difference checks.
    pub fn loss_and_gradient(
        &self,
        px: &FeatureMatrix,
        labels: &LabelVector,
        nodes: &[usize],
    ) -> Result<(f64, Vec<f64>)> {
        self.check_rows(px, labels)?;
        if nodes.is_empty() {
            return Err(Error::InvalidInput("empty node set".into()));
        }
        let x = self.gather(px, nodes)?;
        let y: Vec<usize> = nodes.iter().map(|&u| labels.labels[u]).collect();
        let (loss, grads) = self.loss_grads(&x, &y, None);
        Ok((loss, grads.flatten()))
    }

    /// Regularized eval-mode loss on `nodes`.
    pub fn loss(
        &self,
        px: &FeatureMatrix,
        labels: &LabelVector,
        nodes: &[usize],
    ) -> Result<f64> {
        self.loss_and_gradient(px, labels, nodes).map(|(l, _)| l)
    }

    /// One full-batch gradient step on `train_nodes`; returns the loss at
    /// the pre-update parameters. Dropout masks come from the model's own
    /// stream, so two clones stepped identically stay identical.
    pub fn train_one_epoch(
        &mut self,
        px: &FeatureMatrix,
        labels: &LabelVector,
        train_nodes: &[usize],
    ) -> Result<f64> {
        self.check_rows(px, labels)?;
        if train_nodes.is_empty() {
            return Err(Error::InvalidInput("empty training set".into()));
        }
        let x = self.gather(px, train_nodes)?;
        let y: Vec<usize> = train_nodes.iter().map(|&u| labels.labels[u]).collect();
        let masks = self.sample_masks(x.nrows());
        let (loss, grads) = self.loss_grads(&x, &y, masks.as_ref());
        self.adam
            .step(&mut self.params, &grads, self.cfg.learning_rate);
        Ok(loss)
    }

    /// Full training run: fresh optimizer state, early stopping on
    /// validation accuracy, best-validation parameters restored at the end.
    pub fn train_full(
        &mut self,
        px: &FeatureMatrix,
        labels: &LabelVector,
        train_nodes: &[usize],
        val_nodes: &[usize],
    ) -> Result<TrainReport> {
        self.check_rows(px, labels)?;
        if train_nodes.is_empty() {
            return Err(Error::InvalidInput("empty training set".into()));
        }
        if val_nodes.is_empty() {
            return Err(Error::InvalidInput("empty validation set".into()));
        }
        let train_set: std::collections::HashSet<usize> = train_nodes.iter().copied().collect();
        if val_nodes.iter().any(|u| train_set.contains(u)) {
            return Err(Error::InvalidInput(
                "validation nodes overlap the training set".into(),
            ));
        }
        let x = self.gather(px, train_nodes)?;
        let y: Vec<usize> = train_nodes.iter().map(|&u| labels.labels[u]).collect();
        self.adam = AdamState::new(self.params.len());

        let mut best_params = self.params.clone();
        let mut best_acc = f64::NEG_INFINITY;
        let mut bad_epochs = 0usize;
        let mut epochs_run = 0usize;
        for _ in 0..self.cfg.max_epochs {
            let masks = self.sample_masks(x.nrows());
            let (_, grads) = self.loss_grads(&x, &y, masks.as_ref());
            self.adam
                .step(&mut self.params, &grads, self.cfg.learning_rate);
            epochs_run += 1;
            let val_acc = self.accuracy(px, labels, val_nodes)?;
            if val_acc > best_acc {
                best_acc = val_acc;
                best_params = self.params.clone();
                bad_epochs = 0;
            } else {
                bad_epochs += 1;
            }
            if bad_epochs >= self.cfg.patience {
                break;
            }
        }
        self.params = best_params;
        let final_train_loss = {
            let (loss, _) = self.loss_grads(&x, &y, None);
            loss
        };
        Ok(TrainReport {
            epochs_run,
            best_val_accuracy: best_acc,
            final_train_loss,
        })
    }

    /// Fraction of `nodes` whose argmax prediction matches the label; ties
    /// resolve to the lowest class index.
    pub fn accuracy(
        &self,
        px: &FeatureMatrix,
        labels: &LabelVector,
        nodes: &[usize],
    ) -> Result<f64> {
        self.check_rows(px, labels)?;
        if nodes.is_empty() {
            return Err(Error::InvalidInput("empty evaluation set".into()));
        }
        let probs = self.predict_proba(px, nodes)?;
        let mut correct = 0usize;
        for (i, &u) in nodes.iter().enumerate() {
            let row = probs.row(i);
            let mut arg = 0usize;
            let mut best = row[0];
            for c in 1..self.num_classes {
                if row[c] > best {
                    best = row[c];
                    arg = c;
                }
            }
            if arg == labels.labels[u] {
                correct += 1;
            }
        }
        Ok(correct as f64 / nodes.len() as f64)
    }

    /// Predictive-entropy scores for `unlabeled`, L1-normalized over the
    /// set. All-zero entropies (every prediction one-hot) stay all zero.
    pub fn uncertainty_scores(
        &self,
        px: &FeatureMatrix,
        unlabeled: &[usize],
    ) -> Result<Vec<f64>> {
        if unlabeled.is_empty() {
            return Err(Error::InvalidInput("empty unlabeled set".into()));
        }
        let probs = self.predict_proba(px, unlabeled)?;
        let mut scores: Vec<f64> = probs
            .axis_iter(Axis(0))
            .map(|row| shannon_entropy(row))
            .collect();
        let total: f64 = scores.iter().sum();
        if total > 0.0 {
            for s in &mut scores {
                *s /= total;
            }
        }
        Ok(scores)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn toy_data() -> (FeatureMatrix, LabelVector) {
        // Two linearly separable groups in 3 features.
        let px = array![
            [1.0, 0.0, 0.1],
            [0.9, 0.1, 0.0],
            [1.1, 0.0, 0.0],
            [0.8, 0.2, 0.1],
            [0.0, 1.0, 0.1],
            [0.1, 0.9, 0.0],
            [0.0, 1.1, 0.0],
            [0.2, 0.8, 0.1],
        ];
        let labels = LabelVector::new(vec![0, 0, 0, 0, 1, 1, 1, 1], 2).unwrap();
        (px, labels)
    }

    fn small_cfg() -> QbcConfig {
        QbcConfig {
            members: 3,
            hidden: 8,
            dropout: 0.5,
            learning_rate: 0.05,
            weight_decay: 5e-4,
            max_epochs: 200,
            patience: 50,
            seed: 3,
        }
    }

    #[test]
    fn entropy_of_uniform_is_ln_k() {
        let p = Array1::from_elem(5, 0.2);
        assert!((shannon_entropy(p.view()) - 5f64.ln()).abs() < 1e-12);
        let onehot = array![0.0, 1.0, 0.0];
        assert_eq!(shannon_entropy(onehot.view()), 0.0);
    }

    #[test]
    fn init_is_deterministic() {
        let cfg = small_cfg();
        let a = QbcModel::init(&cfg, 4, 3).unwrap();
        let b = QbcModel::init(&cfg, 4, 3).unwrap();
        assert_eq!(a.param_vector(), b.param_vector());
        let other = QbcModel::init(
            &QbcConfig {
                seed: 4,
                ..cfg.clone()
            },
            4,
            3,
        )
        .unwrap();
        assert_ne!(a.param_vector(), other.param_vector());
    }

    #[test]
    fn probabilities_are_normalized() {
        let (px, _) = toy_data();
        let model = QbcModel::init(&small_cfg(), 3, 2).unwrap();
        let probs = model.predict_proba(&px, &[0, 3, 7]).unwrap();
        for row in probs.axis_iter(Axis(0)) {
            let sum: f64 = row.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            assert!(row.iter().all(|&p| p >= 0.0));
        }
    }

    #[test]
    fn separable_toy_problem_is_learned() {
        let (px, labels) = toy_data();
        let mut model = QbcModel::init(&small_cfg(), 3, 2).unwrap();
        // Validate on the mixture points nearest the class boundary, so the
        // restored best-validation snapshot has actually learned the split.
        let report = model
            .train_full(&px, &labels, &[0, 1, 4, 5], &[3, 7])
            .unwrap();
        assert_eq!(report.best_val_accuracy, 1.0, "report: {report:?}");
        let test_acc = model.accuracy(&px, &labels, &[2, 6]).unwrap();
        assert_eq!(test_acc, 1.0, "report: {report:?}");
    }

    #[test]
    fn patience_zero_runs_one_epoch() {
        let (px, labels) = toy_data();
        let cfg = QbcConfig {
            patience: 0,
            ..small_cfg()
        };
        let mut model = QbcModel::init(&cfg, 3, 2).unwrap();
        let report = model
            .train_full(&px, &labels, &[0, 1, 4, 5], &[2, 6])
            .unwrap();
        assert_eq!(report.epochs_run, 1);
    }

    #[test]
    fn training_is_replayable_from_clones() {
        let (px, labels) = toy_data();
        let mut a = QbcModel::init(&small_cfg(), 3, 2).unwrap();
        let mut b = a.clone();
        let la = a.train_one_epoch(&px, &labels, &[0, 1, 4, 5]).unwrap();
        let lb = b.train_one_epoch(&px, &labels, &[0, 1, 4, 5]).unwrap();
        assert_eq!(la, lb);
        assert_eq!(a.param_vector(), b.param_vector());
    }

    #[test]
    fn overlap_and_empty_sets_rejected() {
        let (px, labels) = toy_data();
        let mut model = QbcModel::init(&small_cfg(), 3, 2).unwrap();
        assert!(model.train_full(&px, &labels, &[0, 1], &[1, 2]).is_err());
        assert!(model.train_full(&px, &labels, &[], &[1]).is_err());
        assert!(model.train_full(&px, &labels, &[0], &[]).is_err());
        assert!(model.uncertainty_scores(&px, &[]).is_err());
        assert!(model.accuracy(&px, &labels, &[]).is_err());
    }

    #[test]
    fn uncertainty_normalizes_over_the_set() {
        let (px, _) = toy_data();
        let model = QbcModel::init(&small_cfg(), 3, 2).unwrap();
        let scores = model.uncertainty_scores(&px, &[0, 1, 2, 3]).unwrap();
        let total: f64 = scores.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(scores.iter().all(|&s| s >= 0.0));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (px, labels) = toy_data();
        let cfg = QbcConfig {
            dropout: 0.0,
            ..small_cfg()
        };
        let mut model = QbcModel::init(&cfg, 3, 2).unwrap();
        let nodes = [0usize, 1, 4, 5];
        let (_, grad) = model.loss_and_gradient(&px, &labels, &nodes).unwrap();
        let theta = model.param_vector();
        let h = 1e-5;
        // Check a spread of coordinates across all tensors.
        let stride = (theta.len() / 17).max(1);
        for i in (0..theta.len()).step_by(stride) {
            let mut plus = theta.clone();
            plus[i] += h;
            model.set_param_vector(&plus).unwrap();
            let lp = model.loss(&px, &labels, &nodes).unwrap();
            let mut minus = theta.clone();
            minus[i] -= h;
            model.set_param_vector(&minus).unwrap();
            let lm = model.loss(&px, &labels, &nodes).unwrap();
            let numeric = (lp - lm) / (2.0 * h);
            let denom = (numeric.abs() + grad[i].abs()).max(1e-8);
            let rel = (numeric - grad[i]).abs() / denom;
            assert!(
                rel < 1e-4,
                "coordinate {i}: analytic {} vs numeric {numeric} (rel {rel})",
                grad[i]
            );
        }
        model.set_param_vector(&theta).unwrap();
    }
}
