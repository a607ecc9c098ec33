//! Meta-learned binary root classifier.
//!
//! A three-layer network (inputs, 64 hidden ReLU units, 2-way softmax) is
//! trained with the Reptile first-order meta-learning rule: repeatedly sample
//! one balanced attack-vs-benign task, run `k` minibatch SGD steps on it, and
//! interpolate the initialisation toward the adapted weights by the meta
//! learning rate. A plain-SGD baseline trains the same network over the
//! pooled task data with the same gradient-step budget, for comparison.
//!
//! Class 0 means normal traffic and class 1 means attack; prediction ties
//! break toward attack.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::BinaryLabel;
use crate::rng::stream_rng;

/// Hidden-layer width.
pub const HIDDEN: usize = 64;
const CLASSES: usize = 2;

#[derive(Debug, Error)]
pub enum MetaError {
    #[error("task family is empty")]
    EmptyFamily,
    #[error("task family needs at least 2 tasks, got {0}")]
    TooFewTasks(usize),
    #[error("task {task:?}: {reason}")]
    BadTask { task: String, reason: String },
    #[error("bad config: {0}")]
    BadConfig(String),
    #[error("feature vector has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Network parameters: `W1 (F×64)`, `b1`, `W2 (64×2)`, `b2`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub n_features: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl MlpParams {
    /// All-zero parameters; forward output is then uniform.
    pub fn zeros(n_features: usize) -> MlpParams {
        MlpParams {
            n_features,
            w1: vec![0.0; n_features * HIDDEN],
            b1: vec![0.0; HIDDEN],
            w2: vec![0.0; HIDDEN * CLASSES],
            b2: vec![0.0; CLASSES],
        }
    }

    /// Xavier-uniform initialisation, deterministic in the seed.
    pub fn xavier(n_features: usize, seed: u64) -> MlpParams {
        let mut rng = stream_rng(seed, 0);
        let mut layer = |fan_in: usize, fan_out: usize, len: usize| -> Vec<f64> {
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            (0..len).map(|_| rng.gen_range(-bound..bound)).collect()
        };
        MlpParams {
            n_features,
            w1: layer(n_features, HIDDEN, n_features * HIDDEN),
            b1: vec![0.0; HIDDEN],
            w2: layer(HIDDEN, CLASSES, HIDDEN * CLASSES),
            b2: vec![0.0; CLASSES],
        }
    }

    /// Softmax class probabilities for `x`.
    pub fn forward(&self, x: &[f64]) -> Result<[f64; 2], MetaError> {
        if x.len() != self.n_features {
            return Err(MetaError::DimensionMismatch {
                expected: self.n_features,
                got: x.len(),
            });
        }
        let (_, probs) = self.forward_parts(x);
        Ok(probs)
    }

    /// Hidden activations and softmax probabilities.
    fn forward_parts(&self, x: &[f64]) -> ([f64; HIDDEN], [f64; 2]) {
        let mut hidden = [0.0; HIDDEN];
        for (f, &v) in x.iter().enumerate() {
            let row = &self.w1[f * HIDDEN..(f + 1) * HIDDEN];
            for (h, &w) in row.iter().enumerate() {
                hidden[h] += v * w;
            }
        }
        for (h, a) in hidden.iter_mut().enumerate() {
            *a = (*a + self.b1[h]).max(0.0);
        }
        let mut logits = [self.b2[0], self.b2[1]];
        for (h, &a) in hidden.iter().enumerate() {
            logits[0] += a * self.w2[h * CLASSES];
            logits[1] += a * self.w2[h * CLASSES + 1];
        }
        let peak = logits[0].max(logits[1]);
        let e0 = (logits[0] - peak).exp();
        let e1 = (logits[1] - peak).exp();
        let total = e0 + e1;
        (hidden, [e0 / total, e1 / total])
    }

    /// Mean cross-entropy of the network over `(xs, ys)`.
    pub fn mean_loss(&self, xs: &[Vec<f64>], ys: &[usize]) -> f64 {
        let total: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, &y)| {
                let (_, p) = self.forward_parts(x);
                -(p[y].max(1e-300)).ln()
            })
            .sum();
        total / xs.len() as f64
    }

    fn flat_len(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    fn flat_iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.w1
            .iter()
            .chain(&self.b1)
            .chain(&self.w2)
            .chain(&self.b2)
            .copied()
    }

    fn flat_iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.w1
            .iter_mut()
            .chain(&mut self.b1)
            .chain(&mut self.w2)
            .chain(&mut self.b2)
    }
}

/// Euclidean distance between two parameter vectors of one shape.
pub fn param_distance(a: &MlpParams, b: &MlpParams) -> f64 {
    debug_assert_eq!(a.flat_len(), b.flat_len());
    a.flat_iter()
        .zip(b.flat_iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// The Reptile update `Θ + ε·(Ω − Θ)`.
///
/// The endpoints are exact: `ε = 0` returns `Θ` and `ε = 1` returns `Ω`
/// bit-for-bit.
pub fn interpolate(theta: &MlpParams, omega: &MlpParams, eps: f64) -> MlpParams {
    if eps == 0.0 {
        return theta.clone();
    }
    if eps == 1.0 {
        return omega.clone();
    }
    let mut out = theta.clone();
    for (dst, src) in out.flat_iter_mut().zip(omega.flat_iter()) {
        *dst += eps * (src - *dst);
    }
    out
}

/// Per-parameter-block gradients, same shapes as [`MlpParams`].
struct Gradients {
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: Vec<f64>,
}

/// Mean cross-entropy gradient over a batch given by `batch` indices.
fn batch_gradients(params: &MlpParams, xs: &[Vec<f64>], ys: &[usize], batch: &[usize]) -> Gradients {
    let mut g = Gradients {
        w1: vec![0.0; params.w1.len()],
        b1: vec![0.0; params.b1.len()],
        w2: vec![0.0; params.w2.len()],
        b2: vec![0.0; params.b2.len()],
    };
    let scale = 1.0 / batch.len() as f64;
    for &i in batch {
        let x = &xs[i];
        let y = ys[i];
        let (hidden, probs) = params.forward_parts(x);
        let dlogits = [
            (probs[0] - if y == 0 { 1.0 } else { 0.0 }) * scale,
            (probs[1] - if y == 1 { 1.0 } else { 0.0 }) * scale,
        ];
        g.b2[0] += dlogits[0];
        g.b2[1] += dlogits[1];
        let mut dhidden = [0.0; HIDDEN];
        for h in 0..HIDDEN {
            g.w2[h * CLASSES] += hidden[h] * dlogits[0];
            g.w2[h * CLASSES + 1] += hidden[h] * dlogits[1];
            if hidden[h] > 0.0 {
                dhidden[h] = params.w2[h * CLASSES] * dlogits[0]
                    + params.w2[h * CLASSES + 1] * dlogits[1];
            }
        }
        for (f, &v) in x.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let row = &mut g.w1[f * HIDDEN..(f + 1) * HIDDEN];
            for (h, slot) in row.iter_mut().enumerate() {
                *slot += v * dhidden[h];
            }
        }
        for h in 0..HIDDEN {
            g.b1[h] += dhidden[h];
        }
    }
    g
}

/// Runs `k` minibatch SGD steps on `(xs, ys)` starting from `params`.
///
/// Batches are drawn without replacement per step; the inputs are left
/// untouched and the adapted copy is returned.
pub fn sgd_steps<R: Rng>(
    params: &MlpParams,
    xs: &[Vec<f64>],
    ys: &[usize],
    k: usize,
    inner_lr: f64,
    batch_size: usize,
    rng: &mut R,
) -> MlpParams {
    let mut adapted = params.clone();
    let batch_size = batch_size.min(xs.len());
    for _ in 0..k {
        let batch: Vec<usize> = if batch_size == xs.len() {
            (0..xs.len()).collect()
        } else {
            rand::seq::index::sample(rng, xs.len(), batch_size).into_vec()
        };
        let g = batch_gradients(&adapted, xs, ys, &batch);
        for (p, d) in adapted.w1.iter_mut().zip(&g.w1) {
            *p -= inner_lr * d;
        }
        for (p, d) in adapted.b1.iter_mut().zip(&g.b1) {
            *p -= inner_lr * d;
        }
        for (p, d) in adapted.w2.iter_mut().zip(&g.w2) {
            *p -= inner_lr * d;
        }
        for (p, d) in adapted.b2.iter_mut().zip(&g.b2) {
            *p -= inner_lr * d;
        }
    }
    adapted
}

/// Reptile hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReptileConfig {
    pub inner_steps: usize,
    pub inner_lr: f64,
    pub meta_lr: f64,
    pub iterations: usize,
    pub batch_size: usize,
    pub anneal: bool,
    pub seed: u64,
}

impl Default for ReptileConfig {
    fn default() -> Self {
        ReptileConfig {
            inner_steps: 5,
            inner_lr: 0.02,
            meta_lr: 0.1,
            iterations: 200,
            batch_size: 32,
            anneal: false,
            seed: 0,
        }
    }
}

impl ReptileConfig {
    fn validate(&self) -> Result<(), MetaError> {
        if self.inner_steps == 0 {
            return Err(MetaError::BadConfig("inner_steps must be at least 1".into()));
        }
        if !(self.meta_lr > 0.0 && self.meta_lr <= 1.0) {
            return Err(MetaError::BadConfig(format!(
                "meta_lr {} outside (0, 1]",
                self.meta_lr
            )));
        }
        if self.inner_lr <= 0.0 {
            return Err(MetaError::BadConfig(format!(
                "inner_lr {} must be positive",
                self.inner_lr
            )));
        }
        if self.batch_size == 0 {
            return Err(MetaError::BadConfig("batch_size must be at least 1".into()));
        }
        Ok(())
    }
}

/// One binary task: scaled features, 0/1 targets, and the indices of the
/// source records inside the originating dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaTask {
    pub name: String,
    pub xs: Vec<Vec<f64>>,
    pub ys: Vec<usize>,
    pub source_indices: Vec<usize>,
}

/// The fixed set of per-attack-type tasks Reptile samples from.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskFamily {
    tasks: Vec<MetaTask>,
}

impl TaskFamily {
    /// Validates and wraps tasks; at least two are required so that task
    /// sampling is meaningful.
    pub fn new(tasks: Vec<MetaTask>) -> Result<TaskFamily, MetaError> {
        if tasks.is_empty() {
            return Err(MetaError::EmptyFamily);
        }
        if tasks.len() < 2 {
            return Err(MetaError::TooFewTasks(tasks.len()));
        }
        let n_features = tasks[0].xs.first().map(|x| x.len()).unwrap_or(0);
        for task in &tasks {
            if task.xs.is_empty() {
                return Err(MetaError::BadTask {
                    task: task.name.clone(),
                    reason: "no instances".into(),
                });
            }
            if task.xs.len() != task.ys.len() {
                return Err(MetaError::BadTask {
                    task: task.name.clone(),
                    reason: "features and targets differ in length".into(),
                });
            }
            if task.ys.iter().any(|&y| y > 1) {
                return Err(MetaError::BadTask {
                    task: task.name.clone(),
                    reason: "targets must be 0 (normal) or 1 (attack)".into(),
                });
            }
            if task.xs.iter().any(|x| x.len() != n_features) {
                return Err(MetaError::BadTask {
                    task: task.name.clone(),
                    reason: "inconsistent feature lengths".into(),
                });
            }
        }
        Ok(TaskFamily { tasks })
    }

    pub fn tasks(&self) -> &[MetaTask] {
        &self.tasks
    }

    pub fn n_features(&self) -> usize {
        self.tasks[0].xs[0].len()
    }

    /// Number of distinct source records across all tasks: the exact count
    /// of labeled data the meta learner can ever touch.
    pub fn distinct_records(&self) -> usize {
        let mut seen: Vec<usize> = self
            .tasks
            .iter()
            .flat_map(|t| t.source_indices.iter().copied())
            .collect();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }

    /// Total instances across tasks, counting repeats.
    pub fn total_instances(&self) -> usize {
        self.tasks.iter().map(|t| t.xs.len()).sum()
    }
}

/// One outer-loop log row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OuterIteration {
    pub iteration: usize,
    pub task: String,
    pub loss_before: f64,
    pub loss_after: f64,
    /// `‖Θ_{i+1} − Θ_i‖`, measured after the update.
    pub update_norm: f64,
    /// `ε_i · ‖Ω_i − Θ_i‖`, measured before the update.
    pub scaled_gap: f64,
    pub val_accuracy: Option<f64>,
}

/// Final parameters plus the per-iteration training log.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: MlpParams,
    pub log: Vec<OuterIteration>,
}

/// Trains the meta initialisation over a task family.
///
/// Per outer iteration: sample one task uniformly, adapt a copy with
/// `inner_steps` SGD steps, and move the initialisation toward the adapted
/// weights by `ε` (linearly annealed to zero when `anneal` is set).
/// Deterministic for a fixed seed.
pub fn reptile_train(
    family: &TaskFamily,
    config: &ReptileConfig,
    validation: Option<(&[Vec<f64>], &[usize])>,
) -> Result<TrainOutcome, MetaError> {
    config.validate()?;
    let mut theta = MlpParams::xavier(family.n_features(), config.seed);
    let mut task_rng = stream_rng(config.seed, 1);
    let mut log = Vec::with_capacity(config.iterations);
    for i in 0..config.iterations {
        let task = &family.tasks[task_rng.gen_range(0..family.tasks.len())];
        let mut inner_rng = stream_rng(config.seed, 0x1000 + i as u64);
        let loss_before = theta.mean_loss(&task.xs, &task.ys);
        let omega = sgd_steps(
            &theta,
            &task.xs,
            &task.ys,
            config.inner_steps,
            config.inner_lr,
            config.batch_size,
            &mut inner_rng,
        );
        let eps = if config.anneal {
            config.meta_lr * (1.0 - i as f64 / config.iterations as f64)
        } else {
            config.meta_lr
        };
        let scaled_gap = eps * param_distance(&omega, &theta);
        let next = interpolate(&theta, &omega, eps);
        let update_norm = param_distance(&next, &theta);
        let loss_after = omega.mean_loss(&task.xs, &task.ys);
        let val_accuracy = validation.map(|(vx, vy)| {
            let correct = vx
                .iter()
                .zip(vy)
                .filter(|(x, &y)| {
                    let (_, p) = next.forward_parts(x);
                    usize::from(p[1] >= p[0]) == y
                })
                .count();
            correct as f64 / vx.len() as f64
        });
        log.push(OuterIteration {
            iteration: i,
            task: task.name.clone(),
            loss_before,
            loss_after,
            update_norm,
            scaled_gap,
            val_accuracy,
        });
        theta = next;
    }
    Ok(TrainOutcome { params: theta, log })
}

/// Binary decision of the trained classifier; ties go to attack.
pub fn mlc_predict(params: &MlpParams, x: &[f64]) -> Result<BinaryLabel, MetaError> {
    let probs = params.forward(x)?;
    Ok(if probs[1] >= probs[0] {
        BinaryLabel::Attack
    } else {
        BinaryLabel::Benign
    })
}

/// Plain-SGD baseline: same network, same gradient-step budget
/// (`iterations × inner_steps` minibatches), pooled task data, no meta loop.
pub fn sgd_baseline_train(
    family: &TaskFamily,
    config: &ReptileConfig,
    validation: Option<(&[Vec<f64>], &[usize])>,
) -> Result<TrainOutcome, MetaError> {
    config.validate()?;
    let mut xs = Vec::with_capacity(family.total_instances());
    let mut ys = Vec::with_capacity(family.total_instances());
    for task in &family.tasks {
        xs.extend(task.xs.iter().cloned());
        ys.extend(task.ys.iter().copied());
    }
    let mut params = MlpParams::xavier(family.n_features(), config.seed);
    let mut log = Vec::with_capacity(config.iterations);
    for i in 0..config.iterations {
        let mut rng = stream_rng(config.seed, 0x2000 + i as u64);
        let loss_before = params.mean_loss(&xs, &ys);
        let next = sgd_steps(
            &params,
            &xs,
            &ys,
            config.inner_steps,
            config.inner_lr,
            config.batch_size,
            &mut rng,
        );
        let update_norm = param_distance(&next, &params);
        let loss_after = next.mean_loss(&xs, &ys);
        let val_accuracy = validation.map(|(vx, vy)| {
            let correct = vx
                .iter()
                .zip(vy)
                .filter(|(x, &y)| {
                    let (_, p) = next.forward_parts(x);
                    usize::from(p[1] >= p[0]) == y
                })
                .count();
            correct as f64 / vx.len() as f64
        });
        log.push(OuterIteration {
            iteration: i,
            task: "pooled".into(),
            loss_before,
            loss_after,
            update_norm,
            scaled_gap: update_norm,
            val_accuracy,
        });
        params = next;
    }
    Ok(TrainOutcome { params, log })
}

/// Writes the training log as CSV for plotting convergence curves.
pub fn write_train_log(log: &[OuterIteration], path: &std::path::Path) -> std::io::Result<()> {
    use std::fmt::Write as _;
    let mut out =
        String::from("iteration,task,loss_before,loss_after,update_norm,scaled_gap,val_accuracy\n");
    for row in log {
        let val = row
            .val_accuracy
            .map(|v| format!("{v}"))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            row.iteration,
            row.task,
            row.loss_before,
            row.loss_after,
            row.update_norm,
            row.scaled_gap,
            val
        );
    }
    std::fs::write(path, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn separable_task(name: &str, center: f64, n: usize, seed: u64) -> MetaTask {
        let mut rng = stream_rng(seed, 0);
        let attack = Normal::new(center, 0.1).unwrap();
        let benign = Normal::new(0.0, 0.1).unwrap();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..n {
            if i % 2 == 0 {
                xs.push(vec![attack.sample(&mut rng), attack.sample(&mut rng)]);
                ys.push(1);
            } else {
                xs.push(vec![benign.sample(&mut rng), benign.sample(&mut rng)]);
                ys.push(0);
            }
        }
        let source_indices = (0..n).collect();
        MetaTask {
            name: name.into(),
            xs,
            ys,
            source_indices,
        }
    }

    fn family() -> TaskFamily {
        TaskFamily::new(vec![
            separable_task("DoS", 1.0, 64, 1),
            separable_task("DDoS", -1.0, 64, 2),
            separable_task("Recon", 0.8, 64, 3),
        ])
        .unwrap()
    }

    fn quick_config() -> ReptileConfig {
        ReptileConfig {
            iterations: 40,
            seed: 5,
            ..ReptileConfig::default()
        }
    }

    #[test]
    fn zero_params_give_uniform_probabilities() {
        let p = MlpParams::zeros(3);
        assert_eq!(p.forward(&[0.4, -0.2, 1.0]).unwrap(), [0.5, 0.5]);
    }

    #[test]
    fn output_bias_dominates_zero_weights() {
        let mut p = MlpParams::zeros(2);
        p.b2 = vec![10.0, -10.0];
        let probs = p.forward(&[0.3, 0.7]).unwrap();
        assert!(probs[0] > 0.9999, "probs {probs:?}");
        assert!((probs[0] + probs[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn probabilities_sum_to_one() {
        let p = MlpParams::xavier(4, 9);
        let mut rng = stream_rng(10, 0);
        for _ in 0..50 {
            let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let probs = p.forward(&x).unwrap();
            assert!((probs[0] + probs[1] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        let n_features = 3;
        let mut rng = stream_rng(11, 0);
        for draw in 0..10 {
            let params = MlpParams::xavier(n_features, 100 + draw);
            let xs: Vec<Vec<f64>> = (0..4)
                .map(|_| (0..n_features).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            let ys: Vec<usize> = (0..4).map(|_| rng.gen_range(0..2)).collect();
            let batch: Vec<usize> = (0..xs.len()).collect();
            let g = batch_gradients(&params, &xs, &ys, &batch);
            let flat_grad: Vec<f64> = g
                .w1
                .iter()
                .chain(&g.b1)
                .chain(&g.w2)
                .chain(&g.b2)
                .copied()
                .collect();
            let h = 1e-5;
            for j in 0..flat_grad.len() {
                let mut plus = params.clone();
                *plus.flat_iter_mut().nth(j).unwrap() += h;
                let mut minus = params.clone();
                *minus.flat_iter_mut().nth(j).unwrap() -= h;
                let numeric = (plus.mean_loss(&xs, &ys) - minus.mean_loss(&xs, &ys)) / (2.0 * h);
                let denom = numeric.abs().max(flat_grad[j].abs()).max(1e-6);
                assert!(
                    (numeric - flat_grad[j]).abs() / denom < 1e-5,
                    "draw {draw} param {j}: analytic {} vs numeric {numeric}",
                    flat_grad[j]
                );
            }
        }
    }

    #[test]
    fn zero_inner_lr_returns_identical_params() {
        let task = separable_task("DoS", 1.0, 32, 20);
        let params = MlpParams::xavier(2, 21);
        let mut rng = stream_rng(22, 0);
        let adapted = sgd_steps(&params, &task.xs, &task.ys, 5, 0.0, 8, &mut rng);
        assert_eq!(adapted, params);
    }

    #[test]
    fn sgd_on_separable_task_decreases_loss() {
        let task = separable_task("DoS", 2.0, 64, 23);
        let params = MlpParams::xavier(2, 24);
        let before = params.mean_loss(&task.xs, &task.ys);
        let mut rng = stream_rng(25, 0);
        let adapted = sgd_steps(&params, &task.xs, &task.ys, 25, 0.5, 32, &mut rng);
        let after = adapted.mean_loss(&task.xs, &task.ys);
        assert!(after < before, "loss {before} -> {after}");
    }

    #[test]
    fn default_inner_step_count_is_five() {
        assert_eq!(ReptileConfig::default().inner_steps, 5);
        assert_eq!(ReptileConfig::default().meta_lr, 0.1);
    }

    #[test]
    fn zero_meta_lr_is_rejected_but_interpolation_identity_holds() {
        let config = ReptileConfig {
            meta_lr: 0.0,
            ..quick_config()
        };
        assert!(matches!(
            reptile_train(&family(), &config, None),
            Err(MetaError::BadConfig(_))
        ));
        let theta = MlpParams::xavier(2, 1);
        let omega = MlpParams::xavier(2, 2);
        assert_eq!(interpolate(&theta, &omega, 0.0), theta);
        assert_eq!(interpolate(&theta, &omega, 1.0), omega);
    }

    #[test]
    fn meta_lr_one_single_iteration_equals_adapted_weights() {
        let family = family();
        let config = ReptileConfig {
            meta_lr: 1.0,
            iterations: 1,
            ..quick_config()
        };
        let outcome = reptile_train(&family, &config, None).unwrap();
        // Replicate the single outer iteration by hand.
        let theta = MlpParams::xavier(family.n_features(), config.seed);
        let mut task_rng = stream_rng(config.seed, 1);
        let task = &family.tasks()[task_rng.gen_range(0..family.tasks().len())];
        let mut inner_rng = stream_rng(config.seed, 0x1000);
        let omega = sgd_steps(
            &theta,
            &task.xs,
            &task.ys,
            config.inner_steps,
            config.inner_lr,
            config.batch_size,
            &mut inner_rng,
        );
        assert_eq!(outcome.params, omega);
    }

    #[test]
    fn update_norm_equals_scaled_gap_within_float_tolerance() {
        let outcome = reptile_train(&family(), &quick_config(), None).unwrap();
        assert_eq!(outcome.log.len(), 40);
        for row in &outcome.log {
            let tol = 1e-12 * row.scaled_gap.max(1.0);
            assert!(
                (row.update_norm - row.scaled_gap).abs() <= tol,
                "iteration {}: {} vs {}",
                row.iteration,
                row.update_norm,
                row.scaled_gap
            );
        }
    }

    #[test]
    fn training_is_deterministic() {
        let a = reptile_train(&family(), &quick_config(), None).unwrap();
        let b = reptile_train(&family(), &quick_config(), None).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.log, b.log);
    }

    #[test]
    fn trained_family_classifies_its_tasks() {
        let family = family();
        let config = ReptileConfig {
            iterations: 150,
            inner_lr: 0.5,
            ..quick_config()
        };
        let outcome = reptile_train(&family, &config, None).unwrap();
        let mut correct = 0;
        let mut total = 0;
        for task in family.tasks() {
            for (x, &y) in task.xs.iter().zip(&task.ys) {
                let label = mlc_predict(&outcome.params, x).unwrap();
                let want = if y == 1 {
                    BinaryLabel::Attack
                } else {
                    BinaryLabel::Benign
                };
                if label == want {
                    correct += 1;
                }
                total += 1;
            }
        }
        let accuracy = correct as f64 / total as f64;
        assert!(accuracy >= 0.95, "train accuracy {accuracy}");
    }

    #[test]
    fn tie_breaks_toward_attack() {
        let p = MlpParams::zeros(2);
        assert_eq!(mlc_predict(&p, &[0.1, 0.9]).unwrap(), BinaryLabel::Attack);
    }

    #[test]
    fn baseline_zero_iterations_returns_initialization() {
        let family = family();
        let config = ReptileConfig {
            iterations: 0,
            ..quick_config()
        };
        let outcome = sgd_baseline_train(&family, &config, None).unwrap();
        assert_eq!(
            outcome.params,
            MlpParams::xavier(family.n_features(), config.seed)
        );
        assert!(outcome.log.is_empty());
    }

    #[test]
    fn baseline_with_ample_budget_fits_pooled_data() {
        let family = family();
        let config = ReptileConfig {
            iterations: 300,
            inner_lr: 0.5,
            ..quick_config()
        };
        let outcome = sgd_baseline_train(&family, &config, None).unwrap();
        let mut correct = 0;
        let mut total = 0;
        for task in family.tasks() {
            for (x, &y) in task.xs.iter().zip(&task.ys) {
                let probs = outcome.params.forward(x).unwrap();
                if usize::from(probs[1] >= probs[0]) == y {
                    correct += 1;
                }
                total += 1;
            }
        }
        assert!(correct as f64 / total as f64 >= 0.9);
    }

    #[test]
    fn family_validation_rejects_degenerates() {
        assert!(matches!(
            TaskFamily::new(Vec::new()),
            Err(MetaError::EmptyFamily)
        ));
        assert!(matches!(
            TaskFamily::new(vec![separable_task("solo", 1.0, 8, 1)]),
            Err(MetaError::TooFewTasks(1))
        ));
        let mut bad = separable_task("bad", 1.0, 8, 1);
        bad.ys[0] = 7;
        assert!(matches!(
            TaskFamily::new(vec![bad, separable_task("ok", 1.0, 8, 2)]),
            Err(MetaError::BadTask { .. })
        ));
    }

    #[test]
    fn distinct_records_deduplicates_across_tasks() {
        let mut a = separable_task("a", 1.0, 8, 1);
        let mut b = separable_task("b", -1.0, 8, 2);
        a.source_indices = vec![0, 1, 2, 3, 4, 5, 6, 7];
        b.source_indices = vec![4, 5, 6, 7, 8, 9, 10, 11];
        let family = TaskFamily::new(vec![a, b]).unwrap();
        assert_eq!(family.distinct_records(), 12);
        assert_eq!(family.total_instances(), 16);
    }

    #[test]
    fn train_log_csv_has_header_and_rows() {
        let outcome = reptile_train(&family(), &quick_config(), None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("train_log.csv");
        write_train_log(&outcome.log, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "iteration,task,loss_before,loss_after,update_norm,scaled_gap,val_accuracy"
        );
        assert_eq!(lines.count(), 40);
    }

    #[test]
    fn validation_accuracy_is_tracked() {
        let family = family();
        let probe = separable_task("probe", 1.0, 32, 50);
        let config = ReptileConfig {
            iterations: 120,
            inner_lr: 0.5,
            ..quick_config()
        };
        let outcome = reptile_train(&family, &config, Some((&probe.xs, &probe.ys))).unwrap();
        let last = outcome.log.last().unwrap();
        let final_acc = last.val_accuracy.unwrap();
        assert!(final_acc >= 0.9, "final validation accuracy {final_acc}");
    }
}
