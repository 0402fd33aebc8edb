//! Offline training, sweeps and convergence-based model selection.

mod loss;
mod optim;
pub mod registry;
mod select;

pub use loss::{gamma, loss, loss_and_grad, LossHyper, LossParts};
pub use optim::{adam_step, lr_schedule, AdamState, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use select::{
    convergence_order, interpolation_error, order_study, select_model, Criterion, ModelSummary,
    OrderFit, OrderStudy, EVAL_NX,
};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcspace::{eval_function, DatasetConfig, EvalFunction, TrainSample};
use crate::ratnet::{init_params, Arch, NetParams, NnModel, DEFAULT_C_ENO};
use crate::scheme::Scheme;

/// Training loss above this value aborts the run.
pub const DIVERGENCE_LOSS: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub arch: Arch,
    pub peak_lr: f64,
    pub warmup_steps: usize,
    pub total_steps: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub hyper: LossHyper,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            arch: Arch::default(),
            peak_lr: 5e-4,
            warmup_steps: 1000,
            total_steps: 20_000,
            batch_size: 1024,
            seed: 0,
            hyper: LossHyper::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.hyper.validate()?;
        if !(self.peak_lr.is_finite() && self.peak_lr >= 0.0) {
            return Err(Error::Config("peak_lr must be finite and non-negative".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if self.warmup_steps > self.total_steps {
            return Err(Error::Config("warmup_steps exceeds total_steps".into()));
        }
        Ok(())
    }

    /// Warmup set to 5% of the run.
    pub fn with_steps(mut self, total_steps: usize) -> Self {
        self.total_steps = total_steps;
        self.warmup_steps = total_steps / 20;
        self
    }
}

/// One row of the per-step training log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub step: usize,
    pub lr: f64,
    pub loss: f64,
    pub loss_r: f64,
    pub loss_d: f64,
    pub loss_l2: f64,
}

pub const LOG_HEADER: &str = "step,lr,loss,loss_r,loss_d,loss_l2";

pub fn write_log<W: std::io::Write>(mut w: W, rows: &[LogRow]) -> std::io::Result<()> {
    use crate::fmt::real;
    writeln!(w, "{LOG_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.step,
            real(r.lr),
            real(r.loss),
            real(r.loss_r),
            real(r.loss_d),
            real(r.loss_l2)
        )?;
    }
    Ok(())
}

/// Selection metrics of a trained network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub study_g: OrderStudy,
    pub study_h: OrderStudy,
    /// Held-out reconstruction and deviation losses, with the model's own
    /// loss hyperparameters and the ENO filter off.
    pub recon_loss: f64,
    pub dev_loss: f64,
}

/// Convergence orders on the two evaluation functions plus held-out losses.
pub fn evaluate_model(
    model: &NnModel,
    heldout: &[TrainSample],
    hyper: &LossHyper,
) -> Result<Metrics> {
    let scheme = Scheme::nn(model.clone(), "candidate");
    let study_g = order_study(&scheme, &eval_function(EvalFunction::SinCubed), &EVAL_NX)?;
    let study_h = order_step_study(&scheme)?;
    let parts = loss(heldout, &model.params, hyper)?;
    Ok(Metrics {
        study_g,
        study_h,
        recon_loss: parts.recon,
        dev_loss: parts.dev,
    })
}

fn order_step_study(scheme: &Scheme) -> Result<OrderStudy> {
    order_study(scheme, &eval_function(EvalFunction::SineStep), &EVAL_NX)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub id: String,
    pub model: NnModel,
    pub config: TrainConfig,
    pub metrics: Metrics,
    pub log: Vec<LogRow>,
    pub skipped_steps: u64,
    pub selection: Option<Criterion>,
}

impl TrainedModel {
    pub fn summary(&self) -> ModelSummary {
        ModelSummary {
            model_id: self.id.clone(),
            alpha: self.config.hyper.alpha,
            beta_d: self.config.hyper.beta_d,
            peak_lr: self.config.peak_lr,
            order_g: self.metrics.study_g.order,
            order_h: self.metrics.study_h.order,
            recon_loss: self.metrics.recon_loss,
            dev_loss: self.metrics.dev_loss,
        }
    }
}

/// Adam over seeded, reshuffled mini-batches. Returns the final parameters
/// and the per-step log.
pub fn fit(dataset: &[TrainSample], cfg: &TrainConfig) -> Result<(NetParams, Vec<LogRow>, u64)> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::Config("training dataset is empty".into()));
    }
    let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    init_rng.set_stream(1);
    let mut params = init_params(&cfg.arch, &mut init_rng);
    params.validate()?;

    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    shuffle_rng.set_stream(2);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut cursor = order.len();
    let batch_size = cfg.batch_size.min(dataset.len());
    let mut batch = Vec::with_capacity(batch_size);

    let mut flat = params.to_flat();
    let mut adam = AdamState::new(flat.len());
    let mut log = Vec::with_capacity(cfg.total_steps);
    for step in 0..cfg.total_steps {
        batch.clear();
        while batch.len() < batch_size {
            if cursor == order.len() {
                order.shuffle(&mut shuffle_rng);
                cursor = 0;
            }
            batch.push(dataset[order[cursor]]);
            cursor += 1;
        }
        let (parts, grad) = loss_and_grad(&batch, &params, &cfg.hyper)?;
        if parts.total > DIVERGENCE_LOSS {
            return Err(Error::Diverged {
                step,
                loss: parts.total,
            });
        }
        let lr = lr_schedule(step, cfg.peak_lr, cfg.warmup_steps, cfg.total_steps);
        log.push(LogRow {
            step,
            lr,
            loss: parts.total,
            loss_r: parts.recon,
            loss_d: parts.dev,
            loss_l2: parts.l2,
        });
        adam_step(&mut flat, &grad.to_flat(), &mut adam, lr);
        params.set_flat(&flat);
    }
    Ok((params, log, adam.skipped))
}

/// Trains one configuration and evaluates it for selection.
pub fn train_model(
    dataset: &[TrainSample],
    heldout: &[TrainSample],
    cfg: &TrainConfig,
    id: impl Into<String>,
) -> Result<TrainedModel> {
    let (params, log, skipped_steps) = fit(dataset, cfg)?;
    let model = NnModel {
        params,
        c_eno: DEFAULT_C_ENO,
    };
    let metrics = evaluate_model(&model, heldout, &cfg.hyper)?;
    Ok(TrainedModel {
        id: id.into(),
        model,
        config: cfg.clone(),
        metrics,
        log,
        skipped_steps,
        selection: None,
    })
}

/// Held-out data for the loss-based criteria: same grids, disjoint seed.
pub fn heldout_config(train: &DatasetConfig) -> DatasetConfig {
    DatasetConfig {
        seed: train.seed ^ 0x5eed_0f4e_1d00_u64,
        ..train.clone()
    }
}

/// Hyperparameter grid of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub alpha: Vec<f64>,
    pub beta_d: Vec<f64>,
    pub peak_lr: Vec<f64>,
    /// Each hyperparameter combination is trained once per seed.
    pub seeds: Vec<u64>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            alpha: vec![0.01, 0.03, 0.1, 0.3],
            beta_d: vec![0.03, 0.1, 0.3],
            peak_lr: vec![5e-4, 1e-4, 1e-5],
            seeds: vec![0],
        }
    }
}

impl SweepSpec {
    /// Cartesian product over the grid, in `seed, alpha, beta_d, peak_lr`
    /// order, based on `base`.
    pub fn configs(&self, base: &TrainConfig) -> Vec<TrainConfig> {
        let mut out = Vec::new();
        for &seed in &self.seeds {
            for &alpha in &self.alpha {
                for &beta_d in &self.beta_d {
                    for &peak_lr in &self.peak_lr {
                        let mut c = base.clone();
                        c.seed = seed;
                        c.peak_lr = peak_lr;
                        c.hyper.alpha = alpha;
                        c.hyper.beta_d = beta_d;
                        out.push(c);
                    }
                }
            }
        }
        out
    }
}

/// Trains every configuration on a pool of `jobs` threads; results keep the
/// input order.
pub fn run_sweep(
    dataset: &[TrainSample],
    heldout: &[TrainSample],
    configs: &[TrainConfig],
    jobs: usize,
) -> Vec<Result<TrainedModel>> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| {
        configs
            .par_iter()
            .enumerate()
            .map(|(i, c)| train_model(dataset, heldout, c, format!("m{i:03}")))
            .collect()
    })
}
