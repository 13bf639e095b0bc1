//! Step loops for the supervised baseline, SR-GAN and dual-goal GAN.

use std::fmt;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{AutodiffError, Gradients, Tape, Tensor};
use crate::dataset::{labels_tensor, observations_tensor, DatasetBundle, Example};
use crate::losses::{self, LossError, LossReport, LossVariant, RowRole};
use crate::metrics::{self, MetricError, PredictionSet};
use crate::models::{
    Discriminator, Generator, Mlp, MlpSpec, ModelError, ParamVars, DEFAULT_NOISE_DIM,
};

/// Stream id for the training RNG; dataset generation uses the default stream.
const TRAINING_STREAM: u64 = 1;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("non-finite loss at step {}: {report:?}", report.step)]
    NonFinite { report: LossReport },
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("history line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "dnn")]
    Dnn,
    #[serde(rename = "srgan")]
    Srgan,
    #[serde(rename = "dggan")]
    Dggan,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Dnn, Method::Srgan, Method::Dggan];

    pub fn name(self) -> &'static str {
        match self {
            Method::Dnn => "dnn",
            Method::Srgan => "srgan",
            Method::Dggan => "dggan",
        }
    }

    pub fn uses_generator(self) -> bool {
        !matches!(self, Method::Dnn)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = TrainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dnn" => Ok(Method::Dnn),
            "srgan" | "sr-gan" => Ok(Method::Srgan),
            "dggan" | "dg-gan" => Ok(Method::Dggan),
            other => Err(TrainError::InvalidConfig(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub method: Method,
    pub variant: LossVariant,
    pub steps: u64,
    pub batch_labeled: usize,
    pub batch_unlabeled: usize,
    pub batch_fake: usize,
    pub learning_rate_d: f64,
    pub learning_rate_g: f64,
    pub lambda: f64,
    pub noise_dim: usize,
    pub seed: u64,
    pub eval_interval: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            method: Method::Srgan,
            variant: LossVariant::LogContrast,
            steps: 50_000,
            batch_labeled: 32,
            batch_unlabeled: 32,
            batch_fake: 32,
            learning_rate_d: 1e-3,
            learning_rate_g: 1e-3,
            lambda: losses::DEFAULT_LAMBDA,
            noise_dim: DEFAULT_NOISE_DIM,
            seed: 0,
            eval_interval: 1_000,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::InvalidConfig(m.to_owned()));
        if self.steps == 0 || self.eval_interval == 0 {
            return bad("steps and eval_interval must be positive");
        }
        if self.batch_labeled == 0 || self.batch_unlabeled == 0 || self.batch_fake == 0 {
            return bad("batch sizes must be positive");
        }
        if self.noise_dim == 0 {
            return bad("noise_dim must be positive");
        }
        if !(self.learning_rate_d > 0.0 && self.learning_rate_g > 0.0) {
            return bad("learning rates must be positive");
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be finite and non-negative");
        }
        Ok(())
    }
}

/// Bias-corrected Adam over a list of parameter tensors.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    beta1_t: f64,
    beta2_t: f64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Self::with_hyperparameters(lr, 0.9, 0.999, 1e-8)
    }

    pub fn with_hyperparameters(lr: f64, beta1: f64, beta2: f64, eps: f64) -> Self {
        Self {
            lr,
            beta1,
            beta2,
            eps,
            beta1_t: 1.0,
            beta2_t: 1.0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    /// Applies one update. `grads[i]` belongs to the i-th parameter; `None` means zero.
    pub fn step<'a>(
        &mut self,
        params: impl IntoIterator<Item = &'a mut Tensor>,
        grads: &[Option<&Tensor>],
    ) {
        self.beta1_t *= self.beta1;
        self.beta2_t *= self.beta2;
        let c1 = 1.0 - self.beta1_t;
        let c2 = 1.0 - self.beta2_t;
        for (i, param) in params.into_iter().enumerate() {
            if self.m.len() <= i {
                self.m.push(vec![0.0; param.len()]);
                self.v.push(vec![0.0; param.len()]);
            }
            let Some(grad) = grads.get(i).copied().flatten() else {
                // zero gradient still decays the moments
                for (m, v) in self.m[i].iter_mut().zip(self.v[i].iter_mut()) {
                    *m *= self.beta1;
                    *v *= self.beta2;
                }
                for ((p, m), v) in param.data_mut().iter_mut().zip(&self.m[i]).zip(&self.v[i]) {
                    *p -= self.lr * (m / c1) / ((v / c2).sqrt() + self.eps);
                }
                continue;
            };
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            for (((p, g), m), v) in param
                .data_mut()
                .iter_mut()
                .zip(grad.data())
                .zip(m.iter_mut())
                .zip(v.iter_mut())
            {
                *m = self.beta1 * *m + (1.0 - self.beta1) * g;
                *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
                *p -= self.lr * (*m / c1) / ((*v / c2).sqrt() + self.eps);
            }
        }
    }
}

/// How often each data source was touched.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    pub labeled_batches: u64,
    pub unlabeled_batches: u64,
    pub fake_batches: u64,
    pub discriminator_updates: u64,
    pub generator_updates: u64,
}

/// Minibatches for one step. GAN-only fields are `None` for the supervised baseline.
#[derive(Debug, Clone)]
pub struct Batches {
    pub labeled_x: Tensor,
    pub labeled_y: Tensor,
    pub unlabeled: Option<Tensor>,
    pub noise: Option<Tensor>,
    /// Per-row interpolation weights for the gradient penalty.
    pub alphas: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryEntry {
    pub report: LossReport,
    pub test_mae: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainHistory {
    pub entries: Vec<HistoryEntry>,
}

impl TrainHistory {
    pub const CSV_HEADER: &'static str = "step,labeled,unlabeled,fake,penalty,generator,test_mae";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for e in &self.entries {
            let _ = writeln!(out, "{},{}", e.report.csv_row(), e.test_mae);
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), TrainError> {
        fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn from_csv(text: &str) -> Result<Self, TrainError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate().skip(1) {
            if line.is_empty() {
                continue;
            }
            let err = |message: String| TrainError::Parse {
                line: i + 1,
                message,
            };
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 7 {
                return Err(err(format!("expected 7 fields, found {}", f.len())));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| err(e.to_string()));
            entries.push(HistoryEntry {
                report: LossReport {
                    step: f[0].parse().map_err(|e: std::num::ParseIntError| err(e.to_string()))?,
                    labeled_loss: num(f[1])?,
                    unlabeled_loss: num(f[2])?,
                    fake_loss: num(f[3])?,
                    gradient_penalty: num(f[4])?,
                    generator_loss: num(f[5])?,
                },
                test_mae: num(f[6])?,
            });
        }
        Ok(Self { entries })
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub discriminator: Discriminator,
    pub generator: Option<Generator>,
    pub history: TrainHistory,
    pub counters: Counters,
    pub final_test_mae: f64,
}

/// Mean absolute error of the discriminator's regression output on labeled examples.
pub fn evaluate(model: &Discriminator, test: &[Example]) -> Result<f64, TrainError> {
    if test.is_empty() {
        return Err(TrainError::InsufficientData("empty test set".into()));
    }
    let labels = labels_tensor(test)
        .ok_or_else(|| TrainError::InsufficientData("test example without label".into()))?;
    let predictions = model.predict(&observations_tensor(test))?;
    let set = PredictionSet::new(predictions.into_data(), labels.into_data())?;
    Ok(metrics::mae(&set))
}

fn collect_grads<'g>(grads: &'g Gradients, params: &ParamVars) -> Vec<Option<&'g Tensor>> {
    params.vars().iter().map(|&v| grads.get(v)).collect()
}

fn scalar(tape: &Tape, var: crate::autodiff::Var) -> f64 {
    tape.value(var).data()[0]
}

/// Owns the networks, optimisers and RNG for one training run.
pub struct Trainer<'a> {
    config: TrainConfig,
    bundle: &'a DatasetBundle,
    labeled_x: Tensor,
    labeled_y: Tensor,
    unlabeled_x: Option<Tensor>,
    discriminator: Discriminator,
    generator: Option<Generator>,
    opt_d: Adam,
    opt_g: Adam,
    rng: ChaCha8Rng,
    step: u64,
    counters: Counters,
    last_generator_loss: f64,
}

impl<'a> Trainer<'a> {
    pub fn new(config: TrainConfig, bundle: &'a DatasetBundle) -> Result<Self, TrainError> {
        config.validate()?;
        if bundle.labeled.is_empty() {
            return Err(TrainError::InsufficientData("no labeled examples".into()));
        }
        let labeled_x = observations_tensor(&bundle.labeled);
        let labeled_y = labels_tensor(&bundle.labeled)
            .ok_or_else(|| TrainError::InsufficientData("labeled example without label".into()))?;
        let unlabeled_x = if config.method.uses_generator() {
            if bundle.unlabeled.len() < config.batch_unlabeled {
                return Err(TrainError::InsufficientData(format!(
                    "{} unlabeled examples for a batch of {}",
                    bundle.unlabeled.len(),
                    config.batch_unlabeled
                )));
            }
            Some(observations_tensor(&bundle.unlabeled))
        } else {
            None
        };

        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(TRAINING_STREAM);
        let d_spec = match config.method {
            Method::Dggan => MlpSpec::dual_head_discriminator(),
            _ => MlpSpec::discriminator(),
        };
        let discriminator = Discriminator::new(d_spec, &mut rng)?;
        let generator = if config.method.uses_generator() {
            Some(Generator::new(MlpSpec::generator(config.noise_dim), &mut rng)?)
        } else {
            None
        };
        Ok(Self {
            opt_d: Adam::new(config.learning_rate_d),
            opt_g: Adam::new(config.learning_rate_g),
            config,
            bundle,
            labeled_x,
            labeled_y,
            unlabeled_x,
            discriminator,
            generator,
            rng,
            step: 0,
            counters: Counters::default(),
            last_generator_loss: 0.0,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn discriminator(&self) -> &Discriminator {
        &self.discriminator
    }

    pub fn generator(&self) -> Option<&Generator> {
        self.generator.as_ref()
    }

    pub fn counters(&self) -> Counters {
        self.counters
    }

    pub fn steps_done(&self) -> u64 {
        self.step
    }

    fn draw_indices(&mut self, n: usize, batch: usize) -> Vec<usize> {
        if n < batch {
            (0..batch).map(|_| self.rng.random_range(0..n)).collect()
        } else {
            index::sample(&mut self.rng, n, batch).into_vec()
        }
    }

    /// Draws the minibatches one step consumes.
    pub fn sample_batches(&mut self) -> Batches {
        let idx = self.draw_indices(self.labeled_x.rows(), self.config.batch_labeled);
        let labeled_x = self.labeled_x.select_rows(&idx);
        let labeled_y = self.labeled_y.select_rows(&idx);
        self.counters.labeled_batches += 1;
        if !self.config.method.uses_generator() {
            return Batches {
                labeled_x,
                labeled_y,
                unlabeled: None,
                noise: None,
                alphas: None,
            };
        }
        let n_unlabeled = self.unlabeled_x.as_ref().map_or(0, Tensor::rows);
        let idx = self.draw_indices(n_unlabeled, self.config.batch_unlabeled);
        let unlabeled = self
            .unlabeled_x
            .as_ref()
            .map(|u| u.select_rows(&idx));
        self.counters.unlabeled_batches += 1;
        let (n, z) = (self.config.batch_fake, self.config.noise_dim);
        let noise_data = (0..n * z)
            .map(|_| self.rng.sample::<f64, _>(StandardNormal))
            .collect();
        let noise = Tensor::from_raw(n, z, noise_data);
        self.counters.fake_batches += 1;
        let k = self.config.batch_unlabeled.min(self.config.batch_fake);
        let alphas = (0..k).map(|_| self.rng.random::<f64>()).collect();
        Batches {
            labeled_x,
            labeled_y,
            unlabeled,
            noise: Some(noise),
            alphas: Some(alphas),
        }
    }

    fn gan_inputs<'b>(&self, batches: &'b Batches) -> Result<(&'b Tensor, &'b Tensor, &'b [f64]), TrainError> {
        match (&batches.unlabeled, &batches.noise, &batches.alphas) {
            (Some(u), Some(z), Some(a)) => Ok((u, z, a)),
            _ => Err(TrainError::InvalidConfig(
                "GAN step requires unlabeled, noise and alpha batches".into(),
            )),
        }
    }

    /// Records the discriminator objective for `batches` on `tape`.
    /// Returns the total node, the parameter handles and the per-term report.
    fn record_discriminator_objective(
        &self,
        tape: &mut Tape,
        batches: &Batches,
    ) -> Result<(crate::autodiff::Var, ParamVars, LossReport), TrainError> {
        let d = &self.discriminator;
        let params = d.register(tape, true);
        let mut report = LossReport {
            step: self.step + 1,
            ..LossReport::default()
        };
        match self.config.method {
            Method::Dnn => {
                let out = d.forward_batch(tape, &params, &batches.labeled_x)?;
                let loss = losses::labeled_loss(tape, out.prediction, &batches.labeled_y)?;
                report.labeled_loss = scalar(tape, loss);
                Ok((loss, params, report))
            }
            Method::Srgan => {
                let (unlabeled, noise, alphas) = self.gan_inputs(batches)?;
                let g = self.generator.as_ref().expect("srgan has a generator");
                let fake = g.generate(noise)?;
                let variant = self.config.variant;

                let lab = d.forward_batch(tape, &params, &batches.labeled_x)?;
                let unl = d.forward_batch(tape, &params, unlabeled)?;
                let fk = d.forward_batch(tape, &params, &fake)?;
                let mean_l = tape.mean_rows(lab.features)?;
                let mean_u = tape.mean_rows(unl.features)?;
                let mean_f = tape.mean_rows(fk.features)?;

                let l_lab = losses::labeled_loss(tape, lab.prediction, &batches.labeled_y)?;
                let d_lu = losses::feature_distance(tape, mean_l, mean_u)?;
                let l_unl = losses::unlabeled_loss_for(tape, d_lu, variant)?;
                let d_fu = losses::feature_distance(tape, mean_f, mean_u)?;
                let l_fake = losses::fake_loss(tape, d_fu, variant)?;
                let mut total = tape.add(l_lab, l_unl)?;
                total = tape.add(total, l_fake)?;
                report.labeled_loss = scalar(tape, l_lab);
                report.unlabeled_loss = scalar(tape, l_unl);
                report.fake_loss = scalar(tape, l_fake);

                if self.config.lambda > 0.0 {
                    let k = alphas.len();
                    let rows: Vec<usize> = (0..k).collect();
                    let penalty = losses::gradient_penalty_with_alphas(
                        tape,
                        d,
                        &params,
                        &unlabeled.select_rows(&rows),
                        &fake.select_rows(&rows),
                        alphas,
                        self.config.lambda,
                    )?;
                    report.gradient_penalty = scalar(tape, penalty);
                    total = tape.add(total, penalty)?;
                }
                Ok((total, params, report))
            }
            Method::Dggan => {
                let (unlabeled, noise, _) = self.gan_inputs(batches)?;
                let g = self.generator.as_ref().expect("dggan has a generator");
                let fake = g.generate(noise)?;
                let batch = Tensor::vstack(&[&batches.labeled_x, unlabeled, &fake])?;
                let (nl, nu, nf) = (batches.labeled_x.rows(), unlabeled.rows(), fake.rows());
                let mut roles = vec![RowRole::Labeled; nl];
                roles.extend(std::iter::repeat_n(RowRole::Unlabeled, nu));
                roles.extend(std::iter::repeat_n(RowRole::Fake, nf));
                let mut label_data = batches.labeled_y.data().to_vec();
                label_data.resize(nl + nu + nf, 0.0);
                let labels = Tensor::from_raw(nl + nu + nf, 1, label_data);

                let out = d.forward_batch(tape, &params, &batch)?;
                let logit = out.logit.expect("dual-head discriminator");
                let l = losses::dggan_losses(tape, out.prediction, logit, &labels, &roles)?;
                report.labeled_loss = l.regression.map_or(0.0, |v| scalar(tape, v));
                report.fake_loss = l.adversarial.map_or(0.0, |v| scalar(tape, v));
                Ok((l.discriminator, params, report))
            }
        }
    }

    /// Discriminator objective on fixed minibatches, without updating anything.
    pub fn discriminator_objective(&self, batches: &Batches) -> Result<f64, TrainError> {
        let mut tape = Tape::new();
        let (total, _, _) = self.record_discriminator_objective(&mut tape, batches)?;
        Ok(scalar(&tape, total))
    }

    /// One Adam step on the discriminator. The report's generator term is left at 0.
    pub fn discriminator_update(&mut self, batches: &Batches) -> Result<LossReport, TrainError> {
        let mut tape = Tape::new();
        let (total, params, report) = self.record_discriminator_objective(&mut tape, batches)?;
        if !scalar(&tape, total).is_finite() || !report.is_finite() {
            return Err(TrainError::NonFinite { report });
        }
        let grads = tape.backward(total)?;
        let g = collect_grads(&grads, &params);
        self.opt_d.step(self.discriminator.net_mut().parameters_mut(), &g);
        self.counters.discriminator_updates += 1;
        Ok(report)
    }

    /// Records the generator objective against the current (frozen) discriminator.
    fn record_generator_objective(
        &self,
        tape: &mut Tape,
        batches: &Batches,
    ) -> Result<(crate::autodiff::Var, ParamVars), TrainError> {
        let (unlabeled, noise, _) = self.gan_inputs(batches)?;
        let g = self
            .generator
            .as_ref()
            .ok_or_else(|| TrainError::InvalidConfig("method has no generator".into()))?;
        let d = &self.discriminator;
        let g_params = g.register(tape, true);
        let d_params = d.register(tape, false);
        let fake = g.forward(tape, &g_params, noise)?;
        let out = d.forward(tape, &d_params, fake)?;
        let loss = match self.config.method {
            Method::Srgan => {
                let (_, unl_features) = d.net().predict(unlabeled)?;
                let mean_u = tape.constant(unl_features.sum_rows().map(|v| v / unlabeled.rows() as f64));
                let mean_f = tape.mean_rows(out.features)?;
                let d_fu = losses::feature_distance(tape, mean_f, mean_u)?;
                losses::generator_loss(tape, d_fu, self.config.variant)?
            }
            Method::Dggan => {
                let rows = tape.shape(out.prediction).0;
                let logit = out.logit.expect("dual-head discriminator");
                let labels = Tensor::zeros(rows, 1);
                let roles = vec![RowRole::Fake; rows];
                losses::dggan_losses(tape, out.prediction, logit, &labels, &roles)?.generator
            }
            Method::Dnn => unreachable!("dnn has no generator"),
        };
        Ok((loss, g_params))
    }

    /// Generator objective on fixed minibatches, without updating anything.
    pub fn generator_objective(&self, batches: &Batches) -> Result<f64, TrainError> {
        let mut tape = Tape::new();
        let (loss, _) = self.record_generator_objective(&mut tape, batches)?;
        Ok(scalar(&tape, loss))
    }

    /// One Adam step on the generator; returns the generator loss before the update.
    pub fn generator_update(&mut self, batches: &Batches) -> Result<f64, TrainError> {
        let mut tape = Tape::new();
        let (loss, params) = self.record_generator_objective(&mut tape, batches)?;
        let value = scalar(&tape, loss);
        if !value.is_finite() {
            return Err(TrainError::NonFinite {
                report: LossReport {
                    step: self.step + 1,
                    generator_loss: value,
                    ..LossReport::default()
                },
            });
        }
        let grads = tape.backward(loss)?;
        let g = collect_grads(&grads, &params);
        let generator = self.generator.as_mut().expect("checked above");
        self.opt_g.step(generator.net_mut().parameters_mut(), &g);
        self.counters.generator_updates += 1;
        self.last_generator_loss = value;
        Ok(value)
    }

    /// Sample, one discriminator update, then one generator update (GAN methods).
    pub fn step(&mut self) -> Result<LossReport, TrainError> {
        let batches = self.sample_batches();
        let mut report = self.discriminator_update(&batches)?;
        if self.config.method.uses_generator() {
            report.generator_loss = self.generator_update(&batches).map_err(|e| match e {
                TrainError::NonFinite { report: g } => TrainError::NonFinite {
                    report: LossReport {
                        generator_loss: g.generator_loss,
                        ..report
                    },
                },
                other => other,
            })?;
        }
        self.step += 1;
        Ok(report)
    }

    pub fn evaluate(&self) -> Result<f64, TrainError> {
        evaluate(&self.discriminator, &self.bundle.test)
    }

    /// Runs the configured number of steps, evaluating every `eval_interval` steps
    /// and after the last one.
    pub fn run(mut self) -> Result<TrainOutcome, TrainError> {
        let mut history = TrainHistory::default();
        let mut last_mae = f64::NAN;
        while self.step < self.config.steps {
            let report = self.step()?;
            if self.step.is_multiple_of(self.config.eval_interval) || self.step == self.config.steps {
                last_mae = self.evaluate()?;
                history.entries.push(HistoryEntry {
                    report,
                    test_mae: last_mae,
                });
            }
        }
        Ok(TrainOutcome {
            discriminator: self.discriminator,
            generator: self.generator,
            history,
            counters: self.counters,
            final_test_mae: last_mae,
        })
    }
}

/// Trains `config.method` on `bundle` from scratch.
pub fn train(config: TrainConfig, bundle: &DatasetBundle) -> Result<TrainOutcome, TrainError> {
    Trainer::new(config, bundle)?.run()
}

impl TrainOutcome {
    /// Snapshot of the discriminator's underlying network.
    pub fn discriminator_net(&self) -> &Mlp {
        self.discriminator.net()
    }
}
