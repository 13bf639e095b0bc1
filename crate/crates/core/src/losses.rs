//! SR-GAN objective terms as graph constructions on a [`Tape`].
//!
//! The discriminator is trained on three populations. Labeled rows get a
//! squared-error regression loss. Unlabeled rows are pulled toward the labeled
//! rows in mean-feature space (feature matching). Fake rows are pushed away
//! from the unlabeled rows (feature contrasting). The generator minimises the
//! fake-vs-unlabeled feature distance, which directly opposes the contrasting
//! term.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{AutodiffError, Tape, Tensor, Var};
use crate::models::{Discriminator, ModelError, ParamVars};

pub const DEFAULT_LAMBDA: f64 = 10.0;

#[derive(Debug, Error)]
pub enum LossError {
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{what}: shapes {left:?} and {right:?} differ")]
    ShapeMismatch {
        what: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("{0} needs at least one row")]
    Empty(&'static str),
    #[error("penalty weight must be finite and non-negative, got {0}")]
    InvalidLambda(f64),
    #[error("unknown loss variant {0:?} (expected log, sqrt or linear)")]
    UnknownVariant(String),
    #[error("row roles ({roles}) do not match batch rows ({rows})")]
    RoleMismatch { roles: usize, rows: usize },
}

/// Which feature-contrasting / feature-matching pair the SR-GAN uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LossVariant {
    /// `L_fake = -‖ln(d_f + 1)‖₁`, `L_unlabeled = L_G = ‖d_f‖²₂`
    #[serde(rename = "log")]
    LogContrast,
    /// `L_fake = -‖√(d_f + 1)‖₁`, `L_unlabeled = L_G = ‖d_f‖²₂`
    #[serde(rename = "sqrt")]
    SqrtContrast,
    /// `L_fake = -‖d_f‖₁`, `L_unlabeled = L_G = ‖d_f‖₂`
    #[serde(rename = "linear")]
    LinearContrast,
}

impl LossVariant {
    pub const ALL: [LossVariant; 3] = [
        LossVariant::LogContrast,
        LossVariant::SqrtContrast,
        LossVariant::LinearContrast,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LossVariant::LogContrast => "log",
            LossVariant::SqrtContrast => "sqrt",
            LossVariant::LinearContrast => "linear",
        }
    }

    /// Whether the matching terms use the squared L2 norm (otherwise the plain norm).
    pub fn squared_matching(self) -> bool {
        !matches!(self, LossVariant::LinearContrast)
    }
}

impl fmt::Display for LossVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossVariant {
    type Err = LossError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "log" | "logcontrast" => Ok(LossVariant::LogContrast),
            "sqrt" | "sqrtcontrast" => Ok(LossVariant::SqrtContrast),
            "linear" | "linearcontrast" => Ok(LossVariant::LinearContrast),
            _ => Err(LossError::UnknownVariant(s.to_owned())),
        }
    }
}

/// Per-term loss values for one training step.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossReport {
    pub step: u64,
    pub labeled_loss: f64,
    pub unlabeled_loss: f64,
    pub fake_loss: f64,
    pub gradient_penalty: f64,
    pub generator_loss: f64,
}

impl LossReport {
    pub const CSV_HEADER: &'static str = "step,labeled,unlabeled,fake,penalty,generator";

    pub fn discriminator_total(&self) -> f64 {
        self.labeled_loss + self.unlabeled_loss + self.fake_loss + self.gradient_penalty
    }

    pub fn is_finite(&self) -> bool {
        [
            self.labeled_loss,
            self.unlabeled_loss,
            self.fake_loss,
            self.gradient_penalty,
            self.generator_loss,
        ]
        .iter()
        .all(|v| v.is_finite())
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.step,
            self.labeled_loss,
            self.unlabeled_loss,
            self.fake_loss,
            self.gradient_penalty,
            self.generator_loss
        )
    }
}

fn check_same(what: &'static str, tape: &Tape, a: Var, b: Var) -> Result<(), LossError> {
    let (left, right) = (tape.shape(a), tape.shape(b));
    if left != right {
        return Err(LossError::ShapeMismatch { what, left, right });
    }
    Ok(())
}

/// `d_f = |mean_a - mean_b|`, elementwise.
pub fn feature_distance(tape: &mut Tape, mean_a: Var, mean_b: Var) -> Result<Var, LossError> {
    check_same("feature_distance", tape, mean_a, mean_b)?;
    let diff = tape.sub(mean_a, mean_b)?;
    Ok(tape.abs(diff)?)
}

/// Mean squared error between n×1 predictions and labels.
pub fn labeled_loss(tape: &mut Tape, predictions: Var, labels: &Tensor) -> Result<Var, LossError> {
    let shape = tape.shape(predictions);
    if shape != labels.shape() {
        return Err(LossError::ShapeMismatch {
            what: "labeled_loss",
            left: shape,
            right: labels.shape(),
        });
    }
    if shape.0 == 0 {
        return Err(LossError::Empty("labeled_loss"));
    }
    let target = tape.constant(labels.clone());
    let diff = tape.sub(predictions, target)?;
    let sq = tape.square(diff)?;
    let total = tape.sum(sq)?;
    Ok(tape.scale(total, 1.0 / shape.0 as f64)?)
}

fn squared_l2(tape: &mut Tape, d: Var) -> Result<Var, LossError> {
    let sq = tape.square(d)?;
    Ok(tape.sum(sq)?)
}

fn l2(tape: &mut Tape, d: Var) -> Result<Var, LossError> {
    let sq = squared_l2(tape, d)?;
    Ok(tape.sqrt(sq)?)
}

/// Feature matching between labeled and unlabeled means: `‖d_f‖²₂`.
///
/// The linear variant uses `‖d_f‖₂`; see [`unlabeled_loss_for`].
pub fn unlabeled_loss(tape: &mut Tape, d_f: Var) -> Result<Var, LossError> {
    squared_l2(tape, d_f)
}

pub fn unlabeled_loss_for(
    tape: &mut Tape,
    d_f: Var,
    variant: LossVariant,
) -> Result<Var, LossError> {
    if variant.squared_matching() {
        squared_l2(tape, d_f)
    } else {
        l2(tape, d_f)
    }
}

/// Feature contrasting between fake and unlabeled means.
pub fn fake_loss(tape: &mut Tape, d_f: Var, variant: LossVariant) -> Result<Var, LossError> {
    let per_feature = match variant {
        LossVariant::LogContrast => tape.log1p_abs(d_f)?,
        LossVariant::SqrtContrast => tape.sqrt_shift(d_f)?,
        LossVariant::LinearContrast => tape.abs(d_f)?,
    };
    let l1 = tape.sum(per_feature)?;
    Ok(tape.scale(l1, -1.0)?)
}

/// Generator feature matching between fake and unlabeled means.
pub fn generator_loss(tape: &mut Tape, d_f: Var, variant: LossVariant) -> Result<Var, LossError> {
    unlabeled_loss_for(tape, d_f, variant)
}

/// `λ · max(‖∂(Σ feature_mean)/∂input‖²₂ - 1, 0)`, differentiable to everything
/// upstream of `feature_mean`.
pub fn one_sided_penalty(
    tape: &mut Tape,
    feature_mean: Var,
    input: Var,
    lambda: f64,
) -> Result<Var, LossError> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(LossError::InvalidLambda(lambda));
    }
    let norm_sq = tape.grad_norm_sq_wrt_input(feature_mean, input)?;
    let excess = tape.add_scalar(norm_sq, -1.0)?;
    let hinge = tape.leaky_relu(excess, 0.0)?;
    Ok(tape.scale(hinge, lambda)?)
}

/// Row-wise `α·unlabeled + (1-α)·fake`.
pub fn interpolate(unlabeled: &Tensor, fake: &Tensor, alphas: &[f64]) -> Result<Tensor, LossError> {
    if unlabeled.shape() != fake.shape() {
        return Err(LossError::ShapeMismatch {
            what: "interpolate",
            left: unlabeled.shape(),
            right: fake.shape(),
        });
    }
    if alphas.len() != unlabeled.rows() {
        return Err(LossError::ShapeMismatch {
            what: "interpolate alphas",
            left: unlabeled.shape(),
            right: (alphas.len(), 1),
        });
    }
    let cols = unlabeled.cols();
    let data = (0..unlabeled.rows())
        .flat_map(|r| {
            let a = alphas[r];
            unlabeled
                .row(r)
                .iter()
                .zip(fake.row(r))
                .map(move |(&u, &f)| a * u + (1.0 - a) * f)
        })
        .collect();
    Ok(Tensor::from_raw(unlabeled.rows(), cols, data))
}

/// Gradient penalty on the mean feature vector of an interpolated batch, with
/// explicit per-row mixing weights.
pub fn gradient_penalty_with_alphas(
    tape: &mut Tape,
    discriminator: &Discriminator,
    params: &ParamVars,
    unlabeled: &Tensor,
    fake: &Tensor,
    alphas: &[f64],
    lambda: f64,
) -> Result<Var, LossError> {
    let mixed = interpolate(unlabeled, fake, alphas)?;
    let input = tape.input(mixed);
    let out = discriminator.forward(tape, params, input)?;
    let mean = tape.mean_rows(out.features)?;
    one_sided_penalty(tape, mean, input, lambda)
}

/// Draws one `α ~ U(0,1)` per row and applies [`gradient_penalty_with_alphas`].
pub fn gradient_penalty<R: Rng + ?Sized>(
    tape: &mut Tape,
    discriminator: &Discriminator,
    params: &ParamVars,
    unlabeled: &Tensor,
    fake: &Tensor,
    lambda: f64,
    rng: &mut R,
) -> Result<Var, LossError> {
    let alphas: Vec<f64> = (0..unlabeled.rows()).map(|_| rng.random::<f64>()).collect();
    gradient_penalty_with_alphas(tape, discriminator, params, unlabeled, fake, &alphas, lambda)
}

/// Source of each row in a dual-goal batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowRole {
    Labeled,
    Unlabeled,
    Fake,
}

fn mask(roles: &[RowRole], keep: impl Fn(RowRole) -> bool) -> (Tensor, usize) {
    let data: Vec<f64> = roles
        .iter()
        .map(|&r| if keep(r) { 1.0 } else { 0.0 })
        .collect();
    let count = data.iter().filter(|&&v| v > 0.0).count();
    (Tensor::from_raw(roles.len(), 1, data), count)
}

/// Masked mean of an n×1 node; `None` when the mask selects nothing.
fn masked_mean(
    tape: &mut Tape,
    values: Var,
    mask: Tensor,
    count: usize,
) -> Result<Option<Var>, LossError> {
    if count == 0 {
        return Ok(None);
    }
    let kept = tape.mul_const(values, mask)?;
    let total = tape.sum(kept)?;
    Ok(Some(tape.scale(total, 1.0 / count as f64)?))
}

/// Scalar nodes produced by [`dggan_losses`].
#[derive(Debug, Clone, Copy)]
pub struct DgGanLosses {
    pub discriminator: Var,
    pub generator: Var,
    /// Labeled-row MSE, absent when the batch has no labeled rows.
    pub regression: Option<Var>,
    /// Real-vs-fake cross-entropy, absent when the batch has only labeled rows.
    pub adversarial: Option<Var>,
}

/// Dual-goal GAN objectives.
///
/// The discriminator loss is the regression MSE over labeled rows plus the
/// logit-form binary cross-entropy over unlabeled (target real) and fake
/// (target fake) rows. The generator loss is the cross-entropy pushing fake rows
/// toward "real". `labels` entries on non-labeled rows are ignored.
pub fn dggan_losses(
    tape: &mut Tape,
    predictions: Var,
    logits: Var,
    labels: &Tensor,
    roles: &[RowRole],
) -> Result<DgGanLosses, LossError> {
    let rows = tape.shape(predictions).0;
    check_same("dggan_losses", tape, predictions, logits)?;
    if labels.shape() != (rows, 1) || tape.shape(predictions).1 != 1 {
        return Err(LossError::ShapeMismatch {
            what: "dggan_losses labels",
            left: tape.shape(predictions),
            right: labels.shape(),
        });
    }
    if roles.len() != rows {
        return Err(LossError::RoleMismatch {
            roles: roles.len(),
            rows,
        });
    }

    let (labeled_mask, n_labeled) = mask(roles, |r| r == RowRole::Labeled);
    let target = tape.constant(labels.clone());
    let diff = tape.sub(predictions, target)?;
    let sq = tape.square(diff)?;
    let mse = masked_mean(tape, sq, labeled_mask, n_labeled)?;

    // BCE(z, t) = softplus(z) - t·z, with t = 1 for unlabeled rows and 0 for fakes
    let (adv_mask, n_adv) = mask(roles, |r| r != RowRole::Labeled);
    let (real_target, _) = mask(roles, |r| r == RowRole::Unlabeled);
    let sp = tape.softplus(logits)?;
    let tz = tape.mul_const(logits, real_target)?;
    let bce_rows = tape.sub(sp, tz)?;
    let bce = masked_mean(tape, bce_rows, adv_mask, n_adv)?;

    let discriminator = match (mse, bce) {
        (Some(a), Some(b)) => tape.add(a, b)?,
        (Some(a), None) | (None, Some(a)) => a,
        (None, None) => return Err(LossError::Empty("dggan_losses")),
    };

    // BCE(z, 1) = softplus(-z)
    let (fake_mask, n_fake) = mask(roles, |r| r == RowRole::Fake);
    let neg = tape.scale(logits, -1.0)?;
    let sp_neg = tape.softplus(neg)?;
    let generator = match masked_mean(tape, sp_neg, fake_mask, n_fake)? {
        Some(v) => v,
        None => tape.constant(Tensor::scalar(0.0)),
    };
    Ok(DgGanLosses {
        discriminator,
        generator,
        regression: mse,
        adversarial: bce,
    })
}
