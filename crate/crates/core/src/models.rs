//! Fully connected generator and discriminator networks.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use rand::Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::autodiff::{AutodiffError, Tape, Tensor, Var};
use crate::dataset::OBSERVATION_COUNT;

pub const DEFAULT_SLOPE: f64 = 0.1;
pub const HIDDEN_WIDTH: usize = 10;
pub const HIDDEN_LAYERS: usize = 4;
pub const DEFAULT_NOISE_DIM: usize = 10;

const CHECKPOINT_MAGIC: &str = "srgan-checkpoint v1";

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid network spec: {0}")]
    InvalidSpec(String),
    #[error("input width {found} does not match network input width {expected}")]
    WidthMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("io: {0}")]
    Io(#[from] io::Error),
}

/// Layer widths (input, hidden..., output), leaky-ReLU slope, and which hidden
/// layer's activations are exposed as the feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpSpec {
    pub widths: Vec<usize>,
    pub slope: f64,
    pub feature_layer: usize,
}

impl MlpSpec {
    fn stacked(input: usize, output: usize) -> Self {
        let mut widths = vec![input];
        widths.extend(std::iter::repeat_n(HIDDEN_WIDTH, HIDDEN_LAYERS));
        widths.push(output);
        Self {
            widths,
            slope: DEFAULT_SLOPE,
            feature_layer: HIDDEN_LAYERS - 1,
        }
    }

    /// 50 → 10 → 10 → 10 → 10 → 1, features tapped at the last hidden layer.
    pub fn discriminator() -> Self {
        Self::stacked(OBSERVATION_COUNT, 1)
    }

    /// Same body as [`MlpSpec::discriminator`] with a regression unit and a real/fake logit.
    pub fn dual_head_discriminator() -> Self {
        Self::stacked(OBSERVATION_COUNT, 2)
    }

    /// noise_dim → 10 → 10 → 10 → 10 → 50.
    pub fn generator(noise_dim: usize) -> Self {
        Self::stacked(noise_dim, OBSERVATION_COUNT)
    }

    pub fn input_width(&self) -> usize {
        self.widths[0]
    }

    pub fn output_width(&self) -> usize {
        *self.widths.last().expect("validated spec has widths")
    }

    pub fn hidden_layers(&self) -> usize {
        self.widths.len().saturating_sub(2)
    }

    pub fn feature_width(&self) -> usize {
        self.widths[self.feature_layer + 1]
    }

    pub fn parameter_count(&self) -> usize {
        self.widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.widths.len() < 3 {
            return Err(ModelError::InvalidSpec(
                "need an input, at least one hidden layer, and an output".into(),
            ));
        }
        if self.widths.contains(&0) {
            return Err(ModelError::InvalidSpec("layer widths must be positive".into()));
        }
        if self.feature_layer >= self.hidden_layers() {
            return Err(ModelError::InvalidSpec(format!(
                "feature layer {} out of range for {} hidden layers",
                self.feature_layer,
                self.hidden_layers()
            )));
        }
        if !self.slope.is_finite() {
            return Err(ModelError::InvalidSpec("slope must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// fan_in × fan_out
    pub weight: Tensor,
    /// 1 × fan_out
    pub bias: Tensor,
}

/// Tape handles for one registration of a network's parameters, ordered
/// `[w0, b0, w1, b1, ...]`.
#[derive(Debug, Clone)]
pub struct ParamVars(Vec<Var>);

impl ParamVars {
    pub fn vars(&self) -> &[Var] {
        &self.0
    }
}

#[derive(Debug, Clone)]
pub struct MlpOutputs {
    pub output: Var,
    /// Post-activation output of every hidden layer.
    pub hidden: Vec<Var>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    spec: MlpSpec,
    layers: Vec<Dense>,
}

impl Mlp {
    /// Glorot-uniform weights, zero biases.
    pub fn new<R: Rng + ?Sized>(spec: MlpSpec, rng: &mut R) -> Result<Self, ModelError> {
        spec.validate()?;
        let layers = spec
            .widths
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let data = (0..fan_in * fan_out)
                    .map(|_| rng.random_range(-limit..limit))
                    .collect();
                Dense {
                    weight: Tensor::from_raw(fan_in, fan_out, data),
                    bias: Tensor::zeros(1, fan_out),
                }
            })
            .collect();
        Ok(Self { spec, layers })
    }

    pub fn zeros(spec: MlpSpec) -> Result<Self, ModelError> {
        spec.validate()?;
        let layers = spec
            .widths
            .windows(2)
            .map(|w| Dense {
                weight: Tensor::zeros(w[0], w[1]),
                bias: Tensor::zeros(1, w[1]),
            })
            .collect();
        Ok(Self { spec, layers })
    }

    /// Rebuilds a network from layer-ordered parameters `[w0, b0, w1, b1, ...]`.
    pub fn from_parameters(spec: MlpSpec, params: Vec<Tensor>) -> Result<Self, ModelError> {
        spec.validate()?;
        let expected: Vec<(usize, usize)> = spec
            .widths
            .windows(2)
            .flat_map(|w| [(w[0], w[1]), (1, w[1])])
            .collect();
        let found: Vec<_> = params.iter().map(Tensor::shape).collect();
        if expected != found {
            return Err(ModelError::InvalidSpec(format!(
                "parameter shapes {found:?} do not match spec {expected:?}"
            )));
        }
        let mut it = params.into_iter();
        let mut layers = Vec::new();
        while let (Some(weight), Some(bias)) = (it.next(), it.next()) {
            layers.push(Dense { weight, bias });
        }
        Ok(Self { spec, layers })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn parameters(&self) -> impl Iterator<Item = &Tensor> {
        self.layers.iter().flat_map(|l| [&l.weight, &l.bias])
    }

    pub(crate) fn parameters_mut(&mut self) -> impl Iterator<Item = &mut Tensor> {
        self.layers
            .iter_mut()
            .flat_map(|l| [&mut l.weight, &mut l.bias])
    }

    /// SHA-256 of all parameter bit patterns; changes iff any parameter changes.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for p in self.parameters() {
            for v in p.data() {
                hasher.update(v.to_bits().to_le_bytes());
            }
        }
        hasher
            .finalize()
            .iter()
            .fold(String::with_capacity(64), |mut s, b| {
                let _ = write!(s, "{b:02x}");
                s
            })
    }

    /// Records the parameters as leaves. Trainable registrations report gradients;
    /// frozen ones are constants on this tape.
    pub fn register(&self, tape: &mut Tape, trainable: bool) -> ParamVars {
        ParamVars(
            self.parameters()
                .map(|p| {
                    if trainable {
                        tape.param(p.clone())
                    } else {
                        tape.constant(p.clone())
                    }
                })
                .collect(),
        )
    }

    pub fn record(
        &self,
        tape: &mut Tape,
        params: &ParamVars,
        input: Var,
    ) -> Result<MlpOutputs, ModelError> {
        let width = tape.shape(input).1;
        if width != self.spec.input_width() {
            return Err(ModelError::WidthMismatch {
                expected: self.spec.input_width(),
                found: width,
            });
        }
        let last = self.layers.len() - 1;
        let mut h = input;
        let mut hidden = Vec::with_capacity(last);
        for (i, pair) in params.0.chunks_exact(2).enumerate() {
            let z = tape.matmul(h, pair[0])?;
            let z = tape.add_bias(z, pair[1])?;
            if i == last {
                return Ok(MlpOutputs { output: z, hidden });
            }
            h = tape.leaky_relu(z, self.spec.slope)?;
            hidden.push(h);
        }
        unreachable!("validated spec has an output layer")
    }

    /// Tape-free forward pass returning (output, feature activations).
    pub fn predict(&self, input: &Tensor) -> Result<(Tensor, Tensor), ModelError> {
        if input.cols() != self.spec.input_width() {
            return Err(ModelError::WidthMismatch {
                expected: self.spec.input_width(),
                found: input.cols(),
            });
        }
        let slope = self.spec.slope;
        let mut h = input.clone();
        let mut features = None;
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = h.matmul_unchecked(&layer.weight);
            let cols = z.cols();
            for row in z.data_mut().chunks_exact_mut(cols) {
                for (x, b) in row.iter_mut().zip(layer.bias.data()) {
                    *x += b;
                }
            }
            if i == last {
                h = z;
            } else {
                h = z.map(|v| if v > 0.0 { v } else { slope * v });
                if i == self.spec.feature_layer {
                    features = Some(h.clone());
                }
            }
        }
        Ok((h, features.expect("validated feature layer")))
    }
}

/// Regression network whose hidden activations double as the feature vector `f(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Discriminator {
    net: Mlp,
}

#[derive(Debug, Clone)]
pub struct DiscriminatorOutput {
    /// n×1 regression output (no squashing).
    pub prediction: Var,
    /// n×1 real/fake logit, present only for the dual-head variant.
    pub logit: Option<Var>,
    /// n×F tapped hidden activation.
    pub features: Var,
}

impl Discriminator {
    pub fn new<R: Rng + ?Sized>(spec: MlpSpec, rng: &mut R) -> Result<Self, ModelError> {
        Self::check_spec(&spec)?;
        Ok(Self {
            net: Mlp::new(spec, rng)?,
        })
    }

    pub fn from_mlp(net: Mlp) -> Result<Self, ModelError> {
        Self::check_spec(net.spec())?;
        Ok(Self { net })
    }

    fn check_spec(spec: &MlpSpec) -> Result<(), ModelError> {
        spec.validate()?;
        if spec.input_width() != OBSERVATION_COUNT {
            return Err(ModelError::InvalidSpec(format!(
                "discriminator input must be {OBSERVATION_COUNT} wide"
            )));
        }
        if !matches!(spec.output_width(), 1 | 2) {
            return Err(ModelError::InvalidSpec(
                "discriminator output must be 1 (regression) or 2 (regression + logit)".into(),
            ));
        }
        Ok(())
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    pub(crate) fn net_mut(&mut self) -> &mut Mlp {
        &mut self.net
    }

    pub fn is_dual_head(&self) -> bool {
        self.net.spec().output_width() == 2
    }

    pub fn register(&self, tape: &mut Tape, trainable: bool) -> ParamVars {
        self.net.register(tape, trainable)
    }

    pub fn forward(
        &self,
        tape: &mut Tape,
        params: &ParamVars,
        batch: Var,
    ) -> Result<DiscriminatorOutput, ModelError> {
        let out = self.net.record(tape, params, batch)?;
        let features = out.hidden[self.net.spec().feature_layer];
        if self.is_dual_head() {
            let prediction = tape.column(out.output, 0)?;
            let logit = tape.column(out.output, 1)?;
            Ok(DiscriminatorOutput {
                prediction,
                logit: Some(logit),
                features,
            })
        } else {
            Ok(DiscriminatorOutput {
                prediction: out.output,
                logit: None,
                features,
            })
        }
    }

    /// Records `batch` as a constant input and runs [`Discriminator::forward`].
    pub fn forward_batch(
        &self,
        tape: &mut Tape,
        params: &ParamVars,
        batch: &Tensor,
    ) -> Result<DiscriminatorOutput, ModelError> {
        let input = tape.constant(batch.clone());
        self.forward(tape, params, input)
    }

    /// Regression outputs (n×1) without a tape.
    pub fn predict(&self, batch: &Tensor) -> Result<Tensor, ModelError> {
        let (out, _) = self.net.predict(batch)?;
        if self.is_dual_head() {
            let data = (0..out.rows()).map(|r| out.get(r, 0)).collect();
            Ok(Tensor::from_raw(out.rows(), 1, data))
        } else {
            Ok(out)
        }
    }
}

/// Maps noise vectors to fake 50-observation examples.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    net: Mlp,
}

impl Generator {
    pub fn new<R: Rng + ?Sized>(spec: MlpSpec, rng: &mut R) -> Result<Self, ModelError> {
        Self::check_spec(&spec)?;
        Ok(Self {
            net: Mlp::new(spec, rng)?,
        })
    }

    pub fn from_mlp(net: Mlp) -> Result<Self, ModelError> {
        Self::check_spec(net.spec())?;
        Ok(Self { net })
    }

    fn check_spec(spec: &MlpSpec) -> Result<(), ModelError> {
        spec.validate()?;
        if spec.output_width() != OBSERVATION_COUNT {
            return Err(ModelError::InvalidSpec(format!(
                "generator output must be {OBSERVATION_COUNT} wide"
            )));
        }
        Ok(())
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    pub(crate) fn net_mut(&mut self) -> &mut Mlp {
        &mut self.net
    }

    pub fn noise_dim(&self) -> usize {
        self.net.spec().input_width()
    }

    pub fn register(&self, tape: &mut Tape, trainable: bool) -> ParamVars {
        self.net.register(tape, trainable)
    }

    pub fn forward(
        &self,
        tape: &mut Tape,
        params: &ParamVars,
        noise: &Tensor,
    ) -> Result<Var, ModelError> {
        let input = tape.constant(noise.clone());
        Ok(self.net.record(tape, params, input)?.output)
    }

    pub fn generate(&self, noise: &Tensor) -> Result<Tensor, ModelError> {
        Ok(self.net.predict(noise)?.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointMeta {
    pub kind: String,
    pub seed: u64,
    pub step: u64,
}

/// Writes a text header followed by the layer-ordered parameters as little-endian `f64`.
pub fn save_checkpoint(path: &Path, net: &Mlp, meta: &CheckpointMeta) -> Result<(), ModelError> {
    let spec = net.spec();
    let widths: Vec<String> = spec.widths.iter().map(usize::to_string).collect();
    let mut bytes = format!(
        "{CHECKPOINT_MAGIC}\nkind={}\nwidths={}\nslope={}\nfeature_layer={}\nseed={}\nstep={}\nparams={}\n\n",
        meta.kind,
        widths.join(","),
        spec.slope,
        spec.feature_layer,
        meta.seed,
        meta.step,
        spec.parameter_count()
    )
    .into_bytes();
    for p in net.parameters() {
        for v in p.data() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, bytes)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(Mlp, CheckpointMeta), ModelError> {
    let bytes = fs::read(path)?;
    let bad = |m: &str| ModelError::Checkpoint(m.to_owned());
    let split = bytes
        .windows(2)
        .position(|w| w == b"\n\n")
        .ok_or_else(|| bad("missing header terminator"))?;
    let header = std::str::from_utf8(&bytes[..split]).map_err(|_| bad("header is not utf-8"))?;
    let body = &bytes[split + 2..];
    let mut lines = header.lines();
    if lines.next() != Some(CHECKPOINT_MAGIC) {
        return Err(bad("not a checkpoint file"));
    }
    let mut fields = std::collections::HashMap::new();
    for line in lines {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| bad("malformed header line"))?;
        fields.insert(k, v);
    }
    let field = |k: &str| fields.get(k).copied().ok_or_else(|| bad(&format!("missing `{k}`")));
    let num_err = |k: &str| bad(&format!("bad value for `{k}`"));
    let widths = field("widths")?
        .split(',')
        .map(str::parse)
        .collect::<Result<Vec<usize>, _>>()
        .map_err(|_| num_err("widths"))?;
    let spec = MlpSpec {
        widths,
        slope: field("slope")?.parse().map_err(|_| num_err("slope"))?,
        feature_layer: field("feature_layer")?
            .parse()
            .map_err(|_| num_err("feature_layer"))?,
    };
    spec.validate()?;
    let meta = CheckpointMeta {
        kind: field("kind")?.to_owned(),
        seed: field("seed")?.parse().map_err(|_| num_err("seed"))?,
        step: field("step")?.parse().map_err(|_| num_err("step"))?,
    };
    let count: usize = field("params")?.parse().map_err(|_| num_err("params"))?;
    if count != spec.parameter_count() || body.len() != count * 8 {
        return Err(bad("parameter payload size does not match spec"));
    }
    let mut values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")));
    let params = spec
        .widths
        .windows(2)
        .flat_map(|w| [(w[0], w[1]), (1, w[1])])
        .map(|(r, c)| Tensor::new(r, c, values.by_ref().take(r * c).collect()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((Mlp::from_parameters(spec, params)?, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn default_shapes() {
        let d = MlpSpec::discriminator();
        assert_eq!(d.widths, vec![50, 10, 10, 10, 10, 1]);
        assert_eq!(d.feature_width(), 10);
        assert_eq!(MlpSpec::generator(10).widths, vec![10, 10, 10, 10, 10, 50]);
        assert!(MlpSpec {
            feature_layer: 4,
            ..MlpSpec::discriminator()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn init_is_glorot_and_seeded() {
        let spec = MlpSpec::discriminator();
        let a = Mlp::new(spec.clone(), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let b = Mlp::new(spec.clone(), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(a, b);
        for layer in a.layers() {
            assert!(layer.bias.data().iter().all(|&v| v == 0.0));
            let (fan_in, fan_out) = layer.weight.shape();
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            assert!(layer.weight.data().iter().all(|v| v.abs() <= limit));
        }
        let c = Mlp::new(spec, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert_ne!(a.fingerprint(), c.fingerprint());
    }

    #[test]
    fn zero_networks_output_zero() {
        let d = Discriminator::from_mlp(Mlp::zeros(MlpSpec::discriminator()).unwrap()).unwrap();
        let batch = Tensor::full(3, 50, 0.7);
        assert!(d.predict(&batch).unwrap().data().iter().all(|&v| v == 0.0));
        let g = Generator::from_mlp(Mlp::zeros(MlpSpec::generator(10)).unwrap()).unwrap();
        let fake = g.generate(&Tensor::full(4, 10, 1.3)).unwrap();
        assert_eq!(fake.shape(), (4, 50));
        assert!(fake.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn width_mismatch_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let d = Discriminator::new(MlpSpec::discriminator(), &mut rng).unwrap();
        let mut tape = Tape::new();
        let p = d.register(&mut tape, true);
        let err = d
            .forward_batch(&mut tape, &p, &Tensor::zeros(2, 49))
            .unwrap_err();
        assert!(matches!(
            err,
            ModelError::WidthMismatch {
                expected: 50,
                found: 49
            }
        ));
        let g = Generator::new(MlpSpec::generator(10), &mut rng).unwrap();
        let gp = g.register(&mut tape, true);
        assert!(g.forward(&mut tape, &gp, &Tensor::zeros(2, 3)).is_err());
        assert!(Discriminator::new(MlpSpec::generator(10), &mut rng).is_err());
    }

    #[test]
    fn tape_and_plain_forward_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let d = Discriminator::new(MlpSpec::dual_head_discriminator(), &mut rng).unwrap();
        let batch = Tensor::new(
            5,
            50,
            (0..250).map(|i| ((i * 37 % 101) as f64 / 50.0) - 1.0).collect(),
        )
        .unwrap();
        let mut tape = Tape::new();
        let p = d.register(&mut tape, false);
        let out = d.forward_batch(&mut tape, &p, &batch).unwrap();
        assert_eq!(tape.value(out.prediction), &d.predict(&batch).unwrap());
        assert!(out.logit.is_some());
        assert_eq!(tape.shape(out.features), (5, 10));
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.ckpt");
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = Mlp::new(MlpSpec::discriminator(), &mut rng).unwrap();
        let meta = CheckpointMeta {
            kind: "discriminator".into(),
            seed: 3,
            step: 17,
        };
        save_checkpoint(&path, &net, &meta).unwrap();
        let (loaded, loaded_meta) = load_checkpoint(&path).unwrap();
        assert_eq!(loaded_meta, meta);
        assert_eq!(loaded, net);
        let x = Tensor::full(2, 50, 0.25);
        assert_eq!(loaded.predict(&x).unwrap().0, net.predict(&x).unwrap().0);
    }

    #[test]
    fn truncated_checkpoint_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.ckpt");
        let net = Mlp::zeros(MlpSpec::generator(10)).unwrap();
        let meta = CheckpointMeta {
            kind: "generator".into(),
            seed: 0,
            step: 0,
        };
        save_checkpoint(&path, &net, &meta).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 8);
        fs::write(&path, bytes).unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(ModelError::Checkpoint(_))
        ));
    }
}
