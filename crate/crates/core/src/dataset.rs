//! Polynomial coefficient-estimation benchmark.
//!
//! Each example concatenates noisy samples of five random quartics
//! `y = a4·x⁴ + a3·x³ + a2·x² + x` taken on a 10-point grid over `[-1, 1]`.
//! Only the first polynomial carries the label (its `a3`); the other forty
//! observations are distractors.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::autodiff::Tensor;

pub const SAMPLES_PER_POLYNOMIAL: usize = 10;
pub const POLYNOMIALS_PER_EXAMPLE: usize = 5;
pub const OBSERVATION_COUNT: usize = SAMPLES_PER_POLYNOMIAL * POLYNOMIALS_PER_EXAMPLE;
pub const DEFAULT_NOISE_SIGMA: f64 = 0.1;
pub const DEFAULT_TEST_SIZE: usize = 1_000;

const CSV_MAGIC: &str = "# srgan-dataset v1";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("noise sigma must be finite and non-negative, got {0}")]
    InvalidNoise(f64),
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolynomialCoeffs {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
}

impl PolynomialCoeffs {
    pub fn evaluate(&self, x: f64) -> f64 {
        evaluate_polynomial(self, x)
    }
}

/// `a` drawn from `b·U(-2,-1) + (1-b)·U(1,2)` with `b ~ Bernoulli(1/2)`.
fn sample_signed_magnitude<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    if rng.random_bool(0.5) {
        rng.random_range(-2.0..-1.0)
    } else {
        rng.random_range(1.0..2.0)
    }
}

pub fn sample_coeffs<R: Rng + ?Sized>(rng: &mut R) -> PolynomialCoeffs {
    let a3 = rng.random_range(-1.0..1.0);
    let a2 = sample_signed_magnitude(rng);
    let a4 = sample_signed_magnitude(rng);
    PolynomialCoeffs {
        a1: 1.0,
        a2,
        a3,
        a4,
    }
}

pub fn evaluate_polynomial(c: &PolynomialCoeffs, x: f64) -> f64 {
    x * (c.a1 + x * (c.a2 + x * (c.a3 + x * c.a4)))
}

/// The inclusive 10-point grid over `[-1, 1]`.
pub fn sample_grid() -> [f64; SAMPLES_PER_POLYNOMIAL] {
    let last = (SAMPLES_PER_POLYNOMIAL - 1) as f64;
    std::array::from_fn(|i| -1.0 + 2.0 * i as f64 / last)
}

pub fn sample_points(c: &PolynomialCoeffs) -> [f64; SAMPLES_PER_POLYNOMIAL] {
    sample_grid().map(|x| evaluate_polynomial(c, x))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub observations: Vec<f64>,
    pub label: Option<f64>,
}

/// Draws five polynomials, samples each on the grid, then adds `N(0, σ²)` noise
/// to all fifty observations. The label is the noise-free `a3` of polynomial 0.
pub fn generate_example<R: Rng + ?Sized>(
    rng: &mut R,
    noise_sigma: f64,
) -> Result<Example, DatasetError> {
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(DatasetError::InvalidNoise(noise_sigma));
    }
    let mut observations = Vec::with_capacity(OBSERVATION_COUNT);
    let mut label = 0.0;
    for k in 0..POLYNOMIALS_PER_EXAMPLE {
        let coeffs = sample_coeffs(rng);
        if k == 0 {
            label = coeffs.a3;
        }
        observations.extend(sample_points(&coeffs));
    }
    // noise is always drawn so the stream position does not depend on sigma
    for obs in observations.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *obs += noise_sigma * z;
    }
    Ok(Example {
        observations,
        label: Some(label),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetBundle {
    pub labeled: Vec<Example>,
    pub unlabeled: Vec<Example>,
    pub test: Vec<Example>,
    pub seed: u64,
    pub noise_sigma: f64,
}

/// Generates test, labeled and unlabeled sets, in that order, from one seeded stream.
///
/// The fixed order means growing `n_unlabeled` never changes the test or labeled sets.
pub fn build_bundle(
    seed: u64,
    n_labeled: usize,
    n_unlabeled: usize,
    n_test: usize,
    noise_sigma: f64,
) -> Result<DatasetBundle, DatasetError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |n: usize| -> Result<Vec<Example>, DatasetError> {
        (0..n).map(|_| generate_example(&mut rng, noise_sigma)).collect()
    };
    let test = draw(n_test)?;
    let labeled = draw(n_labeled)?;
    let mut unlabeled = draw(n_unlabeled)?;
    for ex in &mut unlabeled {
        ex.label = None;
    }
    Ok(DatasetBundle {
        labeled,
        unlabeled,
        test,
        seed,
        noise_sigma,
    })
}

/// Stacks observations into an n×50 tensor.
pub fn observations_tensor(examples: &[Example]) -> Tensor {
    let data = examples
        .iter()
        .flat_map(|e| e.observations.iter().copied())
        .collect();
    Tensor::from_raw(examples.len(), OBSERVATION_COUNT, data)
}

/// Labels as an n×1 tensor; unlabeled examples contribute `None`.
pub fn labels_tensor(examples: &[Example]) -> Option<Tensor> {
    let data = examples.iter().map(|e| e.label).collect::<Option<Vec<_>>>()?;
    Some(Tensor::from_raw(examples.len(), 1, data))
}

impl DatasetBundle {
    /// SHA-256 over seed, noise level and the bit patterns of every value, in split order.
    pub fn checksum(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update(self.noise_sigma.to_bits().to_le_bytes());
        for (tag, split) in [
            (0u8, &self.test),
            (1, &self.labeled),
            (2, &self.unlabeled),
        ] {
            hasher.update([tag]);
            hasher.update((split.len() as u64).to_le_bytes());
            for ex in split {
                for v in &ex.observations {
                    hasher.update(v.to_bits().to_le_bytes());
                }
                match ex.label {
                    Some(l) => {
                        hasher.update([1]);
                        hasher.update(l.to_bits().to_le_bytes());
                    }
                    None => hasher.update([0]),
                }
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

    /// Writes the bundle as CSV; every value uses 17 significant digits.
    pub fn write_csv(&self, path: &Path) -> Result<(), DatasetError> {
        fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{CSV_MAGIC}");
        let _ = writeln!(out, "# seed={}", self.seed);
        let _ = writeln!(out, "# noise_sigma={:.16e}", self.noise_sigma);
        out.push_str("split");
        for i in 0..OBSERVATION_COUNT {
            let _ = write!(out, ",o{i}");
        }
        out.push_str(",label\n");
        for (name, split) in [
            ("test", &self.test),
            ("labeled", &self.labeled),
            ("unlabeled", &self.unlabeled),
        ] {
            for ex in split {
                out.push_str(name);
                for v in &ex.observations {
                    let _ = write!(out, ",{v:.16e}");
                }
                match ex.label {
                    Some(l) => {
                        let _ = writeln!(out, ",{l:.16e}");
                    }
                    None => out.push_str(",\n"),
                }
            }
        }
        out
    }

    pub fn read_csv(path: &Path) -> Result<Self, DatasetError> {
        Self::from_csv(&fs::read_to_string(path)?)
    }

    pub fn from_csv(text: &str) -> Result<Self, DatasetError> {
        let parse_err = |line: usize, message: String| DatasetError::Parse { line, message };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| parse_err(0, format!("missing {what}")))
        };
        let (n, magic) = next("header")?;
        if magic != CSV_MAGIC {
            return Err(parse_err(n, format!("unexpected header {magic:?}")));
        }
        let meta = |(n, line): (usize, &str), key: &str| -> Result<String, DatasetError> {
            line.strip_prefix("# ")
                .and_then(|rest| rest.strip_prefix(key))
                .and_then(|rest| rest.strip_prefix('='))
                .map(str::to_owned)
                .ok_or_else(|| parse_err(n, format!("expected `# {key}=...`")))
        };
        let seed_line = next("seed")?;
        let seed = meta(seed_line, "seed")?
            .parse()
            .map_err(|e| parse_err(seed_line.0, format!("seed: {e}")))?;
        let sigma_line = next("noise_sigma")?;
        let noise_sigma = meta(sigma_line, "noise_sigma")?
            .parse()
            .map_err(|e| parse_err(sigma_line.0, format!("noise_sigma: {e}")))?;
        let _columns = next("column header")?;

        let mut bundle = DatasetBundle {
            labeled: Vec::new(),
            unlabeled: Vec::new(),
            test: Vec::new(),
            seed,
            noise_sigma,
        };
        for (n, line) in lines {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != OBSERVATION_COUNT + 2 {
                return Err(parse_err(n, format!("expected {} fields", OBSERVATION_COUNT + 2)));
            }
            let observations = fields[1..=OBSERVATION_COUNT]
                .iter()
                .map(|f| f.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| parse_err(n, e.to_string()))?;
            let label = match fields[OBSERVATION_COUNT + 1] {
                "" => None,
                f => Some(f.parse::<f64>().map_err(|e| parse_err(n, e.to_string()))?),
            };
            let example = Example {
                observations,
                label,
            };
            match fields[0] {
                "test" => bundle.test.push(example),
                "labeled" => bundle.labeled.push(example),
                "unlabeled" => bundle.unlabeled.push(example),
                other => return Err(parse_err(n, format!("unknown split {other:?}"))),
            }
        }
        Ok(bundle)
    }
}
