//! Shared oracles for the integration and acceptance tests: a central
//! finite-difference gradient checker and a straight-line MLP forward pass.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use srgan::autodiff::{Tape, Tensor, Var};
use srgan::losses::{self, LossVariant, RowRole};
use srgan::models::{Discriminator, Generator, Mlp, MlpSpec};

pub const FD_STEP: f64 = 1e-5;
pub const GRAD_TOLERANCE: f64 = 1e-4;
/// Below `GRAD_FLOOR * max(1, |f|)` both gradients count as zero. Central
/// differences carry rounding noise of roughly |f| * 1e-16 / h, about
/// 1e-11 * |f| at h = 1e-5.
pub const GRAD_FLOOR: f64 = 1e-6;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_tensor(rng: &mut impl Rng, rows: usize, cols: usize, scale: f64) -> Tensor {
    let data = (0..rows * cols)
        .map(|_| rng.random_range(-scale..scale))
        .collect();
    Tensor::new(rows, cols, data).unwrap()
}

pub fn positive_tensor(rng: &mut impl Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Tensor {
    let data = (0..rows * cols).map(|_| rng.random_range(lo..hi)).collect();
    Tensor::new(rows, cols, data).unwrap()
}

pub fn rel_err(analytic: f64, numeric: f64, f_scale: f64) -> f64 {
    let floor = GRAD_FLOOR * f_scale.abs().max(1.0);
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

#[derive(Debug, Clone, Default)]
pub struct CheckStats {
    pub coords: usize,
    /// Coordinates whose ±h stencil straddles a kink (leaky-ReLU, abs, hinge).
    pub skipped: usize,
    pub max_rel: f64,
}

impl CheckStats {
    pub fn merge(&mut self, other: &CheckStats) {
        self.coords += other.coords;
        self.skipped += other.skipped;
        self.max_rel = self.max_rel.max(other.max_rel);
    }

    pub fn passes(&self) -> bool {
        self.max_rel < GRAD_TOLERANCE && self.skipped * 100 <= self.coords
    }
}

/// Compares `backward` against central differences for every entry of every
/// tensor in `params`. `build` records the scalar root from the given values
/// and returns it with the leaf handles of `params`, in order.
pub fn fd_check<F>(params: &[Tensor], build: F) -> CheckStats
where
    F: Fn(&mut Tape, &[Tensor]) -> (Var, Vec<Var>),
{
    let eval = |ps: &[Tensor]| {
        let mut tape = Tape::new();
        let (root, _) = build(&mut tape, ps);
        tape.value(root).item().unwrap()
    };
    let mut tape = Tape::new();
    let (root, vars) = build(&mut tape, params);
    assert_eq!(vars.len(), params.len());
    let grads = tape.backward(root).unwrap();
    let f0 = tape.value(root).item().unwrap();

    let mut stats = CheckStats::default();
    let mut work = params.to_vec();
    for (i, p) in params.iter().enumerate() {
        let analytic = grads
            .get(vars[i])
            .cloned()
            .unwrap_or_else(|| Tensor::zeros(p.rows(), p.cols()));
        for j in 0..p.len() {
            let orig = p.data()[j];
            work[i] = with_entry(p, j, orig + FD_STEP);
            let fp = eval(&work);
            work[i] = with_entry(p, j, orig - FD_STEP);
            let fm = eval(&work);
            work[i] = p.clone();

            stats.coords += 1;
            let right = fp - f0;
            let left = f0 - fm;
            if (right - left).abs() > 1e-3 * (right.abs() + left.abs()) + 1e-9 {
                stats.skipped += 1;
                continue;
            }
            let numeric = (fp - fm) / (2.0 * FD_STEP);
            stats.max_rel = stats.max_rel.max(rel_err(analytic.data()[j], numeric, f0));
        }
    }
    stats
}

fn with_entry(t: &Tensor, j: usize, v: f64) -> Tensor {
    let mut data = t.data().to_vec();
    data[j] = v;
    Tensor::new(t.rows(), t.cols(), data).unwrap()
}

/// Random weights and biases for `spec` (biases are nonzero, unlike the trainer's init).
pub fn random_mlp(rng: &mut impl Rng, spec: &MlpSpec, scale: f64) -> Mlp {
    let params = spec
        .widths
        .windows(2)
        .flat_map(|w| {
            let limit = scale * (6.0 / (w[0] + w[1]) as f64).sqrt();
            [random_tensor(rng, w[0], w[1], limit), random_tensor(rng, 1, w[1], 0.5)]
        })
        .collect();
    Mlp::from_parameters(spec.clone(), params).unwrap()
}

/// Straight-line forward pass over plain vectors: returns (outputs, features) per row.
pub fn plain_forward(net: &Mlp, input: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let spec = net.spec();
    let layers = net.layers();
    let mut outputs = Vec::new();
    let mut features = Vec::new();
    for x in input {
        let mut h = x.clone();
        let mut feat = Vec::new();
        for (l, layer) in layers.iter().enumerate() {
            let (fan_in, fan_out) = (layer.weight.rows(), layer.weight.cols());
            let mut z = vec![0.0; fan_out];
            for (o, zo) in z.iter_mut().enumerate() {
                let mut acc = layer.bias.get(0, o);
                for (i, hi) in h.iter().enumerate().take(fan_in) {
                    acc += hi * layer.weight.get(i, o);
                }
                *zo = acc;
            }
            if l + 1 < layers.len() {
                for v in &mut z {
                    if *v <= 0.0 {
                        *v *= spec.slope;
                    }
                }
                if l == spec.feature_layer {
                    feat = z.clone();
                }
            }
            h = z;
        }
        outputs.push(h);
        features.push(feat);
    }
    (outputs, features)
}

fn split_params(ps: &[Tensor], n: usize) -> (Vec<Tensor>, &[Tensor]) {
    (ps[..n].to_vec(), &ps[n..])
}

fn weighted_sum(tape: &mut Tape, v: Var, weights: &Tensor) -> Var {
    let m = tape.mul_const(v, weights.clone()).unwrap();
    tape.sum(m).unwrap()
}

/// The randomized gradient-check families: tensor primitives, every loss term
/// and both network forward passes. Each family runs `trials` random instances.
pub fn gradient_suite(trials: usize, seed: u64) -> Vec<(String, CheckStats)> {
    let mut out: Vec<(String, CheckStats)> = Vec::new();
    let mut record = |name: &str, s: CheckStats| {
        match out.iter_mut().find(|(n, _)| n == name) {
            Some((_, acc)) => acc.merge(&s),
            None => out.push((name.to_owned(), s)),
        }
    };
    let mut r = rng(seed);

    for _ in 0..trials {
        let (n, m, k) = (
            r.random_range(1..=8usize),
            r.random_range(1..=8usize),
            r.random_range(1..=8usize),
        );
        let a = random_tensor(&mut r, n, m, 2.0);
        let b = random_tensor(&mut r, n, m, 2.0);
        let w = random_tensor(&mut r, n, m, 1.0);
        let mm = random_tensor(&mut r, m, k, 2.0);
        let wk = random_tensor(&mut r, n, k, 1.0);
        let bias = random_tensor(&mut r, 1, m, 1.0);
        let pos = positive_tensor(&mut r, n, m, 0.2, 3.0);
        let c = r.random_range(-3.0..3.0);

        type Unary = fn(&mut Tape, Var) -> Var;
        let unary: [(&str, Unary); 9] = [
            ("leaky_relu", |t, x| t.leaky_relu(x, 0.1).unwrap()),
            ("abs", |t, x| t.abs(x).unwrap()),
            ("log1p_abs", |t, x| t.log1p_abs(x).unwrap()),
            ("square", |t, x| t.square(x).unwrap()),
            ("sqrt_shift", |t, x| t.sqrt_shift(x).unwrap()),
            ("softplus", |t, x| t.softplus(x).unwrap()),
            ("transpose", |t, x| {
                let y = t.transpose(x).unwrap();
                t.transpose(y).unwrap()
            }),
            ("mean_rows", |t, x| {
                let y = t.mean_rows(x).unwrap();
                let rows = t.shape(x).0;
                t.broadcast_rows(y, rows).unwrap()
            }),
            ("sum_rows", |t, x| {
                let y = t.sum_rows(x).unwrap();
                let rows = t.shape(x).0;
                t.broadcast_rows(y, rows).unwrap()
            }),
        ];
        for (name, f) in unary {
            let s = fd_check(std::slice::from_ref(&a), |t, ps| {
                let x = t.param(ps[0].clone());
                let y = f(t, x);
                (weighted_sum(t, y, &w), vec![x])
            });
            record(&format!("primitive:{name}"), s);
        }
        let s = fd_check(std::slice::from_ref(&pos), |t, ps| {
            let x = t.param(ps[0].clone());
            let y = t.sqrt(x).unwrap();
            (weighted_sum(t, y, &w), vec![x])
        });
        record("primitive:sqrt", s);

        type Binary = fn(&mut Tape, Var, Var) -> Var;
        let binary: [(&str, Binary); 3] = [
            ("add", |t, x, y| t.add(x, y).unwrap()),
            ("sub", |t, x, y| t.sub(x, y).unwrap()),
            ("mul", |t, x, y| t.mul(x, y).unwrap()),
        ];
        for (name, f) in binary {
            let s = fd_check(&[a.clone(), b.clone()], |t, ps| {
                let x = t.param(ps[0].clone());
                let y = t.param(ps[1].clone());
                let z = f(t, x, y);
                (weighted_sum(t, z, &w), vec![x, y])
            });
            record(&format!("primitive:{name}"), s);
        }
        let s = fd_check(&[a.clone(), mm.clone()], |t, ps| {
            let x = t.param(ps[0].clone());
            let y = t.param(ps[1].clone());
            let z = t.matmul(x, y).unwrap();
            (weighted_sum(t, z, &wk), vec![x, y])
        });
        record("primitive:matmul", s);
        let s = fd_check(&[a.clone(), bias.clone()], |t, ps| {
            let x = t.param(ps[0].clone());
            let y = t.param(ps[1].clone());
            let z = t.add_bias(x, y).unwrap();
            (weighted_sum(t, z, &w), vec![x, y])
        });
        record("primitive:add_bias", s);
        let s = fd_check(std::slice::from_ref(&a), |t, ps| {
            let x = t.param(ps[0].clone());
            let y = t.scale(x, c).unwrap();
            let y = t.add_scalar(y, c).unwrap();
            let y = t.mul_const(y, b.clone()).unwrap();
            (t.sum(y).unwrap(), vec![x])
        });
        record("primitive:scale+add_scalar+mul_const", s);
        let col = r.random_range(0..m);
        let s = fd_check(std::slice::from_ref(&a), |t, ps| {
            let x = t.param(ps[0].clone());
            let y = t.column(x, col).unwrap();
            let s = t.sum(y).unwrap();
            let f = t.fill(s, 2, 3).unwrap();
            let f = t.square(f).unwrap();
            (t.sum(f).unwrap(), vec![x])
        });
        record("primitive:column+fill", s);
    }

    for _ in 0..trials {
        let f = r.random_range(1..=8usize);
        let n = r.random_range(1..=8usize);
        let ma = random_tensor(&mut r, 1, f, 2.0);
        let mb = random_tensor(&mut r, 1, f, 2.0);
        let preds = random_tensor(&mut r, n, 1, 2.0);
        let labels = random_tensor(&mut r, n, 1, 1.0);
        let logits = random_tensor(&mut r, n, 1, 4.0);

        let s = fd_check(std::slice::from_ref(&preds), |t, ps| {
            let p = t.param(ps[0].clone());
            (losses::labeled_loss(t, p, &labels).unwrap(), vec![p])
        });
        record("loss:labeled", s);
        let s = fd_check(&[ma.clone(), mb.clone()], |t, ps| {
            let a = t.param(ps[0].clone());
            let b = t.param(ps[1].clone());
            let d = losses::feature_distance(t, a, b).unwrap();
            (losses::unlabeled_loss(t, d).unwrap(), vec![a, b])
        });
        record("loss:unlabeled", s);
        for v in LossVariant::ALL {
            let s = fd_check(&[ma.clone(), mb.clone()], |t, ps| {
                let a = t.param(ps[0].clone());
                let b = t.param(ps[1].clone());
                let d = losses::feature_distance(t, a, b).unwrap();
                (losses::fake_loss(t, d, v).unwrap(), vec![a, b])
            });
            record(&format!("loss:fake:{}", v.name()), s);
            let s = fd_check(&[ma.clone(), mb.clone()], |t, ps| {
                let a = t.param(ps[0].clone());
                let b = t.param(ps[1].clone());
                let d = losses::feature_distance(t, a, b).unwrap();
                (losses::generator_loss(t, d, v).unwrap(), vec![a, b])
            });
            record(&format!("loss:generator:{}", v.name()), s);
            let s = fd_check(&[ma.clone(), mb.clone()], |t, ps| {
                let a = t.param(ps[0].clone());
                let b = t.param(ps[1].clone());
                let d = losses::feature_distance(t, a, b).unwrap();
                (losses::unlabeled_loss_for(t, d, v).unwrap(), vec![a, b])
            });
            record(&format!("loss:unlabeled:{}", v.name()), s);
        }
        let roles: Vec<RowRole> = (0..n)
            .map(|_| match r.random_range(0..3) {
                0 => RowRole::Labeled,
                1 => RowRole::Unlabeled,
                _ => RowRole::Fake,
            })
            .collect();
        let s = fd_check(&[preds.clone(), logits.clone()], |t, ps| {
            let p = t.param(ps[0].clone());
            let l = t.param(ps[1].clone());
            let out = losses::dggan_losses(t, p, l, &labels, &roles).unwrap();
            (out.discriminator, vec![p, l])
        });
        record("loss:dggan_discriminator", s);
        let s = fd_check(&[preds.clone(), logits.clone()], |t, ps| {
            let p = t.param(ps[0].clone());
            let l = t.param(ps[1].clone());
            let out = losses::dggan_losses(t, p, l, &labels, &roles).unwrap();
            (out.generator, vec![p, l])
        });
        record("loss:dggan_generator", s);
    }

    // network families use batches of 1-3 rows
    let d_spec = MlpSpec::discriminator();
    let g_spec = MlpSpec::generator(srgan::models::DEFAULT_NOISE_DIM);
    let n_d = (d_spec.widths.len() - 1) * 2;
    for _ in 0..trials {
        let n = r.random_range(1..=3usize);
        let net = random_mlp(&mut r, &d_spec, 1.0);
        let x = random_tensor(&mut r, n, 50, 2.0);
        let w_pred = random_tensor(&mut r, n, 1, 1.0);
        let w_feat = random_tensor(&mut r, n, 10, 1.0);
        let mut params: Vec<Tensor> = net.parameters().cloned().collect();
        params.push(x.clone());
        let s = fd_check(&params, |t, ps| {
            let (p, rest) = split_params(ps, n_d);
            let d = Discriminator::from_mlp(Mlp::from_parameters(d_spec.clone(), p).unwrap()).unwrap();
            let pv = d.register(t, true);
            let input = t.param(rest[0].clone());
            let out = d.forward(t, &pv, input).unwrap();
            let a = weighted_sum(t, out.prediction, &w_pred);
            let b = weighted_sum(t, out.features, &w_feat);
            let mut vars = pv.vars().to_vec();
            vars.push(input);
            (t.add(a, b).unwrap(), vars)
        });
        record("forward:discriminator", s);

        let g = random_mlp(&mut r, &g_spec, 1.0);
        let z = random_tensor(&mut r, n, g_spec.widths[0], 2.0);
        let w_out = random_tensor(&mut r, n, 50, 1.0);
        let params: Vec<Tensor> = g.parameters().cloned().collect();
        let s = fd_check(&params, |t, ps| {
            let gen = Generator::from_mlp(Mlp::from_parameters(g_spec.clone(), ps.to_vec()).unwrap()).unwrap();
            let pv = gen.register(t, true);
            let out = gen.forward(t, &pv, &z).unwrap();
            (weighted_sum(t, out, &w_out), pv.vars().to_vec())
        });
        record("forward:generator", s);

        // penalty through the double-backward path; larger weights and a single
        // row keep the hinge active
        let net = random_mlp(&mut r, &d_spec, 1.6);
        let u = random_tensor(&mut r, 1, 50, 2.0);
        let fk = random_tensor(&mut r, 1, 50, 2.0);
        let alphas = [r.random_range(0.0..1.0)];
        let params: Vec<Tensor> = net.parameters().cloned().collect();
        let s = fd_check(&params, |t, ps| {
            let d = Discriminator::from_mlp(Mlp::from_parameters(d_spec.clone(), ps.to_vec()).unwrap()).unwrap();
            let pv = d.register(t, true);
            let pen = losses::gradient_penalty_with_alphas(t, &d, &pv, &u, &fk, &alphas, 10.0).unwrap();
            (pen, pv.vars().to_vec())
        });
        record("loss:gradient_penalty", s);
        let mut t = Tape::new();
        let d = Discriminator::from_mlp(net).unwrap();
        let pv = d.register(&mut t, false);
        let pen = losses::gradient_penalty_with_alphas(&mut t, &d, &pv, &u, &fk, &alphas, 10.0).unwrap();
        if t.value(pen).item().unwrap() > 0.0 {
            record("loss:gradient_penalty(active instances)", CheckStats { coords: 1, ..CheckStats::default() });
        }
    }
    out
}
