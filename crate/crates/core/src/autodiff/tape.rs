use super::{AutodiffError, Tensor};

/// Handle to a node recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    /// Topological ordinal of the node on its tape.
    pub fn id(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddBias(Var, Var),
    LeakyRelu(Var, f64),
    Abs(Var),
    Log1pAbs(Var),
    Square(Var),
    Sqrt(Var),
    SqrtShift(Var),
    Softplus(Var),
    MeanRows(Var),
    SumRows(Var),
    Sum(Var),
    Scale(Var, f64),
    AddScalar(Var),
    Transpose(Var),
    MulConst(Var, Tensor),
    BroadcastRows(Var),
    Fill(Var),
    Column(Var, usize),
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::MatMul(..) => "matmul",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::AddBias(..) => "add_bias",
            Op::LeakyRelu(..) => "leaky_relu",
            Op::Abs(..) => "abs",
            Op::Log1pAbs(..) => "log1p_abs",
            Op::Square(..) => "square",
            Op::Sqrt(..) => "sqrt",
            Op::SqrtShift(..) => "sqrt_shift",
            Op::Softplus(..) => "softplus",
            Op::MeanRows(..) => "mean_rows",
            Op::SumRows(..) => "sum_rows",
            Op::Sum(..) => "sum",
            Op::Scale(..) => "scale",
            Op::AddScalar(..) => "add_scalar",
            Op::Transpose(..) => "transpose",
            Op::MulConst(..) => "mul_const",
            Op::BroadcastRows(..) => "broadcast_rows",
            Op::Fill(..) => "fill",
            Op::Column(..) => "column",
        }
    }

    fn parents(&self) -> ([Option<Var>; 2], usize) {
        match *self {
            Op::Leaf => ([None, None], 0),
            Op::MatMul(a, b)
            | Op::Add(a, b)
            | Op::Sub(a, b)
            | Op::Mul(a, b)
            | Op::AddBias(a, b) => ([Some(a), Some(b)], 2),
            Op::LeakyRelu(a, _)
            | Op::Abs(a)
            | Op::Log1pAbs(a)
            | Op::Square(a)
            | Op::Sqrt(a)
            | Op::SqrtShift(a)
            | Op::Softplus(a)
            | Op::MeanRows(a)
            | Op::SumRows(a)
            | Op::Sum(a)
            | Op::Scale(a, _)
            | Op::AddScalar(a)
            | Op::Transpose(a)
            | Op::MulConst(a, _)
            | Op::BroadcastRows(a)
            | Op::Fill(a)
            | Op::Column(a, _) => ([Some(a), None], 1),
        }
    }
}

#[derive(Clone, Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
    is_param: bool,
}

/// Gradients of a scalar root with respect to every node that influences it.
#[derive(Clone, Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
    params: Vec<Var>,
}

impl Gradients {
    /// Gradient for `var`, or `None` when the root does not depend on it.
    pub fn get(&self, var: Var) -> Option<&Tensor> {
        self.grads.get(var.0).and_then(Option::as_ref)
    }

    /// Parameter leaves of the tape paired with their gradients (zeros when unreached).
    pub fn parameters(&self) -> impl Iterator<Item = (Var, Option<&Tensor>)> + '_ {
        self.params.iter().map(move |&p| (p, self.get(p)))
    }
}

/// Define-by-run recording of one forward pass.
///
/// Nodes are appended in topological order, so a node's parents always have
/// smaller ids and a reverse sweep over ids is a valid backward order.
#[derive(Default, Debug)]
pub struct Tape {
    nodes: Vec<Node>,
}

fn same_shape(op: &'static str, a: &Tensor, b: &Tensor) -> Result<(), AutodiffError> {
    if a.shape() != b.shape() {
        return Err(AutodiffError::ShapeMismatch {
            op,
            left: a.shape(),
            right: b.shape(),
        });
    }
    Ok(())
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn leaky_slope(v: f64, slope: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else {
        slope
    }
}

fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

fn softplus(v: f64) -> f64 {
    v.max(0.0) + (-v.abs()).exp().ln_1p()
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Drops every recorded node; previously issued handles become invalid.
    pub fn reset(&mut self) {
        self.nodes.clear();
    }

    pub fn value(&self, var: Var) -> &Tensor {
        &self.nodes[var.0].value
    }

    pub fn shape(&self, var: Var) -> (usize, usize) {
        self.nodes[var.0].value.shape()
    }

    pub fn contains(&self, var: Var) -> bool {
        var.0 < self.nodes.len()
    }

    fn check(&self, var: Var) -> Result<(), AutodiffError> {
        if self.contains(var) {
            Ok(())
        } else {
            Err(AutodiffError::UnknownNode(var.0))
        }
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        let (parents, n) = op.parents();
        let requires_grad = parents[..n]
            .iter()
            .flatten()
            .any(|p| self.nodes[p.0].requires_grad);
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
            is_param: false,
        });
        Var(self.nodes.len() - 1)
    }

    fn push_leaf(&mut self, value: Tensor, requires_grad: bool, is_param: bool) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            requires_grad,
            is_param,
        });
        Var(self.nodes.len() - 1)
    }

    /// A trainable leaf; its gradient is reported by [`Gradients::parameters`].
    pub fn param(&mut self, value: Tensor) -> Var {
        self.push_leaf(value, true, true)
    }

    /// A non-parameter leaf whose gradient is still tracked (e.g. a penalised input).
    pub fn input(&mut self, value: Tensor) -> Var {
        self.push_leaf(value, true, false)
    }

    /// A leaf that never receives a gradient.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push_leaf(value, false, false)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.check(a)?;
        self.check(b)?;
        let (va, vb) = (self.value(a), self.value(b));
        let value = va.matmul(vb)?;
        Ok(self.push(value, Op::MatMul(a, b)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.binary("add", a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.binary("sub", a, b, |x, y| x - y, Op::Sub(a, b))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.binary("mul", a, b, |x, y| x * y, Op::Mul(a, b))
    }

    fn binary(
        &mut self,
        name: &'static str,
        a: Var,
        b: Var,
        f: impl Fn(f64, f64) -> f64,
        op: Op,
    ) -> Result<Var, AutodiffError> {
        self.check(a)?;
        self.check(b)?;
        let (va, vb) = (self.value(a), self.value(b));
        same_shape(name, va, vb)?;
        let value = va.zip_map(vb, f);
        Ok(self.push(value, op))
    }

    /// Adds a 1×cols bias row to every row of `a`.
    pub fn add_bias(&mut self, a: Var, bias: Var) -> Result<Var, AutodiffError> {
        self.check(a)?;
        self.check(bias)?;
        let (va, vb) = (self.value(a), self.value(bias));
        if vb.rows() != 1 || vb.cols() != va.cols() {
            return Err(AutodiffError::ShapeMismatch {
                op: "add_bias",
                left: va.shape(),
                right: vb.shape(),
            });
        }
        let mut data = va.data().to_vec();
        let cols = va.cols();
        if cols > 0 {
            for row in data.chunks_exact_mut(cols) {
                for (x, b) in row.iter_mut().zip(vb.data()) {
                    *x += b;
                }
            }
        }
        let value = Tensor::from_raw(va.rows(), cols, data);
        Ok(self.push(value, Op::AddBias(a, bias)))
    }

    fn unary(&mut self, a: Var, f: impl Fn(f64) -> f64, op: Op) -> Result<Var, AutodiffError> {
        self.check(a)?;
        let value = self.value(a).map(f);
        Ok(self.push(value, op))
    }

    pub fn leaky_relu(&mut self, a: Var, slope: f64) -> Result<Var, AutodiffError> {
        self.unary(
            a,
            |v| if v > 0.0 { v } else { slope * v },
            Op::LeakyRelu(a, slope),
        )
    }

    pub fn abs(&mut self, a: Var) -> Result<Var, AutodiffError> {
        self.unary(a, f64::abs, Op::Abs(a))
    }

    /// Elementwise `ln(|a| + 1)`.
    pub fn log1p_abs(&mut self, a: Var) -> Result<Var, AutodiffError> {
        self.unary(a, |v| v.abs().ln_1p(), Op::Log1pAbs(a))
    }

    pub fn square(&mut self, a: Var) -> Result<Var, AutodiffError> {
        self.unary(a, |v| v * v, Op::Square(a))
    }

    /// Elementwise square root of a non-negative input. The derivative at 0 is taken as 0.
    pub fn sqrt(&mut self, a: Var) -> Result<Var, AutodiffError> {
        self.check(a)?;
        if let Some(index) = self.value(a).data().iter().position(|&v| v < 0.0) {
            return Err(AutodiffError::Domain { op: "sqrt", index });
        }
        self.unary(a, f64::sqrt, Op::Sqrt(a))
    }

    /// Elementwise `sqrt(|a| + 1)`.
    pub fn sqrt_shift(&mut self, a: Var) -> Result<Var, AutodiffError> {
        self.unary(a, |v| (v.abs() + 1.0).sqrt(), Op::SqrtShift(a))
    }

    /// Elementwise `ln(1 + e^a)`, evaluated without overflow.
    pub fn softplus(&mut self, a: Var) -> Result<Var, AutodiffError> {
        self.unary(a, softplus, Op::Softplus(a))
    }

    /// Column-wise mean over rows, giving a 1×cols node.
    pub fn mean_rows(&mut self, a: Var) -> Result<Var, AutodiffError> {
        self.check(a)?;
        let va = self.value(a);
        if va.rows() == 0 {
            return Err(AutodiffError::Empty("mean_rows"));
        }
        let n = va.rows() as f64;
        let value = va.sum_rows().map(|v| v / n);
        Ok(self.push(value, Op::MeanRows(a)))
    }

    /// Column-wise sum over rows, giving a 1×cols node.
    pub fn sum_rows(&mut self, a: Var) -> Result<Var, AutodiffError> {
        self.check(a)?;
        let value = self.value(a).sum_rows();
        Ok(self.push(value, Op::SumRows(a)))
    }

    /// Sum of all entries as a 1×1 node.
    pub fn sum(&mut self, a: Var) -> Result<Var, AutodiffError> {
        self.check(a)?;
        let value = Tensor::scalar(self.value(a).sum());
        Ok(self.push(value, Op::Sum(a)))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Result<Var, AutodiffError> {
        self.unary(a, |v| c * v, Op::Scale(a, c))
    }

    pub fn add_scalar(&mut self, a: Var, c: f64) -> Result<Var, AutodiffError> {
        self.unary(a, |v| v + c, Op::AddScalar(a))
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var, AutodiffError> {
        self.check(a)?;
        let value = self.value(a).transpose();
        Ok(self.push(value, Op::Transpose(a)))
    }

    /// Elementwise product with a constant tensor of the same shape.
    pub fn mul_const(&mut self, a: Var, k: Tensor) -> Result<Var, AutodiffError> {
        self.check(a)?;
        let va = self.value(a);
        same_shape("mul_const", va, &k)?;
        let value = va.zip_map(&k, |x, y| x * y);
        Ok(self.push(value, Op::MulConst(a, k)))
    }

    /// Repeats a 1×cols row `rows` times.
    pub fn broadcast_rows(&mut self, a: Var, rows: usize) -> Result<Var, AutodiffError> {
        self.check(a)?;
        let va = self.value(a);
        if va.rows() != 1 {
            return Err(AutodiffError::ShapeMismatch {
                op: "broadcast_rows",
                left: va.shape(),
                right: (rows, va.cols()),
            });
        }
        let data = va.data().repeat(rows);
        let value = Tensor::from_raw(rows, va.cols(), data);
        Ok(self.push(value, Op::BroadcastRows(a)))
    }

    /// Expands a 1×1 node to a rows×cols node.
    pub fn fill(&mut self, a: Var, rows: usize, cols: usize) -> Result<Var, AutodiffError> {
        self.check(a)?;
        let v = self.value(a).item()?;
        Ok(self.push(Tensor::full(rows, cols, v), Op::Fill(a)))
    }

    /// Extracts column `col` as an n×1 node.
    pub fn column(&mut self, a: Var, col: usize) -> Result<Var, AutodiffError> {
        self.check(a)?;
        let va = self.value(a);
        if col >= va.cols() {
            return Err(AutodiffError::ShapeMismatch {
                op: "column",
                left: va.shape(),
                right: (va.rows(), col + 1),
            });
        }
        let data = (0..va.rows()).map(|r| va.get(r, col)).collect();
        let value = Tensor::from_raw(va.rows(), 1, data);
        Ok(self.push(value, Op::Column(a, col)))
    }

    /// Reverse sweep from a scalar root, filling gradients for every node the root depends on.
    pub fn backward(&self, root: Var) -> Result<Gradients, AutodiffError> {
        self.check(root)?;
        let shape = self.shape(root);
        if shape != (1, 1) {
            return Err(AutodiffError::NotScalar { shape });
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; root.0 + 1];
        grads[root.0] = Some(Tensor::scalar(1.0));
        for id in (0..=root.0).rev() {
            let node = &self.nodes[id];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = grads[id].take() else {
                continue;
            };
            self.propagate(node, &g, &mut grads);
            grads[id] = Some(g);
        }
        let params = self
            .nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.is_param)
            .map(|(i, _)| Var(i))
            .collect();
        grads.resize(self.nodes.len(), None);
        Ok(Gradients { grads, params })
    }

    fn propagate(&self, node: &Node, g: &Tensor, grads: &mut [Option<Tensor>]) {
        let needs = |v: Var| self.nodes[v.0].requires_grad;
        let val = |v: Var| &self.nodes[v.0].value;
        let mut acc = |v: Var, contrib: Tensor| match &mut grads[v.0] {
            Some(existing) => existing.add_assign(&contrib),
            slot @ None => *slot = Some(contrib),
        };
        match &node.op {
            Op::Leaf => {}
            &Op::MatMul(a, b) => {
                if needs(a) {
                    acc(a, g.matmul_t_unchecked(val(b)));
                }
                if needs(b) {
                    acc(b, val(a).t_matmul_unchecked(g));
                }
            }
            &Op::Add(a, b) => {
                if needs(a) {
                    acc(a, g.clone());
                }
                if needs(b) {
                    acc(b, g.clone());
                }
            }
            &Op::Sub(a, b) => {
                if needs(a) {
                    acc(a, g.clone());
                }
                if needs(b) {
                    acc(b, g.map(|v| -v));
                }
            }
            &Op::Mul(a, b) => {
                if needs(a) {
                    acc(a, g.zip_map(val(b), |x, y| x * y));
                }
                if needs(b) {
                    acc(b, g.zip_map(val(a), |x, y| x * y));
                }
            }
            &Op::AddBias(a, bias) => {
                if needs(a) {
                    acc(a, g.clone());
                }
                if needs(bias) {
                    acc(bias, g.sum_rows());
                }
            }
            &Op::LeakyRelu(a, slope) => {
                acc(a, g.zip_map(val(a), |gv, x| gv * leaky_slope(x, slope)));
            }
            &Op::Abs(a) => acc(a, g.zip_map(val(a), |gv, x| gv * sign(x))),
            &Op::Log1pAbs(a) => acc(
                a,
                g.zip_map(val(a), |gv, x| gv * sign(x) / (x.abs() + 1.0)),
            ),
            &Op::Square(a) => acc(a, g.zip_map(val(a), |gv, x| 2.0 * gv * x)),
            &Op::Sqrt(a) => acc(
                a,
                g.zip_map(&node.value, |gv, s| if s > 0.0 { gv / (2.0 * s) } else { 0.0 }),
            ),
            &Op::SqrtShift(a) => acc(
                a,
                g.zip_map(&node.value, |gv, s| gv * 0.5 / s)
                    .zip_map(val(a), |v, x| v * sign(x)),
            ),
            &Op::Softplus(a) => acc(a, g.zip_map(val(a), |gv, x| gv * sigmoid(x))),
            &Op::MeanRows(a) => {
                let (rows, cols) = val(a).shape();
                let scaled = g.map(|v| v / rows as f64);
                acc(a, Tensor::from_raw(rows, cols, scaled.data().repeat(rows)));
            }
            &Op::SumRows(a) => {
                let (rows, cols) = val(a).shape();
                acc(a, Tensor::from_raw(rows, cols, g.data().repeat(rows)));
            }
            &Op::Sum(a) => {
                let (rows, cols) = val(a).shape();
                acc(a, Tensor::full(rows, cols, g.data()[0]));
            }
            &Op::Scale(a, c) => acc(a, g.map(|v| c * v)),
            &Op::AddScalar(a) => acc(a, g.clone()),
            &Op::Transpose(a) => acc(a, g.transpose()),
            Op::MulConst(a, k) => acc(*a, g.zip_map(k, |x, y| x * y)),
            &Op::BroadcastRows(a) => acc(a, g.sum_rows()),
            &Op::Fill(a) => acc(a, Tensor::scalar(g.sum())),
            &Op::Column(a, col) => {
                let (rows, cols) = val(a).shape();
                let mut data = vec![0.0; rows * cols];
                for r in 0..rows {
                    data[r * cols + col] = g.data()[r];
                }
                acc(a, Tensor::from_raw(rows, cols, data));
            }
        }
    }

    /// Records `∂(Σ output)/∂wrt` as new nodes on this tape, so the result can itself be
    /// differentiated by [`Tape::backward`].
    ///
    /// Only the ops that appear in a dense leaky-ReLU network and the batch-mean feature
    /// path have recorded derivative rules; anything else between `wrt` and `output`
    /// yields [`AutodiffError::Unsupported`].
    pub fn grad_graph(&mut self, output: Var, wrt: Var) -> Result<Var, AutodiffError> {
        self.check(output)?;
        self.check(wrt)?;
        let wrt_shape = self.shape(wrt);
        if output < wrt {
            return Ok(self.constant(Tensor::zeros(wrt_shape.0, wrt_shape.1)));
        }
        let end = output.0 + 1;
        let mut depends = vec![false; end];
        depends[wrt.0] = true;
        for id in wrt.0 + 1..end {
            let (parents, n) = self.nodes[id].op.parents();
            depends[id] = parents[..n].iter().flatten().any(|p| depends[p.0]);
        }
        if !depends[output.0] {
            return Ok(self.constant(Tensor::zeros(wrt_shape.0, wrt_shape.1)));
        }

        let mut adj: Vec<Option<Var>> = vec![None; end];
        let (r, c) = self.shape(output);
        adj[output.0] = Some(self.constant(Tensor::full(r, c, 1.0)));

        for id in (wrt.0 + 1..end).rev() {
            if !depends[id] {
                continue;
            }
            let Some(g) = adj[id] else { continue };
            let op = self.nodes[id].op.clone();
            let mut contributions: Vec<(Var, Var)> = Vec::with_capacity(2);
            match op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    if depends[a.0] {
                        let bt = self.transpose(b)?;
                        contributions.push((a, self.matmul(g, bt)?));
                    }
                    if depends[b.0] {
                        let at = self.transpose(a)?;
                        contributions.push((b, self.matmul(at, g)?));
                    }
                }
                Op::Add(a, b) => {
                    contributions.push((a, g));
                    contributions.push((b, g));
                }
                Op::Sub(a, b) => {
                    contributions.push((a, g));
                    if depends[b.0] {
                        contributions.push((b, self.scale(g, -1.0)?));
                    }
                }
                Op::Mul(a, b) => {
                    if depends[a.0] {
                        contributions.push((a, self.mul(g, b)?));
                    }
                    if depends[b.0] {
                        contributions.push((b, self.mul(g, a)?));
                    }
                }
                Op::AddBias(a, bias) => {
                    contributions.push((a, g));
                    if depends[bias.0] {
                        contributions.push((bias, self.sum_rows(g)?));
                    }
                }
                Op::LeakyRelu(a, slope) => {
                    let mask = self.value(a).map(|x| leaky_slope(x, slope));
                    contributions.push((a, self.mul_const(g, mask)?));
                }
                Op::Abs(a) => {
                    let mask = self.value(a).map(sign);
                    contributions.push((a, self.mul_const(g, mask)?));
                }
                Op::Square(a) => {
                    let ga = self.mul(g, a)?;
                    contributions.push((a, self.scale(ga, 2.0)?));
                }
                Op::MeanRows(a) => {
                    let rows = self.value(a).rows();
                    let scaled = self.scale(g, 1.0 / rows as f64)?;
                    contributions.push((a, self.broadcast_rows(scaled, rows)?));
                }
                Op::SumRows(a) => {
                    let rows = self.value(a).rows();
                    contributions.push((a, self.broadcast_rows(g, rows)?));
                }
                Op::Sum(a) => {
                    let (rows, cols) = self.shape(a);
                    contributions.push((a, self.fill(g, rows, cols)?));
                }
                Op::Scale(a, c) => contributions.push((a, self.scale(g, c)?)),
                Op::AddScalar(a) => contributions.push((a, g)),
                Op::Transpose(a) => contributions.push((a, self.transpose(g)?)),
                Op::MulConst(a, k) => contributions.push((a, self.mul_const(g, k)?)),
                Op::BroadcastRows(a) => contributions.push((a, self.sum_rows(g)?)),
                Op::Fill(a) => contributions.push((a, self.sum(g)?)),
                other => return Err(AutodiffError::Unsupported(other.name())),
            }
            for (parent, contrib) in contributions {
                if !depends[parent.0] {
                    continue;
                }
                adj[parent.0] = Some(match adj[parent.0] {
                    Some(existing) => self.add(existing, contrib)?,
                    None => contrib,
                });
            }
        }
        match adj[wrt.0] {
            Some(g) => Ok(g),
            None => Ok(self.constant(Tensor::zeros(wrt_shape.0, wrt_shape.1))),
        }
    }

    /// `‖∂(Σ feature_mean)/∂input‖²₂` as a differentiable 1×1 node.
    pub fn grad_norm_sq_wrt_input(
        &mut self,
        feature_mean: Var,
        input: Var,
    ) -> Result<Var, AutodiffError> {
        let grad = self.grad_graph(feature_mean, input)?;
        let sq = self.square(grad)?;
        self.sum(sq)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(rows: &[&[f64]]) -> Tensor {
        Tensor::from_rows(rows).unwrap()
    }

    #[test]
    fn primitive_examples() {
        let mut tape = Tape::new();
        let a = tape.constant(t(&[&[1.0, 2.0]]));
        let b = tape.constant(t(&[&[3.0], &[4.0]]));
        let m = tape.matmul(a, b).unwrap();
        assert_eq!(tape.value(m).data(), &[11.0]);

        let z = tape.constant(t(&[&[0.0]]));
        let l = tape.log1p_abs(z).unwrap();
        assert_eq!(tape.value(l).data(), &[0.0]);

        let x = tape.constant(t(&[&[1.0, 3.0], &[3.0, 5.0]]));
        let mr = tape.mean_rows(x).unwrap();
        assert_eq!(tape.value(mr).data(), &[2.0, 4.0]);

        let s = tape.sqrt_shift(z).unwrap();
        assert_eq!(tape.value(s).data(), &[1.0]);
    }

    #[test]
    fn shape_errors_name_both_shapes() {
        let mut tape = Tape::new();
        let a = tape.constant(Tensor::zeros(2, 3));
        let b = tape.constant(Tensor::zeros(2, 3));
        let err = tape.matmul(a, b).unwrap_err();
        assert_eq!(
            err,
            AutodiffError::ShapeMismatch {
                op: "matmul",
                left: (2, 3),
                right: (2, 3)
            }
        );
        assert!(err.to_string().contains("(2, 3)"));
        let c = tape.constant(Tensor::zeros(3, 2));
        assert!(tape.add(a, c).is_err());
        let bias = tape.constant(Tensor::zeros(1, 2));
        assert!(tape.add_bias(a, bias).is_err());
    }

    #[test]
    fn backward_of_square_sum() {
        let mut tape = Tape::new();
        let w = tape.param(t(&[&[3.0]]));
        let sq = tape.square(w).unwrap();
        let root = tape.sum(sq).unwrap();
        let grads = tape.backward(root).unwrap();
        assert_eq!(grads.get(w).unwrap().data(), &[6.0]);
    }

    #[test]
    fn independent_parameter_gets_no_gradient() {
        let mut tape = Tape::new();
        let w = tape.param(t(&[&[3.0]]));
        let x = tape.param(t(&[&[2.0]]));
        let root = tape.square(x).unwrap();
        let grads = tape.backward(root).unwrap();
        assert!(grads.get(w).is_none());
        let listed: Vec<_> = grads.parameters().collect();
        assert_eq!(listed.len(), 2);
        assert!(listed[0].1.is_none());
    }

    #[test]
    fn non_scalar_root_rejected() {
        let mut tape = Tape::new();
        let w = tape.param(Tensor::zeros(2, 1));
        assert_eq!(
            tape.backward(w).unwrap_err(),
            AutodiffError::NotScalar { shape: (2, 1) }
        );
    }

    #[test]
    fn unknown_node_rejected() {
        let mut tape = Tape::new();
        let _ = tape.constant(Tensor::zeros(1, 1));
        let mut other = Tape::new();
        let _ = other.constant(Tensor::zeros(1, 1));
        let stray = other.constant(Tensor::zeros(1, 1));
        assert_eq!(
            tape.grad_norm_sq_wrt_input(stray, stray).unwrap_err(),
            AutodiffError::UnknownNode(1)
        );
    }

    #[test]
    fn identity_feature_norm_equals_dimensionality() {
        let mut tape = Tape::new();
        let x = tape.input(t(&[&[0.3, -1.2, 4.0, 0.0, 2.5]]));
        let fm = tape.mean_rows(x).unwrap();
        let n = tape.grad_norm_sq_wrt_input(fm, x).unwrap();
        assert_eq!(tape.value(n).data(), &[5.0]);
    }

    #[test]
    fn constant_feature_norm_is_zero() {
        let mut tape = Tape::new();
        let x = tape.input(t(&[&[0.3, -1.2]]));
        let c = tape.param(t(&[&[1.0, 2.0, 3.0]]));
        let fm = tape.mean_rows(c).unwrap();
        let n = tape.grad_norm_sq_wrt_input(fm, x).unwrap();
        assert_eq!(tape.value(n).data(), &[0.0]);
    }

    #[test]
    fn softplus_is_stable() {
        let mut tape = Tape::new();
        let x = tape.constant(t(&[&[-800.0, 0.0, 800.0]]));
        let s = tape.softplus(x).unwrap();
        let v = tape.value(s).data();
        assert_eq!(v[0], 0.0);
        assert!((v[1] - 2f64.ln()).abs() < 1e-15);
        assert_eq!(v[2], 800.0);
    }

    #[test]
    fn sqrt_rejects_negative_input() {
        let mut tape = Tape::new();
        let x = tape.constant(t(&[&[1.0, -1.0]]));
        assert_eq!(
            tape.sqrt(x).unwrap_err(),
            AutodiffError::Domain {
                op: "sqrt",
                index: 1
            }
        );
    }

    #[test]
    fn unsupported_op_in_grad_graph() {
        let mut tape = Tape::new();
        let x = tape.input(t(&[&[0.5]]));
        let y = tape.softplus(x).unwrap();
        assert_eq!(
            tape.grad_graph(y, x).unwrap_err(),
            AutodiffError::Unsupported("softplus")
        );
    }
}
