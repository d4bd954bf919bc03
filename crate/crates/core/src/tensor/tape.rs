//! Reverse-mode automatic differentiation over [`Tensor`] values.
//!
//! A [`Tape`] is an append-only list of nodes. Every primitive evaluates
//! eagerly, stores its output, and remembers its operands by index, so the
//! node order is already a topological order and the backward pass simply
//! walks it in reverse.
//!
//! Subgradient conventions: `relu'(0) = 0`; `max` routes the adjoint to the
//! first maximal entry of each row.

use super::Tensor;
use crate::error::{Error, Result};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Op {
    Leaf,
    /// `x · Wᵀ` with `x: [.., k]`, `W: [m, k]`.
    MatMulT(Var, Var),
    /// Row-broadcast bias add, `a: [.., m]`, `b: [m]`.
    AddBias(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    Tanh(Var),
    Exp(Var),
    Ln(Var),
    RowSum(Var),
    RowMax(Var),
    RowLogSumExp(Var),
    /// `a: [.., C]` minus a per-row scalar `r: [..]`.
    SubRow(Var, Var),
    /// Picks one column per row.
    Gather(Var, Vec<usize>),
    /// Per-row `k` largest entries in descending order.
    TopK(Var, usize),
    /// Elementwise `p^γ (1-p)^γ` of a log-probability `lp = log p`, zero at
    /// `p ∈ {0, 1}`.
    GenTerm(Var, f64),
    SumAll(Var),
}

#[derive(Debug, Clone)]
struct Node {
    op: Op,
    value: Tensor,
}

/// Recorded computation. Leaves registered with [`Tape::input`] and
/// [`Tape::param`] are the targets of [`Tape::grad_input`] and
/// [`Tape::grad_params`].
#[derive(Debug, Clone, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    input: Option<Var>,
    params: Vec<Var>,
}

/// Adjoints of every node reached by a backward pass.
#[derive(Debug, Clone)]
pub struct Gradients {
    adjoints: Vec<Option<Vec<f64>>>,
    shapes: Vec<Vec<usize>>,
}

impl Gradients {
    /// Gradient with respect to `var`; zeros if `var` did not influence the
    /// output.
    pub fn wrt(&self, var: Var) -> Tensor {
        let shape = self.shapes[var.0].clone();
        match &self.adjoints[var.0] {
            Some(g) => Tensor::from_parts_unchecked(shape, g.clone()),
            None => Tensor::zeros(shape),
        }
    }
}

fn last_axis_split(shape: &[usize]) -> (usize, usize, Vec<usize>) {
    let cols = shape.last().copied().unwrap_or(1);
    let rows = shape.iter().product::<usize>() / cols;
    let outer = if shape.is_empty() {
        Vec::new()
    } else {
        shape[..shape.len() - 1].to_vec()
    };
    (rows, cols, outer)
}

/// `m + log1p(Σ_{j≠top} e^{v_j − m})`, which stays accurate when one entry
/// dominates.
fn logsumexp(row: &[f64]) -> f64 {
    let top = argmax(row);
    let m = row[top];
    let rest: f64 = row
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != top)
        .map(|(_, &v)| (v - m).exp())
        .sum();
    m + rest.ln_1p()
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Indices of the `k` largest entries, descending, ties by lower index.
fn top_k_indices(row: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..row.len()).collect();
    idx.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// `(p·(1−p))^γ` from `log p`, with `1−p` taken as `−expm1(log p)` so it
/// keeps its precision as `p → 1`.
pub(crate) fn gen_term(lp: f64, gamma: f64) -> f64 {
    if lp >= 0.0 {
        return 0.0;
    }
    let q = -lp.exp_m1();
    (gamma * (lp + q.ln())).exp()
}

fn gen_term_deriv(lp: f64, gamma: f64) -> f64 {
    if lp >= 0.0 {
        return 0.0;
    }
    let (p, q) = (lp.exp(), -lp.exp_m1());
    gen_term(lp, gamma) * gamma * (1.0 - 2.0 * p) / q
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

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// The most recently recorded node.
    pub fn last(&self) -> Option<Var> {
        self.nodes.len().checked_sub(1).map(Var)
    }

    pub fn input_var(&self) -> Option<Var> {
        self.input
    }

    pub fn param_vars(&self) -> &[Var] {
        &self.params
    }

    /// Records a constant leaf.
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.nodes.push(Node {
            op: Op::Leaf,
            value,
        });
        Var(self.nodes.len() - 1)
    }

    /// Records the differentiable input leaf. Only one input per tape.
    pub fn input(&mut self, value: Tensor) -> Result<Var> {
        if self.input.is_some() {
            return Err(Error::Contract("tape already has an input".into()));
        }
        let v = self.leaf(value);
        self.input = Some(v);
        Ok(v)
    }

    /// Records a trainable parameter leaf.
    pub fn param(&mut self, value: Tensor) -> Var {
        let v = self.leaf(value);
        self.params.push(v);
        v
    }

    fn push(&mut self, op: Op) -> Result<Var> {
        let value = self.evaluate(&op)?;
        if let Some(pos) = value.data().iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "{} produced {} at entry {pos}",
                op_name(&op),
                value.data()[pos]
            )));
        }
        self.nodes.push(Node { op, value });
        Ok(Var(self.nodes.len() - 1))
    }

    pub fn matmul_t(&mut self, x: Var, w: Var) -> Result<Var> {
        self.push(Op::MatMulT(x, w))
    }

    pub fn add_bias(&mut self, a: Var, b: Var) -> Result<Var> {
        self.push(Op::AddBias(a, b))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.push(Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.push(Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.push(Op::Mul(a, b))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Result<Var> {
        self.push(Op::Scale(a, c))
    }

    pub fn relu(&mut self, a: Var) -> Result<Var> {
        self.push(Op::Relu(a))
    }

    pub fn tanh(&mut self, a: Var) -> Result<Var> {
        self.push(Op::Tanh(a))
    }

    pub fn exp(&mut self, a: Var) -> Result<Var> {
        self.push(Op::Exp(a))
    }

    pub fn ln(&mut self, a: Var) -> Result<Var> {
        self.push(Op::Ln(a))
    }

    pub fn row_sum(&mut self, a: Var) -> Result<Var> {
        self.push(Op::RowSum(a))
    }

    pub fn row_max(&mut self, a: Var) -> Result<Var> {
        self.push(Op::RowMax(a))
    }

    pub fn row_logsumexp(&mut self, a: Var) -> Result<Var> {
        self.push(Op::RowLogSumExp(a))
    }

    pub fn sub_row(&mut self, a: Var, r: Var) -> Result<Var> {
        self.push(Op::SubRow(a, r))
    }

    pub fn gather(&mut self, a: Var, idx: Vec<usize>) -> Result<Var> {
        self.push(Op::Gather(a, idx))
    }

    pub fn top_k(&mut self, a: Var, k: usize) -> Result<Var> {
        self.push(Op::TopK(a, k))
    }

    pub fn gen_term(&mut self, log_probs: Var, gamma: f64) -> Result<Var> {
        self.push(Op::GenTerm(log_probs, gamma))
    }

    pub fn sum_all(&mut self, a: Var) -> Result<Var> {
        self.push(Op::SumAll(a))
    }

    /// `log softmax(a / t)` along the last axis.
    pub fn log_softmax(&mut self, a: Var, temperature: f64) -> Result<Var> {
        let scaled = if temperature == 1.0 {
            a
        } else {
            self.scale(a, 1.0 / temperature)?
        };
        // Subtracting the row maximum first keeps the top entry near zero,
        // where log p has full precision. The maximum is held constant,
        // which leaves the gradient unchanged.
        let maxes = reduce(&self.nodes[scaled.0].value, |r| r[argmax(r)]);
        let maxes = self.leaf(maxes);
        let centered = self.sub_row(scaled, maxes)?;
        let lse = self.row_logsumexp(centered)?;
        self.sub_row(centered, lse)
    }

    fn evaluate(&self, op: &Op) -> Result<Tensor> {
        let val = |v: &Var| -> Result<&Tensor> {
            self.nodes
                .get(v.0)
                .map(|n| &n.value)
                .ok_or_else(|| Error::Contract(format!("unknown node {}", v.0)))
        };
        let out = match op {
            Op::Leaf => return Err(Error::Contract("leaf has no operands".into())),
            Op::MatMulT(x, w) => {
                let (x, w) = (val(x)?, val(w)?);
                if w.shape().len() != 2 || x.shape().is_empty() || x.cols() != w.shape()[1] {
                    return Err(Error::dim(format!(
                        "matmul {:?} · {:?}ᵀ",
                        x.shape(),
                        w.shape()
                    )));
                }
                let (m, k) = (w.shape()[0], w.shape()[1]);
                let mut data = Vec::with_capacity(x.rows() * m);
                for row in x.row_iter() {
                    for j in 0..m {
                        let wr = &w.data()[j * k..(j + 1) * k];
                        data.push(row.iter().zip(wr).map(|(a, b)| a * b).sum());
                    }
                }
                let mut shape = x.shape().to_vec();
                *shape.last_mut().unwrap() = m;
                Tensor::from_parts_unchecked(shape, data)
            }
            Op::AddBias(a, b) => {
                let (a, b) = (val(a)?, val(b)?);
                if b.shape().len() != 1 || a.cols() != b.len() || a.shape().is_empty() {
                    return Err(Error::dim(format!(
                        "bias {:?} onto {:?}",
                        b.shape(),
                        a.shape()
                    )));
                }
                let data = a
                    .row_iter()
                    .flat_map(|r| r.iter().zip(b.data()).map(|(x, y)| x + y))
                    .collect();
                Tensor::from_parts_unchecked(a.shape().to_vec(), data)
            }
            Op::Add(a, b) => val(a)?.zip_map(val(b)?, |x, y| x + y)?,
            Op::Sub(a, b) => val(a)?.zip_map(val(b)?, |x, y| x - y)?,
            Op::Mul(a, b) => val(a)?.zip_map(val(b)?, |x, y| x * y)?,
            Op::Scale(a, c) => {
                let c = *c;
                unary(val(a)?, |x| c * x)
            }
            Op::Relu(a) => unary(val(a)?, |x| if x > 0.0 { x } else { 0.0 }),
            Op::Tanh(a) => unary(val(a)?, f64::tanh),
            Op::Exp(a) => unary(val(a)?, f64::exp),
            Op::Ln(a) => unary(val(a)?, f64::ln),
            Op::RowSum(a) => reduce(val(a)?, |r| r.iter().sum()),
            Op::RowMax(a) => reduce(val(a)?, |r| r[argmax(r)]),
            Op::RowLogSumExp(a) => reduce(val(a)?, logsumexp),
            Op::SubRow(a, r) => {
                let (a, r) = (val(a)?, val(r)?);
                if a.rows() != r.len() || a.shape().is_empty() {
                    return Err(Error::dim(format!(
                        "row broadcast {:?} − {:?}",
                        a.shape(),
                        r.shape()
                    )));
                }
                let data = a
                    .row_iter()
                    .zip(r.data())
                    .flat_map(|(row, &s)| row.iter().map(move |x| x - s))
                    .collect();
                Tensor::from_parts_unchecked(a.shape().to_vec(), data)
            }
            Op::Gather(a, idx) => {
                let a = val(a)?;
                let (rows, cols, outer) = last_axis_split(a.shape());
                if idx.len() != rows || idx.iter().any(|&i| i >= cols) {
                    return Err(Error::dim(format!(
                        "gather of {} indices from {:?}",
                        idx.len(),
                        a.shape()
                    )));
                }
                let data = a.row_iter().zip(idx).map(|(r, &i)| r[i]).collect();
                Tensor::from_parts_unchecked(outer, data)
            }
            Op::TopK(a, k) => {
                let a = val(a)?;
                if *k == 0 || *k > a.cols() || a.shape().is_empty() {
                    return Err(Error::dim(format!("top-{k} of {:?}", a.shape())));
                }
                let mut data = Vec::with_capacity(a.rows() * k);
                for r in a.row_iter() {
                    data.extend(top_k_indices(r, *k).into_iter().map(|i| r[i]));
                }
                let mut shape = a.shape().to_vec();
                *shape.last_mut().unwrap() = *k;
                Tensor::from_parts_unchecked(shape, data)
            }
            Op::GenTerm(a, gamma) => {
                let g = *gamma;
                unary(val(a)?, |lp| gen_term(lp, g))
            }
            Op::SumAll(a) => {
                Tensor::from_parts_unchecked(Vec::new(), vec![val(a)?.data().iter().sum()])
            }
        };
        Ok(out)
    }

    /// Recorded node values in tape order.
    pub fn values(&self) -> impl Iterator<Item = &Tensor> {
        self.nodes.iter().map(|n| &n.value)
    }

    /// Re-evaluates every non-leaf node from its recorded operands.
    pub fn replay(&self) -> Result<Vec<Tensor>> {
        let mut replayed = Tape {
            nodes: Vec::with_capacity(self.nodes.len()),
            input: self.input,
            params: self.params.clone(),
        };
        for node in &self.nodes {
            let value = match node.op {
                Op::Leaf => node.value.clone(),
                ref op => replayed.evaluate(op)?,
            };
            replayed.nodes.push(Node {
                op: node.op.clone(),
                value,
            });
        }
        Ok(replayed.nodes.into_iter().map(|n| n.value).collect())
    }

    /// Reverse sweep from a scalar node `output` seeded with `adjoint`.
    pub fn backward(&self, output: Var, adjoint: f64) -> Result<Gradients> {
        let out = self
            .nodes
            .get(output.0)
            .ok_or_else(|| Error::Contract(format!("unknown node {}", output.0)))?;
        if !out.value.is_scalar() {
            return Err(Error::Contract(format!(
                "backward needs a scalar output, node {} has shape {:?}",
                output.0,
                out.value.shape()
            )));
        }
        let mut adj: Vec<Option<Vec<f64>>> = vec![None; output.0 + 1];
        adj[output.0] = Some(vec![adjoint]);

        for i in (0..=output.0).rev() {
            let Some(g) = adj[i].take() else { continue };
            let node = &self.nodes[i];
            self.propagate(&node.op, &node.value, &g, &mut adj);
            adj[i] = Some(g);
        }
        adj.resize(self.nodes.len(), None);
        Ok(Gradients {
            adjoints: adj,
            shapes: self.nodes.iter().map(|n| n.value.shape().to_vec()).collect(),
        })
    }

    fn propagate(&self, op: &Op, out: &Tensor, g: &[f64], adj: &mut [Option<Vec<f64>>]) {
        let v = |var: &Var| &self.nodes[var.0].value;
        match op {
            Op::Leaf => {}
            Op::MatMulT(x, w) => {
                let (xv, wv) = (v(x), v(w));
                let (m, k) = (wv.shape()[0], wv.shape()[1]);
                let mut gx = vec![0.0; xv.len()];
                let mut gw = vec![0.0; wv.len()];
                for (r, xr) in xv.row_iter().enumerate() {
                    let gr = &g[r * m..(r + 1) * m];
                    let gxr = &mut gx[r * k..(r + 1) * k];
                    for (j, &gj) in gr.iter().enumerate() {
                        let wr = &wv.data()[j * k..(j + 1) * k];
                        let gwr = &mut gw[j * k..(j + 1) * k];
                        for t in 0..k {
                            gxr[t] += gj * wr[t];
                            gwr[t] += gj * xr[t];
                        }
                    }
                }
                accumulate(adj, *x, &gx);
                accumulate(adj, *w, &gw);
            }
            Op::AddBias(a, b) => {
                let m = v(b).len();
                let mut gb = vec![0.0; m];
                for gr in g.chunks(m) {
                    for (acc, &x) in gb.iter_mut().zip(gr) {
                        *acc += x;
                    }
                }
                accumulate(adj, *a, g);
                accumulate(adj, *b, &gb);
            }
            Op::Add(a, b) => {
                accumulate(adj, *a, g);
                accumulate(adj, *b, g);
            }
            Op::Sub(a, b) => {
                accumulate(adj, *a, g);
                let neg: Vec<f64> = g.iter().map(|x| -x).collect();
                accumulate(adj, *b, &neg);
            }
            Op::Mul(a, b) => {
                let (av, bv) = (v(a).data(), v(b).data());
                let ga: Vec<f64> = g.iter().zip(bv).map(|(x, y)| x * y).collect();
                let gb: Vec<f64> = g.iter().zip(av).map(|(x, y)| x * y).collect();
                accumulate(adj, *a, &ga);
                accumulate(adj, *b, &gb);
            }
            Op::Scale(a, c) => {
                let ga: Vec<f64> = g.iter().map(|x| c * x).collect();
                accumulate(adj, *a, &ga);
            }
            Op::Relu(a) => {
                let ga: Vec<f64> = g
                    .iter()
                    .zip(v(a).data())
                    .map(|(&gi, &x)| if x > 0.0 { gi } else { 0.0 })
                    .collect();
                accumulate(adj, *a, &ga);
            }
            Op::Tanh(a) => {
                let ga: Vec<f64> = g
                    .iter()
                    .zip(out.data())
                    .map(|(&gi, &y)| gi * (1.0 - y * y))
                    .collect();
                accumulate(adj, *a, &ga);
            }
            Op::Exp(a) => {
                let ga: Vec<f64> = g.iter().zip(out.data()).map(|(x, y)| x * y).collect();
                accumulate(adj, *a, &ga);
            }
            Op::Ln(a) => {
                let ga: Vec<f64> = g.iter().zip(v(a).data()).map(|(x, y)| x / y).collect();
                accumulate(adj, *a, &ga);
            }
            Op::RowSum(a) => {
                let c = v(a).cols();
                let ga: Vec<f64> = g.iter().flat_map(|&x| std::iter::repeat_n(x, c)).collect();
                accumulate(adj, *a, &ga);
            }
            Op::RowMax(a) => {
                let av = v(a);
                let c = av.cols();
                let mut ga = vec![0.0; av.len()];
                for (r, row) in av.row_iter().enumerate() {
                    ga[r * c + argmax(row)] = g[r];
                }
                accumulate(adj, *a, &ga);
            }
            Op::RowLogSumExp(a) => {
                let av = v(a);
                let mut ga = Vec::with_capacity(av.len());
                for (r, row) in av.row_iter().enumerate() {
                    // softmax from the row max keeps full precision when |x| is large
                    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let z: f64 = row.iter().map(|&x| (x - m).exp()).sum();
                    ga.extend(row.iter().map(|&x| g[r] * (x - m).exp() / z));
                }
                accumulate(adj, *a, &ga);
            }
            Op::SubRow(a, r) => {
                let c = v(a).cols();
                let gr: Vec<f64> = g.chunks(c).map(|ch| -ch.iter().sum::<f64>()).collect();
                accumulate(adj, *a, g);
                accumulate(adj, *r, &gr);
            }
            Op::Gather(a, idx) => {
                let av = v(a);
                let c = av.cols();
                let mut ga = vec![0.0; av.len()];
                for (r, &i) in idx.iter().enumerate() {
                    ga[r * c + i] = g[r];
                }
                accumulate(adj, *a, &ga);
            }
            Op::TopK(a, k) => {
                let av = v(a);
                let c = av.cols();
                let mut ga = vec![0.0; av.len()];
                for (r, row) in av.row_iter().enumerate() {
                    for (slot, i) in top_k_indices(row, *k).into_iter().enumerate() {
                        ga[r * c + i] += g[r * k + slot];
                    }
                }
                accumulate(adj, *a, &ga);
            }
            Op::GenTerm(a, gamma) => {
                let ga: Vec<f64> = g
                    .iter()
                    .zip(v(a).data())
                    .map(|(&gi, &lp)| gi * gen_term_deriv(lp, *gamma))
                    .collect();
                accumulate(adj, *a, &ga);
            }
            Op::SumAll(a) => {
                let ga = vec![g[0]; v(a).len()];
                accumulate(adj, *a, &ga);
            }
        }
    }

    /// `∂(last node)/∂(input)` scaled by `adjoint`. The last recorded node must
    /// be a scalar.
    pub fn grad_input(&self, adjoint: f64) -> Result<Tensor> {
        let input = self
            .input
            .ok_or_else(|| Error::Contract("tape has no registered input".into()))?;
        let out = self
            .last()
            .ok_or_else(|| Error::Contract("empty tape".into()))?;
        Ok(self.backward(out, adjoint)?.wrt(input))
    }

    /// Gradients of the last (scalar) node for every registered parameter,
    /// in registration order.
    pub fn grad_params(&self) -> Result<Vec<Tensor>> {
        let out = self
            .last()
            .ok_or_else(|| Error::Contract("empty tape".into()))?;
        let grads = self.backward(out, 1.0)?;
        Ok(self.params.iter().map(|&p| grads.wrt(p)).collect())
    }
}

fn unary(a: &Tensor, f: impl Fn(f64) -> f64) -> Tensor {
    Tensor::from_parts_unchecked(a.shape().to_vec(), a.data().iter().map(|&x| f(x)).collect())
}

fn reduce(a: &Tensor, f: impl Fn(&[f64]) -> f64) -> Tensor {
    let (_, _, outer) = last_axis_split(a.shape());
    Tensor::from_parts_unchecked(outer, a.row_iter().map(f).collect())
}

fn accumulate(adj: &mut [Option<Vec<f64>>], var: Var, g: &[f64]) {
    match &mut adj[var.0] {
        Some(acc) => {
            for (a, x) in acc.iter_mut().zip(g) {
                *a += x;
            }
        }
        slot @ None => *slot = Some(g.to_vec()),
    }
}

fn op_name(op: &Op) -> &'static str {
    match op {
        Op::Leaf => "leaf",
        Op::MatMulT(..) => "matmul",
        Op::AddBias(..) => "add_bias",
        Op::Add(..) => "add",
        Op::Sub(..) => "sub",
        Op::Mul(..) => "mul",
        Op::Scale(..) => "scale",
        Op::Relu(..) => "relu",
        Op::Tanh(..) => "tanh",
        Op::Exp(..) => "exp",
        Op::Ln(..) => "ln",
        Op::RowSum(..) => "row_sum",
        Op::RowMax(..) => "row_max",
        Op::RowLogSumExp(..) => "row_logsumexp",
        Op::SubRow(..) => "sub_row",
        Op::Gather(..) => "gather",
        Op::TopK(..) => "top_k",
        Op::GenTerm(..) => "gen_term",
        Op::SumAll(..) => "sum_all",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vec_t(v: &[f64]) -> Tensor {
        Tensor::vector(v.to_vec()).unwrap()
    }

    #[test]
    fn linear_map_gradient() {
        let mut tape = Tape::new();
        let x = tape.input(vec_t(&[0.7, -4.0])).unwrap();
        let w = tape.leaf(Tensor::matrix(1, 2, vec![2.0, -3.0]).unwrap());
        let y = tape.matmul_t(x, w).unwrap();
        tape.sum_all(y).unwrap();
        assert_eq!(tape.grad_input(1.0).unwrap().data(), &[2.0, -3.0]);
    }

    #[test]
    fn relu_squared_chain_rule() {
        let mut tape = Tape::new();
        let x = tape.input(vec_t(&[1.5])).unwrap();
        let r = tape.relu(x).unwrap();
        let sq = tape.mul(r, r).unwrap();
        tape.sum_all(sq).unwrap();
        assert_eq!(tape.grad_input(1.0).unwrap().data(), &[3.0]);
    }

    #[test]
    fn relu_gradient_at_zero_is_zero() {
        let mut tape = Tape::new();
        let x = tape.input(vec_t(&[0.0, -1.0, 2.0])).unwrap();
        let r = tape.relu(x).unwrap();
        tape.sum_all(r).unwrap();
        assert_eq!(tape.grad_input(1.0).unwrap().data(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn non_scalar_terminal_is_contract_error() {
        let mut tape = Tape::new();
        let x = tape.input(vec_t(&[1.0, 2.0])).unwrap();
        tape.exp(x).unwrap();
        assert!(matches!(tape.grad_input(1.0), Err(Error::Contract(_))));
    }

    #[test]
    fn ln_of_zero_is_rejected() {
        let mut tape = Tape::new();
        let x = tape.input(vec_t(&[0.0])).unwrap();
        assert!(matches!(tape.ln(x), Err(Error::NonFinite(_))));
    }

    #[test]
    fn logsumexp_is_stable_for_large_logits() {
        let mut tape = Tape::new();
        let x = tape.input(vec_t(&[1000.0, 1000.0])).unwrap();
        let l = tape.row_logsumexp(x).unwrap();
        let expect = 1000.0 + 2f64.ln();
        assert!((tape.value(l).item().unwrap() - expect).abs() < 1e-12);
        assert_eq!(tape.grad_input(1.0).unwrap().data(), &[0.5, 0.5]);
    }

    #[test]
    fn top_k_routes_adjoints_to_sorted_slots() {
        let mut tape = Tape::new();
        let x = tape.input(vec_t(&[0.1, 0.9, 0.5])).unwrap();
        let t = tape.top_k(x, 2).unwrap();
        assert_eq!(tape.value(t).data(), &[0.9, 0.5]);
        let w = tape.leaf(vec_t(&[10.0, 1.0]));
        let p = tape.mul(t, w).unwrap();
        tape.sum_all(p).unwrap();
        assert_eq!(tape.grad_input(1.0).unwrap().data(), &[0.0, 10.0, 1.0]);
    }

    #[test]
    fn batched_rows_are_independent() {
        let mut tape = Tape::new();
        let x = tape
            .input(Tensor::matrix(2, 3, vec![1.0, 2.0, 3.0, -1.0, 0.0, 4.0]).unwrap())
            .unwrap();
        let ls = tape.log_softmax(x, 1.0).unwrap();
        let m = tape.row_max(ls).unwrap();
        assert_eq!(tape.value(m).shape(), &[2]);
        tape.sum_all(m).unwrap();
        let g = tape.grad_input(1.0).unwrap();

        let mut single = Tape::new();
        let x1 = single.input(vec_t(&[-1.0, 0.0, 4.0])).unwrap();
        let ls1 = single.log_softmax(x1, 1.0).unwrap();
        let m1 = single.row_max(ls1).unwrap();
        single.sum_all(m1).unwrap();
        assert_eq!(&g.data()[3..], single.grad_input(1.0).unwrap().data());
    }

    #[test]
    fn gen_term_vanishes_at_boundaries() {
        assert_eq!(gen_term(0.0, 0.1), 0.0);
        assert_eq!(gen_term(-1e4, 0.1), 0.0);
        assert_eq!(gen_term_deriv(0.0, 0.1), 0.0);
        let half = 0.5f64.ln();
        assert!((gen_term(half, 0.1) - 0.25f64.powf(0.1)).abs() < 1e-15);
        assert_eq!(gen_term_deriv(half, 0.1), 0.0);
    }
}
