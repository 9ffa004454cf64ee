//! Reverse-mode differentiation over a linear tape of vector operations.
//!
//! Forward calls append a node holding the computed value and the recipe for
//! its local derivative. [`Tape::backward`] walks the nodes in reverse order,
//! which is a reverse topological order because every node only refers to
//! earlier nodes. Parameters are never copied onto the tape; ops refer to them
//! by [`ParamId`] and their gradients land directly in [`ParamStore`].

use super::param::{ParamId, ParamStore};
use super::tensor::{sigmoid, Tensor};
use crate::error::{Error, Result};

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Smallest probability fed to a logarithm.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug)]
enum Op {
    Leaf,
    Param(ParamId),
    Affine { x: Var, w: ParamId, b: Option<ParamId> },
    Embed { table: ParamId, row: usize },
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Max(Var, Var),
    Scale(Var, f64),
    ScaleBy { x: Var, s: Var },
    OneMinus(Var),
    Sigmoid(Var),
    Tanh(Var),
    Concat(Vec<Var>),
    Slice { x: Var, start: usize },
    Softmax(Var),
    Sum(Var),
    Dropout { x: Var, mask: Vec<f64> },
    AdditiveScores { q: Var, keys: Vec<Var>, v: ParamId, hidden: Vec<f64> },
    WeightedSum { w: Var, items: Vec<Var> },
    ScatterAdd { x: Var, index: Vec<usize> },
    Pad { x: Var },
    NegLog { x: Var, idx: usize },
    SoftmaxXent { logits: Var, target: usize, probs: Vec<f64> },
    BceLogits { logits: Var, targets: Vec<f64> },
    SumAll(Vec<Var>),
}

struct Node {
    value: Tensor,
    op: Op,
    needs_grad: bool,
}

/// Ordered record of executed differentiable operations.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

fn shape_err(op: &'static str, a: usize, b: usize) -> Error {
    Error::Shape {
        op,
        left: vec![a],
        right: vec![b],
    }
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

    pub fn value(&self, v: Var) -> &[f64] {
        self.nodes[v.0].value.data()
    }

    pub fn tensor(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value.data()[0]
    }

    fn dim(&self, v: Var) -> usize {
        self.nodes[v.0].value.len()
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    fn push(&mut self, value: Vec<f64>, op: Op, needs_grad: bool) -> Var {
        self.push_tensor(Tensor::vector(value), op, needs_grad)
    }

    fn push_tensor(&mut self, value: Tensor, op: Op, needs_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    /// Constant input; gradients are not tracked through it.
    pub fn input(&mut self, value: Tensor) -> Var {
        self.push_tensor(value, Op::Leaf, false)
    }

    pub fn constant(&mut self, values: Vec<f64>) -> Var {
        self.push(values, Op::Leaf, false)
    }

    pub fn zeros(&mut self, n: usize) -> Var {
        self.constant(vec![0.0; n])
    }

    /// The whole parameter as a node.
    pub fn param(&mut self, store: &ParamStore, p: ParamId) -> Var {
        self.push_tensor(store.value(p).clone(), Op::Param(p), true)
    }

    /// `y = x W + b` with `W` of dims `[in, out]`.
    pub fn affine(&mut self, store: &ParamStore, x: Var, w: ParamId, b: Option<ParamId>) -> Result<Var> {
        let wt = store.value(w);
        let (n_in, n_out) = (wt.rows(), wt.cols());
        let xs = self.value(x);
        if xs.len() != n_in || wt.dims().len() != 2 {
            return Err(Error::Shape {
                op: "affine",
                left: vec![xs.len()],
                right: wt.dims().to_vec(),
            });
        }
        let mut y = match b {
            Some(b) => {
                let bt = store.value(b);
                if bt.len() != n_out {
                    return Err(Error::Shape {
                        op: "affine bias",
                        left: vec![n_out],
                        right: bt.dims().to_vec(),
                    });
                }
                bt.data().to_vec()
            }
            None => vec![0.0; n_out],
        };
        let wd = wt.data();
        for (i, &xi) in xs.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let row = &wd[i * n_out..(i + 1) * n_out];
            for (yj, &wij) in y.iter_mut().zip(row) {
                *yj += xi * wij;
            }
        }
        Ok(self.push(y, Op::Affine { x, w, b }, true))
    }

    pub fn embed(&mut self, store: &ParamStore, table: ParamId, row: usize) -> Result<Var> {
        let t = store.value(table);
        if row >= t.rows() {
            return Err(Error::invalid(format!(
                "embedding row {row} out of range ({} rows)",
                t.rows()
            )));
        }
        Ok(self.push(t.row(row).to_vec(), Op::Embed { table, row }, true))
    }

    fn binary(&mut self, a: Var, b: Var, name: &'static str, f: impl Fn(f64, f64) -> f64, op: Op) -> Result<Var> {
        let (da, db) = (self.dim(a), self.dim(b));
        if da != db {
            return Err(shape_err(name, da, db));
        }
        let y = self
            .value(a)
            .iter()
            .zip(self.value(b))
            .map(|(&x, &y)| f(x, y))
            .collect();
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(y, op, needs))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, "add", |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, "sub", |x, y| x - y, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, "mul", |x, y| x * y, Op::Mul(a, b))
    }

    /// Elementwise maximum; ties route the gradient to `a`.
    pub fn max(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, "max", |x, y| if x >= y { x } else { y }, Op::Max(a, b))
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Var {
        let y = self.value(x).iter().map(|v| v * c).collect();
        let needs = self.needs(x);
        self.push(y, Op::Scale(x, c), needs)
    }

    /// Vector `x` times the scalar node `s`.
    pub fn scale_by(&mut self, x: Var, s: Var) -> Result<Var> {
        if self.dim(s) != 1 {
            return Err(shape_err("scale_by", self.dim(s), 1));
        }
        let c = self.scalar(s);
        let y = self.value(x).iter().map(|v| v * c).collect();
        let needs = self.needs(x) || self.needs(s);
        Ok(self.push(y, Op::ScaleBy { x, s }, needs))
    }

    pub fn one_minus(&mut self, x: Var) -> Var {
        let y = self.value(x).iter().map(|v| 1.0 - v).collect();
        let needs = self.needs(x);
        self.push(y, Op::OneMinus(x), needs)
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let y = self.value(x).iter().map(|&v| sigmoid(v)).collect();
        let needs = self.needs(x);
        self.push(y, Op::Sigmoid(x), needs)
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        let y = self.value(x).iter().map(|v| v.tanh()).collect();
        let needs = self.needs(x);
        self.push(y, Op::Tanh(x), needs)
    }

    pub fn concat(&mut self, parts: &[Var]) -> Var {
        let n = parts.iter().map(|&p| self.dim(p)).sum();
        let mut y = Vec::with_capacity(n);
        for &p in parts {
            y.extend_from_slice(self.value(p));
        }
        let needs = parts.iter().any(|&p| self.needs(p));
        self.push(y, Op::Concat(parts.to_vec()), needs)
    }

    pub fn slice(&mut self, x: Var, start: usize, len: usize) -> Result<Var> {
        let n = self.dim(x);
        if start + len > n {
            return Err(shape_err("slice", start + len, n));
        }
        let y = self.value(x)[start..start + len].to_vec();
        let needs = self.needs(x);
        Ok(self.push(y, Op::Slice { x, start }, needs))
    }

    pub fn softmax(&mut self, x: Var) -> Var {
        let y = super::tensor::softmax(self.value(x));
        let needs = self.needs(x);
        self.push(y, Op::Softmax(x), needs)
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let y = self.value(x).iter().sum();
        let needs = self.needs(x);
        self.push(vec![y], Op::Sum(x), needs)
    }

    /// Multiplies by a fixed mask (already scaled for inverted dropout).
    pub fn dropout(&mut self, x: Var, mask: Vec<f64>) -> Result<Var> {
        if mask.len() != self.dim(x) {
            return Err(shape_err("dropout", mask.len(), self.dim(x)));
        }
        let y = self.value(x).iter().zip(&mask).map(|(v, m)| v * m).collect();
        let needs = self.needs(x);
        Ok(self.push(y, Op::Dropout { x, mask }, needs))
    }

    /// Bahdanau scores `v . tanh(q + k_i)` for projected query `q` and keys `k_i`.
    pub fn additive_scores(&mut self, store: &ParamStore, q: Var, keys: &[Var], v: ParamId) -> Result<Var> {
        if keys.is_empty() {
            return Err(Error::invalid("attention over an empty source"));
        }
        let a = self.dim(q);
        let vv = store.value(v).data();
        if vv.len() != a {
            return Err(shape_err("additive_scores", vv.len(), a));
        }
        let mut hidden = Vec::with_capacity(keys.len() * a);
        let mut scores = Vec::with_capacity(keys.len());
        let qv = self.value(q);
        for &k in keys {
            let kv = self.value(k);
            if kv.len() != a {
                return Err(shape_err("additive_scores key", kv.len(), a));
            }
            let mut s = 0.0;
            for j in 0..a {
                let h = (qv[j] + kv[j]).tanh();
                hidden.push(h);
                s += vv[j] * h;
            }
            scores.push(s);
        }
        Ok(self.push(
            scores,
            Op::AdditiveScores {
                q,
                keys: keys.to_vec(),
                v,
                hidden,
            },
            true,
        ))
    }

    /// `sum_i w_i * items_i`.
    pub fn weighted_sum(&mut self, w: Var, items: &[Var]) -> Result<Var> {
        if self.dim(w) != items.len() || items.is_empty() {
            return Err(shape_err("weighted_sum", self.dim(w), items.len()));
        }
        let d = self.dim(items[0]);
        let mut y = vec![0.0; d];
        let wv = self.value(w).to_vec();
        for (&wi, &it) in wv.iter().zip(items) {
            let iv = self.value(it);
            if iv.len() != d {
                return Err(shape_err("weighted_sum item", iv.len(), d));
            }
            for (yj, &x) in y.iter_mut().zip(iv) {
                *yj += wi * x;
            }
        }
        let needs = self.needs(w) || items.iter().any(|&i| self.needs(i));
        Ok(self.push(
            y,
            Op::WeightedSum {
                w,
                items: items.to_vec(),
            },
            needs,
        ))
    }

    /// `out[index[i]] += x[i]` into a zero vector of length `size`.
    pub fn scatter_add(&mut self, x: Var, index: Vec<usize>, size: usize) -> Result<Var> {
        if index.len() != self.dim(x) {
            return Err(shape_err("scatter_add", index.len(), self.dim(x)));
        }
        if let Some(&bad) = index.iter().find(|&&i| i >= size) {
            return Err(Error::invalid(format!("scatter index {bad} >= {size}")));
        }
        let mut y = vec![0.0; size];
        for (&i, &v) in index.iter().zip(self.value(x)) {
            y[i] += v;
        }
        let needs = self.needs(x);
        Ok(self.push(y, Op::ScatterAdd { x, index }, needs))
    }

    /// Zero-extends `x` to length `size`.
    pub fn pad(&mut self, x: Var, size: usize) -> Result<Var> {
        let n = self.dim(x);
        if size < n {
            return Err(shape_err("pad", size, n));
        }
        let mut y = self.value(x).to_vec();
        y.resize(size, 0.0);
        let needs = self.needs(x);
        Ok(self.push(y, Op::Pad { x }, needs))
    }

    /// `-ln x[idx]`, with `x[idx]` floored at [`PROB_FLOOR`].
    pub fn neg_log(&mut self, x: Var, idx: usize) -> Result<Var> {
        let n = self.dim(x);
        if idx >= n {
            return Err(shape_err("neg_log", idx, n));
        }
        let p = self.value(x)[idx].max(PROB_FLOOR);
        let needs = self.needs(x);
        Ok(self.push(vec![-p.ln()], Op::NegLog { x, idx }, needs))
    }

    /// `-ln softmax(logits)[target]`.
    pub fn softmax_xent(&mut self, logits: Var, target: usize) -> Result<Var> {
        let n = self.dim(logits);
        if target >= n {
            return Err(shape_err("softmax_xent", target, n));
        }
        let probs = super::tensor::softmax(self.value(logits));
        let loss = -probs[target].max(f64::MIN_POSITIVE).ln();
        let needs = self.needs(logits);
        Ok(self.push(vec![loss], Op::SoftmaxXent { logits, target, probs }, needs))
    }

    /// Summed binary cross-entropy of sigmoid(logits) against `targets` in [0, 1].
    pub fn bce_logits(&mut self, logits: Var, targets: Vec<f64>) -> Result<Var> {
        let n = self.dim(logits);
        if targets.len() != n {
            return Err(shape_err("bce_logits", targets.len(), n));
        }
        let loss = self
            .value(logits)
            .iter()
            .zip(&targets)
            .map(|(&z, &t)| z.max(0.0) - z * t + (-z.abs()).exp().ln_1p())
            .sum();
        let needs = self.needs(logits);
        Ok(self.push(vec![loss], Op::BceLogits { logits, targets }, needs))
    }

    /// Sum of scalar nodes.
    pub fn sum_all(&mut self, xs: &[Var]) -> Result<Var> {
        let mut s = 0.0;
        for &x in xs {
            if self.dim(x) != 1 {
                return Err(shape_err("sum_all", self.dim(x), 1));
            }
            s += self.scalar(x);
        }
        let needs = xs.iter().any(|&x| self.needs(x));
        Ok(self.push(vec![s], Op::SumAll(xs.to_vec()), needs))
    }

    /// Accumulates `d loss / d p` into `store` for every parameter reachable
    /// from the scalar `loss`.
    pub fn backward(&self, loss: Var, store: &mut ParamStore) -> Result<()> {
        if self.dim(loss) != 1 {
            return Err(Error::Shape {
                op: "backward (loss must be scalar)",
                left: self.tensor(loss).dims().to_vec(),
                right: vec![1],
            });
        }
        let mut grads: Vec<Vec<f64>> = (0..=loss.0).map(|_| Vec::new()).collect();
        grads[loss.0] = vec![1.0];

        for i in (0..=loss.0).rev() {
            let g = std::mem::take(&mut grads[i]);
            if g.is_empty() || !self.nodes[i].needs_grad {
                continue;
            }
            let node = &self.nodes[i];
            let y = node.value.data();
            match &node.op {
                Op::Leaf => {}
                Op::Param(p) => {
                    let pg = store.get_mut(*p).grad.data_mut();
                    for (a, b) in pg.iter_mut().zip(&g) {
                        *a += b;
                    }
                }
                Op::Affine { x, w, b } => {
                    if let Some(b) = b {
                        let bg = store.get_mut(*b).grad.data_mut();
                        for (a, d) in bg.iter_mut().zip(&g) {
                            *a += d;
                        }
                    }
                    let xs = self.value(*x);
                    let n_out = g.len();
                    let want_dx = self.needs(*x);
                    let mut dx = if want_dx { vec![0.0; xs.len()] } else { Vec::new() };
                    let param = store.get_mut(*w);
                    let (wd, wg) = (param.value.data(), param.grad.data_mut());
                    for (r, &xi) in xs.iter().enumerate() {
                        let grow = &mut wg[r * n_out..(r + 1) * n_out];
                        if xi != 0.0 {
                            for (gw, &d) in grow.iter_mut().zip(&g) {
                                *gw += xi * d;
                            }
                        }
                        if want_dx {
                            let row = &wd[r * n_out..(r + 1) * n_out];
                            dx[r] = row.iter().zip(&g).map(|(a, b)| a * b).sum();
                        }
                    }
                    if want_dx {
                        accumulate(&mut grads, *x, &dx);
                    }
                }
                Op::Embed { table, row } => {
                    let t = store.get_mut(*table);
                    let c = t.grad.cols();
                    let dst = &mut t.grad.data_mut()[row * c..(row + 1) * c];
                    for (a, b) in dst.iter_mut().zip(&g) {
                        *a += b;
                    }
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads, *a, &g);
                    accumulate(&mut grads, *b, &g);
                }
                Op::Sub(a, b) => {
                    accumulate(&mut grads, *a, &g);
                    let neg: Vec<f64> = g.iter().map(|v| -v).collect();
                    accumulate(&mut grads, *b, &neg);
                }
                Op::Mul(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    let da: Vec<f64> = g.iter().zip(bv).map(|(d, v)| d * v).collect();
                    let db: Vec<f64> = g.iter().zip(av).map(|(d, v)| d * v).collect();
                    accumulate(&mut grads, *a, &da);
                    accumulate(&mut grads, *b, &db);
                }
                Op::Max(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    let mut da = vec![0.0; g.len()];
                    let mut db = vec![0.0; g.len()];
                    for k in 0..g.len() {
                        if av[k] >= bv[k] {
                            da[k] = g[k];
                        } else {
                            db[k] = g[k];
                        }
                    }
                    accumulate(&mut grads, *a, &da);
                    accumulate(&mut grads, *b, &db);
                }
                Op::Scale(x, c) => {
                    let d: Vec<f64> = g.iter().map(|v| v * c).collect();
                    accumulate(&mut grads, *x, &d);
                }
                Op::ScaleBy { x, s } => {
                    let c = self.scalar(*s);
                    let xv = self.value(*x);
                    let dx: Vec<f64> = g.iter().map(|v| v * c).collect();
                    let ds: f64 = g.iter().zip(xv).map(|(a, b)| a * b).sum();
                    accumulate(&mut grads, *x, &dx);
                    accumulate(&mut grads, *s, &[ds]);
                }
                Op::OneMinus(x) => {
                    let d: Vec<f64> = g.iter().map(|v| -v).collect();
                    accumulate(&mut grads, *x, &d);
                }
                Op::Sigmoid(x) => {
                    let d: Vec<f64> = g.iter().zip(y).map(|(d, s)| d * s * (1.0 - s)).collect();
                    accumulate(&mut grads, *x, &d);
                }
                Op::Tanh(x) => {
                    let d: Vec<f64> = g.iter().zip(y).map(|(d, t)| d * (1.0 - t * t)).collect();
                    accumulate(&mut grads, *x, &d);
                }
                Op::Concat(parts) => {
                    let mut off = 0;
                    for &p in parts {
                        let n = self.dim(p);
                        accumulate(&mut grads, p, &g[off..off + n]);
                        off += n;
                    }
                }
                Op::Slice { x, start } => {
                    let n = self.dim(*x);
                    let slot = slot(&mut grads, *x, n);
                    for (k, d) in g.iter().enumerate() {
                        slot[start + k] += d;
                    }
                }
                Op::Softmax(x) => {
                    let dot: f64 = g.iter().zip(y).map(|(a, b)| a * b).sum();
                    let d: Vec<f64> = g.iter().zip(y).map(|(d, p)| p * (d - dot)).collect();
                    accumulate(&mut grads, *x, &d);
                }
                Op::Sum(x) => {
                    let n = self.dim(*x);
                    accumulate(&mut grads, *x, &vec![g[0]; n]);
                }
                Op::Dropout { x, mask } => {
                    let d: Vec<f64> = g.iter().zip(mask).map(|(a, m)| a * m).collect();
                    accumulate(&mut grads, *x, &d);
                }
                Op::AdditiveScores { q, keys, v, hidden } => {
                    let a = self.dim(*q);
                    let vv = store.value(*v).data().to_vec();
                    let mut dq = vec![0.0; a];
                    let mut dv = vec![0.0; a];
                    for (i, &k) in keys.iter().enumerate() {
                        let h = &hidden[i * a..(i + 1) * a];
                        let gs = g[i];
                        let mut dk = vec![0.0; a];
                        for j in 0..a {
                            dv[j] += gs * h[j];
                            let dpre = gs * vv[j] * (1.0 - h[j] * h[j]);
                            dk[j] = dpre;
                            dq[j] += dpre;
                        }
                        if self.needs(k) {
                            accumulate(&mut grads, k, &dk);
                        }
                    }
                    let vg = store.get_mut(*v).grad.data_mut();
                    for (x, d) in vg.iter_mut().zip(&dv) {
                        *x += d;
                    }
                    if self.needs(*q) {
                        accumulate(&mut grads, *q, &dq);
                    }
                }
                Op::WeightedSum { w, items } => {
                    let wv = self.value(*w).to_vec();
                    let mut dw = vec![0.0; items.len()];
                    for (k, &it) in items.iter().enumerate() {
                        let iv = self.value(it);
                        dw[k] = iv.iter().zip(&g).map(|(a, b)| a * b).sum();
                        if self.needs(it) {
                            let d: Vec<f64> = g.iter().map(|v| v * wv[k]).collect();
                            accumulate(&mut grads, it, &d);
                        }
                    }
                    accumulate(&mut grads, *w, &dw);
                }
                Op::ScatterAdd { x, index } => {
                    let d: Vec<f64> = index.iter().map(|&k| g[k]).collect();
                    accumulate(&mut grads, *x, &d);
                }
                Op::Pad { x } => {
                    let n = self.dim(*x);
                    accumulate(&mut grads, *x, &g[..n]);
                }
                Op::NegLog { x, idx } => {
                    let n = self.dim(*x);
                    let p = self.value(*x)[*idx];
                    if p > PROB_FLOOR {
                        let slot = slot(&mut grads, *x, n);
                        slot[*idx] += -g[0] / p;
                    }
                }
                Op::SoftmaxXent { logits, target, probs } => {
                    let mut d: Vec<f64> = probs.iter().map(|p| p * g[0]).collect();
                    d[*target] -= g[0];
                    accumulate(&mut grads, *logits, &d);
                }
                Op::BceLogits { logits, targets } => {
                    let z = self.value(*logits);
                    let d: Vec<f64> = z
                        .iter()
                        .zip(targets)
                        .map(|(&z, &t)| g[0] * (sigmoid(z) - t))
                        .collect();
                    accumulate(&mut grads, *logits, &d);
                }
                Op::SumAll(xs) => {
                    for &x in xs {
                        accumulate(&mut grads, x, &g);
                    }
                }
            }
        }
        Ok(())
    }
}

fn slot(grads: &mut [Vec<f64>], v: Var, n: usize) -> &mut Vec<f64> {
    let s = &mut grads[v.0];
    if s.is_empty() {
        *s = vec![0.0; n];
    }
    s
}

fn accumulate(grads: &mut [Vec<f64>], v: Var, d: &[f64]) {
    let s = &mut grads[v.0];
    if s.is_empty() {
        *s = d.to_vec();
    } else {
        for (a, b) in s.iter_mut().zip(d) {
            *a += b;
        }
    }
}
