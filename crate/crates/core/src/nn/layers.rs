//! Recurrent cells, encoders and additive attention built on the tape.

use rand::Rng as _;

use super::param::{Init, ParamId, ParamStore};
use super::tape::{Tape, Var};
use crate::error::Result;
use crate::rng::Rng;

/// Training mode carries the dropout stream; eval mode is deterministic.
pub enum Mode<'a> {
    Eval,
    Train(&'a mut Rng),
}

impl Mode<'_> {
    pub fn is_train(&self) -> bool {
        matches!(self, Mode::Train(_))
    }
}

/// Inverted dropout; identity in eval mode or when `p == 0`.
pub fn dropout(tape: &mut Tape, x: Var, p: f64, mode: &mut Mode) -> Result<Var> {
    match mode {
        Mode::Train(rng) if p > 0.0 => {
            let n = tape.value(x).len();
            let keep = 1.0 - p;
            let mask = (0..n)
                .map(|_| if rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 })
                .collect();
            tape.dropout(x, mask)
        }
        _ => Ok(x),
    }
}

/// Standard LSTM cell: gates `[i, f, g, o] = [x, h] W + b`.
#[derive(Clone, Debug)]
pub struct LstmCell {
    pub w: ParamId,
    pub b: ParamId,
    pub input: usize,
    pub hidden: usize,
}

impl LstmCell {
    pub fn new(store: &mut ParamStore, name: &str, input: usize, hidden: usize, rng: &mut Rng) -> Result<Self> {
        let w = store.add_init(&format!("{name}.w"), &[input + hidden, 4 * hidden], Init::Xavier, rng)?;
        let b = store.add_init(&format!("{name}.b"), &[4 * hidden], Init::Zeros, rng)?;
        Ok(LstmCell { w, b, input, hidden })
    }

    pub fn step(&self, tape: &mut Tape, store: &ParamStore, x: Var, h: Var, c: Var) -> Result<(Var, Var)> {
        let hd = self.hidden;
        let xh = tape.concat(&[x, h]);
        let z = tape.affine(store, xh, self.w, Some(self.b))?;
        let zi = tape.slice(z, 0, hd)?;
        let zf = tape.slice(z, hd, hd)?;
        let zg = tape.slice(z, 2 * hd, hd)?;
        let zo = tape.slice(z, 3 * hd, hd)?;
        let i = tape.sigmoid(zi);
        let f = tape.sigmoid(zf);
        let g = tape.tanh(zg);
        let o = tape.sigmoid(zo);
        let fc = tape.mul(f, c)?;
        let ig = tape.mul(i, g)?;
        let c_new = tape.add(fc, ig)?;
        let tc = tape.tanh(c_new);
        let h_new = tape.mul(o, tc)?;
        Ok((h_new, c_new))
    }
}

/// LSTM cell with a highway gate `r` mixing the cell output with a linear
/// projection of its input.
#[derive(Clone, Debug)]
pub struct HighwayLstmCell {
    pub w: ParamId,
    pub b: ParamId,
    pub proj: ParamId,
    pub hidden: usize,
}

impl HighwayLstmCell {
    pub fn new(store: &mut ParamStore, name: &str, input: usize, hidden: usize, rng: &mut Rng) -> Result<Self> {
        let w = store.add_init(&format!("{name}.w"), &[input + hidden, 5 * hidden], Init::Xavier, rng)?;
        let b = store.add_init(&format!("{name}.b"), &[5 * hidden], Init::Zeros, rng)?;
        let proj = store.add_init(&format!("{name}.proj"), &[input, hidden], Init::Xavier, rng)?;
        Ok(HighwayLstmCell { w, b, proj, hidden })
    }

    pub fn step(&self, tape: &mut Tape, store: &ParamStore, x: Var, h: Var, c: Var) -> Result<(Var, Var)> {
        let hd = self.hidden;
        let xh = tape.concat(&[x, h]);
        let z = tape.affine(store, xh, self.w, Some(self.b))?;
        let zi = tape.slice(z, 0, hd)?;
        let zf = tape.slice(z, hd, hd)?;
        let zg = tape.slice(z, 2 * hd, hd)?;
        let zo = tape.slice(z, 3 * hd, hd)?;
        let zr = tape.slice(z, 4 * hd, hd)?;
        let i = tape.sigmoid(zi);
        let f = tape.sigmoid(zf);
        let g = tape.tanh(zg);
        let o = tape.sigmoid(zo);
        let r = tape.sigmoid(zr);
        let fc = tape.mul(f, c)?;
        let ig = tape.mul(i, g)?;
        let c_new = tape.add(fc, ig)?;
        let tc = tape.tanh(c_new);
        let cell = tape.mul(o, tc)?;
        let px = tape.affine(store, x, self.proj, None)?;
        let gated = tape.mul(r, cell)?;
        let nr = tape.one_minus(r);
        let carry = tape.mul(nr, px)?;
        let h_new = tape.add(gated, carry)?;
        Ok((h_new, c_new))
    }
}

/// Final `(h, c)` of one encoder layer, forward and backward halves concatenated.
#[derive(Clone, Copy, Debug)]
pub struct LayerState {
    pub h: Var,
    pub c: Var,
}

/// Stacked bidirectional LSTM. Each direction has `hidden / 2` units so the
/// per-position output and the per-layer final states have width `hidden`.
#[derive(Clone, Debug)]
pub struct BiLstm {
    pub layers: Vec<(LstmCell, LstmCell)>,
    pub hidden: usize,
    pub dropout: f64,
}

pub struct Encoded {
    pub outputs: Vec<Var>,
    pub finals: Vec<LayerState>,
}

impl BiLstm {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        input: usize,
        hidden: usize,
        layers: usize,
        dropout: f64,
        rng: &mut Rng,
    ) -> Result<Self> {
        assert!(hidden % 2 == 0, "bidirectional hidden size must be even");
        let half = hidden / 2;
        let mut cells = Vec::with_capacity(layers);
        for l in 0..layers {
            let inp = if l == 0 { input } else { hidden };
            let f = LstmCell::new(store, &format!("{name}.l{l}.fwd"), inp, half, rng)?;
            let b = LstmCell::new(store, &format!("{name}.l{l}.bwd"), inp, half, rng)?;
            cells.push((f, b));
        }
        Ok(BiLstm {
            layers: cells,
            hidden,
            dropout,
        })
    }

    pub fn encode(&self, tape: &mut Tape, store: &ParamStore, inputs: &[Var], mode: &mut Mode) -> Result<Encoded> {
        let half = self.hidden / 2;
        let n = inputs.len();
        let mut xs = inputs.to_vec();
        let mut finals = Vec::with_capacity(self.layers.len());
        for (l, (fwd, bwd)) in self.layers.iter().enumerate() {
            if l > 0 {
                for x in xs.iter_mut() {
                    *x = dropout(tape, *x, self.dropout, mode)?;
                }
            }
            let z = tape.zeros(half);
            let (mut h, mut c) = (z, z);
            let mut fo = Vec::with_capacity(n);
            for &x in &xs {
                (h, c) = fwd.step(tape, store, x, h, c)?;
                fo.push(h);
            }
            let (fh, fc) = (h, c);
            let (mut h, mut c) = (z, z);
            let mut bo = vec![z; n];
            for t in (0..n).rev() {
                (h, c) = bwd.step(tape, store, xs[t], h, c)?;
                bo[t] = h;
            }
            let fin_h = tape.concat(&[fh, h]);
            let fin_c = tape.concat(&[fc, c]);
            finals.push(LayerState { h: fin_h, c: fin_c });
            xs = fo.iter().zip(&bo).map(|(&a, &b)| tape.concat(&[a, b])).collect();
        }
        Ok(Encoded { outputs: xs, finals })
    }
}

/// Additive attention: `score_i = v . tanh(W_s s + W_h k_i)`.
#[derive(Clone, Debug)]
pub struct AdditiveAttention {
    pub ws: ParamId,
    pub wh: ParamId,
    pub v: ParamId,
}

impl AdditiveAttention {
    pub fn new(store: &mut ParamStore, name: &str, query: usize, key: usize, attn: usize, rng: &mut Rng) -> Result<Self> {
        let ws = store.add_init(&format!("{name}.ws"), &[query, attn], Init::Xavier, rng)?;
        let wh = store.add_init(&format!("{name}.wh"), &[key, attn], Init::Xavier, rng)?;
        let v = store.add_init(&format!("{name}.v"), &[attn], Init::Xavier, rng)?;
        Ok(AdditiveAttention { ws, wh, v })
    }

    /// `W_h k_i` for every key; computed once per source sequence.
    pub fn project_keys(&self, tape: &mut Tape, store: &ParamStore, keys: &[Var]) -> Result<Vec<Var>> {
        keys.iter().map(|&k| tape.affine(store, k, self.wh, None)).collect()
    }

    /// Returns `(context, weights, scores)`.
    pub fn attend(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        query: Var,
        keys: &[Var],
        projected: &[Var],
    ) -> Result<(Var, Var, Var)> {
        let q = tape.affine(store, query, self.ws, None)?;
        let scores = tape.additive_scores(store, q, projected, self.v)?;
        let weights = tape.softmax(scores);
        let context = tape.weighted_sum(weights, keys)?;
        Ok((context, weights, scores))
    }
}
