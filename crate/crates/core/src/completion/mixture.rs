use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::tensor::softmax;
use crate::nn::{Tape, Var};

/// How generation and copy distributions are combined.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixtureMode {
    /// `P(w) = λ P_gen(w) + (1 − λ) Σ_{i: src_i = w} a_i`.
    #[default]
    Additive,
    /// One softmax over `[λ · gen_logits ; (1 − λ) · attention_scores]`, with
    /// the copy half folded onto the extended ids of the source positions.
    SoftmaxConcat,
}

const NORM_TOL: f64 = 1e-6;

fn check_distribution(name: &str, p: &[f64]) -> Result<()> {
    let s: f64 = p.iter().sum();
    if p.iter().any(|&x| !(x >= 0.0)) || (s - 1.0).abs() > NORM_TOL {
        return Err(Error::invalid(format!("{name} is not a distribution (sum {s})")));
    }
    Ok(())
}

/// Final distribution over the extended vocabulary of size `ext_len`.
///
/// In additive mode `gen` and `attn` are the generation distribution and the
/// attention weights, both validated. In softmax-concat mode they are the
/// unnormalised generation logits and attention scores.
pub fn mixture(
    lambda: f64,
    gen: &[f64],
    attn: &[f64],
    copy_ids: &[usize],
    ext_len: usize,
    mode: MixtureMode,
) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::invalid(format!("switch probability {lambda} outside [0, 1]")));
    }
    if attn.len() != copy_ids.len() {
        return Err(Error::Shape {
            op: "mixture",
            left: vec![attn.len()],
            right: vec![copy_ids.len()],
        });
    }
    if gen.len() > ext_len || copy_ids.iter().any(|&i| i >= ext_len) {
        return Err(Error::invalid("id outside the extended vocabulary"));
    }
    let mut p = vec![0.0; ext_len];
    match mode {
        MixtureMode::Additive => {
            check_distribution("P_gen", gen)?;
            check_distribution("attention", attn)?;
            for (pw, &g) in p.iter_mut().zip(gen) {
                *pw = lambda * g;
            }
            for (&i, &a) in copy_ids.iter().zip(attn) {
                p[i] += (1.0 - lambda) * a;
            }
        }
        MixtureMode::SoftmaxConcat => {
            let z: Vec<f64> = gen
                .iter()
                .map(|g| lambda * g)
                .chain(attn.iter().map(|s| (1.0 - lambda) * s))
                .collect();
            let q = softmax(&z);
            p[..gen.len()].copy_from_slice(&q[..gen.len()]);
            for (&i, &c) in copy_ids.iter().zip(&q[gen.len()..]) {
                p[i] += c;
            }
        }
    }
    Ok(p)
}

/// Tape form of [`mixture`]. `gen` is the generation logits and `scores` the
/// attention scores; `attn` the attention weights.
pub fn mixture_on_tape(
    tape: &mut Tape,
    lambda: Var,
    gen: Var,
    attn: Var,
    scores: Var,
    copy_ids: &[usize],
    ext_len: usize,
    mode: MixtureMode,
) -> Result<Var> {
    let one_minus = tape.one_minus(lambda);
    match mode {
        MixtureMode::Additive => {
            let pg = tape.softmax(gen);
            let g = tape.scale_by(pg, lambda)?;
            let g = tape.pad(g, ext_len)?;
            let c = tape.scale_by(attn, one_minus)?;
            let c = tape.scatter_add(c, copy_ids.to_vec(), ext_len)?;
            tape.add(g, c)
        }
        MixtureMode::SoftmaxConcat => {
            let v = tape.value(gen).len();
            let g = tape.scale_by(gen, lambda)?;
            let c = tape.scale_by(scores, one_minus)?;
            let z = tape.concat(&[g, c]);
            let q = tape.softmax(z);
            let index = (0..v).chain(copy_ids.iter().copied()).collect();
            tape.scatter_add(q, index, ext_len)
        }
    }
}
