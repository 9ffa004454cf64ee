use super::param::ParamStore;
use super::tape::{Tape, Var};
use crate::error::Result;

/// Compares analytic gradients of a scalar function of `store` against
/// central finite differences. Returns the maximum over all parameter entries
/// of `|g_a - g_fd| / max(|g_a|, |g_fd|, 1e-8)`.
///
/// `f` must be deterministic: it is re-run twice per parameter entry.
pub fn gradient_check<F>(store: &mut ParamStore, epsilon: f64, mut f: F) -> Result<f64>
where
    F: FnMut(&mut Tape, &ParamStore) -> Result<Var>,
{
    store.zero_grads();
    let mut tape = Tape::new();
    let loss = f(&mut tape, store)?;
    tape.backward(loss, store)?;
    let analytic: Vec<Vec<f64>> = store.iter().map(|p| p.grad.data().to_vec()).collect();

    let mut eval = |store: &ParamStore| -> Result<f64> {
        let mut tape = Tape::new();
        let l = f(&mut tape, store)?;
        Ok(tape.scalar(l))
    };

    let mut worst: f64 = 0.0;
    let ids: Vec<usize> = (0..store.len()).collect();
    for pi in ids {
        let n = analytic[pi].len();
        for k in 0..n {
            let original = store.iter().nth(pi).unwrap().value.data()[k];
            set(store, pi, k, original + epsilon);
            let plus = eval(store)?;
            set(store, pi, k, original - epsilon);
            let minus = eval(store)?;
            set(store, pi, k, original);
            let fd = (plus - minus) / (2.0 * epsilon);
            let ga = analytic[pi][k];
            let denom = ga.abs().max(fd.abs()).max(1e-8);
            worst = worst.max((ga - fd).abs() / denom);
        }
    }
    Ok(worst)
}

fn set(store: &mut ParamStore, pi: usize, k: usize, value: f64) {
    store.iter_mut().nth(pi).unwrap().value.data_mut()[k] = value;
}
