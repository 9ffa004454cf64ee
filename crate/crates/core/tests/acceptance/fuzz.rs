//! Criterion 6: the expert short-circuit ignores the completed path.

use elhyb::corpus::inventory::DIALOG_ACTS;
use elhyb::rng::seeded;
use elhyb::selection::{da_select, DaRoute, SelectionConfig, SelectionMethod};
use elhyb::understanding::{da_decide, DaPrediction};
use rand::Rng;

use crate::Verdict;

const DRAWS: usize = 10_000;

fn random_probs(rng: &mut elhyb::rng::Rng) -> Vec<f64> {
    (0..DIALOG_ACTS.len())
        .map(|_| match rng.gen_range(0..4) {
            0 => 0.0,
            1 => 1.0,
            _ => rng.gen_range(0.0..1.0),
        })
        .collect()
}

pub fn expert_short_circuit() -> Verdict {
    let mut rng = seeded(606);
    let base = SelectionConfig::default();
    let methods = [
        SelectionMethod::LogitsSum,
        SelectionMethod::LogitsMax,
        SelectionMethod::HiddenSum,
        SelectionMethod::HiddenMax,
        SelectionMethod::HiddenCat,
    ];
    let mut changed = 0;
    let mut not_expert = 0;
    for i in 0..DRAWS {
        let theta = rng.gen_range(0.05..0.95);
        let cfg = SelectionConfig {
            method: methods[i % methods.len()],
            theta,
            ..base.clone()
        };
        // pred_E decides at least one non-completable act.
        let mut pe = random_probs(&mut rng);
        let forced = cfg.non_completable[rng.gen_range(0..cfg.non_completable.len())];
        pe[forced] = rng.gen_range(theta..=1.0);
        let pred_e = DaPrediction { probs: pe, hidden: vec![] };
        let expected = da_decide(&pred_e.probs, theta);

        let pred_c = DaPrediction {
            probs: random_probs(&mut rng),
            hidden: vec![],
        };
        let combined = random_probs(&mut rng);
        let zero_c = DaPrediction {
            probs: vec![0.0; DIALOG_ACTS.len()],
            hidden: vec![],
        };
        let a = da_select(&pred_e, &pred_c, Some(&combined), &cfg).unwrap();
        let b = da_select(&pred_e, &zero_c, Some(&vec![1.0; DIALOG_ACTS.len()]), &cfg).unwrap();
        if a.labels != expected || b.labels != expected {
            changed += 1;
        }
        if a.route != DaRoute::Expert || b.route != DaRoute::Expert {
            not_expert += 1;
        }
    }
    Verdict::new(
        changed == 0 && not_expert == 0,
        format!("{DRAWS} random pred_C draws over all five methods; output changed {changed} times, expert route missed {not_expert} times"),
    )
}
