//! Seeded operation streams and latency summaries for the benchmark harness.

use std::collections::BTreeSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::engine::{apply, Decision, Operation};
use crate::metagraph::ElementId;
use crate::model::{AppModel, Customization};

/// Share of generated operations that are adds.
pub const ADD_SHARE: f64 = 0.8;

/// An operation stream with the decisions a serial replay produces for it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Workload {
    pub ops: Vec<Operation>,
    pub expected: Vec<Decision>,
    pub final_state: Customization,
}

/// Generates `count` operations biased towards acceptance: adds are drawn
/// among components whose requirements are already met, deletes among
/// selected components nothing recorded depends on.
pub fn valid_biased_ops(m: &AppModel, tenant: &str, count: usize, seed: u64) -> Workload {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let concerns: Vec<&str> = m.concern_ids().collect();
    let mut td = Customization::new(m, tenant);
    let mut ops = Vec::with_capacity(count);
    let mut expected = Vec::with_capacity(count);

    for _ in 0..count {
        let prefer_add = rng.random_bool(ADD_SHARE);
        let op = if prefer_add {
            pick_add(m, &td, &concerns, &mut rng).or_else(|| pick_delete(m, &td, &mut rng))
        } else {
            pick_delete(m, &td, &mut rng).or_else(|| pick_add(m, &td, &concerns, &mut rng))
        }
        .unwrap_or_else(|| readd(&td, &mut rng));
        expected.push(apply(m, &mut td, &op));
        ops.push(op);
    }
    Workload {
        ops,
        expected,
        final_state: td,
    }
}

fn pick_add(m: &AppModel, td: &Customization, concerns: &[&str], rng: &mut ChaCha8Rng) -> Option<Operation> {
    let selected = td.selected();
    let mut order: Vec<&str> = concerns.to_vec();
    order.shuffle(rng);
    for concern in order {
        let cn = m.concern(concern)?;
        let graph = m.concern_graph(concern)?;
        let taken = td.selection(concern).map(|s| &s.components);
        let mut candidates: Vec<&ElementId> = cn
            .components
            .iter()
            .filter(|x| !taken.is_some_and(|t| t.contains(*x)))
            .collect();
        candidates.shuffle(rng);
        let found = candidates.into_iter().find(|x| {
            let mut incoming = graph
                .producers(x)
                .filter(|e| !e.invertex.is_empty())
                .filter_map(|e| m.requirement(e.id.as_str()))
                .peekable();
            incoming.peek().is_none() || incoming.any(|r| r.satisfied_by(&selected))
        });
        if let Some(x) = found {
            return Some(Operation::add(concern, x.clone()));
        }
    }
    None
}

fn pick_delete(m: &AppModel, td: &Customization, rng: &mut ChaCha8Rng) -> Option<Operation> {
    let pinned: BTreeSet<ElementId> = td
        .recorded_edges()
        .iter()
        .filter_map(|e| m.app_graph().edge(e.as_str()))
        .flat_map(|e| e.invertex.iter().cloned())
        .collect();
    let free: Vec<ElementId> = td.selected().difference(&pinned).cloned().collect();
    free.choose(rng).map(|x| Operation::delete(x.clone()))
}

fn readd(td: &Customization, rng: &mut ChaCha8Rng) -> Operation {
    let pairs: Vec<(&String, &ElementId)> = td
        .selections()
        .iter()
        .flat_map(|(c, s)| s.components.iter().map(move |x| (c, x)))
        .collect();
    let (c, x) = pairs.choose(rng).expect("a stuck workload has selections");
    Operation::add(c.as_str(), (*x).clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatencySummary {
    pub count: usize,
    pub median_us: u64,
    pub p95_us: u64,
    pub mean_us: f64,
}

/// Nearest-rank median and 95th percentile plus the arithmetic mean.
pub fn summarize(latencies_us: &[u64]) -> Option<LatencySummary> {
    if latencies_us.is_empty() {
        return None;
    }
    let mut sorted = latencies_us.to_vec();
    sorted.sort_unstable();
    let rank = |q: f64| {
        let r = (q * sorted.len() as f64).ceil() as usize;
        sorted[r.clamp(1, sorted.len()) - 1]
    };
    let sum: u64 = sorted.iter().sum();
    Some(LatencySummary {
        count: sorted.len(),
        median_us: rank(0.5),
        p95_us: rank(0.95),
        mean_us: sum as f64 / sorted.len() as f64,
    })
}
