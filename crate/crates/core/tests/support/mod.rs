//! Random builders and brute-force oracles shared by the core tests and the
//! acceptance suite. Everything here is computed from raw sets, never through
//! the matrix or engine code under test.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use metacust_core::engine::apply;
use metacust_core::model::{
    derive_none_concerns, Component, Concern, CustomizationPoint, Dimension, ViolationCode,
};
use metacust_core::{AppModel, Customization, Decision, Edge, EdgeId, ElementId, Metagraph, Mode, Operation, Reason, Triple, TripleMatrix};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

pub type Set = BTreeSet<ElementId>;

fn pick_subset<R: Rng>(rng: &mut R, pool: &[ElementId], p: f64) -> Set {
    pool.iter().filter(|_| rng.random_bool(p)).cloned().collect()
}

/// A metagraph with 1..=`max_x` elements and 0..=`max_e` edges. Edges may
/// overlap, form cycles, have several outputs or an empty side.
pub fn random_metagraph<R: Rng>(rng: &mut R, max_x: usize, max_e: usize) -> Metagraph {
    let n = rng.random_range(1..=max_x);
    let xs: Vec<ElementId> = (0..n).map(|i| ElementId::new(format!("x{i}"))).collect();
    let m = rng.random_range(0..=max_e);
    let mut edges = Vec::with_capacity(m);
    for k in 0..m {
        let p = rng.random_range(0.15..0.6);
        let (v, w) = loop {
            let v = pick_subset(rng, &xs, p);
            let w = pick_subset(rng, &xs, p);
            if !v.is_empty() || !w.is_empty() {
                break (v, w);
            }
        };
        edges.push(Edge::new(format!("e{k}"), v, w));
    }
    Metagraph::new(xs, edges).expect("random metagraph is well formed")
}

/// Every sequence of distinct edges in which consecutive edges connect
/// (`W_i ∩ V_{i+1} ≠ ∅`), emitted once per source in the first invertex and
/// target in the last outvertex.
pub fn brute_closure(g: &Metagraph) -> TripleMatrix {
    let edges: Vec<&Edge> = g.edges().collect();
    let mut out = TripleMatrix::empty(g.elements().clone());
    let mut seq: Vec<usize> = Vec::new();
    fn dfs(edges: &[&Edge], seq: &mut Vec<usize>, out: &mut TripleMatrix) {
        if !seq.is_empty() {
            emit(edges, seq, out);
        }
        for i in 0..edges.len() {
            if seq.contains(&i) {
                continue;
            }
            if let Some(&last) = seq.last() {
                if edges[last].outvertex.is_disjoint(&edges[i].invertex) {
                    continue;
                }
            }
            seq.push(i);
            dfs(edges, seq, out);
            seq.pop();
        }
    }
    fn emit(edges: &[&Edge], seq: &[usize], out: &mut TripleMatrix) {
        let all_v: Set = seq.iter().flat_map(|&i| edges[i].invertex.iter().cloned()).collect();
        let all_w: Set = seq.iter().flat_map(|&i| edges[i].outvertex.iter().cloned()).collect();
        let path: Vec<EdgeId> = seq.iter().map(|&i| edges[i].id.clone()).collect();
        let first = edges[seq[0]];
        let last = edges[*seq.last().unwrap()];
        for s in &first.invertex {
            for t in &last.outvertex {
                // a lone edge keeps its own coinput, longer paths net out produced inputs
                let ci: Set = if seq.len() == 1 {
                    first.invertex.iter().filter(|x| *x != s).cloned().collect()
                } else {
                    all_v.difference(&all_w).filter(|x| *x != s).cloned().collect()
                };
                let co: Set = all_w.iter().filter(|x| *x != t).cloned().collect();
                out.insert(s.clone(), t.clone(), Triple::new(ci, co, path.clone()));
            }
        }
    }
    dfs(&edges, &mut seq, &mut out);
    out
}

/// Cell-by-cell comparison; `Err` names the first differing cell.
pub fn same_cells(a: &TripleMatrix, b: &TripleMatrix) -> Result<(), String> {
    let keys: BTreeSet<(ElementId, ElementId)> = a
        .cells()
        .chain(b.cells())
        .map(|(s, t, _)| (s.clone(), t.clone()))
        .collect();
    for (s, t) in keys {
        let x = a.cell(s.as_str(), t.as_str()).cloned().unwrap_or_default();
        let y = b.cell(s.as_str(), t.as_str()).cloned().unwrap_or_default();
        if x != y {
            return Err(format!("cell ({s},{t}): {x:?} vs {y:?}"));
        }
    }
    Ok(())
}

fn comp(id: &str, point: &str) -> Component {
    Component {
        id: id.into(),
        point: point.into(),
        label: id.to_uppercase(),
        description: None,
    }
}

fn single_point(ids: &[ElementId]) -> (Vec<CustomizationPoint>, Vec<Component>) {
    let point = CustomizationPoint {
        id: "cp".into(),
        name: "cp".into(),
        components: ids.iter().cloned().collect(),
    };
    let comps = ids.iter().map(|x| comp(x.as_str(), "cp")).collect();
    (vec![point], comps)
}

/// A well-formed model with up to `max_components` components, one to three
/// dimensions and requirement edges inside each concern that may be cyclic,
/// multi-output, conjunctive or disjunctive.
pub fn random_model<R: Rng>(rng: &mut R, max_components: usize) -> AppModel {
    let n = rng.random_range(2..=max_components);
    let ids: Vec<ElementId> = (0..n).map(|i| ElementId::new(format!("c{i:02}"))).collect();
    let (points, comps) = single_point(&ids);
    let dims = rng.random_range(1..=3);
    let mut edge_no = 0;
    let mut dimensions = Vec::new();
    for d in 0..dims {
        let k = rng.random_range(1..=4.min(n));
        let mut shuffled = ids.clone();
        shuffled.shuffle(rng);
        let mut buckets: Vec<Vec<ElementId>> = vec![Vec::new(); k + 1];
        for (i, x) in shuffled.into_iter().enumerate() {
            let b = if i < k { i } else { rng.random_range(0..=k) };
            buckets[b].push(x);
        }
        let mut concerns = Vec::new();
        for (ci, members) in buckets.into_iter().take(k).enumerate() {
            let mut cn = Concern::new(format!("d{d}k{ci}"), format!("concern {d}.{ci}"))
                .with_components(members.iter().cloned());
            let edges = rng.random_range(0..=members.len() * 2);
            for _ in 0..edges {
                let v_len = rng.random_range(0..=3.min(members.len()));
                let w_len = rng.random_range(1..=3.min(members.len()));
                let v: Vec<ElementId> = members.choose_multiple(rng, v_len).cloned().collect();
                let w: Vec<ElementId> = members.choose_multiple(rng, w_len).cloned().collect();
                let mode = if rng.random_bool(0.5) { Mode::And } else { Mode::Or };
                cn = cn.with_edge(Edge::new(format!("r{edge_no:03}"), v, w), mode);
                edge_no += 1;
            }
            concerns.push(cn);
        }
        dimensions.push(Dimension::new(format!("d{d}"), format!("dimension {d}"), concerns));
    }
    derive_none_concerns(AppModel::new("random", "1", points, comps, dimensions).expect("random model is structurally sound"))
}

fn model_of(ids: &[&str], dimensions: Vec<Dimension>) -> AppModel {
    let ids: Vec<ElementId> = ids.iter().map(|s| ElementId::new(*s)).collect();
    let (points, comps) = single_point(&ids);
    derive_none_concerns(AppModel::new("hand", "1", points, comps, dimensions).unwrap())
}

/// Small fixed models exercising cycles, self loops, multi-output edges and
/// components shared across dimensions.
pub fn hand_models() -> Vec<AppModel> {
    let sec = model_of(
        &["x1", "x2", "x3", "x4", "x5"],
        vec![Dimension::new(
            "security",
            "Security",
            vec![Concern::new("SEC", "sec")
                .with_components(["x1", "x2", "x3", "x4", "x5"])
                .with_edge(Edge::new("eA", ["x1", "x2"], ["x4"]), Mode::And)
                .with_edge(Edge::new("eB", ["x2", "x3"], ["x5"]), Mode::And)],
        )],
    );
    let cycle = model_of(
        &["a", "b", "c", "d"],
        vec![Dimension::new(
            "d",
            "d",
            vec![Concern::new("k", "k")
                .with_components(["a", "b", "c", "d"])
                .with_edge(Edge::new("ab", ["a"], ["b"]), Mode::Or)
                .with_edge(Edge::new("ba", ["b"], ["a"]), Mode::Or)
                .with_edge(Edge::new("cc", ["c"], ["c", "d"]), Mode::And)
                .with_edge(Edge::new("da", ["d", "b"], ["a", "c"]), Mode::Or)],
        )],
    );
    let multi = model_of(
        &["p", "q", "r", "s", "t"],
        vec![
            Dimension::new(
                "one",
                "one",
                vec![Concern::new("k1", "k1")
                    .with_components(["p", "q", "r", "s"])
                    .with_edge(Edge::new("m1", ["p"], ["q", "r"]), Mode::And)
                    .with_edge(Edge::new("m2", ["q", "r"], ["s"]), Mode::Or)
                    .with_edge(Edge::new("m3", ["s"], ["p"]), Mode::And)],
            ),
            Dimension::new(
                "two",
                "two",
                vec![
                    Concern::new("k2", "k2")
                        .with_components(["q", "t"])
                        .with_edge(Edge::new("m4", ["t"], ["q"]), Mode::And),
                    Concern::new("k3", "k3").with_components(["p", "s"]),
                ],
            ),
        ],
    );
    vec![sec, cycle, multi]
}

/// `count` operations drawn uniformly: a concern, then a component of that
/// concern (or, rarely, any component or an unknown id), add or delete with
/// equal odds.
pub fn uniform_ops<R: Rng>(rng: &mut R, m: &AppModel, count: usize) -> Vec<Operation> {
    let concerns: Vec<&str> = m.concern_ids().collect();
    let all: Vec<ElementId> = m.component_ids().into_iter().collect();
    (0..count)
        .map(|_| {
            let concern = *concerns.choose(rng).unwrap();
            let members: Vec<ElementId> = m.concern(concern).unwrap().components.iter().cloned().collect();
            let roll = rng.random_range(0..100);
            let x = if roll < 2 {
                ElementId::new("ghost")
            } else if roll < 10 || members.is_empty() {
                all.choose(rng).unwrap().clone()
            } else {
                members.choose(rng).unwrap().clone()
            };
            if rng.random_bool(0.5) {
                Operation::add(concern, x)
            } else {
                Operation::delete(x)
            }
        })
        .collect()
}

/// Tenant-wide selected components computed from raw selections.
pub fn selected(td: &Customization) -> Set {
    td.selections().values().flat_map(|s| s.components.iter().cloned()).collect()
}

/// Incoming requirements of `x` in `concern`: edges of the concern with `x`
/// in the outvertex and a non-empty invertex.
pub fn incoming(m: &AppModel, concern: &str, x: &ElementId) -> Vec<(Set, Mode)> {
    m.concern(concern)
        .map(|cn| {
            cn.edges
                .iter()
                .filter(|re| re.edge.outvertex.contains(x) && !re.edge.invertex.is_empty())
                .map(|re| (re.edge.invertex.clone(), re.mode))
                .collect()
        })
        .unwrap_or_default()
}

pub fn satisfiable(v: &Set, mode: Mode, sel: &Set) -> bool {
    match mode {
        Mode::And => v.is_subset(sel),
        Mode::Or => !v.is_disjoint(sel),
    }
}

/// Whether some recorded edge uses `x` as a support with a non-empty output.
pub fn tenant_row_nonempty(m: &AppModel, td: &Customization, x: &ElementId) -> bool {
    td.selections().values().flat_map(|s| s.edges.iter()).any(|e| {
        m.app_graph()
            .edge(e.as_str())
            .is_some_and(|edge| edge.invertex.contains(x) && !edge.outvertex.is_empty())
    })
}

/// Applies `ops` one by one and checks every decision against the oracles.
pub fn check_soundness(m: &AppModel, ops: &[Operation]) -> Result<(), String> {
    let mut td = Customization::new(m, "t");
    for (i, op) in ops.iter().enumerate() {
        let before = td.clone();
        let d = apply(m, &mut td, op);
        let ctx = || format!("op {i} {op:?} -> {:?}", d.reason);
        if d.is_valid() {
            let report = metacust_core::engine::oracle_valid(m, &td);
            if !report.valid {
                return Err(format!("{}: accepted but oracle says {:?}", ctx(), report.violations));
            }
            continue;
        }
        if td != before {
            return Err(format!("{}: rejected op changed the customization", ctx()));
        }
        let sel = selected(&before);
        let x = op.component();
        match (op, d.reason) {
            (Operation::Add { concern, .. }, Reason::RequirementsUnsatisfied) => {
                let reqs = incoming(m, concern, x);
                if reqs.is_empty() || reqs.iter().any(|(v, mode)| satisfiable(v, *mode, &sel)) {
                    return Err(format!("{}: a satisfiable incoming edge exists", ctx()));
                }
            }
            (Operation::Add { concern, .. }, Reason::ComponentNotInConcern) => {
                if m.concern(concern).unwrap().components.contains(x) {
                    return Err(format!("{}: component is in the concern", ctx()));
                }
            }
            (Operation::Delete { .. }, Reason::RequiredByOthers) => {
                if !tenant_row_nonempty(m, &before, x) {
                    return Err(format!("{}: tenant row is empty", ctx()));
                }
            }
            (Operation::Delete { .. }, Reason::ComponentNotPresent) => {
                if sel.contains(x) {
                    return Err(format!("{}: component is selected", ctx()));
                }
            }
            (_, Reason::UnknownComponent) => {
                if m.component(x.as_str()).is_some() {
                    return Err(format!("{}: component exists", ctx()));
                }
            }
            _ => return Err(format!("{}: unexpected rejection", ctx())),
        }
    }
    Ok(())
}

/// Counts per violation code computed from raw sets.
pub fn brute_violation_counts(m: &AppModel) -> BTreeMap<ViolationCode, usize> {
    use ViolationCode::*;
    let mut counts: BTreeMap<ViolationCode, usize> = BTreeMap::new();
    let mut bump = |c: ViolationCode| *counts.entry(c).or_default() += 1;
    let all = m.component_ids();

    let mut homes: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for d in m.dimensions() {
        for cn in &d.concerns {
            homes.entry(cn.id.as_str()).or_default().insert(d.id.as_str());
        }
    }
    for dims in homes.values() {
        if dims.len() > 1 {
            bump(ConcernInMultipleDimensions);
        }
    }

    for d in m.dimensions() {
        let concerns: Vec<&Concern> = d.concerns.iter().chain(d.none_concern.iter()).collect();
        for i in 0..concerns.len() {
            for j in i + 1..concerns.len() {
                if concerns[i].components.iter().any(|x| concerns[j].components.contains(x)) {
                    bump(OverlappingConcerns);
                }
            }
        }
        for x in &all {
            if !concerns.iter().any(|c| c.components.contains(x)) {
                bump(UncoveredComponent);
            }
        }
        if d.none_concern.as_ref().is_some_and(|c| !c.edges.is_empty()) {
            bump(NoneConcernWithEdges);
        }
        let dim_edges: Vec<&Edge> = concerns.iter().flat_map(|c| c.edges.iter().map(|re| &re.edge)).collect();
        for cn in &d.concerns {
            for re in &cn.edges {
                if re.edge.invertex.iter().chain(&re.edge.outvertex).any(|x| !cn.components.contains(x)) {
                    bump(DanglingEdgeReference);
                }
            }
            let own: BTreeSet<&EdgeId> = cn.edges.iter().map(|re| &re.edge.id).collect();
            let mut members = cn.components.clone();
            for re in &cn.edges {
                members.extend(re.edge.invertex.iter().cloned());
                members.extend(re.edge.outvertex.iter().cloned());
            }
            let dependent = members.iter().any(|x| {
                let produced: Vec<&&Edge> = dim_edges.iter().filter(|e| e.outvertex.contains(x)).collect();
                let consumed: Vec<&&Edge> = dim_edges.iter().filter(|e| e.invertex.contains(x)).collect();
                // a pure input has no producer, a pure output no consumer
                produced.iter().any(|e| !own.contains(&e.id)) || consumed.iter().any(|e| !own.contains(&e.id))
            });
            if dependent {
                bump(DependentConcern);
            }
        }
    }
    counts
}

/// Models with deliberate defects: overlaps, gaps, edges leaving their
/// concern and concern ids reused across dimensions.
pub fn random_defective_model<R: Rng>(rng: &mut R, max_components: usize) -> AppModel {
    let n = rng.random_range(2..=max_components);
    let ids: Vec<ElementId> = (0..n).map(|i| ElementId::new(format!("c{i:02}"))).collect();
    let (points, comps) = single_point(&ids);
    let dims = rng.random_range(1..=3);
    let mut edge_no = 0;
    let mut dimensions = Vec::new();
    for d in 0..dims {
        let k = rng.random_range(1..=4);
        let mut members: Vec<BTreeSet<ElementId>> = vec![BTreeSet::new(); k];
        for x in &ids {
            let roll = rng.random_range(0..100);
            let copies = if roll < 8 { 0 } else if roll < 16 { 2 } else { 1 };
            for _ in 0..copies {
                members[rng.random_range(0..k)].insert(x.clone());
            }
        }
        let mut concerns = Vec::new();
        for (ci, mem) in members.into_iter().enumerate() {
            let id = if ci == 0 && d > 0 && rng.random_bool(0.2) {
                "d0k0".to_string()
            } else {
                format!("d{d}k{ci}")
            };
            let pool: Vec<ElementId> = mem.iter().cloned().collect();
            let mut cn = Concern::new(id, "c").with_components(mem.iter().cloned());
            for _ in 0..rng.random_range(0..=3) {
                let source = if pool.is_empty() || rng.random_bool(0.15) { &ids } else { &pool };
                let (v_len, w_len) = (rng.random_range(0..=2), rng.random_range(1..=2));
                let v: Vec<ElementId> = source.choose_multiple(rng, v_len).cloned().collect();
                let w: Vec<ElementId> = source.choose_multiple(rng, w_len).cloned().collect();
                cn = cn.with_edge(Edge::new(format!("r{edge_no:03}"), v, w), Mode::Or);
                edge_no += 1;
            }
            concerns.push(cn);
        }
        dimensions.push(Dimension::new(format!("d{d}"), "dim", concerns));
    }
    let m = AppModel::new("defective", "1", points, comps, dimensions).expect("structurally sound");
    if rng.random_bool(0.5) {
        derive_none_concerns(m)
    } else {
        m
    }
}

/// Decision lists and final document of a replay, as bytes.
pub fn replay_bytes(m: &AppModel, ops: &[Operation]) -> (Vec<u8>, Vec<u8>) {
    let outcome = metacust_core::engine::replay(m, "t", ops);
    let decisions: Vec<&Decision> = outcome.decisions.iter().collect();
    (
        serde_json::to_vec(&decisions).unwrap(),
        metacust_core::io::save_customization(&outcome.customization),
    )
}
