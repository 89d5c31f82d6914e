//! Incremental validation of tenant customization operations.
//!
//! Adding a component scans the concern's adjacency column of that component
//! and accepts the add only when one of its incoming requirements is already
//! met by the tenant's selection. Deleting scans the tenant metagraph's row of
//! the component: anything still requiring it blocks the delete. Only the
//! needed row or column is ever built.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metagraph::{adjacency_column_of, adjacency_row_of, EdgeId, ElementId, ElementSet};
use crate::model::{AppModel, Customization, Mode, RequirementEdge};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase", deny_unknown_fields)]
pub enum Operation {
    Add {
        component: ElementId,
        concern: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        revision: Option<String>,
    },
    Delete {
        component: ElementId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        concern: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        revision: Option<String>,
    },
}

impl Operation {
    pub fn add(concern: impl Into<String>, component: impl Into<ElementId>) -> Self {
        Operation::Add {
            component: component.into(),
            concern: concern.into(),
            revision: None,
        }
    }

    pub fn delete(component: impl Into<ElementId>) -> Self {
        Operation::Delete {
            component: component.into(),
            concern: None,
            revision: None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Operation::Add { .. } => "add",
            Operation::Delete { .. } => "delete",
        }
    }

    pub fn component(&self) -> &ElementId {
        match self {
            Operation::Add { component, .. } | Operation::Delete { component, .. } => component,
        }
    }

    fn revision(&self) -> Option<&str> {
        match self {
            Operation::Add { revision, .. } | Operation::Delete { revision, .. } => revision.as_deref(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Valid,
    Invalid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Reason {
    RequirementSatisfied,
    FreeAdd,
    AlreadyPresent,
    Deleted,
    RequirementsUnsatisfied,
    RequiredByOthers,
    UnknownComponent,
    UnknownConcern,
    ComponentNotInConcern,
    ComponentNotPresent,
    RevisionMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    pub verdict: Verdict,
    pub reason: Reason,
    pub satisfied_edge: Option<EdgeId>,
    pub recorded_supports: ElementSet,
    pub removed_edges: BTreeSet<EdgeId>,
    pub state_version: u64,
}

impl Decision {
    fn valid(reason: Reason, state_version: u64) -> Self {
        Decision {
            verdict: Verdict::Valid,
            reason,
            satisfied_edge: None,
            recorded_supports: ElementSet::new(),
            removed_edges: BTreeSet::new(),
            state_version,
        }
    }

    fn invalid(reason: Reason, state_version: u64) -> Self {
        Decision {
            verdict: Verdict::Invalid,
            ..Decision::valid(reason, state_version)
        }
    }

    pub fn is_valid(&self) -> bool {
        self.verdict == Verdict::Valid
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OpError {
    #[error("unknown component `{0}`")]
    UnknownComponent(ElementId),
    #[error("unknown concern `{0}`")]
    UnknownConcern(String),
    #[error("component `{component}` is not part of concern `{concern}`")]
    ComponentNotInConcern { component: ElementId, concern: String },
    #[error("component `{0}` is not selected")]
    ComponentNotPresent(ElementId),
    #[error("customization targets {found}, model is {expected}")]
    RevisionMismatch { expected: String, found: String },
}

impl OpError {
    pub fn reason(&self) -> Reason {
        match self {
            OpError::UnknownComponent(_) => Reason::UnknownComponent,
            OpError::UnknownConcern(_) => Reason::UnknownConcern,
            OpError::ComponentNotInConcern { .. } => Reason::ComponentNotInConcern,
            OpError::ComponentNotPresent(_) => Reason::ComponentNotPresent,
            OpError::RevisionMismatch { .. } => Reason::RevisionMismatch,
        }
    }
}

fn check_revision(m: &AppModel, td: &Customization) -> Result<(), OpError> {
    if td.matches(m) {
        Ok(())
    } else {
        Err(OpError::RevisionMismatch {
            expected: format!("{}@{}", m.id, m.revision),
            found: format!("{}@{}", td.model, td.revision),
        })
    }
}

/// Incoming requirements of `x` in `concern`, deduplicated per edge, AND
/// edges first and each group in edge-id order.
///
/// Built from the concern's adjacency column of `x`, so an edge with an
/// empty invertex is not a requirement.
pub fn incoming_requirements(m: &AppModel, concern: &str, x: &ElementId) -> Vec<RequirementEdge> {
    let Some(graph) = m.concern_graph(concern) else {
        return Vec::new();
    };
    let Ok(column) = graph.adjacency_column(x) else {
        return Vec::new();
    };
    let ids: BTreeSet<&EdgeId> = column.triples().map(|(_, _, t)| &t.path[0]).collect();
    let mut reqs: Vec<RequirementEdge> = ids
        .into_iter()
        .filter_map(|id| m.requirement(id.as_str()))
        .collect();
    reqs.sort_by(|a, b| {
        let rank = |r: &RequirementEdge| if r.mode == Mode::And { 0 } else { 1 };
        (rank(a), &a.edge.id).cmp(&(rank(b), &b.edge.id))
    });
    reqs
}

fn resolve_add<'m>(
    m: &'m AppModel,
    td: &Customization,
    concern: &str,
    x: &ElementId,
) -> Result<(), OpError> {
    check_revision(m, td)?;
    let cn = m
        .concern(concern)
        .ok_or_else(|| OpError::UnknownConcern(concern.into()))?;
    if m.component(x.as_str()).is_none() {
        return Err(OpError::UnknownComponent(x.clone()));
    }
    if !cn.components.contains(x) {
        return Err(OpError::ComponentNotInConcern {
            component: x.clone(),
            concern: concern.into(),
        });
    }
    Ok(())
}

/// Adds `x` to the tenant's selection of `concern` if one of its incoming
/// requirements is satisfied (or it has none).
///
/// The first satisfied requirement in scan order is recorded together with
/// its supports: the whole invertex for AND, the selected part for OR.
/// An invalid decision leaves `td` untouched.
pub fn add_component(
    m: &AppModel,
    td: &mut Customization,
    concern: &str,
    x: &ElementId,
) -> Result<Decision, OpError> {
    resolve_add(m, td, concern, x)?;
    if td.selection(concern).is_some_and(|s| s.components.contains(x)) {
        td.version += 1;
        return Ok(Decision::valid(Reason::AlreadyPresent, td.version));
    }

    let requirements = incoming_requirements(m, concern, x);
    let selected = td.selected();
    for req in &requirements {
        if !req.satisfied_by(&selected) {
            continue;
        }
        let supports: ElementSet = match req.mode {
            Mode::And => req.edge.invertex.clone(),
            Mode::Or => req.edge.invertex.intersection(&selected).cloned().collect(),
        };
        let sel = td.selection_mut(concern);
        sel.components.insert(x.clone());
        sel.components.extend(supports.iter().cloned());
        sel.edges.insert(req.edge.id.clone());
        td.version += 1;
        return Ok(Decision {
            satisfied_edge: Some(req.edge.id.clone()),
            recorded_supports: supports,
            ..Decision::valid(Reason::RequirementSatisfied, td.version)
        });
    }
    if !requirements.is_empty() {
        return Ok(Decision::invalid(Reason::RequirementsUnsatisfied, td.version));
    }
    td.selection_mut(concern).components.insert(x.clone());
    td.version += 1;
    Ok(Decision::valid(Reason::FreeAdd, td.version))
}

/// Whether [`add_component`] would accept `x` into `concern` right now.
pub fn addable(m: &AppModel, td: &Customization, concern: &str, x: &ElementId) -> bool {
    if resolve_add(m, td, concern, x).is_err() {
        return false;
    }
    let requirements = incoming_requirements(m, concern, x);
    if requirements.is_empty() {
        return true;
    }
    let selected = td.selected();
    requirements.iter().any(|r| r.satisfied_by(&selected))
}

/// Whether `x_d` occurs in the invertex of any recorded edge.
pub fn required_by_others(m: &AppModel, td: &Customization, x_d: &ElementId) -> bool {
    let edges = tenant_edges(m, td);
    !adjacency_row_of(ElementSet::new(), edges.iter(), x_d).is_empty()
}

fn tenant_edges(m: &AppModel, td: &Customization) -> Vec<crate::metagraph::Edge> {
    td.recorded_edges()
        .iter()
        .filter_map(|id| m.app_graph().edge(id.as_str()).cloned())
        .collect()
}

/// Removes `x_d` from every concern selection unless some recorded
/// requirement still uses it. Recorded edges whose only output is `x_d` are
/// dropped; supports recorded alongside are kept.
pub fn delete_component(m: &AppModel, td: &mut Customization, x_d: &ElementId) -> Result<Decision, OpError> {
    check_revision(m, td)?;
    if m.component(x_d.as_str()).is_none() {
        return Err(OpError::UnknownComponent(x_d.clone()));
    }
    let selected = td.selected();
    if !selected.contains(x_d) {
        return Err(OpError::ComponentNotPresent(x_d.clone()));
    }

    let edges = tenant_edges(m, td);
    let row = adjacency_row_of(selected.clone(), edges.iter(), x_d);
    if !row.is_empty() {
        return Ok(Decision::invalid(Reason::RequiredByOthers, td.version));
    }

    let column = adjacency_column_of(selected, edges.iter(), x_d);
    let removed: BTreeSet<EdgeId> = column
        .triples()
        .filter(|(_, _, t)| t.cooutput.is_empty())
        .map(|(_, _, t)| t.path[0].clone())
        .collect();
    for sel in td.selections_mut() {
        sel.edges.retain(|e| !removed.contains(e));
        sel.components.remove(x_d);
    }
    td.prune();
    td.version += 1;
    Ok(Decision {
        removed_edges: removed,
        ..Decision::valid(Reason::Deleted, td.version)
    })
}

/// Applies one operation, folding per-operation errors into an invalid decision.
pub fn apply(m: &AppModel, td: &mut Customization, op: &Operation) -> Decision {
    let result = match op.revision() {
        Some(r) if r != m.revision => Err(OpError::RevisionMismatch {
            expected: m.revision.clone(),
            found: r.to_owned(),
        }),
        _ => match op {
            Operation::Add { component, concern, .. } => add_component(m, td, concern, component),
            Operation::Delete { component, .. } => delete_component(m, td, component),
        },
    };
    result.unwrap_or_else(|e| Decision::invalid(e.reason(), td.version))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayOutcome {
    pub customization: Customization,
    pub decisions: Vec<Decision>,
    pub first_invalid: Option<usize>,
}

/// Applies `ops` in order to an empty customization of `tenant`.
pub fn replay(m: &AppModel, tenant: &str, ops: &[Operation]) -> ReplayOutcome {
    let mut td = Customization::new(m, tenant);
    let decisions: Vec<Decision> = ops.iter().map(|op| apply(m, &mut td, op)).collect();
    let first_invalid = decisions.iter().position(|d| !d.is_valid());
    ReplayOutcome {
        customization: td,
        decisions,
        first_invalid,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OracleReport {
    pub valid: bool,
    pub violations: Vec<String>,
}

/// Checks a customization against the model from scratch.
///
/// Valid iff (1) every selection stays inside its concern, (2) every recorded
/// edge is satisfied by the selected components, and (3) every selected
/// component is justified in at least one concern holding it: either it has
/// no incoming requirement there or one of them is recorded there.
pub fn oracle_valid(m: &AppModel, td: &Customization) -> OracleReport {
    let mut violations = Vec::new();
    if td.model != m.id || td.revision != m.revision {
        violations.push(format!(
            "targets {}@{} instead of {}@{}",
            td.model, td.revision, m.id, m.revision
        ));
    }

    let selected = td.selected();
    for (concern_id, sel) in td.selections() {
        let Some(cn) = m.concern(concern_id) else {
            violations.push(format!("unknown concern {concern_id}"));
            continue;
        };
        for x in sel.components.difference(&cn.components) {
            violations.push(format!("{x} selected under {concern_id} but not part of it"));
        }
        for e in &sel.edges {
            match m.edge_info(e.as_str()) {
                Some((owner, _)) if owner == concern_id => {}
                _ => violations.push(format!("edge {e} recorded under {concern_id} but not part of it")),
            }
        }
    }

    for e in td.recorded_edges() {
        let Some((_, mode)) = m.edge_info(e.as_str()) else { continue };
        let Some(edge) = m.app_graph().edge(e.as_str()) else { continue };
        let ok = match mode {
            Mode::And => edge.invertex.iter().all(|x| selected.contains(x)),
            Mode::Or => edge.invertex.iter().any(|x| selected.contains(x)),
        };
        if !ok {
            violations.push(format!("recorded edge {e} is not satisfied"));
        }
    }

    for x in &selected {
        let justified = td.selections().iter().any(|(concern_id, sel)| {
            if !sel.components.contains(x) {
                return false;
            }
            let Some(cn) = m.concern(concern_id) else { return false };
            let mut incoming = cn
                .edges
                .iter()
                .filter(|re| re.edge.outvertex.contains(x) && !re.edge.invertex.is_empty())
                .peekable();
            incoming.peek().is_none() || incoming.any(|re| sel.edges.contains(&re.edge.id))
        });
        if !justified {
            violations.push(format!("{x} has no recorded incoming requirement"));
        }
    }

    OracleReport {
        valid: violations.is_empty(),
        violations,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogEntry {
    pub op: Operation,
    pub decision: Decision,
}

/// A tenant's working session: a customization plus the log of every
/// operation applied to it. Operations must be applied serially.
#[derive(Debug, Clone)]
pub struct Session {
    pub id: String,
    model: Arc<AppModel>,
    base: Customization,
    customization: Customization,
    log: Vec<LogEntry>,
}

impl Session {
    pub fn new(id: impl Into<String>, model: Arc<AppModel>, tenant: &str) -> Self {
        let td = Customization::new(&model, tenant);
        Session::resume(id, model, td).expect("fresh customization is valid")
    }

    /// Resumes from a saved customization, which must target this model
    /// revision and pass [`oracle_valid`].
    pub fn resume(id: impl Into<String>, model: Arc<AppModel>, td: Customization) -> Result<Self, ResumeError> {
        check_revision(&model, &td).map_err(|_| ResumeError::RevisionMismatch)?;
        let report = oracle_valid(&model, &td);
        if !report.valid {
            return Err(ResumeError::Invalid(report.violations));
        }
        Ok(Session {
            id: id.into(),
            model,
            base: td.clone(),
            customization: td,
            log: Vec::new(),
        })
    }

    pub fn model(&self) -> &Arc<AppModel> {
        &self.model
    }

    pub fn customization(&self) -> &Customization {
        &self.customization
    }

    pub fn state_version(&self) -> u64 {
        self.customization.version
    }

    pub fn log(&self) -> &[LogEntry] {
        &self.log
    }

    pub fn apply(&mut self, op: Operation) -> Decision {
        let decision = apply(&self.model, &mut self.customization, &op);
        self.log.push(LogEntry {
            op,
            decision: decision.clone(),
        });
        decision
    }

    /// Re-applies the accepted operations of the log to the starting state.
    pub fn replayed(&self) -> Customization {
        let mut td = self.base.clone();
        for entry in self.log.iter().filter(|e| e.decision.is_valid()) {
            apply(&self.model, &mut td, &entry.op);
        }
        td
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResumeError {
    #[error("customization targets another model revision")]
    RevisionMismatch,
    #[error("customization is invalid: {}", .0.join("; "))]
    Invalid(Vec<String>),
}
