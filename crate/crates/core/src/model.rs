//! The multi-dimensional customization model.
//!
//! Components live at customization points. Concerns group components that
//! address one area of interest (possibly crosscutting several points) and
//! carry "required by" edges between them. Concerns are grouped into
//! dimensions; inside a dimension concerns are disjoint and independent, and
//! a derived None concern collects every component the others leave out.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metagraph::{adjacency_of, Edge, EdgeId, ElementId, ElementSet, Metagraph, MetagraphError, TripleMatrix};

/// Reserved token for the literal "and" vertex encoding. Never a component id.
pub const AND_MARKER: &str = "and";

/// Suffix of the derived None concern id: `<dimension id>:none`.
pub const NONE_SUFFIX: &str = ":none";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("empty identifier in {0}")]
    EmptyIdentifier(&'static str),
    #[error("duplicate {kind} id `{id}`")]
    DuplicateId { kind: &'static str, id: String },
    #[error("{location} references unknown component `{component}`")]
    UnknownComponent { location: String, component: String },
    #[error("component `{component}` references unknown customization point `{point}`")]
    UnknownPoint { component: String, point: String },
    #[error("component `{component}` is not listed by exactly its own customization point")]
    PointMismatch { component: String },
    #[error("`{0}` is reserved")]
    Reserved(String),
    #[error("unknown dimension `{0}`")]
    UnknownDimension(String),
    #[error("unknown concern `{0}`")]
    UnknownConcern(String),
    #[error("element `{element}` is not part of concern `{concern}`")]
    UnknownElement { concern: String, element: String },
    #[error(transparent)]
    Metagraph(#[from] MetagraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Every invertex component must be selected.
    And,
    /// Any one invertex component suffices.
    Or,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub id: ElementId,
    pub point: String,
    pub label: String,
    pub description: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CustomizationPoint {
    pub id: String,
    pub name: String,
    pub components: ElementSet,
}

/// A "required by" edge: invertex components are required by outvertex components.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RequirementEdge {
    pub edge: Edge,
    pub mode: Mode,
}

impl RequirementEdge {
    pub fn new(edge: Edge, mode: Mode) -> Self {
        RequirementEdge { edge, mode }
    }

    pub fn id(&self) -> &EdgeId {
        &self.edge.id
    }

    /// Whether the selected set satisfies this requirement.
    pub fn satisfied_by(&self, selected: &ElementSet) -> bool {
        match self.mode {
            Mode::And => self.edge.invertex.is_subset(selected),
            Mode::Or => !self.edge.invertex.is_disjoint(selected),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Concern {
    pub id: String,
    pub name: String,
    pub components: ElementSet,
    pub edges: Vec<RequirementEdge>,
}

impl Concern {
    pub fn new(id: impl Into<String>, name: impl Into<String>) -> Self {
        Concern {
            id: id.into(),
            name: name.into(),
            components: ElementSet::new(),
            edges: Vec::new(),
        }
    }

    pub fn with_components<I>(mut self, components: I) -> Self
    where
        I: IntoIterator,
        I::Item: Into<ElementId>,
    {
        self.components.extend(components.into_iter().map(Into::into));
        self
    }

    pub fn with_edge(mut self, edge: Edge, mode: Mode) -> Self {
        self.edges.push(RequirementEdge::new(edge, mode));
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dimension {
    pub id: String,
    pub name: String,
    pub concerns: Vec<Concern>,
    pub none_concern: Option<Concern>,
}

impl Dimension {
    pub fn new(id: impl Into<String>, name: impl Into<String>, concerns: Vec<Concern>) -> Self {
        Dimension {
            id: id.into(),
            name: name.into(),
            concerns,
            none_concern: None,
        }
    }

    /// Named concerns followed by the None concern, when derived.
    pub fn all_concerns(&self) -> impl Iterator<Item = &Concern> {
        self.concerns.iter().chain(self.none_concern.iter())
    }

    pub fn none_concern_id(&self) -> String {
        format!("{}{}", self.id, NONE_SUFFIX)
    }
}

#[derive(Debug, Clone)]
struct ConcernSlot {
    dimension: usize,
    // None for the dimension's None concern
    concern: Option<usize>,
    graph: Metagraph,
}

/// An application: customization points, components and dimensions of concerns.
///
/// Structural integrity (known references, unique ids) is enforced on
/// construction; semantic well-formedness is reported by [`validate_model`].
#[derive(Debug, Clone)]
pub struct AppModel {
    pub id: String,
    pub revision: String,
    points: BTreeMap<String, CustomizationPoint>,
    components: BTreeMap<ElementId, Component>,
    dimensions: Vec<Dimension>,
    concern_index: BTreeMap<String, ConcernSlot>,
    edge_index: BTreeMap<EdgeId, (String, Mode)>,
    app_graph: Metagraph,
}

impl PartialEq for AppModel {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
            && self.revision == other.revision
            && self.points == other.points
            && self.components == other.components
            && self.dimensions == other.dimensions
    }
}

impl AppModel {
    pub fn new(
        id: impl Into<String>,
        revision: impl Into<String>,
        points: Vec<CustomizationPoint>,
        components: Vec<Component>,
        mut dimensions: Vec<Dimension>,
    ) -> Result<Self, ModelError> {
        let id = id.into();
        if id.is_empty() {
            return Err(ModelError::EmptyIdentifier("model"));
        }

        let mut point_map = BTreeMap::new();
        for p in points {
            if p.id.is_empty() {
                return Err(ModelError::EmptyIdentifier("customization point"));
            }
            if point_map.contains_key(&p.id) {
                return Err(ModelError::DuplicateId { kind: "customization point", id: p.id });
            }
            point_map.insert(p.id.clone(), p);
        }

        let mut component_map = BTreeMap::new();
        for c in components {
            if c.id.as_str().is_empty() {
                return Err(ModelError::EmptyIdentifier("component"));
            }
            if c.id.as_str() == AND_MARKER {
                return Err(ModelError::Reserved(AND_MARKER.into()));
            }
            if component_map.contains_key(&c.id) {
                return Err(ModelError::DuplicateId { kind: "component", id: c.id.to_string() });
            }
            let Some(point) = point_map.get(&c.point) else {
                return Err(ModelError::UnknownPoint {
                    component: c.id.to_string(),
                    point: c.point.clone(),
                });
            };
            if !point.components.contains(&c.id) {
                return Err(ModelError::PointMismatch { component: c.id.to_string() });
            }
            component_map.insert(c.id.clone(), c);
        }
        for p in point_map.values() {
            for x in &p.components {
                match component_map.get(x) {
                    None => {
                        return Err(ModelError::UnknownComponent {
                            location: format!("customization point `{}`", p.id),
                            component: x.to_string(),
                        })
                    }
                    Some(c) if c.point != p.id => {
                        return Err(ModelError::PointMismatch { component: x.to_string() })
                    }
                    Some(_) => {}
                }
            }
        }

        let mut seen_dims = BTreeSet::new();
        let mut edge_index = BTreeMap::new();
        let mut all_edges = Vec::new();
        for d in &mut dimensions {
            if d.id.is_empty() {
                return Err(ModelError::EmptyIdentifier("dimension"));
            }
            if !seen_dims.insert(d.id.clone()) {
                return Err(ModelError::DuplicateId { kind: "dimension", id: d.id.clone() });
            }
            for cn in d.concerns.iter_mut().chain(d.none_concern.iter_mut()) {
                if cn.id.is_empty() {
                    return Err(ModelError::EmptyIdentifier("concern"));
                }
                cn.edges.sort_by(|a, b| a.edge.id.cmp(&b.edge.id));
                let location = format!("concern `{}`", cn.id);
                for x in &cn.components {
                    if !component_map.contains_key(x) {
                        return Err(ModelError::UnknownComponent {
                            location: location.clone(),
                            component: x.to_string(),
                        });
                    }
                }
                for re in &cn.edges {
                    let e = &re.edge;
                    if e.id.as_str().is_empty() {
                        return Err(ModelError::EmptyIdentifier("edge"));
                    }
                    if e.invertex.is_empty() && e.outvertex.is_empty() {
                        return Err(MetagraphError::EmptyEdge(e.id.clone()).into());
                    }
                    for x in e.invertex.iter().chain(&e.outvertex) {
                        if x.as_str() == AND_MARKER {
                            return Err(ModelError::Reserved(AND_MARKER.into()));
                        }
                        if !component_map.contains_key(x) {
                            return Err(ModelError::UnknownComponent {
                                location: format!("edge `{}`", e.id),
                                component: x.to_string(),
                            });
                        }
                    }
                    if edge_index
                        .insert(e.id.clone(), (cn.id.clone(), re.mode))
                        .is_some()
                    {
                        return Err(ModelError::DuplicateId { kind: "edge", id: e.id.to_string() });
                    }
                    all_edges.push(e.clone());
                }
            }
        }
        dimensions.sort_by(|a, b| a.id.cmp(&b.id));
        for d in &mut dimensions {
            d.concerns.sort_by(|a, b| a.id.cmp(&b.id));
        }

        let explicit: BTreeSet<&str> = dimensions
            .iter()
            .flat_map(|d| d.concerns.iter().map(|c| c.id.as_str()))
            .collect();
        for d in &dimensions {
            let none_id = d.none_concern_id();
            if explicit.contains(none_id.as_str()) {
                return Err(ModelError::Reserved(none_id));
            }
        }

        let mut concern_index = BTreeMap::new();
        for (di, d) in dimensions.iter().enumerate() {
            let named = d.concerns.iter().enumerate().map(|(ci, c)| (Some(ci), c));
            let none = d.none_concern.iter().map(|c| (None, c));
            for (ci, cn) in named.chain(none) {
                let key = if ci.is_none() { d.none_concern_id() } else { cn.id.clone() };
                if concern_index.contains_key(&key) {
                    // reported by validate_model as ConcernInMultipleDimensions
                    continue;
                }
                let mut elements = cn.components.clone();
                for re in &cn.edges {
                    elements.extend(re.edge.invertex.iter().cloned());
                    elements.extend(re.edge.outvertex.iter().cloned());
                }
                let graph = Metagraph::new(elements, cn.edges.iter().map(|re| re.edge.clone()))?;
                concern_index.insert(
                    key,
                    ConcernSlot {
                        dimension: di,
                        concern: ci,
                        graph,
                    },
                );
            }
        }

        let app_graph = Metagraph::new(component_map.keys().cloned(), all_edges)?;
        Ok(AppModel {
            id,
            revision: revision.into(),
            points: point_map,
            components: component_map,
            dimensions,
            concern_index,
            edge_index,
            app_graph,
        })
    }

    pub fn points(&self) -> impl Iterator<Item = &CustomizationPoint> {
        self.points.values()
    }

    pub fn components(&self) -> impl Iterator<Item = &Component> {
        self.components.values()
    }

    pub fn component(&self, id: &str) -> Option<&Component> {
        self.components.get(id)
    }

    pub fn component_ids(&self) -> ElementSet {
        self.components.keys().cloned().collect()
    }

    pub fn dimensions(&self) -> &[Dimension] {
        &self.dimensions
    }

    pub fn dimension(&self, id: &str) -> Option<&Dimension> {
        self.dimensions.iter().find(|d| d.id == id)
    }

    /// Looks a concern up by id; the None concern of dimension `d` is `d:none`.
    pub fn concern(&self, id: &str) -> Option<&Concern> {
        let slot = self.concern_index.get(id)?;
        let d = &self.dimensions[slot.dimension];
        match slot.concern {
            Some(ci) => d.concerns.get(ci),
            None => d.none_concern.as_ref(),
        }
    }

    pub fn concern_ids(&self) -> impl Iterator<Item = &str> {
        self.concern_index.keys().map(String::as_str)
    }

    /// The concern's metagraph `<X_cn, E_cn>`.
    pub fn concern_graph(&self, id: &str) -> Option<&Metagraph> {
        self.concern_index.get(id).map(|s| &s.graph)
    }

    pub fn concern_dimension(&self, id: &str) -> Option<&Dimension> {
        self.concern_index.get(id).map(|s| &self.dimensions[s.dimension])
    }

    /// Mode and owning concern of a requirement edge.
    pub fn edge_info(&self, id: &str) -> Option<(&str, Mode)> {
        self.edge_index.get(id).map(|(c, m)| (c.as_str(), *m))
    }

    pub fn requirement(&self, id: &str) -> Option<RequirementEdge> {
        let (_, mode) = self.edge_index.get(id)?;
        Some(RequirementEdge::new(self.app_graph.edge(id)?.clone(), *mode))
    }

    pub fn app_graph(&self) -> &Metagraph {
        &self.app_graph
    }

    pub fn concern_count(&self) -> usize {
        self.dimensions.iter().map(|d| d.all_concerns().count()).sum()
    }

    fn rebuild(self, dimensions: Vec<Dimension>) -> Self {
        AppModel::new(
            self.id,
            self.revision,
            self.points.into_values().collect(),
            self.components.into_values().collect(),
            dimensions,
        )
        .expect("rebuilding from a constructed model preserves structure")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ViolationCode {
    OverlappingConcerns,
    UncoveredComponent,
    DependentConcern,
    ConcernInMultipleDimensions,
    DanglingEdgeReference,
    NoneConcernWithEdges,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub location: String,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WellFormednessReport {
    pub violations: Vec<Violation>,
}

impl WellFormednessReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn contains(&self, code: ViolationCode) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }

    pub fn codes(&self) -> BTreeSet<ViolationCode> {
        self.violations.iter().map(|v| v.code).collect()
    }

    fn push(&mut self, code: ViolationCode, location: String, detail: String) {
        self.violations.push(Violation { code, location, detail });
    }
}

fn join(set: &ElementSet) -> String {
    set.iter().map(ElementId::as_str).collect::<Vec<_>>().join(",")
}

/// Reports every violated dimension/concern invariant, sorted by code then location.
pub fn validate_model(m: &AppModel) -> WellFormednessReport {
    use ViolationCode::*;
    let mut report = WellFormednessReport::default();
    let all = m.component_ids();

    let mut homes: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for d in &m.dimensions {
        for cn in &d.concerns {
            homes.entry(cn.id.as_str()).or_default().push(d.id.as_str());
        }
    }
    for (cn, dims) in homes {
        if dims.len() > 1 {
            report.push(
                ConcernInMultipleDimensions,
                cn.to_string(),
                format!("declared in {}", dims.join(",")),
            );
        }
    }

    for d in &m.dimensions {
        let concerns: Vec<&Concern> = d.all_concerns().collect();
        for (i, a) in concerns.iter().enumerate() {
            for b in &concerns[i + 1..] {
                let shared: ElementSet = a.components.intersection(&b.components).cloned().collect();
                if !shared.is_empty() {
                    report.push(
                        OverlappingConcerns,
                        format!("{}/{}+{}", d.id, a.id, b.id),
                        format!("share {}", join(&shared)),
                    );
                }
            }
        }

        let covered: ElementSet = concerns.iter().flat_map(|c| c.components.iter().cloned()).collect();
        for x in all.difference(&covered) {
            report.push(UncoveredComponent, format!("{}/{}", d.id, x), "in no concern".into());
        }

        if let Some(none) = &d.none_concern {
            if !none.edges.is_empty() {
                report.push(NoneConcernWithEdges, format!("{}/{}", d.id, none.id), String::new());
            }
        }

        for cn in &d.concerns {
            for re in &cn.edges {
                let outside: ElementSet = re
                    .edge
                    .invertex
                    .iter()
                    .chain(&re.edge.outvertex)
                    .filter(|x| !cn.components.contains(*x))
                    .cloned()
                    .collect();
                if !outside.is_empty() {
                    report.push(
                        DanglingEdgeReference,
                        format!("{}/{}/{}", d.id, cn.id, re.edge.id),
                        format!("references {} outside the concern", join(&outside)),
                    );
                }
            }
        }

        let dim_edges = concerns.iter().flat_map(|c| c.edges.iter().map(|re| re.edge.clone()));
        let Ok(dim_graph) = Metagraph::new(all.iter().cloned(), dim_edges) else {
            continue;
        };
        for cn in &d.concerns {
            let mut elements = cn.components.clone();
            for re in &cn.edges {
                elements.extend(re.edge.invertex.iter().cloned());
                elements.extend(re.edge.outvertex.iter().cloned());
            }
            let Ok(sub) = Metagraph::new(elements, cn.edges.iter().map(|re| re.edge.clone())) else {
                continue;
            };
            if !sub.is_independent_of(&dim_graph) {
                let mut detail = Vec::new();
                for x in &cn.components {
                    for e in dim_graph.producers(x).chain(dim_graph.consumers(x)) {
                        if sub.edge(e.id.as_str()).is_none() {
                            detail.push(format!("{x} used by {}", e.id));
                        }
                    }
                }
                detail.dedup();
                report.push(DependentConcern, format!("{}/{}", d.id, cn.id), detail.join("; "));
            }
        }
    }

    report.violations.sort();
    report
}

/// Adds an edgeless None concern per dimension holding every component the
/// dimension's named concerns do not cover.
pub fn derive_none_concerns(m: AppModel) -> AppModel {
    let all = m.component_ids();
    let mut dimensions = m.dimensions.clone();
    for d in &mut dimensions {
        let covered: ElementSet = d.concerns.iter().flat_map(|c| c.components.iter().cloned()).collect();
        let rest: ElementSet = all.difference(&covered).cloned().collect();
        d.none_concern = Some(Concern {
            id: d.none_concern_id(),
            name: "None".into(),
            components: rest,
            edges: Vec::new(),
        });
    }
    m.rebuild(dimensions)
}

/// Sum of the adjacency matrices of the dimension's concerns over all components.
pub fn dimension_adjacency(m: &AppModel, dimension: &str) -> Result<TripleMatrix, ModelError> {
    let d = m
        .dimension(dimension)
        .ok_or_else(|| ModelError::UnknownDimension(dimension.into()))?;
    let domain = m.component_ids();
    let mut total = TripleMatrix::empty(domain.clone());
    for cn in d.all_concerns() {
        let a = adjacency_of(domain.clone(), cn.edges.iter().map(|re| &re.edge));
        total = total.sum(&a)?;
    }
    Ok(total)
}

/// `<all components, union of every dimension's edges>`.
pub fn app_metagraph(m: &AppModel) -> Metagraph {
    m.app_graph.clone()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuidanceEntry {
    pub source: ElementId,
    pub target: ElementId,
    pub coinput: ElementSet,
    pub cooutput: ElementSet,
    pub path: Vec<EdgeId>,
}

/// Every customization path of a concern, optionally restricted to paths
/// ending at `target`, ordered by length, source, path and target.
pub fn concern_guidance(
    m: &AppModel,
    concern: &str,
    target: Option<&str>,
) -> Result<Vec<GuidanceEntry>, ModelError> {
    let cn = m
        .concern(concern)
        .ok_or_else(|| ModelError::UnknownConcern(concern.into()))?;
    if let Some(t) = target {
        if !cn.components.contains(t) {
            return Err(ModelError::UnknownElement {
                concern: concern.into(),
                element: t.into(),
            });
        }
    }
    let graph = m.concern_graph(concern).expect("indexed concern has a graph");
    let closure = graph.closure();
    let mut entries: Vec<GuidanceEntry> = closure
        .matrix
        .triples()
        .filter(|(_, t, _)| target.is_none_or(|x| t.as_str() == x))
        .map(|(s, t, tr)| GuidanceEntry {
            source: s.clone(),
            target: t.clone(),
            coinput: tr.coinput.clone(),
            cooutput: tr.cooutput.clone(),
            path: tr.path.clone(),
        })
        .collect();
    entries.sort_by(|a, b| {
        (a.path.len(), &a.source, &a.path, &a.target).cmp(&(b.path.len(), &b.source, &b.path, &b.target))
    });
    Ok(entries)
}

/// Per-concern selection state of one tenant: `X_cn_td` and `E_cn_td`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub components: ElementSet,
    pub edges: BTreeSet<EdgeId>,
}

impl Selection {
    pub fn is_empty(&self) -> bool {
        self.components.is_empty() && self.edges.is_empty()
    }
}

/// A tenant's customization of one model revision.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Customization {
    pub model: String,
    pub revision: String,
    pub tenant: String,
    selections: BTreeMap<String, Selection>,
    /// Number of accepted operations applied since creation or load.
    pub version: u64,
}

impl Customization {
    pub fn new(model: &AppModel, tenant: impl Into<String>) -> Self {
        Customization {
            model: model.id.clone(),
            revision: model.revision.clone(),
            tenant: tenant.into(),
            selections: BTreeMap::new(),
            version: 0,
        }
    }

    pub fn from_parts(
        model: impl Into<String>,
        revision: impl Into<String>,
        tenant: impl Into<String>,
        selections: BTreeMap<String, Selection>,
    ) -> Self {
        let mut c = Customization {
            model: model.into(),
            revision: revision.into(),
            tenant: tenant.into(),
            selections,
            version: 0,
        };
        c.prune();
        c
    }

    pub fn selections(&self) -> &BTreeMap<String, Selection> {
        &self.selections
    }

    pub fn selection(&self, concern: &str) -> Option<&Selection> {
        self.selections.get(concern)
    }

    pub(crate) fn selection_mut(&mut self, concern: &str) -> &mut Selection {
        self.selections.entry(concern.to_owned()).or_default()
    }

    pub(crate) fn selections_mut(&mut self) -> impl Iterator<Item = &mut Selection> {
        self.selections.values_mut()
    }

    /// Drops concerns whose selection became empty.
    pub(crate) fn prune(&mut self) {
        self.selections.retain(|_, s| !s.is_empty());
    }

    /// `X_td`: every selected component.
    pub fn selected(&self) -> ElementSet {
        self.selections
            .values()
            .flat_map(|s| s.components.iter().cloned())
            .collect()
    }

    /// `E_td`: every recorded edge.
    pub fn recorded_edges(&self) -> BTreeSet<EdgeId> {
        self.selections
            .values()
            .flat_map(|s| s.edges.iter().cloned())
            .collect()
    }

    /// `TC_n`: selected components grouped by customization point.
    pub fn by_point(&self, model: &AppModel) -> BTreeMap<String, ElementSet> {
        let mut out: BTreeMap<String, ElementSet> = BTreeMap::new();
        for x in self.selected() {
            if let Some(c) = model.component(x.as_str()) {
                out.entry(c.point.clone()).or_default().insert(x);
            }
        }
        out
    }

    /// Whether this customization targets exactly this model revision.
    pub fn matches(&self, model: &AppModel) -> bool {
        self.model == model.id && self.revision == model.revision
    }
}
