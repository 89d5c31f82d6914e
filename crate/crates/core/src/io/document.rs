use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::oracle_valid;
use crate::metagraph::{Edge, EdgeId, ElementId};
use crate::model::{
    derive_none_concerns, validate_model, AppModel, Component, Concern, Customization, CustomizationPoint,
    Dimension, Mode, RequirementEdge, Selection, WellFormednessReport, AND_MARKER,
};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IoError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("model is not well formed ({} violations)", .0.violations.len())]
    ModelInvalid(WellFormednessReport),
    #[error("customization targets {found}, model is {expected}")]
    RevisionMismatch { expected: String, found: String },
    #[error("customization is invalid: {}", .0.join("; "))]
    CustomizationInvalid(Vec<String>),
}

impl From<serde_json::Error> for IoError {
    fn from(e: serde_json::Error) -> Self {
        use serde_json::error::Category;
        match e.classify() {
            Category::Data => IoError::Schema(e.to_string()),
            _ => IoError::Parse {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            },
        }
    }
}

// Fields are declared in lexicographic order so serialization emits sorted keys.

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub components: Vec<ComponentDoc>,
    pub customization_points: Vec<PointDoc>,
    pub dimensions: Vec<DimensionDoc>,
    pub format_version: u32,
    pub id: String,
    pub revision: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointDoc {
    pub components: Vec<String>,
    pub id: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub id: String,
    pub label: String,
    pub point: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimensionDoc {
    pub concerns: Vec<ConcernDoc>,
    pub id: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcernDoc {
    pub components: Vec<String>,
    pub edges: Vec<EdgeDoc>,
    pub id: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeDoc {
    pub id: String,
    pub invertex: Vec<String>,
    /// Optional on input (defaults to OR unless the invertex carries the
    /// literal "and" marker); always written on output.
    #[serde(default)]
    pub mode: Option<Mode>,
    pub outvertex: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomizationDocument {
    pub concerns: Vec<SelectionDoc>,
    pub format_version: u32,
    pub model: String,
    pub revision: String,
    pub tenant: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionDoc {
    pub components: Vec<String>,
    pub edges: Vec<String>,
    pub id: String,
}

fn to_canonical<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("documents always serialize");
    out.push(b'\n');
    out
}

fn check_version(v: u32) -> Result<(), IoError> {
    if v == FORMAT_VERSION {
        Ok(())
    } else {
        Err(IoError::Schema(format!("unsupported format_version {v}")))
    }
}

fn requirement_from_doc(e: EdgeDoc) -> RequirementEdge {
    let marked = e.invertex.iter().any(|x| x == AND_MARKER);
    let mode = if marked { Mode::And } else { e.mode.unwrap_or(Mode::Or) };
    let invertex = e.invertex.into_iter().filter(|x| x != AND_MARKER);
    RequirementEdge::new(Edge::new(e.id, invertex, e.outvertex), mode)
}

impl ModelDocument {
    pub fn into_model(self) -> Result<AppModel, IoError> {
        check_version(self.format_version)?;
        let points = self
            .customization_points
            .into_iter()
            .map(|p| CustomizationPoint {
                id: p.id,
                name: p.name,
                components: p.components.into_iter().map(ElementId::from).collect(),
            })
            .collect();
        let components = self
            .components
            .into_iter()
            .map(|c| Component {
                id: c.id.into(),
                point: c.point,
                label: c.label,
                description: c.description,
            })
            .collect();
        let dimensions = self
            .dimensions
            .into_iter()
            .map(|d| {
                let concerns = d
                    .concerns
                    .into_iter()
                    .map(|c| Concern {
                        id: c.id,
                        name: c.name,
                        components: c.components.into_iter().map(ElementId::from).collect(),
                        edges: c.edges.into_iter().map(requirement_from_doc).collect(),
                    })
                    .collect();
                Dimension::new(d.id, d.name, concerns)
            })
            .collect();
        let model = AppModel::new(self.id, self.revision, points, components, dimensions)
            .map_err(|e| IoError::Schema(e.to_string()))?;
        let model = derive_none_concerns(model);
        let report = validate_model(&model);
        if report.is_empty() {
            Ok(model)
        } else {
            Err(IoError::ModelInvalid(report))
        }
    }

    pub fn from_model(m: &AppModel) -> Self {
        let ids = |set: &BTreeSet<ElementId>| set.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        ModelDocument {
            components: m
                .components()
                .map(|c| ComponentDoc {
                    description: c.description.clone(),
                    id: c.id.to_string(),
                    label: c.label.clone(),
                    point: c.point.clone(),
                })
                .collect(),
            customization_points: m
                .points()
                .map(|p| PointDoc {
                    components: ids(&p.components),
                    id: p.id.clone(),
                    name: p.name.clone(),
                })
                .collect(),
            dimensions: m
                .dimensions()
                .iter()
                .map(|d| DimensionDoc {
                    concerns: d
                        .concerns
                        .iter()
                        .map(|c| ConcernDoc {
                            components: ids(&c.components),
                            edges: c
                                .edges
                                .iter()
                                .map(|re| EdgeDoc {
                                    id: re.edge.id.to_string(),
                                    invertex: ids(&re.edge.invertex),
                                    mode: Some(re.mode),
                                    outvertex: ids(&re.edge.outvertex),
                                })
                                .collect(),
                            id: c.id.clone(),
                            name: c.name.clone(),
                        })
                        .collect(),
                    id: d.id.clone(),
                    name: d.name.clone(),
                })
                .collect(),
            format_version: FORMAT_VERSION,
            id: m.id.clone(),
            revision: m.revision.clone(),
        }
    }
}

/// Parses, normalizes and validates a model document.
pub fn load_model(bytes: &[u8]) -> Result<AppModel, IoError> {
    let doc: ModelDocument = serde_json::from_slice(bytes)?;
    doc.into_model()
}

/// Canonical form: sorted keys, id-sorted arrays, None concerns omitted.
pub fn save_model(m: &AppModel) -> Vec<u8> {
    to_canonical(&ModelDocument::from_model(m))
}

impl CustomizationDocument {
    pub fn from_customization(td: &Customization) -> Self {
        CustomizationDocument {
            concerns: td
                .selections()
                .iter()
                .filter(|(_, s)| !s.is_empty())
                .map(|(id, s)| SelectionDoc {
                    components: s.components.iter().map(|x| x.to_string()).collect(),
                    edges: s.edges.iter().map(|e| e.to_string()).collect(),
                    id: id.clone(),
                })
                .collect(),
            format_version: FORMAT_VERSION,
            model: td.model.clone(),
            revision: td.revision.clone(),
            tenant: td.tenant.clone(),
        }
    }

    pub fn into_customization(self, m: &AppModel) -> Result<Customization, IoError> {
        check_version(self.format_version)?;
        if self.model != m.id || self.revision != m.revision {
            return Err(IoError::RevisionMismatch {
                expected: format!("{}@{}", m.id, m.revision),
                found: format!("{}@{}", self.model, self.revision),
            });
        }
        let mut selections: BTreeMap<String, Selection> = BTreeMap::new();
        for c in self.concerns {
            let sel = selections.entry(c.id).or_default();
            sel.components.extend(c.components.into_iter().map(ElementId::from));
            sel.edges.extend(c.edges.into_iter().map(EdgeId::from));
        }
        let td = Customization::from_parts(self.model, self.revision, self.tenant, selections);
        let report = oracle_valid(m, &td);
        if report.valid {
            Ok(td)
        } else {
            Err(IoError::CustomizationInvalid(report.violations))
        }
    }
}

pub fn load_customization(bytes: &[u8], m: &AppModel) -> Result<Customization, IoError> {
    let doc: CustomizationDocument = serde_json::from_slice(bytes)?;
    doc.into_customization(m)
}

pub fn save_customization(td: &Customization) -> Vec<u8> {
    to_canonical(&CustomizationDocument::from_customization(td))
}
