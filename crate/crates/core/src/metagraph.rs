//! Metagraph algebra.
//!
//! A metagraph is a generating set of elements together with directed edges
//! connecting a set of elements (the invertex) to another set (the outvertex).
//! Matrices over a metagraph are sparse: a cell maps an ordered pair of
//! elements to a set of [`Triple`]s, and an absent cell is the empty set.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub fn new(token: impl Into<String>) -> Self {
                Self(token.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }

        impl std::borrow::Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }
    };
}

id_type!(
    /// Member of a generating set. Ordered lexicographically by token.
    ElementId
);
id_type!(
    /// Identifier of an edge, unique within one metagraph.
    EdgeId
);

pub type ElementSet = BTreeSet<ElementId>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetagraphError {
    #[error("empty identifier")]
    EmptyIdentifier,
    #[error("edge `{0}` has an empty invertex and outvertex")]
    EmptyEdge(EdgeId),
    #[error("edge `{edge}` references unknown element `{element}`")]
    UnknownElement { edge: EdgeId, element: ElementId },
    #[error("element `{0}` is not in the generating set")]
    NotAnElement(ElementId),
    #[error("duplicate edge id `{0}`")]
    DuplicateEdgeId(EdgeId),
    #[error("unknown edge `{0}`")]
    UnknownEdge(EdgeId),
    #[error("element `{element}` is not in the {side} of edge `{edge}`")]
    NotInVertex {
        element: ElementId,
        edge: EdgeId,
        side: &'static str,
    },
    #[error("matrices are defined over different generating sets")]
    DomainMismatch,
}

/// A directed set-to-set edge `<invertex, outvertex>`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub id: EdgeId,
    pub invertex: ElementSet,
    pub outvertex: ElementSet,
}

impl Edge {
    pub fn new<I, O>(id: impl Into<EdgeId>, invertex: I, outvertex: O) -> Self
    where
        I: IntoIterator,
        I::Item: Into<ElementId>,
        O: IntoIterator,
        O::Item: Into<ElementId>,
    {
        Edge {
            id: id.into(),
            invertex: invertex.into_iter().map(Into::into).collect(),
            outvertex: outvertex.into_iter().map(Into::into).collect(),
        }
    }

    /// `V \ {x}` for `x` in the invertex.
    pub fn coinput(&self, x: &ElementId) -> Result<ElementSet, MetagraphError> {
        if !self.invertex.contains(x) {
            return Err(MetagraphError::NotInVertex {
                element: x.clone(),
                edge: self.id.clone(),
                side: "invertex",
            });
        }
        Ok(without(&self.invertex, x))
    }

    /// `W \ {x}` for `x` in the outvertex.
    pub fn cooutput(&self, x: &ElementId) -> Result<ElementSet, MetagraphError> {
        if !self.outvertex.contains(x) {
            return Err(MetagraphError::NotInVertex {
                element: x.clone(),
                edge: self.id.clone(),
                side: "outvertex",
            });
        }
        Ok(without(&self.outvertex, x))
    }

    fn elements(&self) -> impl Iterator<Item = &ElementId> {
        self.invertex.iter().chain(self.outvertex.iter())
    }
}

fn without(set: &ElementSet, x: &ElementId) -> ElementSet {
    set.iter().filter(|y| *y != x).cloned().collect()
}

/// One matrix entry: the coinput of the row element, the cooutput of the
/// column element and the edge sequence connecting them.
///
/// Ordering is by path first, so a cell iterates in path order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub path: Vec<EdgeId>,
    pub coinput: ElementSet,
    pub cooutput: ElementSet,
}

impl Triple {
    pub fn new(coinput: ElementSet, cooutput: ElementSet, path: Vec<EdgeId>) -> Self {
        Triple {
            path,
            coinput,
            cooutput,
        }
    }
}

/// Sparse square matrix over a generating set whose cells are sets of triples.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TripleMatrix {
    domain: ElementSet,
    cells: BTreeMap<(ElementId, ElementId), BTreeSet<Triple>>,
}

impl TripleMatrix {
    pub fn empty(domain: ElementSet) -> Self {
        TripleMatrix {
            domain,
            cells: BTreeMap::new(),
        }
    }

    pub fn domain(&self) -> &ElementSet {
        &self.domain
    }

    /// Inserts a triple unless the cell already holds one with the same path.
    pub fn insert(&mut self, source: ElementId, target: ElementId, triple: Triple) -> bool {
        let cell = self.cells.entry((source, target)).or_default();
        if cell.iter().any(|t| t.path == triple.path) {
            return false;
        }
        cell.insert(triple)
    }

    pub fn cell(&self, source: &str, target: &str) -> Option<&BTreeSet<Triple>> {
        self.cells
            .get(&(ElementId::from(source), ElementId::from(target)))
    }

    /// Iterates non-empty cells in (source, target) order.
    pub fn cells(&self) -> impl Iterator<Item = (&ElementId, &ElementId, &BTreeSet<Triple>)> {
        self.cells
            .iter()
            .filter(|(_, set)| !set.is_empty())
            .map(|((s, t), set)| (s, t, set))
    }

    pub fn triples(&self) -> impl Iterator<Item = (&ElementId, &ElementId, &Triple)> {
        self.cells()
            .flat_map(|(s, t, set)| set.iter().map(move |tr| (s, t, tr)))
    }

    pub fn nonempty_cells(&self) -> usize {
        self.cells().count()
    }

    pub fn triple_count(&self) -> usize {
        self.cells.values().map(BTreeSet::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.triple_count() == 0
    }

    pub fn row(&self, x: &ElementId) -> TripleMatrix {
        self.filtered(|s, _| s == x)
    }

    pub fn column(&self, x: &ElementId) -> TripleMatrix {
        self.filtered(|_, t| t == x)
    }

    fn filtered(&self, keep: impl Fn(&ElementId, &ElementId) -> bool) -> TripleMatrix {
        TripleMatrix {
            domain: self.domain.clone(),
            cells: self
                .cells
                .iter()
                .filter(|((s, t), set)| !set.is_empty() && keep(s, t))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }

    /// Cellwise union of two matrices over the same generating set.
    pub fn sum(&self, other: &TripleMatrix) -> Result<TripleMatrix, MetagraphError> {
        if self.domain != other.domain {
            return Err(MetagraphError::DomainMismatch);
        }
        let mut out = self.clone();
        for (s, t, triple) in other.triples() {
            out.insert(s.clone(), t.clone(), triple.clone());
        }
        out.cells.retain(|_, set| !set.is_empty());
        Ok(out)
    }
}

/// Closure matrix plus whether the path-length cap cut enumeration short.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Closure {
    pub matrix: TripleMatrix,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PathCheck {
    pub holds: bool,
    pub coinput: ElementSet,
    pub cooutput: ElementSet,
    pub length: usize,
}

/// A validated metagraph `<X, E>`. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Metagraph {
    elements: ElementSet,
    edges: BTreeMap<EdgeId, Edge>,
    // x -> edges with x in the outvertex / invertex
    produced_by: BTreeMap<ElementId, Vec<EdgeId>>,
    consumed_by: BTreeMap<ElementId, Vec<EdgeId>>,
}

impl Metagraph {
    pub fn new<X, E>(elements: X, edges: E) -> Result<Self, MetagraphError>
    where
        X: IntoIterator,
        X::Item: Into<ElementId>,
        E: IntoIterator<Item = Edge>,
    {
        let elements: ElementSet = elements.into_iter().map(Into::into).collect();
        if elements.iter().any(|x| x.as_str().is_empty()) {
            return Err(MetagraphError::EmptyIdentifier);
        }
        let mut by_id = BTreeMap::new();
        for edge in edges {
            if edge.id.as_str().is_empty() {
                return Err(MetagraphError::EmptyIdentifier);
            }
            if edge.invertex.is_empty() && edge.outvertex.is_empty() {
                return Err(MetagraphError::EmptyEdge(edge.id));
            }
            if let Some(x) = edge.elements().find(|x| !elements.contains(*x)) {
                return Err(MetagraphError::UnknownElement {
                    edge: edge.id.clone(),
                    element: x.clone(),
                });
            }
            if by_id.contains_key(&edge.id) {
                return Err(MetagraphError::DuplicateEdgeId(edge.id));
            }
            by_id.insert(edge.id.clone(), edge);
        }
        let mut produced_by: BTreeMap<ElementId, Vec<EdgeId>> = BTreeMap::new();
        let mut consumed_by: BTreeMap<ElementId, Vec<EdgeId>> = BTreeMap::new();
        for edge in by_id.values() {
            for x in &edge.outvertex {
                produced_by.entry(x.clone()).or_default().push(edge.id.clone());
            }
            for x in &edge.invertex {
                consumed_by.entry(x.clone()).or_default().push(edge.id.clone());
            }
        }
        Ok(Metagraph {
            elements,
            edges: by_id,
            produced_by,
            consumed_by,
        })
    }

    pub fn elements(&self) -> &ElementSet {
        &self.elements
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.values()
    }

    pub fn edge(&self, id: &str) -> Option<&Edge> {
        self.edges.get(id)
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn contains(&self, x: &str) -> bool {
        self.elements.contains(x)
    }

    /// Edges with `x` in the outvertex, in id order.
    pub fn producers(&self, x: &ElementId) -> impl Iterator<Item = &Edge> {
        self.produced_by
            .get(x)
            .into_iter()
            .flatten()
            .map(move |id| &self.edges[id])
    }

    /// Edges with `x` in the invertex, in id order.
    pub fn consumers(&self, x: &ElementId) -> impl Iterator<Item = &Edge> {
        self.consumed_by
            .get(x)
            .into_iter()
            .flatten()
            .map(move |id| &self.edges[id])
    }

    fn require_element(&self, x: &ElementId) -> Result<(), MetagraphError> {
        if self.elements.contains(x) {
            Ok(())
        } else {
            Err(MetagraphError::NotAnElement(x.clone()))
        }
    }

    pub fn adjacency(&self) -> TripleMatrix {
        adjacency_of(self.elements.clone(), self.edges.values())
    }

    /// Column `x` of the adjacency matrix, built from the edges producing `x`.
    pub fn adjacency_column(&self, x: &ElementId) -> Result<TripleMatrix, MetagraphError> {
        self.require_element(x)?;
        Ok(adjacency_column_of(self.elements.clone(), self.producers(x), x))
    }

    /// Row `x` of the adjacency matrix, built from the edges consuming `x`.
    pub fn adjacency_row(&self, x: &ElementId) -> Result<TripleMatrix, MetagraphError> {
        self.require_element(x)?;
        Ok(adjacency_row_of(self.elements.clone(), self.consumers(x), x))
    }

    /// All simple paths, i.e. connected edge sequences without a repeated edge.
    pub fn closure(&self) -> Closure {
        self.closure_bounded(self.edges.len())
    }

    /// Closure restricted to paths of at most `max_path_len` edges.
    ///
    /// Length-k paths are extended by every unused edge whose invertex meets
    /// the outvertex of the last edge. Enumeration stops at a fixpoint or at
    /// the cap; `truncated` reports whether a longer path would have existed.
    pub fn closure_bounded(&self, max_path_len: usize) -> Closure {
        let edges: Vec<&Edge> = self.edges.values().collect();
        let mut matrix = TripleMatrix::empty(self.elements.clone());
        let max_path_len = max_path_len.max(1);

        let mut level: Vec<PartialPath> = edges
            .iter()
            .enumerate()
            .filter(|(_, e)| !e.invertex.is_empty())
            .map(|(i, e)| PartialPath::start(i, e, edges.len()))
            .collect();
        let mut length = 1;
        let mut truncated = false;
        while !level.is_empty() {
            for path in &level {
                path.emit(&edges, &mut matrix);
            }
            let next: Vec<PartialPath> = level
                .iter()
                .flat_map(|p| p.extensions(&edges))
                .collect();
            if length == max_path_len {
                truncated = !next.is_empty();
                break;
            }
            level = next;
            length += 1;
        }
        Closure { matrix, truncated }
    }

    /// Checks whether `seq` is a simple path from `source` to `target` and
    /// returns its coinput and cooutput.
    pub fn is_simple_path(
        &self,
        seq: &[EdgeId],
        source: &ElementId,
        target: &ElementId,
    ) -> Result<PathCheck, MetagraphError> {
        let edges = seq
            .iter()
            .map(|id| {
                self.edges
                    .get(id)
                    .ok_or_else(|| MetagraphError::UnknownEdge(id.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let not_holding = PathCheck {
            holds: false,
            coinput: ElementSet::new(),
            cooutput: ElementSet::new(),
            length: seq.len(),
        };
        let (Some(first), Some(last)) = (edges.first(), edges.last()) else {
            return Ok(not_holding);
        };
        let distinct: BTreeSet<&EdgeId> = seq.iter().collect();
        let connected = edges
            .windows(2)
            .all(|w| !w[0].outvertex.is_disjoint(&w[1].invertex));
        if distinct.len() != seq.len()
            || !first.invertex.contains(source)
            || !last.outvertex.contains(target)
            || !connected
        {
            return Ok(not_holding);
        }
        let (ins, outs) = unions(edges.iter().copied());
        let mut coinput = net_inputs(&ins, &outs, edges.len());
        coinput.remove(source);
        let mut cooutput = outs;
        cooutput.remove(target);
        Ok(PathCheck {
            holds: true,
            coinput,
            cooutput,
            length: seq.len(),
        })
    }

    /// Whether `edge_ids` forms a metapath from `sources` to `targets`.
    pub fn is_metapath(
        &self,
        edge_ids: &BTreeSet<EdgeId>,
        sources: &ElementSet,
        targets: &ElementSet,
    ) -> Result<bool, MetagraphError> {
        let mut chosen = Vec::with_capacity(edge_ids.len());
        for id in edge_ids {
            let edge = self
                .edges
                .get(id)
                .ok_or_else(|| MetagraphError::UnknownEdge(id.clone()))?;
            chosen.push(edge.clone());
        }
        for x in sources.iter().chain(targets) {
            self.require_element(x)?;
        }
        let (ins, outs) = unions(chosen.iter());
        if !ins.difference(&outs).all(|x| sources.contains(x)) {
            return Ok(false);
        }
        if !targets.is_subset(&outs) {
            return Ok(false);
        }
        let sub = Metagraph::new(self.elements.iter().cloned(), chosen)?;
        let mut on_path = BTreeSet::new();
        for (s, t, triple) in sub.closure().matrix.triples() {
            if sources.contains(s) && targets.contains(t) {
                on_path.extend(triple.path.iter().cloned());
            }
        }
        Ok(edge_ids.iter().all(|e| on_path.contains(e)))
    }

    /// `X1 ⊆ X2` and `E1 ⊆ E2` (edges compared by id and content).
    pub fn is_submetagraph_of(&self, host: &Metagraph) -> bool {
        self.elements.is_subset(&host.elements)
            && self
                .edges
                .iter()
                .all(|(id, e)| host.edges.get(id) == Some(e))
    }

    /// Every element of `self` that is produced by some edge of `host` is
    /// produced only by edges of `self`. Pure inputs are judged in `host`.
    pub fn is_input_independent_of(&self, host: &Metagraph) -> bool {
        self.is_submetagraph_of(host)
            && self.elements.iter().all(|x| {
                host.producers(x)
                    .all(|e| self.edges.contains_key(&e.id))
            })
    }

    /// Every element of `self` that is consumed by some edge of `host` is
    /// consumed only by edges of `self`. Pure outputs are judged in `host`.
    pub fn is_output_independent_of(&self, host: &Metagraph) -> bool {
        self.is_submetagraph_of(host)
            && self.elements.iter().all(|x| {
                host.consumers(x)
                    .all(|e| self.edges.contains_key(&e.id))
            })
    }

    pub fn is_independent_of(&self, host: &Metagraph) -> bool {
        self.is_input_independent_of(host) && self.is_output_independent_of(host)
    }
}

pub fn sum_adjacency(a: &TripleMatrix, b: &TripleMatrix) -> Result<TripleMatrix, MetagraphError> {
    a.sum(b)
}

/// Adjacency matrix of an arbitrary edge collection over `domain`.
///
/// The edges are not validated against the domain; callers that need the
/// metagraph invariants go through [`Metagraph::new`].
pub fn adjacency_of<'a>(domain: ElementSet, edges: impl IntoIterator<Item = &'a Edge>) -> TripleMatrix {
    let mut m = TripleMatrix::empty(domain);
    for edge in edges {
        for source in &edge.invertex {
            for target in &edge.outvertex {
                m.insert(source.clone(), target.clone(), single_edge_triple(edge, source, target));
            }
        }
    }
    m
}

/// Column `x` over the given edges; edges not producing `x` contribute nothing.
pub fn adjacency_column_of<'a>(
    domain: ElementSet,
    edges: impl IntoIterator<Item = &'a Edge>,
    x: &ElementId,
) -> TripleMatrix {
    let mut m = TripleMatrix::empty(domain);
    for edge in edges.into_iter().filter(|e| e.outvertex.contains(x)) {
        for source in &edge.invertex {
            m.insert(source.clone(), x.clone(), single_edge_triple(edge, source, x));
        }
    }
    m
}

/// Row `x` over the given edges; edges not consuming `x` contribute nothing.
pub fn adjacency_row_of<'a>(
    domain: ElementSet,
    edges: impl IntoIterator<Item = &'a Edge>,
    x: &ElementId,
) -> TripleMatrix {
    let mut m = TripleMatrix::empty(domain);
    for edge in edges.into_iter().filter(|e| e.invertex.contains(x)) {
        for target in &edge.outvertex {
            m.insert(x.clone(), target.clone(), single_edge_triple(edge, x, target));
        }
    }
    m
}

fn single_edge_triple(edge: &Edge, source: &ElementId, target: &ElementId) -> Triple {
    Triple::new(
        without(&edge.invertex, source),
        without(&edge.outvertex, target),
        vec![edge.id.clone()],
    )
}

fn unions<'a>(edges: impl Iterator<Item = &'a Edge>) -> (ElementSet, ElementSet) {
    let mut ins = ElementSet::new();
    let mut outs = ElementSet::new();
    for e in edges {
        ins.extend(e.invertex.iter().cloned());
        outs.extend(e.outvertex.iter().cloned());
    }
    (ins, outs)
}

/// Inputs a path consumes without producing them. A single edge keeps its
/// whole invertex, so length-1 closure entries equal the adjacency entries
/// even when the invertex and outvertex overlap.
fn net_inputs(ins: &ElementSet, outs: &ElementSet, length: usize) -> ElementSet {
    if length == 1 {
        ins.clone()
    } else {
        ins.difference(outs).cloned().collect()
    }
}

struct PartialPath {
    seq: Vec<usize>,
    used: Vec<bool>,
    ins: ElementSet,
    outs: ElementSet,
}

impl PartialPath {
    fn start(index: usize, edge: &Edge, edge_count: usize) -> Self {
        let mut used = vec![false; edge_count];
        used[index] = true;
        PartialPath {
            seq: vec![index],
            used,
            ins: edge.invertex.clone(),
            outs: edge.outvertex.clone(),
        }
    }

    fn extensions<'a>(&'a self, edges: &'a [&'a Edge]) -> impl Iterator<Item = PartialPath> + 'a {
        let last = edges[*self.seq.last().expect("paths are non-empty")];
        edges.iter().enumerate().filter_map(move |(i, e)| {
            // an edge without outputs ends no path and continues none
            if self.used[i] || e.outvertex.is_empty() || last.outvertex.is_disjoint(&e.invertex) {
                return None;
            }
            let mut next = PartialPath {
                seq: self.seq.clone(),
                used: self.used.clone(),
                ins: self.ins.clone(),
                outs: self.outs.clone(),
            };
            next.seq.push(i);
            next.used[i] = true;
            next.ins.extend(e.invertex.iter().cloned());
            next.outs.extend(e.outvertex.iter().cloned());
            Some(next)
        })
    }

    fn emit(&self, edges: &[&Edge], matrix: &mut TripleMatrix) {
        let first = edges[self.seq[0]];
        let last = edges[*self.seq.last().expect("paths are non-empty")];
        let path: Vec<EdgeId> = self.seq.iter().map(|&i| edges[i].id.clone()).collect();
        let net_inputs = net_inputs(&self.ins, &self.outs, self.seq.len());
        for source in &first.invertex {
            let coinput = without(&net_inputs, source);
            for target in &last.outvertex {
                let cooutput = without(&self.outs, target);
                matrix.insert(
                    source.clone(),
                    target.clone(),
                    Triple::new(coinput.clone(), cooutput, path.clone()),
                );
            }
        }
    }
}
