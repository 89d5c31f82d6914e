//! Customization modelling for multi-tenant applications.
//!
//! The crate is layered bottom-up:
//!
//! - [`metagraph`]: metagraphs, their adjacency and closure matrices of
//!   coinput/cooutput triples, paths, metapaths and sub-metagraph independence.
//! - [`model`]: components, customization points, concerns grouped into
//!   dimensions, applications and tenant customizations.
//! - [`engine`]: incremental validation of add/delete operations on a tenant
//!   customization, replay of operation logs and a from-scratch validity oracle.
//! - [`io`]: canonical JSON documents for models and customizations, matrix
//!   rendering and the seeded random model generator.
//! - [`workload`]: seeded operation streams and latency summaries used by the
//!   benchmark harness.

pub mod engine;
pub mod io;
pub mod metagraph;
pub mod model;
pub mod workload;

pub use engine::{Decision, OpError, Operation, Reason, Session, Verdict};
pub use metagraph::{Edge, EdgeId, ElementId, Metagraph, MetagraphError, Triple, TripleMatrix};
pub use model::{AppModel, Customization, Mode};
