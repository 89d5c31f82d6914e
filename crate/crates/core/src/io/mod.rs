//! Documents, rendering and generation.

mod document;
mod generate;
mod matrix;

pub use document::{
    load_customization, load_model, save_customization, save_model, CustomizationDocument, IoError,
    ModelDocument, FORMAT_VERSION,
};
pub use generate::{generate_model, GeneratorError, GeneratorParams};
pub use matrix::{matrix_json, render_guidance, render_matrix, render_triple};
