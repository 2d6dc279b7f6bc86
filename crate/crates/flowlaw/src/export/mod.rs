//! Model persistence and emission of a trained network as a flat,
//! dependency-free subroutine source file.

mod archive;
mod emit;
mod staged;

pub use archive::{load_model, save_model, ModelArchive, Provenance, ARCHIVE_SCHEMA_VERSION};
pub use emit::{emit_subroutine, MAX_LINE_WIDTH};
pub use staged::{evaluate_staged, StagedEvaluation};
