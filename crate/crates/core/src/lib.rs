//! Simulator for lifted private information retrieval over Reed–Solomon
//! coded storage with colluding servers.

pub mod audit;
pub mod cli;
pub mod error;
pub mod exec;
pub mod gf;
pub mod lift;
pub mod linalg;
pub mod oneshot;
pub mod plan;
pub mod refine;
pub mod storage;

pub use error::{PirError, Result};
pub use gf::{EvalPoint, FieldSpec};
pub use lift::SymbolicMatrix;
pub use storage::{Database, Message, QueryVector, StorageConfig};
