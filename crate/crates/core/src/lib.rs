//! Generalized Ricci flow with a polyform and dilaton on periodic grids,
//! weighted dynamic optimal transport along the flow, and numerical checks
//! of the associated identities and monotonicity statements.

// Index loops follow the tensor formulas; negated comparisons reject NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

pub mod adapted;
pub mod container;
pub mod error;
pub mod field;
pub mod flow;
pub mod forms;
pub mod geometry;
pub mod linalg;
pub mod mesh;
pub mod par;
pub mod transport;

pub use error::{GrfError, Result};
pub use field::{FaceVector, MetricField, PolyformField, ScalarField, SymTensorField, VectorField};
pub use forms::Convention;
pub use mesh::MeshSpec;
