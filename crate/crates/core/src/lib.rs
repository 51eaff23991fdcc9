//! Exact Hausdorff and packing measures of self-similar sets on the line
//! under the generalized finite type condition.

pub mod error;
pub mod density;
pub mod generation;
pub mod ifs;
pub mod measure;
pub mod numerics;
pub mod pipeline;
pub mod tree;
pub mod typing;
pub mod verify;

pub use error::{Error, Result};
pub use measure::{CertifiedModel, FastModel};
pub use numerics::CertifiedReal;
