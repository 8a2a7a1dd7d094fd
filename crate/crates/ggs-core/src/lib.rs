//! GGS-groups over primary rooted trees.
//!
//! The crate provides exact arithmetic for tree automorphisms generated by a
//! rooted cycle `a` and a recursively defined generator `b`, classification of
//! defining vectors by their branch structure, finite congruence quotients
//! with stabilizer chains, a battery of section-identity checks, and the
//! companion-matrix model for the constant-vector group.

pub mod arith;
pub mod battery;
pub mod chain;
pub mod constant;
pub mod error;
pub mod intmat;
pub mod perm;
pub mod quotient;
pub mod reduce;
pub mod report;
pub mod sweep;
pub mod tree;
pub mod vector;

pub use battery::{identity_battery, verify_branch_over, BranchTarget};
pub use error::{GgsError, Result};
pub use intmat::{model_lcs_index, CompanionModel, IntMatrix};
pub use perm::Perm;
pub use quotient::{
    build_quotient, fractal_check, LevelQuotient, SubgroupHandle, DEFAULT_DEGREE_CAP,
};
pub use reduce::{reduce_vector, reduce_vector_at, ReductionData};
pub use report::{CheckRecord, CheckStatus, RunReport, Summary, SCHEMA_VERSION};
pub use tree::{Element, Engine, Portrait, TreeShape, Vertex};
pub use vector::{ClassificationReport, DefiningVector, Route};
