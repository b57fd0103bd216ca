//! Exact solvers for 4-block n-fold integer programs
//!
//! ```text
//!     max  w·x
//!     s.t. C x⁰ + D x¹ + … + D xⁿ = b⁰
//!          B x⁰ + A xⁱ            = bⁱ     (i = 1..n)
//!          l ≤ x ≤ u,  x integral
//! ```
//!
//! All data is arbitrary precision. Routing goes by [`model::StructureClass`]:
//! an all-ones `A` row is solved by [`ones`], `t_A = s_A + 1` with full row
//! rank by [`nfold`] (when `B = C = 0`) or [`fourblock`], and [`oracle`]
//! enumerates tiny instances for cross-checking.

pub mod flow;
pub mod fourblock;
pub mod generate;
pub mod intlin;
pub mod json;
pub mod matrix;
pub mod model;
pub mod nfold;
pub mod ones;
pub mod oracle;
pub mod ratlp;
pub mod reductions;
pub mod smallip;
pub mod solve;

pub use matrix::IntMatrix;
pub use model::{
    Evaluation, FourBlockInstance, GeneralizedNFoldInstance, NFoldInstance, Solution,
    SolverTag, StructureClass,
};
