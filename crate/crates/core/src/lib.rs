//! Counterfactual inference for finite structural models under two
//! couplings of the counterfactual noise: `disco`, where every intervened
//! world draws fresh noise with the factual law, and `scm`, where all worlds
//! share the factual noise.
//!
//! Models are built with [`model::ModelSpec`] or read from `.dscm` files,
//! queried with the text language in [`query`], and evaluated exactly by
//! [`exact::Engine`] or approximately by [`sampling`]. [`scenario`] ships
//! worked examples and [`optimizer`] allocates treatments under a budget.

pub mod cli;
pub mod exact;
pub mod expr;
pub mod lexer;
pub mod model;
pub mod optimizer;
pub mod pmf;
pub mod query;
pub mod rational;
pub mod report;
pub mod sampling;
pub mod scenario;

pub use exact::{Engine, EngineError};
pub use model::{Coupling, DiscoModel, ModelSpec, StructuralEquation, UnitId};
pub use query::Query;
