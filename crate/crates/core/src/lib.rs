//! Exact computations in the generalized weighted mean difference spaces
//! `λ(u,v,Δ)` for `λ ∈ {ℓ∞, c, c₀}`.
//!
//! A sequence `x` belongs to `λ(u,v,Δ)` when its transform
//! `y_k = Σ_{i≤k} u_k v_i (x_i - x_{i-1})` belongs to `λ`. The crate builds
//! that operator and its closed-form inverse as exact lower-triangular
//! matrices, computes norms and Schauder-basis expansions, probes membership
//! of multipliers in the α-, β- and γ-duals, and evaluates the conditions
//! characterizing the matrix classes `(c(u,v,Δ) : ℓ∞)` and `(c(u,v,Δ) : c)`.
//!
//! Everything is exact rational arithmetic until a limit or supremum has to
//! be judged from finitely many terms; those judgements come back as a
//! [`Verdict`] with the evidence attached.
//!
//! Runnable walkthroughs live in `examples/`:
//!
//! ```bash
//! cargo run --example sequences_and_dsl
//! cargo run --example weighted_difference_operator
//! cargo run --example transform_and_norm
//! cargo run --example schauder_basis
//! cargo run --example dual_membership
//! cargo run --example matrix_classes
//! cargo run --example batch_job
//! ```

pub mod conditions;
pub mod duals;
pub mod error;
pub mod expr;
pub mod job;
pub mod matclass;
pub mod rational;
pub mod sequence;
pub mod spaces;
pub mod triangle;
pub mod verdict;
pub mod verify;
pub mod weights;

pub use error::{Error, Result};
pub use expr::{parse_expr, parse_matrix_expr, SeqExpr};
pub use rational::Rational;
pub use sequence::Sequence;
pub use triangle::Triangle;
pub use verdict::{limit_probe, Outcome, ProbeConfig, Verdict};
pub use weights::Weights;
