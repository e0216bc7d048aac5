//! Numerical engine for absolute-parallelism (teleparallel) geometry.
//!
//! An AP-space is given on a chart by n frame vector fields λᵢ^μ(x) written
//! in a small expression language. At any point the engine produces, with
//! exact second-order Taylor jets, the Weitzenböck, Levi-Civita and
//! symmetric-part connections, their torsion and curvature, and the
//! conformally invariant tensors T, K, B, Q together with the three
//! conformal connections. The [`verify`] module checks every transformation
//! law under a conformal change λ̄ᵢ^μ = e^{−ρ}λᵢ^μ at random points.
//!
//! Index storage is `[α][μ][ν]` for Γ^α_{μν}; partial derivatives and
//! covariant-derivative indices are always appended last.

pub mod cli;
pub mod conformal;
pub mod connection;
pub mod expr;
pub mod fd;
pub mod frame;
pub mod geometry;
pub mod invariants;
pub mod jet;
pub mod tensor;
pub mod verify;

pub use conformal::{transform_frame, ConformalFactor, Transcription};
pub use connection::{ConnectionKind, ConnectionSample};
pub use expr::Expr;
pub use frame::{ApSpace, FrameError};
pub use geometry::{Conventions, PointGeometry};
pub use invariants::Stroke;
pub use jet::{Jet2, JetError};
pub use tensor::{TensorSample, Variance};
