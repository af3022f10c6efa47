//! Decohered Hastings-Haah Floquet code.
//!
//! The crate covers the whole pipeline for the honeycomb Floquet code written
//! on a 3-colored triangular lattice with qubits on plaquettes:
//!
//! * [`lattice`]: the colored torus, its per-round superlattices and loops.
//! * [`pauli`] and [`gf2`]: symplectic Pauli algebra and stabilizer tableaux.
//! * [`code`]: checks, vertex operators, logicals and the e-m automorphism.
//! * [`channel`]: the simple two-qubit error model and the single-qubit X model.
//! * [`circuit`]: noisy protocol runs producing syndrome histories.
//! * [`decoder`]: maximum-likelihood and matching decoders, plus the kagome
//!   construction for single-qubit errors.
//! * [`statmech`]: partition-function engines (random-bond Ising model and the
//!   (n-1)-flavor Ising model).
//! * [`diagnostics`]: Renyi relative entropy and Renyi coherent information.
//! * [`oracle`]: exact weighted-Pauli evolution used to cross-check the
//!   stat-mech formulas.
//!
//! Numerical code is generic over [`Scalar`]; the `*64` aliases below fix it
//! to `f64`.

pub mod channel;
pub mod circuit;
pub mod code;
pub mod decoder;
pub mod diagnostics;
pub mod error;
pub mod gf2;
pub mod lattice;
pub mod oracle;
pub mod pauli;
pub mod statmech;

pub use error::{Error, Result};
pub use lattice::{Color, ColoredTorusLattice, Direction};
pub use pauli::{PauliString, StabilizerTableau};

use std::fmt::{Debug, Display};

/// Floating point type used by the numerical modules.
pub trait Scalar:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::FloatConst
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + std::iter::Sum
    + 'static
{
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

pub type Real = f64;
pub type ClassProbabilities64 = decoder::ClassProbabilities<f64>;
pub type PairwiseModel64 = statmech::PairwiseModel<f64>;
pub type FlavorIsing64 = statmech::FlavorIsing<f64>;
pub type RbimInstance64 = decoder::RbimInstance<f64>;
pub type DiagnosticsResult64 = diagnostics::DiagnosticsResult<f64>;
