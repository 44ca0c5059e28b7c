//! Symbolic evaluation of second-quantized fermionic expressions relative to a
//! Hartree-Fock reference (Fermi vacuum).
//!
//! Every input term is an expectation value `<HF| ops |HF>` weighted by a
//! rational coefficient and a product of tensor factors. The [`engine`] moves
//! operators toward the side of the vacuum that annihilates them, producing
//! Kronecker deltas on each anticommutation, until only scalars remain. The
//! [`canon`] module then canonicalizes, merges, and recombines the scalar terms
//! into antisymmetrized integrals. The [`oracle`] module checks any derivation
//! numerically on an explicit Fock space.
//!
//! The crate is `no_std` and only needs `alloc`.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod canon;
pub mod engine;
pub mod model;
pub mod oracle;
pub mod parser;
pub mod pipeline;
pub mod sample;

pub use canon::{canonicalize_expression, CanonicalTerm};
pub use engine::{fixpoint, one_step, Direction, FixpointStats};
pub use model::{
    Binding, Coeff, Expression, FermionOp, Index, Label, OpKind, OrbitalSpace, TensorFactor,
    TensorKind, Term,
};
pub use oracle::{check_equivalence, NumericTensors, OrbitalBasis, Report};
pub use parser::{parse, render, Format, ParseError, SourceExpr};
pub use pipeline::{evaluate, Evaluation};
