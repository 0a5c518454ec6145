//! Eavesdropping analysis of BB84 key distillation by one-way communication
//! when Alice and Bob only see x/z statistics.
//!
//! Modules, bottom-up: [`linalg`] (small complex matrices), [`states`]
//! (state families, purifications, Eve's conditioned ancillas),
//! [`infotheory`] (closed-form information functionals), [`povm`]
//! (measurements and the numerical optimizer), [`analysis`] (curves,
//! thresholds, nonsymmetric search) and [`cli`] (command-line front end).

pub mod analysis;
pub mod cli;
pub mod error;
pub mod infotheory;
pub mod linalg;
pub mod povm;
pub mod states;

pub use error::{Error, Result};
