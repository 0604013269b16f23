pub mod error;
pub mod grid;
pub mod operators;
pub mod stepper;
pub mod diagnostics;
pub mod spectrum;
pub mod cli;

// Link the system BLAS/LAPACK implementation.
extern crate openblas_src;
