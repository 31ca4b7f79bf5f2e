//! Quantum support vector machines on an exact statevector simulator.
//!
//! Three classifiers share one circuit stack:
//!
//! * **QK-SVM**: an SMO-trained SVM over the angle-embedding overlap kernel
//!   ([`kernels`], [`svm`]).
//! * **QV-SVM**: a variational circuit trained on the hinge loss
//!   ([`variational`]).
//! * **QVK-SVM**: a kernel expansion over a trainable quantum kernel, with
//!   the ansatz angles, expansion weights and bias trained jointly ([`hybrid`]).
//!
//! Gradients of circuit quantities use the parameter-shift rule ([`autodiff`]).

pub mod autodiff;
pub mod circuits;
pub mod cli;
pub mod data;
pub mod error;
pub mod hybrid;
pub mod kernels;
pub mod metrics;
pub mod report;
pub mod sim;
pub mod svm;
pub mod variational;

pub use error::{Error, Result};
