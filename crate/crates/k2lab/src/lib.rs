// SPDX-License-Identifier: Apache-2.0
//! Exact and floating evaluation of the quadratic Kloosterman-type sums
//! K2(A,B;Q), their correlations, and squarefree progression experiments.

pub mod corrpp;
pub mod corrprime;
pub mod cyclo;
pub mod error;
pub mod expsum;
pub mod modarith;
pub mod numeric;
pub mod sqfree;
pub mod report;
pub mod suites;
pub mod vdc;

pub use error::{Error, Result};
