//! Classicality diagnostics and two-sector Fock-space models for membership
//! weights of concept conjunctions and their negations.
//!
//! A record holds the weights of A, B, their negations, and the four
//! conjunctions. [`classicality`] decides whether a Kolmogorov model exists,
//! [`hilbert`] and [`fock`] build the quantum model, and [`fitter`] solves it
//! for each record.

pub mod classicality;
pub mod datamodel;
pub mod document;
pub mod error;
pub mod fitter;
pub mod fock;
pub mod hilbert;
pub mod stats;

pub use datamodel::{Concept, ConceptPairDataset, MembershipRecord, Pair};
pub use error::{Error, Result};
