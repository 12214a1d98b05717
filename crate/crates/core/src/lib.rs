//! Numerical homotopy cascade for polynomial systems.
//!
//! Solves a square polynomial system and, through a cascade of embedded
//! systems with slack variables, finds generic points on every
//! positive-dimensional solution component.

pub mod cascade;
pub mod embedding;
pub mod numeric;
pub mod poly;
pub mod report;
pub mod startsys;
pub mod tracker;
