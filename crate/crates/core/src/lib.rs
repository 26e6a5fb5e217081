//! Operads, Kan suspensions, spectra and generalized Steenrod operations over prime fields.

pub mod actions;
pub mod cli;
pub mod fplinalg;
pub mod operads;
pub mod simplicial;
pub mod spectra;
pub mod stabilization;
pub mod steenrod;
pub mod suite;
