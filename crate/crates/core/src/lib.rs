//! Branch-price-and-cut solver for the capacitated vehicle routing problem.
//!
//! The solver prices elementary-relaxed routes by ng-route labeling and
//! strengthens the set-partitioning relaxation with rounded capacity cuts in
//! one of three regimes: arc-projected cuts folded into arc costs, cuts whose
//! route coefficients consult the labeling memory, and set-membership cuts
//! carried as extra label resources.

pub mod bits;
pub mod bpc;
pub mod cli;
pub mod cuts;
pub mod instance;
pub mod lp;
pub mod master;
pub mod pricing;
