//! A verification laboratory for lower bounds of the one-dimensional centered
//! Hardy-Littlewood maximal operator.
//!
//! The crate provides exact pointwise evaluation of `Mf` on a closed class of
//! piecewise-linear functions, operator iteration with certified truncation
//! error, and executable checkers for the inequalities, constants, and
//! asymptotic brackets that govern `||Mf||_p / ||f||_p` from below:
//!
//! * [`pwl`] — the function algebra: evaluation, antiderivatives, closed-form
//!   L^p norms, superlevel sets.
//! * [`maximal`] — the centered/uncentered operators, the indicator fast
//!   path, and iteration of `M` with a certified tail-truncation budget.
//! * [`theorems`] — verifiers for the sunrise lemma and its envelope
//!   inclusions, the small-p norm bound, the indicator bound, the dyadic
//!   minorant pipeline for unimodal functions, and the stability gap.
//! * [`asymptotics`] — the `a_p` fixed-point solver, power-tail domination,
//!   the growth bracket, and a seeded derivative-free extremizer search.

pub mod asymptotics;
pub mod error;
pub mod interval;
pub mod maximal;
pub mod optim;
pub mod pwl;
pub mod quad;
pub mod testgen;
pub mod theorems;

pub use asymptotics::{
    growth_bracket, h_domination_check, search_extremizer, solve_ap, ApSolution, SearchFamily,
    SearchResult,
};
pub use error::{Error, Result};
pub use interval::IntervalSet;
pub use maximal::{
    apply_m, centered_max_at, centered_max_limits, indicator_max_at, iterate_m, uncentered_max_at,
    uncentered_max_at_refined, GrowthReport, MaximalConfig,
};
pub use pwl::{Exponent, PiecewiseLinear, Segment};
pub use theorems::{
    build_psi, c_p, gbar, gbar_iterate_check, gbar_minorant, implied_n, inclusion_check,
    indicator_check, phi_at, psi_norm_check, stability_gap_check, sunrise_check, theorem1_check,
    theorem1_constant, CheckReport, PhiEnvelope, UnimodalWitness,
};
