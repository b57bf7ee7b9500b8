//! Exact semilinear matrix algebra over truncated ramified Witt rings of
//! Laurent-type series.
//!
//! The crate works with matrices over a coefficient ring built from a prime
//! p, an unramified residue extension of degree d, a ramification index e
//! (with pi^e = p) and a base precision N, extended by monomials t^x whose
//! exponents live on a p-power lattice inside a fixed window. On top of the
//! ring it provides:
//!
//! - a twisted substitution sigma acting by t -> t^p and the Frobenius lift
//!   on coefficients, together with a solver for w - lambda * sigma(w) = v
//!   across the three convergence regimes of lambda;
//! - generic slope analysis: twisted Newton hulls and elementary divisor
//!   valuations;
//! - iterative diagonalization of a frame against a target diagonal;
//! - factorization of invertible matrices over the residue Laurent ring
//!   into elementary moves, with exact lifts of each move;
//! - a two-phase reduction that contracts a frame toward its diagonal by
//!   weighted-valuation descent;
//! - derivation frames: compatibility defects, contraction operators and
//!   block-unipotence certificates;
//! - a canonical text format for instances plus seeded generators.
//!
//! # Text format
//!
//! An instance is a ring line, an optional param line and any number of
//! matrix blocks:
//!
//! ```text
//! ring p=2 d=1 phi=0,1 e=1 N=3 h=0 window=-8,8
//! param r=1 max_iter=40 seed=7
//! matrix A frobenius 2x2
//! 1*t^0+1*t^4 ; 0
//! 0 ; pi^1*1*t^0
//! matrix D diagonal 2x2
//! 1*t^0 ; 0
//! 0 ; pi^1*1*t^0
//! ```
//!
//! Series entries are '+'-joined pieces `pi^k*c*t^x` (the pi part is omitted
//! when k = 0, and c is parenthesized as a polynomial in w when d > 1);
//! rows join entries with ` ; `. Emission is canonical: parsing and
//! re-emitting any emitted text is the identity.

pub mod coeff;
pub mod descent;
pub mod error;
pub mod extend;
pub mod fnabla;
pub mod fq;
pub mod gen;
pub mod instance;
pub mod laurent;
pub mod matrix;
pub mod num;
pub mod series;
pub mod sigma;

pub use coeff::{Coeff, RingCtx};
pub use descent::{
    choose_shift_threshold, descend, round_to_profile, DescentOutcome, DescentParams,
};
pub use error::{Error, Result};
pub use extend::{
    descend_adaptive, diagonalize_adaptive, extend_ring, find_irreducible, Adaptive,
    RingEmbedding,
};
pub use fnabla::{
    compat_residual, contract_sigma, gauge, is_compatible, verify_unipotent, ContractOutcome,
    UnipotentCert, UnipotentCheck,
};
pub use fq::{FqCtx, FqElem};
pub use gen::{gen_factor_case, generate, residue_matrix, series_from_residue, Family};
pub use instance::{parse_series, Instance, NamedMatrix, Params, Role};
pub use laurent::{
    factor_elementary, fmt_move, fmt_poly, lift_move, move_product, parse_move, GrMatrix,
    LaurentPoly, Move,
};
pub use matrix::{fmt_val, Matrix};
pub use num::{exp_frac, exp_int, fmt_ratio, parse_ratio, Exp};
pub use series::{val_gt, Profile, Series};
pub use sigma::{
    diagonal_monomials, diagonalize_generic, fmt_polygon, newton_polygon, smith_valuations,
    solve_sigma_equation, twisted_product, GenDiagOutcome, SolveOutcome, SolveRegime,
};
