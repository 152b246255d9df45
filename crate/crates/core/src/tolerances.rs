//! Default numerical tolerances.

/// Finite-difference step relative to the length scale of the problem.
pub const FD_STEP: f64 = 1e-4;

/// Tolerance for comparisons in the verification checks.
pub const CHECK_TOL: f64 = 1e-6;

/// Cauchy tolerance of the truncation oracle.
pub const ORACLE_TOL: f64 = 1e-8;

/// Largest truncation parameter tried by the oracle.
pub const ORACLE_T_MAX: f64 = 1024.0;

/// Relative gap below which grid values count as tied for the maximum.
pub const CONTACT_TIE: f64 = 1e-7;

/// Residual `|∇B_v(x) - u|` accepted from direction translation.
pub const TRANSLATION_RESIDUAL: f64 = 1e-5;

/// Lipschitz constant of the Gauss map.
pub const LIPSCHITZ_TOL: f64 = 1e-3;
