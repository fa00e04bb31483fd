//! Inequality experiments: empirical Poincaré and Sobolev constants,
//! best polynomial approximation, pointwise representation bounds, the
//! smoothed-ramp counterexample, and Morrey/Campanato norms.

pub mod counterexample;
pub mod inequality;
pub mod morrey;
pub mod onedim;
pub mod polyfit;

pub use counterexample::{counterexample_report, parse_eps_range, CounterexampleFamily, CounterexampleReport};
pub use inequality::{
    poincare_sweep, poincare_test, representation_check, sobolev_sublaplacian_test, sobolev_test, InequalityReport,
    RepresentationReport, SweepReport,
};
pub use morrey::{campanato_norm, leibniz_sweep, leibniz_test, morrey_norm, LeibnizScales, LeibnizSweep, Normalization, SupEstimate};
pub use polyfit::{best_polynomial, FitMethod, PolynomialFit};
