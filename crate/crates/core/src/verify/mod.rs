//! Mechanized checks of the structural results about rank-two maxima, and the
//! certificate that bundles them.

mod certify;
mod lemmas;
pub mod poly;

pub use certify::{certify, Certificate, CheckResult, ClusterSummary, GeneratorSummary, MultistartSummary, Verdict};
pub use lemmas::{
    check_bounds, f1_eval, f1_eval_exact, f2_poly, f3_eval, f3_eval_f64, f3_poly, f3_region_csv, f3_region_scan,
    f_numerator, f_numerator_exact, f_polynomial, f_polynomial_exact, lemma_a2_factorization, sign_order_check,
    tail_constraints, tail_pair_solve, tail_pair_solve_exact, BoundsReport, FPolyReport, FactorizationReport,
    ScanReport, SignOrderReport, Witness,
};
pub use poly::{FloatPoly, Poly1, Poly3};
