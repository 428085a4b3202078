//! Small equi-weighted cubature designs for Gaussian and Chebyshev product
//! measures, built from one-dimensional rules and orthogonal arrays derived
//! from trace codes over finite fields, with exact-moment verification.
//!
//! The usual pipeline:
//!
//! ```
//! use oadesign::{hilbert_kamke_rule, reduce_by_oa, trace_code_generators, verify_design};
//! use oadesign::{verify_strength_linear, Budget, OrthogonalArray, TolerancePolicy, VerifyOptions};
//!
//! let budget = Budget::default();
//! let g = trace_code_generators(7, 1, 5)?;
//! let cert = verify_strength_linear(&g, 5, &budget)?.certification().unwrap();
//! let oa = OrthogonalArray::from_generator(g).with_certification(cert);
//! let design = reduce_by_oa(&hilbert_kamke_rule(3)?, &oa)?;
//! assert_eq!(design.n_points(), 16807);
//! let report = verify_design(&design, 3, TolerancePolicy::default(), &VerifyOptions::default())?;
//! assert!(report.passed);
//! # Ok::<(), oadesign::Error>(())
//! ```

pub mod budget;
pub mod codes;
pub mod designs;
pub mod error;
pub mod gf;
pub mod io;
pub mod numeric;
pub mod oa;
pub mod rules1d;
pub mod verify;

pub use budget::Budget;
pub use codes::{
    code_dimension, enumerate_codewords, puncture, puncture_first, trace_code_generators,
    GeneratorMatrix,
};
pub use designs::{
    gaussian_to_spherical, orbit_check, orbit_design, product_design, psl28,
    reduce_by_block_design, reduce_by_oa, reduce_by_oa_multiset, symmetric_average, BlockReduction,
    DesignStorage, OrbitCheck, PermSet, RowWeights, WeightedDesign, WeightedPoints,
};
pub use error::{Error, Result};
pub use gf::{make_extension, make_field, FieldCtx, FieldElem};
pub use oa::{
    full_factorial, verify_strength_exhaustive, verify_strength_linear, Certification,
    CertificationMethod, OrthogonalArray, StrengthReport,
};
pub use rules1d::{
    chebyshev_moment, chebyshev_rule, gaussian_moment, hilbert_kamke_rule, rational_weight_rule,
    solve_weights, MeasureTag, Rule1D, RuleWeights,
};
pub use verify::{
    check_hilbert_identity, design_moment, embedding_map, enumerate_monomials, measure_moment,
    sphere_constant, verify_design, Embedding, HilbertReport, Monomial, TolerancePolicy,
    VerificationReport, VerifyOptions,
};
