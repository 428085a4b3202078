use oadesign::io;
use oadesign::*;

fn certified(q: u64, m: u32, t: usize) -> OrthogonalArray {
    let g = trace_code_generators(q, m, t).unwrap();
    let cert = verify_strength_linear(&g, t, &Budget::default())
        .unwrap()
        .certification()
        .unwrap();
    OrthogonalArray::from_generator(g).with_certification(cert)
}

#[test]
fn reduced_designs_fail_one_degree_above_strength() {
    let opts = VerifyOptions::default();
    let policy = TolerancePolicy::default();
    let d7 = reduce_by_oa(&hilbert_kamke_rule(3).unwrap(), &certified(7, 1, 5)).unwrap();
    assert!(verify_design(&d7, 5, policy, &opts).unwrap().passed);
    let above = verify_design(&d7, 6, policy, &opts).unwrap();
    assert!(!above.passed);
    assert!(above.failures > 0 && !above.worst.is_empty());

    let d8 = reduce_by_oa(&chebyshev_rule(2).unwrap(), &certified(2, 3, 3)).unwrap();
    assert_eq!(d8.n_points(), 16);
    assert!(verify_design(&d8, 3, policy, &opts).unwrap().passed);
    assert!(!verify_design(&d8, 4, policy, &opts).unwrap().passed);
}

#[test]
fn json_round_trip_preserves_verification() {
    let budget = Budget::default();
    let design = reduce_by_oa(&chebyshev_rule(3).unwrap(), &certified(3, 2, 5)).unwrap();
    let text = io::design_to_json(&design);
    let back = io::design_from_json(&text, None, &budget).unwrap();
    assert_eq!(back.n_points(), 729);
    assert_eq!(back.dim(), 9);
    let policy = TolerancePolicy::new(1e-10, 1e-12);
    let a = verify_design(&design, 5, policy, &VerifyOptions::default()).unwrap();
    let b = verify_design(&back, 5, policy, &VerifyOptions::default()).unwrap();
    assert!(b.passed);
    assert_eq!(a.max_abs_error.to_bits(), b.max_abs_error.to_bits());

    let oa = certified(7, 1, 5);
    let back = io::oa_from_json(&io::oa_to_json(&oa), &budget).unwrap();
    assert_eq!(back.n_runs(), 16807);
    assert_eq!(back.certified_strength(), Some(5));
}

#[test]
fn tampered_array_is_rejected_on_load() {
    let budget = Budget::default();
    let oa = full_factorial(2, 3).unwrap().into_explicit(100).unwrap();
    let oa = oa.with_certification(Certification {
        strength: 3,
        method: CertificationMethod::Exhaustive,
    });
    let text = io::oa_to_json(&oa);
    assert!(io::oa_from_json(&text, &budget).is_ok());
    // Duplicate the first run over the second.
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let first = v["rows"][0].clone();
    v["rows"][1] = first;
    assert!(io::oa_from_json(&v.to_string(), &budget).is_err());
}

#[test]
fn sampled_verification_is_labeled() {
    let design = product_design(&hilbert_kamke_rule(3).unwrap(), 4, &Budget::default()).unwrap();
    let opts = VerifyOptions {
        sample: Some(20),
        ..VerifyOptions::default()
    };
    let rep = verify_design(&design, 5, TolerancePolicy::default(), &opts).unwrap();
    assert!(!rep.exhaustive);
    assert_eq!(rep.monomials_checked, 20);
    assert_eq!(rep.sample_seed, Some(opts.seed));
    assert!(rep.passed);
}

#[test]
fn budget_refusals_are_reported_as_such() {
    let tiny = Budget {
        max_rows: 10,
        max_subsets: 10,
        max_histogram: 10,
        max_monomials: 10,
        max_group_order: 10,
    };
    let g = trace_code_generators(3, 2, 5).unwrap();
    let err = verify_strength_linear(&g, 5, &tiny).unwrap_err();
    assert!(err.is_refusal(), "{err}");
    let design = product_design(&hilbert_kamke_rule(3).unwrap(), 3, &Budget::default()).unwrap();
    let opts = VerifyOptions {
        budget: tiny,
        ..VerifyOptions::default()
    };
    let err = verify_design(&design, 5, TolerancePolicy::default(), &opts).unwrap_err();
    assert!(err.is_refusal(), "{err}");
}
