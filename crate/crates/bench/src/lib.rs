//! Fixtures shared by the benchmarks.

use oadesign::{trace_code_generators, verify_strength_linear, Budget, OrthogonalArray};

/// Trace-code array certified at its designed strength.
pub fn certified_oa(q: u64, m: u32, t: usize) -> OrthogonalArray {
    let g = trace_code_generators(q, m, t).expect("valid trace-code parameters");
    let cert = verify_strength_linear(&g, t, &Budget::default())
        .expect("within budget")
        .certification()
        .expect("trace code has its designed strength");
    OrthogonalArray::from_generator(g).with_certification(cert)
}
