use oadesign::rules1d::largest_remainder;
use oadesign::verify::monomial_count;
use oadesign::*;
use proptest::prelude::*;

fn field_strategy() -> impl Strategy<Value = (u32, u32)> {
    prop::sample::select(vec![
        (2u32, 10u32),
        (3, 5),
        (5, 3),
        (7, 2),
        (101, 1),
        (2, 1),
        (13, 2),
    ])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn field_axioms_on_random_elements((p, e) in field_strategy(), seeds in prop::array::uniform3(any::<u32>())) {
        let f = make_field(p, e).unwrap();
        let q = f.order();
        let [a, b, c] = seeds.map(|s| s % q);
        let one = f.one().code();
        prop_assert_eq!(f.add_codes(f.add_codes(a, b), c), f.add_codes(a, f.add_codes(b, c)));
        prop_assert_eq!(f.mul_codes(f.mul_codes(a, b), c), f.mul_codes(a, f.mul_codes(b, c)));
        prop_assert_eq!(f.mul_codes(a, f.add_codes(b, c)), f.add_codes(f.mul_codes(a, b), f.mul_codes(a, c)));
        prop_assert_eq!(f.sub_codes(f.add_codes(a, b), b), a);
        if a != 0 {
            prop_assert_eq!(f.mul_codes(a, f.inv_code(a)), one);
            // Fermat: a^(q-1) = 1.
            prop_assert_eq!(f.pow_code(a, (q - 1) as u64), one);
        }
        // Frobenius is additive.
        let pp = p as u64;
        prop_assert_eq!(f.pow_code(f.add_codes(a, b), pp), f.add_codes(f.pow_code(a, pp), f.pow_code(b, pp)));
    }

    #[test]
    fn trace_is_base_linear(
        (p, e, m) in prop::sample::select(vec![(2u32, 1u32, 5u32), (2, 2, 3), (3, 1, 4), (3, 2, 2), (5, 1, 3), (7, 1, 2)]),
        seeds in prop::array::uniform3(any::<u32>()),
    ) {
        let ext = make_extension(p, e, m).unwrap();
        let base = ext.base_field().unwrap().clone();
        let x = seeds[0] % ext.order();
        let y = seeds[1] % ext.order();
        let c = base.elem(seeds[2] % base.order()).unwrap();
        let tx = ext.trace_code(x).unwrap();
        let ty = ext.trace_code(y).unwrap();
        prop_assert_eq!(ext.trace_code(ext.add_codes(x, y)).unwrap(), base.add_codes(tx, ty));
        let cx = ext.mul_codes(ext.embed_base(c).unwrap().code(), x);
        prop_assert_eq!(ext.trace_code(cx).unwrap(), base.mul_codes(c.code(), tx));
        // Trace is Frobenius-invariant.
        let q = base.order() as u64;
        prop_assert_eq!(ext.trace_code(ext.pow_code(x, q)).unwrap(), tx);
    }

    #[test]
    fn largest_remainder_sums_to_q(q in 1u64..500, raw in prop::collection::vec(0.01f64..1.0, 1..8)) {
        let total: f64 = raw.iter().sum();
        let w: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let counts = largest_remainder(q, &w);
        prop_assert_eq!(counts.iter().sum::<u64>(), q);
        for (c, wi) in counts.iter().zip(&w) {
            prop_assert!((*c as f64 - wi * q as f64).abs() < 1.0 + 1e-9);
        }
    }

    #[test]
    fn monomial_enumeration_counts(d in 1usize..7, t in 0usize..7) {
        let all: Vec<Monomial> = enumerate_monomials(d, t).collect();
        prop_assert_eq!(all.len() as u128, monomial_count(d, t));
        prop_assert!(all.iter().all(|m| m.dim() == d && m.degree() as usize <= t));
        let mut sorted = all.clone();
        sorted.sort_by(|a, b| a.exponents().cmp(b.exponents()));
        sorted.dedup();
        prop_assert_eq!(sorted.len(), all.len());
    }

    #[test]
    fn product_moments_factor(d in 1usize..=4, m in 3usize..6, exps in prop::collection::vec(0u32..5, 4)) {
        let rule = hilbert_kamke_rule(m).unwrap();
        let design = product_design(&rule, d, &Budget::default()).unwrap();
        let mono = Monomial::new(exps[..d].to_vec());
        let want: f64 = mono.exponents().iter().map(|&k| rule.moment(k)).product();
        let got = design_moment(&design, &mono);
        prop_assert!((got - want).abs() < 1e-12 * want.abs().max(1.0), "{} vs {}", got, want);
    }

    #[test]
    fn punctured_trace_codes_keep_strength(
        (q, m, t) in prop::sample::select(vec![(2u64, 3u32, 3usize), (3, 2, 3), (3, 2, 4), (4, 2, 3), (5, 1, 4)]),
        mask in any::<u64>(),
    ) {
        let g = trace_code_generators(q, m, t).unwrap();
        let cols: Vec<usize> = (0..g.k_cols()).filter(|j| mask >> (j % 64) & 1 == 1).collect();
        prop_assume!(cols.len() >= t);
        let p = puncture(&g, &cols, t).unwrap();
        let budget = Budget::default();
        prop_assert!(verify_strength_linear(&p, t, &budget).unwrap().passed);
        let oa = OrthogonalArray::from_generator(p);
        prop_assert!(verify_strength_exhaustive(&oa, t, &budget).unwrap().passed);
    }
}

#[test]
fn trace_fibers_are_balanced() {
    for (p, e, m) in [
        (2u32, 1u32, 6u32),
        (2, 2, 3),
        (3, 1, 4),
        (3, 2, 2),
        (5, 1, 3),
        (7, 1, 2),
        (2, 3, 2),
    ] {
        let ext = make_extension(p, e, m).unwrap();
        let base_q = ext.base_field().unwrap().order();
        let mut counts = vec![0u32; base_q as usize];
        for x in 0..ext.order() {
            counts[ext.trace_code(x).unwrap() as usize] += 1;
        }
        let want = ext.order() / base_q;
        assert!(
            counts.iter().all(|&c| c == want),
            "GF({p}^{e})^{m}: {counts:?}"
        );
    }
}
