//! Moment verification of weighted designs, Hilbert identities and the
//! induced isometric embeddings.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::budget::{binomial, Budget};
use crate::designs::{row_weight, DesignStorage, RowWeights, WeightedDesign, WeightedPoints};
use crate::error::{Error, Result};
use crate::numeric::{double_factorial_odd, pow_u, rational_to_f64, CompensatedSum};
use crate::oa::OrthogonalArray;
use crate::rules1d::MeasureTag;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Monomial {
    exponents: Vec<u32>,
}

impl Monomial {
    pub fn new(exponents: Vec<u32>) -> Self {
        Monomial { exponents }
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }

    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    /// Evaluates `x^exponents`, multiplying factors in coordinate order.
    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut prod = 1.0;
        for (&xi, &e) in x.iter().zip(&self.exponents) {
            if e > 0 {
                prod *= pow_u(xi, e);
            }
        }
        prod
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, &e) in self.exponents.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if !first {
                f.write_str("*")?;
            }
            first = false;
            write!(f, "x{}", i + 1)?;
            if e > 1 {
                write!(f, "^{e}")?;
            }
        }
        if first {
            f.write_str("1")?;
        }
        Ok(())
    }
}

/// Monomials of total degree `<= t` in `d` variables, graded
/// lexicographically: by degree, then with larger leading exponents first.
pub fn enumerate_monomials(d: usize, t: usize) -> MonomialIter {
    MonomialIter {
        d,
        t: t as u32,
        cur: (d > 0).then(|| vec![0; d]),
        remaining: monomial_count(d, t),
    }
}

/// `C(d + t, t)`.
pub fn monomial_count(d: usize, t: usize) -> u128 {
    if d == 0 {
        return 1;
    }
    binomial((d + t) as u128, t as u128)
}

pub struct MonomialIter {
    d: usize,
    t: u32,
    cur: Option<Vec<u32>>,
    remaining: u128,
}

impl Iterator for MonomialIter {
    type Item = Monomial;

    fn next(&mut self) -> Option<Monomial> {
        let out = self.cur.take()?;
        self.remaining -= 1;
        let mut e = out.clone();
        let d = self.d;
        // rightmost non-final position holding mass
        match (0..d.saturating_sub(1)).rev().find(|&j| e[j] > 0) {
            Some(j) => {
                let tail: u32 = e[j + 1..].iter().sum();
                e[j] -= 1;
                e[j + 1] = tail + 1;
                e[j + 2..].iter_mut().for_each(|v| *v = 0);
                self.cur = Some(e);
            }
            None => {
                let deg = e[d - 1] + 1;
                if deg <= self.t {
                    e.iter_mut().for_each(|v| *v = 0);
                    e[0] = deg;
                    self.cur = Some(e);
                }
            }
        }
        Some(Monomial { exponents: out })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.remaining.min(usize::MAX as u128) as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for MonomialIter {}

/// Exact moment of a monomial under the product measure `measure^{⊗d}`.
pub fn measure_moment(measure: &MeasureTag, mono: &Monomial) -> Result<BigRational> {
    mono.exponents()
        .iter()
        .try_fold(BigRational::one(), |acc, &e| {
            if acc.is_zero() {
                return Some(acc);
            }
            measure.moment(e).map(|m| acc * m)
        })
        .ok_or_else(|| Error::InvalidParameter(format!("the measure has no moment for {mono}")))
}

/// `Σ w(x) x^mono` with compensated summation, streaming the design.
pub fn design_moment(design: &WeightedDesign, mono: &Monomial) -> f64 {
    MomentEngine::streaming(design).moment(mono)
}

/// Evaluates design moments; factored designs use per-symbol power tables so
/// that a run costs one multiplication per nonzero exponent.
struct MomentEngine<'a> {
    source: Source<'a>,
}

enum Source<'a> {
    Explicit {
        points: &'a [Vec<f64>],
        weights: &'a [f64],
    },
    Factored {
        d: usize,
        oa: &'a OrthogonalArray,
        runs: Option<Vec<u32>>,
        symbol_map: &'a [f64],
        row_weights: &'a RowWeights,
        uniform: f64,
    },
}

/// Cap on symbols held in memory when caching factored runs.
const RUN_CACHE_CELLS: u128 = 1 << 26;

impl<'a> MomentEngine<'a> {
    fn streaming(design: &'a WeightedDesign) -> Self {
        Self::build(design, false, &Budget::default())
    }

    fn build(design: &'a WeightedDesign, cache_runs: bool, budget: &Budget) -> Self {
        let source = match design.storage() {
            DesignStorage::Explicit { points, weights } => Source::Explicit { points, weights },
            DesignStorage::Factored {
                oa,
                symbol_map,
                row_weights,
                ..
            } => {
                let cells = oa.n_runs().saturating_mul(oa.k() as u128);
                let runs =
                    (cache_runs && oa.n_runs() <= budget.max_rows && cells <= RUN_CACHE_CELLS)
                        .then(|| oa.materialize(budget.max_rows).ok())
                        .flatten();
                Source::Factored {
                    d: oa.k(),
                    oa,
                    runs,
                    symbol_map,
                    row_weights,
                    uniform: 1.0 / oa.n_runs() as f64,
                }
            }
        };
        MomentEngine { source }
    }

    fn moment(&self, mono: &Monomial) -> f64 {
        match &self.source {
            Source::Explicit { points, weights } => points
                .iter()
                .zip(weights.iter())
                .map(|(p, &w)| w * mono.eval(p))
                .collect::<CompensatedSum>()
                .value(),
            Source::Factored {
                d,
                oa,
                runs,
                symbol_map,
                row_weights,
                uniform,
            } => {
                let tables: Vec<(usize, Vec<f64>)> = mono
                    .exponents()
                    .iter()
                    .enumerate()
                    .filter(|(_, &e)| e > 0)
                    .map(|(j, &e)| (j, symbol_map.iter().map(|&x| pow_u(x, e)).collect()))
                    .collect();
                let mut sum = CompensatedSum::new();
                let mut visit = |run: &[u32]| {
                    let mut prod = 1.0;
                    for (j, tab) in &tables {
                        prod *= tab[run[*j] as usize];
                    }
                    sum.add(row_weight(row_weights, run, *uniform) * prod);
                };
                match runs {
                    Some(flat) => flat.chunks_exact(*d).for_each(&mut visit),
                    None => oa.for_each_run(&mut visit),
                }
                sum.value()
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TolerancePolicy {
    /// Bound on `|computed|` when the exact moment is zero.
    pub abs_tol: f64,
    /// Bound on `|computed - exact| / |exact|` otherwise.
    pub rel_tol: f64,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        TolerancePolicy {
            abs_tol: 1e-10,
            rel_tol: 1e-9,
        }
    }
}

impl TolerancePolicy {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Self {
        TolerancePolicy { abs_tol, rel_tol }
    }

    /// Error divided by its allowance; `<= 1` passes.
    fn badness(&self, exact: f64, computed: f64) -> f64 {
        let err = (computed - exact).abs();
        if exact == 0.0 {
            err / self.abs_tol
        } else {
            err / (exact.abs() * self.rel_tol)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonomialDiscrepancy {
    pub monomial: Monomial,
    pub exact: f64,
    pub computed: f64,
    pub abs_error: f64,
    /// Absent when the exact moment is zero.
    pub rel_error: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub degree_checked: usize,
    pub dim: usize,
    pub n_points: u128,
    /// All monomials of degree `<= degree_checked`.
    pub monomial_count: u128,
    pub monomials_checked: usize,
    /// False when only a seeded random subset of monomials was compared.
    pub exhaustive: bool,
    pub sample_seed: Option<u64>,
    pub max_abs_error: f64,
    pub max_rel_error: f64,
    pub worst_monomial: Option<Monomial>,
    pub failures: usize,
    pub passed: bool,
    pub tolerance_policy: TolerancePolicy,
    /// Original weight total if the design was rescaled on ingest.
    pub rescaled_from: Option<f64>,
    /// Up to ten monomials with the largest error relative to tolerance.
    pub worst: Vec<MonomialDiscrepancy>,
}

#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    /// Compare only this many randomly chosen monomials.
    pub sample: Option<usize>,
    pub seed: u64,
    pub budget: Budget,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            sample: None,
            seed: 0x5eed,
            budget: Budget::default(),
        }
    }
}

const WORST_KEPT: usize = 10;

/// Compares design moments with exact measure moments for every monomial of
/// degree `<= t` (or a seeded sample of them).
pub fn verify_design(
    design: &WeightedDesign,
    t: usize,
    policy: TolerancePolicy,
    opts: &VerifyOptions,
) -> Result<VerificationReport> {
    let d = design.dim();
    let count = monomial_count(d, t);
    let sampled = opts.sample.filter(|&s| (s as u128) < count);
    let monomials: Vec<Monomial> = match sampled {
        None => {
            if count > opts.budget.max_monomials {
                return Err(Error::BudgetExceeded {
                    what: "exhaustive monomial verification",
                    required: count,
                    cap: opts.budget.max_monomials,
                });
            }
            enumerate_monomials(d, t).collect()
        }
        Some(s) => {
            if count > usize::MAX as u128 {
                return Err(Error::BudgetExceeded {
                    what: "monomial sampling",
                    required: count,
                    cap: usize::MAX as u128,
                });
            }
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            let mut picks = rand::seq::index::sample(&mut rng, count as usize, s).into_vec();
            picks.sort_unstable();
            let mut next = picks.into_iter().peekable();
            enumerate_monomials(d, t)
                .enumerate()
                .filter_map(|(i, m)| {
                    (next.peek() == Some(&i)).then(|| {
                        next.next();
                        m
                    })
                })
                .collect()
        }
    };
    let exact: Vec<f64> = monomials
        .iter()
        .map(|m| measure_moment(design.measure(), m).map(|r| rational_to_f64(&r)))
        .collect::<Result<_>>()?;
    let engine = MomentEngine::build(design, true, &opts.budget);
    let computed: Vec<f64> = monomials.par_iter().map(|m| engine.moment(m)).collect();

    let mut max_abs = 0.0f64;
    let mut max_rel = 0.0f64;
    let mut failures = 0;
    let mut ranked: Vec<(f64, usize)> = Vec::with_capacity(monomials.len());
    for (i, (&e, &c)) in exact.iter().zip(&computed).enumerate() {
        let err = (c - e).abs();
        max_abs = max_abs.max(err);
        if e != 0.0 {
            max_rel = max_rel.max(err / e.abs());
        }
        let bad = policy.badness(e, c);
        if !(bad <= 1.0) {
            failures += 1;
        }
        ranked.push((if bad.is_nan() { f64::INFINITY } else { bad }, i));
    }
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let worst: Vec<MonomialDiscrepancy> = ranked
        .iter()
        .take(WORST_KEPT)
        .map(|&(_, i)| {
            let (e, c) = (exact[i], computed[i]);
            MonomialDiscrepancy {
                monomial: monomials[i].clone(),
                exact: e,
                computed: c,
                abs_error: (c - e).abs(),
                rel_error: (e != 0.0).then(|| (c - e).abs() / e.abs()),
            }
        })
        .collect();
    Ok(VerificationReport {
        degree_checked: t,
        dim: d,
        n_points: design.n_points(),
        monomial_count: count,
        monomials_checked: monomials.len(),
        exhaustive: sampled.is_none(),
        sample_seed: sampled.map(|_| opts.seed),
        max_abs_error: max_abs,
        max_rel_error: max_rel,
        worst_monomial: worst.first().map(|w| w.monomial.clone()),
        failures,
        passed: failures == 0,
        tolerance_policy: policy,
        rescaled_from: design.rescaled_from(),
        worst,
    })
}

/// `c_{d,r}`, the average of `ω_1^{2r}` over the unit sphere in R^d:
/// `(2r-1)!! / (d (d+2) ··· (d+2r-2))`.
pub fn sphere_constant(d: usize, r: u32) -> BigRational {
    let denom = (0..r).fold(BigInt::one(), |acc, i| {
        acc * BigInt::from(d as u64 + 2 * i as u64)
    });
    BigRational::new(double_factorial_odd(r), denom)
}

/// Exact average of `ω^α` over the unit sphere in `R^{|α|}`.
pub fn sphere_monomial_moment(exponents: &[u32]) -> BigRational {
    if exponents.iter().any(|e| e % 2 == 1) {
        return BigRational::zero();
    }
    let d = exponents.len() as u64;
    let half: u32 = exponents.iter().map(|e| e / 2).sum();
    let numer = exponents
        .iter()
        .fold(BigInt::one(), |acc, &e| acc * double_factorial_odd(e / 2));
    let denom = (0..half as u64).fold(BigInt::one(), |acc, i| acc * BigInt::from(d + 2 * i));
    BigRational::new(numer, denom)
}

const ON_SPHERE_TOL: f64 = 1e-10;

fn check_on_sphere(sph: &WeightedPoints) -> Result<()> {
    if sph.is_empty() || sph.points.len() != sph.weights.len() {
        return Err(Error::InvalidParameter(
            "spherical design needs matching points and weights".into(),
        ));
    }
    for (i, p) in sph.points.iter().enumerate() {
        let n = p.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (n - 1.0).abs() > ON_SPHERE_TOL {
            return Err(Error::Precondition(format!(
                "point {i} has norm {n}, not 1"
            )));
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HilbertReport {
    pub dim: usize,
    pub r: u32,
    /// Random test vectors, in addition to the standard basis.
    pub samples: usize,
    pub seed: u64,
    pub max_rel_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

fn test_vectors(d: usize, samples: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<Vec<f64>> = (0..d)
        .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _ in 0..samples {
        out.push((0..d).map(|_| rng.random_range(-1.0..1.0)).collect());
    }
    out
}

/// Checks `c_{d,r} (ΣX_i²)^r = Σ w_i ⟨y_i, X⟩^{2r}` at the standard basis
/// vectors and `samples` seeded random vectors.
pub fn check_hilbert_identity(
    sph: &WeightedPoints,
    r: u32,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<HilbertReport> {
    check_on_sphere(sph)?;
    let d = sph.dim();
    let c = rational_to_f64(&sphere_constant(d, r));
    let mut worst = 0.0f64;
    for x in test_vectors(d, samples, seed) {
        let norm_sq: f64 = x.iter().map(|v| v * v).sum();
        let lhs = c * pow_u(norm_sq, r);
        let rhs = sph
            .points
            .iter()
            .zip(&sph.weights)
            .map(|(y, &w)| {
                let dot: f64 = y.iter().zip(&x).map(|(a, b)| a * b).sum();
                w * pow_u(dot, 2 * r)
            })
            .collect::<CompensatedSum>()
            .value();
        worst = worst.max((lhs - rhs).abs() / lhs.abs());
    }
    Ok(HilbertReport {
        dim: d,
        r,
        samples,
        seed,
        max_rel_error: worst,
        tolerance: tol,
        passed: worst < tol,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphericalIndexReport {
    pub degree: u32,
    pub monomials_checked: usize,
    pub max_abs_error: f64,
    pub passed: bool,
}

/// Checks `Σ w_i f(y_i) = ∫ f dν` for every homogeneous monomial `f` of
/// degree `degree`.
pub fn verify_spherical_index(
    sph: &WeightedPoints,
    degree: u32,
    abs_tol: f64,
) -> Result<SphericalIndexReport> {
    check_on_sphere(sph)?;
    let d = sph.dim();
    let mut worst = 0.0f64;
    let mut n = 0;
    for mono in enumerate_monomials(d, degree as usize).filter(|m| m.degree() == degree) {
        let exact = rational_to_f64(&sphere_monomial_moment(mono.exponents()));
        worst = worst.max((sph.moment(mono.exponents()) - exact).abs());
        n += 1;
    }
    Ok(SphericalIndexReport {
        degree,
        monomials_checked: n,
        max_abs_error: worst,
        passed: worst < abs_tol,
    })
}

/// Rows `(w_i / c_{d,r})^{1/(2r)} y_i` of the linear map
/// `ω ↦ (⟨row_i, ω⟩)_i`, an isometry `ℓ_2^d → ℓ_{2r}^N`.
#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    pub r: u32,
    pub rows: Vec<Vec<f64>>,
}

pub const EMBED_CHECK_SAMPLES: usize = 100;
pub const EMBED_CHECK_SEED: u64 = 0xe3b;

/// Builds the embedding after confirming the Hilbert identity.
pub fn embedding_map(sph: &WeightedPoints, r: u32, tol: f64) -> Result<Embedding> {
    if r == 0 {
        return Err(Error::InvalidParameter("embedding needs r >= 1".into()));
    }
    let rep = check_hilbert_identity(sph, r, EMBED_CHECK_SAMPLES, EMBED_CHECK_SEED, tol)?;
    if !rep.passed {
        return Err(Error::Precondition(format!(
            "Hilbert identity fails at r = {r} (relative error {:e})",
            rep.max_rel_error
        )));
    }
    let c = rational_to_f64(&sphere_constant(sph.dim(), r));
    let rows = sph
        .points
        .iter()
        .zip(&sph.weights)
        .map(|(y, &w)| {
            let s = (w / c).powf(1.0 / (2 * r) as f64);
            y.iter().map(|v| s * v).collect()
        })
        .collect();
    Ok(Embedding { r, rows })
}

impl Embedding {
    pub fn dim(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn apply(&self, omega: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().zip(omega).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Largest `|‖ι(ω)‖_{2r} - ‖ω‖_2| / ‖ω‖_2` over the basis vectors and
    /// `samples` seeded random vectors.
    pub fn max_distortion(&self, samples: usize, seed: u64) -> f64 {
        let p = 2 * self.r;
        test_vectors(self.dim(), samples, seed)
            .iter()
            .map(|x| {
                let n2 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                let img = self.apply(x);
                let np = img
                    .iter()
                    .map(|v| pow_u(v.abs(), p))
                    .collect::<CompensatedSum>()
                    .value()
                    .powf(1.0 / p as f64);
                (np - n2).abs() / n2
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::budget::Budget;
    use crate::codes::trace_code_generators;
    use crate::designs::{gaussian_to_spherical, product_design, reduce_by_oa};
    use crate::numeric::rational;
    use crate::oa::verify_strength_linear;
    use crate::rules1d::{chebyshev_rule, hilbert_kamke_rule, Rule1D, RuleWeights};

    #[test]
    fn monomial_counts_and_order() {
        let v: Vec<Vec<u32>> = enumerate_monomials(2, 1)
            .map(|m| m.exponents().to_vec())
            .collect();
        assert_eq!(v, vec![vec![0, 0], vec![1, 0], vec![0, 1]]);
        let v: Vec<Vec<u32>> = enumerate_monomials(2, 2)
            .map(|m| m.exponents().to_vec())
            .collect();
        assert_eq!(v[3..], [vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert_eq!(enumerate_monomials(7, 5).count(), 792);
        assert_eq!(enumerate_monomials(9, 5).count(), 2002);
        assert_eq!(enumerate_monomials(1, 4).count(), 5);
        for (d, t) in [(3usize, 4usize), (5, 3), (4, 0)] {
            let all: Vec<Monomial> = enumerate_monomials(d, t).collect();
            assert_eq!(all.len() as u128, monomial_count(d, t));
            let set: std::collections::HashSet<_> = all.iter().collect();
            assert_eq!(set.len(), all.len());
            assert!(all.windows(2).all(|w| w[0].degree() <= w[1].degree()));
        }
        assert_eq!(enumerate_monomials(3, 2).len(), 10);
    }

    #[test]
    fn monomial_display() {
        assert_eq!(Monomial::new(vec![2, 0, 1]).to_string(), "x1^2*x3");
        assert_eq!(Monomial::new(vec![0, 0]).to_string(), "1");
    }

    #[test]
    fn measure_moments() {
        let g = MeasureTag::Gaussian;
        assert_eq!(
            measure_moment(&g, &Monomial::new(vec![2, 2])).unwrap(),
            rational(1, 4)
        );
        assert_eq!(
            measure_moment(&g, &Monomial::new(vec![0, 0, 0])).unwrap(),
            rational(1, 1)
        );
        assert_eq!(
            measure_moment(&g, &Monomial::new(vec![2, 3])).unwrap(),
            rational(0, 1)
        );
        let c = MeasureTag::custom(vec![rational(1, 1), rational(0, 1)]).unwrap();
        assert!(measure_moment(&c, &Monomial::new(vec![2])).is_err());
        assert!(
            measure_moment(&MeasureTag::Chebyshev, &Monomial::new(vec![0, 1, 2]))
                .unwrap()
                .is_zero()
        );
    }

    #[test]
    fn design_moment_examples() {
        let single =
            WeightedDesign::explicit(vec![vec![2.0, -3.0]], vec![1.0], MeasureTag::Gaussian, 0)
                .unwrap();
        assert_eq!(design_moment(&single, &Monomial::new(vec![2, 1])), -12.0);
        let hk = WeightedDesign::from_rule(&hilbert_kamke_rule(3).unwrap());
        assert!((design_moment(&hk, &Monomial::new(vec![2])) - 0.5).abs() < 1e-14);
        for k in [1, 3, 5, 7] {
            assert!(design_moment(&hk, &Monomial::new(vec![k])).abs() < 1e-13);
        }
    }

    #[test]
    fn hk3_is_a_five_but_not_six_design() {
        let hk = WeightedDesign::from_rule(&hilbert_kamke_rule(3).unwrap());
        let rep = verify_design(
            &hk,
            5,
            TolerancePolicy::default(),
            &VerifyOptions::default(),
        )
        .unwrap();
        assert!(rep.passed && rep.max_rel_error < 1e-12, "{rep:?}");
        assert_eq!(rep.monomials_checked, 6);
        let rep = verify_design(
            &hk,
            6,
            TolerancePolicy::default(),
            &VerifyOptions::default(),
        )
        .unwrap();
        assert!(!rep.passed);
        assert_eq!(rep.worst_monomial, Some(Monomial::new(vec![6])));
        assert_eq!(rep.failures, 1);
    }

    #[test]
    fn product_moments_factor() {
        let rule = chebyshev_rule(3).unwrap();
        let one = WeightedDesign::from_rule(&rule);
        for d in 1..=4 {
            let p = product_design(&rule, d, &Budget::default()).unwrap();
            for mono in enumerate_monomials(d, 6) {
                let prod: f64 = mono
                    .exponents()
                    .iter()
                    .map(|&e| design_moment(&one, &Monomial::new(vec![e])))
                    .product();
                assert!((design_moment(&p, &mono) - prod).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn factored_matches_explicit_bit_for_bit() {
        let rule = chebyshev_rule(3).unwrap();
        let g = trace_code_generators(3, 2, 3).unwrap();
        let rep = verify_strength_linear(&g, 3, &Budget::default()).unwrap();
        let oa =
            OrthogonalArray::from_generator(g).with_certification(rep.certification().unwrap());
        let fact = reduce_by_oa(&rule, &oa).unwrap();
        let expl = fact.materialize(&Budget::default()).unwrap();
        let cached = MomentEngine::build(&fact, true, &Budget::default());
        for mono in enumerate_monomials(9, 4) {
            let a = design_moment(&fact, &mono);
            assert_eq!(a.to_bits(), design_moment(&expl, &mono).to_bits());
            assert_eq!(a.to_bits(), cached.moment(&mono).to_bits());
        }
    }

    #[test]
    fn oversized_verification_is_refused_or_sampled() {
        let rule = chebyshev_rule(2).unwrap();
        let d = product_design(&rule, 6, &Budget::default()).unwrap();
        let tight = VerifyOptions {
            budget: Budget {
                max_monomials: 50,
                ..Budget::default()
            },
            ..VerifyOptions::default()
        };
        let err = verify_design(&d, 3, TolerancePolicy::default(), &tight).unwrap_err();
        assert!(err.is_refusal());
        let sampled = VerifyOptions {
            sample: Some(20),
            ..tight
        };
        let rep = verify_design(&d, 3, TolerancePolicy::default(), &sampled).unwrap();
        assert!(!rep.exhaustive && rep.passed);
        assert_eq!(rep.monomials_checked, 20);
        let again = verify_design(&d, 3, TolerancePolicy::default(), &sampled).unwrap();
        assert_eq!(rep, again);
    }

    #[test]
    fn sphere_constants() {
        for d in 1..8 {
            assert_eq!(sphere_constant(d, 0), rational(1, 1));
            assert_eq!(sphere_constant(d, 1), rational(1, d as i64));
            let mut c = rational(1, 1);
            for r in 1..6u32 {
                c = c * rational(2 * r as i64 - 1, (d + 2 * r as usize - 2) as i64);
                assert_eq!(sphere_constant(d, r), c);
            }
        }
        assert_eq!(sphere_constant(3, 2), rational(1, 5));
        assert_eq!(sphere_monomial_moment(&[2, 2, 0]), rational(1, 15));
        assert_eq!(sphere_monomial_moment(&[4, 0, 0]), sphere_constant(3, 2));
    }

    fn circle3() -> WeightedPoints {
        let points = (0..3)
            .map(|k| {
                let a = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
                vec![a.cos(), a.sin()]
            })
            .collect();
        WeightedPoints {
            points,
            weights: vec![1.0 / 3.0; 3],
        }
    }

    #[test]
    fn hilbert_identity_examples() {
        let c = circle3();
        let rep = check_hilbert_identity(&c, 1, 100, 7, 1e-12).unwrap();
        assert!(rep.passed, "{rep:?}");
        assert!(check_hilbert_identity(&c, 0, 10, 7, 1e-12).unwrap().passed);
        // three points carry index 4 but not 6 on the circle
        assert!(check_hilbert_identity(&c, 2, 100, 7, 1e-12).unwrap().passed);
        assert!(!check_hilbert_identity(&c, 3, 100, 7, 1e-10).unwrap().passed);
        let pair = WeightedPoints {
            points: vec![vec![1.0], vec![-1.0]],
            weights: vec![0.5, 0.5],
        };
        for r in 0..5 {
            assert!(
                check_hilbert_identity(&pair, r, 10, 1, 1e-14)
                    .unwrap()
                    .passed
            );
        }
        let off = WeightedPoints {
            points: vec![vec![1.1]],
            weights: vec![1.0],
        };
        assert!(check_hilbert_identity(&off, 1, 1, 1, 1e-10).is_err());
    }

    #[test]
    fn embeddings() {
        let pair = WeightedPoints {
            points: vec![vec![1.0], vec![-1.0]],
            weights: vec![0.5, 0.5],
        };
        let e = embedding_map(&pair, 1, 1e-12).unwrap();
        let h = 0.5f64.sqrt();
        assert!((e.rows[0][0] - h).abs() < 1e-15 && (e.rows[1][0] + h).abs() < 1e-15);
        assert!(e.max_distortion(10, 3) < 1e-15);
        let e = embedding_map(&circle3(), 1, 1e-12).unwrap();
        assert_eq!(e.rows.len(), 3);
        assert!(e.max_distortion(100, 3) < 1e-10);
        for row in &e.rows {
            let n = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((n - (2.0f64 / 3.0).sqrt()).abs() < 1e-14);
        }
        assert!(embedding_map(&circle3(), 0, 1e-12).is_err());
        assert!(embedding_map(&circle3(), 3, 1e-10).is_err());
    }

    #[test]
    fn hilbert_identity_agrees_with_index_check() {
        let h = 0.5f64.sqrt();
        let two = Rule1D::new(
            vec![-h, h],
            RuleWeights::Real(vec![0.5, 0.5]),
            MeasureTag::Gaussian,
            3,
        )
        .unwrap();
        let hk = hilbert_kamke_rule(3).unwrap();
        let mut fixtures = Vec::new();
        for d in 1..=3 {
            fixtures.push(
                gaussian_to_spherical(
                    &product_design(&two, d, &Budget::default()).unwrap(),
                    1,
                    &Budget::default(),
                )
                .unwrap(),
            );
            for r in 1..=2 {
                fixtures.push(
                    gaussian_to_spherical(
                        &product_design(&hk, d, &Budget::default()).unwrap(),
                        r,
                        &Budget::default(),
                    )
                    .unwrap(),
                );
            }
        }
        fixtures.push(circle3());
        let mut outcomes = Vec::new();
        for sph in &fixtures {
            for r in 1..=3u32 {
                let a = check_hilbert_identity(sph, r, 50, 11, 1e-10)
                    .unwrap()
                    .passed;
                let b = verify_spherical_index(sph, 2 * r, 1e-10).unwrap().passed;
                assert_eq!(a, b, "d = {}, r = {r}", sph.dim());
                outcomes.push(a);
            }
        }
        assert!(outcomes.contains(&true) && outcomes.contains(&false));
    }
}
