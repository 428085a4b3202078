//! Weighted designs in R^d: product rules, orthogonal-array reductions,
//! block-design replacement, group orbits, and the Gaussian-to-spherical map.

use std::collections::{HashMap, HashSet, VecDeque};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::budget::{binomial, Budget, Combinations};
use crate::error::{Error, Result};
use crate::gf::make_field;
use crate::numeric::{pow_u, CompensatedSum};
use crate::oa::{full_factorial, OrthogonalArray};
use crate::rules1d::{MeasureTag, Rule1D, RuleWeights};

/// How runs of a factored design are weighted.
#[derive(Clone, Debug, PartialEq)]
pub enum RowWeights {
    /// Every run carries `1/N`.
    Uniform,
    /// A run's weight is the product of per-symbol weights over its entries.
    Product(Vec<f64>),
}

#[derive(Clone, Debug)]
pub enum DesignStorage {
    Explicit {
        points: Vec<Vec<f64>>,
        weights: Vec<f64>,
    },
    /// Point `i` is `symbol_map` applied to run `i` of `oa`.
    Factored {
        rule: Rule1D,
        oa: OrthogonalArray,
        symbol_map: Vec<f64>,
        row_weights: RowWeights,
    },
}

#[derive(Clone, Debug)]
pub struct WeightedDesign {
    dim: usize,
    storage: DesignStorage,
    measure: MeasureTag,
    claimed_degree: usize,
    rescaled_from: Option<f64>,
}

const WEIGHT_SUM_TOL: f64 = 1e-12;

impl WeightedDesign {
    /// Builds an explicit design. Weights must be positive; if they do not
    /// sum to 1 they are rescaled and the original total is remembered.
    pub fn explicit(
        points: Vec<Vec<f64>>,
        weights: Vec<f64>,
        measure: MeasureTag,
        claimed_degree: usize,
    ) -> Result<Self> {
        let dim = points.first().map(Vec::len).unwrap_or(0);
        if points.is_empty() || dim == 0 {
            return Err(Error::InvalidParameter(
                "a design needs at least one point of dimension >= 1".into(),
            ));
        }
        if weights.len() != points.len() {
            return Err(Error::InvalidParameter(format!(
                "{} weights for {} points",
                weights.len(),
                points.len()
            )));
        }
        if let Some(i) = points.iter().position(|p| p.len() != dim) {
            return Err(Error::InvalidParameter(format!(
                "point {i} has dimension {}, expected {dim}",
                points[i].len()
            )));
        }
        if points.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(
                "design coordinates must be finite".into(),
            ));
        }
        if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParameter(
                "design weights must be positive and finite".into(),
            ));
        }
        let total = weights.iter().copied().collect::<CompensatedSum>().value();
        let (weights, rescaled_from) = if (total - 1.0).abs() <= WEIGHT_SUM_TOL {
            (weights, None)
        } else {
            (weights.iter().map(|w| w / total).collect(), Some(total))
        };
        Ok(WeightedDesign {
            dim,
            storage: DesignStorage::Explicit { points, weights },
            measure,
            claimed_degree,
            rescaled_from,
        })
    }

    /// Builds a factored design; `symbol_map` must have one entry per OA level.
    pub fn factored(
        rule: Rule1D,
        oa: OrthogonalArray,
        symbol_map: Vec<f64>,
        row_weights: RowWeights,
        claimed_degree: usize,
    ) -> Result<Self> {
        if symbol_map.len() != oa.q() as usize {
            return Err(Error::InvalidParameter(format!(
                "symbol map has {} entries for {} levels",
                symbol_map.len(),
                oa.q()
            )));
        }
        if oa.k() == 0 {
            return Err(Error::InvalidParameter(
                "a design needs dimension >= 1".into(),
            ));
        }
        if let Some(x) = symbol_map.iter().find(|x| !rule.nodes().contains(x)) {
            return Err(Error::InvalidParameter(format!(
                "symbol value {x} is not a node of the rule"
            )));
        }
        if let RowWeights::Product(w) = &row_weights {
            if w.len() != symbol_map.len() {
                return Err(Error::InvalidParameter(
                    "per-symbol weights must match the symbol map".into(),
                ));
            }
        }
        Ok(WeightedDesign {
            dim: oa.k(),
            measure: rule.measure().clone(),
            storage: DesignStorage::Factored {
                rule,
                oa,
                symbol_map,
                row_weights,
            },
            claimed_degree,
            rescaled_from: None,
        })
    }

    /// A one-dimensional rule viewed as a design.
    pub fn from_rule(rule: &Rule1D) -> Self {
        WeightedDesign {
            dim: 1,
            storage: DesignStorage::Explicit {
                points: rule.nodes().iter().map(|&x| vec![x]).collect(),
                weights: rule.weights_f64(),
            },
            measure: rule.measure().clone(),
            claimed_degree: rule.degree(),
            rescaled_from: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn storage(&self) -> &DesignStorage {
        &self.storage
    }

    pub fn measure(&self) -> &MeasureTag {
        &self.measure
    }

    pub fn claimed_degree(&self) -> usize {
        self.claimed_degree
    }

    /// Original weight total when the input was rescaled to sum to 1.
    pub fn rescaled_from(&self) -> Option<f64> {
        self.rescaled_from
    }

    pub fn is_factored(&self) -> bool {
        matches!(self.storage, DesignStorage::Factored { .. })
    }

    pub fn n_points(&self) -> u128 {
        match &self.storage {
            DesignStorage::Explicit { points, .. } => points.len() as u128,
            DesignStorage::Factored { oa, .. } => oa.n_runs(),
        }
    }

    /// Streams `(point, weight)` pairs in storage order.
    pub fn for_each_point(&self, mut f: impl FnMut(&[f64], f64)) {
        match &self.storage {
            DesignStorage::Explicit { points, weights } => {
                points.iter().zip(weights).for_each(|(p, &w)| f(p, w));
            }
            DesignStorage::Factored {
                oa,
                symbol_map,
                row_weights,
                ..
            } => {
                let uniform = 1.0 / oa.n_runs() as f64;
                let mut buf = vec![0.0; self.dim];
                oa.for_each_run(|run| {
                    for (b, &s) in buf.iter_mut().zip(run) {
                        *b = symbol_map[s as usize];
                    }
                    f(&buf, row_weight(row_weights, run, uniform));
                });
            }
        }
    }

    /// Explicit copy of this design; refuses above `budget.max_rows` points.
    pub fn materialize(&self, budget: &Budget) -> Result<WeightedDesign> {
        let n = self.n_points();
        if n > budget.max_rows {
            return Err(Error::BudgetExceeded {
                what: "design materialization",
                required: n,
                cap: budget.max_rows,
            });
        }
        let mut points = Vec::with_capacity(n as usize);
        let mut weights = Vec::with_capacity(n as usize);
        self.for_each_point(|p, w| {
            points.push(p.to_vec());
            weights.push(w);
        });
        Ok(WeightedDesign {
            dim: self.dim,
            storage: DesignStorage::Explicit { points, weights },
            measure: self.measure.clone(),
            claimed_degree: self.claimed_degree,
            rescaled_from: self.rescaled_from,
        })
    }
}

/// Weight of one factored run; products are taken in coordinate order.
#[inline]
pub(crate) fn row_weight(rw: &RowWeights, run: &[u32], uniform: f64) -> f64 {
    match rw {
        RowWeights::Uniform => uniform,
        RowWeights::Product(ws) => run.iter().fold(1.0, |acc, &s| acc * ws[s as usize]),
    }
}

/// The d-fold product of a rule. Explicit while `|nodes|^d` fits the row
/// budget, otherwise factored over the streamed full factorial.
pub fn product_design(rule: &Rule1D, d: usize, budget: &Budget) -> Result<WeightedDesign> {
    if d == 0 {
        return Err(Error::InvalidParameter(
            "product dimension must be >= 1".into(),
        ));
    }
    let n = rule.len();
    let total = (n as u128).checked_pow(d as u32).unwrap_or(u128::MAX);
    let w = rule.weights_f64();
    if total <= budget.max_rows {
        let grid = full_factorial_runs(n, d);
        let mut points = Vec::with_capacity(total as usize);
        let mut weights = Vec::with_capacity(total as usize);
        for run in grid {
            points.push(run.iter().map(|&s| rule.nodes()[s]).collect());
            weights.push(run.iter().fold(1.0, |acc, &s| acc * w[s]));
        }
        return Ok(WeightedDesign {
            dim: d,
            storage: DesignStorage::Explicit { points, weights },
            measure: rule.measure().clone(),
            claimed_degree: rule.degree(),
            rescaled_from: None,
        });
    }
    let oa = full_factorial(n as u32, d)?;
    let row_weights = if rule.is_equi_weighted() {
        RowWeights::Uniform
    } else {
        RowWeights::Product(w)
    };
    WeightedDesign::factored(
        rule.clone(),
        oa,
        rule.nodes().to_vec(),
        row_weights,
        rule.degree(),
    )
}

fn full_factorial_runs(n: usize, d: usize) -> impl Iterator<Item = Vec<usize>> {
    let mut cur = Some(vec![0usize; d]);
    std::iter::from_fn(move || {
        let out = cur.take()?;
        let mut next = out.clone();
        for s in next.iter_mut().rev() {
            *s += 1;
            if *s < n {
                cur = Some(next);
                return Some(out);
            }
            *s = 0;
        }
        Some(out)
    })
}

/// Replaces the product grid of an equi-weighted `q`-node rule by the runs
/// of a certified strength-t orthogonal array with `q` levels.
pub fn reduce_by_oa(rule: &Rule1D, oa: &OrthogonalArray) -> Result<WeightedDesign> {
    if !rule.is_equi_weighted() {
        return Err(Error::Precondition(
            "reduction by an orthogonal array needs an equi-weighted rule".into(),
        ));
    }
    if rule.len() != oa.q() as usize {
        return Err(Error::Precondition(format!(
            "rule has {} nodes but the array has {} levels",
            rule.len(),
            oa.q()
        )));
    }
    let strength = oa.certified_strength().ok_or_else(|| {
        Error::Precondition("the orthogonal array carries no strength certification".into())
    })?;
    let claimed = strength.min(rule.degree());
    WeightedDesign::factored(
        rule.clone(),
        oa.clone(),
        rule.nodes().to_vec(),
        RowWeights::Uniform,
        claimed,
    )
}

/// Multiset variant: node `z_i` is assigned to `q_i` consecutive symbols, so
/// a strength-t array reproduces the rational weights `q_i / q`.
pub fn reduce_by_oa_multiset(rule: &Rule1D, oa: &OrthogonalArray) -> Result<WeightedDesign> {
    let RuleWeights::Rational { q, counts } = rule.weights() else {
        return Err(Error::Precondition(
            "multiset reduction needs rational weights q_i/q".into(),
        ));
    };
    if counts.iter().sum::<u64>() != *q {
        return Err(Error::Precondition(format!(
            "counts {counts:?} do not sum to {q}"
        )));
    }
    if *q != oa.q() as u64 {
        return Err(Error::Precondition(format!(
            "rule weights have denominator {q} but the array has {} levels",
            oa.q()
        )));
    }
    let strength = oa.certified_strength().ok_or_else(|| {
        Error::Precondition("the orthogonal array carries no strength certification".into())
    })?;
    for k in 0..=rule.degree() as u32 {
        let exact = rule.measure().moment_f64(k).unwrap_or(f64::NAN);
        let got = rule.moment(k);
        if !((got - exact).abs() <= 1e-10 * exact.abs().max(1.0)) {
            return Err(Error::Precondition(format!(
                "rule moment {k} is {got}, expected {exact}"
            )));
        }
    }
    let symbol_map: Vec<f64> = counts
        .iter()
        .zip(rule.nodes())
        .flat_map(|(&c, &z)| std::iter::repeat(z).take(c as usize))
        .collect();
    WeightedDesign::factored(
        rule.clone(),
        oa.clone(),
        symbol_map,
        RowWeights::Uniform,
        strength.min(rule.degree()),
    )
}

/// Outcome of replacing the size classes `v_k(α, β)` by the blocks of a
/// regular t-wise balanced design. Everything is exact.
#[derive(Clone, Debug)]
pub struct BlockReduction {
    pub v: usize,
    pub alpha: BigRational,
    pub beta: BigRational,
    /// Block images `(α-β)·1_B + β·1`.
    pub points: Vec<Vec<BigRational>>,
    /// `1/|blocks|` each.
    pub weights: Vec<BigRational>,
    /// `λ_{t'}` for `t' = 0..=t`.
    pub lambdas: Vec<usize>,
}

/// Checks that `blocks` (0-based subsets of `0..v`) is regular t-wise
/// balanced and maps each block to its point in `{α, β}^v`.
pub fn reduce_by_block_design(
    v: usize,
    blocks: &[Vec<usize>],
    alpha: &BigRational,
    beta: &BigRational,
    t: usize,
    budget: &Budget,
) -> Result<BlockReduction> {
    if alpha == beta {
        return Err(Error::InvalidParameter("alpha and beta must differ".into()));
    }
    if blocks.is_empty() {
        return Err(Error::InvalidParameter("the block family is empty".into()));
    }
    if t > v {
        return Err(Error::InvalidParameter(format!("t = {t} exceeds v = {v}")));
    }
    let mut sets: Vec<Vec<bool>> = Vec::with_capacity(blocks.len());
    for b in blocks {
        let mut mask = vec![false; v];
        for &i in b {
            if i >= v || mask[i] {
                return Err(Error::InvalidParameter(format!(
                    "block {b:?} is not a subset of 0..{v}"
                )));
            }
            mask[i] = true;
        }
        sets.push(mask);
    }
    let subsets: u128 = (0..=t).map(|k| binomial(v as u128, k as u128)).sum();
    if subsets > budget.max_subsets {
        return Err(Error::BudgetExceeded {
            what: "block balance check",
            required: subsets,
            cap: budget.max_subsets,
        });
    }
    let mut lambdas = Vec::with_capacity(t + 1);
    for tp in 0..=t {
        let mut expected = None;
        for sub in Combinations::new(v, tp) {
            let count = sets.iter().filter(|m| sub.iter().all(|&i| m[i])).count();
            match expected {
                None => expected = Some(count),
                Some(e) if e != count => {
                    return Err(Error::Unbalanced {
                        t_prime: tp,
                        subset: sub,
                        count,
                        expected: e,
                    })
                }
                _ => {}
            }
        }
        lambdas.push(expected.unwrap_or(0));
    }
    let w = BigRational::new(BigInt::one(), BigInt::from(blocks.len()));
    let points = sets
        .iter()
        .map(|m| {
            m.iter()
                .map(|&b| if b { alpha.clone() } else { beta.clone() })
                .collect()
        })
        .collect();
    Ok(BlockReduction {
        v,
        alpha: alpha.clone(),
        beta: beta.clone(),
        points,
        weights: vec![w; blocks.len()],
        lambdas,
    })
}

impl BlockReduction {
    /// Exact average of `x^exponents` over the blocks.
    pub fn block_average(&self, exponents: &[u32]) -> BigRational {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * exact_monomial(p, exponents))
            .fold(BigRational::zero(), |a, b| a + b)
    }

    /// Exact μ-weighted average of `x^exponents` over every subset whose
    /// size occurs among the blocks, μ giving class `k` total mass
    /// `|B_k|/|B|` spread uniformly over its `C(v, k)` members.
    pub fn class_average(&self, exponents: &[u32]) -> BigRational {
        let mut sizes: HashMap<usize, usize> = HashMap::new();
        for p in &self.points {
            *sizes
                .entry(p.iter().filter(|x| **x == self.alpha).count())
                .or_default() += 1;
        }
        let total_blocks = BigInt::from(self.points.len());
        let mut acc = BigRational::zero();
        for (&k, &count) in &sizes {
            let mu = BigRational::new(
                BigInt::from(count),
                total_blocks.clone() * BigInt::from(binomial(self.v as u128, k as u128)),
            );
            let mut class_sum = BigRational::zero();
            for sub in Combinations::new(self.v, k) {
                let mut p = vec![self.beta.clone(); self.v];
                for i in sub {
                    p[i] = self.alpha.clone();
                }
                class_sum += exact_monomial(&p, exponents);
            }
            acc += mu * class_sum;
        }
        acc
    }
}

fn exact_monomial(p: &[BigRational], exponents: &[u32]) -> BigRational {
    p.iter()
        .zip(exponents)
        .filter(|(_, &e)| e > 0)
        .fold(BigRational::one(), |acc, (x, &e)| {
            acc * num_traits::pow(x.clone(), e as usize)
        })
}

/// A set of permutations of `0..degree`; `perm[i]` is the image of `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermSet {
    degree: usize,
    perms: Vec<Vec<usize>>,
    is_group: bool,
}

impl PermSet {
    /// Validates the permutations and records whether they form a group.
    pub fn new(degree: usize, perms: Vec<Vec<usize>>) -> Result<Self> {
        for p in &perms {
            if p.len() != degree {
                return Err(Error::InvalidParameter(format!(
                    "permutation {p:?} is not of degree {degree}"
                )));
            }
            let mut seen = vec![false; degree];
            for &i in p {
                if i >= degree || std::mem::replace(&mut seen[i], true) {
                    return Err(Error::InvalidParameter(format!("{p:?} is not a bijection")));
                }
            }
        }
        let mut uniq: Vec<Vec<usize>> = Vec::with_capacity(perms.len());
        let mut seen = HashSet::new();
        for p in perms {
            if seen.insert(p.clone()) {
                uniq.push(p);
            }
        }
        let is_group = !uniq.is_empty()
            && uniq.len() <= 5000
            && uniq.iter().all(|a| {
                seen.contains(&inverse(a)) && uniq.iter().all(|b| seen.contains(&compose(a, b)))
            });
        Ok(PermSet {
            degree,
            perms: uniq,
            is_group,
        })
    }

    /// The group generated by `generators`, by breadth-first closure.
    pub fn closure(degree: usize, generators: &[Vec<usize>], cap: usize) -> Result<Self> {
        PermSet::new(degree, generators.to_vec())?;
        let id: Vec<usize> = (0..degree).collect();
        let mut seen: HashSet<Vec<usize>> = HashSet::from([id.clone()]);
        let mut order = vec![id.clone()];
        let mut queue = VecDeque::from([id]);
        while let Some(g) = queue.pop_front() {
            for s in generators {
                let h = compose(&g, s);
                if seen.insert(h.clone()) {
                    if seen.len() > cap {
                        return Err(Error::BudgetExceeded {
                            what: "permutation group closure",
                            required: seen.len() as u128,
                            cap: cap as u128,
                        });
                    }
                    order.push(h.clone());
                    queue.push_back(h);
                }
            }
        }
        Ok(PermSet {
            degree,
            perms: order,
            is_group: true,
        })
    }

    pub fn identity(degree: usize) -> Self {
        PermSet {
            degree,
            perms: vec![(0..degree).collect()],
            is_group: true,
        }
    }

    /// The full symmetric group, generated by a transposition and a d-cycle.
    pub fn symmetric(degree: usize, cap: usize) -> Result<Self> {
        if degree <= 1 {
            return Ok(PermSet::identity(degree));
        }
        let mut swap: Vec<usize> = (0..degree).collect();
        swap.swap(0, 1);
        let cycle: Vec<usize> = (0..degree).map(|i| (i + 1) % degree).collect();
        PermSet::closure(degree, &[swap, cycle], cap)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn perms(&self) -> &[Vec<usize>] {
        &self.perms
    }

    pub fn len(&self) -> usize {
        self.perms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perms.is_empty()
    }

    pub fn is_group(&self) -> bool {
        self.is_group
    }
}

/// `(a ∘ b)(i) = a(b(i))`.
fn compose(a: &[usize], b: &[usize]) -> Vec<usize> {
    b.iter().map(|&i| a[i]).collect()
}

fn inverse(a: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; a.len()];
    for (i, &j) in a.iter().enumerate() {
        inv[j] = i;
    }
    inv
}

/// PSL(2,8) acting on the projective line over GF(8): points 0..7 are field
/// codes, 8 is ∞. Generated by `x+1`, `ζx` and `1/x`.
pub fn psl28() -> PermSet {
    let f = make_field(2, 3).expect("GF(8)");
    let inf = 8;
    let zeta = f.primitive_element().code();
    let translate: Vec<usize> = (0..9)
        .map(|x| {
            if x == inf {
                inf
            } else {
                f.add_codes(x as u32, 1) as usize
            }
        })
        .collect();
    let scale: Vec<usize> = (0..9)
        .map(|x| {
            if x == inf {
                inf
            } else {
                f.mul_codes(x as u32, zeta) as usize
            }
        })
        .collect();
    let invert: Vec<usize> = (0..9)
        .map(|x| match x {
            0 => inf,
            8 => 0,
            _ => f.inv_code(x as u32) as usize,
        })
        .collect();
    PermSet::closure(9, &[translate, scale, invert], 10_000).expect("PSL(2,8) has order 504")
}

/// A finite weighted point set (orbits, spherical designs).
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedPoints {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl WeightedPoints {
    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `Σ w_i x_i^exponents`, compensated.
    pub fn moment(&self, exponents: &[u32]) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, &w)| {
                w * p
                    .iter()
                    .zip(exponents)
                    .filter(|(_, &e)| e > 0)
                    .fold(1.0, |acc, (&x, &e)| acc * pow_u(x, e))
            })
            .collect::<CompensatedSum>()
            .value()
    }
}

const ORBIT_BUCKET: f64 = 1e-14;

/// The orbit `{x∘σ}` of `x`, deduplicated, each point weighted `1/|orbit|`.
/// `(x∘σ)_i = x_{σ(i)}`. Coordinates are compared after rounding to a
/// `1e-14` grid.
pub fn orbit_design(z: &PermSet, x: &[f64]) -> Result<WeightedPoints> {
    if x.len() != z.degree() {
        return Err(Error::InvalidParameter(format!(
            "vector of length {} for permutations of degree {}",
            x.len(),
            z.degree()
        )));
    }
    let mut seen = HashSet::new();
    let mut points = Vec::new();
    for s in z.perms() {
        let y: Vec<f64> = s.iter().map(|&i| x[i]).collect();
        let key: Vec<i64> = y
            .iter()
            .map(|v| (v / ORBIT_BUCKET).round() as i64)
            .collect();
        if seen.insert(key) {
            points.push(y);
        }
    }
    let w = 1.0 / points.len() as f64;
    let weights = vec![w; points.len()];
    Ok(WeightedPoints { points, weights })
}

/// Average of `x_{j_1}^{λ_1} ··· x_{j_k}^{λ_k}` over all ordered k-tuples of
/// distinct indices.
pub fn symmetric_average(x: &[f64], exponents: &[u32]) -> Result<f64> {
    let d = x.len();
    let k = exponents.len();
    if k > d {
        return Err(Error::InvalidParameter(format!(
            "{k} exponents for a vector of length {d}"
        )));
    }
    let mut sum = CompensatedSum::new();
    let mut count = 0u64;
    let mut used = vec![false; d];
    let mut idx = Vec::with_capacity(k);
    fn walk(
        x: &[f64],
        exps: &[u32],
        used: &mut [bool],
        idx: &mut Vec<usize>,
        sum: &mut CompensatedSum,
        count: &mut u64,
    ) {
        if idx.len() == exps.len() {
            let term = idx
                .iter()
                .zip(exps)
                .fold(1.0, |acc, (&j, &e)| acc * pow_u(x[j], e));
            sum.add(term);
            *count += 1;
            return;
        }
        for j in 0..x.len() {
            if !used[j] {
                used[j] = true;
                idx.push(j);
                walk(x, exps, used, idx, sum, count);
                idx.pop();
                used[j] = false;
            }
        }
    }
    walk(x, exponents, &mut used, &mut idx, &mut sum, &mut count);
    Ok(sum.value() / count as f64)
}

/// Per-degree comparison of orbit averages against symmetric averages.
#[derive(Clone, Debug)]
pub struct OrbitCheck {
    pub group_order: usize,
    pub orbit_size: usize,
    /// Entry `k` is the largest discrepancy over monomials of degree `k`.
    pub max_error_by_degree: Vec<f64>,
    /// A monomial attaining the degree's largest discrepancy.
    pub worst_by_degree: Vec<Vec<u32>>,
    /// First degree whose discrepancy exceeds the tolerance.
    pub first_violation: Option<usize>,
}

/// For every monomial of degree `<= t`, compares its average over the orbit
/// of `x` with the symmetric average of its exponent type.
pub fn orbit_check(z: &PermSet, x: &[f64], t: usize, tol: f64) -> Result<OrbitCheck> {
    let orbit = orbit_design(z, x)?;
    let d = x.len();
    let mut max_err = vec![0.0f64; t + 1];
    let mut worst = vec![vec![0u32; d]; t + 1];
    let mut cache: HashMap<Vec<u32>, f64> = HashMap::new();
    for mono in crate::verify::enumerate_monomials(d, t) {
        let e = mono.exponents();
        let mut kind: Vec<u32> = e.iter().copied().filter(|&v| v > 0).collect();
        kind.sort_unstable_by(|a, b| b.cmp(a));
        let sym = match cache.get(&kind) {
            Some(&v) => v,
            None => {
                let v = symmetric_average(x, &kind)?;
                cache.insert(kind, v);
                v
            }
        };
        let err = (orbit.moment(e) - sym).abs();
        let deg = mono.degree() as usize;
        if err > max_err[deg] {
            max_err[deg] = err;
            worst[deg] = e.to_vec();
        }
    }
    let first_violation = max_err.iter().position(|&e| e > tol);
    Ok(OrbitCheck {
        group_order: z.len(),
        orbit_size: orbit.len(),
        max_error_by_degree: max_err,
        worst_by_degree: worst,
        first_violation,
    })
}

/// Maps a Gaussian 2r-design to a weighted spherical design of index 2r:
/// nonzero points are projected to the sphere with weight `w ‖x‖^{2r}`,
/// normalized by the design's own total.
pub fn gaussian_to_spherical(
    design: &WeightedDesign,
    r: u32,
    budget: &Budget,
) -> Result<WeightedPoints> {
    if design.claimed_degree() < 2 * r as usize {
        return Err(Error::Precondition(format!(
            "a {}-design cannot be reduced at index {}",
            design.claimed_degree(),
            2 * r
        )));
    }
    if design.n_points() > budget.max_rows {
        return Err(Error::BudgetExceeded {
            what: "spherical reduction",
            required: design.n_points(),
            cap: budget.max_rows,
        });
    }
    let mut points = Vec::new();
    let mut raw = Vec::new();
    design.for_each_point(|p, w| {
        let norm_sq = p.iter().map(|x| x * x).collect::<CompensatedSum>().value();
        if norm_sq > 0.0 {
            let norm = norm_sq.sqrt();
            points.push(p.iter().map(|x| x / norm).collect::<Vec<_>>());
            raw.push(w * pow_u(norm_sq, r));
        }
    });
    if points.is_empty() {
        return Err(Error::Precondition(
            "every design point is at the origin".into(),
        ));
    }
    let total = raw.iter().copied().collect::<CompensatedSum>().value();
    let weights = raw.iter().map(|w| w / total).collect();
    Ok(WeightedPoints { points, weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::trace_code_generators;
    use crate::numeric::rational;
    use crate::oa::verify_strength_linear;
    use crate::rules1d::{chebyshev_rule, hilbert_kamke_rule, rational_weight_rule};

    fn moment_of(d: &WeightedDesign, e: &[u32]) -> f64 {
        let mut s = CompensatedSum::new();
        d.for_each_point(|p, w| {
            s.add(w * p.iter().zip(e).fold(1.0, |a, (&x, &k)| a * pow_u(x, k)))
        });
        s.value()
    }

    fn linear_oa(q: u64, m: u32, t: usize) -> OrthogonalArray {
        let g = trace_code_generators(q, m, t).unwrap();
        let rep = verify_strength_linear(&g, t, &Budget::default()).unwrap();
        OrthogonalArray::from_generator(g).with_certification(rep.certification().unwrap())
    }

    #[test]
    fn product_of_hk3_in_two_dims() {
        let rule = hilbert_kamke_rule(3).unwrap();
        let d = product_design(&rule, 2, &Budget::default()).unwrap();
        assert_eq!(d.n_points(), 49);
        assert!(!d.is_factored());
        assert!((moment_of(&d, &[2, 2]) - 0.25).abs() < 1e-14);
        let one = product_design(&rule, 1, &Budget::default()).unwrap();
        assert_eq!(one.n_points(), 7);
    }

    #[test]
    fn product_goes_lazy_over_budget() {
        let rule = chebyshev_rule(3).unwrap();
        let small = Budget {
            max_rows: 10,
            ..Budget::default()
        };
        let d = product_design(&rule, 3, &small).unwrap();
        assert!(d.is_factored());
        assert_eq!(d.n_points(), 27);
        let e = product_design(&rule, 3, &Budget::default()).unwrap();
        for mono in [[2u32, 0, 2], [4, 2, 0], [1, 1, 0]] {
            assert!((moment_of(&d, &mono) - moment_of(&e, &mono)).abs() < 1e-15);
        }
    }

    #[test]
    fn reduce_requires_certified_matching_array() {
        let rule = hilbert_kamke_rule(3).unwrap();
        let g = trace_code_generators(7, 1, 5).unwrap();
        let bare = OrthogonalArray::from_generator(g);
        assert!(matches!(
            reduce_by_oa(&rule, &bare),
            Err(Error::Precondition(_))
        ));
        let cheb = chebyshev_rule(3).unwrap();
        assert!(reduce_by_oa(&cheb, &linear_oa(7, 1, 5)).is_err());
        let gh = rational_weight_rule(2, 7).unwrap().rule;
        assert!(reduce_by_oa(&gh, &linear_oa(7, 1, 2)).is_err());
    }

    #[test]
    fn full_factorial_reduction_is_the_product() {
        let rule = chebyshev_rule(3).unwrap();
        let oa = full_factorial(3, 3).unwrap();
        let red = reduce_by_oa(&rule, &oa).unwrap();
        let prod = product_design(&rule, 3, &Budget::default()).unwrap();
        let mut a = Vec::new();
        red.for_each_point(|p, _| a.push(p.to_vec()));
        let mut b = Vec::new();
        prod.for_each_point(|p, _| b.push(p.to_vec()));
        assert_eq!(a, b);
    }

    #[test]
    fn multiset_reduction_histograms() {
        let rule = rational_weight_rule(2, 7).unwrap().rule;
        let oa = linear_oa(7, 1, 2);
        let d = reduce_by_oa_multiset(&rule, &oa).unwrap();
        let DesignStorage::Factored { symbol_map, .. } = d.storage() else {
            panic!()
        };
        let z = rule.nodes();
        assert_eq!(symbol_map, &vec![z[0], z[1], z[1], z[1], z[1], z[1], z[2]]);
        let n = d.n_points() as f64;
        for col in 0..d.dim() {
            let mut hist = [0usize; 3];
            d.for_each_point(|p, _| hist[z.iter().position(|&v| v == p[col]).unwrap()] += 1);
            assert_eq!(hist.map(|h| h as f64 / n * 7.0), [1.0, 5.0, 1.0]);
        }
        let ff = full_factorial(7, 2).unwrap();
        let d2 = reduce_by_oa_multiset(&rule, &ff).unwrap();
        assert_eq!(d2.n_points(), 49);
        assert!(moment_of(&d2, &[1, 1]).abs() < 1e-15);
        assert!((moment_of(&d2, &[2, 0]) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn multiset_with_unit_counts_matches_plain_reduction() {
        let rule = hilbert_kamke_rule(3).unwrap();
        let oa = linear_oa(7, 1, 5);
        let a = reduce_by_oa(&rule, &oa).unwrap();
        let b = reduce_by_oa_multiset(&rule, &oa).unwrap();
        let (
            DesignStorage::Factored { symbol_map: sa, .. },
            DesignStorage::Factored { symbol_map: sb, .. },
        ) = (a.storage(), b.storage())
        else {
            panic!()
        };
        assert_eq!(sa, sb);
        assert_eq!(a.claimed_degree(), 5);
    }

    fn fano() -> Vec<Vec<usize>> {
        vec![
            vec![0, 1, 2],
            vec![0, 3, 4],
            vec![0, 5, 6],
            vec![1, 3, 5],
            vec![1, 4, 6],
            vec![2, 3, 6],
            vec![2, 4, 5],
        ]
    }

    #[test]
    fn fano_plane_pairs() {
        let one = rational(1, 1);
        let zero = rational(0, 1);
        let red = reduce_by_block_design(7, &fano(), &one, &zero, 2, &Budget::default()).unwrap();
        assert_eq!(red.lambdas, vec![7, 3, 1]);
        let mut e = vec![0u32; 7];
        e[2] = 1;
        e[5] = 1;
        assert_eq!(red.block_average(&e), rational(1, 7));
        assert_eq!(red.class_average(&e), rational(1, 7));
        for mono in crate::verify::enumerate_monomials(7, 2) {
            assert_eq!(
                red.block_average(mono.exponents()),
                red.class_average(mono.exponents())
            );
        }
    }

    #[test]
    fn fano_is_not_three_balanced() {
        let one = rational(1, 1);
        let zero = rational(0, 1);
        match reduce_by_block_design(7, &fano(), &one, &zero, 3, &Budget::default()) {
            Err(Error::Unbalanced { t_prime: 3, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn trivial_block_families() {
        let a = rational(2, 1);
        let b = rational(-1, 3);
        let full = reduce_by_block_design(5, &[vec![0, 1, 2, 3, 4]], &a, &b, 3, &Budget::default())
            .unwrap();
        assert_eq!(full.points.len(), 1);
        let complete: Vec<Vec<usize>> = Combinations::new(6, 2).collect();
        let red = reduce_by_block_design(6, &complete, &a, &b, 2, &Budget::default()).unwrap();
        assert_eq!(red.points.len(), 15);
        for mono in crate::verify::enumerate_monomials(6, 3) {
            assert_eq!(
                red.block_average(mono.exponents()),
                red.class_average(mono.exponents())
            );
        }
        assert!(reduce_by_block_design(3, &[vec![0]], &a, &a, 1, &Budget::default()).is_err());
    }

    #[test]
    fn mixed_size_regular_design() {
        // Two copies of the Fano plane's complements (size 4) plus the lines.
        let mut blocks = fano();
        for b in fano() {
            blocks.push((0..7).filter(|i| !b.contains(i)).collect());
        }
        let a = rational(3, 2);
        let b = rational(1, 5);
        let red = reduce_by_block_design(7, &blocks, &a, &b, 2, &Budget::default()).unwrap();
        for mono in crate::verify::enumerate_monomials(7, 2) {
            assert_eq!(
                red.block_average(mono.exponents()),
                red.class_average(mono.exponents())
            );
        }
    }

    #[test]
    fn orbits() {
        let x = [1.0, 2.0, 3.0];
        let id = orbit_design(&PermSet::identity(3), &x).unwrap();
        assert_eq!(id.points, vec![x.to_vec()]);
        let s3 = PermSet::symmetric(3, 100).unwrap();
        assert_eq!(s3.len(), 6);
        let o = orbit_design(&s3, &x).unwrap();
        assert_eq!(o.len(), 6);
        assert!(o.weights.iter().all(|&w| w == 1.0 / 6.0));
        // stabilizer collapses
        let o2 = orbit_design(&s3, &[1.0, 1.0, 2.0]).unwrap();
        assert_eq!(o2.len(), 3);
    }

    #[test]
    fn symmetric_average_examples() {
        let x = [1.0, 2.0, 3.0];
        assert!((symmetric_average(&x, &[1, 1]).unwrap() - 11.0 / 3.0).abs() < 1e-15);
        assert!((symmetric_average(&x, &[1]).unwrap() - 2.0).abs() < 1e-15);
        assert!((symmetric_average(&[1.5; 4], &[2, 1, 1]).unwrap() - 1.5f64.powi(4)).abs() < 1e-14);
        assert!(symmetric_average(&x, &[1, 1, 1, 1]).is_err());
    }

    #[test]
    fn psl28_structure() {
        let g = psl28();
        assert_eq!(g.len(), 504);
        assert!(g.is_group());
        assert!(g.perms().contains(&(0..9).collect()));
        let triples: HashSet<(usize, usize, usize)> =
            g.perms().iter().map(|p| (p[0], p[1], p[8])).collect();
        assert_eq!(triples.len(), 504);
        let closed = PermSet::new(9, g.perms().to_vec()).unwrap();
        assert!(closed.is_group());
    }

    /// Orbit count of the stabilizer of point 8 on k-subsets of the rest.
    fn stabilizer_orbits_on_subsets(g: &PermSet, k: usize) -> usize {
        let stab: Vec<&Vec<usize>> = g.perms().iter().filter(|p| p[8] == 8).collect();
        let mut seen: HashSet<Vec<usize>> = HashSet::new();
        let mut orbits = 0;
        for sub in Combinations::new(8, k) {
            if seen.contains(&sub) {
                continue;
            }
            orbits += 1;
            for p in &stab {
                let mut img: Vec<usize> = sub.iter().map(|&i| p[i]).collect();
                img.sort_unstable();
                seen.insert(img);
            }
        }
        orbits
    }

    // Degree-5 monomials of type (2,1,1,1) need transitivity on
    // (point, disjoint 3-subset) pairs; degree 6 type (2,1,1,1,1) needs the
    // same for 4-subsets, which fails (56 < C(8,4) = 70).
    #[test]
    fn psl28_point_stabilizer_on_subsets() {
        let g = psl28();
        assert_eq!(g.perms().iter().filter(|p| p[8] == 8).count(), 56);
        assert_eq!(stabilizer_orbits_on_subsets(&g, 3), 1);
        assert!(stabilizer_orbits_on_subsets(&g, 4) > 1);
    }

    #[test]
    fn psl28_first_violation_is_degree_six() {
        let norm = 285f64.sqrt();
        let x: Vec<f64> = (1..=9).map(|i| i as f64 / norm).collect();
        let rep = orbit_check(&psl28(), &x, 6, 1e-12).unwrap();
        assert_eq!(
            rep.first_violation,
            Some(6),
            "{:?}",
            rep.max_error_by_degree
        );
        assert!(rep.max_error_by_degree[6] > 1e-7);
    }

    #[test]
    fn symmetric_group_orbits_match_symmetric_averages() {
        for d in 2..=6 {
            let s = PermSet::symmetric(d, 1000).unwrap();
            let x: Vec<f64> = (1..=d).map(|i| (i as f64).sqrt()).collect();
            let rep = orbit_check(&s, &x, d, 1e-12).unwrap();
            assert_eq!(
                rep.first_violation, None,
                "d = {d}: {:?}",
                rep.max_error_by_degree
            );
        }
    }

    #[test]
    fn identity_violates_at_degree_one() {
        let rep = orbit_check(&PermSet::identity(3), &[1.0, 2.0, 3.0], 2, 1e-12).unwrap();
        assert_eq!(rep.first_violation, Some(1));
    }

    #[test]
    fn perm_set_validation() {
        assert!(PermSet::new(3, vec![vec![0, 0, 1]]).is_err());
        assert!(PermSet::new(3, vec![vec![0, 1]]).is_err());
        assert!(!PermSet::new(3, vec![vec![1, 2, 0]]).unwrap().is_group());
        assert!(
            PermSet::new(3, vec![vec![0, 1, 2], vec![1, 2, 0], vec![2, 0, 1]])
                .unwrap()
                .is_group()
        );
        assert!(matches!(
            PermSet::symmetric(8, 100),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn spherical_reduction_basics() {
        let h = 0.5f64.sqrt();
        let rule = Rule1D::new(
            vec![-h, h],
            RuleWeights::Real(vec![0.5, 0.5]),
            MeasureTag::Gaussian,
            3,
        )
        .unwrap();
        let sph = gaussian_to_spherical(&WeightedDesign::from_rule(&rule), 1, &Budget::default())
            .unwrap();
        assert_eq!(sph.points, vec![vec![-1.0], vec![1.0]]);
        assert_eq!(sph.weights, vec![0.5, 0.5]);

        let hk = hilbert_kamke_rule(3).unwrap();
        let d = product_design(&hk, 3, &Budget::default()).unwrap();
        let sph = gaussian_to_spherical(&d, 1, &Budget::default()).unwrap();
        assert_eq!(sph.len(), 342);
        assert!((sph.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for i in 0..3 {
            for j in 0..3 {
                let mut e = [0u32; 3];
                e[i] += 1;
                e[j] += 1;
                let want = if i == j { 1.0 / 3.0 } else { 0.0 };
                assert!((sph.moment(&e) - want).abs() < 1e-13);
            }
        }
        assert!(gaussian_to_spherical(&d, 3, &Budget::default()).is_err());
        let origin =
            WeightedDesign::explicit(vec![vec![0.0, 0.0]], vec![1.0], MeasureTag::Gaussian, 4)
                .unwrap();
        assert!(gaussian_to_spherical(&origin, 1, &Budget::default()).is_err());
    }

    #[test]
    fn explicit_rescales_on_ingest() {
        let d = WeightedDesign::explicit(
            vec![vec![1.0], vec![-1.0]],
            vec![2.0, 2.0],
            MeasureTag::Gaussian,
            1,
        )
        .unwrap();
        assert_eq!(d.rescaled_from(), Some(4.0));
        let mut ws = Vec::new();
        d.for_each_point(|_, w| ws.push(w));
        assert_eq!(ws, vec![0.5, 0.5]);
        assert!(
            WeightedDesign::explicit(vec![vec![1.0]], vec![-1.0], MeasureTag::Gaussian, 1).is_err()
        );
    }
}
