//! One-dimensional quadrature rules for the Gaussian and Chebyshev measures.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{
    binomial_big, double_factorial_odd, format_rational, parse_rational, rational_to_f64,
    CompensatedSum,
};

/// A one-dimensional probability measure with an exact moment oracle.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "MeasureRepr", try_from = "MeasureRepr")]
pub enum MeasureTag {
    /// Density `e^{-w^2} / sqrt(pi)` on the real line.
    Gaussian,
    /// Arcsine density `1 / (pi sqrt(1 - w^2))` on (-1, 1).
    Chebyshev,
    /// Explicit moment sequence starting at moment 0.
    Custom(Vec<BigRational>),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum MeasureRepr {
    Named(String),
    Custom { custom: Vec<String> },
}

impl From<MeasureTag> for MeasureRepr {
    fn from(m: MeasureTag) -> Self {
        match m {
            MeasureTag::Gaussian => MeasureRepr::Named("gaussian".into()),
            MeasureTag::Chebyshev => MeasureRepr::Named("chebyshev".into()),
            MeasureTag::Custom(ms) => MeasureRepr::Custom {
                custom: ms.iter().map(format_rational).collect(),
            },
        }
    }
}

impl TryFrom<MeasureRepr> for MeasureTag {
    type Error = String;

    fn try_from(r: MeasureRepr) -> std::result::Result<Self, String> {
        match r {
            MeasureRepr::Named(n) => match n.as_str() {
                "gaussian" => Ok(MeasureTag::Gaussian),
                "chebyshev" => Ok(MeasureTag::Chebyshev),
                other => Err(format!("unknown measure {other:?}")),
            },
            MeasureRepr::Custom { custom } => {
                let ms = custom
                    .iter()
                    .map(|s| parse_rational(s).ok_or_else(|| format!("bad rational {s:?}")))
                    .collect::<std::result::Result<Vec<_>, _>>()?;
                MeasureTag::custom(ms).map_err(|e| e.to_string())
            }
        }
    }
}

impl MeasureTag {
    pub fn custom(moments: Vec<BigRational>) -> Result<Self> {
        if moments.first().map_or(true, |m0| !m0.is_one()) {
            return Err(Error::InvalidParameter(
                "custom moment sequences must start with moment 0 = 1".into(),
            ));
        }
        Ok(MeasureTag::Custom(moments))
    }

    /// Exact k-th moment, or `None` past the end of a custom sequence.
    pub fn moment(&self, k: u32) -> Option<BigRational> {
        match self {
            MeasureTag::Gaussian => Some(gaussian_moment(k)),
            MeasureTag::Chebyshev => Some(chebyshev_moment(k)),
            MeasureTag::Custom(ms) => ms.get(k as usize).cloned(),
        }
    }

    pub fn moment_f64(&self, k: u32) -> Option<f64> {
        self.moment(k).map(|m| rational_to_f64(&m))
    }

    pub fn name(&self) -> &'static str {
        match self {
            MeasureTag::Gaussian => "gaussian",
            MeasureTag::Chebyshev => "chebyshev",
            MeasureTag::Custom(_) => "custom",
        }
    }
}

/// `a_{2j} = (2j-1)!! / 2^j`, odd moments vanish.
pub fn gaussian_moment(k: u32) -> BigRational {
    if k % 2 == 1 {
        return BigRational::zero();
    }
    let j = k / 2;
    BigRational::new(double_factorial_odd(j), BigInt::one() << j)
}

/// `binom(2j, j) / 4^j` for k = 2j, odd moments vanish.
pub fn chebyshev_moment(k: u32) -> BigRational {
    if k % 2 == 1 {
        return BigRational::zero();
    }
    let j = k / 2;
    BigRational::new(binomial_big(2 * j, j), BigInt::one() << (2 * j))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RuleWeights {
    Real(Vec<f64>),
    /// Weights `counts[i] / q`, stored exactly.
    Rational {
        q: u64,
        counts: Vec<u64>,
    },
}

/// Nodes and positive weights of a one-dimensional rule.
#[derive(Clone, Debug, PartialEq)]
pub struct Rule1D {
    nodes: Vec<f64>,
    weights: RuleWeights,
    measure: MeasureTag,
    degree: usize,
}

impl Rule1D {
    pub fn new(
        nodes: Vec<f64>,
        weights: RuleWeights,
        measure: MeasureTag,
        degree: usize,
    ) -> Result<Self> {
        let n = nodes.len();
        if n == 0 {
            return Err(Error::InvalidParameter(
                "a rule needs at least one node".into(),
            ));
        }
        if nodes.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("rule nodes must be finite".into()));
        }
        let mut sorted = nodes.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter(
                "rule nodes must be pairwise distinct".into(),
            ));
        }
        match &weights {
            RuleWeights::Real(w) => {
                if w.len() != n {
                    return Err(Error::InvalidParameter(format!(
                        "{} weights for {n} nodes",
                        w.len()
                    )));
                }
                if w.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
                    return Err(Error::InvalidParameter(
                        "rule weights must be positive".into(),
                    ));
                }
                let total: CompensatedSum = w.iter().copied().collect();
                if (total.value() - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidParameter(format!(
                        "rule weights sum to {}, not 1",
                        total.value()
                    )));
                }
            }
            RuleWeights::Rational { q, counts } => {
                if counts.len() != n {
                    return Err(Error::InvalidParameter(format!(
                        "{} counts for {n} nodes",
                        counts.len()
                    )));
                }
                if counts.iter().any(|&c| c == 0) || counts.iter().sum::<u64>() != *q {
                    return Err(Error::InvalidParameter(format!(
                        "counts {counts:?} must be positive and sum to {q}"
                    )));
                }
            }
        }
        Ok(Rule1D {
            nodes,
            weights,
            measure,
            degree,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &RuleWeights {
        &self.weights
    }

    pub fn weights_f64(&self) -> Vec<f64> {
        match &self.weights {
            RuleWeights::Real(w) => w.clone(),
            RuleWeights::Rational { q, counts } => {
                counts.iter().map(|&c| c as f64 / *q as f64).collect()
            }
        }
    }

    pub fn measure(&self) -> &MeasureTag {
        &self.measure
    }

    /// Claimed exactness degree.
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// True when all weights are equal (to `1/n`).
    pub fn is_equi_weighted(&self) -> bool {
        match &self.weights {
            RuleWeights::Rational { counts, .. } => counts.iter().all(|&c| c == counts[0]),
            RuleWeights::Real(w) => {
                let target = 1.0 / w.len() as f64;
                w.iter()
                    .all(|&x| (x - target).abs() <= 1e-12 * target.max(1e-300))
            }
        }
    }

    /// `Σ w_i x_i^k` with compensated summation.
    pub fn moment(&self, k: u32) -> f64 {
        let w = self.weights_f64();
        self.nodes
            .iter()
            .zip(&w)
            .map(|(&x, &wi)| wi * crate::numeric::pow_u(x, k))
            .collect::<CompensatedSum>()
            .value()
    }
}

/// The equi-weighted Gaussian 5-design on `2M + 1` nodes `{0, ±sqrt(Z_i)}`,
/// where `Z` solves `Σ Z_i = (2M+1)/4`, `Σ Z_i^2 = (6M+3)/8`.
///
/// `Z` is the point of the circle (simplex-hyperplane ∩ sphere) reached from
/// its center `Q` along the fixed direction
/// `v = (-4, -5, ..., -(M+2), (M-1)(M+6)/2)`, which is orthogonal to `Q`.
pub fn hilbert_kamke_rule(m: usize) -> Result<Rule1D> {
    let z = hilbert_kamke_squares(m)?;
    let mut nodes = Vec::with_capacity(2 * m + 1);
    nodes.push(0.0);
    for &zi in &z {
        let r = zi.sqrt();
        nodes.push(r);
        nodes.push(-r);
    }
    nodes.sort_by(f64::total_cmp);
    let n = nodes.len() as u64;
    Rule1D::new(
        nodes,
        RuleWeights::Rational {
            q: n,
            counts: vec![1; n as usize],
        },
        MeasureTag::Gaussian,
        5,
    )
}

/// The squared nodes `Z_1, ..., Z_M` of [`hilbert_kamke_rule`].
pub fn hilbert_kamke_squares(m: usize) -> Result<Vec<f64>> {
    if m < 3 {
        return Err(Error::InvalidParameter(format!(
            "the Hilbert-Kamke system has a nonnegative solution only for M >= 3, got {m}"
        )));
    }
    let mf = m as f64;
    let center = (2.0 * mf + 1.0) / (4.0 * mf);
    let direction = hilbert_kamke_direction(m);
    let norm_sq = mf * (mf - 1.0) * (3.0 * mf * mf + 37.0 * mf + 106.0) / 12.0;
    let radius = ((2.0 * mf + 1.0) * (4.0 * mf - 1.0) / (16.0 * mf)).sqrt();
    let scale = radius / norm_sq.sqrt();
    Ok(direction.iter().map(|&v| center + scale * v).collect())
}

/// `v = (-4, -5, ..., -(M+2), (M-1)(M+6)/2)`.
pub fn hilbert_kamke_direction(m: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (1..m).map(|i| -((i + 3) as f64)).collect();
    v.push(((m - 1) * (m + 6)) as f64 / 2.0);
    v
}

/// Chebyshev-Gauss rule: nodes `cos((2i-1)π/(2n))`, weights `1/n`, exact
/// through degree `2n - 1`. Nodes are symmetrized so that odd moments cancel.
pub fn chebyshev_rule(n: usize) -> Result<Rule1D> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "Chebyshev-Gauss rule needs n >= 1".into(),
        ));
    }
    let mut nodes = vec![0.0; n];
    for i in 0..n / 2 {
        let x = ((2 * i + 1) as f64 * PI / (2 * n) as f64).cos();
        nodes[i] = x;
        nodes[n - 1 - i] = -x;
    }
    Rule1D::new(
        nodes,
        RuleWeights::Rational {
            q: n as u64,
            counts: vec![1; n],
        },
        MeasureTag::Chebyshev,
        2 * n - 1,
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolvedWeights {
    pub weights: Vec<f64>,
    /// All weights strictly positive.
    pub admissible: bool,
}

/// Solves the Vandermonde system `Σ_i λ_i z_i^k = a_k`, `k < n`, with the
/// Björck-Pereyra recurrences.
pub fn solve_weights(nodes: &[f64], measure: &MeasureTag) -> Result<SolvedWeights> {
    let n = nodes.len();
    let mut b = (0..n as u32)
        .map(|k| {
            measure.moment_f64(k).ok_or_else(|| {
                Error::InvalidParameter(format!("measure has no moment of order {k}"))
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut sorted = nodes.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Singular(
            "duplicate nodes make the Vandermonde system singular".into(),
        ));
    }
    if n == 0 {
        return Ok(SolvedWeights {
            weights: Vec::new(),
            admissible: true,
        });
    }
    let x = nodes;
    let last = n - 1;
    for k in 0..last {
        for i in (k + 1..=last).rev() {
            b[i] -= x[k] * b[i - 1];
        }
    }
    for k in (0..last).rev() {
        for i in k + 1..=last {
            b[i] /= x[i] - x[i - k - 1];
        }
        for i in k..last {
            b[i] -= b[i + 1];
        }
    }
    let admissible = b.iter().all(|&w| w > 0.0);
    Ok(SolvedWeights {
        weights: b,
        admissible,
    })
}

/// Gauss-Hermite nodes and weights for `e^{-w^2}/sqrt(pi)`, from the
/// eigen-decomposition of the Jacobi matrix (Golub-Welsch). Nodes ascend.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    if n == 0 {
        return (Vec::new(), Vec::new());
    }
    let jacobi = DMatrix::from_fn(n, n, |r, c| {
        if r == c + 1 || c == r + 1 {
            (r.max(c) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = eig
        .eigenvalues
        .iter()
        .zip(eig.eigenvectors.row(0).iter())
        .map(|(&x, &v)| (x, v * v))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // The spectrum is symmetric about zero; enforce it exactly.
    for i in 0..n / 2 {
        let x = 0.5 * (pairs[n - 1 - i].0 - pairs[i].0);
        let w = 0.5 * (pairs[n - 1 - i].1 + pairs[i].1);
        pairs[i] = (-x, w);
        pairs[n - 1 - i] = (x, w);
    }
    if n % 2 == 1 {
        pairs[n / 2].0 = 0.0;
    }
    pairs.into_iter().unzip()
}

/// Largest-remainder rounding of `q * weights` to integers summing to `q`.
/// Ties go to the lower index.
pub fn largest_remainder(q: u64, weights: &[f64]) -> Vec<u64> {
    let scaled: Vec<f64> = weights.iter().map(|&w| w * q as f64).collect();
    let mut counts: Vec<u64> = scaled.iter().map(|s| s.floor().max(0.0) as u64).collect();
    let assigned: u64 = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = scaled[a] - scaled[a].floor();
        let fb = scaled[b] - scaled[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order
        .iter()
        .cycle()
        .take(q.saturating_sub(assigned) as usize)
    {
        counts[i] += 1;
    }
    counts
}

/// Outcome of [`rational_weight_rule`].
#[derive(Clone, Debug)]
pub struct RationalWeightSolution {
    pub rule: Rule1D,
    pub newton_steps: usize,
    pub residual: f64,
}

const NEWTON_MAX_STEPS: usize = 100;
const NEWTON_TOL: f64 = 1e-12;

/// Finds `t + 1` distinct nodes whose Vandermonde weights equal `q_i / q`,
/// starting from the Gauss-Hermite rule of order `t + 1` and rounding its
/// weights to multiples of `1/q`.
pub fn rational_weight_rule(t: usize, q: u64) -> Result<RationalWeightSolution> {
    if t < 2 {
        return Err(Error::InvalidParameter(format!(
            "degree t = {t} must be at least 2"
        )));
    }
    let n = t + 1;
    let (mut z, gh_weights) = gauss_hermite(n);
    let counts = largest_remainder(q, &gh_weights);
    if counts.iter().any(|&c| c == 0) {
        let min_feasible_q = (q + 1..)
            .find(|&q2| largest_remainder(q2, &gh_weights).iter().all(|&c| c > 0))
            .expect("large q always rounds to positive counts");
        return Err(Error::InfeasibleRounding { q, min_feasible_q });
    }
    let target: Vec<f64> = counts.iter().map(|&c| c as f64 / q as f64).collect();
    let measure = MeasureTag::Gaussian;

    let residual_of = |z: &[f64]| -> Option<(f64, Vec<f64>)> {
        let lam = solve_weights(z, &measure).ok()?.weights;
        let r: Vec<f64> = target.iter().zip(&lam).map(|(a, b)| a - b).collect();
        let norm = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        norm.is_finite().then_some((norm, r))
    };

    let (mut norm, mut r) =
        residual_of(&z).ok_or_else(|| Error::Singular("Gauss-Hermite start".into()))?;
    let mut steps = 0;
    while norm >= NEWTON_TOL {
        if steps == NEWTON_MAX_STEPS {
            return Err(Error::NoConvergence {
                iterations: steps,
                residual: norm,
            });
        }
        let lam: Vec<f64> = target.iter().zip(&r).map(|(a, b)| a - b).collect();
        let jac = weight_jacobian(&z, &lam)?;
        let svd = jac.svd(true, true);
        let cutoff = 1e-12 * svd.singular_values.max();
        let delta = svd
            .solve(&DVector::from_vec(r.clone()), cutoff)
            .map_err(|e| Error::Singular(e.to_string()))?;

        let mut step = 1.0;
        let accepted = loop {
            let cand: Vec<f64> = z
                .iter()
                .zip(delta.iter())
                .map(|(a, d)| a + step * d)
                .collect();
            if let Some((cand_norm, cand_r)) = residual_of(&cand) {
                if cand_norm < norm {
                    break Some((cand, cand_norm, cand_r));
                }
            }
            step *= 0.5;
            if step < 1e-12 {
                break None;
            }
        };
        steps += 1;
        match accepted {
            Some((cand, cand_norm, cand_r)) => {
                z = cand;
                norm = cand_norm;
                r = cand_r;
            }
            None => {
                return Err(Error::NoConvergence {
                    iterations: steps,
                    residual: norm,
                })
            }
        }
    }

    let rule = Rule1D::new(
        z,
        RuleWeights::Rational { q, counts },
        MeasureTag::Gaussian,
        t,
    )?;
    Ok(RationalWeightSolution {
        rule,
        newton_steps: steps,
        residual: norm,
    })
}

/// Jacobian `∂λ/∂z = -M1^{-1} M2 M1 M3` of the Vandermonde weights, where
/// `M1` is the Vandermonde matrix `(z_j^k)`, `M2` the differentiation
/// matrix with subdiagonal `1, 2, ..., n-1`, and `M3 = diag(λ)`.
pub fn weight_jacobian(z: &[f64], lambda: &[f64]) -> Result<DMatrix<f64>> {
    let n = z.len();
    let m1 = DMatrix::from_fn(n, n, |k, j| z[j].powi(k as i32));
    let m2 = DMatrix::from_fn(n, n, |r, c| if r == c + 1 { r as f64 } else { 0.0 });
    let m3 = DMatrix::from_diagonal(&DVector::from_column_slice(lambda));
    let rhs = -(&m2 * &m1 * m3);
    m1.lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("Vandermonde matrix of the current nodes".into()))
}

/// Smallest prime power `q` in `lo..=hi` for which [`rational_weight_rule`]
/// succeeds, together with its solution.
pub fn smallest_feasible_prime_power(
    t: usize,
    lo: u64,
    hi: u64,
) -> Option<(u64, RationalWeightSolution)> {
    (lo..=hi)
        .filter(|&q| crate::gf::prime_power(q).is_some())
        .find_map(|q| rational_weight_rule(t, q).ok().map(|s| (q, s)))
}
