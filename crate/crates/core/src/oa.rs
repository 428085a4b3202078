//! Orthogonal arrays and their strength certification.
//!
//! Two certification routes are kept deliberately independent:
//! [`verify_strength_exhaustive`] counts t-tuples in every N×t projection,
//! while [`verify_strength_linear`] checks that every t columns of a
//! generator matrix are linearly independent over GF(q). For linear codes
//! the second implies the first, and the test suites use each as an oracle
//! for the other.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::budget::{binomial, Budget, Combinations};
use crate::codes::{enumerate_codewords, rank_of, GeneratorMatrix};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CertificationMethod {
    /// Tuple counting over every column subset.
    Exhaustive,
    /// Column independence of the generator matrix.
    Linear,
    /// Strength holds by construction (full factorial).
    Construction,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Certification {
    pub strength: usize,
    pub method: CertificationMethod,
}

#[derive(Clone, Debug)]
pub enum OaStorage {
    Explicit(Vec<Vec<u32>>),
    /// Runs are the codewords of a linear code.
    Generator(GeneratorMatrix),
    /// All `q^k` tuples, streamed in lexicographic order.
    FullFactorial,
}

#[derive(Clone, Debug)]
pub struct OrthogonalArray {
    q: u32,
    k: usize,
    n_runs: u128,
    storage: OaStorage,
    certification: Option<Certification>,
}

impl OrthogonalArray {
    pub fn from_rows(q: u32, k: usize, rows: Vec<Vec<u32>>) -> Result<Self> {
        if q < 2 {
            return Err(Error::InvalidParameter(format!(
                "an array needs at least 2 levels, got {q}"
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(Error::InvalidParameter(format!(
                    "run {i} has {} entries, expected {k}",
                    row.len()
                )));
            }
            if let Some(&s) = row.iter().find(|&&s| s >= q) {
                return Err(Error::InvalidParameter(format!(
                    "run {i} has symbol {s} outside [0, {q})"
                )));
            }
        }
        Ok(OrthogonalArray {
            q,
            k,
            n_runs: rows.len() as u128,
            storage: OaStorage::Explicit(rows),
            certification: None,
        })
    }

    pub fn from_generator(g: GeneratorMatrix) -> Self {
        OrthogonalArray {
            q: g.q(),
            k: g.k_cols(),
            n_runs: g.codeword_count(),
            storage: OaStorage::Generator(g),
            certification: None,
        }
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_runs(&self) -> u128 {
        self.n_runs
    }

    pub fn storage(&self) -> &OaStorage {
        &self.storage
    }

    pub fn generator(&self) -> Option<&GeneratorMatrix> {
        match &self.storage {
            OaStorage::Generator(g) => Some(g),
            _ => None,
        }
    }

    pub fn certification(&self) -> Option<Certification> {
        self.certification
    }

    pub fn certified_strength(&self) -> Option<usize> {
        self.certification.map(|c| c.strength)
    }

    /// Attaches a certification. Callers obtain it from one of the verifiers
    /// (or from construction) and are trusted to pass a genuine one.
    pub fn with_certification(mut self, cert: Certification) -> Self {
        self.certification = Some(cert);
        self
    }

    /// Index λ = N / q^t, if `q^t` divides N.
    pub fn index(&self, t: usize) -> Option<u128> {
        let qt = (self.q as u128).checked_pow(t as u32)?;
        (self.n_runs % qt == 0).then(|| self.n_runs / qt)
    }

    /// Streams every run through `f`, reusing one buffer.
    pub fn for_each_run(&self, mut f: impl FnMut(&[u32])) {
        match &self.storage {
            OaStorage::Explicit(rows) => rows.iter().for_each(|r| f(r)),
            OaStorage::Generator(g) => {
                let mut it = enumerate_codewords(g, u128::MAX).expect("uncapped");
                let mut buf = vec![0u32; self.k];
                while it.next_into(&mut buf) {
                    f(&buf);
                }
            }
            OaStorage::FullFactorial => {
                let mut buf = vec![0u32; self.k];
                'outer: loop {
                    f(&buf);
                    for s in buf.iter_mut().rev() {
                        *s += 1;
                        if *s < self.q {
                            continue 'outer;
                        }
                        *s = 0;
                    }
                    break;
                }
            }
        }
    }

    /// Row-major copy of all runs; refuses above `cap` runs.
    pub fn materialize(&self, cap: u128) -> Result<Vec<u32>> {
        if self.n_runs > cap {
            return Err(Error::BudgetExceeded {
                what: "orthogonal-array materialization",
                required: self.n_runs,
                cap,
            });
        }
        let mut flat = Vec::with_capacity(self.n_runs as usize * self.k);
        self.for_each_run(|r| flat.extend_from_slice(r));
        Ok(flat)
    }

    /// Converts lazy storage to explicit rows.
    pub fn into_explicit(self, cap: u128) -> Result<Self> {
        let flat = self.materialize(cap)?;
        let rows = if self.k == 0 {
            vec![Vec::new(); self.n_runs as usize]
        } else {
            flat.chunks(self.k).map(<[u32]>::to_vec).collect()
        };
        Ok(OrthogonalArray {
            storage: OaStorage::Explicit(rows),
            ..self
        })
    }
}

/// The full grid `[q]^d`, strength `d` by construction, rows streamed.
pub fn full_factorial(q: u32, d: usize) -> Result<OrthogonalArray> {
    if q < 2 {
        return Err(Error::InvalidParameter(format!(
            "full factorial needs q >= 2, got {q}"
        )));
    }
    let n_runs = (q as u128)
        .checked_pow(d as u32)
        .ok_or_else(|| Error::InvalidParameter(format!("{q}^{d} runs overflow")))?;
    Ok(OrthogonalArray {
        q,
        k: d,
        n_runs,
        storage: OaStorage::FullFactorial,
        certification: Some(Certification {
            strength: d,
            method: CertificationMethod::Construction,
        }),
    })
}

/// Full factorial with explicit rows, refused above `cap` runs.
pub fn full_factorial_explicit(q: u32, d: usize, cap: u128) -> Result<OrthogonalArray> {
    full_factorial(q, d)?.into_explicit(cap)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StrengthFailure {
    /// `q^t` does not divide the run count.
    Indivisible { runs: u128, q_pow_t: u128 },
    /// First column set and tuple whose count differs from λ.
    Unbalanced {
        columns: Vec<usize>,
        tuple: Vec<u32>,
        count: u64,
        expected: u64,
    },
    /// First column set whose generator columns are dependent.
    Dependent { columns: Vec<usize>, rank: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StrengthReport {
    pub t: usize,
    pub method: CertificationMethod,
    pub passed: bool,
    pub lambda: Option<u128>,
    pub subsets_checked: u128,
    pub failure: Option<StrengthFailure>,
}

impl StrengthReport {
    pub fn certification(&self) -> Option<Certification> {
        self.passed.then_some(Certification {
            strength: self.t,
            method: self.method,
        })
    }
}

const CHUNK: usize = 2048;

/// Runs `check` over all t-subsets of `0..k` in lexicographic chunks and
/// returns the first failure in subset order.
fn first_failing_subset<F>(k: usize, t: usize, check: F) -> (u128, Option<StrengthFailure>)
where
    F: Fn(&[usize]) -> Option<StrengthFailure> + Sync,
{
    let mut combos = Combinations::new(k, t);
    let mut checked = 0u128;
    loop {
        let chunk: Vec<Vec<usize>> = combos.by_ref().take(CHUNK).collect();
        if chunk.is_empty() {
            return (checked, None);
        }
        let found = chunk
            .par_iter()
            .enumerate()
            .filter_map(|(i, cols)| check(cols).map(|f| (i, f)))
            .min_by_key(|(i, _)| *i);
        if let Some((i, f)) = found {
            return (checked + i as u128 + 1, Some(f));
        }
        checked += chunk.len() as u128;
    }
}

fn check_t(k: usize, t: usize) -> Result<()> {
    if t > k {
        return Err(Error::InvalidParameter(format!(
            "strength {t} exceeds the {k} columns"
        )));
    }
    Ok(())
}

/// Counts every t-tuple in every N×t projection.
pub fn verify_strength_exhaustive(
    a: &OrthogonalArray,
    t: usize,
    budget: &Budget,
) -> Result<StrengthReport> {
    check_t(a.k, t)?;
    let qt = (a.q as u128).checked_pow(t as u32).unwrap_or(u128::MAX);
    let report = |passed, lambda, subsets_checked, failure| StrengthReport {
        t,
        method: CertificationMethod::Exhaustive,
        passed,
        lambda,
        subsets_checked,
        failure,
    };
    if a.n_runs % qt != 0 || a.n_runs == 0 {
        return Ok(report(
            false,
            None,
            0,
            Some(StrengthFailure::Indivisible {
                runs: a.n_runs,
                q_pow_t: qt,
            }),
        ));
    }
    if qt > budget.max_histogram {
        return Err(Error::BudgetExceeded {
            what: "tuple histogram",
            required: qt,
            cap: budget.max_histogram,
        });
    }
    let subsets = binomial(a.k as u128, t as u128);
    if subsets > budget.max_subsets {
        return Err(Error::BudgetExceeded {
            what: "column subsets",
            required: subsets,
            cap: budget.max_subsets,
        });
    }
    let lambda = a.n_runs / qt;
    let flat = a.materialize(budget.max_rows)?;
    let (k, q) = (a.k, a.q as usize);
    let (checked, failure) = first_failing_subset(k, t, |cols| {
        let mut hist = vec![0u64; qt as usize];
        for row in flat.chunks_exact(k.max(1)).take(a.n_runs as usize) {
            let idx = cols
                .iter()
                .fold(0usize, |acc, &c| acc * q + row[c] as usize);
            hist[idx] += 1;
        }
        let (idx, &count) = hist
            .iter()
            .enumerate()
            .find(|(_, &c)| c as u128 != lambda)?;
        let mut tuple = vec![0u32; t];
        let mut rest = idx;
        for s in tuple.iter_mut().rev() {
            *s = (rest % q) as u32;
            rest /= q;
        }
        Some(StrengthFailure::Unbalanced {
            columns: cols.to_vec(),
            tuple,
            count,
            expected: lambda as u64,
        })
    });
    let passed = failure.is_none();
    Ok(report(passed, Some(lambda), checked, failure))
}

/// Checks that every t columns of `g` are linearly independent over GF(q),
/// which certifies strength t for the array of all codewords.
pub fn verify_strength_linear(
    g: &GeneratorMatrix,
    t: usize,
    budget: &Budget,
) -> Result<StrengthReport> {
    check_t(g.k_cols(), t)?;
    let subsets = binomial(g.k_cols() as u128, t as u128);
    if subsets > budget.max_subsets {
        return Err(Error::BudgetExceeded {
            what: "column subsets",
            required: subsets,
            cap: budget.max_subsets,
        });
    }
    let columns: Vec<Vec<u32>> = (0..g.k_cols()).map(|j| g.column(j)).collect();
    let field = g.field();
    let (checked, failure) = first_failing_subset(g.k_cols(), t, |cols| {
        let vecs: Vec<Vec<u32>> = cols.iter().map(|&c| columns[c].clone()).collect();
        let rank = if t == 0 { 0 } else { rank_of(field, vecs) };
        (rank < t).then(|| StrengthFailure::Dependent {
            columns: cols.to_vec(),
            rank,
        })
    });
    let passed = failure.is_none();
    let lambda = passed.then(|| {
        let qt = (g.q() as u128).pow(t as u32);
        g.codeword_count() / qt
    });
    Ok(StrengthReport {
        t,
        method: CertificationMethod::Linear,
        passed,
        lambda,
        subsets_checked: checked,
        failure,
    })
}

/// Largest strength certified by the linear route, scanning `t = 1, 2, ...`
/// up to `max_t` and stopping at the first failure.
pub fn max_linear_strength(g: &GeneratorMatrix, max_t: usize, budget: &Budget) -> Result<usize> {
    let mut best = 0;
    for t in 1..=max_t.min(g.k_cols()) {
        if !verify_strength_linear(g, t, budget)?.passed {
            break;
        }
        best = t;
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::trace_code_generators;
    use crate::gf;

    #[test]
    fn full_factorial_rows() {
        let oa = full_factorial_explicit(2, 2, 100).unwrap();
        match oa.storage() {
            OaStorage::Explicit(rows) => {
                assert_eq!(rows, &vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]])
            }
            _ => unreachable!(),
        }
        let oa = full_factorial(3, 2).unwrap();
        let r = verify_strength_exhaustive(&oa, 2, &Budget::default()).unwrap();
        assert!(r.passed);
        assert_eq!(r.lambda, Some(1));
    }

    #[test]
    fn full_factorial_streams_without_materializing() {
        let oa = full_factorial(7, 7).unwrap();
        assert_eq!(oa.n_runs(), 823_543);
        let mut n = 0u64;
        let mut last = Vec::new();
        oa.for_each_run(|r| {
            n += 1;
            last = r.to_vec();
        });
        assert_eq!(n, 823_543);
        assert_eq!(last, vec![6; 7]);
        assert!(full_factorial_explicit(7, 7, 1000)
            .unwrap_err()
            .is_refusal());
    }

    #[test]
    fn indivisible_fails_fast() {
        let oa =
            OrthogonalArray::from_rows(2, 2, vec![vec![0, 0], vec![1, 1], vec![0, 1]]).unwrap();
        let r = verify_strength_exhaustive(&oa, 1, &Budget::default()).unwrap();
        assert!(!r.passed);
        assert!(matches!(
            r.failure,
            Some(StrengthFailure::Indivisible {
                runs: 3,
                q_pow_t: 2
            })
        ));
        assert_eq!(r.subsets_checked, 0);
    }

    #[test]
    fn unbalanced_reports_first_violation() {
        // balanced in each column, but the pair (0,0) appears twice in columns {0,1}
        let rows = vec![vec![0, 0], vec![0, 0], vec![1, 1], vec![1, 1]];
        let oa = OrthogonalArray::from_rows(2, 2, rows).unwrap();
        assert!(
            verify_strength_exhaustive(&oa, 1, &Budget::default())
                .unwrap()
                .passed
        );
        let r = verify_strength_exhaustive(&oa, 2, &Budget::default()).unwrap();
        assert_eq!(
            r.failure,
            Some(StrengthFailure::Unbalanced {
                columns: vec![0, 1],
                tuple: vec![0, 0],
                count: 2,
                expected: 1
            })
        );
    }

    #[test]
    fn zero_column_is_dependent() {
        let f = gf::make_field(3, 1).unwrap();
        let g = GeneratorMatrix::from_rows(f, 3, vec![vec![1, 0, 0], vec![0, 0, 1]]).unwrap();
        for t in 1..=3 {
            let r = verify_strength_linear(&g, t, &Budget::default()).unwrap();
            assert!(!r.passed, "t = {t}");
        }
    }

    #[test]
    fn trace_code_strength_boundaries() {
        let b = Budget::default();
        let g = trace_code_generators(2, 3, 3).unwrap();
        let oa = OrthogonalArray::from_generator(g.clone());
        let r3 = verify_strength_exhaustive(&oa, 3, &b).unwrap();
        assert!(r3.passed);
        assert_eq!(r3.lambda, Some(2));
        assert_eq!(r3.subsets_checked, 56);
        let r4 = verify_strength_exhaustive(&oa, 4, &b).unwrap();
        assert!(!r4.passed);
        assert!(verify_strength_linear(&g, 3, &b).unwrap().passed);
        assert!(!verify_strength_linear(&g, 4, &b).unwrap().passed);
        assert_eq!(max_linear_strength(&g, 8, &b).unwrap(), 3);
    }

    #[test]
    fn budget_refusals() {
        let g = trace_code_generators(7, 1, 5).unwrap();
        let tight = Budget {
            max_subsets: 10,
            ..Budget::default()
        };
        assert!(verify_strength_linear(&g, 5, &tight)
            .unwrap_err()
            .is_refusal());
        let oa = OrthogonalArray::from_generator(g);
        let tight = Budget {
            max_rows: 100,
            ..Budget::default()
        };
        assert!(verify_strength_exhaustive(&oa, 2, &tight)
            .unwrap_err()
            .is_refusal());
    }

    #[test]
    fn t_larger_than_k_is_an_error() {
        let oa = full_factorial(2, 3).unwrap();
        assert!(verify_strength_exhaustive(&oa, 4, &Budget::default()).is_err());
    }
}
