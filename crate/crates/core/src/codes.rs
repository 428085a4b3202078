//! Trace codes: the duals of extended BCH codes, written as generator
//! matrices over GF(q) and used as orthogonal-array factories.
//!
//! For `f` ranging over polynomials of degree `< t` with coefficients in
//! GF(q^m), the vectors `(T(f(0)), T(f(1)), T(f(ξ)), ..., T(f(ξ^{q^m-2})))`
//! form a GF(q)-linear code whose codewords are the runs of an
//! `OA(N, q^m, q, t)`. By linearity of the trace the code is spanned by the
//! rows `T(β_i x^j)` (β_i a GF(q)-basis of GF(q^m), `1 <= j < t`) plus the
//! all-ones row.

use crate::error::{Error, Result};
use crate::gf::{self, FieldCtx};

/// A spanning set of a linear code over GF(q), kept in reduced row-echelon
/// form. Only the `rank` nonzero basis rows are stored.
#[derive(Clone, Debug)]
pub struct GeneratorMatrix {
    field: FieldCtx,
    k_cols: usize,
    rows: Vec<Vec<u32>>,
    pivots: Vec<usize>,
}

impl GeneratorMatrix {
    /// Reduces `rows` over GF(q). Every entry must be a symbol in `[0, q)`.
    pub fn from_rows(field: FieldCtx, k_cols: usize, rows: Vec<Vec<u32>>) -> Result<Self> {
        let q = field.order();
        for row in &rows {
            if row.len() != k_cols {
                return Err(Error::InvalidParameter(format!(
                    "generator row has {} entries, expected {k_cols}",
                    row.len()
                )));
            }
            if let Some(&bad) = row.iter().find(|&&s| s >= q) {
                return Err(Error::InvalidParameter(format!(
                    "symbol {bad} is outside GF({q})"
                )));
            }
        }
        let (rows, pivots) = row_reduce(&field, rows, k_cols);
        Ok(GeneratorMatrix {
            field,
            k_cols,
            rows,
            pivots,
        })
    }

    pub fn q(&self) -> u32 {
        self.field.order()
    }

    pub fn field(&self) -> &FieldCtx {
        &self.field
    }

    pub fn k_cols(&self) -> usize {
        self.k_cols
    }

    /// Reduced basis rows.
    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Number of codewords, `q^rank`, saturating at `u128::MAX`.
    pub fn codeword_count(&self) -> u128 {
        (self.q() as u128)
            .checked_pow(self.rank() as u32)
            .unwrap_or(u128::MAX)
    }

    /// Column `j` as a vector in GF(q)^rank.
    pub fn column(&self, j: usize) -> Vec<u32> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    /// Codeword with coefficient vector `coeffs` (length `rank`).
    pub fn codeword(&self, coeffs: &[u32]) -> Vec<u32> {
        let mut out = vec![0u32; self.k_cols];
        self.codeword_into(coeffs, &mut out);
        out
    }

    pub(crate) fn codeword_into(&self, coeffs: &[u32], out: &mut [u32]) {
        out.iter_mut().for_each(|v| *v = 0);
        for (row, &c) in self.rows.iter().zip(coeffs) {
            if c == 0 {
                continue;
            }
            for (o, &g) in out.iter_mut().zip(row) {
                *o = self.field.add_codes(*o, self.field.mul_codes(c, g));
            }
        }
    }
}

/// Gauss-Jordan elimination over GF(q); returns nonzero rows and pivot columns.
fn row_reduce(
    field: &FieldCtx,
    mut rows: Vec<Vec<u32>>,
    k_cols: usize,
) -> (Vec<Vec<u32>>, Vec<usize>) {
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..k_cols {
        let Some(sel) = (r..rows.len()).find(|&i| rows[i][col] != 0) else {
            continue;
        };
        rows.swap(r, sel);
        let inv = field.inv_code(rows[r][col]);
        for v in rows[r].iter_mut() {
            *v = field.mul_codes(*v, inv);
        }
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i == r || row[col] == 0 {
                continue;
            }
            let factor = row[col];
            for (v, &pv) in row.iter_mut().zip(&pivot_row) {
                *v = field.sub_codes(*v, field.mul_codes(factor, pv));
            }
        }
        pivots.push(col);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    rows.truncate(r);
    (rows, pivots)
}

/// GF(q)-rank of a set of vectors, by Gaussian elimination.
pub fn rank_of(field: &FieldCtx, vectors: Vec<Vec<u32>>) -> usize {
    let len = vectors.first().map_or(0, Vec::len);
    row_reduce(field, vectors, len).0.len()
}

/// Generators of the trace code of polynomials of degree `< t` over
/// GF(q^m), evaluated at `0, 1, ξ, ..., ξ^{q^m - 2}`.
pub fn trace_code_generators(q: u64, m: u32, t: usize) -> Result<GeneratorMatrix> {
    if t < 2 {
        return Err(Error::InvalidParameter(format!(
            "strength t = {t} must be at least 2"
        )));
    }
    let (p, e) = gf::prime_power(q).ok_or(Error::NotPrimePower(q))?;
    let ext = gf::make_extension(p, e, m)?;
    if t as u64 > ext.order() as u64 - 1 {
        return Err(Error::InvalidParameter(format!(
            "strength t = {t} exceeds q^m - 1 = {}",
            ext.order() - 1
        )));
    }
    trace_code_generators_range(&ext, 1, t - 1, true)
}

/// Generators `T(β_i x^j)` for `lo <= j <= hi`, optionally with the
/// all-ones row, over the evaluation points `0, 1, ξ, ...`.
///
/// Only the range `[1, t-1]` with the all-ones row (the extended code used by
/// [`trace_code_generators`]) carries an orthogonal-array guarantee; other
/// ranges are exposed for experimentation.
pub fn trace_code_generators_range(
    ext: &FieldCtx,
    lo: usize,
    hi: usize,
    with_ones: bool,
) -> Result<GeneratorMatrix> {
    let base = ext.base_field().ok_or(Error::NoBaseField)?.clone();
    if lo > hi {
        return Err(Error::InvalidParameter(format!(
            "empty degree range [{lo}, {hi}]"
        )));
    }
    let m = ext.e() / base.e();
    let xi = ext.primitive_element().code();
    let k_cols = ext.order() as usize;

    let mut points = Vec::with_capacity(k_cols);
    points.push(0u32);
    let mut acc = 1u32;
    for _ in 1..k_cols {
        points.push(acc);
        acc = ext.mul_codes(acc, xi);
    }

    // ξ is primitive, so it has degree m over GF(q) and {1, ξ, ..., ξ^{m-1}} is a basis.
    let basis: Vec<u32> = (0..m).map(|i| ext.pow_code(xi, i as u64)).collect();
    let mut rows = Vec::with_capacity(m as usize * (hi - lo + 1) + 1);
    if with_ones {
        rows.push(vec![1u32; k_cols]);
    }
    for j in lo..=hi {
        let powers: Vec<u32> = points.iter().map(|&x| ext.pow_code(x, j as u64)).collect();
        for &beta in &basis {
            let row = powers
                .iter()
                .map(|&xj| ext.trace_code(ext.mul_codes(beta, xj)))
                .collect::<Result<Vec<u32>>>()?;
            rows.push(row);
        }
    }
    GeneratorMatrix::from_rows(base, k_cols, rows)
}

/// GF(q)-rank of the generator rows, recomputed by elimination.
pub fn code_dimension(g: &GeneratorMatrix) -> usize {
    rank_of(&g.field, g.rows.clone())
}

/// Lexicographic enumeration of all codewords; refuses when `q^rank > cap`.
pub fn enumerate_codewords(g: &GeneratorMatrix, cap: u128) -> Result<CodewordIter<'_>> {
    let required = g.codeword_count();
    if required > cap {
        return Err(Error::BudgetExceeded {
            what: "codeword enumeration",
            required,
            cap,
        });
    }
    Ok(CodewordIter {
        g,
        coeffs: vec![0; g.rank()],
        done: false,
    })
}

pub struct CodewordIter<'a> {
    g: &'a GeneratorMatrix,
    coeffs: Vec<u32>,
    done: bool,
}

impl CodewordIter<'_> {
    /// Writes the next codeword into `out` without allocating.
    pub fn next_into(&mut self, out: &mut [u32]) -> bool {
        if self.done {
            return false;
        }
        self.g.codeword_into(&self.coeffs, out);
        self.advance();
        true
    }

    fn advance(&mut self) {
        let q = self.g.q();
        for c in self.coeffs.iter_mut().rev() {
            *c += 1;
            if *c < q {
                return;
            }
            *c = 0;
        }
        self.done = true;
    }
}

impl Iterator for CodewordIter<'_> {
    type Item = Vec<u32>;

    fn next(&mut self) -> Option<Vec<u32>> {
        if self.done {
            return None;
        }
        let row = self.g.codeword(&self.coeffs);
        self.advance();
        Some(row)
    }
}

/// Column selection. The resulting OA keeps strength `t` when the source
/// had it; `columns.len()` must be at least `t`.
pub fn puncture(g: &GeneratorMatrix, columns: &[usize], t: usize) -> Result<GeneratorMatrix> {
    if columns.len() < t {
        return Err(Error::InvalidParameter(format!(
            "puncturing to {} columns is below strength {t}",
            columns.len()
        )));
    }
    let mut seen = vec![false; g.k_cols];
    for &c in columns {
        if c >= g.k_cols {
            return Err(Error::InvalidParameter(format!(
                "column {c} out of range 0..{}",
                g.k_cols
            )));
        }
        if std::mem::replace(&mut seen[c], true) {
            return Err(Error::InvalidParameter(format!("duplicate column {c}")));
        }
    }
    let rows = g
        .rows
        .iter()
        .map(|r| columns.iter().map(|&c| r[c]).collect())
        .collect();
    GeneratorMatrix::from_rows(g.field.clone(), columns.len(), rows)
}

/// Default puncture: the first `d` columns.
pub fn puncture_first(g: &GeneratorMatrix, d: usize, t: usize) -> Result<GeneratorMatrix> {
    let cols: Vec<usize> = (0..d).collect();
    puncture(g, &cols, t)
}
