//! Finite fields GF(p^e) in polynomial-basis representation.
//!
//! Elements are identified with canonical integer codes: the coefficient
//! vector `(c_0, ..., c_{e-1})` of `c_0 + c_1 x + ... + c_{e-1} x^{e-1}` is
//! encoded as `c_0 + c_1 p + ... + c_{e-1} p^{e-1}`. The modulus of every
//! field is the lexicographically smallest monic irreducible polynomial of
//! the requested degree, so codes are reproducible across runs.
//!
//! An extension GF(q^m) of GF(q), q = p^e, is realized as GF(p^{em}) with
//! a precomputed embedding of GF(q). The field trace then lands on codes
//! of the standalone GF(q) context, which are also the orthogonal-array
//! symbols used elsewhere in the crate.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Largest supported field order.
pub const MAX_FIELD_ORDER: u32 = 1 << 20;

/// Fields up to this order get precomputed add/mul/inv tables.
const TABLE_ORDER_LIMIT: u32 = 256;

const MAX_DEGREE: usize = 20;

/// An element of a finite field, tagged with the (p, e) of its field.
///
/// Two contexts with the same `(p, e)` describe the same field because the
/// modulus is chosen deterministically.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldElem {
    p: u32,
    e: u32,
    code: u32,
}

impl FieldElem {
    /// Canonical integer code in `[0, p^e)`.
    pub fn code(&self) -> u32 {
        self.code
    }

    pub fn is_zero(&self) -> bool {
        self.code == 0
    }

    /// `(p, e)` of the owning field.
    pub fn field_id(&self) -> (u32, u32) {
        (self.p, self.e)
    }
}

impl fmt::Debug for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({}^{})#{}", self.p, self.e, self.code)
    }
}

#[derive(Debug)]
struct Tables {
    add: Vec<u32>,
    mul: Vec<u32>,
    inv: Vec<u32>,
}

#[derive(Debug)]
struct Subfield {
    field: FieldCtx,
    /// base code -> extension code
    embed: Vec<u32>,
    /// extension code -> base code, `u32::MAX` outside the subfield
    project: Vec<u32>,
}

/// Arithmetic context for GF(p^e). Immutable and cheap to clone.
#[derive(Clone, Debug)]
pub struct FieldCtx {
    p: u32,
    e: u32,
    order: u32,
    /// Monic modulus, low to high, length e + 1.
    modulus: Vec<u32>,
    tables: Option<Arc<Tables>>,
    base: Option<Arc<Subfield>>,
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Decomposes `q = p^e` with `p` prime.
pub fn prime_power(q: u64) -> Option<(u32, u32)> {
    if q < 2 {
        return None;
    }
    let mut p = 2;
    while p * p <= q && q % p != 0 {
        p += 1;
    }
    if q % p != 0 {
        p = q;
    }
    let mut rest = q;
    let mut e = 0;
    while rest % p == 0 {
        rest /= p;
        e += 1;
    }
    (rest == 1).then_some((p as u32, e))
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Builds GF(p^e) with the lexicographically smallest monic irreducible modulus.
pub fn make_field(p: u32, e: u32) -> Result<FieldCtx> {
    if !is_prime(p as u64) {
        return Err(Error::NotPrime(p as u64));
    }
    if e == 0 {
        return Err(Error::ZeroDegree);
    }
    let order = (p as u64)
        .checked_pow(e)
        .filter(|&o| o <= MAX_FIELD_ORDER as u64)
        .ok_or(Error::FieldTooLarge { p, e })? as u32;
    let modulus = smallest_irreducible(p, e as usize);
    let mut ctx = FieldCtx {
        p,
        e,
        order,
        modulus,
        tables: None,
        base: None,
    };
    if order <= TABLE_ORDER_LIMIT {
        ctx.tables = Some(Arc::new(ctx.build_tables()));
    }
    Ok(ctx)
}

/// Builds GF(q^m) for `q = p^e`, with GF(q) as its distinguished base subfield.
pub fn make_extension(p: u32, e: u32, m: u32) -> Result<FieldCtx> {
    if m == 0 || e == 0 {
        return Err(Error::ZeroDegree);
    }
    let total = e.checked_mul(m).ok_or(Error::FieldTooLarge { p, e })?;
    let mut big = make_field(p, total)?;
    let small = make_field(p, e)?;
    let q = small.order;

    // The subfield fixed by the q-power Frobenius is {0} ∪ <g^((|F|-1)/(q-1))>.
    let g = big.primitive_code();
    let step = (big.order as u64 - 1) / (q as u64 - 1);
    let h = big.pow_code(g, step);
    let mut fixed = Vec::with_capacity(q as usize);
    fixed.push(0u32);
    let mut acc = 1u32;
    for _ in 0..q - 1 {
        fixed.push(acc);
        acc = big.mul_codes(acc, h);
    }
    fixed.sort_unstable();
    let root = fixed
        .iter()
        .copied()
        .find(|&a| big.eval_poly_code(&small.modulus, a) == 0)
        .expect("the Frobenius-fixed subfield contains a root of every degree-e irreducible");

    let root_powers: Vec<u32> = (0..e).map(|i| big.pow_code(root, i as u64)).collect();
    let mut embed = Vec::with_capacity(q as usize);
    let mut project = vec![u32::MAX; big.order as usize];
    for code in 0..q {
        let mut acc = 0;
        for (i, c) in small.digits(code).iter().take(e as usize).enumerate() {
            let term = big.mul_codes(big.scalar_code(*c), root_powers[i]);
            acc = big.add_codes(acc, term);
        }
        debug_assert_eq!(project[acc as usize], u32::MAX);
        project[acc as usize] = code;
        embed.push(acc);
    }
    big.base = Some(Arc::new(Subfield {
        field: small,
        embed,
        project,
    }));
    Ok(big)
}

impl FieldCtx {
    /// GF(q) for a prime power `q`.
    pub fn for_order(q: u64) -> Result<FieldCtx> {
        let (p, e) = prime_power(q).ok_or(Error::NotPrimePower(q))?;
        make_field(p, e)
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn e(&self) -> u32 {
        self.e
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// Monic modulus coefficients, constant term first.
    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    /// Degree over GF(p) of the distinguished base subfield, if any.
    pub fn base_degree(&self) -> Option<u32> {
        self.base.as_ref().map(|b| b.field.e)
    }

    pub fn base_field(&self) -> Option<&FieldCtx> {
        self.base.as_ref().map(|b| &b.field)
    }

    /// Extension code of a base-field element.
    pub fn embed_base(&self, x: FieldElem) -> Result<FieldElem> {
        let base = self.base.as_ref().ok_or(Error::NoBaseField)?;
        base.field.check(x)?;
        Ok(self.wrap(base.embed[x.code as usize]))
    }

    /// Base-field element equal to `x`, if `x` lies in the base subfield.
    pub fn project_base(&self, x: FieldElem) -> Result<Option<FieldElem>> {
        let base = self.base.as_ref().ok_or(Error::NoBaseField)?;
        self.check(x)?;
        let c = base.project[x.code as usize];
        Ok((c != u32::MAX).then(|| base.field.wrap(c)))
    }

    pub fn elem(&self, code: u32) -> Result<FieldElem> {
        if code >= self.order {
            return Err(Error::InvalidElement {
                code,
                order: self.order,
            });
        }
        Ok(self.wrap(code))
    }

    /// Element with the given polynomial coefficients (constant term first).
    pub fn from_coeffs(&self, coeffs: &[u32]) -> Result<FieldElem> {
        if coeffs.len() > self.e as usize || coeffs.iter().any(|&c| c >= self.p) {
            return Err(Error::InvalidParameter(format!(
                "coefficients {coeffs:?} do not describe an element of GF({}^{})",
                self.p, self.e
            )));
        }
        Ok(self.wrap(self.encode(coeffs)))
    }

    pub fn coeffs(&self, x: FieldElem) -> Vec<u32> {
        self.digits(x.code)[..self.e as usize].to_vec()
    }

    pub fn zero(&self) -> FieldElem {
        self.wrap(0)
    }

    pub fn one(&self) -> FieldElem {
        self.wrap(1)
    }

    pub fn elements(&self) -> impl Iterator<Item = FieldElem> + '_ {
        (0..self.order).map(|c| self.wrap(c))
    }

    pub fn add(&self, a: FieldElem, b: FieldElem) -> Result<FieldElem> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.wrap(self.add_codes(a.code, b.code)))
    }

    pub fn sub(&self, a: FieldElem, b: FieldElem) -> Result<FieldElem> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.wrap(self.sub_codes(a.code, b.code)))
    }

    pub fn neg(&self, a: FieldElem) -> Result<FieldElem> {
        self.check(a)?;
        Ok(self.wrap(self.neg_code(a.code)))
    }

    pub fn mul(&self, a: FieldElem, b: FieldElem) -> Result<FieldElem> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.wrap(self.mul_codes(a.code, b.code)))
    }

    pub fn inv(&self, a: FieldElem) -> Result<FieldElem> {
        self.check(a)?;
        if a.code == 0 {
            return Err(Error::ZeroInverse);
        }
        Ok(self.wrap(self.inv_code(a.code)))
    }

    pub fn div(&self, a: FieldElem, b: FieldElem) -> Result<FieldElem> {
        let b_inv = self.inv(b)?;
        self.mul(a, b_inv)
    }

    pub fn pow(&self, a: FieldElem, n: u64) -> Result<FieldElem> {
        self.check(a)?;
        Ok(self.wrap(self.pow_code(a.code, n)))
    }

    /// Multiplicative order of a nonzero element.
    pub fn multiplicative_order(&self, a: FieldElem) -> Result<u64> {
        self.check(a)?;
        if a.code == 0 {
            return Err(Error::ZeroInverse);
        }
        let mut ord = self.order as u64 - 1;
        for r in prime_factors(ord) {
            while ord % r == 0 && self.pow_code(a.code, ord / r) == 1 {
                ord /= r;
            }
        }
        Ok(ord)
    }

    /// The generator of the multiplicative group with the smallest code.
    pub fn primitive_element(&self) -> FieldElem {
        self.wrap(self.primitive_code())
    }

    fn primitive_code(&self) -> u32 {
        let n = self.order as u64 - 1;
        let factors = prime_factors(n);
        (1..self.order)
            .find(|&a| factors.iter().all(|&r| self.pow_code(a, n / r) != 1))
            .expect("every finite field has a primitive element")
    }

    /// Field trace down to the base subfield:
    /// `T(x) = x + x^q + ... + x^{q^{m-1}}`, returned in the base context.
    pub fn trace(&self, x: FieldElem) -> Result<FieldElem> {
        self.check(x)?;
        let base = self.base.as_ref().ok_or(Error::NoBaseField)?;
        Ok(base.field.wrap(self.trace_code_unchecked(base, x.code)))
    }

    /// Code-level trace; `x` must be a valid code of this field.
    pub fn trace_code(&self, x: u32) -> Result<u32> {
        let base = self.base.as_ref().ok_or(Error::NoBaseField)?;
        Ok(self.trace_code_unchecked(base, x))
    }

    fn trace_code_unchecked(&self, base: &Subfield, x: u32) -> u32 {
        let q = base.field.order as u64;
        let m = self.e / base.field.e;
        let mut acc = 0;
        let mut term = x;
        for _ in 0..m {
            acc = self.add_codes(acc, term);
            term = self.pow_code(term, q);
        }
        let c = base.project[acc as usize];
        debug_assert_ne!(c, u32::MAX, "trace left the base subfield");
        c
    }

    // ---- code-level arithmetic (no context checks) ----

    pub fn add_codes(&self, a: u32, b: u32) -> u32 {
        if let Some(t) = &self.tables {
            return t.add[(a * self.order + b) as usize];
        }
        if self.p == 2 {
            return a ^ b;
        }
        if self.e == 1 {
            return (a + b) % self.p;
        }
        let (da, db) = (self.digits(a), self.digits(b));
        let mut out = [0u32; MAX_DEGREE];
        for i in 0..self.e as usize {
            out[i] = (da[i] + db[i]) % self.p;
        }
        self.encode(&out[..self.e as usize])
    }

    pub fn neg_code(&self, a: u32) -> u32 {
        if self.p == 2 {
            return a;
        }
        let da = self.digits(a);
        let mut out = [0u32; MAX_DEGREE];
        for i in 0..self.e as usize {
            out[i] = (self.p - da[i]) % self.p;
        }
        self.encode(&out[..self.e as usize])
    }

    pub fn sub_codes(&self, a: u32, b: u32) -> u32 {
        self.add_codes(a, self.neg_code(b))
    }

    pub fn mul_codes(&self, a: u32, b: u32) -> u32 {
        if let Some(t) = &self.tables {
            return t.mul[(a * self.order + b) as usize];
        }
        self.mul_codes_slow(a, b)
    }

    fn mul_codes_slow(&self, a: u32, b: u32) -> u32 {
        let p = self.p as u64;
        if self.e == 1 {
            return ((a as u64 * b as u64) % p) as u32;
        }
        let e = self.e as usize;
        let (da, db) = (self.digits(a), self.digits(b));
        let mut prod = [0u64; 2 * MAX_DEGREE];
        for i in 0..e {
            if da[i] == 0 {
                continue;
            }
            for j in 0..e {
                prod[i + j] = (prod[i + j] + da[i] as u64 * db[j] as u64) % p;
            }
        }
        for deg in (e..2 * e - 1).rev() {
            let c = prod[deg];
            if c == 0 {
                continue;
            }
            for j in 0..e {
                let idx = deg - e + j;
                prod[idx] = (prod[idx] + (p - c) * self.modulus[j] as u64) % p;
            }
            prod[deg] = 0;
        }
        let mut out = [0u32; MAX_DEGREE];
        for i in 0..e {
            out[i] = prod[i] as u32;
        }
        self.encode(&out[..e])
    }

    pub fn pow_code(&self, a: u32, mut n: u64) -> u32 {
        let mut base = a;
        let mut acc = 1;
        while n > 0 {
            if n & 1 == 1 {
                acc = self.mul_codes(acc, base);
            }
            base = self.mul_codes(base, base);
            n >>= 1;
        }
        acc
    }

    /// Inverse of a nonzero code; returns 0 for 0.
    pub fn inv_code(&self, a: u32) -> u32 {
        if let Some(t) = &self.tables {
            return t.inv[a as usize];
        }
        if a == 0 {
            return 0;
        }
        self.pow_code(a, self.order as u64 - 2)
    }

    /// Code of the prime-subfield scalar `c` in `[0, p)`.
    fn scalar_code(&self, c: u32) -> u32 {
        c
    }

    fn eval_poly_code(&self, poly: &[u32], x: u32) -> u32 {
        // poly has coefficients in GF(p); Horner from the top.
        poly.iter().rev().fold(0, |acc, &c| {
            self.add_codes(self.mul_codes(acc, x), self.scalar_code(c))
        })
    }

    fn digits(&self, mut code: u32) -> [u32; MAX_DEGREE] {
        let mut out = [0u32; MAX_DEGREE];
        for d in out.iter_mut().take(self.e as usize) {
            *d = code % self.p;
            code /= self.p;
        }
        out
    }

    fn encode(&self, coeffs: &[u32]) -> u32 {
        coeffs.iter().rev().fold(0, |acc, &c| acc * self.p + c)
    }

    fn wrap(&self, code: u32) -> FieldElem {
        FieldElem {
            p: self.p,
            e: self.e,
            code,
        }
    }

    fn check(&self, x: FieldElem) -> Result<()> {
        if x.p != self.p || x.e != self.e {
            return Err(Error::ContextMismatch);
        }
        if x.code >= self.order {
            return Err(Error::InvalidElement {
                code: x.code,
                order: self.order,
            });
        }
        Ok(())
    }

    fn build_tables(&self) -> Tables {
        let n = self.order as usize;
        let mut add = vec![0u32; n * n];
        let mut mul = vec![0u32; n * n];
        for a in 0..self.order {
            for b in 0..self.order {
                let idx = (a * self.order + b) as usize;
                let (da, db) = (self.digits(a), self.digits(b));
                let mut s = [0u32; MAX_DEGREE];
                for i in 0..self.e as usize {
                    s[i] = (da[i] + db[i]) % self.p;
                }
                add[idx] = self.encode(&s[..self.e as usize]);
                mul[idx] = self.mul_codes_slow(a, b);
            }
        }
        let mut inv = vec![0u32; n];
        for a in 1..self.order {
            inv[a as usize] = (1..self.order)
                .find(|&b| mul[(a * self.order + b) as usize] == 1)
                .expect("nonzero elements are invertible");
        }
        Tables { add, mul, inv }
    }
}

/// Monic irreducible of degree `e` over GF(p) whose lower coefficients,
/// read as a base-p integer with the constant term least significant, are
/// smallest.
fn smallest_irreducible(p: u32, e: usize) -> Vec<u32> {
    if e == 1 {
        return vec![0, 1];
    }
    let count = (p as u64).pow(e as u32);
    for code in 0..count {
        let mut f = Vec::with_capacity(e + 1);
        let mut c = code;
        for _ in 0..e {
            f.push((c % p as u64) as u32);
            c /= p as u64;
        }
        f.push(1);
        if poly::is_irreducible(&f, p) {
            return f;
        }
    }
    unreachable!("irreducible polynomials exist in every degree")
}

pub(crate) mod poly {
    //! Dense polynomials over GF(p), constant term first, no trailing zeros
    //! except the zero polynomial `[]`.

    fn trim(mut a: Vec<u32>) -> Vec<u32> {
        while a.last() == Some(&0) {
            a.pop();
        }
        a
    }

    fn inv_mod(a: u32, p: u32) -> u32 {
        let mut acc = 1u64;
        let mut base = a as u64 % p as u64;
        let mut n = p as u64 - 2;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc * base % p as u64;
            }
            base = base * base % p as u64;
            n >>= 1;
        }
        acc as u32
    }

    pub fn rem(a: &[u32], m: &[u32], p: u32) -> Vec<u32> {
        let m = trim(m.to_vec());
        let mut r = trim(a.to_vec());
        let lead_inv = inv_mod(*m.last().expect("nonzero modulus"), p) as u64;
        let p64 = p as u64;
        while r.len() >= m.len() {
            let shift = r.len() - m.len();
            let c = *r.last().unwrap() as u64 * lead_inv % p64;
            for (j, &mj) in m.iter().enumerate() {
                let idx = shift + j;
                r[idx] = ((r[idx] as u64 + (p64 - c) * mj as u64 % p64) % p64) as u32;
            }
            r = trim(r);
        }
        r
    }

    pub fn mul_mod(a: &[u32], b: &[u32], m: &[u32], p: u32) -> Vec<u32> {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let mut prod = vec![0u64; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                prod[i + j] = (prod[i + j] + x as u64 * y as u64) % p as u64;
            }
        }
        let prod: Vec<u32> = prod.into_iter().map(|v| v as u32).collect();
        rem(&prod, m, p)
    }

    pub fn pow_mod(a: &[u32], mut n: u64, m: &[u32], p: u32) -> Vec<u32> {
        let mut base = rem(a, m, p);
        let mut acc = rem(&[1], m, p);
        while n > 0 {
            if n & 1 == 1 {
                acc = mul_mod(&acc, &base, m, p);
            }
            base = mul_mod(&base, &base, m, p);
            n >>= 1;
        }
        acc
    }

    pub fn sub(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
        let n = a.len().max(b.len());
        let out = (0..n)
            .map(|i| {
                let x = a.get(i).copied().unwrap_or(0);
                let y = b.get(i).copied().unwrap_or(0);
                (x + p - y) % p
            })
            .collect();
        trim(out)
    }

    pub fn gcd(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
        let mut a = trim(a.to_vec());
        let mut b = trim(b.to_vec());
        while !b.is_empty() {
            let r = rem(&a, &b, p);
            a = b;
            b = r;
        }
        a
    }

    pub fn has_root(f: &[u32], p: u32) -> bool {
        (0..p).any(|x| {
            let v = f
                .iter()
                .rev()
                .fold(0u64, |acc, &c| (acc * x as u64 + c as u64) % p as u64);
            v == 0
        })
    }

    /// Irreducibility of a monic `f` of degree `e`: no roots in GF(p) and
    /// `gcd(f, x^(p^i) - x) = 1` for every `1 <= i < e`.
    pub fn is_irreducible(f: &[u32], p: u32) -> bool {
        let e = f.len() - 1;
        if e == 1 {
            return true;
        }
        if has_root(f, p) {
            return false;
        }
        let x = vec![0, 1];
        let mut frob = x.clone();
        for _ in 1..e {
            frob = pow_mod(&frob, p as u64, f, p);
            let g = gcd(f, &sub(&frob, &x, p), p);
            if g.len() > 1 {
                return false;
            }
        }
        true
    }
}
