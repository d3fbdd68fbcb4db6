//! Classical modular polynomials Φ_ℓ(X, Y).
//!
//! Three sources are supported: a built-in table for ℓ ≤ 13, text in the
//! symmetric `i j c` line format, and direct generation from the
//! q-expansion of j (over ℤ or over F_p).

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use super::field::{FieldCtx, Fp2Elem};
use super::poly::Poly;
use crate::primes::is_prime;
use crate::{Error, Result};

/// Levels covered by [`builtin`].
pub const BUILTIN_LEVELS: [u64; 6] = [2, 3, 5, 7, 11, 13];

/// Φ_ℓ with exact integer coefficients, stored as the monomials `(i, j, c)`
/// with `i ≥ j`; the monomial `(j, i)` carries the same coefficient.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModularPolynomial {
    ell: u64,
    terms: Vec<(usize, usize, BigInt)>,
}

impl ModularPolynomial {
    /// Validates the monomial list: `i ≥ j`, no duplicates, and X-degree ℓ+1.
    pub fn new(ell: u64, mut terms: Vec<(usize, usize, BigInt)>) -> Result<Self> {
        if !is_prime(ell) {
            return Err(Error::NonPrime(ell));
        }
        terms.retain(|t| !t.2.is_zero());
        terms.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        for (idx, t) in terms.iter().enumerate() {
            if t.0 < t.1 {
                return Err(Error::ParseError { line: 0, msg: alloc::format!("monomial ({}, {}) has i < j", t.0, t.1) });
            }
            if idx > 0 && (terms[idx - 1].0, terms[idx - 1].1) == (t.0, t.1) {
                return Err(Error::ParseError { line: 0, msg: alloc::format!("duplicate monomial ({}, {})", t.0, t.1) });
            }
        }
        let deg = terms.iter().map(|t| t.0).max().unwrap_or(0);
        let expected = ell as usize + 1;
        if deg != expected {
            return Err(Error::DegreeMismatch { ell, expected, found: deg });
        }
        Ok(ModularPolynomial { ell, terms })
    }

    pub fn ell(&self) -> u64 {
        self.ell
    }

    pub fn terms(&self) -> &[(usize, usize, BigInt)] {
        &self.terms
    }

    pub fn degree_x(&self) -> usize {
        self.ell as usize + 1
    }

    /// Coefficient of X^i Y^j.
    pub fn coeff(&self, i: usize, j: usize) -> BigInt {
        let key = if i >= j { (i, j) } else { (j, i) };
        self.terms
            .binary_search_by(|t| (t.0, t.1).cmp(&key))
            .map(|idx| self.terms[idx].2.clone())
            .unwrap_or_default()
    }

    /// Parse the `i j c` text format. Lines starting with `#` and blank lines
    /// are skipped.
    pub fn parse(ell: u64, text: &str) -> Result<Self> {
        let mut terms = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: &str| Error::ParseError { line: lineno + 1, msg: String::from(msg) };
            let mut fields = line.split_whitespace();
            let (Some(i), Some(j), Some(c), None) = (fields.next(), fields.next(), fields.next(), fields.next()) else {
                return Err(err("expected three fields `i j c`"));
            };
            let i: usize = i.parse().map_err(|_| err("bad exponent i"))?;
            let j: usize = j.parse().map_err(|_| err("bad exponent j"))?;
            let c: BigInt = c.parse().map_err(|_| err("bad coefficient"))?;
            if i < j {
                return Err(err("exponents must satisfy i >= j"));
            }
            terms.push((i, j, c));
        }
        ModularPolynomial::new(ell, terms).map_err(|e| match e {
            Error::ParseError { msg, .. } => Error::ParseError { line: 0, msg },
            other => other,
        })
    }

    /// Serialize to the `i j c` text format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# classical modular polynomial Phi_{}; monomials i j c with i >= j", self.ell);
        for (i, j, c) in &self.terms {
            let _ = writeln!(out, "{i} {j} {c}");
        }
        out
    }

    /// Reduce all coefficients modulo p.
    pub fn reduce(&self, p: u64) -> ReducedModPoly {
        let n = self.degree_x() + 1;
        let pb = BigInt::from(p);
        let mut coeffs = vec![0u64; n * n];
        for (i, j, c) in &self.terms {
            let mut r = c % &pb;
            if r.is_negative() {
                r += &pb;
            }
            let r = r.to_u64().expect("reduced coefficient fits in u64");
            coeffs[i * n + j] = r;
            coeffs[j * n + i] = r;
        }
        ReducedModPoly { ell: self.ell, p, size: n, coeffs }
    }

    /// Evaluate Φ_ℓ(x, y) over ℤ.
    pub fn eval_int(&self, x: &BigInt, y: &BigInt) -> BigInt {
        let mut total = BigInt::zero();
        for (i, j, c) in &self.terms {
            total += c * pow_int(x, *i) * pow_int(y, *j);
            if i != j {
                total += c * pow_int(x, *j) * pow_int(y, *i);
            }
        }
        total
    }
}

fn pow_int(x: &BigInt, e: usize) -> BigInt {
    num_traits::pow(x.clone(), e)
}

/// Built-in Φ_ℓ for ℓ ∈ {2, 3, 5, 7, 11, 13}.
pub fn builtin(ell: u64) -> Result<ModularPolynomial> {
    let text = match ell {
        2 => include_str!("../../data/phi_2.txt"),
        3 => include_str!("../../data/phi_3.txt"),
        5 => include_str!("../../data/phi_5.txt"),
        7 => include_str!("../../data/phi_7.txt"),
        11 => include_str!("../../data/phi_11.txt"),
        13 => include_str!("../../data/phi_13.txt"),
        _ => return Err(Error::Unavailable(ell)),
    };
    ModularPolynomial::parse(ell, text)
}

/// Φ_ℓ with coefficients reduced modulo p, stored densely and symmetrically.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReducedModPoly {
    ell: u64,
    p: u64,
    size: usize,
    coeffs: Vec<u64>,
}

impl ReducedModPoly {
    pub fn ell(&self) -> u64 {
        self.ell
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// Coefficient of X^i Y^j modulo p.
    pub fn coeff(&self, i: usize, j: usize) -> u64 {
        if i >= self.size || j >= self.size {
            return 0;
        }
        self.coeffs[i * self.size + j]
    }

    /// The univariate polynomial Φ_ℓ(j, Y) over F_{p²}.
    pub fn specialize(&self, ctx: &FieldCtx, j: Fp2Elem) -> Poly {
        let mut jpow = Vec::with_capacity(self.size);
        let mut acc = Fp2Elem::ONE;
        for _ in 0..self.size {
            jpow.push(acc);
            acc = ctx.mul(acc, j);
        }
        let coeffs = (0..self.size)
            .map(|k| {
                (0..self.size).fold(Fp2Elem::ZERO, |s, i| {
                    let c = self.coeff(i, k);
                    if c == 0 {
                        s
                    } else {
                        ctx.add(s, ctx.mul(Fp2Elem::from_fp(c), jpow[i]))
                    }
                })
            })
            .collect();
        Poly::new(coeffs)
    }

    /// Φ_ℓ(x, y) over F_{p²}.
    pub fn eval(&self, ctx: &FieldCtx, x: Fp2Elem, y: Fp2Elem) -> Fp2Elem {
        self.specialize(ctx, x).eval(ctx, y)
    }
}

/// Arithmetic needed by the q-expansion solver.
pub trait CoeffRing {
    type Elem: Clone;
    fn from_i64(&self, v: i64) -> Self::Elem;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn is_zero(&self, a: &Self::Elem) -> bool;
}

/// ℤ via `BigInt`.
pub struct Integers;

impl CoeffRing for Integers {
    type Elem = BigInt;
    fn from_i64(&self, v: i64) -> BigInt {
        BigInt::from(v)
    }
    fn add(&self, a: &BigInt, b: &BigInt) -> BigInt {
        a + b
    }
    fn sub(&self, a: &BigInt, b: &BigInt) -> BigInt {
        a - b
    }
    fn mul(&self, a: &BigInt, b: &BigInt) -> BigInt {
        a * b
    }
    fn is_zero(&self, a: &BigInt) -> bool {
        a.is_zero()
    }
}

/// F_p with `u64` representatives.
pub struct PrimeField(pub u64);

impl CoeffRing for PrimeField {
    type Elem = u64;
    fn from_i64(&self, v: i64) -> u64 {
        v.rem_euclid(self.0 as i64) as u64
    }
    fn add(&self, a: &u64, b: &u64) -> u64 {
        (a + b) % self.0
    }
    fn sub(&self, a: &u64, b: &u64) -> u64 {
        (a + self.0 - b) % self.0
    }
    fn mul(&self, a: &u64, b: &u64) -> u64 {
        ((*a as u128 * *b as u128) % self.0 as u128) as u64
    }
    fn is_zero(&self, a: &u64) -> bool {
        *a == 0
    }
}

fn series_mul<R: CoeffRing>(ring: &R, a: &[R::Elem], b: &[R::Elem], len: usize) -> Vec<R::Elem> {
    let mut out = vec![ring.from_i64(0); len];
    for (i, x) in a.iter().enumerate().take(len) {
        if ring.is_zero(x) {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(len - i) {
            out[i + j] = ring.add(&out[i + j], &ring.mul(x, y));
        }
    }
    out
}

/// q·j(q) = E₄(q)³ / Π(1 − qⁿ)²⁴, truncated to `len` terms.
pub fn j_times_q<R: CoeffRing>(ring: &R, len: usize) -> Vec<R::Elem> {
    // Euler's pentagonal theorem for Π(1 − qⁿ)
    let mut eta = vec![ring.from_i64(0); len];
    eta[0] = ring.from_i64(1);
    let mut k: i64 = 1;
    loop {
        let sign = if k % 2 == 1 { -1 } else { 1 };
        let p1 = (k * (3 * k - 1) / 2) as usize;
        let p2 = (k * (3 * k + 1) / 2) as usize;
        if p1 >= len {
            break;
        }
        eta[p1] = ring.from_i64(sign);
        if p2 < len {
            eta[p2] = ring.from_i64(sign);
        }
        k += 1;
    }
    let e2 = series_mul(ring, &eta, &eta, len);
    let e4 = series_mul(ring, &e2, &e2, len);
    let e8 = series_mul(ring, &e4, &e4, len);
    let e16 = series_mul(ring, &e8, &e8, len);
    let e24 = series_mul(ring, &e16, &e8, len);

    let mut eis = vec![ring.from_i64(0); len];
    eis[0] = ring.from_i64(1);
    for (n, slot) in eis.iter_mut().enumerate().skip(1) {
        let sigma3: i64 = (1..=n as i64).filter(|d| n as i64 % d == 0).map(|d| d * d * d).sum();
        *slot = ring.from_i64(240 * sigma3);
    }
    let eis2 = series_mul(ring, &eis, &eis, len);
    let eis3 = series_mul(ring, &eis2, &eis, len);

    // invert e24 (constant term 1)
    let mut inv = vec![ring.from_i64(0); len];
    inv[0] = ring.from_i64(1);
    for n in 1..len {
        let mut acc = ring.from_i64(0);
        for i in 1..=n {
            if !ring.is_zero(&e24[i]) {
                acc = ring.add(&acc, &ring.mul(&e24[i], &inv[n - i]));
            }
        }
        inv[n] = ring.sub(&ring.from_i64(0), &acc);
    }
    series_mul(ring, &eis3, &inv, len)
}

/// Solve for the coefficients of Φ_ℓ from Φ_ℓ(j(q), j(q^ℓ)) = 0.
///
/// Φ_ℓ = X^{ℓ+1} + Y^{ℓ+1} − X^ℓY^ℓ + Σ a_{ik} X^i Y^k (0 ≤ i, k ≤ ℓ,
/// a symmetric). The monomial X^iY^k with i ≤ k has leading term
/// q^{−(i+ℓk)} with coefficient 1, and every other monomial with that pole
/// order is already known when the unknowns are visited by decreasing pole
/// order, so each a_{ik} is read off one coefficient with no division.
/// The remaining coefficients up to q^ℓ must vanish; `None` if they do not.
///
/// Returns the dense symmetric coefficient matrix of size (ℓ+2)².
pub fn solve_coefficients<R: CoeffRing>(ring: &R, ell: usize) -> Option<Vec<R::Elem>> {
    let size = ell + 2;
    let lowest = (ell * (ell + 1)) as i64;
    let check_to = ell as i64;
    let span = (lowest + check_to + 1) as usize;
    let len = ell * ell + 3 * ell + 4;
    let jq = j_times_q(ring, len);

    let mut jpow: Vec<Vec<R::Elem>> = Vec::with_capacity(size);
    let mut one = vec![ring.from_i64(0); len];
    one[0] = ring.from_i64(1);
    jpow.push(one);
    for i in 1..size {
        let next = series_mul(ring, &jpow[i - 1], &jq, len);
        jpow.push(next);
    }

    let mut acc = vec![ring.from_i64(0); span];
    let zero = ring.from_i64(0);
    let mut coeffs = vec![zero.clone(); size * size];

    // acc[t + lowest] += a · X^i Y^k, for t in [−lowest, check_to]
    let add_monomial = |acc: &mut Vec<R::Elem>, a: &R::Elem, i: usize, k: usize| {
        let s_max = (check_to + i as i64).div_euclid(ell as i64);
        for s in -(k as i64)..=s_max {
            let ys = &jpow[k][(s + k as i64) as usize];
            if ring.is_zero(ys) {
                continue;
            }
            let factor = ring.mul(a, ys);
            let t_start = (ell as i64 * s - i as i64).max(-lowest);
            for t in t_start..=check_to {
                let idx = (t - ell as i64 * s + i as i64) as usize;
                let xs = &jpow[i][idx];
                if ring.is_zero(xs) {
                    continue;
                }
                let slot = (t + lowest) as usize;
                acc[slot] = ring.add(&acc[slot], &ring.mul(&factor, xs));
            }
        }
    };

    let unit = ring.from_i64(1);
    let minus_one = ring.from_i64(-1);
    add_monomial(&mut acc, &unit, ell + 1, 0);
    add_monomial(&mut acc, &unit, 0, ell + 1);
    add_monomial(&mut acc, &minus_one, ell, ell);
    coeffs[(ell + 1) * size] = unit.clone();
    coeffs[ell + 1] = unit;
    coeffs[ell * size + ell] = minus_one;

    let mut unknowns: Vec<(usize, usize)> =
        (0..=ell).flat_map(|k| (0..=k).map(move |i| (i, k))).filter(|&(i, k)| !(i == ell && k == ell)).collect();
    unknowns.sort_by_key(|&(i, k)| core::cmp::Reverse(i + ell * k));

    for (i, k) in unknowns {
        let pole = (i + ell * k) as i64;
        let a = ring.sub(&zero, &acc[(lowest - pole) as usize]);
        if ring.is_zero(&a) {
            continue;
        }
        add_monomial(&mut acc, &a, i, k);
        if i != k {
            add_monomial(&mut acc, &a, k, i);
        }
        coeffs[i * size + k] = a.clone();
        coeffs[k * size + i] = a;
    }

    if acc.iter().all(|c| ring.is_zero(c)) {
        Some(coeffs)
    } else {
        None
    }
}

/// Φ_ℓ over ℤ from the q-expansion of j.
pub fn generate(ell: u64) -> Result<ModularPolynomial> {
    if !is_prime(ell) {
        return Err(Error::NonPrime(ell));
    }
    let l = ell as usize;
    let coeffs = solve_coefficients(&Integers, l).ok_or(Error::Unavailable(ell))?;
    let size = l + 2;
    let terms = (0..size)
        .flat_map(|i| (0..=i).map(move |j| (i, j)))
        .map(|(i, j)| (i, j, coeffs[i * size + j].clone()))
        .collect();
    ModularPolynomial::new(ell, terms)
}

/// Φ_ℓ mod p from the q-expansion of j, without integer coefficients.
pub fn generate_mod_p(ell: u64, p: u64) -> Result<ReducedModPoly> {
    if !is_prime(ell) {
        return Err(Error::NonPrime(ell));
    }
    let l = ell as usize;
    let coeffs = solve_coefficients(&PrimeField(p), l).ok_or(Error::Unavailable(ell))?;
    Ok(ReducedModPoly { ell, p, size: l + 2, coeffs })
}

/// Builtin table when it covers ℓ, generation mod p otherwise.
pub fn reduced_for(ell: u64, p: u64) -> Result<ReducedModPoly> {
    match builtin(ell) {
        Ok(phi) => Ok(phi.reduce(p)),
        Err(Error::Unavailable(_)) => generate_mod_p(ell, p),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn j_expansion_matches_known_coefficients() {
        // q·j(q) = 1 + 744q + 196884q² + 21493760q³ + 864299970q⁴ + …
        let jq = j_times_q(&Integers, 6);
        let expected = [1i64, 744, 196884, 21493760, 864299970, 20245856256];
        for (got, want) in jq.iter().zip(expected) {
            assert_eq!(*got, BigInt::from(want));
        }
    }

    #[test]
    fn phi2_matches_published_coefficients() {
        let phi = builtin(2).unwrap();
        assert_eq!(phi.coeff(0, 0), "-157464000000000".parse::<BigInt>().unwrap());
        assert_eq!(phi.coeff(2, 2), BigInt::from(-1));
        assert_eq!(phi.coeff(3, 0), BigInt::from(1));
        assert_eq!(phi.coeff(2, 1), BigInt::from(1488));
        assert_eq!(phi.coeff(2, 0), BigInt::from(-162000));
        assert_eq!(phi.coeff(1, 1), BigInt::from(40773375));
        assert_eq!(phi.coeff(1, 0), BigInt::from(8748000000i64));
        assert_eq!(phi.terms().len(), 7);
    }

    #[test]
    fn phi3_leading_coefficients() {
        let phi = builtin(3).unwrap();
        assert_eq!(phi.degree_x(), 4);
        assert_eq!(phi.coeff(3, 2), BigInt::from(2232));
        assert_eq!(phi.coeff(3, 1), BigInt::from(-1069956));
        assert_eq!(phi.coeff(3, 0), BigInt::from(36864000));
        assert_eq!(phi.coeff(2, 2), BigInt::from(2587918086i64));
        assert_eq!(phi.coeff(0, 0), BigInt::zero());
    }

    #[test]
    fn builtin_table_equals_generator() {
        for ell in BUILTIN_LEVELS {
            assert_eq!(builtin(ell).unwrap(), generate(ell).unwrap(), "l = {ell}");
        }
    }

    #[test]
    fn mod_p_generation_agrees_with_integer_reduction() {
        for ell in BUILTIN_LEVELS {
            for p in [5u64, 7, 13, 101, 1009] {
                if p == ell {
                    continue;
                }
                assert_eq!(generate_mod_p(ell, p).unwrap(), builtin(ell).unwrap().reduce(p), "l={ell} p={p}");
            }
        }
    }

    #[test]
    fn symmetric_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for ell in BUILTIN_LEVELS {
            let phi = builtin(ell).unwrap();
            for _ in 0..100 {
                let a = BigInt::from(rng.gen_range(-1000i64..1000));
                let b = BigInt::from(rng.gen_range(-1000i64..1000));
                assert_eq!(phi.eval_int(&a, &b), phi.eval_int(&b, &a));
            }
        }
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(ModularPolynomial::parse(2, "3 0 1\n2 2 -1\nbogus"), Err(Error::ParseError { line: 3, .. })));
        assert!(matches!(ModularPolynomial::parse(2, "1 2 5\n3 0 1"), Err(Error::ParseError { .. })));
        assert!(matches!(ModularPolynomial::parse(2, "3 0 1\n3 0 2"), Err(Error::ParseError { .. })));
        assert_eq!(
            ModularPolynomial::parse(2, "# too small\n2 0 1\n1 1 -1\n"),
            Err(Error::DegreeMismatch { ell: 2, expected: 3, found: 2 })
        );
        assert_eq!(builtin(17), Err(Error::Unavailable(17)));
    }

    #[test]
    fn text_roundtrip() {
        let phi = builtin(5).unwrap();
        assert_eq!(ModularPolynomial::parse(5, &phi.to_text()).unwrap(), phi);
    }
}
