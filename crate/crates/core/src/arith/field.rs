use core::fmt;

use crate::primes::{is_prime, mul_mod, pow_mod, prime_factors};
use crate::{Error, Result};

/// An element `a + b·t` of F_{p²} = F_p[t]/(t² − ns).
///
/// The derived `Ord` is lexicographic on `(a, b)`; vertex lists are sorted
/// by it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Fp2Elem {
    pub a: u64,
    pub b: u64,
}

impl Fp2Elem {
    pub const ZERO: Fp2Elem = Fp2Elem { a: 0, b: 0 };
    pub const ONE: Fp2Elem = Fp2Elem { a: 1, b: 0 };

    pub const fn new(a: u64, b: u64) -> Self {
        Fp2Elem { a, b }
    }

    pub const fn from_fp(a: u64) -> Self {
        Fp2Elem { a, b: 0 }
    }

    pub fn is_zero(self) -> bool {
        self.a == 0 && self.b == 0
    }

    /// True when the element lies in the prime field.
    pub fn is_fp(self) -> bool {
        self.b == 0
    }
}

impl fmt::Display for Fp2Elem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+{}*t", self.a, self.b)
    }
}

/// The prime `p` together with a fixed model of F_{p²}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldCtx {
    p: u64,
    ns: u64,
    generator: Fp2Elem,
}

/// Largest supported characteristic. Products of two reduced values must
/// fit in a `u64`.
pub const MAX_P: u64 = (1 << 32) - 1;

impl FieldCtx {
    pub fn new(p: u64) -> Result<Self> {
        if p <= 3 {
            return Err(if is_prime(p) { Error::PTooSmall(p) } else { Error::NonPrime(p) });
        }
        if !is_prime(p) {
            return Err(Error::NonPrime(p));
        }
        if p > MAX_P {
            return Err(Error::DomainError(alloc::format!("p = {p} exceeds {MAX_P}")));
        }
        let ns = (2..p).find(|&x| legendre(x, p) == -1).expect("odd prime has a non-residue");
        let mut ctx = FieldCtx { p, ns, generator: Fp2Elem::ONE };
        ctx.generator = ctx.find_generator();
        Ok(ctx)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn nonresidue(&self) -> u64 {
        self.ns
    }

    /// A generator of F_{p²}^×: the smallest element in the canonical order
    /// whose multiplicative order is p² − 1.
    pub fn generator(&self) -> Fp2Elem {
        self.generator
    }

    fn find_generator(&self) -> Fp2Elem {
        let order = self.p * self.p - 1;
        let mut factors = prime_factors(self.p - 1);
        for q in prime_factors(self.p + 1) {
            if !factors.contains(&q) {
                factors.push(q);
            }
        }
        // a·1 and b·t have order dividing 2(p − 1), so a generator has a, b ≠ 0
        for a in 1..self.p {
            for b in 1..self.p {
                let x = Fp2Elem::new(a, b);
                if factors.iter().all(|&q| self.pow(x, order / q) != Fp2Elem::ONE) {
                    return x;
                }
            }
        }
        unreachable!("F_p² has a primitive element")
    }

    pub fn elem(&self, a: u64, b: u64) -> Fp2Elem {
        Fp2Elem::new(a % self.p, b % self.p)
    }

    /// Reduce a signed integer into F_p ⊂ F_{p²}.
    pub fn from_i64(&self, v: i64) -> Fp2Elem {
        Fp2Elem::from_fp(v.rem_euclid(self.p as i64) as u64)
    }

    pub fn add(&self, x: Fp2Elem, y: Fp2Elem) -> Fp2Elem {
        Fp2Elem::new(add_fp(x.a, y.a, self.p), add_fp(x.b, y.b, self.p))
    }

    pub fn sub(&self, x: Fp2Elem, y: Fp2Elem) -> Fp2Elem {
        Fp2Elem::new(sub_fp(x.a, y.a, self.p), sub_fp(x.b, y.b, self.p))
    }

    pub fn neg(&self, x: Fp2Elem) -> Fp2Elem {
        self.sub(Fp2Elem::ZERO, x)
    }

    pub fn mul(&self, x: Fp2Elem, y: Fp2Elem) -> Fp2Elem {
        let p = self.p;
        // (a + bt)(c + dt) = (ac + ns·bd) + (ad + bc)t
        let ac = x.a * y.a % p;
        let bd = x.b * y.b % p;
        let ad = x.a * y.b % p;
        let bc = x.b * y.a % p;
        Fp2Elem::new((ac + self.ns * bd % p) % p, (ad + bc) % p)
    }

    pub fn square(&self, x: Fp2Elem) -> Fp2Elem {
        self.mul(x, x)
    }

    pub fn pow(&self, mut base: Fp2Elem, mut exp: u64) -> Fp2Elem {
        let mut acc = Fp2Elem::ONE;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.square(base);
            exp >>= 1;
        }
        acc
    }

    /// Norm to F_p: (a + bt)(a − bt) = a² − ns·b².
    pub fn norm(&self, x: Fp2Elem) -> u64 {
        let p = self.p;
        sub_fp(x.a * x.a % p, self.ns * (x.b * x.b % p) % p, p)
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self, x: Fp2Elem) -> Option<Fp2Elem> {
        if x.is_zero() {
            return None;
        }
        let n = self.norm(x);
        let n_inv = pow_mod(n, self.p - 2, self.p);
        Some(Fp2Elem::new(
            mul_mod(x.a, n_inv, self.p),
            mul_mod(self.p - x.b % self.p, n_inv, self.p) % self.p,
        ))
    }

    /// Legendre symbol of `a` modulo p, in {−1, 0, 1}.
    pub fn legendre_fp(&self, a: u64) -> i32 {
        legendre(a, self.p)
    }

    /// Every element of F_{p²} in canonical order.
    pub fn elements(&self) -> impl Iterator<Item = Fp2Elem> + '_ {
        (0..self.p).flat_map(move |a| (0..self.p).map(move |b| Fp2Elem::new(a, b)))
    }
}

fn add_fp(x: u64, y: u64, p: u64) -> u64 {
    let s = x + y;
    if s >= p {
        s - p
    } else {
        s
    }
}

fn sub_fp(x: u64, y: u64, p: u64) -> u64 {
    if x >= y {
        x - y
    } else {
        x + p - y
    }
}

fn legendre(a: u64, p: u64) -> i32 {
    let a = a % p;
    if a == 0 {
        return 0;
    }
    if pow_mod(a, (p - 1) / 2, p) == 1 {
        1
    } else {
        -1
    }
}
