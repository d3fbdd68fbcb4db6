//! Dense univariate polynomials over F_{p²} and root finding.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::field::{FieldCtx, Fp2Elem};

/// Coefficients low degree first; no trailing zeros (the zero polynomial is
/// empty).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly {
    coeffs: Vec<Fp2Elem>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<Fp2Elem>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Poly { coeffs: vec![Fp2Elem::ONE] }
    }

    /// Y − r.
    pub fn linear(ctx: &FieldCtx, r: Fp2Elem) -> Self {
        Poly::new(vec![ctx.neg(r), Fp2Elem::ONE])
    }

    pub fn coeffs(&self) -> &[Fp2Elem] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn eval(&self, ctx: &FieldCtx, x: Fp2Elem) -> Fp2Elem {
        self.coeffs.iter().rev().fold(Fp2Elem::ZERO, |acc, &c| ctx.add(ctx.mul(acc, x), c))
    }

    pub fn sub(&self, ctx: &FieldCtx, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let get = |v: &[Fp2Elem], i: usize| v.get(i).copied().unwrap_or(Fp2Elem::ZERO);
        Poly::new((0..n).map(|i| ctx.sub(get(&self.coeffs, i), get(&other.coeffs, i))).collect())
    }

    pub fn mul(&self, ctx: &FieldCtx, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        // Accumulate unreduced products; each term is below 2^96 for p < 2^32,
        // so a u128 holds far more terms than any degree used here.
        let p = ctx.p() as u128;
        let ns = ctx.nonresidue() as u128;
        let len = self.coeffs.len() + other.coeffs.len() - 1;
        let mut re = vec![0u128; len];
        let mut im = vec![0u128; len];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let (aa, ab) = (a.a as u128, a.b as u128);
            for (j, b) in other.coeffs.iter().enumerate() {
                let (ba, bb) = (b.a as u128, b.b as u128);
                re[i + j] += aa * ba + ns * (ab * bb % p);
                im[i + j] += aa * bb + ab * ba;
            }
        }
        Poly::new(re.into_iter().zip(im).map(|(x, y)| Fp2Elem::new((x % p) as u64, (y % p) as u64)).collect())
    }

    pub fn div_rem(&self, ctx: &FieldCtx, divisor: &Poly) -> (Poly, Poly) {
        let dd = divisor.degree().expect("division by the zero polynomial");
        let lead_inv = ctx.inv(divisor.coeffs[dd]).expect("non-zero leading coefficient");
        if self.coeffs.len() <= dd {
            return (Poly::zero(), self.clone());
        }
        let p = ctx.p() as u128;
        let ns = ctx.nonresidue() as u128;
        let neg: Vec<(u128, u128)> = divisor.coeffs[..dd]
            .iter()
            .map(|&d| {
                let n = ctx.neg(d);
                (n.a as u128, n.b as u128)
            })
            .collect();
        // lazily reduced remainder; only the coefficient that fixes the next
        // quotient term is reduced
        let mut re: Vec<u128> = self.coeffs.iter().map(|c| c.a as u128).collect();
        let mut im: Vec<u128> = self.coeffs.iter().map(|c| c.b as u128).collect();
        let mut quot = vec![Fp2Elem::ZERO; self.coeffs.len() - dd];
        for k in (0..quot.len()).rev() {
            let top = Fp2Elem::new((re[k + dd] % p) as u64, (im[k + dd] % p) as u64);
            let c = ctx.mul(top, lead_inv);
            quot[k] = c;
            if c.is_zero() {
                continue;
            }
            let (ca, cb) = (c.a as u128, c.b as u128);
            for (i, &(na, nb)) in neg.iter().enumerate() {
                re[k + i] += ca * na + ns * (cb * nb % p);
                im[k + i] += ca * nb + cb * na;
            }
        }
        let rem = (0..dd).map(|i| Fp2Elem::new((re[i] % p) as u64, (im[i] % p) as u64)).collect();
        (Poly::new(quot), Poly::new(rem))
    }

    pub fn rem(&self, ctx: &FieldCtx, divisor: &Poly) -> Poly {
        self.div_rem(ctx, divisor).1
    }

    pub fn monic(&self, ctx: &FieldCtx) -> Poly {
        match self.coeffs.last() {
            None => Poly::zero(),
            Some(&lead) => {
                let inv = ctx.inv(lead).expect("non-zero leading coefficient");
                Poly::new(self.coeffs.iter().map(|&c| ctx.mul(c, inv)).collect())
            }
        }
    }

    /// Monic greatest common divisor.
    pub fn gcd(&self, ctx: &FieldCtx, other: &Poly) -> Poly {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let r = a.rem(ctx, &b);
            a = b;
            b = r;
        }
        a.monic(ctx)
    }

    /// `self^exp mod modulus`.
    pub fn pow_mod(&self, ctx: &FieldCtx, exp: u64, modulus: &Poly) -> Poly {
        let base = self.rem(ctx, modulus);
        let mut acc = Poly::one().rem(ctx, modulus);
        if exp == 0 {
            return acc;
        }
        // left to right, so a linear base costs a shift per set bit
        for bit in (0..64 - exp.leading_zeros()).rev() {
            acc = acc.mul(ctx, &acc).rem(ctx, modulus);
            if exp >> bit & 1 == 1 {
                acc = acc.mul(ctx, &base).rem(ctx, modulus);
            }
        }
        acc
    }
}

pub fn roots_with_multiplicity<R: Rng>(ctx: &FieldCtx, f: &Poly, rng: &mut R) -> Vec<(Fp2Elem, usize)> {
    let Some(deg) = f.degree() else {
        return Vec::new();
    };
    if deg == 0 {
        return Vec::new();
    }
    let f = f.monic(ctx);
    let q = ctx.p() * ctx.p();
    let y = Poly::new(vec![Fp2Elem::ZERO, Fp2Elem::ONE]);
    let frob = y.pow_mod(ctx, q, &f).sub(ctx, &y);
    let split = f.gcd(ctx, &frob);

    let mut distinct = Vec::new();
    split_linear(ctx, split, rng, &mut distinct);
    distinct.sort();

    distinct
        .into_iter()
        .map(|r| {
            let lin = Poly::linear(ctx, r);
            let mut g = f.clone();
            let mut mult = 0;
            loop {
                let (qt, rm) = g.div_rem(ctx, &lin);
                if !rm.is_zero() {
                    break;
                }
                mult += 1;
                g = qt;
            }
            (r, mult)
        })
        .collect()
}

// `g` is monic and a product of distinct linear factors.
fn split_linear<R: Rng>(ctx: &FieldCtx, g: Poly, rng: &mut R, out: &mut Vec<Fp2Elem>) {
    match g.degree() {
        None | Some(0) => {}
        Some(1) => out.push(ctx.neg(g.coeffs[0])),
        Some(_) => {
            let half = (ctx.p() * ctx.p() - 1) / 2;
            loop {
                let delta = ctx.elem(rng.gen_range(0..ctx.p()), rng.gen_range(0..ctx.p()));
                let shifted = Poly::new(vec![delta, Fp2Elem::ONE]);
                let h = shifted.pow_mod(ctx, half, &g).sub(ctx, &Poly::one());
                let d = g.gcd(ctx, &h);
                let dd = d.degree().unwrap_or(0);
                if dd > 0 && dd < g.degree().unwrap() {
                    let (cofactor, _) = g.div_rem(ctx, &d);
                    split_linear(ctx, d, rng, out);
                    split_linear(ctx, cofactor.monic(ctx), rng, out);
                    return;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn recovers_planted_roots() {
        let ctx = FieldCtx::new(101).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let planted = [(ctx.elem(3, 7), 2usize), (ctx.elem(0, 1), 1), (ctx.elem(55, 0), 3)];
        let mut f = Poly::one();
        for &(r, m) in &planted {
            for _ in 0..m {
                f = f.mul(&ctx, &Poly::linear(&ctx, r));
            }
        }
        // an irreducible quadratic factor over F_p² must not contribute roots:
        // Y² − g with g a generator is irreducible since g is a non-square
        let irreducible = Poly::new(vec![ctx.neg(ctx.generator()), Fp2Elem::ZERO, Fp2Elem::ONE]);
        f = f.mul(&ctx, &irreducible);
        let mut expected = planted.to_vec();
        expected.sort();
        assert_eq!(roots_with_multiplicity(&ctx, &f, &mut rng), expected);
    }

    #[test]
    fn roots_match_exhaustive_search() {
        let ctx = FieldCtx::new(13).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for trial in 0..20u64 {
            let f = Poly::new(
                (0..6).map(|i| ctx.elem(trial * 7 + i * i + 1, trial + 3 * i)).chain([Fp2Elem::ONE]).collect(),
            );
            let found: Vec<_> = roots_with_multiplicity(&ctx, &f, &mut rng).into_iter().map(|(r, _)| r).collect();
            let brute: Vec<_> = ctx.elements().filter(|&x| f.eval(&ctx, x).is_zero()).collect();
            assert_eq!(found, brute);
        }
    }
}
