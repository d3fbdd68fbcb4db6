use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use super::field::{FieldCtx, Fp2Elem};
use super::modpoly::ReducedModPoly;
use super::poly::roots_with_multiplicity;

/// A K-isomorphism class of curves over K = F_{p²}: the j-invariant plus a
/// twist index `b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CurveCode {
    pub j: Fp2Elem,
    pub b: u8,
}

impl fmt::Display for CurveCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.j, self.b)
    }
}

/// Valid twist indices for `j`: six for j = 0, four for j = 1728, two
/// otherwise.
pub fn twist_codes(j: Fp2Elem, ctx: &FieldCtx) -> Vec<u8> {
    let count = if j.is_zero() {
        6
    } else if j == ctx.from_i64(1728) {
        4
    } else {
        2
    };
    (0..count).collect()
}

/// Whether the curves with j-invariant `j ∈ F_p` are supersingular.
///
/// Counts points on one model over F_p: the trace is zero iff the curve is
/// supersingular (p ≥ 5, Hasse bound).
pub fn is_supersingular_fp(j: u64, ctx: &FieldCtx) -> bool {
    let p = ctx.p();
    let j = j % p;
    let (a, b) = weierstrass_for_j(j, p);
    // Σ_x χ(x³ + ax + b) is minus the trace
    let mut chi = alloc::vec![-1i8; p as usize];
    chi[0] = 0;
    for y in 1..p {
        chi[(y * y % p) as usize] = 1;
    }
    let sum: i64 = (0..p)
        .map(|x| {
            let rhs = (x * x % p * x % p + a * x % p + b) % p;
            chi[rhs as usize] as i64
        })
        .sum();
    sum == 0
}

/// Coefficients (A, B) of y² = x³ + Ax + B with j-invariant `j` over F_p.
pub(crate) fn weierstrass_for_j(j: u64, p: u64) -> (u64, u64) {
    let j1728 = 1728 % p;
    if j == 0 {
        (0, 1)
    } else if j == j1728 {
        (1, 0)
    } else {
        // A = 3j(1728 − j), B = 2j(1728 − j)²
        let k = (j1728 + p - j) % p;
        let jk = j * k % p;
        (3 * jk % p, 2 * jk % p * k % p)
    }
}

/// The smallest supersingular j-invariant lying in F_p.
pub fn find_seed_j(ctx: &FieldCtx) -> Fp2Elem {
    let j = (0..ctx.p())
        .find(|&j| is_supersingular_fp(j, ctx))
        .expect("a supersingular j-invariant lies in F_p for every p > 3");
    Fp2Elem::from_fp(j)
}

/// Roots of Φ_ℓ(j, Y) in F_{p²} with multiplicity, sorted by root.
pub fn phi_neighbors<R: Rng>(
    phi: &ReducedModPoly,
    j: Fp2Elem,
    ctx: &FieldCtx,
    rng: &mut R,
) -> Vec<(Fp2Elem, usize)> {
    roots_with_multiplicity(ctx, &phi.specialize(ctx, j), rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::modpoly::{builtin, reduced_for};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Point count by enumerating every (x, y) pair, plus the point at
    /// infinity. Independent of the character-sum path.
    fn brute_point_count(a: u64, b: u64, p: u64) -> u64 {
        let mut count = 1;
        for x in 0..p {
            let rhs = (x * x % p * x % p + a * x % p + b) % p;
            for y in 0..p {
                if y * y % p == rhs {
                    count += 1;
                }
            }
        }
        count
    }

    fn brute_j(a: u64, b: u64, p: u64) -> Option<u64> {
        // j = 1728 · 4A³ / (4A³ + 27B²)
        let a3 = 4 * (a * a % p * a % p) % p;
        let den = (a3 + 27 * (b * b % p)) % p;
        if den == 0 {
            return None;
        }
        let inv = crate::primes::pow_mod(den, p - 2, p);
        Some(1728 % p * a3 % p * inv % p)
    }

    #[test]
    fn examples() {
        let c13 = FieldCtx::new(13).unwrap();
        assert_eq!(brute_point_count(weierstrass_for_j(5, 13).0, weierstrass_for_j(5, 13).1, 13), 14);
        assert!(is_supersingular_fp(5, &c13));
        assert!(!is_supersingular_fp(0, &c13));
        let c23 = FieldCtx::new(23).unwrap();
        assert!(is_supersingular_fp(0, &c23));
        assert_eq!(find_seed_j(&c13), Fp2Elem::from_fp(5));
        assert_eq!(find_seed_j(&c23), Fp2Elem::from_fp(0));
        let c101 = FieldCtx::new(101).unwrap();
        let seed = find_seed_j(&c101);
        assert!(is_supersingular_fp(seed.a, &c101));
    }

    #[test]
    fn models_have_the_requested_j() {
        for p in [5u64, 7, 13, 101] {
            for j in 0..p {
                let (a, b) = weierstrass_for_j(j, p);
                assert_eq!(brute_j(a, b, p), Some(j), "p={p} j={j}");
            }
        }
    }

    #[test]
    fn supersingularity_matches_brute_force_trace() {
        for p in crate::primes::primes_in(5, 200) {
            let ctx = FieldCtx::new(p).unwrap();
            for j in 0..p {
                let (a, b) = weierstrass_for_j(j, p);
                let trace = p as i64 + 1 - brute_point_count(a, b, p) as i64;
                assert_eq!(is_supersingular_fp(j, &ctx), trace == 0, "p={p} j={j}");
            }
        }
    }

    #[test]
    fn twist_code_sets() {
        let ctx = FieldCtx::new(13).unwrap();
        assert_eq!(twist_codes(Fp2Elem::from_fp(5), &ctx), [0, 1]);
        assert_eq!(twist_codes(Fp2Elem::ZERO, &ctx), [0, 1, 2, 3, 4, 5]);
        assert_eq!(twist_codes(ctx.from_i64(1728), &ctx), [0, 1, 2, 3]);
    }

    #[test]
    fn neighbors_p13_single_vertex() {
        let ctx = FieldCtx::new(13).unwrap();
        let phi = builtin(2).unwrap().reduce(13);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(phi_neighbors(&phi, Fp2Elem::from_fp(5), &ctx, &mut rng), [(Fp2Elem::from_fp(5), 3)]);
    }

    #[test]
    fn neighbors_p101_are_supersingular() {
        let ctx = FieldCtx::new(101).unwrap();
        let phi = reduced_for(2, 101).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let seed = find_seed_j(&ctx);
        let nb = phi_neighbors(&phi, seed, &ctx, &mut rng);
        assert_eq!(nb.iter().map(|x| x.1).sum::<usize>(), 3);
        for (j, _) in nb {
            if j.is_fp() {
                assert!(is_supersingular_fp(j.a, &ctx));
            }
        }
    }
}
