use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ssgraph_core::action::{chi, make_kappa, refinement_error, AbelianGroupSpec, RegularActionTable};
use ssgraph_core::arith::poly::{roots_with_multiplicity, Poly};
use ssgraph_core::arith::{FieldCtx, Fp2Elem};
use ssgraph_core::graph::hecke_family;
use ssgraph_core::spectra::{joint_diagonalize, separation_report, supnorm_report};
use ssgraph_core::walksim::{expansion, initial_state, oracle_distribution, total_variation};

const PRIMES: [u64; 8] = [5, 13, 101, 1009, 65_521, 1_000_003, 2_147_483_647, 4_294_967_291];

fn elem(ctx: &FieldCtx, a: u64, b: u64) -> Fp2Elem {
    ctx.elem(a % ctx.p(), b % ctx.p())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn field_axioms(pi in 0..PRIMES.len(), v in proptest::array::uniform6(any::<u64>())) {
        let ctx = FieldCtx::new(PRIMES[pi]).unwrap();
        let x = elem(&ctx, v[0], v[1]);
        let y = elem(&ctx, v[2], v[3]);
        let z = elem(&ctx, v[4], v[5]);
        prop_assert_eq!(ctx.mul(x, ctx.add(y, z)), ctx.add(ctx.mul(x, y), ctx.mul(x, z)));
        prop_assert_eq!(ctx.mul(ctx.mul(x, y), z), ctx.mul(x, ctx.mul(y, z)));
        prop_assert_eq!(ctx.mul(x, y), ctx.mul(y, x));
        prop_assert_eq!(ctx.sub(ctx.add(x, y), y), x);
        prop_assert_eq!(ctx.square(x), ctx.mul(x, x));
        match ctx.inv(x) {
            Some(ix) => prop_assert_eq!(ctx.mul(x, ix), ctx.elem(1, 0)),
            None => prop_assert!(x.is_zero()),
        }
        // Frobenius squared is the identity on F_{p²}
        let p = ctx.p();
        prop_assert_eq!(ctx.pow(ctx.pow(x, p), p), x);
        // the norm is multiplicative and lands in F_p
        prop_assert_eq!(ctx.norm(ctx.mul(x, y)) as u128, (ctx.norm(x) as u128 * ctx.norm(y) as u128) % p as u128);
    }

    #[test]
    fn division_identity(pi in 0..4usize, a in proptest::collection::vec(any::<(u64, u64)>(), 0..12),
                         b in proptest::collection::vec(any::<(u64, u64)>(), 1..6)) {
        let ctx = FieldCtx::new(PRIMES[pi]).unwrap();
        let a = Poly::new(a.into_iter().map(|(x, y)| elem(&ctx, x, y)).collect());
        let b = Poly::new(b.into_iter().map(|(x, y)| elem(&ctx, x, y)).collect());
        prop_assume!(!b.is_zero());
        let (q, r) = a.div_rem(&ctx, &b);
        prop_assert!(r.is_zero() || r.degree() < b.degree());
        let back = q.mul(&ctx, &b);
        prop_assert_eq!(a.sub(&ctx, &back), r);
    }

    #[test]
    fn roots_of_products(pi in 1..5usize, roots in proptest::collection::vec(any::<(u64, u64)>(), 1..7), seed: u64) {
        let ctx = FieldCtx::new(PRIMES[pi]).unwrap();
        let roots: Vec<Fp2Elem> = roots.into_iter().map(|(x, y)| elem(&ctx, x, y)).collect();
        let mut f = Poly::one();
        for &r in &roots {
            f = f.mul(&ctx, &Poly::linear(&ctx, r));
        }
        let mut found = roots_with_multiplicity(&ctx, &f, &mut ChaCha8Rng::seed_from_u64(seed));
        found.sort();
        let mut expected: Vec<(Fp2Elem, usize)> = Vec::new();
        let mut sorted = roots.clone();
        sorted.sort();
        for r in sorted {
            match expected.last_mut() {
                Some((last, m)) if *last == r => *m += 1,
                _ => expected.push((r, 1)),
            }
        }
        prop_assert_eq!(found, expected);
    }

    #[test]
    fn chi_is_a_symmetric_bicharacter(factors in proptest::collection::vec(1u64..12, 0..4), picks in proptest::array::uniform3(any::<usize>())) {
        let spec = AbelianGroupSpec::new(factors).unwrap();
        let n = spec.order();
        let (a, x, y) = (spec.element(picks[0] % n), spec.element(picks[1] % n), spec.element(picks[2] % n));
        let lhs = chi(&spec, &a, &spec.add(&x, &y)).unwrap();
        let rhs = chi(&spec, &a, &x).unwrap() * chi(&spec, &a, &y).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-12);
        prop_assert!((chi(&spec, &a, &x).unwrap() - chi(&spec, &x, &a).unwrap()).norm() < 1e-12);
        prop_assert!((chi(&spec, &a, &x).unwrap().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kappa_refines_chi(factors in proptest::collection::vec(1u64..40, 0..4), seed: u64) {
        let spec = AbelianGroupSpec::new(factors).unwrap();
        prop_assume!(spec.order() <= 5000);
        let kappa = make_kappa(&spec).table();
        prop_assert!(refinement_error(&spec, &kappa, seed).unwrap() < 1e-11);
        prop_assert!(kappa.iter().all(|k| (k.norm() - 1.0).abs() < 1e-13));
        prop_assert!((kappa[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn action_tables_are_regular(factors in proptest::collection::vec(1u64..7, 0..3), seed: u64) {
        let spec = AbelianGroupSpec::new(factors).unwrap();
        let t = RegularActionTable::random(spec, seed);
        prop_assert!(t.is_regular());
        for x in 0..t.size() {
            for y in 0..t.size() {
                prop_assert_eq!(t.act(t.difference(x, y), x), y);
            }
        }
    }

    #[test]
    fn total_variation_is_a_metric(a in proptest::collection::vec(0.0f64..1.0, 1..20), b in proptest::collection::vec(0.0f64..1.0, 1..20)) {
        let n = a.len().min(b.len());
        let norm = |v: &[f64]| { let s: f64 = v.iter().sum::<f64>().max(1e-300); v.iter().map(|x| x / s).collect::<Vec<_>>() };
        let (a, b) = (norm(&a[..n]), norm(&b[..n]));
        let d = total_variation(&a, &b);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&d));
        prop_assert_eq!(d, total_variation(&b, &a));
        prop_assert_eq!(total_variation(&a, &a), 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Spectral summaries depend on the operator family, not on the order
    /// the levels are listed in or on the mixing seed.
    #[test]
    fn spectra_ignore_order_and_seed(pi in 0..6usize, seed_a: u64, seed_b: u64) {
        let p = [211u64, 307, 401, 503, 601, 709][pi];
        let ctx = FieldCtx::new(p).unwrap();
        let forward = hecke_family(&ctx, &[2, 3, 5, 7]).unwrap();
        let backward = hecke_family(&ctx, &[7, 5, 3, 2]).unwrap();
        let a = joint_diagonalize(&forward.operators, seed_a).unwrap();
        let b = joint_diagonalize(&backward.operators, seed_b).unwrap();
        let da = separation_report(&a).unwrap().min_distance.unwrap();
        let db = separation_report(&b).unwrap().min_distance.unwrap();
        prop_assert!((da - db).abs() < 1e-9);
        prop_assert!((supnorm_report(&a).supnorm - supnorm_report(&b).supnorm).abs() < 1e-9);
        // the output distribution does not see eigenvector signs
        for e0 in [0, a.len() / 2] {
            let oa = oracle_distribution(&a, e0).unwrap();
            let ob = oracle_distribution(&b, e0).unwrap();
            prop_assert!(total_variation(&oa, &ob) < 1e-10);
        }
        let alpha = expansion(&a, &initial_state(a.len(), 0).unwrap());
        prop_assert!((alpha.iter().map(|z| z.norm_sqr()).sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
