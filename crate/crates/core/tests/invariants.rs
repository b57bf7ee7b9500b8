// Property tests over the coefficient ring, the series ring, the semilinear
// solvers, and the text format. Each block draws inputs sized so the checked
// identity is exact: windows are wide enough that nothing escapes, so
// equality never has to be excused by a truncation flag.

use proptest::prelude::*;
use slopeforge_core::{
    exp_frac, exp_int, factor_elementary, gauge, gen_factor_case, generate, is_compatible,
    move_product, newton_polygon, solve_sigma_equation, twisted_product, val_gt, Coeff, Family,
    Instance, Matrix, Profile, RingCtx, Series, SolveRegime,
};
use std::sync::Arc;

fn ring_a() -> Arc<RingCtx> {
    Arc::new(RingCtx::new(3, vec![0, 1], 1, 3).unwrap())
}

fn ring_b() -> Arc<RingCtx> {
    Arc::new(RingCtx::new(2, vec![1, 1, 1], 2, 2).unwrap())
}

fn wide_profile(ring: &Arc<RingCtx>, half: i64) -> Profile {
    Profile::new(ring.clone(), 0, exp_int(-half), exp_int(half)).unwrap()
}

fn coeff(ring: &Arc<RingCtx>, val: i64, digits: &[u64]) -> Coeff {
    ring.c_make(val, digits.to_vec(), ring.max_prec())
}

fn series_from(profile: &Profile, terms: &[(i64, Coeff)]) -> Series {
    let mut s = Series::zero(profile.clone());
    for (k, c) in terms {
        let m = Series::monomial(profile.clone(), exp_int(*k), c.clone()).unwrap();
        s = s.add(&m).unwrap();
    }
    s
}

// one digit slot mod 27 covers W(F_3)/3^3
fn digits_a() -> impl Strategy<Value = Vec<u64>> {
    proptest::collection::vec(0u64..27, 1)
}

// four slots mod 4: two pi positions, each a degree-2 Witt element
fn digits_b() -> impl Strategy<Value = Vec<u64>> {
    proptest::collection::vec(0u64..4, 4)
}

fn unit_digits_a() -> impl Strategy<Value = Vec<u64>> {
    (1u64..27)
        .prop_filter("leading digit stays a unit", |c| c % 3 != 0)
        .prop_map(|c| vec![c])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    // two evaluation orders may keep different precision floors, so the
    // axioms are checked as agreement modulo the shared floor: the
    // difference must canonicalize to zero
    #[test]
    fn coefficient_ring_axioms(
        da in digits_a(), db in digits_a(), dc in digits_a(),
        va in -2i64..=2, vb in -2i64..=2, vc in -2i64..=2,
    ) {
        let ring = ring_a();
        let a = coeff(&ring, va, &da);
        let b = coeff(&ring, vb, &db);
        let c = coeff(&ring, vc, &dc);
        let lhs = ring.cadd(&ring.cadd(&a, &b), &c);
        let rhs = ring.cadd(&a, &ring.cadd(&b, &c));
        prop_assert!(ring.csub(&lhs, &rhs).is_zero(), "add assoc: {:?} vs {:?}", lhs, rhs);
        let lhs = ring.cmul(&ring.cmul(&a, &b), &c);
        let rhs = ring.cmul(&a, &ring.cmul(&b, &c));
        prop_assert!(ring.csub(&lhs, &rhs).is_zero(), "mul assoc: {:?} vs {:?}", lhs, rhs);
        let lhs = ring.cmul(&a, &ring.cadd(&b, &c));
        let rhs = ring.cadd(&ring.cmul(&a, &b), &ring.cmul(&a, &c));
        prop_assert!(ring.csub(&lhs, &rhs).is_zero(), "distributivity: {:?} vs {:?}", lhs, rhs);
        prop_assert!(ring.ceq(&ring.cmul(&a, &b), &ring.cmul(&b, &a)));
    }

    #[test]
    fn ramified_extension_ring_axioms(
        da in digits_b(), db in digits_b(), dc in digits_b(),
        va in -2i64..=2, vb in -2i64..=2,
    ) {
        let ring = ring_b();
        let a = coeff(&ring, va, &da);
        let b = coeff(&ring, vb, &db);
        let c = coeff(&ring, 0, &dc);
        let lhs = ring.cmul(&ring.cmul(&a, &b), &c);
        let rhs = ring.cmul(&a, &ring.cmul(&b, &c));
        prop_assert!(ring.csub(&lhs, &rhs).is_zero());
        let lhs = ring.cmul(&a, &ring.cadd(&b, &c));
        let rhs = ring.cadd(&ring.cmul(&a, &b), &ring.cmul(&a, &c));
        prop_assert!(ring.csub(&lhs, &rhs).is_zero());
    }

    #[test]
    fn coefficient_frobenius_is_a_ring_map(
        da in digits_b(), db in digits_b(),
        va in -2i64..=2, vb in -2i64..=2,
    ) {
        let ring = ring_b();
        let a = coeff(&ring, va, &da);
        let b = coeff(&ring, vb, &db);
        let lhs = ring.csigma(&ring.cmul(&a, &b), 1);
        let rhs = ring.cmul(&ring.csigma(&a, 1), &ring.csigma(&b, 1));
        prop_assert!(ring.ceq(&lhs, &rhs), "multiplicative");
        let lhs = ring.csigma(&ring.cadd(&a, &b), 1);
        let rhs = ring.cadd(&ring.csigma(&a, 1), &ring.csigma(&b, 1));
        prop_assert!(ring.ceq(&lhs, &rhs), "additive");
    }

    #[test]
    fn frobenius_orbit_closes_after_d_steps(da in digits_b(), va in -2i64..=2) {
        let ring = ring_b();
        let a = coeff(&ring, va, &da);
        let mut x = a.clone();
        for _ in 0..ring.d {
            x = ring.csigma(&x, 1);
        }
        prop_assert!(ring.ceq(&x, &a));
    }

    #[test]
    fn teichmuller_lifts_are_multiplicative(
        x in 0u64..2, y in 0u64..2, z in 0u64..2, w in 0u64..2,
    ) {
        let ring = ring_b();
        let f = vec![x, y];
        let g = vec![z, w];
        let lhs = ring.cmul(&ring.c_tau(&f), &ring.c_tau(&g));
        let rhs = ring.c_tau(&ring.fq.mul(&f, &g));
        prop_assert!(ring.ceq(&lhs, &rhs));
    }

    #[test]
    fn valuation_is_additive_on_units(
        da in unit_digits_a(), db in unit_digits_a(),
        va in -2i64..=2, vb in -2i64..=2,
    ) {
        let ring = ring_a();
        let a = coeff(&ring, va, &da);
        let b = coeff(&ring, vb, &db);
        let ab = ring.cmul(&a, &b);
        let (u, v, w) = (ring.cval(&a), ring.cval(&b), ring.cval(&ab));
        prop_assert!(u.is_some() && v.is_some() && w.is_some());
        prop_assert_eq!(w.unwrap(), u.unwrap() + v.unwrap());
    }

    #[test]
    fn inverse_multiplies_back_to_one(da in unit_digits_a(), va in -2i64..=2) {
        let ring = ring_a();
        let a = coeff(&ring, va, &da);
        let inv = ring.cinv(&a).unwrap();
        prop_assert!(ring.ceq(&ring.cmul(&a, &inv), &ring.cone()));
    }

    #[test]
    fn gauss_valuation_is_additive_on_unit_series(
        ka in -2i64..=2, kb in -2i64..=2,
        da in unit_digits_a(), db in unit_digits_a(),
        rnum in 0i128..=2,
    ) {
        let ring = ring_a();
        let pr = wide_profile(&ring, 32);
        let x = series_from(&pr, &[(ka, coeff(&ring, 0, &da)), (ka + 5, ring.cone())]);
        let y = series_from(&pr, &[(kb, coeff(&ring, 0, &db)), (kb + 5, ring.cone())]);
        let xy = x.mul(&y).unwrap();
        prop_assert!(!xy.truncated);
        let r = exp_frac(rnum, 2);
        let (vx, vy, vxy) = (x.val_r(&r), y.val_r(&r), xy.val_r(&r));
        prop_assert!(vx.is_some() && vy.is_some() && vxy.is_some());
        prop_assert_eq!(vxy.unwrap(), vx.unwrap() + vy.unwrap());
    }

    #[test]
    fn substitution_scales_exponents_termwise(
        ks in proptest::collection::vec(-4i64..=4, 1..=3),
        ds in proptest::collection::vec(digits_a(), 3),
    ) {
        let ring = ring_a();
        let pr = wide_profile(&ring, 32);
        let terms: Vec<(i64, Coeff)> = ks
            .iter()
            .zip(&ds)
            .map(|(k, d)| (*k, coeff(&ring, 0, d)))
            .collect();
        let x = series_from(&pr, &terms);
        let sx = x.sigma(1);
        prop_assert!(!sx.truncated);
        prop_assert_eq!(sx.num_terms(), x.num_terms());
        for (e, c) in x.terms() {
            let moved = sx.get(&(*e * exp_int(3)));
            let expect = ring.csigma(c, 1);
            prop_assert!(matches!(moved, Some(mc) if ring.ceq(mc, &expect)));
        }
    }

    // unit coefficients keep every intermediate sum visibly above its
    // precision floor, so the identity holds term for term
    #[test]
    fn derivation_satisfies_leibniz(
        ka in -3i64..=3, kb in -3i64..=3,
        da in unit_digits_a(), db in unit_digits_a(),
    ) {
        let ring = ring_a();
        let pr = wide_profile(&ring, 32);
        let x = series_from(&pr, &[(ka, coeff(&ring, 0, &da)), (0, ring.cone())]);
        let y = series_from(&pr, &[(kb, coeff(&ring, 0, &db))]);
        let lhs = x.mul(&y).unwrap().theta();
        let rhs = x.theta().mul(&y).unwrap().add(&x.mul(&y.theta()).unwrap()).unwrap();
        prop_assert!(lhs.eq_terms(&rhs), "{} vs {}", lhs.emit(), rhs.emit());
    }

    #[test]
    fn derivation_twists_past_substitution(
        ks in proptest::collection::vec(-3i64..=3, 1..=3),
        ds in proptest::collection::vec(digits_a(), 3),
    ) {
        let ring = ring_a();
        let pr = wide_profile(&ring, 32);
        let terms: Vec<(i64, Coeff)> = ks
            .iter()
            .zip(&ds)
            .map(|(k, d)| (*k, coeff(&ring, 0, d)))
            .collect();
        let x = series_from(&pr, &terms);
        let lhs = x.sigma(1).theta();
        let rhs = x.theta().sigma(1).mul_pi(ring.e as i64);
        prop_assert!(lhs.eq_terms(&rhs), "{} vs {}", lhs.emit(), rhs.emit());
    }

    #[test]
    fn inversion_multiplies_back(
        k0 in -2i64..=2,
        d0 in unit_digits_a(),
        tail_k in -2i64..=2,
        tail in digits_a(),
    ) {
        let ring = ring_a();
        let pr = wide_profile(&ring, 32);
        let x = series_from(
            &pr,
            &[(k0, coeff(&ring, 0, &d0)), (k0 + tail_k, coeff(&ring, 1, &tail))],
        );
        let y = x.invert().unwrap();
        if !x.truncated && !y.truncated {
            let back = x.mul(&y).unwrap();
            prop_assert!(
                back.sub(&Series::one(pr)).unwrap().is_zero(),
                "x*x^-1 = {}",
                back.emit()
            );
        }
    }

    #[test]
    fn removing_a_unique_dominant_term_raises_the_gauss_valuation(
        ks in proptest::collection::vec(-4i64..=4, 2..=4),
        vs in proptest::collection::vec(0i64..=2, 4),
        us in proptest::collection::vec(unit_digits_a(), 4),
    ) {
        let ring = ring_a();
        let pr = wide_profile(&ring, 32);
        let terms: Vec<(i64, Coeff)> = ks
            .iter()
            .zip(vs.iter().zip(&us))
            .map(|(k, (v, u))| (*k, coeff(&ring, *v, u)))
            .collect();
        let x = series_from(&pr, &terms);
        prop_assume!(!x.is_zero());
        let r = exp_frac(1, 2);
        let vr = x.val_r(&r).unwrap();
        let dominant: Vec<_> = x
            .terms()
            .filter_map(|(e, c)| ring.cval(c).map(|v| (*e, v + r * *e)))
            .filter(|(_, w)| *w == vr)
            .map(|(e, _)| e)
            .collect();
        if dominant.len() == 1 {
            let (hit, rest) = x.partition(|e, _| *e == dominant[0]);
            prop_assert_eq!(hit.num_terms(), 1);
            prop_assert!(val_gt(&rest.val_r(&r), &vr));
        }
    }

    #[test]
    fn twisted_products_glue_as_a_cocycle(
        entries in proptest::collection::vec((-1i64..=1, 0i64..=3, digits_a()), 4),
        m in 1usize..=2,
        n in 1usize..=2,
    ) {
        let ring = ring_a();
        let pr = wide_profile(&ring, 64);
        let mut a = Matrix::zero(&pr, 2, 2);
        for (slot, (k, v, d)) in entries.iter().enumerate() {
            *a.at_mut(slot / 2, slot % 2) = series_from(&pr, &[(*k, coeff(&ring, *v, d))]);
        }
        let whole = twisted_product(&a, m + n).unwrap();
        let left = twisted_product(&a, m).unwrap();
        let right = twisted_product(&a, n).unwrap().sigma(m);
        let glued = left.mul(&right).unwrap();
        prop_assert!(!whole.truncated() && !glued.truncated());
        prop_assert!(whole.sub(&glued).unwrap().is_zero());
    }

    #[test]
    fn polygon_survives_constant_conjugation(
        va in 0i64..=2, vb in 0i64..=2,
        ua in unit_digits_a(), ub in unit_digits_a(),
        c in digits_a(),
    ) {
        let ring = ring_a();
        let pr = wide_profile(&ring, 16);
        let a = Matrix::diag(vec![
            series_from(&pr, &[(0, coeff(&ring, va, &ua))]),
            series_from(&pr, &[(0, coeff(&ring, vb, &ub))]),
        ])
        .unwrap();
        let mut v = Matrix::identity(&pr, 2);
        *v.at_mut(0, 1) = series_from(&pr, &[(0, coeff(&ring, 0, &c))]);
        let mut v_inv = Matrix::identity(&pr, 2);
        *v_inv.at_mut(0, 1) = v.at(0, 1).neg();
        let conj = v_inv.mul(&a).unwrap().mul(&v.sigma(1)).unwrap();
        let p1 = newton_polygon(&a, 3).unwrap();
        let p2 = newton_polygon(&conj, 3).unwrap();
        prop_assert_eq!(p1, p2);
    }

    #[test]
    fn forward_solver_clears_to_working_precision(
        lam_digit in 1u64..8,
        vks in proptest::collection::vec(-1i64..=1, 1..=3),
        vds in proptest::collection::vec(1u64..8, 3),
    ) {
        let ring = Arc::new(RingCtx::new(2, vec![0, 1], 1, 3).unwrap());
        let pr = wide_profile(&ring, 64);
        let lam = series_from(&pr, &[(0, ring.cmul_pi(&coeff(&ring, 0, &[lam_digit | 1]), 1))]);
        let terms: Vec<(i64, Coeff)> = vks
            .iter()
            .zip(&vds)
            .map(|(k, d)| (*k, coeff(&ring, 0, &[*d | 1])))
            .collect();
        let v = series_from(&pr, &terms);
        prop_assume!(!v.is_zero());
        let out = solve_sigma_equation(&lam, &v, 1).unwrap();
        prop_assert_eq!(out.regime, SolveRegime::Forward);
        prop_assert!(!out.w.truncated && !out.residual.truncated);
        // the recomputed residual is the first dropped orbit term, so it
        // sits at or past the base precision
        prop_assert!(
            val_gt(&out.residual.val0(), &exp_int(ring.n as i64 - 1)),
            "residual {}",
            out.residual.emit()
        );
    }

    #[test]
    fn factorization_reassembles_exactly(seed in 0u64..500) {
        let (ring, gr) = gen_factor_case(seed).unwrap();
        let moves = factor_elementary(&gr, &ring.fq).unwrap();
        let back = move_product(&moves, gr.n, &ring.fq);
        prop_assert_eq!(back, gr);
    }

    #[test]
    fn instance_text_round_trips(family_idx in 0usize..11, seed in 0u64..64) {
        let family = Family::all()[family_idx];
        let inst = generate(family, seed).unwrap();
        let text = inst.emit();
        let back = Instance::parse(&text).unwrap();
        prop_assert_eq!(text, back.emit());
    }

    #[test]
    fn gauge_moves_preserve_compatibility(
        scale in 1i64..=3,
        shift in 0i64..=2,
        c in unit_digits_a(),
    ) {
        let ring = ring_a();
        let pr = wide_profile(&ring, 32);
        // a diagonal pair is compatible when each constant derivation entry
        // g pairs with a frobenius entry t^{(p-1)g}
        let a = Matrix::diag(vec![
            series_from(&pr, &[(2 * scale, ring.cone())]),
            series_from(&pr, &[(0, coeff(&ring, 1, &[1]))]),
        ])
        .unwrap();
        let g = Matrix::diag(vec![
            series_from(&pr, &[(0, ring.c_from_i64(scale))]),
            Series::zero(pr.clone()),
        ])
        .unwrap();
        prop_assert!(is_compatible(&a, &g).unwrap());
        let mut s = Matrix::identity(&pr, 2);
        *s.at_mut(0, 1) = series_from(&pr, &[(shift, coeff(&ring, 1, &c))]);
        let mut s_inv = Matrix::identity(&pr, 2);
        *s_inv.at_mut(0, 1) = s.at(0, 1).neg();
        let (a2, g2) = gauge(&a, &g, &s, &s_inv).unwrap();
        prop_assert!(!a2.truncated() && !g2.truncated());
        prop_assert!(is_compatible(&a2, &g2).unwrap());
    }
}
