use crate::coeff::{Coeff, RingCtx};
use crate::error::{Error, Result};
use crate::extend::find_irreducible;
use crate::instance::{Instance, Role};
use crate::laurent::{move_product, poly_term, GrMatrix, Move};
use crate::matrix::Matrix;
use crate::num::{exp_int, Exp};
use crate::series::{Profile, Series};
use crate::sigma::{solve_sigma_equation, SolveRegime};
use num_rational::Ratio;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    SolveEmpty,
    SolveForward,
    SolveDigit,
    SolveBackward,
    DescentFirst,
    DescentSecond,
    DescentMixed,
    Twist,
    Factor,
    Polygon,
    Nabla,
}

impl Family {
    pub fn as_str(&self) -> &'static str {
        match self {
            Family::SolveEmpty => "solve-empty",
            Family::SolveForward => "solve-forward",
            Family::SolveDigit => "solve-digit",
            Family::SolveBackward => "solve-backward",
            Family::DescentFirst => "descent-first",
            Family::DescentSecond => "descent-second",
            Family::DescentMixed => "descent-mixed",
            Family::Twist => "twist",
            Family::Factor => "factor",
            Family::Polygon => "polygon",
            Family::Nabla => "nabla",
        }
    }

    pub fn parse(s: &str) -> Result<Family> {
        Family::all()
            .iter()
            .find(|f| f.as_str() == s)
            .copied()
            .ok_or_else(|| Error::InvalidInput(format!("unknown family '{s}'")))
    }

    pub fn all() -> &'static [Family] {
        &[
            Family::SolveEmpty,
            Family::SolveForward,
            Family::SolveDigit,
            Family::SolveBackward,
            Family::DescentFirst,
            Family::DescentSecond,
            Family::DescentMixed,
            Family::Twist,
            Family::Factor,
            Family::Polygon,
            Family::Nabla,
        ]
    }
}

fn unit_draw(ring: &RingCtx, rng: &mut ChaCha8Rng) -> u64 {
    loop {
        let c = rng.gen_range(1..ring.pn);
        if c % ring.p != 0 {
            return c;
        }
    }
}

fn coeff_draw(ring: &RingCtx, rng: &mut ChaCha8Rng, val_e: i64) -> Coeff {
    let mut digits = vec![0u64; ring.e * ring.d];
    digits[0] = unit_draw(ring, rng);
    for d in digits.iter_mut().skip(1) {
        if rng.gen_bool(0.4) {
            *d = rng.gen_range(0..ring.pn);
        }
    }
    ring.c_make(val_e, digits, (ring.e as i64) * (ring.n as i64))
}

fn lattice_exp(profile: &Profile, rng: &mut ChaCha8Rng, span: i64) -> Exp {
    let scale = (profile.ring.p as i128).pow(profile.h);
    let k = rng.gen_range(-span * scale as i64..=span * scale as i64);
    Ratio::new(k as i128, scale)
}

fn series_draw(
    profile: &Profile,
    rng: &mut ChaCha8Rng,
    terms: usize,
    min_val_e: i64,
    span: i64,
) -> Series {
    let mut s = Series::zero(profile.clone());
    for _ in 0..terms {
        let exp = lattice_exp(profile, rng, span);
        let bump: i64 = rng.gen_range(0..2);
        let c = coeff_draw(&profile.ring, rng, min_val_e + bump);
        if let Ok(m) = Series::monomial(profile.clone(), exp, c) {
            s = s.add(&m).expect("same profile");
        }
    }
    s
}

fn solve_profile(seed: u64, h: u32) -> Result<Profile> {
    let p = [2u64, 3, 5][(seed % 3) as usize];
    let ring = Arc::new(RingCtx::new(p, vec![0, 1], 1, 4)?);
    Profile::new(ring, h, exp_int(-8), exp_int(8))
}

fn push_pair(inst: &mut Instance, lam: Series, v: Series) -> Result<()> {
    let lm = Matrix::diag(vec![lam])?;
    let vm = Matrix::diag(vec![v])?;
    inst.push("L", Role::Generic, lm)?;
    inst.push("V", Role::Generic, vm)
}

/// Generates a canonical instance of the given family. The same seed always
/// yields the same instance; solve instances are redrawn internally until
/// the twist equation is solvable in the base residue field.
pub fn generate(family: Family, seed: u64) -> Result<Instance> {
    match family {
        Family::SolveEmpty => gen_solve(family, seed),
        Family::SolveForward => gen_solve(family, seed),
        Family::SolveDigit => gen_solve(family, seed),
        Family::SolveBackward => gen_solve(family, seed),
        Family::DescentFirst | Family::DescentSecond | Family::DescentMixed => {
            gen_descent(family, seed)
        }
        Family::Twist => gen_twist(seed),
        Family::Factor => gen_factor_instance(seed),
        Family::Polygon => gen_polygon_pair(seed),
        Family::Nabla => gen_nabla_pair(seed),
    }
}

fn gen_solve(family: Family, seed: u64) -> Result<Instance> {
    for attempt in 0..32u64 {
        let draw_seed = seed.wrapping_add(attempt.wrapping_mul(0x9e37_79b9));
        let mut rng = ChaCha8Rng::seed_from_u64(draw_seed);
        let h = if family == Family::SolveDigit && seed % 2 == 1 { 1 } else { 0 };
        let profile = solve_profile(seed, h)?;
        let ring = profile.ring.clone();
        let (lam, v) = match family {
            Family::SolveEmpty => {
                let v = series_draw(&profile, &mut rng, 3, 0, 2);
                (Series::zero(profile.clone()), v)
            }
            Family::SolveForward => {
                let lam = series_draw(&profile, &mut rng, 2, 1, 1);
                let v = series_draw(&profile, &mut rng, 3, 0, 2);
                (lam, v)
            }
            Family::SolveDigit => {
                let head = Series::monomial(
                    profile.clone(),
                    exp_int(0),
                    coeff_draw(&ring, &mut rng, 0),
                )?;
                let tail = series_draw(&profile, &mut rng, 1, 1, 1);
                let v = series_draw(&profile, &mut rng, 3, 0, 2);
                (head.add(&tail)?, v)
            }
            Family::SolveBackward => {
                let depth = rng.gen_range(1..=2);
                let lam = Series::monomial(
                    profile.clone(),
                    exp_int(0),
                    coeff_draw(&ring, &mut rng, -depth),
                )?;
                let v = series_draw(&profile, &mut rng, 2, 0, 2);
                (lam, v)
            }
            _ => unreachable!("not a solve family"),
        };
        let expected = match family {
            Family::SolveEmpty => SolveRegime::Empty,
            Family::SolveForward => SolveRegime::Forward,
            Family::SolveDigit => SolveRegime::DigitLift,
            Family::SolveBackward => SolveRegime::Backward,
            _ => unreachable!(),
        };
        match solve_sigma_equation(&lam, &v, 2) {
            Ok(out) if out.regime == expected => {
                let mut inst = Instance::new(profile);
                inst.params.seed = Some(draw_seed);
                push_pair(&mut inst, lam, v)?;
                return Ok(inst);
            }
            _ => {}
        }
    }
    Err(Error::NonConvergent(format!(
        "no solvable draw for {} from seed {seed}",
        family.as_str()
    )))
}

fn gen_descent(family: Family, seed: u64) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ring = Arc::new(RingCtx::new(2, vec![0, 1], 1, 3)?);
    let profile = Profile::new(ring.clone(), 0, exp_int(-8), exp_int(8))?;
    let a_unit = unit_draw(&ring, &mut rng);
    let b_unit = unit_draw(&ring, &mut rng);
    let one = Series::monomial(profile.clone(), exp_int(0), ring.cone())?;
    let p_mono = Series::monomial(profile.clone(), exp_int(0), ring.c_from_pi_w(1, &[1]))?;
    let mono = |exp: i64, c: Coeff| Series::monomial(profile.clone(), exp_int(exp), c);
    let (d_mat, a_mat) = match family {
        Family::DescentFirst => {
            let d = Matrix::diag(vec![one.clone(), p_mono.clone()])?;
            let mut a = d.clone();
            *a.at_mut(0, 0) = one.add(&mono(4, ring.c_from_pi_w(0, &[a_unit]))?)?;
            *a.at_mut(0, 1) = mono(5, ring.c_from_pi_w(0, &[b_unit]))?;
            (d, a)
        }
        Family::DescentSecond => {
            let d = Matrix::identity(&profile, 2);
            let mut a = d.clone();
            *a.at_mut(0, 1) = mono(4, ring.c_from_pi_w(-1, &[b_unit]))?;
            (d, a)
        }
        Family::DescentMixed => {
            let d = Matrix::diag(vec![one.clone(), p_mono.clone()])?;
            let mut a = d.clone();
            *a.at_mut(0, 0) = one.add(&mono(4, ring.c_from_pi_w(0, &[a_unit]))?)?;
            *a.at_mut(1, 0) = mono(5, ring.c_from_pi_w(0, &[b_unit]))?;
            (d, a)
        }
        _ => unreachable!("not a reduction family"),
    };
    let mut inst = Instance::new(profile);
    inst.params.r = Some(exp_int(1));
    inst.params.max_iter = Some(40);
    inst.params.seed = Some(seed);
    inst.push("A", Role::Frobenius, a_mat)?;
    inst.push("D", Role::Diagonal, d_mat)?;
    Ok(inst)
}

fn gen_twist(seed: u64) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = [2u64, 3][(seed % 2) as usize];
    let (e, n) = if seed % 3 == 2 { (2usize, 2u32) } else { (1, 3) };
    let ring = Arc::new(RingCtx::new(p, vec![0, 1], e, n)?);
    let profile = Profile::new(ring.clone(), 0, exp_int(-16), exp_int(16))?;
    let rank = rng.gen_range(2..=4);
    let mut vals: Vec<i64> = (0..rank).map(|_| rng.gen_range(0..=2)).collect();
    vals.sort_unstable();
    let diag: Result<Vec<Series>> = vals
        .iter()
        .map(|&v| {
            Series::monomial(
                profile.clone(),
                exp_int(0),
                ring.c_from_pi_w(v, &[unit_draw(&ring, &mut rng)]),
            )
        })
        .collect();
    let d_mat = Matrix::diag(diag?)?;
    // B = V0 D sigma(V0)^{-1} with V0 unipotent lower triangular and zero
    // inside equal-valuation blocks: the inverse is a finite nilpotent sum,
    // every defect entry the descent must clear sits strictly below its
    // block (forward regime, no residue equations), and the leading
    // principal minors of twisted products ride a single triangular path,
    // so the polygon survives the window untouched. Mixing within a block
    // would demand residue solves whose twist map need not attain the
    // Teichmueller carries over a field this small.
    let mut x = Matrix::zero(&profile, rank, rank);
    for i in 0..rank {
        for j in 0..i {
            if vals[i] == vals[j] || rng.gen_bool(0.3) {
                continue;
            }
            let exp = rng.gen_range(-1..=1);
            let bump: i64 = rng.gen_range(0..2);
            let c = coeff_draw(&ring, &mut rng, 1 + bump);
            *x.at_mut(i, j) = Series::monomial(profile.clone(), exp_int(exp), c)?;
        }
    }
    let v0 = Matrix::identity(&profile, rank).add(&x)?;
    let sx = x.sigma(1);
    let mut sv0_inv = Matrix::identity(&profile, rank);
    let mut pow = sx.neg();
    for _ in 1..rank {
        sv0_inv = sv0_inv.add(&pow)?;
        pow = pow.mul(&sx.neg())?;
    }
    let b = v0.mul(&d_mat)?.mul(&sv0_inv)?;
    let mut inst = Instance::new(profile);
    inst.params.max_iter = Some(24);
    inst.params.seed = Some(seed);
    inst.push("B", Role::Frobenius, b)?;
    inst.push("D", Role::Diagonal, d_mat)?;
    Ok(inst)
}

fn fq_nonzero(fq: &crate::fq::FqCtx, rng: &mut ChaCha8Rng) -> crate::fq::FqElem {
    loop {
        let c: Vec<u64> = (0..fq.d).map(|_| rng.gen_range(0..fq.p)).collect();
        if !fq.is_zero(&c) {
            return c;
        }
    }
}

/// Random product of elementary moves over a small residue field.
pub fn gen_factor_case(seed: u64) -> Result<(Arc<RingCtx>, GrMatrix)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = [2u64, 3][(seed % 2) as usize];
    let d = 1 + (seed % 3 == 1) as usize;
    let phi = find_irreducible(p, d)?;
    let ring = Arc::new(RingCtx::new(p, phi, 1, 2)?);
    let n = rng.gen_range(2..=4);
    let count = rng.gen_range(3..=6);
    let fq = &ring.fq;
    let mut moves = Vec::with_capacity(count);
    for _ in 0..count {
        match rng.gen_range(0..3) {
            0 => {
                let i = rng.gen_range(0..n);
                let mut j = rng.gen_range(0..n);
                while j == i {
                    j = rng.gen_range(0..n);
                }
                let mut poly = poly_term(fq_nonzero(fq, &mut rng), rng.gen_range(-2..=2), fq);
                if rng.gen_bool(0.4) {
                    poly = crate::laurent::poly_add(
                        &poly,
                        &poly_term(fq_nonzero(fq, &mut rng), rng.gen_range(-2..=2), fq),
                        fq,
                    );
                }
                moves.push(Move::Transvect { i, j, poly });
            }
            1 => {
                let i = rng.gen_range(0..n);
                let mut j = rng.gen_range(0..n);
                while j == i {
                    j = rng.gen_range(0..n);
                }
                moves.push(Move::Swap { i, j });
            }
            _ => {
                moves.push(Move::Scale {
                    i: rng.gen_range(0..n),
                    c: fq_nonzero(fq, &mut rng),
                    m: rng.gen_range(-2..=2),
                });
            }
        }
    }
    let product = move_product(&moves, n, fq);
    Ok((ring, product))
}

fn gen_factor_instance(seed: u64) -> Result<Instance> {
    let (ring, gr) = gen_factor_case(seed)?;
    let profile = Profile::new(ring, 0, exp_int(-64), exp_int(64))?;
    let mat = series_from_residue(&gr, &profile)?;
    let mut inst = Instance::new(profile);
    inst.params.seed = Some(seed);
    inst.push("M", Role::Generic, mat)?;
    Ok(inst)
}

fn gen_polygon_pair(seed: u64) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = [2u64, 3, 5][(seed % 3) as usize];
    let ring = Arc::new(RingCtx::new(p, vec![0, 1], 1, 4)?);
    let profile = Profile::new(ring.clone(), 0, exp_int(-16), exp_int(16))?;
    let rank = rng.gen_range(2..=3);
    let mut a = Matrix::zero(&profile, rank, rank);
    for i in 0..rank {
        for j in 0..rank {
            if rng.gen_bool(0.35) && (i, j) != (0, 0) {
                continue;
            }
            let exp = rng.gen_range(-2..=2);
            let vdraw: i64 = rng.gen_range(-1..=2);
            let c = coeff_draw(&ring, &mut rng, vdraw);
            *a.at_mut(i, j) = Series::monomial(profile.clone(), exp_int(exp), c)?;
        }
    }
    // constant unipotent twist: it commutes with window truncation, so the
    // hull comparison stays exact even when twisted products clip
    let mut x = Matrix::zero(&profile, rank, rank);
    for i in 0..rank {
        for j in (i + 1)..rank {
            if rng.gen_bool(0.5) {
                let c = coeff_draw(&ring, &mut rng, 0);
                *x.at_mut(i, j) = Series::monomial(profile.clone(), exp_int(0), c)?;
            }
        }
    }
    let u = Matrix::identity(&profile, rank).add(&x)?;
    let x2 = x.mul(&x)?;
    let x3 = x2.mul(&x)?;
    if !x3.is_zero() {
        return Err(Error::InvariantViolated("triangular twist is not nilpotent".into()));
    }
    let u_inv = Matrix::identity(&profile, rank).sub(&x)?.add(&x2)?;
    let conj = u_inv.mul(&a)?.mul(&u.sigma(1))?;
    let mut inst = Instance::new(profile);
    inst.params.seed = Some(seed);
    inst.push("A", Role::Frobenius, a)?;
    inst.push("Ac", Role::Generic, conj)?;
    Ok(inst)
}

fn gen_nabla_pair(seed: u64) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = [2u64, 3][(seed % 2) as usize];
    let ring = Arc::new(RingCtx::new(p, vec![0, 1], 1, 4)?);
    let profile = Profile::new(ring.clone(), 0, exp_int(-16), exp_int(16))?;
    let rank = rng.gen_range(2..=3);
    let mut a_diag = Vec::with_capacity(rank);
    let mut g_diag = Vec::with_capacity(rank);
    for _ in 0..rank {
        let k: i64 = rng.gen_range(-1..=1);
        let m = (p as i64 - 1) * k;
        a_diag.push(Series::monomial(
            profile.clone(),
            exp_int(m),
            coeff_draw(&ring, &mut rng, 0),
        )?);
        g_diag.push(Series::monomial(profile.clone(), exp_int(0), ring.c_from_i64(k))?);
    }
    let a = Matrix::diag(a_diag)?;
    let g = Matrix::diag(g_diag)?;
    // gauge by an exactly invertible unipotent twist
    let mut x = Matrix::zero(&profile, rank, rank);
    for i in 0..rank {
        for j in (i + 1)..rank {
            if rng.gen_bool(0.6) {
                let c = coeff_draw(&ring, &mut rng, 0);
                *x.at_mut(i, j) =
                    Series::monomial(profile.clone(), exp_int(rng.gen_range(0..=1)), c)?;
            }
        }
    }
    let s = Matrix::identity(&profile, rank).add(&x)?;
    let x2 = x.mul(&x)?;
    let s_inv = Matrix::identity(&profile, rank).sub(&x)?.add(&x2)?;
    let (a2, g2) = crate::fnabla::gauge(&a, &g, &s, &s_inv)?;
    let mut inst = Instance::new(profile);
    inst.params.seed = Some(seed);
    inst.push("A", Role::Frobenius, a2)?;
    inst.push("G", Role::Connection, g2)?;
    Ok(inst)
}

/// Entrywise residue of a matrix whose entries have integer exponents and
/// nonnegative valuation.
pub fn residue_matrix(m: &Matrix) -> Result<GrMatrix> {
    if m.rows != m.cols {
        return Err(Error::InvalidInput("residue reduction needs a square matrix".into()));
    }
    let ring = &m.profile().ring;
    let mut gr = GrMatrix::zero(m.rows);
    for i in 0..m.rows {
        for j in 0..m.cols {
            let mut poly = crate::laurent::poly_zero();
            for (exp, c) in m.at(i, j).terms() {
                if !exp.is_integer() {
                    return Err(Error::InvalidInput(format!(
                        "entry ({i},{j}) has a fractional monomial exponent"
                    )));
                }
                match ring.cval(c) {
                    None => continue,
                    Some(v) if v > Ratio::from_integer(0) => continue,
                    Some(v) if v < Ratio::from_integer(0) => {
                        return Err(Error::NotIntegral(format!(
                            "entry ({i},{j}) has valuation {v}"
                        )))
                    }
                    Some(_) => {
                        let r = ring.cres(c).expect("unit coefficient has a residue");
                        poly = crate::laurent::poly_add(
                            &poly,
                            &poly_term(r, *exp.numer() as i64, &ring.fq),
                            &ring.fq,
                        );
                    }
                }
            }
            *gr.at_mut(i, j) = poly;
        }
    }
    Ok(gr)
}

/// Teichmueller lift of a residue matrix into a series matrix.
pub fn series_from_residue(gr: &GrMatrix, profile: &Profile) -> Result<Matrix> {
    let ring = &profile.ring;
    let mut out = Matrix::zero(profile, gr.n, gr.n);
    for i in 0..gr.n {
        for j in 0..gr.n {
            let mut s = Series::zero(profile.clone());
            for (k, c) in gr.at(i, j) {
                let lift = ring.c_tau(c);
                s = s.add(&Series::monomial(profile.clone(), exp_int(*k), lift)?)?;
            }
            *out.at_mut(i, j) = s;
        }
    }
    Ok(out)
}
