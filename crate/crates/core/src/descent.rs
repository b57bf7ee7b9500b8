use crate::coeff::Coeff;
use crate::error::{Error, Result};
use crate::laurent::{factor_elementary, lift_move, GrMatrix, Move};
use crate::matrix::{fmt_val, Matrix};
use crate::num::{fmt_ratio, pow_i128, Exp};
use crate::series::{val_gt, Profile, Series};
use crate::sigma::diagonal_monomials;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{Signed, Zero};
use std::collections::BTreeMap;

#[derive(Debug, Clone)]
pub struct DescentParams {
    /// Slope weight of the valuation the reduction contracts.
    pub r: Exp,
    /// Exponent threshold below which no move may act; computed from the
    /// frame spread when absent.
    pub s: Option<Exp>,
    pub max_iter: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    First,
    Second,
}

#[derive(Debug, Clone)]
pub struct StepRecord {
    pub l: usize,
    pub kind: StepKind,
    /// Exponent the move acted on.
    pub j: Exp,
    /// Slope of the graded piece; zero for first-kind steps.
    pub r_l: Exp,
    /// Weighted valuation of R - I after the step.
    pub val_r_after: Option<Exp>,
}

#[derive(Debug, Clone)]
pub struct DescentOutcome {
    pub s_mat: Matrix,
    pub s_inv: Matrix,
    /// Final residual frame ratio R with S A sigma(S)^{-1} = D R.
    pub r_mat: Matrix,
    pub steps: Vec<StepRecord>,
    pub envelope_violations: Vec<(usize, Exp)>,
    /// (r - r_l) * j_l per second-kind step.
    pub progress: Vec<Exp>,
    pub progress_monotone: bool,
    pub threshold: Exp,
    pub delta: Exp,
    pub truncated: bool,
}

/// Spread of the frame: largest valuation gap between diagonal entries.
pub fn frame_spread(d_entries: &[Coeff], profile: &Profile) -> Exp {
    let ring = &profile.ring;
    let vals: Vec<Exp> = d_entries.iter().filter_map(|c| ring.cval(c)).collect();
    match (vals.iter().min(), vals.iter().max()) {
        (Some(mn), Some(mx)) => *mx - *mn,
        _ => Ratio::zero(),
    }
}

/// Smallest threshold on the move lattice that keeps every move safe:
/// the least k/(e p^h) with (p-1) r s - delta > 1/e.
pub fn choose_shift_threshold(delta: &Exp, r: &Exp, profile: &Profile) -> Result<Exp> {
    if !r.is_positive() {
        return Err(Error::InvalidInput("slope weight r must be positive".into()));
    }
    let ring = &profile.ring;
    let p = ring.p as i128;
    let e = ring.e as i128;
    let ph = pow_i128(ring.p, profile.h)
        .ok_or_else(|| Error::ProfileViolation("lattice depth overflows".into()))?;
    let unit = Ratio::new(1i128, e * ph);
    let bound = (*delta + Ratio::new(1, e)) / ((Ratio::from_integer(p - 1)) * *r);
    let k_min = bound.floor().to_integer() + 1;
    Ok(Ratio::from_integer(k_min) * unit)
}

/// Depth budget per exponent, derived from the starting residual. Bounds
/// how deep coefficient valuations may sink at each exponent during the
/// reduction.
#[derive(Debug, Clone)]
pub struct Envelope {
    delta: Exp,
    jstar: Option<Exp>,
    /// support exponent -> depth (-min valuation) of the starting matrix
    depths: Vec<(Exp, Exp)>,
    p: i128,
}

impl Envelope {
    pub fn from_start(r0: &Matrix, delta: Exp) -> Envelope {
        let depths: Vec<(Exp, Exp)> = r0
            .exponent_val_profile()
            .into_iter()
            .map(|(e, v)| (e, -v))
            .collect();
        let jstar = depths
            .iter()
            .filter(|(_, d)| d.is_positive())
            .map(|(e, _)| *e)
            .min();
        Envelope { delta, jstar, depths, p: r0.profile().ring.p as i128 }
    }

    fn f(&self, x: &Exp) -> Exp {
        self.depths
            .iter()
            .filter(|(e, _)| e <= x)
            .map(|(_, d)| *d)
            .max()
            .map_or_else(Ratio::zero, |m| m.max(Ratio::zero()))
    }

    /// Largest depth the reduction may create at exponent i.
    pub fn bound(&self, i: &Exp) -> Exp {
        let Some(jstar) = self.jstar else {
            return Ratio::zero();
        };
        if *i < jstar {
            return Ratio::zero();
        }
        let mut best = Ratio::zero();
        let mut x = *i;
        let mut k: i128 = 0;
        loop {
            if x < jstar || k > 64 {
                // the chain bottoms out after k rescalings
                best = best.max(Ratio::from_integer(k) * self.delta);
                break;
            }
            best = best.max(Ratio::from_integer(k) * self.delta + self.f(&x));
            x /= Ratio::from_integer(self.p);
            k += 1;
        }
        best
    }
}

/// u = pi^a0 t^{-i0}, the primitive lattice point on the slope line
/// val + r_l * exp = 0.
fn grading_unit(r_l: &Exp, profile: &Profile) -> Result<(i64, Exp)> {
    let ring = &profile.ring;
    let alpha = *r_l.numer();
    let beta = *r_l.denom();
    let e = ring.e as i128;
    let ph = pow_i128(ring.p, profile.h)
        .ok_or_else(|| Error::ProfileViolation("lattice depth overflows".into()))?;
    let g = (e * alpha).gcd(&(ph * beta));
    let a0 = (e * alpha) / g;
    let i0 = Ratio::new(beta, g);
    Ok((a0 as i64, i0))
}

/// Slope-r_l graded piece of R as a matrix over the residue Laurent ring
/// in u. Every term on the slope line must sit on the u-lattice.
fn graded_matrix(r_mat: &Matrix, r_l: &Exp, i0: &Exp) -> Result<GrMatrix> {
    let n = r_mat.rows;
    let ring = r_mat.profile().ring.clone();
    let mut gr = GrMatrix::zero(n);
    for i in 0..n {
        for j in 0..n {
            for (exp, c) in r_mat.at(i, j).terms() {
                let val = ring.cval(c).expect("stored terms are units");
                let grade = val + *r_l * *exp;
                if grade.is_negative() {
                    return Err(Error::InvariantViolated(format!(
                        "term at t^{} in entry ({i},{j}) lies below the slope line",
                        fmt_ratio(exp)
                    )));
                }
                if !grade.is_zero() {
                    continue;
                }
                let k = -*exp / *i0;
                if !k.is_integer() {
                    return Err(Error::NoGrading(format!(
                        "graded term at t^{} is not a power of the lattice unit",
                        fmt_ratio(exp)
                    )));
                }
                let res = ring.cres(c).expect("unit coefficient has a residue");
                gr.at_mut(i, j).insert(k.to_integer() as i64, res);
            }
        }
    }
    Ok(gr)
}

fn first_kind_core(
    r_minus_i: &Matrix,
    j: &Exp,
    profile: &Profile,
    stop: &Exp,
) -> Result<(Matrix, Matrix)> {
    let n = r_minus_i.rows;
    let ring = profile.ring.clone();
    let mut b = Matrix::identity(profile, n);
    for i in 0..n {
        for jj in 0..n {
            let entry = r_minus_i.at(i, jj);
            if let Some(c) = entry.get(j) {
                if ring.cval(c) == Some(Ratio::zero()) {
                    let res = ring.cres(c).unwrap();
                    let lifted = Series::monomial(profile.clone(), *j, ring.c_tau(&res))?;
                    *b.at_mut(i, jj) = b.at(i, jj).add(&lifted)?;
                }
            }
        }
    }
    let span = profile.hi / *j;
    let max_terms = span.floor().to_integer().max(1) as usize + 4;
    let core = b.neumann_inverse(stop, max_terms)?;
    Ok((core, b))
}

/// D M D^{-1} for the diagonal frame: entry (i,j) scales by d_i / d_j.
fn conjugate_by_frame(m: &Matrix, d_entries: &[Coeff]) -> Result<Matrix> {
    let ring = m.profile().ring.clone();
    let mut out = m.clone();
    for i in 0..m.rows {
        for j in 0..m.cols {
            if i == j {
                continue;
            }
            let factor = ring.cmul(&d_entries[i], &ring.cinv(&d_entries[j])?);
            *out.at_mut(i, j) = out.at(i, j).mul_coeff(&factor);
        }
    }
    Ok(out)
}

fn exp_min_vals(m: &Matrix) -> BTreeMap<Exp, Exp> {
    m.exponent_val_profile().into_iter().collect()
}

/// Reduces R = D^{-1} A toward the identity by elementary frame moves.
/// Each round acts on the smallest positive exponent carrying nonpositive
/// valuation: a first-kind move when the depth there is zero, otherwise a
/// second-kind move factored from the graded piece at the extremal slope.
pub fn descend(a: &Matrix, d_mat: &Matrix, params: &DescentParams) -> Result<DescentOutcome> {
    if a.rows != a.cols || d_mat.rows != d_mat.cols || a.rows != d_mat.rows {
        return Err(Error::InvalidInput("reduction needs matching square matrices".into()));
    }
    let n = a.rows;
    let profile = a.profile().unify(d_mat.profile())?;
    let ring = profile.ring.clone();
    let r = params.r;
    if !r.is_positive() {
        return Err(Error::InvalidInput("slope weight r must be positive".into()));
    }
    let d_entries = diagonal_monomials(d_mat)?;
    let delta = frame_spread(&d_entries, &profile);
    let threshold = match params.s {
        Some(s) => s,
        None => choose_shift_threshold(&delta, &r, &profile)?,
    };
    let mut d_inv = Matrix::identity(&profile, n);
    for (i, c) in d_entries.iter().enumerate() {
        *d_inv.at_mut(i, i) = Series::monomial(profile.clone(), Ratio::zero(), ring.cinv(c)?)?;
    }
    let mut s_mat = Matrix::identity(&profile, n);
    let mut s_inv = Matrix::identity(&profile, n);
    let mut r_mat = d_inv.mul(a)?;
    let start_gap = r * threshold;
    {
        let rm1 = r_mat.sub_identity()?;
        if !val_gt(&rm1.val_r(&r), &start_gap) {
            return Err(Error::InvalidInput(format!(
                "starting residual has weighted valuation {} but needs more than {}",
                fmt_val(&rm1.val_r(&r)),
                fmt_ratio(&start_gap)
            )));
        }
    }
    let envelope = Envelope::from_start(&r_mat, delta);
    let neumann_stop = Ratio::from_integer(ring.n as i128) + delta.ceil() + Ratio::from_integer(2);
    let mut steps: Vec<StepRecord> = Vec::new();
    let mut violations: Vec<(usize, Exp)> = Vec::new();
    let mut progress: Vec<Exp> = Vec::new();
    let mut last_sig: Option<(StepKind, Exp, Exp, Exp)> = None;
    let mut sig_repeats = 0usize;
    let mut converged = false;
    for l in 1..=params.max_iter {
        let rm1 = r_mat.sub_identity()?;
        if !val_gt(&rm1.val_r(&r), &start_gap) {
            return Err(Error::InvariantViolated(format!(
                "round {l}: weighted valuation {} dropped to the threshold gap",
                fmt_val(&rm1.val_r(&r))
            )));
        }
        let vals = exp_min_vals(&rm1);
        let candidates: Vec<(Exp, Exp)> = vals
            .iter()
            .filter(|(e, v)| e.is_positive() && !v.is_positive())
            .map(|(e, v)| (*e, *v))
            .collect();
        if candidates.is_empty() {
            for (e, v) in &vals {
                if !e.is_positive() && !v.is_positive() {
                    return Err(Error::InvariantViolated(format!(
                        "converged residual keeps depth at t^{}",
                        fmt_ratio(e)
                    )));
                }
            }
            converged = true;
            break;
        }
        let (j, mj) = candidates[0];
        if j <= threshold {
            return Err(Error::InvariantViolated(format!(
                "move at t^{} sits at or below the threshold {}",
                fmt_ratio(&j),
                fmt_ratio(&threshold)
            )));
        }
        let (kind, acted, r_l, w_core, w_core_inv) = if mj.is_zero() {
            let (core, core_inv) = first_kind_core(&rm1, &j, &profile, &neumann_stop)?;
            (StepKind::First, j, Ratio::zero(), core, core_inv)
        } else {
            let r_l = candidates
                .iter()
                .map(|(e, v)| -*v / *e)
                .max()
                .expect("nonempty candidates");
            let j_l = candidates
                .iter()
                .filter(|(e, v)| -*v / *e == r_l)
                .map(|(e, _)| *e)
                .min()
                .unwrap();
            let (a0, i0) = grading_unit(&r_l, &profile)?;
            let gr = graded_matrix(&r_mat, &r_l, &i0)?;
            let moves: Vec<Move> = factor_elementary(&gr, &ring.fq)?;
            let mut core = Matrix::identity(&profile, n);
            for mv in moves.iter().rev() {
                let (_, inv) = lift_move(mv, &profile, n, a0, i0)?;
                core = core.mul(&inv)?;
            }
            let mut core_inv = Matrix::identity(&profile, n);
            for mv in &moves {
                let (fwd, _) = lift_move(mv, &profile, n, a0, i0)?;
                core_inv = core_inv.mul(&fwd)?;
            }
            progress.push((r - r_l) * j_l);
            (StepKind::Second, j_l, r_l, core, core_inv)
        };
        let sig = (kind, acted, r_l, mj);
        if last_sig.as_ref() == Some(&sig) {
            sig_repeats += 1;
            if sig_repeats >= 3 {
                return Err(Error::NonConvergent(format!(
                    "move at t^{} repeated {sig_repeats} times without progress",
                    fmt_ratio(&acted)
                )));
            }
        } else {
            sig_repeats = 1;
            last_sig = Some(sig);
        }
        let w_used = conjugate_by_frame(&w_core, &d_entries)?;
        let w_used_inv = conjugate_by_frame(&w_core_inv, &d_entries)?;
        s_mat = w_used.mul(&s_mat)?;
        s_inv = s_inv.mul(&w_used_inv)?;
        r_mat = w_core.mul(&r_mat)?.mul(&w_used_inv.sigma(1))?;
        let rm1_after = r_mat.sub_identity()?;
        match kind {
            StepKind::First => {
                let left = rm1_after
                    .data
                    .iter()
                    .filter_map(|s| s.val_at(&acted))
                    .min();
                if let Some(v) = left {
                    if !v.is_positive() {
                        return Err(Error::InvariantViolated(format!(
                            "first-kind move left depth {} at t^{}",
                            fmt_ratio(&v),
                            fmt_ratio(&acted)
                        )));
                    }
                }
            }
            StepKind::Second => {
                if !val_gt(&rm1_after.val_r(&r_l), &Ratio::zero()) {
                    return Err(Error::InvariantViolated(format!(
                        "second-kind move left slope-{} valuation {}",
                        fmt_ratio(&r_l),
                        fmt_val(&rm1_after.val_r(&r_l))
                    )));
                }
            }
        }
        for (e, v) in rm1_after.exponent_val_profile() {
            if e.is_positive() && v.is_negative() && -v > envelope.bound(&e) {
                violations.push((l, e));
            }
        }
        steps.push(StepRecord {
            l,
            kind,
            j: acted,
            r_l,
            val_r_after: rm1_after.val_r(&r),
        });
    }
    if !converged {
        return Err(Error::MaxIterExceeded(format!(
            "reduction still active after {} rounds",
            params.max_iter
        )));
    }
    // the incremental residual must match a from-scratch recomputation
    let r_full = d_inv.mul(&s_mat.mul(a)?.mul(&s_inv.sigma(1))?)?;
    let drift = r_full.sub(&r_mat)?;
    if !drift.is_zero() {
        return Err(Error::InvariantViolated(
            "window truncation drove the incremental residual away from the recomputed one"
                .into(),
        ));
    }
    let progress_monotone = progress.windows(2).all(|w| w[0] <= w[1]);
    let truncated = s_mat.truncated() || s_inv.truncated() || r_mat.truncated();
    Ok(DescentOutcome {
        s_mat,
        s_inv,
        r_mat,
        steps,
        envelope_violations: violations,
        progress,
        progress_monotone,
        threshold,
        delta,
        truncated,
    })
}

/// Drops the entries of a matrix onto a coarser profile and verifies the
/// rounding stayed close: rounded * U^{-1} must be near the identity in
/// both plain and weighted valuation. Returns (rounded, residual).
pub fn round_to_profile(u: &Matrix, target: &Profile, r: &Exp) -> Result<(Matrix, Matrix)> {
    let u_inv = u.adjugate_inverse()?;
    let mut entries = Vec::with_capacity(u.data.len());
    for s in &u.data {
        let (rounded, _) = s.round_to(target)?;
        entries.push(rounded);
    }
    let rounded = Matrix { rows: u.rows, cols: u.cols, data: entries };
    let residual = rounded.mul(&u_inv)?.sub_identity()?;
    let ok = val_gt(&residual.val_r(r), &Ratio::zero())
        && val_gt(&residual.val0(), &Ratio::zero());
    if !ok {
        return Err(Error::RoundingTooCoarse(format!(
            "rounding residual has valuation {} (weighted {})",
            fmt_val(&residual.val0()),
            fmt_val(&residual.val_r(r))
        )));
    }
    Ok((rounded, residual))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::RingCtx;
    use crate::num::{exp_frac, exp_int};
    use std::sync::Arc;

    fn profile(p: u64, n: u32, h: u32) -> Profile {
        let ring = Arc::new(RingCtx::new(p, vec![0, 1], 1, n).unwrap());
        Profile::new(ring, h, exp_int(-8), exp_int(8)).unwrap()
    }

    fn mono(pr: &Profile, e: Exp, c: Coeff) -> Series {
        Series::monomial(pr.clone(), e, c).unwrap()
    }

    fn params(r: Exp) -> DescentParams {
        DescentParams { r, s: None, max_iter: 40 }
    }

    fn frame_1p(pr: &Profile) -> Matrix {
        let ring = pr.ring.clone();
        Matrix::diag(vec![
            mono(pr, exp_int(0), ring.cone()),
            mono(pr, exp_int(0), ring.c_from_i64(2)),
        ])
        .unwrap()
    }

    #[test]
    fn threshold_formula_matches_hand_values() {
        let pr = profile(2, 3, 0);
        let s = choose_shift_threshold(&exp_int(1), &exp_int(1), &pr).unwrap();
        assert_eq!(s, exp_int(3));
        let s = choose_shift_threshold(&exp_int(0), &exp_int(1), &pr).unwrap();
        assert_eq!(s, exp_int(2));
    }

    #[test]
    fn family_first_kind_only() {
        let pr = profile(2, 3, 0);
        let ring = pr.ring.clone();
        let d = frame_1p(&pr);
        // A = D (I + t^4 E_00 + t^5 E_01)
        let mut m = Matrix::identity(&pr, 2);
        *m.at_mut(0, 0) = m.at(0, 0).add(&mono(&pr, exp_int(4), ring.cone())).unwrap();
        *m.at_mut(0, 1) = mono(&pr, exp_int(5), ring.cone());
        let a = d.mul(&m).unwrap();
        let out = descend(&a, &d, &params(exp_int(1))).unwrap();
        assert_eq!(out.threshold, exp_int(3));
        assert_eq!(out.steps.len(), 3);
        assert!(out.steps.iter().all(|s| s.kind == StepKind::First));
        let acted: Vec<Exp> = out.steps.iter().map(|s| s.j).collect();
        assert_eq!(acted, vec![exp_int(4), exp_int(5), exp_int(8)]);
        assert!(out.r_mat.is_identity());
        assert!(out.truncated);
        assert!(out.envelope_violations.is_empty());
    }

    #[test]
    fn family_second_kind_only() {
        let pr = profile(2, 3, 0);
        let ring = pr.ring.clone();
        let d = Matrix::identity(&pr, 2);
        // A = I + p^{-1} t^4 E_01
        let mut a = Matrix::identity(&pr, 2);
        *a.at_mut(0, 1) = mono(&pr, exp_int(4), ring.cdiv_p(&ring.cone(), 1));
        let out = descend(&a, &d, &params(exp_int(1))).unwrap();
        assert_eq!(out.threshold, exp_int(2));
        assert_eq!(out.steps.len(), 2);
        assert!(out.steps.iter().all(|s| s.kind == StepKind::Second));
        assert_eq!(out.steps[0].r_l, exp_frac(1, 4));
        assert_eq!(out.steps[1].r_l, exp_frac(1, 8));
        assert_eq!(out.progress, vec![exp_int(3), exp_int(7)]);
        assert!(out.progress_monotone);
        assert!(out.r_mat.is_identity());
        assert!(out.envelope_violations.is_empty());
    }

    #[test]
    fn family_mixed_kinds() {
        let pr = profile(2, 3, 0);
        let ring = pr.ring.clone();
        let d = frame_1p(&pr);
        // A = D (I + t^4 E_00 + p^{-1} t^5 E_10)
        let mut m = Matrix::identity(&pr, 2);
        *m.at_mut(0, 0) = m.at(0, 0).add(&mono(&pr, exp_int(4), ring.cone())).unwrap();
        *m.at_mut(1, 0) = mono(&pr, exp_int(5), ring.cdiv_p(&ring.cone(), 1));
        let a = d.mul(&m).unwrap();
        let out = descend(&a, &d, &params(exp_int(1))).unwrap();
        let kinds: Vec<StepKind> = out.steps.iter().map(|s| s.kind).collect();
        assert_eq!(kinds, vec![StepKind::First, StepKind::Second, StepKind::First]);
        assert_eq!(out.steps[1].r_l, exp_frac(1, 5));
        assert!(out.r_mat.is_identity());
        assert!(out.envelope_violations.is_empty());
        // the transported second move writes a plain t^5 entry into S
        let s_entry = out.s_mat.at(1, 0);
        assert_eq!(s_entry.num_terms(), 1);
        let (e, c) = s_entry.terms().next().unwrap();
        assert_eq!(*e, exp_int(5));
        assert_eq!(ring.cval(c), Some(exp_int(0)));
    }

    #[test]
    fn start_invariant_rejected_when_too_shallow() {
        let pr = profile(2, 3, 0);
        let ring = pr.ring.clone();
        let d = frame_1p(&pr);
        // depth 2 at t^2: weighted valuation 0 < r s
        let mut m = Matrix::identity(&pr, 2);
        *m.at_mut(0, 1) = mono(&pr, exp_int(2), ring.cdiv_p(&ring.cone(), 2));
        let a = d.mul(&m).unwrap();
        let err = descend(&a, &d, &params(exp_int(1))).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }

    #[test]
    fn envelope_bounds_match_hand_values() {
        let pr = profile(2, 3, 0);
        let ring = pr.ring.clone();
        // start: I + t^4 E_00 + p^{-1} t^5 E_10, spread 1
        let mut r0 = Matrix::identity(&pr, 2);
        *r0.at_mut(0, 0) = r0.at(0, 0).add(&mono(&pr, exp_int(4), ring.cone())).unwrap();
        *r0.at_mut(1, 0) = mono(&pr, exp_int(5), ring.cdiv_p(&ring.cone(), 1));
        let env = Envelope::from_start(&r0, exp_int(1));
        // exponents below the first sinking exponent get no budget at all
        assert_eq!(env.bound(&exp_int(4)), exp_int(0));
        assert_eq!(env.bound(&exp_int(5)), exp_int(1));
        assert_eq!(env.bound(&exp_int(8)), exp_int(1));
        assert_eq!(env.bound(&exp_int(2)), exp_int(0));
    }

    #[test]
    fn rounding_to_coarser_window_checks_residual() {
        let pr = profile(2, 3, 1);
        let ring = pr.ring.clone();
        // off-lattice term of positive valuation: safe to drop
        let mut u = Matrix::identity(&pr, 2);
        *u.at_mut(0, 1) = mono(&pr, exp_frac(1, 2), ring.c_from_i64(2));
        let coarse = Profile::new(ring.clone(), 0, exp_int(-8), exp_int(8)).unwrap();
        let (rounded, residual) = round_to_profile(&u, &coarse, &exp_int(1)).unwrap();
        assert!(rounded.is_identity());
        assert_eq!(residual.val0(), Some(exp_int(1)));
    }

    #[test]
    fn rounding_rejects_lossy_drop() {
        let pr = profile(2, 3, 1);
        let ring = pr.ring.clone();
        // a unit-size off-lattice term cannot be dropped quietly
        let mut u = Matrix::identity(&pr, 2);
        *u.at_mut(0, 1) = mono(&pr, exp_frac(1, 2), ring.cone());
        let coarse = Profile::new(ring.clone(), 0, exp_int(-8), exp_int(8)).unwrap();
        let err = round_to_profile(&u, &coarse, &exp_int(1)).unwrap_err();
        assert!(matches!(err, Error::RoundingTooCoarse(_)));
    }
}
