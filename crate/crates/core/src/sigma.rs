use crate::coeff::Coeff;
use crate::error::{Error, Result};
use crate::fq::FqElem;
use crate::matrix::{fmt_val, Matrix};
use crate::num::{fmt_ratio, val_min, Exp};
use crate::series::{Profile, Series};
use num_rational::Ratio;
use num_traits::{Signed, Zero};
use std::collections::BTreeMap;

/// A sigma(A) sigma^2(A) .. sigma^{n-1}(A), the matrix of the n-th iterate.
pub fn twisted_product(a: &Matrix, n: usize) -> Result<Matrix> {
    if a.rows != a.cols {
        return Err(Error::InvalidInput("twisted product needs a square matrix".into()));
    }
    let mut acc = a.clone();
    let mut cur = a.clone();
    for _ in 1..n {
        cur = cur.sigma(1);
        acc = acc.mul(&cur)?;
    }
    Ok(acc)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Minimum valuation over all i x i minors; None when every minor is zero
/// to working precision.
pub fn minor_min_val(t: &Matrix, i: usize) -> Result<Option<Exp>> {
    let rows = combinations(t.rows, i);
    let cols = combinations(t.cols, i);
    let mut best: Option<Exp> = None;
    for rs in &rows {
        for cs in &cols {
            let mut sub = Matrix::zero(t.profile(), i, i);
            for (ri, &r) in rs.iter().enumerate() {
                for (ci, &c) in cs.iter().enumerate() {
                    *sub.at_mut(ri, ci) = t.at(r, c).clone();
                }
            }
            best = val_min(best, sub.det()?.val0());
        }
    }
    Ok(best)
}

/// Lower convex hull of (0,0), (1, y1), .., (n, yn); returns the full list
/// of slopes with multiplicities, ascending.
fn lower_hull_slopes(heights: &[Exp]) -> Vec<(Exp, usize)> {
    let mut pts: Vec<(i128, Exp)> = vec![(0, Ratio::zero())];
    for (i, y) in heights.iter().enumerate() {
        pts.push((i as i128 + 1, *y));
    }
    let mut hull: Vec<(i128, Exp)> = Vec::new();
    for p in pts {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            // drop b when it lies on or above segment a..p
            let lhs = (b.1 - a.1) * Ratio::from_integer(p.0 - a.0);
            let rhs = (p.1 - a.1) * Ratio::from_integer(b.0 - a.0);
            if lhs >= rhs {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let mut slopes = Vec::new();
    for wnd in hull.windows(2) {
        let (x0, y0) = wnd[0];
        let (x1, y1) = wnd[1];
        let s = (y1 - y0) / Ratio::from_integer(x1 - x0);
        let mult = (x1 - x0) as usize;
        slopes.push((s, mult));
    }
    slopes
}

fn polygon_at(a: &Matrix, m: usize) -> Result<Vec<(Exp, usize)>> {
    let t = twisted_product(a, m)?;
    let n = a.rows;
    let mut heights = Vec::with_capacity(n);
    for i in 1..=n {
        match minor_min_val(&t, i)? {
            None => {
                return Err(Error::PrecisionExhausted(format!(
                    "all {i}x{i} minors of the {m}-fold twisted product vanish to precision"
                )))
            }
            Some(v) => heights.push(v / Ratio::from_integer(m as i128)),
        }
    }
    Ok(lower_hull_slopes(&heights))
}

pub fn fmt_polygon(sl: &[(Exp, usize)]) -> String {
    sl.iter()
        .map(|(s, m)| format!("{}x{}", fmt_ratio(s), m))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Slopes of the generic polygon with multiplicities, ascending. Computed
/// from minors of twisted products along a doubling schedule; two agreeing
/// consecutive levels count as stabilized.
pub fn newton_polygon(a: &Matrix, max_doublings: u32) -> Result<Vec<(Exp, usize)>> {
    if a.rows != a.cols {
        return Err(Error::InvalidInput("polygon of a non-square matrix".into()));
    }
    let ring = a.profile().ring.clone();
    // normalize to an integral matrix; slopes shift back afterwards
    let mut shift_e: i64 = 0;
    for s in &a.data {
        for (_, c) in s.terms() {
            if let Some(v) = c.val_e() {
                shift_e = shift_e.min(v);
            }
        }
    }
    let work = if shift_e < 0 { a.mul_pi(-shift_e) } else { a.clone() };
    let back = Ratio::new(shift_e as i128, ring.e as i128);
    let fact: usize = (1..=a.rows).product();
    let mut m = ring.e * fact;
    let mut prev = polygon_at(&work, m)?;
    for _ in 0..max_doublings {
        let next = polygon_at(&work, 2 * m)?;
        if next == prev {
            return Ok(prev
                .into_iter()
                .map(|(s, mult)| (s + back, mult))
                .collect());
        }
        prev = next;
        m *= 2;
    }
    Err(Error::NotStabilized(format!(
        "polygon still moving at level {}: {}",
        2 * m,
        fmt_polygon(&prev)
    )))
}

/// Elementary divisor valuations (p-normalized) by two-sided elimination.
pub fn smith_valuations(a: &Matrix) -> Result<Vec<Exp>> {
    let mut work = a.clone();
    let mut alive_rows: Vec<usize> = (0..a.rows).collect();
    let mut alive_cols: Vec<usize> = (0..a.cols).collect();
    let mut vals = Vec::new();
    while !alive_rows.is_empty() && !alive_cols.is_empty() {
        // pivot: minimal valuation, first in row-major order among ties
        let mut pivot: Option<(Exp, usize, usize)> = None;
        for &r in &alive_rows {
            for &c in &alive_cols {
                if let Some(v) = work.at(r, c).val0() {
                    let better = match &pivot {
                        None => true,
                        Some((pv, _, _)) => v < *pv,
                    };
                    if better {
                        pivot = Some((v, r, c));
                    }
                }
            }
        }
        let Some((mu, pr, pc)) = pivot else {
            return Err(Error::PrecisionExhausted(format!(
                "remaining {}x{} block is zero to working precision",
                alive_rows.len(),
                alive_cols.len()
            )));
        };
        vals.push(mu);
        let piv = work.at(pr, pc).clone();
        let piv_inv = piv.invert()?;
        for &r in alive_rows.iter().filter(|&&r| r != pr) {
            let f = work.at(r, pc).mul(&piv_inv)?;
            if f.is_zero() {
                continue;
            }
            for &c in &alive_cols {
                let upd = work.at(r, c).sub(&f.mul(work.at(pr, c))?)?;
                *work.at_mut(r, c) = upd;
            }
        }
        for &c in alive_cols.iter().filter(|&&c| c != pc) {
            let f = work.at(pr, c).mul(&piv_inv)?;
            if f.is_zero() {
                continue;
            }
            for &r in &alive_rows {
                let upd = work.at(r, c).sub(&work.at(r, pc).mul(&f)?)?;
                *work.at_mut(r, c) = upd;
            }
        }
        alive_rows.retain(|&r| r != pr);
        alive_cols.retain(|&c| c != pc);
    }
    vals.sort();
    Ok(vals)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveRegime {
    Empty,
    Forward,
    DigitLift,
    Backward,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub w: Series,
    /// v - (w - lam sigma(w)), recomputed from scratch.
    pub residual: Series,
    pub regime: SolveRegime,
}

fn neg_part(v: &Option<Exp>) -> Exp {
    match v {
        Some(x) if x.is_negative() => -*x,
        _ => Ratio::zero(),
    }
}

/// Solves w - lam sigma(w) = v in the truncated series ring.
///
/// Three regimes by the valuation of lam: positive valuation sums the
/// forward twisted orbit of v; valuation zero requires a constant residue
/// and lifts pi-digit by pi-digit with a residue solve per digit; negative
/// valuation requires a constant monomial and sums the backward orbit,
/// deepening the exponent lattice one level per term.
pub fn solve_sigma_equation(lam: &Series, v: &Series, pad: u32) -> Result<SolveOutcome> {
    let profile = lam.profile.unify(&v.profile)?;
    let ring = profile.ring.clone();
    let lam = {
        let mut l = lam.clone();
        l.profile = profile.clone();
        l
    };
    let v = {
        let mut x = v.clone();
        x.profile = profile.clone();
        x
    };
    let residual_of = |w: &Series| -> Result<Series> {
        v.sub(&w.sub(&lam.mul(&w.sigma(1))?)?)
    };
    if v.is_zero() {
        let w = Series::zero(profile.clone());
        let residual = residual_of(&w)?;
        return Ok(SolveOutcome { w, residual, regime: SolveRegime::Empty });
    }
    let target = Ratio::from_integer(ring.n as i128)
        + neg_part(&v.val0())
        + neg_part(&lam.val0())
        + Ratio::from_integer(pad as i128);
    match lam.val0() {
        None => {
            // lam is zero to precision: w = v solves the equation outright
            let w = v.clone();
            let residual = residual_of(&w)?;
            Ok(SolveOutcome { w, residual, regime: SolveRegime::Empty })
        }
        Some(vl) if vl.is_positive() => {
            let mut w = v.clone();
            let mut t = v.clone();
            let mut guard = 0usize;
            loop {
                t = lam.mul(&t.sigma(1))?;
                if t.is_zero() {
                    break;
                }
                if let Some(tv) = t.val0() {
                    if tv >= target {
                        break;
                    }
                }
                w = w.add(&t)?;
                guard += 1;
                if guard > 4 * ring.e * ring.n as usize + 64 {
                    return Err(Error::NonConvergent(
                        "forward orbit sum failed to reach the target valuation".into(),
                    ));
                }
            }
            let residual = residual_of(&w)?;
            Ok(SolveOutcome { w, residual, regime: SolveRegime::Forward })
        }
        Some(vl) if vl.is_zero() => {
            let lam0 = constant_residue(&lam)?;
            let mut w = Series::zero(profile.clone());
            let mut r = v.clone();
            let mut guard = 0usize;
            while !r.is_zero() {
                let m = r
                    .terms()
                    .filter_map(|(_, c)| c.val_e())
                    .min()
                    .expect("nonzero series has a unit term");
                let (digit_terms, _) = r.partition(|_, c| c.val_e() == Some(m));
                let mut rho: BTreeMap<Exp, FqElem> = BTreeMap::new();
                for (e, c) in digit_terms.terms() {
                    if let Some(res) = ring.cres(c) {
                        rho.insert(*e, res);
                    }
                }
                let (wbar, clipped) = solve_residue_level(&lam0, &rho, &profile)
                    .map_err(|err| match err {
                        Error::ResidueUnsolvable(msg) => Error::ResidueUnsolvable(format!(
                            "pi-digit {m}: {msg}"
                        )),
                        other => other,
                    })?;
                let mut delta = Series::zero(profile.clone());
                for (e, fq) in &wbar {
                    let c = ring.cmul_pi(&ring.c_tau(fq), m);
                    delta = delta.add(&Series::monomial(profile.clone(), *e, c)?)?;
                }
                delta.truncated |= clipped;
                w = w.add(&delta)?;
                let applied = delta.sub(&lam.mul(&delta.sigma(1))?)?;
                r = r.sub(&applied)?;
                if let Some(bad) = r.terms().filter_map(|(_, c)| c.val_e()).min() {
                    if bad <= m {
                        return Err(Error::InvariantViolated(format!(
                            "digit {m} did not clear (min val_e now {bad})"
                        )));
                    }
                }
                guard += 1;
                if guard > 2 * (ring.e * ring.n as usize) + 64 {
                    return Err(Error::InvariantViolated(
                        "digit lift ran past the precision budget".into(),
                    ));
                }
            }
            let residual = residual_of(&w)?;
            Ok(SolveOutcome { w, residual, regime: SolveRegime::DigitLift })
        }
        Some(_) => {
            // negative valuation: require a constant monomial
            let ok_shape = lam.num_terms() == 1 && lam.get(&Ratio::zero()).is_some();
            if !ok_shape {
                return Err(Error::InvalidInput(
                    "negative-valuation unit coefficient must be a constant monomial".into(),
                ));
            }
            let lam_c = lam.get(&Ratio::zero()).unwrap().clone();
            let lam_c_inv = ring.cinv(&lam_c)?;
            let mut u = v.mul_coeff(&lam_c_inv).sigma_inv()?;
            let mut w = Series::zero(u.profile.clone());
            let mut guard = 0usize;
            loop {
                w.profile = w.profile.unify(&u.profile)?;
                w = w.sub(&u)?;
                if let Some(uv) = u.val0() {
                    if uv >= target {
                        break;
                    }
                } else {
                    break;
                }
                u = u.mul_coeff(&lam_c_inv).sigma_inv()?;
                if u.is_zero() {
                    break;
                }
                guard += 1;
                if guard > 4 * ring.e * ring.n as usize + 64 {
                    return Err(Error::NonConvergent(
                        "backward orbit sum failed to reach the target valuation".into(),
                    ));
                }
            }
            let residual = {
                let mut vv = v.clone();
                vv.profile = vv.profile.unify(&w.profile)?;
                let mut ll = lam.clone();
                ll.profile = ll.profile.unify(&w.profile)?;
                vv.sub(&w.sub(&ll.mul(&w.sigma(1))?)?)?
            };
            Ok(SolveOutcome { w, residual, regime: SolveRegime::Backward })
        }
    }
}

fn constant_residue(lam: &Series) -> Result<FqElem> {
    let ring = lam.profile.ring.clone();
    let mut found: Option<(Exp, FqElem)> = None;
    for (e, c) in lam.terms() {
        if c.val_e() == Some(0) {
            if found.is_some() || !e.is_zero() {
                return Err(Error::NonConstantResidue(format!(
                    "unit part has a valuation-zero term at t^{}",
                    fmt_ratio(e)
                )));
            }
            found = Some((*e, ring.cres(c).unwrap()));
        }
    }
    match found {
        Some((_, r)) => Ok(r),
        None => Err(Error::InvariantViolated(
            "valuation-zero series without a valuation-zero term".into(),
        )),
    }
}

/// Residue-level solve of wbar - lam0 * frob(wbar) = rho on the exponent
/// lattice, one Frobenius orbit at a time. Returns the solution and whether
/// any chain left the window.
fn solve_residue_level(
    lam0: &FqElem,
    rho: &BTreeMap<Exp, FqElem>,
    profile: &Profile,
) -> Result<(BTreeMap<Exp, FqElem>, bool)> {
    let ring = profile.ring.clone();
    let fq = &ring.fq;
    let p = ring.p as i128;
    let mut wbar: BTreeMap<Exp, FqElem> = BTreeMap::new();
    let mut clipped = false;

    // exponent zero: one Artin-Schreier style linear solve
    if let Some(v0) = rho.get(&Ratio::zero()) {
        let sol = fq.artin_schreier_solve(lam0, v0).map_err(|e| match e {
            Error::ResidueUnsolvable(m) => {
                Error::ResidueUnsolvable(format!("exponent 0: {m}"))
            }
            other => other,
        })?;
        if !fq.is_zero(&sol) {
            wbar.insert(Ratio::zero(), sol);
        }
    }

    // positive exponents: ascending, each pulls from exp/p
    let pos_exps: Vec<Exp> = {
        let mut set: std::collections::BTreeSet<Exp> = Default::default();
        for e in rho.keys().filter(|e| e.is_positive()) {
            let mut cur = *e;
            while cur <= profile.hi {
                set.insert(cur);
                match cur.numer().checked_mul(p) {
                    Some(n) => cur = Ratio::new(n, *cur.denom()),
                    None => break,
                }
            }
        }
        set.into_iter().collect()
    };
    for e in pos_exps {
        let prev = Ratio::new(*e.numer(), e.denom() * p);
        let feed = if profile.on_lattice(&prev) {
            wbar.get(&prev).cloned().unwrap_or_else(|| fq.zero())
        } else {
            fq.zero()
        };
        let mut val = rho.get(&e).cloned().unwrap_or_else(|| fq.zero());
        val = fq.add(&val, &fq.mul(lam0, &fq.frobenius(&feed)));
        if !fq.is_zero(&val) {
            // the image of this term would land at p*e
            if e * Ratio::from_integer(p) > profile.hi {
                clipped = true;
            }
            wbar.insert(e, val);
        }
    }

    // negative exponents: from nearest to zero outward, each pulls from exp/p
    let neg_exps: Vec<Exp> = {
        let mut set: std::collections::BTreeSet<Exp> = Default::default();
        for e in rho.keys().filter(|e| e.is_negative()) {
            let mut cur = *e;
            while cur >= profile.lo {
                set.insert(cur);
                match cur.numer().checked_mul(p) {
                    Some(n) => cur = Ratio::new(n, *cur.denom()),
                    None => break,
                }
            }
        }
        set.into_iter().rev().collect()
    };
    for e in neg_exps {
        let prev = Ratio::new(*e.numer(), e.denom() * p);
        let feed = if profile.on_lattice(&prev) {
            wbar.get(&prev).cloned().unwrap_or_else(|| fq.zero())
        } else {
            fq.zero()
        };
        let mut val = rho.get(&e).cloned().unwrap_or_else(|| fq.zero());
        val = fq.add(&val, &fq.mul(lam0, &fq.frobenius(&feed)));
        if !fq.is_zero(&val) {
            if e * Ratio::from_integer(p) < profile.lo {
                clipped = true;
            }
            wbar.insert(e, val);
        }
    }
    Ok((wbar, clipped))
}

#[derive(Debug, Clone)]
pub struct GenDiagOutcome {
    pub u: Matrix,
    pub u_inv: Matrix,
    /// Valuation of the final defect, None when it vanished to precision.
    pub residual_val: Option<Exp>,
    pub rounds: usize,
    pub truncated: bool,
}

/// Iteratively conjugates B into the diagonal frame D: finds U with
/// U^{-1} B sigma(U) D^{-1} = I to working precision. B D^{-1} must be
/// congruent to the identity modulo pi.
pub fn diagonalize_generic(b: &Matrix, d: &Matrix, max_rounds: usize) -> Result<GenDiagOutcome> {
    if b.rows != b.cols || d.rows != d.cols || b.rows != d.rows {
        return Err(Error::InvalidInput("diagonalization needs matching square matrices".into()));
    }
    let n = b.rows;
    let profile = b.profile().unify(d.profile())?;
    let ring = profile.ring.clone();
    let d_entries = diagonal_monomials(d)?;
    let d_inv = {
        let mut m = Matrix::identity(&profile, n);
        for (i, c) in d_entries.iter().enumerate() {
            *m.at_mut(i, i) = Series::monomial(profile.clone(), Ratio::zero(), ring.cinv(c)?)?;
        }
        m
    };
    let start = b.mul(&d_inv)?.sub_identity()?;
    if !crate::series::val_gt(&start.val0(), &Ratio::zero()) {
        return Err(Error::InvalidInput(
            "B D^{-1} is not congruent to the identity mod pi".into(),
        ));
    }
    let stop = Ratio::from_integer(ring.n as i128);
    let delta_pad: i128 = {
        let vals: Vec<Exp> = d_entries.iter().filter_map(|c| ring.cval(c)).collect();
        let mx = vals.iter().max().cloned().unwrap_or_else(Ratio::zero);
        let mn = vals.iter().min().cloned().unwrap_or_else(Ratio::zero);
        (mx - mn).ceil().to_integer() + 1
    };
    let neumann_stop = stop + Ratio::from_integer(delta_pad);
    let mut u = Matrix::identity(&profile, n);
    let mut u_inv = Matrix::identity(&profile, n);
    let mut last_val: Option<Exp> = None;
    for round in 1..=max_rounds {
        let v = u_inv
            .mul(b)?
            .mul(&u.sigma(1))?
            .mul(&d_inv)?
            .sub_identity()?;
        let vval = v.val0();
        if v.is_zero() || !val_lt(&vval, &stop) {
            return Ok(GenDiagOutcome {
                truncated: u.truncated() || u_inv.truncated() || v.truncated(),
                u,
                u_inv,
                residual_val: vval,
                rounds: round - 1,
            });
        }
        let floor_needed = Ratio::new(round as i128, ring.e as i128);
        if val_lt(&vval, &floor_needed) {
            return Err(Error::InvariantViolated(format!(
                "defect valuation {} fell below the round floor {}",
                fmt_val(&vval),
                fmt_ratio(&floor_needed)
            )));
        }
        if last_val == vval {
            return Err(Error::NonConvergent(format!(
                "defect valuation stuck at {}",
                fmt_val(&vval)
            )));
        }
        last_val = vval;
        let digit = {
            let scaled = vval.unwrap() * Ratio::from_integer(ring.e as i128);
            debug_assert!(scaled.is_integer(), "defect valuation off the pi lattice");
            scaled.to_integer() as i64
        };
        let mut w = Matrix::zero(&profile, n, n);
        for i in 0..n {
            for j in 0..n {
                let lam_c = ring.cmul(&d_entries[i], &ring.cinv(&d_entries[j])?);
                let lam_val = ring.cval(&lam_c).expect("frame ratio is a unit times pi power");
                if lam_val.is_zero() {
                    // a valuation-zero ratio only guarantees a solvable
                    // residue equation at the lowest live digit; deeper
                    // digits of the stale defect carry unlinearized terms,
                    // so clear one digit and recompute
                    let (slice, _) = v.at(i, j).partition(|_, c| c.val_e() == Some(digit));
                    if slice.is_zero() {
                        continue;
                    }
                    let lam0 = ring.cres(&lam_c).expect("unit coefficient has a residue");
                    let mut rho: BTreeMap<Exp, FqElem> = BTreeMap::new();
                    for (ex, c) in slice.terms() {
                        if let Some(res) = ring.cres(c) {
                            rho.insert(*ex, res);
                        }
                    }
                    let (wbar, clipped) =
                        solve_residue_level(&lam0, &rho, &profile).map_err(|e| match e {
                            Error::ResidueUnsolvable(m) => Error::ResidueUnsolvable(format!(
                                "entry ({i},{j}) round {round} pi-digit {digit}: {m}"
                            )),
                            other => other,
                        })?;
                    let mut delta = Series::zero(profile.clone());
                    for (ex, fqv) in &wbar {
                        let c = ring.cmul_pi(&ring.c_tau(fqv), digit);
                        delta = delta.add(&Series::monomial(profile.clone(), *ex, c)?)?;
                    }
                    delta.truncated |= clipped;
                    *w.at_mut(i, j) = delta;
                } else {
                    // forward and backward regimes never hit a residue
                    // obstruction; terms already past the stop need no
                    // clearing and only feed junk into later rounds
                    let (low, _) = v
                        .at(i, j)
                        .partition(|_, c| matches!(ring.cval(c), Some(x) if x < stop));
                    if low.is_zero() {
                        continue;
                    }
                    let lam = Series::monomial(profile.clone(), Ratio::zero(), lam_c)?;
                    let sol = solve_sigma_equation(&lam, &low, 2).map_err(|e| match e {
                        Error::ResidueUnsolvable(m) => Error::ResidueUnsolvable(format!(
                            "entry ({i},{j}) round {round}: {m}"
                        )),
                        other => other,
                    })?;
                    *w.at_mut(i, j) = sol.w;
                }
            }
        }
        w.unify_profiles()?;
        let step = Matrix::identity(w.profile(), n).add(&w)?;
        let step_inv = step.neumann_inverse(&neumann_stop, 8 * ring.e * ring.n as usize + 32)?;
        let u_next = u.mul(&step)?;
        // successive frames agree below the cleared digit
        debug_assert!({
            let diff = u_next.sub(&u);
            match diff {
                Ok(df) => crate::num::val_ge(&df.val0(), &floor_needed),
                Err(_) => false,
            }
        });
        // frame terms past the Neumann stop cannot shift the defect below
        // the stop valuation; keeping them compounds term counts round over
        // round on an ever deeper exponent lattice
        u = prune_val_at_least(&u_next, &neumann_stop);
        u_inv = prune_val_at_least(&step_inv.mul(&u_inv)?, &neumann_stop);
    }
    Err(Error::NonConvergent(format!(
        "diagonalization still active after {max_rounds} rounds"
    )))
}

fn val_lt(v: &Option<Exp>, bound: &Exp) -> bool {
    match v {
        None => false,
        Some(x) => x < bound,
    }
}

fn prune_val_at_least(m: &Matrix, bound: &Exp) -> Matrix {
    let ring = m.profile().ring.clone();
    let mut out = m.clone();
    for s in out.data.iter_mut() {
        let (keep, _) = s.partition(|_, c| matches!(ring.cval(c), Some(x) if x < *bound));
        *s = keep;
    }
    out
}

/// Extracts the diagonal coefficients of a diagonal matrix of constant
/// monomials; rejects anything else.
pub fn diagonal_monomials(d: &Matrix) -> Result<Vec<Coeff>> {
    let mut out = Vec::with_capacity(d.rows);
    for i in 0..d.rows {
        for j in 0..d.cols {
            let s = d.at(i, j);
            if i == j {
                if s.num_terms() != 1 || s.get(&Ratio::zero()).is_none() {
                    return Err(Error::InvalidInput(format!(
                        "diagonal entry {i} must be a single constant monomial"
                    )));
                }
                out.push(s.get(&Ratio::zero()).unwrap().clone());
            } else if !s.is_zero() {
                return Err(Error::InvalidInput(format!(
                    "matrix is not diagonal at ({i},{j})"
                )));
            }
        }
    }
    Ok(out)
}
