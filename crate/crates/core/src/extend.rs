use crate::coeff::{Coeff, RingCtx};
use crate::descent::{descend, DescentOutcome, DescentParams};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::series::{Profile, Series};
use crate::sigma::{diagonalize_generic, GenDiagOutcome};
use std::collections::BTreeMap;
use std::sync::Arc;

/// First monic irreducible of the given degree mod p, in odometer order
/// over the lower coefficients.
pub fn find_irreducible(p: u64, deg: usize) -> Result<Vec<u64>> {
    if deg == 0 || deg > 8 {
        return Err(Error::InvalidInput(format!("unsupported degree {deg}")));
    }
    let mut lower = vec![0u64; deg];
    loop {
        let mut phi = lower.clone();
        phi.push(1);
        if crate::fq::FqCtx::new(p, phi.clone()).is_ok() {
            return Ok(phi);
        }
        let mut i = 0;
        loop {
            if i == deg {
                return Err(Error::InvalidInput(format!(
                    "no irreducible of degree {deg} found mod {p}"
                )));
            }
            lower[i] += 1;
            if lower[i] < p {
                break;
            }
            lower[i] = 0;
            i += 1;
        }
    }
}

/// Embedding of one coefficient ring into another with the same p, e, N
/// and a larger residue field, along a chosen root of the source modulus.
pub struct RingEmbedding {
    pub src: Arc<RingCtx>,
    pub dst: Arc<RingCtx>,
    /// Powers z^0 .. z^{d_src - 1} of the embedded generator, as
    /// destination Witt elements.
    zpow: Vec<Vec<u64>>,
}

fn eval_poly(ring: &RingCtx, coeffs: &[u64], x: &[u64]) -> Vec<u64> {
    let mut acc = ring.wzero();
    for c in coeffs.iter().rev() {
        acc = ring.wmul(&acc, x);
        let mut cv = ring.wzero();
        cv[0] = c % ring.pn;
        acc = ring.wadd(&acc, &cv);
    }
    acc
}

fn eval_poly_deriv(ring: &RingCtx, coeffs: &[u64], x: &[u64]) -> Vec<u64> {
    let mut acc = ring.wzero();
    for (k, c) in coeffs.iter().enumerate().skip(1).rev() {
        acc = ring.wmul(&acc, x);
        let mut cv = ring.wzero();
        cv[0] = (c % ring.pn).wrapping_mul(k as u64) % ring.pn;
        acc = ring.wadd(&acc, &cv);
    }
    acc
}

impl RingEmbedding {
    pub fn new(src: &Arc<RingCtx>, dst: &Arc<RingCtx>) -> Result<RingEmbedding> {
        if src.p != dst.p || src.e != dst.e || src.n != dst.n {
            return Err(Error::SpecMismatch(
                "embedding needs matching p, e and precision".into(),
            ));
        }
        if dst.d % src.d != 0 {
            return Err(Error::SpecMismatch(
                "destination residue degree must be a multiple of the source".into(),
            ));
        }
        // root of the source modulus in the destination residue field
        let phi_res: Vec<u64> = src.phi_input.iter().map(|c| c % src.p).collect();
        let mut root = None;
        for cand in dst.fq.enumerate() {
            let mut acc = dst.fq.zero();
            for c in phi_res.iter().rev() {
                acc = dst.fq.mul(&acc, &cand);
                acc = dst.fq.add(&acc, &dst.fq.from_u64(*c));
            }
            if dst.fq.is_zero(&acc) {
                root = Some(cand);
                break;
            }
        }
        let Some(root) = root else {
            return Err(Error::InvalidInput(
                "source modulus has no root in the destination field".into(),
            ));
        };
        // Hensel lift the simple root to the Witt level
        let mut z: Vec<u64> = root.clone();
        for _ in 0..=dst.n {
            let f = eval_poly(dst, &src.phi_input, &z);
            let fp = eval_poly_deriv(dst, &src.phi_input, &z);
            let step = dst.wmul(&f, &dst.winv(&fp)?);
            z = dst.wsub(&z, &step);
        }
        debug_assert!(eval_poly(dst, &src.phi_input, &z).iter().all(|&c| c == 0));
        let mut zpow = Vec::with_capacity(src.d);
        let mut cur = dst.wone();
        for _ in 0..src.d {
            zpow.push(cur.clone());
            cur = dst.wmul(&cur, &z);
        }
        Ok(RingEmbedding { src: src.clone(), dst: dst.clone(), zpow })
    }

    fn embed_w(&self, a: &[u64]) -> Vec<u64> {
        let mut out = self.dst.wzero();
        for (i, coord) in a.iter().enumerate() {
            if *coord == 0 {
                continue;
            }
            let mut scaled = self.zpow[i].clone();
            for digit in scaled.iter_mut() {
                *digit = ((*digit as u128 * *coord as u128) % self.dst.pn as u128) as u64;
            }
            out = self.dst.wadd(&out, &scaled);
        }
        out
    }

    pub fn coeff(&self, c: &Coeff) -> Coeff {
        match c {
            Coeff::Zero { floor_e } => Coeff::Zero { floor_e: *floor_e },
            Coeff::Unit { val_e, prec_e, digits } => {
                let e = self.src.e;
                let ds = self.src.d;
                let mut out = Vec::with_capacity(e * self.dst.d);
                for j in 0..e {
                    out.extend(self.embed_w(&digits[j * ds..(j + 1) * ds]));
                }
                self.dst.c_make(*val_e, out, *prec_e)
            }
        }
    }

    pub fn profile(&self, p: &Profile) -> Result<Profile> {
        Profile::new(self.dst.clone(), p.h, p.lo, p.hi)
    }

    pub fn series(&self, s: &Series) -> Result<Series> {
        let profile = self.profile(&s.profile)?;
        let mut out = Series::zero(profile.clone());
        for (e, c) in s.terms() {
            let ec = self.coeff(c);
            if !ec.is_zero() {
                out = out.add(&Series::monomial(profile.clone(), *e, ec)?)?;
            }
        }
        out.truncated = s.truncated;
        Ok(out)
    }

    pub fn matrix(&self, m: &Matrix) -> Result<Matrix> {
        let profile = self.profile(m.profile())?;
        let mut out = Matrix::zero(&profile, m.rows, m.cols);
        for i in 0..m.rows {
            for j in 0..m.cols {
                *out.at_mut(i, j) = self.series(m.at(i, j))?;
            }
        }
        Ok(out)
    }
}

/// Doubles the residue degree, keeping p, e and the precision.
pub fn extend_ring(src: &Arc<RingCtx>) -> Result<(Arc<RingCtx>, RingEmbedding)> {
    let new_d = src.d * 2;
    if new_d > 8 {
        return Err(Error::InvalidInput(format!(
            "residue degree {new_d} exceeds the supported bound"
        )));
    }
    let phi = find_irreducible(src.p, new_d)?;
    let dst = Arc::new(RingCtx::new(src.p, phi, src.e, src.n)?);
    let emb = RingEmbedding::new(src, &dst)?;
    Ok((dst, emb))
}

/// Result of an adaptive run together with the inputs as embedded into the
/// ring the run finally succeeded in.
pub struct Adaptive<T> {
    pub outcome: T,
    pub a: Matrix,
    pub d: Matrix,
    pub extensions: usize,
    pub lattice_raises: u32,
}

/// Diagonalization that widens the residue field when a residue equation
/// has no solution in the current one.
pub fn diagonalize_adaptive(
    b: &Matrix,
    d_mat: &Matrix,
    max_rounds: usize,
    max_extensions: usize,
) -> Result<Adaptive<GenDiagOutcome>> {
    let mut cur_b = b.clone();
    let mut cur_d = d_mat.clone();
    let mut extensions = 0;
    loop {
        match diagonalize_generic(&cur_b, &cur_d, max_rounds) {
            Ok(outcome) => {
                return Ok(Adaptive {
                    outcome,
                    a: cur_b,
                    d: cur_d,
                    extensions,
                    lattice_raises: 0,
                })
            }
            Err(Error::ResidueUnsolvable(msg)) => {
                if extensions >= max_extensions {
                    return Err(Error::ResidueUnsolvable(format!(
                        "{msg} (after {extensions} residue extensions)"
                    )));
                }
                let ring = cur_b.profile().ring.clone();
                let (_, emb) = extend_ring(&ring)?;
                cur_b = emb.matrix(&cur_b)?;
                cur_d = emb.matrix(&cur_d)?;
                extensions += 1;
            }
            Err(other) => return Err(other),
        }
    }
}

/// Reduction that deepens the exponent lattice when a graded piece fails
/// to land on it.
pub fn descend_adaptive(
    a: &Matrix,
    d_mat: &Matrix,
    params: &DescentParams,
    max_raises: u32,
) -> Result<Adaptive<DescentOutcome>> {
    let mut cur_a = a.clone();
    let mut cur_d = d_mat.clone();
    let mut raises = 0;
    loop {
        match descend(&cur_a, &cur_d, params) {
            Ok(outcome) => {
                return Ok(Adaptive {
                    outcome,
                    a: cur_a,
                    d: cur_d,
                    extensions: 0,
                    lattice_raises: raises,
                })
            }
            Err(Error::NoGrading(msg)) => {
                if raises >= max_raises {
                    return Err(Error::NoGrading(format!(
                        "{msg} (after {raises} lattice refinements)"
                    )));
                }
                let deeper = cur_a.profile().with_h(cur_a.profile().h + 1)?;
                cur_a = reprofiled(&cur_a, &deeper);
                cur_d = reprofiled(&cur_d, &deeper);
                raises += 1;
            }
            Err(other) => return Err(other),
        }
    }
}

fn reprofiled(m: &Matrix, profile: &Profile) -> Matrix {
    let mut out = m.clone();
    for s in out.data.iter_mut() {
        s.profile = profile.clone();
    }
    out
}

/// Keeps only the terms a target profile can carry; used to express
/// adaptive results on the original lattice when possible.
pub fn project_terms(s: &Series, target: &Profile) -> Result<(Series, bool)> {
    let mut out = Series::zero(target.clone());
    let mut dropped = false;
    let mut kept: BTreeMap<_, _> = BTreeMap::new();
    for (e, c) in s.terms() {
        if target.on_lattice(e) && target.in_window(e) {
            kept.insert(*e, c.clone());
        } else {
            dropped = true;
        }
    }
    for (e, c) in kept {
        out = out.add(&Series::monomial(target.clone(), e, c)?)?;
    }
    out.truncated = s.truncated || dropped;
    Ok((out, dropped))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::exp_int;
    use crate::series::val_gt;
    use crate::sigma::newton_polygon;
    use num_rational::Ratio;
    use num_traits::Zero;

    #[test]
    fn irreducible_search_finds_known_moduli() {
        assert_eq!(find_irreducible(2, 1).unwrap(), vec![0, 1]);
        assert_eq!(find_irreducible(2, 2).unwrap(), vec![1, 1, 1]);
        assert_eq!(find_irreducible(2, 4).unwrap(), vec![1, 1, 0, 0, 1]);
        let phi = find_irreducible(5, 2).unwrap();
        assert_eq!(phi.len(), 3);
        assert!(crate::fq::FqCtx::new(5, phi).is_ok());
    }

    #[test]
    fn embedding_is_a_ring_map_and_respects_frobenius() {
        let src = Arc::new(RingCtx::new(2, vec![1, 1, 1], 1, 4).unwrap());
        let (dst, emb) = extend_ring(&src).unwrap();
        assert_eq!(dst.d, 4);
        let a = src.c_from_pi_w(1, &[3, 2]);
        let b = src.c_from_pi_w(0, &[1, 7]);
        let prod = src.cmul(&a, &b);
        let prod_emb = dst.cmul(&emb.coeff(&a), &emb.coeff(&b));
        assert!(dst.ceq(&emb.coeff(&prod), &prod_emb));
        let sum_emb = dst.cadd(&emb.coeff(&a), &emb.coeff(&b));
        assert!(dst.ceq(&emb.coeff(&src.cadd(&a, &b)), &sum_emb));
        // sigma commutes with the embedding
        let sig = src.csigma(&a, 1);
        let sig_emb = dst.csigma(&emb.coeff(&a), 1);
        assert!(dst.ceq(&emb.coeff(&sig), &sig_emb));
    }

    #[test]
    fn polygon_is_stable_under_embedding() {
        let src = Arc::new(RingCtx::new(2, vec![0, 1], 1, 4).unwrap());
        let pr = Profile::new(src.clone(), 0, exp_int(-8), exp_int(8)).unwrap();
        let mut a = Matrix::zero(&pr, 2, 2);
        *a.at_mut(0, 1) =
            Series::monomial(pr.clone(), exp_int(0), src.c_from_i64(2)).unwrap();
        *a.at_mut(1, 0) =
            Series::monomial(pr.clone(), exp_int(0), src.cone()).unwrap();
        let poly = newton_polygon(&a, 3).unwrap();
        let (_, emb) = extend_ring(&src).unwrap();
        let a2 = emb.matrix(&a).unwrap();
        assert_eq!(newton_polygon(&a2, 3).unwrap(), poly);
    }

    #[test]
    fn unsolvable_twist_resolves_after_extension() {
        // B = [1 + p] against D = [1] at N = 2: over the prime field the
        // digit equation c - c = 1 has no solution; one extension fixes it
        let src = Arc::new(RingCtx::new(2, vec![0, 1], 1, 2).unwrap());
        let pr = Profile::new(src.clone(), 0, exp_int(-4), exp_int(4)).unwrap();
        let b = Matrix::diag(vec![Series::monomial(pr.clone(), exp_int(0), src.c_from_i64(3))
            .unwrap()])
        .unwrap();
        let d = Matrix::identity(&pr, 1);
        let err = diagonalize_generic(&b, &d, 16).unwrap_err();
        assert!(matches!(err, Error::ResidueUnsolvable(_)));
        let out = diagonalize_adaptive(&b, &d, 16, 2).unwrap();
        assert_eq!(out.extensions, 1);
        assert_eq!(out.a.profile().ring.d, 2);
        assert!(out.outcome.residual_val.is_none()
            || val_gt(&out.outcome.residual_val, &Ratio::zero()));
    }
}
