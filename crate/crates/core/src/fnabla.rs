use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::num::{exp_int, val_ge, Exp};
use num_traits::Zero;

/// Defect of the intertwining identity between a semilinear frame A and a
/// derivation frame G, namely G*A + theta(A) - p*A*sigma(G).
pub fn compat_residual(a: &Matrix, g: &Matrix) -> Result<Matrix> {
    if a.rows != a.cols || g.rows != g.cols || a.rows != g.rows {
        return Err(Error::InvalidInput(
            "compatibility check needs matching square matrices".into(),
        ));
    }
    let e = a.profile().ring.e as i64;
    let ga = g.mul(a)?;
    let th = a.theta();
    let twisted = a.mul(&g.sigma(1))?.mul_pi(e);
    ga.add(&th)?.sub(&twisted)
}

pub fn is_compatible(a: &Matrix, g: &Matrix) -> Result<bool> {
    Ok(compat_residual(a, g)?.is_zero())
}

/// Gauge action of an invertible S on a frame pair:
/// A goes to S*A*sigma(S_inv) and G to S*G*S_inv - theta(S)*S_inv.
/// The compatibility defect transforms by R -> S*R*sigma(S_inv).
pub fn gauge(a: &Matrix, g: &Matrix, s: &Matrix, s_inv: &Matrix) -> Result<(Matrix, Matrix)> {
    let a2 = s.mul(a)?.mul(&s_inv.sigma(1))?;
    let g2 = s.mul(g)?.mul(s_inv)?.sub(&s.theta().mul(s_inv)?)?;
    Ok((a2, g2))
}

pub struct ContractOutcome {
    pub r: Matrix,
    /// Valuation after each application, in p-units.
    pub val_log: Vec<Exp>,
    pub steps: usize,
    pub converged: bool,
}

/// Iterates R -> p * M1 * sigma(R) * M2 until R vanishes to working
/// precision. With integral M1 and M2 each pass gains at least one unit
/// of valuation; a pass that fails to gain is reported as stagnation.
pub fn contract_sigma(
    m1: &Matrix,
    m2: &Matrix,
    r0: &Matrix,
    max_steps: usize,
) -> Result<ContractOutcome> {
    if m1.cols != r0.rows || r0.cols != m2.rows {
        return Err(Error::InvalidInput("contraction shapes do not compose".into()));
    }
    let ring = r0.profile().ring.clone();
    let target = exp_int(ring.n as i64);
    let e = ring.e as i64;
    let mut r = r0.clone();
    let mut val_log = Vec::new();
    let mut last = r.val0();
    let mut steps = 0;
    while steps < max_steps {
        if val_ge(&r.val0(), &target) {
            return Ok(ContractOutcome { r, val_log, steps, converged: true });
        }
        r = m1.mul(&r.sigma(1))?.mul(m2)?.mul_pi(e);
        steps += 1;
        match (r.val0(), last) {
            (Some(v), Some(prev)) => {
                if v <= prev {
                    return Err(Error::NonConvergent(format!(
                        "contraction stalled at valuation {v} after {steps} passes"
                    )));
                }
                val_log.push(v);
                last = Some(v);
            }
            (Some(v), None) => {
                return Err(Error::InvariantViolated(format!(
                    "contraction revived a vanished operand at valuation {v}"
                )));
            }
            (None, _) => {
                return Ok(ContractOutcome { r, val_log, steps, converged: true });
            }
        }
    }
    let converged = val_ge(&r.val0(), &target);
    Ok(ContractOutcome { r, val_log, steps, converged })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnipotentCert {
    /// Size and slope of each diagonal block, slopes strictly increasing.
    pub blocks: Vec<(usize, Exp)>,
    /// The derivation frame satisfies G^nilpotency = 0.
    pub nilpotency: usize,
}

#[derive(Debug)]
pub enum UnipotentCheck {
    Certified(UnipotentCert),
    Failed(String),
}

/// Structural certificate that a constant frame A together with G presents
/// a filtration by constant twists with nilpotent derivation action: A must
/// be block upper triangular for the partition of the diagonal by valuation,
/// and G strictly block upper triangular.
pub fn verify_unipotent(a: &Matrix, g: &Matrix) -> Result<UnipotentCheck> {
    if a.rows != a.cols || g.rows != g.cols || a.rows != g.rows {
        return Err(Error::InvalidInput(
            "certificate check needs matching square matrices".into(),
        ));
    }
    let n = a.rows;
    for i in 0..n {
        for j in 0..n {
            if a.at(i, j).terms().any(|(e, _)| !e.is_zero()) {
                return Ok(UnipotentCheck::Failed(format!(
                    "frame entry ({i},{j}) is not constant"
                )));
            }
        }
    }
    let mut slopes = Vec::with_capacity(n);
    for i in 0..n {
        match a.at(i, i).val0() {
            Some(v) => slopes.push(v),
            None => {
                return Ok(UnipotentCheck::Failed(format!(
                    "diagonal entry ({i},{i}) vanishes to working precision"
                )))
            }
        }
    }
    for i in 1..n {
        if slopes[i] < slopes[i - 1] {
            return Ok(UnipotentCheck::Failed(
                "diagonal slopes are not sorted ascending".into(),
            ));
        }
    }
    let mut blocks: Vec<(usize, Exp)> = Vec::new();
    let mut block_of = vec![0usize; n];
    for (i, v) in slopes.iter().enumerate() {
        match blocks.last_mut() {
            Some((size, slope)) if slope == v => {
                *size += 1;
            }
            _ => blocks.push((1, *v)),
        }
        block_of[i] = blocks.len() - 1;
    }
    for i in 0..n {
        for j in 0..n {
            if block_of[i] > block_of[j] && !a.at(i, j).is_zero() {
                return Ok(UnipotentCheck::Failed(format!(
                    "frame entry ({i},{j}) sits below the block diagonal"
                )));
            }
            if block_of[i] >= block_of[j] && !g.at(i, j).is_zero() {
                return Ok(UnipotentCheck::Failed(format!(
                    "derivation entry ({i},{j}) is not strictly block upper"
                )));
            }
        }
    }
    let nilpotency = blocks.len();
    let mut power = Matrix::identity(g.profile(), n);
    for _ in 0..nilpotency {
        power = power.mul(g)?;
    }
    if !power.is_zero() {
        return Err(Error::InvariantViolated(
            "strictly block upper derivation frame has a nonvanishing power".into(),
        ));
    }
    Ok(UnipotentCheck::Certified(UnipotentCert { blocks, nilpotency }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::RingCtx;
    use crate::num::exp_frac;
    use crate::series::{Profile, Series};
    use std::sync::Arc;

    fn setup(p: u64, n: u32) -> (Arc<RingCtx>, Profile) {
        let ring = Arc::new(RingCtx::new(p, vec![0, 1], 1, n).unwrap());
        let pr = Profile::new(ring.clone(), 1, exp_int(-8), exp_int(8)).unwrap();
        (ring, pr)
    }

    fn mono(pr: &Profile, e: Exp, c: i64) -> Series {
        Series::monomial(pr.clone(), e, pr.ring.c_from_i64(c)).unwrap()
    }

    #[test]
    fn rank_one_twist_matches_its_derivation() {
        // A = t^2, G = 1 over p = 3: the defect is t^2 (1 + 2 - 3) = 0
        let (_, pr) = setup(3, 4);
        let a = Matrix::diag(vec![mono(&pr, exp_int(2), 1)]).unwrap();
        let g = Matrix::diag(vec![mono(&pr, exp_int(0), 1)]).unwrap();
        assert!(is_compatible(&a, &g).unwrap());
        // perturbing the derivation breaks it
        let g_bad = Matrix::diag(vec![mono(&pr, exp_int(0), 2)]).unwrap();
        assert!(!is_compatible(&a, &g_bad).unwrap());
    }

    #[test]
    fn constant_diagonal_frame_needs_no_derivation() {
        let (ring, pr) = setup(2, 3);
        let a = Matrix::diag(vec![
            mono(&pr, exp_int(0), 1),
            Series::monomial(pr.clone(), exp_int(0), ring.c_from_pi_w(1, &[1])).unwrap(),
        ])
        .unwrap();
        let g = Matrix::zero(&pr, 2, 2);
        assert!(is_compatible(&a, &g).unwrap());
    }

    #[test]
    fn gauge_conjugates_the_defect() {
        let (ring, pr) = setup(2, 4);
        // S = I + 2t E01 with exact inverse I - 2t E01
        let mut s = Matrix::identity(&pr, 2);
        *s.at_mut(0, 1) = mono(&pr, exp_int(1), 2);
        let mut s_inv = Matrix::identity(&pr, 2);
        *s_inv.at_mut(0, 1) = mono(&pr, exp_int(1), -2);
        assert!(s.mul(&s_inv).unwrap().is_identity());
        let a = Matrix::diag(vec![
            mono(&pr, exp_int(0), 1),
            Series::monomial(pr.clone(), exp_int(0), ring.c_from_pi_w(1, &[1])).unwrap(),
        ])
        .unwrap();
        let mut g = Matrix::zero(&pr, 2, 2);
        *g.at_mut(0, 1) = mono(&pr, exp_int(1), 1);
        let before = compat_residual(&a, &g).unwrap();
        assert!(!before.is_zero());
        let (a2, g2) = gauge(&a, &g, &s, &s_inv).unwrap();
        let after = compat_residual(&a2, &g2).unwrap();
        let expected = s.mul(&before).unwrap().mul(&s_inv.sigma(1)).unwrap();
        assert!(after.sub(&expected).unwrap().is_zero());
    }

    #[test]
    fn gauge_preserves_exact_compatibility() {
        let (_, pr) = setup(3, 4);
        let a = Matrix::diag(vec![mono(&pr, exp_int(2), 1)]).unwrap();
        let g = Matrix::diag(vec![mono(&pr, exp_int(0), 1)]).unwrap();
        // 2 * 41 = 82, which is 1 modulo 3^4
        let s = Matrix::diag(vec![mono(&pr, exp_int(0), 2)]).unwrap();
        let s_inv = Matrix::diag(vec![mono(&pr, exp_int(0), 41)]).unwrap();
        assert!(s.mul(&s_inv).unwrap().is_identity());
        let (a2, g2) = gauge(&a, &g, &s, &s_inv).unwrap();
        assert!(is_compatible(&a2, &g2).unwrap());
    }

    #[test]
    fn contraction_gains_one_unit_per_pass() {
        // exponents are chosen so the sigma orbit stays inside the window
        let (_, pr) = setup(2, 3);
        let m = Matrix::identity(&pr, 2);
        let mut r0 = Matrix::zero(&pr, 2, 2);
        *r0.at_mut(0, 1) = mono(&pr, exp_frac(1, 2), 1);
        *r0.at_mut(1, 0) = mono(&pr, exp_int(-1), 3);
        let out = contract_sigma(&m, &m, &r0, 16).unwrap();
        assert!(out.converged);
        assert_eq!(out.steps, 3);
        let expected: Vec<Exp> = (1..=3).map(exp_int).collect();
        assert_eq!(out.val_log, expected);
        assert!(!out.r.truncated());
    }

    #[test]
    fn integral_multipliers_speed_up_contraction() {
        let (ring, pr) = setup(2, 4);
        let m = Matrix::diag(vec![Series::monomial(
            pr.clone(),
            exp_int(0),
            ring.c_from_pi_w(1, &[1]),
        )
        .unwrap()])
        .unwrap();
        let r0 = Matrix::diag(vec![mono(&pr, exp_int(0), 1)]).unwrap();
        let out = contract_sigma(&m, &m, &r0, 16).unwrap();
        assert!(out.converged);
        // each pass gains 1 from p and 2 from the multipliers
        assert_eq!(out.val_log, vec![exp_int(3), exp_int(6)]);
        assert_eq!(out.steps, 2);
    }

    #[test]
    fn contraction_rejects_shape_mismatch() {
        let (_, pr) = setup(2, 3);
        let m = Matrix::identity(&pr, 2);
        let r0 = Matrix::zero(&pr, 3, 3);
        assert!(contract_sigma(&m, &m, &r0, 4).is_err());
    }

    #[test]
    fn block_certificate_accepts_sorted_constant_frame() {
        let (ring, pr) = setup(2, 3);
        let mut a = Matrix::zero(&pr, 3, 3);
        *a.at_mut(0, 0) = mono(&pr, exp_int(0), 1);
        *a.at_mut(1, 1) = mono(&pr, exp_int(0), 3);
        *a.at_mut(0, 1) = mono(&pr, exp_int(0), 1);
        *a.at_mut(2, 2) =
            Series::monomial(pr.clone(), exp_int(0), ring.c_from_pi_w(1, &[1])).unwrap();
        let mut g = Matrix::zero(&pr, 3, 3);
        *g.at_mut(0, 2) = mono(&pr, exp_int(1), 1);
        *g.at_mut(1, 2) = mono(&pr, exp_int(0), 1);
        match verify_unipotent(&a, &g).unwrap() {
            UnipotentCheck::Certified(cert) => {
                assert_eq!(cert.blocks, vec![(2, exp_int(0)), (1, exp_int(1))]);
                assert_eq!(cert.nilpotency, 2);
            }
            UnipotentCheck::Failed(why) => panic!("expected a certificate, got: {why}"),
        }
    }

    #[test]
    fn block_certificate_rejects_lower_entries() {
        let (ring, pr) = setup(2, 3);
        let mut a = Matrix::zero(&pr, 2, 2);
        *a.at_mut(0, 0) = mono(&pr, exp_int(0), 1);
        *a.at_mut(1, 1) =
            Series::monomial(pr.clone(), exp_int(0), ring.c_from_pi_w(1, &[1])).unwrap();
        *a.at_mut(1, 0) = mono(&pr, exp_int(0), 2);
        let g = Matrix::zero(&pr, 2, 2);
        match verify_unipotent(&a, &g).unwrap() {
            UnipotentCheck::Failed(why) => assert!(why.contains("below")),
            UnipotentCheck::Certified(_) => panic!("lower block entry must fail"),
        }
        // a derivation entry inside a block also fails
        let a_ok = Matrix::diag(vec![
            mono(&pr, exp_int(0), 1),
            mono(&pr, exp_int(0), 3),
        ])
        .unwrap();
        let mut g_bad = Matrix::zero(&pr, 2, 2);
        *g_bad.at_mut(0, 1) = mono(&pr, exp_int(2), 1);
        match verify_unipotent(&a_ok, &g_bad).unwrap() {
            UnipotentCheck::Failed(why) => assert!(why.contains("strictly")),
            UnipotentCheck::Certified(_) => panic!("in-block derivation entry must fail"),
        }
    }

    #[test]
    fn nonconstant_frame_is_not_certified() {
        let (_, pr) = setup(2, 3);
        let a = Matrix::diag(vec![mono(&pr, exp_int(1), 1)]).unwrap();
        let g = Matrix::zero(&pr, 1, 1);
        match verify_unipotent(&a, &g).unwrap() {
            UnipotentCheck::Failed(why) => assert!(why.contains("constant")),
            UnipotentCheck::Certified(_) => panic!("t-dependent frame must fail"),
        }
    }
}
