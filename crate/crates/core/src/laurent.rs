use crate::error::{Error, Result};
use crate::fq::{FqCtx, FqElem};
use crate::matrix::Matrix;
use crate::num::Exp;
use crate::series::{Profile, Series};
use num_rational::Ratio;
use std::collections::BTreeMap;

/// Laurent polynomial over the residue field, exponent -> coefficient.
/// Zero coefficients are never stored.
pub type LaurentPoly = BTreeMap<i64, FqElem>;

pub fn poly_zero() -> LaurentPoly {
    BTreeMap::new()
}

pub fn poly_term(c: FqElem, k: i64, fq: &FqCtx) -> LaurentPoly {
    let mut p = LaurentPoly::new();
    if !fq.is_zero(&c) {
        p.insert(k, c);
    }
    p
}

pub fn poly_add(a: &LaurentPoly, b: &LaurentPoly, fq: &FqCtx) -> LaurentPoly {
    let mut out = a.clone();
    for (k, c) in b {
        let cur = out.remove(k).unwrap_or_else(|| fq.zero());
        let s = fq.add(&cur, c);
        if !fq.is_zero(&s) {
            out.insert(*k, s);
        }
    }
    out
}

pub fn poly_neg(a: &LaurentPoly, fq: &FqCtx) -> LaurentPoly {
    a.iter().map(|(k, c)| (*k, fq.neg(c))).collect()
}

pub fn poly_sub(a: &LaurentPoly, b: &LaurentPoly, fq: &FqCtx) -> LaurentPoly {
    poly_add(a, &poly_neg(b, fq), fq)
}

pub fn poly_mul(a: &LaurentPoly, b: &LaurentPoly, fq: &FqCtx) -> LaurentPoly {
    let mut out = LaurentPoly::new();
    for (ka, ca) in a {
        for (kb, cb) in b {
            let k = ka + kb;
            let prod = fq.mul(ca, cb);
            let cur = out.remove(&k).unwrap_or_else(|| fq.zero());
            let s = fq.add(&cur, &prod);
            if !fq.is_zero(&s) {
                out.insert(k, s);
            }
        }
    }
    out
}

/// (lowest, highest) exponent; None for the zero polynomial.
pub fn poly_span(a: &LaurentPoly) -> Option<(i64, i64)> {
    let lo = a.keys().next()?;
    let hi = a.keys().next_back()?;
    Some((*lo, *hi))
}

fn span_width(a: &LaurentPoly) -> Option<i64> {
    poly_span(a).map(|(lo, hi)| hi - lo)
}

/// One-sided division: a = q*b + r with the span of r strictly smaller
/// than the span of b. b must be nonzero.
fn poly_divmod(a: &LaurentPoly, b: &LaurentPoly, fq: &FqCtx) -> (LaurentPoly, LaurentPoly) {
    let (_, btop) = poly_span(b).expect("division by zero polynomial");
    let bw = span_width(b).unwrap();
    let blc = b.get(&btop).unwrap().clone();
    let blc_inv = fq.inv(&blc).unwrap();
    let mut q = poly_zero();
    let mut r = a.clone();
    while let Some(rw) = span_width(&r) {
        if rw < bw {
            break;
        }
        let (_, rtop) = poly_span(&r).unwrap();
        let coef = fq.mul(r.get(&rtop).unwrap(), &blc_inv);
        let qt = poly_term(coef, rtop - btop, fq);
        q = poly_add(&q, &qt, fq);
        r = poly_sub(&r, &poly_mul(&qt, b, fq), fq);
    }
    (q, r)
}

/// Elementary move over the residue Laurent ring, all indices 0-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Move {
    /// I + poly * E_ij (i != j); acting on the left adds poly * row j to row i.
    Transvect { i: usize, j: usize, poly: LaurentPoly },
    /// Row/column swap.
    Swap { i: usize, j: usize },
    /// Row i multiplied by c * u^m, c nonzero.
    Scale { i: usize, c: FqElem, m: i64 },
}

impl Move {
    pub fn inverse(&self, fq: &FqCtx) -> Move {
        match self {
            Move::Transvect { i, j, poly } => Move::Transvect {
                i: *i,
                j: *j,
                poly: poly_neg(poly, fq),
            },
            Move::Swap { i, j } => Move::Swap { i: *i, j: *j },
            Move::Scale { i, c, m } => Move::Scale {
                i: *i,
                c: fq.inv(c).expect("scale coefficient is a unit"),
                m: -m,
            },
        }
    }

    pub fn matrix(&self, n: usize, fq: &FqCtx) -> GrMatrix {
        let mut m = GrMatrix::identity(n, fq);
        match self {
            Move::Transvect { i, j, poly } => {
                m.data[i * n + j] = poly.clone();
            }
            Move::Swap { i, j } => {
                m.data[i * n + i] = poly_zero();
                m.data[j * n + j] = poly_zero();
                m.data[i * n + j] = poly_term(fq.one(), 0, fq);
                m.data[j * n + i] = poly_term(fq.one(), 0, fq);
            }
            Move::Scale { i, c, m: deg } => {
                m.data[i * n + i] = poly_term(c.clone(), *deg, fq);
            }
        }
        m
    }
}

/// Square matrix over the residue Laurent ring, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrMatrix {
    pub n: usize,
    pub data: Vec<LaurentPoly>,
}

impl GrMatrix {
    pub fn zero(n: usize) -> GrMatrix {
        GrMatrix { n, data: vec![poly_zero(); n * n] }
    }

    pub fn identity(n: usize, fq: &FqCtx) -> GrMatrix {
        let mut m = GrMatrix::zero(n);
        for i in 0..n {
            m.data[i * n + i] = poly_term(fq.one(), 0, fq);
        }
        m
    }

    pub fn at(&self, i: usize, j: usize) -> &LaurentPoly {
        &self.data[i * self.n + j]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut LaurentPoly {
        &mut self.data[i * self.n + j]
    }

    pub fn mul(&self, other: &GrMatrix, fq: &FqCtx) -> GrMatrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = GrMatrix::zero(n);
        for i in 0..n {
            for k in 0..n {
                if self.at(i, k).is_empty() {
                    continue;
                }
                for j in 0..n {
                    let prod = poly_mul(self.at(i, k), other.at(k, j), fq);
                    *out.at_mut(i, j) = poly_add(out.at(i, j), &prod, fq);
                }
            }
        }
        out
    }

    pub fn is_identity(&self, fq: &FqCtx) -> bool {
        let id = GrMatrix::identity(self.n, fq);
        self == &id
    }
}

pub fn move_product(moves: &[Move], n: usize, fq: &FqCtx) -> GrMatrix {
    let mut acc = GrMatrix::identity(n, fq);
    for mv in moves {
        acc = acc.mul(&mv.matrix(n, fq), fq);
    }
    acc
}

/// Factors an invertible matrix over the residue Laurent ring into
/// elementary moves whose product, in order, equals the input. Works
/// column by column: a Euclidean pass concentrates each column gcd in
/// one row, the pivot (then necessarily a monomial) moves to the
/// diagonal and clears its full column, and the final diagonal becomes
/// scale moves.
pub fn factor_elementary(m: &GrMatrix, fq: &FqCtx) -> Result<Vec<Move>> {
    let n = m.n;
    let mut work = m.clone();
    let mut moves: Vec<Move> = Vec::new();
    for col in 0..n {
        // Euclidean pass among rows col..n
        loop {
            let mut holders: Vec<usize> = (col..n)
                .filter(|&r| !work.at(r, col).is_empty())
                .collect();
            if holders.is_empty() {
                return Err(Error::NotInvertible(format!(
                    "column {col} vanishes on the remaining rows"
                )));
            }
            if holders.len() == 1 {
                break;
            }
            holders.sort_by_key(|&r| (span_width(work.at(r, col)).unwrap(), r));
            let pr = holders[0];
            let pivot = work.at(pr, col).clone();
            for &r in holders.iter().skip(1) {
                let (q, _) = poly_divmod(work.at(r, col), &pivot, fq);
                if q.is_empty() {
                    continue;
                }
                for c in 0..n {
                    let sub = poly_mul(&q, work.at(pr, c), fq);
                    *work.at_mut(r, c) = poly_sub(work.at(r, c), &sub, fq);
                }
                moves.push(Move::Transvect { i: r, j: pr, poly: q });
            }
        }
        let pr = (col..n).find(|&r| !work.at(r, col).is_empty()).unwrap();
        let pivot = work.at(pr, col).clone();
        if pivot.len() != 1 {
            return Err(Error::NotInvertible(format!(
                "column {col} gcd is not a monomial, determinant is not a unit"
            )));
        }
        if pr != col {
            for c in 0..n {
                let tmp = work.at(pr, c).clone();
                *work.at_mut(pr, c) = work.at(col, c).clone();
                *work.at_mut(col, c) = tmp;
            }
            moves.push(Move::Swap { i: pr, j: col });
        }
        // clear the column above and below; the monomial pivot divides exactly
        for r in (0..n).filter(|&r| r != col) {
            if work.at(r, col).is_empty() {
                continue;
            }
            let (q, rem) = poly_divmod(work.at(r, col), work.at(col, col), fq);
            debug_assert!(rem.is_empty());
            for c in 0..n {
                let sub = poly_mul(&q, work.at(col, c), fq);
                *work.at_mut(r, c) = poly_sub(work.at(r, c), &sub, fq);
            }
            moves.push(Move::Transvect { i: r, j: col, poly: q });
        }
    }
    for i in 0..n {
        let d = work.at(i, i).clone();
        if d.len() != 1 {
            return Err(Error::NotInvertible(format!(
                "diagonal entry {i} is not a monomial after reduction"
            )));
        }
        let (k, c) = d.iter().next().map(|(k, c)| (*k, c.clone())).unwrap();
        if k != 0 || c != fq.one() {
            moves.push(Move::Scale { i, c, m: k });
        }
    }
    // each push already records the inverse of the op applied on the left,
    // so the list multiplies back to the input in push order
    Ok(moves)
}

pub fn fmt_fq(c: &FqElem) -> String {
    let mut digits: Vec<u64> = c.clone();
    while digits.len() > 1 && *digits.last().unwrap() == 0 {
        digits.pop();
    }
    if digits.is_empty() {
        return "0".into();
    }
    digits
        .iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

pub fn parse_fq(s: &str, fq: &FqCtx) -> Result<FqElem> {
    let mut out = fq.zero();
    for (idx, part) in s.split(',').enumerate() {
        if idx >= out.len() {
            return Err(Error::ParseError(format!(
                "residue element {s} has more than {} digits",
                out.len()
            )));
        }
        let v: u64 = part
            .parse()
            .map_err(|_| Error::ParseError(format!("bad residue digit {part}")))?;
        if v >= fq.p {
            return Err(Error::ParseError(format!(
                "residue digit {v} not reduced mod {}",
                fq.p
            )));
        }
        out[idx] = v;
    }
    Ok(out)
}

pub fn fmt_poly(p: &LaurentPoly) -> String {
    if p.is_empty() {
        return "0".into();
    }
    p.iter()
        .map(|(k, c)| format!("{}*u^{}", fmt_fq(c), k))
        .collect::<Vec<_>>()
        .join("+")
}

pub fn parse_poly(s: &str, fq: &FqCtx) -> Result<LaurentPoly> {
    if s == "0" {
        return Ok(poly_zero());
    }
    let mut out = poly_zero();
    for piece in s.split('+') {
        let (cs, ks) = piece
            .split_once("*u^")
            .ok_or_else(|| Error::ParseError(format!("bad poly term {piece}")))?;
        let c = parse_fq(cs, fq)?;
        let k: i64 = ks
            .parse()
            .map_err(|_| Error::ParseError(format!("bad exponent {ks}")))?;
        if fq.is_zero(&c) || out.contains_key(&k) {
            return Err(Error::ParseError(format!(
                "poly term {piece} is zero or repeats an exponent"
            )));
        }
        out.insert(k, c);
    }
    Ok(out)
}

/// Canonical one-line form, 1-based indices.
pub fn fmt_move(mv: &Move) -> String {
    match mv {
        Move::Transvect { i, j, poly } => {
            format!("T {} {} {}", i + 1, j + 1, fmt_poly(poly))
        }
        Move::Swap { i, j } => format!("S {} {}", i + 1, j + 1),
        Move::Scale { i, c, m } => format!("M {} {} {}", i + 1, fmt_fq(c), m),
    }
}

pub fn parse_move(line: &str, fq: &FqCtx) -> Result<Move> {
    let parts: Vec<&str> = line.split_whitespace().collect();
    let idx = |s: &str| -> Result<usize> {
        let v: usize = s
            .parse()
            .map_err(|_| Error::ParseError(format!("bad index {s}")))?;
        if v == 0 {
            return Err(Error::ParseError("move indices are 1-based".into()));
        }
        Ok(v - 1)
    };
    match parts.as_slice() {
        ["T", i, j, poly] => {
            let poly = parse_poly(poly, fq)?;
            if poly.is_empty() {
                return Err(Error::ParseError("transvection with zero polynomial".into()));
            }
            let (i, j) = (idx(i)?, idx(j)?);
            if i == j {
                return Err(Error::ParseError("transvection needs distinct indices".into()));
            }
            Ok(Move::Transvect { i, j, poly })
        }
        ["S", i, j] => Ok(Move::Swap { i: idx(i)?, j: idx(j)? }),
        ["M", i, c, m] => {
            let c = parse_fq(c, fq)?;
            if fq.is_zero(&c) {
                return Err(Error::ParseError("scale coefficient must be nonzero".into()));
            }
            let m: i64 = m
                .parse()
                .map_err(|_| Error::ParseError(format!("bad scale degree {m}")))?;
            Ok(Move::Scale { i: idx(i)?, c, m })
        }
        _ => Err(Error::ParseError(format!("unrecognized move line: {line}"))),
    }
}

/// Lifts a move to an exact pair (matrix, inverse) of series matrices,
/// sending u^k to tau-lifted pi^(a0 k) t^(-i0 k).
pub fn lift_move(
    mv: &Move,
    profile: &Profile,
    n: usize,
    a0: i64,
    i0: Exp,
) -> Result<(Matrix, Matrix)> {
    let ring = profile.ring.clone();
    let lift_poly = |p: &LaurentPoly| -> Result<Series> {
        let mut s = Series::zero(profile.clone());
        for (k, c) in p {
            let exp = -i0 * Ratio::from_integer(*k as i128);
            let coeff = ring.cmul_pi(&ring.c_tau(c), a0 * *k);
            s = s.add(&Series::monomial(profile.clone(), exp, coeff)?)?;
        }
        Ok(s)
    };
    let build = |mv: &Move| -> Result<Matrix> {
        let mut m = Matrix::identity(profile, n);
        match mv {
            Move::Transvect { i, j, poly } => {
                *m.at_mut(*i, *j) = lift_poly(poly)?;
            }
            Move::Swap { i, j } => {
                let one = Series::monomial(profile.clone(), Ratio::from_integer(0), ring.cone())?;
                *m.at_mut(*i, *i) = Series::zero(profile.clone());
                *m.at_mut(*j, *j) = Series::zero(profile.clone());
                *m.at_mut(*i, *j) = one.clone();
                *m.at_mut(*j, *i) = one;
            }
            Move::Scale { i, c, m: deg } => {
                let exp = -i0 * Ratio::from_integer(*deg as i128);
                let coeff = ring.cmul_pi(&ring.c_tau(c), a0 * *deg);
                *m.at_mut(*i, *i) = Series::monomial(profile.clone(), exp, coeff)?;
            }
        }
        Ok(m)
    };
    let fwd = build(mv)?;
    // the transvection inverse must negate the lifted series itself: lifting
    // the field-negated poly only inverts modulo p
    let inv = match mv {
        Move::Transvect { i, j, poly } => {
            let mut m = Matrix::identity(profile, n);
            *m.at_mut(*i, *j) = lift_poly(poly)?.neg();
            m
        }
        Move::Swap { .. } => fwd.clone(),
        Move::Scale { .. } => build(&mv.inverse(&ring.fq))?,
    };
    Ok((fwd, inv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn f2() -> FqCtx {
        FqCtx::new(2, vec![0, 1]).unwrap()
    }

    fn f4() -> FqCtx {
        FqCtx::new(2, vec![1, 1, 1]).unwrap()
    }

    fn f3() -> FqCtx {
        FqCtx::new(3, vec![0, 1]).unwrap()
    }

    #[test]
    fn division_shrinks_span() {
        let fq = f3();
        // a = u^{-1} + 1 + 2u, b = 1 + u
        let mut a = poly_zero();
        a.insert(-1, vec![1]);
        a.insert(0, vec![1]);
        a.insert(1, vec![2]);
        let mut b = poly_zero();
        b.insert(0, vec![1]);
        b.insert(1, vec![1]);
        let (q, r) = poly_divmod(&a, &b, &fq);
        let back = poly_add(&poly_mul(&q, &b, &fq), &r, &fq);
        assert_eq!(back, a);
        assert!(span_width(&r).map_or(true, |w| w < 1));
    }

    #[test]
    fn factor_monomial_diagonal() {
        let fq = f2();
        let mut m = GrMatrix::zero(2);
        *m.at_mut(0, 0) = poly_term(fq.one(), 1, &fq);
        *m.at_mut(1, 1) = poly_term(fq.one(), -1, &fq);
        let moves = factor_elementary(&m, &fq).unwrap();
        assert_eq!(move_product(&moves, 2, &fq), m);
        assert!(moves
            .iter()
            .all(|mv| matches!(mv, Move::Scale { .. })));
    }

    #[test]
    fn factor_needs_euclid() {
        let fq = f2();
        // [[u+1, 1], [u, 1]], determinant 1
        let mut m = GrMatrix::zero(2);
        let mut up1 = poly_zero();
        up1.insert(0, vec![1]);
        up1.insert(1, vec![1]);
        *m.at_mut(0, 0) = up1;
        *m.at_mut(0, 1) = poly_term(fq.one(), 0, &fq);
        *m.at_mut(1, 0) = poly_term(fq.one(), 1, &fq);
        *m.at_mut(1, 1) = poly_term(fq.one(), 0, &fq);
        let moves = factor_elementary(&m, &fq).unwrap();
        assert_eq!(move_product(&moves, 2, &fq), m);
    }

    #[test]
    fn factor_rejects_non_unit_determinant() {
        let fq = f2();
        let mut m = GrMatrix::identity(2, &fq);
        let mut up1 = poly_zero();
        up1.insert(0, vec![1]);
        up1.insert(1, vec![1]);
        *m.at_mut(0, 0) = up1;
        let err = factor_elementary(&m, &fq).unwrap_err();
        assert!(matches!(err, Error::NotInvertible(_)));
    }

    #[test]
    fn factor_random_move_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for fq in [f2(), f3(), f4()] {
            for _ in 0..30 {
                let n = rng.gen_range(2..=4);
                let mut moves = Vec::new();
                for _ in 0..rng.gen_range(1..=6) {
                    match rng.gen_range(0..3) {
                        0 => {
                            let i = rng.gen_range(0..n);
                            let mut j = rng.gen_range(0..n);
                            while j == i {
                                j = rng.gen_range(0..n);
                            }
                            let mut poly = poly_zero();
                            for _ in 0..rng.gen_range(1..=2) {
                                let k = rng.gen_range(-3..=3);
                                let mut c = fq.zero();
                                for d in c.iter_mut() {
                                    *d = rng.gen_range(0..fq.p);
                                }
                                if !fq.is_zero(&c) {
                                    poly.insert(k, c);
                                }
                            }
                            if !poly.is_empty() {
                                moves.push(Move::Transvect { i, j, poly });
                            }
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
                            let i = rng.gen_range(0..n);
                            let mut c = fq.zero();
                            while fq.is_zero(&c) {
                                for d in c.iter_mut() {
                                    *d = rng.gen_range(0..fq.p);
                                }
                            }
                            moves.push(Move::Scale { i, c, m: rng.gen_range(-2..=2) });
                        }
                    }
                }
                let m = move_product(&moves, n, &fq);
                let refactored = factor_elementary(&m, &fq).unwrap();
                assert_eq!(move_product(&refactored, n, &fq), m);
            }
        }
    }

    #[test]
    fn move_lines_round_trip() {
        let fq = f4();
        let mut poly = poly_zero();
        poly.insert(-2, vec![0, 1]);
        poly.insert(1, vec![1, 1]);
        let cases = vec![
            Move::Transvect { i: 0, j: 2, poly },
            Move::Swap { i: 1, j: 0 },
            Move::Scale { i: 2, c: vec![0, 1], m: -3 },
        ];
        for mv in cases {
            let line = fmt_move(&mv);
            let back = parse_move(&line, &fq).unwrap();
            assert_eq!(back, mv);
        }
    }

    #[test]
    fn lifted_moves_multiply_to_identity() {
        use crate::coeff::RingCtx;
        use crate::num::exp_int;
        use std::sync::Arc;
        let ring = Arc::new(RingCtx::new(2, vec![0, 1], 1, 3).unwrap());
        let pr = Profile::new(ring.clone(), 0, exp_int(-8), exp_int(8)).unwrap();
        let mut poly = poly_zero();
        poly.insert(1, vec![1]);
        let mv = Move::Transvect { i: 1, j: 0, poly };
        let (fwd, inv) = lift_move(&mv, &pr, 2, 1, exp_int(2)).unwrap();
        let prod = fwd.mul(&inv).unwrap();
        assert!(prod.is_identity());
        // u = pi^1 t^{-2}: the lifted entry sits at t^{-2} with valuation 1
        let entry = fwd.at(1, 0);
        assert_eq!(entry.num_terms(), 1);
        let (e, c) = entry.terms().next().unwrap();
        assert_eq!(*e, exp_int(-2));
        assert_eq!(ring.cval(c), Some(exp_int(1)));
    }
}
