use crate::error::{Error, Result};
use crate::num::{fmt_ratio, val_min, Exp};
use crate::series::{Profile, Series};
use num_rational::Ratio;
use num_traits::Zero;

/// Dense matrix of sparse series, row major. All entries share one profile
/// (h is unified on construction and after every operation that can raise it).
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Series>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Series>) -> Result<Matrix> {
        if data.len() != rows * cols || rows == 0 || cols == 0 {
            return Err(Error::InvalidInput("matrix shape mismatch".into()));
        }
        let mut m = Matrix { rows, cols, data };
        m.unify_profiles()?;
        Ok(m)
    }

    pub fn zero(profile: &Profile, rows: usize, cols: usize) -> Matrix {
        Matrix {
            rows,
            cols,
            data: vec![Series::zero(profile.clone()); rows * cols],
        }
    }

    pub fn identity(profile: &Profile, n: usize) -> Matrix {
        let mut m = Matrix::zero(profile, n, n);
        for i in 0..n {
            *m.at_mut(i, i) = Series::one(profile.clone());
        }
        m
    }

    pub fn diag(entries: Vec<Series>) -> Result<Matrix> {
        let n = entries.len();
        let profile = entries[0].profile.clone();
        let mut m = Matrix::zero(&profile, n, n);
        for (i, s) in entries.into_iter().enumerate() {
            *m.at_mut(i, i) = s;
        }
        m.unify_profiles()?;
        Ok(m)
    }

    pub fn at(&self, r: usize, c: usize) -> &Series {
        &self.data[r * self.cols + c]
    }

    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut Series {
        &mut self.data[r * self.cols + c]
    }

    pub fn profile(&self) -> &Profile {
        &self.data[0].profile
    }

    pub fn truncated(&self) -> bool {
        self.data.iter().any(|s| s.truncated)
    }

    /// Raise every entry to the maximal h present so cross-entry arithmetic
    /// cannot hit a profile mismatch.
    pub fn unify_profiles(&mut self) -> Result<()> {
        let mut h = 0;
        for s in &self.data {
            if !s.profile.same_ring(&self.data[0].profile)
                || s.profile.lo != self.data[0].profile.lo
                || s.profile.hi != self.data[0].profile.hi
            {
                return Err(Error::SpecMismatch(
                    "matrix entries live in different profiles".into(),
                ));
            }
            h = h.max(s.profile.h);
        }
        if self.data.iter().any(|s| s.profile.h != h) {
            let target = self.data[0].profile.with_h(h)?;
            for s in &mut self.data {
                s.profile = target.clone();
            }
        }
        Ok(())
    }

    pub fn add(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::SpecMismatch("matrix dimensions differ".into()));
        }
        let data: Result<Vec<Series>> = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a.add(b))
            .collect();
        Matrix::new(self.rows, self.cols, data?)
    }

    pub fn sub(&self, rhs: &Matrix) -> Result<Matrix> {
        self.add(&rhs.neg())
    }

    pub fn neg(&self) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|s| s.neg()).collect(),
        }
    }

    pub fn mul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.rows {
            return Err(Error::SpecMismatch("matrix dimensions incompatible".into()));
        }
        let profile = self.profile().unify(rhs.profile())?;
        let mut out = Matrix::zero(&profile, self.rows, rhs.cols);
        for i in 0..self.rows {
            for j in 0..rhs.cols {
                let mut acc = Series::zero(profile.clone());
                for k in 0..self.cols {
                    let a = self.at(i, k);
                    if a.is_zero() && !a.truncated {
                        continue;
                    }
                    acc = acc.add(&a.mul(rhs.at(k, j))?)?;
                }
                *out.at_mut(i, j) = acc;
            }
        }
        Ok(out)
    }

    pub fn mul_series(&self, s: &Series) -> Result<Matrix> {
        let data: Result<Vec<Series>> = self.data.iter().map(|a| a.mul(s)).collect();
        Matrix::new(self.rows, self.cols, data?)
    }

    pub fn sigma(&self, k: usize) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|s| s.sigma(k)).collect(),
        }
    }

    pub fn theta(&self) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|s| s.theta()).collect(),
        }
    }

    pub fn mul_pi(&self, k: i64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|s| s.mul_pi(k)).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|s| s.is_zero())
    }

    /// Minimal r-weighted valuation over all entries; None when every entry
    /// is zero to precision.
    pub fn val_r(&self, r: &Exp) -> Option<Exp> {
        self.data
            .iter()
            .fold(None, |acc, s| val_min(acc, s.val_r(r)))
    }

    pub fn val0(&self) -> Option<Exp> {
        self.val_r(&Ratio::zero())
    }

    pub fn sub_identity(&self) -> Result<Matrix> {
        if self.rows != self.cols {
            return Err(Error::InvalidInput("identity offset needs a square matrix".into()));
        }
        self.sub(&Matrix::identity(self.profile(), self.rows))
    }

    pub fn is_identity(&self) -> bool {
        if self.rows != self.cols {
            return false;
        }
        match self.sub_identity() {
            Ok(d) => d.is_zero(),
            Err(_) => false,
        }
    }

    /// Sum of the alternating Neumann series for (I + X)^{-1} where self =
    /// I + X. Terminates when powers of X vanish to precision, leave the
    /// window, or clear the valuation stop; errors out if X never contracts.
    pub fn neumann_inverse(&self, stop_val: &Exp, max_terms: usize) -> Result<Matrix> {
        let x = self.sub_identity()?;
        // every term must contract: positive valuation or positive exponent
        for s in &x.data {
            let ring = s.profile.ring.clone();
            for (e, c) in s.terms() {
                let v = ring.cval(c).unwrap_or_else(|| Ratio::zero());
                if v <= Ratio::zero() && *e <= Ratio::zero() {
                    return Err(Error::NotInvertible(
                        "Neumann series needs positive valuation or positive exponents".into(),
                    ));
                }
            }
        }
        let mut acc = Matrix::identity(self.profile(), self.rows);
        let mut pow = x.neg();
        let mut k = 0;
        loop {
            if pow.is_zero() {
                break;
            }
            if let Some(v) = pow.val0() {
                if v >= *stop_val {
                    break;
                }
            }
            acc = acc.add(&pow)?;
            pow = pow.mul(&x.neg())?;
            k += 1;
            if k > max_terms {
                return Err(Error::NonConvergent(format!(
                    "Neumann series still active after {max_terms} terms"
                )));
            }
        }
        Ok(acc)
    }

    fn minor(&self, skip_row: usize, keep_cols: &[usize]) -> Result<Series> {
        // cofactor expansion along the first remaining row
        let profile = self.profile().clone();
        if keep_cols.len() == 1 {
            return Ok(self.at(skip_row, keep_cols[0]).clone());
        }
        let mut acc = Series::zero(profile);
        for (pos, &c) in keep_cols.iter().enumerate() {
            let rest: Vec<usize> = keep_cols.iter().copied().filter(|&x| x != c).collect();
            let sub = self.minor(skip_row + 1, &rest)?;
            let term = self.at(skip_row, c).mul(&sub)?;
            acc = if pos % 2 == 0 { acc.add(&term)? } else { acc.sub(&term)? };
        }
        Ok(acc)
    }

    pub fn det(&self) -> Result<Series> {
        if self.rows != self.cols {
            return Err(Error::InvalidInput("determinant of a non-square matrix".into()));
        }
        if self.rows > 6 {
            return Err(Error::InvalidInput(
                "cofactor determinant capped at 6x6".into(),
            ));
        }
        let cols: Vec<usize> = (0..self.cols).collect();
        self.minor(0, &cols)
    }

    /// Exact inverse through the adjugate. Intended for offline checks on
    /// small matrices, not for the inner loops (those maintain inverses
    /// incrementally).
    pub fn adjugate_inverse(&self) -> Result<Matrix> {
        if self.rows != self.cols {
            return Err(Error::InvalidInput("inverse of a non-square matrix".into()));
        }
        let n = self.rows;
        let det = self.det()?;
        let det_inv = det.invert().map_err(|_| {
            Error::NotInvertible("determinant is not a unit in the window".into())
        })?;
        let mut out = Matrix::zero(self.profile(), n, n);
        if n == 1 {
            *out.at_mut(0, 0) = det_inv;
            return Ok(out);
        }
        for i in 0..n {
            for j in 0..n {
                // cofactor C_ji for the (i, j) entry of the inverse
                let rows: Vec<usize> = (0..n).filter(|&r| r != j).collect();
                let cols: Vec<usize> = (0..n).filter(|&c| c != i).collect();
                let mut sub = Matrix::zero(self.profile(), n - 1, n - 1);
                for (ri, &r) in rows.iter().enumerate() {
                    for (ci, &c) in cols.iter().enumerate() {
                        *sub.at_mut(ri, ci) = self.at(r, c).clone();
                    }
                }
                let mut cof = sub.det()?;
                if (i + j) % 2 == 1 {
                    cof = cof.neg();
                }
                *out.at_mut(i, j) = cof.mul(&det_inv)?;
            }
        }
        Ok(out)
    }

    /// Canonical row rendering: entries joined by " ; ".
    pub fn emit_rows(&self) -> Vec<String> {
        (0..self.rows)
            .map(|r| {
                (0..self.cols)
                    .map(|c| self.at(r, c).emit())
                    .collect::<Vec<_>>()
                    .join(" ; ")
            })
            .collect()
    }

    /// Per-exponent minimum valuation across all entries, for residual
    /// diagnostics. Exponents appear once, in increasing order.
    pub fn exponent_val_profile(&self) -> Vec<(Exp, Exp)> {
        let mut map: std::collections::BTreeMap<Exp, Exp> = Default::default();
        for s in &self.data {
            let ring = &s.profile.ring;
            for (e, c) in s.terms() {
                if let Some(v) = ring.cval(c) {
                    map.entry(*e)
                        .and_modify(|cur| {
                            if v < *cur {
                                *cur = v;
                            }
                        })
                        .or_insert(v);
                }
            }
        }
        map.into_iter().collect()
    }
}

/// Pretty valuation for reports: "inf" for zero-to-precision.
pub fn fmt_val(v: &Option<Exp>) -> String {
    match v {
        None => "inf".into(),
        Some(x) => fmt_ratio(x),
    }
}
