use crate::error::{Error, Result};
use crate::fq::{FqCtx, FqElem};
use crate::num::Exp;
use num_rational::Ratio;

/// Sentinel floor for an exact zero. Ordinary floors stay far below this;
/// arithmetic on floors saturates so the sentinel survives sums.
pub const FLOOR_INF: i64 = i64::MAX / 4;

/// Hard cap on the exponent denominator tower. Keeps p^h inside i128 with
/// room to spare for every supported p.
pub const H_MAX: u32 = 40;

/// One coefficient: an element of the two-variable local ring generated by
/// the prime pi (pi^e = p) over the length-N Witt quotient of F_{p^d}, with
/// p inverted. Stored in floating form: an exact power of pi times a unit
/// digit vector, together with its relative precision in pi-digits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Coeff {
    /// Known only to be divisible by pi^floor_e.
    Zero { floor_e: i64 },
    /// pi^val_e * (digits[0] + digits[1] pi + .. + digits[e-1] pi^{e-1})
    /// where each digit is a Witt coordinate vector of length d, and the
    /// whole expression is trusted modulo pi^{val_e + prec_e}. digits[0] is
    /// a unit. Digit j is masked modulo p^ceil((prec_e - j)/e).
    Unit {
        val_e: i64,
        prec_e: i64,
        /// Flat length e*d; pi-digit j occupies digits[j*d .. (j+1)*d].
        digits: Vec<u64>,
    },
}

impl Coeff {
    pub fn is_zero(&self) -> bool {
        matches!(self, Coeff::Zero { .. })
    }

    pub fn floor_e(&self) -> i64 {
        match self {
            Coeff::Zero { floor_e } => *floor_e,
            Coeff::Unit { val_e, prec_e, .. } => val_e.saturating_add(*prec_e),
        }
    }

    pub fn val_e(&self) -> Option<i64> {
        match self {
            Coeff::Zero { .. } => None,
            Coeff::Unit { val_e, .. } => Some(*val_e),
        }
    }
}

/// Shared arithmetic context: the Witt quotient W = (Z/p^N)[w]/Phi(w), the
/// ramified part pi^e = p, the Frobenius lift on W, and the residue field.
#[derive(Debug)]
pub struct RingCtx {
    pub p: u64,
    pub d: usize,
    pub e: usize,
    pub n: u32,
    /// p^N
    pub pn: u64,
    /// Monic modulus of W over Z/p^N, length d+1, phi[d] = 1.
    pub phi: Vec<u64>,
    /// The raw coefficients the ring was built from, for round-trip output.
    pub phi_input: Vec<u64>,
    pub fq: FqCtx,
    /// sigma^k for k in 0..d; each entry is the column list
    /// mats[k][j] = coordinates of sigma^k(w)^j, so applying sigma^k is a
    /// matrix-vector product over Z/p^N.
    sigma_mats: Vec<Vec<Vec<u64>>>,
}

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut f = 2;
    while f * f <= p {
        if p % f == 0 {
            return false;
        }
        f += 1;
    }
    true
}

impl RingCtx {
    pub fn new(p: u64, phi: Vec<u64>, e: usize, n: u32) -> Result<RingCtx> {
        if !is_prime(p) {
            return Err(Error::InvalidInput(format!("{p} is not prime")));
        }
        if phi.len() < 2 {
            return Err(Error::InvalidInput("modulus needs degree >= 1".into()));
        }
        let d = phi.len() - 1;
        if d > 8 || e == 0 || e > 8 || n == 0 || n > 24 {
            return Err(Error::InvalidInput(format!(
                "unsupported ring shape d={d} e={e} N={n}"
            )));
        }
        let mut pn: u64 = 1;
        for _ in 0..n {
            pn = pn
                .checked_mul(p)
                .ok_or_else(|| Error::InvalidInput("p^N does not fit in 64 bits".into()))?;
            if pn > (1 << 62) {
                return Err(Error::InvalidInput("p^N too large".into()));
            }
        }
        let phi_input = phi.clone();
        let phi_n: Vec<u64> = phi.iter().map(|c| c % pn).collect();
        if phi_n[d] != 1 {
            return Err(Error::InvalidInput("modulus must be monic".into()));
        }
        let fq = FqCtx::new(p, phi.iter().map(|c| c % p).collect())?;
        let mut ctx = RingCtx {
            p,
            d,
            e,
            n,
            pn,
            phi: phi_n,
            phi_input,
            fq,
            sigma_mats: vec![],
        };
        ctx.build_sigma()?;
        Ok(ctx)
    }

    pub fn max_prec(&self) -> i64 {
        (self.e as i64) * (self.n as i64)
    }

    // ---- W = (Z/p^N)[w]/Phi arithmetic on length-d slices ----

    pub fn wzero(&self) -> Vec<u64> {
        vec![0; self.d]
    }

    pub fn wone(&self) -> Vec<u64> {
        let mut v = vec![0; self.d];
        v[0] = 1;
        v
    }

    fn wgen(&self) -> Vec<u64> {
        let mut v = vec![0; self.d];
        if self.d > 1 {
            v[1] = 1;
        } else {
            v[0] = (self.pn - self.phi[0] % self.pn) % self.pn;
        }
        v
    }

    pub fn wadd(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        a.iter()
            .zip(b)
            .map(|(x, y)| ((*x as u128 + *y as u128) % self.pn as u128) as u64)
            .collect()
    }

    pub fn wneg(&self, a: &[u64]) -> Vec<u64> {
        a.iter().map(|&x| (self.pn - x % self.pn) % self.pn).collect()
    }

    pub fn wsub(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        self.wadd(a, &self.wneg(b))
    }

    pub fn wmul(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        let d = self.d;
        let m = self.pn as u128;
        let mut buf = vec![0u128; 2 * d - 1];
        for i in 0..d {
            if a[i] == 0 {
                continue;
            }
            for j in 0..d {
                buf[i + j] = (buf[i + j] + a[i] as u128 * b[j] as u128) % m;
            }
        }
        for k in (d..2 * d - 1).rev() {
            let c = buf[k];
            buf[k] = 0;
            if c == 0 {
                continue;
            }
            for i in 0..d {
                let sub = c * (self.phi[i] as u128) % m;
                buf[k - d + i] = (buf[k - d + i] + m - sub) % m;
            }
        }
        (0..d).map(|i| buf[i] as u64).collect()
    }

    pub fn wpow(&self, a: &[u64], mut e: u128) -> Vec<u64> {
        let mut base = a.to_vec();
        let mut acc = self.wone();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.wmul(&acc, &base);
            }
            base = self.wmul(&base, &base);
            e >>= 1;
        }
        acc
    }

    pub fn w_is_zero(&self, a: &[u64]) -> bool {
        a.iter().all(|&c| c % self.pn == 0)
    }

    /// p-adic valuation of a W element read off its representative; None for
    /// the zero representative (valuation at least N).
    pub fn w_vp(&self, a: &[u64]) -> Option<u32> {
        let mut best: Option<u32> = None;
        for &c in a {
            if c % self.pn == 0 {
                continue;
            }
            let mut v = 0u32;
            let mut x = c % self.pn;
            while x % self.p == 0 {
                x /= self.p;
                v += 1;
            }
            best = Some(best.map_or(v, |b| b.min(v)));
        }
        best
    }

    fn wmul_p_pow(&self, a: &[u64], k: u32) -> Vec<u64> {
        let mut f: u64 = 1;
        for _ in 0..k {
            f = f.wrapping_mul(self.p) % self.pn;
        }
        a.iter()
            .map(|&c| ((c as u128 * f as u128) % self.pn as u128) as u64)
            .collect()
    }

    fn wdiv_p_pow(&self, a: &[u64], k: u32) -> Vec<u64> {
        let mut q: u64 = 1;
        for _ in 0..k {
            q *= self.p;
        }
        a.iter()
            .map(|&c| {
                debug_assert!(c % q == 0, "inexact division by p^{k}");
                c / q
            })
            .collect()
    }

    pub fn wres(&self, a: &[u64]) -> FqElem {
        a.iter().map(|&c| c % self.p).collect()
    }

    /// Multiplicative lift of a residue element, the fixed point of x -> x^q
    /// over the naive lift.
    pub fn wtau(&self, r: &FqElem) -> Vec<u64> {
        if self.fq.is_zero(r) {
            return self.wzero();
        }
        let mut x: Vec<u64> = r.clone();
        for _ in 0..=self.n {
            x = self.wpow(&x, self.fq.q());
        }
        x
    }

    pub fn winv(&self, a: &[u64]) -> Result<Vec<u64>> {
        let r = self.wres(a);
        if self.fq.is_zero(&r) {
            return Err(Error::NotInvertible("W element is divisible by p".into()));
        }
        let mut y: Vec<u64> = self.fq.inv(&r)?;
        let two = {
            let mut t = self.wzero();
            t[0] = 2 % self.pn;
            t
        };
        let iters = 64 - (self.n as u64).leading_zeros() + 1;
        for _ in 0..iters {
            let ay = self.wmul(a, &y);
            y = self.wmul(&y, &self.wsub(&two, &ay));
        }
        debug_assert!(self.wmul(a, &y) == self.wone());
        Ok(y)
    }

    fn weval_phi(&self, g: &[u64]) -> Vec<u64> {
        // Horner for the monic modulus
        let mut acc = self.wone();
        for i in (0..self.d).rev() {
            acc = self.wmul(&acc, g);
            let mut c = self.wzero();
            c[0] = self.phi[i];
            acc = self.wadd(&acc, &c);
        }
        acc
    }

    fn weval_phi_deriv(&self, g: &[u64]) -> Vec<u64> {
        let mut acc = self.wzero();
        let mut pow = self.wone();
        for i in 1..=self.d {
            let mut c = self.wzero();
            c[0] = ((i as u128 * self.phi[i] as u128) % self.pn as u128) as u64;
            acc = self.wadd(&acc, &self.wmul(&c, &pow));
            pow = self.wmul(&pow, g);
        }
        acc
    }

    fn build_sigma(&mut self) -> Result<()> {
        let d = self.d;
        let ident: Vec<Vec<u64>> = (0..d)
            .map(|j| {
                let mut c = self.wzero();
                c[j] = 1;
                c
            })
            .collect();
        if d == 1 {
            self.sigma_mats = vec![ident];
            return Ok(());
        }
        // Newton iteration for the root of Phi congruent to w^p mod p
        let w = self.wgen();
        let mut g = self.wpow(&w, self.p as u128);
        for _ in 0..(self.n + 3) {
            let f = self.weval_phi(&g);
            if self.w_is_zero(&f) {
                break;
            }
            let fp = self.weval_phi_deriv(&g);
            let corr = self.wmul(&f, &self.winv(&fp)?);
            g = self.wsub(&g, &corr);
        }
        if !self.w_is_zero(&self.weval_phi(&g)) {
            return Err(Error::InvariantViolated(
                "Frobenius lift Newton iteration did not converge".into(),
            ));
        }
        // columns of sigma^k are powers of sigma^k(w)
        let apply = |mats: &Vec<Vec<u64>>, x: &[u64]| -> Vec<u64> {
            let mut out = vec![0u128; d];
            for j in 0..d {
                if x[j] == 0 {
                    continue;
                }
                for i in 0..d {
                    out[i] = (out[i] + x[j] as u128 * mats[j][i] as u128) % self.pn as u128;
                }
            }
            out.iter().map(|&c| c as u64).collect()
        };
        let cols_of = |ctx: &RingCtx, gk: &[u64]| -> Vec<Vec<u64>> {
            let mut cols = Vec::with_capacity(d);
            let mut pow = ctx.wone();
            for _ in 0..d {
                cols.push(pow.clone());
                pow = ctx.wmul(&pow, gk);
            }
            cols
        };
        let mut mats = vec![ident];
        let mut gk = g.clone();
        for _ in 1..d {
            mats.push(cols_of(self, &gk));
            gk = apply(&mats[1], &gk);
        }
        // closing the cycle must give sigma^d = identity
        if gk != self.wgen() {
            return Err(Error::InvariantViolated(
                "Frobenius lift does not have order d".into(),
            ));
        }
        self.sigma_mats = mats;
        Ok(())
    }

    pub fn wsigma(&self, a: &[u64], k: usize) -> Vec<u64> {
        let k = k % self.d;
        if k == 0 {
            return a.to_vec();
        }
        let mats = &self.sigma_mats[k];
        let d = self.d;
        let mut out = vec![0u128; d];
        for j in 0..d {
            if a[j] == 0 {
                continue;
            }
            for i in 0..d {
                out[i] = (out[i] + a[j] as u128 * mats[j][i] as u128) % self.pn as u128;
            }
        }
        out.iter().map(|&c| c as u64).collect()
    }

    // ---- digit-vector helpers (length e*d, flat) ----

    fn digit<'a>(&self, v: &'a [u64], j: usize) -> &'a [u64] {
        &v[j * self.d..(j + 1) * self.d]
    }

    fn digits_add(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        a.iter()
            .zip(b)
            .map(|(x, y)| ((*x as u128 + *y as u128) % self.pn as u128) as u64)
            .collect()
    }

    fn digits_neg(&self, a: &[u64]) -> Vec<u64> {
        a.iter().map(|&x| (self.pn - x % self.pn) % self.pn).collect()
    }

    /// Product of two unit-position digit vectors, folding pi^e = p back in.
    fn digits_mul(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        let e = self.e;
        let mut full: Vec<Vec<u64>> = vec![self.wzero(); 2 * e - 1];
        for i in 0..e {
            let ai = self.digit(a, i);
            if ai.iter().all(|&c| c == 0) {
                continue;
            }
            for j in 0..e {
                let prod = self.wmul(ai, self.digit(b, j));
                full[i + j] = self.wadd(&full[i + j], &prod);
            }
        }
        let mut out = vec![0u64; e * self.d];
        for k in 0..e {
            let mut w = full[k].clone();
            if k + e < 2 * e - 1 {
                w = self.wadd(&w, &self.wmul_p_pow(&full[k + e], 1));
            }
            out[k * self.d..(k + 1) * self.d].copy_from_slice(&w);
        }
        out
    }

    /// Mask digit j modulo p^ceil((prec_e - j)/e), the precision actually
    /// carried at that pi-position.
    fn mask_digits(&self, digits: &mut [u64], prec_e: i64) {
        for j in 0..self.e {
            let rel = prec_e - j as i64;
            let keep = if rel <= 0 {
                0
            } else {
                (((rel + self.e as i64 - 1) / self.e as i64) as u32).min(self.n)
            };
            let modulus = if keep >= self.n {
                self.pn
            } else {
                let mut m: u64 = 1;
                for _ in 0..keep {
                    m *= self.p;
                }
                m
            };
            for c in &mut digits[j * self.d..(j + 1) * self.d] {
                *c %= modulus;
            }
        }
    }

    /// Multiply a digit vector by pi^k, k >= 0, wrapping overflowing
    /// positions around with a factor of p.
    fn shift_up(&self, digits: &[u64], k: usize) -> Vec<u64> {
        let e = self.e;
        let mut out = vec![0u64; e * self.d];
        for j in 0..e {
            let dj = self.digit(digits, j);
            if dj.iter().all(|&c| c == 0) {
                continue;
            }
            let s = (j + k) % e;
            let m = ((j + k) / e) as u32;
            let moved = self.wmul_p_pow(dj, m);
            let cur = self.wadd(&out[s * self.d..(s + 1) * self.d].to_vec(), &moved);
            out[s * self.d..(s + 1) * self.d].copy_from_slice(&cur);
        }
        out
    }

    /// Divide a digit vector by pi^m. Exact whenever m is at most the
    /// pi-valuation of the vector, which renormalization guarantees.
    fn shift_down(&self, digits: &[u64], m: usize) -> Vec<u64> {
        let e = self.e as i64;
        let mut out = vec![0u64; self.e * self.d];
        for j in 0..self.e {
            let dj = self.digit(digits, j);
            if dj.iter().all(|&c| c == 0) {
                continue;
            }
            let jj = j as i64 - m as i64;
            let s = jj.rem_euclid(e) as usize;
            let q = (jj - s as i64) / e;
            let moved = if q >= 0 {
                self.wmul_p_pow(dj, q as u32)
            } else {
                self.wdiv_p_pow(dj, (-q) as u32)
            };
            let cur = self.wadd(&out[s * self.d..(s + 1) * self.d].to_vec(), &moved);
            out[s * self.d..(s + 1) * self.d].copy_from_slice(&cur);
        }
        out
    }

    /// pi-valuation of a digit vector relative to its own position, honoring
    /// the precision cutoff: digits at or beyond prec_e are unknown.
    fn digits_pi_val(&self, digits: &[u64], prec_e: i64) -> Option<i64> {
        let mut best: Option<i64> = None;
        for j in 0..self.e {
            if let Some(vp) = self.w_vp(self.digit(digits, j)) {
                let v = j as i64 + (self.e as i64) * vp as i64;
                if v < prec_e {
                    best = Some(best.map_or(v, |b| b.min(v)));
                }
            }
        }
        best
    }

    // ---- Coeff constructors ----

    pub fn czero_exact(&self) -> Coeff {
        Coeff::Zero { floor_e: FLOOR_INF }
    }

    pub fn cone(&self) -> Coeff {
        let mut digits = vec![0u64; self.e * self.d];
        digits[0] = 1;
        Coeff::Unit {
            val_e: 0,
            prec_e: self.max_prec(),
            digits,
        }
    }

    /// Canonicalize a raw digit vector anchored at pi^val_e with relative
    /// precision prec_e.
    pub fn c_make(&self, val_e: i64, mut digits: Vec<u64>, prec_e: i64) -> Coeff {
        let prec_e = prec_e.min(self.max_prec());
        if prec_e <= 0 {
            return Coeff::Zero {
                floor_e: val_e.saturating_add(prec_e),
            };
        }
        self.mask_digits(&mut digits, prec_e);
        match self.digits_pi_val(&digits, prec_e) {
            None => Coeff::Zero {
                floor_e: val_e.saturating_add(prec_e),
            },
            Some(0) => Coeff::Unit { val_e, prec_e, digits },
            Some(m) => {
                let mut d2 = self.shift_down(&digits, m as usize);
                let p2 = prec_e - m;
                self.mask_digits(&mut d2, p2);
                Coeff::Unit {
                    val_e: val_e + m,
                    prec_e: p2,
                    digits: d2,
                }
            }
        }
    }

    /// Exact monomial pi^k * b for a W element b.
    pub fn c_from_pi_w(&self, k: i64, b: &[u64]) -> Coeff {
        let mut digits = vec![0u64; self.e * self.d];
        digits[..self.d].copy_from_slice(&self.wres_full(b));
        self.c_make(k, digits, self.max_prec())
    }

    fn wres_full(&self, b: &[u64]) -> Vec<u64> {
        b.iter().map(|&c| c % self.pn).collect()
    }

    pub fn c_from_i64(&self, c: i64) -> Coeff {
        let r = c.rem_euclid(self.pn as i64) as u64;
        let mut b = self.wzero();
        b[0] = r;
        self.c_from_pi_w(0, &b)
    }

    /// Teichmueller lift of a residue element placed at pi^0.
    pub fn c_tau(&self, r: &FqElem) -> Coeff {
        if self.fq.is_zero(r) {
            self.czero_exact()
        } else {
            self.c_from_pi_w(0, &self.wtau(r))
        }
    }

    // ---- Coeff arithmetic ----

    pub fn cadd(&self, a: &Coeff, b: &Coeff) -> Coeff {
        match (a, b) {
            (Coeff::Zero { floor_e: fa }, Coeff::Zero { floor_e: fb }) => Coeff::Zero {
                floor_e: (*fa).min(*fb),
            },
            (Coeff::Zero { floor_e }, u @ Coeff::Unit { .. })
            | (u @ Coeff::Unit { .. }, Coeff::Zero { floor_e }) => {
                let (val_e, prec_e, digits) = match u {
                    Coeff::Unit { val_e, prec_e, digits } => (*val_e, *prec_e, digits.clone()),
                    _ => unreachable!(),
                };
                let floor = (*floor_e).min(val_e.saturating_add(prec_e));
                if val_e >= floor {
                    Coeff::Zero { floor_e: floor }
                } else {
                    self.c_make(val_e, digits, floor - val_e)
                }
            }
            (
                Coeff::Unit { val_e: va, prec_e: pa, digits: da },
                Coeff::Unit { val_e: vb, prec_e: pb, digits: db },
            ) => {
                let val = (*va).min(*vb);
                let floor = (va.saturating_add(*pa)).min(vb.saturating_add(*pb));
                let prec = floor - val;
                // an operand shifted past the common floor contributes nothing
                let lift = |v: i64, dg: &Vec<u64>| -> Vec<u64> {
                    if v - val >= prec {
                        vec![0u64; self.e * self.d]
                    } else {
                        self.shift_up(dg, (v - val) as usize)
                    }
                };
                let sum = self.digits_add(&lift(*va, da), &lift(*vb, db));
                self.c_make(val, sum, prec)
            }
        }
    }

    pub fn cneg(&self, a: &Coeff) -> Coeff {
        match a {
            Coeff::Zero { .. } => a.clone(),
            Coeff::Unit { val_e, prec_e, digits } => Coeff::Unit {
                val_e: *val_e,
                prec_e: *prec_e,
                digits: self.digits_neg(digits),
            },
        }
    }

    pub fn csub(&self, a: &Coeff, b: &Coeff) -> Coeff {
        self.cadd(a, &self.cneg(b))
    }

    pub fn cmul(&self, a: &Coeff, b: &Coeff) -> Coeff {
        match (a, b) {
            (Coeff::Zero { floor_e: fa }, Coeff::Zero { floor_e: fb }) => Coeff::Zero {
                floor_e: fa.saturating_add(*fb),
            },
            (Coeff::Zero { floor_e }, Coeff::Unit { val_e, .. })
            | (Coeff::Unit { val_e, .. }, Coeff::Zero { floor_e }) => Coeff::Zero {
                floor_e: floor_e.saturating_add(*val_e),
            },
            (
                Coeff::Unit { val_e: va, prec_e: pa, digits: da },
                Coeff::Unit { val_e: vb, prec_e: pb, digits: db },
            ) => {
                let prod = self.digits_mul(da, db);
                // product of units keeps valuation zero at digit 0
                self.c_make(va + vb, prod, (*pa).min(*pb))
            }
        }
    }

    pub fn csigma(&self, a: &Coeff, k: usize) -> Coeff {
        match a {
            Coeff::Zero { .. } => a.clone(),
            Coeff::Unit { val_e, prec_e, digits } => {
                let mut out = vec![0u64; self.e * self.d];
                for j in 0..self.e {
                    let img = self.wsigma(self.digit(digits, j), k);
                    out[j * self.d..(j + 1) * self.d].copy_from_slice(&img);
                }
                // ring automorphism fixing pi: canonical form is preserved
                Coeff::Unit {
                    val_e: *val_e,
                    prec_e: *prec_e,
                    digits: out,
                }
            }
        }
    }

    pub fn cinv(&self, a: &Coeff) -> Result<Coeff> {
        match a {
            Coeff::Zero { .. } => Err(Error::DivisionByZeroPrecision),
            Coeff::Unit { val_e, prec_e, digits } => {
                let r0 = self.wres(self.digit(digits, 0));
                let y0 = self.fq.inv(&r0)?;
                let mut y = vec![0u64; self.e * self.d];
                y[..self.d].copy_from_slice(&y0);
                let mut two = vec![0u64; self.e * self.d];
                two[0] = 2 % self.pn;
                let iters = 64 - (self.max_prec() as u64).leading_zeros() + 1;
                for _ in 0..iters {
                    let uy = self.digits_mul(digits, &y);
                    let corr = self.digits_add(&two, &self.digits_neg(&uy));
                    y = self.digits_mul(&y, &corr);
                }
                debug_assert!({
                    let mut check = self.digits_mul(digits, &y);
                    self.mask_digits(&mut check, self.max_prec());
                    let mut one = vec![0u64; self.e * self.d];
                    one[0] = 1;
                    check == one
                });
                Ok(self.c_make(-*val_e, y, *prec_e))
            }
        }
    }

    /// Exact division by p^k, a shift in the floating exponent.
    pub fn cdiv_p(&self, a: &Coeff, k: i64) -> Coeff {
        self.cmul_pi(a, -(self.e as i64) * k)
    }

    /// Exact multiplication by pi^k (k may be negative).
    pub fn cmul_pi(&self, a: &Coeff, k: i64) -> Coeff {
        match a {
            Coeff::Zero { floor_e } => Coeff::Zero {
                floor_e: floor_e.saturating_add(k),
            },
            Coeff::Unit { val_e, prec_e, digits } => Coeff::Unit {
                val_e: val_e + k,
                prec_e: *prec_e,
                digits: digits.clone(),
            },
        }
    }

    /// p-adic valuation, normalized so val(p) = 1.
    pub fn cval(&self, a: &Coeff) -> Option<Exp> {
        a.val_e().map(|v| Ratio::new(v as i128, self.e as i128))
    }

    /// Residue of the unit part in F_{p^d}. Only meaningful for units.
    pub fn cres(&self, a: &Coeff) -> Option<FqElem> {
        match a {
            Coeff::Zero { .. } => None,
            Coeff::Unit { digits, .. } => Some(self.wres(self.digit(digits, 0))),
        }
    }

    /// Equality modulo the shared precision. Floors of zeros are ignored.
    pub fn ceq(&self, a: &Coeff, b: &Coeff) -> bool {
        match (a, b) {
            (Coeff::Zero { .. }, Coeff::Zero { .. }) => true,
            (Coeff::Zero { .. }, Coeff::Unit { .. }) | (Coeff::Unit { .. }, Coeff::Zero { .. }) => {
                false
            }
            (
                Coeff::Unit { val_e: va, prec_e: pa, digits: da },
                Coeff::Unit { val_e: vb, prec_e: pb, digits: db },
            ) => {
                if va != vb {
                    return false;
                }
                let pr = (*pa).min(*pb);
                let mut ma = da.clone();
                let mut mb = db.clone();
                self.mask_digits(&mut ma, pr);
                self.mask_digits(&mut mb, pr);
                ma == mb
            }
        }
    }

    /// Restrict the relative precision (used by profile rounding).
    pub fn c_cap_prec(&self, a: &Coeff, prec_e: i64) -> Coeff {
        match a {
            Coeff::Zero { .. } => a.clone(),
            Coeff::Unit { val_e, prec_e: pe, digits } => {
                self.c_make(*val_e, digits.clone(), (*pe).min(prec_e))
            }
        }
    }
}
