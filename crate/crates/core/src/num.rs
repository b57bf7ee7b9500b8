use crate::error::{Error, Result};
use num_rational::Ratio;

/// Exponents and valuations are exact rationals. i128 components leave
/// headroom for denominators up to p^40 and the transient numerators that
/// show up while multiplying exponents by powers of p.
pub type Exp = Ratio<i128>;

pub fn exp_int(n: i64) -> Exp {
    Ratio::from_integer(n as i128)
}

pub fn exp_frac(num: i128, den: i128) -> Exp {
    Ratio::new(num, den)
}

/// Renders `3`, `-2`, `1/2`, `-3/4`. Reduced form only, denominator positive.
pub fn fmt_ratio(x: &Exp) -> String {
    if x.denom() == &1 {
        format!("{}", x.numer())
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Accepts the same forms `fmt_ratio` produces.
pub fn parse_ratio(s: &str) -> Result<Exp> {
    let bad = || Error::ParseError(format!("malformed rational '{s}'"));
    if let Some((a, b)) = s.split_once('/') {
        let n: i128 = a.trim().parse().map_err(|_| bad())?;
        let d: i128 = b.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        Ok(Ratio::new(n, d))
    } else {
        let n: i128 = s.trim().parse().map_err(|_| bad())?;
        Ok(Ratio::from_integer(n))
    }
}

/// p^k as i128, None on overflow. Overflowing exponent scaling is treated as
/// an out-of-window drop by callers since every admissible window is tiny
/// compared to i128 range.
pub fn pow_i128(p: u64, k: u32) -> Option<i128> {
    (p as i128).checked_pow(k)
}

/// x * p^k with overflow reported as None.
pub fn scale_exp_by_p_pow(x: &Exp, p: u64, k: u32) -> Option<Exp> {
    let m = pow_i128(p, k)?;
    let n = x.numer().checked_mul(m)?;
    Some(Ratio::new(n, *x.denom()))
}

/// Largest k with p^k dividing d, plus the claim that d is a pure power of p.
pub fn p_power_of(d: i128, p: u64) -> Option<u32> {
    let mut d = d.abs();
    if d == 0 {
        return None;
    }
    let mut k = 0u32;
    while d % (p as i128) == 0 {
        d /= p as i128;
        k += 1;
    }
    if d == 1 {
        Some(k)
    } else {
        None
    }
}

/// Minimum of two optional valuations where None means +infinity.
pub fn val_min(a: Option<Exp>, b: Option<Exp>) -> Option<Exp> {
    match (a, b) {
        (None, x) => x,
        (x, None) => x,
        (Some(x), Some(y)) => Some(x.min(y)),
    }
}

pub fn val_ge(a: &Option<Exp>, bound: &Exp) -> bool {
    match a {
        None => true,
        Some(v) => v >= bound,
    }
}

/// Smallest integer k with k > x.
pub fn strict_ceil(x: &Exp) -> i128 {
    x.floor().numer() + 1
}

/// Ceiling of a rational as an integer.
pub fn ceil_i(x: &Exp) -> i128 {
    *x.ceil().numer()
}
