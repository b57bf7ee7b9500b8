use crate::coeff::{Coeff, RingCtx};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::num::{fmt_ratio, parse_ratio, Exp};
use crate::series::{Profile, Series};
use std::fmt;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Frobenius,
    Diagonal,
    Connection,
    Generic,
}

impl Role {
    pub fn as_str(&self) -> &'static str {
        match self {
            Role::Frobenius => "frobenius",
            Role::Diagonal => "diagonal",
            Role::Connection => "connection",
            Role::Generic => "generic",
        }
    }

    pub fn parse(s: &str) -> Result<Role> {
        match s {
            "frobenius" => Ok(Role::Frobenius),
            "diagonal" => Ok(Role::Diagonal),
            "connection" => Ok(Role::Connection),
            "generic" => Ok(Role::Generic),
            other => Err(Error::ParseError(format!("unknown matrix role '{other}'"))),
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Params {
    pub r: Option<Exp>,
    pub s: Option<Exp>,
    pub max_iter: Option<usize>,
    pub seed: Option<u64>,
}

impl Params {
    pub fn is_empty(&self) -> bool {
        self.r.is_none() && self.s.is_none() && self.max_iter.is_none() && self.seed.is_none()
    }
}

pub struct NamedMatrix {
    pub name: String,
    pub role: Role,
    pub mat: Matrix,
}

pub struct Instance {
    pub profile: Profile,
    pub params: Params,
    pub matrices: Vec<NamedMatrix>,
}

impl Instance {
    pub fn new(profile: Profile) -> Instance {
        Instance { profile, params: Params::default(), matrices: Vec::new() }
    }

    pub fn push(&mut self, name: &str, role: Role, mat: Matrix) -> Result<()> {
        if name.is_empty() || name.chars().any(|c| c.is_whitespace()) {
            return Err(Error::InvalidInput(format!("bad matrix name '{name}'")));
        }
        if self.find(name).is_some() {
            return Err(Error::InvalidInput(format!("duplicate matrix name '{name}'")));
        }
        if !mat.profile().same_ring(&self.profile) {
            return Err(Error::SpecMismatch(format!(
                "matrix '{name}' does not live on the instance profile"
            )));
        }
        self.matrices.push(NamedMatrix { name: name.into(), role, mat });
        Ok(())
    }

    pub fn find(&self, name: &str) -> Option<&NamedMatrix> {
        self.matrices.iter().find(|m| m.name == name)
    }

    pub fn by_role(&self, role: Role) -> Option<&NamedMatrix> {
        self.matrices.iter().find(|m| m.role == role)
    }

    pub fn emit(&self) -> String {
        let ring = &self.profile.ring;
        let mut out = String::new();
        out.push_str(&format!(
            "ring p={} d={} phi={} e={} N={} h={} window={},{}\n",
            ring.p,
            ring.d,
            ring.phi_input
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(","),
            ring.e,
            ring.n,
            self.profile.h,
            fmt_ratio(&self.profile.lo),
            fmt_ratio(&self.profile.hi),
        ));
        if !self.params.is_empty() {
            let mut parts = Vec::new();
            if let Some(r) = &self.params.r {
                parts.push(format!("r={}", fmt_ratio(r)));
            }
            if let Some(s) = &self.params.s {
                parts.push(format!("s={}", fmt_ratio(s)));
            }
            if let Some(m) = self.params.max_iter {
                parts.push(format!("max_iter={m}"));
            }
            if let Some(s) = self.params.seed {
                parts.push(format!("seed={s}"));
            }
            out.push_str(&format!("param {}\n", parts.join(" ")));
        }
        for nm in &self.matrices {
            out.push_str(&format!(
                "matrix {} {} {}x{}\n",
                nm.name, nm.role, nm.mat.rows, nm.mat.cols
            ));
            for row in nm.mat.emit_rows() {
                out.push_str(&row);
                out.push('\n');
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Instance> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (ln, first) = lines
            .next()
            .ok_or_else(|| Error::ParseError("empty instance".into()))?;
        let profile = parse_ring_line(first)
            .map_err(|e| Error::ParseError(format!("line {ln}: {e}")))?;
        let mut inst = Instance::new(profile);
        let mut pending = lines.next();
        if let Some((ln, line)) = pending {
            if let Some(rest) = line.strip_prefix("param ") {
                inst.params = parse_param_line(rest)
                    .map_err(|e| Error::ParseError(format!("line {ln}: {e}")))?;
                pending = lines.next();
            }
        }
        while let Some((ln, line)) = pending {
            let rest = line.strip_prefix("matrix ").ok_or_else(|| {
                Error::ParseError(format!("line {ln}: expected a matrix header"))
            })?;
            let fields: Vec<&str> = rest.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(Error::ParseError(format!(
                    "line {ln}: matrix header needs name, role and shape"
                )));
            }
            let name = fields[0];
            let role = Role::parse(fields[1])
                .map_err(|e| Error::ParseError(format!("line {ln}: {e}")))?;
            let (rs, cs) = fields[2].split_once('x').ok_or_else(|| {
                Error::ParseError(format!("line {ln}: malformed shape '{}'", fields[2]))
            })?;
            let rows: usize = rs
                .parse()
                .map_err(|_| Error::ParseError(format!("line {ln}: bad row count")))?;
            let cols: usize = cs
                .parse()
                .map_err(|_| Error::ParseError(format!("line {ln}: bad column count")))?;
            if rows == 0 || cols == 0 || rows > 64 || cols > 64 {
                return Err(Error::ParseError(format!(
                    "line {ln}: unsupported shape {rows}x{cols}"
                )));
            }
            let mut mat = Matrix::zero(&inst.profile, rows, cols);
            for r in 0..rows {
                let (rln, row_line) = lines.next().ok_or_else(|| {
                    Error::ParseError(format!("matrix '{name}' is missing row {r}"))
                })?;
                let entries: Vec<&str> = row_line.split(" ; ").collect();
                if entries.len() != cols {
                    return Err(Error::ParseError(format!(
                        "line {rln}: row {r} of '{name}' has {} entries, expected {cols}",
                        entries.len()
                    )));
                }
                for (c, entry) in entries.iter().enumerate() {
                    *mat.at_mut(r, c) = parse_series(&inst.profile, entry.trim())
                        .map_err(|e| match e {
                            Error::ParseError(m) => {
                                Error::ParseError(format!("line {rln}: {m}"))
                            }
                            other => other,
                        })?;
                }
            }
            inst.push(name, role, mat)?;
            pending = lines.next();
        }
        Ok(inst)
    }
}

fn parse_ring_line(line: &str) -> Result<Profile> {
    let rest = line
        .strip_prefix("ring ")
        .ok_or_else(|| Error::ParseError("expected a ring line".into()))?;
    let mut p = None;
    let mut d = None;
    let mut phi: Option<Vec<u64>> = None;
    let mut e = None;
    let mut n = None;
    let mut h = None;
    let mut window = None;
    for tok in rest.split_whitespace() {
        let (key, value) = tok
            .split_once('=')
            .ok_or_else(|| Error::ParseError(format!("malformed field '{tok}'")))?;
        match key {
            "p" => p = Some(parse_u64(value, "p")?),
            "d" => d = Some(parse_u64(value, "d")? as usize),
            "phi" => {
                let coeffs: Result<Vec<u64>> =
                    value.split(',').map(|c| parse_u64(c, "phi")).collect();
                phi = Some(coeffs?);
            }
            "e" => e = Some(parse_u64(value, "e")? as usize),
            "N" => n = Some(parse_u64(value, "N")? as u32),
            "h" => h = Some(parse_u64(value, "h")? as u32),
            "window" => {
                let (lo, hi) = value
                    .split_once(',')
                    .ok_or_else(|| Error::ParseError("window needs two bounds".into()))?;
                window = Some((parse_ratio(lo)?, parse_ratio(hi)?));
            }
            other => {
                return Err(Error::ParseError(format!("unknown ring field '{other}'")))
            }
        }
    }
    let p = p.ok_or_else(|| Error::ParseError("ring line is missing p".into()))?;
    let phi = phi.ok_or_else(|| Error::ParseError("ring line is missing phi".into()))?;
    let e = e.ok_or_else(|| Error::ParseError("ring line is missing e".into()))?;
    let n = n.ok_or_else(|| Error::ParseError("ring line is missing N".into()))?;
    let h = h.ok_or_else(|| Error::ParseError("ring line is missing h".into()))?;
    let (lo, hi) =
        window.ok_or_else(|| Error::ParseError("ring line is missing window".into()))?;
    if let Some(d) = d {
        if d + 1 != phi.len() {
            return Err(Error::ParseError(format!(
                "declared degree {d} does not match phi with {} coefficients",
                phi.len()
            )));
        }
    }
    let ring = Arc::new(RingCtx::new(p, phi, e, n)?);
    Profile::new(ring, h, lo, hi)
}

fn parse_param_line(rest: &str) -> Result<Params> {
    let mut params = Params::default();
    for tok in rest.split_whitespace() {
        let (key, value) = tok
            .split_once('=')
            .ok_or_else(|| Error::ParseError(format!("malformed field '{tok}'")))?;
        match key {
            "r" => params.r = Some(parse_ratio(value)?),
            "s" => params.s = Some(parse_ratio(value)?),
            "max_iter" => {
                params.max_iter = Some(value.parse().map_err(|_| {
                    Error::ParseError(format!("bad max_iter '{value}'"))
                })?)
            }
            "seed" => {
                params.seed = Some(
                    value
                        .parse()
                        .map_err(|_| Error::ParseError(format!("bad seed '{value}'")))?,
                )
            }
            other => {
                return Err(Error::ParseError(format!("unknown param field '{other}'")))
            }
        }
    }
    Ok(params)
}

fn parse_u64(s: &str, what: &str) -> Result<u64> {
    s.parse()
        .map_err(|_| Error::ParseError(format!("bad {what} value '{s}'")))
}

/// Splits on a separator char at parenthesis depth zero.
fn split_depth0(s: &str, sep: char) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            c if c == sep && depth == 0 => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}

fn parse_welem(ring: &RingCtx, s: &str) -> Result<Vec<u64>> {
    let mut w = vec![0u64; ring.d];
    let inner = if let Some(stripped) = s.strip_prefix('(') {
        stripped
            .strip_suffix(')')
            .ok_or_else(|| Error::ParseError(format!("unbalanced parens in '{s}'")))?
    } else {
        s
    };
    for term in inner.split('+') {
        let term = term.trim();
        let (c_str, k) = match term.split_once('*') {
            None => (term, 0usize),
            Some((c, rest)) => match rest.strip_prefix("w^") {
                Some(kk) => (
                    c,
                    kk.parse::<usize>().map_err(|_| {
                        Error::ParseError(format!("bad generator power in '{term}'"))
                    })?,
                ),
                None if rest == "w" => (c, 1),
                None => {
                    return Err(Error::ParseError(format!(
                        "malformed coefficient term '{term}'"
                    )))
                }
            },
        };
        if k >= ring.d {
            return Err(Error::ParseError(format!(
                "generator power {k} exceeds residue degree {}",
                ring.d
            )));
        }
        let c = parse_u64(c_str, "coefficient")?;
        w[k] = (w[k] + c % ring.pn) % ring.pn;
    }
    Ok(w)
}

fn parse_exp(s: &str) -> Result<Exp> {
    let body = s
        .strip_prefix("t^")
        .ok_or_else(|| Error::ParseError(format!("expected a monomial power, got '{s}'")))?;
    let body = if let Some(stripped) = body.strip_prefix('(') {
        stripped
            .strip_suffix(')')
            .ok_or_else(|| Error::ParseError(format!("unbalanced parens in '{s}'")))?
    } else {
        body
    };
    parse_ratio(body)
}

pub fn parse_series(profile: &Profile, text: &str) -> Result<Series> {
    let ring = &profile.ring;
    if text == "0" {
        return Ok(Series::zero(profile.clone()));
    }
    if text.is_empty() {
        return Err(Error::ParseError("empty series entry".into()));
    }
    // pieces keyed by exponent: (pi power, residue-tower element)
    let mut by_exp: std::collections::BTreeMap<Exp, Vec<(i64, Vec<u64>)>> =
        std::collections::BTreeMap::new();
    for piece in split_depth0(text, '+') {
        let piece = piece.trim();
        let toks = split_depth0(piece, '*');
        let (k, w_str, t_str) = match toks.len() {
            2 => (0i64, toks[0], toks[1]),
            3 => {
                let k_str = toks[0].strip_prefix("pi^").ok_or_else(|| {
                    Error::ParseError(format!("expected a pi power in '{piece}'"))
                })?;
                let k: i64 = k_str.parse().map_err(|_| {
                    Error::ParseError(format!("bad pi power in '{piece}'"))
                })?;
                (k, toks[1], toks[2])
            }
            _ => {
                return Err(Error::ParseError(format!(
                    "series piece '{piece}' is not of the form [pi^k*]c*t^e"
                )))
            }
        };
        let w = parse_welem(ring, w_str.trim())?;
        let exp = parse_exp(t_str.trim())?;
        by_exp.entry(exp).or_default().push((k, w));
    }
    let mut out = Series::zero(profile.clone());
    for (exp, pieces) in by_exp {
        let coeff = assemble_coeff(ring, &pieces);
        if coeff.is_zero() {
            continue;
        }
        out = out.add(&Series::monomial(profile.clone(), exp, coeff)?)?;
    }
    Ok(out)
}

/// Rebuilds a coefficient from (pi power, residue element) pieces; powers
/// beyond the ramification index fold into deeper base digits.
fn assemble_coeff(ring: &RingCtx, pieces: &[(i64, Vec<u64>)]) -> Coeff {
    let e = ring.e as i64;
    let val_e = pieces.iter().map(|(k, _)| *k).min().unwrap_or(0);
    let mut digits = vec![0u64; ring.e * ring.d];
    for (k, w) in pieces {
        let j = k - val_e;
        let (q, rem) = (j.div_euclid(e), j.rem_euclid(e));
        let mut scale = 1u64;
        let mut overflow = false;
        for _ in 0..q {
            scale = match scale.checked_mul(ring.p) {
                Some(s) if s < ring.pn => s,
                _ => {
                    overflow = true;
                    break;
                }
            };
        }
        if overflow {
            continue;
        }
        let base = rem as usize * ring.d;
        for (i, &c) in w.iter().enumerate() {
            let add = (c as u128 * scale as u128 % ring.pn as u128) as u64;
            digits[base + i] = ((digits[base + i] as u128 + add as u128)
                % ring.pn as u128) as u64;
        }
    }
    ring.c_make(val_e, digits, (ring.e as i64) * (ring.n as i64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{exp_frac, exp_int};

    fn base_profile() -> Profile {
        let ring = Arc::new(RingCtx::new(2, vec![0, 1], 1, 3).unwrap());
        Profile::new(ring, 1, exp_int(-8), exp_int(8)).unwrap()
    }

    #[test]
    fn series_text_round_trips() {
        let pr = base_profile();
        let ring = pr.ring.clone();
        let mut s = Series::monomial(pr.clone(), exp_int(-2), ring.c_from_i64(3)).unwrap();
        s = s
            .add(&Series::monomial(pr.clone(), exp_frac(1, 2), ring.c_from_pi_w(2, &[1])).unwrap())
            .unwrap();
        let text = s.emit();
        assert_eq!(text, "3*t^-2+pi^2*1*t^(1/2)");
        let back = parse_series(&pr, &text).unwrap();
        assert!(back.eq_terms(&s));
    }

    #[test]
    fn quadratic_residue_coefficients_round_trip() {
        let ring = Arc::new(RingCtx::new(3, vec![1, 0, 1], 1, 2).unwrap());
        let pr = Profile::new(ring.clone(), 0, exp_int(-4), exp_int(4)).unwrap();
        let c = ring.c_from_pi_w(0, &[2, 5]);
        let s = Series::monomial(pr.clone(), exp_int(1), c).unwrap();
        let text = s.emit();
        assert_eq!(text, "(2+5*w)*t^1");
        assert!(parse_series(&pr, &text).unwrap().eq_terms(&s));
    }

    #[test]
    fn deep_pi_powers_fold_into_base_digits() {
        let pr = base_profile();
        // pi^2 with e = 1 is p^2, so this is 1 + 4 at t^0
        let s = parse_series(&pr, "1*t^0+pi^2*1*t^0").unwrap();
        let expected =
            Series::monomial(pr.clone(), exp_int(0), pr.ring.c_from_i64(5)).unwrap();
        assert!(s.eq_terms(&expected));
    }

    #[test]
    fn zero_series_round_trips() {
        let pr = base_profile();
        let z = Series::zero(pr.clone());
        assert_eq!(z.emit(), "0");
        assert!(parse_series(&pr, "0").unwrap().is_zero());
    }

    #[test]
    fn off_window_and_off_lattice_inputs_are_rejected() {
        let pr = base_profile();
        assert!(parse_series(&pr, "1*t^12").is_err());
        assert!(parse_series(&pr, "1*t^(1/3)").is_err());
        assert!(parse_series(&pr, "1*t^(1/4)").is_err());
    }

    #[test]
    fn malformed_pieces_are_rejected() {
        let pr = base_profile();
        assert!(matches!(
            parse_series(&pr, "t^2"),
            Err(Error::ParseError(_))
        ));
        assert!(matches!(
            parse_series(&pr, "1*1*1*t^2"),
            Err(Error::ParseError(_))
        ));
        assert!(matches!(
            parse_series(&pr, "pi^x*1*t^2"),
            Err(Error::ParseError(_))
        ));
        let ring = Arc::new(RingCtx::new(2, vec![1, 1, 1], 1, 2).unwrap());
        let pr2 = Profile::new(ring, 0, exp_int(-4), exp_int(4)).unwrap();
        assert!(parse_series(&pr2, "(1+1*w^2)*t^0").is_err());
    }

    #[test]
    fn instance_text_round_trips() {
        let pr = base_profile();
        let ring = pr.ring.clone();
        let mut inst = Instance::new(pr.clone());
        inst.params.r = Some(exp_frac(1, 2));
        inst.params.max_iter = Some(40);
        inst.params.seed = Some(7);
        let mut a = Matrix::identity(&pr, 2);
        *a.at_mut(0, 1) =
            Series::monomial(pr.clone(), exp_int(4), ring.c_from_i64(1)).unwrap();
        inst.push("A", Role::Frobenius, a).unwrap();
        let d = Matrix::diag(vec![
            Series::monomial(pr.clone(), exp_int(0), ring.cone()).unwrap(),
            Series::monomial(pr.clone(), exp_int(0), ring.c_from_pi_w(1, &[1])).unwrap(),
        ])
        .unwrap();
        inst.push("D", Role::Diagonal, d).unwrap();
        let text = inst.emit();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "ring p=2 d=1 phi=0,1 e=1 N=3 h=1 window=-8,8");
        assert_eq!(lines[1], "param r=1/2 max_iter=40 seed=7");
        assert_eq!(lines[2], "matrix A frobenius 2x2");
        let back = Instance::parse(&text).unwrap();
        assert_eq!(back.emit(), text);
        assert_eq!(back.matrices.len(), 2);
        assert_eq!(back.params.r, Some(exp_frac(1, 2)));
        assert!(back.find("A").is_some());
        assert_eq!(back.by_role(Role::Diagonal).unwrap().name, "D");
    }

    #[test]
    fn instance_rejects_shape_lies_and_duplicates() {
        let header = "ring p=2 d=1 phi=0,1 e=1 N=3 h=0 window=-8,8\n";
        let bad_shape = format!("{header}matrix A frobenius 2x2\n1*t^0 ; 0\n1*t^0\n");
        assert!(matches!(
            Instance::parse(&bad_shape),
            Err(Error::ParseError(_))
        ));
        let dup = format!(
            "{header}matrix A frobenius 1x1\n1*t^0\nmatrix A diagonal 1x1\n1*t^0\n"
        );
        assert!(Instance::parse(&dup).is_err());
        let bad_degree = "ring p=2 d=2 phi=0,1 e=1 N=3 h=0 window=-8,8\n";
        assert!(Instance::parse(bad_degree).is_err());
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let text = "# sample\n\nring p=2 d=1 phi=0,1 e=1 N=2 h=0 window=-4,4\n\n# trailing\n";
        let inst = Instance::parse(text).unwrap();
        assert!(inst.matrices.is_empty());
        assert!(inst.params.is_empty());
    }
}
