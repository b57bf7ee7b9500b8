use crate::error::{Error, Result};

/// Element of F_{p^d}, coordinates in the power basis 1, x, .., x^{d-1},
/// each entry reduced mod p.
pub type FqElem = Vec<u64>;

/// The residue field F_{p^d} presented as F_p[x] modulo a monic irreducible
/// polynomial of degree d.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FqCtx {
    pub p: u64,
    pub d: usize,
    /// Monic modulus, length d+1, coefficients mod p, phi[d] == 1.
    pub phi: Vec<u64>,
}

impl FqCtx {
    pub fn new(p: u64, phi: Vec<u64>) -> Result<FqCtx> {
        if phi.is_empty() || *phi.last().unwrap() % p != 1 {
            return Err(Error::InvalidInput("residue modulus must be monic".into()));
        }
        let d = phi.len() - 1;
        if d == 0 || d > 8 {
            return Err(Error::InvalidInput(format!(
                "residue degree {d} outside supported range 1..=8"
            )));
        }
        let phi: Vec<u64> = phi.iter().map(|c| c % p).collect();
        let ctx = FqCtx { p, d, phi };
        if !ctx.modulus_irreducible() {
            return Err(Error::InvalidInput(
                "residue modulus is reducible mod p".into(),
            ));
        }
        Ok(ctx)
    }

    pub fn q(&self) -> u128 {
        (self.p as u128).pow(self.d as u32)
    }

    pub fn zero(&self) -> FqElem {
        vec![0; self.d]
    }

    pub fn one(&self) -> FqElem {
        let mut v = vec![0; self.d];
        v[0] = 1;
        v
    }

    pub fn from_u64(&self, c: u64) -> FqElem {
        let mut v = vec![0; self.d];
        v[0] = c % self.p;
        v
    }

    pub fn gen(&self) -> FqElem {
        let mut v = vec![0; self.d];
        if self.d > 1 {
            v[1] = 1;
        } else {
            // degree 1: the class of x is -phi[0]
            v[0] = (self.p - self.phi[0] % self.p) % self.p;
        }
        v
    }

    pub fn is_zero(&self, a: &FqElem) -> bool {
        a.iter().all(|&c| c == 0)
    }

    pub fn add(&self, a: &FqElem, b: &FqElem) -> FqElem {
        a.iter().zip(b).map(|(x, y)| (x + y) % self.p).collect()
    }

    pub fn neg(&self, a: &FqElem) -> FqElem {
        a.iter().map(|&x| (self.p - x % self.p) % self.p).collect()
    }

    pub fn sub(&self, a: &FqElem, b: &FqElem) -> FqElem {
        self.add(a, &self.neg(b))
    }

    pub fn mul(&self, a: &FqElem, b: &FqElem) -> FqElem {
        let d = self.d;
        let mut buf = vec![0u128; 2 * d - 1];
        for i in 0..d {
            if a[i] == 0 {
                continue;
            }
            for j in 0..d {
                buf[i + j] += a[i] as u128 * b[j] as u128;
            }
        }
        // reduce x^d = -phi[0..d]
        for k in (d..2 * d - 1).rev() {
            let c = buf[k] % self.p as u128;
            buf[k] = 0;
            if c == 0 {
                continue;
            }
            for i in 0..d {
                let sub = c * (self.phi[i] as u128) % self.p as u128;
                buf[k - d + i] += (self.p as u128 - sub) % self.p as u128;
            }
        }
        (0..d).map(|i| (buf[i] % self.p as u128) as u64).collect()
    }

    pub fn pow(&self, a: &FqElem, mut e: u128) -> FqElem {
        let mut base = a.clone();
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }

    pub fn inv(&self, a: &FqElem) -> Result<FqElem> {
        if self.is_zero(a) {
            return Err(Error::DivisionByZeroPrecision);
        }
        Ok(self.pow(a, self.q() - 2))
    }

    /// x -> x^p, the absolute Frobenius.
    pub fn frobenius(&self, a: &FqElem) -> FqElem {
        self.pow(a, self.p as u128)
    }

    /// Inverse of the Frobenius, x -> x^{p^{d-1}}.
    pub fn frobenius_inv(&self, a: &FqElem) -> FqElem {
        self.pow(a, (self.p as u128).pow(self.d as u32 - 1))
    }

    pub fn eq(&self, a: &FqElem, b: &FqElem) -> bool {
        a == b
    }

    /// All field elements in a fixed order, for small-field scans.
    pub fn enumerate(&self) -> Vec<FqElem> {
        let mut out = Vec::with_capacity(self.q() as usize);
        let mut cur = self.zero();
        loop {
            out.push(cur.clone());
            let mut i = 0;
            loop {
                if i == self.d {
                    return out;
                }
                cur[i] += 1;
                if cur[i] < self.p {
                    break;
                }
                cur[i] = 0;
                i += 1;
            }
        }
    }

    /// Solves c - lam * c^p = v as an F_p-linear system in the power basis.
    /// Returns the particular solution with free coordinates set to zero, or
    /// an error when v is outside the image of the map.
    pub fn artin_schreier_solve(&self, lam: &FqElem, v: &FqElem) -> Result<FqElem> {
        let d = self.d;
        let p = self.p;
        // columns: image of each basis vector under c -> c - lam c^p
        let mut cols: Vec<FqElem> = Vec::with_capacity(d);
        for i in 0..d {
            let mut b = self.zero();
            b[i] = 1;
            let img = self.sub(&b, &self.mul(lam, &self.frobenius(&b)));
            cols.push(img);
        }
        // augmented Gaussian elimination over F_p
        let mut m = vec![vec![0u64; d + 1]; d];
        for r in 0..d {
            for c in 0..d {
                m[r][c] = cols[c][r];
            }
            m[r][d] = v[r];
        }
        let inv_mod_p = |a: u64| -> u64 {
            // Fermat inverse, p prime
            let mut acc = 1u64;
            let mut base = a % p;
            let mut e = p - 2;
            while e > 0 {
                if e & 1 == 1 {
                    acc = acc * base % p;
                }
                base = base * base % p;
                e >>= 1;
            }
            acc
        };
        let mut pivot_of_col = vec![usize::MAX; d];
        let mut row = 0;
        for col in 0..d {
            let Some(pr) = (row..d).find(|&r| m[r][col] % p != 0) else {
                continue;
            };
            m.swap(row, pr);
            let iv = inv_mod_p(m[row][col]);
            for c in col..=d {
                m[row][c] = m[row][c] * iv % p;
            }
            for r in 0..d {
                if r != row && m[r][col] % p != 0 {
                    let f = m[r][col] % p;
                    for c in col..=d {
                        m[r][c] = (m[r][c] + (p - f) * m[row][c]) % p;
                    }
                }
            }
            pivot_of_col[col] = row;
            row += 1;
        }
        for r in row..d {
            if m[r][d] % p != 0 {
                return Err(Error::ResidueUnsolvable(
                    "twist residue map does not attain the target".into(),
                ));
            }
        }
        let mut sol = self.zero();
        for col in 0..d {
            if pivot_of_col[col] != usize::MAX {
                sol[col] = m[pivot_of_col[col]][d] % p;
            }
        }
        Ok(sol)
    }

    fn modulus_irreducible(&self) -> bool {
        // phi (degree d) is irreducible over F_p iff x^{p^d} == x mod phi and
        // for every prime l dividing d, gcd(x^{p^{d/l}} - x, phi) = 1.
        let d = self.d;
        if d == 1 {
            return true;
        }
        let xq = self.pow(&self.gen(), (self.p as u128).pow(d as u32));
        if xq != self.gen() {
            return false;
        }
        let mut primes = vec![];
        let mut m = d;
        let mut f = 2;
        while f * f <= m {
            if m % f == 0 {
                primes.push(f);
                while m % f == 0 {
                    m /= f;
                }
            }
            f += 1;
        }
        if m > 1 {
            primes.push(m);
        }
        for l in primes {
            let e = (self.p as u128).pow((d / l) as u32);
            let xe = self.pow(&self.gen(), e);
            let diff = self.sub(&xe, &self.gen());
            // nontrivial gcd with phi shows up as diff generating a proper
            // ideal; since phi is the modulus, gcd != 1 iff diff is a zero
            // divisor, iff diff is non-invertible and nonzero, or zero.
            if self.is_zero(&diff) {
                return false;
            }
            // invertibility test without division: diff^(q-1) == 1
            let t = self.pow(&diff, self.q() - 1);
            if t != self.one() {
                return false;
            }
        }
        true
    }
}
