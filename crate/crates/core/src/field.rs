//! Prime-field arithmetic and evaluation-point selection.
//!
//! Codes in this crate live over GF(p) for an odd prime `p`. The product-matrix
//! construction needs `n` nonzero evaluation points whose `mu`-th powers are
//! pairwise distinct; [`FieldSpec`] bundles a modulus with such a point set.

use std::collections::HashSet;

use crate::error::{Error, Result};

/// Arithmetic context for GF(p). Residues are `u32` values kept in `[0, p)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Gf {
    p: u32,
}

impl Gf {
    /// Characteristic 2 is rejected.
    pub fn new(p: u32) -> Result<Self> {
        if p < 3 || !is_prime(p as u64) {
            return Err(Error::NotPrime(p));
        }
        Ok(Gf { p })
    }

    #[inline]
    pub fn modulus(self) -> u32 {
        self.p
    }

    #[inline]
    pub fn reduce(self, x: u64) -> u32 {
        (x % self.p as u64) as u32
    }

    #[inline]
    pub fn add(self, a: u32, b: u32) -> u32 {
        let s = a as u64 + b as u64;
        if s >= self.p as u64 {
            (s - self.p as u64) as u32
        } else {
            s as u32
        }
    }

    #[inline]
    pub fn sub(self, a: u32, b: u32) -> u32 {
        if a >= b {
            a - b
        } else {
            (a as u64 + self.p as u64 - b as u64) as u32
        }
    }

    #[inline]
    pub fn neg(self, a: u32) -> u32 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    #[inline]
    pub fn mul(self, a: u32, b: u32) -> u32 {
        ((a as u64 * b as u64) % self.p as u64) as u32
    }

    /// `a + b * c`
    #[inline]
    pub fn mul_add(self, a: u32, b: u32, c: u32) -> u32 {
        ((a as u64 + b as u64 * c as u64) % self.p as u64) as u32
    }

    pub fn pow(self, base: u32, mut exp: u64) -> u32 {
        let p = self.p as u64;
        let mut acc = 1u64 % p;
        let mut b = base as u64 % p;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * b % p;
            }
            b = b * b % p;
            exp >>= 1;
        }
        acc as u32
    }

    /// Extended Euclid; fails only for zero.
    pub fn inv(self, a: u32) -> Result<u32> {
        let a = a % self.p;
        if a == 0 {
            return Err(Error::ZeroInverse { modulus: self.p });
        }
        let (mut r0, mut r1) = (self.p as i64, a as i64);
        let (mut s0, mut s1) = (0i64, 1i64);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (s0, s1) = (s1, s0 - q * s1);
        }
        debug_assert_eq!(r0, 1);
        Ok(s0.rem_euclid(self.p as i64) as u32)
    }

    pub fn div(self, a: u32, b: u32) -> Result<u32> {
        Ok(self.mul(a, self.inv(b)?))
    }

    pub fn contains(self, a: u32) -> bool {
        a < self.p
    }

    pub fn dot(self, a: &[u32], b: &[u32]) -> u32 {
        debug_assert_eq!(a.len(), b.len());
        // p < 2^32, so each product is < 2^64; reduce after every term.
        a.iter()
            .zip(b)
            .fold(0u64, |acc, (&x, &y)| (acc + x as u64 * y as u64) % self.p as u64) as u32
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldOp {
    Add,
    Sub,
    Mul,
    Inv,
    Pow,
}

/// Dispatching form of the field operations. `b` is ignored for `Inv` and is
/// the exponent for `Pow`.
pub fn field_arith(gf: Gf, a: u32, b: u32, op: FieldOp) -> Result<u32> {
    for v in [a, b] {
        if op != FieldOp::Pow && !gf.contains(v) {
            return Err(Error::SymbolOutOfRange {
                value: v,
                modulus: gf.modulus(),
            });
        }
    }
    Ok(match op {
        FieldOp::Add => gf.add(a, b),
        FieldOp::Sub => gf.sub(a, b),
        FieldOp::Mul => gf.mul(a, b),
        FieldOp::Inv => gf.inv(a)?,
        FieldOp::Pow => gf.pow(gf.reduce(a as u64), b as u64),
    })
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut f = 3u64;
    while f * f <= n {
        if n.is_multiple_of(f) {
            return false;
        }
        f += 2;
    }
    true
}

pub(crate) fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Number of distinct values `x^mu` takes over the nonzero residues mod `p`.
fn distinct_powers(p: u32, mu: usize) -> usize {
    ((p as u64 - 1) / gcd(mu as u64, p as u64 - 1)) as usize
}

/// Smallest odd prime `p >= max(min_p, n_inner + 1)` admitting `n_inner`
/// nonzero points with pairwise distinct `mu`-th powers.
///
/// When `gcd(mu, p - 1) = 1` the map `x -> x^mu` is a bijection and any
/// `n_inner` distinct points qualify. For even `mu` that never happens, and
/// the search settles for a prime with enough distinct `mu`-th powers.
pub fn select_modulus(n_inner: usize, mu: usize, min_p: u32) -> u32 {
    assert!(n_inner >= 1 && mu >= 1, "select_modulus needs n_inner, mu >= 1");
    let start = (min_p as u64).max(n_inner as u64 + 1).max(3);
    let mut p = start;
    loop {
        assert!(p <= u32::MAX as u64, "no admissible prime below 2^32");
        if is_prime(p) && distinct_powers(p as u32, mu) >= n_inner {
            return p as u32;
        }
        p += 1;
    }
}

/// A modulus together with `n` evaluation points whose `mu`-th powers are
/// pairwise distinct.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldSpec {
    gf: Gf,
    mu: usize,
    points: Vec<u32>,
}

impl FieldSpec {
    /// Validates an explicit point set.
    pub fn new(modulus: u32, points: Vec<u32>, mu: usize) -> Result<Self> {
        let gf = Gf::new(modulus)?;
        let mut seen = HashSet::new();
        let mut powers = HashSet::new();
        for &x in &points {
            if x == 0 || x >= modulus {
                return Err(Error::InvalidPoints(format!(
                    "point {x} is not a nonzero residue mod {modulus}"
                )));
            }
            if !seen.insert(x) {
                return Err(Error::InvalidPoints(format!("point {x} repeated")));
            }
            if !powers.insert(gf.pow(x, mu as u64)) {
                return Err(Error::InvalidPoints(format!(
                    "point {x} shares its {mu}-th power with an earlier point"
                )));
            }
        }
        Ok(FieldSpec { gf, mu, points })
    }

    /// Picks the modulus with [`select_modulus`] and default points.
    pub fn auto(n: usize, mu: usize, min_p: u32) -> Self {
        let p = select_modulus(n, mu, min_p);
        Self::with_modulus(p, n, mu).expect("select_modulus guarantees enough points")
    }

    /// Points `1..=n` when `gcd(mu, p-1) = 1`, otherwise a greedy scan of
    /// `1..p` keeping each residue whose `mu`-th power is new.
    pub fn with_modulus(modulus: u32, n: usize, mu: usize) -> Result<Self> {
        let gf = Gf::new(modulus)?;
        let points: Vec<u32> = if gcd(mu as u64, modulus as u64 - 1) == 1 {
            if (modulus as usize) - 1 < n {
                return Err(Error::InsufficientPoints {
                    modulus,
                    mu: mu as u32,
                    available: modulus as usize - 1,
                    needed: n,
                });
            }
            (1..=n as u32).collect()
        } else {
            let mut seen = HashSet::new();
            let mut pts = Vec::with_capacity(n);
            for x in 1..modulus {
                if pts.len() == n {
                    break;
                }
                if seen.insert(gf.pow(x, mu as u64)) {
                    pts.push(x);
                }
            }
            if pts.len() < n {
                return Err(Error::InsufficientPoints {
                    modulus,
                    mu: mu as u32,
                    available: pts.len(),
                    needed: n,
                });
            }
            pts
        };
        Self::new(modulus, points, mu)
    }

    pub fn gf(&self) -> Gf {
        self.gf
    }

    pub fn modulus(&self) -> u32 {
        self.gf.modulus()
    }

    pub fn mu(&self) -> usize {
        self.mu
    }

    pub fn points(&self) -> &[u32] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}
