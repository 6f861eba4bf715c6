//! Code parameters and the shortening lift.
//!
//! An `(n, k, d, t)` code with `d > 2k-1-t` is obtained from an inner code
//! `(n+delta, k+delta, d+delta, t)` with `delta = d - (2k-1-t)`, whose
//! parameters sit exactly on `d' = 2k'-1-t`. The first `delta` inner nodes
//! are imaginary: systematic, always zero, never stored.

use crate::error::{Error, Result};
use crate::field::{FieldSpec, Gf};

/// How to pick the field for a parameter set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Modulus {
    /// Smallest admissible prime at or above the bound.
    AtLeast(u32),
    /// Use exactly this prime.
    Fixed(u32),
}

impl Default for Modulus {
    fn default() -> Self {
        Modulus::AtLeast(2)
    }
}

/// Validated `(n, k, d, t)` with all derived quantities. Immutable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeParams {
    n: usize,
    k: usize,
    d: usize,
    t: usize,
    alpha: usize,
    delta: usize,
    mu: usize,
    z: usize,
    r: usize,
    field: FieldSpec,
}

/// The header-level identity of a code: enough to re-derive [`CodeParams`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ParamsDigest {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub t: usize,
    pub modulus: u32,
}

impl ParamsDigest {
    pub fn to_params(self) -> Result<CodeParams> {
        CodeParams::new(self.n, self.k, self.d, self.t, Modulus::Fixed(self.modulus))
    }
}

/// `derive_params` with the library default field (smallest admissible prime).
pub fn derive_params(n: usize, k: usize, d: usize, t: usize, modulus_override: Option<u32>) -> Result<CodeParams> {
    let m = modulus_override.map_or(Modulus::default(), Modulus::Fixed);
    CodeParams::new(n, k, d, t, m)
}

/// Checks the combinatorial constraints only; no field is built.
pub fn validate(n: usize, k: usize, d: usize, t: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::KTooSmall { k });
    }
    if t < 2 {
        return Err(Error::TTooSmall { t });
    }
    if n < k || t > n - k {
        return Err(Error::TTooLarge {
            t,
            bound: n.saturating_sub(k),
        });
    }
    let bound = (2 * k).saturating_sub(1 + t).max(k);
    if d < bound {
        return Err(Error::DTooSmall { d, bound });
    }
    if d > n - t {
        return Err(Error::DTooLarge { d, t, survivors: n - t });
    }
    Ok(())
}

impl CodeParams {
    pub fn new(n: usize, k: usize, d: usize, t: usize, modulus: Modulus) -> Result<Self> {
        validate(n, k, d, t)?;
        let delta = d + 1 + t - 2 * k;
        let k_inner = k + delta;
        let d_inner = d + delta;
        let alpha = d - k + t;
        let mu = k_inner - t;
        let (z, r) = (d_inner / mu, d_inner % mu);

        debug_assert_eq!(d_inner, 2 * k_inner - 1 - t);
        debug_assert_eq!(alpha, k_inner - 1);
        debug_assert_eq!(alpha, (z - 1) * mu + r);
        debug_assert!(t < k_inner);

        let n_inner = n + delta;
        let field = match modulus {
            Modulus::AtLeast(min_p) => FieldSpec::auto(n_inner, mu, min_p),
            Modulus::Fixed(p) => FieldSpec::with_modulus(p, n_inner, mu)?,
        };
        Ok(CodeParams {
            n,
            k,
            d,
            t,
            alpha,
            delta,
            mu,
            z,
            r,
            field,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn d(&self) -> usize {
        self.d
    }
    pub fn t(&self) -> usize {
        self.t
    }

    /// Symbols per node per stripe, `d - k + t`.
    pub fn alpha(&self) -> usize {
        self.alpha
    }

    /// Message symbols per stripe, `k * alpha`.
    pub fn message_len(&self) -> usize {
        self.k * self.alpha
    }

    pub fn delta(&self) -> usize {
        self.delta
    }
    pub fn mu(&self) -> usize {
        self.mu
    }

    /// `d_inner = z * mu + r`, `0 <= r < mu`.
    pub fn z(&self) -> usize {
        self.z
    }
    pub fn r(&self) -> usize {
        self.r
    }

    pub fn n_inner(&self) -> usize {
        self.n + self.delta
    }
    pub fn k_inner(&self) -> usize {
        self.k + self.delta
    }
    pub fn d_inner(&self) -> usize {
        self.d + self.delta
    }
    pub fn inner_message_len(&self) -> usize {
        self.k_inner() * self.alpha
    }

    /// Per-connection download, fixed at one symbol for scalar codes.
    pub fn beta(&self) -> usize {
        1
    }

    /// Optimal per-newcomer repair download, `d + t - 1` symbols.
    pub fn repair_bandwidth(&self) -> usize {
        self.d + self.t - 1
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }
    pub fn gf(&self) -> Gf {
        self.field.gf()
    }
    pub fn modulus(&self) -> u32 {
        self.field.modulus()
    }

    /// Inner index (1-based) of outer node `outer` (1-based).
    pub fn inner_index(&self, outer: usize) -> usize {
        outer + self.delta
    }

    /// Evaluation point of inner node `inner` (1-based).
    pub fn point(&self, inner: usize) -> u32 {
        self.field.points()[inner - 1]
    }

    /// `point(inner)^mu`.
    pub fn lambda(&self, inner: usize) -> u32 {
        self.gf().pow(self.point(inner), self.mu as u64)
    }

    pub fn digest(&self) -> ParamsDigest {
        ParamsDigest {
            n: self.n,
            k: self.k,
            d: self.d,
            t: self.t,
            modulus: self.modulus(),
        }
    }

    pub(crate) fn check_outer(&self, index: usize) -> Result<()> {
        if index == 0 || index > self.n {
            return Err(Error::IndexOutOfRange { index, max: self.n });
        }
        Ok(())
    }
}
