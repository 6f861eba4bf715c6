//! Scalar product-matrix MSR code at `d = 2k - 2`, repairing one failure.
//!
//! Kept as a reference for the shared field, Vandermonde and pair-decoder
//! machinery.

use crate::error::{Error, Result};
use crate::field::{FieldSpec, Gf};
use crate::linalg::{solve_vec, triangle_len, vandermonde, Matrix, SymmetricMatrix};
use crate::reconstruct::PairDecoder;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MsrParams {
    n: usize,
    k: usize,
    field: FieldSpec,
}

impl MsrParams {
    /// Requires `k >= 2` and `n >= d + 1 = 2k - 1`.
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::KTooSmall { k });
        }
        if n < 2 * k - 1 {
            return Err(Error::MsrParams(format!(
                "n = {n} must be at least d + 1 = {}",
                2 * k - 1
            )));
        }
        Ok(MsrParams {
            n,
            k,
            field: FieldSpec::auto(n, k - 1, 2),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn d(&self) -> usize {
        2 * self.k - 2
    }
    pub fn alpha(&self) -> usize {
        self.k - 1
    }
    pub fn message_len(&self) -> usize {
        self.k * (self.k - 1)
    }
    pub fn gf(&self) -> Gf {
        self.field.gf()
    }
    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    fn point(&self, node: usize) -> u32 {
        self.field.points()[node - 1]
    }

    fn lambda(&self, node: usize) -> u32 {
        self.gf().pow(self.point(node), self.alpha() as u64)
    }

    fn check(&self, node: usize) -> Result<()> {
        if node == 0 || node > self.n {
            return Err(Error::IndexOutOfRange {
                index: node,
                max: self.n,
            });
        }
        Ok(())
    }

    fn powers(&self, node: usize, len: usize) -> Vec<u32> {
        let gf = self.gf();
        let x = self.point(node);
        let mut acc = 1;
        (0..len)
            .map(|_| {
                let v = acc;
                acc = gf.mul(acc, x);
                v
            })
            .collect()
    }
}

/// `M = [S1; S2]` from `S1`'s packed triangle followed by `S2`'s.
fn message_matrix(params: &MsrParams, symbols: &[u32]) -> Result<Matrix> {
    let a = params.alpha();
    let half = triangle_len(a);
    if symbols.len() != 2 * half {
        return Err(Error::LengthMismatch {
            expected: 2 * half,
            got: symbols.len(),
        });
    }
    if let Some(&v) = symbols.iter().find(|&&v| v >= params.gf().modulus()) {
        return Err(Error::SymbolOutOfRange {
            value: v,
            modulus: params.gf().modulus(),
        });
    }
    let s1 = SymmetricMatrix::pack(a, &symbols[..half])?.to_matrix();
    let s2 = SymmetricMatrix::pack(a, &symbols[half..])?.to_matrix();
    let mut rows = s1.to_rows();
    rows.extend(s2.to_rows());
    Ok(Matrix::from_rows(&rows))
}

/// One row per node: `psi_i * M`.
pub fn msr_encode(params: &MsrParams, symbols: &[u32]) -> Result<Vec<Vec<u32>>> {
    let m = message_matrix(params, symbols)?;
    let g = vandermonde(params.gf(), params.field.points(), params.d())?;
    Ok(g.mul(params.gf(), &m)?.to_rows())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MsrRepair {
    pub row: Vec<u32>,
    /// Symbols downloaded, one per helper.
    pub downloads: usize,
}

/// Regenerates node `failed` from `d` helpers; `helpers[q]` is a node index
/// and `rows[q]` its content.
pub fn msr_repair(params: &MsrParams, failed: usize, helpers: &[usize], rows: &[Vec<u32>]) -> Result<MsrRepair> {
    params.check(failed)?;
    let d = params.d();
    if helpers.len() != d || rows.len() != d {
        return Err(Error::LengthMismatch {
            expected: d,
            got: helpers.len().min(rows.len()),
        });
    }
    for (q, &j) in helpers.iter().enumerate() {
        params.check(j)?;
        if j == failed {
            return Err(Error::Repair(format!("node {j} cannot help itself")));
        }
        if helpers[..q].contains(&j) {
            return Err(Error::DuplicateIndex(j));
        }
    }
    let gf = params.gf();
    let a = params.alpha();
    let phi = params.powers(failed, a);
    let symbols: Vec<u32> = rows.iter().map(|r| gf.dot(r, &phi)).collect();
    let pts: Vec<u32> = helpers.iter().map(|&j| params.point(j)).collect();
    let psi = vandermonde(gf, &pts, d)?;
    let x = solve_vec(gf, &psi, &symbols)?;
    // x = (S1 phi^T; S2 phi^T); symmetry turns each half into a row.
    let lam = params.lambda(failed);
    let row = (0..a).map(|c| gf.mul_add(x[c], lam, x[a + c])).collect();
    Ok(MsrRepair {
        row,
        downloads: symbols.len(),
    })
}

/// Recovers the `k(k-1)` message symbols from any `k` nodes.
pub fn msr_reconstruct(params: &MsrParams, nodes: &[usize], rows: &[Vec<u32>]) -> Result<Vec<u32>> {
    let k = params.k();
    if nodes.len() != k || rows.len() != k {
        return Err(Error::NotEnoughShards {
            needed: k,
            got: nodes.len().min(rows.len()),
        });
    }
    for (q, &i) in nodes.iter().enumerate() {
        params.check(i)?;
        if nodes[..q].contains(&i) {
            return Err(Error::DuplicateIndex(i));
        }
    }
    let pts: Vec<u32> = nodes.iter().map(|&i| params.point(i)).collect();
    let lambda: Vec<u32> = nodes.iter().map(|&i| params.lambda(i)).collect();
    let decoder = PairDecoder::for_points(params.gf(), &pts, lambda)?;
    let (s1, s2) = decoder.decode(&Matrix::from_rows(rows))?;
    let mut out = s1.unpack().to_vec();
    out.extend_from_slice(s2.unpack());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn subsets(items: &[usize], size: usize) -> Vec<Vec<usize>> {
        if size == 0 {
            return vec![vec![]];
        }
        if items.len() < size {
            return vec![];
        }
        let mut with: Vec<Vec<usize>> = subsets(&items[1..], size - 1)
            .into_iter()
            .map(|mut s| {
                s.insert(0, items[0]);
                s
            })
            .collect();
        with.extend(subsets(&items[1..], size));
        with
    }

    #[test]
    fn dimensions() {
        let p = MsrParams::new(6, 3).unwrap();
        assert_eq!((p.d(), p.alpha(), p.message_len()), (4, 2, 6));
        assert!(MsrParams::new(4, 3).is_err());
        assert!(MsrParams::new(6, 1).is_err());
    }

    #[test]
    fn zero_and_identity() {
        let p = MsrParams::new(6, 3).unwrap();
        for row in msr_encode(&p, &[0; 6]).unwrap() {
            assert_eq!(row, vec![0, 0]);
        }
        let rows = msr_encode(&p, &[1, 0, 1, 0, 0, 0]).unwrap();
        for i in 1..=6 {
            assert_eq!(rows[i - 1], p.powers(i, 2));
        }
        let helpers = [2, 3, 4, 5];
        let hr: Vec<Vec<u32>> = helpers.iter().map(|&j| rows[j - 1].clone()).collect();
        assert_eq!(msr_repair(&p, 1, &helpers, &hr).unwrap().row, p.powers(1, 2));
        assert!(msr_encode(&p, &[0; 5]).is_err());
    }

    #[test]
    fn exhaustive_repair_and_reconstruct() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for (n, k) in [(6, 3), (5, 3), (7, 4), (4, 2)] {
            let p = MsrParams::new(n, k).unwrap();
            let all: Vec<usize> = (1..=n).collect();
            for _ in 0..5 {
                let msg: Vec<u32> = (0..p.message_len())
                    .map(|_| rng.gen_range(0..p.gf().modulus()))
                    .collect();
                let rows = msr_encode(&p, &msg).unwrap();
                for failed in 1..=n {
                    let others: Vec<usize> = all.iter().copied().filter(|&j| j != failed).collect();
                    for hs in subsets(&others, p.d()) {
                        let hr: Vec<Vec<u32>> = hs.iter().map(|&j| rows[j - 1].clone()).collect();
                        let out = msr_repair(&p, failed, &hs, &hr).unwrap();
                        assert_eq!(out.row, rows[failed - 1]);
                        assert_eq!(out.downloads, p.d());
                    }
                }
                for set in subsets(&all, k) {
                    let sr: Vec<Vec<u32>> = set.iter().map(|&i| rows[i - 1].clone()).collect();
                    assert_eq!(msr_reconstruct(&p, &set, &sr).unwrap(), msg);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = MsrParams::new(6, 3).unwrap();
        let rows = msr_encode(&p, &[1, 2, 3, 4, 5, 6]).unwrap();
        assert!(matches!(
            msr_reconstruct(&p, &[1, 1, 2], &rows[..3]),
            Err(Error::DuplicateIndex(1))
        ));
        assert!(msr_repair(&p, 1, &[1, 2, 3, 4], &rows[..4]).is_err());
        assert!(msr_repair(&p, 1, &[2, 3, 4], &rows[..3]).is_err());
    }
}
