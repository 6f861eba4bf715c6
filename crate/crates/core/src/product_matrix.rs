//! Product-matrix encoding: codeword `C = G * M`.
//!
//! `G` is the `n' x d'` Vandermonde matrix on the field points. `M` is built
//! from two symmetric `alpha x alpha` matrices `S` and `T`: `S` fills rows
//! `1..=alpha`, `T` fills rows `mu+1..=d'`, and the `t-1` rows where they
//! overlap hold `S`-row plus `T`-row. Node `i` stores
//! `psi_i * M = phi_i * S + lambda_i * phi_i * T` where `lambda_i = x_i^mu`.

use crate::error::{Error, Result};
use crate::linalg::{triangle_len, vandermonde, Matrix, SymmetricMatrix};
use crate::params::{CodeParams, ParamsDigest};

/// The `n_inner x d_inner` generator.
pub fn build_generator(params: &CodeParams) -> Matrix {
    vandermonde(params.gf(), params.field().points(), params.d_inner()).expect("field points are distinct")
}

/// `(1, x_i, ..., x_i^(alpha-1))` for inner node `inner` (1-based).
pub fn build_repair_vector(params: &CodeParams, inner: usize) -> Result<Vec<u32>> {
    if inner == 0 || inner > params.n_inner() {
        return Err(Error::IndexOutOfRange {
            index: inner,
            max: params.n_inner(),
        });
    }
    Ok(powers(params, inner, params.alpha()))
}

/// Row `inner` of the generator.
pub fn generator_row(params: &CodeParams, inner: usize) -> Vec<u32> {
    powers(params, inner, params.d_inner())
}

fn powers(params: &CodeParams, inner: usize, len: usize) -> Vec<u32> {
    let gf = params.gf();
    let x = params.point(inner);
    let mut acc = 1;
    (0..len)
        .map(|_| {
            let v = acc;
            acc = gf.mul(acc, x);
            v
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MessageMatrix {
    s: SymmetricMatrix,
    t: SymmetricMatrix,
    m: Matrix,
}

impl MessageMatrix {
    pub fn from_parts(params: &CodeParams, s: SymmetricMatrix, t: SymmetricMatrix) -> Result<Self> {
        let alpha = params.alpha();
        if s.dim() != alpha || t.dim() != alpha {
            return Err(Error::Dimension(format!(
                "S and T must be {alpha}x{alpha}, got {} and {}",
                s.dim(),
                t.dim()
            )));
        }
        let gf = params.gf();
        let mu = params.mu();
        let mut m = Matrix::zeros(params.d_inner(), alpha);
        let sm = s.to_matrix();
        let tm = t.to_matrix();
        for i in 0..alpha {
            for j in 0..alpha {
                m[(i, j)] = sm[(i, j)];
            }
        }
        for i in 0..alpha {
            for j in 0..alpha {
                let v = gf.add(m[(mu + i, j)], tm[(i, j)]);
                m[(mu + i, j)] = v;
            }
        }
        Ok(MessageMatrix { s, t, m })
    }

    /// `S`'s triangle first, then `T`'s, `k_inner * alpha` symbols in all.
    pub fn pack(params: &CodeParams, symbols: &[u32]) -> Result<Self> {
        let half = triangle_len(params.alpha());
        if symbols.len() != 2 * half {
            return Err(Error::LengthMismatch {
                expected: 2 * half,
                got: symbols.len(),
            });
        }
        for &v in symbols {
            if v >= params.modulus() {
                return Err(Error::SymbolOutOfRange {
                    value: v,
                    modulus: params.modulus(),
                });
            }
        }
        let s = SymmetricMatrix::pack(params.alpha(), &symbols[..half])?;
        let t = SymmetricMatrix::pack(params.alpha(), &symbols[half..])?;
        Self::from_parts(params, s, t)
    }

    pub fn zeros(params: &CodeParams) -> Self {
        let z = SymmetricMatrix::zeros(params.alpha());
        Self::from_parts(params, z.clone(), z).expect("dimensions match")
    }

    pub fn symbols(&self) -> Vec<u32> {
        let mut v = self.s.unpack().to_vec();
        v.extend_from_slice(self.t.unpack());
        v
    }

    pub fn s(&self) -> &SymmetricMatrix {
        &self.s
    }

    pub fn t(&self) -> &SymmetricMatrix {
        &self.t
    }

    pub fn matrix(&self) -> &Matrix {
        &self.m
    }
}

/// One node's content: `alpha` symbols per stripe, stripes concatenated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Shard {
    pub index: usize,
    pub symbols: Vec<u32>,
    pub params: ParamsDigest,
}

impl Shard {
    pub fn stripe_count(&self, alpha: usize) -> usize {
        self.symbols.len() / alpha
    }

    pub fn stripe(&self, alpha: usize, s: usize) -> &[u32] {
        &self.symbols[s * alpha..(s + 1) * alpha]
    }
}

/// `G * M`, one row per inner node.
pub fn encode_matrix(params: &CodeParams, generator: &Matrix, m: &MessageMatrix) -> Matrix {
    generator
        .mul(params.gf(), m.matrix())
        .expect("generator has d_inner columns")
}

/// Non-systematic encoding of one stripe into all `n_inner` inner nodes.
/// Shard indices are inner indices.
pub fn encode_raw(params: &CodeParams, m: &MessageMatrix) -> Vec<Shard> {
    let c = encode_matrix(params, &build_generator(params), m);
    (0..params.n_inner())
        .map(|i| Shard {
            index: i + 1,
            symbols: c.row(i).to_vec(),
            params: params.digest(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::derive_params;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn worked() -> CodeParams {
        derive_params(5, 3, 3, 2, None).unwrap()
    }

    #[test]
    fn generator_and_repair_vectors() {
        let p = worked();
        let g = build_generator(&p);
        assert_eq!((g.rows(), g.cols()), (5, 3));
        assert_eq!(g.row(2), &[1, 3, 2]);
        assert_eq!(build_repair_vector(&p, 1).unwrap(), vec![1, 1]);
        assert_eq!(build_repair_vector(&p, 2).unwrap(), vec![1, 2]);
        assert_eq!(build_repair_vector(&p, 3).unwrap(), vec![1, 3]);
        assert!(build_repair_vector(&p, 6).is_err());
        for i in 1..=5 {
            assert_eq!(&g.row(i - 1)[..2], &build_repair_vector(&p, i).unwrap()[..]);
        }
    }

    #[test]
    fn any_d_rows_of_generator_invertible() {
        let p = worked();
        let g = build_generator(&p);
        let gf = p.gf();
        for a in 0..5 {
            for b in a + 1..5 {
                for c in b + 1..5 {
                    let sub = g.select_rows(&[a, b, c]);
                    assert_ne!(crate::linalg::determinant(gf, &sub).unwrap(), 0);
                }
            }
        }
    }

    #[test]
    fn pack_worked_example() {
        let p = worked();
        let m = MessageMatrix::pack(&p, &[1, 2, 3, 4, 5, 6]).unwrap();
        assert_eq!(m.s().to_matrix(), Matrix::from_rows(&[[1, 2], [2, 3]]));
        assert_eq!(m.t().to_matrix(), Matrix::from_rows(&[[4, 5], [5, 6]]));
        assert_eq!(m.matrix(), &Matrix::from_rows(&[[1, 2], [6, 1], [5, 6]]));
        assert_eq!(m.symbols(), vec![1, 2, 3, 4, 5, 6]);
        assert!(MessageMatrix::pack(&p, &[1, 2, 3]).is_err());
        assert!(MessageMatrix::pack(&p, &[1, 2, 3, 4, 5, 7]).is_err());
    }

    #[test]
    fn pack_degenerate_cases() {
        let p = worked();
        assert!(MessageMatrix::pack(&p, &[0; 6]).unwrap().matrix().is_zero());
        // S = I packed, T = 0 -> M = [S; 0]
        let m = MessageMatrix::pack(&p, &[1, 0, 1, 0, 0, 0]).unwrap();
        assert_eq!(m.matrix(), &Matrix::from_rows(&[[1, 0], [0, 1], [0, 0]]));
    }

    #[test]
    fn encode_worked_example() {
        let p = worked();
        let m = MessageMatrix::pack(&p, &[1, 2, 3, 4, 5, 6]).unwrap();
        let shards = encode_raw(&p, &m);
        assert_eq!(shards[0].symbols, vec![5, 2]);
        assert_eq!(shards[1].symbols, vec![5, 0]);
        assert_eq!(shards[2].symbols, vec![1, 3]);
        for s in encode_raw(&p, &MessageMatrix::zeros(&p)) {
            assert!(s.symbols.iter().all(|&x| x == 0));
        }
    }

    // c_i = phi_i S + lambda_i phi_i T, evaluated directly.
    #[test]
    fn node_content_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (n, k, d, t) in [(5, 3, 3, 2), (7, 4, 5, 2), (8, 3, 4, 3), (10, 4, 8, 2), (9, 5, 6, 3)] {
            let p = derive_params(n, k, d, t, None).unwrap();
            let gf = p.gf();
            for _ in 0..20 {
                let syms: Vec<u32> = (0..p.inner_message_len())
                    .map(|_| rng.gen_range(0..p.modulus()))
                    .collect();
                let m = MessageMatrix::pack(&p, &syms).unwrap();
                let shards = encode_raw(&p, &m);
                for i in 1..=p.n_inner() {
                    let phi = build_repair_vector(&p, i).unwrap();
                    let a = m.s().to_matrix().vec_mul(gf, &phi);
                    let b = m.t().to_matrix().vec_mul(gf, &phi);
                    let lam = p.lambda(i);
                    let want: Vec<u32> = a.iter().zip(&b).map(|(&x, &y)| gf.mul_add(x, lam, y)).collect();
                    assert_eq!(shards[i - 1].symbols, want);
                }
            }
        }
    }

    #[test]
    fn encode_is_linear() {
        let p = derive_params(8, 4, 6, 2, None).unwrap();
        let gf = p.gf();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut rand_msg = || -> Vec<u32> {
            (0..p.inner_message_len())
                .map(|_| rng.gen_range(0..p.modulus()))
                .collect()
        };
        let (a, b) = (rand_msg(), rand_msg());
        let sum: Vec<u32> = a.iter().zip(&b).map(|(&x, &y)| gf.add(x, y)).collect();
        let ea = encode_raw(&p, &MessageMatrix::pack(&p, &a).unwrap());
        let eb = encode_raw(&p, &MessageMatrix::pack(&p, &b).unwrap());
        let es = encode_raw(&p, &MessageMatrix::pack(&p, &sum).unwrap());
        for i in 0..p.n_inner() {
            let want: Vec<u32> = ea[i]
                .symbols
                .iter()
                .zip(&eb[i].symbols)
                .map(|(&x, &y)| gf.add(x, y))
                .collect();
            assert_eq!(es[i].symbols, want);
        }
    }
}
