//! Data reconstruction.
//!
//! Reading `k'` nodes gives `X = Phi*S + Delta*Phi*T` with `Phi` a
//! `k' x (k'-1)` Vandermonde matrix, `Delta = diag(lambda_i)` with distinct
//! nonzero `lambda_i`, and `S`, `T` symmetric. [`PairDecoder`] recovers `S`
//! and `T`:
//!
//! 1. `X * Phi^T = A + Delta*B` with `A = Phi*S*Phi^T`, `B = Phi*T*Phi^T`
//!    both symmetric.
//! 2. Entries `(i,j)` and `(j,i)` give `a_ij + lambda_i b_ij` and
//!    `a_ij + lambda_j b_ij`, a 2x2 system solvable since `lambda_i != lambda_j`.
//!    Diagonal entries are never needed.
//! 3. Row `i` of `Phi*S` is determined by the `k'-1` values `a_ij`, `j != i`,
//!    through the Vandermonde rows of the other points.
//! 4. `S` follows from `k'-1` rows of `Phi*S`. Same for `T` from `B`.
//!
//! Steps 3 and 4 always use rows `0..k'-1` of the read set.

use crate::error::{Error, Result};
use crate::field::Gf;
use crate::linalg::{inverse, vandermonde, Matrix, SymmetricMatrix};
use crate::params::CodeParams;
use crate::product_matrix::MessageMatrix;

/// Precomputed decoder for a fixed read set. Decoding a stripe is then a
/// handful of matrix-vector products.
#[derive(Clone, Debug)]
pub struct PairDecoder {
    gf: Gf,
    phi: Matrix,
    lambda: Vec<u32>,
    /// `1 / (lambda_i - lambda_j)` for `i < j`, row-major over the square.
    diff_inv: Matrix,
    /// For each `i < k'-1`: inverse of `Phi` with row `i` removed.
    row_solvers: Vec<Matrix>,
    /// Inverse of the first `k'-1` rows of `Phi`.
    top_inverse: Matrix,
}

impl PairDecoder {
    pub fn new(gf: Gf, phi: Matrix, lambda: Vec<u32>) -> Result<Self> {
        let kp = phi.rows();
        if kp < 2 || phi.cols() != kp - 1 {
            return Err(Error::Dimension(format!(
                "Phi must be k' x (k'-1) with k' >= 2, got {}x{}",
                kp,
                phi.cols()
            )));
        }
        if lambda.len() != kp {
            return Err(Error::LengthMismatch {
                expected: kp,
                got: lambda.len(),
            });
        }
        let mut diff_inv = Matrix::zeros(kp, kp);
        for i in 0..kp {
            if lambda[i] == 0 {
                return Err(Error::InvalidPoints("lambda values must be nonzero".into()));
            }
            for j in i + 1..kp {
                let d = gf.sub(lambda[i], lambda[j]);
                if d == 0 {
                    return Err(Error::InvalidPoints(format!(
                        "lambda values repeat at positions {i} and {j}"
                    )));
                }
                diff_inv[(i, j)] = gf.inv(d)?;
            }
        }
        let alpha = kp - 1;
        let row_solvers = (0..alpha)
            .map(|i| {
                let others: Vec<usize> = (0..kp).filter(|&j| j != i).collect();
                inverse(gf, &phi.select_rows(&others))
            })
            .collect::<Result<Vec<_>>>()?;
        let top_inverse = inverse(gf, &phi.select_rows(&(0..alpha).collect::<Vec<_>>()))?;
        Ok(PairDecoder {
            gf,
            phi,
            lambda,
            diff_inv,
            row_solvers,
            top_inverse,
        })
    }

    /// Decoder for the Vandermonde rows of `points`.
    pub fn for_points(gf: Gf, points: &[u32], lambda: Vec<u32>) -> Result<Self> {
        let phi = vandermonde(gf, points, points.len().saturating_sub(1))?;
        Self::new(gf, phi, lambda)
    }

    pub fn read_set_size(&self) -> usize {
        self.phi.rows()
    }

    /// Recovers `(S, T)` from `X`. Fails if `X` is not of the form
    /// `Phi*S + Delta*Phi*T` with symmetric `S`, `T`.
    pub fn decode(&self, x: &Matrix) -> Result<(SymmetricMatrix, SymmetricMatrix)> {
        let gf = self.gf;
        let kp = self.phi.rows();
        let alpha = kp - 1;
        if x.rows() != kp || x.cols() != alpha {
            return Err(Error::Dimension(format!(
                "X must be {kp}x{alpha}, got {}x{}",
                x.rows(),
                x.cols()
            )));
        }
        // Step 1.
        let y = x.mul(gf, &self.phi.transpose())?;

        // Step 2: off-diagonal entries of A and B.
        let mut a = Matrix::zeros(kp, kp);
        let mut b = Matrix::zeros(kp, kp);
        for i in 0..kp {
            for j in i + 1..kp {
                let bij = gf.mul(gf.sub(y[(i, j)], y[(j, i)]), self.diff_inv[(i, j)]);
                let aij = gf.sub(y[(i, j)], gf.mul(self.lambda[i], bij));
                a[(i, j)] = aij;
                a[(j, i)] = aij;
                b[(i, j)] = bij;
                b[(j, i)] = bij;
            }
        }

        let s = self.recover_symmetric(&a)?;
        let t = self.recover_symmetric(&b)?;
        Ok((s, t))
    }

    /// Steps 3-4 for one of `A`, `B`.
    fn recover_symmetric(&self, a: &Matrix) -> Result<SymmetricMatrix> {
        let gf = self.gf;
        let kp = self.phi.rows();
        let alpha = kp - 1;
        let mut phi_s = Matrix::zeros(alpha, alpha);
        for (i, solver) in self.row_solvers.iter().enumerate() {
            let rhs: Vec<u32> = (0..kp).filter(|&j| j != i).map(|j| a[(i, j)]).collect();
            let row = solver.mul_vec(gf, &rhs);
            phi_s.row_mut(i).copy_from_slice(&row);
        }
        let s = self.top_inverse.mul(gf, &phi_s)?;
        SymmetricMatrix::from_matrix(&s)
            .map_err(|_| Error::Dimension("input is not a codeword: recovered matrix is not symmetric".into()))
    }
}

/// One-shot form of [`PairDecoder::decode`].
pub fn decode_pair(gf: Gf, x: &Matrix, phi: &Matrix, lambda: &[u32]) -> Result<(SymmetricMatrix, SymmetricMatrix)> {
    PairDecoder::new(gf, phi.clone(), lambda.to_vec())?.decode(x)
}

/// Rows read from `k` outer nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReconstructionInput {
    pub node_indices: Vec<usize>,
    pub rows: Vec<Vec<u32>>,
}

/// Inner read set for `outer` plus the imaginary zero nodes `1..=delta`.
pub(crate) fn inner_read_set(params: &CodeParams, outer: &[usize]) -> Vec<usize> {
    (1..=params.delta())
        .chain(outer.iter().map(|&o| params.inner_index(o)))
        .collect()
}

/// Decoder for a set of `k` outer nodes, imaginary nodes included.
pub fn decoder_for(params: &CodeParams, outer: &[usize]) -> Result<PairDecoder> {
    check_indices(params, outer)?;
    if outer.len() != params.k() {
        return Err(Error::LengthMismatch {
            expected: params.k(),
            got: outer.len(),
        });
    }
    let inner = inner_read_set(params, outer);
    let points: Vec<u32> = inner.iter().map(|&i| params.point(i)).collect();
    let lambda: Vec<u32> = inner.iter().map(|&i| params.lambda(i)).collect();
    PairDecoder::for_points(params.gf(), &points, lambda)
}

pub(crate) fn check_indices(params: &CodeParams, outer: &[usize]) -> Result<()> {
    if outer.len() < params.k() {
        return Err(Error::NotEnoughShards {
            needed: params.k(),
            got: outer.len(),
        });
    }
    for (pos, &i) in outer.iter().enumerate() {
        params.check_outer(i)?;
        if outer[..pos].contains(&i) {
            return Err(Error::DuplicateIndex(i));
        }
    }
    Ok(())
}

/// Builds the `k_inner x alpha` matrix `X` for `decoder_for(params, outer)`.
pub(crate) fn stack_rows(params: &CodeParams, rows: &[&[u32]]) -> Result<Matrix> {
    let alpha = params.alpha();
    let mut data = vec![0u32; params.delta() * alpha];
    for r in rows {
        if r.len() != alpha {
            return Err(Error::LengthMismatch {
                expected: alpha,
                got: r.len(),
            });
        }
        data.extend_from_slice(r);
    }
    Matrix::new(params.delta() + rows.len(), alpha, data)
}

/// Recovers the message matrix from `k` outer nodes. With `delta > 0` this
/// assumes the imaginary nodes hold zeros, i.e. the codeword came from the
/// systematic encoder.
pub fn reconstruct_matrix(params: &CodeParams, input: &ReconstructionInput) -> Result<MessageMatrix> {
    if input.rows.len() != input.node_indices.len() {
        return Err(Error::LengthMismatch {
            expected: input.node_indices.len(),
            got: input.rows.len(),
        });
    }
    check_indices(params, &input.node_indices)?;
    let k = params.k();
    let idx = &input.node_indices[..k];
    let rows: Vec<&[u32]> = input.rows[..k].iter().map(Vec::as_slice).collect();
    let x = stack_rows(params, &rows)?;
    let (s, t) = decoder_for(params, idx)?.decode(&x)?;
    MessageMatrix::from_parts(params, s, t)
}

/// The `S`-then-`T` symbol layout of the recovered message matrix
/// (`k_inner * alpha` symbols).
pub fn reconstruct_message(params: &CodeParams, input: &ReconstructionInput) -> Result<Vec<u32>> {
    Ok(reconstruct_matrix(params, input)?.symbols())
}
