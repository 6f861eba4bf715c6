//! Systematic shortened codec: the public encode/decode path.
//!
//! The outer message `m_1..m_k` is extended with `delta` zero blocks to give
//! `k_inner` inner blocks. The message matrix is chosen so that inner node `j`
//! stores block `j` verbatim (solved with the reconstruction decoder), then the
//! `delta` all-zero inner nodes are punctured. Outer node `j <= k` therefore
//! stores `m_j`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{inverse, Matrix};
use crate::params::CodeParams;
use crate::product_matrix::{build_generator, encode_matrix, MessageMatrix, Shard};
use crate::reconstruct::{decoder_for, stack_rows, PairDecoder};

/// One stripe of `B = k * alpha` message symbols.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OuterMessage(Vec<u32>);

impl OuterMessage {
    pub fn new(params: &CodeParams, symbols: Vec<u32>) -> Result<Self> {
        if symbols.len() != params.message_len() {
            return Err(Error::LengthMismatch {
                expected: params.message_len(),
                got: symbols.len(),
            });
        }
        if let Some(&v) = symbols.iter().find(|&&v| v >= params.modulus()) {
            return Err(Error::SymbolOutOfRange {
                value: v,
                modulus: params.modulus(),
            });
        }
        Ok(OuterMessage(symbols))
    }

    pub fn zeros(params: &CodeParams) -> Self {
        OuterMessage(vec![0; params.message_len()])
    }

    pub fn symbols(&self) -> &[u32] {
        &self.0
    }

    pub fn into_symbols(self) -> Vec<u32> {
        self.0
    }
}

/// The message matrix whose encoding puts row `j` of `blocks` on inner node
/// `j`, for `j = 1..=k_inner`.
pub fn systematic_message_matrix(params: &CodeParams, blocks: &Matrix) -> Result<MessageMatrix> {
    SystematicEncoder::new(params)?.solve_message(blocks)
}

/// Reusable systematic encoder for one parameter set.
#[derive(Clone, Debug)]
pub struct SystematicEncoder {
    params: CodeParams,
    generator: Matrix,
    decoder: PairDecoder,
}

impl SystematicEncoder {
    pub fn new(params: &CodeParams) -> Result<Self> {
        let inner: Vec<usize> = (1..=params.k_inner()).collect();
        let points: Vec<u32> = inner.iter().map(|&i| params.point(i)).collect();
        let lambda: Vec<u32> = inner.iter().map(|&i| params.lambda(i)).collect();
        Ok(SystematicEncoder {
            params: params.clone(),
            generator: build_generator(params),
            decoder: PairDecoder::for_points(params.gf(), &points, lambda)?,
        })
    }

    pub fn params(&self) -> &CodeParams {
        &self.params
    }

    pub fn generator(&self) -> &Matrix {
        &self.generator
    }

    fn solve_message(&self, blocks: &Matrix) -> Result<MessageMatrix> {
        let (s, t) = self.decoder.decode(blocks)?;
        MessageMatrix::from_parts(&self.params, s, t)
    }

    /// Message matrix for one outer stripe (`B` symbols).
    pub fn message_matrix(&self, message: &[u32]) -> Result<MessageMatrix> {
        let p = &self.params;
        if message.len() != p.message_len() {
            return Err(Error::LengthMismatch {
                expected: p.message_len(),
                got: message.len(),
            });
        }
        let mut data = vec![0u32; p.delta() * p.alpha()];
        data.extend_from_slice(message);
        self.solve_message(&Matrix::new(p.k_inner(), p.alpha(), data)?)
    }

    /// All `n_inner` rows, imaginary nodes included.
    pub fn inner_codeword(&self, message: &[u32]) -> Result<Matrix> {
        let m = self.message_matrix(message)?;
        Ok(encode_matrix(&self.params, &self.generator, &m))
    }

    /// The `n x alpha` outer codeword for one stripe.
    pub fn encode_stripe(&self, message: &[u32]) -> Result<Matrix> {
        let c = self.inner_codeword(message)?;
        let delta = self.params.delta();
        debug_assert!((0..delta).all(|i| c.row(i).iter().all(|&x| x == 0)));
        Ok(c.select_rows(&(delta..self.params.n_inner()).collect::<Vec<_>>()))
    }

    /// Content of outer node `outer` under message matrix `m`.
    pub fn node_row(&self, m: &MessageMatrix, outer: usize) -> Vec<u32> {
        let inner = self.params.inner_index(outer);
        m.matrix().vec_mul(self.params.gf(), self.generator.row(inner - 1))
    }
}

/// Multi-stripe systematic codec.
///
/// Bulk encoding and decoding run through precomputed linear maps: the
/// parity map is read off the product-matrix encoder one unit message at a
/// time, and a read set's decoding map is the inverse of the encoding map
/// restricted to it. The `*_structured` methods run the product-matrix
/// encoder and pair decoder on every stripe instead; both give identical
/// output.
#[derive(Clone, Debug)]
pub struct Codec {
    encoder: SystematicEncoder,
    /// `(n-k)*alpha x B`: parity symbols of nodes `k+1..=n` from the message.
    parity_map: Matrix,
}

struct ReadSet<'a> {
    sorted: Vec<&'a Shard>,
    indices: Vec<usize>,
    stripes: usize,
}

impl Codec {
    pub fn new(params: &CodeParams) -> Result<Self> {
        let encoder = SystematicEncoder::new(params)?;
        let (k, n, alpha, b) = (params.k(), params.n(), params.alpha(), params.message_len());
        let mut parity_map = Matrix::zeros((n - k) * alpha, b);
        let mut unit = vec![0u32; b];
        for col in 0..b {
            unit[col] = 1;
            let c = encoder.encode_stripe(&unit)?;
            unit[col] = 0;
            for node in k..n {
                for a in 0..alpha {
                    parity_map[((node - k) * alpha + a, col)] = c[(node, a)];
                }
            }
        }
        Ok(Codec { encoder, parity_map })
    }

    pub fn params(&self) -> &CodeParams {
        &self.encoder.params
    }

    pub fn encoder(&self) -> &SystematicEncoder {
        &self.encoder
    }

    fn check_data(&self, data: &[u32]) -> Result<()> {
        let p = self.params();
        let b = p.message_len();
        if !data.len().is_multiple_of(b) {
            return Err(Error::LengthMismatch {
                expected: data.len().div_ceil(b) * b,
                got: data.len(),
            });
        }
        if let Some(&v) = data.iter().find(|&&v| v >= p.modulus()) {
            return Err(Error::SymbolOutOfRange {
                value: v,
                modulus: p.modulus(),
            });
        }
        Ok(())
    }

    fn shards_from_rows<'a>(&self, stripes: usize, row: impl Fn(usize, usize) -> &'a [u32]) -> Vec<Shard> {
        let p = self.params();
        (0..p.n())
            .map(|i| {
                let mut symbols = Vec::with_capacity(stripes * p.alpha());
                for s in 0..stripes {
                    symbols.extend_from_slice(row(s, i));
                }
                Shard {
                    index: i + 1,
                    symbols,
                    params: p.digest(),
                }
            })
            .collect()
    }

    /// Encodes `data.len() / B` stripes into `n` shards.
    pub fn encode(&self, data: &[u32]) -> Result<Vec<Shard>> {
        self.check_data(data)?;
        let p = self.params();
        let (b, alpha, k) = (p.message_len(), p.alpha(), p.k());
        let width = (p.n() - k) * alpha;
        let stripes = data.len() / b;
        let gf = p.gf();
        let mut parity = vec![0u32; stripes * width];
        parity
            .par_chunks_mut(width.max(1))
            .zip(data.par_chunks(b))
            .for_each(|(out, m)| self.parity_map.mul_vec_into(gf, m, out));
        Ok(self.shards_from_rows(stripes, |s, i| {
            if i < k {
                &data[s * b + i * alpha..s * b + (i + 1) * alpha]
            } else {
                let o = s * width + (i - k) * alpha;
                &parity[o..o + alpha]
            }
        }))
    }

    /// [`Codec::encode`] through the product-matrix encoder on every stripe.
    pub fn encode_structured(&self, data: &[u32]) -> Result<Vec<Shard>> {
        self.check_data(data)?;
        let stripes: Vec<Matrix> = data
            .par_chunks(self.params().message_len())
            .map(|m| self.encoder.encode_stripe(m))
            .collect::<Result<_>>()?;
        Ok(self.shards_from_rows(stripes.len(), |s, i| stripes[s].row(i)))
    }

    fn read_set<'a>(&self, shards: &'a [Shard]) -> Result<ReadSet<'a>> {
        let p = self.params();
        let alpha = p.alpha();
        let mut sorted: Vec<&Shard> = shards.iter().collect();
        sorted.sort_by_key(|s| s.index);
        let indices: Vec<usize> = sorted.iter().map(|s| s.index).collect();
        crate::reconstruct::check_indices(p, &indices)?;
        let stripes = sorted[0].symbols.len() / alpha;
        for s in &sorted {
            if s.params != p.digest() {
                return Err(Error::Header(format!("shard {} belongs to a different code", s.index)));
            }
            if s.symbols.len() != stripes * alpha {
                return Err(Error::LengthMismatch {
                    expected: stripes * alpha,
                    got: s.symbols.len(),
                });
            }
        }
        Ok(ReadSet {
            sorted,
            indices,
            stripes,
        })
    }

    /// Rows of the outer encoding map (`alpha` per node) for `nodes`.
    fn encoding_rows(&self, nodes: &[usize]) -> Matrix {
        let p = self.params();
        let (k, alpha, b) = (p.k(), p.alpha(), p.message_len());
        let mut out = Matrix::zeros(nodes.len() * alpha, b);
        for (q, &node) in nodes.iter().enumerate() {
            for a in 0..alpha {
                if node <= k {
                    out[(q * alpha + a, (node - 1) * alpha + a)] = 1;
                } else {
                    out.row_mut(q * alpha + a)
                        .copy_from_slice(self.parity_map.row((node - k - 1) * alpha + a));
                }
            }
        }
        out
    }

    /// Shards `1..=k` hold the message verbatim. The first extra shard, if
    /// any, is checked against them.
    fn decode_systematic_set(
        &self,
        rs: &ReadSet,
        check: impl Fn(&[u32], &Shard, usize) -> Result<bool> + Sync,
    ) -> Result<Vec<u32>> {
        let p = self.params();
        let (k, alpha) = (p.k(), p.alpha());
        let parity = rs.sorted.get(k).copied();
        let out: Vec<Vec<u32>> = (0..rs.stripes)
            .into_par_iter()
            .map(|s| {
                let mut msg = Vec::with_capacity(k * alpha);
                for sh in &rs.sorted[..k] {
                    msg.extend_from_slice(sh.stripe(alpha, s));
                }
                if let Some(par) = parity {
                    if !check(&msg, par, s)? {
                        return Err(Error::Inconsistent { index: par.index });
                    }
                }
                Ok(msg)
            })
            .collect::<Result<_>>()?;
        Ok(out.concat())
    }

    fn is_systematic(&self, rs: &ReadSet) -> bool {
        let k = self.params().k();
        rs.indices[..k].iter().copied().eq(1..=k)
    }

    /// Decodes from any `k` or more distinct shards.
    ///
    /// If shards `1..=k` are all present their contents are the message; one
    /// extra parity shard, when supplied, is checked against them. Otherwise
    /// the `k` lowest-indexed shards are decoded.
    pub fn decode(&self, shards: &[Shard]) -> Result<Vec<u32>> {
        let rs = self.read_set(shards)?;
        let p = self.params();
        let (k, alpha, b) = (p.k(), p.alpha(), p.message_len());
        let gf = p.gf();
        if self.is_systematic(&rs) {
            return self.decode_systematic_set(&rs, |msg, par, s| {
                let rows = self.encoding_rows(&[par.index]);
                Ok(rows.mul_vec(gf, msg) == par.stripe(alpha, s))
            });
        }
        let chosen = &rs.sorted[..k];
        let map = inverse(gf, &self.encoding_rows(&rs.indices[..k]))?;
        let mut out = vec![0u32; rs.stripes * b];
        out.par_chunks_mut(b).enumerate().for_each(|(s, dst)| {
            let mut x = Vec::with_capacity(k * alpha);
            for sh in chosen {
                x.extend_from_slice(sh.stripe(alpha, s));
            }
            map.mul_vec_into(gf, &x, dst);
        });
        Ok(out)
    }

    /// [`Codec::decode`] through the pair decoder on every stripe.
    pub fn decode_structured(&self, shards: &[Shard]) -> Result<Vec<u32>> {
        let rs = self.read_set(shards)?;
        let p = self.params();
        let (k, alpha) = (p.k(), p.alpha());
        if self.is_systematic(&rs) {
            return self.decode_systematic_set(&rs, |msg, par, s| {
                let m = self.encoder.message_matrix(msg)?;
                Ok(self.encoder.node_row(&m, par.index) == par.stripe(alpha, s))
            });
        }
        let chosen = &rs.sorted[..k];
        let decoder = decoder_for(p, &rs.indices[..k])?;
        let gf = p.gf();
        let sys_rows = self
            .encoder
            .generator
            .select_rows(&(p.delta()..p.k_inner()).collect::<Vec<_>>());
        let out: Vec<Vec<u32>> = (0..rs.stripes)
            .into_par_iter()
            .map(|s| {
                let rows: Vec<&[u32]> = chosen.iter().map(|sh| sh.stripe(alpha, s)).collect();
                let x = stack_rows(p, &rows)?;
                let (st, tt) = decoder.decode(&x)?;
                let m = MessageMatrix::from_parts(p, st, tt)?;
                Ok(sys_rows.mul(gf, m.matrix())?.into_data())
            })
            .collect::<Result<_>>()?;
        Ok(out.concat())
    }
}

/// Encodes one stripe into `n` shards; outer nodes `1..=k` hold the message.
pub fn encode_systematic(params: &CodeParams, message: &OuterMessage) -> Result<Vec<Shard>> {
    Codec::new(params)?.encode_structured(message.symbols())
}

/// Decodes one stripe from any `k` or more shards.
pub fn decode_systematic(params: &CodeParams, shards: &[Shard]) -> Result<OuterMessage> {
    let symbols = Codec::new(params)?.decode_structured(shards)?;
    OuterMessage::new(params, symbols)
}
