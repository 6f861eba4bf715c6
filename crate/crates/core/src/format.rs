//! On-disk shard files and the manifest.
//!
//! Shard file, little-endian:
//!
//! ```text
//! "MSCR" | version u8 = 1 | n k d t u16 | modulus u32 | node u16 |
//! stripes u32 | 6 zero bytes | stripes * alpha symbols as u16
//! ```
//!
//! The manifest is `key=value` lines: `n k d t modulus length stripes checksum`.

use std::collections::BTreeMap;
use std::fs;
use std::hash::Hasher;
use std::path::{Path, PathBuf};

use fnv::FnvHasher;

use crate::error::{Error, Result};
use crate::params::{CodeParams, ParamsDigest};
use crate::product_matrix::Shard;

pub const MAGIC: &[u8; 4] = b"MSCR";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 29;
pub const MANIFEST_NAME: &str = "manifest.txt";
pub const SHARD_EXT: &str = "mscr";

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = FnvHasher::default();
    h.write(bytes);
    h.finish()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ShardHeader {
    pub params: ParamsDigest,
    pub node: usize,
    pub stripes: usize,
}

fn u16_field(name: &str, v: usize) -> Result<[u8; 2]> {
    u16::try_from(v)
        .map(u16::to_le_bytes)
        .map_err(|_| Error::Header(format!("{name} = {v} does not fit in 16 bits")))
}

impl ShardHeader {
    pub fn encode(&self) -> Result<[u8; HEADER_LEN]> {
        let mut h = [0u8; HEADER_LEN];
        h[..4].copy_from_slice(MAGIC);
        h[4] = VERSION;
        let p = &self.params;
        for (pos, (name, v)) in [("n", p.n), ("k", p.k), ("d", p.d), ("t", p.t)].into_iter().enumerate() {
            h[5 + 2 * pos..7 + 2 * pos].copy_from_slice(&u16_field(name, v)?);
        }
        h[13..17].copy_from_slice(&p.modulus.to_le_bytes());
        h[17..19].copy_from_slice(&u16_field("node", self.node)?);
        let stripes = u32::try_from(self.stripes)
            .map_err(|_| Error::Header(format!("{} stripes do not fit in 32 bits", self.stripes)))?;
        h[19..23].copy_from_slice(&stripes.to_le_bytes());
        Ok(h)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Header(format!("{} bytes is shorter than a header", bytes.len())));
        }
        if &bytes[..4] != MAGIC {
            return Err(Error::Header("bad magic".into()));
        }
        if bytes[4] != VERSION {
            return Err(Error::Header(format!("unsupported version {}", bytes[4])));
        }
        if bytes[23..HEADER_LEN].iter().any(|&b| b != 0) {
            return Err(Error::Header("reserved bytes are not zero".into()));
        }
        let u16_at = |o: usize| u16::from_le_bytes([bytes[o], bytes[o + 1]]) as usize;
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
        let header = ShardHeader {
            params: ParamsDigest {
                n: u16_at(5),
                k: u16_at(7),
                d: u16_at(9),
                t: u16_at(11),
                modulus: u32_at(13),
            },
            node: u16_at(17),
            stripes: u32_at(19) as usize,
        };
        if header.node == 0 || header.node > header.params.n {
            return Err(Error::Header(format!(
                "node index {} outside 1..={}",
                header.node, header.params.n
            )));
        }
        Ok(header)
    }
}

pub fn shard_to_bytes(shard: &Shard, alpha: usize) -> Result<Vec<u8>> {
    let header = ShardHeader {
        params: shard.params,
        node: shard.index,
        stripes: shard.stripe_count(alpha),
    };
    let mut out = Vec::with_capacity(HEADER_LEN + 2 * shard.symbols.len());
    out.extend_from_slice(&header.encode()?);
    for &s in &shard.symbols {
        let v = u16::try_from(s).map_err(|_| Error::SymbolOutOfRange {
            value: s,
            modulus: 1 << 16,
        })?;
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

/// Parses a shard file, checking the header against itself and the payload
/// length. Returns the re-derived parameters alongside.
pub fn shard_from_bytes(bytes: &[u8]) -> Result<(Shard, CodeParams)> {
    let header = ShardHeader::decode(bytes)?;
    let params = header
        .params
        .to_params()
        .map_err(|e| Error::Header(format!("inconsistent parameters: {e}")))?;
    let payload = &bytes[HEADER_LEN..];
    let want = header.stripes * params.alpha() * 2;
    if payload.len() != want {
        return Err(Error::Header(format!(
            "payload is {} bytes, header implies {want}",
            payload.len()
        )));
    }
    let symbols: Vec<u32> = payload
        .chunks_exact(2)
        .map(|c| u16::from_le_bytes([c[0], c[1]]) as u32)
        .collect();
    if let Some(&v) = symbols.iter().find(|&&v| v >= params.modulus()) {
        return Err(Error::SymbolOutOfRange {
            value: v,
            modulus: params.modulus(),
        });
    }
    Ok((
        Shard {
            index: header.node,
            symbols,
            params: header.params,
        },
        params,
    ))
}

pub fn shard_file_name(index: usize) -> String {
    format!("shard-{index:03}.{SHARD_EXT}")
}

pub fn write_shard(dir: &Path, shard: &Shard, alpha: usize) -> Result<PathBuf> {
    let path = dir.join(shard_file_name(shard.index));
    fs::write(&path, shard_to_bytes(shard, alpha)?)?;
    Ok(path)
}

pub fn read_shard(path: &Path) -> Result<(Shard, CodeParams)> {
    shard_from_bytes(&fs::read(path)?)
}

/// Every `*.mscr` file in `dir`, sorted by name.
pub fn shard_paths(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == SHARD_EXT) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Manifest {
    pub params: ParamsDigest,
    pub length: u64,
    pub stripes: usize,
    pub checksum: u64,
}

impl Manifest {
    pub fn render(&self) -> String {
        let p = &self.params;
        format!(
            "n={}\nk={}\nd={}\nt={}\nmodulus={}\nlength={}\nstripes={}\nchecksum={:016x}\n",
            p.n, p.k, p.d, p.t, p.modulus, self.length, self.stripes, self.checksum
        )
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = BTreeMap::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Manifest(format!("line {line:?} is not key=value")))?;
            if kv.insert(k.trim(), v.trim()).is_some() {
                return Err(Error::Manifest(format!("key {k} repeated")));
            }
        }
        let get = |key: &str| -> Result<&str> {
            kv.get(key)
                .copied()
                .ok_or_else(|| Error::Manifest(format!("missing key {key}")))
        };
        let num = |key: &str| -> Result<u64> {
            get(key)?
                .parse()
                .map_err(|_| Error::Manifest(format!("{key} is not a number")))
        };
        let checksum =
            u64::from_str_radix(get("checksum")?, 16).map_err(|_| Error::Manifest("checksum is not hex".into()))?;
        Ok(Manifest {
            params: ParamsDigest {
                n: num("n")? as usize,
                k: num("k")? as usize,
                d: num("d")? as usize,
                t: num("t")? as usize,
                modulus: u32::try_from(num("modulus")?).map_err(|_| Error::Manifest("modulus too large".into()))?,
            },
            length: num("length")?,
            stripes: num("stripes")? as usize,
            checksum,
        })
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST_NAME);
        fs::write(&path, self.render())?;
        Ok(path)
    }

    pub fn read(dir: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(dir.join(MANIFEST_NAME))?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::derive_params;

    #[test]
    fn fnv_reference_vectors() {
        assert_eq!(fnv1a64(b""), 14695981039346656037);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn header_layout() {
        let h = ShardHeader {
            params: ParamsDigest {
                n: 8,
                k: 4,
                d: 6,
                t: 2,
                modulus: 257,
            },
            node: 3,
            stripes: 0x0102_0304,
        };
        let b = h.encode().unwrap();
        assert_eq!(&b[..5], b"MSCR\x01");
        assert_eq!(&b[5..13], &[8, 0, 4, 0, 6, 0, 2, 0]);
        assert_eq!(&b[13..17], &[1, 1, 0, 0]);
        assert_eq!(&b[17..19], &[3, 0]);
        assert_eq!(&b[19..23], &[4, 3, 2, 1]);
        assert_eq!(&b[23..], &[0; 6]);
        assert_eq!(ShardHeader::decode(&b).unwrap(), h);
    }

    #[test]
    fn shard_roundtrip_and_corruption() {
        let p = derive_params(5, 3, 3, 2, Some(257)).unwrap();
        let shard = Shard {
            index: 2,
            symbols: vec![256, 0, 7, 9],
            params: p.digest(),
        };
        let bytes = shard_to_bytes(&shard, p.alpha()).unwrap();
        assert_eq!(bytes.len(), HEADER_LEN + 8);
        let (back, bp) = shard_from_bytes(&bytes).unwrap();
        assert_eq!(back, shard);
        assert_eq!(bp, p);

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(shard_from_bytes(&bad), Err(Error::Header(_))));
        let mut bad = bytes.clone();
        bad[9] = 5; // d = 5 > n - t
        assert!(matches!(shard_from_bytes(&bad), Err(Error::Header(_))));
        let mut bad = bytes.clone();
        bad[25] = 1;
        assert!(matches!(shard_from_bytes(&bad), Err(Error::Header(_))));
        assert!(shard_from_bytes(&bytes[..bytes.len() - 1]).is_err());
        assert!(shard_from_bytes(&bytes[..10]).is_err());
    }

    #[test]
    fn manifest_roundtrip() {
        let m = Manifest {
            params: ParamsDigest {
                n: 5,
                k: 3,
                d: 3,
                t: 2,
                modulus: 257,
            },
            length: 6,
            stripes: 1,
            checksum: 0xdead_beef,
        };
        assert_eq!(Manifest::parse(&m.render()).unwrap(), m);
        assert!(Manifest::parse("n=5\n").is_err());
        assert!(Manifest::parse(&m.render().replace("length=6", "length=x")).is_err());
    }
}
