//! File-level commands behind the `mscr` binary.
//!
//! Files map one byte to one symbol, so the field must have at least 257
//! elements and, for the `u16` payload, at most 65521.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::format::{fnv1a64, read_shard, shard_paths, write_shard, Manifest};
use crate::msr::{msr_encode, msr_reconstruct, msr_repair, MsrParams};
use crate::params::{CodeParams, Modulus};
use crate::product_matrix::Shard;
use crate::repair::{repair_shards, Downloads, HelperPolicy, RepairPlan};
use crate::sim::{create_cluster, BandwidthReport};
use crate::systematic::{Codec, OuterMessage};

pub const MIN_FILE_MODULUS: u32 = 257;
pub const MAX_FILE_MODULUS: u32 = 65521;

/// Parameters for file encoding: the smallest admissible prime >= 257
/// unless `modulus` is given.
pub fn file_params(n: usize, k: usize, d: usize, t: usize, modulus: Option<u32>) -> Result<CodeParams> {
    let range_err = |m| Error::ModulusRange {
        modulus: m,
        min: MIN_FILE_MODULUS,
        max: MAX_FILE_MODULUS,
    };
    if let Some(m) = modulus {
        if !(MIN_FILE_MODULUS..=MAX_FILE_MODULUS).contains(&m) {
            return Err(range_err(m));
        }
    }
    let p = CodeParams::new(
        n,
        k,
        d,
        t,
        modulus.map_or(Modulus::AtLeast(MIN_FILE_MODULUS), Modulus::Fixed),
    )?;
    if p.modulus() > MAX_FILE_MODULUS {
        return Err(range_err(p.modulus()));
    }
    Ok(p)
}

/// `lowest`, `round-robin`, one comma list shared by every newcomer, or
/// one comma list per newcomer separated by `;`.
pub fn parse_helper_policy(spec: &str, t: usize) -> Result<HelperPolicy> {
    match spec.trim() {
        "" | "lowest" => return Ok(HelperPolicy::LowestIndex),
        "round-robin" | "roundrobin" => return Ok(HelperPolicy::RoundRobin),
        _ => {}
    }
    let lists = spec
        .split(';')
        .map(|l| {
            l.split(',')
                .map(|x| {
                    x.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::Repair(format!("bad helper index {x:?}")))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(match lists.len() {
        1 => HelperPolicy::Explicit(vec![lists[0].clone(); t]),
        _ => HelperPolicy::Explicit(lists),
    })
}

fn pad_to_stripes(bytes: &[u8], b: usize) -> Vec<u32> {
    let stripes = bytes.len().div_ceil(b).max(1);
    let mut symbols: Vec<u32> = bytes.iter().map(|&x| x as u32).collect();
    symbols.resize(stripes * b, 0);
    symbols
}

#[derive(Clone, Debug)]
pub struct EncodeSummary {
    pub manifest: Manifest,
    pub files: Vec<PathBuf>,
}

pub fn encode_bytes(bytes: &[u8], params: &CodeParams) -> Result<(Manifest, Vec<Shard>)> {
    let b = params.message_len();
    let symbols = pad_to_stripes(bytes, b);
    let shards = Codec::new(params)?.encode(&symbols)?;
    let manifest = Manifest {
        params: params.digest(),
        length: bytes.len() as u64,
        stripes: symbols.len() / b,
        checksum: fnv1a64(bytes),
    };
    Ok((manifest, shards))
}

/// Writes `n` shard files and the manifest into `out_dir`.
pub fn encode_file(input: &Path, params: &CodeParams, out_dir: &Path) -> Result<EncodeSummary> {
    let bytes = fs::read(input)?;
    let (manifest, shards) = encode_bytes(&bytes, params)?;
    fs::create_dir_all(out_dir)?;
    let mut files = shards
        .iter()
        .map(|s| write_shard(out_dir, s, params.alpha()))
        .collect::<Result<Vec<_>>>()?;
    files.push(manifest.write(out_dir)?);
    Ok(EncodeSummary { manifest, files })
}

/// The manifest, its parameters and every shard file in `dir`. Shards must
/// agree with the manifest.
pub fn load_dir(dir: &Path) -> Result<(Manifest, CodeParams, Vec<Shard>)> {
    let manifest = Manifest::read(dir)?;
    let params = manifest
        .params
        .to_params()
        .map_err(|e| Error::Manifest(format!("inconsistent parameters: {e}")))?;
    let mut shards: Vec<Shard> = Vec::new();
    for path in shard_paths(dir)? {
        let (shard, _) = read_shard(&path)?;
        if shard.params != manifest.params {
            return Err(Error::Header(format!(
                "{} was written for a different code than the manifest",
                path.display()
            )));
        }
        if shard.stripe_count(params.alpha()) != manifest.stripes {
            return Err(Error::Header(format!(
                "{} holds {} stripes, manifest says {}",
                path.display(),
                shard.stripe_count(params.alpha()),
                manifest.stripes
            )));
        }
        if shards.iter().any(|s| s.index == shard.index) {
            return Err(Error::DuplicateIndex(shard.index));
        }
        shards.push(shard);
    }
    shards.sort_by_key(|s| s.index);
    Ok((manifest, params, shards))
}

pub fn decode_shards(manifest: &Manifest, params: &CodeParams, shards: &[Shard]) -> Result<Vec<u8>> {
    let symbols = Codec::new(params)?.decode(shards)?;
    let length = usize::try_from(manifest.length).map_err(|_| Error::Manifest("length too large".into()))?;
    if length > symbols.len() {
        return Err(Error::Manifest(format!(
            "length {length} exceeds the {} decoded symbols",
            symbols.len()
        )));
    }
    let bytes = symbols[..length]
        .iter()
        .map(|&s| u8::try_from(s).map_err(|_| Error::NotAByte(s)))
        .collect::<Result<Vec<u8>>>()?;
    if symbols[length..].iter().any(|&s| s != 0) {
        return Err(Error::Manifest("padding is not zero".into()));
    }
    let actual = fnv1a64(&bytes);
    if actual != manifest.checksum {
        return Err(Error::Checksum {
            expected: manifest.checksum,
            actual,
        });
    }
    Ok(bytes)
}

#[derive(Clone, Debug)]
pub struct DecodeSummary {
    pub length: u64,
    pub checksum: u64,
    pub used: Vec<usize>,
}

/// Reconstructs the original file from any `k` shard files in `dir`.
pub fn decode_file(dir: &Path, out: &Path) -> Result<DecodeSummary> {
    let (manifest, params, shards) = load_dir(dir)?;
    let bytes = decode_shards(&manifest, &params, &shards)?;
    fs::write(out, &bytes)?;
    Ok(DecodeSummary {
        length: manifest.length,
        checksum: manifest.checksum,
        used: shards.iter().map(|s| s.index).take(params.k()).collect(),
    })
}

#[derive(Clone, Debug)]
pub struct RepairSummary {
    pub failed: Vec<usize>,
    pub helpers: Vec<Vec<usize>>,
    pub downloads: Vec<Downloads>,
    pub stripes: usize,
    pub per_stripe_optimum: usize,
    pub files: Vec<PathBuf>,
}

/// Regenerates the shard files missing from `dir`. Exactly `t` must be
/// missing. Output goes to `out_dir`, default `dir`.
pub fn repair_dir(dir: &Path, policy: &HelperPolicy, out_dir: Option<&Path>) -> Result<RepairSummary> {
    let (_, params, shards) = load_dir(dir)?;
    let failed: Vec<usize> = (1..=params.n())
        .filter(|i| !shards.iter().any(|s| s.index == *i))
        .collect();
    if failed.len() != params.t() {
        return Err(Error::Repair(format!(
            "{} shards missing; repair needs exactly t = {}",
            failed.len(),
            params.t()
        )));
    }
    let plan = RepairPlan::new(&params, &failed, policy)?;
    let out = repair_shards(&plan, &shards)?;
    let target = out_dir.unwrap_or(dir);
    fs::create_dir_all(target)?;
    let files = out
        .shards
        .iter()
        .map(|s| write_shard(target, s, params.alpha()))
        .collect::<Result<Vec<_>>>()?;
    if target != dir {
        fs::copy(
            dir.join(crate::format::MANIFEST_NAME),
            target.join(crate::format::MANIFEST_NAME),
        )?;
    }
    Ok(RepairSummary {
        failed,
        helpers: plan.helpers().to_vec(),
        downloads: out.downloads,
        stripes: out.stripes,
        per_stripe_optimum: params.repair_bandwidth(),
        files,
    })
}

fn describe_params(p: &CodeParams) -> String {
    format!(
        "n={} k={} d={} t={} modulus={}\nalpha={} B={} delta={} mu={} z={} r={}\nrepair download per newcomer per stripe={}\n",
        p.n(),
        p.k(),
        p.d(),
        p.t(),
        p.modulus(),
        p.alpha(),
        p.message_len(),
        p.delta(),
        p.mu(),
        p.z(),
        p.r(),
        p.repair_bandwidth()
    )
}

/// Human-readable description of a shard file, a manifest or a directory.
pub fn inspect(path: &Path) -> Result<String> {
    if path.is_dir() {
        let (m, p, shards) = load_dir(path)?;
        let present: Vec<String> = shards.iter().map(|s| s.index.to_string()).collect();
        return Ok(format!(
            "{}length={} stripes={} checksum={:016x}\nshards present: {}\n",
            describe_params(&p),
            m.length,
            m.stripes,
            m.checksum,
            present.join(",")
        ));
    }
    let bytes = fs::read(path)?;
    if bytes.starts_with(crate::format::MAGIC) {
        let (shard, p) = crate::format::shard_from_bytes(&bytes)?;
        Ok(format!(
            "shard node={} stripes={}\n{}",
            shard.index,
            shard.stripe_count(p.alpha()),
            describe_params(&p)
        ))
    } else {
        let text = String::from_utf8(bytes).map_err(|_| Error::Manifest("not UTF-8".into()))?;
        let m = Manifest::parse(&text)?;
        let p = m.params.to_params()?;
        Ok(format!(
            "manifest length={} stripes={} checksum={:016x}\n{}",
            m.length,
            m.stripes,
            m.checksum,
            describe_params(&p)
        ))
    }
}

#[derive(Clone, Debug)]
pub struct SimulationSummary {
    pub failed: Vec<usize>,
    pub restored: bool,
    pub report: BandwidthReport,
    pub log: String,
}

/// Random message from `seed`, `t` random failures, cooperative repair.
pub fn simulate(params: &CodeParams, seed: u64, policy: &HelperPolicy) -> Result<SimulationSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let msg: Vec<u32> = (0..params.message_len())
        .map(|_| rng.gen_range(0..params.modulus()))
        .collect();
    let mut cluster = create_cluster(params, &OuterMessage::new(params, msg)?, seed)?;
    let before: Vec<Shard> = cluster.alive().into_iter().cloned().collect();
    let failed = cluster.fail_random(params.t())?;
    cluster.run_cooperative_repair(policy)?;
    let restored = cluster.alive().into_iter().cloned().collect::<Vec<_>>() == before;
    Ok(SimulationSummary {
        failed,
        restored,
        report: cluster.audit_bandwidth(),
        log: cluster.export_log(),
    })
}

fn subsets(n: usize, size: usize) -> Vec<Vec<usize>> {
    (0u64..1 << n)
        .filter(|m| m.count_ones() as usize == size)
        .map(|m| (0..n).filter(|b| m >> b & 1 == 1).map(|b| b + 1).collect())
        .collect()
}

fn check_code(n: usize, k: usize, d: usize, t: usize, rng: &mut ChaCha8Rng) -> Result<bool> {
    let p = CodeParams::new(n, k, d, t, Modulus::default())?;
    let codec = Codec::new(&p)?;
    let msg: Vec<u32> = (0..p.message_len()).map(|_| rng.gen_range(0..p.modulus())).collect();
    let shards = codec.encode(&msg)?;
    let mut ok = shards[..k]
        .iter()
        .flat_map(|s| s.symbols.iter().copied())
        .eq(msg.iter().copied());
    for set in subsets(n, k) {
        let pick: Vec<Shard> = set.iter().map(|&i| shards[i - 1].clone()).collect();
        ok &= codec.decode(&pick)? == msg;
    }
    for failed in subsets(n, t) {
        let survivors: Vec<usize> = (1..=n).filter(|i| !failed.contains(i)).collect();
        for hs in subsets(survivors.len(), d) {
            let helpers: Vec<usize> = hs.iter().map(|&q| survivors[q - 1]).collect();
            let plan = RepairPlan::new(&p, &failed, &HelperPolicy::Explicit(vec![helpers; t]))?;
            let out = plan.run_stripe(|j| shards[j - 1].symbols.as_slice())?;
            ok &= out.rows.iter().zip(&failed).all(|(r, &i)| *r == shards[i - 1].symbols);
            ok &= out.downloads.iter().all(|dl| dl.phase1 == d && dl.phase2 == t - 1);
        }
    }
    Ok(ok)
}

fn check_msr(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Result<bool> {
    let p = MsrParams::new(n, k)?;
    let msg: Vec<u32> = (0..p.message_len())
        .map(|_| rng.gen_range(0..p.gf().modulus()))
        .collect();
    let rows = msr_encode(&p, &msg)?;
    let mut ok = true;
    for set in subsets(n, k) {
        let sr: Vec<Vec<u32>> = set.iter().map(|&i| rows[i - 1].clone()).collect();
        ok &= msr_reconstruct(&p, &set, &sr)? == msg;
    }
    for failed in 1..=n {
        let others: Vec<usize> = (1..=n).filter(|&j| j != failed).collect();
        for hs in subsets(others.len(), p.d()) {
            let helpers: Vec<usize> = hs.iter().map(|&q| others[q - 1]).collect();
            let hr: Vec<Vec<u32>> = helpers.iter().map(|&j| rows[j - 1].clone()).collect();
            let out = msr_repair(&p, failed, &helpers, &hr)?;
            ok &= out.row == rows[failed - 1] && out.downloads == p.d();
        }
    }
    Ok(ok)
}

/// Exhaustive small-instance checks: every read set, every failure set and
/// helper choice. One `(name, passed)` per suite.
pub fn selftest(seed: u64) -> Vec<(String, bool)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (n, k, d, t) in [(5, 3, 3, 2), (6, 3, 4, 2), (6, 3, 3, 3), (6, 2, 3, 3), (6, 2, 4, 2)] {
        let ok = check_code(n, k, d, t, &mut rng).unwrap_or(false);
        out.push((format!("mscr ({n},{k},{d},{t})"), ok));
    }
    for (n, k) in [(6, 3), (7, 4)] {
        let ok = check_msr(n, k, &mut rng).unwrap_or(false);
        out.push((format!("msr ({n},{k})"), ok));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_modulus_bounds() {
        assert!(matches!(
            file_params(5, 3, 3, 2, Some(7)),
            Err(Error::ModulusRange { modulus: 7, .. })
        ));
        assert_eq!(file_params(5, 3, 3, 2, None).unwrap().modulus(), 257);
        assert_eq!(file_params(8, 4, 6, 2, None).unwrap().modulus(), 257);
        assert!(file_params(5, 3, 3, 2, Some(65537)).is_err());
    }

    #[test]
    fn helper_policy_parsing() {
        assert_eq!(parse_helper_policy("lowest", 2).unwrap(), HelperPolicy::LowestIndex);
        assert_eq!(parse_helper_policy("round-robin", 2).unwrap(), HelperPolicy::RoundRobin);
        assert_eq!(
            parse_helper_policy("3,4,5", 2).unwrap(),
            HelperPolicy::Explicit(vec![vec![3, 4, 5], vec![3, 4, 5]])
        );
        assert_eq!(
            parse_helper_policy("3,4,5;4,5,6", 2).unwrap(),
            HelperPolicy::Explicit(vec![vec![3, 4, 5], vec![4, 5, 6]])
        );
        assert!(parse_helper_policy("3,x", 2).is_err());
    }

    #[test]
    fn padding() {
        assert_eq!(pad_to_stripes(&[], 4), vec![0; 4]);
        assert_eq!(pad_to_stripes(&[1, 2, 3, 4, 5], 4), vec![1, 2, 3, 4, 5, 0, 0, 0]);
    }

    #[test]
    fn bytes_roundtrip_lengths() {
        let p = file_params(5, 3, 3, 2, None).unwrap();
        let b = p.message_len();
        for len in [0, 1, b - 1, b, b + 1] {
            let bytes: Vec<u8> = (0..len).map(|i| (i * 37 % 256) as u8).collect();
            let (m, shards) = encode_bytes(&bytes, &p).unwrap();
            assert_eq!(m.stripes, len.div_ceil(b).max(1));
            assert_eq!(decode_shards(&m, &p, &shards[2..]).unwrap(), bytes);
        }
    }

    #[test]
    fn selftest_passes() {
        assert!(selftest(1).iter().all(|(_, ok)| *ok));
    }
}
