//! C ABI for `mscr`.
//!
//! A codec is an opaque handle from [`mscr_codec_new`], released with
//! [`mscr_codec_free`]. Symbols are `uint32_t` residues. Shard buffers are
//! node-major: all of a node's `stripes * alpha` symbols, then the next
//! node's. Node indices are 1-based. Every call returns an [`MscrStatus`];
//! on failure [`mscr_last_error_message`] describes the error.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use mscr::params::{CodeParams, Modulus};
use mscr::product_matrix::Shard;
use mscr::repair::{repair_shards, HelperPolicy, RepairPlan};
use mscr::systematic::Codec;
use mscr::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MscrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParams = 2,
    InvalidArgument = 3,
    NotEnoughShards = 4,
    Inconsistent = 5,
    RepairFailed = 6,
    BufferTooSmall = 7,
    Internal = 8,
}

/// Opaque codec handle.
pub struct MscrCodec {
    codec: Codec,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> MscrStatus {
    match e {
        Error::KTooSmall { .. }
        | Error::TTooSmall { .. }
        | Error::TTooLarge { .. }
        | Error::DTooSmall { .. }
        | Error::DTooLarge { .. }
        | Error::NotPrime(_)
        | Error::InsufficientPoints { .. }
        | Error::InvalidPoints(_)
        | Error::ModulusRange { .. }
        | Error::MsrParams(_) => MscrStatus::InvalidParams,
        Error::IndexOutOfRange { .. }
        | Error::DuplicateIndex(_)
        | Error::LengthMismatch { .. }
        | Error::SymbolOutOfRange { .. }
        | Error::Dimension(_) => MscrStatus::InvalidArgument,
        Error::NotEnoughShards { .. } => MscrStatus::NotEnoughShards,
        Error::Inconsistent { .. } | Error::Checksum { .. } | Error::Header(_) => MscrStatus::Inconsistent,
        Error::Repair(_) | Error::MissingPhase1(_) | Error::TooManyFailures { .. } | Error::NodeNotAlive(_) => {
            MscrStatus::RepairFailed
        }
        _ => MscrStatus::Internal,
    }
}

struct Fail(MscrStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> MscrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            MscrStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            MscrStatus::Internal
        }
    }
}

/// # Safety
/// `p` must be null only when `len` is zero, otherwise valid for `len` reads.
unsafe fn input<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail(MscrStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// # Safety
/// As [`input`], for writes.
unsafe fn output<'a, T>(p: *mut T, len: usize, need: usize, what: &str) -> Result<&'a mut [T], Fail> {
    if len < need {
        return Err(Fail(
            MscrStatus::BufferTooSmall,
            format!("{what} holds {len}, {need} needed"),
        ));
    }
    if need == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Fail(MscrStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts_mut(p, need))
}

unsafe fn handle<'a>(h: *const MscrCodec) -> Result<&'a Codec, Fail> {
    h.as_ref()
        .map(|c| &c.codec)
        .ok_or_else(|| Fail(MscrStatus::NullPointer, "codec handle is null".into()))
}

fn to_indices(raw: &[u32]) -> Vec<usize> {
    raw.iter().map(|&i| i as usize).collect()
}

/// Shards from `count` node-major rows of `shard_len` symbols.
fn gather(p: &CodeParams, nodes: &[usize], data: &[u32], shard_len: usize) -> Result<Vec<Shard>, Fail> {
    if shard_len == 0 || !shard_len.is_multiple_of(p.alpha()) {
        return Err(Fail(
            MscrStatus::InvalidArgument,
            format!(
                "shard length {shard_len} is not a positive multiple of alpha = {}",
                p.alpha()
            ),
        ));
    }
    Ok(nodes
        .iter()
        .zip(data.chunks_exact(shard_len))
        .map(|(&index, s)| Shard {
            index,
            symbols: s.to_vec(),
            params: p.digest(),
        })
        .collect())
}

/// Creates a codec for `(n, k, d, t)`. `modulus = 0` picks the smallest
/// admissible prime.
///
/// # Safety
/// `out` must be valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn mscr_codec_new(
    n: usize,
    k: usize,
    d: usize,
    t: usize,
    modulus: u32,
    out: *mut *mut MscrCodec,
) -> MscrStatus {
    guard(|| {
        if out.is_null() {
            return Err(Fail(MscrStatus::NullPointer, "out is null".into()));
        }
        let m = if modulus == 0 {
            Modulus::default()
        } else {
            Modulus::Fixed(modulus)
        };
        let params = CodeParams::new(n, k, d, t, m)?;
        let handle = Box::new(MscrCodec {
            codec: Codec::new(&params)?,
        });
        *out = Box::into_raw(handle);
        Ok(())
    })
}

/// # Safety
/// `codec` must come from [`mscr_codec_new`] and not be used afterwards.
/// Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn mscr_codec_free(codec: *mut MscrCodec) {
    if !codec.is_null() {
        drop(Box::from_raw(codec));
    }
}

/// Symbols per node per stripe; 0 for a null handle.
///
/// # Safety
/// `codec` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mscr_codec_alpha(codec: *const MscrCodec) -> usize {
    codec.as_ref().map_or(0, |c| c.codec.params().alpha())
}

/// Message symbols per stripe; 0 for a null handle.
///
/// # Safety
/// `codec` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mscr_codec_message_len(codec: *const MscrCodec) -> usize {
    codec.as_ref().map_or(0, |c| c.codec.params().message_len())
}

/// Field modulus; 0 for a null handle.
///
/// # Safety
/// `codec` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mscr_codec_modulus(codec: *const MscrCodec) -> u32 {
    codec.as_ref().map_or(0, |c| c.codec.params().modulus())
}

/// Symbols each newcomer downloads per stripe during repair; 0 for a null
/// handle.
///
/// # Safety
/// `codec` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mscr_codec_repair_bandwidth(codec: *const MscrCodec) -> usize {
    codec.as_ref().map_or(0, |c| c.codec.params().repair_bandwidth())
}

/// Encodes `data_len` symbols (a multiple of the message length) into `n`
/// node-major shards written to `shards_out`, which must hold
/// `n * (data_len / B) * alpha` symbols.
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn mscr_encode(
    codec: *const MscrCodec,
    data: *const u32,
    data_len: usize,
    shards_out: *mut u32,
    shards_out_len: usize,
) -> MscrStatus {
    guard(|| {
        let c = handle(codec)?;
        let data = input(data, data_len, "data")?;
        let shards = c.encode(data)?;
        let total: usize = shards.iter().map(|s| s.symbols.len()).sum();
        let out = output(shards_out, shards_out_len, total, "shards_out")?;
        for (dst, s) in out.chunks_exact_mut(total / shards.len()).zip(&shards) {
            dst.copy_from_slice(&s.symbols);
        }
        Ok(())
    })
}

/// Decodes from `count >= k` shards. `indices[q]` names the node whose
/// `shard_len` symbols start at `shards + q * shard_len`. `out` must hold
/// `(shard_len / alpha) * B` symbols.
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn mscr_decode(
    codec: *const MscrCodec,
    indices: *const u32,
    count: usize,
    shards: *const u32,
    shard_len: usize,
    out: *mut u32,
    out_len: usize,
) -> MscrStatus {
    guard(|| {
        let c = handle(codec)?;
        let p = c.params();
        let nodes = to_indices(input(indices, count, "indices")?);
        let data = input(shards, count * shard_len, "shards")?;
        let shards = gather(p, &nodes, data, shard_len)?;
        let msg = c.decode(&shards)?;
        output(out, out_len, msg.len(), "out")?.copy_from_slice(&msg);
        Ok(())
    })
}

/// Regenerates the `t` nodes in `failed` from the surviving shards. Each
/// newcomer uses the `d` lowest-indexed nodes among `survivors`. `out` gets
/// the repaired shards in ascending node order, `t * shard_len` symbols.
/// If `downloads` is non-null it receives each newcomer's total download in
/// symbols, in the same order.
///
/// # Safety
/// Pointers must be valid for the stated lengths; `downloads`, when
/// non-null, for `failed_count` writes.
#[no_mangle]
pub unsafe extern "C" fn mscr_repair(
    codec: *const MscrCodec,
    failed: *const u32,
    failed_count: usize,
    survivors: *const u32,
    survivor_count: usize,
    survivor_shards: *const u32,
    shard_len: usize,
    out: *mut u32,
    out_len: usize,
    downloads: *mut usize,
) -> MscrStatus {
    guard(|| {
        let c = handle(codec)?;
        let p = c.params();
        let failed = to_indices(input(failed, failed_count, "failed")?);
        let nodes = to_indices(input(survivors, survivor_count, "survivors")?);
        let data = input(survivor_shards, survivor_count * shard_len, "survivor_shards")?;
        let shards = gather(p, &nodes, data, shard_len)?;
        let mut pool = nodes.clone();
        pool.sort_unstable();
        pool.retain(|i| !failed.contains(i));
        if pool.len() < p.d() {
            return Err(Fail(
                MscrStatus::NotEnoughShards,
                format!("{} survivors given, d = {} needed", pool.len(), p.d()),
            ));
        }
        let policy = HelperPolicy::Explicit(vec![pool[..p.d()].to_vec(); failed.len()]);
        let plan = RepairPlan::new(p, &failed, &policy)?;
        let repaired = repair_shards(&plan, &shards)?;
        let dst = output(out, out_len, failed.len() * shard_len, "out")?;
        for (chunk, s) in dst.chunks_exact_mut(shard_len).zip(&repaired.shards) {
            chunk.copy_from_slice(&s.symbols);
        }
        if !downloads.is_null() {
            let dl = std::slice::from_raw_parts_mut(downloads, failed.len());
            for (slot, d) in dl.iter_mut().zip(&repaired.downloads) {
                *slot = d.total();
            }
        }
        Ok(())
    })
}

/// Message for the last failed call on this thread, empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn mscr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn mscr_status_name(status: MscrStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        MscrStatus::Ok => b"ok\0",
        MscrStatus::NullPointer => b"null pointer\0",
        MscrStatus::InvalidParams => b"invalid parameters\0",
        MscrStatus::InvalidArgument => b"invalid argument\0",
        MscrStatus::NotEnoughShards => b"not enough shards\0",
        MscrStatus::Inconsistent => b"inconsistent shards\0",
        MscrStatus::RepairFailed => b"repair failed\0",
        MscrStatus::BufferTooSmall => b"buffer too small\0",
        MscrStatus::Internal => b"internal error\0",
    };
    s.as_ptr().cast()
}
