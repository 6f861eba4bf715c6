//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::collections::HashSet;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::Instant;

use mscr::field::Gf;
use mscr::format::shard_file_name;
use mscr::linalg::{determinant, Matrix, SymmetricMatrix};
use mscr::msr::{msr_encode, msr_reconstruct, msr_repair, MsrParams};
use mscr::params::{derive_params, CodeParams};
use mscr::product_matrix::{build_repair_vector, Shard};
use mscr::reconstruct::decode_pair;
use mscr::repair::{coefficient_matrix, reduce_to_block_form, HelperPolicy, RepairPlan};
use mscr::systematic::{Codec, SystematicEncoder};
use mscr::Error;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (u32, &'static str, f64, fn() -> Outcome);

const GRID: [(usize, usize, usize, usize); 5] = [(5, 3, 3, 2), (7, 4, 5, 2), (8, 4, 6, 2), (8, 3, 4, 3), (9, 4, 5, 3)];
const SHORTENED: (usize, usize, usize, usize) = (10, 4, 8, 2);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn subsets(items: &[usize], size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(size);
    fn go(items: &[usize], size: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            cur.push(items[i]);
            go(items, size, i + 1, cur, out);
            cur.pop();
        }
    }
    go(items, size, 0, &mut cur, &mut out);
    out
}

fn params(c: (usize, usize, usize, usize)) -> CodeParams {
    derive_params(c.0, c.1, c.2, c.3, None).unwrap()
}

fn random_symbols(p: &CodeParams, len: usize, rng: &mut ChaCha8Rng) -> Vec<u32> {
    (0..len).map(|_| rng.gen_range(0..p.modulus())).collect()
}

/// Independent restatement of the admissibility rules.
fn admissible(n: usize, k: usize, d: usize, t: usize) -> bool {
    k >= 2 && t >= 2 && k + t <= n && d + 1 + t >= 2 * k && d >= k && d + t <= n
}

fn criterion_1() -> Outcome {
    let mut accepted = 0;
    let mut rejected = 0;
    for n in 1..=10 {
        for k in 1..=6 {
            for t in 1..=4 {
                for d in 1..=n {
                    match derive_params(n, k, d, t, None) {
                        Ok(p) => {
                            ensure!(admissible(n, k, d, t), "({n},{k},{d},{t}) accepted");
                            ensure!(p.alpha() == d - k + t, "alpha at ({n},{k},{d},{t})");
                            ensure!(p.message_len() == k * (d - k + t), "B at ({n},{k},{d},{t})");
                            accepted += 1;
                        }
                        Err(e) => {
                            ensure!(!admissible(n, k, d, t), "({n},{k},{d},{t}) rejected: {e}");
                            let expected = if k < 2 {
                                matches!(e, Error::KTooSmall { .. })
                            } else if t < 2 {
                                matches!(e, Error::TTooSmall { .. })
                            } else if k + t > n {
                                matches!(e, Error::TTooLarge { .. })
                            } else if d < k || d + 1 + t < 2 * k {
                                matches!(e, Error::DTooSmall { .. })
                            } else {
                                matches!(e, Error::DTooLarge { .. })
                            };
                            ensure!(expected, "({n},{k},{d},{t}) gave {e:?}");
                            rejected += 1;
                        }
                    }
                }
            }
        }
    }
    Ok(format!("{accepted} accepted, {rejected} rejected"))
}

fn check_systematic(p: &CodeParams, shards: &[Shard], data: &[u32]) -> Result<(), String> {
    let (k, alpha, b) = (p.k(), p.alpha(), p.message_len());
    for (s, m) in data.chunks(b).enumerate() {
        for i in 0..k {
            ensure!(
                shards[i].stripe(alpha, s) == &m[i * alpha..(i + 1) * alpha],
                "node {} stripe {s} is not m_{}",
                i + 1,
                i + 1
            );
        }
    }
    Ok(())
}

/// Every k-subset decodes 100 random messages; returns subsets checked.
fn reconstruction(c: (usize, usize, usize, usize), seed: u64) -> Result<usize, String> {
    let p = params(c);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let codec = Codec::new(&p).map_err(|e| e.to_string())?;
    let data = random_symbols(&p, p.message_len() * 100, &mut rng);
    let shards = codec.encode_structured(&data).map_err(|e| e.to_string())?;
    check_systematic(&p, &shards, &data)?;
    let all: Vec<usize> = (1..=p.n()).collect();
    let sets = subsets(&all, p.k());
    for set in &sets {
        let pick: Vec<Shard> = set.iter().map(|&i| shards[i - 1].clone()).collect();
        let got = codec
            .decode_structured(&pick)
            .map_err(|e| format!("{c:?} {set:?}: {e}"))?;
        ensure!(got == data, "{c:?} read set {set:?} decoded wrongly");
    }
    Ok(sets.len())
}

fn criterion_2() -> Outcome {
    let mut total = 0;
    for (q, c) in GRID.into_iter().enumerate() {
        total += reconstruction(c, 100 + q as u64)?;
    }
    Ok(format!("{total} read sets x 100 messages"))
}

/// The default policy, round-robin and two random explicit choices.
fn helper_policies(p: &CodeParams, failed: &[usize], rng: &mut ChaCha8Rng) -> Vec<HelperPolicy> {
    let survivors: Vec<usize> = (1..=p.n()).filter(|i| !failed.contains(i)).collect();
    let mut out = vec![HelperPolicy::LowestIndex, HelperPolicy::RoundRobin];
    for _ in 0..2 {
        let sets = failed
            .iter()
            .map(|_| {
                let mut h: Vec<usize> = survivors.choose_multiple(rng, p.d()).copied().collect();
                h.sort_unstable();
                h
            })
            .collect();
        out.push(HelperPolicy::Explicit(sets));
    }
    out
}

#[derive(Default)]
struct RepairStats {
    repairs: usize,
    newcomers: usize,
    bad_downloads: usize,
    zero_det: usize,
}

fn repair_grid(c: (usize, usize, usize, usize), seed: u64, stats: &mut RepairStats) -> Result<(), String> {
    let p = params(c);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let codec = Codec::new(&p).map_err(|e| e.to_string())?;
    let data = random_symbols(&p, p.message_len() * 3, &mut rng);
    let shards = codec.encode_structured(&data).map_err(|e| e.to_string())?;
    check_systematic(&p, &shards, &data)?;
    let alpha = p.alpha();
    let all: Vec<usize> = (1..=p.n()).collect();
    for failed in subsets(&all, p.t()) {
        for policy in helper_policies(&p, &failed, &mut rng) {
            let plan = RepairPlan::new(&p, &failed, &policy).map_err(|e| format!("{c:?} {failed:?}: {e}"))?;
            for pos in 0..failed.len() {
                if plan.determinant(pos) == 0 {
                    stats.zero_det += 1;
                }
            }
            for s in 0..3 {
                let out = plan
                    .run_stripe(|j| shards[j - 1].stripe(alpha, s))
                    .map_err(|e| format!("{c:?} {failed:?} {policy:?}: {e}"))?;
                for (pos, &i) in failed.iter().enumerate() {
                    ensure!(
                        out.rows[pos] == shards[i - 1].stripe(alpha, s),
                        "{c:?} failed {failed:?} {policy:?}: node {i} stripe {s} differs"
                    );
                    let dl = out.downloads[pos];
                    if dl.phase1 != p.d() || dl.phase2 != p.t() - 1 {
                        stats.bad_downloads += 1;
                    }
                    stats.newcomers += 1;
                }
                stats.repairs += 1;
            }
        }
    }
    Ok(())
}

fn run_repair_grid() -> Result<RepairStats, String> {
    let mut stats = RepairStats::default();
    for (q, c) in GRID.into_iter().enumerate() {
        repair_grid(c, 300 + q as u64, &mut stats)?;
    }
    Ok(stats)
}

fn criterion_3() -> Outcome {
    let s = run_repair_grid()?;
    Ok(format!(
        "{} stripe repairs, {} newcomers restored",
        s.repairs, s.newcomers
    ))
}

fn criterion_4() -> Outcome {
    let s = run_repair_grid()?;
    ensure!(
        s.bad_downloads == 0,
        "{} newcomers off the d+t-1 optimum",
        s.bad_downloads
    );
    Ok(format!("{} newcomers at exactly d + (t-1) symbols", s.newcomers))
}

fn criterion_5() -> Outcome {
    let p = params(SHORTENED);
    ensure!(p.delta() == 3, "delta = {}", p.delta());
    ensure!(
        p.d_inner() == 2 * p.k_inner() - 1 - p.t(),
        "inner d' = {} vs 2k'-1-t = {}",
        p.d_inner(),
        2 * p.k_inner() - 1 - p.t()
    );
    let enc = SystematicEncoder::new(&p).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    for _ in 0..100 {
        let m = random_symbols(&p, p.message_len(), &mut rng);
        let c = enc.inner_codeword(&m).map_err(|e| e.to_string())?;
        for i in 0..p.delta() {
            ensure!(c.row(i).iter().all(|&x| x == 0), "imaginary node {} is nonzero", i + 1);
        }
    }
    let sets = reconstruction(SHORTENED, 501)?;
    let mut stats = RepairStats::default();
    repair_grid(SHORTENED, 502, &mut stats)?;
    ensure!(
        stats.bad_downloads == 0,
        "{} newcomers off optimum",
        stats.bad_downloads
    );
    ensure!(stats.zero_det == 0, "{} singular H", stats.zero_det);
    Ok(format!(
        "d'=2k'-1-t, imaginary nodes zero, {sets} read sets, {} repairs",
        stats.repairs
    ))
}

/// `Phi*S + Delta*Phi*T`, by direct summation.
fn forward(gf: Gf, points: &[u32], lambda: &[u32], s: &Matrix, t: &Matrix) -> Matrix {
    let a = s.rows();
    let mut x = Matrix::zeros(points.len(), a);
    for (i, (&xi, &li)) in points.iter().zip(lambda).enumerate() {
        for col in 0..a {
            let mut acc = 0;
            let mut pw = 1;
            for row in 0..a {
                acc = gf.add(acc, gf.mul(pw, gf.add(s[(row, col)], gf.mul(li, t[(row, col)]))));
                pw = gf.mul(pw, xi);
            }
            x[(i, col)] = acc;
        }
    }
    x
}

fn criterion_6() -> Outcome {
    let gf = Gf::new(7).unwrap();
    let x = Matrix::from_rows(&[[5, 2], [5, 0], [1, 3]]);
    let phi = Matrix::from_rows(&[[1, 1], [1, 2], [1, 3]]);
    let (s, t) = decode_pair(gf, &x, &phi, &[1, 2, 3]).map_err(|e| e.to_string())?;
    ensure!(
        s.to_matrix() == Matrix::from_rows(&[[1, 2], [2, 3]]),
        "worked S = {:?}",
        s.to_matrix()
    );
    ensure!(
        t.to_matrix() == Matrix::from_rows(&[[4, 5], [5, 6]]),
        "worked T = {:?}",
        t.to_matrix()
    );

    let mut rng = ChaCha8Rng::seed_from_u64(600);
    let mut trials = 0;
    for p in [7u32, 11] {
        let gf = Gf::new(p).unwrap();
        let nonzero: Vec<u32> = (1..p).collect();
        for kp in 2..=5usize {
            for _ in 0..1250 {
                let points: Vec<u32> = nonzero.choose_multiple(&mut rng, kp).copied().collect();
                let lambda: Vec<u32> = nonzero.choose_multiple(&mut rng, kp).copied().collect();
                let a = kp - 1;
                let tri = a * (a + 1) / 2;
                let sp: Vec<u32> = (0..tri).map(|_| rng.gen_range(0..p)).collect();
                let tp: Vec<u32> = (0..tri).map(|_| rng.gen_range(0..p)).collect();
                let s = SymmetricMatrix::pack(a, &sp).unwrap();
                let t = SymmetricMatrix::pack(a, &tp).unwrap();
                let x = forward(gf, &points, &lambda, &s.to_matrix(), &t.to_matrix());
                let phi = mscr::linalg::vandermonde(gf, &points, a).unwrap();
                let (ds, dt) = decode_pair(gf, &x, &phi, &lambda).map_err(|e| format!("GF({p}) k'={kp}: {e}"))?;
                ensure!(ds == s && dt == t, "GF({p}) k'={kp} mismatch");
                trials += 1;
            }
        }
    }
    Ok(format!("worked instance exact, {trials} random pairs exact"))
}

fn criterion_7() -> Outcome {
    let s = run_repair_grid()?;
    ensure!(s.zero_det == 0, "{} assembled H singular", s.zero_det);
    let mut checked = 0;
    for c in GRID.into_iter().chain([SHORTENED]) {
        let p = params(c);
        let gf = p.gf();
        let (mu, alpha, t) = (p.mu(), p.alpha(), p.t());
        let all: Vec<usize> = (1..=p.n()).collect();
        for failed in subsets(&all, t) {
            for &i in &failed {
                let h = coefficient_matrix(&p, i, &failed).map_err(|e| e.to_string())?;
                let hb = reduce_to_block_form(&p, i, &h).map_err(|e| e.to_string())?;
                for r in 0..mu {
                    for col in 0..alpha {
                        ensure!(hb[(r, col)] == u32::from(r == col), "{c:?} top block at ({r},{col})");
                    }
                }
                let li = p.lambda(p.inner_index(i));
                let others: Vec<usize> = failed.iter().copied().filter(|&j| j != i).collect();
                let mut vand = Matrix::zeros(t - 1, t - 1);
                for (q, &j) in others.iter().enumerate() {
                    let x = p.point(p.inner_index(j));
                    let scale = gf.sub(p.lambda(p.inner_index(j)), li);
                    ensure!(scale != 0, "{c:?}: repeated mu-th power");
                    for col in 0..t - 1 {
                        vand[(q, col)] = gf.pow(x, col as u64);
                        ensure!(
                            hb[(mu + q, mu + col)] == gf.mul(scale, vand[(q, col)]),
                            "{c:?} bottom-right at ({q},{col})"
                        );
                    }
                    ensure!(
                        h.row(mu + q) == build_repair_vector(&p, p.inner_index(j)).unwrap().as_slice(),
                        "{c:?} phase-2 row"
                    );
                }
                ensure!(determinant(gf, &vand).unwrap() != 0, "{c:?} singular Vandermonde");
                ensure!(determinant(gf, &h).unwrap() != 0, "{c:?} singular H");
                checked += 1;
            }
        }
    }
    Ok(format!("all H nonsingular, {checked} block-form reductions verified"))
}

fn criterion_8() -> Outcome {
    let p = MsrParams::new(6, 3).map_err(|e| e.to_string())?;
    ensure!(p.d() == 4 && p.alpha() == 2 && p.message_len() == 6, "MSR dimensions");
    let mut rng = ChaCha8Rng::seed_from_u64(800);
    let all: Vec<usize> = (1..=6).collect();
    let (mut repairs, mut reads) = (0, 0);
    for _ in 0..20 {
        let msg: Vec<u32> = (0..6).map(|_| rng.gen_range(0..p.gf().modulus())).collect();
        let rows = msr_encode(&p, &msg).map_err(|e| e.to_string())?;
        for f in 1..=6 {
            let others: Vec<usize> = all.iter().copied().filter(|&j| j != f).collect();
            for hs in subsets(&others, 4) {
                let hr: Vec<Vec<u32>> = hs.iter().map(|&j| rows[j - 1].clone()).collect();
                let out = msr_repair(&p, f, &hs, &hr).map_err(|e| e.to_string())?;
                ensure!(out.row == rows[f - 1], "node {f} helpers {hs:?}");
                ensure!(out.downloads == 4, "downloaded {}", out.downloads);
                repairs += 1;
            }
        }
        for set in subsets(&all, 3) {
            let sr: Vec<Vec<u32>> = set.iter().map(|&i| rows[i - 1].clone()).collect();
            ensure!(
                msr_reconstruct(&p, &set, &sr).map_err(|e| e.to_string())? == msg,
                "read set {set:?}"
            );
            reads += 1;
        }
    }
    Ok(format!("{repairs} repairs at d=4 symbols, {reads} reconstructions"))
}

/// Independent 64-bit FNV-1a.
fn fnv(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

fn criterion_9() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_mscr");
    let tmp = tempfile::TempDir::new().map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(900);
    let mut data = vec![0u8; 1 << 20];
    rng.fill(&mut data[..]);
    let input = tmp.path().join("input.bin");
    fs::write(&input, &data).map_err(|e| e.to_string())?;
    let dir = tmp.path().join("shards");
    let run = |args: &[&str]| -> Result<(), String> {
        let out = Command::new(bin).args(args).output().map_err(|e| e.to_string())?;
        ensure!(
            out.status.success(),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        Ok(())
    };
    let (ds, is) = (dir.to_str().unwrap(), input.to_str().unwrap());
    run(&[
        "encode", is, "--n", "8", "--k", "4", "--d", "6", "--t", "2", "--out", ds,
    ])?;
    let all: Vec<usize> = (1..=8).collect();
    let lost: Vec<usize> = all.choose_multiple(&mut rng, 2).copied().collect();
    for &i in &lost {
        fs::remove_file(dir.join(shard_file_name(i))).map_err(|e| e.to_string())?;
    }
    run(&["repair", ds])?;
    let keep: HashSet<usize> = all.choose_multiple(&mut rng, 4).copied().collect();
    for &i in all.iter().filter(|i| !keep.contains(i)) {
        fs::remove_file(dir.join(shard_file_name(i))).map_err(|e| e.to_string())?;
    }
    let output = tmp.path().join("output.bin");
    run(&["decode", ds, "--out", output.to_str().unwrap()])?;
    let back = fs::read(&output).map_err(|e| e.to_string())?;
    ensure!(
        fnv(&back) == fnv(&data),
        "checksum {:016x} != {:016x}",
        fnv(&back),
        fnv(&data)
    );
    let mut kept: Vec<usize> = keep.into_iter().collect();
    kept.sort_unstable();
    Ok(format!(
        "lost {lost:?}, decoded from {kept:?}, fnv1a {:016x}",
        fnv(&data)
    ))
}

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let mut stripes = 0;
    for c in GRID.into_iter().chain([SHORTENED]) {
        let p = params(c);
        let codec = Codec::new(&p).map_err(|e| e.to_string())?;
        let data = random_symbols(&p, p.message_len() * 50, &mut rng);
        check_systematic(&p, &codec.encode(&data).map_err(|e| e.to_string())?, &data)?;
        check_systematic(&p, &codec.encode_structured(&data).map_err(|e| e.to_string())?, &data)?;
        stripes += 100;
    }
    Ok(format!(
        "nodes 1..k verbatim in {stripes} stripes (plus every encode of 2-5)"
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (1, "parameter law", 1.0, criterion_1),
        (2, "data reconstruction", 30.0, criterion_2),
        (3, "cooperative repair exactness", 60.0, criterion_3),
        (4, "bandwidth optimality", f64::INFINITY, criterion_4),
        (5, "shortening", 30.0, criterion_5),
        (6, "pair decoder oracle", f64::INFINITY, criterion_6),
        (7, "H invertibility", f64::INFINITY, criterion_7),
        (8, "MSR reference", f64::INFINITY, criterion_8),
        (9, "CLI round trip", 10.0, criterion_9),
        (10, "systematic property", f64::INFINITY, criterion_10),
    ];
    let mut failures = 0;
    for (id, name, limit, f) in criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        let (ok, detail) = match result {
            Ok(d) if secs <= limit => (true, d),
            Ok(d) => (false, format!("{d}; took {secs:.2}s, limit {limit}s")),
            Err(e) => (false, e),
        };
        if !ok {
            failures += 1;
        }
        let bound = if limit.is_finite() {
            format!(" < {limit}s")
        } else {
            String::new()
        };
        println!(
            "criterion {id:>2} {}: {name} [{secs:.2}s{bound}] {detail}",
            if ok { "PASS" } else { "FAIL" }
        );
    }
    if failures == 0 {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failures} criteria FAIL");
        ExitCode::FAILURE
    }
}
