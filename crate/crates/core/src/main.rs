use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mscr::cli;
use mscr::Result;

#[derive(Parser)]
#[command(name = "mscr", version, about = "Cooperative regenerating-code file tool")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CodeArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    d: usize,
    #[arg(long)]
    t: usize,
    /// Prime modulus; default is the smallest admissible prime >= 257.
    #[arg(long)]
    modulus: Option<u32>,
}

#[derive(Subcommand)]
enum Command {
    /// Split a file into n shard files plus a manifest.
    Encode {
        input: PathBuf,
        #[command(flatten)]
        code: CodeArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rebuild the original file from any k shard files.
    Decode {
        dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Regenerate exactly t missing shard files.
    Repair {
        dir: PathBuf,
        /// `lowest`, `round-robin`, `3,4,5`, or per-newcomer lists split by `;`.
        #[arg(long, default_value = "lowest")]
        helpers: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Describe a shard file, manifest or shard directory.
    Inspect { path: PathBuf },
    /// Fail t random nodes of a simulated cluster and repair them.
    Simulate {
        #[command(flatten)]
        code: CodeArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "lowest")]
        helpers: String,
        /// Write the traffic log here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the exhaustive small-instance checks.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Encode { input, code, out } => {
            let p = cli::file_params(code.n, code.k, code.d, code.t, code.modulus)?;
            let s = cli::encode_file(&input, &p, &out)?;
            println!(
                "encoded {} bytes into {} stripes, {} shards, modulus {}",
                s.manifest.length,
                s.manifest.stripes,
                p.n(),
                p.modulus()
            );
        }
        Command::Decode { dir, out } => {
            let s = cli::decode_file(&dir, &out)?;
            println!("decoded {} bytes, checksum {:016x} ok", s.length, s.checksum);
        }
        Command::Repair { dir, helpers, out } => {
            let (_, p, _) = cli::load_dir(&dir)?;
            let policy = cli::parse_helper_policy(&helpers, p.t())?;
            let s = cli::repair_dir(&dir, &policy, out.as_deref())?;
            for ((node, dl), hs) in s.failed.iter().zip(&s.downloads).zip(&s.helpers) {
                println!(
                    "node {node}: helpers {hs:?}, downloaded {} symbols ({} phase 1 + {} phase 2) over {} stripes, {} per stripe",
                    dl.total(),
                    dl.phase1,
                    dl.phase2,
                    s.stripes,
                    dl.total() / s.stripes.max(1)
                );
            }
        }
        Command::Inspect { path } => print!("{}", cli::inspect(&path)?),
        Command::Simulate {
            code,
            seed,
            helpers,
            out,
        } => {
            let p = mscr::params::CodeParams::new(
                code.n,
                code.k,
                code.d,
                code.t,
                code.modulus
                    .map_or(mscr::params::Modulus::default(), mscr::params::Modulus::Fixed),
            )?;
            let policy = cli::parse_helper_policy(&helpers, p.t())?;
            let s = cli::simulate(&p, seed, &policy)?;
            println!("failed {:?}, restored: {}", s.failed, s.restored);
            print!("{}", s.report.summary());
            if let Some(path) = out {
                std::fs::write(path, &s.log)?;
            }
            return Ok(s.restored && s.report.pass);
        }
        Command::Selftest { seed } => {
            let results = cli::selftest(seed);
            for (name, ok) in &results {
                println!("{} {name}", if *ok { "PASS" } else { "FAIL" });
            }
            return Ok(results.iter().all(|(_, ok)| *ok));
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
