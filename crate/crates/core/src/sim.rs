//! Deterministic in-process cluster: nodes hold shards, failures are
//! injected, cooperative repair is run and every symbol moved is logged.

use std::fmt::Write as _;
use std::ops::Range;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::params::CodeParams;
use crate::product_matrix::Shard;
use crate::repair::{HelperPolicy, RepairPlan};
use crate::systematic::{decode_systematic, encode_systematic, OuterMessage};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TrafficRecord {
    pub phase: u8,
    pub sender: usize,
    pub receiver: usize,
    pub symbols: usize,
}

#[derive(Clone, Debug)]
pub struct Cluster {
    params: CodeParams,
    nodes: Vec<Option<Shard>>,
    log: Vec<TrafficRecord>,
    sessions: Vec<Range<usize>>,
    seed: u64,
    rng: ChaCha8Rng,
}

/// Encodes `message` onto `n` fresh nodes.
pub fn create_cluster(params: &CodeParams, message: &OuterMessage, seed: u64) -> Result<Cluster> {
    let shards = encode_systematic(params, message)?;
    Ok(Cluster {
        params: params.clone(),
        nodes: shards.into_iter().map(Some).collect(),
        log: Vec::new(),
        sessions: Vec::new(),
        seed,
        rng: ChaCha8Rng::seed_from_u64(seed),
    })
}

impl Cluster {
    pub fn params(&self) -> &CodeParams {
        &self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Shard held by outer node `index`, `None` if failed.
    pub fn node(&self, index: usize) -> Option<&Shard> {
        self.nodes.get(index.wrapping_sub(1))?.as_ref()
    }

    pub fn failed(&self) -> Vec<usize> {
        (1..=self.params.n()).filter(|&i| self.nodes[i - 1].is_none()).collect()
    }

    pub fn alive(&self) -> Vec<&Shard> {
        self.nodes.iter().flatten().collect()
    }

    pub fn traffic_log(&self) -> &[TrafficRecord] {
        &self.log
    }

    /// Erases the given nodes. The total failed count may not exceed `t`.
    pub fn fail_nodes(&mut self, indices: &[usize]) -> Result<()> {
        let mut batch = indices.to_vec();
        batch.sort_unstable();
        for (pos, &i) in batch.iter().enumerate() {
            self.params.check_outer(i)?;
            if pos > 0 && batch[pos - 1] == i {
                return Err(Error::DuplicateIndex(i));
            }
            if self.nodes[i - 1].is_none() {
                return Err(Error::NodeNotAlive(i));
            }
        }
        let already = self.failed().len();
        if already + batch.len() > self.params.t() {
            return Err(Error::TooManyFailures {
                requested: batch.len(),
                failed: already,
                t: self.params.t(),
            });
        }
        for i in batch {
            self.nodes[i - 1] = None;
        }
        Ok(())
    }

    /// Fails `count` alive nodes chosen by the cluster's seeded RNG.
    pub fn fail_random(&mut self, count: usize) -> Result<Vec<usize>> {
        let alive: Vec<usize> = (1..=self.params.n()).filter(|&i| self.nodes[i - 1].is_some()).collect();
        if count > alive.len() {
            return Err(Error::TooManyFailures {
                requested: count,
                failed: self.params.n() - alive.len(),
                t: self.params.t(),
            });
        }
        let mut picked: Vec<usize> = sample(&mut self.rng, alive.len(), count)
            .into_iter()
            .map(|q| alive[q])
            .collect();
        picked.sort_unstable();
        self.fail_nodes(&picked)?;
        Ok(picked)
    }

    /// Repairs the failed nodes. Exactly `t` must be down; no failures is a
    /// no-op.
    pub fn run_cooperative_repair(&mut self, policy: &HelperPolicy) -> Result<()> {
        let failed = self.failed();
        if failed.is_empty() {
            return Ok(());
        }
        if failed.len() != self.params.t() {
            return Err(Error::Repair(format!(
                "{} nodes failed; repair runs on batches of exactly t = {}",
                failed.len(),
                self.params.t()
            )));
        }
        let plan = RepairPlan::new(&self.params, &failed, policy)?;
        let alpha = self.params.alpha();
        let stripes = self.alive()[0].stripe_count(alpha);
        let mut records = Vec::new();
        let mut rows: Vec<Vec<u32>> = vec![Vec::with_capacity(stripes * alpha); failed.len()];
        for s in 0..stripes {
            let out = plan.run_stripe(|j| self.nodes[j - 1].as_ref().expect("helpers are alive").stripe(alpha, s))?;
            for (acc, row) in rows.iter_mut().zip(out.rows) {
                acc.extend(row);
            }
            records.extend(out.transfers.into_iter().map(|t| TrafficRecord {
                phase: t.phase,
                sender: t.sender,
                receiver: t.receiver,
                symbols: t.symbols,
            }));
        }
        for (&i, symbols) in failed.iter().zip(rows) {
            self.nodes[i - 1] = Some(Shard {
                index: i,
                symbols,
                params: self.params.digest(),
            });
        }
        let start = self.log.len();
        self.log.extend(records);
        self.sessions.push(start..self.log.len());
        Ok(())
    }

    /// Decodes the message from the alive nodes listed in `indices`.
    pub fn read(&self, indices: &[usize]) -> Result<OuterMessage> {
        let shards: Vec<Shard> = indices
            .iter()
            .map(|&i| self.node(i).cloned().ok_or(Error::NodeNotAlive(i)))
            .collect::<Result<_>>()?;
        decode_systematic(&self.params, &shards)
    }

    /// Checks every logged repair session against the `d + t - 1` optimum and
    /// every node's storage against `alpha` per stripe.
    pub fn audit_bandwidth(&self) -> BandwidthReport {
        let alpha = self.params.alpha();
        let stripes = self.alive().first().map_or(1, |s| s.stripe_count(alpha)).max(1);
        let stored: Vec<usize> = self
            .nodes
            .iter()
            .map(|n| n.as_ref().map_or(0, |s| s.symbols.len() / stripes))
            .collect();
        let mut report = BandwidthReport {
            newcomers: Vec::new(),
            total_symbols: 0,
            storage_ok: stored.iter().all(|&s| s == alpha),
            pass: true,
        };
        for (session, range) in self.sessions.iter().enumerate() {
            let part = BandwidthReport::from_log(&self.params, &self.log[range.clone()], stripes, &stored);
            report.total_symbols += part.total_symbols;
            report.pass &= part.pass;
            report
                .newcomers
                .extend(part.newcomers.into_iter().map(|n| NewcomerTraffic { session, ..n }));
        }
        report.pass &= report.storage_ok;
        report
    }

    /// One `phase,sender,receiver,symbols` line per record.
    pub fn export_log(&self) -> String {
        export_log(&self.log)
    }
}

pub fn export_log(records: &[TrafficRecord]) -> String {
    let mut out = String::new();
    for r in records {
        writeln!(out, "{},{},{},{}", r.phase, r.sender, r.receiver, r.symbols).expect("writing to a String");
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NewcomerTraffic {
    pub session: usize,
    pub node: usize,
    pub phase1: usize,
    pub phase2: usize,
}

impl NewcomerTraffic {
    pub fn total(&self) -> usize {
        self.phase1 + self.phase2
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BandwidthReport {
    pub newcomers: Vec<NewcomerTraffic>,
    pub total_symbols: usize,
    pub storage_ok: bool,
    pub pass: bool,
}

impl BandwidthReport {
    /// Audits the records of one repair session over `stripes` stripes.
    /// `stored[i]` is node `i+1`'s symbols per stripe.
    pub fn from_log(params: &CodeParams, records: &[TrafficRecord], stripes: usize, stored: &[usize]) -> Self {
        let mut newcomers: Vec<NewcomerTraffic> = Vec::new();
        for r in records {
            let pos = match newcomers.iter().position(|n| n.node == r.receiver) {
                Some(p) => p,
                None => {
                    newcomers.push(NewcomerTraffic {
                        session: 0,
                        node: r.receiver,
                        phase1: 0,
                        phase2: 0,
                    });
                    newcomers.len() - 1
                }
            };
            match r.phase {
                1 => newcomers[pos].phase1 += r.symbols,
                _ => newcomers[pos].phase2 += r.symbols,
            }
        }
        newcomers.sort_by_key(|n| n.node);
        let total_symbols = records.iter().map(|r| r.symbols).sum();
        let storage_ok = stored.iter().all(|&s| s == params.alpha());
        let bad_phase = records.iter().any(|r| r.phase != 1 && r.phase != 2);
        let optimal = newcomers
            .iter()
            .all(|n| n.phase1 == params.d() * stripes && n.phase2 == (params.t() - 1) * stripes);
        BandwidthReport {
            pass: storage_ok && optimal && !bad_phase,
            newcomers,
            total_symbols,
            storage_ok,
        }
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        for n in &self.newcomers {
            writeln!(
                out,
                "session {} node {}: phase1={} phase2={} total={}",
                n.session,
                n.node,
                n.phase1,
                n.phase2,
                n.total()
            )
            .expect("writing to a String");
        }
        writeln!(
            out,
            "total={} storage={} {}",
            self.total_symbols,
            if self.storage_ok { "ok" } else { "bad" },
            if self.pass { "PASS" } else { "FAIL" }
        )
        .expect("writing to a String");
        out
    }
}
