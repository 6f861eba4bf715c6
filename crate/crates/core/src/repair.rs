//! Two-phase cooperative repair of `t` failed nodes.
//!
//! Phase 1: each newcomer `i` downloads `c_j * phi_i^T` from its `d` helpers
//! (plus an implicit zero from each imaginary inner node), inverts the helper
//! Vandermonde to get `omega = M * phi_i^T`, and folds `omega` into `mu` linear
//! equations on its own content `c_i`.
//!
//! Phase 2: every other newcomer `j` sends `psi_i * omega_j = c_i * phi_j^T`,
//! one more equation each. The `mu + t - 1 = alpha` equations have an
//! invertible coefficient matrix `H` because the `lambda_j = x_j^mu` are
//! pairwise distinct.
//!
//! Each newcomer downloads exactly `d + t - 1` symbols.

use crate::error::{Error, Result};
use crate::field::Gf;
use crate::linalg::{determinant, inverse, solve, solve_vec, Matrix};
use crate::params::CodeParams;
use crate::product_matrix::{build_repair_vector, generator_row, Shard};
use rayon::prelude::*;

/// The symbol helper `j` sends newcomer `i`: `c_j * phi_i^T`.
pub fn helper_symbol(gf: Gf, helper_row: &[u32], phi_newcomer: &[u32]) -> u32 {
    gf.dot(helper_row, phi_newcomer)
}

/// Inner indices of the helper rows: imaginary nodes first, then the real ones.
fn inner_helpers(params: &CodeParams, helpers: &[usize]) -> Vec<usize> {
    (1..=params.delta())
        .chain(helpers.iter().map(|&h| params.inner_index(h)))
        .collect()
}

fn helper_matrix(params: &CodeParams, helpers: &[usize]) -> Matrix {
    let rows: Vec<Vec<u32>> = inner_helpers(params, helpers)
        .into_iter()
        .map(|i| generator_row(params, i))
        .collect();
    Matrix::from_rows(&rows)
}

/// Solves the helper Vandermonde system for `omega = M * phi_i^T`.
/// `symbols[q]` came from outer node `helpers[q]`; imaginary helpers
/// contribute zeros.
pub fn recover_mphi(params: &CodeParams, newcomer: usize, helpers: &[usize], symbols: &[u32]) -> Result<Vec<u32>> {
    params.check_outer(newcomer)?;
    if helpers.len() != params.d() || symbols.len() != params.d() {
        return Err(Error::Repair(format!(
            "newcomer {newcomer} needs exactly d = {} helper symbols, got {} helpers and {} symbols",
            params.d(),
            helpers.len(),
            symbols.len()
        )));
    }
    let psi = helper_matrix(params, helpers);
    let mut rhs = vec![0u32; params.delta()];
    rhs.extend_from_slice(symbols);
    solve_vec(params.gf(), &psi, &rhs)
}

/// The `mu` Phase-1 equations `H_{i,1} * c_i^T = values`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Phase1Equations {
    pub coefficients: Matrix,
    pub values: Vec<u32>,
}

/// Number of `omega` terms folded into equation `l` (1-based).
fn fold_len(params: &CodeParams, l: usize) -> usize {
    if l <= params.r() {
        params.z() + 1
    } else {
        params.z()
    }
}

fn phase1_values(params: &CodeParams, lambda: u32, omega: &[u32]) -> Vec<u32> {
    let gf = params.gf();
    let mu = params.mu();
    (1..=mu)
        .map(|l| {
            // Horner from the highest power down.
            (0..fold_len(params, l))
                .rev()
                .fold(0, |acc, j| gf.mul_add(omega[j * mu + l - 1], acc, lambda))
        })
        .collect()
}

fn phase1_coefficients(params: &CodeParams, lambda: u32) -> Matrix {
    let gf = params.gf();
    let mu = params.mu();
    let mut h1 = Matrix::zeros(mu, params.alpha());
    for l in 1..=mu {
        let mut pw = 1;
        for j in 0..fold_len(params, l) - 1 {
            h1[(l - 1, j * mu + l - 1)] = pw;
            pw = gf.mul(pw, lambda);
        }
    }
    h1
}

/// Folds `omega` into `mu` equations on `c_i`:
/// `sum_j lambda_i^j * omega[j*mu + l]` over `j = 0..=z` for `l <= r` and
/// `j = 0..z` otherwise.
pub fn phase1_equations(params: &CodeParams, newcomer: usize, omega: &[u32]) -> Result<Phase1Equations> {
    params.check_outer(newcomer)?;
    if omega.len() != params.d_inner() {
        return Err(Error::LengthMismatch {
            expected: params.d_inner(),
            got: omega.len(),
        });
    }
    let lambda = params.lambda(params.inner_index(newcomer));
    Ok(Phase1Equations {
        coefficients: phase1_coefficients(params, lambda),
        values: phase1_values(params, lambda, omega),
    })
}

/// What failed node `sender` sends failed node `receiver` in Phase 2:
/// `psi_receiver * omega_sender`, equal to `c_receiver * phi_sender^T`.
pub fn phase2_exchange(params: &CodeParams, sender: usize, receiver: usize, omega_sender: &[u32]) -> Result<u32> {
    params.check_outer(sender)?;
    params.check_outer(receiver)?;
    if sender == receiver {
        return Err(Error::Repair("a newcomer does not exchange with itself".into()));
    }
    if omega_sender.len() != params.d_inner() {
        return Err(Error::MissingPhase1(sender));
    }
    let psi = generator_row(params, params.inner_index(receiver));
    Ok(params.gf().dot(&psi, omega_sender))
}

/// `H = [H_{i,1}; H_{i,2}]` for newcomer `i` and failed set `failed`, with
/// `H_{i,2}` holding `phi_j` for the other failed nodes in the given order.
pub fn coefficient_matrix(params: &CodeParams, newcomer: usize, failed: &[usize]) -> Result<Matrix> {
    params.check_outer(newcomer)?;
    let lambda = params.lambda(params.inner_index(newcomer));
    let h1 = phase1_coefficients(params, lambda);
    let mut rows = h1.to_rows();
    for &j in failed.iter().filter(|&&j| j != newcomer) {
        params.check_outer(j)?;
        rows.push(build_repair_vector(params, params.inner_index(j))?);
    }
    if rows.len() != params.alpha() {
        return Err(Error::Repair(format!(
            "failed set of size {} does not give alpha = {} equations",
            failed.len(),
            params.alpha()
        )));
    }
    Ok(Matrix::from_rows(&rows))
}

/// Solves `H * c_i^T = rhs`. A singular `H` means the distinct-power
/// condition on the field points is broken.
pub fn solve_newcomer(params: &CodeParams, h: &Matrix, rhs: &[u32]) -> Result<Vec<u32>> {
    solve_vec(params.gf(), h, rhs)
}

/// Applies the column operations that take `H` to
/// `[[I_mu, 0], [P, (D - lambda_i I) * V]]`, where `D` is the diagonal of the
/// other newcomers' `lambda_j` and `V` their `(t-1) x (t-1)` Vandermonde.
/// Working right to left, each column block subtracts `lambda_i` times the
/// block before it.
pub fn reduce_to_block_form(params: &CodeParams, newcomer: usize, h: &Matrix) -> Result<Matrix> {
    params.check_outer(newcomer)?;
    let gf = params.gf();
    let (mu, alpha) = (params.mu(), params.alpha());
    if h.rows() != alpha || h.cols() != alpha {
        return Err(Error::Dimension(format!("H must be {alpha}x{alpha}")));
    }
    let lambda = params.lambda(params.inner_index(newcomer));
    let mut out = h.clone();
    for block in (1..params.z()).rev() {
        for c in 0..mu {
            let dst = block * mu + c;
            if dst >= alpha {
                break;
            }
            let src = dst - mu;
            for row in 0..alpha {
                let v = gf.sub(out[(row, dst)], gf.mul(lambda, out[(row, src)]));
                out[(row, dst)] = v;
            }
        }
    }
    Ok(out)
}

/// How newcomers pick their `d` helpers among the surviving nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HelperPolicy {
    /// The `d` lowest-indexed survivors, for every newcomer.
    LowestIndex,
    /// Newcomer number `q` (in ascending order) starts `q` places further
    /// along the ring of survivors.
    RoundRobin,
    /// One helper list per newcomer, in ascending newcomer order.
    Explicit(Vec<Vec<usize>>),
}

/// Resolves a policy into per-newcomer helper sets (each sorted ascending).
pub fn select_helpers(params: &CodeParams, failed: &[usize], policy: &HelperPolicy) -> Result<Vec<Vec<usize>>> {
    let survivors: Vec<usize> = (1..=params.n()).filter(|i| !failed.contains(i)).collect();
    let d = params.d();
    if survivors.len() < d {
        return Err(Error::Repair(format!(
            "only {} survivors, d = {d} helpers needed",
            survivors.len()
        )));
    }
    let sets = match policy {
        HelperPolicy::LowestIndex => vec![survivors[..d].to_vec(); failed.len()],
        HelperPolicy::RoundRobin => (0..failed.len())
            .map(|q| {
                let mut h: Vec<usize> = (0..d).map(|m| survivors[(q + m) % survivors.len()]).collect();
                h.sort_unstable();
                h
            })
            .collect(),
        HelperPolicy::Explicit(sets) => {
            if sets.len() != failed.len() {
                return Err(Error::Repair(format!(
                    "{} helper sets given for {} newcomers",
                    sets.len(),
                    failed.len()
                )));
            }
            let mut out = Vec::with_capacity(sets.len());
            for set in sets {
                let mut h = set.clone();
                h.sort_unstable();
                if h.len() != d {
                    return Err(Error::Repair(format!("helper set {set:?} does not have d = {d} nodes")));
                }
                for (pos, &j) in h.iter().enumerate() {
                    params.check_outer(j)?;
                    if failed.contains(&j) {
                        return Err(Error::Repair(format!("helper {j} is itself failed")));
                    }
                    if pos > 0 && h[pos - 1] == j {
                        return Err(Error::DuplicateIndex(j));
                    }
                }
                out.push(h);
            }
            out
        }
    };
    Ok(sets)
}

#[derive(Clone, Debug)]
struct NewcomerPlan {
    index: usize,
    lambda: u32,
    phi: Vec<u32>,
    psi: Vec<u32>,
    helper_inverse: Matrix,
    h: Matrix,
    h_det: u32,
    h_inverse: Matrix,
}

/// Stripe-independent part of a repair: helper sets and the inverted
/// systems for every newcomer.
#[derive(Clone, Debug)]
pub struct RepairPlan {
    params: CodeParams,
    failed: Vec<usize>,
    helpers: Vec<Vec<usize>>,
    newcomers: Vec<NewcomerPlan>,
}

impl RepairPlan {
    /// `failed` must have exactly `t` distinct outer indices.
    pub fn new(params: &CodeParams, failed: &[usize], policy: &HelperPolicy) -> Result<Self> {
        let mut failed = failed.to_vec();
        failed.sort_unstable();
        for (pos, &i) in failed.iter().enumerate() {
            params.check_outer(i)?;
            if pos > 0 && failed[pos - 1] == i {
                return Err(Error::DuplicateIndex(i));
            }
        }
        if failed.len() != params.t() {
            return Err(Error::Repair(format!(
                "cooperative repair handles exactly t = {} failures, got {}",
                params.t(),
                failed.len()
            )));
        }
        let helpers = select_helpers(params, &failed, policy)?;
        let gf = params.gf();
        let newcomers = failed
            .iter()
            .zip(&helpers)
            .map(|(&i, hs)| {
                let inner = params.inner_index(i);
                let helper_inverse = inverse(gf, &helper_matrix(params, hs))?;
                let h = coefficient_matrix(params, i, &failed)?;
                let h_det = determinant(gf, &h)?;
                let h_inverse = inverse(gf, &h)?;
                Ok(NewcomerPlan {
                    index: i,
                    lambda: params.lambda(inner),
                    phi: build_repair_vector(params, inner)?,
                    psi: generator_row(params, inner),
                    helper_inverse,
                    h,
                    h_det,
                    h_inverse,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RepairPlan {
            params: params.clone(),
            failed,
            helpers,
            newcomers,
        })
    }

    pub fn params(&self) -> &CodeParams {
        &self.params
    }

    /// Failed nodes in ascending order; newcomer positions follow this order.
    pub fn failed(&self) -> &[usize] {
        &self.failed
    }

    pub fn helpers(&self) -> &[Vec<usize>] {
        &self.helpers
    }

    pub fn coefficient_matrix(&self, pos: usize) -> &Matrix {
        &self.newcomers[pos].h
    }

    pub fn determinant(&self, pos: usize) -> u32 {
        self.newcomers[pos].h_det
    }

    pub fn session(&self) -> RepairSession<'_> {
        let t = self.failed.len();
        RepairSession {
            plan: self,
            omega: vec![None; t],
            values: vec![Vec::new(); t],
            phase2_done: false,
            downloads: vec![Downloads::default(); t],
            transfers: Vec::new(),
        }
    }

    /// Runs both phases on one stripe. `row(j)` returns the `alpha` symbols
    /// of surviving outer node `j`.
    pub fn run_stripe<'r, F>(&self, row: F) -> Result<RepairOutcome>
    where
        F: Fn(usize) -> &'r [u32],
    {
        let gf = self.params.gf();
        let mut session = self.session();
        for (pos, nc) in self.newcomers.iter().enumerate() {
            let symbols: Vec<u32> = self.helpers[pos]
                .iter()
                .map(|&j| helper_symbol(gf, row(j), &nc.phi))
                .collect();
            session.phase1(pos, &symbols)?;
        }
        session.phase2()?;
        session.finish()
    }
}

/// Per-newcomer download counters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Downloads {
    pub phase1: usize,
    pub phase2: usize,
}

impl Downloads {
    pub fn total(&self) -> usize {
        self.phase1 + self.phase2
    }
}

/// One symbol moved between nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Transfer {
    pub phase: u8,
    pub sender: usize,
    pub receiver: usize,
    pub symbols: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RepairOutcome {
    /// Repaired content, one row per newcomer in ascending index order.
    pub rows: Vec<Vec<u32>>,
    pub downloads: Vec<Downloads>,
    pub transfers: Vec<Transfer>,
}

/// State of one stripe's repair. All Phase-1 steps must complete before
/// [`RepairSession::phase2`].
#[derive(Debug)]
pub struct RepairSession<'a> {
    plan: &'a RepairPlan,
    omega: Vec<Option<Vec<u32>>>,
    values: Vec<Vec<u32>>,
    phase2_done: bool,
    downloads: Vec<Downloads>,
    transfers: Vec<Transfer>,
}

impl RepairSession<'_> {
    /// Newcomer at position `pos` receives one symbol from each of its
    /// helpers, in the plan's helper order.
    pub fn phase1(&mut self, pos: usize, symbols: &[u32]) -> Result<()> {
        let plan = self.plan;
        let p = &plan.params;
        let nc = plan
            .newcomers
            .get(pos)
            .ok_or_else(|| Error::Repair(format!("no newcomer at position {pos}")))?;
        if self.phase2_done || self.omega[pos].is_some() {
            return Err(Error::Repair(format!("phase 1 already ran for node {}", nc.index)));
        }
        if symbols.len() != p.d() {
            return Err(Error::LengthMismatch {
                expected: p.d(),
                got: symbols.len(),
            });
        }
        let mut rhs = vec![0u32; p.delta()];
        rhs.extend_from_slice(symbols);
        let omega = nc.helper_inverse.mul_vec(p.gf(), &rhs);
        self.values[pos] = phase1_values(p, nc.lambda, &omega);
        self.omega[pos] = Some(omega);
        for &j in &plan.helpers[pos] {
            self.transfers.push(Transfer {
                phase: 1,
                sender: j,
                receiver: nc.index,
                symbols: 1,
            });
        }
        self.downloads[pos].phase1 += symbols.len();
        Ok(())
    }

    /// Every newcomer sends one symbol to every other newcomer.
    pub fn phase2(&mut self) -> Result<()> {
        let plan = self.plan;
        if self.phase2_done {
            return Err(Error::Repair("phase 2 already ran".into()));
        }
        if let Some(pos) = self.omega.iter().position(Option::is_none) {
            return Err(Error::MissingPhase1(plan.newcomers[pos].index));
        }
        let gf = plan.params.gf();
        for (ri, receiver) in plan.newcomers.iter().enumerate() {
            for (si, sender) in plan.newcomers.iter().enumerate() {
                if si == ri {
                    continue;
                }
                let omega = self.omega[si].as_ref().expect("checked above");
                let sym = gf.dot(&receiver.psi, omega);
                self.values[ri].push(sym);
                self.downloads[ri].phase2 += 1;
                self.transfers.push(Transfer {
                    phase: 2,
                    sender: sender.index,
                    receiver: receiver.index,
                    symbols: 1,
                });
            }
        }
        self.phase2_done = true;
        Ok(())
    }

    pub fn downloads(&self) -> &[Downloads] {
        &self.downloads
    }

    pub fn finish(self) -> Result<RepairOutcome> {
        if !self.phase2_done {
            return Err(Error::Repair("phase 2 has not run".into()));
        }
        let gf = self.plan.params.gf();
        let rows = self
            .plan
            .newcomers
            .iter()
            .zip(&self.values)
            .map(|(nc, v)| nc.h_inverse.mul_vec(gf, v))
            .collect();
        Ok(RepairOutcome {
            rows,
            downloads: self.downloads,
            transfers: self.transfers,
        })
    }
}

/// Repairs one stripe by the step-by-step route (no precomputed inverses).
/// `rows[j-1]` is the content of outer node `j`; failed entries are ignored.
pub fn repair_stripe_direct(
    params: &CodeParams,
    rows: &[Vec<u32>],
    failed: &[usize],
    helpers: &[Vec<usize>],
) -> Result<Vec<Vec<u32>>> {
    let gf = params.gf();
    let mut omegas = Vec::with_capacity(failed.len());
    let mut eqs = Vec::with_capacity(failed.len());
    for (&i, hs) in failed.iter().zip(helpers) {
        let phi = build_repair_vector(params, params.inner_index(i))?;
        let symbols: Vec<u32> = hs.iter().map(|&j| helper_symbol(gf, &rows[j - 1], &phi)).collect();
        let omega = recover_mphi(params, i, hs, &symbols)?;
        eqs.push(phase1_equations(params, i, &omega)?);
        omegas.push(omega);
    }
    failed
        .iter()
        .enumerate()
        .map(|(pos, &i)| {
            let mut rhs = eqs[pos].values.clone();
            for (spos, &j) in failed.iter().enumerate() {
                if j != i {
                    rhs.push(phase2_exchange(params, j, i, &omegas[spos])?);
                }
            }
            let h = coefficient_matrix(params, i, failed)?;
            solve_newcomer(params, &h, &rhs)
        })
        .collect()
}

/// Solves `H * X = B` for many right-hand sides; exposed for callers that
/// batch stripes.
pub fn solve_many(params: &CodeParams, h: &Matrix, rhs: &Matrix) -> Result<Matrix> {
    solve(params.gf(), h, rhs)
}

/// Repair result across all stripes of the failed shards.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShardRepair {
    /// Regenerated shards in ascending index order.
    pub shards: Vec<Shard>,
    /// Per-newcomer downloads summed over stripes.
    pub downloads: Vec<Downloads>,
    pub stripes: usize,
}

/// Regenerates every stripe of `plan.failed()` from the surviving shards.
/// Stripes run in parallel; the result does not depend on scheduling.
pub fn repair_shards(plan: &RepairPlan, survivors: &[Shard]) -> Result<ShardRepair> {
    let p = &plan.params;
    let alpha = p.alpha();
    let mut by_index: Vec<Option<&Shard>> = vec![None; p.n() + 1];
    for s in survivors {
        p.check_outer(s.index)?;
        if s.params != p.digest() {
            return Err(Error::Header(format!("shard {} belongs to a different code", s.index)));
        }
        if by_index[s.index].replace(s).is_some() {
            return Err(Error::DuplicateIndex(s.index));
        }
    }
    let mut stripes = None;
    for hs in &plan.helpers {
        for &j in hs {
            let s = by_index[j].ok_or_else(|| Error::Repair(format!("helper shard {j} is not available")))?;
            if s.symbols.len() % alpha != 0 || *stripes.get_or_insert(s.symbols.len()) != s.symbols.len() {
                return Err(Error::LengthMismatch {
                    expected: stripes.unwrap_or(0),
                    got: s.symbols.len(),
                });
            }
        }
    }
    let stripes = stripes.unwrap_or(0) / alpha;
    let outcomes: Vec<RepairOutcome> = (0..stripes)
        .into_par_iter()
        .map(|st| plan.run_stripe(|j| by_index[j].expect("checked above").stripe(alpha, st)))
        .collect::<Result<_>>()?;
    let t = plan.failed.len();
    let mut downloads = vec![Downloads::default(); t];
    let mut symbols = vec![Vec::with_capacity(stripes * alpha); t];
    for o in &outcomes {
        for pos in 0..t {
            downloads[pos].phase1 += o.downloads[pos].phase1;
            downloads[pos].phase2 += o.downloads[pos].phase2;
            symbols[pos].extend_from_slice(&o.rows[pos]);
        }
    }
    let shards = plan
        .failed
        .iter()
        .zip(symbols)
        .map(|(&index, symbols)| Shard {
            index,
            symbols,
            params: p.digest(),
        })
        .collect();
    Ok(ShardRepair {
        shards,
        downloads,
        stripes,
    })
}
