//! Turning a symbolic matrix into concrete queries, running them against
//! simulated servers and decoding the desired message.
//!
//! Query construction for a desired index `d`:
//!
//! * an entry of value `k` holds one k-query per k-subset `S` of messages;
//! * if `d` is not in `S`, the query is a share of the family owned by the
//!   group the entry is a member of (one family per group and subset);
//! * if `d` is in `S`, the query is a fresh uniform vector in the block of
//!   `d`, plus, for `k >= 2`, the continuation share of the family
//!   `(generating group, S \ {d})` at this column.
//!
//! Every continuation is cancelled with the answers of that family's `r`
//! member slots, which touch no desired data. What remains is `N^{M-1}`
//! linear functionals of the desired message per round.

use std::collections::HashMap;

use num::BigRational;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PirError, Result};
use crate::lift::{self, Position, SymbolicMatrix};
use crate::linalg::Matrix;
use crate::plan::{
    FamilySpec, Randomness, SchedulePlan, SchemeBuilder, SlotPosition, SlotSpec, Term,
};
use crate::storage::{answer, rs_decode_stripe, Database, Message, QueryVector, StorageConfig};

/// Redraws allowed when sampled desired functionals are dependent.
pub const MAX_REDRAWS: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotMeta {
    pub slot: usize,
    pub position: Option<SlotPosition>,
    pub subset: Vec<usize>,
    pub family: Option<usize>,
    pub fresh: Option<usize>,
}

/// Concrete queries plus the user's private bookkeeping.
///
/// Only `per_server` is ever sent; `slot_meta`, `plan` and `randomness`
/// stay with the user.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuerySchedule {
    pub desired: usize,
    pub seed: u64,
    pub per_server: Vec<Vec<QueryVector>>,
    pub slot_meta: Vec<Vec<SlotMeta>>,
    pub plan: SchedulePlan,
    pub randomness: Randomness,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub answers: Vec<Vec<u64>>,
    pub download_count: usize,
}

impl QuerySchedule {
    pub fn total_queries(&self) -> usize {
        self.per_server.iter().map(Vec::len).sum()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

impl Transcript {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Samples queries for a plan and shuffles each server's list. No
/// decodability check; this is the raw query distribution.
pub fn sample_schedule<R: Rng + ?Sized>(plan: &SchedulePlan, rng: &mut R, seed: u64) -> QuerySchedule {
    let randomness = plan.sample(rng);
    assemble(plan, randomness, rng, seed)
}

fn assemble<R: Rng + ?Sized>(
    plan: &SchedulePlan,
    randomness: Randomness,
    rng: &mut R,
    seed: u64,
) -> QuerySchedule {
    let queries = plan.realize(&randomness);
    let n = plan.config.n;
    let mut per_server = vec![Vec::new(); n];
    let mut slot_meta = vec![Vec::new(); n];
    let mut by_server: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (id, slot) in plan.slots.iter().enumerate() {
        by_server[slot.server - 1].push(id);
    }
    for (c, ids) in by_server.iter_mut().enumerate() {
        ids.shuffle(rng);
        for &id in ids.iter() {
            let slot = &plan.slots[id];
            per_server[c].push(queries[id].clone());
            slot_meta[c].push(SlotMeta {
                slot: id,
                position: slot.position,
                subset: slot.tag.clone(),
                family: slot.family(),
                fresh: slot.fresh,
            });
        }
    }
    QuerySchedule {
        desired: plan.desired,
        seed,
        per_server,
        slot_meta,
        plan: plan.clone(),
        randomness,
    }
}

/// Samples a schedule whose desired functionals are independent, redrawing
/// at most [`MAX_REDRAWS`] times.
pub fn schedule_from_plan(plan: &SchedulePlan, seed: u64) -> Result<QuerySchedule> {
    let cfg = &plan.config;
    if plan.fresh_count() != cfg.l {
        return Err(PirError::InvalidParameters(format!(
            "plan collects {} desired symbols but messages have L={}",
            plan.fresh_count(),
            cfg.l
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..=MAX_REDRAWS {
        let randomness = plan.sample(&mut rng);
        let rows = plan.desired_functionals(&randomness)?;
        if Matrix::from_rows(cfg.field, cfg.l, &rows)?.rank() == cfg.l {
            return Ok(assemble(plan, randomness, &mut rng, seed));
        }
    }
    Err(PirError::Singular(format!(
        "desired symbols stayed dependent after {MAX_REDRAWS} redraws; the field (p={}) is too small",
        cfg.field.modulus()
    )))
}

/// All k-subsets of `1..=m`, lexicographic.
pub fn k_subsets(m: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, m: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for x in start..=m {
            if m - x + 1 < k - cur.len() {
                break;
            }
            cur.push(x);
            rec(x + 1, m, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= m {
        rec(1, m, k, &mut Vec::new(), &mut out);
    }
    out
}

/// Message length used by the lifted scheme: the smallest multiple of
/// `N^{M-1}` that `K` divides.
pub fn lifted_message_len(n: usize, k: usize, m: usize) -> usize {
    let base = n.pow(m as u32 - 1);
    num::integer::lcm(base, k)
}

/// Refined-and-lifted scheme over a fixed symbolic matrix.
#[derive(Debug, Clone)]
pub struct LiftedBuilder {
    config: StorageConfig,
    matrix: SymbolicMatrix,
    rounds: usize,
}

impl LiftedBuilder {
    /// Uses `r = K + T - 1` and `S_M` for the config's `M`.
    pub fn new(config: StorageConfig) -> Result<Self> {
        let r = config.k + config.t - 1;
        let matrix = SymbolicMatrix::for_messages(config.n, r, config.m)?;
        Self::with_matrix(config, matrix)
    }

    pub fn with_matrix(config: StorageConfig, matrix: SymbolicMatrix) -> Result<Self> {
        config.validate()?;
        let r = config.k + config.t - 1;
        if matrix.n != config.n || matrix.r != r || matrix.m != config.m {
            return Err(PirError::InvalidParameters(format!(
                "matrix (N={}, r={}, M={}) does not fit storage (N={}, r={r}, M={})",
                matrix.n, matrix.r, matrix.m, config.n, config.m
            )));
        }
        let per_round = config.n.pow(config.m as u32 - 1);
        if !config.l.is_multiple_of(per_round) {
            return Err(PirError::InvalidParameters(format!(
                "L={} must be a multiple of N^(M-1)={per_round} (use L={})",
                config.l,
                lifted_message_len(config.n, config.k, config.m)
            )));
        }
        let rounds = config.l / per_round;
        Ok(LiftedBuilder {
            config,
            matrix,
            rounds,
        })
    }

    pub fn matrix(&self) -> &SymbolicMatrix {
        &self.matrix
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn r(&self) -> usize {
        self.matrix.r
    }
}

impl SchemeBuilder for LiftedBuilder {
    fn config(&self) -> &StorageConfig {
        &self.config
    }

    fn name(&self) -> String {
        format!(
            "lifted(N={},K={},T={},M={})",
            self.config.n, self.config.k, self.config.t, self.config.m
        )
    }

    fn plan(&self, desired: usize) -> Result<SchedulePlan> {
        let cfg = &self.config;
        let m = cfg.m;
        if desired == 0 || desired > m {
            return Err(PirError::InvalidParameters(format!(
                "desired index {desired} outside 1..={m}"
            )));
        }
        let subsets: Vec<Vec<Vec<usize>>> = (0..=m).map(|k| k_subsets(m, k)).collect();
        let mut families: Vec<FamilySpec> = Vec::new();
        let mut slots: Vec<SlotSpec> = Vec::new();
        let mut uniform_count = 0;
        let mut fresh = 0;
        for round in 0..self.rounds {
            let s = self.matrix.shifted(round);
            let mut member_of: HashMap<Position, usize> = HashMap::new();
            let mut child_of: HashMap<Position, usize> = HashMap::new();
            for (gi, g) in s.groups.iter().enumerate() {
                for p in &g.members {
                    member_of.insert(*p, gi);
                }
                for p in &g.generated {
                    child_of.insert(*p, gi);
                }
            }
            let mut family_ids: HashMap<(usize, Vec<usize>), usize> = HashMap::new();
            let mut family_for = |group: usize, subset: Vec<usize>, families: &mut Vec<FamilySpec>| {
                *family_ids.entry((group, subset.clone())).or_insert_with(|| {
                    families.push(FamilySpec {
                        support: subset,
                        threshold: cfg.t,
                        members: Vec::new(),
                    });
                    families.len() - 1
                })
            };
            for (i, row) in s.entries.iter().enumerate() {
                for (j, &k) in row.iter().enumerate() {
                    if k == 0 {
                        continue;
                    }
                    let pos = Position::new(i + 1, j + 1);
                    let server = pos.col;
                    for subset in &subsets[k] {
                        let id = slots.len();
                        let mut terms = Vec::new();
                        let mut fresh_idx = None;
                        if subset.contains(&desired) {
                            terms.push(Term::Uniform {
                                var: uniform_count,
                                message: desired,
                            });
                            uniform_count += 1;
                            if k >= 2 {
                                let group = child_of[&pos];
                                let rest: Vec<usize> =
                                    subset.iter().copied().filter(|&x| x != desired).collect();
                                let family = family_for(group, rest, &mut families);
                                terms.push(Term::Family { family, server });
                            }
                            fresh_idx = Some(fresh);
                            fresh += 1;
                        } else {
                            let group = *member_of.get(&pos).ok_or_else(|| {
                                PirError::InvalidParameters(format!(
                                    "entry {pos:?} holds non-desired queries but belongs to no group"
                                ))
                            })?;
                            let family = family_for(group, subset.clone(), &mut families);
                            families[family].members.push(id);
                            terms.push(Term::Family { family, server });
                        }
                        slots.push(SlotSpec {
                            server,
                            tag: subset.clone(),
                            terms,
                            position: Some(SlotPosition {
                                round,
                                row: pos.row,
                                col: pos.col,
                            }),
                            fresh: fresh_idx,
                        });
                    }
                }
            }
        }
        Ok(SchedulePlan {
            config: cfg.clone(),
            desired,
            families,
            uniform_count,
            slots,
        })
    }
}

/// Concrete schedule for the lifted scheme defined by `s`.
pub fn build_schedule(
    s: &SymbolicMatrix,
    config: &StorageConfig,
    desired: usize,
    seed: u64,
) -> Result<QuerySchedule> {
    let builder = LiftedBuilder::with_matrix(config.clone(), s.clone())?;
    schedule_from_plan(&builder.plan(desired)?, seed)
}

/// Every server answers every query it received.
pub fn run(schedule: &QuerySchedule, db: &Database) -> Result<Transcript> {
    let cfg = &schedule.plan.config;
    if db.config.n != cfg.n || db.config.shard_len() != cfg.shard_len() || db.config.field != cfg.field {
        return Err(PirError::InvalidParameters(
            "database does not match the schedule's storage parameters".into(),
        ));
    }
    if schedule.per_server.len() != cfg.n {
        return Err(PirError::DimensionMismatch {
            expected: cfg.n,
            got: schedule.per_server.len(),
        });
    }
    let answers = schedule
        .per_server
        .iter()
        .enumerate()
        .map(|(c, qs)| {
            qs.iter()
                .map(|q| answer(db.shard(c + 1), q, cfg.field))
                .collect::<Result<Vec<u64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let download_count = answers.iter().map(Vec::len).sum();
    Ok(Transcript {
        answers,
        download_count,
    })
}

/// Cancels interference and solves for the desired message.
pub fn decode(transcript: &Transcript, schedule: &QuerySchedule) -> Result<Message> {
    let plan = &schedule.plan;
    let cfg = &plan.config;
    let f = cfg.field;
    if transcript.answers.len() != schedule.per_server.len()
        || transcript
            .answers
            .iter()
            .zip(&schedule.per_server)
            .any(|(a, q)| a.len() != q.len())
    {
        return Err(PirError::InvalidParameters(
            "transcript shape does not match the schedule".into(),
        ));
    }
    let mut by_slot = vec![0u64; plan.slots.len()];
    for (c, metas) in schedule.slot_meta.iter().enumerate() {
        for (i, meta) in metas.iter().enumerate() {
            by_slot[meta.slot] = transcript.answers[c][i];
        }
    }
    let mut values = vec![0u64; plan.fresh_count()];
    for (id, slot) in plan.slots.iter().enumerate() {
        let Some(idx) = slot.fresh else { continue };
        let mut v = by_slot[id];
        if let Some(pred) = plan.continuation(id)? {
            let interference = pred
                .iter()
                .fold(0, |acc, &(member, lambda)| f.add(acc, f.mul(lambda, by_slot[member])));
            v = f.sub(v, interference);
        }
        values[idx] = v;
    }
    let functionals = plan.desired_functionals(&schedule.randomness)?;
    let symbols = match basis_stripes(plan) {
        Some(stripes) => {
            let mut out = vec![0u64; cfg.l];
            for (s, evals) in stripes.iter().enumerate() {
                let pairs: Vec<(usize, u64)> =
                    evals.iter().map(|&(server, idx)| (server, values[idx])).collect();
                let sym = rs_decode_stripe(&pairs, cfg)?;
                out[s * cfg.k..(s + 1) * cfg.k].copy_from_slice(&sym);
            }
            out
        }
        None => Matrix::from_rows(f, cfg.l, &functionals)?.solve(&values)?,
    };
    Ok(Message {
        index: plan.desired,
        symbols,
    })
}

/// When every desired symbol is a plain stripe evaluation and each stripe
/// has `K` of them on distinct servers, groups them per stripe.
fn basis_stripes(plan: &SchedulePlan) -> Option<Vec<Vec<(usize, usize)>>> {
    let cfg = &plan.config;
    let mut stripes = vec![Vec::new(); cfg.stripes()];
    for slot in &plan.slots {
        let Some(idx) = slot.fresh else { continue };
        let mut basis = slot.terms.iter().filter_map(|t| match t {
            Term::Basis { message, stripe } if *message == plan.desired => Some(*stripe),
            _ => None,
        });
        let stripe = basis.next()?;
        if basis.next().is_some() || slot.terms.iter().any(|t| matches!(t, Term::Uniform { .. })) {
            return None;
        }
        stripes[stripe].push((slot.server, idx));
    }
    let ok = stripes.iter().all(|s| {
        s.len() == cfg.k && {
            let mut servers: Vec<usize> = s.iter().map(|p| p.0).collect();
            servers.sort_unstable();
            servers.dedup();
            servers.len() == cfg.k
        }
    });
    ok.then_some(stripes)
}

/// Outcome of one private retrieval.
#[derive(Debug, Clone, PartialEq)]
pub struct Retrieval {
    pub message: Message,
    pub achieved_rate: BigRational,
    pub download_count: usize,
    pub desired_symbols: usize,
}

/// Builds, runs and decodes a schedule for any scheme builder.
pub fn retrieve_with<B: SchemeBuilder + ?Sized>(
    builder: &B,
    db: &Database,
    desired: usize,
    seed: u64,
) -> Result<Retrieval> {
    if db.config != *builder.config() {
        return Err(PirError::InvalidParameters(
            "database was encoded with different parameters than the scheme".into(),
        ));
    }
    let plan = builder.plan(desired)?;
    let schedule = schedule_from_plan(&plan, seed)?;
    let transcript = run(&schedule, db)?;
    let message = decode(&transcript, &schedule)?;
    let achieved_rate = BigRational::new(
        (db.config.l as i64).into(),
        (transcript.download_count as i64).into(),
    );
    Ok(Retrieval {
        message,
        achieved_rate,
        download_count: transcript.download_count,
        desired_symbols: plan.fresh_count(),
    })
}

/// Lifted retrieval over `s`; the achieved rate is checked against the
/// closed form.
pub fn retrieve(db: &Database, s: &SymbolicMatrix, desired: usize, seed: u64) -> Result<(Message, BigRational)> {
    let builder = LiftedBuilder::with_matrix(db.config.clone(), s.clone())?;
    let out = retrieve_with(&builder, db, desired, seed)?;
    let expected = lift::lifted_rate(s.n, s.r, s.m)?;
    if out.achieved_rate != expected {
        return Err(PirError::InvalidParameters(format!(
            "achieved rate {} differs from {expected}",
            out.achieved_rate
        )));
    }
    Ok((out.message, out.achieved_rate))
}
