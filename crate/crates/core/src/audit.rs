//! Correctness and T-privacy audits.
//!
//! The algebraic audit describes the joint view of a server subset as an
//! affine function of the plan's randomness. Randomness never crosses a
//! `(message, stripe)` coordinate, so the view splits into independent
//! blocks, one per coordinate; each block is uniform on
//! `offset + colspace(generator)`. Two views have the same distribution iff
//! they have the same slot tags and every pair of blocks spans the same
//! coset.
//!
//! Within-server order is canonicalized by tag before comparison; the real
//! order is a uniform shuffle, so this loses nothing.
//!
//! The audit covers the unconditioned query distribution. Schedules that
//! redraw randomness to keep desired symbols independent deviate from it by
//! at most the redraw probability, roughly `L / p`.

use std::collections::HashMap;
use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{PirError, Result};
use crate::exec::{k_subsets, retrieve_with, sample_schedule};
use crate::linalg::{Matrix, RowSpace};
use crate::plan::{SchedulePlan, SchemeBuilder, Term};
use crate::storage::{Database, QueryVector, StorageConfig};

/// p-values below this fail an audit.
pub const P_VALUE_THRESHOLD: f64 = 1e-4;
/// Fewest trials per desired index accepted by the statistical audit.
pub const MIN_TRIALS: usize = 10_000;
const MIN_PER_BIN: usize = 5;
const MAX_VIEW_DIM: usize = 4;

/// One coordinate of a view: row `i` is the slot's entry at this
/// coordinate, `offset[i] + sum_v generator[i][v] * x_v`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ViewBlock {
    pub message: usize,
    pub stripe: usize,
    /// Sparse rows over block-local variables numbered by first use.
    pub generator: Vec<Vec<(usize, u64)>>,
    pub vars: usize,
    pub offset: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineView {
    pub subset: Vec<usize>,
    pub desired: usize,
    /// `(server, tag)` of every slot in canonical order.
    pub shape: Vec<(usize, Vec<usize>)>,
    pub blocks: Vec<ViewBlock>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Var {
    Family(usize, usize),
    Uniform(usize),
}

/// Joint view of `subset` for the plan of one desired index.
pub fn view_of_plan(plan: &SchedulePlan, subset: &[usize]) -> Result<AffineView> {
    let cfg = &plan.config;
    let f = cfg.field;
    if subset.is_empty() || subset.iter().any(|&s| s == 0 || s > cfg.n) {
        return Err(PirError::InvalidParameters(format!(
            "subset {subset:?} is not a nonempty set of servers in 1..={}",
            cfg.n
        )));
    }
    let mut servers = subset.to_vec();
    servers.sort_unstable();
    servers.dedup();
    let mut rows: Vec<usize> = (0..plan.slots.len())
        .filter(|&i| servers.contains(&plan.slots[i].server))
        .collect();
    rows.sort_by(|&a, &b| {
        let (x, y) = (&plan.slots[a], &plan.slots[b]);
        (x.server, &x.tag, a).cmp(&(y.server, &y.tag, b))
    });
    let shape = rows
        .iter()
        .map(|&i| (plan.slots[i].server, plan.slots[i].tag.clone()))
        .collect();
    let mut blocks = Vec::with_capacity(cfg.m * cfg.stripes());
    for message in 1..=cfg.m {
        let members: Vec<usize> = rows
            .iter()
            .copied()
            .filter(|&i| plan.slots[i].tag.contains(&message))
            .collect();
        for stripe in 0..cfg.stripes() {
            let mut ids: HashMap<Var, usize> = HashMap::new();
            let mut generator = Vec::with_capacity(members.len());
            let mut offset = Vec::with_capacity(members.len());
            for &i in &members {
                let slot = &plan.slots[i];
                let mut row: Vec<(usize, u64)> = Vec::new();
                let mut off = 0;
                let mut push = |var: Var, c: u64, row: &mut Vec<(usize, u64)>| {
                    if c == 0 {
                        return;
                    }
                    let n = ids.len();
                    let id = *ids.entry(var).or_insert(n);
                    match row.iter_mut().find(|e| e.0 == id) {
                        Some(e) => e.1 = f.add(e.1, c),
                        None => row.push((id, c)),
                    }
                };
                for term in &slot.terms {
                    match *term {
                        Term::Family { family, server } => {
                            let fam = &plan.families[family];
                            if !fam.support.contains(&message) {
                                continue;
                            }
                            let mono = cfg.point(server).monomials(f, fam.threshold);
                            for (t, &c) in mono.iter().enumerate() {
                                push(Var::Family(family, t), c, &mut row);
                            }
                        }
                        Term::Uniform { var, message: m } if m == message => {
                            push(Var::Uniform(var), 1, &mut row);
                        }
                        Term::Basis { message: m, stripe: s } if m == message && s == stripe => {
                            off = f.add(off, 1);
                        }
                        _ => {}
                    }
                }
                row.retain(|e| e.1 != 0);
                generator.push(row);
                offset.push(off);
            }
            blocks.push(ViewBlock {
                message,
                stripe,
                generator,
                vars: ids.len(),
                offset,
            });
        }
    }
    Ok(AffineView {
        subset: servers,
        desired: plan.desired,
        shape,
        blocks,
    })
}

pub fn extract_view<B: SchemeBuilder + ?Sized>(
    builder: &B,
    desired: usize,
    subset: &[usize],
) -> Result<AffineView> {
    view_of_plan(&builder.plan(desired)?, subset)
}

/// Column spaces of block generators, shared across identical blocks.
#[derive(Default)]
pub struct SpaceCache {
    spaces: HashMap<(Vec<Vec<(usize, u64)>>, usize), Rc<RowSpace>>,
}

impl SpaceCache {
    fn space(&mut self, config: &StorageConfig, b: &ViewBlock) -> Rc<RowSpace> {
        let key = (b.generator.clone(), b.vars);
        if let Some(s) = self.spaces.get(&key) {
            return s.clone();
        }
        // rows of the transpose span the column space
        let mut t = Matrix::zeros(config.field, b.vars, b.generator.len());
        for (i, row) in b.generator.iter().enumerate() {
            for &(v, c) in row {
                t.set(v, i, c);
            }
        }
        let s = Rc::new(RowSpace::of(t));
        self.spaces.insert(key, s.clone());
        s
    }
}

/// Why two views differ, if they do.
fn coset_mismatch(
    config: &StorageConfig,
    v1: &AffineView,
    v2: &AffineView,
    cache: &mut SpaceCache,
) -> Result<Option<String>> {
    if v1.subset != v2.subset {
        return Err(PirError::InvalidParameters(format!(
            "views of different subsets {:?} and {:?}",
            v1.subset, v2.subset
        )));
    }
    if v1.blocks.len() != v2.blocks.len() {
        return Err(PirError::DimensionMismatch {
            expected: v1.blocks.len(),
            got: v2.blocks.len(),
        });
    }
    if v1.shape != v2.shape {
        let i = v1.shape.iter().zip(&v2.shape).position(|(a, b)| a != b);
        return Ok(Some(match i {
            Some(i) => format!(
                "slot tags differ: server {} sees {:?} vs {:?}",
                v1.shape[i].0, v1.shape[i].1, v2.shape[i].1
            ),
            None => format!("slot counts differ: {} vs {}", v1.shape.len(), v2.shape.len()),
        }));
    }
    let f = config.field;
    for (b1, b2) in v1.blocks.iter().zip(&v2.blocks) {
        let s1 = cache.space(config, b1);
        if s1.is_full() && b2.generator == b1.generator {
            continue;
        }
        let s2 = cache.space(config, b2);
        let where_ = format!("message {} stripe {}", b1.message, b1.stripe);
        if s1 != s2 {
            return Ok(Some(format!(
                "{where_}: spans differ (rank {} vs {})",
                s1.rank(),
                s2.rank()
            )));
        }
        let diff: Vec<u64> = b1.offset.iter().zip(&b2.offset).map(|(&a, &b)| f.sub(a, b)).collect();
        if !s1.contains(f, &diff) {
            return Ok(Some(format!("{where_}: offsets lie in different cosets")));
        }
    }
    Ok(None)
}

/// Whether two views of one subset have the same distribution.
pub fn coset_equal(config: &StorageConfig, v1: &AffineView, v2: &AffineView) -> Result<bool> {
    Ok(coset_mismatch(config, v1, v2, &mut SpaceCache::default())?.is_none())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditParams {
    pub n: usize,
    pub k: usize,
    pub t: usize,
    pub m: usize,
    pub l: usize,
    pub prime: u64,
}

impl AuditParams {
    fn of(c: &StorageConfig) -> Self {
        AuditParams {
            n: c.n,
            k: c.k,
            t: c.t,
            m: c.m,
            l: c.l,
            prime: c.field.modulus(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacyVerdict {
    pub subset: Vec<usize>,
    pub messages: (usize, usize),
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatResult {
    pub subset: Vec<usize>,
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub trials_per_message: usize,
    pub bins: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectnessVerdict {
    pub desired: usize,
    pub trial: usize,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub scheme: String,
    pub params: AuditParams,
    pub privacy: Vec<PrivacyVerdict>,
    pub statistical: Vec<StatResult>,
    pub correctness: Vec<CorrectnessVerdict>,
    pub pass: bool,
}

impl AuditReport {
    fn new(scheme: String, config: &StorageConfig) -> Self {
        AuditReport {
            scheme,
            params: AuditParams::of(config),
            privacy: Vec::new(),
            statistical: Vec::new(),
            correctness: Vec::new(),
            pass: true,
        }
    }

    fn settle(mut self) -> Self {
        self.pass = self.privacy.iter().all(|v| v.pass)
            && self.correctness.iter().all(|v| v.pass)
            && self.statistical.iter().all(|s| s.p_value >= P_VALUE_THRESHOLD);
        self
    }

    /// Combines two reports on the same scheme.
    pub fn merge(mut self, other: AuditReport) -> Self {
        self.privacy.extend(other.privacy);
        self.statistical.extend(other.statistical);
        self.correctness.extend(other.correctness);
        self.settle()
    }

    pub fn failures(&self) -> Vec<&PrivacyVerdict> {
        self.privacy.iter().filter(|v| !v.pass).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Coset comparison over every T-subset of servers and every pair of
/// desired indices.
pub fn audit_privacy<B: SchemeBuilder + ?Sized>(builder: &B) -> Result<AuditReport> {
    let cfg = builder.config();
    audit_privacy_subsets(builder, &k_subsets(cfg.n, cfg.t))
}

/// Like [`audit_privacy`] over the given server subsets.
pub fn audit_privacy_subsets<B: SchemeBuilder + ?Sized>(
    builder: &B,
    subsets: &[Vec<usize>],
) -> Result<AuditReport> {
    let cfg = builder.config().clone();
    let plans = (1..=cfg.m)
        .map(|d| builder.plan(d))
        .collect::<Result<Vec<_>>>()?;
    let mut report = AuditReport::new(builder.name(), &cfg);
    let mut cache = SpaceCache::default();
    for subset in subsets {
        let views = plans
            .iter()
            .map(|p| view_of_plan(p, subset))
            .collect::<Result<Vec<_>>>()?;
        for a in 0..cfg.m {
            for b in a + 1..cfg.m {
                let reason = coset_mismatch(&cfg, &views[a], &views[b], &mut cache)?;
                report.privacy.push(PrivacyVerdict {
                    subset: views[a].subset.clone(),
                    messages: (a + 1, b + 1),
                    pass: reason.is_none(),
                    reason,
                });
            }
        }
    }
    Ok(report.settle())
}

/// Source of per-server query lists, treated as a black box.
pub trait ViewSampler {
    fn config(&self) -> &StorageConfig;
    fn name(&self) -> String;
    fn sample(&self, desired: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<QueryVector>>>;
}

/// Draws raw schedules from a builder, without the redraw that keeps
/// desired symbols independent.
pub struct PlanSampler {
    name: String,
    plans: Vec<SchedulePlan>,
}

impl PlanSampler {
    pub fn new<B: SchemeBuilder + ?Sized>(builder: &B) -> Result<Self> {
        let plans = (1..=builder.config().m)
            .map(|d| builder.plan(d))
            .collect::<Result<Vec<_>>>()?;
        Ok(PlanSampler {
            name: builder.name(),
            plans,
        })
    }
}

impl ViewSampler for PlanSampler {
    fn config(&self) -> &StorageConfig {
        &self.plans[0].config
    }

    fn name(&self) -> String {
        self.name.clone()
    }

    fn sample(&self, desired: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<QueryVector>>> {
        let plan = self.plans.get(desired.wrapping_sub(1)).ok_or_else(|| {
            PirError::InvalidParameters(format!("desired index {desired} out of range"))
        })?;
        Ok(sample_schedule(plan, rng, 0).per_server)
    }
}

/// Uniform vectors regardless of the desired index; a null input for the
/// statistical audit.
pub struct UniformSampler {
    pub config: StorageConfig,
    pub per_server: usize,
}

impl ViewSampler for UniformSampler {
    fn config(&self) -> &StorageConfig {
        &self.config
    }

    fn name(&self) -> String {
        "uniform".into()
    }

    fn sample(&self, _desired: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<QueryVector>>> {
        let f = self.config.field;
        Ok((0..self.config.n)
            .map(|_| {
                (0..self.per_server)
                    .map(|_| QueryVector {
                        entries: f.random_vec(rng, self.config.shard_len()),
                    })
                    .collect()
            })
            .collect())
    }
}

/// Low-dimensional statistic of a subset's view: per server, the two
/// smallest queries under (support, entries) order, each reduced to the
/// first coordinate of its lowest supported block.
fn project(config: &StorageConfig, per_server: &[Vec<QueryVector>], subset: &[usize]) -> Vec<u64> {
    let stripes = config.stripes();
    let mut out = Vec::with_capacity(MAX_VIEW_DIM);
    for &s in subset {
        let mut qs: Vec<(Vec<usize>, &QueryVector)> =
            per_server[s - 1].iter().map(|q| (q.support(stripes), q)).collect();
        qs.sort_by(|a, b| (&a.0, &a.1.entries).cmp(&(&b.0, &b.1.entries)));
        for i in 0..2 {
            let v = qs
                .get(i)
                .and_then(|(sup, q)| sup.first().map(|&j| q.entries[config.coord(j, 0)]))
                .unwrap_or(0);
            out.push(v);
        }
    }
    out.truncate(MAX_VIEW_DIM);
    out
}

/// Chi-square homogeneity statistic, degrees of freedom and p-value of a
/// `rows x bins` table.
fn homogeneity(counts: &[Vec<usize>]) -> (f64, usize, f64) {
    let bins = counts[0].len();
    let row_tot: Vec<f64> = counts.iter().map(|r| r.iter().sum::<usize>() as f64).collect();
    let col_tot: Vec<f64> = (0..bins)
        .map(|b| counts.iter().map(|r| r[b]).sum::<usize>() as f64)
        .collect();
    let grand: f64 = row_tot.iter().sum();
    let mut stat = 0.0;
    let mut used = 0usize;
    for (b, &ct) in col_tot.iter().enumerate() {
        if ct == 0.0 {
            continue;
        }
        used += 1;
        for (r, row) in counts.iter().enumerate() {
            let e = row_tot[r] * ct / grand;
            let d = row[b] as f64 - e;
            stat += d * d / e;
        }
    }
    let dof = (counts.len() - 1) * used.saturating_sub(1);
    if dof == 0 {
        return (stat, 0, 1.0);
    }
    let p = ChiSquared::new(dof as f64)
        .map(|c| c.sf(stat))
        .unwrap_or(0.0);
    (stat, dof, p)
}

/// Compares empirical view statistics across desired indices for every
/// T-subset of servers.
pub fn chi_square_audit<S: ViewSampler + ?Sized>(sampler: &S, trials: usize, seed: u64) -> Result<AuditReport> {
    let cfg = sampler.config().clone();
    let p = cfg.field.modulus();
    if p > 7 {
        return Err(PirError::InvalidParameters(format!(
            "statistical audit needs a small field (p <= 7), got p={p}"
        )));
    }
    if trials < MIN_TRIALS {
        return Err(PirError::UnderPopulated(format!(
            "{trials} trials per message; use at least {MIN_TRIALS}"
        )));
    }
    let dim = (2 * cfg.t).min(MAX_VIEW_DIM);
    let bins = (p as usize).pow(dim as u32);
    if trials / bins < MIN_PER_BIN {
        return Err(PirError::UnderPopulated(format!(
            "{trials} trials over {bins} bins leaves fewer than {MIN_PER_BIN} per bin; raise trials or shrink T/p"
        )));
    }
    let subsets = k_subsets(cfg.n, cfg.t);
    let mut counts = vec![vec![vec![0usize; bins]; cfg.m]; subsets.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for d in 1..=cfg.m {
        let mut drng = ChaCha8Rng::seed_from_u64(rng.random());
        for _ in 0..trials {
            let view = sampler.sample(d, &mut drng)?;
            for (si, subset) in subsets.iter().enumerate() {
                let bin = project(&cfg, &view, subset)
                    .iter()
                    .fold(0usize, |acc, &v| acc * p as usize + v as usize);
                counts[si][d - 1][bin] += 1;
            }
        }
    }
    let mut report = AuditReport::new(sampler.name(), &cfg);
    if cfg.m >= 2 {
        for (si, subset) in subsets.iter().enumerate() {
            let (statistic, dof, p_value) = homogeneity(&counts[si]);
            report.statistical.push(StatResult {
                subset: subset.clone(),
                statistic,
                dof,
                p_value,
                trials_per_message: trials,
                bins,
            });
        }
    }
    Ok(report.settle())
}

/// Retrieves every message `trials` times and checks exact equality.
pub fn verify_correctness<B: SchemeBuilder + ?Sized>(
    builder: &B,
    db: &Database,
    trials: usize,
    seed: u64,
) -> Result<AuditReport> {
    let cfg = builder.config();
    let mut report = AuditReport::new(builder.name(), cfg);
    for desired in 1..=cfg.m {
        for trial in 0..trials {
            let s = seed.wrapping_add((desired * trials + trial) as u64);
            let (pass, reason) = match retrieve_with(builder, db, desired, s) {
                Ok(out) if out.message == *db.message(desired) => (true, None),
                Ok(_) => (false, Some("decoded message differs".to_string())),
                Err(e) => (false, Some(e.to_string())),
            };
            report.correctness.push(CorrectnessVerdict {
                desired,
                trial,
                pass,
                reason,
            });
        }
    }
    Ok(report.settle())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::{lifted_message_len, LiftedBuilder};
    use crate::gf::FieldSpec;
    use crate::oneshot::{one_shot_message_len, OneShotBuilder, OneShotScheme, SamplerKind};
    use crate::plan::{Mutated, Mutation};
    use crate::refine::{refined_message_len, RefinedBuilder};

    fn field(p: u64) -> FieldSpec {
        FieldSpec::new(p).unwrap()
    }

    fn one_shot(n: usize, k: usize, t: usize, m: usize, p: u64) -> OneShotBuilder {
        let cfg = StorageConfig::new(n, k, t, m, one_shot_message_len(n, k + t - 1, k), field(p)).unwrap();
        OneShotBuilder::new(OneShotScheme::new(cfg, SamplerKind::ReedSolomon).unwrap()).unwrap()
    }

    fn lifted(n: usize, k: usize, t: usize, m: usize, p: u64) -> LiftedBuilder {
        let cfg = StorageConfig::new(n, k, t, m, lifted_message_len(n, k, m), field(p)).unwrap();
        LiftedBuilder::new(cfg).unwrap()
    }

    fn refined(n: usize, k: usize, t: usize, p: u64) -> RefinedBuilder {
        let cfg = StorageConfig::new(n, k, t, 2, refined_message_len(n, k), field(p)).unwrap();
        RefinedBuilder::new(cfg, SamplerKind::ReedSolomon).unwrap()
    }

    #[test]
    fn single_server_view_is_full_rank_when_t_is_one() {
        let b = one_shot(4, 2, 1, 2, 65537);
        let v = extract_view(&b, 1, &[3]).unwrap();
        let mut cache = SpaceCache::default();
        for blk in &v.blocks {
            assert!(cache.space(b.config(), blk).is_full());
        }
    }

    #[test]
    fn coset_equality_basics() {
        let b = one_shot(4, 2, 2, 2, 65537);
        let cfg = b.config().clone();
        let v1 = extract_view(&b, 1, &[1, 2]).unwrap();
        let v2 = extract_view(&b, 2, &[1, 2]).unwrap();
        assert!(coset_equal(&cfg, &v1, &v1).unwrap());
        assert!(coset_equal(&cfg, &v1, &v2).unwrap());
        // an offset outside a rank-deficient span breaks equality
        let mut a = v1.clone();
        let mut c = v1.clone();
        a.blocks[0].generator = vec![vec![(0, 1)], vec![(0, 1)], vec![], vec![]]
            .into_iter()
            .take(a.blocks[0].offset.len())
            .collect();
        a.blocks[0].vars = 1;
        c.blocks[0] = a.blocks[0].clone();
        c.blocks[0].offset[0] = 1;
        c.blocks[0].offset[1] = 0;
        assert!(!coset_equal(&cfg, &a, &c).unwrap());
        let other = extract_view(&b, 1, &[1, 3]).unwrap();
        assert!(coset_equal(&cfg, &v1, &other).is_err());
    }

    #[test]
    fn one_shot_bound_is_tight() {
        let b = one_shot(4, 2, 2, 2, 65537);
        assert!(audit_privacy(&b).unwrap().pass);
        let wider = audit_privacy_subsets(&b, &k_subsets(4, 3)).unwrap();
        assert!(!wider.pass);
    }

    #[test]
    fn shipped_schemes_pass_on_a_small_grid() {
        for (n, k, t, m) in [(4, 2, 2, 3), (4, 1, 2, 3), (5, 2, 2, 3), (3, 1, 1, 4), (4, 2, 1, 2)] {
            let report = audit_privacy(&lifted(n, k, t, m, 65537)).unwrap();
            assert!(report.pass, "{:?}", report.failures());
            assert_eq!(
                report.privacy.len(),
                k_subsets(n, t).len() * m * (m - 1) / 2
            );
            assert!(audit_privacy(&one_shot(n, k, t, m, 65537)).unwrap().pass);
        }
        assert!(audit_privacy(&refined(4, 2, 2, 65537)).unwrap().pass);
    }

    #[test]
    fn mutations_are_caught() {
        for mutation in Mutation::ALL {
            let b = Mutated {
                inner: lifted(4, 2, 2, 3, 65537),
                mutation,
            };
            let report = audit_privacy(&b).unwrap();
            assert!(!report.pass, "{mutation:?} slipped through");
            assert!(!report.failures().is_empty());
            let b = Mutated {
                inner: refined(4, 2, 2, 65537),
                mutation,
            };
            assert!(!audit_privacy(&b).unwrap().pass, "{mutation:?} on refined");
        }
    }

    #[test]
    fn leak_names_server_one() {
        let b = Mutated {
            inner: refined(4, 2, 2, 65537),
            mutation: Mutation::LeakBasis,
        };
        let report = audit_privacy(&b).unwrap();
        assert!(report.failures().iter().all(|v| v.subset.contains(&1)));
    }

    #[test]
    fn uniform_null_passes_statistically() {
        let cfg = StorageConfig::new(4, 2, 2, 2, 4, field(5)).unwrap();
        let s = UniformSampler {
            config: cfg,
            per_server: 2,
        };
        let report = chi_square_audit(&s, MIN_TRIALS, 1).unwrap();
        assert!(report.pass);
        assert!(report.statistical.iter().all(|r| r.bins == 625));
    }

    #[test]
    fn statistical_guards() {
        let cfg = StorageConfig::new(4, 2, 2, 2, 4, field(5)).unwrap();
        let s = UniformSampler {
            config: cfg,
            per_server: 2,
        };
        assert!(matches!(chi_square_audit(&s, 100, 1), Err(PirError::UnderPopulated(_))));
        let big = UniformSampler {
            config: StorageConfig::new(4, 2, 2, 2, 4, field(65537)).unwrap(),
            per_server: 1,
        };
        assert!(chi_square_audit(&big, MIN_TRIALS, 1).is_err());
    }

    #[test]
    fn correctness_report() {
        let b = lifted(4, 2, 2, 3, 65537);
        let db = Database::random(b.config(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let r = verify_correctness(&b, &db, 2, 9).unwrap();
        assert!(r.pass);
        assert_eq!(r.correctness.len(), 6);
        let json = r.to_json().unwrap();
        assert!(json.contains("\"pass\": true"));
    }

    #[test]
    fn statistical_and_algebraic_verdicts_agree_on_p5() {
        let plain = lifted(4, 2, 2, 2, 5);
        let leaky = Mutated {
            inner: lifted(4, 2, 2, 2, 5),
            mutation: Mutation::LeakBasis,
        };
        let stat = chi_square_audit(&PlanSampler::new(&plain).unwrap(), MIN_TRIALS, 3).unwrap();
        assert_eq!(stat.pass, audit_privacy(&plain).unwrap().pass);
        assert!(stat.pass);
        let stat = chi_square_audit(&PlanSampler::new(&leaky).unwrap(), MIN_TRIALS, 3).unwrap();
        assert_eq!(stat.pass, audit_privacy(&leaky).unwrap().pass);
        assert!(!stat.pass);
    }
}
