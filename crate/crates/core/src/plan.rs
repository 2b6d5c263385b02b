//! Symbolic description of a query schedule.
//!
//! Every scheme in this crate is linear: each query is a sum of
//! [`Term`]s, and every term is either a polynomial share of a family, a
//! fresh uniform vector in one message block, or a constant basis vector.
//! Keeping that structure explicit lets one object drive sampling,
//! decoding and the algebraic privacy audit.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PirError, Result};
use crate::gf::projective_dependency_coeffs;
use crate::storage::{QueryVector, StorageConfig};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Term {
    /// Share of `family` at `server`'s evaluation point.
    Family { family: usize, server: usize },
    /// Uniform vector in the block of `message`.
    Uniform { var: usize, message: usize },
    /// Standard basis vector at `(message, stripe)`.
    Basis { message: usize, stripe: usize },
}

/// A polynomial family: every coordinate of the support blocks carries an
/// independent uniform polynomial with `threshold` coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub support: Vec<usize>,
    pub threshold: usize,
    /// Slots whose answer is exactly this family's response; their answers
    /// predict every other share of the family.
    pub members: Vec<usize>,
}

/// Where a slot came from in a symbolic matrix (1-based row/column).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotPosition {
    pub round: usize,
    pub row: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotSpec {
    pub server: usize,
    /// Message subset the query is declared to touch, sorted.
    pub tag: Vec<usize>,
    pub terms: Vec<Term>,
    pub position: Option<SlotPosition>,
    /// Index of the desired-message symbol this slot contributes.
    pub fresh: Option<usize>,
}

impl SlotSpec {
    /// The family this slot is a pure member or continuation of, if any.
    pub fn family(&self) -> Option<usize> {
        self.terms.iter().find_map(|t| match t {
            Term::Family { family, .. } => Some(*family),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchedulePlan {
    pub config: StorageConfig,
    pub desired: usize,
    pub families: Vec<FamilySpec>,
    pub uniform_count: usize,
    pub slots: Vec<SlotSpec>,
}

/// Sampled randomness of a plan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Randomness {
    /// Per family, laid out `(support index, stripe, coefficient)`.
    pub family_coeffs: Vec<Vec<u64>>,
    /// Per uniform variable, one entry per stripe.
    pub uniforms: Vec<Vec<u64>>,
}

impl SchedulePlan {
    pub fn slots_per_server(&self) -> Vec<usize> {
        let mut out = vec![0; self.config.n];
        for s in &self.slots {
            out[s.server - 1] += 1;
        }
        out
    }

    pub fn fresh_count(&self) -> usize {
        self.slots.iter().filter(|s| s.fresh.is_some()).count()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Randomness {
        let f = self.config.field;
        let stripes = self.config.stripes();
        let family_coeffs = self
            .families
            .iter()
            .map(|fam| f.random_vec(rng, fam.support.len() * stripes * fam.threshold))
            .collect();
        let uniforms = (0..self.uniform_count)
            .map(|_| f.random_vec(rng, stripes))
            .collect();
        Randomness {
            family_coeffs,
            uniforms,
        }
    }

    /// Evaluates one slot's query under the given randomness.
    pub fn realize_slot(&self, slot: &SlotSpec, rand: &Randomness) -> QueryVector {
        let cfg = &self.config;
        let f = cfg.field;
        let stripes = cfg.stripes();
        let mut q = QueryVector::zeros(cfg.shard_len());
        for term in &slot.terms {
            match *term {
                Term::Family { family, server } => {
                    let fam = &self.families[family];
                    let point = cfg.point(server);
                    let coeffs = &rand.family_coeffs[family];
                    for (i, &msg) in fam.support.iter().enumerate() {
                        for s in 0..stripes {
                            let start = (i * stripes + s) * fam.threshold;
                            let v = point.eval(f, &coeffs[start..start + fam.threshold]);
                            let c = cfg.coord(msg, s);
                            q.entries[c] = f.add(q.entries[c], v);
                        }
                    }
                }
                Term::Uniform { var, message } => {
                    for s in 0..stripes {
                        let c = cfg.coord(message, s);
                        q.entries[c] = f.add(q.entries[c], rand.uniforms[var][s]);
                    }
                }
                Term::Basis { message, stripe } => {
                    let c = cfg.coord(message, stripe);
                    q.entries[c] = f.add(q.entries[c], 1);
                }
            }
        }
        q
    }

    pub fn realize(&self, rand: &Randomness) -> Vec<QueryVector> {
        self.slots.iter().map(|s| self.realize_slot(s, rand)).collect()
    }

    /// For each slot that continues a family it is not a member of, the
    /// member slots and coefficients predicting that share's response.
    pub fn continuation(&self, slot_id: usize) -> Result<Option<Vec<(usize, u64)>>> {
        let slot = &self.slots[slot_id];
        let Some(family) = slot.family() else {
            return Ok(None);
        };
        let fam = &self.families[family];
        if fam.members.contains(&slot_id) {
            return Ok(None);
        }
        let cfg = &self.config;
        let points: Vec<_> = fam.members.iter().map(|&m| cfg.point(self.slots[m].server)).collect();
        let lambda = projective_dependency_coeffs(
            cfg.field,
            &points,
            cfg.point(slot.server),
            fam.members.len(),
        )?;
        Ok(Some(fam.members.iter().copied().zip(lambda).collect()))
    }

    /// Row `i` is the linear functional on the desired message's `L`
    /// symbols contributed by the slot with `fresh == Some(i)`.
    pub fn desired_functionals(&self, rand: &Randomness) -> Result<Vec<Vec<u64>>> {
        let cfg = &self.config;
        let f = cfg.field;
        let (k, stripes) = (cfg.k, cfg.stripes());
        let mut rows = vec![Vec::new(); self.fresh_count()];
        for slot in &self.slots {
            let Some(idx) = slot.fresh else { continue };
            let col = cfg.point(slot.server).monomials(f, k);
            let mut row = vec![0u64; cfg.l];
            for term in &slot.terms {
                match *term {
                    Term::Uniform { var, message } if message == self.desired => {
                        for s in 0..stripes {
                            let u = rand.uniforms[var][s];
                            for t in 0..k {
                                row[s * k + t] = f.add(row[s * k + t], f.mul(u, col[t]));
                            }
                        }
                    }
                    Term::Basis { message, stripe } if message == self.desired => {
                        for t in 0..k {
                            row[stripe * k + t] = f.add(row[stripe * k + t], col[t]);
                        }
                    }
                    Term::Family { .. } => {}
                    _ => {
                        return Err(PirError::InvalidParameters(
                            "desired slot carries an uncancellable non-desired term".into(),
                        ))
                    }
                }
            }
            rows[idx] = row;
        }
        Ok(rows)
    }
}

/// Anything that can describe its queries for a chosen desired index.
pub trait SchemeBuilder {
    fn config(&self) -> &StorageConfig;
    fn plan(&self, desired: usize) -> Result<SchedulePlan>;
    fn name(&self) -> String;
}

/// Privacy-breaking edits used to check that audits have teeth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mutation {
    /// Server 1 receives the desired part as an unmasked basis vector.
    LeakBasis,
    /// The first member of every family also carries a desired-message part.
    CorrectionOnGroupServer,
    /// Families use one coefficient fewer than the collusion bound needs.
    WeakSharing,
}

impl Mutation {
    pub const ALL: [Mutation; 3] = [
        Mutation::LeakBasis,
        Mutation::CorrectionOnGroupServer,
        Mutation::WeakSharing,
    ];

    pub fn parse(s: &str) -> Result<Mutation> {
        match s {
            "leak_basis" => Ok(Mutation::LeakBasis),
            "correction_on_group_server" => Ok(Mutation::CorrectionOnGroupServer),
            "weak_sharing" => Ok(Mutation::WeakSharing),
            other => Err(PirError::InvalidParameters(format!("unknown mutation '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Mutation::LeakBasis => "leak_basis",
            Mutation::CorrectionOnGroupServer => "correction_on_group_server",
            Mutation::WeakSharing => "weak_sharing",
        }
    }

    pub fn apply(&self, plan: &mut SchedulePlan) {
        let d = plan.desired;
        match self {
            Mutation::LeakBasis => {
                for slot in plan.slots.iter_mut().filter(|s| s.server == 1) {
                    let bears_desired = slot.terms.iter().any(|t| {
                        matches!(t, Term::Uniform { message, .. } | Term::Basis { message, .. } if *message == d)
                    });
                    if bears_desired {
                        slot.terms = vec![Term::Basis {
                            message: d,
                            stripe: 0,
                        }];
                    }
                }
            }
            Mutation::CorrectionOnGroupServer => {
                let firsts: Vec<usize> = plan
                    .families
                    .iter()
                    .filter_map(|fam| fam.members.first().copied())
                    .collect();
                for slot_id in firsts {
                    let var = plan.uniform_count;
                    plan.uniform_count += 1;
                    plan.slots[slot_id].terms.push(Term::Uniform { var, message: d });
                }
            }
            Mutation::WeakSharing => {
                for fam in plan.families.iter_mut() {
                    fam.threshold = fam.threshold.saturating_sub(1);
                }
            }
        }
        for slot in plan.slots.iter_mut() {
            slot.tag = declared_support(&plan.families, &slot.terms);
        }
    }
}

/// Messages touched by a list of terms.
pub fn declared_support(families: &[FamilySpec], terms: &[Term]) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    for t in terms {
        match t {
            Term::Family { family, .. } => out.extend(&families[*family].support),
            Term::Uniform { message, .. } | Term::Basis { message, .. } => out.push(*message),
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Wraps a builder and mutates every plan it emits.
pub struct Mutated<B> {
    pub inner: B,
    pub mutation: Mutation,
}

impl<B: SchemeBuilder> SchemeBuilder for Mutated<B> {
    fn config(&self) -> &StorageConfig {
        self.inner.config()
    }

    fn plan(&self, desired: usize) -> Result<SchedulePlan> {
        let mut plan = self.inner.plan(desired)?;
        self.mutation.apply(&mut plan);
        Ok(plan)
    }

    fn name(&self) -> String {
        format!("{}+{}", self.inner.name(), self.mutation.name())
    }
}
