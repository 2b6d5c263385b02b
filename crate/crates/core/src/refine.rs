//! Two-message refinement of a one-shot scheme.
//!
//! Per round, group servers receive two queries: `a_i`, a uniform vector in
//! the desired block, and `b_i`, a share of a family on the other message.
//! Generated servers receive the single sum `a_i + b_i`. The `b` answers of
//! the group predict the `b` parts at the generated servers, so all `N`
//! desired symbols come out of `N + r` downloads.

use num::integer::lcm;
use num::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{PirError, Result};
use crate::exec::{schedule_from_plan, QuerySchedule};
use crate::lift::int;
use crate::oneshot::{OneShotScheme, SamplerKind};
use crate::plan::{FamilySpec, SchedulePlan, SchemeBuilder, SlotPosition, SlotSpec, Term};
use crate::storage::StorageConfig;

/// `N / (N + r)`.
pub fn refined_rate(n: usize, r: usize) -> Result<BigRational> {
    if r == 0 || r >= n {
        return Err(PirError::InvalidParameters(format!(
            "co-dimension must satisfy 1 <= r < N, got r={r} N={n}"
        )));
    }
    Ok(int(n) / int(n + r))
}

/// Smallest message length the refined scheme closes on.
pub fn refined_message_len(n: usize, k: usize) -> usize {
    lcm(n, k)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefinedScheme {
    pub base: OneShotScheme,
    pub rounds: usize,
    pub layout: SchedulePlan,
}

impl RefinedScheme {
    /// Samples queries whose desired symbols are independent.
    pub fn schedule(&self, seed: u64) -> Result<QuerySchedule> {
        schedule_from_plan(&self.layout, seed)
    }
}

/// Group servers of round `t`: the base group rotated left by `t`.
fn round_group(base: &OneShotScheme, round: usize) -> Vec<usize> {
    let n = base.config.n;
    base.group_servers
        .iter()
        .map(|&c| (c + n - 1 - round % n) % n + 1)
        .collect()
}

pub fn refine(base: &OneShotScheme, desired: usize) -> Result<RefinedScheme> {
    let cfg = &base.config;
    if cfg.m != 2 {
        return Err(PirError::InvalidParameters(format!(
            "refinement is defined for two messages, got M={}",
            cfg.m
        )));
    }
    if desired != 1 && desired != 2 {
        return Err(PirError::InvalidParameters(format!(
            "desired index {desired} outside 1..=2"
        )));
    }
    if !cfg.l.is_multiple_of(cfg.n) {
        return Err(PirError::InvalidParameters(format!(
            "L={} must be a multiple of N={} (use L={})",
            cfg.l,
            cfg.n,
            refined_message_len(cfg.n, cfg.k)
        )));
    }
    let other = 3 - desired;
    let rounds = cfg.l / cfg.n;
    let mut families = Vec::new();
    let mut slots: Vec<SlotSpec> = Vec::new();
    let mut uniform_count = 0;
    for round in 0..rounds {
        let group = round_group(base, round);
        let family = families.len();
        families.push(FamilySpec {
            support: vec![other],
            threshold: cfg.t,
            members: Vec::new(),
        });
        for server in 1..=cfg.n {
            let position = Some(SlotPosition {
                round,
                row: 1,
                col: server,
            });
            let mut a = |extra: Option<Term>, tag: Vec<usize>, slots: &mut Vec<SlotSpec>| {
                let mut terms = vec![Term::Uniform {
                    var: uniform_count,
                    message: desired,
                }];
                terms.extend(extra);
                uniform_count += 1;
                slots.push(SlotSpec {
                    server,
                    tag,
                    terms,
                    position,
                    fresh: None,
                });
            };
            if group.contains(&server) {
                // a_i and b_i, in message order
                let b = SlotSpec {
                    server,
                    tag: vec![other],
                    terms: vec![Term::Family { family, server }],
                    position,
                    fresh: None,
                };
                if desired == 1 {
                    a(None, vec![desired], &mut slots);
                    families[family].members.push(slots.len());
                    slots.push(b);
                } else {
                    families[family].members.push(slots.len());
                    slots.push(b);
                    a(None, vec![desired], &mut slots);
                }
            } else {
                a(Some(Term::Family { family, server }), vec![1, 2], &mut slots);
            }
        }
    }
    let mut fresh = 0;
    for slot in slots.iter_mut() {
        if slot.tag.contains(&desired) {
            slot.fresh = Some(fresh);
            fresh += 1;
        }
    }
    Ok(RefinedScheme {
        base: base.clone(),
        rounds,
        layout: SchedulePlan {
            config: cfg.clone(),
            desired,
            families,
            uniform_count,
            slots,
        },
    })
}

/// [`refine`] as a scheme builder.
#[derive(Debug, Clone)]
pub struct RefinedBuilder {
    base: OneShotScheme,
}

impl RefinedBuilder {
    pub fn new(config: StorageConfig, kind: SamplerKind) -> Result<Self> {
        let base = OneShotScheme::new(config, kind)?;
        // surface layout errors at construction
        refine(&base, 1)?;
        Ok(RefinedBuilder { base })
    }

    pub fn base(&self) -> &OneShotScheme {
        &self.base
    }
}

impl SchemeBuilder for RefinedBuilder {
    fn config(&self) -> &StorageConfig {
        &self.base.config
    }

    fn plan(&self, desired: usize) -> Result<SchedulePlan> {
        Ok(refine(&self.base, desired)?.layout)
    }

    fn name(&self) -> String {
        let c = &self.base.config;
        format!("refined(N={},K={},T={})", c.n, c.k, c.t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::{decode, retrieve_with, run, LiftedBuilder};
    use crate::gf::FieldSpec;
    use crate::linalg::Matrix;
    use crate::oneshot::one_shot_rate;
    use crate::storage::Database;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg(n: usize, k: usize, t: usize) -> StorageConfig {
        let f = FieldSpec::new(65537).unwrap();
        StorageConfig::new(n, k, t, 2, refined_message_len(n, k), f).unwrap()
    }

    #[test]
    fn rates() {
        assert_eq!(refined_rate(4, 3).unwrap(), int(4) / int(7));
        assert_eq!(refined_rate(2, 1).unwrap(), int(2) / int(3));
        assert!(refined_rate(3, 3).is_err());
        for n in 2..=8 {
            for r in 1..n {
                assert!(refined_rate(n, r).unwrap() > one_shot_rate(n, r).unwrap());
            }
        }
    }

    #[test]
    fn four_server_layout() {
        // (4,2,2): L = 4, one round; servers 1-3 get {a, b}, server 4 gets a + b
        let c = cfg(4, 2, 2);
        let base = OneShotScheme::new(c.clone(), SamplerKind::ReedSolomon).unwrap();
        let rs = refine(&base, 1).unwrap();
        assert_eq!(rs.rounds, 1);
        let plan = &rs.layout;
        assert_eq!(plan.slots_per_server(), vec![2, 2, 2, 1]);
        assert_eq!(plan.slots.len(), 4 + 3);
        assert_eq!(plan.fresh_count(), 4);
        let last = plan.slots.last().unwrap();
        assert_eq!((last.server, last.tag.clone()), (4, vec![1, 2]));
        // the four desired symbols are independent, unlike any fixed basis choice
        let sched = rs.schedule(3).unwrap();
        let rows = plan.desired_functionals(&sched.randomness).unwrap();
        assert_eq!(Matrix::from_rows(c.field, 4, &rows).unwrap().rank(), 4);
    }

    #[test]
    fn role_swap_keeps_per_server_counts() {
        let base = OneShotScheme::new(cfg(5, 2, 2), SamplerKind::ReedSolomon).unwrap();
        let one = refine(&base, 1).unwrap().layout;
        let two = refine(&base, 2).unwrap().layout;
        assert_eq!(one.slots_per_server(), two.slots_per_server());
        let tags = |p: &SchedulePlan| {
            let mut t: Vec<(usize, usize)> = p.slots.iter().map(|s| (s.server, s.tag.len())).collect();
            t.sort_unstable();
            t
        };
        assert_eq!(tags(&one), tags(&two));
    }

    #[test]
    fn agrees_with_lifted_engine_at_two_messages() {
        for (n, k, t) in [(4, 2, 2), (5, 2, 2), (3, 1, 1), (5, 1, 3)] {
            let c = cfg(n, k, t);
            let base = OneShotScheme::new(c.clone(), SamplerKind::ReedSolomon).unwrap();
            let lifted = LiftedBuilder::new(c).unwrap();
            for d in 1..=2 {
                assert_eq!(refine(&base, d).unwrap().layout, lifted.plan(d).unwrap());
            }
        }
    }

    #[test]
    fn end_to_end_decodes() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for (n, k, t) in [(4, 2, 2), (5, 2, 2), (4, 1, 2)] {
            let c = cfg(n, k, t);
            let b = RefinedBuilder::new(c.clone(), SamplerKind::ReedSolomon).unwrap();
            let db = Database::random(&c, &mut rng).unwrap();
            for d in 1..=2 {
                let out = retrieve_with(&b, &db, d, 40 + d as u64).unwrap();
                assert_eq!(out.message, *db.message(d));
                assert_eq!(out.achieved_rate, refined_rate(n, k + t - 1).unwrap());
            }
        }
    }

    #[test]
    fn guards() {
        let f = FieldSpec::new(65537).unwrap();
        let three = StorageConfig::new(4, 2, 2, 3, 4, f).unwrap();
        let base = OneShotScheme::new(three, SamplerKind::ReedSolomon).unwrap();
        assert!(refine(&base, 1).is_err());
        let odd = StorageConfig::new(4, 2, 2, 2, 2, f).unwrap();
        let base = OneShotScheme::new(odd, SamplerKind::ReedSolomon).unwrap();
        assert!(refine(&base, 1).is_err());
        let good = OneShotScheme::new(cfg(4, 2, 2), SamplerKind::ReedSolomon).unwrap();
        assert!(refine(&good, 3).is_err());
    }

    #[test]
    fn interference_cancels_exactly() {
        let c = cfg(5, 2, 2);
        let base = OneShotScheme::new(c.clone(), SamplerKind::ReedSolomon).unwrap();
        let rs = refine(&base, 2).unwrap();
        let db = Database::random(&c, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let sched = rs.schedule(11).unwrap();
        let tr = run(&sched, &db).unwrap();
        assert_eq!(tr.download_count, (5 + 3) * rs.rounds);
        assert_eq!(decode(&tr, &sched).unwrap(), *db.message(2));
    }
}
