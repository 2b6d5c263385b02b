//! One-shot schemes: every server gets one query per round, the non-desired
//! parts form a polynomial family whose responses on `r` group servers
//! predict the rest, and generated servers additionally carry one stored
//! symbol of the desired message.

use num::integer::lcm;
use num::BigRational;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PirError, Result};
use crate::lift::int;
use crate::plan::{FamilySpec, SchedulePlan, SchemeBuilder, SlotPosition, SlotSpec, Term};
use crate::storage::{QueryVector, StorageConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    /// Coded storage, co-dimension `K + T - 1`.
    ReedSolomon,
    /// Replicated storage (`K = 1`), co-dimension `T`.
    SecretSharing,
}

/// Ways of computing a co-dimension from `(N, K, T)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodimensionRule {
    ReedSolomon,
    SecretSharing,
    /// `(NK - N + T) / K`, the co-dimension of the best known coded
    /// collusion scheme. Only used in rate formulas; there is no sampler.
    CodedCollusion,
}

pub fn codimension(n: usize, k: usize, t: usize, rule: CodimensionRule) -> Result<usize> {
    if k == 0 || t == 0 || k >= n || t > n - k {
        return Err(PirError::InvalidParameters(format!(
            "need 1 <= K < N and 1 <= T <= N-K, got N={n} K={k} T={t}"
        )));
    }
    match rule {
        CodimensionRule::ReedSolomon => Ok(k + t - 1),
        CodimensionRule::SecretSharing => {
            if k != 1 {
                return Err(PirError::InvalidParameters(
                    "secret sharing needs replicated storage (K=1)".into(),
                ));
            }
            Ok(t)
        }
        CodimensionRule::CodedCollusion => {
            let num = n * k - n + t;
            if !num.is_multiple_of(k) {
                return Err(PirError::NonIntegerCodimension {
                    numerator: num as u64,
                    denominator: k as u64,
                });
            }
            Ok(num / k)
        }
    }
}

/// `(N - r) / N`.
pub fn one_shot_rate(n: usize, r: usize) -> Result<BigRational> {
    if r == 0 || r >= n {
        return Err(PirError::InvalidParameters(format!(
            "co-dimension must satisfy 1 <= r < N, got r={r} N={n}"
        )));
    }
    Ok(int(n - r) / int(n))
}

/// Rounds needed before every stripe has `K` collected symbols, i.e.
/// `lcm(N - r, K) / (N - r)`.
pub fn repetitions(n: usize, r: usize, k: usize) -> Result<usize> {
    one_shot_rate(n, r)?;
    Ok(lcm(n - r, k) / (n - r))
}

/// Smallest message length the one-shot scheme closes on.
pub fn one_shot_message_len(n: usize, r: usize, k: usize) -> usize {
    lcm(n - r, k)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OneShotScheme {
    pub config: StorageConfig,
    pub r: usize,
    pub kind: SamplerKind,
    pub group_servers: Vec<usize>,
    pub generated_servers: Vec<usize>,
}

impl OneShotScheme {
    /// Group servers `1..=r`, generated servers the rest.
    pub fn new(config: StorageConfig, kind: SamplerKind) -> Result<Self> {
        config.validate()?;
        let rule = match kind {
            SamplerKind::ReedSolomon => CodimensionRule::ReedSolomon,
            SamplerKind::SecretSharing => CodimensionRule::SecretSharing,
        };
        let r = codimension(config.n, config.k, config.t, rule)?;
        Self::with_groups(config, kind, (1..=r).collect())
    }

    pub fn with_groups(config: StorageConfig, kind: SamplerKind, group_servers: Vec<usize>) -> Result<Self> {
        let n = config.n;
        let r = group_servers.len();
        if r == 0 || r >= n {
            return Err(PirError::InvalidParameters(format!("need 1 <= r < N, got r={r}")));
        }
        let mut seen = vec![false; n + 1];
        for &s in &group_servers {
            if s == 0 || s > n || std::mem::replace(&mut seen[s], true) {
                return Err(PirError::InvalidParameters(format!(
                    "group servers {group_servers:?} are not distinct ids in 1..={n}"
                )));
            }
        }
        if r != config.k + config.t - 1 {
            return Err(PirError::InvalidParameters(format!(
                "co-dimension {r} does not match K+T-1={}",
                config.k + config.t - 1
            )));
        }
        let generated_servers = (1..=n).filter(|&s| !seen[s]).collect();
        Ok(OneShotScheme {
            config,
            r,
            kind,
            group_servers,
            generated_servers,
        })
    }

    pub fn rate(&self) -> Result<BigRational> {
        one_shot_rate(self.config.n, self.r)
    }
}

/// Non-desired query parts across all `N` servers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterferenceFamily {
    pub queries: Vec<QueryVector>,
    pub support: Vec<usize>,
    pub randomness_tag: u64,
}

/// Desired-message corrections carried by the generated servers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectionSet {
    pub vectors: Vec<QueryVector>,
    /// `(message, stripe, server)` per vector.
    pub stripe_assignment: Vec<(usize, usize, usize)>,
}

fn check_support(m: usize, support: &[usize]) -> Result<Vec<usize>> {
    if support.is_empty() {
        return Err(PirError::InvalidParameters("family support is empty".into()));
    }
    let mut s = support.to_vec();
    s.sort_unstable();
    s.dedup();
    if s[0] == 0 || *s.last().unwrap() > m {
        return Err(PirError::InvalidParameters(format!(
            "support {support:?} outside 1..={m}"
        )));
    }
    Ok(s)
}

/// Each support coordinate gets an independent polynomial with `T`
/// uniform coefficients; server `i` receives its evaluations.
pub fn sample_family<R: Rng + ?Sized>(
    scheme: &OneShotScheme,
    support: &[usize],
    rng: &mut R,
) -> Result<InterferenceFamily> {
    let cfg = &scheme.config;
    let f = cfg.field;
    let support = check_support(cfg.m, support)?;
    let randomness_tag = rng.random();
    let mut queries = vec![QueryVector::zeros(cfg.shard_len()); cfg.n];
    for &msg in &support {
        for s in 0..cfg.stripes() {
            let coeffs = f.random_vec(rng, cfg.t);
            let c = cfg.coord(msg, s);
            for (i, q) in queries.iter_mut().enumerate() {
                q.entries[c] = cfg.point(i + 1).eval(f, &coeffs);
            }
        }
    }
    Ok(InterferenceFamily {
        queries,
        support,
        randomness_tag,
    })
}

/// One round: group servers get `q_i`, the `j`-th generated server gets
/// `q_i + e` for the stored symbol of stripe `j / K` of the desired message.
pub fn build_one_shot<R: Rng + ?Sized>(
    scheme: &OneShotScheme,
    desired: usize,
    rng: &mut R,
) -> Result<(Vec<QueryVector>, CorrectionSet)> {
    let cfg = &scheme.config;
    if desired == 0 || desired > cfg.m {
        return Err(PirError::InvalidParameters(format!(
            "desired index {desired} outside 1..={}",
            cfg.m
        )));
    }
    let needed = (scheme.generated_servers.len()).div_ceil(cfg.k);
    if needed > cfg.stripes() {
        return Err(PirError::InvalidParameters(format!(
            "one round needs {needed} stripes but messages have {}",
            cfg.stripes()
        )));
    }
    let all: Vec<usize> = (1..=cfg.m).collect();
    let family = sample_family(scheme, &all, rng)?;
    let mut queries = family.queries;
    let mut vectors = Vec::new();
    let mut stripe_assignment = Vec::new();
    for (j, &server) in scheme.generated_servers.iter().enumerate() {
        let stripe = j / cfg.k;
        let a = QueryVector::basis(cfg.shard_len(), cfg.coord(desired, stripe));
        queries[server - 1].add_assign(cfg.field, &a);
        vectors.push(a);
        stripe_assignment.push((desired, stripe, server));
    }
    Ok((queries, CorrectionSet {
        vectors,
        stripe_assignment,
    }))
}

/// Repeats the one-shot round with rotating generated servers until every
/// stripe of the desired message has `K` symbols on distinct servers.
#[derive(Debug, Clone)]
pub struct OneShotBuilder {
    scheme: OneShotScheme,
    rounds: usize,
}

impl OneShotBuilder {
    pub fn new(scheme: OneShotScheme) -> Result<Self> {
        let cfg = &scheme.config;
        let per_round = cfg.n - scheme.r;
        if !cfg.l.is_multiple_of(per_round) {
            return Err(PirError::InvalidParameters(format!(
                "L={} must be a multiple of N-r={per_round} (use L={})",
                cfg.l,
                one_shot_message_len(cfg.n, scheme.r, cfg.k)
            )));
        }
        let rounds = cfg.l / per_round;
        Ok(OneShotBuilder { scheme, rounds })
    }

    pub fn scheme(&self) -> &OneShotScheme {
        &self.scheme
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    /// Server receiving the correction at stream position `pos`.
    fn stream_server(&self, pos: usize) -> usize {
        let n = self.scheme.config.n;
        let g = &self.scheme.generated_servers;
        // the default layout rotates through all servers; custom group
        // choices keep their generated servers fixed
        if self.scheme.group_servers == (1..=self.scheme.r).collect::<Vec<_>>() {
            (self.scheme.r + pos) % n + 1
        } else {
            g[pos % g.len()]
        }
    }
}

impl SchemeBuilder for OneShotBuilder {
    fn config(&self) -> &StorageConfig {
        &self.scheme.config
    }

    fn name(&self) -> String {
        let c = &self.scheme.config;
        format!("one_shot(N={},K={},T={},M={})", c.n, c.k, c.t, c.m)
    }

    fn plan(&self, desired: usize) -> Result<SchedulePlan> {
        let cfg = &self.scheme.config;
        if desired == 0 || desired > cfg.m {
            return Err(PirError::InvalidParameters(format!(
                "desired index {desired} outside 1..={}",
                cfg.m
            )));
        }
        let per_round = cfg.n - self.scheme.r;
        let all: Vec<usize> = (1..=cfg.m).collect();
        let mut families = Vec::new();
        let mut slots = Vec::new();
        for round in 0..self.rounds {
            let generated: Vec<usize> = (0..per_round)
                .map(|i| self.stream_server(round * per_round + i))
                .collect();
            let family = families.len();
            families.push(FamilySpec {
                support: all.clone(),
                threshold: cfg.t,
                members: Vec::new(),
            });
            for server in 1..=cfg.n {
                let id = slots.len();
                let mut terms = vec![Term::Family { family, server }];
                let mut fresh = None;
                if let Some(i) = generated.iter().position(|&g| g == server) {
                    let pos = round * per_round + i;
                    terms.push(Term::Basis {
                        message: desired,
                        stripe: pos / cfg.k,
                    });
                    fresh = Some(pos);
                } else {
                    families[family].members.push(id);
                }
                slots.push(SlotSpec {
                    server,
                    tag: all.clone(),
                    terms,
                    position: Some(SlotPosition {
                        round,
                        row: 1,
                        col: server,
                    }),
                    fresh,
                });
            }
        }
        Ok(SchedulePlan {
            config: cfg.clone(),
            desired,
            families,
            uniform_count: 0,
            slots,
        })
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::exec::retrieve_with;
    use crate::gf::{dependency_coeffs, EvalPoint, FieldSpec};
    use crate::linalg::Matrix;
    use crate::storage::{answer, rs_encode, tests::example_config, Database, Message};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn example_scheme() -> OneShotScheme {
        OneShotScheme::new(example_config(2), SamplerKind::ReedSolomon).unwrap()
    }

    #[test]
    fn codimension_rules() {
        assert_eq!(codimension(4, 2, 2, CodimensionRule::ReedSolomon).unwrap(), 3);
        assert_eq!(codimension(4, 2, 2, CodimensionRule::CodedCollusion).unwrap(), 3);
        assert_eq!(codimension(4, 1, 2, CodimensionRule::SecretSharing).unwrap(), 2);
        assert!(codimension(4, 2, 2, CodimensionRule::SecretSharing).is_err());
        assert!(matches!(
            codimension(5, 2, 2, CodimensionRule::CodedCollusion),
            Err(PirError::NonIntegerCodimension { numerator: 7, denominator: 2 })
        ));
    }

    #[test]
    fn rates_and_repetitions() {
        assert_eq!(one_shot_rate(4, 3).unwrap(), int(1) / int(4));
        assert_eq!(one_shot_rate(5, 3).unwrap(), int(2) / int(5));
        assert!(one_shot_rate(4, 0).is_err());
        assert!(one_shot_rate(4, 4).is_err());
        assert_eq!(repetitions(4, 3, 2).unwrap(), 2);
        assert_eq!(repetitions(6, 2, 2).unwrap(), 1);
    }

    #[test]
    fn example_family_relations() {
        // with points (0, inf, 1, 2) the shares satisfy q3 = q1 + q2, q4 = q1 + 2 q2
        let s = example_scheme();
        let f = s.config.field;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let fam = sample_family(&s, &[1, 2], &mut rng).unwrap();
            let q = &fam.queries;
            for c in 0..q[0].len() {
                let (a, b) = (q[0].entries[c], q[1].entries[c]);
                assert_eq!(q[2].entries[c], f.add(a, b));
                assert_eq!(q[3].entries[c], f.add(a, f.mul(2, b)));
            }
        }
    }

    #[test]
    fn example_dependency_and_correction() {
        let s = example_scheme();
        let f = s.config.field;
        let pts: Vec<EvalPoint> = s.group_servers.iter().map(|&i| s.config.point(i)).collect();
        let lambda = crate::gf::projective_dependency_coeffs(f, &pts, s.config.point(4), 3).unwrap();
        assert_eq!(lambda, vec![2, 2, 2]);
        assert_eq!(lambda[0], f.from_i64(-1));

        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (queries, corr) = build_one_shot(&s, 1, &mut rng).unwrap();
        assert_eq!(corr.stripe_assignment, vec![(1, 0, 4)]);
        assert_eq!(corr.vectors[0], QueryVector::basis(s.config.shard_len(), 0));
        let db = Database::random(&s.config, &mut rng).unwrap();
        let ans: Vec<u64> = (0..4)
            .map(|i| answer(db.shard(i + 1), &queries[i], f).unwrap())
            .collect();
        let predicted = (0..3).fold(0, |acc, i| f.add(acc, f.mul(lambda[i], ans[i])));
        // the leftover is the symbol W1_1 + 2 W1_2 stored at server 4
        let w = &db.message(1).symbols;
        assert_eq!(f.sub(ans[3], predicted), f.add(w[0], f.mul(2, w[1])));
    }

    #[test]
    fn property_three_on_random_instances() {
        let f = FieldSpec::new(65537).unwrap();
        let cfg = StorageConfig::new(5, 2, 2, 3, 4, f).unwrap();
        let s = OneShotScheme::new(cfg.clone(), SamplerKind::ReedSolomon).unwrap();
        let group: Vec<u64> = s.group_servers.iter().map(|&i| i as u64).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let db = Database::random(&cfg, &mut rng).unwrap();
            let fam = sample_family(&s, &[1, 3], &mut rng).unwrap();
            let resp: Vec<u64> = (0..5)
                .map(|i| answer(db.shard(i + 1), &fam.queries[i], f).unwrap())
                .collect();
            for &g in &s.generated_servers {
                let pts: Vec<_> = group.iter().map(|&x| f.scalar(x)).collect();
                let lambda = dependency_coeffs(&pts, f.scalar(g as u64), 3).unwrap();
                let pred = s.group_servers.iter().zip(&lambda).fold(0, |acc, (&i, l)| {
                    f.add(acc, f.mul(l.value(), resp[i - 1]))
                });
                assert_eq!(pred, resp[g - 1]);
            }
            // nothing outside the support
            for q in &fam.queries {
                assert!(q.support(cfg.stripes()).iter().all(|j| [1, 3].contains(j)));
            }
        }
    }

    #[test]
    fn t_shares_have_full_rank() {
        // the map from T coefficients to T shares is invertible for any T servers
        let f = FieldSpec::new(65537).unwrap();
        let cfg = StorageConfig::new(5, 2, 3, 1, 2, f).unwrap();
        for a in 1..=5 {
            for b in a + 1..=5 {
                for c in b + 1..=5 {
                    let rows: Vec<Vec<u64>> =
                        [a, b, c].iter().map(|&i| cfg.point(i).monomials(f, 3)).collect();
                    assert_eq!(Matrix::from_rows(f, 3, &rows).unwrap().rank(), 3);
                }
            }
        }
    }

    #[test]
    fn degree_zero_family_is_constant() {
        let f = FieldSpec::new(65537).unwrap();
        let cfg = StorageConfig::new(4, 1, 1, 2, 3, f).unwrap();
        let s = OneShotScheme::new(cfg, SamplerKind::SecretSharing).unwrap();
        let fam = sample_family(&s, &[1, 2], &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(fam.queries.iter().all(|q| *q == fam.queries[0]));
        assert!(sample_family(&s, &[], &mut ChaCha8Rng::seed_from_u64(0)).is_err());
        assert!(sample_family(&s, &[3], &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn extracted_symbols_match_direct_computation() {
        let f = FieldSpec::new(65537).unwrap();
        let cfg = StorageConfig::new(6, 2, 2, 2, 4, f).unwrap();
        let s = OneShotScheme::new(cfg.clone(), SamplerKind::ReedSolomon).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let db = Database::random(&cfg, &mut rng).unwrap();
        let (queries, corr) = build_one_shot(&s, 2, &mut rng).unwrap();
        let pts: Vec<EvalPoint> = s.group_servers.iter().map(|&i| cfg.point(i)).collect();
        let group_ans: Vec<u64> = s
            .group_servers
            .iter()
            .map(|&i| answer(db.shard(i), &queries[i - 1], f).unwrap())
            .collect();
        for (a, &(_, _, server)) in corr.vectors.iter().zip(&corr.stripe_assignment) {
            let lambda = crate::gf::projective_dependency_coeffs(f, &pts, cfg.point(server), s.r).unwrap();
            let pred = lambda.iter().zip(&group_ans).fold(0, |acc, (l, v)| f.add(acc, f.mul(*l, *v)));
            let got = f.sub(answer(db.shard(server), &queries[server - 1], f).unwrap(), pred);
            assert_eq!(got, answer(db.shard(server), a, f).unwrap());
        }
    }

    #[test]
    fn end_to_end_rate_is_one_quarter_on_the_example() {
        // (4,2,2) over the large field, L = lcm(1, 2) = 2
        let f = FieldSpec::new(65537).unwrap();
        let cfg = StorageConfig::new(4, 2, 2, 2, one_shot_message_len(4, 3, 2), f).unwrap();
        let b = OneShotBuilder::new(OneShotScheme::new(cfg.clone(), SamplerKind::ReedSolomon).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let db = Database::random(&cfg, &mut rng).unwrap();
        for d in 1..=2 {
            let out = retrieve_with(&b, &db, d, 5).unwrap();
            assert_eq!(out.message, *db.message(d));
            assert_eq!(out.achieved_rate, int(1) / int(4));
        }
    }

    #[test]
    fn single_message_and_replicated_runs() {
        let f = FieldSpec::new(65537).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for (n, k, t, m, kind) in [
            (4, 2, 1, 1, SamplerKind::ReedSolomon),
            (5, 1, 2, 3, SamplerKind::SecretSharing),
            (5, 2, 2, 2, SamplerKind::ReedSolomon),
        ] {
            let r = k + t - 1;
            let cfg = StorageConfig::new(n, k, t, m, one_shot_message_len(n, r, k), f).unwrap();
            let b = OneShotBuilder::new(OneShotScheme::new(cfg.clone(), kind).unwrap()).unwrap();
            let db = Database::random(&cfg, &mut rng).unwrap();
            for d in 1..=m {
                let out = retrieve_with(&b, &db, d, d as u64).unwrap();
                assert_eq!(out.message, *db.message(d));
                assert_eq!(out.achieved_rate, one_shot_rate(n, r).unwrap());
            }
        }
    }

    #[test]
    fn fixture_messages_encode_over_f3() {
        let cfg = example_config(2);
        let msgs = vec![
            Message { index: 1, symbols: vec![1, 2] },
            Message { index: 2, symbols: vec![0, 1] },
        ];
        let db = rs_encode(&msgs, &cfg).unwrap();
        assert_eq!(db.shard(4).data, vec![2, 2]);
    }
}
