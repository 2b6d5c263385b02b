//! MDS-coded storage: `M` messages, each cut into stripes of `K` symbols and
//! Reed–Solomon encoded onto `N` servers.
//!
//! Shard layout is message-major then stripe-major, so the subspace of
//! queries touching only message `j` is the contiguous block
//! `[(j-1)*L/K, j*L/K)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PirError, Result};
use crate::gf::{EvalPoint, FieldSpec};
use crate::linalg::Matrix;

/// Storage and collusion parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StorageConfig {
    pub n: usize,
    pub k: usize,
    pub t: usize,
    pub m: usize,
    pub l: usize,
    pub field: FieldSpec,
    pub eval_points: Vec<EvalPoint>,
}

impl StorageConfig {
    /// Evaluation points default to `1, 2, ..., N`.
    pub fn new(n: usize, k: usize, t: usize, m: usize, l: usize, field: FieldSpec) -> Result<Self> {
        if (n as u64) >= field.modulus() {
            return Err(PirError::InvalidParameters(format!(
                "field of size {} has too few nonzero points for N={n}",
                field.modulus()
            )));
        }
        let eval_points = (1..=n as u64).map(EvalPoint::Finite).collect();
        let cfg = StorageConfig {
            n,
            k,
            t,
            m,
            l,
            field,
            eval_points,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Explicit evaluation points, e.g. including the point at infinity;
    /// works for fields smaller than `N + 1`.
    pub fn with_points(
        n: usize,
        k: usize,
        t: usize,
        m: usize,
        l: usize,
        field: FieldSpec,
        eval_points: Vec<EvalPoint>,
    ) -> Result<Self> {
        let cfg = StorageConfig {
            n,
            k,
            t,
            m,
            l,
            field,
            eval_points,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_eval_points(mut self, points: Vec<EvalPoint>) -> Result<Self> {
        self.eval_points = points;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let (n, k, t, m, l) = (self.n, self.k, self.t, self.m, self.l);
        let bad = |msg: String| Err(PirError::InvalidParameters(msg));
        if !(1 <= k && k < n) {
            return bad(format!("need 1 <= K < N, got K={k}, N={n}"));
        }
        if !(1 <= t && t + k <= n) {
            return bad(format!("need 1 <= T <= N-K, got T={t}, N={n}, K={k}"));
        }
        if m == 0 {
            return bad("need M >= 1".into());
        }
        if l == 0 || l % k != 0 {
            return bad(format!("message length L={l} must be a positive multiple of K={k}"));
        }
        if self.eval_points.len() != n {
            return Err(PirError::DimensionMismatch {
                expected: n,
                got: self.eval_points.len(),
            });
        }
        for (i, a) in self.eval_points.iter().enumerate() {
            if let EvalPoint::Finite(x) = a {
                if *x >= self.field.modulus() {
                    return bad(format!("evaluation point {x} outside the field"));
                }
            }
            if self.eval_points[i + 1..].contains(a) {
                return Err(PirError::RepeatedPoints(format!("server evaluation point {a:?}")));
            }
        }
        Ok(())
    }

    /// Symbols of one message held by one server (`L/K`).
    pub fn stripes(&self) -> usize {
        self.l / self.k
    }

    /// Length of a shard and of every query vector (`M*L/K`).
    pub fn shard_len(&self) -> usize {
        self.m * self.stripes()
    }

    /// Evaluation point of a 1-based server id.
    pub fn point(&self, server: usize) -> EvalPoint {
        self.eval_points[server - 1]
    }

    /// Coordinate of `(message, stripe)` inside a shard; `message` is 1-based.
    pub fn coord(&self, message: usize, stripe: usize) -> usize {
        (message - 1) * self.stripes() + stripe
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub index: usize,
    pub symbols: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServerShard {
    pub server_id: usize,
    pub data: Vec<u64>,
}

/// A linear query `q` in `F_p^{ML/K}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QueryVector {
    pub entries: Vec<u64>,
}

impl QueryVector {
    pub fn zeros(len: usize) -> Self {
        QueryVector {
            entries: vec![0; len],
        }
    }

    pub fn basis(len: usize, coord: usize) -> Self {
        let mut q = QueryVector::zeros(len);
        q.entries[coord] = 1;
        q
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn add_assign(&mut self, field: FieldSpec, other: &QueryVector) {
        for (a, &b) in self.entries.iter_mut().zip(&other.entries) {
            *a = field.add(*a, b);
        }
    }

    /// Messages (1-based) whose block holds a nonzero coordinate.
    pub fn support(&self, stripes: usize) -> Vec<usize> {
        self.entries
            .chunks(stripes)
            .enumerate()
            .filter(|(_, blk)| blk.iter().any(|&x| x != 0))
            .map(|(j, _)| j + 1)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Database {
    pub config: StorageConfig,
    pub shards: Vec<ServerShard>,
    /// Plaintext kept for test oracles; servers never read it.
    pub messages: Vec<Message>,
}

/// Encodes `M` messages of length `L` into `N` shards.
pub fn rs_encode(messages: &[Message], config: &StorageConfig) -> Result<Database> {
    config.validate()?;
    if messages.len() != config.m {
        return Err(PirError::DimensionMismatch {
            expected: config.m,
            got: messages.len(),
        });
    }
    let f = config.field;
    for (j, msg) in messages.iter().enumerate() {
        if msg.symbols.len() != config.l {
            return Err(PirError::DimensionMismatch {
                expected: config.l,
                got: msg.symbols.len(),
            });
        }
        if msg.index != j + 1 {
            return Err(PirError::InvalidParameters(format!(
                "message at position {} has index {}",
                j + 1,
                msg.index
            )));
        }
    }
    let shards = (1..=config.n)
        .map(|server| {
            let point = config.point(server);
            let mut data = Vec::with_capacity(config.shard_len());
            for msg in messages {
                for stripe in msg.symbols.chunks(config.k) {
                    data.push(point.eval(f, stripe));
                }
            }
            ServerShard {
                server_id: server,
                data,
            }
        })
        .collect();
    Ok(Database {
        config: config.clone(),
        shards,
        messages: messages.to_vec(),
    })
}

/// Recovers a stripe's `K` symbols from `K` server evaluations.
pub fn rs_decode_stripe(values: &[(usize, u64)], config: &StorageConfig) -> Result<Vec<u64>> {
    let k = config.k;
    if values.len() != k {
        return Err(PirError::DimensionMismatch {
            expected: k,
            got: values.len(),
        });
    }
    for (i, (s, _)) in values.iter().enumerate() {
        if *s == 0 || *s > config.n {
            return Err(PirError::InvalidParameters(format!("server id {s} out of range")));
        }
        if values[i + 1..].iter().any(|(o, _)| o == s) {
            return Err(PirError::RepeatedPoints(format!("server {s} listed twice")));
        }
    }
    let rows: Vec<Vec<u64>> = values
        .iter()
        .map(|(s, _)| config.point(*s).monomials(config.field, k))
        .collect();
    let a = Matrix::from_rows(config.field, k, &rows)?;
    let b: Vec<u64> = values.iter().map(|(_, v)| *v).collect();
    a.solve(&b)
}

/// The server's reply `<D_i, q>`.
pub fn answer(shard: &ServerShard, q: &QueryVector, field: FieldSpec) -> Result<u64> {
    if q.len() != shard.data.len() {
        return Err(PirError::DimensionMismatch {
            expected: shard.data.len(),
            got: q.len(),
        });
    }
    if let Some(&bad) = q.entries.iter().find(|&&x| x >= field.modulus()) {
        return Err(PirError::InvalidParameters(format!(
            "query entry {bad} outside the field"
        )));
    }
    Ok(field.dot(&shard.data, &q.entries))
}

impl Database {
    /// Uniformly random messages, encoded.
    pub fn random<R: Rng + ?Sized>(config: &StorageConfig, rng: &mut R) -> Result<Database> {
        let messages: Vec<Message> = (1..=config.m)
            .map(|index| Message {
                index,
                symbols: config.field.random_vec(rng, config.l),
            })
            .collect();
        rs_encode(&messages, config)
    }

    pub fn shard(&self, server: usize) -> &ServerShard {
        &self.shards[server - 1]
    }

    pub fn message(&self, index: usize) -> &Message {
        &self.messages[index - 1]
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses and re-checks every invariant (shard contents included).
    pub fn from_json(s: &str) -> Result<Database> {
        let db: Database = serde_json::from_str(s)?;
        let rebuilt = rs_encode(&db.messages, &db.config)?;
        if rebuilt.shards != db.shards {
            return Err(PirError::Serialization(
                "shards are not the encoding of the stored messages".into(),
            ));
        }
        Ok(db)
    }
}
