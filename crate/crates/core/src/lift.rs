//! Symbolic matrices and the lifting operation.
//!
//! An entry `k` at `(row, col)` stands for all `C(M, k)` k-queries sent to
//! server `col` in that row. Lifting stacks `r` cyclically left-shifted
//! copies of `S_M` and appends one row per entry of value `M`, in which
//! the `N - r` columns not covered by that entry's shift chain hold `M + 1`.
//!
//! Besides the bare grid we record lineage: every [`Group`] names the `r`
//! entries whose queries generate the `N - r` entries one level up. The
//! execution engine needs exactly this to know which responses predict
//! which.

use num::{BigInt, BigRational, BigUint, One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{PirError, Result};

/// 1-based matrix position; the derived order is the lexicographic one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Position {
    pub row: usize,
    pub col: usize,
}

impl Position {
    pub fn new(row: usize, col: usize) -> Self {
        Position { row, col }
    }
}

/// `r` entries of value `level` generating `N - r` entries of value `level + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Group {
    pub level: usize,
    pub members: Vec<Position>,
    pub generated: Vec<Position>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolicMatrix {
    pub n: usize,
    pub r: usize,
    pub m: usize,
    /// Row-major grid; 0 marks an empty slot.
    pub entries: Vec<Vec<usize>>,
    pub groups: Vec<Group>,
}

fn check_nr(n: usize, r: usize) -> Result<()> {
    if r == 0 || r >= n {
        return Err(PirError::InvalidParameters(format!(
            "need 1 <= r < N, got r={r}, N={n}"
        )));
    }
    Ok(())
}

/// Column after one left shift.
fn shift_col(col: usize, n: usize) -> usize {
    if col == 1 {
        n
    } else {
        col - 1
    }
}

/// Moves `pos` one block of `base_rows` down and one column left (cyclically).
pub fn tau(pos: Position, base_rows: usize, n: usize) -> Position {
    Position::new(pos.row + base_rows, shift_col(pos.col, n))
}

impl SymbolicMatrix {
    /// The two-message matrix: `r` ones followed by `N - r` twos.
    pub fn initial(n: usize, r: usize) -> Result<Self> {
        check_nr(n, r)?;
        let row: Vec<usize> = (1..=n).map(|c| if c <= r { 1 } else { 2 }).collect();
        let group = Group {
            level: 1,
            members: (1..=r).map(|c| Position::new(1, c)).collect(),
            generated: (r + 1..=n).map(|c| Position::new(1, c)).collect(),
        };
        Ok(SymbolicMatrix {
            n,
            r,
            m: 2,
            entries: vec![row],
            groups: vec![group],
        })
    }

    /// Degenerate one-message matrix: a single 1-query to server 1.
    pub fn single(n: usize, r: usize) -> Result<Self> {
        check_nr(n, r)?;
        let mut row = vec![0; n];
        row[0] = 1;
        Ok(SymbolicMatrix {
            n,
            r,
            m: 1,
            entries: vec![row],
            groups: Vec::new(),
        })
    }

    /// `S_M`: the initial matrix lifted `M - 2` times.
    pub fn for_messages(n: usize, r: usize, m: usize) -> Result<Self> {
        match m {
            0 => Err(PirError::InvalidParameters("need M >= 1".into())),
            1 => Self::single(n, r),
            _ => {
                let mut s = Self::initial(n, r)?;
                for _ in 2..m {
                    s = s.lift();
                }
                Ok(s)
            }
        }
    }

    pub fn rows(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, pos: Position) -> usize {
        self.entries[pos.row - 1][pos.col - 1]
    }

    fn shift_pos(&self, pos: Position, times: usize, row_offset: usize) -> Position {
        let mut col = pos.col;
        for _ in 0..times {
            col = shift_col(col, self.n);
        }
        Position::new(pos.row + row_offset, col)
    }

    fn transported_groups(&self, times: usize, row_offset: usize) -> Vec<Group> {
        self.groups
            .iter()
            .map(|g| Group {
                level: g.level,
                members: g.members.iter().map(|&p| self.shift_pos(p, times, row_offset)).collect(),
                generated: g.generated.iter().map(|&p| self.shift_pos(p, times, row_offset)).collect(),
            })
            .collect()
    }

    fn shifted_rows(&self, times: usize) -> Vec<Vec<usize>> {
        self.entries
            .iter()
            .map(|row| (0..self.n).map(|j| row[(j + times) % self.n]).collect())
            .collect()
    }

    /// `σ^times`, lineage included.
    pub fn shifted(&self, times: usize) -> SymbolicMatrix {
        SymbolicMatrix {
            n: self.n,
            r: self.r,
            m: self.m,
            entries: self.shifted_rows(times % self.n),
            groups: self.transported_groups(times % self.n, 0),
        }
    }

    pub fn shift_left(&self) -> SymbolicMatrix {
        self.shifted(1)
    }

    /// Entries of value `M`, in lexicographic order.
    fn top_positions(&self) -> Vec<Position> {
        let mut out = Vec::new();
        for (i, row) in self.entries.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v == self.m {
                    out.push(Position::new(i + 1, j + 1));
                }
            }
        }
        out
    }

    pub fn lift(&self) -> SymbolicMatrix {
        let base = self.rows();
        let (n, r, m) = (self.n, self.r, self.m);
        let mut entries = Vec::with_capacity(r * base);
        let mut groups = Vec::new();
        for t in 0..r {
            entries.extend(self.shifted_rows(t));
            groups.extend(self.transported_groups(t, t * base));
        }
        for (i, b) in self.top_positions().into_iter().enumerate() {
            let mut chain = vec![b];
            for _ in 1..r {
                let last = *chain.last().expect("chain is nonempty");
                chain.push(tau(last, base, n));
            }
            let covered: Vec<usize> = chain.iter().map(|p| p.col).collect();
            let row_idx = r * base + i + 1;
            let mut row = vec![0; n];
            let mut generated = Vec::new();
            for col in 1..=n {
                if !covered.contains(&col) {
                    row[col - 1] = m + 1;
                    generated.push(Position::new(row_idx, col));
                }
            }
            entries.push(row);
            groups.push(Group {
                level: m,
                members: chain,
                generated,
            });
        }
        SymbolicMatrix {
            n,
            r,
            m: m + 1,
            entries,
            groups,
        }
    }

    /// Literal number of entries equal to `k`.
    pub fn count_entries(&self, k: usize) -> Result<usize> {
        if k == 0 || k > self.m {
            return Err(PirError::InvalidParameters(format!(
                "k={k} outside 1..={}",
                self.m
            )));
        }
        Ok(self.entries.iter().flatten().filter(|&&v| v == k).count())
    }

    /// Aligned text with zeros left blank and trailing blanks trimmed.
    pub fn render_text(&self) -> String {
        let width = self
            .entries
            .iter()
            .flatten()
            .map(|v| v.to_string().len())
            .max()
            .unwrap_or(1);
        let mut out = String::new();
        for row in &self.entries {
            let cells: Vec<String> = row
                .iter()
                .map(|&v| {
                    if v == 0 {
                        " ".repeat(width)
                    } else {
                        format!("{v:>width$}")
                    }
                })
                .collect();
            out.push_str(cells.join(" ").trim_end());
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Per column, the number of queries that involve a fixed message.
    pub fn desired_per_column(&self) -> Vec<u64> {
        (0..self.n)
            .map(|c| {
                self.entries
                    .iter()
                    .map(|row| row[c])
                    .filter(|&k| k > 0)
                    .map(|k| binomial(self.m as u64 - 1, k as u64 - 1))
                    .sum()
            })
            .collect()
    }
}

pub fn initial_matrix(n: usize, r: usize) -> Result<SymbolicMatrix> {
    SymbolicMatrix::initial(n, r)
}

pub fn shift_left(s: &SymbolicMatrix) -> SymbolicMatrix {
    s.shift_left()
}

pub fn lift(s: &SymbolicMatrix) -> SymbolicMatrix {
    s.lift()
}

pub fn count_entries(k: usize, s: &SymbolicMatrix) -> Result<usize> {
    s.count_entries(k)
}

pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// Closed form `(N - r)^{k-1} r^{M-k}`.
pub fn entry_count_formula(n: usize, r: usize, m: usize, k: usize) -> BigUint {
    BigUint::from(n - r).pow((k - 1) as u32) * BigUint::from(r).pow((m - k) as u32)
}

/// `(N - r) N^{M-1} / (N^M - r^M)` with rational `N` and `r`.
pub fn lifted_rate_rational(n: &BigRational, r: &BigRational, m: usize) -> BigRational {
    let m = m as i32;
    (n - r) * num::pow::pow(n.clone(), (m - 1) as usize)
        / (num::pow::pow(n.clone(), m as usize) - num::pow::pow(r.clone(), m as usize))
}

pub fn lifted_rate(n: usize, r: usize, m: usize) -> Result<BigRational> {
    check_nr(n, r)?;
    if m == 0 {
        return Err(PirError::InvalidParameters("need M >= 1".into()));
    }
    Ok(lifted_rate_rational(&int(n), &int(r), m))
}

pub(crate) fn int(v: usize) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// Total downloads `(N^M - r^M)/(N - r)` and desired-message queries `N^{M-1}`.
pub fn query_counts(n: usize, r: usize, m: usize) -> Result<(BigUint, BigUint)> {
    check_nr(n, r)?;
    if m == 0 {
        return Err(PirError::InvalidParameters("need M >= 1".into()));
    }
    let nb = BigUint::from(n);
    let rb = BigUint::from(r);
    let total = (nb.pow(m as u32) - rb.pow(m as u32)) / BigUint::from(n - r);
    let desired = nb.pow(m as u32 - 1);
    Ok((total, desired))
}

/// `sum #(k) C(M, k)` and `sum #(k) C(M-1, k-1)` from literal counts.
pub fn query_counts_by_summation(s: &SymbolicMatrix) -> (BigUint, BigUint) {
    let mut total = BigUint::zero();
    let mut desired = BigUint::zero();
    for k in 1..=s.m {
        let c = BigUint::from(s.count_entries(k).expect("k in range"));
        total += &c * binomial(s.m as u64, k as u64);
        desired += &c * binomial(s.m as u64 - 1, k as u64 - 1);
    }
    (total, desired)
}

/// `(1 + T/N + ... + (T/N)^{M-1})^{-1}`.
pub fn replicated_capacity(n: usize, t: usize, m: usize) -> BigRational {
    let ratio = int(t) / int(n);
    let mut sum = BigRational::zero();
    let mut term = BigRational::one();
    for _ in 0..m {
        sum += &term;
        term *= &ratio;
    }
    sum.recip()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(s: &SymbolicMatrix) -> Vec<Vec<usize>> {
        s.entries.clone()
    }

    #[test]
    fn initial_examples() {
        assert_eq!(rows(&initial_matrix(4, 3).unwrap()), vec![vec![1, 1, 1, 2]]);
        assert_eq!(rows(&initial_matrix(2, 1).unwrap()), vec![vec![1, 2]]);
        assert_eq!(rows(&initial_matrix(5, 2).unwrap()), vec![vec![1, 1, 2, 2, 2]]);
        assert!(initial_matrix(4, 4).is_err());
        assert!(initial_matrix(4, 0).is_err());
    }

    #[test]
    fn shift_examples() {
        let s = initial_matrix(4, 3).unwrap();
        assert_eq!(rows(&s.shift_left()), vec![vec![1, 1, 2, 1]]);
        let mut t = s.clone();
        for _ in 0..4 {
            t = t.shift_left();
        }
        assert_eq!(t, s);
        let odd = SymbolicMatrix {
            n: 4,
            r: 3,
            m: 3,
            entries: vec![vec![3, 0, 0, 0]],
            groups: vec![],
        };
        assert_eq!(rows(&odd.shift_left()), vec![vec![0, 0, 0, 3]]);
    }

    #[test]
    fn tau_examples() {
        assert_eq!(tau(Position::new(1, 4), 1, 4), Position::new(2, 3));
        assert_eq!(tau(Position::new(4, 1), 4, 4), Position::new(8, 4));
        for n in 2..8 {
            for r in 1..n {
                for start in 1..=n {
                    let mut p = Position::new(1, start);
                    let mut cols = vec![p.col];
                    for _ in 1..r {
                        p = tau(p, 3, n);
                        cols.push(p.col);
                    }
                    cols.sort_unstable();
                    cols.dedup();
                    assert_eq!(cols.len(), r);
                }
            }
        }
    }

    #[test]
    fn lift_to_three_messages() {
        let s3 = initial_matrix(4, 3).unwrap().lift();
        assert_eq!(
            rows(&s3),
            vec![
                vec![1, 1, 1, 2],
                vec![1, 1, 2, 1],
                vec![1, 2, 1, 1],
                vec![3, 0, 0, 0]
            ]
        );
        assert_eq!(s3.count_entries(1).unwrap(), 9);
        assert_eq!(s3.count_entries(2).unwrap(), 3);
        assert_eq!(s3.count_entries(3).unwrap(), 1);
        let top = s3.groups.last().unwrap();
        assert_eq!(top.level, 2);
        assert_eq!(
            top.members,
            vec![Position::new(1, 4), Position::new(2, 3), Position::new(3, 2)]
        );
        assert_eq!(top.generated, vec![Position::new(4, 1)]);
    }

    #[test]
    fn smallest_case_lifts() {
        let s = initial_matrix(2, 1).unwrap().lift();
        assert_eq!(rows(&s), vec![vec![1, 2], vec![3, 0]]);
        for m in 2..7 {
            let s = SymbolicMatrix::for_messages(2, 1, m).unwrap();
            for k in 1..=m {
                assert_eq!(s.count_entries(k).unwrap(), 1);
            }
        }
    }

    #[test]
    fn count_entries_range_guard() {
        let s = initial_matrix(4, 3).unwrap();
        assert!(s.count_entries(0).is_err());
        assert!(s.count_entries(3).is_err());
    }

    #[test]
    fn rate_examples() {
        assert_eq!(
            lifted_rate(4, 3, 3).unwrap(),
            BigRational::new(16.into(), 37.into())
        );
        for n in 2..9 {
            for rr in 1..n {
                assert_eq!(
                    lifted_rate(n, rr, 2).unwrap(),
                    BigRational::new((n as i64).into(), ((n + rr) as i64).into())
                );
            }
        }
        let (total, desired) = query_counts(4, 3, 3).unwrap();
        assert_eq!(total, BigUint::from(37u32));
        assert_eq!(desired, BigUint::from(16u32));
        let (total, desired) = query_counts(5, 2, 1).unwrap();
        assert_eq!((total, desired), (BigUint::one(), BigUint::one()));
    }

    #[test]
    fn rate_approaches_one_minus_t_over_n() {
        for n in 2..8usize {
            for t in 1..n {
                let limit = BigRational::one() - int(t) / int(n);
                let r20 = lifted_rate(n, t, 20).unwrap();
                assert!(r20 > limit);
                // gap is limit * q^M / (1 - q^M) with q = t/n
                let q = int(t) / int(n);
                let qm = num::pow::pow(q, 20);
                let gap = limit.clone() * qm.clone() / (BigRational::one() - qm);
                assert_eq!(r20.clone() - limit, gap);
                assert!(lifted_rate(n, t, 21).unwrap() < r20);
            }
        }
    }

    #[test]
    fn group_lineage_is_complete() {
        for n in 2..=6 {
            for r in 1..n {
                for m in 2..=4 {
                    let s = SymbolicMatrix::for_messages(n, r, m).unwrap();
                    let mut member_of = std::collections::HashMap::new();
                    let mut child_of = std::collections::HashMap::new();
                    for (gi, g) in s.groups.iter().enumerate() {
                        assert_eq!(g.members.len(), r);
                        assert_eq!(g.generated.len(), n - r);
                        let mut cols: Vec<usize> =
                            g.members.iter().chain(&g.generated).map(|p| p.col).collect();
                        cols.sort_unstable();
                        assert_eq!(cols, (1..=n).collect::<Vec<_>>());
                        for p in &g.members {
                            assert_eq!(s.get(*p), g.level);
                            assert!(member_of.insert(*p, gi).is_none());
                        }
                        for p in &g.generated {
                            assert_eq!(s.get(*p), g.level + 1);
                            assert!(child_of.insert(*p, gi).is_none());
                        }
                    }
                    for (i, row) in s.entries.iter().enumerate() {
                        for (j, &v) in row.iter().enumerate() {
                            let p = Position::new(i + 1, j + 1);
                            if v == 0 {
                                continue;
                            }
                            assert_eq!(child_of.contains_key(&p), v >= 2, "{p:?}");
                            assert_eq!(member_of.contains_key(&p), v < m, "{p:?}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn desired_load_is_balanced() {
        for n in 2..=6 {
            for r in 1..n {
                for m in 2..=5 {
                    let s = SymbolicMatrix::for_messages(n, r, m).unwrap();
                    let expect = (n as u64).pow(m as u32 - 2);
                    assert_eq!(s.desired_per_column(), vec![expect; n]);
                }
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let s = SymbolicMatrix::for_messages(4, 3, 4).unwrap();
        assert_eq!(SymbolicMatrix::from_json(&s.to_json().unwrap()).unwrap(), s);
    }
}
