//! Prime-field arithmetic, polynomial evaluation and interpolation
//! coefficients.
//!
//! Bulk code works on raw `u64` residues through a [`FieldSpec`]; the
//! [`Scalar`] type carries its modulus and is used where mixing fields must
//! be caught.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PirError, Result};

/// Default prime, `2^16 + 1`.
pub const DEFAULT_PRIME: u64 = 65537;

/// Arithmetic context for `F_p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct FieldSpec {
    p: u64,
}

impl TryFrom<u64> for FieldSpec {
    type Error = PirError;
    fn try_from(p: u64) -> Result<Self> {
        FieldSpec::new(p)
    }
}

impl From<FieldSpec> for u64 {
    fn from(f: FieldSpec) -> u64 {
        f.p
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

impl FieldSpec {
    /// Products of two residues must fit in a `u64`, hence `p < 2^32`.
    pub fn new(p: u64) -> Result<Self> {
        if !(3..1 << 32).contains(&p) || !is_prime(p) {
            return Err(PirError::NotPrime(p));
        }
        Ok(FieldSpec { p })
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    pub fn scalar(&self, value: u64) -> Scalar {
        Scalar {
            value: value % self.p,
            p: self.p,
        }
    }

    /// Reduces a signed integer, so fixtures can be written as `-1`.
    pub fn from_i64(&self, v: i64) -> u64 {
        v.rem_euclid(self.p as i64) as u64
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        a * b % self.p
    }

    pub fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1;
        base %= self.p;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    pub fn inv(&self, a: u64) -> Result<u64> {
        if a.is_multiple_of(self.p) {
            return Err(PirError::DivisionByZero);
        }
        Ok(self.pow(a, self.p - 2))
    }

    pub fn div(&self, a: u64, b: u64) -> Result<u64> {
        Ok(self.mul(a, self.inv(b)?))
    }

    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        rng.random_range(0..self.p)
    }

    pub fn random_vec<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Vec<u64> {
        (0..count).map(|_| self.random(rng)).collect()
    }

    /// Horner evaluation on raw residues.
    pub fn eval_poly(&self, coeffs: &[u64], x: u64) -> u64 {
        coeffs
            .iter()
            .rev()
            .fold(0, |acc, &c| self.add(self.mul(acc, x), c))
    }

    pub fn dot(&self, a: &[u64], b: &[u64]) -> u64 {
        a.iter()
            .zip(b)
            .fold(0, |acc, (&x, &y)| self.add(acc, self.mul(x, y)))
    }
}

/// An element of `F_p` that remembers its modulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Scalar {
    value: u64,
    p: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl Scalar {
    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn field(&self) -> FieldSpec {
        FieldSpec { p: self.p }
    }

    fn same_field(&self, other: &Scalar) -> Result<FieldSpec> {
        if self.p != other.p {
            return Err(PirError::FieldMismatch(self.p, other.p));
        }
        Ok(self.field())
    }

    pub fn try_add(self, other: Scalar) -> Result<Scalar> {
        field_arith(self, other, ArithOp::Add)
    }

    pub fn try_sub(self, other: Scalar) -> Result<Scalar> {
        field_arith(self, other, ArithOp::Sub)
    }

    pub fn try_mul(self, other: Scalar) -> Result<Scalar> {
        field_arith(self, other, ArithOp::Mul)
    }

    pub fn try_div(self, other: Scalar) -> Result<Scalar> {
        field_arith(self, other, ArithOp::Div)
    }

    pub fn inverse(self) -> Result<Scalar> {
        let f = self.field();
        Ok(f.scalar(f.inv(self.value)?))
    }
}

impl std::fmt::Display for Scalar {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.value)
    }
}

/// Checked binary operation on two scalars of the same field.
pub fn field_arith(a: Scalar, b: Scalar, op: ArithOp) -> Result<Scalar> {
    let f = a.same_field(&b)?;
    let v = match op {
        ArithOp::Add => f.add(a.value, b.value),
        ArithOp::Sub => f.sub(a.value, b.value),
        ArithOp::Mul => f.mul(a.value, b.value),
        ArithOp::Div => f.div(a.value, b.value)?,
    };
    Ok(f.scalar(v))
}

/// Returns `sum coeffs[i] * x^i`.
pub fn poly_eval(coeffs: &[Scalar], x: Scalar) -> Result<Scalar> {
    let first = coeffs.first().ok_or(PirError::EmptyPolynomial)?;
    let f = first.same_field(&x)?;
    let mut raw = Vec::with_capacity(coeffs.len());
    for c in coeffs {
        f.scalar(0).same_field(c)?;
        raw.push(c.value);
    }
    Ok(f.scalar(f.eval_poly(&raw, x.value)))
}

fn check_distinct(points: &[u64]) -> Result<()> {
    for (i, a) in points.iter().enumerate() {
        if points[i + 1..].contains(a) {
            return Err(PirError::RepeatedPoints(format!("{a} appears twice")));
        }
    }
    Ok(())
}

fn raw_values(f: FieldSpec, xs: &[Scalar]) -> Result<Vec<u64>> {
    xs.iter()
        .map(|s| f.scalar(0).same_field(s).map(|_| s.value))
        .collect()
}

/// Lagrange evaluation coefficients: for every `F` with `deg F < degree_bound`,
/// `F(target) = sum lambda_j * F(group_points[j])`.
pub fn dependency_coeffs(
    group_points: &[Scalar],
    target_point: Scalar,
    degree_bound: usize,
) -> Result<Vec<Scalar>> {
    if group_points.len() != degree_bound || degree_bound == 0 {
        return Err(PirError::InvalidParameters(format!(
            "need exactly degree_bound={degree_bound} group points, got {}",
            group_points.len()
        )));
    }
    let f = target_point.field();
    let xs = raw_values(f, group_points)?;
    let mut all = xs.clone();
    all.push(target_point.value);
    check_distinct(&all)?;
    let t = target_point.value;
    let mut out = Vec::with_capacity(xs.len());
    for (j, &xj) in xs.iter().enumerate() {
        let mut num = 1;
        let mut den = 1;
        for (i, &xi) in xs.iter().enumerate() {
            if i != j {
                num = f.mul(num, f.sub(t, xi));
                den = f.mul(den, f.sub(xj, xi));
            }
        }
        out.push(f.scalar(f.div(num, den)?));
    }
    Ok(out)
}

/// Coefficients (lowest degree first) of the unique polynomial of degree
/// `< points.len()` through `(points[i], values[i])`.
pub fn interpolate(points: &[Scalar], values: &[Scalar]) -> Result<Vec<Scalar>> {
    if points.len() != values.len() {
        return Err(PirError::DimensionMismatch {
            expected: points.len(),
            got: values.len(),
        });
    }
    let first = points.first().ok_or(PirError::EmptyPolynomial)?;
    let f = first.field();
    let xs = raw_values(f, points)?;
    let ys = raw_values(f, values)?;
    check_distinct(&xs)?;
    let n = xs.len();
    let mut coeffs = vec![0u64; n];
    for j in 0..n {
        // basis polynomial prod_{i != j} (x - x_i) / (x_j - x_i)
        let mut basis = vec![1u64];
        let mut den = 1;
        for i in 0..n {
            if i == j {
                continue;
            }
            let mut next = vec![0u64; basis.len() + 1];
            for (d, &c) in basis.iter().enumerate() {
                next[d + 1] = f.add(next[d + 1], c);
                next[d] = f.sub(next[d], f.mul(c, xs[i]));
            }
            basis = next;
            den = f.mul(den, f.sub(xs[j], xs[i]));
        }
        let scale = f.div(ys[j], den)?;
        for (d, c) in basis.into_iter().enumerate() {
            coeffs[d] = f.add(coeffs[d], f.mul(c, scale));
        }
    }
    Ok(coeffs.into_iter().map(|c| f.scalar(c)).collect())
}

/// Deterministic (given the generator state) uniform draws from `F_p`.
pub fn sample_uniform<R: Rng + ?Sized>(rng: &mut R, field: FieldSpec, count: usize) -> Vec<Scalar> {
    (0..count).map(|_| field.scalar(field.random(rng))).collect()
}

/// A point of the projective line over `F_p`, used as a server's evaluation
/// point. `Infinity` evaluates a polynomial to its top coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalPoint {
    Finite(u64),
    Infinity,
}

impl EvalPoint {
    /// Monomial column `(1, x, ..., x^{d-1})`, or `e_{d-1}` at infinity.
    pub fn monomials(&self, field: FieldSpec, degree_bound: usize) -> Vec<u64> {
        match *self {
            EvalPoint::Finite(x) => {
                let mut out = Vec::with_capacity(degree_bound);
                let mut acc = 1;
                for _ in 0..degree_bound {
                    out.push(acc);
                    acc = field.mul(acc, x);
                }
                out
            }
            EvalPoint::Infinity => {
                let mut out = vec![0; degree_bound];
                if let Some(last) = out.last_mut() {
                    *last = 1;
                }
                out
            }
        }
    }

    /// Evaluates a polynomial with `coeffs.len()` as its degree bound.
    pub fn eval(&self, field: FieldSpec, coeffs: &[u64]) -> u64 {
        match *self {
            EvalPoint::Finite(x) => field.eval_poly(coeffs, x),
            EvalPoint::Infinity => coeffs.last().copied().unwrap_or(0),
        }
    }
}

/// Generalisation of [`dependency_coeffs`] to projective points: solves
/// `col(target) = sum lambda_j col(points[j])` in the monomial basis.
pub fn projective_dependency_coeffs(
    field: FieldSpec,
    points: &[EvalPoint],
    target: EvalPoint,
    degree_bound: usize,
) -> Result<Vec<u64>> {
    if points.len() != degree_bound || degree_bound == 0 {
        return Err(PirError::InvalidParameters(format!(
            "need exactly degree_bound={degree_bound} points, got {}",
            points.len()
        )));
    }
    let mut all = points.to_vec();
    all.push(target);
    for (i, a) in all.iter().enumerate() {
        if all[i + 1..].contains(a) {
            return Err(PirError::RepeatedPoints(format!("{a:?} appears twice")));
        }
    }
    // Columns of the system are the members' monomial vectors.
    let d = degree_bound;
    let cols: Vec<Vec<u64>> = points.iter().map(|p| p.monomials(field, d)).collect();
    let mut a = crate::linalg::Matrix::zeros(field, d, d);
    for (j, col) in cols.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            a.set(i, j, v);
        }
    }
    a.solve(&target.monomials(field, d))
}
