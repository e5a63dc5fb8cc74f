//! Truncated multivariate Taylor series (jets).
//!
//! Coefficients are stored densely in graded order: all monomials of degree 0,
//! then degree 1, and so on, each degree block in descending lexicographic
//! order of the exponent vector. A [`JetSpace`] owns that layout and is shared
//! between every jet with the same variable count and truncation degree.

use std::collections::HashMap;
use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use num_traits::NumAssign;

use crate::error::{Error, Result};

pub trait Scalar:
    Copy + Debug + PartialEq + NumAssign + Neg<Output = Self> + From<f64> + Send + Sync + 'static
{
    fn modulus(self) -> f64;
}

impl Scalar for f64 {
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex64 {
    fn modulus(self) -> f64 {
        self.norm()
    }
}

/// Monomial layout for `nvars` variables up to total degree `max_degree`.
#[derive(Debug)]
pub struct JetSpace {
    nvars: usize,
    max_degree: usize,
    exps: Vec<u8>,
    degree_start: Vec<usize>,
    binom: Vec<Vec<usize>>,
}

fn binomial_table(n: usize) -> Vec<Vec<usize>> {
    let mut t = vec![vec![0usize; n + 1]; n + 1];
    for i in 0..=n {
        t[i][0] = 1;
        for k in 1..=i {
            t[i][k] = t[i - 1][k - 1] + if k < i { t[i - 1][k] } else { 0 };
        }
    }
    t
}

impl JetSpace {
    fn build(nvars: usize, max_degree: usize) -> Self {
        assert!(nvars >= 1, "a jet space needs at least one variable");
        assert!(max_degree < 255);
        let binom = binomial_table(nvars + max_degree + 1);
        let mut exps = Vec::new();
        let mut degree_start = Vec::with_capacity(max_degree + 2);
        let mut count = 0usize;
        let mut cur = vec![0u8; nvars];
        for d in 0..=max_degree {
            degree_start.push(count);
            fill_degree(&mut cur, 0, d, &mut exps, &mut count);
        }
        degree_start.push(count);
        JetSpace {
            nvars,
            max_degree,
            exps,
            degree_start,
            binom,
        }
    }

    /// Shared layout for the given shape.
    pub fn get(nvars: usize, max_degree: usize) -> Arc<JetSpace> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<JetSpace>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("jet space cache poisoned");
        guard
            .entry((nvars, max_degree))
            .or_insert_with(|| Arc::new(JetSpace::build(nvars, max_degree)))
            .clone()
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// Number of stored monomials.
    pub fn len(&self) -> usize {
        self.degree_start[self.max_degree + 1]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index range of the degree-`d` block.
    pub fn block(&self, d: usize) -> std::ops::Range<usize> {
        self.degree_start[d]..self.degree_start[d + 1]
    }

    pub fn exponent(&self, idx: usize) -> &[u8] {
        &self.exps[idx * self.nvars..(idx + 1) * self.nvars]
    }

    pub fn degree_of(&self, idx: usize) -> usize {
        match self.degree_start.binary_search(&idx) {
            Ok(d) => d,
            Err(d) => d - 1,
        }
    }

    /// Position of a monomial; `alpha` must have total degree ≤ `max_degree`.
    pub fn rank(&self, alpha: &[u8]) -> usize {
        let d: usize = alpha.iter().map(|&a| a as usize).sum();
        let n = self.nvars;
        let mut idx = self.degree_start[d];
        let mut rem = d;
        for (i, &a) in alpha.iter().enumerate().take(n - 1) {
            let a = a as usize;
            if rem > a {
                let k = n - i - 1;
                idx += self.binom[k + rem - a - 1][k];
            }
            rem -= a;
        }
        idx
    }

    fn same_shape(&self, other: &JetSpace) -> bool {
        self.nvars == other.nvars && self.max_degree == other.max_degree
    }
}

fn fill_degree(cur: &mut [u8], pos: usize, rem: usize, exps: &mut Vec<u8>, count: &mut usize) {
    if pos == cur.len() - 1 {
        cur[pos] = rem as u8;
        exps.extend_from_slice(cur);
        *count += 1;
        return;
    }
    for a in (0..=rem).rev() {
        cur[pos] = a as u8;
        fill_degree(cur, pos + 1, rem - a, exps, count);
    }
    cur[pos] = 0;
}

fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * i as f64)
}

/// Truncated Taylor expansion about the origin.
#[derive(Clone, Debug)]
pub struct MultiJet<T: Scalar> {
    space: Arc<JetSpace>,
    coeffs: Vec<T>,
}

pub type RealJet = MultiJet<f64>;
pub type ComplexJet = MultiJet<Complex64>;

impl<T: Scalar> MultiJet<T> {
    pub fn zero(nvars: usize, max_degree: usize) -> Self {
        Self::zero_in(&JetSpace::get(nvars, max_degree))
    }

    pub fn zero_in(space: &Arc<JetSpace>) -> Self {
        MultiJet {
            space: space.clone(),
            coeffs: vec![T::zero(); space.len()],
        }
    }

    pub fn constant(nvars: usize, max_degree: usize, c: T) -> Self {
        let mut j = Self::zero(nvars, max_degree);
        j.coeffs[0] = c;
        j
    }

    /// The coordinate function `x_var`.
    pub fn variable(nvars: usize, max_degree: usize, var: usize) -> Self {
        let mut j = Self::zero(nvars, max_degree);
        if max_degree >= 1 {
            let mut alpha = vec![0u8; nvars];
            alpha[var] = 1;
            let idx = j.space.rank(&alpha);
            j.coeffs[idx] = T::one();
        }
        j
    }

    /// `Σ_k coeffs[k] x_var^k`, truncated.
    pub fn from_univariate(nvars: usize, max_degree: usize, var: usize, coeffs: &[T]) -> Self {
        let mut j = Self::zero(nvars, max_degree);
        let mut alpha = vec![0u8; nvars];
        for (k, &c) in coeffs.iter().enumerate().take(max_degree + 1) {
            alpha[var] = k as u8;
            let idx = j.space.rank(&alpha);
            j.coeffs[idx] = c;
        }
        j
    }

    pub fn from_coeffs(space: &Arc<JetSpace>, coeffs: Vec<T>) -> Result<Self> {
        if coeffs.len() != space.len() {
            return Err(Error::Invalid(format!(
                "expected {} coefficients, got {}",
                space.len(),
                coeffs.len()
            )));
        }
        Ok(MultiJet {
            space: space.clone(),
            coeffs,
        })
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    pub fn nvars(&self) -> usize {
        self.space.nvars
    }

    pub fn max_degree(&self) -> usize {
        self.space.max_degree
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn constant_term(&self) -> T {
        self.coeffs[0]
    }

    pub fn coefficient(&self, alpha: &[u8]) -> Result<T> {
        self.check_index(alpha)?;
        Ok(self.coeffs[self.space.rank(alpha)])
    }

    pub fn set_coefficient(&mut self, alpha: &[u8], value: T) -> Result<()> {
        self.check_index(alpha)?;
        let idx = self.space.rank(alpha);
        self.coeffs[idx] = value;
        Ok(())
    }

    fn check_index(&self, alpha: &[u8]) -> Result<()> {
        if alpha.len() != self.nvars() {
            return Err(Error::Invalid(format!(
                "multi-index has {} entries, jet has {} variables",
                alpha.len(),
                self.nvars()
            )));
        }
        let d: usize = alpha.iter().map(|&a| a as usize).sum();
        if d > self.max_degree() {
            return Err(Error::DegreeOverflow {
                order: d,
                max_degree: self.max_degree(),
            });
        }
        Ok(())
    }

    /// `∂^α` at the expansion point: the coefficient times `α!`.
    pub fn partial(&self, alpha: &[u8]) -> Result<T> {
        let c = self.coefficient(alpha)?;
        let f: f64 = alpha.iter().map(|&a| factorial(a as usize)).product();
        Ok(c * T::from(f))
    }

    /// Partial derivative along a list of variable indices (repeats allowed).
    pub fn partial_by_indices(&self, idx: &[usize]) -> Result<T> {
        let mut alpha = vec![0u8; self.nvars()];
        for &i in idx {
            alpha[i] += 1;
        }
        self.partial(&alpha)
    }

    fn check_shape(&self, other: &Self) -> Result<()> {
        if self.space.same_shape(&other.space) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(
                self.nvars(),
                self.max_degree(),
                other.nvars(),
                other.max_degree(),
            ))
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(&a, &b)| a + b)
            .collect();
        Ok(MultiJet {
            space: self.space.clone(),
            coeffs,
        })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(&a, &b)| a - b)
            .collect();
        Ok(MultiJet {
            space: self.space.clone(),
            coeffs,
        })
    }

    /// Cauchy product truncated at the common degree.
    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        let sp = &self.space;
        let n = sp.nvars;
        let dmax = sp.max_degree;
        let mut out = vec![T::zero(); sp.len()];
        let blocks_a = self.nonzero_blocks();
        let blocks_b = other.nonzero_blocks();
        let mut sum = vec![0u8; n];
        for &da in &blocks_a {
            for &db in &blocks_b {
                if da + db > dmax {
                    continue;
                }
                for ia in sp.block(da) {
                    let ca = self.coeffs[ia];
                    if ca == T::zero() {
                        continue;
                    }
                    let ea = sp.exponent(ia);
                    for ib in sp.block(db) {
                        let cb = other.coeffs[ib];
                        if cb == T::zero() {
                            continue;
                        }
                        let eb = sp.exponent(ib);
                        for v in 0..n {
                            sum[v] = ea[v] + eb[v];
                        }
                        out[sp.rank(&sum)] += ca * cb;
                    }
                }
            }
        }
        Ok(MultiJet {
            space: sp.clone(),
            coeffs: out,
        })
    }

    pub fn scale(&self, c: T) -> Self {
        MultiJet {
            space: self.space.clone(),
            coeffs: self.coeffs.iter().map(|&a| a * c).collect(),
        }
    }

    pub fn add_constant(&self, c: T) -> Self {
        let mut j = self.clone();
        j.coeffs[0] += c;
        j
    }

    /// Degrees whose coefficient block is not identically zero.
    pub fn nonzero_blocks(&self) -> Vec<usize> {
        (0..=self.max_degree())
            .filter(|&d| self.space.block(d).any(|i| self.coeffs[i] != T::zero()))
            .collect()
    }

    /// Lowest degree with a nonzero coefficient (`None` for the zero jet).
    pub fn valuation(&self) -> Option<usize> {
        self.nonzero_blocks().first().copied()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.modulus()).fold(0.0, f64::max)
    }

    /// Keep only the terms of total degree in `lo..=hi`.
    pub fn degree_band(&self, lo: usize, hi: usize) -> Self {
        let mut j = self.clone();
        for d in 0..=self.max_degree() {
            if d < lo || d > hi {
                for i in self.space.block(d) {
                    j.coeffs[i] = T::zero();
                }
            }
        }
        j
    }

    /// Re-truncate to a lower degree.
    pub fn truncate(&self, max_degree: usize) -> Result<Self> {
        if max_degree > self.max_degree() {
            return Err(Error::DegreeOverflow {
                order: max_degree,
                max_degree: self.max_degree(),
            });
        }
        let space = JetSpace::get(self.nvars(), max_degree);
        let coeffs = self.coeffs[..space.len()].to_vec();
        Ok(MultiJet { space, coeffs })
    }

    /// Same polynomial in a space of a different truncation degree (higher
    /// degrees are zero-padded, lower ones dropped).
    pub fn resize(&self, max_degree: usize) -> Self {
        let space = JetSpace::get(self.nvars(), max_degree);
        let mut coeffs = vec![T::zero(); space.len()];
        let keep = coeffs.len().min(self.coeffs.len());
        coeffs[..keep].copy_from_slice(&self.coeffs[..keep]);
        MultiJet { space, coeffs }
    }

    /// Compose a univariate series with this jet: `Σ_k outer[k] (J − J(0))^k`,
    /// where `outer` holds the Taylor coefficients of the outer function at `J(0)`.
    pub fn compose(&self, outer: &[T]) -> Self {
        let dmax = self.max_degree();
        let mut u = self.clone();
        u.coeffs[0] = T::zero();
        let top = dmax.min(outer.len().saturating_sub(1));
        let mut acc = MultiJet::zero_in(&self.space);
        acc.coeffs[0] = outer.get(top).copied().unwrap_or(T::zero());
        for k in (0..top).rev() {
            acc = &acc * &u;
            acc.coeffs[0] += outer[k];
        }
        acc
    }

    /// `∂/∂x_var`, one degree lower.
    pub fn derivative(&self, var: usize) -> Result<Self> {
        if self.max_degree() == 0 {
            return Err(Error::DegreeOverflow {
                order: 1,
                max_degree: 0,
            });
        }
        let target = JetSpace::get(self.nvars(), self.max_degree() - 1);
        let mut out = vec![T::zero(); target.len()];
        let mut alpha = vec![0u8; self.nvars()];
        for (i, slot) in out.iter_mut().enumerate() {
            alpha.copy_from_slice(target.exponent(i));
            alpha[var] += 1;
            let c = self.coeffs[self.space.rank(&alpha)];
            *slot = c * T::from(alpha[var] as f64);
        }
        Ok(MultiJet {
            space: target,
            coeffs: out,
        })
    }

    /// `Σ_{a,b} h[a][b] ∂_a ∂_b J`, two degrees lower. `h` is row-major `n × n`.
    pub fn apply_quadratic_operator(&self, h: &[f64]) -> Result<Self> {
        let n = self.nvars();
        if h.len() != n * n {
            return Err(Error::Invalid("operator matrix has the wrong size".into()));
        }
        if self.max_degree() < 2 {
            return Err(Error::DegreeOverflow {
                order: 2,
                max_degree: self.max_degree(),
            });
        }
        let target = JetSpace::get(n, self.max_degree() - 2);
        let mut out = vec![T::zero(); target.len()];
        let mut beta = vec![0u8; n];
        for d in self.nonzero_blocks().into_iter().filter(|&d| d >= 2) {
            for idx in self.space.block(d) {
                let c = self.coeffs[idx];
                if c == T::zero() {
                    continue;
                }
                let e = self.space.exponent(idx);
                for a in 0..n {
                    if e[a] == 0 {
                        continue;
                    }
                    if e[a] >= 2 && h[a * n + a] != 0.0 {
                        beta.copy_from_slice(e);
                        beta[a] -= 2;
                        let f = (e[a] as f64) * (e[a] as f64 - 1.0) * h[a * n + a];
                        out[target.rank(&beta)] += c * T::from(f);
                    }
                    for b in (a + 1)..n {
                        if e[b] == 0 {
                            continue;
                        }
                        let hab = h[a * n + b] + h[b * n + a];
                        if hab == 0.0 {
                            continue;
                        }
                        beta.copy_from_slice(e);
                        beta[a] -= 1;
                        beta[b] -= 1;
                        let f = (e[a] as f64) * (e[b] as f64) * hab;
                        out[target.rank(&beta)] += c * T::from(f);
                    }
                }
            }
        }
        Ok(MultiJet {
            space: target,
            coeffs: out,
        })
    }

    /// Evaluate the truncated polynomial at `x`.
    pub fn eval(&self, x: &[f64]) -> T {
        let mut acc = T::zero();
        for (idx, &c) in self.coeffs.iter().enumerate() {
            if c == T::zero() {
                continue;
            }
            let e = self.space.exponent(idx);
            let m: f64 = e.iter().zip(x).map(|(&k, &xi)| xi.powi(k as i32)).product();
            acc += c * T::from(m);
        }
        acc
    }

    /// Re-express in `nvars` variables, sending variable `i` to `map[i]`.
    pub fn embed(&self, nvars: usize, map: &[usize]) -> Self {
        let space = JetSpace::get(nvars, self.max_degree());
        let mut out = vec![T::zero(); space.len()];
        let mut alpha = vec![0u8; nvars];
        for (idx, &c) in self.coeffs.iter().enumerate() {
            if c == T::zero() {
                continue;
            }
            alpha.iter_mut().for_each(|a| *a = 0);
            for (i, &k) in self.space.exponent(idx).iter().enumerate() {
                alpha[map[i]] += k;
            }
            out[space.rank(&alpha)] += c;
        }
        MultiJet { space, coeffs: out }
    }

    /// Dense symmetric tensor of order `order`: entry `[i1, …, i_order]`
    /// (row-major, base `n`) is `∂_{i1}⋯∂_{i_order} J(0)`.
    pub fn derivative_tensor(&self, order: usize) -> Result<Vec<T>> {
        if order > self.max_degree() {
            return Err(Error::DegreeOverflow {
                order,
                max_degree: self.max_degree(),
            });
        }
        let n = self.nvars();
        let size = n.pow(order as u32);
        let mut out = Vec::with_capacity(size);
        let mut alpha = vec![0u8; n];
        let mut digits = vec![0usize; order];
        for _ in 0..size {
            alpha.iter_mut().for_each(|a| *a = 0);
            for &d in &digits {
                alpha[d] += 1;
            }
            out.push(self.partial(&alpha)?);
            for slot in digits.iter_mut().rev() {
                *slot += 1;
                if *slot < n {
                    break;
                }
                *slot = 0;
            }
        }
        Ok(out)
    }
}

impl MultiJet<f64> {
    pub fn to_complex(&self) -> MultiJet<Complex64> {
        MultiJet {
            space: self.space.clone(),
            coeffs: self.coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect(),
        }
    }

    /// `J^p` for real `p`; requires `J(0) > 0` unless `p` is a non-negative integer.
    pub fn powf(&self, p: f64) -> Result<Self> {
        let c = self.constant_term();
        Ok(self.compose(&series::powf(c, p, self.max_degree())?))
    }

    pub fn sqrt(&self) -> Result<Self> {
        self.powf(0.5)
    }

    pub fn recip(&self) -> Result<Self> {
        Ok(self.compose(&series::recip(self.constant_term(), self.max_degree())?))
    }

    pub fn exp(&self) -> Self {
        self.compose(&series::exp(self.constant_term(), self.max_degree()))
    }
}

impl<'a, T: Scalar> Add for &'a MultiJet<T> {
    type Output = MultiJet<T>;
    fn add(self, rhs: Self) -> MultiJet<T> {
        self.try_add(rhs).expect("jet addition")
    }
}

impl<'a, T: Scalar> Sub for &'a MultiJet<T> {
    type Output = MultiJet<T>;
    fn sub(self, rhs: Self) -> MultiJet<T> {
        self.try_sub(rhs).expect("jet subtraction")
    }
}

impl<'a, T: Scalar> Mul for &'a MultiJet<T> {
    type Output = MultiJet<T>;
    fn mul(self, rhs: Self) -> MultiJet<T> {
        self.try_mul(rhs).expect("jet multiplication")
    }
}

impl<'a, T: Scalar> Neg for &'a MultiJet<T> {
    type Output = MultiJet<T>;
    fn neg(self) -> MultiJet<T> {
        self.scale(-T::one())
    }
}

pub fn jet_add<T: Scalar>(a: &MultiJet<T>, b: &MultiJet<T>) -> Result<MultiJet<T>> {
    a.try_add(b)
}

pub fn jet_mul<T: Scalar>(a: &MultiJet<T>, b: &MultiJet<T>) -> Result<MultiJet<T>> {
    a.try_mul(b)
}

pub fn jet_scale<T: Scalar>(a: &MultiJet<T>, c: T) -> MultiJet<T> {
    a.scale(c)
}

/// Composition of a univariate power series (Taylor coefficients of the outer
/// function at the inner jet's constant term) with a jet.
pub fn jet_compose_scalar<T: Scalar>(outer: &[T], inner: &MultiJet<T>) -> MultiJet<T> {
    inner.compose(outer)
}

pub fn extract_partial<T: Scalar>(j: &MultiJet<T>, alpha: &[u8]) -> Result<T> {
    j.partial(alpha)
}

/// Taylor coefficients of common outer functions, for [`MultiJet::compose`].
pub mod series {
    use crate::error::{Error, Result};

    /// Generalized binomial coefficient `C(p, k)`.
    pub fn binom(p: f64, k: usize) -> f64 {
        let mut c = 1.0;
        for i in 0..k {
            c *= (p - i as f64) / (i as f64 + 1.0);
        }
        c
    }

    /// `x ↦ x^p` expanded at `c`.
    pub fn powf(c: f64, p: f64, degree: usize) -> Result<Vec<f64>> {
        let integer = p >= 0.0 && p.fract() == 0.0;
        if !integer && c <= 0.0 {
            return Err(Error::SingularComposition(format!(
                "power {p} expanded at non-positive point {c}"
            )));
        }
        if !integer && c == 0.0 {
            return Err(Error::SingularComposition("power at 0".into()));
        }
        Ok((0..=degree)
            .map(|k| {
                let b = binom(p, k);
                if b == 0.0 {
                    0.0
                } else {
                    b * c.powf(p - k as f64)
                }
            })
            .collect())
    }

    /// `x ↦ 1/x` expanded at `c`.
    pub fn recip(c: f64, degree: usize) -> Result<Vec<f64>> {
        if c == 0.0 {
            return Err(Error::SingularComposition("reciprocal at 0".into()));
        }
        Ok((0..=degree)
            .map(|k| {
                let s = if k % 2 == 0 { 1.0 } else { -1.0 };
                s / c.powi(k as i32 + 1)
            })
            .collect())
    }

    /// `x ↦ e^x` expanded at `c`.
    pub fn exp(c: f64, degree: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(degree + 1);
        let mut term = c.exp();
        for k in 0..=degree {
            if k > 0 {
                term /= k as f64;
            }
            out.push(term);
        }
        out
    }

    /// `x ↦ ln x` expanded at `c > 0`.
    pub fn ln(c: f64, degree: usize) -> Result<Vec<f64>> {
        if c <= 0.0 {
            return Err(Error::SingularComposition(format!("logarithm at {c}")));
        }
        let mut out = vec![c.ln()];
        for k in 1..=degree {
            let s = if k % 2 == 1 { 1.0 } else { -1.0 };
            out.push(s / (k as f64 * c.powi(k as i32)));
        }
        Ok(out)
    }
}
