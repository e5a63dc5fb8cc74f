//! Hessians of the length functional at iterated orbits and their inverses.
//!
//! At the r-th iterate of a bouncing-ball orbit the Hessian is
//! `H = −(1/L)·M` where `M` is cyclic tridiagonal of size `2r` with diagonal
//! `a, b, a, b, …` and unit off-diagonals (entries add up when `2r = 2`). In
//! the up-down symmetric case `M` is the circulant `C(a, 1, 0, …, 0, 1)`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

/// Smallest admissible modulus of a circulant symbol value.
pub const POLE_GUARD: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CirculantHessian {
    pub r: usize,
    pub l: f64,
    pub a: f64,
    pub b: f64,
}

impl CirculantHessian {
    pub fn symmetric(r: usize, l: f64, a: f64) -> Self {
        CirculantHessian { r, l, a, b: a }
    }

    pub fn is_symmetric(&self) -> bool {
        self.a == self.b
    }

    pub fn size(&self) -> usize {
        2 * self.r
    }

    fn require_symmetric(&self) -> Result<()> {
        if self.is_symmetric() {
            Ok(())
        } else {
            Err(Error::Invalid(
                "operation needs the symmetric (circulant) Hessian".into(),
            ))
        }
    }
}

/// Cyclic tridiagonal matrix with the given diagonal and off-diagonal value;
/// for size 2 both neighbours coincide and contribute twice.
fn cyclic_tridiagonal(diag: &[f64], off: f64) -> DMatrix<f64> {
    let n = diag.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] += diag[i];
        if n > 1 {
            m[(i, (i + 1) % n)] += off;
            m[(i, (i + n - 1) % n)] += off;
        }
    }
    m
}

pub fn hessian_matrix(h: &CirculantHessian) -> DMatrix<f64> {
    let diag: Vec<f64> = (0..h.size())
        .map(|i| if i % 2 == 0 { h.a } else { h.b })
        .collect();
    cyclic_tridiagonal(&diag, 1.0) * (-1.0 / h.l)
}

/// `p_{a,r}(w^k) = a + 2cos(πk/r)`.
pub fn symbol(a: f64, r: usize, k: usize) -> f64 {
    a + 2.0 * (PI * k as f64 / r as f64).cos()
}

fn check_symbol(a: f64, r: usize) -> Result<()> {
    for k in 0..2 * r {
        if symbol(a, r, k).abs() <= POLE_GUARD {
            return Err(Error::SymbolPole { r, a, k });
        }
    }
    Ok(())
}

/// `h^{pq}` (1-based) by finite Fourier diagonalization.
pub fn inverse_fourier(h: &CirculantHessian, p: usize, q: usize) -> Result<f64> {
    h.require_symmetric()?;
    check_symbol(h.a, h.r)?;
    Ok(fourier_entry(h, p, q))
}

fn fourier_entry(h: &CirculantHessian, p: usize, q: usize) -> f64 {
    let n = h.size();
    let shift = (q + n - p) % n;
    let s: f64 = (0..n)
        .map(|k| {
            let phase = 2.0 * PI * (shift * k) as f64 / n as f64;
            phase.cos() / symbol(h.a, h.r, k)
        })
        .sum();
    -h.l * s / n as f64
}

/// Full inverse by Fourier diagonalization.
pub fn inverse_fourier_matrix(h: &CirculantHessian) -> Result<DMatrix<f64>> {
    h.require_symmetric()?;
    check_symbol(h.a, h.r)?;
    let n = h.size();
    let row: Vec<f64> = (1..=n).map(|q| fourier_entry(h, 1, q)).collect();
    Ok(DMatrix::from_fn(n, n, |i, j| row[(j + n - i) % n]))
}

/// Chebyshev polynomial of the first kind, by recurrence.
pub fn chebyshev_t(n: usize, x: f64) -> f64 {
    let (mut t0, mut t1) = (1.0, x);
    if n == 0 {
        return t0;
    }
    for _ in 1..n {
        let t2 = 2.0 * x * t1 - t0;
        t0 = t1;
        t1 = t2;
    }
    t1
}

/// Chebyshev polynomial of the second kind with `U_{−1} = 0`.
pub fn chebyshev_u(n: i64, x: f64) -> f64 {
    if n < 0 {
        return 0.0;
    }
    let (mut u0, mut u1) = (1.0, 2.0 * x);
    if n == 0 {
        return u0;
    }
    for _ in 1..n {
        let u2 = 2.0 * x * u1 - u0;
        u0 = u1;
        u1 = u2;
    }
    u1
}

/// `h^{pq}` (1-based) by the Chebyshev finite-difference formula.
pub fn inverse_chebyshev(h: &CirculantHessian, p: usize, q: usize) -> Result<f64> {
    h.require_symmetric()?;
    let (p, q) = if p <= q { (p, q) } else { (q, p) };
    let x = -h.a / 2.0;
    let n2 = 2 * h.r as i64;
    let den = 2.0 * (1.0 - chebyshev_t(2 * h.r, x));
    if den.abs() <= POLE_GUARD {
        return Err(Error::ChebyshevPole { r: h.r, a: h.a });
    }
    let (p, q) = (p as i64, q as i64);
    let num = chebyshev_u(n2 - q + p - 1, x) + chebyshev_u(q - p - 1, x);
    Ok(-h.l * num / den)
}

/// Inverse by LU factorization of the dense matrix.
pub fn inverse_dense(h: &CirculantHessian) -> Result<DMatrix<f64>> {
    hessian_matrix(h)
        .try_inverse()
        .ok_or(Error::SingularHessian)
}

/// `Σ_q h^{pq} = −L/(a + 2)`.
pub fn row_sum(h: &CirculantHessian) -> Result<f64> {
    h.require_symmetric()?;
    if (h.a + 2.0).abs() <= 1e-14 {
        return Err(Error::RowSumPole);
    }
    Ok(-h.l / (h.a + 2.0))
}

/// `F₃(r, a) = Σ_q (h^{1q})³`.
pub fn cubic_sum(h: &CirculantHessian) -> Result<f64> {
    h.require_symmetric()?;
    check_symbol(h.a, h.r)?;
    Ok((1..=h.size()).map(|q| fourier_entry(h, 1, q).powi(3)).sum())
}

/// `F₃` as the double sum over pairs of 2r-th roots of unity.
pub fn dedekind_cubic_sum(h: &CirculantHessian) -> Result<f64> {
    h.require_symmetric()?;
    check_symbol(h.a, h.r)?;
    let n = h.size();
    let p: Vec<f64> = (0..n).map(|k| symbol(h.a, h.r, k)).collect();
    let mut s = 0.0;
    for k1 in 0..n {
        for k2 in 0..n {
            s += 1.0 / (p[k1] * p[k2] * p[(k1 + k2) % n]);
        }
    }
    Ok((-h.l).powi(3) * s / (n * n) as f64)
}

/// `h¹¹ = −L cot(rα/2)/(2 sin(α/2))` for elliptic `a ∈ (−2, 2)`.
pub fn h11_cot(r: usize, l: f64, a: f64) -> Result<f64> {
    if a.abs() >= 2.0 {
        return Err(Error::Invalid("cotangent form needs elliptic a".into()));
    }
    let half = (-a / 2.0).acos();
    let t = (r as f64 * half).tan();
    Ok(-l / (2.0 * half.sin() * t))
}

/// `h¹¹_{2r}` of the symmetric Hessian.
pub fn h11(r: usize, l: f64, a: f64) -> Result<f64> {
    let h = CirculantHessian::symmetric(r, l, a);
    check_symbol(a, r)?;
    Ok(fourier_entry(&h, 1, 1))
}

/// `det H_{2r} = −L^{−2r}(2 − 2T_r((ab − 2)/2))`, the Chebyshev form of
/// `−L^{−2r}(2 − 2cos rα)` that continues to hyperbolic data.
pub fn det_closed(h: &CirculantHessian) -> f64 {
    let x = (h.a * h.b - 2.0) / 2.0;
    -(2.0 - 2.0 * chebyshev_t(h.r, x)) / h.l.powi(2 * h.r as i32)
}

/// Elliptic form `−L^{−2r}(2 − 2cos rα)` with `a = −2cos(α/2)`.
pub fn det_elliptic(r: usize, l: f64, a: f64) -> f64 {
    let alpha = 2.0 * (-a / 2.0).acos();
    -(2.0 - 2.0 * (r as f64 * alpha).cos()) / l.powi(2 * r as i32)
}

/// `((h¹¹_{2r})², F₃(r, a))`, the decoupling row for iterate `r`.
pub fn decoupling_row(r: usize, l: f64, a: f64) -> Result<(f64, f64)> {
    let h = CirculantHessian::symmetric(r, l, a);
    let d = h11(r, l, a)?;
    Ok((d * d, cubic_sum(&h)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecouplingPair {
    pub r: usize,
    pub s: usize,
    pub determinant: f64,
}

/// Pair `r < s ≤ r_max` maximizing `|det [[(h¹¹_{2r})², F₃(r)], [(h¹¹_{2s})², F₃(s)]]|`.
/// `tol` is relative to `L⁵`.
pub fn decoupling_pair(a: f64, r_max: usize, l: f64, tol: f64) -> Result<DecouplingPair> {
    let rows: Vec<(usize, (f64, f64))> = (1..=r_max)
        .filter_map(|r| decoupling_row(r, l, a).ok().map(|row| (r, row)))
        .collect();
    let mut best: Option<DecouplingPair> = None;
    for (i, &(r, (x1, y1))) in rows.iter().enumerate() {
        for &(s, (x2, y2)) in &rows[i + 1..] {
            let det = x1 * y2 - y1 * x2;
            if best.is_none_or(|b| det.abs() > b.determinant.abs()) {
                best = Some(DecouplingPair {
                    r,
                    s,
                    determinant: det,
                });
            }
        }
    }
    let threshold = tol * l.powi(5);
    match best {
        Some(b) if b.determinant.abs() > threshold => Ok(b),
        _ => Err(Error::BadFloquet { a, tol: threshold }),
    }
}

/// Hessian of the length functional at the r-th iterate of a regular m-link
/// dihedral orbit in rotated graph coordinates:
/// `−(sin²(π/m)/ℓ)·C(s, −1, 0, …, 0, −1)` of size `mr`, with `ℓ` the link length.
pub fn dihedral_hessian(m: usize, r: usize, s: f64, link_length: f64) -> DMatrix<f64> {
    let n = m * r;
    let sigma = (PI / m as f64).sin();
    cyclic_tridiagonal(&vec![s; n], -1.0) * (-sigma * sigma / link_length)
}

/// `h^{pq}` (1-based) of [`dihedral_hessian`] by Fourier diagonalization.
pub fn dihedral_inverse_entry(
    m: usize,
    r: usize,
    s: f64,
    link_length: f64,
    p: usize,
    q: usize,
) -> Result<f64> {
    let n = m * r;
    let sigma = (PI / m as f64).sin();
    let shift = (q + n - p) % n;
    let mut acc = 0.0;
    for k in 0..n {
        let theta = 2.0 * PI * k as f64 / n as f64;
        let sym = s - 2.0 * theta.cos();
        if sym.abs() <= POLE_GUARD {
            return Err(Error::SymbolPole { r, a: s, k });
        }
        acc += (theta * shift as f64).cos() / sym;
    }
    Ok(-link_length / (sigma * sigma) * acc / n as f64)
}

/// Dense polynomial with exact rational coefficients, ascending powers.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalPoly(pub Vec<BigRational>);

impl RationalPoly {
    pub fn from_ints(c: &[i64]) -> Self {
        RationalPoly(c.iter().map(|&v| BigRational::from_integer(BigInt::from(v))).collect()).trimmed()
    }

    fn trimmed(mut self) -> Self {
        while self.0.last().is_some_and(|c| c.is_zero()) {
            self.0.pop();
        }
        self
    }

    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return RationalPoly(vec![]);
        }
        let mut out = vec![BigRational::zero(); self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        RationalPoly(out).trimmed()
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.0.len().max(other.0.len());
        let out = (0..n)
            .map(|i| {
                let a = self.0.get(i).cloned().unwrap_or_else(BigRational::zero);
                let b = other.0.get(i).cloned().unwrap_or_else(BigRational::zero);
                a - b
            })
            .collect();
        RationalPoly(out).trimmed()
    }

    /// Quotient and remainder.
    pub fn divrem(&self, divisor: &Self) -> (Self, Self) {
        let dd = divisor.degree().expect("division by the zero polynomial");
        let lead = divisor.0[dd].clone();
        let mut rem = self.0.clone();
        if rem.len() <= dd {
            return (RationalPoly(vec![]), self.clone());
        }
        let mut quot = vec![BigRational::zero(); rem.len() - dd];
        for k in (0..quot.len()).rev() {
            let c = &rem[k + dd] / &lead;
            for (i, d) in divisor.0.iter().enumerate() {
                rem[k + i] -= &c * d;
            }
            quot[k] = c;
        }
        rem.truncate(dd);
        (RationalPoly(quot).trimmed(), RationalPoly(rem).trimmed())
    }

    pub fn derivative(&self) -> Self {
        let out = self
            .0
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c * BigRational::from_integer(BigInt::from(k)))
            .collect();
        RationalPoly(out).trimmed()
    }

    pub fn gcd(&self, other: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let (_, r) = a.divrem(&b);
            a = b;
            b = r;
        }
        let lead = a.0.last().cloned().unwrap_or_else(BigRational::one);
        RationalPoly(a.0.iter().map(|c| c / &lead).collect())
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        self.0
            .iter()
            .rev()
            .fold(BigRational::zero(), |acc, c| acc * x + c)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect()
    }

    /// Newton-form interpolation through `(x_i, y_i)`.
    pub fn interpolate(points: &[(BigRational, BigRational)]) -> Self {
        let n = points.len();
        let xs: Vec<BigRational> = points.iter().map(|p| p.0.clone()).collect();
        let mut coef: Vec<BigRational> = points.iter().map(|p| p.1.clone()).collect();
        for level in 1..n {
            for i in (level..n).rev() {
                coef[i] = (&coef[i] - &coef[i - 1]) / (&xs[i] - &xs[i - level]);
            }
        }
        let mut poly = RationalPoly(vec![coef[n - 1].clone()]);
        for i in (0..n - 1).rev() {
            let lin = RationalPoly(vec![-xs[i].clone(), BigRational::one()]);
            poly = poly.mul(&lin);
            let mut c = poly.0.clone();
            if c.is_empty() {
                c.push(BigRational::zero());
            }
            c[0] += &coef[i];
            poly = RationalPoly(c).trimmed();
        }
        poly
    }

    /// Real roots of the square-free part, polished by Newton's method.
    pub fn distinct_real_roots(&self) -> Vec<f64> {
        let sf = self.divrem(&self.gcd(&self.derivative())).0;
        let c = sf.to_f64();
        let deg = match sf.degree() {
            Some(d) if d >= 1 => d,
            _ => return vec![],
        };
        let lead = c[deg];
        let companion = DMatrix::from_fn(deg, deg, |i, j| {
            if i == 0 {
                -c[deg - 1 - j] / lead
            } else if i == j + 1 {
                1.0
            } else {
                0.0
            }
        });
        let eig = companion.complex_eigenvalues();
        let eval = |x: f64| c.iter().rev().fold(0.0, |acc, &v| acc * x + v);
        let deval = |x: f64| {
            c.iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, &v)| acc * x + k as f64 * v)
        };
        let mut roots: Vec<f64> = eig
            .iter()
            .filter(|z| z.im.abs() < 1e-6 * (1.0 + z.re.abs()))
            .map(|z| {
                let mut x = z.re;
                for _ in 0..50 {
                    let d = deval(x);
                    if d == 0.0 {
                        break;
                    }
                    let step = eval(x) / d;
                    x -= step;
                    if step.abs() < 1e-16 * (1.0 + x.abs()) {
                        break;
                    }
                }
                x
            })
            .collect();
        roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        roots
    }
}

fn rat(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

fn cheb_t_exact(n: usize, x: &BigRational) -> BigRational {
    let (mut t0, mut t1) = (BigRational::one(), x.clone());
    if n == 0 {
        return t0;
    }
    for _ in 1..n {
        let t2 = rat(2) * x * &t1 - &t0;
        t0 = t1;
        t1 = t2;
    }
    t1
}

fn cheb_u_exact(n: i64, x: &BigRational) -> BigRational {
    if n < 0 {
        return BigRational::zero();
    }
    let (mut u0, mut u1) = (BigRational::one(), rat(2) * x);
    if n == 0 {
        return u0;
    }
    for _ in 1..n {
        let u2 = rat(2) * x * &u1 - &u0;
        u0 = u1;
        u1 = u2;
    }
    u1
}

/// Exact `(h¹¹, F₃)` at `L = 1` and rational `a` via the Chebyshev formula.
pub fn exact_h11_f3(r: usize, a: &BigRational) -> (BigRational, BigRational) {
    let x = -a / rat(2);
    let n2 = 2 * r as i64;
    let den = rat(2) * (BigRational::one() - cheb_t_exact(2 * r, &x));
    let entry = |q: i64| -(cheb_u_exact(n2 - q, &x) + cheb_u_exact(q - 2, &x)) / &den;
    let h11 = entry(1);
    let f3 = (1..=n2).map(|q| {
        let e = entry(q);
        &e * &e * &e
    });
    let f3 = f3.fold(BigRational::zero(), |acc, v| acc + v);
    (h11, f3)
}

#[derive(Clone, Debug, Serialize)]
pub struct BadSetReport {
    /// `(a²−4)³ F₃(1, a)/(−L)³`, ascending coefficients.
    pub f3_numerator_r1: Vec<f64>,
    /// `(a⁴−4a²)³ F₃(2, a)/(−L)³`.
    pub f3_numerator_r2: Vec<f64>,
    /// `(a³−2a)² N₁ − N₂`.
    pub difference: Vec<f64>,
    /// `2a²(a−2)³(a+2)(a+1)`.
    pub factorization: Vec<f64>,
    /// Quotient of the difference by the factorization.
    pub quotient: Vec<f64>,
    /// Largest remainder coefficient of that division.
    pub division_residual: f64,
    pub roots: Vec<f64>,
}

/// Recompute the bad set from exact inverse-Hessian sums at r = 1, 2.
pub fn bad_set() -> BadSetReport {
    let numerator = |r: usize, den: &RationalPoly, deg_bound: usize| {
        let pts: Vec<(BigRational, BigRational)> = (0..=deg_bound)
            .map(|i| {
                let a = rat(3 + i as i64);
                let (_, f3) = exact_h11_f3(r, &a);
                let d = den.eval(&a);
                (a, -(f3 * &d * &d * &d))
            })
            .collect();
        RationalPoly::interpolate(&pts)
    };
    let den1 = RationalPoly::from_ints(&[-4, 0, 1]);
    let den2 = RationalPoly::from_ints(&[0, 0, -4, 0, 1]);
    let n1 = numerator(1, &den1, 20);
    let n2 = numerator(2, &den2, 20);
    let c = RationalPoly::from_ints(&[0, -2, 0, 1]);
    let diff = c.mul(&c).mul(&n1).sub(&n2);
    let factor = RationalPoly::from_ints(&[2])
        .mul(&RationalPoly::from_ints(&[0, 0, 1]))
        .mul(&RationalPoly::from_ints(&[-8, 12, -6, 1]))
        .mul(&RationalPoly::from_ints(&[2, 1]))
        .mul(&RationalPoly::from_ints(&[1, 1]));
    let (quot, rem) = diff.divrem(&factor);
    let residual = rem
        .to_f64()
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max);
    BadSetReport {
        f3_numerator_r1: n1.to_f64(),
        f3_numerator_r2: n2.to_f64(),
        difference: diff.to_f64(),
        factorization: factor.to_f64(),
        quotient: quot.to_f64(),
        division_residual: residual,
        roots: diff.distinct_real_roots(),
    }
}
