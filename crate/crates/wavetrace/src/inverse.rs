//! Recovery of the boundary Taylor data at the distinguished orbit from an
//! invariant table and the Floquet parameter.
//!
//! Step `j` reads only the table column `j`. In the up-down class it solves
//! the two-row system
//!
//! ```text
//! B_{r,j} / (scale_r (h¹¹_r)^{j−2}) = X (h¹¹_r)² + Y F₃(r)
//! ```
//!
//! for `X` and `Y`, then unpacks `f^{(2j−1)}(0)` from `Y` and `f^{(2j)}(0)`
//! from `X`. Ellipse and dihedral tables carry a single graph per entry, so
//! no decoupling is needed.
//!
//! Recovered derivatives use the chart convention of [`crate::domain`]:
//! `f″(0) = −(1 + a/2)/L` for the top arc of a bouncing ball.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::domain::{BoundaryArc, DomainKind, DomainSpec, SymmetryClass};
use crate::error::{Error, Result};
use crate::hessian::{cubic_sum, decoupling_pair, dihedral_inverse_entry, h11, CirculantHessian};
use crate::invariants::{
    dihedral_scale, invariant_full, invariant_top, symmetric_scale,
    top_weights, InvariantTable, Normalization,
};

/// `(1 − cos(α/2))/L` with `cos(α/2) = −a/2`: the curvature of the top arc,
/// positive for convex arcs. The chart second derivative is its negative.
pub fn recover_f2(a: f64, l: f64) -> f64 {
    (1.0 + a / 2.0) / l
}

/// How the up-down step picks its iterates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decoupling {
    /// The pair with the largest decoupling determinant.
    BestPair,
    /// A fixed pair of iterates.
    Pair(usize, usize),
    /// All iterates of the table, rows scaled to unit length.
    LeastSquares,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecoveryOptions {
    /// Relative threshold on the decoupling determinant (in units of `L⁵`).
    pub det_tol: f64,
    /// Threshold on `|f‴(0)|·L²` below which the cubic counts as vanishing.
    pub cubic_tol: f64,
    pub decoupling: Decoupling,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        RecoveryOptions {
            det_tol: 1e-8,
            cubic_tol: 1e-6,
            decoupling: Decoupling::BestPair,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Obstruction {
    pub name: &'static str,
    pub order: usize,
    pub detail: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StepResidual {
    pub j: usize,
    /// Largest `|Im|/|·|` of the normalized entries.
    pub imaginary: f64,
    /// Relative misfit of the entries not used by (or fitted in) the solve.
    pub fit: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecoveryResult {
    #[serde(rename = "L")]
    pub l: f64,
    pub class: SymmetryClass,
    /// Determined derivatives `k ↦ f^{(k)}(0)`, `k ≥ 2`.
    pub taylor: BTreeMap<usize, f64>,
    pub residuals: Vec<StepResidual>,
    pub obstructions: Vec<Obstruction>,
}

impl RecoveryResult {
    fn new(l: f64, class: SymmetryClass) -> Self {
        RecoveryResult {
            l,
            class,
            taylor: BTreeMap::new(),
            residuals: Vec::new(),
            obstructions: Vec::new(),
        }
    }

    pub fn derivative(&self, k: usize) -> Option<f64> {
        self.taylor.get(&k).copied()
    }

    /// The first obstruction as an error.
    pub fn check(&self) -> Result<()> {
        match self.obstructions.first() {
            None => Ok(()),
            Some(o) if o.name == "vanishing-cubic" => Err(Error::VanishingCubic {
                value: self.derivative(3).unwrap_or(0.0),
            }),
            Some(o) => Err(Error::Invalid(format!("{}: {}", o.name, o.detail))),
        }
    }

    /// Arc with the recovered data; undetermined derivatives are set to zero.
    pub fn arc(&self, c0: f64) -> BoundaryArc {
        let k_max = self.taylor.keys().max().copied().unwrap_or(2);
        let mut arc = BoundaryArc::new(vec![0.0; k_max + 1]);
        arc.taylor[0] = c0;
        for (&k, &v) in &self.taylor {
            arc.set_derivative(k, v);
        }
        arc
    }

    /// The recovered domain, when the class has a single free arc.
    pub fn spec(&self, m: Option<usize>) -> Result<DomainSpec> {
        match (self.class, m) {
            (SymmetryClass::UpDown | SymmetryClass::Ellipse, _) => Ok(DomainSpec {
                l: self.l,
                kind: DomainKind::UpDownSymmetric { f: self.arc(self.l / 2.0) },
            }),
            (SymmetryClass::Dihedral, Some(m)) => Ok(DomainSpec {
                l: self.l,
                kind: DomainKind::Dihedral {
                    m,
                    f: self.arc(crate::domain::dihedral_radius(m, self.l)),
                },
            }),
            _ => Err(Error::Invalid(format!("no single-arc spec for class {}", self.class))),
        }
    }
}

fn check_order(table: &InvariantTable, j_max: usize) -> Result<()> {
    if j_max == 0 {
        return Err(Error::Invalid("recovery order J starts at 1".into()));
    }
    for j in 1..=j_max {
        table.get(1, j)?;
    }
    Ok(())
}

/// Sub-top part of `B_{r,j}` evaluated on the data recovered so far.
fn remainder(partial: &DomainSpec, r: usize, j: usize) -> Result<Complex64> {
    Ok(invariant_full(partial, r, j)? - invariant_top(partial, r, j)?)
}

fn partial_spec(result: &RecoveryResult, m: Option<usize>, order: usize) -> Result<DomainSpec> {
    let mut spec = result.spec(m)?;
    match &mut spec.kind {
        DomainKind::UpDownSymmetric { f } | DomainKind::Dihedral { f, .. } => {
            if f.taylor.len() <= order {
                f.taylor.resize(order + 1, 0.0);
            }
        }
        DomainKind::TwoArc { .. } => unreachable!("single-arc spec"),
    }
    Ok(spec)
}

/// Table entry with the remainder removed, for every iterate in `rs`.
fn corrected(
    table: &InvariantTable,
    result: &RecoveryResult,
    m: Option<usize>,
    rs: &[usize],
    j: usize,
) -> Result<Vec<Complex64>> {
    let full = table.normalization == Normalization::FullPrincipal;
    let partial = if full {
        Some(partial_spec(result, m, 2 * j + 2)?)
    } else {
        None
    };
    rs.iter()
        .map(|&r| {
            let b = table.get(r, j)?;
            match &partial {
                Some(p) => Ok(b - remainder(p, r, j)?),
                None => Ok(b),
            }
        })
        .collect()
}

fn imaginary_ratio(z: Complex64) -> f64 {
    if z.norm() == 0.0 {
        0.0
    } else {
        z.im.abs() / z.norm()
    }
}

/// Solve `X·u_i + Y·v_i = b_i` over the selected rows; returns `(X, Y, misfit)`.
fn decouple(rows: &[(usize, f64, f64, f64)], decoupling: Decoupling, pair: (usize, usize)) -> Result<(f64, f64, f64)> {
    let pick = |r: usize| {
        rows.iter()
            .find(|row| row.0 == r)
            .copied()
            .ok_or_else(|| Error::Invalid(format!("iterate {r} is unavailable for decoupling")))
    };
    let (x, y) = match decoupling {
        Decoupling::LeastSquares => {
            let n = rows.len();
            let mut m = DMatrix::zeros(n, 2);
            let mut rhs = DVector::zeros(n);
            for (i, &(_, u, v, b)) in rows.iter().enumerate() {
                let w = 1.0 / (u * u + v * v).sqrt();
                m[(i, 0)] = u * w;
                m[(i, 1)] = v * w;
                rhs[i] = b * w;
            }
            let sol = m
                .svd(true, true)
                .solve(&rhs, 1e-14)
                .map_err(|e| Error::Invalid(format!("least squares: {e}")))?;
            (sol[0], sol[1])
        }
        _ => {
            let (_, u1, v1, b1) = pick(pair.0)?;
            let (_, u2, v2, b2) = pick(pair.1)?;
            let det = u1 * v2 - v1 * u2;
            ((b1 * v2 - v1 * b2) / det, (u1 * b2 - b1 * u2) / det)
        }
    };
    let scale = rows.iter().map(|r| r.3.abs()).fold(0.0, f64::max);
    let misfit = rows
        .iter()
        .map(|&(_, u, v, b)| (x * u + y * v - b).abs())
        .fold(0.0, f64::max)
        / scale.max(f64::MIN_POSITIVE);
    Ok((x, y, misfit))
}

/// Top-arc data of an up-down symmetric domain through order `2J`.
pub fn recover_symmetric(table: &InvariantTable, l: f64, a: f64, j_max: usize) -> Result<RecoveryResult> {
    recover_symmetric_with(table, l, a, j_max, &RecoveryOptions::default())
}

pub fn recover_symmetric_with(
    table: &InvariantTable,
    l: f64,
    a: f64,
    j_max: usize,
    opts: &RecoveryOptions,
) -> Result<RecoveryResult> {
    check_order(table, j_max)?;
    let mut result = RecoveryResult::new(l, SymmetryClass::UpDown);
    result.taylor.insert(2, -recover_f2(a, l));
    base_residual(table, &mut result, None)?;
    if j_max == 1 {
        return Ok(result);
    }
    let system = DecouplingSystem::new(table.r_max(), l, a, opts)?;
    let mut f3 = 0.0;
    let mut odd_known = true;
    for j in 2..=j_max {
        let values = corrected(table, &result, None, &system.iterates, j)?;
        let d = system.solve(j, &values)?;
        result.residuals.push(StepResidual { j, imaginary: d.imaginary, fit: d.fit });
        let (w1, w2, w3) = top_weights(j);
        if j == 2 {
            let sq = d.y / (4.0 * w3);
            let value = sq.abs().sqrt();
            if value * l * l < opts.cubic_tol {
                result.obstructions.push(Obstruction {
                    name: "vanishing-cubic",
                    order: 3,
                    detail: format!(
                        "|f'''(0)| = {value:e}; higher odd data are undetermined (the quintic-sum extension is not implemented)"
                    ),
                });
                odd_known = false;
            } else if sq < 0.0 {
                result.obstructions.push(Obstruction {
                    name: "inconsistent-table",
                    order: 3,
                    detail: format!("decoupled f'''(0)^2 = {sq:e} is negative"),
                });
            }
            f3 = if odd_known { value } else { 0.0 };
            result.taylor.insert(3, f3);
            let f4 = -(d.x + 4.0 * w2 * l / (a + 2.0) * sq) / (2.0 * w1);
            result.taylor.insert(4, f4);
        } else {
            let f_odd = if odd_known { d.y / (4.0 * w3 * f3) } else { 0.0 };
            if odd_known {
                result.taylor.insert(2 * j - 1, f_odd);
            }
            let f_even = -(d.x + 4.0 * w2 * l / (a + 2.0) * f3 * f_odd) / (2.0 * w1);
            result.taylor.insert(2 * j, f_even);
        }
    }
    Ok(result)
}

/// Solution of one decoupling step: `X = −2w₁f^{(2j)} − (4w₂L/(a+2)) f‴f^{(2j−1)}`,
/// `Y = 4w₃ f‴f^{(2j−1)}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Decoupled {
    pub x: f64,
    pub y: f64,
    pub imaginary: f64,
    pub fit: f64,
}

struct DecouplingSystem {
    l: f64,
    iterates: Vec<usize>,
    /// `(h¹¹, F₃)` per usable iterate.
    rows: Vec<(f64, f64)>,
    pair: (usize, usize),
    decoupling: Decoupling,
}

impl DecouplingSystem {
    fn new(r_max: usize, l: f64, a: f64, opts: &RecoveryOptions) -> Result<Self> {
        if r_max < 2 {
            return Err(Error::Invalid("up-down recovery needs at least two iterates".into()));
        }
        let best = decoupling_pair(a, r_max, l, opts.det_tol)?;
        let pair = match opts.decoupling {
            Decoupling::Pair(r, s) => (r, s),
            _ => (best.r, best.s),
        };
        let mut iterates = Vec::new();
        let mut rows = Vec::new();
        for r in 1..=r_max {
            let Ok(d) = h11(r, l, a) else { continue };
            let Ok(f3) = cubic_sum(&CirculantHessian::symmetric(r, l, a)) else { continue };
            iterates.push(r);
            rows.push((d, f3));
        }
        Ok(DecouplingSystem { l, iterates, rows, pair, decoupling: opts.decoupling })
    }

    fn solve(&self, j: usize, values: &[Complex64]) -> Result<Decoupled> {
        let mut imaginary: f64 = 0.0;
        let mut rows = Vec::with_capacity(self.rows.len());
        for ((&r, &(d, f3)), &b) in self.iterates.iter().zip(&self.rows).zip(values) {
            let z = b / (symmetric_scale(r, j, self.l) * d.powi(j as i32 - 2));
            imaginary = imaginary.max(imaginary_ratio(z));
            rows.push((r, d * d, f3, z.re));
        }
        let (x, y, fit) = decouple(&rows, self.decoupling, self.pair)?;
        Ok(Decoupled { x, y, imaginary, fit })
    }
}

/// `(X, Y)` of order `j ≥ 2` from a top-only table (or one whose remainders
/// have been removed).
pub fn decouple_order(
    table: &InvariantTable,
    j: usize,
    l: f64,
    a: f64,
    opts: &RecoveryOptions,
) -> Result<Decoupled> {
    if j < 2 {
        return Err(Error::Invalid("decoupling starts at j = 2".into()));
    }
    let system = DecouplingSystem::new(table.r_max(), l, a, opts)?;
    let values = system
        .iterates
        .iter()
        .map(|&r| table.get(r, j))
        .collect::<Result<Vec<_>>>()?;
    system.solve(j, &values)
}

/// Relative disagreement between the `j = 1` column and the `a`-derived `f″`.
fn base_residual(table: &InvariantTable, result: &mut RecoveryResult, m: Option<usize>) -> Result<()> {
    let partial = partial_spec(result, m, 4)?;
    let mut imaginary: f64 = 0.0;
    let mut fit: f64 = 0.0;
    for r in 1..=table.r_max() {
        let Ok(b) = table.get(r, 1) else { continue };
        let model = match table.normalization {
            Normalization::TopOnly => invariant_top(&partial, r, 1),
            Normalization::FullPrincipal => invariant_full(&partial, r, 1),
        };
        let Ok(model) = model else { continue };
        if model.norm() == 0.0 {
            continue;
        }
        imaginary = imaginary.max(imaginary_ratio(b / model));
        fit = fit.max((b - model).norm() / model.norm().max(f64::MIN_POSITIVE));
    }
    result.residuals.push(StepResidual { j: 1, imaginary, fit });
    Ok(())
}

/// Even data of an ellipse-symmetric domain; odd data vanish by symmetry.
pub fn recover_two_symmetry(table: &InvariantTable, l: f64, a: f64, j_max: usize) -> Result<RecoveryResult> {
    check_order(table, j_max)?;
    let mut result = RecoveryResult::new(l, SymmetryClass::Ellipse);
    result.taylor.insert(2, -recover_f2(a, l));
    base_residual(table, &mut result, None)?;
    let rows_r: Vec<(usize, f64)> = (1..=table.r_max())
        .filter_map(|r| h11(r, l, a).ok().map(|d| (r, d)))
        .filter(|&(_, d)| d.is_finite() && d.abs() > 1e-10 * l)
        .collect();
    if rows_r.is_empty() {
        return Err(Error::HessianPole { a });
    }
    for j in 2..=j_max {
        result.taylor.insert(2 * j - 1, 0.0);
        let rs: Vec<usize> = rows_r.iter().map(|p| p.0).collect();
        let values = corrected(table, &result, None, &rs, j)?;
        let (w1, _, _) = top_weights(j);
        let estimates: Vec<(f64, f64)> = rows_r
            .iter()
            .zip(&values)
            .map(|(&(r, d), &b)| {
                let z = b / (symmetric_scale(r, j, l) * d.powi(j as i32) * (-2.0 * w1));
                (z.re, imaginary_ratio(z))
            })
            .collect();
        single_graph_step(&mut result, j, &estimates);
    }
    Ok(result)
}

/// Average the per-iterate estimates of `f^{(2j)}(0)` and record their spread.
fn single_graph_step(result: &mut RecoveryResult, j: usize, estimates: &[(f64, f64)]) {
    let mean = estimates.iter().map(|e| e.0).sum::<f64>() / estimates.len() as f64;
    let fit = estimates
        .iter()
        .map(|e| (e.0 - mean).abs())
        .fold(0.0, f64::max)
        / mean.abs().max(f64::MIN_POSITIVE);
    let imaginary = estimates.iter().map(|e| e.1).fold(0.0, f64::max);
    result.residuals.push(StepResidual { j, imaginary, fit });
    result.taylor.insert(2 * j, mean);
}

/// Even data of a dihedral domain with `m` arcs; `s` is the circulant
/// parameter `−2(1 + ℓf″/sin(π/m))` recorded as the table's `a`.
pub fn recover_dihedral(table: &InvariantTable, m: usize, l: f64, s: f64, j_max: usize) -> Result<RecoveryResult> {
    if m < 2 {
        return Err(Error::Spec(format!("m must be at least 2, got {m}")));
    }
    check_order(table, j_max)?;
    let link = 2.0 * l / m as f64;
    let sigma = (PI / m as f64).sin();
    let mut result = RecoveryResult::new(l, SymmetryClass::Dihedral);
    result.taylor.insert(2, -(1.0 + s / 2.0) * sigma / link);
    base_residual(table, &mut result, Some(m))?;
    let rows_r: Vec<(usize, f64)> = (1..=table.r_max())
        .filter_map(|r| dihedral_inverse_entry(m, r, s, link, 1, 1).ok().map(|d| (r, d)))
        .filter(|&(_, d)| d.is_finite() && d.abs() > 1e-10 * l)
        .collect();
    if rows_r.is_empty() {
        return Err(Error::HessianPole { a: s });
    }
    for j in 2..=j_max {
        result.taylor.insert(2 * j - 1, 0.0);
        let rs: Vec<usize> = rows_r.iter().map(|p| p.0).collect();
        let values = corrected(table, &result, Some(m), &rs, j)?;
        let estimates: Vec<(f64, f64)> = rows_r
            .iter()
            .zip(&values)
            .map(|(&(r, d), &b)| {
                let z = b / (dihedral_scale(m, r, j, l) * (m * r) as f64 * d.powi(j as i32));
                (z.re, imaginary_ratio(z))
            })
            .collect();
        single_graph_step(&mut result, j, &estimates);
    }
    Ok(result)
}

/// Dispatch on the table's class. Two-arc tables have no inverse.
pub fn recover(table: &InvariantTable, j_max: usize) -> Result<RecoveryResult> {
    let a = table
        .a
        .ok_or_else(|| Error::Invalid("table carries no real Floquet parameter".into()))?;
    match table.class {
        SymmetryClass::UpDown => recover_symmetric(table, table.l, a, j_max),
        SymmetryClass::Ellipse => recover_two_symmetry(table, table.l, a, j_max),
        SymmetryClass::Dihedral => {
            let m = table
                .m
                .ok_or_else(|| Error::Invalid("dihedral table without m".into()))?;
            recover_dihedral(table, m, table.l, a, j_max)
        }
        SymmetryClass::TwoArc => Err(Error::Invalid(
            "two-arc tables do not determine the boundary".into(),
        )),
    }
}
