//! Principal terms of the wave trace at iterates of the distinguished orbit
//! and the wave invariants they produce.
//!
//! The principal term of the `r`-th iterate is the oscillatory integral
//! `∫ e^{ik𝓛(x)} a(k, x) dx` over the `N` vertex coordinates, with `𝓛` the
//! length functional and
//!
//! ```text
//! a = 𝓛·A + (1/i)∂_k A,   A = Π_p κ ℓ_p^{-1/2} (a₁(kℓ_p)/c₀) cos_p,
//! ```
//!
//! where `ℓ_p` is the length of link `p`, `cos_p` the cosine between link `p`
//! and the (unnormalized) normal at its first vertex, fixed positive at the
//! orbit, `a₁` the Hankel amplitude and `κ = 2·c₀e^{3πi/4}·(−i/4)`.
//! Expanding `a = Σ_M a_M k^{-M}`, the table entry `(r, j)` is
//!
//! ```text
//! B_{r,j} = 2 (Π_p ℓ_p)^{1/2} Σ_{M<j} P_{j−1−M}(a_M),
//! ```
//!
//! the coefficient of `k^{1−j}` after removing the universal stationary-phase
//! prefactor; the factor 2 counts both orientations of the orbit. `B_{r,j}` is
//! the first coefficient that sees `f^{(2j)}(0)` and `f^{(2j−1)}(0)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::billiard::{chart_jet, length_jet, orbit_word, Boundary, Chart};
use crate::domain::{floquet, DomainKind, DomainSpec, SymmetryClass};
use crate::error::{Error, Result};
use crate::feynman::{
    adaptive_gk, automorphism_order, graph_contributions, graphs_of_order,
    sp_coefficient_diagrams, FeynmanGraph, SPProblem,
};
use crate::hessian::{dihedral_inverse_entry, inverse_dense, CirculantHessian};
use crate::jets::{ComplexJet, RealJet};

/// Leading Hankel constant `√(2/π)`.
pub const C0: f64 = 0.797_884_560_802_865_4;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn i_pow(k: i64) -> Complex64 {
    match k.rem_euclid(4) {
        0 => c(1.0, 0.0),
        1 => c(0.0, 1.0),
        2 => c(-1.0, 0.0),
        _ => c(0.0, -1.0),
    }
}

/// `a₁(t) = (c₀/Γ(3/2)) ∫₀^∞ e^{-s} s^{1/2} (1 − s/(2it))^{1/2} ds`, so that
/// `H₁⁽¹⁾(t) = e^{i(t − 3π/4)} t^{-1/2} a₁(t)`.
pub fn hankel_a1(t: f64) -> Result<Complex64> {
    if !(t > 0.0) {
        return Err(Error::Invalid(format!("Hankel amplitude needs t > 0, got {t}")));
    }
    // s = u²
    let mut f = |u: f64| {
        let s = u * u;
        let w = (c(1.0, 0.0) + c(0.0, s / (2.0 * t))).sqrt();
        w * (2.0 * s * (-s).exp())
    };
    let r = adaptive_gk(&mut f, 0.0, 12.0, 16, 1e-15, 1 << 14)?;
    if r.error > 1e-12 {
        return Err(Error::Quadrature(format!("Hankel amplitude error {:e}", r.error)));
    }
    let gamma_3_2 = PI.sqrt() / 2.0;
    Ok(r.value * (C0 / gamma_3_2))
}

/// `β_m` in `a₁(t)/c₀ ~ Σ_m β_m t^{-m}`.
pub fn hankel_beta(m: usize) -> Complex64 {
    let mut binom = 1.0;
    let mut rising = 1.0;
    for i in 0..m {
        binom *= (0.5 - i as f64) / (i + 1) as f64;
        rising *= i as f64 + 1.5;
    }
    c(0.0, 0.5).powi(m as i32) * (binom * rising)
}

/// `H₁⁽¹⁾(t)` through the Hankel amplitude.
pub fn hankel_h1(t: f64) -> Result<Complex64> {
    Ok(Complex64::from_polar(t.powf(-0.5), t - 0.75 * PI) * hankel_a1(t)?)
}

/// Per-link constant `κ = 2·c₀e^{3πi/4}·(−i/4)`.
pub fn link_constant() -> Complex64 {
    Complex64::from_polar(C0, 0.75 * PI) * c(0.0, -0.25) * 2.0
}

/// Which boundary arc a datum belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArcSel {
    Plus,
    Minus,
}

/// `f^{(k)}(0)` of the selected arc; `Minus` of an up-down or dihedral spec
/// refers to its single arc through the symmetry.
pub fn datum(spec: &DomainSpec, arc: ArcSel, k: usize) -> f64 {
    match (&spec.kind, arc) {
        (DomainKind::TwoArc { f_minus, .. }, ArcSel::Minus) => f_minus.derivative(k),
        (DomainKind::UpDownSymmetric { f }, ArcSel::Minus) => -f.derivative(k),
        _ => spec.primary_arc().derivative(k),
    }
}

/// The spec with `f^{(k)}(0)` of the selected arc shifted by `delta`.
pub fn perturb(spec: &DomainSpec, arc: ArcSel, k: usize, delta: f64) -> DomainSpec {
    let mut out = spec.clone();
    match (&mut out.kind, arc) {
        (DomainKind::TwoArc { f_minus, .. }, ArcSel::Minus) => {
            let v = f_minus.derivative(k);
            f_minus.set_derivative(k, v + delta);
        }
        (DomainKind::UpDownSymmetric { f }, ArcSel::Minus) => {
            let v = f.derivative(k);
            f.set_derivative(k, v - delta);
        }
        _ => {
            let f = out.primary_arc_mut();
            let v = f.derivative(k);
            f.set_derivative(k, v + delta);
        }
    }
    out
}

/// Phase and amplitude of the principal term at one iterate.
#[derive(Clone, Debug)]
pub struct PrincipalTerm {
    pub r: usize,
    pub charts: Vec<usize>,
    /// Jet of `𝓛` at the orbit.
    pub phase: RealJet,
    /// `A_M`, the `k^{-M}` coefficients of `A`.
    pub envelope: Vec<ComplexJet>,
    /// `a_M`, the `k^{-M}` coefficients of `a`.
    pub amplitudes: Vec<ComplexJet>,
    /// `κ^N Π_p cos_p(0)`; `𝒜_r(0)` for the bouncing ball.
    pub prefactor: Complex64,
    pub link_lengths: Vec<f64>,
    pub length: f64,
}

impl PrincipalTerm {
    pub fn nvars(&self) -> usize {
        self.charts.len()
    }

    /// `(Π_p ℓ_p)^{1/2}`.
    pub fn length_scale(&self) -> f64 {
        self.link_lengths.iter().product::<f64>().sqrt()
    }

    pub fn problem(&self, m: usize) -> Result<SPProblem> {
        let a = self.amplitudes.get(m).ok_or(Error::InsufficientJets {
            need: m,
            have: self.amplitudes.len().saturating_sub(1),
        })?;
        SPProblem::new(&self.phase, a.clone())
    }
}

fn velocity_jet(chart: &Chart, degree: usize) -> (RealJet, RealJet) {
    let t = &chart.arc.taylor;
    let mut d: Vec<f64> = (1..t.len()).map(|k| k as f64 * t[k]).collect();
    if d.is_empty() {
        d.push(0.0);
    }
    let fp = RealJet::from_univariate(1, degree, 0, &d);
    let one = RealJet::constant(1, degree, 1.0);
    let (s, co) = chart.angle.sin_cos();
    (&one.scale(co) - &fp.scale(s), &one.scale(s) + &fp.scale(co))
}

/// Jets of `(ℓ, cos)` of the link from `a` (variable 0) to `b` (variable 1).
fn link_jets(a: &Chart, b: &Chart, degree: usize) -> Result<(RealJet, RealJet)> {
    let (ax, ay) = chart_jet(a, 0.0, degree);
    let (bx, by) = chart_jet(b, 0.0, degree);
    let (vx, vy) = velocity_jet(a, degree);
    let first = |j: &RealJet| j.embed(2, &[0]);
    let second = |j: &RealJet| j.embed(2, &[1]);
    let dx = &second(&bx) - &first(&ax);
    let dy = &second(&by) - &first(&ay);
    let len = (&(&dx * &dx) + &(&dy * &dy)).sqrt()?;
    let num = &(&first(&vx) * &dy) - &(&first(&vy) * &dx);
    let cos = &num * &len.recip()?;
    Ok((len, cos))
}

/// Principal term of the `r`-th iterate with phase jets of degree `order`
/// (amplitudes of degree `order − 2`) and `k`-orders `M ≤ (order − 2)/2`.
pub fn build_principal(spec: &DomainSpec, r: usize, order: usize) -> Result<PrincipalTerm> {
    build_principal_word(spec, &orbit_word(spec, r), r, order)
}

/// As [`build_principal`] for an explicit chart word; the bouncing ball also
/// admits the word starting on the bottom arc.
pub fn build_principal_word(
    spec: &DomainSpec,
    charts: &[usize],
    r: usize,
    order: usize,
) -> Result<PrincipalTerm> {
    if order < 2 {
        return Err(Error::InsufficientJets { need: 2, have: order });
    }
    if spec.order() < order {
        return Err(Error::InsufficientJets {
            need: order,
            have: spec.order(),
        });
    }
    let boundary = Boundary::from_spec(spec)?;
    let n = charts.len();
    let phase = length_jet(&boundary, charts, &vec![0.0; n], order)?;
    let deg = order - 2;
    let m_max = deg / 2;
    let kappa = link_constant();
    let mut envelope = vec![ComplexJet::zero(n, deg); m_max + 1];
    envelope[0] = ComplexJet::constant(n, deg, c(1.0, 0.0));
    let mut prefactor = c(1.0, 0.0);
    let mut link_lengths = Vec::with_capacity(n);
    for p in 0..n {
        let q = (p + 1) % n;
        let (len, cos) = link_jets(&boundary.charts[charts[p]], &boundary.charts[charts[q]], deg)?;
        let ell = len.constant_term();
        let cos0 = cos.constant_term();
        let cos = cos.scale(cos0.signum());
        link_lengths.push(ell);
        prefactor *= kappa * cos0.abs();
        let mut link = Vec::with_capacity(m_max + 1);
        for m in 0..=m_max {
            let jet = &cos * &len.powf(-0.5 - m as f64)?;
            link.push(jet.to_complex().scale(kappa * hankel_beta(m)).embed(n, &[p, q]));
        }
        let mut next = vec![ComplexJet::zero(n, deg); m_max + 1];
        for (mm, slot) in next.iter_mut().enumerate() {
            for m in 0..=mm {
                *slot = slot.try_add(&envelope[mm - m].try_mul(&link[m])?)?;
            }
        }
        envelope = next;
    }
    let lc = phase.resize(deg).to_complex();
    let mut amplitudes = Vec::with_capacity(m_max + 1);
    for m in 0..=m_max {
        let mut a = lc.try_mul(&envelope[m])?;
        if m >= 1 {
            a = a.try_add(&envelope[m - 1].scale(c(0.0, (m - 1) as f64)))?;
        }
        amplitudes.push(a);
    }
    Ok(PrincipalTerm {
        r,
        charts: charts.to_vec(),
        length: phase.constant_term(),
        phase,
        envelope,
        amplitudes,
        prefactor,
        link_lengths,
    })
}

/// `B_{r,j}` from the full principal term, by the diagram expansion.
pub fn invariant_full(spec: &DomainSpec, r: usize, j: usize) -> Result<Complex64> {
    if j == 0 {
        return Err(Error::Invalid("invariant order j starts at 1".into()));
    }
    let pt = build_principal(spec, r, 2 * j + 2)?;
    full_from_principal(&pt, j)
}

fn full_from_principal(pt: &PrincipalTerm, j: usize) -> Result<Complex64> {
    let mut total = c(0.0, 0.0);
    for m in 0..j {
        total += sp_coefficient_diagrams(&pt.problem(m)?, j - 1 - m)?;
    }
    Ok(total * (2.0 * pt.length_scale()))
}

/// The three graphs carrying the top data of `B_{r,j}`: the flower with `j`
/// loops, and for `j ≥ 2` the dumbbell (`j − 1` loops and one loop joined by
/// an edge) and the theta (`j − 2` loops, three edges).
pub fn top_graphs(j: usize) -> (FeynmanGraph, Option<FeynmanGraph>, Option<FeynmanGraph>) {
    let flower = FeynmanGraph { adj: vec![vec![0, 0], vec![0, j]] };
    if j < 2 {
        return (flower, None, None);
    }
    let dumbbell = FeynmanGraph {
        adj: vec![vec![0, 0, 0], vec![0, j - 1, 1], vec![0, 1, 1]],
    };
    let theta = FeynmanGraph {
        adj: vec![vec![0, 0, 0], vec![0, j - 2, 3], vec![0, 3, 0]],
    };
    (flower, Some(dumbbell), Some(theta))
}

/// `(w₁, w₂, w₃)`, reciprocal automorphism orders of the top graphs.
pub fn top_weights(j: usize) -> (f64, f64, f64) {
    let (f, d, t) = top_graphs(j);
    let w = |g: Option<FeynmanGraph>| g.map_or(0.0, |g| 1.0 / automorphism_order(&g) as f64);
    (1.0 / automorphism_order(&f) as f64, w(d), w(t))
}

/// `𝒜_r(0) = κ^{2r}`.
pub fn bouncing_prefactor(r: usize) -> Complex64 {
    link_constant().powi(2 * r as i32)
}

fn bouncing_hessian(spec: &DomainSpec, r: usize) -> Result<CirculantHessian> {
    let (fp, fm) = spec.arcs()?;
    Ok(CirculantHessian {
        r,
        l: spec.l,
        a: -2.0 * (1.0 + spec.l * fp.derivative(2)),
        b: -2.0 * (1.0 - spec.l * fm.derivative(2)),
    })
}

/// Closed-form top-derivative part of `B_{r,j}` with the remainder set to
/// zero: bouncing-ball specs use the two-arc formula, dihedral specs
/// [`invariant_dihedral`].
pub fn invariant_top(spec: &DomainSpec, r: usize, j: usize) -> Result<Complex64> {
    if j == 0 {
        return Err(Error::Invalid("invariant order j starts at 1".into()));
    }
    if matches!(spec.kind, DomainKind::Dihedral { .. }) {
        return invariant_dihedral(spec, r, j);
    }
    let h = bouncing_hessian(spec, r)?;
    let hinv = inverse_dense(&h)?;
    let n = 2 * r;
    let (fp, fm) = spec.arcs()?;
    let w = |p: usize| if p % 2 == 0 { 1.0 } else { -1.0 };
    let d = |p: usize, k: usize| if p % 2 == 0 { fp.derivative(k) } else { fm.derivative(k) };
    let (w1, w2, w3) = top_weights(j);
    let ji = j as i32;
    let even: f64 = (0..n)
        .map(|p| hinv[(p, p)].powi(ji) * w(p) * d(p, 2 * j))
        .sum::<f64>()
        * (-2.0 * w1);
    let mut odd = 0.0;
    if j >= 2 {
        for p in 0..n {
            for q in 0..n {
                let (hpp, hqq, hpq) = (hinv[(p, p)], hinv[(q, q)], hinv[(p, q)]);
                let g = w2 * hpp.powi(ji - 1) * hqq * hpq + w3 * hpp.powi(ji - 2) * hpq.powi(3);
                odd += g * w(p) * w(q) * d(p, 2 * j - 1) * d(q, 3);
            }
        }
        odd *= 4.0;
    }
    Ok(bouncing_prefactor(r) * i_pow(j as i64 - 1) * (4.0 * r as f64 * spec.l) * (even + odd))
}

/// The up-down symmetric closed form through `h¹¹`, the row sum
/// `−L/(a + 2)` and `F₃ = Σ_q (h^{1q})³`.
pub fn invariant_top_symmetric(spec: &DomainSpec, r: usize, j: usize) -> Result<Complex64> {
    let DomainKind::UpDownSymmetric { f } = &spec.kind else {
        return Err(Error::Spec("up-down symmetric spec required".into()));
    };
    let l = spec.l;
    let a = -2.0 * (1.0 + l * f.derivative(2));
    let (x, y) = symmetric_coefficients(f.derivative(2 * j), f.derivative(2 * j - 1), f.derivative(3), j, l, a);
    let h = CirculantHessian::symmetric(r, l, a);
    let h11 = crate::hessian::h11(r, l, a)?;
    let f3 = if j >= 2 { crate::hessian::cubic_sum(&h)? } else { 0.0 };
    let core = if j >= 2 {
        x * h11.powi(j as i32) + y * h11.powi(j as i32 - 2) * f3
    } else {
        x * h11
    };
    Ok(symmetric_scale(r, j, l) * core)
}

/// `4rL·𝒜_r(0)·i^{j−1}·2r`, the common factor of the symmetric closed form.
pub fn symmetric_scale(r: usize, j: usize, l: f64) -> Complex64 {
    bouncing_prefactor(r) * i_pow(j as i64 - 1) * (8.0 * (r * r) as f64 * l)
}

/// `(X, Y)` with `B_{r,j} = symmetric_scale·(h¹¹)^{j−2}·(X (h¹¹)² + Y F₃)`.
pub fn symmetric_coefficients(f2j: f64, f2j1: f64, f3: f64, j: usize, l: f64, a: f64) -> (f64, f64) {
    let (w1, w2, w3) = top_weights(j);
    let x = -2.0 * w1 * f2j - 4.0 * w2 * l / (a + 2.0) * f3 * f2j1;
    let y = 4.0 * w3 * f3 * f2j1;
    (x, y)
}

/// `h¹¹` of the dihedral Hessian at the `r`-th iterate.
pub fn dihedral_h11(spec: &DomainSpec, r: usize) -> Result<f64> {
    let DomainKind::Dihedral { m, f } = &spec.kind else {
        return Err(Error::Spec("dihedral spec required".into()));
    };
    let link = spec.link_length();
    let sigma = (PI / *m as f64).sin();
    let s = -2.0 * (1.0 + link * f.derivative(2) / sigma);
    dihedral_inverse_entry(*m, r, s, link, 1, 1)
}

/// `−4σ·T·κ^N σ^N·w₁·i^{j−1}`, the factor multiplying `mr (h¹¹)^j f^{(2j)}(0)`.
pub fn dihedral_scale(m: usize, r: usize, j: usize, l: f64) -> Complex64 {
    let sigma = (PI / m as f64).sin();
    let n = (m * r) as i32;
    let (w1, _, _) = top_weights(j);
    let total = 2.0 * r as f64 * l;
    (link_constant() * sigma).powi(n) * i_pow(j as i64 - 1) * (-4.0 * sigma * total * w1)
}

/// Dihedral closed form `scale · mr (h¹¹)^j f^{(2j)}(0)`; the arc must be even.
pub fn invariant_dihedral(spec: &DomainSpec, r: usize, j: usize) -> Result<Complex64> {
    let DomainKind::Dihedral { m, f } = &spec.kind else {
        return Err(Error::Spec("dihedral spec required".into()));
    };
    let odd = f.odd_size();
    if odd > 0.0 {
        return Err(Error::Spec(format!(
            "dihedral arc must be even (largest odd coefficient {odd:e})"
        )));
    }
    let h11 = dihedral_h11(spec, r)?;
    let core = (m * r) as f64 * h11.powi(j as i32) * f.derivative(2 * j);
    Ok(dihedral_scale(*m, r, j, spec.l) * core)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// Closed-form top-derivative parts.
    #[serde(rename = "top")]
    TopOnly,
    /// Full diagram sums of the principal term.
    #[serde(rename = "full")]
    FullPrincipal,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub r: usize,
    pub j: usize,
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantTable {
    #[serde(rename = "L")]
    pub l: f64,
    pub a: Option<f64>,
    pub class: SymmetryClass,
    pub normalization: Normalization,
    /// Arc count of dihedral tables.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    pub entries: Vec<TableEntry>,
}

impl InvariantTable {
    pub fn get(&self, r: usize, j: usize) -> Result<Complex64> {
        self.entries
            .iter()
            .find(|e| e.r == r && e.j == j)
            .map(|e| c(e.re, e.im))
            .ok_or(Error::MissingEntry { r, j })
    }

    pub fn r_max(&self) -> usize {
        self.entries.iter().map(|e| e.r).max().unwrap_or(0)
    }

    pub fn j_max(&self) -> usize {
        self.entries.iter().map(|e| e.j).max().unwrap_or(0)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Invalid(format!("invariant table: {e}")))
    }
}

/// Symmetry class of a spec as recorded in tables: up-down specs with an
/// even arc are ellipse-symmetric.
pub fn table_class(spec: &DomainSpec) -> SymmetryClass {
    match &spec.kind {
        DomainKind::UpDownSymmetric { f } if f.odd_size() == 0.0 => SymmetryClass::Ellipse,
        _ => spec.class(),
    }
}

/// Entries `1 ≤ r ≤ r_max`, `1 ≤ j ≤ j_max`, computed in parallel.
pub fn build_table(
    spec: &DomainSpec,
    r_max: usize,
    j_max: usize,
    normalization: Normalization,
) -> Result<InvariantTable> {
    spec.validate()?;
    let a = floquet(spec)?.a;
    let pairs: Vec<(usize, usize)> = (1..=r_max)
        .flat_map(|r| (1..=j_max).map(move |j| (r, j)))
        .collect();
    let entries = pairs
        .par_iter()
        .map(|&(r, j)| {
            let v = match normalization {
                Normalization::TopOnly => invariant_top(spec, r, j)?,
                Normalization::FullPrincipal => invariant_full(spec, r, j)?,
            };
            Ok(TableEntry { r, j, re: v.re, im: v.im })
        })
        .collect::<Result<Vec<_>>>()?;
    let m = match &spec.kind {
        DomainKind::Dihedral { m, .. } => Some(*m),
        _ => None,
    };
    Ok(InvariantTable {
        l: spec.l,
        a,
        class: table_class(spec),
        normalization,
        m,
        entries,
    })
}

/// Central difference of `f` in the datum `f^{(k)}(0)` of `arc`. The
/// invariants are polynomials of degree ≤ 2 in each top datum, so the
/// difference is exact up to rounding for any step.
pub fn datum_sensitivity(
    f: &dyn Fn(&DomainSpec) -> Result<Complex64>,
    spec: &DomainSpec,
    arc: ArcSel,
    k: usize,
    step: f64,
) -> Result<Complex64> {
    let up = f(&perturb(spec, arc, k, step))?;
    let down = f(&perturb(spec, arc, k, -step))?;
    Ok((up - down) / (2.0 * step))
}

/// Sensitivities of one graph's contribution to `B_{r,j}` with respect to
/// the top data of `f₊`.
#[derive(Clone, Debug, Serialize)]
pub struct GraphSensitivity {
    pub graph: FeynmanGraph,
    pub automorphisms: u64,
    /// `∂/∂f₊^{(2j)}(0)`.
    pub even: Complex64,
    /// `∂/∂f₊^{(2j−1)}(0)`.
    pub odd: Complex64,
}

/// Per-graph sensitivities of the leading-amplitude part
/// `2(Πℓ)^{1/2} P_{j−1}(a_0)` of `B_{r,j}`.
pub fn max_derivative_report(spec: &DomainSpec, r: usize, j: usize, step: f64) -> Result<Vec<GraphSensitivity>> {
    if j < 2 {
        return Err(Error::Invalid("the graph report needs j ≥ 2".into()));
    }
    let order = 2 * j + 2;
    let per_graph = |s: &DomainSpec| -> Result<Vec<Complex64>> {
        let pt = build_principal(s, r, order)?;
        let scale = 2.0 * pt.length_scale();
        Ok(graph_contributions(&pt.problem(0)?, j - 1)?
            .into_iter()
            .map(|(_, v)| v * scale)
            .collect())
    };
    let diff = |k: usize| -> Result<Vec<Complex64>> {
        let up = per_graph(&perturb(spec, ArcSel::Plus, k, step))?;
        let down = per_graph(&perturb(spec, ArcSel::Plus, k, -step))?;
        Ok(up.iter().zip(&down).map(|(u, d)| (u - d) / (2.0 * step)).collect())
    };
    let even = diff(2 * j)?;
    let odd = diff(2 * j - 1)?;
    Ok(graphs_of_order(j - 1)
        .iter()
        .zip(even.into_iter().zip(odd))
        .map(|(g, (e, o))| GraphSensitivity {
            graph: g.clone(),
            automorphisms: automorphism_order(g),
            even: e,
            odd: o,
        })
        .collect())
}

/// Graphs of order `j − 1` the top-data analysis singles out as vanishing:
/// the open vertex with `j − 1` loops, the flower with `j` loops, and a
/// closed vertex with `j − 1` loops joined to the open vertex.
pub fn vanishing_graphs(j: usize) -> [FeynmanGraph; 3] {
    [
        FeynmanGraph { adj: vec![vec![j - 1]] },
        FeynmanGraph { adj: vec![vec![0, 0], vec![0, j]] },
        FeynmanGraph { adj: vec![vec![0, 1], vec![1, j - 1]] },
    ]
}
