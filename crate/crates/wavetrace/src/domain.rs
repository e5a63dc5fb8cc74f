//! Boundary arcs near the distinguished orbit, Floquet data and spec files.
//!
//! Normalization: the bouncing-ball orbit is the segment from (0, −L/2) to
//! (0, L/2); the top arc is the graph y = f₊(x) and the bottom arc y = f₋(x).
//! A dihedral arc y = f(x) sits at distance f(0) above the center of symmetry
//! and its images under rotation by 2πk/m complete the orbit.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The bad Floquet parameters of the one-symmetry decoupling argument.
pub const BAD_SET: [f64; 4] = [0.0, -1.0, 2.0, -2.0];

const NORMALIZATION_TOL: f64 = 1e-12;

/// Graph chart `y = f(x)` given by its Taylor coefficients at 0.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryArc {
    /// `taylor[k] = f⁽ᵏ⁾(0)/k!`.
    pub taylor: Vec<f64>,
    /// Half-width of the chart domain.
    pub half_width: f64,
}

fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * i as f64)
}

impl BoundaryArc {
    pub fn new(taylor: Vec<f64>) -> Self {
        BoundaryArc {
            taylor,
            half_width: 0.5,
        }
    }

    pub fn with_half_width(mut self, half_width: f64) -> Self {
        self.half_width = half_width;
        self
    }

    /// Highest stored Taylor order `K`.
    pub fn order(&self) -> usize {
        self.taylor.len().saturating_sub(1)
    }

    /// `f⁽ᵏ⁾(0)`; zero beyond the stored order.
    pub fn derivative(&self, k: usize) -> f64 {
        self.taylor.get(k).map_or(0.0, |c| c * factorial(k))
    }

    pub fn set_derivative(&mut self, k: usize, value: f64) {
        if self.taylor.len() <= k {
            self.taylor.resize(k + 1, 0.0);
        }
        self.taylor[k] = value / factorial(k);
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.taylor.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// `f⁽ᵏ⁾(x)`.
    pub fn eval_derivative(&self, x: f64, k: usize) -> f64 {
        let mut acc = 0.0;
        for i in (k..self.taylor.len()).rev() {
            let falling: f64 = ((i - k + 1)..=i).map(|t| t as f64).product();
            acc = acc * x + self.taylor[i] * falling;
        }
        acc
    }

    /// Taylor coefficients of `u ↦ f(x0 + u)`.
    pub fn shifted(&self, x0: f64) -> Vec<f64> {
        let n = self.taylor.len();
        (0..n)
            .map(|k| self.eval_derivative(x0, k) / factorial(k))
            .collect()
    }

    /// The arc `x ↦ f(−x)`.
    pub fn reflected(&self) -> Self {
        let taylor = self
            .taylor
            .iter()
            .enumerate()
            .map(|(k, &c)| if k % 2 == 1 { -c } else { c })
            .collect();
        BoundaryArc {
            taylor,
            half_width: self.half_width,
        }
    }

    /// The arc `x ↦ −f(x)`.
    pub fn negated(&self) -> Self {
        BoundaryArc {
            taylor: self.taylor.iter().map(|c| -c).collect(),
            half_width: self.half_width,
        }
    }

    /// Largest odd-order coefficient magnitude.
    pub fn odd_size(&self) -> f64 {
        self.taylor
            .iter()
            .enumerate()
            .filter(|(k, _)| k % 2 == 1)
            .map(|(_, c)| c.abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DomainKind {
    TwoArc {
        f_plus: BoundaryArc,
        f_minus: BoundaryArc,
    },
    UpDownSymmetric {
        f: BoundaryArc,
    },
    Dihedral {
        m: usize,
        f: BoundaryArc,
    },
}

/// Analytic boundary data at the distinguished orbit. `l` is half the orbit
/// length: the bouncing ball has two links of length `l`, a dihedral orbit has
/// `m` links of length `2l/m`.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainSpec {
    pub l: f64,
    pub kind: DomainKind,
}

/// Symmetry class carried by invariant tables and used to select an inverse.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymmetryClass {
    TwoArc,
    UpDown,
    Ellipse,
    Dihedral,
}

impl fmt::Display for SymmetryClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SymmetryClass::TwoArc => "twoarc",
            SymmetryClass::UpDown => "updown",
            SymmetryClass::Ellipse => "ellipse",
            SymmetryClass::Dihedral => "dihedral",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for SymmetryClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "twoarc" => Ok(SymmetryClass::TwoArc),
            "updown" => Ok(SymmetryClass::UpDown),
            "ellipse" => Ok(SymmetryClass::Ellipse),
            "dihedral" => Ok(SymmetryClass::Dihedral),
            other => Err(Error::Invalid(format!("unknown class `{other}`"))),
        }
    }
}

impl DomainSpec {
    /// Up-down symmetric spec from `f₊` Taylor coefficients beyond the
    /// normalized constant and linear terms (`extra[0]` is the x² coefficient).
    pub fn updown(l: f64, extra: &[f64]) -> Self {
        let mut taylor = vec![l / 2.0, 0.0];
        taylor.extend_from_slice(extra);
        DomainSpec {
            l,
            kind: DomainKind::UpDownSymmetric {
                f: BoundaryArc::new(taylor),
            },
        }
    }

    pub fn two_arc(l: f64, plus_extra: &[f64], minus_extra: &[f64]) -> Self {
        let mut p = vec![l / 2.0, 0.0];
        p.extend_from_slice(plus_extra);
        let mut m = vec![-l / 2.0, 0.0];
        m.extend_from_slice(minus_extra);
        DomainSpec {
            l,
            kind: DomainKind::TwoArc {
                f_plus: BoundaryArc::new(p),
                f_minus: BoundaryArc::new(m),
            },
        }
    }

    /// Dihedral spec; `even_extra[i]` is the coefficient of `x^{2i+2}`.
    pub fn dihedral(m: usize, l: f64, even_extra: &[f64]) -> Self {
        let mut taylor = vec![dihedral_radius(m, l), 0.0];
        for &c in even_extra {
            taylor.push(c);
            taylor.push(0.0);
        }
        taylor.pop();
        DomainSpec {
            l,
            kind: DomainKind::Dihedral {
                m,
                f: BoundaryArc::new(taylor),
            },
        }
    }

    pub fn class(&self) -> SymmetryClass {
        match &self.kind {
            DomainKind::TwoArc { .. } => SymmetryClass::TwoArc,
            DomainKind::UpDownSymmetric { .. } => SymmetryClass::UpDown,
            DomainKind::Dihedral { .. } => SymmetryClass::Dihedral,
        }
    }

    /// `(f₊, f₋)`; the up-down class expands with `f₋ = −f₊`.
    pub fn arcs(&self) -> Result<(BoundaryArc, BoundaryArc)> {
        match &self.kind {
            DomainKind::TwoArc { f_plus, f_minus } => Ok((f_plus.clone(), f_minus.clone())),
            DomainKind::UpDownSymmetric { f } => Ok((f.clone(), f.negated())),
            DomainKind::Dihedral { .. } => Err(Error::Spec(
                "dihedral specs have no bouncing-ball arcs".into(),
            )),
        }
    }

    /// The arc carrying the inverse-problem unknowns (`f₊` or the dihedral `f`).
    pub fn primary_arc(&self) -> &BoundaryArc {
        match &self.kind {
            DomainKind::TwoArc { f_plus, .. } => f_plus,
            DomainKind::UpDownSymmetric { f } => f,
            DomainKind::Dihedral { f, .. } => f,
        }
    }

    pub fn primary_arc_mut(&mut self) -> &mut BoundaryArc {
        match &mut self.kind {
            DomainKind::TwoArc { f_plus, .. } => f_plus,
            DomainKind::UpDownSymmetric { f } => f,
            DomainKind::Dihedral { f, .. } => f,
        }
    }

    /// Smallest stored Taylor order over all arcs.
    pub fn order(&self) -> usize {
        match &self.kind {
            DomainKind::TwoArc { f_plus, f_minus } => f_plus.order().min(f_minus.order()),
            DomainKind::UpDownSymmetric { f } | DomainKind::Dihedral { f, .. } => f.order(),
        }
    }

    /// Number of links of the distinguished orbit.
    pub fn links(&self) -> usize {
        match &self.kind {
            DomainKind::Dihedral { m, .. } => *m,
            _ => 2,
        }
    }

    pub fn link_length(&self) -> f64 {
        2.0 * self.l / self.links() as f64
    }

    /// The spec mirrored by `x → −x`.
    pub fn reflected(&self) -> Self {
        let kind = match &self.kind {
            DomainKind::TwoArc { f_plus, f_minus } => DomainKind::TwoArc {
                f_plus: f_plus.reflected(),
                f_minus: f_minus.reflected(),
            },
            DomainKind::UpDownSymmetric { f } => DomainKind::UpDownSymmetric { f: f.reflected() },
            DomainKind::Dihedral { m, f } => DomainKind::Dihedral {
                m: *m,
                f: f.reflected(),
            },
        };
        DomainSpec { l: self.l, kind }
    }

    /// Check the normalization invariants.
    pub fn validate(&self) -> Result<()> {
        if !(self.l.is_finite() && self.l > 0.0) {
            return Err(Error::Spec(format!("L must be positive, got {}", self.l)));
        }
        let tol = NORMALIZATION_TOL * self.l.max(1.0);
        let check_arc = |name: &str, arc: &BoundaryArc, value: f64| -> Result<()> {
            if arc.taylor.len() < 3 {
                return Err(Error::Spec(format!(
                    "{name}: at least the coefficients c0, c1, c2 are required"
                )));
            }
            if arc.taylor.iter().any(|c| !c.is_finite()) {
                return Err(Error::Spec(format!("{name}: non-finite coefficient")));
            }
            if (arc.taylor[0] - value).abs() > tol {
                return Err(Error::Spec(format!(
                    "{name}: c0 must equal {value}, got {}",
                    arc.taylor[0]
                )));
            }
            if arc.taylor[1].abs() > tol {
                return Err(Error::Spec(format!(
                    "{name}: c1 must vanish (orbit hits the arc orthogonally), got {}",
                    arc.taylor[1]
                )));
            }
            if !(arc.half_width > 0.0) {
                return Err(Error::Spec(format!("{name}: half_width must be positive")));
            }
            Ok(())
        };
        match &self.kind {
            DomainKind::TwoArc { f_plus, f_minus } => {
                check_arc("f", f_plus, self.l / 2.0)?;
                check_arc("f_minus", f_minus, -self.l / 2.0)
            }
            DomainKind::UpDownSymmetric { f } => check_arc("f", f, self.l / 2.0),
            DomainKind::Dihedral { m, f } => {
                if *m < 2 {
                    return Err(Error::Spec(format!("m must be at least 2, got {m}")));
                }
                check_arc("f", f, dihedral_radius(*m, self.l))?;
                if f.odd_size() > tol {
                    return Err(Error::Spec(
                        "dihedral arc must be even (odd Taylor coefficients vanish)".into(),
                    ));
                }
                Ok(())
            }
        }
    }
}

/// Distance from the center of symmetry to a vertex of the regular m-link orbit
/// of total length `2l`.
pub fn dihedral_radius(m: usize, l: f64) -> f64 {
    l / (m as f64 * (PI / m as f64).sin())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FloquetKind {
    Elliptic,
    Hyperbolic,
    /// Negative real eigenvalues: `tr P < −2`.
    ReflectionHyperbolic,
    Degenerate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FloquetData {
    /// `−2cos(α/2)` (elliptic) or `∓2cosh(α/2)` (hyperbolic); absent when
    /// the half-angle cosine is not real.
    pub a: Option<f64>,
    /// Floquet angle (elliptic) or exponent (hyperbolic).
    pub alpha: f64,
    pub kind: FloquetKind,
    pub r_a: f64,
    pub r_b: f64,
    /// `(1 − L/R_A)(1 − L/R_B)`.
    pub product: f64,
    /// `tr P_γ = 4·product − 2`.
    pub trace: f64,
}

impl FloquetData {
    pub fn a(&self) -> Result<f64> {
        self.a.ok_or_else(|| {
            Error::Invalid("Floquet parameter is not real for this orbit".into())
        })
    }
}

/// Floquet data from the curvatures at the orbit endpoints.
pub fn floquet(spec: &DomainSpec) -> Result<FloquetData> {
    let (c_a, c_b, r_a, r_b) = match &spec.kind {
        DomainKind::Dihedral { m, f } => {
            let s = (PI / *m as f64).sin();
            let c = 1.0 + spec.link_length() * f.derivative(2) / s;
            let r = -1.0 / f.derivative(2);
            (c, c, r, r)
        }
        _ => {
            let (fp, fm) = spec.arcs()?;
            let k_a = fp.derivative(2);
            let k_b = fm.derivative(2);
            (
                1.0 + spec.l * k_a,
                1.0 - spec.l * k_b,
                -1.0 / k_a,
                1.0 / k_b,
            )
        }
    };
    let product = c_a * c_b;
    let trace = 4.0 * product - 2.0;
    if (product - 1.0).abs() <= 1e-14 {
        return Err(Error::Degenerate { product });
    }
    let sign = if c_a < 0.0 { -1.0 } else { 1.0 };
    let (kind, a, alpha) = if product < 0.0 {
        let alpha = (-trace / 2.0).acosh();
        (FloquetKind::ReflectionHyperbolic, None, alpha)
    } else {
        let c = sign * product.sqrt();
        if product < 1.0 {
            (FloquetKind::Elliptic, Some(-2.0 * c), 2.0 * c.acos())
        } else {
            (FloquetKind::Hyperbolic, Some(-2.0 * c), 2.0 * c.abs().acosh())
        }
    };
    Ok(FloquetData {
        a,
        alpha,
        kind,
        r_a,
        r_b,
        product,
        trace,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "flag", rename_all = "kebab-case")]
pub enum GenericityFlag {
    DegenerateOrbit,
    BadFloquet { a: f64 },
    CubicVanishes,
    InsufficientJets { order: usize },
}

impl fmt::Display for GenericityFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GenericityFlag::DegenerateOrbit => f.write_str("degenerate orbit"),
            GenericityFlag::BadFloquet { a } => write!(f, "bad Floquet parameter a = {a}"),
            GenericityFlag::CubicVanishes => {
                f.write_str("cubic vanishes; inverse algorithm inapplicable")
            }
            GenericityFlag::InsufficientJets { order } => {
                write!(f, "jets of order {order} < 4")
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct GenericityReport {
    pub flags: Vec<GenericityFlag>,
}

impl GenericityReport {
    pub fn is_clean(&self) -> bool {
        self.flags.is_empty()
    }
}

/// Distance from `a` to the nearest element of the bad set.
pub fn bad_set_distance(a: f64) -> f64 {
    BAD_SET.iter().map(|b| (a - b).abs()).fold(f64::INFINITY, f64::min)
}

pub fn genericity_check(spec: &DomainSpec) -> GenericityReport {
    let mut flags = Vec::new();
    if spec.order() < 4 {
        flags.push(GenericityFlag::InsufficientJets { order: spec.order() });
    }
    match floquet(spec) {
        Err(_) => flags.push(GenericityFlag::DegenerateOrbit),
        Ok(fl) => {
            if let Some(a) = fl.a {
                if spec.class() == SymmetryClass::UpDown && bad_set_distance(a) <= 1e-9 {
                    flags.push(GenericityFlag::BadFloquet { a });
                }
            }
        }
    }
    if let DomainKind::UpDownSymmetric { f } = &spec.kind {
        if f.derivative(3).abs() < 1e-8 / (spec.l * spec.l) {
            flags.push(GenericityFlag::CubicVanishes);
        }
    }
    GenericityReport { flags }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum SpecFile {
    Updown {
        #[serde(rename = "L")]
        l: f64,
        f: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        half_width: Option<f64>,
    },
    Twoarc {
        #[serde(rename = "L")]
        l: f64,
        f: Vec<f64>,
        f_minus: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        half_width: Option<f64>,
    },
    Dihedral {
        #[serde(rename = "L")]
        l: f64,
        m: usize,
        f: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        half_width: Option<f64>,
    },
}

fn arc_from(taylor: Vec<f64>, half_width: Option<f64>) -> BoundaryArc {
    let arc = BoundaryArc::new(taylor);
    match half_width {
        Some(w) => arc.with_half_width(w),
        None => arc,
    }
}

/// Parse and validate a JSON domain spec.
pub fn parse_spec(text: &str) -> Result<DomainSpec> {
    let file: SpecFile = serde_json::from_str(text).map_err(|e| Error::Spec(e.to_string()))?;
    let spec = match file {
        SpecFile::Updown { l, f, half_width } => DomainSpec {
            l,
            kind: DomainKind::UpDownSymmetric {
                f: arc_from(f, half_width),
            },
        },
        SpecFile::Twoarc {
            l,
            f,
            f_minus,
            half_width,
        } => DomainSpec {
            l,
            kind: DomainKind::TwoArc {
                f_plus: arc_from(f, half_width),
                f_minus: arc_from(f_minus, half_width),
            },
        },
        SpecFile::Dihedral {
            l,
            m,
            f,
            half_width,
        } => DomainSpec {
            l,
            kind: DomainKind::Dihedral {
                m,
                f: arc_from(f, half_width),
            },
        },
    };
    spec.validate()?;
    Ok(spec)
}

/// Canonical pretty-printed JSON.
pub fn write_spec(spec: &DomainSpec) -> String {
    let hw = |arc: &BoundaryArc| {
        if arc.half_width == 0.5 {
            None
        } else {
            Some(arc.half_width)
        }
    };
    let file = match &spec.kind {
        DomainKind::UpDownSymmetric { f } => SpecFile::Updown {
            l: spec.l,
            f: f.taylor.clone(),
            half_width: hw(f),
        },
        DomainKind::TwoArc { f_plus, f_minus } => SpecFile::Twoarc {
            l: spec.l,
            f: f_plus.taylor.clone(),
            f_minus: f_minus.taylor.clone(),
            half_width: hw(f_plus),
        },
        DomainKind::Dihedral { m, f } => SpecFile::Dihedral {
            l: spec.l,
            m: *m,
            f: f.taylor.clone(),
            half_width: hw(f),
        },
    };
    serde_json::to_string_pretty(&file).expect("spec serialization")
}

/// `write_spec(parse_spec(text))`.
pub fn normalize_spec(text: &str) -> Result<String> {
    Ok(write_spec(&parse_spec(text)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_diameter_is_degenerate() {
        let r = 1.3;
        let spec = DomainSpec::updown(2.0 * r, &[-1.0 / (2.0 * r)]);
        assert!(matches!(floquet(&spec), Err(Error::Degenerate { .. })));
    }

    #[test]
    fn right_angle_floquet() {
        let spec = DomainSpec::two_arc(1.0, &[-0.5], &[0.5]);
        let fl = floquet(&spec).unwrap();
        assert_eq!(fl.r_a, 1.0);
        assert_eq!(fl.r_b, 1.0);
        assert_eq!(fl.product, 0.0);
        assert_eq!(fl.a, Some(0.0));
        assert_eq!(fl.kind, FloquetKind::Elliptic);
    }

    #[test]
    fn shifted_matches_eval() {
        let arc = BoundaryArc::new(vec![0.3, 0.1, -0.7, 0.25, 0.05]);
        let s = arc.shifted(0.2);
        let shifted = BoundaryArc::new(s);
        for &u in &[-0.1, 0.0, 0.05, 0.13] {
            assert!((shifted.eval(u) - arc.eval(0.2 + u)).abs() < 1e-14);
        }
    }

    #[test]
    fn missing_l_names_field() {
        let err = parse_spec(r#"{"kind":"updown","f":[0.5,0,-0.3]}"#).unwrap_err();
        assert!(err.to_string().contains("`L`"), "{err}");
    }

    #[test]
    fn minimal_spec_parses() {
        let spec = parse_spec(r#"{"kind":"updown","L":1.0,"f":[0.5,0,-0.3,0.1,0.02]}"#).unwrap();
        assert_eq!(spec.class(), SymmetryClass::UpDown);
        assert_eq!(spec.order(), 4);
    }

    #[test]
    fn bad_normalization_rejected() {
        let err = parse_spec(r#"{"kind":"updown","L":1.0,"f":[0.4,0,-0.3]}"#).unwrap_err();
        assert!(matches!(err, Error::Spec(_)));
        let err = parse_spec(r#"{"kind":"dihedral","L":1.5,"m":3,"f":[0.57735026918962573,0.1,-0.3]}"#)
            .unwrap_err();
        assert!(matches!(err, Error::Spec(_)));
    }
}
