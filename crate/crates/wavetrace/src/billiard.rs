//! Billiard map, periodic orbits as critical points of the length functional,
//! and numerical Poincaré maps.
//!
//! The boundary near the orbit is a list of graph charts: chart `k` is the arc
//! `x ↦ R(θ_k)(x, f_k(x))`, with `R(θ)` the rotation by `θ`. Points on the
//! boundary are addressed by `(chart, x)`; since the orbit meets every arc at
//! `x = 0` where `f′ = 0`, the chart coordinate agrees with arclength there to
//! first order.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64;
use serde::Serialize;

use crate::domain::{BoundaryArc, DomainKind, DomainSpec};
use crate::error::{Error, Result};
use crate::jets::RealJet;

const NEWTON_MAX: usize = 60;

#[derive(Clone, Debug, PartialEq)]
pub struct Chart {
    pub arc: BoundaryArc,
    pub angle: f64,
    /// `+1` if the domain lies on the side of `(−f′, 1)`, `−1` otherwise.
    pub inward: f64,
}

fn rotate(theta: f64, v: [f64; 2]) -> [f64; 2] {
    let (s, c) = theta.sin_cos();
    [c * v[0] - s * v[1], s * v[0] + c * v[1]]
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn unit(a: [f64; 2]) -> [f64; 2] {
    let n = a[0].hypot(a[1]);
    [a[0] / n, a[1] / n]
}

impl Chart {
    pub fn point(&self, x: f64) -> [f64; 2] {
        rotate(self.angle, [x, self.arc.eval(x)])
    }

    fn velocity(&self, x: f64) -> [f64; 2] {
        rotate(self.angle, [1.0, self.arc.eval_derivative(x, 1)])
    }

    /// Unit tangent in the direction of increasing `x`.
    pub fn tangent(&self, x: f64) -> [f64; 2] {
        unit(self.velocity(x))
    }

    pub fn inward_normal(&self, x: f64) -> [f64; 2] {
        let d = self.arc.eval_derivative(x, 1);
        let n = unit(rotate(self.angle, [-d, 1.0]));
        [self.inward * n[0], self.inward * n[1]]
    }

    /// `+1` when increasing `x` runs counterclockwise along the boundary.
    pub fn orientation(&self) -> f64 {
        self.inward
    }

    fn contains(&self, x: f64) -> bool {
        x.abs() <= self.arc.half_width
    }
}

/// The boundary near the distinguished orbit.
#[derive(Clone, Debug, PartialEq)]
pub struct Boundary {
    pub charts: Vec<Chart>,
}

impl Boundary {
    pub fn from_spec(spec: &DomainSpec) -> Result<Self> {
        let charts = match &spec.kind {
            DomainKind::Dihedral { m, f } => (0..*m)
                .map(|p| Chart {
                    arc: f.clone(),
                    angle: 2.0 * PI * p as f64 / *m as f64,
                    inward: -1.0,
                })
                .collect(),
            _ => {
                let (fp, fm) = spec.arcs()?;
                vec![
                    Chart {
                        arc: fp,
                        angle: 0.0,
                        inward: -1.0,
                    },
                    Chart {
                        arc: fm,
                        angle: 0.0,
                        inward: 1.0,
                    },
                ]
            }
        };
        Ok(Boundary { charts })
    }

    pub fn point(&self, chart: usize, x: f64) -> [f64; 2] {
        self.charts[chart].point(x)
    }
}

/// A boundary point with its chart.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundaryPoint {
    pub chart: usize,
    pub x: f64,
}

/// One step of the billiard map from `q` with tangential momentum `eta`.
pub fn billiard_map(boundary: &Boundary, q: BoundaryPoint, eta: f64) -> Result<(BoundaryPoint, f64)> {
    if eta.abs() >= 1.0 {
        return Err(Error::Invalid(format!("|eta| = {} is not < 1", eta.abs())));
    }
    let chart = &boundary.charts[q.chart];
    if !chart.contains(q.x) {
        return Err(Error::ChartExit {
            chart: q.chart,
            x: q.x,
        });
    }
    let p = chart.point(q.x);
    let t = chart.tangent(q.x);
    let n = chart.inward_normal(q.x);
    let s = (1.0 - eta * eta).sqrt();
    let v = [eta * t[0] + s * n[0], eta * t[1] + s * n[1]];

    let mut best: Option<(f64, BoundaryPoint)> = None;
    let mut last_exit = None;
    for (k, target) in boundary.charts.iter().enumerate() {
        if k == q.chart {
            continue;
        }
        match chord_hit(target, p, v) {
            Some(x) if target.contains(x) => {
                let dist = dot(sub(target.point(x), p), v);
                if dist > 1e-12 && best.is_none_or(|(d, _)| dist < d) {
                    best = Some((dist, BoundaryPoint { chart: k, x }));
                }
            }
            Some(x) => last_exit = Some(Error::ChartExit { chart: k, x }),
            None => {}
        }
    }
    let (_, hit) = best.ok_or_else(|| {
        last_exit.unwrap_or(Error::ChartExit {
            chart: q.chart,
            x: f64::NAN,
        })
    })?;
    let eta_next = dot(v, boundary.charts[hit.chart].tangent(hit.x));
    Ok((hit, eta_next))
}

/// Solve `cross(P(x) − p, v) = 0` by Newton's method from `x = 0`.
fn chord_hit(chart: &Chart, p: [f64; 2], v: [f64; 2]) -> Option<f64> {
    let mut x = 0.0;
    for _ in 0..NEWTON_MAX {
        let g = cross(sub(chart.point(x), p), v);
        let dg = cross(chart.velocity(x), v);
        if dg == 0.0 || !dg.is_finite() {
            return None;
        }
        let step = g / dg;
        x -= step;
        if !x.is_finite() || x.abs() > 1e3 {
            return None;
        }
        if step.abs() <= 1e-15 * (1.0 + x.abs()) {
            return Some(x);
        }
    }
    let g = cross(sub(chart.point(x), p), v);
    (g.abs() < 1e-13).then_some(x)
}

/// Snell residual at the middle vertex of three consecutive points: the
/// larger of the mismatch of tangential components and the sum of normal
/// components of the incoming and outgoing unit directions.
pub fn snell_residual(boundary: &Boundary, prev: BoundaryPoint, at: BoundaryPoint, next: BoundaryPoint) -> f64 {
    let chart = &boundary.charts[at.chart];
    let q = chart.point(at.x);
    let u_in = unit(sub(q, boundary.point(prev.chart, prev.x)));
    let u_out = unit(sub(boundary.point(next.chart, next.x), q));
    let t = chart.tangent(at.x);
    let n = chart.inward_normal(at.x);
    (dot(u_in, t) - dot(u_out, t))
        .abs()
        .max((dot(u_in, n) + dot(u_out, n)).abs())
}

/// Chart sequence visited by the r-th iterate of the distinguished orbit.
pub fn orbit_word(spec: &DomainSpec, r: usize) -> Vec<usize> {
    let m = spec.links();
    (0..m * r).map(|p| p % m).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeriodicOrbit {
    pub points: Vec<f64>,
    /// Orientation `±1` of each vertex for bouncing-ball orbits, the chart
    /// (rotation) index for dihedral orbits.
    pub word: Vec<i32>,
    #[serde(skip)]
    pub charts: Vec<usize>,
    pub length: f64,
    pub residual: f64,
    pub r: usize,
}

impl PeriodicOrbit {
    pub fn vertices(&self) -> Vec<BoundaryPoint> {
        self.charts
            .iter()
            .zip(&self.points)
            .map(|(&chart, &x)| BoundaryPoint { chart, x })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("orbit serializes")
    }
}

pub(crate) fn chart_jet(chart: &Chart, x0: f64, degree: usize) -> (RealJet, RealJet) {
    let u = RealJet::from_univariate(1, degree, 0, &[x0, 1.0]);
    let f = RealJet::from_univariate(1, degree, 0, &chart.arc.shifted(x0));
    let (s, c) = chart.angle.sin_cos();
    (&u.scale(c) - &f.scale(s), &u.scale(s) + &f.scale(c))
}

/// Jet of the length `|P_b(x_b0 + v) − P_a(x_a0 + u)|` in the variables `(u, v)`.
pub fn chord_jet(a: &Chart, xa: f64, b: &Chart, xb: f64, degree: usize) -> Result<RealJet> {
    let (ax, ay) = chart_jet(a, xa, degree);
    let (bx, by) = chart_jet(b, xb, degree);
    let ax = ax.embed(2, &[0]);
    let ay = ay.embed(2, &[0]);
    let bx = bx.embed(2, &[1]);
    let by = by.embed(2, &[1]);
    let dx = &bx - &ax;
    let dy = &by - &ay;
    (&(&dx * &dx) + &(&dy * &dy)).sqrt()
}

/// Jet of the length functional `Σ_p |q_{p+1} − q_p|` (cyclic) about `x0`.
pub fn length_jet(boundary: &Boundary, charts: &[usize], x0: &[f64], degree: usize) -> Result<RealJet> {
    let n = charts.len();
    if x0.len() != n {
        return Err(Error::Invalid("orbit point count does not match the word".into()));
    }
    let mut total = RealJet::zero(n, degree);
    for p in 0..n {
        let q = (p + 1) % n;
        let c = chord_jet(
            &boundary.charts[charts[p]],
            x0[p],
            &boundary.charts[charts[q]],
            x0[q],
            degree,
        )?;
        total = total.try_add(&c.embed(n, &[p, q]))?;
    }
    Ok(total)
}

/// Gradient and Hessian of a degree-≥2 jet at its expansion point.
pub fn gradient_hessian(jet: &RealJet) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = jet.nvars();
    let g = jet.derivative_tensor(1)?;
    let h = jet.derivative_tensor(2)?;
    Ok((DVector::from_vec(g), DMatrix::from_row_slice(n, n, &h)))
}

/// Newton search for a critical point of the length functional with the
/// given chart word.
pub fn find_orbit_word(
    boundary: &Boundary,
    charts: &[usize],
    guess: &[f64],
    r: usize,
    tol: f64,
) -> Result<PeriodicOrbit> {
    let mut x = guess.to_vec();
    let mut residual = f64::INFINITY;
    for _ in 0..NEWTON_MAX {
        let jet = length_jet(boundary, charts, &x, 2)?;
        let (g, h) = gradient_hessian(&jet)?;
        residual = g.amax();
        if residual <= tol {
            let word = word_labels(boundary, charts);
            return Ok(PeriodicOrbit {
                points: x,
                word,
                charts: charts.to_vec(),
                length: jet.constant_term(),
                residual,
                r,
            });
        }
        let step = h.lu().solve(&g).ok_or(Error::SingularHessian)?;
        for (xi, si) in x.iter_mut().zip(step.iter()) {
            *xi -= si;
        }
        for (p, &xi) in x.iter().enumerate() {
            if !boundary.charts[charts[p]].contains(xi) {
                return Err(Error::ChartExit {
                    chart: charts[p],
                    x: xi,
                });
            }
        }
    }
    Err(Error::NonConvergence {
        what: "orbit search",
        iterations: NEWTON_MAX,
        residual,
    })
}

fn word_labels(boundary: &Boundary, charts: &[usize]) -> Vec<i32> {
    if boundary.charts.len() == 2 && boundary.charts[0].angle == boundary.charts[1].angle {
        charts.iter().map(|&c| if c == 0 { 1 } else { -1 }).collect()
    } else {
        charts.iter().map(|&c| c as i32).collect()
    }
}

/// Critical point of the length functional at the r-th iterate, searched from
/// `guess` to gradient norm `1e−12`.
pub fn find_orbit(spec: &DomainSpec, r: usize, guess: &[f64]) -> Result<PeriodicOrbit> {
    let boundary = Boundary::from_spec(spec)?;
    find_orbit_word(&boundary, &orbit_word(spec, r), guess, r, 1e-12)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PoincareData {
    pub matrix: [[f64; 2]; 2],
    pub eigenvalues: (Complex64, Complex64),
    pub trace: f64,
    pub determinant: f64,
}

impl PoincareData {
    fn from_matrix(m: Matrix2<f64>) -> Self {
        let trace = m.trace();
        let det = m.determinant();
        let disc = Complex64::new(trace * trace / 4.0 - det, 0.0).sqrt();
        let half = Complex64::new(trace / 2.0, 0.0);
        PoincareData {
            matrix: [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]],
            eigenvalues: (half + disc, half - disc),
            trace,
            determinant: det,
        }
    }

    pub fn matrix(&self) -> Matrix2<f64> {
        Matrix2::new(
            self.matrix[0][0],
            self.matrix[0][1],
            self.matrix[1][0],
            self.matrix[1][1],
        )
    }

    /// `det(I − P)`.
    pub fn det_one_minus(&self) -> f64 {
        (Matrix2::identity() - self.matrix()).determinant()
    }
}

/// Apply the billiard map `steps` times.
pub fn iterate_map(boundary: &Boundary, mut q: BoundaryPoint, mut eta: f64, steps: usize) -> Result<(BoundaryPoint, f64)> {
    for _ in 0..steps {
        (q, eta) = billiard_map(boundary, q, eta)?;
    }
    Ok((q, eta))
}

/// Derivative of the return map of `orbit` in `(x, η)` coordinates at its
/// first vertex, by central differences with one Richardson step.
pub fn poincare_numeric(boundary: &Boundary, orbit: &PeriodicOrbit, step: f64) -> Result<PoincareData> {
    if step <= 0.0 || !step.is_finite() {
        return Err(Error::Invalid("finite-difference step must be positive".into()));
    }
    let verts = orbit.vertices();
    let n = verts.len();
    let q0 = verts[0];
    let p0 = boundary.point(q0.chart, q0.x);
    let p1 = boundary.point(verts[1 % n].chart, verts[1 % n].x);
    let eta0 = dot(unit(sub(p1, p0)), boundary.charts[q0.chart].tangent(q0.x));
    let map = |dx: f64, de: f64| -> Result<[f64; 2]> {
        let (q, e) = iterate_map(
            boundary,
            BoundaryPoint {
                chart: q0.chart,
                x: q0.x + dx,
            },
            eta0 + de,
            n,
        )?;
        if q.chart != q0.chart {
            return Err(Error::Invalid("return map left the starting chart".into()));
        }
        Ok([q.x, e])
    };
    let central = |h: f64| -> Result<Matrix2<f64>> {
        let mut m = Matrix2::zeros();
        for col in 0..2 {
            let (dx, de) = if col == 0 { (h, 0.0) } else { (0.0, h) };
            let plus = map(dx, de)?;
            let minus = map(-dx, -de)?;
            for row in 0..2 {
                m[(row, col)] = (plus[row] - minus[row]) / (2.0 * h);
            }
        }
        Ok(m)
    };
    let coarse = central(step)?;
    let fine = central(step / 2.0)?;
    let m = (fine * 4.0 - coarse) / 3.0;
    if !m.iter().all(|v| v.is_finite()) {
        return Err(Error::Invalid("finite-difference step is degenerate".into()));
    }
    Ok(PoincareData::from_matrix(m))
}

/// Mixed partials `b_p = ∂²ℓ(q_p, q_{p+1})/∂x_p∂x_{p+1}` of the individual chords.
pub fn chord_mixed_partials(boundary: &Boundary, orbit: &PeriodicOrbit) -> Result<Vec<f64>> {
    let verts = orbit.vertices();
    let n = verts.len();
    (0..n)
        .map(|p| {
            let a = verts[p];
            let b = verts[(p + 1) % n];
            let jet = chord_jet(
                &boundary.charts[a.chart],
                a.x,
                &boundary.charts[b.chart],
                b.x,
                2,
            )?;
            jet.partial(&[1, 1])
        })
        .collect()
}

/// Hessian of the length functional in chart coordinates at the orbit.
pub fn orbit_hessian(boundary: &Boundary, orbit: &PeriodicOrbit) -> Result<DMatrix<f64>> {
    let jet = length_jet(boundary, &orbit.charts, &orbit.points, 2)?;
    Ok(gradient_hessian(&jet)?.1)
}

/// Hessian in counterclockwise arclength coordinates: `J H J` with
/// `J = diag(orientation)`; valid at orbits meeting each arc where `f′ = 0`.
pub fn arclength_hessian(boundary: &Boundary, orbit: &PeriodicOrbit) -> Result<DMatrix<f64>> {
    let h = orbit_hessian(boundary, orbit)?;
    let j: Vec<f64> = orbit
        .charts
        .iter()
        .map(|&c| boundary.charts[c].orientation())
        .collect();
    let n = j.len();
    Ok(DMatrix::from_fn(n, n, |p, q| j[p] * h[(p, q)] * j[q]))
}

/// `−det(−H)/(b₁⋯bₙ)`, which equals `det(I − P)` for the orbit's return map.
pub fn kta_determinant(boundary: &Boundary, orbit: &PeriodicOrbit) -> Result<f64> {
    let h = arclength_hessian(boundary, orbit)?;
    let b: f64 = chord_mixed_partials(boundary, orbit)?.into_iter().product();
    Ok(-(-h).determinant() / b)
}
