//! Identity suites run by `wavetrace verify`.

use std::path::Path;

use clap::ValueEnum;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use wavetrace::billiard::{find_orbit, poincare_numeric, Boundary};
use wavetrace::domain::{floquet, DomainSpec, BAD_SET};
use wavetrace::feynman::{
    full_expansion, oscillatory_quadrature, sp_coefficient_diagrams, sp_coefficient_direct, SPProblem,
};
use wavetrace::hessian::{
    decoupling_pair, decoupling_row, hessian_matrix, inverse_chebyshev, inverse_dense, inverse_fourier_matrix,
    symbol, CirculantHessian,
};
use wavetrace::invariants::{bouncing_prefactor, build_principal, build_table, Normalization};
use wavetrace::inverse::recover;
use wavetrace::jets::{ComplexJet, RealJet};

use crate::{compare_taylor, CliError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Circulant,
    DetPoincare,
    DiagramOperator,
    Amplitude,
    QuadratureDecay,
    Decoupling,
    Roundtrip,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Circulant => "circulant",
            Suite::DetPoincare => "det-poincare",
            Suite::DiagramOperator => "diagram-operator",
            Suite::Amplitude => "amplitude",
            Suite::QuadratureDecay => "quadrature-decay",
            Suite::Decoupling => "decoupling",
            Suite::Roundtrip => "roundtrip",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub check: String,
    /// The swept parameter (k, r, a, ...) of the row, for plotting.
    pub param: f64,
    pub residual: f64,
    pub tol: f64,
    pub pass: bool,
}

impl Check {
    fn new(suite: Suite, check: impl Into<String>, param: f64, residual: f64, tol: f64) -> Self {
        Check {
            suite: suite.name(),
            check: check.into(),
            param,
            residual,
            tol,
            pass: residual <= tol,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {} {} residual={:.3e} tol={:.1e}",
            if self.pass { "PASS" } else { "FAIL" },
            self.suite,
            self.check,
            self.residual,
            self.tol
        )
    }
}

pub fn write_csv(path: &Path, checks: &[Check]) -> Result<(), CliError> {
    let io = |e: csv::Error| CliError::Io {
        path: path.to_owned(),
        source: std::io::Error::other(e.to_string()),
    };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    for c in checks {
        w.serialize(c).map_err(io)?;
    }
    w.flush().map_err(|source| CliError::Io { path: path.to_owned(), source })
}

pub fn run_suite(suite: Suite, seed: u64, tol: Option<f64>) -> Result<Vec<Check>, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let checks = match suite {
        Suite::Circulant => circulant(&mut rng, tol.unwrap_or(1e-9)),
        Suite::DetPoincare => det_poincare(&mut rng, tol.unwrap_or(1e-6))?,
        Suite::DiagramOperator => diagram_operator(&mut rng, tol.unwrap_or(1e-9))?,
        Suite::Amplitude => amplitude(&mut rng, tol.unwrap_or(1e-11))?,
        Suite::QuadratureDecay => quadrature_decay(tol.unwrap_or(0.25))?,
        Suite::Decoupling => decoupling(&mut rng, tol.unwrap_or(1e-9))?,
        Suite::Roundtrip => roundtrip(&mut rng, tol.unwrap_or(1e-8))?,
    };
    Ok(checks)
}

/// Up-down spec with an elliptic orbit away from the bad set and `f‴ ≠ 0`.
pub fn random_updown(rng: &mut ChaCha8Rng, order: usize) -> DomainSpec {
    let l = rng.random_range(0.7..1.6);
    let u = loop {
        let u: f64 = rng.random_range(0.15..1.85);
        if [0.5, 1.0, 1.5].iter().all(|b| (u - b).abs() > 0.08) {
            break u;
        }
    };
    let mut extra = vec![-u / (2.0 * l)];
    extra.extend((3..=order).map(|_| rng.random_range(-0.2..0.2)));
    if extra.len() > 1 {
        extra[1] = extra[1].signum() * extra[1].abs().max(0.05);
    }
    DomainSpec::updown(l, &extra)
}

fn circulant(rng: &mut ChaCha8Rng, tol: f64) -> Vec<Check> {
    let mut out = Vec::new();
    for r in 1..=12 {
        for _ in 0..4 {
            let a = rng.random_range(-5.0..5.0);
            if (0..2 * r).any(|k| symbol(a, r, k).abs() <= 1e-6) {
                continue;
            }
            let h = CirculantHessian::symmetric(r, 1.0, a);
            let (Ok(dense), Ok(fourier)) = (inverse_dense(&h), inverse_fourier_matrix(&h)) else {
                continue;
            };
            let scale = dense.amax();
            let mut worst: f64 = (&fourier - &dense).amax();
            for p in 1..=2 * r {
                for q in 1..=2 * r {
                    if let Ok(c) = inverse_chebyshev(&h, p, q) {
                        worst = worst.max((c - fourier[(p - 1, q - 1)]).abs());
                    }
                }
            }
            out.push(Check::new(Suite::Circulant, format!("r={r} a={a:.4}"), r as f64, worst / scale, tol));
        }
    }
    out
}

fn det_poincare(rng: &mut ChaCha8Rng, tol: f64) -> Result<Vec<Check>, CliError> {
    let spec = random_updown(rng, 4);
    let boundary = Boundary::from_spec(&spec)?;
    let a = floquet(&spec)?.a()?;
    let mut out = Vec::new();
    for r in 1..=3 {
        let orbit = find_orbit(&spec, r, &vec![0.0; 2 * r])?;
        let p = poincare_numeric(&boundary, &orbit, 1e-5 * spec.l)?;
        let h = hessian_matrix(&CirculantHessian::symmetric(r, spec.l, a));
        let want = -spec.l.powi(2 * r as i32) * h.determinant();
        let res = (p.det_one_minus() - want).abs() / want.abs();
        out.push(Check::new(Suite::DetPoincare, format!("r={r}"), r as f64, res, tol));
    }
    Ok(out)
}

/// Random phase with nondegenerate quadratic part and a random amplitude.
pub fn random_problem(rng: &mut ChaCha8Rng, n: usize, j: usize) -> Result<SPProblem, CliError> {
    let deg = 2 * j + 2;
    let space = RealJet::zero(n, deg).space().clone();
    let mut coeffs = vec![0.0; space.len()];
    for idx in space.block(2) {
        let e = space.exponent(idx);
        coeffs[idx] = if e.iter().any(|&x| x == 2) {
            let sign = if rng.random_bool(0.7) { 1.0 } else { -1.0 };
            sign * rng.random_range(0.75..1.5)
        } else {
            rng.random_range(-0.25..0.25)
        };
    }
    for d in 3..=deg {
        for idx in space.block(d) {
            coeffs[idx] = rng.random_range(-0.6..0.6);
        }
    }
    let phase = RealJet::from_coeffs(&space, coeffs)?;
    let aspace = ComplexJet::zero(n, 2 * j).space().clone();
    let acoeffs: Vec<Complex64> = (0..aspace.len())
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    Ok(SPProblem::new(&phase, ComplexJet::from_coeffs(&aspace, acoeffs)?)?)
}

fn diagram_operator(rng: &mut ChaCha8Rng, tol: f64) -> Result<Vec<Check>, CliError> {
    let mut out = Vec::new();
    for case in 0..24 {
        let n = 1 + case % 3;
        let j = 1 + (case / 3) % 2;
        let p = random_problem(rng, n, j)?;
        let d = sp_coefficient_direct(&p, j)?;
        let g = sp_coefficient_diagrams(&p, j)?;
        let res = (d - g).norm() / d.norm().max(1e-300);
        out.push(Check::new(Suite::DiagramOperator, format!("case={case} n={n} j={j}"), j as f64, res, tol));
    }
    Ok(out)
}

fn amplitude(rng: &mut ChaCha8Rng, tol: f64) -> Result<Vec<Check>, CliError> {
    let spec = random_updown(rng, 8);
    let f3 = spec.primary_arc().derivative(3);
    let mut out = Vec::new();
    for r in 1..=2 {
        let n = 2 * r;
        let pt = build_principal(&spec, r, 8)?;
        let grad = pt
            .amplitudes
            .iter()
            .map(|a| a.derivative_tensor(1).map(|g| g.iter().map(|v| v.norm()).fold(0.0, f64::max)))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .fold(0.0, f64::max);
        out.push(Check::new(Suite::Amplitude, format!("r={r} gradient"), r as f64, grad, tol));
        let lead = pt.amplitudes[0].constant_term();
        let want = bouncing_prefactor(r) * (2.0 * r as f64 * spec.l * spec.l.powi(-(r as i32)));
        out.push(Check::new(Suite::Amplitude, format!("r={r} leading"), r as f64, (lead - want).norm() / want.norm(), tol));
        let t3 = pt.phase.derivative_tensor(3)?;
        let mut worst: f64 = 0.0;
        for p in 0..n {
            for q in 0..n {
                for s in 0..n {
                    let v = t3[(p * n + q) * n + s];
                    let want = if p == q && q == s { 2.0 * f3 } else { 0.0 };
                    worst = worst.max((v - want).abs());
                }
            }
        }
        out.push(Check::new(Suite::Amplitude, format!("r={r} third-derivatives"), r as f64, worst, tol));
    }
    Ok(out)
}

fn quadrature_decay(tol: f64) -> Result<Vec<Check>, CliError> {
    let phase = RealJet::from_univariate(1, 10, 0, &[0.0, 0.0, 0.5, 0.05]);
    let mut amp = vec![Complex64::new(0.0, 0.0); 9];
    let mut f = 1.0;
    for m in 0..=4 {
        if m > 0 {
            f *= m as f64;
        }
        amp[2 * m] = Complex64::new(if m % 2 == 0 { 1.0 } else { -1.0 } / f, 0.0);
    }
    let p = SPProblem::new(&phase, ComplexJet::from_univariate(1, 10, 0, &amp))?;
    let ks = [40.0, 80.0, 160.0];
    let quad = ks
        .iter()
        .map(|&k| {
            oscillatory_quadrature(
                &|x| x * x / 2.0 + x * x * x / 20.0,
                &|x| Complex64::new((-x * x).exp(), 0.0),
                k,
                (-7.0, 7.0),
                1e-15,
            )
            .map(|q| q.value)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = Vec::new();
    for order in 0..=2usize {
        let errs = ks
            .iter()
            .zip(&quad)
            .map(|(&k, q)| Ok((q - full_expansion(&p, k, order)?).norm()))
            .collect::<Result<Vec<f64>, wavetrace::Error>>()?;
        for (&k, &e) in ks.iter().zip(&errs) {
            out.push(Check::new(Suite::QuadratureDecay, format!("J={order} k={k} remainder"), k, e, f64::INFINITY));
        }
        let want = 2f64.powf(order as f64 + 1.5);
        for (w, k) in errs.windows(2).zip(&ks) {
            let ratio = w[0] / w[1];
            out.push(Check::new(
                Suite::QuadratureDecay,
                format!("J={order} k={k} ratio={ratio:.4}"),
                *k,
                (ratio / want - 1.0).abs(),
                tol,
            ));
        }
    }
    Ok(out)
}

fn decoupling(rng: &mut ChaCha8Rng, tol: f64) -> Result<Vec<Check>, CliError> {
    let mut out = Vec::new();
    for _ in 0..20 {
        let a = loop {
            let a: f64 = rng.random_range(-4.0..4.0);
            if BAD_SET.iter().all(|b| (a - b).abs() > 1e-3) {
                break a;
            }
        };
        // Passes iff the best pair clears |det| > 1e-8.
        let det = decoupling_pair(a, 6, 1.0, 1e-8).map_or(0.0, |p| p.determinant.abs());
        out.push(Check::new(Suite::Decoupling, format!("a={a:.4} |det|={det:.3e}"), a, 1e-8 / det, 1.0));
    }
    for a in [0.0, -1.0] {
        let rows: Vec<(usize, f64, f64)> = (1..=8)
            .filter_map(|r| decoupling_row(r, 1.0, a).ok().map(|(x, y)| (r, x, y)))
            .collect();
        let Some(&(_, x0, y0)) = rows.first() else { continue };
        for &(r, x, y) in &rows[1..] {
            // Sine of the angle between the rows: zero iff the ratio agrees.
            let res = (x0 * y - y0 * x).abs() / (x0.hypot(y0) * x.hypot(y));
            out.push(Check::new(Suite::Decoupling, format!("a={a} r={r} ratio={:.6e}", x / y), r as f64, res, tol));
        }
    }
    Ok(out)
}

fn roundtrip(rng: &mut ChaCha8Rng, tol: f64) -> Result<Vec<Check>, CliError> {
    let mut out = Vec::new();
    for case in 0..6 {
        let spec = match case % 3 {
            0 => random_updown(rng, 10),
            1 => {
                let s = random_updown(rng, 10);
                let mut f = s.primary_arc().clone();
                for k in (3..f.taylor.len()).step_by(2) {
                    f.taylor[k] = 0.0;
                }
                DomainSpec { l: s.l, kind: wavetrace::domain::DomainKind::UpDownSymmetric { f } }
            }
            _ => {
                let m = [3, 5][case / 3 % 2];
                let extra: Vec<f64> = (0..5)
                    .map(|i| if i == 0 { -rng.random_range(0.2..0.6) } else { rng.random_range(-0.1..0.1) })
                    .collect();
                DomainSpec::dihedral(m, rng.random_range(1.0..3.0), &extra)
            }
        };
        let spec = if spec.primary_arc().derivative(3) < 0.0 { spec.reflected() } else { spec };
        let table = build_table(&spec, 3, 5, Normalization::TopOnly)?;
        let result = recover(&table, 5)?;
        let worst = compare_taylor(&spec, &result, 10).iter().map(|e| e.1).fold(0.0, f64::max);
        out.push(Check::new(Suite::Roundtrip, format!("case={case} class={}", table.class), case as f64, worst, tol));
    }
    Ok(out)
}
