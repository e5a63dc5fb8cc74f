use std::collections::HashSet;

use itertools::Itertools;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wavetrace::feynman::*;
use wavetrace::jets::{ComplexJet, RealJet};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn random_problem(rng: &mut ChaCha8Rng, n: usize, j: usize) -> SPProblem {
    let deg = 2 * j + 2;
    let mut h = nalgebra::DMatrix::<f64>::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let v: f64 = rng.random_range(-0.5..0.5);
            h[(a, b)] += v;
            h[(b, a)] += v;
        }
        let sign = if rng.random_bool(0.7) { 1.0 } else { -1.0 };
        h[(a, a)] += sign * rng.random_range(1.5..3.0);
    }
    let mut s = RealJet::zero(n, deg);
    let space = s.space().clone();
    let mut coeffs = vec![0.0; space.len()];
    for idx in space.block(2) {
        let e = space.exponent(idx);
        let (a, b) = match e.iter().positions(|&x| x > 0).collect::<Vec<_>>()[..] {
            [a] => (a, a),
            [a, b] => (a, b),
            _ => unreachable!(),
        };
        coeffs[idx] = if a == b { h[(a, a)] / 2.0 } else { h[(a, b)] };
    }
    for d in 3..=deg {
        for idx in space.block(d) {
            coeffs[idx] = rng.random_range(-0.6..0.6);
        }
    }
    s = RealJet::from_coeffs(&space, coeffs).unwrap();
    let mut a = ComplexJet::zero(n, 2 * j);
    let aspace = a.space().clone();
    let acoeffs: Vec<Complex64> = (0..aspace.len())
        .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    a = ComplexJet::from_coeffs(&aspace, acoeffs).unwrap();
    SPProblem::new(&s, a).unwrap()
}

fn one_d_problem(coeffs: &[f64], amp: &[f64], degree: usize) -> SPProblem {
    let s = RealJet::from_univariate(1, degree, 0, coeffs);
    let a: Vec<Complex64> = amp.iter().map(|&v| c(v, 0.0)).collect();
    SPProblem::new(&s, ComplexJet::from_univariate(1, degree, 0, &a)).unwrap()
}

/// Taylor coefficients of e^{−x²}.
fn gaussian_amp(degree: usize) -> Vec<f64> {
    let mut out = vec![0.0; degree + 1];
    let mut f = 1.0;
    for m in 0..=degree / 2 {
        if m > 0 {
            f *= m as f64;
        }
        out[2 * m] = if m % 2 == 0 { 1.0 } else { -1.0 } / f;
    }
    out
}

#[test]
fn frozen_one_d_coefficients() {
    // S = x²/2 + x³/20, a = e^{−x²}; exact values from a symbolic series oracle.
    let want = [
        c(1.0, 0.0),
        c(0.0, -157.0 / 160.0),
        c(-351093.0 / 256000.0, 0.0),
        c(0.0, 398094047.0 / 204800000.0),
        c(1611797881183.0 / 655360000000.0, 0.0),
    ];
    let p = one_d_problem(&[0.0, 0.0, 0.5, 0.05], &gaussian_amp(8), 10);
    for (j, w) in want.iter().enumerate() {
        let d = sp_coefficient_direct(&p, j).unwrap();
        assert!((d - w).norm() <= 1e-12 * w.norm(), "direct j = {j}: {d} vs {w}");
        if j <= 3 {
            let g = sp_coefficient_diagrams(&p, j).unwrap();
            assert!((g - w).norm() <= 1e-12 * w.norm(), "diagrams j = {j}: {g} vs {w}");
        }
    }
}

#[test]
fn gaussian_has_no_corrections() {
    let s = RealJet::from_univariate(2, 8, 0, &[0.0, 0.0, 1.5])
        .try_add(&RealJet::from_univariate(2, 8, 1, &[0.0, 0.0, -0.7]))
        .unwrap();
    let p = SPProblem::new(&s, ComplexJet::constant(2, 8, c(1.0, 0.0))).unwrap();
    assert_eq!(p.signature, 0);
    for j in 1..=3 {
        assert!(sp_coefficient_direct(&p, j).unwrap().norm() < 1e-15);
        assert!(sp_coefficient_diagrams(&p, j).unwrap().norm() < 1e-15);
    }
}

#[test]
fn gaussian_expansion_is_exact() {
    let p = one_d_problem(&[0.0, 0.0, 0.5], &[1.0], 12);
    let k = 7.3;
    let got = full_expansion(&p, k, 2).unwrap();
    let want = Complex64::from_polar((2.0 * std::f64::consts::PI / k).sqrt(), std::f64::consts::PI / 4.0);
    assert!((got - want).norm() < 1e-14);
}

#[test]
fn gaussian_quadrature() {
    // ∫ e^{−x²} e^{ikx²/2} dx = √(π/(1 − ik/2)).
    let k = 40.0;
    let r = oscillatory_quadrature(&|x| x * x / 2.0, &|x| c((-x * x).exp(), 0.0), k, (-7.0, 7.0), 1e-14).unwrap();
    let want = (Complex64::new(std::f64::consts::PI, 0.0) / c(1.0, -k / 2.0)).sqrt();
    assert!((r.value - want).norm() < 1e-13, "{} vs {want}", r.value);
    assert!(r.error < 1e-13);
}

#[test]
fn frozen_cubic_quadrature() {
    // High-precision reference values of ∫ e^{−x²} e^{ik(x²/2 + x³/20)} dx.
    let refs = [
        (40.0, c(0.28687597746858890505, 0.27314324494005541081)),
        (80.0, c(0.20055379378633659588, 0.19569402956813197628)),
        (160.0, c(0.1409765666048222464, 0.13925798158590729566)),
    ];
    for (k, want) in refs {
        let r = oscillatory_quadrature(
            &|x| x * x / 2.0 + x * x * x / 20.0,
            &|x| c((-x * x).exp(), 0.0),
            k,
            (-7.0, 7.0),
            1e-14,
        )
        .unwrap();
        assert!((r.value - want).norm() < 1e-13, "k = {k}");
    }
}

#[test]
fn separable_two_d() {
    let k = 30.0;
    let r = oscillatory_quadrature_2d(
        &|x, y| x * x / 2.0 + x * x * x / 20.0 - y * y,
        &|x, y| c((-x * x - y * y).exp(), 0.0),
        k,
        (-7.0, 7.0),
        (-7.0, 7.0),
        1e-12,
    )
    .unwrap();
    let rx = oscillatory_quadrature(&|x| x * x / 2.0 + x * x * x / 20.0, &|x| c((-x * x).exp(), 0.0), k, (-7.0, 7.0), 1e-14).unwrap();
    let ry = oscillatory_quadrature(&|y| -y * y, &|y| c((-y * y).exp(), 0.0), k, (-7.0, 7.0), 1e-14).unwrap();
    assert!((r.value - rx.value * ry.value).norm() < 1e-11);

    // The expansion of the product phase is the product of the expansions.
    let deg = 10;
    let sx = RealJet::from_univariate(2, deg, 0, &[0.0, 0.0, 0.5, 0.05]);
    let sy = RealJet::from_univariate(2, deg, 1, &[0.0, 0.0, -1.0]);
    let ax = ComplexJet::from_univariate(2, deg, 0, &gaussian_amp(deg).iter().map(|&v| c(v, 0.0)).collect::<Vec<_>>());
    let ay = ComplexJet::from_univariate(2, deg, 1, &gaussian_amp(deg).iter().map(|&v| c(v, 0.0)).collect::<Vec<_>>());
    let p2 = SPProblem::new(&sx.try_add(&sy).unwrap(), ax.try_mul(&ay).unwrap()).unwrap();
    let p1x = one_d_problem(&[0.0, 0.0, 0.5, 0.05], &gaussian_amp(deg), deg);
    let p1y = one_d_problem(&[0.0, 0.0, -1.0], &gaussian_amp(deg), deg);
    for j in 0..=3 {
        let lhs = sp_coefficient_direct(&p2, j).unwrap();
        let rhs: Complex64 = (0..=j)
            .map(|i| sp_coefficient_direct(&p1x, i).unwrap() * sp_coefficient_direct(&p1y, j - i).unwrap())
            .sum();
        assert!((lhs - rhs).norm() < 1e-12 * (1.0 + rhs.norm()), "j = {j}");
    }
}

#[test]
fn asymptotic_decay_rates() {
    let p = one_d_problem(&[0.0, 0.0, 0.5, 0.05], &gaussian_amp(8), 10);
    for order in 0..=2usize {
        let errs: Vec<f64> = [40.0, 80.0, 160.0]
            .iter()
            .map(|&k| {
                let q = oscillatory_quadrature(
                    &|x| x * x / 2.0 + x * x * x / 20.0,
                    &|x| c((-x * x).exp(), 0.0),
                    k,
                    (-7.0, 7.0),
                    1e-15,
                )
                .unwrap();
                (q.value - full_expansion(&p, k, order).unwrap()).norm()
            })
            .collect();
        let want = 2f64.powf(order as f64 + 1.5);
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((ratio / want - 1.0).abs() <= 0.25, "J = {order}: ratio {ratio}");
        }
    }
}

fn brute_canonical(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    (1..n)
        .permutations(n - 1)
        .map(|p| {
            let perm: Vec<usize> = std::iter::once(0).chain(p).collect();
            let mut key = Vec::new();
            for i in 0..n {
                for k in i..n {
                    key.push(adj[perm[i]][perm[k]]);
                }
            }
            key
        })
        .max()
        .unwrap()
}

fn brute_count(j: usize) -> usize {
    let mut seen = HashSet::new();
    for v in 0..=2 * j {
        let i = v + j;
        let nv = v + 1;
        let pairs: Vec<(usize, usize)> = (0..nv).flat_map(|a| (a..nv).map(move |b| (a, b))).collect();
        for edges in pairs.iter().combinations_with_replacement(i) {
            let mut adj = vec![vec![0usize; nv]; nv];
            for &&(a, b) in &edges {
                adj[a][b] += 1;
                if a != b {
                    adj[b][a] += 1;
                }
            }
            let deg = |x: usize| (0..nv).map(|y| if y == x { 2 * adj[x][x] } else { adj[x][y] }).sum::<usize>();
            if (1..nv).all(|x| deg(x) >= 3) {
                seen.insert((nv, brute_canonical(&adj)));
            }
        }
    }
    seen.len()
}

#[test]
fn graph_counts_match_brute_force() {
    for j in 0..=2 {
        let graphs = enumerate_graphs(j);
        assert_eq!(graphs.len(), brute_count(j), "j = {j}");
        for g in &graphs {
            assert!(g.is_admissible());
            assert_eq!(g.order(), j);
            assert_eq!(g.euler(), -(j as i64));
        }
    }
}

#[test]
fn order_one_catalogue() {
    let graphs = enumerate_graphs(1);
    let closed_only: Vec<_> = graphs.iter().filter(|g| g.open_valence() == 0).collect();
    let flower = FeynmanGraph { adj: vec![vec![0, 0], vec![0, 2]] };
    let dumbbell = FeynmanGraph { adj: vec![vec![0, 0, 0], vec![0, 1, 1], vec![0, 1, 1]] };
    let theta = FeynmanGraph { adj: vec![vec![0, 0, 0], vec![0, 0, 3], vec![0, 3, 0]] };
    for g in [&flower, &dumbbell, &theta] {
        assert!(closed_only.contains(&&g.canonical()));
    }
    assert_eq!(closed_only.len(), 3);
    // The open vertex with a loop, and a closed vertex with one loop and one open edge.
    assert_eq!(graphs.len(), 5);
}

/// Count half-edge bijections preserving incidence and pairing, with the
/// open vertex fixed.
fn brute_automorphisms(g: &FeynmanGraph) -> u64 {
    let nv = g.adj.len();
    let mut vert = Vec::new();
    let mut partner = Vec::new();
    for a in 0..nv {
        for b in a..nv {
            for _ in 0..g.adj[a][b] {
                let h = vert.len();
                vert.push(a);
                vert.push(b);
                partner.push(h + 1);
                partner.push(h);
            }
        }
    }
    let m = vert.len();
    let mut count = 0;
    for sigma in (0..m).permutations(m) {
        let mut pi = vec![usize::MAX; nv];
        pi[0] = 0;
        let ok = (0..m).all(|h| {
            let (v, w) = (vert[h], vert[sigma[h]]);
            if pi[v] == usize::MAX {
                pi[v] = w;
            }
            pi[v] == w && sigma[partner[h]] == partner[sigma[h]]
        });
        if ok {
            count += 1;
        }
    }
    count
}

#[test]
fn automorphisms_match_half_edge_oracle() {
    for j in 1..=2 {
        for g in enumerate_graphs(j) {
            if 2 * g.edge_count() <= 8 {
                assert_eq!(automorphism_order(&g), brute_automorphisms(&g), "{g:?}");
            }
        }
    }
    for j in 2..=4usize {
        let g = FeynmanGraph { adj: vec![vec![0, 0, 0], vec![0, j - 2, 3], vec![0, 3, 0]] };
        let swap = if j == 2 { 2 } else { 1 };
        let want = swap * 6 * (1u64 << (j - 2)) * (1..=(j as u64 - 2)).product::<u64>();
        assert_eq!(automorphism_order(&g), want, "j = {j}");
    }
    let single_edge = FeynmanGraph { adj: vec![vec![0, 1], vec![1, 1]] };
    assert_eq!(automorphism_order(&single_edge), 2);
    let bare = FeynmanGraph { adj: vec![vec![0, 3], vec![3, 0]] };
    assert_eq!(automorphism_order(&bare), 6);
}

#[test]
fn contraction_matches_explicit_labelings() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 1..=3 {
        let p = random_problem(&mut rng, n, 2);
        for g in enumerate_graphs(2) {
            if n == 3 && g.edge_count() > 5 {
                continue;
            }
            let a = amplitude(&g, &p).unwrap();
            let b = amplitude_by_labelings(&g, &p).unwrap();
            assert!((a - b).norm() <= 1e-11 * (1.0 + b.norm()), "{g:?}");
        }
    }
}

#[test]
fn master_property_seeded() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for case in 0..200 {
        let n = 1 + case % 4;
        let j = 1 + (case / 4) % 3;
        let p = random_problem(&mut rng, n, j);
        let d = sp_coefficient_direct(&p, j).unwrap();
        let g = sp_coefficient_diagrams(&p, j).unwrap();
        worst = worst.max((d - g).norm() / d.norm().max(1e-300));
    }
    assert!(worst <= 1e-9, "worst relative deviation {worst:e}");
}

#[test]
fn graph_power_of_k() {
    // A graph with V closed vertices and I edges carries k^{V−I}: rescaling
    // S → λS multiplies its contribution by λ^{V−I}.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let p = random_problem(&mut rng, 2, 2);
    let lambda = 1.7;
    let scaled = SPProblem {
        hessian: &p.hessian * lambda,
        hessian_inverse: &p.hessian_inverse / lambda,
        phase: p.phase.scale(lambda),
        det: p.det * lambda * lambda,
        ..p.clone()
    };
    for (g, v) in graph_contributions(&p, 2).unwrap() {
        let w = graph_value(&g, &scaled).unwrap();
        let want = v * lambda.powi(g.euler() as i32);
        assert!((w - want).norm() <= 1e-12 * (1.0 + want.norm()));
    }
}

#[test]
fn insufficient_jets_named() {
    let p = one_d_problem(&[0.0, 0.0, 0.5, 0.1], &[1.0], 3);
    assert_eq!(sp_coefficient_direct(&p, 1).unwrap_err().obstruction(), "insufficient-jets");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn linear_in_amplitude(seed in 0u64..1000, lre in -3.0f64..3.0, lim in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_problem(&mut rng, 2, 2);
        let lambda = c(lre, lim);
        let q = SPProblem { amplitude: p.amplitude.scale(lambda), ..p.clone() };
        for j in 0..=2 {
            let a = sp_coefficient_diagrams(&p, j).unwrap() * lambda;
            let b = sp_coefficient_diagrams(&q, j).unwrap();
            prop_assert!((a - b).norm() <= 1e-12 * (1.0 + a.norm()));
        }
    }
}

#[test]
fn order_four_catalogue_is_complete() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for n in 1..=2 {
        let p = random_problem(&mut rng, n, 4);
        let d = sp_coefficient_direct(&p, 4).unwrap();
        let g = sp_coefficient_diagrams(&p, 4).unwrap();
        assert!((d - g).norm() <= 1e-9 * d.norm(), "n = {n}: {d} vs {g}");
    }
}
