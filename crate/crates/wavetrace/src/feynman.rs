//! Stationary-phase expansions: the operator form of the coefficients, the
//! equivalent sum over Feynman graphs, and a quadrature oracle in one and
//! two dimensions.
//!
//! For `∫ a(x) e^{ikS(x)} dx` with a nondegenerate critical point at 0,
//!
//! ```text
//! (2π/k)^{n/2} e^{iπ sgn H/4} |det H|^{-1/2} e^{ikS(0)} Σ_j k^{-j} P_j,
//! P_j = Σ_{ν−μ=j, 2ν≥3μ} i^{-j} 2^{-ν} (μ! ν!)^{-1} ⟨H⁻¹D, D⟩^ν (a R₃^μ)(0),
//! ```
//!
//! with `D = −i∂` and `R₃` the part of `S` of degree ≥ 3. A graph has one open
//! vertex (the amplitude, index 0) and closed vertices (derivatives of `S`,
//! valency ≥ 3); it contributes `i^{V+I} T / |Aut|` to `P_{I−V}`, where `T`
//! contracts `H⁻¹` along the edges.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::jets::{ComplexJet, RealJet};

/// A stationary-phase problem at a nondegenerate critical point `x = 0`.
#[derive(Clone, Debug)]
pub struct SPProblem {
    pub n: usize,
    pub hessian: DMatrix<f64>,
    pub hessian_inverse: DMatrix<f64>,
    /// `S − S(0) − ⟨Hx, x⟩/2`.
    pub phase: RealJet,
    pub amplitude: ComplexJet,
    pub s0: f64,
    pub signature: i32,
    pub det: f64,
}

impl SPProblem {
    /// Split a full phase jet into `S(0)`, `H` and `R₃`. Fails if the gradient
    /// does not vanish or `H` is singular.
    pub fn new(phase: &RealJet, amplitude: ComplexJet) -> Result<Self> {
        let n = phase.nvars();
        if amplitude.nvars() != n {
            return Err(Error::DimensionMismatch(
                n,
                phase.max_degree(),
                amplitude.nvars(),
                amplitude.max_degree(),
            ));
        }
        if phase.max_degree() < 2 {
            return Err(Error::InsufficientJets {
                need: 2,
                have: phase.max_degree(),
            });
        }
        let h = DMatrix::from_row_slice(n, n, &phase.derivative_tensor(2)?);
        let scale = 1.0 + h.amax();
        let grad = phase.derivative_tensor(1)?;
        let gmax = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if gmax > 1e-9 * scale {
            return Err(Error::Invalid(format!(
                "phase is not critical at 0 (|grad| = {gmax:e})"
            )));
        }
        let eig = h.clone().symmetric_eigen();
        if eig.eigenvalues.iter().any(|l| l.abs() <= 1e-12 * scale) {
            return Err(Error::SingularHessian);
        }
        let signature = eig
            .eigenvalues
            .iter()
            .map(|&l| if l > 0.0 { 1 } else { -1 })
            .sum();
        let det = eig.eigenvalues.iter().product();
        let hinv = h.clone().try_inverse().ok_or(Error::SingularHessian)?;
        let hinv = (&hinv + hinv.transpose()) * 0.5;
        let mut r3 = phase.clone();
        let space = r3.space().clone();
        let mut coeffs = r3.coeffs().to_vec();
        for idx in space.block(0).start..space.block(2.min(space.max_degree())).end {
            coeffs[idx] = 0.0;
        }
        r3 = RealJet::from_coeffs(&space, coeffs)?;
        Ok(SPProblem {
            n,
            hessian: h,
            hessian_inverse: hinv,
            phase: r3,
            amplitude,
            s0: phase.constant_term(),
            signature,
            det,
        })
    }

    fn hinv_row_major(&self) -> Vec<f64> {
        let n = self.n;
        (0..n * n)
            .map(|i| self.hessian_inverse[(i / n, i % n)])
            .collect()
    }

    fn require(&self, j: usize) -> Result<()> {
        if self.phase.max_degree() < 2 * j + 2 && j > 0 {
            return Err(Error::InsufficientJets {
                need: 2 * j + 2,
                have: self.phase.max_degree(),
            });
        }
        if self.amplitude.max_degree() < 2 * j {
            return Err(Error::InsufficientJets {
                need: 2 * j,
                have: self.amplitude.max_degree(),
            });
        }
        Ok(())
    }
}

fn i_pow(k: i64) -> Complex64 {
    match k.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * i as f64)
}

/// `P_j` by the operator formula, using jet arithmetic.
pub fn sp_coefficient_direct(p: &SPProblem, j: usize) -> Result<Complex64> {
    p.require(j)?;
    let n = p.n;
    let top = 6 * j;
    let hinv = p.hinv_row_major();
    let r3 = p.phase.resize((2 * j + 2).max(3)).resize(top);
    let amp = p.amplitude.resize(2 * j).resize(top);
    let mut power = RealJet::constant(n, top, 1.0);
    let mut total = Complex64::new(0.0, 0.0);
    for mu in 0..=2 * j {
        if mu > 0 {
            power = power.try_mul(&r3)?;
        }
        let nu = j + mu;
        let prod = amp.try_mul(&power.to_complex())?;
        let mut term = prod.degree_band(2 * nu, 2 * nu).resize(2 * nu);
        for _ in 0..nu {
            term = term.apply_quadratic_operator(&hinv)?;
        }
        let sign = if nu % 2 == 0 { 1.0 } else { -1.0 };
        let c = sign / (2f64.powi(nu as i32) * factorial(mu) * factorial(nu));
        total += term.constant_term() * c;
    }
    Ok(total * i_pow(-(j as i64)))
}

/// Multigraph with an open vertex (index 0) and closed vertices `1..=V`;
/// `adj[i][i]` counts loops at `i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct FeynmanGraph {
    pub adj: Vec<Vec<usize>>,
}

impl FeynmanGraph {
    pub fn closed_count(&self) -> usize {
        self.adj.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        let n = self.adj.len();
        (0..n)
            .map(|i| (i..n).map(|k| self.adj[i][k]).sum::<usize>())
            .sum()
    }

    pub fn degree(&self, i: usize) -> usize {
        (0..self.adj.len())
            .map(|k| if k == i { 2 * self.adj[i][i] } else { self.adj[i][k] })
            .sum()
    }

    pub fn open_valence(&self) -> usize {
        self.degree(0)
    }

    /// `(loops, non-loop edge ends)` of each closed vertex.
    pub fn closed_vertices(&self) -> Vec<(usize, usize)> {
        (1..self.adj.len())
            .map(|i| (self.adj[i][i], self.degree(i) - 2 * self.adj[i][i]))
            .collect()
    }

    /// `V − I`.
    pub fn euler(&self) -> i64 {
        self.closed_count() as i64 - self.edge_count() as i64
    }

    /// The expansion order `I − V` the graph contributes to.
    pub fn order(&self) -> usize {
        (-self.euler()) as usize
    }

    pub fn is_admissible(&self) -> bool {
        (1..self.adj.len()).all(|i| self.degree(i) >= 3)
            && (0..self.adj.len()).all(|i| (0..self.adj.len()).all(|k| self.adj[i][k] == self.adj[k][i]))
    }

    /// Canonical representative under permutations of the closed vertices.
    pub fn canonical(&self) -> FeynmanGraph {
        let (perm, _) = canonical_search(self);
        relabel(self, &perm)
    }
}

fn relabel(g: &FeynmanGraph, perm: &[usize]) -> FeynmanGraph {
    // perm[new] = old
    let n = g.adj.len();
    let adj = (0..n)
        .map(|i| (0..n).map(|k| g.adj[perm[i]][perm[k]]).collect())
        .collect();
    FeynmanGraph { adj }
}

fn relabel_key(g: &FeynmanGraph, perm: &[usize]) -> Vec<usize> {
    let n = g.adj.len();
    let mut key = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for k in i..n {
            key.push(g.adj[perm[i]][perm[k]]);
        }
    }
    key
}

/// Iterated colour refinement to an equitable colouring. Colours are ranks
/// of isomorphism-invariant signatures, so the result is label independent.
fn refine(g: &FeynmanGraph, mut colour: Vec<usize>) -> Vec<usize> {
    let n = g.adj.len();
    let mut count = colour.iter().collect::<HashSet<_>>().len();
    loop {
        let sigs: Vec<(usize, usize, Vec<(usize, usize)>)> = (0..n)
            .map(|i| {
                let mut nb: Vec<(usize, usize)> = (0..n)
                    .filter(|&k| k != i && g.adj[i][k] > 0)
                    .map(|k| (colour[k], g.adj[i][k]))
                    .collect();
                nb.sort_unstable();
                (colour[i], g.adj[i][i], nb)
            })
            .collect();
        let mut distinct = sigs.clone();
        distinct.sort();
        distinct.dedup();
        colour = sigs.iter().map(|s| distinct.binary_search(s).unwrap()).collect();
        if distinct.len() == count {
            return colour;
        }
        count = distinct.len();
    }
}

/// Individualisation-refinement search. Returns the labelling with the
/// largest adjacency key and the number of leaves attaining it, which is the
/// number of vertex automorphisms fixing the open vertex.
fn canonical_search(g: &FeynmanGraph) -> (Vec<usize>, u64) {
    let n = g.adj.len();
    fn rec(g: &FeynmanGraph, colour: Vec<usize>, best: &mut Option<(Vec<usize>, Vec<usize>)>, hits: &mut u64) {
        let colour = refine(g, colour);
        let n = colour.len();
        let mut size = vec![0usize; n];
        for &c in &colour {
            size[c] += 1;
        }
        let Some(target) = (0..n).find(|&c| size[c] > 1) else {
            let mut perm = vec![0; n];
            for (v, &c) in colour.iter().enumerate() {
                perm[c] = v;
            }
            let key = relabel_key(g, &perm);
            match best {
                Some((b, _)) if key < *b => {}
                Some((b, _)) if key == *b => *hits += 1,
                _ => {
                    *best = Some((key, perm));
                    *hits = 1;
                }
            }
            return;
        };
        for v in (0..n).filter(|&v| colour[v] == target) {
            let split: Vec<usize> = (0..n)
                .map(|u| if u == v { 2 * colour[u] } else { 2 * colour[u] + 1 })
                .collect();
            rec(g, split, best, hits);
        }
    }
    let start = (0..n).map(|i| usize::from(i != 0)).collect();
    let mut best = None;
    let mut hits = 0;
    rec(g, start, &mut best, &mut hits);
    (best.map(|(_, p)| p).unwrap_or_default(), hits)
}

/// Order of the automorphism group fixing the open vertex: vertex
/// permutations, permutations of parallel edges and end swaps of loops.
pub fn automorphism_order(g: &FeynmanGraph) -> u64 {
    let n = g.adj.len();
    let (_, vertex_perms) = canonical_search(g);
    let mut edge_factor = 1u64;
    for i in 0..n {
        let loops = g.adj[i][i] as u64;
        edge_factor *= (1..=loops).product::<u64>() * (1u64 << loops);
        for k in (i + 1)..n {
            edge_factor *= (1..=g.adj[i][k] as u64).product::<u64>();
        }
    }
    vertex_perms * edge_factor
}

/// Nonincreasing partitions of `total` into exactly `parts` positive parts.
fn partitions(total: usize, parts: usize, max: usize, out: &mut Vec<Vec<usize>>, cur: &mut Vec<usize>) {
    if parts == 0 {
        if total == 0 {
            out.push(cur.clone());
        }
        return;
    }
    if total < parts {
        return;
    }
    for first in (1..=max.min(total - (parts - 1))).rev() {
        cur.push(first);
        partitions(total - first, parts - 1, first, out, cur);
        cur.pop();
    }
}

fn fill_adjacency(deg: &[usize], out: &mut Vec<FeynmanGraph>) {
    let n = deg.len();
    let mut adj = vec![vec![0usize; n]; n];
    let mut rem = deg.to_vec();
    fn rec(i: usize, k: usize, adj: &mut Vec<Vec<usize>>, rem: &mut Vec<usize>, out: &mut Vec<FeynmanGraph>) {
        let n = adj.len();
        if i == n {
            out.push(FeynmanGraph { adj: adj.clone() });
            return;
        }
        if k == n {
            if rem[i] == 0 {
                rec(i + 1, i + 1, adj, rem, out);
            }
            return;
        }
        if k == i {
            let later: usize = rem[i + 1..].iter().sum();
            for loops in 0..=rem[i] / 2 {
                if rem[i] - 2 * loops > later {
                    continue;
                }
                adj[i][i] = loops;
                rem[i] -= 2 * loops;
                rec(i, k + 1, adj, rem, out);
                rem[i] += 2 * loops;
                adj[i][i] = 0;
            }
            return;
        }
        for m in 0..=rem[i].min(rem[k]) {
            adj[i][k] = m;
            adj[k][i] = m;
            rem[i] -= m;
            rem[k] -= m;
            rec(i, k + 1, adj, rem, out);
            rem[i] += m;
            rem[k] += m;
        }
        adj[i][k] = 0;
        adj[k][i] = 0;
    }
    rec(0, 0, &mut adj, &mut rem, out);
}

/// Whether the adjacency key is not increased by swapping any two adjacent
/// vertices of equal degree. Every class has a labelling passing this test.
fn swap_maximal(g: &FeynmanGraph, deg: &[usize]) -> bool {
    let n = deg.len();
    let mut ident: Vec<usize> = (0..n).collect();
    let base = relabel_key(g, &ident);
    for i in 1..n.saturating_sub(1) {
        if deg[i] != deg[i + 1] {
            continue;
        }
        ident.swap(i, i + 1);
        let swapped = relabel_key(g, &ident);
        ident.swap(i, i + 1);
        if swapped > base {
            return false;
        }
    }
    true
}

/// All isomorphism classes of graphs with `I − V = j`, closed valency ≥ 3,
/// including disconnected ones and the open vertex in every valency.
pub fn enumerate_graphs(j: usize) -> Vec<FeynmanGraph> {
    let mut seen = HashSet::new();
    let mut result = Vec::new();
    for v in 0..=2 * j {
        for d0 in 0..=2 * j {
            if 2 * j < d0 + v || (v == 0 && d0 != 2 * j) {
                continue;
            }
            let mut parts = Vec::new();
            partitions(2 * j - d0, v, 2 * j, &mut parts, &mut Vec::new());
            for part in parts {
                let mut deg = vec![d0];
                deg.extend(part.iter().map(|p| p + 2));
                let mut raw = Vec::new();
                fill_adjacency(&deg, &mut raw);
                raw.retain(|g| swap_maximal(g, &deg));
                for g in raw {
                    let c = g.canonical();
                    if seen.insert(c.clone()) {
                        result.push(c);
                    }
                }
            }
        }
    }
    result
}

/// Cached catalogue of graphs by order.
pub fn graphs_of_order(j: usize) -> std::sync::Arc<Vec<FeynmanGraph>> {
    use std::sync::{Arc, Mutex, OnceLock};
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Vec<FeynmanGraph>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(g) = cache.lock().unwrap().get(&j) {
        return g.clone();
    }
    let graphs = Arc::new(enumerate_graphs(j));
    cache.lock().unwrap().insert(j, graphs.clone());
    graphs
}

struct Factor {
    labels: Vec<usize>,
    data: Vec<Complex64>,
}

fn contract_pair(a: &Factor, b: &Factor, n: usize) -> Factor {
    let shared: Vec<usize> = a.labels.iter().copied().filter(|l| b.labels.contains(l)).collect();
    let out: Vec<usize> = a
        .labels
        .iter()
        .chain(b.labels.iter())
        .copied()
        .filter(|l| !shared.contains(l))
        .collect();
    let all: Vec<usize> = out.iter().chain(shared.iter()).copied().collect();
    let stride = |labels: &[usize], l: usize| -> usize {
        labels
            .iter()
            .position(|&x| x == l)
            .map_or(0, |pos| n.pow((labels.len() - 1 - pos) as u32))
    };
    let sa: Vec<usize> = all.iter().map(|&l| stride(&a.labels, l)).collect();
    let sb: Vec<usize> = all.iter().map(|&l| stride(&b.labels, l)).collect();
    let so: Vec<usize> = all.iter().map(|&l| stride(&out, l)).collect();
    let mut data = vec![Complex64::new(0.0, 0.0); n.pow(out.len() as u32)];
    let m = all.len();
    let mut idx = vec![0usize; m];
    let (mut oa, mut ob, mut oo) = (0usize, 0usize, 0usize);
    loop {
        data[oo] += a.data[oa] * b.data[ob];
        let mut d = m;
        loop {
            if d == 0 {
                return Factor { labels: out, data };
            }
            d -= 1;
            idx[d] += 1;
            oa += sa[d];
            ob += sb[d];
            oo += so[d];
            if idx[d] < n {
                break;
            }
            oa -= sa[d] * n;
            ob -= sb[d] * n;
            oo -= so[d] * n;
            idx[d] = 0;
        }
    }
}

fn contract_network(mut factors: Vec<Factor>, n: usize) -> Complex64 {
    let mut scalar = Complex64::new(1.0, 0.0);
    loop {
        factors.retain(|f| {
            if f.labels.is_empty() {
                scalar *= f.data[0];
                false
            } else {
                true
            }
        });
        if factors.is_empty() {
            return scalar;
        }
        let mut best: Option<(usize, usize, usize)> = None;
        for i in 0..factors.len() {
            for k in (i + 1)..factors.len() {
                let a = &factors[i].labels;
                let b = &factors[k].labels;
                if !a.iter().any(|l| b.contains(l)) {
                    continue;
                }
                let union = a.len() + b.iter().filter(|l| !a.contains(l)).count();
                if best.is_none_or(|(_, _, u)| union < u) {
                    best = Some((i, k, union));
                }
            }
        }
        let (i, k, _) = best.expect("every edge label is shared by two factors");
        let b = factors.swap_remove(k);
        let a = factors.swap_remove(i);
        factors.push(contract_pair(&a, &b, n));
    }
}

/// Derivative tensors of `Δ_h^loops F` at 0, cached per problem.
struct VertexTensors<'a> {
    p: &'a SPProblem,
    hinv: Vec<f64>,
    phase: ComplexJet,
    cache: HashMap<(bool, usize, usize), std::sync::Arc<Vec<Complex64>>>,
}

impl<'a> VertexTensors<'a> {
    fn new(p: &'a SPProblem) -> Self {
        VertexTensors {
            p,
            hinv: p.hinv_row_major(),
            phase: p.phase.to_complex(),
            cache: HashMap::new(),
        }
    }

    fn get(&mut self, open: bool, loops: usize, ends: usize) -> Result<std::sync::Arc<Vec<Complex64>>> {
        if let Some(t) = self.cache.get(&(open, loops, ends)) {
            return Ok(t.clone());
        }
        let base = if open { &self.p.amplitude } else { &self.phase };
        let need = 2 * loops + ends;
        if base.max_degree() < need {
            return Err(Error::InsufficientJets {
                need,
                have: base.max_degree(),
            });
        }
        let mut jet = base.resize(need);
        for _ in 0..loops {
            jet = jet.apply_quadratic_operator(&self.hinv)?;
        }
        let t = std::sync::Arc::new(jet.derivative_tensor(ends)?);
        self.cache.insert((open, loops, ends), t.clone());
        Ok(t)
    }
}

fn graph_network(g: &FeynmanGraph, vt: &mut VertexTensors) -> Result<Vec<Factor>> {
    let n = vt.p.n;
    let nv = g.adj.len();
    let mut labels: Vec<Vec<usize>> = vec![Vec::new(); nv];
    let mut factors = Vec::new();
    let mut next = 0usize;
    let h: Vec<Complex64> = vt.hinv.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    for i in 0..nv {
        for k in (i + 1)..nv {
            for _ in 0..g.adj[i][k] {
                labels[i].push(next);
                labels[k].push(next + 1);
                factors.push(Factor {
                    labels: vec![next, next + 1],
                    data: h.clone(),
                });
                next += 2;
            }
        }
    }
    for (i, labs) in labels.into_iter().enumerate() {
        let t = vt.get(i == 0, g.adj[i][i], labs.len())?;
        factors.push(Factor {
            labels: labs,
            data: (*t).clone(),
        });
    }
    let _ = n;
    Ok(factors)
}

/// Sum over all labelings of the graph's edge ends of the product of vertex
/// and edge factors (`T` in the module docs), by tensor contraction.
pub fn amplitude(g: &FeynmanGraph, p: &SPProblem) -> Result<Complex64> {
    let mut vt = VertexTensors::new(p);
    let net = graph_network(g, &mut vt)?;
    Ok(contract_network(net, p.n))
}

/// The same sum by explicit enumeration of labelings; exponential in the
/// number of edges, meant for small checks.
pub fn amplitude_by_labelings(g: &FeynmanGraph, p: &SPProblem) -> Result<Complex64> {
    let n = p.n;
    let nv = g.adj.len();
    let mut ends: Vec<(usize, usize)> = Vec::new(); // (edge, vertex)
    let mut edge_count = 0;
    for i in 0..nv {
        for k in i..nv {
            for _ in 0..g.adj[i][k] {
                ends.push((edge_count, i));
                ends.push((edge_count, k));
                edge_count += 1;
            }
        }
    }
    let m = ends.len();
    let mut idx = vec![0usize; m];
    let mut total = Complex64::new(0.0, 0.0);
    let phase = p.phase.to_complex();
    loop {
        let mut term = Complex64::new(1.0, 0.0);
        for e in 0..edge_count {
            term *= p.hessian_inverse[(idx[2 * e], idx[2 * e + 1])];
        }
        if term != Complex64::new(0.0, 0.0) {
            for v in 0..nv {
                let mut alpha = vec![0u8; n];
                for (slot, &(_, vert)) in ends.iter().enumerate() {
                    if vert == v {
                        alpha[idx[slot]] += 1;
                    }
                }
                let f = if v == 0 { &p.amplitude } else { &phase };
                term *= f.partial(&alpha)?;
            }
            total += term;
        }
        let mut d = m;
        loop {
            if d == 0 {
                return Ok(total);
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < n {
                break;
            }
            idx[d] = 0;
        }
    }
}

/// Contribution `i^{V+I} T / |Aut|` of a graph to `P_{I−V}`.
pub fn graph_value(g: &FeynmanGraph, p: &SPProblem) -> Result<Complex64> {
    let t = amplitude(g, p)?;
    Ok(weighted(g, t))
}

fn weighted(g: &FeynmanGraph, t: Complex64) -> Complex64 {
    let phase = i_pow((g.closed_count() + g.edge_count()) as i64);
    t * phase / automorphism_order(g) as f64
}

/// `P_j` as the sum over all graphs of order `j`.
pub fn sp_coefficient_diagrams(p: &SPProblem, j: usize) -> Result<Complex64> {
    p.require(j)?;
    let graphs = graphs_of_order(j);
    let mut vt = VertexTensors::new(p);
    let mut total = Complex64::new(0.0, 0.0);
    for g in graphs.iter() {
        let net = graph_network(g, &mut vt)?;
        total += weighted(g, contract_network(net, p.n));
    }
    Ok(total)
}

/// Per-graph contributions to `P_j`, in catalogue order.
pub fn graph_contributions(p: &SPProblem, j: usize) -> Result<Vec<(FeynmanGraph, Complex64)>> {
    p.require(j)?;
    let graphs = graphs_of_order(j);
    let mut vt = VertexTensors::new(p);
    graphs
        .iter()
        .map(|g| {
            let net = graph_network(g, &mut vt)?;
            Ok((g.clone(), weighted(g, contract_network(net, p.n))))
        })
        .collect()
}

/// `(2π/k)^{n/2} e^{iπ sgn/4} |det H|^{-1/2} e^{ikS(0)}`.
pub fn prefactor(p: &SPProblem, k: f64) -> Complex64 {
    let mag = (2.0 * std::f64::consts::PI / k).powf(p.n as f64 / 2.0) / p.det.abs().sqrt();
    let arg = std::f64::consts::PI * p.signature as f64 / 4.0 + k * p.s0;
    Complex64::from_polar(mag, arg)
}

/// The stationary-phase expansion through `k^{-J}`.
pub fn full_expansion(p: &SPProblem, k: f64, order: usize) -> Result<Complex64> {
    let mut sum = Complex64::new(0.0, 0.0);
    for j in 0..=order {
        sum += sp_coefficient_direct(p, j)? * k.powi(-(j as i32));
    }
    Ok(prefactor(p, k) * sum)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadratureResult {
    pub value: Complex64,
    pub error: f64,
    pub evaluations: usize,
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &mut dyn FnMut(f64) -> Complex64, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        k += s * WGK[i];
        if i % 2 == 1 {
            g += s * WG[i / 2];
        }
    }
    (k * h, ((k - g) * h).norm())
}

struct Segment {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive Gauss–Kronrod (7/15) quadrature of a complex integrand,
/// starting from `pieces` equal subintervals.
pub fn adaptive_gk(
    f: &mut dyn FnMut(f64) -> Complex64,
    a: f64,
    b: f64,
    pieces: usize,
    tol: f64,
    max_segments: usize,
) -> Result<QuadratureResult> {
    let mut heap = BinaryHeap::new();
    let mut value = Complex64::new(0.0, 0.0);
    let mut error = 0.0;
    let pieces = pieces.max(1);
    for i in 0..pieces {
        let lo = a + (b - a) * i as f64 / pieces as f64;
        let hi = a + (b - a) * (i + 1) as f64 / pieces as f64;
        let (v, e) = gk15(f, lo, hi);
        value += v;
        error += e;
        heap.push(Segment { a: lo, b: hi, value: v, error: e });
    }
    while error > tol {
        if heap.len() >= max_segments {
            return Err(Error::Quadrature(format!(
                "error estimate {error:e} above {tol:e} after {} segments",
                heap.len()
            )));
        }
        let s = heap.pop().expect("nonempty");
        let mid = 0.5 * (s.a + s.b);
        let (v1, e1) = gk15(f, s.a, mid);
        let (v2, e2) = gk15(f, mid, s.b);
        value += v1 + v2 - s.value;
        error += e1 + e2 - s.error;
        heap.push(Segment { a: s.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: s.b, value: v2, error: e2 });
    }
    // Re-sum to shed accumulated cancellation in the running totals.
    let value = heap.iter().map(|s| s.value).sum();
    let error = heap.iter().map(|s| s.error).sum();
    Ok(QuadratureResult {
        value,
        error,
        evaluations: 15 * heap.len(),
    })
}

/// `∫_lo^hi a(x) e^{ikS(x)} dx`; the amplitude must vanish (to working
/// precision) at the endpoints.
pub fn oscillatory_quadrature(
    phase: &dyn Fn(f64) -> f64,
    amp: &dyn Fn(f64) -> Complex64,
    k: f64,
    interval: (f64, f64),
    tol: f64,
) -> Result<QuadratureResult> {
    let mut f = |x: f64| amp(x) * Complex64::from_polar(1.0, k * phase(x));
    let pieces = ((interval.1 - interval.0) * k / 4.0).ceil().max(8.0) as usize;
    adaptive_gk(&mut f, interval.0, interval.1, pieces, tol, 1 << 20)
}

/// Two-dimensional version over a rectangle, by nested adaptive quadrature.
pub fn oscillatory_quadrature_2d(
    phase: &dyn Fn(f64, f64) -> f64,
    amp: &dyn Fn(f64, f64) -> Complex64,
    k: f64,
    x_range: (f64, f64),
    y_range: (f64, f64),
    tol: f64,
) -> Result<QuadratureResult> {
    let mut inner_error = 0.0;
    let mut inner_failure = None;
    let mut evaluations = 0;
    let width = x_range.1 - x_range.0;
    let inner_tol = tol / (2.0 * width);
    let mut outer = |x: f64| {
        let line_phase = |y: f64| phase(x, y);
        let line_amp = |y: f64| amp(x, y);
        match oscillatory_quadrature(&line_phase, &line_amp, k, y_range, inner_tol) {
            Ok(r) => {
                inner_error += r.error;
                evaluations += r.evaluations;
                r.value
            }
            Err(e) => {
                inner_failure = Some(e);
                Complex64::new(0.0, 0.0)
            }
        }
    };
    let pieces = (width * k / 4.0).ceil().max(8.0) as usize;
    let r = adaptive_gk(&mut outer, x_range.0, x_range.1, pieces, tol / 2.0, 1 << 16)?;
    if let Some(e) = inner_failure {
        return Err(e);
    }
    Ok(QuadratureResult {
        value: r.value,
        error: r.error + tol / 2.0,
        evaluations: evaluations + r.evaluations,
    })
}
