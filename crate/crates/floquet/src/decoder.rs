//! Decoding of simple errors on each color's superlattice.
//!
//! For simple errors every color is decoded on its own: the `E_b^a` errors of
//! one period form a string on the `b` superlattice whose boundary is the
//! observed change of the `b` vertex stabilizers. A class `κ ∈ {00, 10, 01,
//! 11}` is the winding parity (l1, l2) of a string relative to a reference
//! string with the same boundary; index `κ1 + 2 κ2`.
//!
//! Class probabilities are computed either by summing over the cycle space
//! (a Gray-code walk over triangle boundaries and two homology loops) or as a
//! honeycomb random-bond Ising partition function with spins on the
//! superplaquettes:
//!
//! ```text
//! P_κ = (1 - p̃)^E Σ_{C ∼ 0} r^{|E_κ + C|} = (1 - p̃)^E e^{-J E} Z_κ / 2,   r = e^{-2J} = p̃/(1 - p̃)
//! ```
//!
//! The kagome construction handles single-qubit `X` errors, where one error
//! flips checks in consecutive periods.

use crate::channel::{sample_steps, simple_type_index, ErrorModel, SimpleErrorModel};
use crate::error::{Error, Result};
use crate::gf2::Bits;
use crate::lattice::{superlattice, Color, ColoredTorusLattice, Direction, SuperlatticeView};
use crate::statmech::{PairwiseModel, ENUMERATION_BUDGET};
use crate::Scalar;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// Graph on a torus whose edges know which seams they cross.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeamGraph {
    pub num_vertices: usize,
    pub edges: Vec<([usize; 2], [bool; 2])>,
    adj: Vec<Vec<(usize, usize)>>,
}

impl SeamGraph {
    pub fn new(num_vertices: usize, edges: Vec<([usize; 2], [bool; 2])>) -> Self {
        let mut adj = vec![Vec::new(); num_vertices];
        for (i, &([a, b], _)) in edges.iter().enumerate() {
            adj[a].push((i, b));
            if a != b {
                adj[b].push((i, a));
            }
        }
        SeamGraph {
            num_vertices,
            edges,
            adj,
        }
    }

    pub fn from_superlattice(view: &SuperlatticeView) -> Self {
        let edges = (0..view.num_edges())
            .map(|s| (view.superedges[s].ends, view.crosses_seam(s)))
            .collect();
        SeamGraph::new(view.num_vertices(), edges)
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Vertices of odd degree in an edge set.
    pub fn boundary(&self, set: &Bits) -> Bits {
        let mut out = Bits::zeros(self.num_vertices);
        for e in set.ones() {
            let [a, b] = self.edges[e].0;
            out.flip(a);
            out.flip(b);
        }
        out
    }

    /// Seam-crossing parity in each direction; the winding parity of a cycle.
    pub fn winding(&self, set: &Bits) -> [bool; 2] {
        let mut w = [false; 2];
        for e in set.ones() {
            let c = self.edges[e].1;
            w[0] ^= c[0];
            w[1] ^= c[1];
        }
        w
    }

    /// Breadth-first distances from `a`.
    pub fn distances(&self, a: usize) -> Vec<usize> {
        let mut d = vec![usize::MAX; self.num_vertices];
        d[a] = 0;
        let mut q = VecDeque::from([a]);
        while let Some(v) = q.pop_front() {
            for &(_, w) in &self.adj[v] {
                if d[w] == usize::MAX {
                    d[w] = d[v] + 1;
                    q.push_back(w);
                }
            }
        }
        d
    }

    /// Breadth-first search on the cover that tracks winding parity; returns
    /// the edges of a shortest walk from `(a, 00)` to `(b, w)`.
    fn lifted_path(&self, a: usize, b: usize, w: [bool; 2]) -> Option<Vec<usize>> {
        let code = |v: usize, w: [bool; 2]| v * 4 + w[0] as usize + 2 * w[1] as usize;
        let mut prev: Vec<Option<(usize, usize)>> = vec![None; self.num_vertices * 4];
        let mut seen = vec![false; self.num_vertices * 4];
        let start = code(a, [false; 2]);
        let goal = code(b, w);
        seen[start] = true;
        let mut q = VecDeque::from([start]);
        while let Some(s) = q.pop_front() {
            if s == goal {
                let mut path = Vec::new();
                let mut cur = s;
                while let Some((e, p)) = prev[cur] {
                    path.push(e);
                    cur = p;
                }
                path.reverse();
                return Some(path);
            }
            let (v, sw) = (s / 4, [s & 1 == 1, s & 2 == 2]);
            for &(e, u) in &self.adj[v] {
                let c = self.edges[e].1;
                let t = code(u, [sw[0] ^ c[0], sw[1] ^ c[1]]);
                if !seen[t] {
                    seen[t] = true;
                    prev[t] = Some((e, s));
                    q.push_back(t);
                }
            }
        }
        None
    }

    /// Edges of a shortest path from `a` to `b`; ties go to the lowest edge.
    pub fn shortest_path(&self, a: usize, b: usize) -> Vec<usize> {
        let mut prev = vec![None; self.num_vertices];
        let mut seen = vec![false; self.num_vertices];
        seen[a] = true;
        let mut q = VecDeque::from([a]);
        while let Some(v) = q.pop_front() {
            if v == b {
                break;
            }
            let mut nbrs = self.adj[v].clone();
            nbrs.sort();
            for (e, u) in nbrs {
                if !seen[u] {
                    seen[u] = true;
                    prev[u] = Some((e, v));
                    q.push_back(u);
                }
            }
        }
        let mut path = Vec::new();
        let mut cur = b;
        while let Some((e, p)) = prev[cur] {
            path.push(e);
            cur = p;
        }
        path.reverse();
        path
    }

    /// Shortest cycle through vertex 0 with winding parity one along `dir`.
    pub fn homology_loop(&self, dir: Direction) -> Bits {
        let mut w = [false; 2];
        w[dir.index()] = true;
        let path = self.lifted_path(0, 0, w).expect("torus graph has winding cycles");
        let mut set = Bits::zeros(self.num_edges());
        for e in path {
            set.flip(e);
        }
        set
    }

    /// String with boundary `defects` in class `kappa`. Defects are paired in
    /// increasing order along shortest paths, then the `kappa` loops are added.
    pub fn reference_string(&self, defects: &[usize], kappa: [bool; 2]) -> Result<Bits> {
        if defects.len() % 2 == 1 {
            return Err(Error::OddDefects(defects.len()));
        }
        let mut d = defects.to_vec();
        d.sort();
        let mut set = Bits::zeros(self.num_edges());
        for pair in d.chunks(2) {
            for e in self.shortest_path(pair[0], pair[1]) {
                set.flip(e);
            }
        }
        for dir in [Direction::L1, Direction::L2] {
            if kappa[dir.index()] {
                set.xor_assign(&self.homology_loop(dir));
            }
        }
        Ok(set)
    }

    /// Cycle-space basis: the given contractible generators (class 0) plus
    /// the two homology loops (classes 1 and 2).
    fn cycle_basis(&self, contractible: &[Bits]) -> Vec<(Bits, u8)> {
        let mut out: Vec<(Bits, u8)> = contractible.iter().map(|c| (c.clone(), 0u8)).collect();
        out.push((self.homology_loop(Direction::L1), 1));
        out.push((self.homology_loop(Direction::L2), 2));
        out
    }
}

fn kappa_index(k: [bool; 2]) -> usize {
    k[0] as usize + 2 * k[1] as usize
}

fn kappa_of(i: usize) -> [bool; 2] {
    [i & 1 == 1, i & 2 == 2]
}

/// Tie-break order: 00, then lexicographic in the string "κ1κ2".
const TIE_ORDER: [usize; 4] = [0, 2, 1, 3];

/// Log class probabilities `log P_{s,κ}` for the four classes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassProbabilities<T> {
    pub log_p: [T; 4],
    /// Superedges of the class-00 reference string.
    pub reference: Vec<usize>,
}

impl<T: Scalar> ClassProbabilities<T> {
    /// `log P_s = log Σ_κ P_{s,κ}`.
    pub fn log_total(&self) -> T {
        let m = self.log_p.iter().copied().fold(T::neg_infinity(), T::max);
        if m == T::neg_infinity() {
            return m;
        }
        m + self.log_p.iter().map(|&x| (x - m).exp()).sum::<T>().ln()
    }

    /// `P_{s,κ} / P_s`.
    pub fn ratios(&self) -> [T; 4] {
        let t = self.log_total();
        self.log_p.map(|x| (x - t).exp())
    }

    /// Most likely class with deterministic tie-breaking.
    pub fn argmax(&self) -> [bool; 2] {
        let mut best = TIE_ORDER[0];
        for &i in &TIE_ORDER[1..] {
            if self.log_p[i] > self.log_p[best] {
                best = i;
            }
        }
        kappa_of(best)
    }

    pub fn max_ratio(&self) -> T {
        self.ratios()[kappa_index(self.argmax())]
    }
}

/// Contractible generators of a superlattice's cycle space: the boundaries of
/// all superplaquettes but the last.
fn superplaquette_cycles(lat: &ColoredTorusLattice, view: &SuperlatticeView) -> Vec<Bits> {
    let mut out = Vec::new();
    for &v in &view.superplaquettes[..view.superplaquettes.len() - 1] {
        let mut c = Bits::zeros(view.num_edges());
        for &e in &lat.vertex_edges[v] {
            if let Some(&s) = view.superedge_of_edge.get(&e) {
                c.flip(s);
            }
        }
        out.push(c);
    }
    out
}

fn to_word(b: &Bits) -> u64 {
    b.words().first().copied().unwrap_or(0)
}

/// Number of strings per class and weight: `hist[κ][w]`.
pub fn class_weight_histogram(lat: &ColoredTorusLattice, view: &SuperlatticeView, reference: &Bits) -> Result<[Vec<u64>; 4]> {
    let graph = SeamGraph::from_superlattice(view);
    let basis = graph.cycle_basis(&superplaquette_cycles(lat, view));
    let dim = basis.len();
    if dim > ENUMERATION_BUDGET {
        return Err(Error::BudgetExceeded {
            what: "cycle-space enumeration".into(),
            needed: dim as u64,
            limit: ENUMERATION_BUDGET as u64,
        });
    }
    let ne = view.num_edges();
    if ne > 64 {
        return Err(Error::BudgetExceeded {
            what: "superedges per word".into(),
            needed: ne as u64,
            limit: 64,
        });
    }
    let words: Vec<u64> = basis.iter().map(|(b, _)| to_word(b)).collect();
    let cls: Vec<u8> = basis.iter().map(|(_, c)| *c).collect();
    let r0 = to_word(reference);
    let low = dim.min(16);
    let high = dim - low;
    let empty = || [vec![0u64; ne + 1], vec![0u64; ne + 1], vec![0u64; ne + 1], vec![0u64; ne + 1]];
    let hist = (0..1u64 << high)
        .into_par_iter()
        .map(|top| {
            let mut h = empty();
            let mut cur = r0;
            let mut c = 0u8;
            for i in 0..high {
                if (top >> i) & 1 == 1 {
                    cur ^= words[low + i];
                    c ^= cls[low + i];
                }
            }
            h[c as usize][cur.count_ones() as usize] += 1;
            for g in 1..1u64 << low {
                let k = g.trailing_zeros() as usize;
                cur ^= words[k];
                c ^= cls[k];
                h[c as usize][cur.count_ones() as usize] += 1;
            }
            h
        })
        .reduce(empty, |mut a, b| {
            for k in 0..4 {
                for (x, y) in a[k].iter_mut().zip(&b[k]) {
                    *x += y;
                }
            }
            a
        });
    Ok(hist)
}

/// Exact `log P_{s,κ}` by summing `P(E)` over the whole cycle space.
pub fn class_probabilities_exact<T: Scalar>(
    lat: &ColoredTorusLattice,
    view: &SuperlatticeView,
    defects: &[usize],
    p: T,
) -> Result<ClassProbabilities<T>> {
    check_rate(p)?;
    let graph = SeamGraph::from_superlattice(view);
    let reference = graph.reference_string(defects, [false; 2])?;
    let hist = class_weight_histogram(lat, view, &reference)?;
    let ne = view.num_edges() as i32;
    let log_q = (T::one() - p).ln();
    let log_p = [0, 1, 2, 3].map(|k| {
        let mut terms: Vec<T> = Vec::new();
        for (w, &cnt) in hist[k].iter().enumerate() {
            if cnt > 0 {
                let lw = if w == 0 {
                    T::zero()
                } else {
                    T::of(w as f64) * (p.ln() - log_q)
                };
                terms.push(T::of(cnt as f64).ln() + lw);
            }
        }
        log_sum(&terms) + T::of(ne as f64) * log_q
    });
    Ok(ClassProbabilities {
        log_p,
        reference: reference.ones().collect(),
    })
}

fn log_sum<T: Scalar>(v: &[T]) -> T {
    let m = v.iter().copied().fold(T::neg_infinity(), T::max);
    if m == T::neg_infinity() {
        return m;
    }
    m + v.iter().map(|&x| (x - m).exp()).sum::<T>().ln()
}

fn check_rate<T: Scalar>(p: T) -> Result<()> {
    if !(p >= T::zero() && p <= T::of(0.5)) {
        return Err(Error::InvalidArgument(format!("rate {p} outside [0, 1/2]")));
    }
    Ok(())
}

/// Honeycomb random-bond Ising model for one class.
///
/// Spins sit on the superplaquettes (the two non-round vertex colors); the
/// bond dual to superedge `s` joins the two base endpoints of its base edge
/// and is antiferromagnetic exactly on the class reference string.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RbimInstance<T> {
    pub color: Color,
    pub kappa: [bool; 2],
    /// Base vertex of each spin.
    pub sites: Vec<usize>,
    /// Spin pair of each superedge's dual bond.
    pub bonds: Vec<(usize, usize)>,
    /// `η = -1` where set.
    pub antiferro: Bits,
    pub j: T,
}

impl<T: Scalar> RbimInstance<T> {
    /// Nishimori-line instance for `defects` in class `kappa` at rate `p̃ ∈ (0, 1/2]`.
    pub fn new(
        lat: &ColoredTorusLattice,
        view: &SuperlatticeView,
        defects: &[usize],
        kappa: [bool; 2],
        p: T,
    ) -> Result<Self> {
        let j = crate::statmech::rbim::nishimori_coupling(p)?;
        let graph = SeamGraph::from_superlattice(view);
        let antiferro = graph.reference_string(defects, kappa)?;
        let mut site_of = vec![usize::MAX; lat.vertices.len()];
        for (i, &v) in view.superplaquettes.iter().enumerate() {
            site_of[v] = i;
        }
        let bonds = view
            .superedges
            .iter()
            .map(|se| {
                let [a, b] = lat.edges[se.base_edge].vertices;
                (site_of[a], site_of[b])
            })
            .collect();
        Ok(RbimInstance {
            color: view.round,
            kappa,
            sites: view.superplaquettes.clone(),
            bonds,
            antiferro,
            j,
        })
    }

    pub fn model(&self) -> PairwiseModel<T> {
        let mut m = PairwiseModel::new(self.sites.len());
        for (s, &(a, b)) in self.bonds.iter().enumerate() {
            m.add_bond(a, b, if self.antiferro.get(s) { -self.j } else { self.j });
        }
        m
    }
}

/// `log Σ_σ exp(J Σ η σσ)` of an instance.
pub fn class_probabilities_rbim<T: Scalar>(instance: &RbimInstance<T>) -> Result<T> {
    Ok(instance.model().log_partition()?.0)
}

/// `log P_{s,κ}` for all classes via the RBIM partition functions.
pub fn class_probabilities_via_rbim<T: Scalar>(
    lat: &ColoredTorusLattice,
    view: &SuperlatticeView,
    defects: &[usize],
    p: T,
) -> Result<ClassProbabilities<T>> {
    check_rate(p)?;
    let graph = SeamGraph::from_superlattice(view);
    let reference = graph.reference_string(defects, [false; 2])?;
    let ne = T::of(view.num_edges() as f64);
    if p == T::zero() {
        // only the empty string has weight
        let mut log_p = [T::neg_infinity(); 4];
        if defects.is_empty() {
            log_p[0] = T::zero();
        }
        return Ok(ClassProbabilities {
            log_p,
            reference: reference.ones().collect(),
        });
    }
    let mut log_p = [T::zero(); 4];
    for k in 0..4 {
        let inst = RbimInstance::new(lat, view, defects, kappa_of(k), p)?;
        let lz = class_probabilities_rbim(&inst)?;
        log_p[k] = lz - inst.j * ne + ne * (T::one() - p).ln() - T::LN_2();
    }
    Ok(ClassProbabilities {
        log_p,
        reference: reference.ones().collect(),
    })
}

/// A decoding decision on one superlattice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    /// Class of the recovery relative to the class-00 reference string.
    pub kappa: [bool; 2],
    /// Recovery string (superedges).
    pub recovery: Vec<usize>,
}

fn decision_from(graph: &SeamGraph, defects: &[usize], kappa: [bool; 2]) -> Result<Decision> {
    let r = graph.reference_string(defects, kappa)?;
    Ok(Decision {
        kappa,
        recovery: r.ones().collect(),
    })
}

/// Maximum-likelihood decision for one color's defects at rate `p̃`.
pub fn ml_decode<T: Scalar>(
    lat: &ColoredTorusLattice,
    view: &SuperlatticeView,
    defects: &[usize],
    p: T,
) -> Result<(Decision, ClassProbabilities<T>)> {
    let probs = class_probabilities_via_rbim(lat, view, defects, p)?;
    let graph = SeamGraph::from_superlattice(view);
    Ok((decision_from(&graph, defects, probs.argmax())?, probs))
}

/// Minimum-weight pairing of defects by graph distance; exact for up to
/// [`MATCHING_EXACT_LIMIT`] defects, greedy beyond.
pub fn matching_decode(view: &SuperlatticeView, defects: &[usize]) -> Result<Decision> {
    let graph = SeamGraph::from_superlattice(view);
    matching_on(&graph, defects)
}

pub const MATCHING_EXACT_LIMIT: usize = 16;

pub fn matching_on(graph: &SeamGraph, defects: &[usize]) -> Result<Decision> {
    let k = defects.len();
    if k % 2 == 1 {
        return Err(Error::OddDefects(k));
    }
    let dist: Vec<Vec<usize>> = defects
        .iter()
        .map(|&a| {
            let d = graph.distances(a);
            defects.iter().map(|&b| d[b]).collect()
        })
        .collect();
    let pairs = if k <= MATCHING_EXACT_LIMIT {
        exact_pairing(&dist)
    } else {
        greedy_pairing(&dist)
    };
    let mut set = Bits::zeros(graph.num_edges());
    for (a, b) in pairs {
        for e in graph.shortest_path(defects[a], defects[b]) {
            set.flip(e);
        }
    }
    let reference = graph.reference_string(defects, [false; 2])?;
    let kappa = graph.winding(&set.xor(&reference));
    Ok(Decision {
        kappa,
        recovery: set.ones().collect(),
    })
}

fn exact_pairing(dist: &[Vec<usize>]) -> Vec<(usize, usize)> {
    let k = dist.len();
    let full = (1usize << k) - 1;
    let mut best = vec![usize::MAX; 1 << k];
    let mut choice = vec![0usize; 1 << k];
    best[0] = 0;
    for mask in 1..=full {
        if mask.count_ones() % 2 == 1 {
            continue;
        }
        let i = mask.trailing_zeros() as usize;
        let rest = mask & !(1 << i);
        let mut r = rest;
        while r != 0 {
            let j = r.trailing_zeros() as usize;
            r &= r - 1;
            let sub = rest & !(1 << j);
            if best[sub] != usize::MAX {
                let c = best[sub] + dist[i][j];
                if c < best[mask] {
                    best[mask] = c;
                    choice[mask] = j;
                }
            }
        }
    }
    let mut out = Vec::new();
    let mut mask = full;
    while mask != 0 {
        let i = mask.trailing_zeros() as usize;
        let j = choice[mask];
        out.push((i, j));
        mask &= !(1 << i) & !(1 << j);
    }
    out
}

fn greedy_pairing(dist: &[Vec<usize>]) -> Vec<(usize, usize)> {
    let k = dist.len();
    let mut cand: Vec<(usize, usize, usize)> = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            cand.push((dist[i][j], i, j));
        }
    }
    cand.sort();
    let mut used = vec![false; k];
    let mut out = Vec::new();
    for (_, i, j) in cand {
        if !used[i] && !used[j] {
            used[i] = true;
            used[j] = true;
            out.push((i, j));
        }
    }
    out
}

/// Rate at which a superedge of `color` is flipped in one period: the odd
/// parity of three rounds of its two error types.
pub fn superedge_rate(model: &SimpleErrorModel, color: Color) -> f64 {
    let pa = model.rates[simple_type_index(color, 0)];
    let pb = model.rates[simple_type_index(color, 1)];
    0.5 * (1.0 - ((1.0 - 2.0 * pa) * (1.0 - 2.0 * pb)).powi(3))
}

/// Superedges of `color` flipped by the errors of steps `steps` of a sampled
/// simple-model configuration.
pub fn error_chain(
    view: &SuperlatticeView,
    config: &crate::channel::ErrorConfiguration,
    steps: std::ops::Range<usize>,
) -> Bits {
    let mut chain = Bits::zeros(view.num_edges());
    for s in steps {
        for (s_idx, se) in view.superedges.iter().enumerate() {
            for ty in 0..config.types_per_site {
                if config.get(s, se.base_edge, ty) {
                    chain.flip(s_idx);
                }
            }
        }
    }
    chain
}

/// Monte Carlo decoding fidelity with a Wilson interval on the success rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityEstimate {
    /// Mean over trials of `max_κ P_{s,κ} / P_s`.
    pub fidelity: f64,
    pub stderr: f64,
    pub successes: usize,
    pub trials: usize,
    /// 95% Wilson interval of `successes / trials`.
    pub wilson: (f64, f64),
}

pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let ph = successes as f64 / n;
    let den = 1.0 + z * z / n;
    let centre = (ph + z * z / (2.0 * n)) / den;
    let half = z * (ph * (1.0 - ph) / n + z * z / (4.0 * n * n)).sqrt() / den;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Which decoder [`decode_trials`] runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecoderKind {
    MaximumLikelihood,
    Matching,
}

/// Outcome of one sampled period on one color.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialDecode {
    pub max_ratio: f64,
    pub success: bool,
}

/// Sample one period of simple errors per trial and decode `color`.
pub fn decode_trials(
    lat: &ColoredTorusLattice,
    model: &SimpleErrorModel,
    color: Color,
    trials: usize,
    seed: u64,
    kind: DecoderKind,
) -> Result<Vec<TrialDecode>> {
    let view = superlattice(lat, color);
    let graph = SeamGraph::from_superlattice(&view);
    let pt = superedge_rate(model, color);
    let em = ErrorModel::Simple(model.clone());
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let cfg = sample_steps(&em, lat, 3 * t..3 * t + 3, seed);
            let chain = error_chain(&view, &cfg, 0..3);
            let defects: Vec<usize> = graph.boundary(&chain).ones().collect();
            let (dec, ratio) = match kind {
                DecoderKind::MaximumLikelihood => {
                    let (d, probs) = ml_decode(lat, &view, &defects, pt)?;
                    (d, probs.max_ratio())
                }
                DecoderKind::Matching => (matching_decode(&view, &defects)?, f64::NAN),
            };
            let mut residual = chain.clone();
            for e in &dec.recovery {
                residual.flip(*e);
            }
            Ok(TrialDecode {
                max_ratio: ratio,
                success: graph.winding(&residual) == [false; 2],
            })
        })
        .collect()
}

/// Fidelity `Σ_s P_s max_κ P_{s,κ}/P_s` of maximum-likelihood decoding of
/// `color`, estimated over sampled syndromes.
pub fn ml_fidelity(
    lat: &ColoredTorusLattice,
    model: &SimpleErrorModel,
    color: Color,
    trials: usize,
    seed: u64,
) -> Result<FidelityEstimate> {
    if trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    let out = decode_trials(lat, model, color, trials, seed, DecoderKind::MaximumLikelihood)?;
    let ratios: Vec<f64> = out.iter().map(|t| t.max_ratio).collect();
    let (fidelity, stderr) = crate::statmech::rbim::mean_stderr(&ratios);
    let successes = out.iter().filter(|t| t.success).count();
    Ok(FidelityEstimate {
        fidelity,
        stderr,
        successes,
        trials,
        wilson: wilson_interval(successes, trials, 1.96),
    })
}

/// Geometry of the single-`X` model: the graph of green and blue edges.
///
/// Its contractible cycles are the domain walls of kagome spins sitting on
/// red edges; the bond dual to a green or blue edge joins the red edges of
/// the edge's two plaquettes.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KagomeGeometry {
    /// Base index of each green or blue edge, in index order.
    pub edges: Vec<usize>,
    pub is_green: Vec<bool>,
    /// Base index of each red edge (one kagome spin each).
    pub spins: Vec<usize>,
    /// Spin pair of the kagome bond dual to each edge in `edges`.
    pub bonds: Vec<(usize, usize)>,
    pub graph: SeamGraph,
}

impl KagomeGeometry {
    pub fn new(lat: &ColoredTorusLattice) -> Self {
        let edges: Vec<usize> = (0..lat.edges.len()).filter(|&e| lat.edges[e].color != Color::R).collect();
        let is_green = edges.iter().map(|&e| lat.edges[e].color == Color::G).collect();
        let spins: Vec<usize> = lat.edges_of_color(Color::R).collect();
        let mut spin_of = vec![usize::MAX; lat.edges.len()];
        for (i, &e) in spins.iter().enumerate() {
            spin_of[e] = i;
        }
        let bonds = edges
            .iter()
            .map(|&e| {
                let [p, q] = lat.edges[e].plaquettes;
                let r = |pl: usize| spin_of[lat.plaquettes[pl].edges[Color::R.index()]];
                (r(p), r(q))
            })
            .collect();
        let graph = SeamGraph::new(
            lat.vertices.len(),
            edges.iter().map(|&e| (lat.edges[e].vertices, lat.edge_crossing(e))).collect(),
        );
        KagomeGeometry {
            edges,
            is_green,
            spins,
            bonds,
            graph,
        }
    }

    /// Edges whose checks are flipped in each period, from per-period error
    /// bits `x[τ][k]` over plaquettes (`k = 0` before round G, `1` before B).
    ///
    /// A green edge in period `τ` is flipped by the parity of `x(τ-1, 2)` and
    /// `x(τ, 1)` on its two plaquettes; a blue edge by `x(τ, 1)` and `x(τ, 2)`.
    pub fn flipped_checks(&self, lat: &ColoredTorusLattice, x: &[[Bits; 2]]) -> Vec<Bits> {
        let n = lat.num_qubits();
        let none = Bits::zeros(n);
        (0..x.len())
            .map(|t| {
                let (a, b) = if t == 0 { (&none, &x[0][0]) } else { (&x[t - 1][1], &x[t][0]) };
                let mut f = Bits::zeros(self.edges.len());
                for (i, &e) in self.edges.iter().enumerate() {
                    let [p, q] = lat.edges[e].plaquettes;
                    let v = if self.is_green[i] {
                        a.get(p) ^ a.get(q) ^ b.get(p) ^ b.get(q)
                    } else {
                        x[t][0].get(p) ^ x[t][0].get(q) ^ x[t][1].get(p) ^ x[t][1].get(q)
                    };
                    f.set(i, v);
                }
                f
            })
            .collect()
    }

    /// Syndrome per period: the boundary of the flipped checks. On red
    /// vertices this is `s_R(τ)`, on blue `s_B(τ)` and on green `s_G(τ+1)`.
    pub fn syndrome(&self, flipped: &[Bits]) -> Vec<Bits> {
        flipped.iter().map(|f| self.graph.boundary(f)).collect()
    }

    /// Class of flipped checks relative to the class-00 reference strings.
    pub fn classes(&self, flipped: &[Bits]) -> Result<Vec<[bool; 2]>> {
        flipped
            .iter()
            .map(|f| {
                let s: Vec<usize> = self.graph.boundary(f).ones().collect();
                let r = self.graph.reference_string(&s, [false; 2])?;
                Ok(self.graph.winding(&f.xor(&r)))
            })
            .collect()
    }
}

/// The kagome model for given syndromes and a class vector.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KagomeModelInstance<T> {
    pub periods: usize,
    /// `h = ½ log((1 - p)/p)`.
    pub h: T,
    pub p: T,
    /// Reference flipped checks `E⁰(τ)` (`η = -1` where set), per period.
    pub eta: Vec<Bits>,
}

/// Binary variables summed by [`kagome_class_probability`].
pub const KAGOME_BUDGET: usize = 24;

impl<T: Scalar> KagomeModelInstance<T> {
    pub fn new(geom: &KagomeGeometry, syndrome: &[Bits], kappa: &[[bool; 2]], p: T) -> Result<Self> {
        if syndrome.len() != kappa.len() {
            return Err(Error::SizeMismatch(syndrome.len(), kappa.len()));
        }
        if !(p > T::zero() && p < T::of(0.5)) {
            return Err(Error::InvalidArgument(format!("rate {p} outside (0, 1/2)")));
        }
        let eta = syndrome
            .iter()
            .zip(kappa)
            .map(|(s, &k)| geom.graph.reference_string(&s.ones().collect::<Vec<_>>(), k))
            .collect::<Result<_>>()?;
        Ok(KagomeModelInstance {
            periods: syndrome.len(),
            h: T::of(0.5) * ((T::one() - p) / p).ln(),
            p,
            eta,
        })
    }

    /// One term of the double sum for spins `sigma[τ]` (set bit = `-1`) and
    /// error bits `x[τ][k]`: the product of the parity projectors
    /// `(1 + η σσ x x x x)/2` and the fields `e^{h x}`.
    pub fn summand(&self, geom: &KagomeGeometry, lat: &ColoredTorusLattice, sigma: &[Bits], x: &[[Bits; 2]]) -> T {
        let flipped = geom.flipped_checks(lat, x);
        let half = T::of(0.5);
        let mut w = T::one();
        for t in 0..self.periods {
            for (i, &(a, b)) in geom.bonds.iter().enumerate() {
                let eta = if self.eta[t].get(i) { -T::one() } else { T::one() };
                let ss = if sigma[t].get(a) ^ sigma[t].get(b) { -T::one() } else { T::one() };
                let y = if flipped[t].get(i) { -T::one() } else { T::one() };
                w = w * half * (T::one() + eta * ss * y);
            }
            for k in 0..2 {
                let down = x[t][k].count_ones() as f64;
                let up = x[t][k].len() as f64 - down;
                w = w * (self.h * T::of(up - down)).exp();
            }
        }
        w
    }
}

/// Exact evaluation of the kagome double sum for every syndrome of a fixed
/// lattice, number of periods and rate.
///
/// The field weights `Π e^{h x}` are binned once by the flipped-check pattern
/// they induce; the spin sum then picks, for each spin configuration, the one
/// bin its parity projectors select. Results are normalized to probabilities:
/// the double sum times `(p(1-p))^{M/2} / 2^T` with `M` error variables, since
/// each flipped-check configuration is reached by two spin configurations per
/// period.
pub struct KagomeEvaluator<T> {
    pub geometry: KagomeGeometry,
    pub periods: usize,
    pub p: T,
    bins: Vec<(u64, T)>,
}

impl<T: Scalar> KagomeEvaluator<T> {
    pub fn new(lat: &ColoredTorusLattice, periods: usize, p: T) -> Result<Self> {
        if !(p > T::zero() && p < T::of(0.5)) {
            return Err(Error::InvalidArgument(format!("rate {p} outside (0, 1/2)")));
        }
        let geometry = KagomeGeometry::new(lat);
        let n = lat.num_qubits();
        let m = 2 * n * periods;
        if m > KAGOME_BUDGET {
            return Err(Error::BudgetExceeded {
                what: "kagome error variables".into(),
                needed: m as u64,
                limit: KAGOME_BUDGET as u64,
            });
        }
        let ne = geometry.edges.len();
        let ns = geometry.spins.len();
        if ne * periods > 64 || ns * periods > 20 {
            return Err(Error::BudgetExceeded {
                what: "kagome spins".into(),
                needed: (ns * periods) as u64,
                limit: 20,
            });
        }
        // error bit (t, k, q) sits at position (2t + k) n + q
        let masks: Vec<u64> = (0..periods)
            .flat_map(|t| {
                let geometry = &geometry;
                (0..ne).map(move |i| {
                    let [a, b] = lat.edges[geometry.edges[i]].plaquettes;
                    let pair = (1u64 << a) | (1u64 << b);
                    if geometry.is_green[i] {
                        let prev = if t == 0 { 0 } else { pair << ((2 * t - 1) * n) };
                        prev | (pair << (2 * t * n))
                    } else {
                        (pair << (2 * t * n)) | (pair << ((2 * t + 1) * n))
                    }
                })
            })
            .collect();
        let h = T::of(0.5) * ((T::one() - p) / p).ln();
        let field: Vec<T> = (0..=m).map(|d| (h * T::of(m as f64 - 2.0 * d as f64)).exp()).collect();
        let mut bins: std::collections::HashMap<u64, T> = std::collections::HashMap::new();
        for cfg in 0..1u64 << m {
            let mut key = 0u64;
            for (b, &mk) in masks.iter().enumerate() {
                key |= (((cfg & mk).count_ones() & 1) as u64) << b;
            }
            let e = bins.entry(key).or_insert(T::zero());
            *e = *e + field[cfg.count_ones() as usize];
        }
        let mut bins: Vec<(u64, T)> = bins.into_iter().collect();
        bins.sort_by_key(|k| k.0);
        Ok(KagomeEvaluator {
            geometry,
            periods,
            p,
            bins,
        })
    }

    /// `P_{s,κ⃗}` for every class vector, in order of `Σ_τ 4^τ index(κ_τ)`.
    pub fn class_probabilities(&self, syndrome: &[Bits]) -> Result<Vec<(Vec<[bool; 2]>, T)>> {
        if syndrome.len() != self.periods {
            return Err(Error::SizeMismatch(syndrome.len(), self.periods));
        }
        let geom = &self.geometry;
        let (ne, ns, periods) = (geom.edges.len(), geom.spins.len(), self.periods);
        let m = 2 * self.num_qubits() * periods;
        let p = self.p;
        let norm = (p * (T::one() - p)).powf(T::of(m as f64 / 2.0)) / T::of(2f64.powi(periods as i32));
        let mut out = Vec::new();
        for kv in 0..1usize << (2 * periods) {
            let kappa: Vec<[bool; 2]> = (0..periods).map(|t| kappa_of((kv >> (2 * t)) & 3)).collect();
            let inst = KagomeModelInstance::new(geom, syndrome, &kappa, p)?;
            // each projector factor is 0 or 1, so for fixed spins only the bin
            // whose flipped checks equal η σσ on every bond survives
            let mut total = T::zero();
            for sig in 0..1u64 << (ns * periods) {
                let mut key = 0u64;
                for t in 0..periods {
                    for (i, &(a, b)) in geom.bonds.iter().enumerate() {
                        let wall = ((sig >> (t * ns + a)) ^ (sig >> (t * ns + b))) & 1 == 1;
                        key |= ((wall ^ inst.eta[t].get(i)) as u64) << (t * ne + i);
                    }
                }
                if let Ok(k) = self.bins.binary_search_by_key(&key, |b| b.0) {
                    total = total + self.bins[k].1;
                }
            }
            out.push((kappa, total * norm));
        }
        Ok(out)
    }

    fn num_qubits(&self) -> usize {
        // two plaquettes per red edge
        2 * self.geometry.spins.len()
    }
}

/// `P_{s,κ⃗}` for one syndrome history; see [`KagomeEvaluator`].
pub fn kagome_class_probability<T: Scalar>(
    lat: &ColoredTorusLattice,
    syndrome: &[Bits],
    p: T,
) -> Result<Vec<(Vec<[bool; 2]>, T)>> {
    KagomeEvaluator::new(lat, syndrome.len(), p)?.class_probabilities(syndrome)
}

/// Marginal `P_{s,κ} = Σ_{κ⃗} δ(κ = Σ_τ κ_τ) P_{s,κ⃗}`.
pub fn kagome_marginal<T: Scalar>(per_vector: &[(Vec<[bool; 2]>, T)]) -> [T; 4] {
    let mut out = [T::zero(); 4];
    for (kv, p) in per_vector {
        let mut k = [false; 2];
        for c in kv {
            k[0] ^= c[0];
            k[1] ^= c[1];
        }
        let i = kappa_index(k);
        out[i] = out[i] + *p;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_lattice;

    #[test]
    fn superplaquettes_are_triangles() {
        let lat = build_lattice(3, 2).unwrap();
        for c in [Color::R, Color::G, Color::B] {
            let view = superlattice(&lat, c);
            let g = SeamGraph::from_superlattice(&view);
            for cyc in superplaquette_cycles(&lat, &view) {
                assert_eq!(cyc.count_ones(), 3);
                assert!(g.boundary(&cyc).is_zero());
                assert_eq!(g.winding(&cyc), [false; 2]);
            }
        }
    }

    #[test]
    fn homology_loops_wind_once() {
        let lat = build_lattice(3, 3).unwrap();
        let g = SeamGraph::from_superlattice(&superlattice(&lat, Color::B));
        let l1 = g.homology_loop(Direction::L1);
        assert!(g.boundary(&l1).is_zero());
        assert_eq!(g.winding(&l1), [true, false]);
        assert_eq!(l1.count_ones(), 3);
        let k = KagomeGeometry::new(&lat);
        let l2 = k.graph.homology_loop(Direction::L2);
        assert!(k.graph.boundary(&l2).is_zero());
        assert_eq!(k.graph.winding(&l2), [false, true]);
    }

    #[test]
    fn pairings_agree_on_small_sets() {
        let d = vec![vec![0, 3, 1, 4], vec![3, 0, 2, 1], vec![1, 2, 0, 5], vec![4, 1, 5, 0]];
        let e = exact_pairing(&d);
        let cost: usize = e.iter().map(|&(a, b)| d[a][b]).sum();
        assert_eq!(cost, 2);
    }

    #[test]
    fn wilson_bounds() {
        let (lo, hi) = wilson_interval(50, 100, 1.96);
        assert!(lo < 0.5 && hi > 0.5 && lo > 0.39 && hi < 0.61);
        assert_eq!(wilson_interval(0, 10, 1.96).0, 0.0);
    }
}
