//! Exact density matrices as weighted sums over a commuting Pauli group.
//!
//! A state is stored as a basis `b_1, …, b_r` of commuting Hermitian Pauli
//! operators on a register (system qubits, one ancilla per measured check, a
//! logical ancilla and two reference qubits) together with a list of
//! functionals `f_j` and bases `x_j`. The density matrix is
//!
//! ```text
//! ρ = 2^{-q} Σ_{v ∈ F_2^r} c(v) g(v),   g(v) = Π b_i^{v_i},   c(v) = Π_j x_j^{f_j·v}
//! ```
//!
//! where `q` counts the active register qubits. A Pauli channel
//! `(1-p)ρ + p EρE` adds the functional "anticommutes with E" with base
//! `1-2p`; a measurement coupled to a fresh ancilla keeps the commuting
//! subgroup and appends the generator `E ⊗ Z_anc`. Every weight is therefore
//! a product of `(1-2p)` powers and the `2^r` terms never need to be listed.
//!
//! Moments `tr(ρ_1⋯ρ_n)` reduce to a convolution of the coefficient
//! functions at zero. The functionals are split into independent blocks
//! (connected components of the binary matroid they span) and each block is
//! evaluated with a Walsh-Hadamard transform.

use crate::channel::{SimpleErrorModel, SIMPLE_TYPES};
use crate::code::{
    checks, edge_operator, logical_chain, logical_pair, logical_string, logical_type, stabilizer_family, AnyonType,
};
use crate::error::{Error, Result};
use crate::gf2::{nullspace, Bits, Span};
use crate::lattice::{Color, ColoredTorusLattice, Direction};
use crate::pauli::{Pauli, PauliString};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Largest block dimension evaluated by the moment routine.
pub const MAX_BLOCK_DIM: usize = 24;

/// Fixed qubit layout shared by every state built on one lattice.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Register {
    pub system: usize,
    pub per_round: usize,
    pub first_time: i32,
    pub last_time: i32,
}

impl Register {
    pub fn new(lat: &ColoredTorusLattice) -> Self {
        Register {
            system: lat.num_qubits(),
            per_round: 3 * lat.num_cells(),
            first_time: -3,
            last_time: 4,
        }
    }

    pub fn logical_ancilla(&self) -> usize {
        self.system
    }

    pub fn reference(&self, k: usize) -> usize {
        self.system + 1 + k
    }

    pub fn ancilla(&self, t: i32, k: usize) -> usize {
        debug_assert!(t >= self.first_time && t <= self.last_time && k < self.per_round);
        self.system + 3 + (t - self.first_time) as usize * self.per_round + k
    }

    pub fn size(&self) -> usize {
        self.system + 3 + (self.last_time - self.first_time + 1) as usize * self.per_round
    }

    /// System operator placed on the register.
    pub fn embed(&self, op: &PauliString) -> PauliString {
        op.embed(self.size(), 0)
    }

    pub fn z_on(&self, qubits: impl IntoIterator<Item = usize>) -> PauliString {
        PauliString::uniform(self.size(), Pauli::Z, qubits)
    }
}

/// Where a functional came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Source {
    /// Error `E_color^basis` on `edge` applied at time `step`.
    Noise { step: i32, edge: usize, color: Color, basis: Pauli },
    /// Membership constraint or sign character introduced for mixed traces.
    Auxiliary,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Functional {
    pub f: Bits,
    pub base: f64,
    pub source: Source,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeightedPauliState {
    pub register: Register,
    pub basis: Vec<PauliString>,
    pub functionals: Vec<Functional>,
    /// Register qubits that belong to the state's Hilbert space.
    pub active: Bits,
}

impl WeightedPauliState {
    /// `I / 2^N` on the system qubits.
    pub fn maximally_mixed(lat: &ColoredTorusLattice) -> Self {
        let register = Register::new(lat);
        let active = Bits::from_indices(register.size(), 0..register.system);
        WeightedPauliState {
            register,
            basis: Vec::new(),
            functionals: Vec::new(),
            active,
        }
    }

    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    pub fn active_qubits(&self) -> usize {
        self.active.count_ones() as usize
    }

    /// Number of Pauli terms in the expansion.
    pub fn num_terms(&self) -> f64 {
        2f64.powi(self.basis.len() as i32)
    }

    fn anticommutation(&self, op: &PauliString) -> Bits {
        Bits::from_bools(&self.basis.iter().map(|b| !b.commutes(op)).collect::<Vec<_>>())
    }

    fn push_generator(&mut self, g: PauliString) {
        self.basis.push(g);
        for f in self.functionals.iter_mut() {
            f.f.push(false);
        }
    }

    /// Keep only the terms commuting with `op`.
    fn restrict_to_commutant(&mut self, op: &PauliString) {
        let a = self.anticommutation(op);
        let Some(i) = a.first_one() else { return };
        let pivot = self.basis[i].clone();
        for j in a.ones().filter(|&j| j != i) {
            self.basis[j].mul_assign(&pivot);
        }
        self.basis.remove(i);
        for fun in self.functionals.iter_mut() {
            if fun.f.get(i) {
                fun.f.xor_assign(&a);
            }
            fun.f.remove(i);
        }
        self.functionals.retain(|f| !f.f.is_zero());
    }

    /// Measurement of a register operator recorded on ancilla `anc`.
    pub fn measure(&mut self, op: &PauliString, anc: usize) -> Result<()> {
        if self.active.get(anc) {
            return Err(Error::InvalidArgument(format!("ancilla {anc} already in use")));
        }
        if op.x.get(anc) || op.z.get(anc) {
            return Err(Error::InvalidArgument("measured operator acts on its own ancilla".into()));
        }
        self.restrict_to_commutant(op);
        self.active.set(anc, true);
        let mut g = op.unsigned();
        g.z.set(anc, true);
        self.push_generator(g.unsigned());
        Ok(())
    }

    /// Measure every check of `round` at time `t`, ancillas in edge order.
    pub fn measure_round(&mut self, lat: &ColoredTorusLattice, round: Color, t: i32) -> Result<()> {
        for (k, c) in checks(lat, round).iter().enumerate() {
            let op = self.register.embed(&c.op);
            self.measure(&op, self.register.ancilla(t, k))?;
        }
        Ok(())
    }

    /// Direct measurement of `V_R^X` and `V_G^Y` at time `t`.
    pub fn measure_vertex_round(&mut self, lat: &ColoredTorusLattice, t: i32) -> Result<()> {
        let mut k = 0;
        for c in [Color::R, Color::G] {
            for v in stabilizer_family(lat, c) {
                let op = self.register.embed(&v.op);
                self.measure(&op, self.register.ancilla(t, k))?;
                k += 1;
            }
        }
        Ok(())
    }

    /// `(1-p)ρ + p EρE`.
    pub fn apply_error(&mut self, op: &PauliString, p: f64, source: Source) {
        let a = self.anticommutation(op);
        if a.is_zero() || p == 0.0 {
            return;
        }
        self.functionals.push(Functional {
            f: a,
            base: 1.0 - 2.0 * p,
            source,
        });
    }

    /// The simple error channel on every edge at time `step`.
    pub fn apply_channel(&mut self, lat: &ColoredTorusLattice, model: &SimpleErrorModel, step: i32) {
        for (t, &p) in SIMPLE_TYPES.iter().zip(&model.rates) {
            for e in lat.edges_of_color(t.color) {
                let op = self.register.embed(&edge_operator(lat, e, t.basis));
                self.apply_error(
                    &op,
                    p,
                    Source::Noise {
                        step,
                        edge: e,
                        color: t.color,
                        basis: t.basis,
                    },
                );
            }
        }
    }

    /// Multiply by `(1 + g)` for a commuting operator `g` acting on newly
    /// activated qubits `fresh`.
    pub fn add_generator(&mut self, g: &PauliString, fresh: &[usize]) -> Result<()> {
        for &q in fresh {
            if self.active.get(q) {
                return Err(Error::InvalidArgument(format!("qubit {q} already active")));
            }
        }
        if self.basis.iter().any(|b| !b.commutes(g)) {
            return Err(Error::InvalidArgument("generator must commute with the state".into()));
        }
        for &q in fresh {
            self.active.set(q, true);
        }
        self.push_generator(g.clone());
        Ok(())
    }

    /// Conjugation by `C = P_+(Z_C) + P_-(Z_C) K`: basis elements that
    /// anticommute with `K` pick up `Z_C`.
    pub fn conjugate_controlled(&mut self, k: &PauliString, z_c: &PauliString) {
        for b in self.basis.iter_mut() {
            if !b.commutes(k) {
                b.mul_assign(z_c);
            }
        }
    }

    /// Group element (signed) with the given coordinates.
    pub fn element(&self, v: &Bits) -> PauliString {
        let mut g = PauliString::identity(self.register.size());
        for i in v.ones() {
            g.mul_assign(&self.basis[i]);
        }
        g
    }

    /// Coefficient `c(v)`.
    pub fn coefficient(&self, v: &Bits) -> f64 {
        self.functionals
            .iter()
            .filter(|f| f.f.dot(v))
            .map(|f| f.base)
            .product()
    }

    /// Number of noise functionals that flip on `v`: the weight is
    /// `(1-2p)^k` for a uniform model.
    pub fn weight_exponent(&self, v: &Bits) -> usize {
        self.functionals
            .iter()
            .filter(|f| matches!(f.source, Source::Noise { .. }) && f.f.dot(v))
            .count()
    }

    /// Coordinates of a group element equal to `op` up to sign.
    pub fn coordinates(&self, op: &PauliString) -> Option<Bits> {
        let mut span = Span::new(2 * self.register.size(), self.basis.len().max(1));
        for b in &self.basis {
            span.insert(&b.symplectic());
        }
        span.express(&op.symplectic())
    }

    /// Every term `(coordinates, operator, weight)`, for small states only.
    pub fn terms(&self) -> Result<Vec<(Bits, PauliString, f64)>> {
        let r = self.basis.len();
        if r > 20 {
            return Err(Error::BudgetExceeded {
                what: "explicit term listing".into(),
                needed: 1u64 << r.min(63),
                limit: 1 << 20,
            });
        }
        Ok((0u64..(1u64 << r))
            .map(|m| {
                let v = Bits::from_indices(r, (0..r).filter(|&i| m >> i & 1 == 1));
                let g = self.element(&v);
                let w = self.coefficient(&v);
                (v, g, w)
            })
            .collect())
    }

    /// Debug dump of the term table.
    pub fn terms_csv(&self) -> Result<String> {
        let mut out = String::from("coordinates,operator,weight\n");
        for (v, g, w) in self.terms()? {
            out.push_str(&format!("{v:?},{g},{w:e}\n"));
        }
        Ok(out)
    }

    /// Functionals with identical vectors grouped together, noise only:
    /// `(functional, sources)`.
    pub fn noise_classes(&self) -> Vec<(Bits, Vec<Source>)> {
        let mut map: HashMap<Bits, Vec<Source>> = HashMap::new();
        for f in &self.functionals {
            if matches!(f.source, Source::Noise { .. }) && !f.f.is_zero() {
                map.entry(f.f.clone()).or_default().push(f.source);
            }
        }
        let mut v: Vec<_> = map.into_iter().collect();
        v.sort_by(|a, b| a.0.cmp(&b.0));
        v
    }
}

/// Warm-up R, G, B, R at `t = -3..0` from the maximally mixed state.
pub fn warmup(lat: &ColoredTorusLattice) -> Result<WeightedPauliState> {
    let mut s = WeightedPauliState::maximally_mixed(lat);
    for (t, round) in (-3..=0).zip(crate::code::WARMUP) {
        s.measure_round(lat, round, t)?;
    }
    Ok(s)
}

pub use crate::code::Variant;

/// Noise at `t = 0..3`, then measurements at `t = 1..4`.
fn evolve(
    s: &mut WeightedPauliState,
    lat: &ColoredTorusLattice,
    model: &SimpleErrorModel,
    variant: Variant,
) -> Result<()> {
    let rounds = [Color::G, Color::B, Color::R, Color::G];
    for (k, &round) in rounds.iter().enumerate() {
        let t = k as i32 + 1;
        s.apply_channel(lat, model, t - 1);
        if variant == Variant::Toric && round == Color::B {
            s.measure_vertex_round(lat, t)?;
        } else {
            s.measure_round(lat, round, t)?;
        }
    }
    Ok(())
}

/// The four states entering the diagnostics, with `ρ_1` already rotated.
#[derive(Clone, Debug)]
pub struct DiagnosticStates {
    pub rho1: WeightedPauliState,
    pub rho2: WeightedPauliState,
    pub rho_qm: WeightedPauliState,
    pub rho_qmr: WeightedPauliState,
    /// Label of the round-G logical carried by `ρ_1` at the end.
    pub rho1_logical: crate::code::LogicalLabel,
}

fn lbl(c: Color, a: Pauli) -> crate::code::LogicalLabel {
    crate::code::LogicalLabel::new(c, a)
}

/// `Z` on the ancillas that recorded the checks turning each representative
/// of the chain into the next.
fn chain_ancillas(
    reg: &Register,
    lat: &ColoredTorusLattice,
    chain: &[crate::code::ChainStep],
) -> PauliString {
    let mut qubits = Vec::new();
    for (k, w) in chain.windows(2).enumerate() {
        let prev = checks(lat, w[0].round);
        for e in &w[1].via {
            let idx = prev.iter().position(|c| c.edge == *e).expect("via edge is a check");
            qubits.push(reg.ancilla(k as i32, idx));
        }
    }
    reg.z_on(qubits)
}

pub fn build_states_for_diagnostics(
    lat: &ColoredTorusLattice,
    model: &SimpleErrorModel,
    variant: Variant,
    direction: Direction,
) -> Result<DiagnosticStates> {
    let base = warmup(lat)?;
    let reg = base.register.clone();
    let zl = reg.logical_ancilla();
    let emb = |l: crate::code::LogicalLabel, d: Direction| reg.embed(&logical_string(lat, l, d, [0, 0]));

    // ρ_1: L_B^X ⊗ Z_L at t = 0, evolve, rotate.
    let mut rho1 = base.clone();
    let init = emb(lbl(Color::B, Pauli::X), direction).mul(&reg.z_on([zl]));
    rho1.add_generator(&init, &[zl])?;
    evolve(&mut rho1, lat, model, variant)?;
    // The toric schedule only moves the logical in its first round.
    let rounds: &[Color] = match variant {
        Variant::Floquet => &[Color::G, Color::B, Color::R, Color::G],
        Variant::Toric => &[Color::G],
    };
    let chain = logical_chain(lat, Color::R, lbl(Color::B, Pauli::X), direction, rounds)?;
    let last = chain.last().expect("chain has a start");
    let label = last.label;
    let kind = logical_type(Color::G, label)
        .ok_or_else(|| Error::Inconsistent("evolved logical of ρ_1 is not a round-G logical".into()))?;
    let z_c = chain_ancillas(&reg, lat, &chain);
    let l_final = reg.embed(&last.op.unsigned());
    if rho1.coordinates(&l_final.mul(&reg.z_on([zl])).mul(&z_c)).is_none() {
        return Err(Error::Inconsistent("chain ancillas do not complete the logical".into()));
    }
    let other = match kind {
        AnyonType::E => AnyonType::M,
        AnyonType::M => AnyonType::E,
    };
    let k = logical_pair(Color::G, other)
        .into_iter()
        .map(|l| emb(l, direction.other()))
        .find(|k| !k.commutes(&l_final))
        .ok_or_else(|| Error::Inconsistent("no conjugate logical for the rotation".into()))?;
    rho1.conjugate_controlled(&k, &z_c);
    let check = l_final.mul(&reg.z_on([zl]));
    if rho1.coordinates(&check).is_none() {
        return Err(Error::Inconsistent("rotation did not decouple the logical".into()));
    }

    // ρ_2 and ρ_QM: plain evolution; ρ_2 then measures L_R^Y into Z_L.
    let mut rho_qm = base.clone();
    evolve(&mut rho_qm, lat, model, variant)?;
    let mut rho2 = rho_qm.clone();
    rho2.measure(&emb(lbl(Color::R, Pauli::Y), direction), zl)?;

    // ρ_QMR: logical qubit k has Z = L_R^Y along direction k and
    // X = L_B^X along the other direction.
    let mut rho_qmr = base;
    for (kq, d) in Direction::ALL.into_iter().enumerate() {
        let r = reg.reference(kq);
        let gz = emb(lbl(Color::R, Pauli::Y), d).mul(&reg.z_on([r]));
        let gx = emb(lbl(Color::B, Pauli::X), d.other()).mul(&PauliString::uniform(reg.size(), Pauli::X, [r]));
        rho_qmr.add_generator(&gz, &[r])?;
        rho_qmr.add_generator(&gx, &[])?;
    }
    evolve(&mut rho_qmr, lat, model, variant)?;

    Ok(DiagnosticStates {
        rho1,
        rho2,
        rho_qm,
        rho_qmr,
        rho1_logical: label,
    })
}

fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 64 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Walsh-Hadamard transform in place.
fn wht(a: &mut [f64]) {
    let n = a.len();
    let mut h = 1;
    while h < n {
        for i in (0..n).step_by(2 * h) {
            for j in i..i + h {
                let (x, y) = (a[j], a[j + h]);
                a[j] = x + y;
                a[j + h] = x - y;
            }
        }
        h *= 2;
    }
}

/// A positive number `2^pow2 · e^ln`, kept split so that ratios of moments
/// with large common powers of two stay accurate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogMoment {
    pub pow2: i64,
    pub ln: f64,
}

impl LogMoment {
    pub const ZERO: LogMoment = LogMoment { pow2: 0, ln: f64::NEG_INFINITY };

    /// Natural logarithm of the value.
    pub fn value(&self) -> f64 {
        self.pow2 as f64 * std::f64::consts::LN_2 + self.ln
    }

    /// `ln(self / other)`.
    pub fn ln_ratio(&self, other: &LogMoment) -> f64 {
        (self.pow2 - other.pow2) as f64 * std::f64::consts::LN_2 + (self.ln - other.ln)
    }
}

/// `ln tr(ρ_1 ρ_2 ⋯ ρ_n)` for states with mutually commuting groups.
pub fn log_moment(states: &[&WeightedPauliState]) -> Result<f64> {
    Ok(moment(states)?.value())
}

/// `tr(ρ_1 ρ_2 ⋯ ρ_n)` in split form.
pub fn moment(states: &[&WeightedPauliState]) -> Result<LogMoment> {
    let n = states.len();
    if n == 0 {
        return Err(Error::InvalidArgument("moment of an empty product".into()));
    }
    let reg = &states[0].register;
    let q = states[0].active_qubits();
    for s in states {
        if s.register != *reg || s.active != states[0].active {
            return Err(Error::InvalidArgument("states do not share a register layout".into()));
        }
    }
    // Common basis of the union of the groups.
    let size = 2 * reg.size();
    let cap: usize = states.iter().map(|s| s.basis.len()).sum::<usize>().max(1);
    let mut span = Span::new(size, cap);
    let mut common: Vec<PauliString> = Vec::new();
    for s in states {
        for b in &s.basis {
            if span.insert(&b.symplectic()).is_some() {
                common.push(b.clone());
            }
        }
    }
    let r = common.len();
    if r == 0 {
        return Ok(LogMoment { pow2: (1 - n as i64) * q as i64, ln: 0.0 });
    }
    for s in states {
        for b in &s.basis {
            if common.iter().any(|c| !c.commutes(b)) {
                return Err(Error::InvalidArgument("state groups do not commute".into()));
            }
        }
    }
    // Per-state functionals over common coordinates.
    let mut per_state: Vec<Vec<(Bits, f64)>> = Vec::with_capacity(n);
    for s in states {
        let rk = s.basis.len();
        let mut funs: Vec<(Bits, f64)> = Vec::new();
        // Columns w_i (common coordinates of b_i) and signs.
        let mut cols = Vec::with_capacity(rk);
        let mut signs = Bits::zeros(rk);
        for (i, b) in s.basis.iter().enumerate() {
            let w = span.express(&b.symplectic()).expect("in span");
            let w = w.slice(0, r);
            let mut g = PauliString::identity(reg.size());
            for j in w.ones() {
                g.mul_assign(&common[j]);
            }
            if g.sign() != b.sign() {
                signs.set(i, true);
            }
            cols.push(w);
        }
        let pinv = left_inverse(&cols, r);
        let lift = |f: &Bits| -> Bits {
            let mut out = Bits::zeros(r);
            for i in f.ones() {
                out.xor_assign(&pinv[i]);
            }
            out
        };
        for fun in &s.functionals {
            let g = lift(&fun.f);
            if !g.is_zero() {
                funs.push((g, fun.base));
            }
        }
        if !signs.is_zero() {
            funs.push((lift(&signs), -1.0));
        }
        if rk < r {
            for h in nullspace(&cols, r) {
                funs.push((h, 0.0));
            }
        }
        per_state.push(funs);
    }
    // Basis of the functional span and coordinates of each functional in it.
    let total: usize = per_state.iter().map(|f| f.len()).sum();
    let mut fspan = Span::new(r.max(1), total.max(1));
    for funs in &per_state {
        for (f, _) in funs {
            fspan.insert(f);
        }
    }
    let d = fspan.rank();
    let mut coords: Vec<Vec<(Bits, f64)>> = Vec::with_capacity(n);
    for funs in &per_state {
        let mut merged: HashMap<Bits, f64> = HashMap::new();
        for (f, b) in funs {
            let a = fspan.express(f).expect("in span").slice(0, d);
            *merged.entry(a).or_insert(1.0) *= *b;
        }
        let mut v: Vec<_> = merged.into_iter().filter(|(_, b)| *b != 1.0).collect();
        v.sort_by(|a, b| a.0.cmp(&b.0));
        coords.push(v);
    }
    // Connected components over the d coordinates.
    let mut parent: Vec<usize> = (0..d).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut x = x;
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for funs in &coords {
        for (a, _) in funs {
            let mut it = a.ones();
            if let Some(first) = it.next() {
                for j in it {
                    let (ra, rb) = (find(&mut parent, first), find(&mut parent, j));
                    parent[ra] = rb;
                }
            }
        }
    }
    let mut comp_of: HashMap<usize, Vec<usize>> = HashMap::new();
    for j in 0..d {
        let root = find(&mut parent, j);
        comp_of.entry(root).or_default().push(j);
    }
    let mut comps: Vec<Vec<usize>> = comp_of.into_values().collect();
    comps.sort();
    let mut pow2 = ((r - d) * (n - 1)) as i64 + (1 - n as i64) * q as i64;
    let mut ln = 0.0f64;
    for comp in &comps {
        let dc = comp.len();
        if dc > MAX_BLOCK_DIM {
            return Err(Error::BudgetExceeded {
                what: "moment block dimension".into(),
                needed: dc as u64,
                limit: MAX_BLOCK_DIM as u64,
            });
        }
        let local: HashMap<usize, usize> = comp.iter().enumerate().map(|(k, &j)| (j, k)).collect();
        let size = 1usize << dc;
        let mut prod = vec![1.0f64; size];
        // For two factors the convolution at zero is a plain inner product.
        let direct = n == 2;
        for funs in &coords {
            let mut table = vec![1.0f64; size];
            for (a, b) in funs {
                let Some(first) = a.first_one() else { continue };
                if !local.contains_key(&first) {
                    continue;
                }
                let mut mask = 0usize;
                for j in a.ones() {
                    mask |= 1 << local[&j];
                }
                for (y, t) in table.iter_mut().enumerate() {
                    if (y & mask).count_ones() & 1 == 1 {
                        *t *= b;
                    }
                }
            }
            if !direct {
                wht(&mut table);
            }
            for (p, t) in prod.iter_mut().zip(&table) {
                *p *= t;
            }
        }
        let mut s = pairwise_sum(&prod);
        if !direct {
            s /= size as f64;
        }
        if s <= 0.0 {
            if s.abs() < 1e-300 {
                return Ok(LogMoment::ZERO);
            }
            return Err(Error::Inconsistent(format!("negative moment block {s}")));
        }
        // s ≤ 2^{(n-1) dc}; keep the power of two exact.
        let shift = ((n - 1) * dc) as i32;
        pow2 += shift as i64;
        ln += (s * 2f64.powi(-shift)).ln();
    }
    Ok(LogMoment { pow2, ln })
}

/// Rows `p_i` with `p_i · w_k = δ_ik` for independent columns `w_k`.
///
/// Gauss-Jordan on `[w | I]` gives rows `w'_j = Σ_k E_jk w_k` with unit
/// pivots; the unit functional at pivot `j` then evaluates to `(E^{-1})_kj`
/// on `w_k`, so `p_i = Σ_j E_ji u_j`.
fn left_inverse(cols: &[Bits], r: usize) -> Vec<Bits> {
    let k = cols.len();
    let mut rows: Vec<(Bits, Bits)> = cols
        .iter()
        .enumerate()
        .map(|(i, w)| (w.clone(), Bits::unit(k, i)))
        .collect();
    let mut pivots = Vec::with_capacity(k);
    for i in 0..k {
        let p = rows[i].0.first_one().expect("independent columns");
        let (pw, pe) = rows[i].clone();
        for (j, row) in rows.iter_mut().enumerate() {
            if j != i && row.0.get(p) {
                row.0.xor_assign(&pw);
                row.1.xor_assign(&pe);
            }
        }
        pivots.push(p);
    }
    let mut out = vec![Bits::zeros(r); k];
    for (j, (_, e)) in rows.iter().enumerate() {
        for i in e.ones() {
            out[i].flip(pivots[j]);
        }
    }
    out
}

/// Diagnostics from the oracle states.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleDiagnostics {
    pub n: usize,
    pub d_em: f64,
    pub i_c: f64,
}

pub fn oracle_diagnostics(states: &DiagnosticStates, n: usize) -> Result<OracleDiagnostics> {
    if n < 2 {
        return Err(Error::InvalidArgument("Renyi index must be at least 2".into()));
    }
    let mut mixed: Vec<&WeightedPauliState> = vec![&states.rho2];
    mixed.extend(std::iter::repeat(&states.rho1).take(n - 1));
    let num = moment(&mixed)?;
    let den = moment(&vec![&states.rho2; n])?;
    let d_em = num.ln_ratio(&den) / (1.0 - n as f64);
    let qm = moment(&vec![&states.rho_qm; n])?;
    let qmr = moment(&vec![&states.rho_qmr; n])?;
    let i_c = qm.ln_ratio(&qmr) / (1.0 - n as f64);
    Ok(OracleDiagnostics { n, d_em, i_c })
}
