//! Operator families of the honeycomb Floquet code and its measurement schedule.
//!
//! Round `b` measures the two-qubit checks `E_b^a` on every b-colored edge,
//! with `a = X, Y, Z` for `b = R, G, B`. Vertex operators `V_b^a` act on the
//! six plaquettes around a b-colored vertex, and logicals `L_c^a` are products
//! of `E_c^a` along a non-contractible cycle of the c-superlattice.

use crate::error::{Error, Result};
use crate::gf2::{Bits, Span};
use crate::lattice::{loop_at, Color, ColoredTorusLattice, Direction};
use crate::pauli::{OutcomePolicy, Pauli, PauliString, StabilizerTableau};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Check basis measured in round `b`.
pub fn round_basis(b: Color) -> Pauli {
    match b {
        Color::R => Pauli::X,
        Color::G => Pauli::Y,
        Color::B => Pauli::Z,
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckOperator {
    pub edge: usize,
    pub color: Color,
    pub basis: Pauli,
    pub op: PauliString,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VertexOperator {
    pub vertex: usize,
    pub basis: Pauli,
    pub op: PauliString,
}

/// `E^a` on the two plaquettes adjacent to edge `e`.
pub fn edge_operator(lat: &ColoredTorusLattice, e: usize, basis: Pauli) -> PauliString {
    PauliString::uniform(lat.num_qubits(), basis, lat.edges[e].plaquettes)
}

pub fn checks(lat: &ColoredTorusLattice, round: Color) -> Vec<CheckOperator> {
    let basis = round_basis(round);
    lat.edges_of_color(round)
        .map(|e| CheckOperator {
            edge: e,
            color: round,
            basis,
            op: edge_operator(lat, e, basis),
        })
        .collect()
}

pub fn vertex_operator(lat: &ColoredTorusLattice, vertex: usize, basis: Pauli) -> VertexOperator {
    VertexOperator {
        vertex,
        basis,
        op: PauliString::uniform(lat.num_qubits(), basis, lat.vertex_plaquettes[vertex]),
    }
}

/// The stabilizer family read out by the code: `V_R^X`, `V_G^Y`, `V_B^Z`.
pub fn stabilizer_family(lat: &ColoredTorusLattice, color: Color) -> Vec<VertexOperator> {
    lat.vertices_of_color(color)
        .map(|v| vertex_operator(lat, v, round_basis(color)))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LogicalLabel {
    pub color: Color,
    pub basis: Pauli,
}

impl LogicalLabel {
    pub fn new(color: Color, basis: Pauli) -> Self {
        LogicalLabel { color, basis }
    }
}

impl std::fmt::Display for LogicalLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "L_{}^{}", self.color, self.basis.letter())
    }
}

impl std::str::FromStr for LogicalLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim_start_matches("L_").replace('^', "");
        let mut cs = t.chars();
        let (Some(c), Some(a), None) = (cs.next(), cs.next(), cs.next()) else {
            return Err(Error::InvalidArgument(format!("bad logical label {s:?}")));
        };
        let color = Color::parse(c).ok_or_else(|| Error::InvalidArgument(format!("bad color in {s:?}")))?;
        let basis = match a.to_ascii_uppercase() {
            'X' => Pauli::X,
            'Y' => Pauli::Y,
            'Z' => Pauli::Z,
            _ => return Err(Error::InvalidArgument(format!("bad basis in {s:?}"))),
        };
        Ok(LogicalLabel { color, basis })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AnyonType {
    E,
    M,
}

/// Anyon type of `L_color^basis` in `round`, or `None` if it is not a logical there.
pub fn logical_type(round: Color, label: LogicalLabel) -> Option<AnyonType> {
    if label.basis == Pauli::I {
        return None;
    }
    let same = label.color == round;
    let a = round_basis(round);
    let valid = if same { label.basis != a } else { label.basis == a };
    if !valid {
        return None;
    }
    // Same-colored strings carry e in rounds R and B and m in round G.
    Some(match (round, same) {
        (Color::G, true) | (Color::R, false) | (Color::B, false) => AnyonType::M,
        _ => AnyonType::E,
    })
}

/// The two equivalent labels of the given type in `round`.
pub fn logical_pair(round: Color, kind: AnyonType) -> [LogicalLabel; 2] {
    let mut out = Vec::with_capacity(2);
    for c in Color::ALL {
        for a in [Pauli::X, Pauli::Y, Pauli::Z] {
            let l = LogicalLabel::new(c, a);
            if logical_type(round, l) == Some(kind) {
                out.push(l);
            }
        }
    }
    [out[0], out[1]]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LogicalOperator {
    pub label: LogicalLabel,
    pub round: Color,
    pub kind: AnyonType,
    pub direction: Direction,
    pub start: [usize; 2],
    pub op: PauliString,
}

/// Product of `E_color^basis` along the straight loop through `start`.
pub fn logical_string(
    lat: &ColoredTorusLattice,
    label: LogicalLabel,
    direction: Direction,
    start: [usize; 2],
) -> PauliString {
    let lp = loop_at(lat, direction, label.color, start);
    let mut op = PauliString::identity(lat.num_qubits());
    for &e in &lp.edges {
        op.mul_assign(&edge_operator(lat, e, label.basis));
    }
    op.unsigned()
}

pub fn logical(
    lat: &ColoredTorusLattice,
    round: Color,
    label: LogicalLabel,
    direction: Direction,
) -> Result<LogicalOperator> {
    logical_at(lat, round, label, direction, [0, 0])
}

pub fn logical_at(
    lat: &ColoredTorusLattice,
    round: Color,
    label: LogicalLabel,
    direction: Direction,
    start: [usize; 2],
) -> Result<LogicalOperator> {
    let kind = logical_type(round, label).ok_or_else(|| {
        Error::InvalidArgument(format!("{label} is not a logical operator of round {round}"))
    })?;
    Ok(LogicalOperator {
        label,
        round,
        kind,
        direction,
        start,
        op: logical_string(lat, label, direction, start),
    })
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub color: Option<Color>,
    /// Measured edges (or vertices for direct stabilizer rounds) in order.
    pub sites: Vec<usize>,
    /// `true` for outcome `-1`.
    pub outcomes: Vec<bool>,
    pub deterministic: Vec<bool>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub rounds: Vec<RoundRecord>,
}

impl MeasurementRecord {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }
}

/// Measure every check of one round in ascending edge order.
pub fn measure_round<R: Rng + ?Sized>(
    tab: &mut StabilizerTableau,
    lat: &ColoredTorusLattice,
    round: Color,
    policy: OutcomePolicy,
    rng: &mut R,
) -> Result<RoundRecord> {
    let mut rec = RoundRecord {
        color: Some(round),
        ..Default::default()
    };
    for c in checks(lat, round) {
        let r = tab.measure(&c.op, policy, rng)?;
        rec.sites.push(c.edge);
        rec.outcomes.push(r.outcome < 0);
        rec.deterministic.push(r.deterministic);
    }
    Ok(rec)
}

pub fn run_schedule<R: Rng + ?Sized>(
    tab: &mut StabilizerTableau,
    lat: &ColoredTorusLattice,
    rounds: &[Color],
    policy: OutcomePolicy,
    rng: &mut R,
) -> Result<MeasurementRecord> {
    if rounds.is_empty() {
        return Err(Error::InvalidArgument("schedule must contain at least one round".into()));
    }
    let mut rec = MeasurementRecord::default();
    for &b in rounds {
        rec.rounds.push(measure_round(tab, lat, b, policy, rng)?);
    }
    Ok(rec)
}

/// Measurement schedule of one period after the warm-up.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// Checks in the order G, B, R, G.
    Floquet,
    /// G, then `V_R^X` and `V_G^Y` directly, then R, G.
    Toric,
}

pub const WARMUP: [Color; 4] = [Color::R, Color::G, Color::B, Color::R];

/// Warm-up R, G, B, R from the maximally mixed state; ends in round R.
pub fn warmup<R: Rng + ?Sized>(lat: &ColoredTorusLattice, rng: &mut R) -> Result<StabilizerTableau> {
    let mut t = StabilizerTableau::maximally_mixed(lat.num_qubits());
    run_schedule(&mut t, lat, &WARMUP, OutcomePolicy::Random, rng)?;
    Ok(t)
}

/// One period of the toric variant: rounds R and G, then direct measurement of
/// `V_R^X` and `V_G^Y` in place of round B.
pub fn toric_variant_schedule<R: Rng + ?Sized>(
    tab: &mut StabilizerTableau,
    lat: &ColoredTorusLattice,
    periods: usize,
    policy: OutcomePolicy,
    rng: &mut R,
) -> Result<MeasurementRecord> {
    let mut rec = MeasurementRecord::default();
    for _ in 0..periods {
        rec.rounds.push(measure_round(tab, lat, Color::R, policy, rng)?);
        rec.rounds.push(measure_round(tab, lat, Color::G, policy, rng)?);
        let mut direct = RoundRecord::default();
        for c in [Color::R, Color::G] {
            for v in stabilizer_family(lat, c) {
                let r = tab.measure(&v.op, policy, rng)?;
                direct.sites.push(v.vertex);
                direct.outcomes.push(r.outcome < 0);
                direct.deterministic.push(r.deterministic);
            }
        }
        rec.rounds.push(direct);
    }
    Ok(rec)
}

/// Label of a round-`round` logical in `direction` that equals `op` modulo
/// the tableau's group, preferring labels in `prefer`.
pub fn identify_logical(
    lat: &ColoredTorusLattice,
    tab: &StabilizerTableau,
    round: Color,
    direction: Direction,
    op: &PauliString,
    prefer: &[LogicalLabel],
) -> Option<LogicalLabel> {
    let mut hits = Vec::new();
    for kind in [AnyonType::E, AnyonType::M] {
        for l in logical_pair(round, kind) {
            let cand = logical_string(lat, l, direction, [0, 0]);
            if tab.contains_unsigned(&op.mul(&cand)) {
                hits.push(l);
            }
        }
    }
    hits.iter()
        .find(|l| prefer.contains(l))
        .or(hits.first())
        .copied()
}

/// Labels taken by a tracked logical along `rounds`, starting from a round-R
/// logical after warm-up. The first entry is the starting label.
pub fn automorphism_trace(
    lat: &ColoredTorusLattice,
    start: LogicalLabel,
    direction: Direction,
    rounds: &[Color],
) -> Result<Vec<LogicalLabel>> {
    let kind = logical_type(Color::R, start).ok_or_else(|| {
        Error::LogicalNotExpressible(format!("{start} is not a logical of round R"))
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut tab = warmup(lat, &mut rng)?;
    tab.track("L", logical_string(lat, start, direction, [0, 0]))?;
    let mut out = vec![start];
    let mut prev_pair = logical_pair(Color::R, kind).to_vec();
    for &b in rounds {
        measure_round(&mut tab, lat, b, OutcomePolicy::Random, &mut rng)?;
        let op = tab.logical("L").expect("tracked").clone();
        let label = identify_logical(lat, &tab, b, direction, &op, &prev_pair).ok_or_else(|| {
            Error::LogicalNotExpressible(format!("tracked logical after round {b}"))
        })?;
        let k = logical_type(b, label).expect("identified label is valid");
        prev_pair = logical_pair(b, k).to_vec();
        out.push(label);
    }
    Ok(out)
}

/// One representative in a chain of logicals.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainStep {
    pub round: Color,
    pub label: LogicalLabel,
    pub start: [usize; 2],
    pub op: PauliString,
    /// Edges of the previous round's checks whose product turns the previous
    /// representative into this one (up to sign). Empty for the first step.
    pub via: Vec<usize>,
}

/// Follow a logical through `rounds` choosing explicit representatives.
///
/// At each round the label is the one shared by the previous and current
/// equivalence pairs, and the representative is the first translate (cells in
/// row-major order) whose product with the previous one is a product of the
/// previous round's checks.
pub fn logical_chain(
    lat: &ColoredTorusLattice,
    start_round: Color,
    start: LogicalLabel,
    direction: Direction,
    rounds: &[Color],
) -> Result<Vec<ChainStep>> {
    let kind = logical_type(start_round, start).ok_or_else(|| {
        Error::LogicalNotExpressible(format!("{start} is not a logical of round {start_round}"))
    })?;
    let op = logical_string(lat, start, direction, [0, 0]);
    let mut steps = vec![ChainStep {
        round: start_round,
        label: start,
        start: [0, 0],
        op,
        via: Vec::new(),
    }];
    let mut pair = logical_pair(start_round, kind);
    let mut prev_round = start_round;
    for &b in rounds {
        let prev = steps.last().expect("nonempty").clone();
        let cks = checks(lat, prev_round);
        let mut span = Span::new(2 * lat.num_qubits(), cks.len());
        let mut idx = Vec::new();
        for (i, c) in cks.iter().enumerate() {
            if span.insert(&c.op.symplectic()).is_some() {
                idx.push(i);
            }
        }
        let mut found = None;
        'search: for kind in [AnyonType::E, AnyonType::M] {
            let next_pair = logical_pair(b, kind);
            let Some(&label) = next_pair.iter().find(|l| pair.contains(l)) else {
                continue;
            };
            for c2 in 0..lat.l2 {
                for c1 in 0..lat.l1 {
                    let cand = logical_string(lat, label, direction, [c1, c2]);
                    if let Some(combo) = span.express(&prev.op.mul(&cand).symplectic()) {
                        let via: Vec<usize> = combo.ones().map(|i| cks[idx[i]].edge).collect();
                        found = Some((kind, label, [c1, c2], cand, via));
                        break 'search;
                    }
                }
            }
        }
        let (kind, label, cell, op, via) = found.ok_or_else(|| {
            Error::LogicalNotExpressible(format!(
                "no representative of the chain after {} in round {b}",
                prev.label
            ))
        })?;
        pair = logical_pair(b, kind);
        prev_round = b;
        steps.push(ChainStep {
            round: b,
            label,
            start: cell,
            op,
            via,
        });
    }
    Ok(steps)
}

/// Plaquette support of a Pauli string as a bit vector.
pub fn support_bits(op: &PauliString) -> Bits {
    op.x.or(&op.z)
}
