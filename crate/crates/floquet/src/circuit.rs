//! Noisy runs of the measurement protocol.
//!
//! After the noiseless warm-up R, G, B, R, each period applies the sampled
//! errors of step `3τ + k` before its `k`-th round. For the Floquet schedule
//! the rounds are G, B, R and the vertex stabilizers are inferred from two
//! consecutive check rounds: `V_B^Z` from R then G, `V_R^X` from G then B and
//! `V_G^Y` from B then R. Syndrome changes are XORs of consecutive readouts,
//! with the warm-up readout as the reference.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{sample, ErrorConfiguration, ErrorModel, SIMPLE_TYPES};
use crate::code::{round_basis, stabilizer_family, RoundRecord, Variant, WARMUP};
use crate::decoder::SeamGraph;
use crate::error::{Error, Result};
use crate::gf2::Bits;
use crate::lattice::{superlattice, Color, ColoredTorusLattice, SuperlatticeView};
use crate::pauli::{OutcomePolicy, Pauli, PauliString, StabilizerTableau};

/// Rounds per period; errors of step `3τ + k` precede round `k` of period `τ`.
pub const ROUNDS_PER_PERIOD: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Round {
    Checks(Color),
    /// Direct measurement of `V_R^X` and `V_G^Y` (toric variant).
    Direct,
}

fn period_rounds(variant: Variant) -> [Round; 3] {
    match variant {
        Variant::Floquet => [Round::Checks(Color::G), Round::Checks(Color::B), Round::Checks(Color::R)],
        Variant::Toric => [Round::Checks(Color::R), Round::Checks(Color::G), Round::Direct],
    }
}

/// How a stabilizer value was obtained: from the check rounds `r1 < r2`, or
/// directly at `r1 = r2` (then `basis2` is `None`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReadoutSource {
    pub r1: usize,
    pub basis1: Pauli,
    pub r2: usize,
    pub basis2: Option<Pauli>,
}

/// Stabilizer readouts and syndrome changes, indexed by color and by position
/// in `vertices_of_color` (which is also the supervertex index).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyndromeHistory {
    pub periods: usize,
    /// Readout in the warm-up, per color.
    pub reference: [Bits; 3],
    /// Last readout of each color in each period (`true` for eigenvalue -1).
    pub values: Vec<[Bits; 3]>,
    pub changes: Vec<[Bits; 3]>,
    /// Where each value of `values` came from.
    pub sources: Vec<[ReadoutSource; 3]>,
    /// Every round including the warm-up, in order.
    pub rounds: Vec<RoundRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub history: SyndromeHistory,
    pub errors: ErrorConfiguration,
    /// Product of every applied error.
    pub frame: PauliString,
    /// Syndrome changes predicted from the errors alone.
    pub frame_changes: Vec<[Bits; 3]>,
    /// Superedges of each color's superlattice flipped by the errors that
    /// first show up in each period (simple model only).
    pub chains: Option<Vec<[Bits; 3]>>,
    /// Errors not yet seen by any readout, per color.
    pub pending: Option<[Bits; 3]>,
    /// Class of each period's chain relative to the class-00 reference string
    /// of its syndrome, per color.
    pub kappa_true: Option<Vec<[[bool; 2]; 3]>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CircuitOptions {
    pub variant: Variant,
    /// Compare every inferred stabilizer value against the tableau and fail
    /// with [`Error::Inconsistent`] on a mismatch.
    pub verify_readouts: bool,
}

impl Default for CircuitOptions {
    fn default() -> Self {
        CircuitOptions {
            variant: Variant::Floquet,
            verify_readouts: false,
        }
    }
}

/// Sample errors for `periods` periods and run the protocol.
pub fn run_trial<R: Rng + ?Sized>(
    lat: &ColoredTorusLattice,
    model: &ErrorModel,
    periods: usize,
    options: CircuitOptions,
    rng: &mut R,
) -> Result<TrialOutcome> {
    let errors = sample(model, lat, ROUNDS_PER_PERIOD * periods, rng.gen());
    run_with_errors(lat, &errors, periods, options, rng)
}

fn uniform_on(lat: &ColoredTorusLattice, v: usize, basis: Pauli) -> PauliString {
    PauliString::uniform(lat.num_qubits(), basis, lat.vertex_plaquettes[v])
}

struct Readout {
    round: usize,
    source: ReadoutSource,
    values: Bits,
}

/// Run the protocol with a given error configuration.
pub fn run_with_errors<R: Rng + ?Sized>(
    lat: &ColoredTorusLattice,
    errors: &ErrorConfiguration,
    periods: usize,
    options: CircuitOptions,
    rng: &mut R,
) -> Result<TrialOutcome> {
    if periods == 0 {
        return Err(Error::InvalidArgument("need at least one period".into()));
    }
    if errors.num_steps() < ROUNDS_PER_PERIOD * periods {
        return Err(Error::SizeMismatch(errors.num_steps(), ROUNDS_PER_PERIOD * periods));
    }
    let n = lat.num_qubits();
    let colored: [Vec<usize>; 3] = Color::ALL.map(|c| lat.vertices_of_color(c).collect());
    let mut rounds: Vec<Round> = WARMUP.iter().map(|&c| Round::Checks(c)).collect();
    for _ in 0..periods {
        rounds.extend(period_rounds(options.variant));
    }
    let warm = WARMUP.len();

    let mut tab = StabilizerTableau::maximally_mixed(n);
    let mut frame = PauliString::identity(n);
    let mut applied: Vec<(usize, PauliString)> = Vec::new();
    let mut records = Vec::with_capacity(rounds.len());
    let mut readouts: [Vec<Readout>; 3] = Default::default();
    // last check round: (round index, color, outcome per edge)
    let mut last: Option<(usize, Color, Vec<bool>)> = None;
    for (g, &round) in rounds.iter().enumerate() {
        if g >= warm {
            for e in errors.operators_at(lat, g - warm) {
                tab.apply_pauli(&e);
                frame.mul_assign(&e);
                if options.verify_readouts {
                    applied.push((g, e));
                }
            }
        }
        match round {
            Round::Checks(c2) => {
                let rec = crate::code::measure_round(&mut tab, lat, c2, OutcomePolicy::Random, rng)?;
                let mut by_edge = vec![false; lat.edges.len()];
                for (&e, &o) in rec.sites.iter().zip(&rec.outcomes) {
                    by_edge[e] = o;
                }
                if let Some((r1, c1, prev)) = &last {
                    if c1 != &c2 {
                        let b = Color::third(*c1, c2);
                        let mut values = Bits::zeros(colored[b.index()].len());
                        for (i, &v) in colored[b.index()].iter().enumerate() {
                            let mut parity = true; // the six-fold product carries a sign -1
                            for &e in &lat.vertex_edges[v] {
                                parity ^= if lat.edges[e].color == c2 { by_edge[e] } else { prev[e] };
                            }
                            values.set(i, parity);
                        }
                        readouts[b.index()].push(Readout {
                            round: g,
                            source: ReadoutSource {
                                r1: *r1,
                                basis1: round_basis(*c1),
                                r2: g,
                                basis2: Some(round_basis(c2)),
                            },
                            values,
                        });
                    }
                }
                last = Some((g, c2, by_edge));
                records.push(rec);
            }
            Round::Direct => {
                let mut rec = RoundRecord::default();
                for c in [Color::R, Color::G] {
                    let mut values = Bits::zeros(colored[c.index()].len());
                    for (i, v) in stabilizer_family(lat, c).into_iter().enumerate() {
                        let r = tab.measure(&v.op, OutcomePolicy::Random, rng)?;
                        rec.sites.push(v.vertex);
                        rec.outcomes.push(r.outcome < 0);
                        rec.deterministic.push(r.deterministic);
                        values.set(i, r.outcome < 0);
                    }
                    readouts[c.index()].push(Readout {
                        round: g,
                        source: ReadoutSource {
                            r1: g,
                            basis1: round_basis(c),
                            r2: g,
                            basis2: None,
                        },
                        values,
                    });
                }
                records.push(rec);
            }
        }
        if options.verify_readouts {
            for c in Color::ALL {
                if let Some(r) = readouts[c.index()].last().filter(|r| r.round == g) {
                    for (i, &v) in colored[c.index()].iter().enumerate() {
                        let op = uniform_on(lat, v, round_basis(c));
                        let el = tab
                            .group_element(&op)
                            .ok_or_else(|| Error::Inconsistent(format!("V_{c} at {v} not stabilized in round {g}")))?;
                        // errors after round r1 moved the first factor away from its record
                        let s = r.source;
                        let moved = applied
                            .iter()
                            .filter(|(ge, e)| *ge > s.r1 && *ge <= s.r2 && !e.commutes(&uniform_on(lat, v, s.basis1)))
                            .count();
                        if (el.sign() != op.sign()) != (r.values.get(i) ^ (moved % 2 == 1)) {
                            return Err(Error::Inconsistent(format!("V_{c} at {v} misread in round {g}")));
                        }
                    }
                }
            }
        }
    }

    // per color: the warm-up reference and the last readout of each period
    let mut reference: [Bits; 3] = Default::default();
    let mut values = vec![<[Bits; 3]>::default(); periods];
    let mut sources = Vec::with_capacity(periods);
    let mut picked: [Vec<&Readout>; 3] = Default::default();
    for c in Color::ALL {
        let list = &readouts[c.index()];
        let refr = list
            .iter()
            .rev()
            .find(|r| r.round < warm)
            .ok_or_else(|| Error::Inconsistent(format!("no warm-up readout of {c}")))?;
        reference[c.index()] = refr.values.clone();
        for t in 0..periods {
            let span = warm + ROUNDS_PER_PERIOD * t..warm + ROUNDS_PER_PERIOD * (t + 1);
            let r = list
                .iter()
                .rev()
                .find(|r| span.contains(&r.round))
                .ok_or_else(|| Error::Inconsistent(format!("no readout of {c} in period {t}")))?;
            values[t][c.index()] = r.values.clone();
            picked[c.index()].push(r);
        }
    }
    for t in 0..periods {
        sources.push(Color::ALL.map(|c| picked[c.index()][t].source));
    }
    let changes: Vec<[Bits; 3]> = (0..periods)
        .map(|t| {
            Color::ALL.map(|c| {
                let prev = if t == 0 { &reference[c.index()] } else { &values[t - 1][c.index()] };
                values[t][c.index()].xor(prev)
            })
        })
        .collect();

    // predictions from the errors alone
    let flips = |e: &PauliString, step: usize, v: usize, s: &ReadoutSource| -> bool {
        let g = warm + step;
        let a1 = !e.commutes(&uniform_on(lat, v, s.basis1)) && g <= s.r1;
        let a2 = s.basis2.is_some_and(|b| !e.commutes(&uniform_on(lat, v, b)) && g <= s.r2);
        a1 ^ a2
    };
    let views: [SuperlatticeView; 3] = Color::ALL.map(|c| superlattice(lat, c));
    let simple = matches!(errors.model, ErrorModel::Simple(_));
    let mut frame_changes = vec![Color::ALL.map(|c| Bits::zeros(colored[c.index()].len())); periods];
    let mut chains = vec![Color::ALL.map(|c| Bits::zeros(views[c.index()].num_edges())); periods];
    let mut pending = Color::ALL.map(|c| Bits::zeros(views[c.index()].num_edges()));
    let mut position = vec![usize::MAX; lat.vertices.len()];
    for c in Color::ALL {
        for (i, &v) in colored[c.index()].iter().enumerate() {
            position[v] = i;
        }
    }
    for step in 0..ROUNDS_PER_PERIOD * periods {
        let ops = errors.operators_at(lat, step);
        let slots: Vec<usize> = errors.steps[step].ones().collect();
        for (e, slot) in ops.iter().zip(slots) {
            let mut near: Vec<usize> = e
                .support()
                .iter()
                .flat_map(|&q| lat.plaquettes[q].vertices)
                .collect();
            near.sort();
            near.dedup();
            let mut landing: [Option<usize>; 3] = [None; 3];
            for &v in &near {
                // an error commuting with V can still hit both of its factors
                // between their rounds and flip a single readout
                let c = lat.vertices[v].color;
                let mut before = false;
                for t in 0..periods {
                    let now = flips(e, step, v, &sources[t][c.index()]);
                    if now != before {
                        frame_changes[t][c.index()].flip(position[v]);
                        landing[c.index()].get_or_insert(t);
                    }
                    before = now;
                }
            }
            if simple {
                let site = slot / errors.types_per_site;
                let c = lat.edges[site].color;
                let ty = SIMPLE_TYPES[crate::channel::simple_type_index(c, slot % errors.types_per_site)];
                debug_assert_eq!(ty.color, c);
                let s = views[c.index()].superedge_of_edge[&site];
                match landing[c.index()] {
                    Some(t) => chains[t][c.index()].flip(s),
                    None => pending[c.index()].flip(s),
                }
            }
        }
    }

    let (chains, pending, kappa_true) = if simple {
        let graphs: [SeamGraph; 3] = Color::ALL.map(|c| SeamGraph::from_superlattice(&views[c.index()]));
        let kappa = (0..periods)
            .map(|t| {
                let mut k = [[false; 2]; 3];
                for c in Color::ALL {
                    let g = &graphs[c.index()];
                    let d: Vec<usize> = changes[t][c.index()].ones().collect();
                    let r = g.reference_string(&d, [false; 2])?;
                    k[c.index()] = g.winding(&chains[t][c.index()].xor(&r));
                }
                Ok(k)
            })
            .collect::<Result<Vec<_>>>()?;
        (Some(chains), Some(pending), Some(kappa))
    } else {
        (None, None, None)
    };

    Ok(TrialOutcome {
        history: SyndromeHistory {
            periods,
            reference,
            values,
            changes,
            sources,
            rounds: records,
        },
        errors: errors.clone(),
        frame,
        frame_changes,
        chains,
        pending,
        kappa_true,
    })
}

/// Defects of `color` per period, as supervertex indices.
pub fn project_syndrome_to_superlattice(history: &SyndromeHistory, color: Color) -> Vec<Vec<usize>> {
    history.changes.iter().map(|c| c[color.index()].ones().collect()).collect()
}

/// One line of a trial dump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    /// Per period, per color (R, G, B): defect supervertices.
    pub defects: Vec<[Vec<usize>; 3]>,
    pub kappa_true: Option<Vec<[[bool; 2]; 3]>>,
    pub occurrences: usize,
}

impl TrialRecord {
    pub fn from_outcome(trial: usize, outcome: &TrialOutcome) -> Self {
        TrialRecord {
            trial,
            defects: outcome
                .history
                .changes
                .iter()
                .map(|c| c.clone().map(|b| b.ones().collect()))
                .collect(),
            kappa_true: outcome.kappa_true.clone(),
            occurrences: outcome.errors.occurrences(),
        }
    }
}

/// Write one JSON object per line.
pub fn write_ndjson<W: Write>(mut w: W, records: &[TrialRecord]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_ndjson(text: &str) -> Result<Vec<TrialRecord>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| Error::InvalidArgument(format!("bad trial record: {e}"))))
        .collect()
}
