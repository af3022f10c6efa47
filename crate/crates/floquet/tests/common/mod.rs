//! Brute-force oracles shared by several test targets.
#![allow(dead_code)]

use std::collections::HashMap;

use floquet::code::{edge_operator, round_basis};
use floquet::decoder::*;
use floquet::gf2::Bits;
use floquet::lattice::{build_lattice, ColoredTorusLattice};
use floquet::pauli::{Pauli, PauliString};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const PERIODS: usize = 2;

/// Unpack single-`X` error bits `(t, k, q)` of a 1×1 instance.
pub fn unpack(cfg: u64, n: usize) -> Vec<[Bits; 2]> {
    (0..PERIODS)
        .map(|t| {
            [0, 1].map(|k| {
                let mut b = Bits::zeros(n);
                for q in 0..n {
                    b.set(q, (cfg >> ((2 * t + k) * n + q)) & 1 == 1);
                }
                b
            })
        })
        .collect()
}

/// Syndrome and class vector of every reachable check-flip pattern, with the
/// number of raw error configurations of each weight producing it.
pub struct RawTable {
    pub m: usize,
    pub counts: Vec<[u64; 25]>,
    pub histories: Vec<(usize, Vec<Bits>, Vec<[bool; 2]>)>,
}

pub fn raw_table(lat: &ColoredTorusLattice) -> RawTable {
    let n = lat.num_qubits();
    let m = 2 * n * PERIODS;
    let geom = KagomeGeometry::new(lat);
    let ne = geom.edges.len();
    // qubits whose X anticommutes with each check, from the Pauli algebra
    let anti: Vec<u64> = geom
        .edges
        .iter()
        .map(|&e| {
            let c = edge_operator(lat, e, round_basis(lat.edges[e].color));
            (0..n)
                .filter(|&q| !c.commutes(&PauliString::uniform(n, Pauli::X, [q])))
                .fold(0u64, |acc, q| acc | 1 << q)
        })
        .collect();
    // error bits (t, k) occupy positions (2t + k) n ..; a check sees the errors
    // since its previous measurement
    let windows: Vec<u64> = (0..PERIODS)
        .flat_map(|t| {
            let (anti, geom) = (&anti, &geom);
            (0..ne).map(move |i| {
                let slots: Vec<usize> = if geom.is_green[i] {
                    if t == 0 { vec![0] } else { vec![2 * t - 1, 2 * t] }
                } else {
                    vec![2 * t, 2 * t + 1]
                };
                slots.iter().fold(0u64, |acc, &s| acc | anti[i] << (s * n))
            })
        })
        .collect();
    let mut counts = vec![[0u64; 25]; 1 << (ne * PERIODS)];
    for cfg in 0..1u64 << m {
        let key = windows
            .iter()
            .enumerate()
            .fold(0usize, |acc, (b, &w)| acc | ((((cfg & w).count_ones() & 1) as usize) << b));
        counts[key][cfg.count_ones() as usize] += 1;
    }
    let histories = (0..counts.len())
        .filter(|&k| counts[k].iter().any(|&c| c > 0))
        .map(|k| {
            let flipped: Vec<Bits> = (0..PERIODS)
                .map(|t| {
                    let mut f = Bits::zeros(ne);
                    for i in 0..ne {
                        f.set(i, (k >> (t * ne + i)) & 1 == 1);
                    }
                    f
                })
                .collect();
            let syndrome = flipped
                .iter()
                .map(|f| {
                    let mut s = Bits::zeros(lat.vertices.len());
                    for i in f.ones() {
                        for v in lat.edges[geom.edges[i]].vertices {
                            s.flip(v);
                        }
                    }
                    s
                })
                .collect();
            (k, syndrome, geom.classes(&flipped).unwrap())
        })
        .collect();
    RawTable { m, counts, histories }
}

/// Largest deviation between the projector-sum class probabilities and raw
/// enumeration at rate `p`, the total probability, and the syndrome count.
pub fn kagome_mismatch(lat: &ColoredTorusLattice, table: &RawTable, p: f64) -> (f64, f64, usize) {
    let m = table.m;
    let eval = KagomeEvaluator::new(lat, PERIODS, p).unwrap();
    let mut raw: HashMap<(Vec<Bits>, Vec<[bool; 2]>), f64> = HashMap::new();
    for (k, s, c) in &table.histories {
        let w: f64 = (0..=m)
            .map(|d| table.counts[*k][d] as f64 * p.powi(d as i32) * (1.0 - p).powi((m - d) as i32))
            .sum();
        *raw.entry((s.clone(), c.clone())).or_insert(0.0) += w;
    }
    let mut syndromes: Vec<Vec<Bits>> = table.histories.iter().map(|h| h.1.clone()).collect();
    syndromes.sort_by_key(|v| v.iter().map(|b| b.ones().collect::<Vec<_>>()).collect::<Vec<_>>());
    syndromes.dedup();
    let (mut worst, mut total) = (0.0f64, 0.0);
    for s in &syndromes {
        for (kappa, prob) in eval.class_probabilities(s).unwrap() {
            let want = raw.get(&(s.clone(), kappa.clone())).copied().unwrap_or(0.0);
            worst = worst.max((prob - want).abs());
            total += prob;
        }
    }
    (worst, total, syndromes.len())
}

fn spins(sig: u64, ns: usize) -> Vec<Bits> {
    (0..PERIODS)
        .map(|t| {
            let mut b = Bits::zeros(ns);
            for i in 0..ns {
                b.set(i, (sig >> (t * ns + i)) & 1 == 1);
            }
            b
        })
        .collect()
}

/// Over `samples` random error configurations on 1×1: the number of spin
/// configurations whose summand changes under a per-period global flip, and
/// whether each configuration has exactly `2^PERIODS` nonzero summands.
pub fn kagome_flip_symmetry(samples: usize, seed: u64) -> (usize, bool) {
    let lat = build_lattice(1, 1).unwrap();
    let geom = KagomeGeometry::new(&lat);
    let n = lat.num_qubits();
    let ns = geom.spins.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut violations, mut support_ok) = (0, true);
    for _ in 0..samples {
        let x = unpack(rng.gen_range(0..1 << (2 * n * PERIODS)), n);
        let flipped = geom.flipped_checks(&lat, &x);
        let inst =
            KagomeModelInstance::new(&geom, &geom.syndrome(&flipped), &geom.classes(&flipped).unwrap(), 0.13f64).unwrap();
        let mut nonzero = 0;
        for sig in 0..1u64 << (ns * PERIODS) {
            let sigma = spins(sig, ns);
            let w = inst.summand(&geom, &lat, &sigma, &x);
            if w != 0.0 {
                nonzero += 1;
            }
            for t in 0..PERIODS {
                let mut g = sigma.clone();
                for i in 0..ns {
                    g[t].flip(i);
                }
                if inst.summand(&geom, &lat, &g, &x) != w {
                    violations += 1;
                }
            }
        }
        // one domain-wall pattern, two spin states per period
        support_ok &= nonzero == 1 << PERIODS;
    }
    (violations, support_ok)
}

/// Odd-parity probability of six independent flips, by listing all 2^6 patterns.
pub fn brute_force_parity(p: f64) -> f64 {
    (0u32..64)
        .filter(|m| m.count_ones() % 2 == 1)
        .map(|m| p.powi(m.count_ones() as i32) * (1.0 - p).powi(6 - m.count_ones() as i32))
        .sum()
}
