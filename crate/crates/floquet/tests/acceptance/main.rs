//! Acceptance criteria, one test each. Every test prints a single
//! `PASS [k]` or `FAIL [k]` line to stderr, bypassing output capture.

#[path = "../common/mod.rs"]
mod common;

use std::collections::BTreeMap;
use std::f64::consts::LN_2;
use std::io::Write;

use floquet::channel::{effective_rate, invert_effective_rate, SimpleErrorModel};
use floquet::code::*;
use floquet::decoder::*;
use floquet::diagnostics::*;
use floquet::gf2::Bits;
use floquet::lattice::{build_lattice, superlattice, Color, Direction};
use floquet::oracle::{build_states_for_diagnostics, oracle_diagnostics, Source};
use floquet::pauli::OutcomePolicy;
use floquet::statmech::rbim::{locate_rbim_threshold, ThresholdConfig};
use floquet::statmech::{coefficient_table, Coefficients, Label};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(k: u32, name: &str, ok: bool, detail: String) {
    let line = format!("{} [{k:>2}] {name}: {detail}\n", if ok { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(ok, "criterion {k} failed: {detail}");
}

fn random_defects(g: &SeamGraph, p: f64, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut chain = Bits::zeros(g.num_edges());
    for e in 0..g.num_edges() {
        if rng.gen::<f64>() < p {
            chain.flip(e);
        }
    }
    g.boundary(&chain).ones().collect()
}

#[test]
fn c01_effective_rate() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let p = rng.gen_range(0.0..=0.5);
        worst = worst.max((effective_rate(p).unwrap() - common::brute_force_parity(p)).abs());
    }
    let ends = effective_rate(0.0).unwrap() == 0.0 && effective_rate(0.5).unwrap() == 0.5;
    report(1, "effective rate", worst <= 1e-15 && ends, format!("max |dev| {worst:.1e}, endpoints exact {ends}"));
}

#[test]
fn c02_inverse_rate() {
    let p = invert_effective_rate(0.0675).unwrap();
    report(2, "inverse rate", (0.0118..=0.0121).contains(&p), format!("p = {p:.6}"));
}

#[test]
fn c03_rbim_threshold() {
    let cfg = ThresholdConfig {
        widths: vec![6, 8, 10, 12],
        grid: (0..=7).map(|k| 0.05 + 0.005 * k as f64).collect(),
        samples: 200,
        seed: 2024,
        bootstrap: 200,
    };
    match locate_rbim_threshold(&cfg) {
        Ok(t) => report(
            3,
            "RBIM threshold",
            (0.060..=0.075).contains(&t.estimate),
            format!("p̃_c = {:.4}, 95% CI [{:.4}, {:.4}]", t.estimate, t.ci.0, t.ci.1),
        ),
        Err(e) => report(3, "RBIM threshold", false, e.to_string()),
    }
}

#[test]
fn c04_fidelity_limits() {
    let lat = build_lattice(3, 3).unwrap();
    let model = |p: f64| SimpleErrorModel::uniform(p).unwrap();
    let f0 = ml_fidelity(&lat, &model(0.0), Color::B, 200, 1).unwrap();
    let fh = ml_fidelity(&lat, &model(0.5), Color::B, 200, 2).unwrap();
    let view = superlattice(&lat, Color::B);
    let g = SeamGraph::from_superlattice(&view);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut ratio_dev = 0.0f64;
    for _ in 0..20 {
        let d = random_defects(&g, 0.3, &mut rng);
        for r in class_probabilities_exact(&lat, &view, &d, 0.5f64).unwrap().ratios() {
            ratio_dev = ratio_dev.max((r - 0.25).abs());
        }
    }
    let mut monotone = true;
    let mut prev: Option<(f64, f64)> = None;
    let mut curve = Vec::new();
    for &p in &[0.0, 0.005, 0.01, 0.02, 0.04, 0.08] {
        let f = ml_fidelity(&lat, &model(p), Color::B, 1000, 11).unwrap();
        if let Some((fp, ep)) = prev {
            monotone &= f.fidelity <= fp + 2.0 * (ep * ep + f.stderr * f.stderr).sqrt();
        }
        prev = Some((f.fidelity, f.stderr));
        curve.push(format!("{:.3}", f.fidelity));
    }
    let ok = f0.fidelity == 1.0 && (fh.fidelity - 0.25).abs() < 1e-12 && ratio_dev < 1e-12 && monotone;
    report(
        4,
        "fidelity limits",
        ok,
        format!(
            "F(0) = {}, F(1/2) = {}, max |ratio - 1/4| {ratio_dev:.1e}, curve [{}]",
            f0.fidelity,
            fh.fidelity,
            curve.join(", ")
        ),
    );
}

#[test]
fn c05_enumeration_matches_rbim() {
    let lat = build_lattice(2, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut worst, mut cases) = (0.0f64, 0);
    for color in Color::ALL {
        let view = superlattice(&lat, color);
        let g = SeamGraph::from_superlattice(&view);
        for &p in &[0.01f64, 0.05, 0.1, 0.2, 0.4] {
            for _ in 0..20 {
                let d = random_defects(&g, 0.3, &mut rng);
                let a = class_probabilities_exact(&lat, &view, &d, p).unwrap();
                let b = class_probabilities_via_rbim(&lat, &view, &d, p).unwrap();
                for k in 0..4 {
                    worst = worst.max((a.log_p[k] - b.log_p[k]).abs() / a.log_p[k].abs().max(1.0));
                }
                cases += 1;
            }
        }
    }
    report(5, "enumeration vs RBIM", worst < 1e-12, format!("{cases} syndromes, max rel dev {worst:.1e}"));
}

#[test]
fn c06_kagome_projector_sum() {
    let lat = build_lattice(1, 1).unwrap();
    let table = common::raw_table(&lat);
    let mut worst = 0.0f64;
    let mut norm = 0.0f64;
    for &p in &[0.03, 0.1, 0.27, 0.45] {
        let (w, total, _) = common::kagome_mismatch(&lat, &table, p);
        worst = worst.max(w);
        norm = norm.max((total - 1.0).abs());
    }
    let (violations, support_ok) = common::kagome_flip_symmetry(20, 4);
    let ok = worst < 1e-12 && norm < 1e-12 && violations == 0 && support_ok;
    report(
        6,
        "kagome projector sum",
        ok,
        format!("max |dev| {worst:.1e}, |norm - 1| {norm:.1e}, flip violations {violations}"),
    );
}

#[test]
fn c07_noise_classes() {
    let lat = build_lattice(3, 3).unwrap();
    let m = SimpleErrorModel::uniform(0.1).unwrap();
    let s = build_states_for_diagnostics(&lat, &m, Variant::Floquet, Direction::L1).unwrap();
    let want: BTreeMap<Label, u32> = coefficient_table(Coefficients::FourRound).into_iter().collect();
    let bonds = 3 * lat.l1 * lat.l2;
    let mut ok = true;
    let mut found = BTreeMap::new();
    for st in [&s.rho1, &s.rho2] {
        // group classes by their set of (step, color, basis) sources
        let mut groups: BTreeMap<Vec<(i32, String, String)>, (Color, usize)> = BTreeMap::new();
        for (_, src) in st.noise_classes() {
            let mut key = Vec::new();
            let mut color = None;
            for x in &src {
                if let Source::Noise { step, color: c, basis, .. } = x {
                    key.push((*step, c.to_string(), format!("{basis:?}")));
                    ok &= color.map_or(true, |k| k == *c);
                    color = Some(*c);
                }
            }
            key.sort();
            key.dedup();
            groups.entry(key).or_insert((color.unwrap(), 0)).1 += 1;
        }
        let mut by_color: BTreeMap<String, Vec<((i32, i32), u32, usize)>> = BTreeMap::new();
        let mut colors = BTreeMap::new();
        for (key, (color, count)) in &groups {
            let span = (key.iter().map(|k| k.0).min().unwrap(), key.iter().map(|k| k.0).max().unwrap());
            by_color.entry(color.to_string()).or_default().push((span, key.len() as u32, *count));
            colors.insert(color.to_string(), *color);
        }
        found.clear();
        for (name, mut gs) in by_color {
            gs.sort();
            for (i, (_, mult, count)) in gs.into_iter().enumerate() {
                ok &= count == bonds;
                found.insert(Label { color: colors[&name], index: i as u8 + 1 }, mult);
            }
        }
        ok &= found == want;
    }
    let mults: Vec<String> = found.iter().map(|(l, m)| format!("{l}:{m}")).collect();
    report(7, "noise classes", ok, format!("multiplicities {}", mults.join(" ")));
}

#[test]
fn c08_table_limits() {
    let mut worst = 0.0f64;
    for (l1, l2, n_max) in [(2, 2, 4), (3, 3, 3)] {
        let lat = build_lattice(l1, l2).unwrap();
        for n in 2..=n_max {
            let req = |p: f64, v| DiagnosticsRequest::new(n, p, v).unwrap();
            let f = diagnostics(&lat, &req(0.0, Variant::Floquet)).unwrap();
            let t = diagnostics(&lat, &req(0.0, Variant::Toric)).unwrap();
            let devs = [
                f.d_em,
                f.i_c - 2.0 * LN_2,
                t.d_em - LN_2 / (n - 1) as f64,
                t.i_c - 2.0 * LN_2,
            ];
            worst = devs.iter().fold(worst, |w, d| w.max(d.abs()));
            for v in [Variant::Floquet, Variant::Toric] {
                let r = diagnostics(&lat, &req(0.5, v)).unwrap();
                worst = worst.max((r.d_em - LN_2).abs()).max((r.i_c + 2.0 * LN_2).abs());
            }
        }
    }
    report(8, "phase-table limits", worst < 1e-12, format!("max |dev| {worst:.1e}"));
}

#[test]
fn c09_oracle_agreement() {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for (l1, l2) in [(1, 1), (2, 2)] {
        let lat = build_lattice(l1, l2).unwrap();
        for variant in [Variant::Floquet, Variant::Toric] {
            for p in [0.0, 0.02, 0.1, 0.3, 0.5] {
                let m = SimpleErrorModel::uniform(p).unwrap();
                let s = build_states_for_diagnostics(&lat, &m, variant, Direction::L1).unwrap();
                for n in [2, 3] {
                    let o = oracle_diagnostics(&s, n).unwrap();
                    let d = diagnostics(&lat, &DiagnosticsRequest::new(n, p, variant).unwrap()).unwrap();
                    worst = worst.max((o.d_em - d.d_em).abs()).max((o.i_c - d.i_c).abs());
                    cases += 1;
                }
            }
        }
    }
    report(9, "oracle vs partition functions", worst < 1e-10, format!("{cases} cases, max |dev| {worst:.1e}"));
}

/// Anyon type of the tracked logical at each R round over `periods` periods.
fn types_at_r_rounds(lat: &floquet::lattice::ColoredTorusLattice, start: LogicalLabel, toric: bool) -> Vec<AnyonType> {
    let d = Direction::L1;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut tab = warmup(lat, &mut rng).unwrap();
    tab.track("L", logical_string(lat, start, d, [0, 0])).unwrap();
    let mut out = vec![logical_type(Color::R, start).unwrap()];
    for _ in 0..4 {
        if toric {
            toric_variant_schedule(&mut tab, lat, 1, OutcomePolicy::Random, &mut rng).unwrap();
        } else {
            for c in [Color::G, Color::B] {
                measure_round(&mut tab, lat, c, OutcomePolicy::Random, &mut rng).unwrap();
            }
        }
        measure_round(&mut tab, lat, Color::R, OutcomePolicy::Random, &mut rng).unwrap();
        let op = tab.logical("L").unwrap().clone();
        let label = identify_logical(lat, &tab, Color::R, d, &op, &[]).unwrap();
        out.push(logical_type(Color::R, label).unwrap());
    }
    out
}

#[test]
fn c10_automorphism() {
    let lbl = |s: &str| -> LogicalLabel { s.parse().unwrap() };
    let schedule = [Color::G, Color::B, Color::R, Color::G];
    let chains = [
        ("L_B^X", ["L_B^X", "L_G^X", "L_G^Z", "L_R^Z", "L_R^Y"]),
        ("L_R^Y", ["L_R^Y", "L_R^Y", "L_B^Y", "L_B^X", "L_G^X"]),
    ];
    let mut ok = true;
    for (a, b) in [(2, 2), (2, 3), (3, 3)] {
        let lat = build_lattice(a, b).unwrap();
        for d in Direction::ALL {
            for (start, want) in &chains {
                let t = automorphism_trace(&lat, lbl(start), d, &schedule).unwrap();
                ok &= t == want.iter().map(|s| lbl(s)).collect::<Vec<_>>();
            }
        }
    }
    let lat = build_lattice(3, 3).unwrap();
    let mut detail = String::from("chains match");
    for start in ["L_B^X", "L_R^Y"] {
        let toric = types_at_r_rounds(&lat, lbl(start), true);
        let floquet = types_at_r_rounds(&lat, lbl(start), false);
        ok &= toric.iter().all(|&k| k == toric[0]);
        ok &= floquet.windows(2).all(|w| w[0] != w[1]);
        detail.push_str(&format!("; {start}: toric {toric:?}, floquet {floquet:?}"));
    }
    report(10, "automorphism", ok, detail);
}

#[test]
fn c11_transitions_coincide() {
    let lat = build_lattice(8, 8).unwrap();
    let mut req = DiagnosticsRequest::new(2, 0.0, Variant::Floquet).unwrap();
    req.coefficients = Coefficients::SteadyState;
    let grid: Vec<f64> = (0..=16).map(|k| 0.01 + 0.00125 * k as f64).collect();
    let rs = sweep(&lat, &req, &grid).unwrap();
    let t = transition_estimates(&rs).unwrap();
    report(
        11,
        "D_em and I_c transitions coincide",
        t.coincide(),
        format!("D_em {:.5}, I_c {:.5}, separation {:.5}, resolution {:.5}", t.d_em, t.i_c, t.separation(), t.resolution),
    );
}
