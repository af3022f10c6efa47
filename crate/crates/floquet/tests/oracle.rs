use floquet::channel::SimpleErrorModel;
use floquet::code::checks;
use floquet::diagnostics::{diagnostics, DiagnosticsRequest};
use floquet::gf2::{rank, Bits};
use floquet::lattice::{build_lattice, Color, Direction};
use floquet::oracle::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::LN_2;

fn purity_exponent(s: &WeightedPauliState) -> f64 {
    (s.dimension() as f64 - s.active_qubits() as f64) * LN_2
}

#[test]
fn warmup_is_an_unweighted_stabilizer_mixture() {
    for (l1, l2) in [(1, 1), (2, 2), (2, 3)] {
        let lat = build_lattice(l1, l2).unwrap();
        let s = warmup(&lat).unwrap();
        assert!(s.functionals.is_empty());
        let sym: Vec<Bits> = s.basis.iter().map(|b| b.symplectic()).collect();
        assert_eq!(rank(&sym), s.dimension());
        for (i, a) in s.basis.iter().enumerate() {
            assert!(s.basis[i + 1..].iter().all(|b| a.commutes(b)));
        }
        // system qubits plus one ancilla per check over four rounds
        assert_eq!(s.active_qubits(), lat.num_qubits() + 4 * checks(&lat, Color::R).len());
        assert_eq!(s.num_terms(), 2f64.powi(s.dimension() as i32));
        assert!(log_moment(&[&s]).unwrap().abs() < 1e-12);
        let pur = log_moment(&[&s, &s]).unwrap();
        assert!((pur - purity_exponent(&s)).abs() < 1e-9);
        assert!(pur <= 0.0);
    }
    let lat = build_lattice(1, 1).unwrap();
    let s = warmup(&lat).unwrap();
    let csv = s.terms_csv().unwrap();
    assert_eq!(csv.lines().count(), 1 + (1usize << s.dimension()));
    assert!(s.terms().unwrap().iter().all(|(_, _, w)| *w == 1.0));
}

#[test]
fn repeated_round_keeps_the_term_set() {
    let lat = build_lattice(2, 2).unwrap();
    let mut s = warmup(&lat).unwrap();
    let (dim, act) = (s.dimension(), s.active_qubits());
    let pur = log_moment(&[&s, &s]).unwrap();
    s.measure_round(&lat, Color::R, 1).unwrap();
    let m = checks(&lat, Color::R).len();
    assert_eq!(s.dimension(), dim + m);
    assert_eq!(s.active_qubits(), act + m);
    assert!((log_moment(&[&s, &s]).unwrap() - pur).abs() < 1e-9);
    // the two records of each check agree
    let reg = &s.register;
    for k in 0..m {
        let z = reg.z_on([reg.ancilla(0, k), reg.ancilla(1, k)]);
        assert!(s.coordinates(&z).is_some());
    }
}

fn evolve_checked(lat: &floquet::lattice::ColoredTorusLattice, p: f64) -> WeightedPauliState {
    let model = SimpleErrorModel::uniform(p).unwrap();
    let mut s = warmup(lat).unwrap();
    for (k, round) in [Color::G, Color::B, Color::R, Color::G].into_iter().enumerate() {
        let before = s.functionals.len();
        s.apply_channel(lat, &model, k as i32);
        if p == 0.0 {
            assert_eq!(s.functionals.len(), before);
        }
        assert!(log_moment(&[&s]).unwrap().abs() < 1e-12);
        s.measure_round(lat, round, k as i32 + 1).unwrap();
        assert!(log_moment(&[&s]).unwrap().abs() < 1e-12);
        assert!(log_moment(&[&s, &s]).unwrap() <= 1e-12);
    }
    s
}

#[test]
fn channel_weights_are_integer_powers() {
    let lat = build_lattice(2, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for p in [0.0, 0.05, 0.2, 0.5] {
        let s = evolve_checked(&lat, p);
        let x = 1.0 - 2.0 * p;
        let r = s.dimension();
        assert_eq!(s.coefficient(&Bits::zeros(r)), 1.0);
        for _ in 0..200 {
            let v = Bits::from_bools(&(0..r).map(|_| rng.gen()).collect::<Vec<bool>>());
            let k = s.weight_exponent(&v);
            let c = s.coefficient(&v);
            assert!((c - x.powi(k as i32)).abs() <= 1e-14, "{c} vs {x}^{k}");
        }
    }
}

#[test]
fn single_error_weight_rule() {
    let lat = build_lattice(1, 1).unwrap();
    let mut s = warmup(&lat).unwrap();
    let e = lat.edges_of_color(Color::B).next().unwrap();
    let op = s.register.embed(&floquet::code::edge_operator(&lat, e, floquet::pauli::Pauli::X));
    let p = 0.13;
    s.apply_error(&op, p, Source::Auxiliary);
    for (v, g, w) in s.terms().unwrap() {
        let want = if g.commutes(&op) { 1.0 } else { 1.0 - 2.0 * p };
        assert!((w - want).abs() < 1e-15, "{v:?}");
    }
    assert!(log_moment(&[&s]).unwrap().abs() < 1e-12);
}

#[test]
fn agreement_with_partition_functions() {
    for (l1, l2) in [(1, 1), (2, 2)] {
        let lat = build_lattice(l1, l2).unwrap();
        for variant in [Variant::Floquet, Variant::Toric] {
            for p in [0.0, 0.02, 0.1, 0.3, 0.5] {
                let m = SimpleErrorModel::uniform(p).unwrap();
                let s = build_states_for_diagnostics(&lat, &m, variant, Direction::L1).unwrap();
                for n in [2, 3] {
                    let o = oracle_diagnostics(&s, n).unwrap();
                    let d = diagnostics(&lat, &DiagnosticsRequest::new(n, p, variant).unwrap()).unwrap();
                    assert!((o.d_em - d.d_em).abs() < 1e-10, "{l1}x{l2} {variant:?} p={p} n={n}: {} vs {}", o.d_em, d.d_em);
                    assert!((o.i_c - d.i_c).abs() < 1e-10, "{l1}x{l2} {variant:?} p={p} n={n}: {} vs {}", o.i_c, d.i_c);
                }
            }
        }
    }
}

#[test]
fn oracle_table_values() {
    let lat = build_lattice(2, 2).unwrap();
    let clean = SimpleErrorModel::uniform(0.0).unwrap();
    let s = build_states_for_diagnostics(&lat, &clean, Variant::Floquet, Direction::L1).unwrap();
    let o = oracle_diagnostics(&s, 2).unwrap();
    assert!(o.d_em.abs() < 1e-12);
    assert!((o.i_c - 2.0 * LN_2).abs() < 1e-12);
    let t = build_states_for_diagnostics(&lat, &clean, Variant::Toric, Direction::L1).unwrap();
    assert!((oracle_diagnostics(&t, 2).unwrap().d_em - LN_2).abs() < 1e-12);
    assert!((oracle_diagnostics(&t, 3).unwrap().d_em - LN_2 / 2.0).abs() < 1e-12);
    assert!(oracle_diagnostics(&s, 1).is_err());
    assert!(moment(&[]).is_err());
}
