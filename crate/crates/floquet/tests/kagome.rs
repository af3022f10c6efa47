mod common;

use common::*;
use floquet::decoder::*;
use floquet::gf2::Bits;
use floquet::lattice::build_lattice;

#[test]
fn projector_sum_matches_raw_enumeration() {
    let lat = build_lattice(1, 1).unwrap();
    let table = raw_table(&lat);
    for &p in &[0.03f64, 0.1, 0.27, 0.45] {
        let (worst, total, syndromes) = kagome_mismatch(&lat, &table, p);
        assert!(syndromes > 1);
        assert!(worst < 1e-12, "p={p}: {worst}");
        assert!((total - 1.0).abs() < 1e-12);
    }
}

#[test]
fn summand_is_invariant_under_per_period_spin_flip() {
    let (violations, support_ok) = kagome_flip_symmetry(20, 4);
    assert_eq!(violations, 0);
    assert!(support_ok);
}

#[test]
fn evaluator_guards() {
    let lat = build_lattice(1, 1).unwrap();
    assert!(KagomeEvaluator::<f64>::new(&lat, 2, 0.5).is_err());
    assert!(KagomeEvaluator::<f64>::new(&lat, 2, 0.0).is_err());
    let big = build_lattice(3, 3).unwrap();
    assert!(KagomeEvaluator::<f64>::new(&big, 1, 0.1).is_err());
    let probs = kagome_class_probability(&lat, &[Bits::zeros(3), Bits::zeros(3)], 0.1f64).unwrap();
    let marginal = kagome_marginal(&probs);
    assert!(marginal[0] > marginal[1]);
}
