use floquet::gf2::Bits;
use floquet::lattice::{build_lattice, Color, Direction};
use floquet::statmech::rbim::*;
use floquet::statmech::*;
use proptest::prelude::*;

fn instance(l1: usize, l2: usize, color: Color, n: usize, c: u32, p: f64) -> FlavorIsing<f64> {
    let lat = build_lattice(l1, l2).unwrap();
    FlavorIsing::new(FlavorGeometry::new(&lat, color), n, c, p).unwrap()
}

fn masks(l1: usize, l2: usize, info: LabelInfo) -> [Bits; 2] {
    let lat = build_lattice(l1, l2).unwrap();
    let g = FlavorGeometry::new(&lat, info.label.color);
    Direction::ALL.map(|d| g.defect_mask(&lat, info.defect, d))
}

/// Plain Ising sum over one spin per site with weight `x^{w [σ_i ≠ σ_j]}`.
fn plain_ising(model: &FlavorIsing<f64>, w: u32) -> f64 {
    let g = &model.geometry;
    let sites = g.num_sites();
    let mut z = 0.0;
    for cfg in 0u64..1 << sites {
        let k: u32 = g
            .bonds
            .iter()
            .map(|b| (((cfg >> b.ends[0]) ^ (cfg >> b.ends[1])) & 1) as u32)
            .sum();
        z += model.x.powi((w * k) as i32);
    }
    z.ln()
}

#[test]
fn coefficient_table_values() {
    let t = coefficient_table(Coefficients::FourRound);
    let get = |c: Color, i: u8| t.iter().find(|(l, _)| l.color == c && l.index == i).unwrap().1;
    assert_eq!(get(Color::R, 1), 3);
    assert_eq!(get(Color::G, 1), 5);
    assert_eq!(get(Color::B, 1), 1);
    assert_eq!(get(Color::R, 2), 5);
    assert_eq!(get(Color::G, 2), 3);
    assert_eq!(get(Color::B, 2), 6);
    assert_eq!(get(Color::B, 3), 1);
    assert!(coefficient_table(Coefficients::SteadyState).iter().all(|&(_, c)| c == 6));
}

#[test]
fn zero_coupling_counts_states() {
    for n in [2, 3, 4] {
        for (l1, l2) in [(2, 2), (2, 3), (3, 3)] {
            let m = instance(l1, l2, Color::B, n, 3, 0.0);
            if m.flavors() * m.geometry.num_sites() > ENUMERATION_BUDGET {
                continue;
            }
            let (lz, _) = m.log_partition().unwrap();
            let want = ((n - 1) * l1 * l2) as f64 * std::f64::consts::LN_2;
            assert!((lz - want).abs() < 1e-12, "{n} {l1}x{l2}");
        }
    }
}

#[test]
fn two_replicas_reduce_to_plain_ising() {
    for &(l1, l2) in &[(2, 2), (3, 3), (3, 4)] {
        for &c in &[1u32, 3, 6] {
            for &p in &[0.01, 0.1, 0.3, 0.45] {
                let m = instance(l1, l2, Color::R, 2, c, p);
                let (lz, _) = m.log_partition().unwrap();
                assert!((lz - plain_ising(&m, 2 * c)).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn strong_coupling_limit() {
    // at x = 0 only the globally aligned configurations survive, one per flavor word
    for n in [2, 3] {
        let m = instance(3, 3, Color::G, n, 5, 0.5);
        let (lz, _) = m.log_partition().unwrap();
        assert!((lz - (n - 1) as f64 * std::f64::consts::LN_2).abs() < 1e-12);
        // approach: log Z - (n-1) log 2 shrinks with x
        let gap = |p: f64| instance(3, 3, Color::G, n, 1, p).log_partition().unwrap().0 - lz;
        assert!(gap(0.1) > gap(0.2) && gap(0.2) > gap(0.3) && gap(0.3) > 0.0);
    }
}

#[test]
fn defect_free_energy_limits() {
    let info = LABELS[5];
    let mk = masks(3, 3, info);
    for n in [2, 3] {
        let base = instance(3, 3, info.label.color, n, info.multiplier, 0.2);
        let f0 = defect_free_energy(&base, &mk, DefectSpec::none()).unwrap();
        assert_eq!(f0.delta_f, 0.0);
        assert_eq!(f0.error, 0.0);
        let clean = instance(3, 3, info.label.color, n, info.multiplier, 0.0);
        for d in 1..1u32 << (n - 1) {
            for spec in [DefectSpec { d: [d, 0], product: false }, DefectSpec { d: [d, d], product: true }] {
                assert!(defect_free_energy(&clean, &mk, spec).unwrap().delta_f.abs() < 1e-12);
                assert!(defect_free_energy(&base, &mk, spec).unwrap().delta_f > 0.0);
            }
        }
    }
}

#[test]
fn defect_cost_grows_with_size_near_half() {
    let info = LABELS[0];
    for n in [2, 3] {
        let mut prev = 0.0;
        for l in [2, 3, 4] {
            let base = instance(l, l, info.label.color, n, info.multiplier, 0.4);
            let f = defect_free_energy(&base, &masks(l, l, info), DefectSpec { d: [1, 0], product: false })
                .unwrap()
                .delta_f;
            assert!(f > prev, "n={n} l={l}: {f} <= {prev}");
            prev = f;
        }
    }
}

#[test]
fn transfer_matches_enumeration() {
    for &(l1, l2, n) in &[(3, 3, 2), (3, 4, 2), (2, 4, 3), (3, 3, 3), (4, 3, 2)] {
        for info in LABELS {
            for &p in &[0.02, 0.15, 0.4] {
                let base = instance(l1, l2, info.label.color, n, info.multiplier, p);
                let mk = masks(l1, l2, info);
                for spec in [DefectSpec::none(), DefectSpec { d: [1, 0], product: false }, DefectSpec { d: [1, 1], product: true }] {
                    let m = base.clone().with_defects(&mk, spec);
                    let e = m.log_from_histogram(&m.histogram().unwrap());
                    let t = m.log_partition_transfer().unwrap();
                    assert!((e - t).abs() < 1e-10 * e.abs().max(1.0), "{l1}x{l2} n={n} {}: {e} vs {t}", info.label);
                }
            }
        }
    }
}

#[test]
fn over_budget_is_an_error() {
    let m = instance(6, 6, Color::B, 3, 6, 0.1);
    assert!(matches!(m.histogram(), Err(floquet::Error::BudgetExceeded { .. })));
    assert!(FlavorIsing::new(m.geometry.clone(), 1, 1, 0.1f64).is_err());
    assert!(FlavorIsing::new(m.geometry.clone(), 2, 1, 0.6f64).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn flavor_flip_and_permutation_preserve_weights(
        seed in any::<u64>(),
        n in 3usize..=5,
        flip in 0usize..4,
        d0 in 0u32..16,
        d1 in 0u32..16,
        product in any::<bool>(),
    ) {
        use rand::{Rng, SeedableRng};
        let info = LABELS[(seed % 7) as usize];
        let f = n - 1;
        let full = (1u32 << f) - 1;
        let mk = masks(3, 3, info);
        let spec = DefectSpec { d: [d0 & full, d1 & full], product };
        let m = instance(3, 3, info.label.color, n, info.multiplier, 0.1).with_defects(&mk, spec);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let cfg: Vec<u32> = (0..9).map(|_| rng.gen::<u32>() & full).collect();
        let k = m.broken_count(&cfg);
        // global flip of one flavor
        let r = flip % f;
        let flipped: Vec<u32> = cfg.iter().map(|w| w ^ (1 << r)).collect();
        prop_assert_eq!(m.broken_count(&flipped), k);
        // swapping two flavors in both the spins and the defect vector
        let (a, b) = (0, f - 1);
        let swap = |w: u32| {
            let (x, y) = ((w >> a) & 1, (w >> b) & 1);
            (w & !(1 << a) & !(1 << b)) | (y << a) | (x << b)
        };
        let swapped = DefectSpec { d: spec.d.map(swap), product };
        let m2 = instance(3, 3, info.label.color, n, info.multiplier, 0.1).with_defects(&mk, swapped);
        let cfg2: Vec<u32> = cfg.iter().map(|&w| swap(w)).collect();
        prop_assert_eq!(m2.broken_count(&cfg2), k);
    }

    #[test]
    fn defect_twice_is_identity(
        which in 0usize..7,
        d0 in 0u32..4,
        d1 in 0u32..4,
        product in any::<bool>(),
        p in 0.0f64..0.5,
    ) {
        let info = LABELS[which];
        let mk = masks(2, 3, info);
        let spec = DefectSpec { d: [d0, d1], product };
        let base = instance(2, 3, info.label.color, 3, info.multiplier, p);
        let twice = base.clone().with_defects(&mk, spec).with_defects(&mk, spec);
        prop_assert!(twice.signs.iter().all(|&s| s == (0, false)));
        prop_assert_eq!(twice.log_partition().unwrap().0, base.log_partition().unwrap().0);
    }

    #[test]
    fn flavor_permutation_preserves_log_z(which in 0usize..7, p in 0.01f64..0.49) {
        let info = LABELS[which];
        let mk = masks(2, 3, info);
        let base = instance(2, 3, info.label.color, 4, info.multiplier, p);
        let a = base.clone().with_defects(&mk, DefectSpec { d: [0b001, 0b100], product: true }).log_partition().unwrap().0;
        let b = base.clone().with_defects(&mk, DefectSpec { d: [0b010, 0b001], product: true }).log_partition().unwrap().0;
        let c = base.with_defects(&mk, DefectSpec { d: [0b100, 0b010], product: true }).log_partition().unwrap().0;
        prop_assert!((a - b).abs() < 1e-12 && (a - c).abs() < 1e-12);
    }
}

// honeycomb random-bond Ising model

#[test]
fn zero_coupling_has_no_defect_cost() {
    for w in [4, 6] {
        let f = rbim_sample_free_energy(w, 0.5f64, 3, true).unwrap();
        assert_eq!(nishimori_coupling(0.5f64).unwrap(), 0.0);
        assert!(f.delta_f.abs() < 1e-12);
    }
}

#[test]
fn ordered_defect_cost_grows_with_width() {
    let mut prev = 0.0;
    for w in [2, 4, 6, 8] {
        let strip = HoneycombStrip::new(w, w).unwrap();
        let clean = vec![false; strip.bonds.len()];
        let f = strip_free_energy(&strip, 1.5f64, &clean, true).unwrap().delta_f;
        assert!(f > prev, "{w}: {f}");
        prev = f;
    }
}

/// Exact disorder average of `Σ_b ⟨η_b σσ⟩` on a model with `bonds` edges.
fn nishimori_average(sites: usize, edges: &[(usize, usize)], p: f64) -> f64 {
    let j = nishimori_coupling(p).unwrap();
    let b = edges.len();
    let mut avg = 0.0;
    for eta in 0u64..1 << b {
        let mut m = PairwiseModel::new(sites);
        for (k, &(u, v)) in edges.iter().enumerate() {
            m.add_bond(u, v, if (eta >> k) & 1 == 1 { -j } else { j });
        }
        let (_, e) = m.enumerate().unwrap();
        let neg = eta.count_ones() as i32;
        avg += p.powi(neg) * (1.0 - p).powi(b as i32 - neg) * e / j;
    }
    avg
}

#[test]
fn nishimori_identity_exact() {
    let strip = HoneycombStrip::new(2, 3).unwrap();
    let mut triangle_plus = vec![(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 0), (1, 4)];
    for &p in &[0.05, 0.0675, 0.2, 0.4] {
        let got = nishimori_average(strip.num_sites(), &strip.bonds, p);
        let want = strip.bonds.len() as f64 * (1.0 - 2.0 * p);
        assert!((got - want).abs() < 1e-10, "{p}: {got} vs {want}");
        let got = nishimori_average(5, &triangle_plus, p);
        assert!((got - triangle_plus.len() as f64 * (1.0 - 2.0 * p)).abs() < 1e-10);
    }
    // off the line the identity fails
    triangle_plus.truncate(5);
    let j: f64 = nishimori_coupling(0.1).unwrap();
    let mut m = PairwiseModel::new(5);
    for &(u, v) in &triangle_plus {
        m.add_bond(u, v, 2.0 * j);
    }
    let (_, e) = m.enumerate().unwrap();
    assert!((e / (2.0 * j) - 5.0 * 0.8).abs() > 1e-3);
}

#[test]
fn monte_carlo_matches_transfer_matrix() {
    let strip = HoneycombStrip::new(4, 4).unwrap();
    let signs = strip.disorder(0.1, 5);
    let j = nishimori_coupling(0.1f64).unwrap();
    let exact = strip_free_energy(&strip, j, &signs, true).unwrap();
    let cfg = MonteCarloConfig {
        thermalize: 200,
        sweeps: 4000,
        nodes: 10,
        seed: 9,
    };
    let mc = monte_carlo_free_energy(&strip.model(j, &signs, false), &strip.seam, &cfg).unwrap();
    assert_eq!(mc.method, Method::MonteCarlo);
    assert!(mc.error > 0.0);
    assert!((mc.log_z - exact.log_z).abs() < 0.05 * exact.log_z.abs(), "{} vs {}", mc.log_z, exact.log_z);
    assert!((mc.delta_f - exact.delta_f).abs() < 5.0 * mc.error + 0.05, "{} ± {} vs {}", mc.delta_f, mc.error, exact.delta_f);
}

#[test]
fn monte_carlo_nishimori_identity() {
    let strip = HoneycombStrip::new(6, 6).unwrap();
    let p = 0.1;
    let j = nishimori_coupling(p).unwrap();
    let b = strip.bonds.len() as f64;
    let samples = 40;
    let mut vals = Vec::new();
    for s in 0..samples {
        let signs = strip.disorder(p, 100 + s);
        let cfg = MonteCarloConfig {
            thermalize: 100,
            sweeps: 400,
            nodes: 1,
            seed: s,
        };
        let (e, _) = monte_carlo_bond_energy(&strip.model(j, &signs, false), &cfg).unwrap();
        vals.push(e / j / b);
    }
    let (m, err) = mean_stderr(&vals);
    assert!((m - (1.0 - 2.0 * p)).abs() < 4.0 * err + 0.01, "{m} ± {err}");
}

#[test]
fn clean_control_crossing() {
    let couplings: Vec<f64> = (0..=24).map(|k| 0.55 + 0.01 * k as f64).collect();
    let kc = clean_crossing(&[6, 8, 10, 12], &couplings).unwrap();
    // exact honeycomb critical coupling: tanh K = 1/sqrt 3, by bisection
    let (mut lo, mut hi) = (0.1f64, 2.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid.tanh() < 1.0 / 3f64.sqrt() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    assert!((kc - lo).abs() / lo < 0.02, "{kc} vs {lo}");
}
