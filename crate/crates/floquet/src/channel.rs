//! Error models and counter-based sampling.
//!
//! The simple model applies, before every round, each of the six two-qubit
//! errors `E_R^Y, E_R^Z, E_G^X, E_G^Z, E_B^X, E_B^Y` independently on every
//! edge of the matching color. The single-qubit model flips each plaquette
//! with `X` before the G and B rounds.
//!
//! Sampling draws one ChaCha8 stream per time step (stream id = step index)
//! and consumes it in the fixed order (site, type), so a configuration depends
//! only on the seed and never on the worker count.

use crate::code::edge_operator;
use crate::error::{invalid, Result};
use crate::gf2::Bits;
use crate::lattice::{Color, ColoredTorusLattice};
use crate::pauli::{Pauli, PauliString};
use crate::Scalar;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Odd-parity probability of six independent Bernoulli(p) trials:
/// `6p(1-p)^5 + 20p^3(1-p)^3 + 6p^5(1-p)`.
pub fn effective_rate<T: Scalar>(p: T) -> Result<T> {
    if !(p >= T::zero() && p <= T::of(0.5)) {
        return invalid(format!("error rate {p} outside [0, 1/2]"));
    }
    let q = T::one() - p;
    Ok(T::of(6.0) * p * q.powi(5) + T::of(20.0) * p.powi(3) * q.powi(3) + T::of(6.0) * p.powi(5) * q)
}

/// Solve `effective_rate(p) = target` for `p ∈ [0, 1/2]` by bisection.
pub fn invert_effective_rate(target: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&target) {
        return invalid(format!("effective rate {target} outside [0, 1/2]"));
    }
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if effective_rate(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// A two-qubit error `E_color^basis` on edges of `color`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ErrorType {
    pub color: Color,
    pub basis: Pauli,
}

pub const SIMPLE_TYPES: [ErrorType; 6] = [
    ErrorType { color: Color::R, basis: Pauli::Y },
    ErrorType { color: Color::R, basis: Pauli::Z },
    ErrorType { color: Color::G, basis: Pauli::X },
    ErrorType { color: Color::G, basis: Pauli::Z },
    ErrorType { color: Color::B, basis: Pauli::X },
    ErrorType { color: Color::B, basis: Pauli::Y },
];

fn check_rate(p: f64) -> Result<()> {
    if !(0.0..=0.5).contains(&p) {
        return invalid(format!("error rate {p} outside [0, 1/2]"));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimpleErrorModel {
    /// One rate per entry of [`SIMPLE_TYPES`].
    pub rates: [f64; 6],
}

impl SimpleErrorModel {
    pub fn uniform(p: f64) -> Result<Self> {
        Self::new([p; 6])
    }

    pub fn new(rates: [f64; 6]) -> Result<Self> {
        for &p in &rates {
            check_rate(p)?;
        }
        Ok(SimpleErrorModel { rates })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingleXErrorModel {
    pub p: f64,
}

impl SingleXErrorModel {
    pub fn new(p: f64) -> Result<Self> {
        check_rate(p)?;
        Ok(SingleXErrorModel { p })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ErrorModel {
    Simple(SimpleErrorModel),
    SingleX(SingleXErrorModel),
}

impl ErrorModel {
    /// Rates of the per-site types, in layout order.
    fn type_rates(&self) -> Vec<f64> {
        match self {
            ErrorModel::Simple(m) => m.rates.to_vec(),
            ErrorModel::SingleX(m) => vec![m.p],
        }
    }
}

/// Occurrence bits per (step, site, type).
///
/// For the simple model a site is an edge and the types are the two
/// [`SIMPLE_TYPES`] entries of the edge's color (so `types_per_site = 2`).
/// For the single-X model a site is a plaquette and there is one type.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorConfiguration {
    pub model: ErrorModel,
    pub sites_per_step: usize,
    pub types_per_site: usize,
    pub steps: Vec<Bits>,
    pub log_prob: f64,
}

impl ErrorConfiguration {
    pub fn empty(model: ErrorModel, lat: &ColoredTorusLattice, steps: usize) -> Self {
        let (sites, types) = layout(&model, lat);
        let mut c = ErrorConfiguration {
            model,
            sites_per_step: sites,
            types_per_site: types,
            steps: vec![Bits::zeros(sites * types); steps],
            log_prob: 0.0,
        };
        c.log_prob = c.compute_log_prob(lat);
        c
    }

    pub fn num_steps(&self) -> usize {
        self.steps.len()
    }

    pub fn get(&self, step: usize, site: usize, ty: usize) -> bool {
        self.steps[step].get(site * self.types_per_site + ty)
    }

    pub fn set(&mut self, lat: &ColoredTorusLattice, step: usize, site: usize, ty: usize, v: bool) {
        self.steps[step].set(site * self.types_per_site + ty, v);
        self.log_prob = self.compute_log_prob(lat);
    }

    pub fn occurrences(&self) -> usize {
        self.steps.iter().map(|b| b.count_ones() as usize).sum()
    }

    /// Rate of the `ty`-th type at `site`.
    fn slot_rate(&self, lat: &ColoredTorusLattice, site: usize, ty: usize) -> f64 {
        match &self.model {
            ErrorModel::Simple(m) => {
                let c = lat.edges[site].color;
                m.rates[simple_type_index(c, ty)]
            }
            ErrorModel::SingleX(m) => m.p,
        }
    }

    /// `Σ bits·log p + (1 - bits)·log(1 - p)` over every slot.
    pub fn compute_log_prob(&self, lat: &ColoredTorusLattice) -> f64 {
        let mut lp = 0.0;
        for bits in &self.steps {
            for site in 0..self.sites_per_step {
                for ty in 0..self.types_per_site {
                    let p = self.slot_rate(lat, site, ty);
                    let b = bits.get(site * self.types_per_site + ty);
                    lp += if b { p.ln() } else { (-p).ln_1p() };
                }
            }
        }
        lp
    }

    /// Error operators that occurred at `step`, in layout order.
    pub fn operators_at(&self, lat: &ColoredTorusLattice, step: usize) -> Vec<PauliString> {
        let n = lat.num_qubits();
        self.steps[step]
            .ones()
            .map(|k| {
                let (site, ty) = (k / self.types_per_site, k % self.types_per_site);
                match &self.model {
                    ErrorModel::Simple(_) => {
                        let t = SIMPLE_TYPES[simple_type_index(lat.edges[site].color, ty)];
                        edge_operator(lat, site, t.basis)
                    }
                    ErrorModel::SingleX(_) => PauliString::uniform(n, Pauli::X, [site]),
                }
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("configuration serializes")
    }
}

/// Index into [`SIMPLE_TYPES`] of the `ty`-th type on an edge of color `c`.
pub fn simple_type_index(c: Color, ty: usize) -> usize {
    2 * c.index() + ty
}

fn layout(model: &ErrorModel, lat: &ColoredTorusLattice) -> (usize, usize) {
    match model {
        ErrorModel::Simple(_) => (lat.edges.len(), 2),
        ErrorModel::SingleX(_) => (lat.num_qubits(), 1),
    }
}

/// Independent Bernoulli draws for every (step, site, type).
pub fn sample(model: &ErrorModel, lat: &ColoredTorusLattice, steps: usize, seed: u64) -> ErrorConfiguration {
    sample_steps(model, lat, 0..steps, seed)
}

/// Like [`sample`] but for an arbitrary range of step ids, so that disjoint
/// ranges reproduce the same bits as one long run.
pub fn sample_steps(
    model: &ErrorModel,
    lat: &ColoredTorusLattice,
    steps: std::ops::Range<usize>,
    seed: u64,
) -> ErrorConfiguration {
    let (sites, types) = layout(model, lat);
    let rates = model.type_rates();
    let bits: Vec<Bits> = steps
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s as u64);
            let mut b = Bits::zeros(sites * types);
            for site in 0..sites {
                for ty in 0..types {
                    let p = match model {
                        ErrorModel::Simple(_) => rates[simple_type_index(lat.edges[site].color, ty)],
                        ErrorModel::SingleX(_) => rates[0],
                    };
                    let u: f64 = rng.gen();
                    if u < p {
                        b.set(site * types + ty, true);
                    }
                }
            }
            b
        })
        .collect();
    let mut c = ErrorConfiguration {
        model: model.clone(),
        sites_per_step: sites,
        types_per_site: types,
        steps: bits,
        log_prob: 0.0,
    };
    c.log_prob = c.compute_log_prob(lat);
    c
}

/// Multiply the frame by every occurred error, in time order.
pub fn apply_to_pauli_frame(
    config: &ErrorConfiguration,
    lat: &ColoredTorusLattice,
    frame: &PauliString,
) -> PauliString {
    let mut f = frame.clone();
    for s in 0..config.num_steps() {
        for e in config.operators_at(lat, s) {
            f.mul_assign(&e);
        }
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_lattice;

    #[test]
    fn rate_limits() {
        assert_eq!(effective_rate(0.0f64).unwrap(), 0.0);
        assert_eq!(effective_rate(0.5f64).unwrap(), 0.5);
        assert!(effective_rate(0.6f64).is_err());
        assert!(effective_rate(-0.1f64).is_err());
        let p = invert_effective_rate(0.0675).unwrap();
        assert!((effective_rate(p).unwrap() - 0.0675).abs() < 1e-14);
    }

    #[test]
    fn zero_rate_gives_empty_configuration() {
        let lat = build_lattice(2, 2).unwrap();
        let m = ErrorModel::Simple(SimpleErrorModel::uniform(0.0).unwrap());
        let c = sample(&m, &lat, 5, 3);
        assert_eq!(c.occurrences(), 0);
        assert_eq!(c.log_prob, 0.0);
    }

    #[test]
    fn step_ranges_compose() {
        let lat = build_lattice(2, 2).unwrap();
        let m = ErrorModel::Simple(SimpleErrorModel::uniform(0.2).unwrap());
        let all = sample(&m, &lat, 6, 11);
        let tail = sample_steps(&m, &lat, 3..6, 11);
        assert_eq!(&all.steps[3..], &tail.steps[..]);
    }
}
