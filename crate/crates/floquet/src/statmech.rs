//! Partition-function engines.
//!
//! [`FlavorIsing`] is the `(n-1)`-flavor Ising model on one color's
//! triangular superlattice that arises from `n`-th moments of the decohered
//! state. Spins `σ^r_i`, `r = 1..n-1`, sit on supervertices; each superedge
//! carries the weight
//!
//! ```text
//! x^{c (Σ_r [σ^r_i σ^r_j ≠ s^r_ij] + [Π_r σ^r_i σ^r_j ≠ s^n_ij])},   x = 1 - 2p = e^{-μ}
//! ```
//!
//! where `c` is the label's multiplier and `s` are defect signs. In spin
//! language this is `-H = (cμ/2) Σ (Σ_r s σσ + s Π_r σσ)` up to a constant.
//!
//! The honeycomb random-bond Ising model used for the decoding threshold lives
//! in [`rbim`].

pub mod rbim;

pub use rbim::PairwiseModel;

use crate::error::{Error, Result};
use crate::gf2::Bits;
use crate::lattice::{colored_boundary, edge_support, loop_at, superlattice, Color, ColoredTorusLattice, Direction};
use crate::code::{LogicalLabel, Variant};
use crate::pauli::Pauli;
use crate::Scalar;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Largest number of binary variables summed by brute force.
pub const ENUMERATION_BUDGET: usize = 26;

/// Widest transfer-matrix row, in binary variables.
pub const TRANSFER_WIDTH_BUDGET: usize = 10;

/// One of the seven partition-function labels `(color, index)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Label {
    pub color: Color,
    pub index: u8,
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.color, self.index)
    }
}

/// Which logical family a label's defects come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sector {
    /// Defects from the `L_B^X` family (`Z_{R,1}`, `Z_{G,2}`, `Z_{B,2}`).
    X,
    /// Defects from the `L_R^Y` family (`Z_{R,2}`, `Z_{G,1}`, `Z_{B,1}`, `Z_{B,3}`).
    Z,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelInfo {
    pub label: Label,
    pub multiplier: u32,
    pub sector: Sector,
    /// Logical whose crossing edges form the defect cocycle.
    pub defect: LogicalLabel,
}

const fn info(color: Color, index: u8, multiplier: u32, sector: Sector, dc: Color, db: Pauli) -> LabelInfo {
    LabelInfo {
        label: Label { color, index },
        multiplier,
        sector,
        defect: LogicalLabel { color: dc, basis: db },
    }
}

/// The seven labels of the 4-round evolution.
pub const LABELS: [LabelInfo; 7] = [
    info(Color::R, 1, 3, Sector::X, Color::B, Pauli::X),
    info(Color::G, 1, 5, Sector::Z, Color::R, Pauli::Y),
    info(Color::B, 1, 1, Sector::Z, Color::R, Pauli::Y),
    info(Color::R, 2, 5, Sector::Z, Color::B, Pauli::X),
    info(Color::G, 2, 3, Sector::X, Color::R, Pauli::Z),
    info(Color::B, 2, 6, Sector::X, Color::R, Pauli::Z),
    info(Color::B, 3, 1, Sector::Z, Color::G, Pauli::X),
];

/// Labels of the toric-variant schedule, where the B round is replaced by
/// direct vertex measurements.
pub const TORIC_LABELS: [LabelInfo; 8] = [
    info(Color::R, 1, 4, Sector::X, Color::G, Pauli::X),
    info(Color::R, 2, 4, Sector::X, Color::G, Pauli::X),
    info(Color::G, 1, 4, Sector::Z, Color::R, Pauli::Y),
    info(Color::G, 2, 4, Sector::Z, Color::R, Pauli::Y),
    info(Color::B, 1, 1, Sector::Z, Color::R, Pauli::Y),
    info(Color::B, 2, 3, Sector::X, Color::G, Pauli::X),
    info(Color::B, 3, 1, Sector::X, Color::G, Pauli::X),
    info(Color::B, 4, 3, Sector::Z, Color::R, Pauli::Y),
];

pub fn labels(variant: Variant) -> &'static [LabelInfo] {
    match variant {
        Variant::Floquet => &LABELS,
        Variant::Toric => &TORIC_LABELS,
    }
}

/// Multiplier mode: the finite 4-round window or the long-evolution limit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Coefficients {
    FourRound,
    SteadyState,
}

/// Label → multiplier.
pub fn coefficient_table(mode: Coefficients) -> Vec<(Label, u32)> {
    LABELS
        .iter()
        .map(|i| {
            let c = match mode {
                Coefficients::FourRound => i.multiplier,
                Coefficients::SteadyState => 6,
            };
            (i.label, c)
        })
        .collect()
}

pub fn label_info(label: Label) -> Result<LabelInfo> {
    LABELS
        .iter()
        .copied()
        .find(|i| i.label == label)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown label {label}")))
}

/// Defect bits per flavor and direction.
///
/// `d[k]` holds one bit per flavor (bit `r` for flavor `r`) for defects
/// dual to loops along direction `k`. When `product` is set the last replica
/// carries the parity of each `d[k]`; otherwise it carries none.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DefectSpec {
    pub d: [u32; 2],
    pub product: bool,
}

impl DefectSpec {
    pub fn none() -> Self {
        DefectSpec { d: [0, 0], product: true }
    }

    pub fn is_trivial(&self) -> bool {
        self.d == [0, 0]
    }
}

/// Bond (superedge) of the flavor model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bond {
    pub ends: [usize; 2],
    /// Row displacement from `ends[0]` to `ends[1]`.
    pub dy: i64,
}

/// Geometry shared by every label of one color.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FlavorGeometry {
    pub color: Color,
    pub l1: usize,
    pub l2: usize,
    pub bonds: Vec<Bond>,
}

impl FlavorGeometry {
    pub fn new(lat: &ColoredTorusLattice, color: Color) -> Self {
        let sl = superlattice(lat, color);
        FlavorGeometry {
            color,
            l1: lat.l1,
            l2: lat.l2,
            bonds: sl
                .superedges
                .iter()
                .map(|s| Bond { ends: s.ends, dy: s.shift[1] })
                .collect(),
        }
    }

    pub fn num_sites(&self) -> usize {
        self.l1 * self.l2
    }

    /// Superedges crossed by the logical `label` along `dir`: the edges of
    /// this color sharing one qubit with its support.
    pub fn defect_mask(&self, lat: &ColoredTorusLattice, label: LogicalLabel, dir: Direction) -> Bits {
        let sl = superlattice(lat, self.color);
        let lp = loop_at(lat, dir, label.color, [0, 0]);
        let support = edge_support(lat, &lp.edges);
        let mut m = Bits::zeros(self.bonds.len());
        for e in colored_boundary(lat, &support, self.color) {
            m.set(sl.superedge_of_edge[&e], true);
        }
        m
    }
}

/// An `(n-1)`-flavor Ising instance with fixed defect signs.
#[derive(Clone, Debug)]
pub struct FlavorIsing<T> {
    pub n: usize,
    pub multiplier: u32,
    pub x: T,
    pub geometry: FlavorGeometry,
    /// Per bond: flavor sign bits (bit `r`) and the last-replica sign.
    pub signs: Vec<(u32, bool)>,
}

/// Method used for a partition function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Enumeration,
    TransferMatrix,
    MonteCarlo,
}

impl<T: Scalar> FlavorIsing<T> {
    pub fn new(geometry: FlavorGeometry, n: usize, multiplier: u32, p: T) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument("replica count must be at least 2".into()));
        }
        if n > 31 {
            return Err(Error::InvalidArgument("replica count too large".into()));
        }
        if !(p >= T::zero() && p <= T::of(0.5)) {
            return Err(Error::InvalidArgument(format!("error rate {p} outside [0, 1/2]")));
        }
        let signs = vec![(0, false); geometry.bonds.len()];
        Ok(FlavorIsing {
            n,
            multiplier,
            x: T::one() - T::of(2.0) * p,
            geometry,
            signs,
        })
    }

    /// `μ = -log(1 - 2p)`.
    pub fn mu(&self) -> T {
        -self.x.ln()
    }

    pub fn flavors(&self) -> usize {
        self.n - 1
    }

    /// Toggle defect signs from per-direction masks; inserting the same
    /// defect twice restores the original signs.
    pub fn with_defects(mut self, masks: &[Bits; 2], defect: DefectSpec) -> Self {
        let full = (1u32 << self.flavors()) - 1;
        for (b, s) in self.signs.iter_mut().enumerate() {
            let mut fl = 0u32;
            let mut last = false;
            for k in 0..2 {
                if masks[k].get(b) {
                    fl ^= defect.d[k] & full;
                    if defect.product {
                        last ^= (defect.d[k] & full).count_ones() % 2 == 1;
                    }
                }
            }
            s.0 ^= fl;
            s.1 ^= last;
        }
        self
    }

    /// Total weighted broken-bond count of one configuration, given as one
    /// flavor word per site; its weight is `x^{c k}`.
    pub fn broken_count(&self, config: &[u32]) -> u32 {
        self.geometry
            .bonds
            .iter()
            .enumerate()
            .map(|(b, bond)| self.broken(b, config[bond.ends[0]], config[bond.ends[1]]))
            .sum()
    }

    /// Weighted broken-bond count of a bond for flavor words `a`, `b`.
    #[inline]
    fn broken(&self, bond: usize, a: u32, b: u32) -> u32 {
        let (fl, last) = self.signs[bond];
        let rel = a ^ b;
        (rel ^ fl).count_ones() + ((rel.count_ones() % 2 == 1) ^ last) as u32
    }

    /// `x^{c k}` for `k = 0..=n`.
    fn powers(&self) -> Vec<T> {
        (0..=self.n as u32)
            .map(|k| {
                if k == 0 {
                    T::one()
                } else {
                    self.x.powi((self.multiplier * k) as i32)
                }
            })
            .collect()
    }

    /// Histogram of total broken counts over all configurations.
    pub fn histogram(&self) -> Result<Vec<u64>> {
        let f = self.flavors();
        let vars = f * self.geometry.num_sites();
        if vars > ENUMERATION_BUDGET {
            return Err(Error::BudgetExceeded {
                what: "flavor Ising enumeration".into(),
                needed: vars as u64,
                limit: ENUMERATION_BUDGET as u64,
            });
        }
        let max = self.n * self.geometry.bonds.len();
        let mask = (1u64 << f) - 1;
        let chunks: Vec<u64> = (0..(1u64 << vars)).step_by(1 << 12.min(vars)).collect();
        let hist = chunks
            .par_iter()
            .map(|&start| {
                let mut h = vec![0u64; max + 1];
                let end = (start + (1 << 12.min(vars))).min(1 << vars);
                for cfg in start..end {
                    let mut k = 0u32;
                    for (b, bond) in self.geometry.bonds.iter().enumerate() {
                        let a = ((cfg >> (f * bond.ends[0])) & mask) as u32;
                        let c = ((cfg >> (f * bond.ends[1])) & mask) as u32;
                        k += self.broken(b, a, c);
                    }
                    h[k as usize] += 1;
                }
                h
            })
            .reduce(
                || vec![0u64; max + 1],
                |mut a, b| {
                    for (x, y) in a.iter_mut().zip(b) {
                        *x += y;
                    }
                    a
                },
            );
        Ok(hist)
    }

    /// `log Σ_k N_k x^{c k}`.
    pub fn log_from_histogram(&self, hist: &[u64]) -> T {
        let mut z = T::zero();
        for (k, &nk) in hist.iter().enumerate() {
            if nk == 0 {
                continue;
            }
            let w = if k == 0 {
                T::one()
            } else {
                self.x.powi((self.multiplier as usize * k) as i32)
            };
            z = z + T::of(nk as f64) * w;
        }
        z.ln()
    }

    fn transfer_feasible(&self) -> bool {
        self.geometry.l2 >= 3 && self.flavors() * self.geometry.l1 <= TRANSFER_WIDTH_BUDGET
    }

    /// Exact `log Z`: enumeration for small instances, the row transfer
    /// matrix otherwise.
    pub fn log_partition(&self) -> Result<(T, Method)> {
        let vars = self.flavors() * self.geometry.num_sites();
        if vars <= 12 || (vars <= ENUMERATION_BUDGET && !self.transfer_feasible()) {
            let h = self.histogram()?;
            return Ok((self.log_from_histogram(&h), Method::Enumeration));
        }
        Ok((self.log_partition_transfer()?, Method::TransferMatrix))
    }

    /// `log Tr Π_r A_r` with `A_r[s][t]` the weight of the bonds between rows
    /// `r` and `r + 1` and inside row `r + 1`.
    pub fn log_partition_transfer(&self) -> Result<T> {
        let g = &self.geometry;
        let f = self.flavors();
        let width = f * g.l1;
        if g.l2 < 3 {
            return Err(Error::InvalidArgument("transfer matrix needs at least three rows".into()));
        }
        if width > TRANSFER_WIDTH_BUDGET {
            return Err(Error::BudgetExceeded {
                what: "transfer-matrix row width".into(),
                needed: width as u64,
                limit: TRANSFER_WIDTH_BUDGET as u64,
            });
        }
        let pw = self.powers();
        let states = 1usize << width;
        let mask = (1u32 << f) - 1;
        let spin = |s: usize, c1: usize| ((s >> (f * c1)) as u32) & mask;
        // Bonds grouped by row of their lower end.
        let mut intra: Vec<Vec<(usize, usize, usize)>> = vec![Vec::new(); g.l2];
        let mut inter: Vec<Vec<(usize, usize, usize)>> = vec![Vec::new(); g.l2];
        for (b, bond) in g.bonds.iter().enumerate() {
            let [i, j] = bond.ends;
            let (ri, rj) = (i / g.l1, j / g.l1);
            match bond.dy {
                0 => intra[ri].push((b, i % g.l1, j % g.l1)),
                1 => inter[ri].push((b, i % g.l1, j % g.l1)),
                -1 => inter[rj].push((b, j % g.l1, i % g.l1)),
                _ => return Err(Error::InvalidArgument("bond spans more than one row".into())),
            }
        }
        let row_weight = |r: usize, s: usize| -> T {
            let mut w = T::one();
            for &(b, a, c) in &intra[r] {
                w = w * pw[self.broken(b, spin(s, a), spin(s, c)) as usize];
            }
            w
        };
        let matrix = |r: usize| -> Vec<T> {
            let next = (r + 1) % g.l2;
            let rw: Vec<T> = (0..states).map(|t| row_weight(next, t)).collect();
            let mut m = vec![T::zero(); states * states];
            m.par_chunks_mut(states).enumerate().for_each(|(s, row)| {
                for (t, x) in row.iter_mut().enumerate() {
                    let mut w = rw[t];
                    for &(b, a, c) in &inter[r] {
                        let (lo, hi) = (spin(s, a), spin(t, c));
                        let k = if g.bonds[b].dy == 1 {
                            self.broken(b, lo, hi)
                        } else {
                            self.broken(b, hi, lo)
                        };
                        w = w * pw[k as usize];
                    }
                    *x = w;
                }
            });
            m
        };
        let mut prod = matrix(0);
        let mut log_scale = T::zero();
        for r in 1..g.l2 {
            let a = matrix(r);
            let mut next = vec![T::zero(); states * states];
            next.par_chunks_mut(states).enumerate().for_each(|(s, out)| {
                for (k, &pk) in prod[s * states..(s + 1) * states].iter().enumerate() {
                    if pk == T::zero() {
                        continue;
                    }
                    for (o, &ak) in out.iter_mut().zip(&a[k * states..(k + 1) * states]) {
                        *o = *o + pk * ak;
                    }
                }
            });
            let m = next.iter().copied().fold(T::zero(), |a, b| if b > a { b } else { a });
            if m == T::zero() {
                return Ok(T::neg_infinity());
            }
            for x in next.iter_mut() {
                *x = *x / m;
            }
            log_scale = log_scale + m.ln();
            prod = next;
        }
        let tr = (0..states).map(|s| prod[s * states + s]).fold(T::zero(), |a, b| a + b);
        Ok(tr.ln() + log_scale)
    }
}

/// `ΔF = -log(Z_defect / Z)`.
pub fn defect_free_energy<T: Scalar>(
    base: &FlavorIsing<T>,
    masks: &[Bits; 2],
    defect: DefectSpec,
) -> Result<FreeEnergyResult<T>> {
    let (z0, method) = base.log_partition()?;
    let (zd, _) = base.clone().with_defects(masks, defect).log_partition()?;
    Ok(FreeEnergyResult {
        log_z: z0,
        log_z_defect: zd,
        delta_f: z0 - zd,
        error: T::zero(),
        method,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreeEnergyResult<T> {
    pub log_z: T,
    pub log_z_defect: T,
    pub delta_f: T,
    pub error: T,
    pub method: Method,
}

/// A label's instance on a lattice together with its defect masks.
#[derive(Clone, Debug)]
pub struct LabelInstance<T> {
    pub info: LabelInfo,
    pub model: FlavorIsing<T>,
    pub masks: [Bits; 2],
}

impl<T: Scalar> LabelInstance<T> {
    pub fn new(lat: &ColoredTorusLattice, info: LabelInfo, n: usize, p: T, mode: Coefficients) -> Result<Self> {
        let geom = FlavorGeometry::new(lat, info.label.color);
        let masks = Direction::ALL.map(|d| geom.defect_mask(lat, info.defect, d));
        let c = match mode {
            Coefficients::FourRound => info.multiplier,
            Coefficients::SteadyState => 6,
        };
        Ok(LabelInstance {
            info,
            model: FlavorIsing::new(geom, n, c, p)?,
            masks,
        })
    }

    pub fn log_partition(&self, defect: DefectSpec) -> Result<T> {
        if defect.is_trivial() {
            return Ok(self.model.log_partition()?.0);
        }
        Ok(self.model.clone().with_defects(&self.masks, defect).log_partition()?.0)
    }
}
