//! Renyi relative entropy `D_em^(n)` and Renyi coherent information
//! `I_c^(n)` from flavor-Ising partition functions.
//!
//! ```text
//! D_em = 1/(1-n) log[ Σ_d Π_{X labels} Z^(d) / (2^{n-1} Π Z) ]
//! I_c  = -2 log 2 + 1/(n-1) log[ Π_{sectors} Σ_{d_1, d_2} Π_{labels} Z^(d_1,d_2) / Π Z ]
//! ```
//!
//! The `D_em` sum runs over `d ∈ {0,1}^{n-1}`, restricted to even weight for
//! the toric variant, with defects only in the flavors (the last replica is
//! the unrotated reference state and carries no logical weight).

use crate::error::{Error, Result};
use crate::lattice::{ColoredTorusLattice, Direction};
use crate::code::Variant;
use crate::statmech::{labels, Coefficients, DefectSpec, LabelInfo, LabelInstance, Method, Sector};
use crate::Scalar;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRequest<T> {
    pub n: usize,
    pub p: T,
    pub variant: Variant,
    pub coefficients: Coefficients,
    /// Direction of the logical tracked by `D_em`.
    pub direction: Direction,
}

impl<T: Scalar> DiagnosticsRequest<T> {
    pub fn new(n: usize, p: T, variant: Variant) -> Result<Self> {
        let r = DiagnosticsRequest {
            n,
            p,
            variant,
            coefficients: Coefficients::FourRound,
            direction: Direction::L1,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidArgument(format!("Renyi index {} must be at least 2", self.n)));
        }
        if !(self.p >= T::zero() && self.p <= T::of(0.5)) {
            return Err(Error::InvalidArgument(format!("error rate {} outside [0, 1/2]", self.p)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsResult<T> {
    pub n: usize,
    pub p: T,
    pub variant: Variant,
    pub d_em: T,
    pub i_c: T,
    /// `log Z` per label without defects, in label-table order.
    pub log_z: Vec<T>,
    /// `log(Σ_d Π Z^(d) / Π Z)` for the `D_em` sum and the two `I_c` sectors.
    pub log_defect_sums: [T; 3],
    pub method: Method,
}

fn log_sum_exp<T: Scalar>(v: &[T]) -> T {
    let m = v.iter().copied().fold(T::neg_infinity(), |a, b| if b > a { b } else { a });
    if m == T::neg_infinity() {
        return m;
    }
    m + v.iter().map(|&x| (x - m).exp()).sum::<T>().ln()
}

struct Labels<T> {
    table: &'static [LabelInfo],
    inst: Vec<LabelInstance<T>>,
    log_z: Vec<T>,
    method: Method,
}

fn build<T: Scalar>(lat: &ColoredTorusLattice, req: &DiagnosticsRequest<T>) -> Result<Labels<T>> {
    let table = labels(req.variant);
    let inst = table
        .iter()
        .map(|&i| LabelInstance::new(lat, i, req.n, req.p, req.coefficients))
        .collect::<Result<Vec<_>>>()?;
    let parts = inst
        .par_iter()
        .map(|l| l.model.log_partition())
        .collect::<Result<Vec<_>>>()?;
    let method = if parts.iter().all(|&(_, m)| m == Method::Enumeration) {
        Method::Enumeration
    } else {
        Method::TransferMatrix
    };
    let log_z = parts.into_iter().map(|(z, _)| z).collect();
    Ok(Labels { table, inst, log_z, method })
}

/// `log(Σ_d Π Z^(d) / Π Z)` over the given labels and defect list.
fn defect_sum<T: Scalar>(labels: &Labels<T>, which: &[usize], defects: &[DefectSpec]) -> Result<T> {
    let terms = defects
        .par_iter()
        .map(|&d| {
            let mut s = T::zero();
            for &k in which {
                s = s + labels.inst[k].log_partition(d)? - labels.log_z[k];
            }
            Ok(s)
        })
        .collect::<Result<Vec<T>>>()?;
    Ok(log_sum_exp(&terms))
}

fn sector_labels(table: &[LabelInfo], s: Sector) -> Vec<usize> {
    (0..table.len()).filter(|&k| table[k].sector == s).collect()
}

fn d_em_defects(n: usize, dir: Direction, variant: Variant) -> Vec<DefectSpec> {
    (0..1u32 << (n - 1))
        .filter(|d| variant == Variant::Floquet || d.count_ones() % 2 == 0)
        .map(|d| {
            let mut dd = [0, 0];
            dd[dir.index()] = d;
            DefectSpec { d: dd, product: false }
        })
        .collect()
}

fn i_c_defects(n: usize) -> Vec<DefectSpec> {
    let m = 1u32 << (n - 1);
    (0..m * m)
        .map(|k| DefectSpec { d: [k % m, k / m], product: true })
        .collect()
}

fn evaluate<T: Scalar>(lat: &ColoredTorusLattice, req: &DiagnosticsRequest<T>) -> Result<DiagnosticsResult<T>> {
    req.validate()?;
    let labels = build(lat, req)?;
    let n = req.n;
    let ln2 = T::LN_2();
    let nf = T::of(n as f64);
    let x_labels = sector_labels(labels.table, Sector::X);
    let em = defect_sum(&labels, &x_labels, &d_em_defects(n, req.direction, req.variant))?;
    let d_em = (em - T::of((n - 1) as f64) * ln2) / (T::one() - nf);
    let sx = defect_sum(&labels, &x_labels, &i_c_defects(n))?;
    let sz = defect_sum(&labels, &sector_labels(labels.table, Sector::Z), &i_c_defects(n))?;
    let i_c = -T::of(2.0) * ln2 + (sx + sz) / (nf - T::one());
    Ok(DiagnosticsResult {
        n,
        p: req.p,
        variant: req.variant,
        d_em,
        i_c,
        log_z: labels.log_z,
        log_defect_sums: [em, sx, sz],
        method: labels.method,
    })
}

/// Both diagnostics in one pass.
pub fn diagnostics<T: Scalar>(lat: &ColoredTorusLattice, req: &DiagnosticsRequest<T>) -> Result<DiagnosticsResult<T>> {
    evaluate(lat, req)
}

pub fn renyi_relative_entropy<T: Scalar>(lat: &ColoredTorusLattice, req: &DiagnosticsRequest<T>) -> Result<T> {
    Ok(evaluate(lat, req)?.d_em)
}

pub fn renyi_coherent_info<T: Scalar>(lat: &ColoredTorusLattice, req: &DiagnosticsRequest<T>) -> Result<T> {
    Ok(evaluate(lat, req)?.i_c)
}

/// Diagnostics at every point of a `p` grid, in grid order.
pub fn sweep<T: Scalar>(
    lat: &ColoredTorusLattice,
    base: &DiagnosticsRequest<T>,
    grid: &[T],
) -> Result<Vec<DiagnosticsResult<T>>> {
    grid.iter()
        .map(|&p| evaluate(lat, &DiagnosticsRequest { p, ..*base }))
        .collect()
}

/// Location of the steepest change of a sampled curve: the midpoint of the
/// steepest grid interval, refined by the vertex of the parabola through
/// the neighbouring interval slopes. Needs a uniform grid.
pub fn inflection(grid: &[f64], values: &[f64]) -> Result<f64> {
    if grid.len() != values.len() {
        return Err(Error::SizeMismatch(grid.len(), values.len()));
    }
    if grid.len() < 2 {
        return Err(Error::InvalidArgument("need at least two grid points".into()));
    }
    let slopes: Vec<f64> = values
        .windows(2)
        .zip(grid.windows(2))
        .map(|(v, g)| ((v[1] - v[0]) / (g[1] - g[0])).abs())
        .collect();
    let k = (0..slopes.len())
        .max_by(|&a, &b| slopes[a].total_cmp(&slopes[b]))
        .expect("nonempty");
    let mid = 0.5 * (grid[k] + grid[k + 1]);
    if k == 0 || k + 1 == slopes.len() {
        return Ok(mid);
    }
    let h = grid[k + 1] - grid[k];
    let (a, b, c) = (slopes[k - 1], slopes[k], slopes[k + 1]);
    let denom = a - 2.0 * b + c;
    if denom >= 0.0 {
        return Ok(mid);
    }
    Ok(mid + 0.5 * h * (a - c) / denom)
}

/// Transition estimates of both diagnostics from one sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionEstimate {
    pub d_em: f64,
    pub i_c: f64,
    /// Grid spacing.
    pub resolution: f64,
}

impl TransitionEstimate {
    pub fn separation(&self) -> f64 {
        (self.d_em - self.i_c).abs()
    }

    pub fn coincide(&self) -> bool {
        self.separation() <= self.resolution
    }
}

pub fn transition_estimates(results: &[DiagnosticsResult<f64>]) -> Result<TransitionEstimate> {
    let grid: Vec<f64> = results.iter().map(|r| r.p).collect();
    if grid.len() < 3 {
        return Err(Error::InvalidArgument("need at least three sweep points".into()));
    }
    let d: Vec<f64> = results.iter().map(|r| r.d_em).collect();
    let i: Vec<f64> = results.iter().map(|r| r.i_c).collect();
    Ok(TransitionEstimate {
        d_em: inflection(&grid, &d)?,
        i_c: inflection(&grid, &i)?,
        resolution: grid[1] - grid[0],
    })
}

/// One regime of the phase table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseEntry<T> {
    pub variant: Variant,
    pub p: T,
    pub i_c: T,
    pub d_em: T,
}

/// `(I_c, D_em)` in the Floquet and toric regimes at `p_low` and in the
/// trivial regime (Floquet schedule) at `p_high`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseTable<T> {
    pub n: usize,
    pub floquet: PhaseEntry<T>,
    pub toric: PhaseEntry<T>,
    pub trivial: PhaseEntry<T>,
}

pub fn phase_table<T: Scalar>(lat: &ColoredTorusLattice, n: usize, p_low: T, p_high: T) -> Result<PhaseTable<T>> {
    if p_low > p_high {
        return Err(Error::InvalidArgument(format!("p_low {p_low} above p_high {p_high}")));
    }
    let entry = |variant: Variant, p: T| -> Result<PhaseEntry<T>> {
        let r = evaluate(lat, &DiagnosticsRequest::new(n, p, variant)?)?;
        Ok(PhaseEntry { variant, p, i_c: r.i_c, d_em: r.d_em })
    };
    Ok(PhaseTable {
        n,
        floquet: entry(Variant::Floquet, p_low)?,
        toric: entry(Variant::Toric, p_low)?,
        trivial: entry(Variant::Floquet, p_high)?,
    })
}
