//! Pairwise Ising models and the honeycomb random-bond Ising model.
//!
//! A [`PairwiseModel`] has weight `exp(Σ_b K_b σ_i σ_j)`. Its partition
//! function is evaluated by brute-force enumeration or by a frontier transfer
//! matrix that adds sites in a fixed order and sums each one out as soon as
//! all its bonds have been applied. On a strip of circumference `W` the
//! frontier holds about `W + 1` spins.
//!
//! The threshold machinery uses a brick-wall honeycomb cylinder: columns are
//! periodic chains of `W` spins, and rungs connect `(x, y)` to `(x + 1, y)`
//! whenever `x + y` is even. The domain-wall free energy is the cost of
//! flipping the seam bonds between rows `W - 1` and `0`.

use super::{FreeEnergyResult, Method, ENUMERATION_BUDGET};
use crate::error::{Error, Result};
use crate::Scalar;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Largest frontier (in spins) held by the transfer matrix.
pub const FRONTIER_BUDGET: usize = 22;

/// Ising model with arbitrary pair couplings; weight `exp(Σ K σ_i σ_j)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairwiseModel<T> {
    pub num_sites: usize,
    pub bonds: Vec<(usize, usize, T)>,
}

/// Neumaier-compensated accumulator.
#[derive(Clone, Copy)]
struct Acc<T> {
    sum: T,
    c: T,
}

impl<T: Scalar> Acc<T> {
    fn new() -> Self {
        Acc { sum: T::zero(), c: T::zero() }
    }

    fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c = self.c + ((self.sum - t) + x);
        } else {
            self.c = self.c + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    fn value(&self) -> T {
        self.sum + self.c
    }
}

impl<T: Scalar> PairwiseModel<T> {
    pub fn new(num_sites: usize) -> Self {
        PairwiseModel {
            num_sites,
            bonds: Vec::new(),
        }
    }

    pub fn add_bond(&mut self, i: usize, j: usize, k: T) {
        self.bonds.push((i, j, k));
    }

    /// `Σ K σ_i σ_j` for spins given as bits (set bit = spin down).
    pub fn energy(&self, config: &[bool]) -> T {
        self.bonds
            .iter()
            .map(|&(i, j, k)| if config[i] == config[j] { k } else { -k })
            .sum()
    }

    fn neighbors(&self) -> Vec<Vec<(usize, T)>> {
        let mut nb = vec![Vec::new(); self.num_sites];
        for &(i, j, k) in &self.bonds {
            if i != j {
                nb[i].push((j, k));
                nb[j].push((i, k));
            }
        }
        nb
    }

    /// Exact `(log Z, ⟨Σ K σσ⟩)` by summing every configuration.
    pub fn enumerate(&self) -> Result<(T, T)> {
        let n = self.num_sites;
        if n > ENUMERATION_BUDGET {
            return Err(Error::BudgetExceeded {
                what: "spin enumeration".into(),
                needed: n as u64,
                limit: ENUMERATION_BUDGET as u64,
            });
        }
        let nb = self.neighbors();
        let shift: T = self.bonds.iter().map(|b| b.2.abs()).sum();
        let low = n.min(14);
        let high = n - low;
        let parts: Vec<(T, T)> = (0..1u64 << high)
            .into_par_iter()
            .map(|top| {
                let mut cfg: Vec<bool> = (0..n).map(|i| i >= low && (top >> (i - low)) & 1 == 1).collect();
                let mut e = self.energy(&cfg);
                let mut z = Acc::new();
                let mut ez = Acc::new();
                for g in 0..1u64 << low {
                    if g > 0 {
                        let s = g.trailing_zeros() as usize;
                        let mut h = T::zero();
                        for &(j, k) in &nb[s] {
                            h = h + if cfg[s] == cfg[j] { k } else { -k };
                        }
                        e = e - h - h;
                        cfg[s] = !cfg[s];
                    }
                    let w = (e - shift).exp();
                    z.add(w);
                    ez.add(w * e);
                }
                (z.value(), ez.value())
            })
            .collect();
        let mut z = Acc::new();
        let mut ez = Acc::new();
        for (a, b) in parts {
            z.add(a);
            ez.add(b);
        }
        Ok((shift + z.value().ln(), ez.value() / z.value()))
    }

    /// Largest frontier when sites are added in `order`.
    pub fn frontier_width(&self, order: &[usize]) -> usize {
        let (_, last) = self.schedule(order);
        let mut live = 0usize;
        let mut max = 0;
        let mut ends = vec![0usize; order.len()];
        for &l in &last {
            ends[l] += 1;
        }
        for t in 0..order.len() {
            live += 1;
            max = max.max(live);
            live -= ends[t];
        }
        max
    }

    fn schedule(&self, order: &[usize]) -> (Vec<usize>, Vec<usize>) {
        let mut pos = vec![usize::MAX; self.num_sites];
        for (t, &s) in order.iter().enumerate() {
            pos[s] = t;
        }
        let mut last: Vec<usize> = (0..self.num_sites).map(|s| pos[s]).collect();
        for &(i, j, _) in &self.bonds {
            let m = pos[i].max(pos[j]);
            last[i] = last[i].max(m);
            last[j] = last[j].max(m);
        }
        (pos, last)
    }

    /// `log Z` by frontier elimination in the given site order.
    pub fn transfer_in_order(&self, order: &[usize]) -> Result<T> {
        let n = self.num_sites;
        if order.len() != n {
            return Err(Error::SizeMismatch(order.len(), n));
        }
        let w = self.frontier_width(order);
        if w > FRONTIER_BUDGET {
            return Err(Error::BudgetExceeded {
                what: "transfer-matrix frontier".into(),
                needed: w as u64,
                limit: FRONTIER_BUDGET as u64,
            });
        }
        let (pos, last) = self.schedule(order);
        // bonds grouped by the later endpoint
        let mut at: Vec<Vec<(usize, T)>> = vec![Vec::new(); n];
        let mut log_scale = T::zero();
        for &(i, j, k) in &self.bonds {
            if i == j {
                log_scale = log_scale + k;
                continue;
            }
            let (early, late) = if pos[i] < pos[j] { (i, j) } else { (j, i) };
            at[late].push((early, k));
        }
        let mut slots: Vec<usize> = Vec::new();
        let mut v = vec![T::one()];
        for (t, &s) in order.iter().enumerate() {
            let top = slots.len();
            v.extend_from_within(..);
            slots.push(s);
            for &(e, k) in &at[s] {
                let a = slots.iter().position(|&x| x == e).expect("earlier site is live");
                let same = (k - k.abs()).exp();
                let diff = (-k - k.abs()).exp();
                log_scale = log_scale + k.abs();
                for (x, val) in v.iter_mut().enumerate() {
                    let eq = ((x >> a) & 1) == ((x >> top) & 1);
                    *val = *val * if eq { same } else { diff };
                }
            }
            let mut b = slots.len();
            while b > 0 {
                b -= 1;
                if last[slots[b]] <= t {
                    let half = v.len() / 2;
                    let lowmask = (1usize << b) - 1;
                    let mut nv = Vec::with_capacity(half);
                    for y in 0..half {
                        let base = (y & lowmask) | ((y >> b) << (b + 1));
                        nv.push(v[base] + v[base | (1 << b)]);
                    }
                    v = nv;
                    slots.remove(b);
                }
            }
            let m = v.iter().copied().fold(T::zero(), |a, x| if x > a { x } else { a });
            if m > T::zero() {
                for x in v.iter_mut() {
                    *x = *x / m;
                }
                log_scale = log_scale + m.ln();
            }
        }
        debug_assert_eq!(v.len(), 1);
        Ok(log_scale + v[0].ln())
    }

    /// `log Z` by frontier elimination in index order.
    pub fn log_partition_transfer(&self) -> Result<T> {
        let order: Vec<usize> = (0..self.num_sites).collect();
        self.transfer_in_order(&order)
    }

    /// `log Z` by the cheaper exact method.
    pub fn log_partition(&self) -> Result<(T, Method)> {
        let order: Vec<usize> = (0..self.num_sites).collect();
        let w = self.frontier_width(&order);
        if self.num_sites <= 12 || (self.num_sites <= ENUMERATION_BUDGET && w > FRONTIER_BUDGET) {
            return Ok((self.enumerate()?.0, Method::Enumeration));
        }
        Ok((self.transfer_in_order(&order)?, Method::TransferMatrix))
    }
}

/// Brick-wall honeycomb cylinder of circumference `width` and `length` columns.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HoneycombStrip {
    pub width: usize,
    pub length: usize,
    /// Bond endpoints; seam bonds are those with `seam[b]`.
    pub bonds: Vec<(usize, usize)>,
    pub seam: Vec<bool>,
}

impl HoneycombStrip {
    pub fn new(width: usize, length: usize) -> Result<Self> {
        if width < 2 || width % 2 != 0 || length < 1 {
            return Err(Error::InvalidArgument(format!(
                "honeycomb strip needs an even width >= 2 and length >= 1, got {width}x{length}"
            )));
        }
        let mut bonds = Vec::new();
        let mut seam = Vec::new();
        let site = |x: usize, y: usize| x * width + y;
        for x in 0..length {
            for y in 0..width {
                bonds.push((site(x, y), site(x, (y + 1) % width)));
                seam.push(y == width - 1);
                if x + 1 < length && (x + y) % 2 == 0 {
                    bonds.push((site(x, y), site(x + 1, y)));
                    seam.push(false);
                }
            }
        }
        Ok(HoneycombStrip {
            width,
            length,
            bonds,
            seam,
        })
    }

    pub fn num_sites(&self) -> usize {
        self.width * self.length
    }

    /// Model with coupling `j · s_b` on bond `b`, seam bonds additionally
    /// negated when `twisted`.
    pub fn model<T: Scalar>(&self, j: T, signs: &[bool], twisted: bool) -> PairwiseModel<T> {
        let mut m = PairwiseModel::new(self.num_sites());
        for (b, &(u, v)) in self.bonds.iter().enumerate() {
            let flip = signs[b] ^ (twisted && self.seam[b]);
            m.add_bond(u, v, if flip { -j } else { j });
        }
        m
    }

    /// Antiferromagnetic-bond indicators drawn at rate `p` from uniforms
    /// seeded by `seed`. The same seed gives nested disorder across `p`.
    pub fn disorder(&self, p: f64, seed: u64) -> Vec<bool> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.bonds.iter().map(|_| rng.gen::<f64>() < p).collect()
    }
}

/// Nishimori coupling `J = ½ log((1 - p̃)/p̃)`.
pub fn nishimori_coupling<T: Scalar>(p: T) -> Result<T> {
    if !(p > T::zero() && p <= T::of(0.5)) {
        return Err(Error::InvalidArgument(format!("disorder rate {p} outside (0, 1/2]")));
    }
    Ok(T::of(0.5) * ((T::one() - p) / p).ln())
}

/// Domain-wall free energy of one disorder sample on a strip at coupling `j`.
pub fn strip_free_energy<T: Scalar>(strip: &HoneycombStrip, j: T, signs: &[bool], defect: bool) -> Result<FreeEnergyResult<T>> {
    let order: Vec<usize> = (0..strip.num_sites()).collect();
    let log_z = strip.model(j, signs, false).transfer_in_order(&order)?;
    let log_z_defect = if defect {
        strip.model(j, signs, true).transfer_in_order(&order)?
    } else {
        log_z
    };
    Ok(FreeEnergyResult {
        log_z,
        log_z_defect,
        delta_f: log_z - log_z_defect,
        error: T::zero(),
        method: Method::TransferMatrix,
    })
}

/// One Nishimori-line disorder sample of the honeycomb RBIM on a square-ish
/// strip (`length = width`).
pub fn rbim_sample_free_energy<T: Scalar>(width: usize, p: T, seed: u64, defect: bool) -> Result<FreeEnergyResult<T>> {
    let strip = HoneycombStrip::new(width, width)?;
    let j = nishimori_coupling(p)?;
    let signs = strip.disorder(p.to_f64().expect("finite"), seed);
    strip_free_energy(&strip, j, &signs, defect)
}

/// Mean and standard error of a sample.
pub fn mean_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, 0.0);
    }
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Disorder-averaged domain-wall free energy curve for one width.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreeEnergyCurve {
    pub width: usize,
    pub grid: Vec<f64>,
    /// `samples[g][s]`: ΔF of disorder sample `s` at grid point `g`.
    pub samples: Vec<Vec<f64>>,
}

impl FreeEnergyCurve {
    pub fn means(&self) -> Vec<(f64, f64)> {
        self.samples.iter().map(|s| mean_stderr(s)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdConfig {
    pub widths: Vec<usize>,
    pub grid: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    pub bootstrap: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEstimate {
    pub estimate: f64,
    pub ci: (f64, f64),
    /// Crossing of each adjacent pair of widths.
    pub pair_crossings: Vec<Option<f64>>,
    pub curves: Vec<FreeEnergyCurve>,
}

/// First downward sign change of `b - a` along the grid, linearly interpolated.
pub fn crossing(grid: &[f64], a: &[f64], b: &[f64]) -> Option<f64> {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
    for i in 0..d.len().saturating_sub(1) {
        if d[i] > 0.0 && d[i + 1] <= 0.0 {
            let t = d[i] / (d[i] - d[i + 1]);
            return Some(grid[i] + t * (grid[i + 1] - grid[i]));
        }
    }
    None
}

fn combine(grid: &[f64], means: &[Vec<f64>]) -> (Vec<Option<f64>>, Option<f64>) {
    let pairs: Vec<Option<f64>> = means.windows(2).map(|w| crossing(grid, &w[0], &w[1])).collect();
    let found: Vec<f64> = pairs.iter().flatten().copied().collect();
    if found.is_empty() {
        return (pairs, None);
    }
    let est = found.iter().sum::<f64>() / found.len() as f64;
    (pairs, Some(est))
}

/// Disorder samples of the domain-wall free energy on the Nishimori line,
/// one curve per width.
pub fn rbim_free_energy_curves(cfg: &ThresholdConfig) -> Result<Vec<FreeEnergyCurve>> {
    if cfg.widths.len() < 2 {
        return Err(Error::InvalidArgument("at least two widths are needed".into()));
    }
    if cfg.grid.len() < 2 || cfg.grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("grid must be increasing with at least two points".into()));
    }
    if cfg.samples == 0 {
        return Err(Error::InvalidArgument("need at least one disorder sample".into()));
    }
    let mut curves = Vec::new();
    for (wi, &w) in cfg.widths.iter().enumerate() {
        let strip = HoneycombStrip::new(w, w)?;
        let rows: Vec<Vec<f64>> = (0..cfg.samples)
            .into_par_iter()
            .map(|s| {
                let seed = cfg.seed ^ ((wi as u64) << 48) ^ (s as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let u: Vec<f64> = strip.bonds.iter().map(|_| rng.gen()).collect();
                cfg.grid
                    .iter()
                    .map(|&p| {
                        let signs: Vec<bool> = u.iter().map(|&x| x < p).collect();
                        let j = nishimori_coupling(p)?;
                        Ok(strip_free_energy(&strip, j, &signs, true)?.delta_f)
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let samples = (0..cfg.grid.len())
            .map(|g| rows.iter().map(|r| r[g]).collect())
            .collect();
        curves.push(FreeEnergyCurve {
            width: w,
            grid: cfg.grid.clone(),
            samples,
        });
    }
    Ok(curves)
}

/// Crossing of disorder-averaged domain-wall free energies on the
/// Nishimori line across strip widths, with a bootstrap CI.
pub fn locate_rbim_threshold(cfg: &ThresholdConfig) -> Result<ThresholdEstimate> {
    threshold_from_curves(cfg, rbim_free_energy_curves(cfg)?)
}

/// Crossing estimate from curves produced by [`rbim_free_energy_curves`].
pub fn threshold_from_curves(cfg: &ThresholdConfig, curves: Vec<FreeEnergyCurve>) -> Result<ThresholdEstimate> {
    let means: Vec<Vec<f64>> = curves.iter().map(|c| c.means().iter().map(|m| m.0).collect()).collect();
    let (pair_crossings, est) = combine(&cfg.grid, &means);
    let estimate = est.ok_or_else(|| Error::NoCrossing("domain-wall free energies do not cross on the grid".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xB007);
    let mut boot = Vec::new();
    for _ in 0..cfg.bootstrap {
        let m: Vec<Vec<f64>> = curves
            .iter()
            .map(|c| {
                let idx: Vec<usize> = (0..cfg.samples).map(|_| rng.gen_range(0..cfg.samples)).collect();
                c.samples
                    .iter()
                    .map(|s| idx.iter().map(|&i| s[i]).sum::<f64>() / cfg.samples as f64)
                    .collect()
            })
            .collect();
        if let (_, Some(e)) = combine(&cfg.grid, &m) {
            boot.push(e);
        }
    }
    boot.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let ci = if boot.is_empty() {
        (estimate, estimate)
    } else {
        let q = |f: f64| boot[((boot.len() - 1) as f64 * f).round() as usize];
        (q(0.025), q(0.975))
    };
    Ok(ThresholdEstimate {
        estimate,
        ci,
        pair_crossings,
        curves,
    })
}

/// Crossing in coupling `K` of the clean (disorder-free) domain-wall free
/// energies across widths; an engine check against the exact critical point.
pub fn clean_crossing(widths: &[usize], couplings: &[f64]) -> Result<f64> {
    let means: Vec<Vec<f64>> = widths
        .iter()
        .map(|&w| {
            let strip = HoneycombStrip::new(w, w)?;
            let signs = vec![false; strip.bonds.len()];
            couplings
                .par_iter()
                .map(|&k| Ok(strip_free_energy(&strip, k, &signs, true)?.delta_f))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    // ΔF grows with width in the ordered (large K) phase, so flip the sign to
    // reuse the downward-crossing search.
    let neg: Vec<Vec<f64>> = means.iter().map(|m| m.iter().map(|x| -x).collect()).collect();
    let (_, est) = combine(couplings, &neg);
    est.ok_or_else(|| Error::NoCrossing("clean free energies do not cross".into()))
}

/// Monte Carlo settings for [`monte_carlo_free_energy`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    pub thermalize: usize,
    pub sweeps: usize,
    /// Gauss-Legendre nodes for each thermodynamic integration.
    pub nodes: usize,
    pub seed: u64,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        MonteCarloConfig {
            thermalize: 200,
            sweeps: 2000,
            nodes: 8,
            seed: 1,
        }
    }
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(m: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pm = if m == 1 { 1.0 } else { p0 };
            let pn = if m == 1 { x } else { p1 };
            dp = m as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (1.0 - x), 0.5 * w));
    }
    out
}

struct Sampler<'a> {
    nb: &'a [Vec<(usize, usize)>],
    k: Vec<f64>,
    spins: Vec<i8>,
    rng: ChaCha8Rng,
}

impl Sampler<'_> {
    fn metropolis(&mut self) {
        for s in 0..self.spins.len() {
            let mut h = 0.0;
            for &(j, b) in &self.nb[s] {
                h += self.k[b] * self.spins[j] as f64;
            }
            let de = 2.0 * self.spins[s] as f64 * h;
            if de <= 0.0 || self.rng.gen::<f64>() < (-de).exp() {
                self.spins[s] = -self.spins[s];
            }
        }
    }

    fn wolff(&mut self) {
        let n = self.spins.len();
        let seed = self.rng.gen_range(0..n);
        let mut stack = vec![seed];
        let mut in_cluster = vec![false; n];
        in_cluster[seed] = true;
        while let Some(s) = stack.pop() {
            for &(j, b) in &self.nb[s] {
                if in_cluster[j] {
                    continue;
                }
                let sat = self.k[b] * (self.spins[s] * self.spins[j]) as f64;
                if sat > 0.0 && self.rng.gen::<f64>() < 1.0 - (-2.0 * sat).exp() {
                    in_cluster[j] = true;
                    stack.push(j);
                }
            }
        }
        for s in 0..n {
            if in_cluster[s] {
                self.spins[s] = -self.spins[s];
            }
        }
    }

    /// Mean and batch-means error of `Σ_b w_b σσ` over sweeps.
    fn measure(&mut self, bonds: &[(usize, usize, f64)], w: &[f64], therm: usize, sweeps: usize) -> (f64, f64) {
        for _ in 0..therm {
            self.metropolis();
            self.wolff();
        }
        let mut obs = Vec::with_capacity(sweeps);
        for _ in 0..sweeps {
            self.metropolis();
            self.wolff();
            let mut e = 0.0;
            for (b, &(i, j, _)) in bonds.iter().enumerate() {
                if w[b] != 0.0 {
                    e += w[b] * (self.spins[i] * self.spins[j]) as f64;
                }
            }
            obs.push(e);
        }
        let batches = 20.min(obs.len());
        let size = obs.len() / batches;
        let means: Vec<f64> = (0..batches)
            .map(|b| obs[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
            .collect();
        let (m, err) = mean_stderr(&means);
        (m, err)
    }
}

/// Monte Carlo estimate of `⟨Σ_b K_b σ_i σ_j⟩` with its batch-means error.
pub fn monte_carlo_bond_energy(model: &PairwiseModel<f64>, cfg: &MonteCarloConfig) -> Result<(f64, f64)> {
    if cfg.sweeps < 20 {
        return Err(Error::InvalidArgument("at least 20 sweeps are needed".into()));
    }
    let nb = neighbours(model);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let spins = (0..model.num_sites).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
    let k: Vec<f64> = model.bonds.iter().map(|b| b.2).collect();
    let mut s = Sampler { nb: &nb, k: k.clone(), spins, rng };
    Ok(s.measure(&model.bonds, &k, cfg.thermalize, cfg.sweeps))
}

fn neighbours(model: &PairwiseModel<f64>) -> Vec<Vec<(usize, usize)>> {
    let mut nb = vec![Vec::new(); model.num_sites];
    for (b, &(i, j, _)) in model.bonds.iter().enumerate() {
        if i != j {
            nb[i].push((j, b));
            nb[j].push((i, b));
        }
    }
    nb
}

/// Monte Carlo `log Z` and domain-wall free energy of a pairwise model.
///
/// `log Z` integrates `⟨Σ K σσ⟩_β` over an overall coupling scale `β ∈ [0, 1]`
/// starting from `log Z(0) = N log 2`. The defect cost integrates the seam
/// derivative along `K_b(λ) = (1 - 2λ) K_b` for seam bonds, `λ ∈ [0, 1]`.
/// Both use Gauss-Legendre quadrature; each node runs Metropolis sweeps
/// interleaved with Wolff cluster flips.
pub fn monte_carlo_free_energy(model: &PairwiseModel<f64>, seam: &[bool], cfg: &MonteCarloConfig) -> Result<FreeEnergyResult<f64>> {
    if seam.len() != model.bonds.len() {
        return Err(Error::SizeMismatch(seam.len(), model.bonds.len()));
    }
    if cfg.sweeps < 20 {
        return Err(Error::InvalidArgument("at least 20 sweeps are needed".into()));
    }
    let nb = neighbours(model);
    let base: Vec<f64> = model.bonds.iter().map(|b| b.2).collect();
    let self_loops: f64 = model.bonds.iter().filter(|b| b.0 == b.1).map(|b| b.2).sum();
    let nodes = gauss_legendre(cfg.nodes);
    let run = |k: Vec<f64>, w: Vec<f64>, stream: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(stream);
        let spins = (0..model.num_sites).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
        let mut s = Sampler { nb: &nb, k, spins, rng };
        s.measure(&model.bonds, &w, cfg.thermalize, cfg.sweeps)
    };
    let energy: Vec<(f64, f64)> = nodes
        .par_iter()
        .enumerate()
        .map(|(i, &(beta, _))| {
            let k: Vec<f64> = base.iter().map(|x| beta * x).collect();
            let w: Vec<f64> = model.bonds.iter().map(|b| if b.0 == b.1 { 0.0 } else { b.2 }).collect();
            run(k, w, i as u64)
        })
        .collect();
    let seam_terms: Vec<(f64, f64)> = nodes
        .par_iter()
        .enumerate()
        .map(|(i, &(lam, _))| {
            let k: Vec<f64> = base
                .iter()
                .zip(seam)
                .map(|(&x, &s)| if s { (1.0 - 2.0 * lam) * x } else { x })
                .collect();
            let w: Vec<f64> = base.iter().zip(seam).map(|(&x, &s)| if s { -2.0 * x } else { 0.0 }).collect();
            run(k, w, (nodes.len() + i) as u64)
        })
        .collect();
    let integrate = |vals: &[(f64, f64)]| {
        let mut m = 0.0;
        let mut e2 = 0.0;
        for ((_, wt), (v, err)) in nodes.iter().zip(vals) {
            m += wt * v;
            e2 += wt * wt * err * err;
        }
        (m, e2.sqrt())
    };
    let (lz, _) = integrate(&energy);
    let log_z = model.num_sites as f64 * std::f64::consts::LN_2 + self_loops + lz;
    let (dlog, err) = integrate(&seam_terms);
    Ok(FreeEnergyResult {
        log_z,
        log_z_defect: log_z + dlog,
        delta_f: -dlog,
        error: err,
        method: Method::MonteCarlo,
    })
}
