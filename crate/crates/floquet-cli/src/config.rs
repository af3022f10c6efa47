//! Command-line and config-file arguments, and their validated forms.
//!
//! A config file is TOML with one table per subcommand, keyed by the
//! subcommand name. Keys are the long flag names with `-` replaced by `_`
//! and take the same string or number values as the flags:
//!
//! ```toml
//! [decode-sweep]
//! sizes = "2x2,3x3"
//! p = "0.005:0.03:0.0025"
//! trials = 2000
//! seed = 7
//! ```
//!
//! Flags given on the command line win over the file.

use crate::CliError;
use clap::Args;
use floquet::code::Variant;
use floquet::statmech::{labels, Coefficients, LabelInfo};
use floquet::Color;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

/// Fill every `None` field of `$a` from `$b`.
macro_rules! merge_fields {
    ($a:ident, $b:ident; $($f:ident),*) => {
        $( if $a.$f.is_none() { $a.$f = $b.$f; } )*
    };
}

#[derive(Args, Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecodeSweepArgs {
    /// Lattice sizes, e.g. "2x2,3x3".
    #[arg(long)]
    pub sizes: Option<String>,
    /// Physical error rates: "start:stop:step" or a comma list.
    #[arg(long)]
    pub p: Option<String>,
    /// Trials per size and rate.
    #[arg(long)]
    pub trials: Option<usize>,
    /// RNG seed; required unless replaying.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Superlattice color to decode (R, G or B).
    #[arg(long)]
    pub color: Option<String>,
    /// "ml" or "matching".
    #[arg(long)]
    pub decoder: Option<String>,
    /// Decode a circuit dump (NDJSON trial records) instead of sampling.
    #[arg(long)]
    pub replay: Option<PathBuf>,
    /// Run the circuit and write its trial records here instead of sweeping.
    #[arg(long)]
    pub dump_trials: Option<PathBuf>,
    /// Periods per circuit trial for `--dump-trials`.
    #[arg(long)]
    pub periods: Option<usize>,
    /// Main output file (CSV or NDJSON); stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON summary file; stderr if omitted.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsArgs {
    /// Lattice size, e.g. "4x4".
    #[arg(long)]
    pub size: Option<String>,
    /// Renyi indices, e.g. "2,3".
    #[arg(long)]
    pub n: Option<String>,
    /// Physical error rates: "start:stop:step" or a comma list.
    #[arg(long)]
    pub p: Option<String>,
    /// "floquet", "toric" or "both".
    #[arg(long)]
    pub variant: Option<String>,
    /// "four-round" or "steady-state".
    #[arg(long)]
    pub coefficients: Option<String>,
    /// Add inflection-point transition estimates to the summary.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub transitions: Option<bool>,
    /// CSV output file; stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON summary file; stderr if omitted.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatmechArgs {
    /// "rbim" (Nishimori-line strips) or "flavor" (replica model on the torus).
    #[arg(long)]
    pub model: Option<String>,
    /// Strip widths for rbim, e.g. "6,8,10,12".
    #[arg(long)]
    pub widths: Option<String>,
    /// Torus sizes for flavor, e.g. "2x2,3x3".
    #[arg(long)]
    pub sizes: Option<String>,
    /// Rates: p̃ for rbim, p for flavor.
    #[arg(long)]
    pub p: Option<String>,
    /// Disorder samples per width and rate (rbim).
    #[arg(long)]
    pub samples: Option<usize>,
    /// Bootstrap resamples for the crossing interval (rbim).
    #[arg(long)]
    pub bootstrap: Option<usize>,
    /// RNG seed for disorder samples (rbim).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Replica indices for flavor, e.g. "2,3".
    #[arg(long)]
    pub n: Option<String>,
    /// Partition-function label for flavor, e.g. "B2".
    #[arg(long)]
    pub label: Option<String>,
    /// Defect winding for flavor, e.g. "1,0".
    #[arg(long)]
    pub defect: Option<String>,
    #[arg(long)]
    pub coefficients: Option<String>,
    /// Output file; stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyArgs {
    /// Lattice sizes (default "1x1,2x2").
    #[arg(long)]
    pub sizes: Option<String>,
    /// Physical error rates (default "0,0.02,0.1,0.3,0.5").
    #[arg(long)]
    pub p: Option<String>,
    /// Renyi indices (default "2,3").
    #[arg(long)]
    pub n: Option<String>,
    /// Shift the stat-mech rate by this amount (negative control).
    #[arg(long)]
    pub perturb: Option<f64>,
    /// Report file; stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DumpLatticeArgs {
    #[arg(long)]
    pub size: Option<String>,
    /// "json" or "csv".
    #[arg(long)]
    pub format: Option<String>,
    /// Table for csv output: "vertices", "edges" or "plaquettes".
    #[arg(long)]
    pub table: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Contents of a config file.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ConfigFile {
    #[serde(default)]
    pub decode_sweep: DecodeSweepArgs,
    #[serde(default)]
    pub diagnostics: DiagnosticsArgs,
    #[serde(default)]
    pub statmech: StatmechArgs,
    #[serde(default)]
    pub verify: VerifyArgs,
    #[serde(default)]
    pub dump_lattice: DumpLatticeArgs,
}

impl ConfigFile {
    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Validation(format!("bad config {}: {e}", path.display())))
    }
}

impl DecodeSweepArgs {
    pub fn merge(mut self, f: DecodeSweepArgs) -> Self {
        merge_fields!(self, f; sizes, p, trials, seed, color, decoder, replay, dump_trials, periods, out, summary);
        self
    }
}

impl DiagnosticsArgs {
    pub fn merge(mut self, f: DiagnosticsArgs) -> Self {
        merge_fields!(self, f; size, n, p, variant, coefficients, transitions, out, summary);
        self
    }
}

impl StatmechArgs {
    pub fn merge(mut self, f: StatmechArgs) -> Self {
        merge_fields!(self, f; model, widths, sizes, p, samples, bootstrap, seed, n, label, defect, coefficients, out, summary);
        self
    }
}

impl VerifyArgs {
    pub fn merge(mut self, f: VerifyArgs) -> Self {
        merge_fields!(self, f; sizes, p, n, perturb, out);
        self
    }
}

impl DumpLatticeArgs {
    pub fn merge(mut self, f: DumpLatticeArgs) -> Self {
        merge_fields!(self, f; size, format, table, out);
        self
    }
}

fn bad<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Validation(msg.into()))
}

fn required<T>(v: Option<T>, flag: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Validation(format!("--{flag} is required")))
}

pub fn parse_size(s: &str) -> Result<(usize, usize), CliError> {
    let Some((a, b)) = s.trim().split_once(['x', 'X']) else {
        return bad(format!("size {s:?} is not of the form L1xL2"));
    };
    let parse = |t: &str| t.trim().parse::<usize>().ok().filter(|&v| v > 0);
    match (parse(a), parse(b)) {
        (Some(l1), Some(l2)) => Ok((l1, l2)),
        _ => bad(format!("size {s:?} needs two positive integers")),
    }
}

pub fn parse_sizes(s: &str) -> Result<Vec<(usize, usize)>, CliError> {
    let v = s.split(',').map(parse_size).collect::<Result<Vec<_>, _>>()?;
    if v.is_empty() {
        return bad("empty size list");
    }
    Ok(v)
}

pub fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, CliError> {
    s.split(',')
        .map(|t| t.trim().parse::<T>().map_err(|_| CliError::Validation(format!("bad {what} {t:?} in {s:?}"))))
        .collect()
}

/// Grid from "start:stop:step" (inclusive) or a comma list, rounded to 12
/// decimals so that printed values stay short.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let round = |x: f64| (x * 1e12).round() / 1e12;
    let grid: Vec<f64> = if s.contains(':') {
        let parts: Vec<f64> = parse_list::<f64>(&s.replace(':', ","), "grid bound")?;
        let [a, b, h] = parts[..] else {
            return bad(format!("grid {s:?} must be start:stop:step"));
        };
        if !(h > 0.0) || !(b >= a) {
            return bad(format!("grid {s:?} needs step > 0 and stop >= start"));
        }
        let k = ((b - a) / h + 1e-9).floor() as usize;
        (0..=k).map(|i| round(a + i as f64 * h)).collect()
    } else {
        parse_list::<f64>(s, "rate")?
    };
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return bad(format!("grid {s:?} must be strictly increasing"));
    }
    Ok(grid)
}

fn check_rates(grid: &[f64], what: &str) -> Result<(), CliError> {
    match grid.iter().find(|p| !(0.0..=0.5).contains(*p)) {
        Some(p) => bad(format!("{what} {p} outside [0, 0.5]")),
        None => Ok(()),
    }
}

pub fn parse_color(s: &str) -> Result<Color, CliError> {
    let mut cs = s.trim().chars();
    match (cs.next().and_then(Color::parse), cs.next()) {
        (Some(c), None) => Ok(c),
        _ => bad(format!("color {s:?} must be R, G or B")),
    }
}

pub fn parse_variants(s: &str) -> Result<Vec<Variant>, CliError> {
    match s.trim().to_ascii_lowercase().as_str() {
        "floquet" => Ok(vec![Variant::Floquet]),
        "toric" => Ok(vec![Variant::Toric]),
        "both" => Ok(vec![Variant::Floquet, Variant::Toric]),
        _ => bad(format!("variant {s:?} must be floquet, toric or both")),
    }
}

pub fn parse_coefficients(s: &str) -> Result<Coefficients, CliError> {
    match s.trim().to_ascii_lowercase().as_str() {
        "four-round" => Ok(Coefficients::FourRound),
        "steady-state" => Ok(Coefficients::SteadyState),
        _ => bad(format!("coefficients {s:?} must be four-round or steady-state")),
    }
}

pub fn variant_name(v: Variant) -> &'static str {
    match v {
        Variant::Floquet => "floquet",
        Variant::Toric => "toric",
    }
}

pub fn coefficients_name(c: Coefficients) -> &'static str {
    match c {
        Coefficients::FourRound => "four-round",
        Coefficients::SteadyState => "steady-state",
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecoderChoice {
    Ml,
    Matching,
}

#[derive(Clone, Debug, Serialize)]
pub enum DecodeMode {
    Sweep,
    Replay(PathBuf),
    Dump { path: PathBuf, periods: usize },
}

#[derive(Clone, Debug, Serialize)]
pub struct DecodeSweepConfig {
    pub sizes: Vec<(usize, usize)>,
    pub p: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub color: Color,
    pub decoder: DecoderChoice,
    pub mode: DecodeMode,
}

impl DecodeSweepConfig {
    pub fn resolve(a: DecodeSweepArgs) -> Result<Self, CliError> {
        let sizes = parse_sizes(&required(a.sizes, "sizes")?)?;
        let p = parse_grid(&required(a.p, "p")?)?;
        check_rates(&p, "error rate")?;
        let color = parse_color(a.color.as_deref().unwrap_or("B"))?;
        let decoder = match a.decoder.as_deref().unwrap_or("ml") {
            "ml" => DecoderChoice::Ml,
            "matching" => DecoderChoice::Matching,
            d => return bad(format!("decoder {d:?} must be ml or matching")),
        };
        let mode = match (a.replay, a.dump_trials) {
            (Some(_), Some(_)) => return bad("--replay and --dump-trials are exclusive"),
            (Some(r), None) => DecodeMode::Replay(r),
            (None, Some(path)) => DecodeMode::Dump {
                path,
                periods: a.periods.unwrap_or(1),
            },
            (None, None) => DecodeMode::Sweep,
        };
        if !matches!(mode, DecodeMode::Sweep) && (sizes.len() != 1 || p.len() != 1) {
            return bad("replay and dump runs take exactly one size and one rate");
        }
        if let DecodeMode::Dump { periods: 0, .. } = mode {
            return bad("--periods must be positive");
        }
        let trials = match mode {
            DecodeMode::Replay(_) => a.trials.unwrap_or(0),
            _ => a.trials.unwrap_or(1000),
        };
        if trials == 0 && !matches!(mode, DecodeMode::Replay(_)) {
            return bad("--trials must be positive");
        }
        let seed = match mode {
            DecodeMode::Replay(_) => a.seed.unwrap_or(0),
            _ => required(a.seed, "seed")?,
        };
        Ok(DecodeSweepConfig {
            sizes,
            p,
            trials,
            seed,
            color,
            decoder,
            mode,
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DiagnosticsConfig {
    pub size: (usize, usize),
    pub n: Vec<usize>,
    pub p: Vec<f64>,
    pub variants: Vec<Variant>,
    pub coefficients: Coefficients,
    pub transitions: bool,
}

impl DiagnosticsConfig {
    pub fn resolve(a: DiagnosticsArgs) -> Result<Self, CliError> {
        let size = parse_size(&required(a.size, "size")?)?;
        let n: Vec<usize> = parse_list(a.n.as_deref().unwrap_or("2"), "Renyi index")?;
        if let Some(k) = n.iter().find(|&&k| k < 2) {
            return bad(format!("Renyi index {k} must be at least 2"));
        }
        let p = parse_grid(&required(a.p, "p")?)?;
        check_rates(&p, "error rate")?;
        let transitions = a.transitions.unwrap_or(false);
        if transitions && p.len() < 3 {
            return bad("transition estimates need at least three rates");
        }
        Ok(DiagnosticsConfig {
            size,
            n,
            p,
            variants: parse_variants(a.variant.as_deref().unwrap_or("floquet"))?,
            coefficients: parse_coefficients(a.coefficients.as_deref().unwrap_or("four-round"))?,
            transitions,
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub enum StatmechConfig {
    Rbim {
        widths: Vec<usize>,
        p: Vec<f64>,
        samples: usize,
        bootstrap: usize,
        seed: u64,
    },
    Flavor {
        sizes: Vec<(usize, usize)>,
        p: Vec<f64>,
        n: Vec<usize>,
        label: LabelInfo,
        defect: [u32; 2],
        coefficients: Coefficients,
    },
}

pub fn parse_label(s: &str) -> Result<LabelInfo, CliError> {
    let t = s.trim();
    let mut cs = t.chars();
    let color = cs.next().and_then(Color::parse);
    let index = cs.as_str().parse::<u8>().ok();
    labels(Variant::Floquet)
        .iter()
        .find(|i| Some(i.label.color) == color && Some(i.label.index) == index)
        .copied()
        .ok_or_else(|| CliError::Validation(format!("label {s:?} is not one of R1 G1 B1 R2 G2 B2 B3")))
}

impl StatmechConfig {
    pub fn resolve(a: StatmechArgs) -> Result<Self, CliError> {
        let p = parse_grid(&required(a.p, "p")?)?;
        check_rates(&p, "rate")?;
        match a.model.as_deref().unwrap_or("rbim") {
            "rbim" => {
                let widths: Vec<usize> = parse_list(a.widths.as_deref().unwrap_or("6,8,10,12"), "width")?;
                if widths.len() < 2 || widths.iter().any(|&w| w < 2 || w % 2 == 1) {
                    return bad("need at least two widths, each even and at least 2");
                }
                if p.len() < 2 || p[0] <= 0.0 {
                    return bad("rbim needs at least two rates, all positive");
                }
                let samples = a.samples.unwrap_or(200);
                if samples == 0 {
                    return bad("--samples must be positive");
                }
                Ok(StatmechConfig::Rbim {
                    widths,
                    p,
                    samples,
                    bootstrap: a.bootstrap.unwrap_or(200),
                    seed: required(a.seed, "seed")?,
                })
            }
            "flavor" => {
                let n: Vec<usize> = parse_list(a.n.as_deref().unwrap_or("2"), "replica index")?;
                if let Some(k) = n.iter().find(|&&k| k < 2) {
                    return bad(format!("replica index {k} must be at least 2"));
                }
                let d: Vec<u32> = parse_list(a.defect.as_deref().unwrap_or("1,0"), "defect winding")?;
                let [d1, d2] = d[..] else {
                    return bad("--defect takes two windings, e.g. 1,0");
                };
                Ok(StatmechConfig::Flavor {
                    sizes: parse_sizes(a.sizes.as_deref().unwrap_or("2x2,3x3,4x4"))?,
                    p,
                    n,
                    label: parse_label(a.label.as_deref().unwrap_or("B2"))?,
                    defect: [d1, d2],
                    coefficients: parse_coefficients(a.coefficients.as_deref().unwrap_or("four-round"))?,
                })
            }
            m => bad(format!("model {m:?} must be rbim or flavor")),
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            StatmechConfig::Rbim { seed, .. } => Some(*seed),
            StatmechConfig::Flavor { .. } => None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyConfig {
    pub sizes: Vec<(usize, usize)>,
    pub p: Vec<f64>,
    pub n: Vec<usize>,
    pub perturb: f64,
}

impl VerifyConfig {
    pub fn resolve(a: VerifyArgs) -> Result<Self, CliError> {
        let p = parse_grid(a.p.as_deref().unwrap_or("0,0.02,0.1,0.3,0.5"))?;
        check_rates(&p, "error rate")?;
        let n: Vec<usize> = parse_list(a.n.as_deref().unwrap_or("2,3"), "Renyi index")?;
        if let Some(k) = n.iter().find(|&&k| k < 2) {
            return bad(format!("Renyi index {k} must be at least 2"));
        }
        let perturb = a.perturb.unwrap_or(0.0);
        if !(perturb.abs() < 0.5) {
            return bad("--perturb must lie in (-0.5, 0.5)");
        }
        Ok(VerifyConfig {
            sizes: parse_sizes(a.sizes.as_deref().unwrap_or("1x1,2x2"))?,
            p,
            n,
            perturb,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LatticeFormat {
    Json,
    Csv(LatticeTable),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LatticeTable {
    Vertices,
    Edges,
    Plaquettes,
}

#[derive(Clone, Debug, Serialize)]
pub struct DumpLatticeConfig {
    pub size: (usize, usize),
    pub format: LatticeFormat,
}

impl DumpLatticeConfig {
    pub fn resolve(a: DumpLatticeArgs) -> Result<Self, CliError> {
        let size = parse_size(&required(a.size, "size")?)?;
        let format = match a.format.as_deref().unwrap_or("json") {
            "json" => LatticeFormat::Json,
            "csv" => LatticeFormat::Csv(match a.table.as_deref().unwrap_or("edges") {
                "vertices" => LatticeTable::Vertices,
                "edges" => LatticeTable::Edges,
                "plaquettes" => LatticeTable::Plaquettes,
                t => return bad(format!("table {t:?} must be vertices, edges or plaquettes")),
            }),
            f => return bad(format!("format {f:?} must be json or csv")),
        };
        Ok(DumpLatticeConfig { size, format })
    }
}
