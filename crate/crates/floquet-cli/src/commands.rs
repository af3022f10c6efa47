use crate::config::*;
use crate::output::{csv_writer, num, Header, Paths};
use crate::CliError;
use floquet::channel::{effective_rate, invert_effective_rate, ErrorModel, SimpleErrorModel};
use floquet::circuit::{read_ndjson, run_trial, write_ndjson, CircuitOptions, TrialRecord};
use floquet::code::Variant;
use floquet::decoder::{
    class_probabilities_exact, class_probabilities_via_rbim, decode_trials, ml_decode, superedge_rate,
    wilson_interval, ClassProbabilities, DecoderKind, SeamGraph,
};
use floquet::diagnostics::{diagnostics as diagnostics_at, sweep, transition_estimates, DiagnosticsRequest};
use floquet::gf2::Bits;
use floquet::lattice::{build_lattice, superlattice};
use floquet::oracle::{build_states_for_diagnostics, oracle_diagnostics};
use floquet::statmech::rbim::{crossing, mean_stderr, rbim_free_energy_curves, threshold_from_curves, ThresholdConfig};
use floquet::statmech::{DefectSpec, LabelInstance, Method};
use floquet::{Color, Direction, Error};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;
use std::io::Write;

fn size_name((l1, l2): (usize, usize)) -> String {
    format!("{l1}x{l2}")
}

fn kappa_name(k: [bool; 2]) -> String {
    format!("{}{}", k[0] as u8, k[1] as u8)
}

fn method_name(m: Method) -> String {
    format!("{m:?}").to_ascii_lowercase()
}

pub fn decode_sweep(cfg: &DecodeSweepConfig, io: &Paths) -> Result<(), CliError> {
    let seed = match cfg.mode {
        DecodeMode::Replay(_) => None,
        _ => Some(cfg.seed),
    };
    let header = Header::new("decode-sweep", cfg, seed)?;
    match &cfg.mode {
        DecodeMode::Sweep => decode_grid(cfg, &header, io),
        DecodeMode::Replay(path) => replay(cfg, path, &header, io),
        DecodeMode::Dump { path, periods } => dump_trials(cfg, path, *periods, &header),
    }
}

struct FidelityRow {
    fidelity: f64,
    stderr: f64,
    successes: usize,
}

fn decode_grid(cfg: &DecodeSweepConfig, header: &Header, io: &Paths) -> Result<(), CliError> {
    let kind = match cfg.decoder {
        DecoderChoice::Ml => DecoderKind::MaximumLikelihood,
        DecoderChoice::Matching => DecoderKind::Matching,
    };
    let mut table: Vec<Vec<FidelityRow>> = Vec::new();
    for &(l1, l2) in &cfg.sizes {
        let lat = build_lattice(l1, l2)?;
        let mut rows = Vec::new();
        for &p in &cfg.p {
            let model = SimpleErrorModel::uniform(p)?;
            let out = decode_trials(&lat, &model, cfg.color, cfg.trials, cfg.seed, kind)?;
            let successes = out.iter().filter(|t| t.success).count();
            let (fidelity, stderr) = match cfg.decoder {
                DecoderChoice::Ml => mean_stderr(&out.iter().map(|t| t.max_ratio).collect::<Vec<_>>()),
                DecoderChoice::Matching => {
                    let f = successes as f64 / cfg.trials as f64;
                    (f, (f * (1.0 - f) / cfg.trials as f64).sqrt())
                }
            };
            rows.push(FidelityRow {
                fidelity,
                stderr,
                successes,
            });
        }
        table.push(rows);
    }

    let mut w = csv_writer(header, io.main()?)?;
    w.write_record(["p", "size", "trials", "fidelity", "stderr", "successes", "ci_low", "ci_high"])?;
    for (s, rows) in cfg.sizes.iter().zip(&table) {
        for (p, r) in cfg.p.iter().zip(rows) {
            let (lo, hi) = wilson_interval(r.successes, cfg.trials, 1.96);
            w.write_record([
                num(*p),
                size_name(*s),
                cfg.trials.to_string(),
                num(r.fidelity),
                num(r.stderr),
                r.successes.to_string(),
                num(lo),
                num(hi),
            ])?;
        }
    }
    w.flush()?;

    let curves: Vec<Vec<f64>> = table.iter().map(|rows| rows.iter().map(|r| r.fidelity).collect()).collect();
    let pairs: Vec<_> = cfg
        .sizes
        .windows(2)
        .zip(curves.windows(2))
        .map(|(s, c)| json!({ "sizes": [size_name(s[0]), size_name(s[1])], "p": crossing(&cfg.p, &c[0], &c[1]) }))
        .collect();
    let found: Vec<f64> = curves.windows(2).filter_map(|c| crossing(&cfg.p, &c[0], &c[1])).collect();
    let estimate = (!found.is_empty()).then(|| found.iter().sum::<f64>() / found.len() as f64);
    io.write_summary(&json!({
        "header": header.json(),
        "color": cfg.color,
        "decoder": cfg.decoder,
        "crossings": pairs,
        "estimate": estimate,
    }))
}

fn replay(cfg: &DecodeSweepConfig, path: &std::path::Path, header: &Header, io: &Paths) -> Result<(), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let records = read_ndjson(&body)?;
    let (l1, l2) = cfg.sizes[0];
    let lat = build_lattice(l1, l2)?;
    let view = superlattice(&lat, cfg.color);
    let pt = superedge_rate(&SimpleErrorModel::uniform(cfg.p[0])?, cfg.color);
    let c = cfg.color.index();
    let max_vertex = view.supervertices.len();

    let mut jobs = Vec::new();
    for r in &records {
        for (t, per) in r.defects.iter().enumerate() {
            if let Some(v) = per[c].iter().find(|&&v| v >= max_vertex) {
                return Err(CliError::Validation(format!(
                    "trial {} references supervertex {v} but {} has {max_vertex}",
                    r.trial,
                    size_name(cfg.sizes[0])
                )));
            }
            let truth = r.kappa_true.as_ref().and_then(|k| k.get(t)).map(|k| k[c]);
            jobs.push((r.trial, t, &per[c], truth));
        }
    }
    let decoded = jobs
        .par_iter()
        .map(|(_, _, d, _)| ml_decode(&lat, &view, d, pt))
        .collect::<Result<Vec<_>, Error>>()?;

    let mut w = csv_writer(header, io.main()?)?;
    w.write_record(["trial", "period", "color", "defects", "kappa_true", "kappa_ml", "max_ratio", "success"])?;
    let (mut judged, mut successes, mut ratios) = (0usize, 0usize, Vec::new());
    for ((trial, t, d, truth), (dec, probs)) in jobs.iter().zip(&decoded) {
        let ok = truth.map(|k| k == dec.kappa);
        judged += ok.is_some() as usize;
        successes += (ok == Some(true)) as usize;
        ratios.push(probs.max_ratio());
        w.write_record([
            trial.to_string(),
            t.to_string(),
            cfg.color.to_string(),
            d.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "),
            truth.map(kappa_name).unwrap_or_default(),
            kappa_name(dec.kappa),
            num(probs.max_ratio()),
            ok.map(|b| b.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    let (fidelity, stderr) = mean_stderr(&ratios);
    io.write_summary(&json!({
        "header": header.json(),
        "records": records.len(),
        "decoded": decoded.len(),
        "judged": judged,
        "successes": successes,
        "fidelity": fidelity,
        "stderr": stderr,
    }))
}

fn dump_trials(cfg: &DecodeSweepConfig, path: &std::path::Path, periods: usize, header: &Header) -> Result<(), CliError> {
    let (l1, l2) = cfg.sizes[0];
    let lat = build_lattice(l1, l2)?;
    let model = ErrorModel::Simple(SimpleErrorModel::uniform(cfg.p[0])?);
    let records = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(t as u64);
            let outcome = run_trial(&lat, &model, periods, CircuitOptions::default(), &mut rng)?;
            Ok(TrialRecord::from_outcome(t, &outcome))
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    header.write_comment(&mut f)?;
    write_ndjson(&mut f, &records)?;
    f.flush()?;
    Ok(())
}

pub fn diagnostics(cfg: &DiagnosticsConfig, io: &Paths) -> Result<(), CliError> {
    let header = Header::new("diagnostics", cfg, None)?;
    let lat = build_lattice(cfg.size.0, cfg.size.1)?;
    let mut blocks = Vec::new();
    for &variant in &cfg.variants {
        for &n in &cfg.n {
            let mut base = DiagnosticsRequest::new(n, 0.0, variant)?;
            base.coefficients = cfg.coefficients;
            blocks.push((variant, n, sweep(&lat, &base, &cfg.p)?));
        }
    }

    let mut w = csv_writer(&header, io.main()?)?;
    w.write_record([
        "n", "p", "variant", "coefficients", "d_em", "i_c", "log_sum_em", "log_sum_x", "log_sum_z", "method",
    ])?;
    for (variant, n, rs) in &blocks {
        for r in rs {
            w.write_record([
                n.to_string(),
                num(r.p),
                variant_name(*variant).into(),
                coefficients_name(cfg.coefficients).into(),
                num(r.d_em),
                num(r.i_c),
                num(r.log_defect_sums[0]),
                num(r.log_defect_sums[1]),
                num(r.log_defect_sums[2]),
                method_name(r.method),
            ])?;
        }
    }
    w.flush()?;

    let mut transitions = Vec::new();
    if cfg.transitions {
        for (variant, n, rs) in &blocks {
            let t = transition_estimates(rs)?;
            transitions.push(json!({
                "variant": variant_name(*variant),
                "n": n,
                "d_em": t.d_em,
                "i_c": t.i_c,
                "resolution": t.resolution,
                "separation": t.separation(),
                "coincide": t.coincide(),
            }));
        }
    }
    io.write_summary(&json!({
        "header": header.json(),
        "size": size_name(cfg.size),
        "coefficients": coefficients_name(cfg.coefficients),
        "transitions": transitions,
    }))
}

const STATMECH_COLUMNS: [&str; 7] = ["model", "size", "p", "n", "d", "delta_f", "err"];

pub fn statmech(cfg: &StatmechConfig, io: &Paths) -> Result<(), CliError> {
    let header = Header::new("statmech", cfg, cfg.seed())?;
    match cfg {
        StatmechConfig::Rbim {
            widths,
            p,
            samples,
            bootstrap,
            seed,
        } => {
            let tc = ThresholdConfig {
                widths: widths.clone(),
                grid: p.clone(),
                samples: *samples,
                seed: *seed,
                bootstrap: *bootstrap,
            };
            let curves = rbim_free_energy_curves(&tc)?;
            let mut w = csv_writer(&header, io.main()?)?;
            w.write_record(STATMECH_COLUMNS)?;
            for c in &curves {
                for (x, (m, e)) in c.grid.iter().zip(c.means()) {
                    w.write_record(["rbim".into(), c.width.to_string(), num(*x), String::new(), "1,0".into(), num(m), num(e)])?;
                }
            }
            w.flush()?;
            let summary = match threshold_from_curves(&tc, curves) {
                Ok(est) => {
                    let pairs: Vec<_> = widths
                        .windows(2)
                        .zip(&est.pair_crossings)
                        .map(|(w, x)| json!({ "widths": w, "p": x }))
                        .collect();
                    json!({
                        "header": header.json(),
                        "crossing": true,
                        "estimate": est.estimate,
                        "ci": [est.ci.0, est.ci.1],
                        "pair_crossings": pairs,
                        "physical_rate": invert_effective_rate(est.estimate)?,
                        "physical_ci": [invert_effective_rate(est.ci.0)?, invert_effective_rate(est.ci.1)?],
                    })
                }
                Err(Error::NoCrossing(msg)) => {
                    eprintln!("no crossing: {msg}");
                    json!({ "header": header.json(), "crossing": false, "estimate": null, "reason": msg })
                }
                Err(e) => return Err(e.into()),
            };
            io.write_summary(&summary)
        }
        StatmechConfig::Flavor {
            sizes,
            p,
            n,
            label,
            defect,
            coefficients,
        } => {
            let spec = DefectSpec { d: *defect, product: true };
            let mut jobs = Vec::new();
            for &s in sizes {
                for &k in n {
                    for &x in p {
                        jobs.push((s, k, x));
                    }
                }
            }
            let lats = sizes.iter().map(|&(a, b)| build_lattice(a, b)).collect::<Result<Vec<_>, Error>>()?;
            let values = jobs
                .par_iter()
                .map(|&(s, k, x)| {
                    let lat = &lats[sizes.iter().position(|&t| t == s).expect("listed size")];
                    let inst = LabelInstance::new(lat, *label, k, x, *coefficients)?;
                    Ok(inst.log_partition(DefectSpec::none())? - inst.log_partition(spec)?)
                })
                .collect::<Result<Vec<f64>, Error>>()?;

            let mut w = csv_writer(&header, io.main()?)?;
            w.write_record(STATMECH_COLUMNS)?;
            for ((s, k, x), df) in jobs.iter().zip(&values) {
                w.write_record([
                    "flavor".into(),
                    size_name(*s),
                    num(*x),
                    k.to_string(),
                    format!("{},{}", defect[0], defect[1]),
                    num(*df),
                    "0".into(),
                ])?;
            }
            w.flush()?;

            let mut growth = Vec::new();
            for &k in n {
                for &x in p {
                    let seq: Vec<f64> = jobs
                        .iter()
                        .zip(&values)
                        .filter(|((_, kk, xx), _)| *kk == k && *xx == x)
                        .map(|(_, v)| *v)
                        .collect();
                    let increasing = seq.windows(2).all(|w| w[1] > w[0]);
                    growth.push(json!({ "n": k, "p": x, "delta_f": seq, "increasing": increasing }));
                }
            }
            io.write_summary(&json!({
                "header": header.json(),
                "label": label.label.to_string(),
                "coefficients": coefficients_name(*coefficients),
                "sizes": sizes.iter().map(|&s| size_name(s)).collect::<Vec<_>>(),
                "size_dependence": growth,
            }))
        }
    }
}

const VERIFY_TOL: f64 = 1e-9;

struct Tally {
    pass: usize,
    fail: usize,
    skip: usize,
}

impl Tally {
    fn record(&mut self, w: &mut dyn Write, what: &str, diff: f64) -> Result<(), CliError> {
        if diff <= VERIFY_TOL {
            self.pass += 1;
            writeln!(w, "PASS {what} diff={diff:.3e}")?;
        } else {
            self.fail += 1;
            writeln!(w, "FAIL {what} diff={diff:.3e}")?;
        }
        Ok(())
    }

    fn budget(&mut self, w: &mut dyn Write, what: &str, e: &Error) -> Result<bool, CliError> {
        if let Error::BudgetExceeded { .. } = e {
            self.skip += 1;
            writeln!(w, "SKIP {what} ({e})")?;
            return Ok(true);
        }
        Ok(false)
    }
}

/// Rate moved by `eps`, staying inside [0, 1/2].
fn shifted(p: f64, eps: f64) -> f64 {
    if eps == 0.0 {
        p
    } else if (0.0..=0.5).contains(&(p + eps)) {
        p + eps
    } else {
        p - eps
    }
}

fn log_diff(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(1.0)
    }
}

fn class_diff(a: &ClassProbabilities<f64>, b: &ClassProbabilities<f64>) -> f64 {
    (0..4).map(|k| log_diff(a.log_p[k], b.log_p[k])).fold(0.0, f64::max)
}

/// Deterministic syndromes: boundaries of small edge sets.
fn probe_syndromes(g: &SeamGraph) -> Vec<Vec<usize>> {
    let m = g.num_edges();
    (0..m.min(8))
        .map(|k| {
            let mut chain = Bits::zeros(m);
            for e in [k, (k + 1) % m, (3 * k + 2) % m] {
                chain.flip(e);
            }
            g.boundary(&chain).ones().collect()
        })
        .collect()
}

pub fn verify(cfg: &VerifyConfig, io: &Paths) -> Result<(), CliError> {
    let header = Header::new("verify", cfg, None)?;
    let mut w = io.main()?;
    header.write_comment(&mut w)?;
    let mut tally = Tally { pass: 0, fail: 0, skip: 0 };
    for &(l1, l2) in &cfg.sizes {
        let lat = build_lattice(l1, l2)?;
        let size = size_name((l1, l2));
        for variant in [Variant::Floquet, Variant::Toric] {
            for &p in &cfg.p {
                let tag = format!("oracle-vs-statmech {size} {} p={p}", variant_name(variant));
                let states = match build_states_for_diagnostics(&lat, &SimpleErrorModel::uniform(p)?, variant, Direction::L1) {
                    Ok(s) => s,
                    Err(e) if tally.budget(&mut *w, &tag, &e)? => continue,
                    Err(e) => return Err(e.into()),
                };
                for &n in &cfg.n {
                    let what = format!("{tag} n={n}");
                    let oracle = oracle_diagnostics(&states, n);
                    let stat = diagnostics_at(&lat, &DiagnosticsRequest::new(n, shifted(p, cfg.perturb), variant)?);
                    match (oracle, stat) {
                        (Ok(o), Ok(s)) => {
                            tally.record(&mut *w, &format!("{what} d_em"), (o.d_em - s.d_em).abs())?;
                            tally.record(&mut *w, &format!("{what} i_c"), (o.i_c - s.i_c).abs())?;
                        }
                        (Err(e), _) | (_, Err(e)) => {
                            if !tally.budget(&mut *w, &what, &e)? {
                                return Err(e.into());
                            }
                        }
                    }
                }
            }
        }
        for color in Color::ALL {
            let view = superlattice(&lat, color);
            let g = SeamGraph::from_superlattice(&view);
            let syndromes = probe_syndromes(&g);
            let mut rates: Vec<f64> = cfg.p.iter().map(|&p| effective_rate(p)).collect::<Result<_, _>>()?;
            rates.push(0.5);
            for &pt in &rates {
                for (i, d) in syndromes.iter().enumerate() {
                    let what = format!("enumeration-vs-rbim {size} {color} p~={pt} syndrome={i}");
                    let exact = class_probabilities_exact(&lat, &view, d, pt);
                    let rbim = class_probabilities_via_rbim(&lat, &view, d, shifted(pt, cfg.perturb));
                    match (exact, rbim) {
                        (Ok(a), Ok(b)) => {
                            tally.record(&mut *w, &what, class_diff(&a, &b))?;
                            if pt == 0.5 {
                                let dev = a.ratios().iter().chain(&b.ratios()).map(|r| (r - 0.25).abs()).fold(0.0, f64::max);
                                tally.record(&mut *w, &format!("equal-classes {size} {color} syndrome={i}"), dev)?;
                            }
                        }
                        (Err(e), _) | (_, Err(e)) => {
                            if !tally.budget(&mut *w, &what, &e)? {
                                return Err(e.into());
                            }
                        }
                    }
                }
            }
        }
    }
    writeln!(w, "# {} passed, {} failed, {} skipped", tally.pass, tally.fail, tally.skip)?;
    w.flush()?;
    if tally.fail > 0 {
        return Err(CliError::Verification(format!("{} of {} comparisons", tally.fail, tally.fail + tally.pass)));
    }
    Ok(())
}

pub fn dump_lattice(cfg: &DumpLatticeConfig, io: &Paths) -> Result<(), CliError> {
    let header = Header::new("dump-lattice", cfg, None)?;
    let lat = build_lattice(cfg.size.0, cfg.size.1)?;
    let mut out = io.main()?;
    match cfg.format {
        LatticeFormat::Json => {
            serde_json::to_writer_pretty(&mut out, &json!({ "header": header.json(), "lattice": lat }))?;
            writeln!(out)?;
            out.flush()?;
        }
        LatticeFormat::Csv(table) => {
            let mut w = csv_writer(&header, out)?;
            match table {
                LatticeTable::Vertices => {
                    w.write_record(["index", "cell1", "cell2", "color"])?;
                    for (i, v) in lat.vertices.iter().enumerate() {
                        w.write_record([i.to_string(), v.cell[0].to_string(), v.cell[1].to_string(), v.color.to_string()])?;
                    }
                }
                LatticeTable::Edges => {
                    w.write_record(["index", "v0", "v1", "color", "plaquette0", "plaquette1", "shift1", "shift2"])?;
                    for (i, e) in lat.edges.iter().enumerate() {
                        w.write_record([
                            i.to_string(),
                            e.vertices[0].to_string(),
                            e.vertices[1].to_string(),
                            e.color.to_string(),
                            e.plaquettes[0].to_string(),
                            e.plaquettes[1].to_string(),
                            e.shift[0].to_string(),
                            e.shift[1].to_string(),
                        ])?;
                    }
                }
                LatticeTable::Plaquettes => {
                    w.write_record(["index", "vertex_r", "vertex_g", "vertex_b", "edge_r", "edge_g", "edge_b", "up"])?;
                    for (i, q) in lat.plaquettes.iter().enumerate() {
                        let mut row = vec![i.to_string()];
                        row.extend(q.vertices.iter().chain(&q.edges).map(|x| x.to_string()));
                        row.push(q.up.to_string());
                        w.write_record(row)?;
                    }
                }
            }
            w.flush()?;
        }
    }
    Ok(())
}
