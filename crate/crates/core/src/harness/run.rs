//! Experiment pipelines and their output files.
//!
//! Every file written here is a deterministic function of the config. Wall
//! clock timings are returned in the [`RunRecord`] but never written.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::brownian::sample_trajectory_marked;
use crate::cocycle::{distance_norm_bound_check, exterior_power_rep};
use crate::error::{Error, Result};
use crate::geometry::SurfaceKind;
use crate::grassmann::{random_subspace, Subspace};
use crate::harmonic::{
    degree_report, generic_vector, lambda_from_measure, sample_fiber_measure, support_divisor_gap, Degree,
    VERDICT_CI_FLOOR,
};
use crate::linalg::{self, c, CVec};
use crate::lyapunov::{estimate_spectrum, estimate_top, exterior_consistency, run_paths, symmetry_residual, EstimatorConfig};
use crate::rng::{derive_seed, stream};

use super::catalog::{DivisorSpec, Preset};
use super::config::{CuspPolicy, DivisorMode, LoadedConfig};

pub const EXPERIMENTS: [&str; 5] = ["spectrum", "degree_report", "fiber_measure", "diagnostics", "all"];

const LOG_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub version: String,
    pub experiment: String,
    pub outputs: BTreeMap<String, Value>,
    pub discards: usize,
    pub verdicts: BTreeMap<String, String>,
    pub warnings: Vec<String>,
    /// Seconds per pipeline stage. Not persisted.
    #[serde(skip)]
    pub timings: Vec<(String, f64)>,
    #[serde(skip)]
    pub dir: PathBuf,
}

/// Removes the lock file on drop.
struct DirLock(PathBuf);

impl DirLock {
    fn acquire(dir: &Path) -> Result<Self> {
        let path = dir.join(".lock");
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                writeln!(f, "{}", std::process::id())?;
                Ok(DirLock(path))
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::Resource(format!(
                "{} is locked by another run (remove {} if stale)",
                dir.display(),
                path.display()
            ))),
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

struct Ctx<'a> {
    loaded: &'a LoadedConfig,
    preset: Preset,
    est: EstimatorConfig,
    dir: PathBuf,
    record: RunRecord,
    summary: Vec<String>,
}

impl Ctx<'_> {
    fn timed<T>(&mut self, stage: &str, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        let t = Instant::now();
        let out = f(self);
        self.record.timings.push((stage.to_string(), t.elapsed().as_secs_f64()));
        out
    }

    fn check_discards(&self, discarded: usize) -> Result<()> {
        if self.loaded.config.estimator.cusp_policy == CuspPolicy::Fail && discarded > 0 {
            return Err(Error::Discards {
                discarded,
                total: self.est.n_paths,
            });
        }
        Ok(())
    }
}

/// Runs `experiment` into the configured output directory.
pub fn run(loaded: &LoadedConfig, experiment: &str) -> Result<RunRecord> {
    run_in(loaded, experiment, &loaded.config.output_dir())
}

pub fn run_in(loaded: &LoadedConfig, experiment: &str, dir: &Path) -> Result<RunRecord> {
    if !EXPERIMENTS.contains(&experiment) {
        return Err(Error::Config(format!(
            "unknown experiment {experiment:?}; known: {}",
            EXPERIMENTS.join(", ")
        )));
    }
    fs::create_dir_all(dir)?;
    let _lock = DirLock::acquire(dir)?;
    let _ = fs::remove_file(dir.join("PARTIAL"));
    let cfg = &loaded.config;
    let preset = cfg.build()?;
    let mut ctx = Ctx {
        loaded,
        est: cfg.estimator_config(),
        dir: dir.to_path_buf(),
        record: RunRecord {
            config_hash: cfg.hash(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            experiment: experiment.to_string(),
            outputs: BTreeMap::new(),
            discards: 0,
            verdicts: BTreeMap::new(),
            warnings: preset.rep.warnings.clone(),
            timings: Vec::new(),
            dir: dir.to_path_buf(),
        },
        summary: Vec::new(),
        preset,
    };
    ctx.summary.push(format!("flatlyap {} run", ctx.record.version));
    ctx.summary.push(format!("config hash: {}", ctx.record.config_hash));
    ctx.summary.push(format!("experiment: {experiment}"));
    ctx.summary.push(format!(
        "preset: {} on {} (rank {})",
        ctx.preset.name, ctx.preset.surface.name, ctx.preset.rep.n
    ));
    ctx.summary.push(format!(
        "seed {}, horizon {}, dt {}, {} paths in {} batches",
        ctx.est.path.rng_seed, ctx.est.path.horizon, ctx.est.path.dt, ctx.est.n_paths, ctx.est.n_batches
    ));
    let result = (|| {
        ctx.timed("runlog", write_runlog)?;
        let stages: &[&str] = match experiment {
            "all" => &EXPERIMENTS[..4],
            one => std::slice::from_ref(&EXPERIMENTS[EXPERIMENTS.iter().position(|e| *e == one).expect("checked")]),
        };
        for &stage in stages {
            match stage {
                "spectrum" => ctx.timed(stage, run_spectrum)?,
                "degree_report" => ctx.timed(stage, run_degree)?,
                "fiber_measure" => ctx.timed(stage, run_fiber)?,
                "diagnostics" => ctx.timed(stage, run_diagnostics)?,
                _ => unreachable!(),
            }
        }
        Ok(())
    })();
    if let Err(e) = &result {
        ctx.summary.push(format!("FAILED: {e}"));
        fs::write(dir.join("PARTIAL"), format!("run did not complete: {e}\n"))?;
    }
    if !ctx.record.warnings.is_empty() {
        ctx.summary.push("warnings:".into());
        for w in &ctx.record.warnings {
            ctx.summary.push(format!("  {w}"));
        }
    }
    let mut text = ctx.summary.join("\n");
    text.push('\n');
    fs::write(dir.join("summary.txt"), text)?;
    let mut rec = serde_json::to_string_pretty(&ctx.record)?;
    rec.push('\n');
    fs::write(dir.join("run_record.json"), rec)?;
    result.map(|()| ctx.record)
}

/// Header with the config text, then one line per estimator trajectory.
fn write_runlog(ctx: &mut Ctx) -> Result<()> {
    let marks = [ctx.est.burn_in_time()];
    let batch = run_paths(&ctx.preset.surface, &ctx.est, &marks)?;
    ctx.check_discards(batch.discarded)?;
    ctx.record.discards = batch.discarded;
    let mut f = std::io::BufWriter::new(File::create(ctx.dir.join("runlog.jsonl"))?);
    let header = json!({
        "type": "header",
        "log_version": LOG_VERSION,
        "version": ctx.record.version,
        "config_hash": ctx.record.config_hash,
        "seed": ctx.est.path.rng_seed,
        "experiment": ctx.record.experiment,
        "config": ctx.loaded.text,
    });
    writeln!(f, "{header}")?;
    for (i, p) in batch.paths.iter().enumerate() {
        let line = match p {
            Some(tr) => json!({
                "type": "trajectory",
                "id": i,
                "seed": ctx.est.path.rng_seed,
                "stream": i,
                "marks": marks,
                "discarded": false,
                "word_len": tr.word.len(),
                "steps": tr.steps,
                "endpoint": [tr.endpoint.x, tr.endpoint.y],
                "unreduced_endpoint": [tr.unreduced_endpoint.x, tr.unreduced_endpoint.y],
            }),
            None => json!({
                "type": "trajectory",
                "id": i,
                "seed": ctx.est.path.rng_seed,
                "stream": i,
                "marks": marks,
                "discarded": true,
            }),
        };
        writeln!(f, "{line}")?;
    }
    f.flush()?;
    if let Some(w) = batch.warning {
        ctx.record.warnings.push(w);
    }
    Ok(())
}

fn run_spectrum(ctx: &mut Ctx) -> Result<()> {
    let spec = estimate_spectrum(&ctx.preset.rep, &ctx.preset.surface, &ctx.est)?;
    ctx.check_discards(spec.discarded_trajectories)?;
    let sym = symmetry_residual(&spec);
    let rows: Vec<Vec<String>> = spec
        .lambdas
        .iter()
        .zip(&spec.ci_half_widths)
        .enumerate()
        .map(|(i, (l, ci))| vec![(i + 1).to_string(), num(*l), num(*ci)])
        .collect();
    write_csv(&ctx.dir.join("spectrum.csv"), &["index", "lambda", "ci_half_width"], &rows)?;
    let rows: Vec<Vec<String>> = sym
        .pairs
        .iter()
        .map(|p| {
            vec![
                (p.i + 1).to_string(),
                (p.j + 1).to_string(),
                num(p.value),
                num(p.ci),
                (p.value.abs() <= p.ci + 1e-12).to_string(),
            ]
        })
        .collect();
    write_csv(&ctx.dir.join("symmetry.csv"), &["i", "j", "sum", "ci_half_width", "within_ci"], &rows)?;
    ctx.summary.push("spectrum:".into());
    for (i, (l, ci)) in spec.lambdas.iter().zip(&spec.ci_half_widths).enumerate() {
        ctx.summary.push(format!("  lambda_{} = {l:.6} ± {ci:.6}", i + 1));
    }
    ctx.summary.push(format!(
        "  symmetry residual {:.3e} ({})",
        sym.residual,
        if sym.within_ci { "within CI" } else { "outside CI" }
    ));
    ctx.record
        .verdicts
        .insert("symmetry".into(), if sym.within_ci { "within-ci" } else { "outside-ci" }.into());
    ctx.record.outputs.insert(
        "spectrum".into(),
        json!({
            "lambdas": spec.lambdas,
            "ci_half_widths": spec.ci_half_widths,
            "discarded": spec.discarded_trajectories,
            "symmetry_residual": sym.residual,
        }),
    );
    if let Some(w) = spec.warning {
        ctx.record.warnings.push(w);
    }
    Ok(())
}

/// The divisor named by the config, drawing randomness where requested.
fn resolve_divisor(ctx: &Ctx) -> Result<Option<DivisorSpec>> {
    let Some(section) = &ctx.loaded.config.divisor else {
        return Ok(ctx.preset.divisor.clone());
    };
    let degree = section.degree.as_deref().map(str::parse::<Degree>).transpose()?;
    let n = ctx.preset.rep.n;
    match section.mode {
        DivisorMode::Preset | DivisorMode::Subspace => Ok(ctx.preset.divisor.clone()),
        DivisorMode::Random => {
            let k = section.k.unwrap_or(1);
            if k == 0 || k >= n {
                return Err(Error::Config(format!("divisor.k must lie in 1..{n}")));
            }
            let mut rng = stream(section.seed.expect("validated"), 0);
            let f = random_subspace(&mut rng, n, n - k)?;
            Ok(Some(DivisorSpec::from_subspace(f, degree)?))
        }
        DivisorMode::ThroughSample => {
            if section.k.unwrap_or(1) != 1 {
                return Err(Error::Config("through_sample divisors need k = 1".into()));
            }
            let seed = section.seed.expect("validated");
            let mut pilot = ctx.est.clone();
            pilot.path.rng_seed = derive_seed(seed, 0xd1f);
            let sample = sample_fiber_measure(&ctx.preset.rep, &ctx.preset.surface, &pilot, 1, ctx.preset.v0.as_ref())?;
            let mut rng = stream(seed, 1);
            let p = &sample.points[rng.gen_range(0..sample.len())];
            // a hyperplane F ∋ p: kernel of a random covector q with Σ q_i p_i = 0
            let r = generic_or_random(&mut rng, n);
            let t: num_complex::Complex64 = r.iter().zip(p.iter()).map(|(a, b)| a * b).sum();
            let q = &r - p.map(|z| z.conj()) * t;
            // F = {v : Σ q_i v_i = 0} is the Hermitian complement of conj(q)
            let normal = Subspace::from_columns(&[q.map(|z| z.conj())])?;
            Ok(Some(DivisorSpec::from_subspace(normal.complement()?, degree)?))
        }
    }
}

fn generic_or_random<R: Rng>(rng: &mut R, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
}

fn v0_for(ctx: &Ctx, k: usize) -> Option<CVec> {
    ctx.preset
        .v0
        .as_ref()
        .filter(|v| v.len() == linalg::binomial(ctx.preset.rep.n, k))
        .cloned()
}

fn run_degree(ctx: &mut Ctx) -> Result<()> {
    let divisor = resolve_divisor(ctx)?
        .ok_or_else(|| Error::Config(format!("preset {} has no divisor; add a [divisor] section", ctx.preset.name)))?;
    let degree = divisor
        .degree
        .clone()
        .ok_or_else(|| Error::Config("degree_report needs divisor.degree".into()))?;
    let v0 = v0_for(ctx, divisor.k);
    let rep = degree_report(
        &ctx.preset.rep,
        &ctx.preset.surface,
        &ctx.est,
        &divisor.form,
        &degree,
        divisor.k,
        v0.as_ref(),
    )?;
    write_csv(
        &ctx.dir.join("degree_report.csv"),
        &["k", "lambda_sum", "lambda_sum_ci", "degree", "pi_deg", "delta", "gap", "verdict"],
        &[vec![
            rep.k.to_string(),
            num(rep.lambda_sum),
            num(rep.lambda_sum_ci),
            rep.degree.to_string(),
            num(rep.pi_degree),
            num(rep.delta),
            num(rep.support_gap),
            rep.verdict.as_str().to_string(),
        ]],
    )?;
    ctx.summary.push("degree report:".into());
    ctx.summary.push(format!(
        "  lambda_1..{} = {:.6} ± {:.6}, pi*deg = {:.6} (deg {}), delta = {:.6}",
        rep.k, rep.lambda_sum, rep.lambda_sum_ci, rep.pi_degree, rep.degree, rep.delta
    ));
    ctx.summary.push(format!("  support gap {:.4e}, verdict {}", rep.support_gap, rep.verdict.as_str()));
    ctx.record.verdicts.insert("degree".into(), rep.verdict.as_str().into());
    ctx.record.warnings.extend(rep.warnings.iter().cloned());
    ctx.record.outputs.insert("degree_report".into(), serde_json::to_value(&rep)?);
    Ok(())
}

fn run_fiber(ctx: &mut Ctx) -> Result<()> {
    let k = ctx.loaded.config.fiber.k;
    let fiber = ctx.loaded.config.fiber.clone();
    let rep = &ctx.preset.rep;
    let surface = &ctx.preset.surface;
    let v0 = v0_for(ctx, k);
    let sample = sample_fiber_measure(rep, surface, &ctx.est, k, v0.as_ref())?;
    ctx.check_discards(sample.discarded)?;
    let divisor = resolve_divisor(ctx)?.filter(|d| d.k == k);
    let gap = divisor.as_ref().map(|d| support_divisor_gap(&sample, &d.form)).transpose()?;
    let pow = if k == 1 { rep.clone() } else { exterior_power_rep(rep, k)? };
    let top = estimate_top(&pow, surface, &ctx.est)?;
    let mut probe_path = ctx.est.path.clone();
    probe_path.rng_seed = derive_seed(ctx.est.path.rng_seed, 0x9b0);
    let lfm = if sample.converged {
        Some(lambda_from_measure(
            rep,
            surface,
            &sample,
            &probe_path,
            fiber.probe_dt,
            fiber.n_probes,
            ctx.est.n_batches,
        )?)
    } else {
        ctx.record.warnings.push(format!(
            "fiber sample not converged (discrepancy {:.4}); lambda_from_measure skipped",
            sample.discrepancy
        ));
        None
    };
    let dim = sample.dim();
    let mut header: Vec<String> = vec!["id".into(), "base_x".into(), "base_y".into()];
    for j in 0..dim {
        header.push(format!("re_{j}"));
        header.push(format!("im_{j}"));
    }
    header.push("distance_to_divisor".into());
    let rows: Vec<Vec<String>> = sample
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut row = vec![i.to_string(), num(sample.bases[i].x), num(sample.bases[i].y)];
            for z in p.iter() {
                row.push(num(z.re));
                row.push(num(z.im));
            }
            row.push(gap.as_ref().map_or(String::new(), |g| num(g.distances[i])));
            row
        })
        .collect();
    let hdr: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(&ctx.dir.join("fiber_sample.csv"), &hdr, &rows)?;
    let mut kv: Vec<(String, String)> = vec![
        ("k".into(), k.to_string()),
        ("n_points".into(), sample.len().to_string()),
        ("discarded".into(), sample.discarded.to_string()),
        ("horizon_discrepancy".into(), num(sample.discrepancy)),
        ("converged".into(), sample.converged.to_string()),
        ("estimate_top".into(), num(top.lambda1)),
        ("estimate_top_ci".into(), num(top.ci)),
    ];
    if let Some(g) = &gap {
        kv.push(("support_gap".into(), num(g.min_distance)));
        for (e, f) in &g.fraction_below {
            kv.push((format!("fraction_below_{e}"), num(*f)));
        }
    }
    if let Some(l) = &lfm {
        let joint = l.ci.hypot(top.ci).max(VERDICT_CI_FLOOR);
        kv.push(("lambda_from_measure".into(), num(l.mean)));
        kv.push(("lambda_from_measure_ci".into(), num(l.ci)));
        kv.push(("cross_inequality_holds".into(), (l.mean <= top.lambda1 + joint).to_string()));
        if rep.flags.strongly_irreducible {
            let agree = (l.mean - top.lambda1).abs() <= joint;
            kv.push(("cross_equality_holds".into(), agree.to_string()));
            ctx.record
                .verdicts
                .insert("cross_estimator".into(), if agree { "agree" } else { "disagree" }.into());
        }
    }
    let rows: Vec<Vec<String>> = kv.iter().map(|(a, b)| vec![a.clone(), b.clone()]).collect();
    write_csv(&ctx.dir.join("fiber_summary.csv"), &["quantity", "value"], &rows)?;
    ctx.summary.push("fiber measure:".into());
    for (a, b) in &kv {
        ctx.summary.push(format!("  {a} = {b}"));
    }
    ctx.record.outputs.insert(
        "fiber_measure".into(),
        Value::Object(kv.into_iter().map(|(a, b)| (a, Value::String(b))).collect()),
    );
    Ok(())
}

fn run_diagnostics(ctx: &mut Ctx) -> Result<()> {
    let rep = &ctx.preset.rep;
    let surface = &ctx.preset.surface;
    let diag = ctx.loaded.config.diagnostics.clone();
    let mut rows: Vec<Vec<String>> = Vec::new();
    let top = estimate_top(rep, surface, &ctx.est)?;
    rows.push(vec!["estimate_top".into(), num(top.lambda1), num(top.ci), String::new()]);
    let bound = distance_norm_bound_check(
        rep,
        surface,
        diag.bound_samples,
        diag.bound_max_len,
        derive_seed(ctx.est.path.rng_seed, 0xb0d),
    )?;
    rows.push(vec!["distance_norm_bound".into(), num(bound), String::new(), String::new()]);
    if surface.kind == SurfaceKind::Compact {
        let rel = surface.vertex_cycle_relation()?;
        let r = rep.relation_residual(&rel)?;
        let ok = r < 1e-6;
        rows.push(vec!["relation_residual".into(), num(r), String::new(), if ok { "ok" } else { "violated" }.into()]);
        if !ok {
            ctx.record
                .warnings
                .push(format!("representation violates the surface relation (residual {r:.3e})"));
        }
    }
    let ek = diag.exterior_k.or((rep.n >= 3).then_some(2));
    if let Some(k) = ek {
        let ex = exterior_consistency(rep, surface, &ctx.est, k)?;
        let status = if ex.within_ci() { "within-ci" } else { "outside-ci" };
        rows.push(vec![format!("exterior_consistency_k{k}"), num(ex.discrepancy), num(ex.joint_ci), status.into()]);
        ctx.record.verdicts.insert("exterior_consistency".into(), status.into());
    }
    let v = generic_vector(rep.n);
    rows.push(vec!["v0_norm".into(), num(v.norm()), String::new(), String::new()]);
    write_csv(&ctx.dir.join("diagnostics.csv"), &["check", "value", "ci_half_width", "status"], &rows)?;
    ctx.summary.push("diagnostics:".into());
    for r in &rows {
        ctx.summary.push(format!("  {} = {} {} {}", r[0], r[1], r[2], r[3]).trim_end().to_string());
    }
    ctx.record.outputs.insert(
        "diagnostics".into(),
        Value::Array(rows.iter().map(|r| json!(r)).collect()),
    );
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct ReplayOutcome {
    pub id: usize,
    pub logged: Value,
    pub replayed: Value,
    pub matches: bool,
}

/// Re-simulates one logged trajectory from the config stored in the log
/// header and compares it with the logged line.
pub fn replay(runlog: &Path, id: usize) -> Result<ReplayOutcome> {
    let reader = BufReader::new(File::open(runlog)?);
    let mut lines = reader.lines();
    let header: Value = serde_json::from_str(
        &lines
            .next()
            .ok_or_else(|| Error::Invalid("empty run log".into()))??,
    )?;
    let text = header["config"]
        .as_str()
        .ok_or_else(|| Error::Invalid("run log header carries no config".into()))?;
    let cfg = super::config::parse_config(text)?;
    let logged = lines
        .map(|l| -> Result<Value> { Ok(serde_json::from_str(&l?)?) })
        .find(|v| v.as_ref().map_or(true, |v| v["id"].as_u64() == Some(id as u64)))
        .ok_or_else(|| Error::Invalid(format!("trajectory {id} is not in the log")))??;
    let preset = cfg.build()?;
    let est = cfg.estimator_config();
    let seed = logged["seed"].as_u64().unwrap_or(est.path.rng_seed);
    let marks: Vec<f64> = logged["marks"]
        .as_array()
        .map(|a| a.iter().filter_map(Value::as_f64).collect())
        .unwrap_or_default();
    let mut path = est.path.clone();
    path.rng_seed = seed;
    let mut rng = stream(seed, id as u64);
    let replayed = match sample_trajectory_marked(&preset.surface, preset.surface.basepoint, &path, &mut rng, &marks) {
        Ok(tr) => json!({
            "type": "trajectory",
            "id": id,
            "seed": seed,
            "stream": id,
            "marks": marks,
            "discarded": false,
            "word_len": tr.word.len(),
            "steps": tr.steps,
            "endpoint": [tr.endpoint.x, tr.endpoint.y],
            "unreduced_endpoint": [tr.unreduced_endpoint.x, tr.unreduced_endpoint.y],
        }),
        Err(Error::CuspTrap { .. }) => json!({
            "type": "trajectory",
            "id": id,
            "seed": seed,
            "stream": id,
            "marks": marks,
            "discarded": true,
        }),
        Err(e) => return Err(e),
    };
    Ok(ReplayOutcome {
        id,
        matches: replayed == logged,
        logged,
        replayed,
    })
}
