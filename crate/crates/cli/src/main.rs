//! foliation-forge: scenario-driven construction and verification of
//! constant-curvature foliations near conformal infinity.
//!
//! Exit codes: 0 success, 2 validation error, 3 solver failure,
//! 4 resonance skips (partial foliation with gaps).

mod manifest;
mod scenario;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use foliation_core::error::Error as CoreError;
use foliation_core::field::ScalarField;
use foliation_core::foliation::{
    audit_foliation, continue_foliation, gauge_base, solve_leaf, Foliation, Leaf, Regime,
};
use foliation_core::metric::ModelKind;
use foliation_core::resonance::{eigenvalue_speed_check, scan_resonances, ScanOptions};
use foliation_core::sigma::{binomial, solve_sigma_k_leaf};
use foliation_core::yamabe::normalize_kappa2;
use manifest::ManifestBuilder;
use scenario::Scenario;
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "foliation-forge",
    version,
    about = "constant mean curvature and sigma_k foliations near conformal infinity"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// scenario JSON path
    #[arg(long)]
    scenario: PathBuf,
    /// output directory (defaults to the scenario's out_dir or ./out)
    #[arg(long)]
    out: Option<PathBuf>,
    /// dotted-path overrides, e.g. --override ladder.max=0.4
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// List the built-in collar models with their kappa invariants
    Models {
        #[arg(long, default_value_t = 2)]
        n: usize,
    },
    /// Compute the kappa invariants of the scenario metric
    Kappa(RunArgs),
    /// Normalize kappa2 to a constant by a conformal change
    Yamabe(RunArgs),
    /// Solve a single constant-mean-curvature leaf
    Leaf(RunArgs),
    /// Continue a CMC foliation over the eps ladder and audit it
    Foliate(RunArgs),
    /// Scan the linearized family for resonances
    Resonances(RunArgs),
    /// Continue a constant-sigma_k foliation
    Sigmak(RunArgs),
    /// Re-audit a foliate output directory
    Audit {
        /// directory produced by `foliate` or `sigmak`
        dir: PathBuf,
    },
}

fn exit_code_for_core(e: &CoreError) -> i32 {
    match e {
        CoreError::Validation(_)
        | CoreError::InvalidGrid(_)
        | CoreError::GridMismatch
        | CoreError::OutsideCollar { .. }
        | CoreError::DimensionTooLow(_) => 2,
        _ => 3,
    }
}

struct Failure {
    code: i32,
    error: anyhow::Error,
}

impl Failure {
    fn validation(e: anyhow::Error) -> Self {
        Self { code: 2, error: e }
    }
    fn solver(e: anyhow::Error) -> Self {
        Self { code: 3, error: e }
    }
    fn core(e: CoreError) -> Self {
        Self { code: exit_code_for_core(&e), error: anyhow!("{e}") }
    }
}

type CmdResult = std::result::Result<i32, Failure>;

fn main() {
    if let Ok(threads) = std::env::var("FOLIATION_FORGE_THREADS") {
        if let Ok(k) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
        }
    }
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Models { n } => cmd_models(n),
        Command::Kappa(args) => with_scenario(args, "kappa", cmd_kappa),
        Command::Yamabe(args) => with_scenario(args, "yamabe", cmd_yamabe),
        Command::Leaf(args) => with_scenario(args, "leaf", cmd_leaf),
        Command::Foliate(args) => with_scenario(args, "foliate", cmd_foliate),
        Command::Resonances(args) => with_scenario(args, "resonances", cmd_resonances),
        Command::Sigmak(args) => with_scenario(args, "sigmak", cmd_sigmak),
        Command::Audit { dir } => cmd_audit(&dir),
    };
    match result {
        Ok(code) => std::process::exit(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            std::process::exit(f.code);
        }
    }
}

struct Ctx {
    scenario: Scenario,
    out_dir: PathBuf,
    manifest: ManifestBuilder,
}

fn with_scenario(args: RunArgs, command: &str, f: fn(&mut Ctx) -> CmdResult) -> CmdResult {
    let mut scenario = Scenario::load(&args.scenario).map_err(Failure::validation)?;
    for ov in &args.overrides {
        scenario.apply_override(ov).map_err(Failure::validation)?;
    }
    let out_dir = args
        .out
        .or_else(|| scenario.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))
        .map_err(Failure::validation)?;
    let resolved = scenario.resolved_json().map_err(Failure::validation)?;
    let scen_path = out_dir.join("scenario_resolved.json");
    std::fs::write(&scen_path, &resolved).map_err(|e| Failure::validation(e.into()))?;
    let mut manifest = ManifestBuilder::new(command, &resolved, scenario.seed, &out_dir);
    manifest.file(&scen_path);
    let mut ctx = Ctx { scenario, out_dir, manifest };
    let code = f(&mut ctx)?;
    ctx.manifest.write().map_err(Failure::solver)?;
    Ok(code)
}

fn write_json<T: Serialize>(ctx: &mut Ctx, name: &str, value: &T) -> CmdResult {
    let path = ctx.out_dir.join(name);
    std::fs::write(
        &path,
        serde_json::to_string_pretty(value).map_err(|e| Failure::solver(e.into()))?,
    )
    .map_err(|e| Failure::solver(e.into()))?;
    ctx.manifest.file(&path);
    Ok(0)
}

// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ModelRow {
    name: String,
    kappa1: f64,
    kappa2: f64,
}

fn cmd_models(n: usize) -> CmdResult {
    let kinds = [
        ModelKind::HyperbolicBall,
        ModelKind::Fuchsian,
        ModelKind::Horospherical,
        ModelKind::ExponentialCollar { kappa1: -1 },
        ModelKind::ExponentialCollar { kappa1: 1 },
    ];
    let rows: Vec<ModelRow> = kinds
        .iter()
        .map(|k| {
            let (k1, k2) = k.kappa_constants(n);
            ModelRow { name: k.name(), kappa1: k1, kappa2: k2 }
        })
        .collect();
    println!("{}", serde_json::to_string_pretty(&rows).map_err(|e| Failure::solver(e.into()))?);
    Ok(0)
}

#[derive(Serialize)]
struct FieldStats {
    min: f64,
    max: f64,
    mean: f64,
}

fn stats(f: &ScalarField) -> FieldStats {
    FieldStats { min: f.min(), max: f.max(), mean: f.mean() }
}

fn cmd_kappa(ctx: &mut Ctx) -> CmdResult {
    let m = ctx.scenario.metric().map_err(Failure::validation)?;
    let k = m.kappas().map_err(Failure::core)?;
    #[derive(Serialize)]
    struct KappaOut {
        kappa1: FieldStats,
        kappa2: FieldStats,
        kappa1_sign: foliation_core::metric::KappaSign,
    }
    let out = KappaOut {
        kappa1: stats(&k.kappa1),
        kappa2: stats(&k.kappa2),
        kappa1_sign: k.kappa1_sign(1e-10),
    };
    for (name, field) in [("kappa1", &k.kappa1), ("kappa2", &k.kappa2)] {
        let blob = ctx.out_dir.join(format!("{name}.field"));
        let csv = ctx.out_dir.join(format!("{name}.csv"));
        field.save(&blob).map_err(Failure::core)?;
        field.write_csv(&csv).map_err(Failure::core)?;
        ctx.manifest.file(&blob);
        ctx.manifest.file(&csv);
    }
    ctx.manifest.stage("kappa", "ok");
    write_json(ctx, "kappa.json", &out)?;
    println!("{}", serde_json::to_string(&out).unwrap());
    Ok(0)
}

fn cmd_yamabe(ctx: &mut Ctx) -> CmdResult {
    let m = ctx.scenario.metric().map_err(Failure::validation)?;
    let sol = normalize_kappa2(&m, &Default::default()).map_err(Failure::core)?;
    #[derive(Serialize)]
    struct YamabeOut {
        sign: foliation_core::yamabe::InvariantSign,
        kappa_bar2: f64,
        residual: f64,
        nondegenerate: bool,
        lambda_min: f64,
    }
    let out = YamabeOut {
        sign: sol.sign,
        kappa_bar2: sol.kappa_bar2,
        residual: sol.residual,
        nondegenerate: sol.nondegenerate,
        lambda_min: sol.lambda_min,
    };
    let blob = ctx.out_dir.join("phi0.field");
    sol.phi0.save(&blob).map_err(Failure::core)?;
    ctx.manifest.file(&blob);
    ctx.manifest.stage("yamabe", "ok");
    write_json(ctx, "yamabe.json", &out)?;
    println!("{}", serde_json::to_string(&out).unwrap());
    Ok(0)
}

type LeafSetup = (foliation_core::metric::MetricExpansion, Regime, ScalarField, f64);

fn leaf_setup(ctx: &Ctx) -> std::result::Result<LeafSetup, Failure> {
    let m = ctx.scenario.metric().map_err(Failure::validation)?;
    let regime = ctx.scenario.resolve_regime(&m).map_err(Failure::validation)?;
    let (base, target, _) = gauge_base(&m, regime).map_err(Failure::core)?;
    Ok((m, regime, base, target))
}

fn cmd_leaf(ctx: &mut Ctx) -> CmdResult {
    let (m, regime, base, target) = leaf_setup(ctx)?;
    let eps = ctx.scenario.eps.unwrap_or(ctx.scenario.ladder.min);
    let opts = ctx.scenario.solver_options();
    let target = if regime == Regime::Kappa1Zero {
        foliation_core::foliation::zero_regime_target(&m, &base, target, eps, &opts.cfg)
            .map_err(Failure::core)?
    } else {
        target
    };
    let leaf = solve_leaf(&m, eps, target, regime, &base, &opts).map_err(Failure::core)?;
    #[derive(Serialize)]
    struct LeafOut {
        eps: f64,
        regime: Regime,
        target: f64,
        target_h: f64,
        mean_h: f64,
        max_h_deviation: f64,
        residual: f64,
        newton_iters: usize,
        scaled_update: f64,
    }
    let mean = leaf.achieved_h.mean();
    let out = LeafOut {
        eps,
        regime,
        target: leaf.target,
        target_h: leaf.target_h,
        mean_h: mean,
        max_h_deviation: leaf
            .achieved_h
            .data()
            .iter()
            .fold(0.0f64, |a, &v| a.max((v - mean).abs())),
        residual: leaf.residual,
        newton_iters: leaf.newton_iters,
        scaled_update: leaf.scaled_update,
    };
    let blob = ctx.out_dir.join("phi0.field");
    leaf.phi0.save(&blob).map_err(Failure::core)?;
    ctx.manifest.file(&blob);
    ctx.manifest.stage("leaf", "ok");
    write_json(ctx, "leaf.json", &out)?;
    println!("{}", serde_json::to_string(&out).unwrap());
    Ok(0)
}

#[derive(Serialize)]
struct LeafRecord {
    eps: f64,
    target: f64,
    target_h: f64,
    mean_achieved: f64,
    residual: f64,
    newton_iters: usize,
    scaled_update: f64,
    phi0_file: String,
    x_star_file: String,
    achieved_file: String,
}

fn persist_foliation(
    ctx: &mut Ctx,
    fol: &Foliation,
    name: &str,
) -> std::result::Result<Vec<LeafRecord>, Failure> {
    let leaves_dir = ctx.out_dir.join("leaves");
    std::fs::create_dir_all(&leaves_dir).map_err(|e| Failure::solver(e.into()))?;
    let base_path = ctx.out_dir.join("gauge_base.field");
    fol.gauge_base.save(&base_path).map_err(Failure::core)?;
    ctx.manifest.file(&base_path);
    let mut records = Vec::new();
    for (i, leaf) in fol.leaves.iter().enumerate() {
        let phi0_file = format!("leaves/leaf_{i:03}_phi0.field");
        let x_star_file = format!("leaves/leaf_{i:03}_xstar.field");
        let achieved_file = format!("leaves/leaf_{i:03}_achieved.field");
        leaf.phi0.save(ctx.out_dir.join(&phi0_file)).map_err(Failure::core)?;
        leaf.x_star.save(ctx.out_dir.join(&x_star_file)).map_err(Failure::core)?;
        leaf.achieved_h
            .save(ctx.out_dir.join(&achieved_file))
            .map_err(Failure::core)?;
        ctx.manifest.file(&ctx.out_dir.join(&phi0_file));
        ctx.manifest.file(&ctx.out_dir.join(&x_star_file));
        ctx.manifest.file(&ctx.out_dir.join(&achieved_file));
        records.push(LeafRecord {
            eps: leaf.eps,
            target: leaf.target,
            target_h: leaf.target_h,
            mean_achieved: leaf.achieved_h.mean(),
            residual: leaf.residual,
            newton_iters: leaf.newton_iters,
            scaled_update: leaf.scaled_update,
            phi0_file,
            x_star_file,
            achieved_file,
        });
    }
    // plot-ready CSV: eps, mean value, residual, min gap to previous leaf
    let csv_path = ctx.out_dir.join(format!("{name}.csv"));
    let mut w = std::io::BufWriter::new(
        std::fs::File::create(&csv_path).map_err(|e| Failure::solver(e.into()))?,
    );
    writeln!(w, "eps,mean,residual,min_gap").map_err(|e| Failure::solver(e.into()))?;
    for (i, leaf) in fol.leaves.iter().enumerate() {
        let min_gap = if i == 0 {
            leaf.x_star.min()
        } else {
            leaf.x_star
                .data()
                .iter()
                .zip(fol.leaves[i - 1].x_star.data())
                .map(|(b, a)| b - a)
                .fold(f64::INFINITY, f64::min)
        };
        writeln!(w, "{},{},{},{}", leaf.eps, leaf.achieved_h.mean(), leaf.residual, min_gap)
            .map_err(|e| Failure::solver(e.into()))?;
    }
    drop(w);
    ctx.manifest.file(&csv_path);
    Ok(records)
}

#[derive(Serialize)]
struct FoliationOut {
    regime: Regime,
    kappa_bar2: Option<f64>,
    leaves: Vec<LeafRecord>,
    gaps: Vec<foliation_core::foliation::Gap>,
    aborted: Option<String>,
    audit: Option<foliation_core::foliation::AuditReport>,
}

fn cmd_foliate(ctx: &mut Ctx) -> CmdResult {
    let m = ctx.scenario.metric().map_err(Failure::validation)?;
    let regime = ctx.scenario.resolve_regime(&m).map_err(Failure::validation)?;
    let opts = ctx.scenario.solver_options();
    let ladder = ctx.scenario.ladder.values();
    let fol = continue_foliation(&m, &ladder, regime, &opts).map_err(Failure::core)?;
    ctx.manifest.stage(
        "continuation",
        &format!("{} leaves, {} gaps", fol.leaves.len(), fol.gaps.len()),
    );
    let audit = if fol.leaves.len() >= 3 {
        Some(audit_foliation(&fol, &m, &opts.cfg).map_err(Failure::core)?)
    } else {
        None
    };
    ctx.manifest.stage("audit", if audit.is_some() { "ok" } else { "skipped (<3 leaves)" });
    let records = persist_foliation(ctx, &fol, "foliation")?;
    let out = FoliationOut {
        regime,
        kappa_bar2: fol.kappa_bar2,
        leaves: records,
        gaps: fol.gaps.clone(),
        aborted: fol.aborted.clone(),
        audit,
    };
    write_json(ctx, "foliation.json", &out)?;
    if let Some(msg) = &fol.aborted {
        eprintln!("foliation aborted: {msg}");
        return Ok(3);
    }
    if !fol.gaps.is_empty() {
        return Ok(4);
    }
    Ok(0)
}

fn cmd_sigmak(ctx: &mut Ctx) -> CmdResult {
    let m = ctx.scenario.metric().map_err(Failure::validation)?;
    let regime = ctx.scenario.resolve_regime(&m).map_err(Failure::validation)?;
    if regime != Regime::Kappa1Zero {
        return Err(Failure::validation(anyhow!(
            "sigma_k foliations are built in the kappa1 = 0 regime (got {regime:?})"
        )));
    }
    let k = ctx.scenario.k;
    let n = ctx.scenario.n;
    if k < 1 || k > n {
        return Err(Failure::validation(anyhow!("k = {k} outside 1..={n}")));
    }
    let opts = ctx.scenario.solver_options();
    let (base, kbar, yam) = gauge_base(&m, Regime::Kappa1Zero).map_err(Failure::core)?;
    let b_nk = binomial(n as i64, k as i64) as f64;
    let b1 = binomial(n as i64 - 1, k as i64 - 1) as f64;
    let mut leaves: Vec<Leaf> = Vec::new();
    let mut warm = base.clone();
    let mut aborted = None;
    // snap to the exact constant when the base level sets are already
    // constant-sigma_k (closed-form models); otherwise follow the
    // normalized quadratic schedule
    let ladder_values = ctx.scenario.ladder.values();
    let snap_exact = {
        let top = *ladder_values.last().unwrap();
        let f = foliation_core::sigma::eval_sigma_scaled(&m, &base, top, k, &opts.cfg)
            .map_err(Failure::core)?;
        let mean = f.mean();
        f.data().iter().fold(0.0f64, |a, &v| a.max((v - mean).abs())) < 1e-11
    };
    for &eps in &ladder_values {
        let target = if snap_exact {
            let f = foliation_core::sigma::eval_sigma_scaled(&m, &base, eps, k, &opts.cfg)
                .map_err(Failure::core)?;
            b_nk + eps * eps * f.mean()
        } else {
            b_nk - b1 * kbar * eps * eps
        };
        match solve_sigma_k_leaf(&m, eps, k, target, &warm, &opts) {
            Ok(leaf) => {
                warm = leaf.phi0.clone();
                leaves.push(leaf);
            }
            Err(e) => {
                aborted = Some(format!("sigma_{k} leaf at eps = {eps:.6e} failed: {e}"));
                break;
            }
        }
    }
    let fol = Foliation {
        regime: Regime::Kappa1Zero,
        leaves,
        gauge_base: base,
        kappa_bar2: Some(kbar),
        yamabe: yam,
        gaps: Vec::new(),
        aborted,
    };
    ctx.manifest.stage("continuation", &format!("{} leaves", fol.leaves.len()));
    let audit = if fol.leaves.len() >= 3 {
        Some(audit_foliation(&fol, &m, &opts.cfg).map_err(Failure::core)?)
    } else {
        None
    };
    // per-leaf sigma deviation table
    let dev_path = ctx.out_dir.join("sigma_deviation.csv");
    {
        let mut w = std::io::BufWriter::new(
            std::fs::File::create(&dev_path).map_err(|e| Failure::solver(e.into()))?,
        );
        writeln!(w, "eps,target_sigma,max_deviation").map_err(|e| Failure::solver(e.into()))?;
        for leaf in &fol.leaves {
            let dev = leaf.achieved_h.map(|v| v - leaf.target_h).sup_norm();
            writeln!(w, "{},{},{}", leaf.eps, leaf.target_h, dev)
                .map_err(|e| Failure::solver(e.into()))?;
        }
    }
    ctx.manifest.file(&dev_path);
    let records = persist_foliation(ctx, &fol, "sigmak")?;
    let out = FoliationOut {
        regime: Regime::Kappa1Zero,
        kappa_bar2: fol.kappa_bar2,
        leaves: records,
        gaps: Vec::new(),
        aborted: fol.aborted.clone(),
        audit,
    };
    write_json(ctx, "sigmak.json", &out)?;
    if fol.aborted.is_some() {
        return Ok(3);
    }
    Ok(0)
}

fn cmd_resonances(ctx: &mut Ctx) -> CmdResult {
    let m = ctx.scenario.metric().map_err(Failure::validation)?;
    let spec = ctx.scenario.resonance.clone();
    let opts = ScanOptions { max_crossings: spec.max_crossings, ..Default::default() };
    let report = scan_resonances(
        &m,
        spec.eps_min,
        spec.eps_max,
        spec.samples,
        spec.m_eigs,
        spec.jn,
        &opts,
    )
    .map_err(Failure::core)?;
    let speed = eigenvalue_speed_check(&report).ok();
    // spectrum.csv: eps, n_neg, then the lowest eigenvalues
    let csv_path = ctx.out_dir.join("spectrum.csv");
    {
        let mut w = std::io::BufWriter::new(
            std::fs::File::create(&csv_path).map_err(|e| Failure::solver(e.into()))?,
        );
        let m_eigs = report.samples.iter().map(|s| s.eigs.len()).max().unwrap_or(0);
        let header: Vec<String> = ["eps".to_string(), "n_neg".to_string()]
            .into_iter()
            .chain((1..=m_eigs).map(|i| format!("eig{i}")))
            .collect();
        writeln!(w, "{}", header.join(",")).map_err(|e| Failure::solver(e.into()))?;
        for s in &report.samples {
            let mut row = vec![format!("{}", s.eps), format!("{}", s.n_neg)];
            row.extend(s.eigs.iter().map(|v| format!("{v}")));
            writeln!(w, "{}", row.join(",")).map_err(|e| Failure::solver(e.into()))?;
        }
    }
    ctx.manifest.file(&csv_path);
    #[derive(Serialize)]
    struct CrossingsOut<'a> {
        crossings: &'a [foliation_core::resonance::Crossing],
        j_intervals: &'a [(f64, f64)],
        jn_exponent: f64,
        counting: &'a [(f64, usize)],
        speed_check: Option<foliation_core::resonance::SpeedCheck>,
        ambiguous_points: usize,
    }
    let out = CrossingsOut {
        crossings: &report.crossings,
        j_intervals: &report.j_intervals,
        jn_exponent: report.jn_exponent,
        counting: &report.counting,
        speed_check: speed,
        ambiguous_points: report.ambiguous_points,
    };
    ctx.manifest.stage("scan", &format!("{} crossings", report.crossings.len()));
    write_json(ctx, "crossings.json", &out)?;
    Ok(0)
}

fn cmd_audit(dir: &Path) -> CmdResult {
    let scen_path = dir.join("scenario_resolved.json");
    let scenario = Scenario::load(&scen_path).map_err(Failure::validation)?;
    let m = scenario.metric().map_err(Failure::validation)?;
    let text = std::fs::read_to_string(dir.join("foliation.json"))
        .or_else(|_| std::fs::read_to_string(dir.join("sigmak.json")))
        .map_err(|e| Failure::validation(anyhow!("no foliation.json/sigmak.json: {e}")))?;
    let stored: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Failure::validation(e.into()))?;
    let regime: Regime = serde_json::from_value(stored["regime"].clone())
        .map_err(|e| Failure::validation(e.into()))?;
    let kappa_bar2 = stored["kappa_bar2"].as_f64();
    let gauge = ScalarField::load(dir.join("gauge_base.field")).map_err(Failure::core)?;
    let mut leaves = Vec::new();
    let empty = Vec::new();
    for rec in stored["leaves"].as_array().unwrap_or(&empty) {
        let phi0 = ScalarField::load(dir.join(rec["phi0_file"].as_str().unwrap()))
            .map_err(Failure::core)?;
        let x_star = ScalarField::load(dir.join(rec["x_star_file"].as_str().unwrap()))
            .map_err(Failure::core)?;
        let achieved = ScalarField::load(dir.join(rec["achieved_file"].as_str().unwrap()))
            .map_err(Failure::core)?;
        leaves.push(Leaf {
            eps: rec["eps"].as_f64().unwrap(),
            phi0,
            target: rec["target"].as_f64().unwrap(),
            target_h: rec["target_h"].as_f64().unwrap(),
            achieved_h: achieved,
            residual: rec["residual"].as_f64().unwrap(),
            newton_iters: rec["newton_iters"].as_u64().unwrap() as usize,
            x_star,
            scaled_update: rec["scaled_update"].as_f64().unwrap(),
            residual_history: Vec::new(),
        });
    }
    let fol = Foliation {
        regime,
        leaves,
        gauge_base: gauge,
        kappa_bar2,
        yamabe: None,
        gaps: Vec::new(),
        aborted: None,
    };
    let cfg = foliation_core::leaf::PipelineCfg {
        steps: scenario.steps,
        pad: scenario.pad,
        dealias: scenario.dealias,
    };
    let audit = audit_foliation(&fol, &m, &cfg).map_err(Failure::core)?;
    // compare against the stored verdict
    let stored_audit = &stored["audit"];
    let matches = stored_audit.is_object()
        && serde_json::to_value(audit.monotonicity).unwrap() == stored_audit["monotonicity"]
        && serde_json::to_value(audit.unique).unwrap() == stored_audit["unique"]
        && stored_audit["disjoint"] == serde_json::Value::Bool(audit.disjoint);
    #[derive(Serialize)]
    struct AuditOut {
        audit: foliation_core::foliation::AuditReport,
        matches_stored: bool,
    }
    let out = AuditOut { audit, matches_stored: matches };
    let path = dir.join("audit.json");
    std::fs::write(&path, serde_json::to_string_pretty(&out).unwrap())
        .map_err(|e| Failure::solver(e.into()))?;
    println!("{}", serde_json::to_string(&out.matches_stored).unwrap());
    if matches {
        Ok(0)
    } else {
        Ok(3)
    }
}
