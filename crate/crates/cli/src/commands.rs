use std::path::{Path, PathBuf};

use hodge_core::estimator::{replicate_sweep, Coverage, SweepConfig, SweepTable};
use hodge_core::identities::{IdentitySuite, SuiteConfig, WedgeFn};
use hodge_core::manifolds::{analytic_dirichlet, sample_on_arcs, sample_uniform, smoothed_dirichlet_quadrature};
use hodge_core::spectra::{assemble, betti, eigen_smallest, KernelTolerance, OperatorKind};
use hodge_core::stats::{bootstrap_loglog_slope, loglog_slope, median, std_dev};
use hodge_core::weights::{
    build_skeleton_from_matrix, degree_weights, KernelModel, TruncationPolicy, VertexWeightMode,
};
use hodge_core::ComplexSkeleton;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, VertexWeights};
use crate::output::{csv_document, emit, ResultRow};
use crate::{Cli, CliError, Command, Preset, VERSION};

const BOOTSTRAP_SEED: u64 = 0x5eed;

pub fn dispatch(cli: &Cli, wedge: WedgeFn) -> Result<(), CliError> {
    match &cli.command {
        Command::Identities { instances } => identities(cli, *instances, wedge),
        Command::Dirichlet { preset, n, t, timing } => dirichlet(cli, *preset, *n, *t, *timing),
        Command::Bias { preset, t } => bias(cli, *preset, *t),
        Command::Spectrum { preset, n, t, fixture, coo_dir } => {
            spectrum(cli, *preset, *n, *t, fixture.as_deref(), coo_dir.as_deref())
        }
    }
}

fn load_config(
    cli: &Cli,
    preset: Option<Preset>,
    pick: fn(Preset) -> Result<ExperimentConfig, CliError>,
) -> Result<ExperimentConfig, CliError> {
    match (&cli.config, preset) {
        (Some(_), Some(_)) => Err(CliError::Config("--config and --preset are exclusive".into())),
        (Some(path), None) => ExperimentConfig::load(path),
        (None, p) => pick(p.unwrap_or(Preset::Circle)),
    }
}

fn out_path(cli: &Cli, cfg: &ExperimentConfig) -> Option<PathBuf> {
    cli.out.clone().or_else(|| cfg.out.clone())
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn identities(cli: &Cli, instances: usize, wedge: WedgeFn) -> Result<(), CliError> {
    if instances == 0 {
        return Err(CliError::Config("--instances must be positive".into()));
    }
    let mut config = SuiteConfig { instances, ..SuiteConfig::default() };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let report = IdentitySuite::new(config).with_wedge(wedge).run();
    let doc = json!({ "version": VERSION, "report": report });
    emit(cli.out.as_deref(), &format!("{}\n", serde_json::to_string_pretty(&doc).expect("serializable")))?;
    match report.first_failure {
        None => Ok(()),
        Some(name) => {
            let fam = report.families.iter().find(|f| f.name == name).expect("failing family is listed");
            Err(CliError::Failed(format!(
                "identity {name} failed: {} (violation {:e} > {:e})",
                fam.statement, fam.max_violation, fam.tolerance
            )))
        }
    }
}

fn dirichlet_preset(p: Preset) -> Result<ExperimentConfig, CliError> {
    match p {
        Preset::Circle => Ok(ExperimentConfig::circle_dirichlet()),
        Preset::Torus => Ok(ExperimentConfig::torus_dirichlet()),
        Preset::Arcs => Err(CliError::Config("the arcs preset only applies to spectrum".into())),
    }
}

/// Log-log slope of `groups` reduced by `stat` against `xs`, with a
/// bootstrap interval. Null when the fit is degenerate.
fn slope_entry(xs: &[f64], groups: &[Vec<f64>], stat: fn(&[f64]) -> f64, resamples: usize) -> Value {
    let ys: Vec<f64> = groups.iter().map(|g| stat(g)).collect();
    let Ok(fit) = loglog_slope(xs, &ys) else {
        return Value::Null;
    };
    let ci = if resamples > 0 {
        bootstrap_loglog_slope(xs, groups, stat, resamples, BOOTSTRAP_SEED).ok().map(|i| [i.lo, i.hi])
    } else {
        None
    };
    json!({ "slope": fit.slope, "intercept": fit.intercept, "ci95": ci })
}

fn dirichlet_aggregate(cfg: &ExperimentConfig, table: &SweepTable, analytic: f64) -> Value {
    let abs_errors =
        |n: usize, t: f64| -> Vec<f64> { table.values(n, t).iter().map(|v| (v - analytic).abs()).collect() };
    let cells: Vec<Value> = table
        .cells
        .iter()
        .map(|c| {
            let mut v = to_value(c);
            v["median_abs_error"] = json!(median(&abs_errors(c.n, c.t)));
            v
        })
        .collect();
    let mut error_vs_t = Vec::new();
    if cfg.t.len() >= 2 {
        for &n in &cfg.n {
            let groups: Vec<Vec<f64>> = cfg.t.iter().map(|&t| abs_errors(n, t)).collect();
            error_vs_t.push(json!({ "n": n, "fit": slope_entry(&cfg.t, &groups, median, cfg.bootstrap) }));
        }
    }
    let mut std_vs_n = Vec::new();
    if cfg.n.len() >= 2 && cfg.seeds.len() >= 2 {
        let xs: Vec<f64> = cfg.n.iter().map(|&n| n as f64).collect();
        for &t in &cfg.t {
            let groups: Vec<Vec<f64>> = cfg.n.iter().map(|&n| table.values(n, t)).collect();
            std_vs_n.push(json!({ "t": t, "fit": slope_entry(&xs, &groups, std_dev, cfg.bootstrap) }));
        }
    }
    json!({
        "version": VERSION,
        "config": cfg,
        "analytic": analytic,
        "cells": cells,
        "error_vs_t": error_vs_t,
        "std_vs_n": std_vs_n,
    })
}

fn dirichlet(
    cli: &Cli,
    preset: Option<Preset>,
    n: Option<usize>,
    t: Option<f64>,
    timing: bool,
) -> Result<(), CliError> {
    let mut cfg = load_config(cli, preset, dirichlet_preset)?;
    cfg.override_with(n, t, cli.seed);
    cfg.validate_dirichlet()?;
    let table = replicate_sweep(&SweepConfig {
        manifold: cfg.manifold,
        functions: cfg.functions.clone(),
        ns: cfg.n.clone(),
        ts: cfg.t.clone(),
        seeds: cfg.seeds.clone(),
        coverage: cfg.truncation,
        kernel: cfg.kernel,
    })?;
    let analytic = analytic_dirichlet(cfg.manifold, &cfg.functions)?;
    let rows: Vec<ResultRow> = table
        .rows
        .iter()
        .map(|r| ResultRow {
            experiment: cfg.experiment.clone(),
            n: Some(r.n),
            t: r.t,
            ell: cfg.ell(),
            seed: Some(r.seed),
            mode: r.result.mode.to_string(),
            value: r.result.value,
            analytic,
            tuples: Some(r.result.tuple_count),
            elapsed_ms: timing.then_some(r.result.elapsed_ms),
            version: VERSION.to_string(),
        })
        .collect();
    let doc = csv_document(&rows, &dirichlet_aggregate(&cfg, &table, analytic))?;
    emit(out_path(cli, &cfg).as_deref(), &doc)
}

fn bias_preset(p: Preset) -> Result<ExperimentConfig, CliError> {
    match p {
        Preset::Circle => Ok(ExperimentConfig::circle_bias()),
        Preset::Torus => Ok(ExperimentConfig {
            experiment: "torus-bias".into(),
            n: vec![],
            seeds: vec![],
            ..ExperimentConfig::torus_dirichlet()
        }),
        Preset::Arcs => Err(CliError::Config("the arcs preset only applies to spectrum".into())),
    }
}

fn bias(cli: &Cli, preset: Option<Preset>, t: Option<f64>) -> Result<(), CliError> {
    let mut cfg = load_config(cli, preset, bias_preset)?;
    cfg.override_with(None, t, None);
    cfg.validate_bias()?;
    let analytic = analytic_dirichlet(cfg.manifold, &cfg.functions)?;
    let mut rows = Vec::new();
    let mut points = Vec::new();
    let mut errors = Vec::new();
    for &t in &cfg.t {
        let s = smoothed_dirichlet_quadrature(cfg.manifold, &cfg.functions, t, cfg.grid())?;
        errors.push((s.value - analytic).abs());
        points.push(json!({
            "t": t,
            "smoothed": s.value,
            "abs_error": (s.value - analytic).abs(),
            "coarse_value": s.coarse_value,
            "rel_change": s.rel_change,
            "grid": s.grid,
            "route": s.route,
        }));
        rows.push(ResultRow {
            experiment: cfg.experiment.clone(),
            n: None,
            t,
            ell: cfg.ell(),
            seed: None,
            mode: "quadrature".into(),
            value: s.value,
            analytic,
            tuples: None,
            elapsed_ms: None,
            version: VERSION.to_string(),
        });
    }
    let slope = if cfg.t.len() >= 2 { loglog_slope(&cfg.t, &errors).ok().map(|f| f.slope) } else { None };
    let aggregate = json!({
        "version": VERSION,
        "config": cfg,
        "analytic": analytic,
        "points": points,
        "error_vs_t_slope": slope,
    });
    emit(out_path(cli, &cfg).as_deref(), &csv_document(&rows, &aggregate)?)
}

fn spectrum_preset(p: Preset) -> Result<ExperimentConfig, CliError> {
    match p {
        Preset::Circle => Ok(ExperimentConfig::circle_spectrum()),
        Preset::Arcs => Ok(ExperimentConfig::arcs_spectrum()),
        Preset::Torus => Ok(ExperimentConfig {
            experiment: "torus-spectrum".into(),
            manifold: hodge_core::Manifold::Torus,
            n: vec![150],
            t: vec![0.02],
            truncation: Coverage::MassFraction(0.99),
            ..ExperimentConfig::circle_spectrum()
        }),
    }
}

fn sampled_skeleton(cfg: &ExperimentConfig, top: usize) -> Result<(ComplexSkeleton, Value), CliError> {
    let opts = cfg.spectrum.clone().unwrap_or_default();
    let (n, t, seed) = (cfg.n[0], cfg.t[0], cfg.seeds[0]);
    let cloud = match &opts.arcs {
        Some(arcs) => sample_on_arcs(n, arcs, seed)?,
        None => sample_uniform(cfg.manifold, n, seed),
    };
    let kmat = KernelModel::new(cfg.manifold, cfg.kernel, t)?.matrix(&cloud)?;
    let threshold = match cfg.truncation {
        Coverage::Complete => 0.0,
        Coverage::Threshold(tau) => tau,
        Coverage::MassFraction(f) => kmat.threshold_for_mass_fraction(f)?,
    };
    let policy = if threshold > 0.0 { TruncationPolicy::new(threshold, top)? } else { TruncationPolicy::complete(top) };
    let skel = build_skeleton_from_matrix(&kmat, &policy)?;
    let source = json!({
        "kind": "sample",
        "manifold": cfg.manifold,
        "n": n,
        "t": t,
        "seed": seed,
        "threshold": threshold,
        "arcs": opts.arcs,
    });
    Ok((skel, source))
}

fn spectrum(
    cli: &Cli,
    preset: Option<Preset>,
    n: Option<usize>,
    t: Option<f64>,
    fixture: Option<&Path>,
    coo_dir: Option<&Path>,
) -> Result<(), CliError> {
    let mut cfg = load_config(cli, preset, spectrum_preset)?;
    cfg.override_with(n, t, cli.seed);
    if let Some(f) = fixture {
        let opts = cfg.spectrum.get_or_insert_with(Default::default);
        opts.fixture = Some(f.to_path_buf());
        if cli.config.is_none() {
            opts.betti_max_level = None;
        }
    }
    cfg.validate_spectrum()?;
    let opts = cfg.spectrum.clone().unwrap_or_default();

    let (skel, source) = match &opts.fixture {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            let skel = ComplexSkeleton::from_json(&text)?;
            (skel, json!({ "kind": "fixture", "path": path }))
        }
        None => sampled_skeleton(&cfg, opts.betti_max_level.unwrap_or(0) + 1)?,
    };
    if skel.max_level() == 0 {
        return Err(CliError::Config("the complex needs at least one level above the vertices".into()));
    }
    let top = opts.betti_max_level.unwrap_or(skel.max_level() - 1).min(skel.max_level() - 1);
    let skel = match opts.vertex_weights {
        VertexWeights::Heat => skel,
        VertexWeights::Unit => skel.with_vertex_weights(&degree_weights(&skel, VertexWeightMode::Unit)?)?,
        VertexWeights::Degree => skel.with_vertex_weights(&degree_weights(&skel, VertexWeightMode::Degree)?)?,
    };

    let mut levels = Vec::new();
    let mut warnings = Vec::new();
    for ell in 0..=top {
        let op = assemble(&skel, ell, OperatorKind::Full)?;
        if let Some(dir) = coo_dir {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join(format!("laplacian_{ell}.coo")), op.to_coo_text())?;
        }
        let report = eigen_smallest(&op, opts.eigenvalues.max(1), KernelTolerance::default())?;
        let b = betti(&skel, ell)?;
        if b.ambiguous || report.ambiguous {
            let msg = format!(
                "level {ell}: an eigenvalue lies within a factor 10 of the zero threshold {:e}; betti {} is uncertain",
                b.threshold, b.value
            );
            eprintln!("warning: {msg}");
            warnings.push(msg);
        }
        levels.push(json!({
            "level": ell,
            "betti": b.value,
            "ambiguous": b.ambiguous,
            "threshold": b.threshold,
            "spectrum": report,
        }));
    }
    let sizes: Vec<usize> = (0..=skel.max_level()).map(|l| skel.level(l).map(|s| s.len()).unwrap_or(0)).collect();
    let doc = json!({
        "version": VERSION,
        "experiment": cfg.experiment,
        "source": source,
        "vertex_weights": opts.vertex_weights,
        "tuples_per_level": sizes,
        "levels": levels,
        "warnings": warnings,
    });
    let text = format!("{}\n", serde_json::to_string_pretty(&doc).expect("serializable"));
    emit(out_path(cli, &cfg).as_deref(), &text)
}
