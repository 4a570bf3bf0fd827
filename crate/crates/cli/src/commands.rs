use std::path::{Path, PathBuf};

use rom0d::analysis::{
    depth_statistics, fit_tree_coefficients, impedance as impedance_spectrum, pressure_error, SweepPoint, TreeFitReport,
};
use rom0d::datagen::{build_cohort, fit, ingest_timeseries_csv, CohortConfig};
use rom0d::flowsplit::populate_flow_splits;
use rom0d::ml::{load_labeled_rows, load_models, predict_network, save_models, train_models, ModelBundle, TrainConfig};
use rom0d::network::{generate_symmetric_tree, load_network, save_network, BifurcationDefinition, Inflow, TreeSpec};
use rom0d::nondim::{ModelKind, DEFAULT_REYNOLDS};
use rom0d::solver::{
    kkt_report, read_solution_csv, solve as run_engine, Engine, SolutionTable, SolverConfig, P_IN, Q_IN,
};
use rom0d::ml::TrainingDataset;
use rom0d::Network;
use serde_json::json;

use crate::manifest::Recorder;
use crate::{
    CliError, CompareArgs, EngineArg, EstimateSplitsArgs, FitCoeffsArgs, FitModelArg, FitTreeArgs, GenerateDataArgs,
    ImpedanceArgs, JunctionSolverArg, MakeTreeArgs, ModeArg, PredictArgs, SolveArgs, TrainArgs,
};

type Res = Result<(), CliError>;

fn out_dir(p: &Path) -> Result<&Path, CliError> {
    std::fs::create_dir_all(p).map_err(|e| CliError::Validation(format!("{}: {e}", p.display())))?;
    Ok(p)
}

fn write_text(rec: &mut Recorder, path: PathBuf, text: &str) -> Res {
    std::fs::write(&path, text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    rec.output(path);
    Ok(())
}

fn pretty<S: serde::Serialize>(v: &S) -> String {
    serde_json::to_string_pretty(v).expect("serializable output")
}

fn network(rec: &mut Recorder, path: &Path) -> Result<Network, CliError> {
    rec.input(path);
    Ok(load_network(path)?)
}

pub fn make_tree(a: MakeTreeArgs) -> Res {
    let mut rec = Recorder::new("make-tree", &a);
    let dir = out_dir(&a.common.out)?;
    let mut spec = TreeSpec::<f64>::new(a.depth);
    spec.inlet_radius = a.inlet_radius;
    spec.length_over_radius = a.length_ratio;
    spec.murray_exponent = a.murray_exponent;
    spec.inflow = a.inflow;
    spec.leaf_resistance = a.leaf_resistance;
    spec.definition = a.bif_def;
    let net = generate_symmetric_tree(&spec)?;
    save_network(&net, rec.output(dir.join("network.json")))?;
    rec.finish(dir)
}

pub fn estimate_splits(a: EstimateSplitsArgs) -> Res {
    let mut rec = Recorder::new("estimate-splits", &a);
    let dir = out_dir(&a.common.out)?;
    let mut net = network(&mut rec, &a.network)?;
    let est = populate_flow_splits(&mut net)?;
    save_network(&net, rec.output(dir.join("network.json")))?;
    write_text(&mut rec, dir.join("splits.json"), &est.to_json())?;
    rec.finish(dir)
}

pub fn generate_data(a: GenerateDataArgs) -> Res {
    let mut rec = Recorder::new("generate-data", &a);
    rec.seed = Some(a.seed);
    let dir = out_dir(&a.common.out)?;
    let mut cfg = CohortConfig::<f64>::new(a.junctions, a.seed);
    cfg.reynolds = a.reynolds;
    cfg.re_max = a.re_max;
    cfg.period = a.period;
    cfg.n_steps = a.steps;
    cfg.noise_sigma = a.noise;
    cfg.validation_fraction = a.validation_fraction;
    let cohort = build_cohort(&cfg)?;
    cohort.write(dir)?;
    for t in &cohort.dataset.tables {
        rec.output(dir.join(format!("{}.csv", t.tag.name())));
    }
    for f in ["stats.json", "rows.csv", "labeled_rows.json", "cohort_manifest.json"] {
        rec.output(dir.join(f));
    }
    rec.finish(dir)
}

/// Reference Reynolds number recorded by `generate-data`.
fn cohort_reynolds(rec: &mut Recorder, data: &Path) -> Result<f64, CliError> {
    let path = data.join("cohort_manifest.json");
    let Ok(text) = std::fs::read_to_string(&path) else {
        return Ok(DEFAULT_REYNOLDS);
    };
    rec.input(&path);
    let v: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    v["config"]["reynolds"]
        .as_f64()
        .ok_or_else(|| CliError::Validation(format!("{}: missing config.reynolds", path.display())))
}

pub fn train(a: TrainArgs) -> Res {
    let mut rec = Recorder::new("train", &a);
    rec.seed = Some(a.seed);
    let dir = out_dir(&a.common.out)?;
    let rows_path = a.data.join("labeled_rows.json");
    rec.input(&rows_path);
    let rows = load_labeled_rows::<f64>(&rows_path)?;
    let reynolds = cohort_reynolds(&mut rec, &a.data)?;
    let dataset = TrainingDataset::from_rows(&rows)?;
    let cfg = TrainConfig {
        epochs: a.epochs,
        batch_size: a.batch_size,
        learning_rate: a.learning_rate,
        seed: a.seed,
        hidden: a.hidden.as_ref().map(|h| (h[0], h[1])),
        ..TrainConfig::default()
    };
    let models = train_models(&dataset, &cfg)?;
    let reports: Vec<_> = models
        .iter()
        .map(|m| {
            json!({
                "model": m.tag.name(),
                "widths": m.report.widths,
                "final_train_mse": m.report.final_train(),
                "final_validation_mse": m.report.final_validation(),
                "losses": m.report.losses,
            })
        })
        .collect();
    let bundle = ModelBundle::new(&dataset, models, reynolds)?;
    save_models(&bundle, rec.output(dir.join("models.json")))?;
    write_text(&mut rec, dir.join("training_report.json"), &pretty(&reports))?;
    for r in &reports {
        println!(
            "{:<16} train {:.3e}  validation {}",
            r["model"].as_str().unwrap_or(""),
            r["final_train_mse"].as_f64().unwrap_or(f64::NAN),
            r["final_validation_mse"].as_f64().map_or("-".into(), |v| format!("{v:.3e}")),
        );
    }
    rec.finish(dir)
}

pub fn predict(a: PredictArgs) -> Res {
    let mut rec = Recorder::new("predict", &a);
    let dir = out_dir(&a.common.out)?;
    let mut net = network(&mut rec, &a.network)?;
    rec.input(&a.models);
    let bundle = load_models::<f64>(&a.models)?;
    let report = predict_network(&bundle, &mut net, &a.kinds)?;
    if report.clamped_count() > 0 {
        eprintln!("warning: {} geometry entries clamped to the trained range", report.clamped_count());
    }
    save_network(&net, rec.output(dir.join("network.json")))?;
    write_text(&mut rec, dir.join("predictions.json"), &pretty(&report))?;
    rec.finish(dir)
}

fn engine(e: EngineArg, solver: JunctionSolverArg) -> Engine {
    let kind = match e {
        EngineArg::Standard => return Engine::Standard,
        EngineArg::Rri => ModelKind::Rri,
        EngineArg::Ri => ModelKind::Ri,
    };
    match solver {
        JunctionSolverArg::Opt => Engine::Optimization(kind),
        JunctionSolverArg::Newton => Engine::JunctionNewton(kind),
    }
}

fn solve_network(a: &SolveArgs, net: &Network) -> Result<rom0d::NetworkSolution, CliError> {
    let mut cfg = match a.mode {
        ModeArg::Steady => SolverConfig::steady(),
        ModeArg::Transient => SolverConfig::transient(a.dt, a.steps),
    };
    cfg.t0 = a.t0;
    cfg.newton_tolerance = a.tolerance;
    Ok(run_engine(net, engine(a.engine, a.junction_solver), &cfg)?)
}

pub fn solve(a: SolveArgs) -> Res {
    let mut rec = Recorder::new("solve", &a);
    let dir = out_dir(&a.common.out)?;
    let net = network(&mut rec, &a.network)?;
    let sol = solve_network(&a, &net)?;
    sol.table.write_csv(rec.output(dir.join("solution.csv")))?;
    write_text(&mut rec, dir.join("diagnostics.json"), &sol.diagnostics_json())?;
    if matches!(sol.engine, Engine::Optimization(_)) {
        let kkt = kkt_report(&net, &sol)?;
        write_text(&mut rec, dir.join("kkt.json"), &pretty(&kkt))?;
    }
    rec.finish(dir)
}

pub fn fit_coeffs(a: FitCoeffsArgs) -> Res {
    let mut rec = Recorder::new("fit-coeffs", &a);
    let dir = out_dir(&a.common.out)?;
    rec.input(&a.series);
    let series = ingest_timeseries_csv::<f64>(&a.series)?;
    let kinds: &[ModelKind] = match a.model {
        FitModelArg::Rri => &[ModelKind::Rri],
        FitModelArg::Ri => &[ModelKind::Ri],
        FitModelArg::Both => &[ModelKind::Rri, ModelKind::Ri],
    };
    let mut out = serde_json::Map::new();
    for &k in kinds {
        let f = fit(&series, k)?;
        out.insert(k.name().to_ascii_lowercase(), serde_json::to_value(f).expect("fit serializes"));
    }
    write_text(&mut rec, dir.join("coefficients.json"), &pretty(&out))?;
    rec.finish(dir)
}

pub fn fit_tree(a: FitTreeArgs) -> Res {
    let mut rec = Recorder::new("fit-tree", &a);
    let dir = out_dir(&a.common.out)?;
    let base = network(&mut rec, &a.network)?;
    let inflows = rom0d::analysis::sweep_inflows(&base, &a.re);
    let reference = engine(a.reference_engine, JunctionSolverArg::Opt);
    let mut sweep = Vec::with_capacity(inflows.len());
    for (&re, &q) in a.re.iter().zip(&inflows) {
        let mut net = base.clone();
        net.set_inflow(Inflow::Steady(q))?;
        let sol = run_engine(&net, reference, &SolverConfig::steady())?;
        sweep.push(SweepPoint {
            reynolds: re,
            inflow: q,
            state: sol.last().to_vec(),
        });
    }
    let definitions: Vec<BifurcationDefinition> = match a.bif_def {
        Some(d) => vec![d],
        None => BifurcationDefinition::ALL.to_vec(),
    };
    let mut fits = Vec::new();
    for d in definitions {
        for k in [ModelKind::Ri, ModelKind::Rri] {
            fits.push(fit_tree_coefficients(&base, &sweep, k, d, a.datum)?);
        }
    }
    let report = TreeFitReport { fits };
    write_text(&mut rec, dir.join("tree_fit.json"), &pretty(&report))?;
    let table = report.to_table();
    print!("{table}");
    write_text(&mut rec, dir.join("tree_fit.txt"), &table)?;
    rec.finish(dir)
}

/// Last `periods` periods of a uniformly sampled table.
fn trailing(table: &SolutionTable<f64>, period: f64, periods: Option<usize>) -> Result<usize, CliError> {
    let Some(m) = periods else { return Ok(0) };
    if table.len() < 2 {
        return Err(CliError::Validation("solution needs at least two time steps".into()));
    }
    let dt = table.times[1] - table.times[0];
    let per = (period / dt).round() as usize;
    let need = m * per + 1;
    if per == 0 || need > table.len() {
        return Err(CliError::Validation(format!(
            "solution holds {} samples; {m} periods need {need}",
            table.len()
        )));
    }
    Ok(table.len() - need)
}

pub fn impedance(a: ImpedanceArgs) -> Res {
    let mut rec = Recorder::new("impedance", &a);
    let dir = out_dir(&a.common.out)?;
    rec.input(&a.solution);
    let table = read_solution_csv::<f64>(&a.solution)?;
    let v = match a.vessel {
        Some(id) => table
            .vessel_ids
            .iter()
            .position(|&x| x == id)
            .ok_or_else(|| CliError::Validation(format!("vessel {id} not in {}", a.solution.display())))?,
        None => 0,
    };
    let start = trailing(&table, a.period, a.periods)?;
    let t = &table.times[start..];
    let q = &table.series(v, Q_IN)[start..];
    let dp: Vec<f64> = table.series(v, P_IN)[start..].iter().map(|p| p - a.datum).collect();
    let spectrum = impedance_spectrum(t, q, &dp, a.period, a.floor)?;
    spectrum.write_csv(rec.output(dir.join("impedance.csv")))?;
    rec.finish(dir)
}

pub fn compare(a: CompareArgs) -> Res {
    let mut rec = Recorder::new("compare", &a);
    let dir = out_dir(&a.common.out)?;
    let net = network(&mut rec, &a.network)?;
    rec.input(&a.solution);
    rec.input(&a.reference);
    let sol = read_solution_csv::<f64>(&a.solution)?;
    let reference = read_solution_csv::<f64>(&a.reference)?;
    let err = pressure_error(&net, &sol, &reference, a.datum)?;
    let last = |t: &SolutionTable<f64>| t.states.last().cloned().unwrap_or_default();
    let stats = depth_statistics(&net, &last(&sol), Some(&last(&reference)))?;
    println!(
        "inlet pressure error: max {:.6} mmHg ({:.3e} relative), mean {:.6} mmHg ({:.3e} relative)",
        err.absolute, err.relative, err.absolute_mean, err.relative_mean
    );
    let out = json!({ "pressure_error": err, "depth_statistics": stats });
    write_text(&mut rec, dir.join("comparison.json"), &pretty(&out))?;
    rec.finish(dir)
}
