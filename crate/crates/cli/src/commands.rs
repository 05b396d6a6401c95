use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use pgm_forecast::benchmarks::{benchmark_forecast, BenchmarkKind, BenchmarkSpec};
use pgm_forecast::forecast::ForecastSet;
use pgm_forecast::forest::HyperParams;
use pgm_forecast::hurdle::{
    compose_window, predict_components, CompositionStrategy, HurdleModel, Scope,
};
use pgm_forecast::panel::{generate_synthetic, load_panel, save_panel, PanelDataset};
use pgm_forecast::pipeline::{local_components, train_all, train_local, LocalModels, TunedParams};
use pgm_forecast::scoring::rank_models;
use pgm_forecast::scoring::{
    format_table, load_country_map, load_reports, save_reports, score_fatality_correlation,
    score_forecast, window_totals, Metric,
};
use pgm_forecast::simulation::{run_simulation, NonzeroSource, DEFAULT_MU, DEFAULT_SIGMA};
use pgm_forecast::spatial::{select_global_local, Combo, PriorYear};
use pgm_forecast::spatial::{build_clusters, ClusterAssignment};
use pgm_forecast::tuning::{random_search, Stage};
use pgm_forecast::{CellId, MonthId, MAX_TIMESTEP, MIN_TIMESTEP};

use crate::config::RunConfig;
use crate::error::{core, CliError};
use crate::manifest::RunManifest;
use crate::Command;

pub struct Ctx {
    pub cfg: RunConfig,
    pub out_dir: PathBuf,
    pub config_path: Option<PathBuf>,
    pub args: Vec<String>,
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
}

impl Ctx {
    fn out(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn seed(&self) -> u64 {
        self.cfg.seed.unwrap_or(0)
    }

    pub fn write_manifest(&self, name: &str, outcome: Outcome) -> Result<(), CliError> {
        let manifest = RunManifest::build(
            name,
            self.args.clone(),
            self.config_path.as_deref(),
            serde_json::to_value(&self.cfg)?,
            self.seed(),
            &outcome.inputs,
            &outcome.outputs,
        )?;
        manifest.save(&self.out(&format!("manifest_{name}.json")))
    }
}

pub fn dispatch(ctx: &mut Ctx, command: Command) -> Result<Outcome, CliError> {
    match command {
        Command::Gen(a) => gen(ctx, a),
        Command::Tune(a) => tune(ctx, a),
        Command::Train(a) => train(ctx, a),
        Command::Predict(a) => predict(ctx, a),
        Command::Benchmark(a) => benchmark(ctx, a),
        Command::Cluster(a) => cluster(ctx, a),
        Command::Select(a) => select(ctx, a),
        Command::Score(a) => score(ctx, a),
        Command::Rank(a) => rank(ctx, a),
        Command::Simulate(a) => simulate(ctx, a),
    }
}

fn require_file(path: &Path, what: &str) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{what} {} does not exist", path.display())))
    }
}

fn require_dir(path: &Path, what: &str) -> Result<(), CliError> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{what} {} is not a directory", path.display())))
    }
}

fn read_panel(path: &Path) -> Result<PanelDataset, CliError> {
    require_file(path, "panel")?;
    load_panel(path).map_err(core)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn mkdir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

fn model_file(dir: &Path, k: u32) -> PathBuf {
    dir.join(format!("k{k:02}.json"))
}

fn parse_strategy(s: &str) -> Result<CompositionStrategy, String> {
    match s {
        "quasi-hurdle" => Ok(CompositionStrategy::QuasiHurdle),
        "multiplicative" => Ok(CompositionStrategy::Multiplicative),
        other => match other.strip_prefix("threshold:") {
            Some(t) => t
                .parse::<f64>()
                .ok()
                .filter(|t| (0.0..=1.0).contains(t))
                .map(CompositionStrategy::Threshold)
                .ok_or_else(|| format!("bad threshold in {other:?}")),
            None => Err(format!(
                "unknown strategy {other:?} (quasi-hurdle, multiplicative, threshold:<p>)"
            )),
        },
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    cells: Option<usize>,
    #[arg(long)]
    months: Option<usize>,
    /// Target share of non-zero cell-months.
    #[arg(long)]
    nonzero_share: Option<f64>,
    #[arg(long)]
    persistence: Option<f64>,
    #[arg(long)]
    hotspots: Option<usize>,
    #[arg(long, default_value = "panel.csv")]
    output: String,
}

fn gen(ctx: &mut Ctx, a: GenArgs) -> Result<Outcome, CliError> {
    let s = &mut ctx.cfg.synthetic;
    s.n_cells = a.cells.unwrap_or(s.n_cells);
    s.n_months = a.months.unwrap_or(s.n_months);
    s.target_nonzero_share = a.nonzero_share.unwrap_or(s.target_nonzero_share);
    s.persistence = a.persistence.unwrap_or(s.persistence);
    s.hotspot_count = a.hotspots.unwrap_or(s.hotspot_count);
    let data = generate_synthetic(s).map_err(core)?;
    let path = ctx.out(&a.output);
    save_panel(&data, &path).map_err(core)?;
    println!(
        "wrote {} ({} cells x {} months, non-zero share {:.4})",
        path.display(),
        data.n_cells(),
        data.n_months(),
        data.nonzero_share()
    );
    Ok(Outcome {
        inputs: vec![],
        outputs: vec![path],
    })
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StageArg {
    Classifier,
    Regressor,
    Both,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    /// Panel CSV (`cell_id,month_id,lat,lon,fatalities,<features>`).
    #[arg(long)]
    panel: PathBuf,
    /// Last month whose fatalities may be used.
    #[arg(long)]
    cutoff: MonthId,
    #[arg(long, value_enum, default_value = "both")]
    stage: StageArg,
    #[arg(long, default_value_t = MIN_TIMESTEP)]
    k_min: u32,
    #[arg(long, default_value_t = MAX_TIMESTEP)]
    k_max: u32,
    /// Candidates per stage and timestep.
    #[arg(long)]
    budget: Option<usize>,
    /// Sliding CV folds.
    #[arg(long)]
    folds: Option<usize>,
}

fn tune(ctx: &mut Ctx, a: TuneArgs) -> Result<Outcome, CliError> {
    if a.k_min < MIN_TIMESTEP || a.k_max > MAX_TIMESTEP || a.k_min > a.k_max {
        return Err(CliError::Config(format!(
            "timestep range must lie within {MIN_TIMESTEP}..={MAX_TIMESTEP}"
        )));
    }
    let t = &mut ctx.cfg.tuning;
    t.budget = a.budget.unwrap_or(t.budget);
    t.n_folds = a.folds.unwrap_or(t.n_folds);
    let data = read_panel(&a.panel)?;
    let stages: Vec<Stage> = match a.stage {
        StageArg::Classifier => vec![Stage::Classifier],
        StageArg::Regressor => vec![Stage::Regressor],
        StageArg::Both => vec![Stage::Classifier, Stage::Regressor],
    };
    let dir = ctx.out("tuning");
    mkdir(&dir)?;
    let mut params = TunedParams::default();
    let mut outputs = Vec::new();
    for k in a.k_min..=a.k_max {
        let mut pair = (HyperParams::default(), HyperParams::default());
        for &stage in &stages {
            let (result, trace) =
                random_search(&data, stage, k, a.cutoff, &ctx.cfg.tuning).map_err(core)?;
            println!(
                "k={k:2} {stage:10} tune_score={:.6} mean_train={:.6} mean_test={:.6}",
                result.tune_score, result.mean_train, result.mean_test
            );
            let path = dir.join(format!("trace_{stage}_k{k:02}.csv"));
            trace.write_csv(create(&path)?).map_err(core)?;
            outputs.push(path);
            match stage {
                Stage::Classifier => pair.0 = result.hyperparams,
                Stage::Regressor => pair.1 = result.hyperparams,
            }
        }
        params.per_k.insert(k, pair);
    }
    let path = ctx.out("tuned_params.json");
    serde_json::to_writer_pretty(create(&path)?, &params)?;
    outputs.push(path);
    Ok(Outcome {
        inputs: vec![a.panel],
        outputs,
    })
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScopeArg {
    Global,
    Local,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Panel CSV (`cell_id,month_id,lat,lon,fatalities,<features>`).
    #[arg(long)]
    panel: PathBuf,
    /// Last month whose fatalities may be used.
    #[arg(long)]
    cutoff: MonthId,
    /// Tuned hyperparameters (JSON from `tune`); defaults otherwise.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "global")]
    scope: ScopeArg,
    /// Cluster directory from `cluster`, required for local scope.
    #[arg(long)]
    clusters: Option<PathBuf>,
    #[arg(long, default_value = "models")]
    output: String,
}

fn load_params(path: Option<&Path>, seed: u64) -> Result<TunedParams, CliError> {
    match path {
        Some(p) => {
            require_file(p, "params file")?;
            let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            Ok(serde_json::from_str(&text)?)
        }
        None => {
            let hp = HyperParams {
                seed,
                ..HyperParams::default()
            };
            Ok(TunedParams::uniform(hp.clone(), hp))
        }
    }
}

fn save_models(dir: &Path, models: &[HurdleModel]) -> Result<Vec<PathBuf>, CliError> {
    mkdir(dir)?;
    models
        .iter()
        .map(|m| {
            let path = model_file(dir, m.timestep_k);
            m.save(&path).map_err(core)?;
            Ok(path)
        })
        .collect()
}

fn load_models(dir: &Path) -> Result<Vec<HurdleModel>, CliError> {
    require_dir(dir, "models directory")?;
    (MIN_TIMESTEP..=MAX_TIMESTEP)
        .map(|k| {
            let path = model_file(dir, k);
            require_file(&path, &format!("model for timestep {k}"))?;
            HurdleModel::load(&path).map_err(core)
        })
        .collect()
}

fn train(ctx: &mut Ctx, a: TrainArgs) -> Result<Outcome, CliError> {
    let data = read_panel(&a.panel)?;
    let params = load_params(a.params.as_deref(), ctx.seed())?;
    let dir = ctx.out(&a.output);
    let mut inputs = vec![a.panel.clone()];
    inputs.extend(a.params.clone());
    let outputs = match a.scope {
        ScopeArg::Global => {
            let models = train_all(&data, a.cutoff, &params, Scope::Global, None).map_err(core)?;
            println!("trained {} global models", models.len());
            save_models(&dir, &models)?
        }
        ScopeArg::Local => {
            let cdir = a
                .clusters
                .clone()
                .ok_or_else(|| CliError::Config("--clusters is required for local scope".into()))?;
            require_dir(&cdir, "clusters directory")?;
            let assignment = ClusterAssignment::load(&cdir).map_err(core)?;
            inputs.push(cdir);
            let local = train_local(&data, a.cutoff, &params, &assignment).map_err(core)?;
            let mut outputs = Vec::new();
            for (cluster, models) in &local.models {
                outputs.extend(save_models(&dir.join(format!("cluster_{cluster}")), models)?);
            }
            for (cluster, why) in &local.skipped {
                println!("cluster {cluster}: no local models ({why}); global components will be used");
            }
            let skipped = dir.join("skipped.json");
            serde_json::to_writer_pretty(create(&skipped)?, &local.skipped)?;
            outputs.push(skipped);
            println!("trained local models for {} clusters", local.models.len());
            outputs
        }
    };
    Ok(Outcome { inputs, outputs })
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Panel CSV (`cell_id,month_id,lat,lon,fatalities,<features>`).
    #[arg(long)]
    panel: PathBuf,
    /// Directory with k03.json .. k14.json.
    #[arg(long)]
    models: PathBuf,
    /// Last observed month; the window starts three months later.
    #[arg(long)]
    feature_month: MonthId,
    /// Local model directory (from `train --scope local`). With it, the four
    /// global/local combinations are written.
    #[arg(long, requires = "clusters")]
    local_models: Option<PathBuf>,
    #[arg(long)]
    clusters: Option<PathBuf>,
    /// quasi-hurdle, multiplicative or threshold:<p>.
    #[arg(long, value_parser = parse_strategy)]
    strategy: Option<CompositionStrategy>,
    #[arg(long, default_value = "forecast")]
    output: String,
}

fn load_local(dir: &Path, assignment: &ClusterAssignment) -> Result<LocalModels, CliError> {
    require_dir(dir, "local models directory")?;
    let mut local = LocalModels::default();
    for cluster in assignment.cluster_ids() {
        let cdir = dir.join(format!("cluster_{cluster}"));
        if cdir.is_dir() {
            local.models.insert(cluster, load_models(&cdir)?);
        } else {
            local.skipped.insert(cluster, "no model directory".into());
        }
    }
    Ok(local)
}

fn predict(ctx: &mut Ctx, a: PredictArgs) -> Result<Outcome, CliError> {
    let strategy = a.strategy.unwrap_or(ctx.cfg.composition);
    let global_models = load_models(&a.models)?;
    let data = read_panel(&a.panel)?;
    let seed = ctx.seed();
    let global = predict_components(&global_models, &data, a.feature_month, None).map_err(core)?;
    let mut inputs = vec![a.panel.clone(), a.models.clone()];
    let mut outputs = Vec::new();
    match (&a.local_models, &a.clusters) {
        (Some(ldir), Some(cdir)) => {
            require_dir(cdir, "clusters directory")?;
            let assignment = ClusterAssignment::load(cdir).map_err(core)?;
            let local_models = load_local(ldir, &assignment)?;
            let local = local_components(&local_models, &global, &data, a.feature_month, &assignment)
                .map_err(core)?;
            inputs.push(ldir.clone());
            inputs.push(cdir.clone());
            for combo in Combo::ALL {
                let cls = if combo.classifier_is_local() { &local } else { &global };
                let reg = if combo.regressor_is_local() { &local } else { &global };
                let fc = compose_window(cls, reg, seed, strategy).map_err(core)?;
                let path = ctx.out(&format!("{}_{combo}.csv", a.output));
                fc.save_csv(&path).map_err(core)?;
                outputs.push(path);
            }
        }
        _ => {
            let fc = compose_window(&global, &global, seed, strategy).map_err(core)?;
            let path = ctx.out(&format!("{}.csv", a.output));
            fc.save_csv(&path).map_err(core)?;
            outputs.push(path);
        }
    }
    for p in &outputs {
        println!("wrote {}", p.display());
    }
    Ok(Outcome { inputs, outputs })
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Panel CSV (`cell_id,month_id,lat,lon,fatalities,<features>`).
    #[arg(long)]
    panel: PathBuf,
    #[arg(long)]
    window_start: MonthId,
    /// Comma-separated benchmark names (default: all).
    #[arg(long, value_delimiter = ',')]
    kinds: Vec<String>,
}

fn benchmark(ctx: &mut Ctx, a: BenchmarkArgs) -> Result<Outcome, CliError> {
    let kinds: Vec<BenchmarkKind> = if a.kinds.is_empty() {
        BenchmarkKind::ALL.to_vec()
    } else {
        a.kinds
            .iter()
            .map(|k| k.parse().map_err(core))
            .collect::<Result<_, _>>()?
    };
    let data = read_panel(&a.panel)?;
    let mut outputs = Vec::new();
    for kind in kinds {
        let fc = benchmark_forecast(BenchmarkSpec { kind, seed: ctx.seed() }, &data, a.window_start)
            .map_err(core)?;
        let path = ctx.out(&format!("benchmark_{kind}.csv"));
        fc.save_csv(&path).map_err(core)?;
        println!("wrote {}", path.display());
        outputs.push(path);
    }
    Ok(Outcome {
        inputs: vec![a.panel],
        outputs,
    })
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    /// Panel CSV (`cell_id,month_id,lat,lon,fatalities,<features>`).
    #[arg(long)]
    panel: PathBuf,
    /// Last month whose fatalities may be used.
    #[arg(long)]
    cutoff: MonthId,
    /// DBSCAN radius in degrees.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    min_pts: Option<usize>,
    /// Minimum non-zero cell-months per cluster.
    #[arg(long)]
    min_nonzero: Option<usize>,
    /// Use --min-nonzero as given even on small panels.
    #[arg(long)]
    no_scale: bool,
    #[arg(long, default_value = "clusters")]
    output: String,
}

fn cluster(ctx: &mut Ctx, a: ClusterArgs) -> Result<Outcome, CliError> {
    let c = &mut ctx.cfg.cluster;
    c.eps = a.eps.unwrap_or(c.eps);
    c.min_pts = a.min_pts.unwrap_or(c.min_pts);
    c.min_nonzero = a.min_nonzero.unwrap_or(c.min_nonzero);
    if a.no_scale {
        c.scale_min_nonzero = false;
    }
    let data = read_panel(&a.panel)?;
    let assignment = build_clusters(&data, &ctx.cfg.cluster, a.cutoff).map_err(core)?;
    let dir = ctx.out(&a.output);
    mkdir(&dir)?;
    assignment.save(&dir).map_err(core)?;
    let counts = assignment.assigned_nonzero(&data, a.cutoff);
    println!(
        "{} clusters (merge threshold {} non-zero cell-months)",
        assignment.clusters.len(),
        assignment.min_nonzero
    );
    for (id, n) in &counts {
        println!("  cluster {id}: {} cells, {n} non-zero cell-months", assignment.cells_of(*id).len());
    }
    Ok(Outcome {
        inputs: vec![a.panel],
        outputs: vec![dir],
    })
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    /// Panel CSV (`cell_id,month_id,lat,lon,fatalities,<features>`).
    #[arg(long)]
    panel: PathBuf,
    #[arg(long)]
    clusters: PathBuf,
    /// Directories with <prefix>_GG.csv .. <prefix>_LL.csv for earlier windows.
    #[arg(long, required = true)]
    history: Vec<PathBuf>,
    /// Directory with the four combinations for the target window.
    #[arg(long)]
    target: PathBuf,
    #[arg(long, default_value = "forecast")]
    prefix: String,
    #[arg(long, default_value_t = 2)]
    required_years: usize,
}

fn load_combos(dir: &Path, prefix: &str) -> Result<BTreeMap<Combo, ForecastSet>, CliError> {
    require_dir(dir, "forecast directory")?;
    Combo::ALL
        .into_iter()
        .map(|combo| {
            let path = dir.join(format!("{prefix}_{combo}.csv"));
            require_file(&path, "forecast")?;
            Ok((combo, ForecastSet::load_csv_inferred(&path).map_err(core)?))
        })
        .collect()
}

fn select(ctx: &mut Ctx, a: SelectArgs) -> Result<Outcome, CliError> {
    let data = read_panel(&a.panel)?;
    require_dir(&a.clusters, "clusters directory")?;
    let assignment = ClusterAssignment::load(&a.clusters).map_err(core)?;
    let years = a
        .history
        .iter()
        .map(|dir| {
            let forecasts = load_combos(dir, &a.prefix)?;
            let window_start = forecasts[&Combo::GG].window_start();
            Ok(PriorYear {
                window_start,
                forecasts,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let selection =
        select_global_local(&assignment, &years, &data, a.required_years).map_err(core)?;
    let target = load_combos(&a.target, &a.prefix)?;
    let window_start = target[&Combo::GG].window_start();
    let parts = assignment.cluster_ids().into_iter().map(|cluster| {
        let combo = selection.choice[&cluster];
        let cells: BTreeSet<CellId> = assignment.cells_of(cluster).into_iter().collect();
        target[&combo].restrict(|c| cells.contains(&c))
    });
    let stitched = ForecastSet::stitch(window_start, parts).map_err(core)?;
    for (cluster, combo) in &selection.choice {
        println!("cluster {cluster}: {combo}");
    }
    let sel_path = ctx.out("selection.json");
    serde_json::to_writer_pretty(create(&sel_path)?, &selection)?;
    let fc_path = ctx.out(&format!("{}_selected.csv", a.prefix));
    stitched.save_csv(&fc_path).map_err(core)?;
    let mut inputs = vec![a.panel, a.clusters, a.target];
    inputs.extend(a.history);
    Ok(Outcome {
        inputs,
        outputs: vec![sel_path, fc_path],
    })
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Panel CSV (`cell_id,month_id,lat,lon,fatalities,<features>`).
    #[arg(long)]
    panel: PathBuf,
    /// `name=path` (or just `path`, named after the file stem). Repeatable.
    #[arg(long = "forecast", required = true)]
    forecasts: Vec<String>,
    /// CSV `cell_id,country_code` for per-country scores.
    #[arg(long)]
    country_map: Option<PathBuf>,
    #[arg(long, default_value = "scores.csv")]
    output: String,
}

fn named_path(spec: &str) -> (String, PathBuf) {
    match spec.split_once('=') {
        Some((name, path)) => (name.to_string(), PathBuf::from(path)),
        None => {
            let path = PathBuf::from(spec);
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| spec.to_string());
            (name, path)
        }
    }
}

fn score(ctx: &mut Ctx, a: ScoreArgs) -> Result<Outcome, CliError> {
    let cfg = ctx.cfg.scoring.build()?;
    let data = read_panel(&a.panel)?;
    let mut inputs = vec![a.panel.clone()];
    let country_map = match &a.country_map {
        Some(p) => {
            require_file(p, "country map")?;
            inputs.push(p.clone());
            Some(load_country_map(p).map_err(core)?)
        }
        None => None,
    };
    let mut reports = Vec::new();
    for spec in &a.forecasts {
        let (name, path) = named_path(spec);
        require_file(&path, "forecast")?;
        let fc = ForecastSet::load_csv_inferred(&path).map_err(core)?;
        reports.push(score_forecast(&name, &fc, &data, country_map.as_ref(), &cfg).map_err(core)?);
        inputs.push(path);
    }
    print!("{}", format_table(&reports));
    let path = ctx.out(&a.output);
    save_reports(&reports, &path).map_err(core)?;
    Ok(Outcome {
        inputs,
        outputs: vec![path],
    })
}

#[derive(Debug, Args)]
pub struct RankArgs {
    /// Score report CSVs from `score`. Repeatable.
    #[arg(long = "reports", required = true)]
    reports: Vec<PathBuf>,
    #[arg(long, default_value = "crps")]
    metric: String,
    /// With the panel, also correlate per-window scores with window totals.
    #[arg(long)]
    panel: Option<PathBuf>,
}

fn rank(ctx: &mut Ctx, a: RankArgs) -> Result<Outcome, CliError> {
    let metric: Metric = a.metric.parse().map_err(core)?;
    let mut reports = Vec::new();
    for p in &a.reports {
        require_file(p, "score report")?;
        reports.extend(load_reports(p).map_err(core)?);
    }
    let table = rank_models(&reports, metric).map_err(core)?;
    let entries = ctx.out(&format!("ranks_{}.csv", metric.name()));
    table.write_entries(create(&entries)?).map_err(core)?;
    let summary = ctx.out(&format!("rank_summary_{}.csv", metric.name()));
    table.write_summary(create(&summary)?).map_err(core)?;
    for model in &table.models {
        println!(
            "{model:24} mean rank {:.3}",
            table.mean_rank_of(model).unwrap_or(f64::NAN)
        );
    }
    let mut inputs = a.reports.clone();
    let mut outputs = vec![entries, summary];
    if let Some(panel) = &a.panel {
        let data = read_panel(panel)?;
        inputs.push(panel.clone());
        let path = ctx.out(&format!("correlation_{}.csv", metric.name()));
        write_correlations(&path, &reports, &data, metric)?;
        outputs.push(path);
    }
    Ok(Outcome { inputs, outputs })
}

fn write_correlations(
    path: &Path,
    reports: &[pgm_forecast::scoring::ScoreReport],
    data: &PanelDataset,
    metric: Metric,
) -> Result<(), CliError> {
    use std::io::Write;
    let mut by_model: BTreeMap<&str, Vec<(MonthId, f64)>> = BTreeMap::new();
    for r in reports {
        by_model
            .entry(r.model.as_str())
            .or_default()
            .push((r.window_start, metric.of(&r.metrics)));
    }
    let mut w = create(path)?;
    let io = |e| CliError::io(path, e);
    writeln!(w, "model,metric,n_windows,r_fatalities,r_nonzero").map_err(io)?;
    for (model, mut rows) in by_model {
        rows.sort_by_key(|r| r.0);
        let scores: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let (fat, nz): (Vec<f64>, Vec<f64>) = rows
            .iter()
            .map(|r| {
                let (f, n) = window_totals(data, r.0);
                (f as f64, n as f64)
            })
            .unzip();
        match score_fatality_correlation(&scores, &fat, &nz) {
            Ok((rf, rn)) => writeln!(w, "{model},{},{},{rf},{rn}", metric.name(), rows.len()),
            Err(e) => {
                eprintln!("{model}: correlation skipped ({e})");
                writeln!(w, "{model},{},{},,", metric.name(), rows.len())
            }
        }
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SourceArg {
    Lognormal,
    Panel,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long)]
    n_total: Option<usize>,
    #[arg(long)]
    n_nonzero: Option<usize>,
    /// Positive values from a lognormal or a KDE of a panel's values.
    #[arg(long, value_enum)]
    source: Option<SourceArg>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Panel for `--source panel`.
    #[arg(long)]
    panel: Option<PathBuf>,
    #[arg(long, default_value = "simulation.csv")]
    output: String,
}

fn simulate(ctx: &mut Ctx, a: SimulateArgs) -> Result<Outcome, CliError> {
    let mut s = ctx.cfg.simulation.clone();
    s.replications = a.replications.unwrap_or(s.replications);
    s.n_total = a.n_total.unwrap_or(s.n_total);
    s.n_nonzero = a.n_nonzero.unwrap_or(s.n_nonzero);
    let mut inputs = Vec::new();
    match a.source {
        Some(SourceArg::Panel) => {
            let panel = a
                .panel
                .clone()
                .ok_or_else(|| CliError::Config("--source panel needs --panel".into()))?;
            let data = read_panel(&panel)?;
            s.source = NonzeroSource::from_panel(&data).map_err(core)?;
            inputs.push(panel);
        }
        Some(SourceArg::Lognormal) | None => {
            let keep_kde = matches!(s.source, NonzeroSource::Kde { .. })
                && a.source.is_none()
                && a.mu.is_none()
                && a.sigma.is_none();
            if !keep_kde {
                let (mu, sigma) = match s.source {
                    NonzeroSource::Lognormal { mu, sigma } => (mu, sigma),
                    NonzeroSource::Kde { .. } => (DEFAULT_MU, DEFAULT_SIGMA),
                };
                s.source = NonzeroSource::Lognormal {
                    mu: a.mu.unwrap_or(mu),
                    sigma: a.sigma.unwrap_or(sigma),
                };
            }
        }
    }
    ctx.cfg.simulation = s.clone();
    let result = run_simulation(&s).map_err(core)?;
    let path = ctx.out(&a.output);
    result.write_csv(create(&path)?).map_err(core)?;
    for &alpha in &s.accuracy_grid {
        let row: Vec<String> = s
            .noise_grid
            .iter()
            .map(|&n| format!("{:.5}", result.mean_at(alpha, n).unwrap_or(f64::NAN)))
            .collect();
        println!("alpha {alpha:.1}: {}", row.join(" "));
    }
    Ok(Outcome {
        inputs,
        outputs: vec![path],
    })
}
