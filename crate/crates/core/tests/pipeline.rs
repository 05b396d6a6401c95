use std::collections::BTreeMap;

use pgm_forecast::forest::{fit_classifier, HyperParams};
use pgm_forecast::hurdle::{predict_components, CompositionStrategy, HurdleModel, Scope};
use pgm_forecast::panel::{build_supervised_frame, generate_synthetic, PanelDataset, SyntheticConfig};
use pgm_forecast::pipeline::{forecast_window, local_components, train_all, train_local, tune_all, TunedParams};
use pgm_forecast::spatial::{ClusterAssignment, ClusterInfo};
use pgm_forecast::tuning::{average_precision, TuneConfig};
use pgm_forecast::{CellId, SAMPLE_COUNT};

fn panel(seed: u64) -> PanelDataset {
    generate_synthetic(&SyntheticConfig {
        n_cells: 64,
        n_months: 120,
        target_nonzero_share: 0.03,
        seed,
        ..Default::default()
    })
    .unwrap()
}

fn small_params() -> TunedParams {
    let cls = HyperParams { n_trees: 30, max_depth: Some(10), min_samples_leaf: 2, max_features: 0.6, class_weight_positive: 2.0, seed: 3 };
    let reg = HyperParams { n_trees: 30, max_depth: None, min_samples_leaf: 3, max_features: 0.8, class_weight_positive: 1.0, seed: 4 };
    TunedParams::uniform(cls, reg)
}

#[test]
fn tuned_window_covers_every_cell_and_month() {
    let data = panel(2);
    let cfg = TuneConfig { budget: 1, n_folds: 2, seed: 2, ..Default::default() };
    let (params, traces) = tune_all(&data, 105, &cfg).unwrap();
    assert_eq!(params.per_k.len(), 12);
    assert_eq!(traces.len(), 24);
    let fc = forecast_window(&data, 108, &params, 2, CompositionStrategy::QuasiHurdle).unwrap();
    let cells: Vec<CellId> = data.cell_ids().collect();
    fc.check_coverage(&cells).unwrap();
    fc.check_sample_count(SAMPLE_COUNT).unwrap();
    assert_eq!(fc.len(), 64 * 12);
    assert_eq!(fc.window_months().collect::<Vec<_>>(), (108..=119).collect::<Vec<_>>());
}

#[test]
fn forecasts_are_deterministic_and_thread_independent() {
    let data = panel(4);
    let params = small_params();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| forecast_window(&data, 108, &params, 9, CompositionStrategy::QuasiHurdle).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(1));
    assert_eq!(one, run(3));
}

#[test]
fn classifier_beats_base_rate_on_later_months() {
    let data = panel(6);
    let hp = HyperParams { n_trees: 100, max_depth: None, min_samples_leaf: 3, max_features: 0.6, class_weight_positive: 1.0, seed: 1 };
    let train = build_supervised_frame(&data, 3, 95).unwrap();
    let all = build_supervised_frame(&data, 3, 119).unwrap();
    let rows: Vec<usize> = (0..all.len()).filter(|&i| all.index[i].1 > 92).collect();
    let test = all.select(&rows);
    let model = fit_classifier(train.features.view(), &train.occurred, &hp).unwrap();
    let p = model.predict_proba(test.features.view()).unwrap();
    let ap = average_precision(&p, &test.occurred).unwrap();
    let base = test.occurred.iter().filter(|&&o| o).count() as f64 / test.len() as f64;
    assert!(ap > 2.0 * base, "AP {ap} vs base rate {base}");
}

#[test]
fn hurdle_model_survives_save_and_load() {
    let data = panel(8);
    let models = train_all(&data, 105, &small_params(), Scope::Global, None).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("k03.json");
    models[0].save(&path).unwrap();
    let back = HurdleModel::load(&path).unwrap();
    assert_eq!(back, models[0]);
    let before = predict_components(&models[..1], &data, 105, None);
    // a single timestep is not a complete set
    assert!(before.is_err());
}

#[test]
fn clusters_without_positives_fall_back_to_global() {
    let data = panel(10);
    let quiet: Vec<CellId> = data
        .cells()
        .iter()
        .enumerate()
        .filter(|&(ci, _)| (0..data.n_months()).all(|m| data.fatality(ci, m) == 0))
        .map(|(_, c)| c.cell_id)
        .collect();
    assert!(!quiet.is_empty(), "fixture needs cells that never see fatalities");
    let mut cluster_of = BTreeMap::new();
    for id in data.cell_ids() {
        cluster_of.insert(id, if quiet.contains(&id) { 1 } else { 0 });
    }
    let info = |id: u32| ClusterInfo { cluster_id: id, polygon: vec![], centroid: (0.0, 0.0), members: vec![], nonzero_pgms: 0 };
    let assignment = ClusterAssignment { cluster_of, clusters: vec![info(0), info(1)], merge_log: vec![], min_nonzero: 1 };

    let params = small_params();
    let local = train_local(&data, 105, &params, &assignment).unwrap();
    assert!(local.models.contains_key(&0));
    assert!(local.skipped.contains_key(&1));

    let global_models = train_all(&data, 105, &params, Scope::Global, None).unwrap();
    let global = predict_components(&global_models, &data, 105, None).unwrap();
    let mixed = local_components(&local, &global, &data, 105, &assignment).unwrap();
    let keep = |c: CellId| quiet.contains(&c);
    assert_eq!(mixed.restrict(keep), global.restrict(keep));
    assert_ne!(mixed.restrict(|c| !keep(c)), global.restrict(|c| !keep(c)));
}
