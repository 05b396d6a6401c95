//! Acceptance suite. Runs every criterion in order and prints one line each:
//!
//! ```text
//! cargo test --release -p pgm-forecast --test acceptance
//! cargo test --release -p pgm-forecast --test acceptance -- crps qrf
//! ```
//!
//! Positional arguments select criteria whose id contains any of them.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use pgm_forecast::benchmarks::{benchmark_forecast, cutoff_for, queen_neighbours, BenchmarkKind, BenchmarkSpec};
use pgm_forecast::forecast::ForecastSet;
use pgm_forecast::forest::{fit_qrf, HyperParams};
use pgm_forecast::hurdle::{compose_quasi_hurdle, CompositionStrategy};
use pgm_forecast::panel::{generate_synthetic, PanelDataset, SyntheticConfig};
use pgm_forecast::pipeline::{forecast_window, tune_all};
use pgm_forecast::scoring::{crps_sample, rank_models, score_forecast, CountryMap, Metric, ScoringConfig};
use pgm_forecast::simulation::{run_simulation, SimConfig};
use pgm_forecast::spatial::{
    assign_remaining_cells, cluster_violent_cells, dbscan, merge_small_clusters, merge_with_threshold,
    nonzero_counts, ClusterConfig,
};
use pgm_forecast::tuning::{make_cv_splits, random_search, tune_score, Stage, TuneConfig};
use pgm_forecast::{CellId, MonthId, SAMPLE_COUNT};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Poisson};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(elapsed: Duration, limit_s: u64) -> bool {
    elapsed <= Duration::from_secs(limit_s)
}

// ---------------------------------------------------------------------------
// CRPS against numerical integration of the squared CDF difference.

/// Trapezoid rule for ∫ (F(x) − 1{x ≥ y})² dx between consecutive
/// breakpoints of the two step functions, using one-sided limits at the ends
/// of each panel.
fn crps_trapezoid(samples: &[f64], y: f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let m = xs.len() as f64;
    let mut knots = xs.clone();
    knots.push(y);
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    // limit from the right at a: F(a) = #(x ≤ a)/m, H(a) = 1{a ≥ y}
    let right_of = |a: f64| {
        let f = xs.partition_point(|&s| s <= a) as f64 / m;
        let h = if a >= y { 1.0 } else { 0.0 };
        (f - h) * (f - h)
    };
    // limit from the left at b: #(x < b)/m and 1{b > y}
    let left_of = |b: f64| {
        let f = xs.partition_point(|&s| s < b) as f64 / m;
        let h = if b > y { 1.0 } else { 0.0 };
        (f - h) * (f - h)
    };
    knots
        .windows(2)
        .map(|w| 0.5 * (right_of(w[0]) + left_of(w[1])) * (w[1] - w[0]))
        .sum()
}

fn crps_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let sizes = [1usize, 12, 108, 1000];
    let heavy = LogNormal::new(1.0, 1.5).unwrap();
    let mut worst = 0.0f64;
    for case in 0..1000 {
        let m = sizes[case % sizes.len()];
        let zero_share: f64 = rng.random_range(0.0..1.0);
        let integer = rng.random_bool(0.5);
        let samples: Vec<f64> = (0..m)
            .map(|_| {
                if rng.random_bool(zero_share) {
                    0.0
                } else {
                    let v: f64 = heavy.sample(&mut rng);
                    if integer {
                        v.round()
                    } else {
                        v
                    }
                }
            })
            .collect();
        let y = match rng.random_range(0..3) {
            0 => 0.0,
            1 => samples[rng.random_range(0..m)],
            _ => heavy.sample(&mut rng).round(),
        };
        let got = crps_sample(&samples, y).unwrap();
        worst = worst.max((got - crps_trapezoid(&samples, y)).abs());
    }
    let t = start.elapsed();
    outcome(
        worst <= 1e-6 && within(t, 60),
        format!("max |diff| {worst:.2e} over 1000 cases, {:.1}s", t.as_secs_f64()),
    )
}

// ---------------------------------------------------------------------------

fn crps_equals_mae() -> Outcome {
    let sc = ScoringConfig::default();
    let mut checked = 0;
    for seed in 1..=5 {
        let data = generate_synthetic(&SyntheticConfig {
            n_cells: 144,
            n_months: 60,
            target_nonzero_share: 0.01 * seed as f64,
            seed,
            ..Default::default()
        })
        .unwrap();
        for ws in [24, 36, 48] {
            let fc = benchmark_forecast(
                BenchmarkSpec {
                    kind: BenchmarkKind::AllZero,
                    seed,
                },
                &data,
                ws,
            )
            .unwrap();
            let r = score_forecast("all_zero", &fc, &data, None, &sc).unwrap();
            if r.metrics.crps.to_bits() != r.metrics.mae.to_bits() {
                return outcome(
                    false,
                    format!("seed {seed} window {ws}: CRPS {} vs MAE {}", r.metrics.crps, r.metrics.mae),
                );
            }
            checked += 1;
        }
    }
    outcome(true, format!("{checked} windows, CRPS and MAE bit-identical"))
}

// ---------------------------------------------------------------------------

fn quasi_hurdle_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let input: Vec<u32> = (0..SAMPLE_COUNT).map(|_| rng.random_range(1..400)).collect();
    let members: BTreeSet<u32> = input.iter().copied().collect();
    for i in 0..=1000u32 {
        let p = i as f64 / 1000.0;
        let out = compose_quasi_hurdle(p, &input, u64::from(i)).unwrap();
        let expected_zeros = SAMPLE_COUNT - (1000.0 * p).round() as usize;
        let zeros = out.iter().filter(|&&v| v == 0).count();
        if out.len() != SAMPLE_COUNT || zeros != expected_zeros {
            return outcome(false, format!("p={p}: {zeros} zeros, expected {expected_zeros}"));
        }
        if let Some(v) = out.iter().find(|&&v| v != 0 && !members.contains(&v)) {
            return outcome(false, format!("p={p}: {v} is not an input value"));
        }
    }
    outcome(true, "1001 probabilities, zero counts exact, non-zeros drawn from input")
}

// ---------------------------------------------------------------------------

fn simulation_at_scale() -> Outcome {
    let start = Instant::now();
    let cfg = SimConfig::default();
    let result = run_simulation(&cfg).unwrap();
    let t = start.elapsed();
    let at = |a: f64, n: f64| result.mean_at(a, n).unwrap();
    let alphas: Vec<f64> = {
        let mut a = cfg.accuracy_grid.clone();
        a.sort_by(f64::total_cmp);
        a
    };
    let monotone = alphas.windows(2).all(|w| at(w[1], 0.0) <= at(w[0], 0.0));
    let (lo, hi) = (alphas[0], alphas[alphas.len() - 1]);
    let steps = ((hi - lo) * 10.0).round();
    let step = (at(lo, 0.0) - at(hi, 0.0)) / steps;
    let range0 = at(lo, 0.0) - at(hi, 0.0);
    let range1 = at(lo, 1.0) - at(hi, 1.0);
    let reduction = 1.0 - range1 / range0;
    let pass = monotone
        && (0.005..=0.015).contains(&step)
        && reduction >= 0.4
        && within(t, 15 * 60);
    outcome(
        pass,
        format!(
            "monotone {monotone}, step {step:.4}, CRPS {:.4}..{:.4} at n=0, sensitivity reduced {:.0}% at n=1, {:.0}s",
            at(hi, 0.0),
            at(lo, 0.0),
            100.0 * reduction,
            t.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------------------

fn heteroscedastic(n: usize, rng: &mut ChaCha8Rng) -> (Array2<f64>, Vec<u32>) {
    let mut x = Array2::zeros((n, 2));
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let a: f64 = rng.random_range(0.0..3.0);
        x[[i, 0]] = a;
        x[[i, 1]] = rng.random_range(0.0..1.0);
        let draw: f64 = Poisson::new(a.exp()).unwrap().sample(rng);
        y.push(draw as u32 + 1);
    }
    (x, y)
}

fn qrf_coverage() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (xtr, ytr) = heteroscedastic(5000, &mut rng);
    let (xte, yte) = heteroscedastic(2000, &mut rng);
    let hp = HyperParams {
        n_trees: 200,
        max_depth: None,
        min_samples_leaf: 5,
        max_features: 1.0,
        class_weight_positive: 1.0,
        seed: 5,
    };
    let model = fit_qrf(xtr.view(), &ytr, &hp).unwrap();
    let mut covered = 0;
    for (i, &y) in yte.iter().enumerate() {
        let row = xte.row(i).to_vec();
        let q = model.predict_quantiles(&row, &[0.05, 0.95]).unwrap();
        covered += usize::from(q[0] <= y as f64 && y as f64 <= q[1]);
    }
    let share = covered as f64 / yte.len() as f64;
    let t = start.elapsed();
    outcome(
        (0.85..=0.95).contains(&share) && within(t, 300),
        format!("coverage {:.1}%, {:.1}s", 100.0 * share, t.as_secs_f64()),
    )
}

// ---------------------------------------------------------------------------

fn end_to_end() -> Outcome {
    const WINDOW_START: MonthId = 108;
    let sc = ScoringConfig::default();
    let mut wins = 0;
    let mut slowest = Duration::ZERO;
    let mut runs = Vec::new();
    for seed in 1..=3u64 {
        let start = Instant::now();
        let data = generate_synthetic(&SyntheticConfig {
            n_cells: 400,
            n_months: 120,
            persistence: 0.7,
            seed,
            ..Default::default()
        })
        .unwrap();
        let cfg = TuneConfig {
            budget: 10,
            seed,
            ..Default::default()
        };
        let (params, _) = tune_all(&data, cutoff_for(WINDOW_START), &cfg).unwrap();
        let fc = forecast_window(&data, WINDOW_START, &params, seed, CompositionStrategy::QuasiHurdle).unwrap();
        let crps = |name: &str, f: &ForecastSet| score_forecast(name, f, &data, None, &sc).unwrap().metrics.crps;
        let model = crps("model", &fc);
        let bench = |kind: BenchmarkKind| crps(kind.name(), &benchmark_forecast(BenchmarkSpec { kind, seed }, &data, WINDOW_START).unwrap());
        let zero = bench(BenchmarkKind::AllZero);
        let confl = bench(BenchmarkKind::Conflictology);
        let t = start.elapsed();
        slowest = slowest.max(t);
        let won = model < zero && model < confl;
        wins += usize::from(won);
        runs.push(format!(
            "seed {seed}: model {model:.4} zero {zero:.4} confl {confl:.4} ({:.0}s)",
            t.as_secs_f64()
        ));
        if runs.len() - wins >= 2 {
            runs.push("stopped, two losses decide the outcome".into());
            break;
        }
    }
    outcome(
        wins >= 2 && within(slowest, 30 * 60),
        format!("{wins}/3 wins; {}", runs.join("; ")),
    )
}

// ---------------------------------------------------------------------------

fn benchmark_shapes() -> Outcome {
    let data = generate_synthetic(&SyntheticConfig {
        n_cells: 400,
        n_months: 120,
        target_nonzero_share: 0.02,
        seed: 9,
        ..Default::default()
    })
    .unwrap();
    let ws: MonthId = 100;
    let make = |d: &PanelDataset, kind| benchmark_forecast(BenchmarkSpec { kind, seed: 9 }, d, ws).unwrap();
    let lens = |fc: &ForecastSet| -> BTreeMap<CellId, BTreeSet<usize>> {
        let mut out: BTreeMap<CellId, BTreeSet<usize>> = BTreeMap::new();
        for ((cell, _), s) in fc.iter() {
            out.entry(cell).or_default().insert(s.len());
        }
        out
    };
    let confl = lens(&make(&data, BenchmarkKind::Conflictology));
    if confl.values().any(|l| l != &BTreeSet::from([12])) {
        return outcome(false, "conflictology sample size differs from 12");
    }
    let neighbours = lens(&make(&data, BenchmarkKind::ConflictologyNeighbors));
    let mut interior = 0;
    for (ci, cell) in data.cells().iter().enumerate() {
        if queen_neighbours(&data, ci).len() == 8 {
            interior += 1;
            if neighbours[&cell.cell_id] != BTreeSet::from([108]) {
                return outcome(false, format!("cell {} neighbour sample is not 108", cell.cell_id));
            }
        }
    }
    let boot = lens(&make(&data, BenchmarkKind::Bootstrap240));
    if boot.values().any(|l| l != &BTreeSet::from([SAMPLE_COUNT])) {
        return outcome(false, "bootstrap sample size differs from 1000");
    }

    // Everything after the cutoff is replaced; no benchmark may notice.
    let cutoff = cutoff_for(ws);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let perturbed = data.with_fatalities_after(cutoff, |_, _, _| rng.random_range(0..50));
    for kind in BenchmarkKind::ALL {
        if make(&data, kind) != make(&perturbed, kind) {
            return outcome(false, format!("{kind} changed under post-cutoff perturbation"));
        }
    }
    // Control: touching the cutoff month itself must matter.
    let touched = data.with_fatalities_after(cutoff - 1, |_, m, v| if m == cutoff { v + 7 } else { v });
    let sensitive = make(&data, BenchmarkKind::PoissonLast) != make(&touched, BenchmarkKind::PoissonLast);
    outcome(
        sensitive,
        format!("12/108/1000 hold ({interior} interior cells); 5 benchmarks unchanged after cutoff; cutoff month is read"),
    )
}

// ---------------------------------------------------------------------------

fn cluster_merge() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut merges = 0;
    for g in 0..20u64 {
        let side: usize = rng.random_range(10..=28);
        let data = generate_synthetic(&SyntheticConfig {
            n_cells: side * side,
            n_months: 48,
            target_nonzero_share: rng.random_range(0.004..0.03),
            hotspot_count: rng.random_range(1..=6),
            persistence: rng.random_range(0.2..0.9),
            seed: 100 + g,
        })
        .unwrap();
        let cfg = ClusterConfig {
            eps: rng.random_range(1.0..2.5),
            min_pts: rng.random_range(3..=6),
            ..Default::default()
        };
        let cutoff = data.last_month();
        let prelim = match cluster_violent_cells(&data, &cfg, cutoff) {
            Ok(p) if !p.clusters.is_empty() => p,
            _ => return outcome(false, format!("geometry {g}: no preliminary clusters")),
        };
        let counts = nonzero_counts(&data, cutoff);
        // alternate between the scaled default and an explicit feasible threshold
        let merged = if g % 2 == 0 {
            merge_small_clusters(&prelim, &data, &cfg, cutoff).unwrap()
        } else {
            let clustered: usize = prelim.clusters.iter().flatten().map(|&ci| counts[ci]).sum();
            merge_with_threshold(&prelim, &data, &counts, rng.random_range(1..=clustered)).unwrap()
        };
        merges += merged.merge_log.len();
        if let Some(c) = merged.clusters.iter().find(|c| c.nonzero_pgms < merged.min_nonzero) {
            return outcome(
                false,
                format!("geometry {g}: cluster {} has {} < {}", c.cluster_id, c.nonzero_pgms, merged.min_nonzero),
            );
        }
        let assignment = assign_remaining_cells(&merged, &data);
        let ids: BTreeSet<u32> = merged.clusters.iter().map(|c| c.cluster_id).collect();
        let cells: BTreeSet<CellId> = data.cell_ids().collect();
        let keys: BTreeSet<CellId> = assignment.cluster_of.keys().copied().collect();
        if keys != cells || assignment.cluster_of.values().any(|id| !ids.contains(id)) {
            return outcome(false, format!("geometry {g}: assignment is not a total partition"));
        }
    }

    let mut points = Vec::new();
    for (r0, c0) in [(0.0, 0.0), (30.0, 30.0)] {
        for i in 0..5 {
            for j in 0..5 {
                points.push((r0 + i as f64, c0 + j as f64));
            }
        }
    }
    let labels = dbscan(&points, 1.5, 5);
    let found: BTreeSet<usize> = labels.iter().flatten().copied().collect();
    outcome(
        found.len() == 2 && labels.iter().all(Option::is_some),
        format!("20 geometries valid ({merges} merges); two-block DBSCAN found {} clusters", found.len()),
    )
}

// ---------------------------------------------------------------------------

fn rank_fixture() -> Outcome {
    let base = generate_synthetic(&SyntheticConfig {
        n_cells: 400,
        n_months: 120,
        target_nonzero_share: 0.02,
        hotspot_count: 6,
        seed: 4,
        ..Default::default()
    })
    .unwrap();
    // Ten countries as vertical bands two columns wide.
    let mut lons: Vec<f64> = base.cells().iter().map(|c| c.lon).collect();
    lons.sort_by(f64::total_cmp);
    lons.dedup();
    let country_of: BTreeMap<CellId, usize> = base
        .cells()
        .iter()
        .map(|c| (c.cell_id, lons.iter().position(|&l| l == c.lon).unwrap() * 10 / lons.len()))
        .collect();
    // Countries 0–4 never see violence.
    let quiet = |cell: CellId| country_of[&cell] < 5;
    let data = base.with_fatalities_after(base.first_month() - 1, |c, _, v| if quiet(c) { 0 } else { v });
    let map: CountryMap = country_of.iter().map(|(&c, &k)| (c, format!("C{k}"))).collect();

    let ws: MonthId = 108;
    let mut forecasts: Vec<(String, ForecastSet)> = [
        BenchmarkKind::AllZero,
        BenchmarkKind::PoissonLast,
        BenchmarkKind::Conflictology,
        BenchmarkKind::ConflictologyNeighbors,
        BenchmarkKind::Bootstrap240,
    ]
    .into_iter()
    .map(|kind| {
        let fc = benchmark_forecast(BenchmarkSpec { kind, seed: 4 }, &data, ws).unwrap();
        (kind.name().to_string(), fc)
    })
    .collect();
    // A distributional model that puts a third of its mass on positive counts everywhere.
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let body = LogNormal::new(1.0, 1.0).unwrap();
    let mut model = ForecastSet::new(ws);
    for cell in data.cell_ids() {
        for month in ws..ws + 12 {
            let positives: Vec<u32> = (0..SAMPLE_COUNT)
                .map(|_| Distribution::<f64>::sample(&body, &mut rng).round().max(1.0) as u32)
                .collect();
            let s = compose_quasi_hurdle(0.33, &positives, rng.random()).unwrap();
            model.insert(cell, month, s).unwrap();
        }
    }
    forecasts.push(("distributional".to_string(), model));

    let sc = ScoringConfig::default();
    let reports: Vec<_> = forecasts
        .iter()
        .map(|(name, fc)| score_forecast(name, fc, &data, Some(&map), &sc).unwrap())
        .collect();
    let table = rank_models(&reports, Metric::Crps).unwrap();
    let m = table.models.len() as f64;
    let zero_style: Vec<usize> = ["all_zero", "poisson_last", "conflictology"]
        .iter()
        .map(|n| table.models.iter().position(|x| x == n).unwrap())
        .collect();
    let dist = table.models.len() - 1;
    let mut quiet_countries = 0;
    for e in &table.entries {
        if (e.ranks.iter().sum::<f64>() - m * (m + 1.0) / 2.0).abs() > 1e-12 {
            return outcome(false, format!("{}: rank sum {}", e.country, e.ranks.iter().sum::<f64>()));
        }
        if e.country.as_str() >= "C5" {
            continue;
        }
        quiet_countries += usize::from(e.fatalities == 0);
        let best = e.values.iter().copied().fold(f64::INFINITY, f64::min);
        if zero_style.iter().any(|&k| e.values[k] != best) {
            return outcome(false, format!("{}: a zero-style benchmark is not tied first", e.country));
        }
        if e.ranks[dist] != m {
            return outcome(false, format!("{}: distributional model ranked {}", e.country, e.ranks[dist]));
        }
    }
    outcome(
        table.models.len() == 6 && table.entries.len() == 10 && quiet_countries == 5,
        format!(
            "{} models x {} countries; zero-style tied first and distributional last in {quiet_countries} quiet countries",
            table.models.len(),
            table.entries.len()
        ),
    )
}

// ---------------------------------------------------------------------------

fn tuning_metric() -> Outcome {
    let fixture = tune_score(&[(0.7, 0.5); 4]).unwrap();
    if (fixture - 0.4).abs() > 1e-12 {
        return outcome(false, format!("(0.7, 0.5) gave {fixture}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..100 {
        let folds: Vec<(f64, f64)> = (0..rng.random_range(1..8))
            .map(|_| {
                let v = rng.random_range(-1.0..1.0);
                (v, v)
            })
            .collect();
        let mean = folds.iter().map(|f| f.1).sum::<f64>() / folds.len() as f64;
        if tune_score(&folds).unwrap() != mean {
            return outcome(false, "equal train and test scores were penalized");
        }
    }

    let data = generate_synthetic(&SyntheticConfig {
        n_cells: 100,
        n_months: 120,
        target_nonzero_share: 0.03,
        seed: 6,
        ..Default::default()
    })
    .unwrap();
    let cutoff: MonthId = 105;
    let cfg = TuneConfig {
        budget: 1,
        n_folds: 3,
        seed: 6,
        ..Default::default()
    };
    let mut noise = ChaCha8Rng::seed_from_u64(6);
    let after = data.with_fatalities_after(cutoff, |_, _, _| noise.random_range(0..30));
    let at_cutoff = data.with_fatalities_after(cutoff - 1, |_, m, v| if m == cutoff { v + 5 } else { v });
    for k in [3u32, 8, 14] {
        let splits = make_cv_splits(&data, k, cutoff, 5, 12).unwrap();
        if splits.iter().any(|s| *s.test_months.end() > cutoff - k as MonthId || *s.test_label_months().end() > cutoff) {
            return outcome(false, format!("k={k}: a fold crosses cutoff − k"));
        }
        for stage in [Stage::Classifier, Stage::Regressor] {
            let base = random_search(&data, stage, k, cutoff, &cfg).unwrap().0;
            let moved = random_search(&after, stage, k, cutoff, &cfg).unwrap().0;
            if base != moved {
                return outcome(false, format!("k={k} {stage}: post-cutoff data changed the CV result"));
            }
            let control = random_search(&at_cutoff, stage, k, cutoff, &cfg).unwrap().0;
            if stage == Stage::Classifier && control == base {
                return outcome(false, format!("k={k}: CV ignores the cutoff month's labels"));
            }
        }
    }
    outcome(
        true,
        "0.7/0.5 -> 0.4; zero gap means no penalty; folds stay within cutoff − k, results unchanged by later data",
    )
}

// ---------------------------------------------------------------------------

type Criterion = (&'static str, &'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 10] = [
    ("crps-oracle", "CRPS matches trapezoid integration within 1e-6", crps_oracle),
    ("crps-mae", "all-zero CRPS equals MAE bit-exactly", crps_equals_mae),
    ("quasi-hurdle", "quasi-hurdle zero counts are exact", quasi_hurdle_exactness),
    ("simulation", "informativeness simulation at full scale", simulation_at_scale),
    ("qrf-coverage", "QRF 90% interval coverage in 85-95%", qrf_coverage),
    ("end-to-end", "pipeline beats all-zero and conflictology in 2 of 3 runs", end_to_end),
    ("benchmarks", "benchmark shapes and cutoff gap", benchmark_shapes),
    ("clusters", "cluster merge postcondition and DBSCAN blocks", cluster_merge),
    ("ranks", "rank mechanics on the quiet-country fixture", rank_fixture),
    ("tuning", "tuning score fixtures and CV leakage", tuning_metric),
];

fn main() {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = Vec::new();
    for (i, (id, title, run)) in CRITERIA.iter().enumerate() {
        if !filters.is_empty() && !filters.iter().any(|f| id.contains(f.as_str())) {
            continue;
        }
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {:>2} {id}: {title} | {}", i + 1, o.detail);
        if !o.pass {
            failed.push(*id);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {}", failed.join(", "));
        std::process::exit(1);
    }
}
