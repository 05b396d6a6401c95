//! Gaussian kernel density mode used as the point forecast.

/// Number of grid points the density is evaluated on.
pub const GRID_POINTS: usize = 512;

/// Kernels further than this many bandwidths away contribute nothing in f64.
const CUTOFF_BANDWIDTHS: f64 = 40.0;

/// Silverman bandwidth `σ · (3n/4)^(−1/5)` with `σ` the sample standard
/// deviation (n − 1 denominator). Returns `None` for fewer than two samples
/// or zero spread.
pub fn silverman_bandwidth<T: Copy + Into<f64>>(samples: &[T]) -> Option<f64> {
    let n = samples.len();
    if n < 2 {
        return None;
    }
    let mean = samples.iter().map(|&v| v.into()).sum::<f64>() / n as f64;
    let var = samples
        .iter()
        .map(|&v| (v.into() - mean).powi(2))
        .sum::<f64>()
        / (n - 1) as f64;
    let sd = var.sqrt();
    (sd > 0.0).then(|| sd * (0.75 * n as f64).powf(-0.2))
}

/// Mode of the Gaussian KDE of `samples`, clamped at zero.
///
/// The density is evaluated on [`GRID_POINTS`] evenly spaced points from
/// `min − h` to `max + h`; the first grid point attaining the maximum wins.
/// A single sample or a point mass returns that value.
pub fn map_point<T: Copy + Into<f64>>(samples: &[T]) -> f64 {
    let Some(first) = samples.first() else {
        return 0.0;
    };
    let first: f64 = (*first).into();
    let Some(h) = silverman_bandwidth(samples) else {
        return first.max(0.0);
    };
    let support = compress(samples);
    let lo = support[0].0 - h;
    let hi = support[support.len() - 1].0 + h;
    let step = (hi - lo) / (GRID_POINTS - 1) as f64;
    let reach = CUTOFF_BANDWIDTHS * h;

    let density: Vec<f64> = (0..GRID_POINTS)
        .map(|i| {
            let g = lo + step * i as f64;
            let start = support.partition_point(|&(v, _)| v < g - reach);
            support[start..]
                .iter()
                .take_while(|&&(v, _)| v <= g + reach)
                .map(|&(v, c)| {
                    let z = (g - v) / h;
                    c * (-0.5 * z * z).exp()
                })
                .sum()
        })
        .collect();
    let max = density.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let idx = density
        .iter()
        .position(|&d| d >= max * (1.0 - 1e-12))
        .unwrap_or(0);
    (lo + step * idx as f64).max(0.0)
}

/// Distinct values with their multiplicities, ascending.
fn compress<T: Copy + Into<f64>>(samples: &[T]) -> Vec<(f64, f64)> {
    let mut values: Vec<f64> = samples.iter().map(|&v| v.into()).collect();
    values.sort_unstable_by(f64::total_cmp);
    let mut out: Vec<(f64, f64)> = Vec::new();
    for v in values {
        match out.last_mut() {
            Some(last) if last.0 == v => last.1 += 1.0,
            _ => out.push((v, 1.0)),
        }
    }
    out
}
