//! Level statistics: nearest-neighbour spacings, the Poisson and Wigner
//! references, Kolmogorov–Smirnov distances and level clusters.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::eigen::dedup_tolerance;
use crate::error::{Error, Result};

/// Fewest levels accepted by [`nnsd`].
pub const MIN_LEVELS: usize = 20;
pub const DEFAULT_BINS: usize = 20;
pub const DEFAULT_RANGE: f64 = 4.0;
/// Levels fed to the histogram by default, ground state excluded.
pub const DEFAULT_WINDOW: usize = 200;

fn check_spacing(s: f64) -> Result<()> {
    if s >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("spacing must be non-negative (got {s})")))
    }
}

/// `exp(-s)`.
pub fn poisson_pdf(s: f64) -> Result<f64> {
    check_spacing(s)?;
    Ok((-s).exp())
}

/// `(π/2) s exp(-π s²/4)`.
pub fn wigner_pdf(s: f64) -> Result<f64> {
    check_spacing(s)?;
    Ok(0.5 * PI * s * (-0.25 * PI * s * s).exp())
}

pub fn poisson_cdf(s: f64) -> Result<f64> {
    check_spacing(s)?;
    Ok(-(-s).exp_m1())
}

pub fn wigner_cdf(s: f64) -> Result<f64> {
    check_spacing(s)?;
    Ok(-(-0.25 * PI * s * s).exp_m1())
}

/// Sorts and merges levels closer than the solver's dedup tolerance.
pub fn distinct_levels(levels: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = levels.iter().copied().filter(|x| x.is_finite()).collect();
    v.sort_by(f64::total_cmp);
    v.dedup_by(|b, a| (*b - *a).abs() <= dedup_tolerance(*a));
    v
}

/// Spacing normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Unfolding {
    /// divide by the mean spacing of the whole series
    #[default]
    Global,
    /// divide each spacing by the mean of the `half_width` spacings on either
    /// side of it
    Local { half_width: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpacingSeries {
    pub levels: Vec<f64>,
    pub spacings: Vec<f64>,
    pub mean_spacing: f64,
    pub normalized: Vec<f64>,
    pub unfolding: Unfolding,
}

impl SpacingSeries {
    pub fn new(levels: &[f64], unfolding: Unfolding) -> Result<Self> {
        let levels = distinct_levels(levels);
        if levels.len() < 2 {
            return Err(Error::Usage(format!(
                "spacings need at least 2 distinct levels (got {})",
                levels.len()
            )));
        }
        let spacings: Vec<f64> = levels.windows(2).map(|w| w[1] - w[0]).collect();
        let mean_spacing = spacings.iter().sum::<f64>() / spacings.len() as f64;
        let normalized = match unfolding {
            Unfolding::Global => spacings.iter().map(|d| d / mean_spacing).collect(),
            Unfolding::Local { half_width } => {
                let n = spacings.len();
                let h = half_width.max(1);
                spacings
                    .iter()
                    .enumerate()
                    .map(|(i, d)| {
                        let (a, b) = (i.saturating_sub(h), (i + h + 1).min(n));
                        let local = spacings[a..b].iter().sum::<f64>() / (b - a) as f64;
                        d / local
                    })
                    .collect()
            }
        };
        Ok(Self {
            levels,
            spacings,
            mean_spacing,
            normalized,
            unfolding,
        })
    }
}

/// `sup_s |F_n(s) - F(s)|` for samples against a reference CDF.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s: Vec<f64> = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NnsdOptions {
    pub bins: usize,
    /// nominal histogram range `[0, range]`
    pub range: f64,
    pub unfolding: Unfolding,
}

impl Default for NnsdOptions {
    fn default() -> Self {
        Self {
            bins: DEFAULT_BINS,
            range: DEFAULT_RANGE,
            unfolding: Unfolding::Global,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpacingHistogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    /// counts scaled to unit area
    pub freq: Vec<f64>,
    pub poisson_ref: Vec<f64>,
    pub wigner_ref: Vec<f64>,
    pub ks_poisson: f64,
    pub ks_wigner: f64,
    pub series: SpacingSeries,
    pub options: NnsdOptions,
}

impl SpacingHistogram {
    pub fn spacing_count(&self) -> usize {
        self.series.normalized.len()
    }

    /// Whether the Wigner surmise fits better than the Poisson law.
    pub fn prefers_wigner(&self) -> bool {
        self.ks_wigner < self.ks_poisson
    }
}

/// Histogram of normalized spacings with both reference curves. Bins have
/// width `range / bins`; extra bins of the same width are appended when a
/// spacing exceeds `range`, so every spacing is counted.
pub fn nnsd(levels: &[f64], opts: &NnsdOptions) -> Result<SpacingHistogram> {
    if opts.bins == 0 || !(opts.range > 0.0) {
        return Err(Error::Usage(format!(
            "histogram needs bins > 0 and a positive range (got {} bins on [0, {}])",
            opts.bins, opts.range
        )));
    }
    let distinct = distinct_levels(levels).len();
    if distinct < MIN_LEVELS {
        return Err(Error::Usage(format!(
            "spacing statistics need at least {MIN_LEVELS} distinct levels (got {distinct})"
        )));
    }
    let series = SpacingSeries::new(levels, opts.unfolding)?;
    let width = opts.range / opts.bins as f64;
    let max_s = series.normalized.iter().copied().fold(0.0, f64::max);
    let bins = opts.bins.max((max_s / width).floor() as usize + 1);
    let edges: Vec<f64> = (0..=bins).map(|i| i as f64 * width).collect();
    let mut counts = vec![0usize; bins];
    for &s in &series.normalized {
        counts[((s / width).floor() as usize).min(bins - 1)] += 1;
    }
    let total = series.normalized.len() as f64;
    let freq = counts.iter().map(|&c| c as f64 / (total * width)).collect();
    let centers: Vec<f64> = edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let poisson_ref = centers.iter().map(|&c| (-c).exp()).collect();
    let wigner_ref = centers
        .iter()
        .map(|&c| 0.5 * PI * c * (-0.25 * PI * c * c).exp())
        .collect();
    let ks_poisson = ks_distance(&series.normalized, |s| -(-s).exp_m1());
    let ks_wigner = ks_distance(&series.normalized, |s| -(-0.25 * PI * s * s).exp_m1());
    Ok(SpacingHistogram {
        edges,
        counts,
        freq,
        poisson_ref,
        wigner_ref,
        ks_poisson,
        ks_wigner,
        series,
        options: *opts,
    })
}

/// Lowest `count` distinct levels above the ground state.
pub fn default_window(levels: &[f64], count: usize) -> Vec<f64> {
    distinct_levels(levels).into_iter().skip(1).take(count).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    /// index of the first level in the sorted list
    pub start: usize,
    pub size: usize,
    pub lo: f64,
    pub hi: f64,
    pub centroid: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub clusters: Vec<Cluster>,
    /// differences of consecutive centroids
    pub centroid_gaps: Vec<f64>,
    pub gap_factor: f64,
    pub mean_spacing: f64,
}

impl ClusterReport {
    /// Median centroid gap among clusters of at least `min_size` levels,
    /// taken between consecutive such clusters.
    pub fn typical_gap(&self, min_size: usize) -> Option<f64> {
        let c: Vec<f64> = self
            .clusters
            .iter()
            .filter(|c| c.size >= min_size)
            .map(|c| c.centroid)
            .collect();
        let mut g: Vec<f64> = c.windows(2).map(|w| w[1] - w[0]).collect();
        if g.is_empty() {
            return None;
        }
        g.sort_by(f64::total_cmp);
        let n = g.len();
        Some(if n % 2 == 1 {
            g[n / 2]
        } else {
            0.5 * (g[n / 2 - 1] + g[n / 2])
        })
    }
}

/// Splits the sorted level list wherever a spacing exceeds
/// `gap_factor · ⟨dE⟩`.
pub fn cluster_detection(levels: &[f64], gap_factor: f64) -> Result<ClusterReport> {
    if !(gap_factor > 1.0) {
        return Err(Error::Usage(format!("gap factor must exceed 1 (got {gap_factor})")));
    }
    let mut v: Vec<f64> = levels.iter().copied().filter(|x| x.is_finite()).collect();
    v.sort_by(f64::total_cmp);
    if v.is_empty() {
        return Err(Error::Usage("cluster detection needs at least one level".into()));
    }
    let mean_spacing = if v.len() > 1 {
        (v[v.len() - 1] - v[0]) / (v.len() - 1) as f64
    } else {
        0.0
    };
    let cut = gap_factor * mean_spacing;
    let mut clusters = Vec::new();
    let mut start = 0;
    for i in 1..=v.len() {
        if i == v.len() || v[i] - v[i - 1] > cut {
            let part = &v[start..i];
            clusters.push(Cluster {
                start,
                size: part.len(),
                lo: part[0],
                hi: part[part.len() - 1],
                centroid: part.iter().sum::<f64>() / part.len() as f64,
            });
            start = i;
        }
    }
    let centroid_gaps = clusters.windows(2).map(|w| w[1].centroid - w[0].centroid).collect();
    Ok(ClusterReport {
        clusters,
        centroid_gaps,
        gap_factor,
        mean_spacing,
    })
}
