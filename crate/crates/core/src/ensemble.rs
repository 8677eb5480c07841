//! Monte Carlo ensembles of transport events and the statistics run on them.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ergotropy::ergotropy_gain;
use crate::error::{Error, Result};
use crate::sampling::{
    self, energy_conserving_unitary, gap_matched_pair, DrawKind, RngStream, DEFAULT_GAP_MATCH_ATTEMPTS,
    DEFAULT_GRAIN, DEFAULT_PFHS_ATTEMPTS, PFHS_MAX_DIM,
};
use crate::states::BipartiteState;

/// How initial states are drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateClass {
    /// Hilbert-Schmidt states on the joint space.
    General,
    /// Products of independent Hilbert-Schmidt marginals.
    Product,
    /// Hilbert-Schmidt states with positive partial transpose.
    SeparablePfhs,
    /// Uniform mixtures of Haar-random pure product states.
    SeparableHdu,
    /// The same state for every sample.
    Fixed(BipartiteState),
}

impl StateClass {
    pub fn name(&self) -> &'static str {
        match self {
            StateClass::General => "general",
            StateClass::Product => "product",
            StateClass::SeparablePfhs => "separable_pfhs",
            StateClass::SeparableHdu => "separable_hdu",
            StateClass::Fixed(_) => "fixed",
        }
    }
}

impl fmt::Display for StateClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StateClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "general" => Ok(StateClass::General),
            "product" => Ok(StateClass::Product),
            "separable_pfhs" | "pfhs" => Ok(StateClass::SeparablePfhs),
            "separable_hdu" | "hdu" => Ok(StateClass::SeparableHdu),
            other => Err(Error::InvalidArgument(format!(
                "unknown state class {other:?}; expected general, product, separable_pfhs or separable_hdu"
            ))),
        }
    }
}

/// Bin counts for the histogram-based statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinConfig {
    pub hist_1d: usize,
    pub hist_2d: usize,
    pub conditional_entropy: usize,
}

impl Default for BinConfig {
    fn default() -> Self {
        BinConfig {
            hist_1d: 100,
            hist_2d: 50,
            conditional_entropy: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub d_b: usize,
    pub d_c: usize,
    pub n_samples: u64,
    pub state_class: StateClass,
    pub grain: f64,
    pub master_seed: u64,
    pub bins: BinConfig,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
    pub pfhs_max_attempts: u64,
    pub gap_match_max_attempts: u64,
}

impl EnsembleConfig {
    /// A configuration with default grain, bins and retry limits.
    pub fn new(d_b: usize, d_c: usize, n_samples: u64, state_class: StateClass, master_seed: u64) -> Self {
        EnsembleConfig {
            d_b,
            d_c,
            n_samples,
            state_class,
            grain: DEFAULT_GRAIN,
            master_seed,
            bins: BinConfig::default(),
            threads: None,
            pfhs_max_attempts: DEFAULT_PFHS_ATTEMPTS,
            gap_match_max_attempts: DEFAULT_GAP_MATCH_ATTEMPTS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_b < 2 || self.d_c < 2 {
            return Err(Error::InvalidArgument(format!(
                "ensembles need d_b, d_c >= 2, got {}x{}",
                self.d_b, self.d_c
            )));
        }
        if self.n_samples == 0 {
            return Err(Error::InvalidArgument("n_samples must be at least 1".into()));
        }
        if !(self.grain > 0.0 && self.grain.is_finite()) {
            return Err(Error::OutOfDomain {
                what: "grain",
                value: self.grain,
                domain: "(0, inf)",
            });
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidArgument("threads must be at least 1".into()));
        }
        match &self.state_class {
            StateClass::SeparablePfhs if self.d_b * self.d_c > PFHS_MAX_DIM => Err(Error::UnsupportedDimension {
                what: "separable_pfhs ensemble",
                dim: self.d_b * self.d_c,
                max: PFHS_MAX_DIM,
            }),
            StateClass::Fixed(s) if s.d_b() != self.d_b || s.d_c() != self.d_c => Err(Error::shape(
                "EnsembleConfig",
                format!("{}x{}", self.d_b, self.d_c),
                format!("{}x{}", s.d_b(), s.d_c()),
            )),
            _ => Ok(()),
        }
    }
}

/// One transport event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportSample {
    pub sample_index: u64,
    pub d_b: usize,
    pub d_c: usize,
    pub state_class: String,
    pub master_seed: u64,
    /// Ergotropy gain in units of the rescaled energy.
    pub gain_over_e: f64,
    /// Mutual-information change in nats.
    pub delta_mi: f64,
    pub gap_before: f64,
    pub gap_after: f64,
}

/// Draws one sample. Within a sample the Hamiltonians, the state and the
/// unitary each use their own generator.
pub fn sample_transport(cfg: &EnsembleConfig, sample_index: u64) -> Result<TransportSample> {
    let stream = RngStream::new(cfg.master_seed, sample_index);
    let (d_b, d_c) = (cfg.d_b, cfg.d_c);
    let pair = gap_matched_pair(
        d_b,
        d_c,
        cfg.grain,
        &mut stream.rng(DrawKind::Hamiltonian),
        cfg.gap_match_max_attempts,
    )?;
    let mut rng = stream.rng(DrawKind::State);
    let state = match &cfg.state_class {
        StateClass::General => BipartiteState::new(d_b, d_c, sampling::hs_state(d_b * d_c, &mut rng)?)?,
        StateClass::Product => sampling::product_state(d_b, d_c, &mut rng)?,
        StateClass::SeparablePfhs => sampling::pfhs_separable(d_b, d_c, &mut rng, cfg.pfhs_max_attempts)?.0,
        StateClass::SeparableHdu => sampling::hdu_separable(d_b, d_c, &mut rng)?,
        StateClass::Fixed(s) => s.clone(),
    };
    let u = energy_conserving_unitary(&pair, &mut stream.rng(DrawKind::Unitary))?;
    let out = ergotropy_gain(&state, &pair.h_b, &pair.h_c, &u)?;
    Ok(TransportSample {
        sample_index,
        d_b,
        d_c,
        state_class: cfg.state_class.name().to_string(),
        master_seed: cfg.master_seed,
        gain_over_e: out.gain,
        delta_mi: out.delta_mi,
        gap_before: out.gap_before,
        gap_after: out.gap_after,
    })
}

/// Draws `cfg.n_samples` samples in parallel, returned in index order.
///
/// Each sample depends only on the master seed and its index, so the output
/// is the same for any thread count.
pub fn run_ensemble(cfg: &EnsembleConfig) -> Result<Vec<TransportSample>> {
    cfg.validate()?;
    let work = || -> Vec<Result<TransportSample>> {
        (0..cfg.n_samples)
            .into_par_iter()
            .map(|i| {
                sample_transport(cfg, i).map_err(|e| Error::Sample {
                    index: i,
                    source: Box::new(e),
                })
            })
            .collect()
    };
    let results = match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };
    results.into_iter().collect()
}

/// Uniform-width histogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

fn data_range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() || !hi.is_finite() {
        return None;
    }
    if lo == hi {
        Some((lo - 0.5, hi + 0.5))
    } else {
        Some((lo, hi))
    }
}

fn bin_index(v: f64, lo: f64, hi: f64, bins: usize) -> Option<usize> {
    if !(v >= lo && v <= hi) {
        return None;
    }
    let k = ((v - lo) / (hi - lo) * bins as f64).floor() as usize;
    Some(k.min(bins - 1))
}

fn edges(lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    (0..=bins).map(|k| lo + (hi - lo) * k as f64 / bins as f64).collect()
}

fn check_bins(bins: usize, min: usize) -> Result<()> {
    if bins < min {
        return Err(Error::InvalidArgument(format!("need at least {min} bins, got {bins}")));
    }
    Ok(())
}

fn check_range(range: (f64, f64)) -> Result<()> {
    if !(range.0 < range.1) || !range.0.is_finite() || !range.1.is_finite() {
        return Err(Error::InvalidArgument(format!("invalid histogram range {range:?}")));
    }
    Ok(())
}

/// Counts values into `bins` equal bins over `range` (default: data range).
/// Values outside the range are dropped; the upper edge belongs to the last bin.
pub fn histogram(values: &[f64], bins: usize, range: Option<(f64, f64)>) -> Result<Histogram> {
    if values.is_empty() {
        return Err(Error::EmptyInput("histogram"));
    }
    check_bins(bins, 1)?;
    let (lo, hi) = match range {
        Some(r) => {
            check_range(r)?;
            r
        }
        None => data_range(values.iter().copied()).ok_or(Error::EmptyInput("histogram"))?,
    };
    let mut counts = vec![0u64; bins];
    for &v in values {
        if let Some(k) = bin_index(v, lo, hi, bins) {
            counts[k] += 1;
        }
    }
    Ok(Histogram {
        edges: edges(lo, hi, bins),
        counts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram2d {
    pub x_edges: Vec<f64>,
    pub y_edges: Vec<f64>,
    /// `counts[i][j]` for x bin `i` and y bin `j`.
    pub counts: Vec<Vec<u64>>,
}

impl Histogram2d {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

pub fn histogram2d(
    points: &[(f64, f64)],
    bins: usize,
    range: Option<((f64, f64), (f64, f64))>,
) -> Result<Histogram2d> {
    if points.is_empty() {
        return Err(Error::EmptyInput("histogram2d"));
    }
    check_bins(bins, 1)?;
    let (xr, yr) = match range {
        Some((xr, yr)) => {
            check_range(xr)?;
            check_range(yr)?;
            (xr, yr)
        }
        None => (
            data_range(points.iter().map(|p| p.0)).ok_or(Error::EmptyInput("histogram2d"))?,
            data_range(points.iter().map(|p| p.1)).ok_or(Error::EmptyInput("histogram2d"))?,
        ),
    };
    let mut counts = vec![vec![0u64; bins]; bins];
    for &(x, y) in points {
        if let (Some(i), Some(j)) = (bin_index(x, xr.0, xr.1, bins), bin_index(y, yr.0, yr.1, bins)) {
            counts[i][j] += 1;
        }
    }
    Ok(Histogram2d {
        x_edges: edges(xr.0, xr.1, bins),
        y_edges: edges(yr.0, yr.1, bins),
        counts,
    })
}

pub fn mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput("mean"));
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    /// Population standard deviation.
    pub sd: f64,
    /// Standard error of the mean, `sd / sqrt(n)`.
    pub se: f64,
    pub n: usize,
}

pub fn moments(values: &[f64]) -> Result<Moments> {
    let m = mean(values)?;
    let n = values.len();
    if n < 2 {
        return Err(Error::Degenerate {
            op: "moments",
            reason: "standard deviation needs at least two values".into(),
        });
    }
    let var = values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n as f64;
    let sd = var.sqrt();
    Ok(Moments {
        mean: m,
        sd,
        se: sd / (n as f64).sqrt(),
        n,
    })
}

/// Fraction of samples with `|x - mean| > ell`.
pub fn tail_probability(samples: &[f64], ell: f64) -> Result<f64> {
    if !(ell >= 0.0) {
        return Err(Error::OutOfDomain {
            what: "ell",
            value: ell,
            domain: "[0, inf)",
        });
    }
    let m = mean(samples)?;
    let count = samples.iter().filter(|&&x| (x - m).abs() > ell).count();
    Ok(count as f64 / samples.len() as f64)
}

/// `(ell, P[|x - mean| > ell])` for each `ell`.
pub fn tail_curve(samples: &[f64], ells: &[f64]) -> Result<Vec<(f64, f64)>> {
    ells.iter().map(|&l| Ok((l, tail_probability(samples, l)?))).collect()
}

/// Points scaled coordinate-wise by their largest magnitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rescaled {
    pub points: Vec<(f64, f64)>,
    pub x_scale: f64,
    pub y_scale: f64,
    /// Set when every x was zero; the x coordinates are then left at zero.
    pub x_all_zero: bool,
    pub y_all_zero: bool,
}

pub fn rescale_pairs(points: &[(f64, f64)]) -> Result<Rescaled> {
    if points.is_empty() {
        return Err(Error::EmptyInput("rescale_pairs"));
    }
    let x_scale = points.iter().fold(0.0f64, |m, p| m.max(p.0.abs()));
    let y_scale = points.iter().fold(0.0f64, |m, p| m.max(p.1.abs()));
    let div = |v: f64, s: f64| if s > 0.0 { v / s } else { 0.0 };
    Ok(Rescaled {
        points: points.iter().map(|&(x, y)| (div(x, x_scale), div(y, y_scale))).collect(),
        x_scale,
        y_scale,
        x_all_zero: x_scale == 0.0,
        y_all_zero: y_scale == 0.0,
    })
}

/// Rescales `(delta_mi, gain_over_e)` pairs.
pub fn rescale_samples(samples: &[TransportSample]) -> Result<Rescaled> {
    let pts: Vec<(f64, f64)> = samples.iter().map(|s| (s.delta_mi, s.gain_over_e)).collect();
    rescale_pairs(&pts)
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Counterclockwise convex hull without collinear vertices.
pub fn convex_hull(points: &[(f64, f64)]) -> Result<Vec<(f64, f64)>> {
    let mut pts: Vec<(f64, f64)> = points.to_vec();
    if pts.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
        return Err(Error::InvalidArgument("hull points must be finite".into()));
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup();
    if pts.len() < 3 {
        return Err(Error::Degenerate {
            op: "convex_hull",
            reason: format!("{} distinct points", pts.len()),
        });
    }
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &(f64, f64)>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    if hull.len() < 3 {
        return Err(Error::Degenerate {
            op: "convex_hull",
            reason: "points are collinear".into(),
        });
    }
    Ok(hull)
}

/// Minimum-area enclosing rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectangleFit {
    pub width: f64,
    pub length: f64,
    /// Direction of one side, in `[0, pi/2)`.
    pub angle: f64,
    /// `width / length`.
    pub ratio: f64,
    pub area: f64,
}

/// Rotating calipers over the edges of a convex hull.
pub fn min_area_rectangle(hull: &[(f64, f64)]) -> Result<RectangleFit> {
    if hull.len() < 3 {
        return Err(Error::Degenerate {
            op: "min_area_rectangle",
            reason: format!("hull has {} vertices", hull.len()),
        });
    }
    let quarter = std::f64::consts::FRAC_PI_2;
    let mut best: Option<RectangleFit> = None;
    for k in 0..hull.len() {
        let a = hull[k];
        let b = hull[(k + 1) % hull.len()];
        let (dx, dy) = (b.0 - a.0, b.1 - a.1);
        if dx == 0.0 && dy == 0.0 {
            continue;
        }
        let angle = dy.atan2(dx).rem_euclid(quarter);
        let (s, c) = angle.sin_cos();
        let (mut umin, mut umax, mut vmin, mut vmax) =
            (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in hull {
            let u = p.0 * c + p.1 * s;
            let v = -p.0 * s + p.1 * c;
            umin = umin.min(u);
            umax = umax.max(u);
            vmin = vmin.min(v);
            vmax = vmax.max(v);
        }
        let (e1, e2) = (umax - umin, vmax - vmin);
        let area = e1 * e2;
        let fit = RectangleFit {
            width: e1.min(e2),
            length: e1.max(e2),
            angle,
            ratio: e1.min(e2) / e1.max(e2),
            area,
        };
        best = match best {
            None => Some(fit),
            Some(cur) => {
                let tol = 1e-12 * cur.area.max(1e-300);
                if area < cur.area - tol || ((area - cur.area).abs() <= tol && angle < cur.angle) {
                    Some(fit)
                } else {
                    Some(cur)
                }
            }
        };
    }
    let fit = best.ok_or(Error::Degenerate {
        op: "min_area_rectangle",
        reason: "hull has no proper edge".into(),
    })?;
    if fit.area <= 0.0 {
        return Err(Error::Degenerate {
            op: "min_area_rectangle",
            reason: "hull has zero area".into(),
        });
    }
    Ok(fit)
}

fn shannon(counts: impl Iterator<Item = u64>, total: u64) -> f64 {
    let n = total as f64;
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// `H(Y | X) = H(X, Y) - H(X)` over `bins x bins` cells on the given range.
pub fn conditional_entropy_in(
    pairs: &[(f64, f64)],
    bins: usize,
    range: ((f64, f64), (f64, f64)),
) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput("conditional_entropy"));
    }
    check_bins(bins, 2)?;
    let h = histogram2d(pairs, bins, Some(range))?;
    let total = h.total();
    if total == 0 {
        return Err(Error::EmptyInput("conditional_entropy"));
    }
    let joint = shannon(h.counts.iter().flatten().copied(), total);
    let marginal = shannon(h.counts.iter().map(|row| row.iter().sum::<u64>()), total);
    Ok((joint - marginal).max(0.0))
}

/// Conditional entropy of the second coordinate given the first, for
/// rescaled pairs in `[-1, 1]^2`.
pub fn conditional_entropy(pairs: &[(f64, f64)], bins: usize) -> Result<f64> {
    conditional_entropy_in(pairs, bins, ((-1.0, 1.0), (-1.0, 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y = slope x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::shape("linear_fit", x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(Error::Degenerate {
            op: "linear_fit",
            reason: "need at least two points".into(),
        });
    }
    let mx = mean(x)?;
    let my = mean(y)?;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate {
            op: "linear_fit",
            reason: "all x values coincide".into(),
        });
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    /// Intercept of the fit in log space, `ln y = exponent ln x + intercept`.
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least squares on `(ln x, ln y)`.
pub fn power_law_fit(x: &[f64], y: &[f64]) -> Result<PowerLawFit> {
    if x.len() != y.len() {
        return Err(Error::shape("power_law_fit", x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(Error::Degenerate {
            op: "power_law_fit",
            reason: "need at least three points".into(),
        });
    }
    if let Some(v) = x.iter().chain(y).find(|v| !(**v > 0.0)) {
        return Err(Error::OutOfDomain {
            what: "power-law data",
            value: *v,
            domain: "(0, inf)",
        });
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let fit = linear_fit(&lx, &ly)?;
    Ok(PowerLawFit {
        exponent: fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
    })
}

/// Dispersion of the gain around its dependence on the mutual-information
/// change.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionStats {
    pub conditional_entropy: f64,
    pub rect: RectangleFit,
    pub sd_gain: f64,
    pub sd_mi: f64,
    /// Empirical `P[|delta_mi - mean| > ell]`.
    pub tail_curve: Vec<(f64, f64)>,
}

pub fn dispersion_stats(samples: &[TransportSample], bins: usize, ells: &[f64]) -> Result<DispersionStats> {
    let rescaled = rescale_samples(samples)?;
    let hull = convex_hull(&rescaled.points)?;
    let gains: Vec<f64> = samples.iter().map(|s| s.gain_over_e).collect();
    let mis: Vec<f64> = samples.iter().map(|s| s.delta_mi).collect();
    Ok(DispersionStats {
        conditional_entropy: conditional_entropy(&rescaled.points, bins)?,
        rect: min_area_rectangle(&hull)?,
        sd_gain: moments(&gains)?.sd,
        sd_mi: moments(&mis)?.sd,
        tail_curve: tail_curve(&mis, ells)?,
    })
}
