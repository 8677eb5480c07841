//! Builds the tables for each experiment. Nothing here touches the filesystem.

use std::f64::consts::LN_2;

use ergotransport::bounds::{
    envelope, levy_tail, levy_width_gain, levy_width_mi, qmp_general, qmp_two_qubit, QmpSpectra,
};
use ergotransport::cycles::{
    closed_form_gain, gainful_iterations, initial_correlated_state, run_cycles, total_lossless, CycleConfig,
};
use ergotransport::ensemble::{
    dispersion_stats, histogram, moments, power_law_fit, run_ensemble, tail_probability, EnsembleConfig, StateClass,
    TransportSample,
};
use ergotransport::ergotropy::{ergotropic_gap, Hamiltonian};
use ergotransport::sampling::{gue_hamiltonian, hs_state, DrawKind, RngStream, PFHS_MAX_DIM};
use ergotransport::states::BipartiteState;
use serde_json::json;

use crate::args::{Experiment, RunArgs};
use crate::error::{CliError, Result};
use crate::table::{Table, Value};

/// Tables produced by one experiment.
#[derive(Debug, Clone)]
pub struct Output {
    pub results: Table,
    /// Analytic curves for experiments with bounds.
    pub overlay: Option<Table>,
    pub histogram: Option<Table>,
    /// Derived scalars, recorded in the metadata sidecar.
    pub derived: serde_json::Value,
}

impl Output {
    fn plain(results: Table) -> Self {
        Output {
            results,
            overlay: None,
            histogram: None,
            derived: serde_json::Value::Null,
        }
    }
}

pub const OVERLAY_GRID: usize = 500;
pub const TAIL_STEP: f64 = 0.005;
pub const TAIL_POINTS: usize = 201;
const POSITIVE_GAIN: f64 = 1e-9;
const QMP_ENERGY_DRAWS: usize = 10;

pub fn execute(args: &RunArgs) -> Result<Output> {
    check_common(args)?;
    match args.experiment {
        Experiment::ProdHist => prod_hist(args),
        Experiment::SepVsGen => sep_vs_gen(args),
        Experiment::Propeller => propeller(args),
        Experiment::AvgShift => avg_shift(args),
        Experiment::SamplerCompare => sampler_compare(args),
        Experiment::Concentration => concentration(args),
        Experiment::Dispersion => dispersion(args),
        Experiment::Cycles => cycles(args),
        Experiment::QmpFuzz => qmp_fuzz(args),
    }
}

fn check_common(args: &RunArgs) -> Result<()> {
    if args.experiment == Experiment::Cycles {
        CycleConfig::new(args.kappa, args.eps, args.iterations).map_err(CliError::from_config)?;
        return Ok(());
    }
    if args.d_b < 2 || args.d_c < 2 {
        return Err(CliError::Usage(format!("--db and --dc must be at least 2, got {} and {}", args.d_b, args.d_c)));
    }
    if args.samples == 0 {
        return Err(CliError::Usage("--samples must be at least 1".into()));
    }
    if args.bins == Some(0) {
        return Err(CliError::Usage("--bins must be at least 1".into()));
    }
    Ok(())
}

fn state_class(args: &RunArgs, default: StateClass) -> Result<StateClass> {
    match &args.state_class {
        None => Ok(default),
        Some(s) => s.parse().map_err(CliError::from_config),
    }
}

fn ensemble(args: &RunArgs, d_b: usize, d_c: usize, class: StateClass) -> Result<Vec<TransportSample>> {
    let mut cfg = EnsembleConfig::new(d_b, d_c, args.samples, class, args.seed);
    cfg.grain = args.grain;
    cfg.threads = args.threads;
    cfg.validate().map_err(CliError::from_config)?;
    Ok(run_ensemble(&cfg)?)
}

fn dims_grid(args: &RunArgs) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for d_b in 2..=args.d_b {
        for d_c in 2..=args.d_c {
            out.push((d_b, d_c));
        }
    }
    out
}

pub fn sample_table(samples: &[TransportSample]) -> Table {
    let mut t = Table::new(&[
        "sample_index",
        "d_b",
        "d_c",
        "state_class",
        "master_seed",
        "delta_mi",
        "gain_over_e",
        "gap_before",
        "gap_after",
    ]);
    for s in samples {
        t.push(vec![
            s.sample_index.into(),
            s.d_b.into(),
            s.d_c.into(),
            s.state_class.as_str().into(),
            s.master_seed.into(),
            s.delta_mi.into(),
            s.gain_over_e.into(),
            s.gap_before.into(),
            s.gap_after.into(),
        ]);
    }
    t
}

/// Gain histograms of several ensembles on a shared range.
fn gain_histograms(groups: &[&[TransportSample]], bins: usize) -> Result<Table> {
    let all: Vec<f64> = groups.iter().flat_map(|g| g.iter().map(|s| s.gain_over_e)).collect();
    let lo = all.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = all.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let range = if lo < hi { Some((lo, hi)) } else { None };
    let mut t = Table::new(&["state_class", "d_b", "d_c", "bin_lo", "bin_hi", "count"]);
    for g in groups {
        let Some(first) = g.first() else { continue };
        let values: Vec<f64> = g.iter().map(|s| s.gain_over_e).collect();
        let h = histogram(&values, bins, range)?;
        for (k, &c) in h.counts.iter().enumerate() {
            t.push(vec![
                first.state_class.as_str().into(),
                first.d_b.into(),
                first.d_c.into(),
                h.edges[k].into(),
                h.edges[k + 1].into(),
                c.into(),
            ]);
        }
    }
    Ok(t)
}

fn gain_summary(samples: &[TransportSample]) -> Result<serde_json::Value> {
    let g: Vec<f64> = samples.iter().map(|s| s.gain_over_e).collect();
    let (sd, se) = match moments(&g) {
        Ok(m) => (m.sd, m.se),
        Err(_) => (0.0, 0.0),
    };
    let mean = g.iter().sum::<f64>() / g.len() as f64;
    Ok(json!({
        "state_class": samples.first().map(|s| s.state_class.clone()),
        "mean_gain": mean,
        "sd_gain": sd,
        "se_gain": se,
        "positive_fraction": g.iter().filter(|&&x| x > POSITIVE_GAIN).count() as f64 / g.len() as f64,
    }))
}

fn prod_hist(args: &RunArgs) -> Result<Output> {
    let s = ensemble(args, args.d_b, args.d_c, StateClass::Product)?;
    Ok(Output {
        histogram: Some(gain_histograms(&[&s], args.bins.unwrap_or(100))?),
        derived: json!({ "product": gain_summary(&s)? }),
        ..Output::plain(sample_table(&s))
    })
}

fn separable_class(d_b: usize, d_c: usize) -> StateClass {
    if d_b * d_c <= PFHS_MAX_DIM {
        StateClass::SeparablePfhs
    } else {
        StateClass::SeparableHdu
    }
}

fn sep_vs_gen(args: &RunArgs) -> Result<Output> {
    let sep = ensemble(args, args.d_b, args.d_c, separable_class(args.d_b, args.d_c))?;
    let gen = ensemble(args, args.d_b, args.d_c, StateClass::General)?;
    let mut results = sample_table(&sep);
    results.rows.extend(sample_table(&gen).rows);
    Ok(Output {
        histogram: Some(gain_histograms(&[&sep, &gen], args.bins.unwrap_or(100))?),
        derived: json!({ "separable": gain_summary(&sep)?, "general": gain_summary(&gen)? }),
        ..Output::plain(results)
    })
}

pub fn propeller_overlay() -> Result<Table> {
    let ln4 = 2.0 * LN_2;
    let mut t = Table::new(&["delta_mi", "gamma_upper", "gamma_lower", "linear_upper", "linear_lower"]);
    for k in 0..OVERLAY_GRID {
        let x = -ln4 + 2.0 * ln4 * k as f64 / (OVERLAY_GRID - 1) as f64;
        let e = envelope(x)?;
        t.push(vec![
            x.into(),
            e.gamma_upper.into(),
            e.gamma_lower.into(),
            e.linear_upper.into(),
            e.linear_lower.into(),
        ]);
    }
    Ok(t)
}

/// Samples outside the two-qubit envelope, within `1e-9`.
pub fn propeller_violations(delta_mi: &[f64], gain: &[f64]) -> usize {
    delta_mi
        .iter()
        .zip(gain)
        .filter(|(&x, &g)| match envelope(x) {
            Ok(e) => {
                !e.contains(g, 1e-9) || g > e.linear_upper + 1e-9 || g < e.linear_lower - 1e-9
            }
            Err(_) => true,
        })
        .count()
}

fn propeller(args: &RunArgs) -> Result<Output> {
    if (args.d_b, args.d_c) != (2, 2) {
        return Err(CliError::Usage("propeller bounds hold for two qubits only (--db 2 --dc 2)".into()));
    }
    let s = ensemble(args, 2, 2, state_class(args, StateClass::General)?)?;
    let mi: Vec<f64> = s.iter().map(|x| x.delta_mi).collect();
    let g: Vec<f64> = s.iter().map(|x| x.gain_over_e).collect();
    Ok(Output {
        overlay: Some(propeller_overlay()?),
        derived: json!({ "violations": propeller_violations(&mi, &g) }),
        ..Output::plain(sample_table(&s))
    })
}

fn avg_shift(args: &RunArgs) -> Result<Output> {
    let mut t = Table::new(&[
        "d_b",
        "d_c",
        "d_bc",
        "samples",
        "mean_gain",
        "sd_gain",
        "se_gain",
        "positive_fraction",
    ]);
    let (mut dims, mut mags) = (Vec::new(), Vec::new());
    for (d_b, d_c) in dims_grid(args) {
        let s = ensemble(args, d_b, d_c, StateClass::Product)?;
        let g: Vec<f64> = s.iter().map(|x| x.gain_over_e).collect();
        let m = moments(&g).map_err(|_| CliError::Usage("avg-shift needs --samples >= 2".into()))?;
        let pos = g.iter().filter(|&&x| x > POSITIVE_GAIN).count() as f64 / g.len() as f64;
        t.push(vec![
            d_b.into(),
            d_c.into(),
            (d_b * d_c).into(),
            args.samples.into(),
            m.mean.into(),
            m.sd.into(),
            m.se.into(),
            pos.into(),
        ]);
        if m.mean < 0.0 {
            dims.push((d_b * d_c) as f64);
            mags.push(-m.mean);
        }
    }
    let fit = power_law_fit(&dims, &mags).ok();
    Ok(Output {
        derived: json!({ "power_law": fit }),
        ..Output::plain(t)
    })
}

fn sampler_compare(args: &RunArgs) -> Result<Output> {
    if args.d_b * args.d_c > PFHS_MAX_DIM {
        return Err(CliError::Usage(format!(
            "sampler-compare needs d_b * d_c <= {PFHS_MAX_DIM} for PFHS sampling"
        )));
    }
    let hdu = ensemble(args, args.d_b, args.d_c, StateClass::SeparableHdu)?;
    let pfhs = ensemble(args, args.d_b, args.d_c, StateClass::SeparablePfhs)?;
    let mut results = sample_table(&hdu);
    results.rows.extend(sample_table(&pfhs).rows);
    Ok(Output {
        histogram: Some(gain_histograms(&[&hdu, &pfhs], args.bins.unwrap_or(100))?),
        derived: json!({ "separable_hdu": gain_summary(&hdu)?, "separable_pfhs": gain_summary(&pfhs)? }),
        ..Output::plain(results)
    })
}

fn concentration(args: &RunArgs) -> Result<Output> {
    let class = state_class(args, StateClass::General)?;
    let mut t = Table::new(&[
        "d_b",
        "d_c",
        "d_bc",
        "samples",
        "mean_mi",
        "sd_mi",
        "mean_gain",
        "sd_gain",
        "levy_width_mi",
        "levy_width_gain",
    ]);
    let mut overlay = Table::new(&[
        "d_b",
        "d_c",
        "ell",
        "tail_mi",
        "levy_tail_mi",
        "tail_gain",
        "levy_tail_gain",
    ]);
    for (d_b, d_c) in dims_grid(args) {
        let s = ensemble(args, d_b, d_c, class.clone())?;
        let mi: Vec<f64> = s.iter().map(|x| x.delta_mi).collect();
        let g: Vec<f64> = s.iter().map(|x| x.gain_over_e).collect();
        let too_few = |_| CliError::Usage("concentration needs --samples >= 2".into());
        let (m_mi, m_g) = (moments(&mi).map_err(too_few)?, moments(&g).map_err(too_few)?);
        let (w_mi, w_g) = (levy_width_mi(d_b, d_c)?, levy_width_gain(d_b, d_c)?);
        t.push(vec![
            d_b.into(),
            d_c.into(),
            (d_b * d_c).into(),
            args.samples.into(),
            m_mi.mean.into(),
            m_mi.sd.into(),
            m_g.mean.into(),
            m_g.sd.into(),
            w_mi.into(),
            w_g.into(),
        ]);
        for k in 0..TAIL_POINTS {
            let ell = k as f64 * TAIL_STEP;
            overlay.push(vec![
                d_b.into(),
                d_c.into(),
                ell.into(),
                tail_probability(&mi, ell)?.into(),
                levy_tail(ell, w_mi)?.raw.into(),
                tail_probability(&g, ell)?.into(),
                levy_tail(ell, w_g)?.raw.into(),
            ]);
        }
    }
    Ok(Output {
        overlay: Some(overlay),
        ..Output::plain(t)
    })
}

fn dispersion(args: &RunArgs) -> Result<Output> {
    let class = state_class(args, StateClass::General)?;
    let bins = args.bins.unwrap_or(20);
    if bins < 2 {
        return Err(CliError::Usage("dispersion needs --bins >= 2".into()));
    }
    let mut t = Table::new(&[
        "d_b",
        "d_c",
        "d_bc",
        "samples",
        "conditional_entropy",
        "rect_width",
        "rect_length",
        "rect_angle",
        "rect_ratio",
        "sd_mi",
        "sd_gain",
    ]);
    for (d_b, d_c) in dims_grid(args) {
        let s = ensemble(args, d_b, d_c, class.clone())?;
        let d = dispersion_stats(&s, bins, &[])?;
        t.push(vec![
            d_b.into(),
            d_c.into(),
            (d_b * d_c).into(),
            args.samples.into(),
            d.conditional_entropy.into(),
            d.rect.width.into(),
            d.rect.length.into(),
            d.rect.angle.into(),
            d.rect.ratio.into(),
            d.sd_mi.into(),
            d.sd_gain.into(),
        ]);
    }
    Ok(Output::plain(t))
}

fn cycles(args: &RunArgs) -> Result<Output> {
    let cfg = CycleConfig::new(args.kappa, args.eps, args.iterations).map_err(CliError::from_config)?;
    let trace = run_cycles(&cfg)?;
    let mut t = Table::new(&[
        "iteration",
        "injected",
        "received",
        "extracted",
        "gain",
        "closed_form_gain",
        "gap_before",
        "gap_after",
        "in_regime",
    ]);
    for r in &trace.records {
        t.push(vec![
            r.iteration.into(),
            r.injected.into(),
            r.received.into(),
            r.extracted.into(),
            r.gain.into(),
            closed_form_gain(r.iteration, cfg.kappa, cfg.eps)?.into(),
            r.gap_before.into(),
            r.gap_after.into(),
            r.in_regime.into(),
        ]);
    }
    let h = Hamiltonian::diagonal(&[0.0, 1.0])?;
    let delta0 = ergotropic_gap(&initial_correlated_state(cfg.kappa)?, &h, &h)?;
    let gainful = trace.leading_gainful();
    let e_plus = trace.e_plus_total();
    Ok(Output {
        derived: json!({
            "gainful_iterations": gainful,
            "gainful_iterations_closed_form": gainful_iterations(cfg.kappa, cfg.eps)?,
            "e_plus_total": e_plus,
            "e_plus_total_closed_form": total_lossless(cfg.kappa, cfg.eps).ok(),
            "injected_while_gainful": trace.total_injected(gainful),
            "initial_gap": delta0,
            "e_plus_over_initial_gap": e_plus / delta0,
        }),
        ..Output::plain(t)
    })
}

fn qmp_fuzz(args: &RunArgs) -> Result<Output> {
    let (d_b, d_c) = (args.d_b, args.d_c);
    let qubits = (d_b, d_c) == (2, 2);
    let mut cols = vec!["sample_index", "min_gap_slack", "holds"];
    if qubits {
        cols.extend(["slack_1", "slack_2", "slack_3", "slack_4"]);
    }
    let mut t = Table::new(&cols);
    let mut failures = 0u64;
    for i in 0..args.samples {
        let stream = RngStream::new(args.seed, i);
        let rho = hs_state(d_b * d_c, &mut stream.rng(DrawKind::State))?;
        let spectra = QmpSpectra::from_state(&BipartiteState::new(d_b, d_c, rho)?)?;
        let mut rng = stream.rng(DrawKind::Hamiltonian);
        // Centered GUE spectra: ascending and summing to zero.
        let mut zero_sum_energies = |d: usize| -> Result<Vec<f64>> {
            let e = gue_hamiltonian(d, &mut rng)?.energies().to_vec();
            let mean = e.iter().sum::<f64>() / d as f64;
            Ok(e.iter().map(|x| x - mean).collect())
        };
        let mut min_slack = f64::INFINITY;
        let mut holds = true;
        for _ in 0..QMP_ENERGY_DRAWS {
            let e_b = zero_sum_energies(d_b)?;
            let e_c = zero_sum_energies(d_c)?;
            let check = qmp_general(&spectra, &e_b, &e_c)?;
            min_slack = min_slack.min(check.slack());
            holds &= check.holds;
        }
        let mut row: Vec<Value> = vec![i.into(), min_slack.into(), holds.into()];
        if qubits {
            let report = qmp_two_qubit(&spectra)?;
            holds &= report.passed();
            row[2] = holds.into();
            row.extend(report.checks.iter().map(|c| Value::from(c.slack())));
        }
        failures += u64::from(!holds);
        t.push(row);
    }
    Ok(Output {
        derived: json!({ "failures": failures }),
        ..Output::plain(t)
    })
}
