use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8};
use std::path::Path;
use std::time::Instant;

use rank1_thermo::geometry::{integrate_geodesic, octagon, SurfaceModel, UnitTangentState, WarpProfile};
use rank1_thermo::jacobi::{
    orbit_history, riccati_integrate, unstable_riccati, ConstantHistory, RiccatiOptions,
};
use rank1_thermo::lyapunov::{closed_orbit_exponent, ensemble_sample, exponent_estimate, EnsembleOptions};
use rank1_thermo::orbits::{
    bridge_orbits, build_lambda_ell, build_markov_coding, mixed_flat_band_library,
    refine_closed_orbit, BridgeOptions, CodingOptions, FlatThresholds, OrbitLibrary, Provenance,
    RefineOptions, Section,
};
use rank1_thermo::symbolic::{equilibrium_stats, write_sweep_csv, SuspensionModel};
use rank1_thermo::thermo::{
    conjugate_at, detect_corner, exponent_range, legendre_conjugate_with_source,
    sample_pressure_curve, write_curve_csv, write_spectrum_csv, AlphaGrid, PressureCurve,
    PressureSource, SpectrumResult, ZeroUnion,
};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, ExperimentName, Params};
use crate::report::{
    write_json, write_rows, Artifact, Assertion, Manifest, Summary, ERROR_FILE, MANIFEST_FILE,
    SUMMARY_FILE,
};
use crate::{io, numeric, CliError};

/// Result of a completed run.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub summary: Summary,
    pub manifest: Manifest,
}

impl RunOutcome {
    /// 0 when every assertion passed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.summary.passed {
            0
        } else {
            1
        }
    }
}

/// Files written by an experiment, with their sampled flag.
struct Outputs {
    files: Vec<(String, bool)>,
}

impl Outputs {
    fn add(&mut self, file: &str, sampled: bool) {
        self.files.push((file.into(), sampled));
    }
}

/// Run `config` writing all artifacts under `out`.
///
/// On any module error an `error.json` report is written before the
/// error is returned.
pub fn run_experiment(config: &ExperimentConfig, out: &Path) -> Result<RunOutcome, CliError> {
    config.validate()?;
    std::fs::create_dir_all(out).map_err(io)?;
    let start = Instant::now();
    let result = run_inner(config, out);
    let wall = start.elapsed().as_secs_f64();
    match result {
        Ok((summary, outputs)) => {
            write_json(&out.join(SUMMARY_FILE), &summary)?;
            let mut artifacts = Vec::new();
            for (file, sampled) in &outputs.files {
                artifacts.push(Artifact::from_file(out, file, *sampled)?);
            }
            artifacts.push(Artifact::from_file(
                out,
                SUMMARY_FILE,
                config.experiment.is_sampled(),
            )?);
            let manifest = manifest(config, wall, if summary.passed { "pass" } else { "fail" }, artifacts);
            write_json(&out.join(MANIFEST_FILE), &manifest)?;
            Ok(RunOutcome { summary, manifest })
        }
        Err(e) => {
            write_json(&out.join(ERROR_FILE), &e.to_json())?;
            let artifacts = vec![Artifact::from_file(out, ERROR_FILE, false)?];
            write_json(&out.join(MANIFEST_FILE), &manifest(config, wall, "error", artifacts))?;
            Err(e)
        }
    }
}

fn manifest(config: &ExperimentConfig, wall: f64, status: &str, artifacts: Vec<Artifact>) -> Manifest {
    Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        experiment: config.experiment.as_str().into(),
        seed: config.seed,
        threads: rayon::current_num_threads(),
        config: serde_json::to_value(config).expect("config serialises"),
        wall_time_seconds: wall,
        status: status.into(),
        artifacts,
    }
}

fn run_inner(config: &ExperimentConfig, out: &Path) -> Result<(Summary, Outputs), CliError> {
    let mut summary = Summary::new(config.experiment.as_str());
    let mut outputs = Outputs { files: Vec::new() };
    match config.experiment {
        ExperimentName::RiccatiValidate => riccati_validate(config, out, &mut summary, &mut outputs)?,
        ExperimentName::AnosovBaseline => anosov_baseline(config, out, &mut summary, &mut outputs)?,
        ExperimentName::CornerDemo => corner_demo(config, out, &mut summary, &mut outputs)?,
        ExperimentName::LambdaEllSweep => lambda_ell_sweep(config, out, &mut summary, &mut outputs)?,
        ExperimentName::SpectrumReport => spectrum_report(config, out, &mut summary, &mut outputs)?,
    }
    Ok((summary, outputs))
}

/// `k` for the constant-curvature models.
fn constant_k(model: &SurfaceModel) -> Option<f64> {
    match model {
        SurfaceModel::ConstantNegative { k } | SurfaceModel::OctagonHyperbolic { k } => Some(*k),
        _ => None,
    }
}

fn default_state(model: &SurfaceModel) -> UnitTangentState {
    match model {
        SurfaceModel::ConstantNegative { .. } => UnitTangentState::new([0.0, 1.0], 0.0),
        SurfaceModel::OctagonHyperbolic { .. } => UnitTangentState::new([0.0, 0.0], 0.3),
        // the waist circle stays in the chart for all time
        SurfaceModel::CollarProfile { .. } => UnitTangentState::new([0.0, 0.0], FRAC_PI_2),
        SurfaceModel::CurvatureSignal { .. } => UnitTangentState::on_signal(0.0),
    }
}

fn suspension(config: &ExperimentConfig) -> SuspensionModel {
    config
        .suspension
        .clone()
        .unwrap_or_else(SuspensionModel::calibrated_two_shift)
}

fn max_abs_error(t: &[f64], u: &[f64], exact: impl Fn(f64) -> f64) -> f64 {
    t.iter()
        .zip(u)
        .map(|(&t, &u)| (u - exact(t)).abs())
        .fold(0.0, f64::max)
}

/// Largest deviation from a closed-form Riccati solution `exact` started
/// at `exact(0)` under constant curvature `k`.
fn closed_form_error(k: f64, exact: &dyn Fn(f64) -> f64, span: f64, dt: f64) -> Result<f64, CliError> {
    let tr = riccati_integrate(&ConstantHistory(k), exact(0.0), 0.0, span, dt).map_err(numeric)?;
    Ok(max_abs_error(&tr.t, &tr.u, exact))
}

fn riccati_validate(
    config: &ExperimentConfig,
    out: &Path,
    summary: &mut Summary,
    outputs: &mut Outputs,
) -> Result<(), CliError> {
    let p = &config.params;
    let model = config
        .model
        .clone()
        .unwrap_or(SurfaceModel::ConstantNegative { k: 1.0 });
    let v0 = default_state(&model);
    let burn = 20.0 / model.max_negative_curvature().max(1e-3).sqrt();
    let opts = RiccatiOptions {
        burn_in: Some(burn),
        ..RiccatiOptions::default()
    };
    let history = orbit_history(&model, &v0, -(burn + 1.0), p.horizon + 1.0, p.dt).map_err(numeric)?;
    let trace = unstable_riccati(&history, (0.0, p.horizon), p.dt, &opts).map_err(numeric)?;
    trace.write_csv(&out.join("riccati_trace.csv")).map_err(io)?;
    outputs.add("riccati_trace.csv", false);

    let phi = trace.phi_u();
    let phi_max = phi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    summary.check(Assertion::at_most("phi_u_nonpositive", phi_max, 0.0));
    let est = exponent_estimate(&model, &v0, p.horizon, p.dt, &opts).map_err(numeric)?;
    summary.scalar("chi_plus", est.chi_plus);
    if let Some(m) = est.chi_minus {
        summary.scalar("chi_minus", m);
    }
    summary.check(Assertion::at_most(
        "chi_below_curvature_scale",
        est.chi_plus - est.curvature_scale,
        p.exponent_tolerance,
    ));
    if let Some(k) = constant_k(&model) {
        let dev = phi.iter().map(|x| (x + k).abs()).fold(0.0, f64::max);
        summary.check(Assertion::within("phi_u_equals_minus_k", dev, p.tolerance));
        summary.check(Assertion::within("chi_equals_k", est.chi_plus - k, p.exponent_tolerance));
        if let Some(m) = est.chi_minus {
            summary.check(Assertion::within("chi_minus_equals_k", m - k, p.exponent_tolerance));
        }
    }

    // closed forms: u = k tanh(k (t + 1/2)) under K = -k^2, u = 1/(t + 1) under K = 0
    let k = constant_k(&model).unwrap_or(1.0);
    let tanh = move |t: f64| k * (k * (t + 0.5)).tanh();
    let inverse = |t: f64| 1.0 / (t + 1.0);
    let cases: [(&str, f64, &dyn Fn(f64) -> f64); 2] =
        [("tanh", -k * k, &tanh), ("inverse", 0.0, &inverse)];
    let mut rows = Vec::new();
    for (name, kc, exact) in cases {
        let err = closed_form_error(kc, exact, p.span, p.dt)?;
        summary.scalar(format!("{name}_closed_form_error"), err);
        summary.check(Assertion::within(format!("{name}_closed_form"), err, p.tolerance));
        let coarse = closed_form_error(kc, exact, p.span, p.order_dt)?;
        let fine = closed_form_error(kc, exact, p.span, p.order_dt / 2.0)?;
        let ratio = coarse / fine;
        summary.scalar(format!("{name}_order_ratio"), ratio);
        // fourth order: log2 of the ratio within 1/4 of 4
        summary.check(Assertion::within(format!("{name}_fourth_order"), ratio.log2() - 4.0, 0.25));
        rows.push(vec![p.order_dt, coarse, fine, ratio]);
    }
    write_rows(
        &out.join("riccati_order.csv"),
        &["dt", "error_dt", "error_half_dt", "ratio"],
        &rows,
    )?;
    outputs.add("riccati_order.csv", false);
    Ok(())
}

fn anosov_baseline(
    config: &ExperimentConfig,
    out: &Path,
    summary: &mut Summary,
    outputs: &mut Outputs,
) -> Result<(), CliError> {
    let p = &config.params;
    let model = config
        .model
        .clone()
        .unwrap_or(SurfaceModel::OctagonHyperbolic { k: 1.0 });
    let opts = EnsembleOptions {
        dt: p.dt,
        ..EnsembleOptions::default()
    };
    let ens = ensemble_sample(&model, p.n_seeds, p.horizon, config.seed, &opts).map_err(numeric)?;
    ens.write_csv(&out.join("ensemble.csv")).map_err(io)?;
    outputs.add("ensemble.csv", true);
    write_json(&out.join("ensemble_summary.json"), &ens.summary_json())?;
    outputs.add("ensemble_summary.json", true);

    let failures = ens.seeds.iter().filter(|s| s.failure.is_some()).count();
    summary.scalar("failures", failures as f64);
    summary.scalar("chi_min", ens.min);
    summary.scalar("chi_max", ens.max);
    summary.check(Assertion::holds("seeds_completed", failures < ens.seeds.len()));
    summary.check(Assertion::at_most("chi_nonnegative", -ens.min, p.exponent_tolerance));
    if let Some(k) = constant_k(&model) {
        summary.check(Assertion::at_most("no_failed_seeds", failures as f64, 0.0));
        let mut dev = 0.0f64;
        for e in ens.seeds.iter().filter_map(|s| s.estimate.as_ref()) {
            dev = dev.max((e.chi_plus - k).abs());
            if let Some(m) = e.chi_minus {
                dev = dev.max((m - k).abs());
            }
        }
        summary.check(Assertion::within("chi_equals_k_all_seeds", dev, p.exponent_tolerance));
    }
    if let SurfaceModel::OctagonHyperbolic { k } = model {
        let tau = octagon::translation_length() / k;
        let axis = integrate_geodesic(&model, &UnitTangentState::new([0.0, 0.0], 0.0), tau, p.dt)
            .map_err(numeric)?;
        let c = closed_orbit_exponent(&axis).map_err(numeric)?;
        summary.scalar("axis_exponent", c.exponent);
        summary.check(Assertion::within("axis_exponent_equals_k", c.exponent - k, p.exponent_tolerance));
        summary.check(Assertion::within(
            "axis_schwarz_saturated",
            c.schwarz_bound - c.exponent,
            p.exponent_tolerance,
        ));
        write_json(
            &out.join("closed_orbit.json"),
            &serde_json::json!({
                "period": c.period,
                "exponent": c.exponent,
                "schwarz_bound": c.schwarz_bound,
                "mean_curvature": c.mean_curvature,
            }),
        )?;
        outputs.add("closed_orbit.json", false);
    }
    Ok(())
}

/// `P(q) = log(sum_i exp(q phi_i)) / r` for a full shift with constant
/// roof `r`; returns `(P, P')`.
fn full_shift_closed_form(s: &SuspensionModel) -> Option<impl Fn(f64) -> (f64, f64) + '_> {
    let full = s.sft().matrix().iter().all(|row| row.iter().all(|&x| x == 1));
    let r = s.roof()[0];
    let constant_roof = s.roof().iter().all(|&x| x == r);
    if !(full && constant_roof) {
        return None;
    }
    Some(move |q: f64| {
        let m = s.potential().iter().fold(f64::NEG_INFINITY, |a, &x| a.max(q * x));
        let w: Vec<f64> = s.potential().iter().map(|&x| (q * x - m).exp()).collect();
        let z: f64 = w.iter().sum();
        let dz: f64 = w.iter().zip(s.potential()).map(|(w, x)| w * x).sum();
        ((m + z.ln()) / r, dz / z / r)
    })
}

fn pressure_artifacts<S: PressureSource>(
    source: &S,
    p: &Params,
    out: &Path,
    outputs: &mut Outputs,
) -> Result<(PressureCurve, SpectrumResult), CliError> {
    let curve = sample_pressure_curve(source, p.q_min, p.q_max, p.q_step).map_err(numeric)?;
    write_curve_csv(&out.join("pressure_curve.csv"), &curve).map_err(io)?;
    outputs.add("pressure_curve.csv", false);
    let grid = AlphaGrid {
        points: p.alpha_points,
        ..AlphaGrid::default()
    };
    let spectrum = legendre_conjugate_with_source(&curve, source, &grid).map_err(numeric)?;
    write_spectrum_csv(&out.join("spectrum.csv"), &spectrum).map_err(io)?;
    outputs.add("spectrum.csv", false);
    Ok((curve, spectrum))
}

fn corner_demo(
    config: &ExperimentConfig,
    out: &Path,
    summary: &mut Summary,
    outputs: &mut Outputs,
) -> Result<(), CliError> {
    let p = &config.params;
    let basic = suspension(config);
    let source = ZeroUnion(&basic);
    let (curve, spectrum) = pressure_artifacts(&source, p, out, outputs)?;
    if !(p.q_min < -4.0 * p.q_step && p.q_max > 1.0 + 4.0 * p.q_step) {
        return Err(CliError::Config("corner-demo needs q = 1 inside the q grid".into()));
    }
    let corner = detect_corner(&curve, 1.0).map_err(numeric)?;
    write_json(&out.join("corner.json"), &corner)?;
    outputs.add("corner.json", false);

    let p1 = basic.flow_pressure(1.0).map_err(numeric)?;
    summary.scalar("basic_pressure_at_1", p1);
    summary.check(Assertion::within("calibrated_pressure_zero_at_1", p1, p.tolerance));
    let flat_tail = curve
        .q
        .iter()
        .zip(&curve.p)
        .filter(|(q, _)| **q >= 1.0 - 1e-12)
        .map(|(_, v)| v.abs())
        .fold(0.0, f64::max);
    summary.check(Assertion::within("pressure_zero_for_q_ge_1", flat_tail, p.tolerance));
    summary.check(Assertion::holds("corner_detected_at_1", corner.is_corner));
    summary.scalar("d_left", corner.d_left);
    summary.scalar("d_right", corner.d_right);
    summary.check(Assertion::within("d_right_zero", corner.d_right, p.slope_tolerance));

    // closed-form comparison where available; the derivative at q = 1 from
    // the left gives alpha_1, the derivative at 0 gives alpha_0
    let Some(closed) = full_shift_closed_form(&basic) else {
        return Ok(());
    };
    let curve_err = curve
        .q
        .iter()
        .zip(&curve.p)
        .map(|(&q, &v)| (v - closed(q).0.max(0.0)).abs())
        .fold(0.0, f64::max);
    summary.scalar("pressure_closed_form_error", curve_err);
    summary.check(Assertion::within("pressure_matches_closed_form", curve_err, p.tolerance));
    let alpha1 = -closed(1.0).1;
    summary.scalar("alpha_1", alpha1);
    summary.check(Assertion::within("d_left_closed_form", corner.d_left + alpha1, p.slope_tolerance));

    let mut rows = Vec::new();
    let mut dev = 0.0f64;
    for r in spectrum.stable_rows().filter(|r| r.alpha >= 0.01 && r.alpha <= alpha1) {
        dev = dev.max((r.e - r.alpha).abs());
        rows.push(vec![r.alpha, r.e, r.e - r.alpha]);
    }
    write_rows(&out.join("e_alpha_table.csv"), &["alpha", "E", "E_minus_alpha"], &rows)?;
    outputs.add("e_alpha_table.csv", false);
    summary.check(Assertion::holds("e_alpha_table_nonempty", !rows.is_empty()));
    summary.check(Assertion::within("e_equals_alpha_below_alpha_1", dev, p.spectrum_tolerance));

    let (p0, dp0) = closed(0.0);
    let alpha0 = -dp0;
    let e0 = conjugate_at(&curve, Some(&source), alpha0).e;
    summary.scalar("alpha_0", alpha0);
    summary.scalar("e_alpha_0", e0);
    summary.check(Assertion::within("e_alpha_0_equals_top_entropy", e0 - p0, p.spectrum_tolerance));
    Ok(())
}

fn lambda_ell_sweep(
    config: &ExperimentConfig,
    out: &Path,
    summary: &mut Summary,
    outputs: &mut Outputs,
) -> Result<(), CliError> {
    let p = &config.params;
    let model = match &config.model {
        Some(m) => m.clone(),
        None => SurfaceModel::collar(
            WarpProfile::FlatBand {
                radius: 1.0,
                half_width: 0.5,
                a: 1.0,
            },
            3.0,
        )
        .map_err(numeric)?,
    };
    let library = match &model {
        SurfaceModel::CollarProfile {
            warp: WarpProfile::FlatBand { .. },
            ..
        } => mixed_flat_band_library(&model, p.dt).map_err(numeric)?,
        SurfaceModel::OctagonHyperbolic { k } => octagon_library(&model, *k, config, out, summary, outputs)?,
        _ => {
            return Err(CliError::Config(
                "lambda-ell-sweep needs a flat-band collar or an octagon model".into(),
            ))
        }
    };
    library.save_json(&out.join("library.json")).map_err(io)?;
    outputs.add("library.json", false);

    for o in &library.orbits {
        summary.check(Assertion::at_most(
            format!("schwarz_{}", o.label),
            o.exponent - o.schwarz_bound,
            p.tolerance,
        ));
    }
    let th = FlatThresholds::from_library(&library);
    let flat_labels: Vec<&str> = library
        .orbits
        .iter()
        .filter(|o| {
            o.path
                .samples
                .iter()
                .zip(&o.unstable_u)
                .any(|(s, &u)| s.curvature.abs() < th.kappa_flat && u < th.u_flat)
        })
        .map(|o| o.label.as_str())
        .collect();
    summary.scalar("flat_orbits", flat_labels.len() as f64);

    let mut ells = p.ells.clone();
    ells.sort_unstable();
    ells.dedup();
    let filtered: Vec<OrbitLibrary> = ells
        .par_iter()
        .map(|&ell| build_lambda_ell(&library, ell, Some(th)))
        .collect();
    let mut w = csv::Writer::from_path(out.join("lambda_ell.csv")).map_err(io)?;
    w.write_record(["ell", "radius", "kept", "labels"]).map_err(io)?;
    let mut nested = true;
    let mut flat_kept = 0usize;
    for (i, (ell, f)) in ells.iter().zip(&filtered).enumerate() {
        let labels = f.labels();
        w.write_record([
            ell.to_string(),
            (1.0 / *ell as f64).to_string(),
            labels.len().to_string(),
            labels.join(";"),
        ])
        .map_err(io)?;
        if i > 0 {
            nested &= filtered[i - 1].labels().iter().all(|l| labels.contains(l));
        }
        flat_kept += labels.iter().filter(|l| flat_labels.contains(l)).count();
    }
    w.flush().map_err(io)?;
    outputs.add("lambda_ell.csv", false);
    summary.check(Assertion::holds("lambda_ell_nested", nested));
    summary.check(Assertion::at_most("flat_orbits_excluded", flat_kept as f64, 0.0));
    if let Some(last) = filtered.last() {
        summary.scalar("kept_at_largest_ell", last.len() as f64);
    }
    Ok(())
}

/// The two axes through the octagon centre, optionally with their bridge
/// and its section coding.
fn octagon_library(
    model: &SurfaceModel,
    k: f64,
    config: &ExperimentConfig,
    out: &Path,
    summary: &mut Summary,
    outputs: &mut Outputs,
) -> Result<OrbitLibrary, CliError> {
    let p = &config.params;
    let tau = octagon::translation_length() / k;
    let a = integrate_geodesic(model, &UnitTangentState::new([0.0, 0.0], 0.0), tau, p.dt).map_err(numeric)?;
    let b = integrate_geodesic(model, &UnitTangentState::new([0.0, 0.0], FRAC_PI_4), tau, p.dt)
        .map_err(numeric)?;
    let mut lib = OrbitLibrary::new();
    lib.insert_path("A", a.clone(), Provenance::direct()).map_err(numeric)?;
    lib.insert_path("B", b.clone(), Provenance::direct()).map_err(numeric)?;
    if !p.bridge {
        return Ok(lib);
    }
    let po = bridge_orbits(model, &a, &b, &BridgeOptions::default()).map_err(numeric)?;
    let r = refine_closed_orbit(model, &po, &RefineOptions::default()).map_err(numeric)?;
    summary.scalar("bridge_residual", r.residual);
    summary.scalar("bridge_shadow_distance", r.shadow_distance);
    summary.check(Assertion::at_most(
        "bridge_shadows_legs",
        r.shadow_distance,
        RefineOptions::default().epsilon,
    ));
    lib.insert_path(
        "bridge",
        r.path,
        Provenance {
            method: "bridge".into(),
            iterations: r.iterations,
            residual: r.residual,
            shadow_distance: Some(r.shadow_distance),
        },
    )
    .map_err(numeric)?;
    let section = Section {
        center: UnitTangentState::new([0.0, 0.0], FRAC_PI_8),
        radius: 0.5,
    };
    let opts = CodingOptions {
        level: p.level,
        ..CodingOptions::default()
    };
    let coding = build_markov_coding(model, &lib, &section, &opts).map_err(numeric)?;
    coding.save_json(&out.join("coding.json")).map_err(io)?;
    outputs.add("coding.json", false);
    summary.check(Assertion::holds("coding_itineraries_unique", coding.itineraries_unique()));
    if p.level == 0 {
        summary.check(Assertion::holds(
            "coding_strongly_connected",
            coding.is_strongly_connected(),
        ));
        let p0 = coding
            .to_suspension()
            .and_then(|s| Ok(s.flow_pressure(0.0)?))
            .map_err(numeric)?;
        summary.scalar("coding_pressure_at_0", p0);
        summary.check(Assertion::holds("coding_entropy_positive", p0 > 0.0));
    }
    Ok(lib)
}

fn spectrum_report(
    config: &ExperimentConfig,
    out: &Path,
    summary: &mut Summary,
    outputs: &mut Outputs,
) -> Result<(), CliError> {
    let p = &config.params;
    let model = suspension(config);
    let sweep = p
        .sweep_q
        .par_iter()
        .map(|&q| equilibrium_stats(&model, q))
        .collect::<Result<Vec<_>, _>>()
        .map_err(numeric)?;
    write_sweep_csv(&out.join("sweep.csv"), &sweep).map_err(io)?;
    outputs.add("sweep.csv", false);
    let (curve, spectrum) = pressure_artifacts(&model, p, out, outputs)?;

    let dev = sweep
        .iter()
        .map(|s| (conjugate_at(&curve, Some(&model), s.exponent).e - s.entropy).abs())
        .fold(0.0, f64::max);
    summary.scalar("max_conjugate_entropy_gap", dev);
    summary.check(Assertion::within("conjugate_equals_entropy", dev, p.tolerance));

    let stable: Vec<_> = spectrum.stable_rows().collect();
    let dim_dev = stable
        .iter()
        .map(|r| (r.dim - (1.0 + 2.0 * r.e / r.alpha)).abs())
        .fold(0.0, f64::max);
    summary.check(Assertion::within("dimension_formula", dim_dev, p.tolerance));
    let d_min = stable.iter().map(|r| r.d).fold(f64::INFINITY, f64::min);
    let d_max = stable.iter().map(|r| r.d).fold(f64::NEG_INFINITY, f64::max);
    summary.scalar("d_min", d_min);
    summary.scalar("d_max", d_max);
    summary.check(Assertion::at_most("d_nonnegative", -d_min, 1e-6));
    let p1 = model.flow_pressure(1.0).map_err(numeric)?;
    if p1 <= p.tolerance {
        summary.check(Assertion::at_most("d_at_most_one", d_max - 1.0, 1e-6));
    }

    let range = exponent_range(&curve).map_err(numeric)?;
    summary.scalar("chi_lower", range.lower);
    summary.scalar("chi_upper", range.upper);
    let sft = model.sft();
    if (0..sft.size()).all(|i| sft.allowed(i, i)) {
        let per_symbol: Vec<f64> = model
            .potential()
            .iter()
            .zip(model.roof())
            .map(|(x, r)| -x / r)
            .collect();
        let lo = per_symbol.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = per_symbol.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        summary.check(Assertion::within("chi_lower_matches", range.lower - lo, p.slope_tolerance));
        summary.check(Assertion::within("chi_upper_matches", range.upper - hi, p.slope_tolerance));
    }
    Ok(())
}
