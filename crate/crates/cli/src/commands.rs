//! Subcommand implementations.
//!
//! Each command computes with `chronoslit-core`, writes its data files and
//! a manifest atomically into the output directory, and reports whether
//! every acceptance-grade numerical check it ran stayed within tolerance
//! (`false` maps to exit code 2).

use std::fmt::Write as _;
use std::path::Path;

use chronoslit_core::config::{parse_config, RunConfig};
use chronoslit_core::constraint::{
    constraint_residual_interior, constraint_residual_spectral, energy_support, norm_drift,
    solve_constraint,
};
use chronoslit_core::detection::{histogram_gof, sample_detections, visibility_from_histogram};
use chronoslit_core::experiment::{
    fringe_spacing, intensity_pattern, scan_values, synchrony_mismatch, visibility, EmissionModel,
    ScanParameter,
};
use chronoslit_core::grid::make_grid;
use chronoslit_core::operators::{
    canonical_residual, energy_operator, momentum_operator, position_operator, probe_suite,
    time_operator,
};
use chronoslit_core::{Error, Result};

use crate::output::{e12, write_atomic, Json, Manifest, PhaseTimer};

/// Commutator residual gate for `check-operators`.
pub const RESIDUAL_GATE: f64 = 1e-6;
/// Interior constraint-residual gate for `constraint-demo`.
pub const INTERIOR_RESIDUAL_GATE: f64 = 1e-5;
/// Per-slice norm drift gate for `constraint-demo`.
pub const NORM_DRIFT_GATE: f64 = 1e-10;
/// Negative-energy spectral weight gate for `constraint-demo`.
pub const NEGATIVE_ENERGY_GATE: f64 = 1e-6;
/// Probes per relation in `check-operators`.
pub const PROBE_COUNT: usize = 20;

fn finish(
    out_dir: &Path,
    echo: Vec<(String, String)>,
    seed: u64,
    outputs: Vec<String>,
    mut timer: PhaseTimer,
) -> Result<()> {
    timer.mark("write");
    let manifest = Manifest {
        config_echo: echo,
        seed,
        outputs,
        timing: timer.into_phases(),
    };
    write_atomic(&out_dir.join("manifest.json"), &manifest.to_json().render())?;
    Ok(())
}

/// `check-operators`: canonical-commutator residual table.
pub fn check_operators(n: Option<usize>, out_dir: &Path) -> Result<bool> {
    let sizes: Vec<usize> = match n {
        Some(n) => vec![n],
        None => vec![64, 128, 256],
    };
    let hbar = 1.0;
    let mut timer = PhaseTimer::new();
    timer.mark("parse");

    let mut csv = String::from(
        "# relation: commutator pair; n: grid samples; probe_id: probe index; residual: dimensionless\n",
    );
    csv.push_str("relation,n,probe_id,residual\n");
    let mut all_ok = true;
    for &size in &sizes {
        let grid_t = make_grid(0.0, 1.0, size, true)?;
        let grid_q = make_grid(-0.5, 0.5, size, true)?;
        let t_op = time_operator(&grid_t);
        let s_op = energy_operator(&grid_t, hbar)?;
        let q_op = position_operator(&grid_q);
        let p_op = momentum_operator(&grid_q, hbar)?;
        for (probe_id, probe) in probe_suite(&grid_t, PROBE_COUNT).iter().enumerate() {
            let r = canonical_residual(&t_op, &s_op, -1.0, probe, hbar)?;
            all_ok &= r < RESIDUAL_GATE;
            writeln!(csv, "t_s,{size},{probe_id},{}", e12(r)).expect("write to string");
        }
        for (probe_id, probe) in probe_suite(&grid_q, PROBE_COUNT).iter().enumerate() {
            let r = canonical_residual(&q_op, &p_op, 1.0, probe, hbar)?;
            all_ok &= r < RESIDUAL_GATE;
            writeln!(csv, "q_p,{size},{probe_id},{}", e12(r)).expect("write to string");
        }
    }
    timer.mark("compute");
    write_atomic(&out_dir.join("residuals.csv"), &csv)?;

    let echo = vec![
        ("check_operators.hbar".into(), "1".into()),
        (
            "check_operators.sizes".into(),
            sizes
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(","),
        ),
        ("check_operators.probes".into(), PROBE_COUNT.to_string()),
    ];
    finish(out_dir, echo, 0, vec!["residuals.csv".into()], timer)?;
    Ok(all_ok)
}

/// `constraint-demo`: propagate the configured initial slice and certify it.
pub fn constraint_demo(config_path: &Path, out_dir: &Path) -> Result<bool> {
    let mut timer = PhaseTimer::new();
    let cfg = parse_config(config_path)?;
    let setup = cfg.constraint.clone().ok_or_else(|| {
        Error::Parameter {
            name: "config".into(),
            reason: "constraint-demo needs a [constraint] section".into(),
        }
    })?;
    timer.mark("parse");

    let (hamiltonian, initial) = setup.build()?;
    let solution = solve_constraint(&hamiltonian, &setup.grid_t, &initial)?;
    let interior = constraint_residual_interior(&solution, &hamiltonian)?;
    let drift = norm_drift(&solution);
    let (spectral, negative_weight) = if setup.grid_t.periodic() {
        let spectral = constraint_residual_spectral(&solution, &hamiltonian)?;
        let support = energy_support(&solution, setup.hbar)?;
        let neg = support.negative_weight(1.5 * support.resolution());
        (Some(spectral), Some(neg))
    } else {
        (None, None)
    };
    timer.mark("compute");

    let n_q = setup.grid_q.n();
    let n_t = setup.grid_t.n();
    let mut csv = format!(
        "# |psi(q,t)|: rows q in [{}, {}) n_q={}, cols t in [{}, {}{} n_t={}\n",
        setup.grid_q.lo(),
        setup.grid_q.hi(),
        n_q,
        setup.grid_t.lo(),
        setup.grid_t.hi(),
        if setup.grid_t.periodic() { ")" } else { "]" },
        n_t,
    );
    for j in 0..n_q {
        let row: Vec<String> = (0..n_t)
            .map(|k| e12(solution.amp()[(j, k)].norm()))
            .collect();
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    write_atomic(&out_dir.join("psi_magnitude.csv"), &csv)?;

    let summary = Json::Map(vec![
        ("residual_interior".into(), Json::Num(interior)),
        (
            "residual_spectral".into(),
            spectral.map_or(Json::Null, Json::Num),
        ),
        (
            "negative_energy_weight".into(),
            negative_weight.map_or(Json::Null, Json::Num),
        ),
        ("norm_drift".into(), Json::Num(drift)),
    ]);
    write_atomic(&out_dir.join("summary.json"), &summary.render())?;

    finish(
        out_dir,
        cfg.echo(),
        0,
        vec!["psi_magnitude.csv".into(), "summary.json".into()],
        timer,
    )?;
    let ok = interior < INTERIOR_RESIDUAL_GATE
        && drift < NORM_DRIFT_GATE
        && negative_weight.is_none_or(|w| w < NEGATIVE_ENERGY_GATE);
    Ok(ok)
}

/// Resolve `--emission`, falling back to the file's `[emission]` section for
/// the variant parameters.
fn resolve_emission(cfg: &RunConfig, flag: Option<&str>) -> Result<EmissionModel> {
    use chronoslit_core::experiment::PathId;
    let configured = cfg.emission.clone();
    match flag {
        None => configured.ok_or_else(|| Error::Parameter {
            name: "emission".into(),
            reason: "pass --emission or add an [emission] section".into(),
        }),
        Some("coherent") => match configured {
            Some(e @ EmissionModel::Coherent { .. }) => Ok(e),
            _ => EmissionModel::coherent_weights(0.5, 0.0),
        },
        Some("single:A") => Ok(EmissionModel::Single(PathId::A)),
        Some("single:B") => Ok(EmissionModel::Single(PathId::B)),
        Some("incoherent") => match configured {
            Some(e @ EmissionModel::Incoherent { .. }) => Ok(e),
            _ => EmissionModel::incoherent(0.5, 0.5),
        },
        Some(other) => Err(Error::Parameter {
            name: "emission".into(),
            reason: format!(
                "unknown model `{other}` (expected coherent, single:A, single:B, or incoherent)"
            ),
        }),
    }
}

fn echo_with_emission(cfg: &RunConfig, emission: &EmissionModel) -> Vec<(String, String)> {
    let mut resolved = cfg.clone();
    resolved.emission = Some(emission.clone());
    resolved.echo()
}

/// `run`: screen pattern, summary, and optional Monte Carlo detections.
pub fn run(
    config_path: &Path,
    emission_flag: Option<&str>,
    events: Option<u64>,
    seed: u64,
    out_dir: &Path,
) -> Result<bool> {
    let mut timer = PhaseTimer::new();
    let cfg = parse_config(config_path)?;
    let experiment = cfg.experiment.clone().ok_or_else(|| Error::Parameter {
        name: "config".into(),
        reason: "run needs [experiment] and [screen] sections".into(),
    })?;
    let emission = resolve_emission(&cfg, emission_flag)?;
    timer.mark("parse");

    let pattern = intensity_pattern(&experiment, &emission)?;
    let window = experiment.default_window();
    let vis = visibility(&pattern, window)?;
    let spacing = fringe_spacing(&pattern, window).ok();
    let mismatch = synchrony_mismatch(&experiment, 0.0);

    let sampled = match events {
        None => None,
        Some(n) => {
            let hist = sample_detections(&pattern, n, seed)?;
            let gof = histogram_gof(&hist, &pattern)?;
            let (vis_mc, vis_mc_err) = visibility_from_histogram(&hist, window)?;
            Some((hist, gof, vis_mc, vis_mc_err))
        }
    };
    timer.mark("compute");

    let mut csv = String::from(
        "# x_m: m; intensity, path_A_intensity, path_B_intensity: arbitrary common units; gamma: dimensionless; phase_rad: rad",
    );
    csv.push_str(if sampled.is_some() { "; counts: events\n" } else { "\n" });
    csv.push_str("x_m,intensity,path_A_intensity,path_B_intensity,gamma,phase_rad");
    csv.push_str(if sampled.is_some() { ",counts\n" } else { "\n" });
    for (k, point) in pattern.points().iter().enumerate() {
        let base = format!(
            "{},{},{},{},{},{}",
            e12(point.x),
            e12(point.intensity),
            e12(point.path_a),
            e12(point.path_b),
            e12(point.gamma),
            e12(point.phase),
        );
        csv.push_str(&base);
        if let Some((hist, ..)) = &sampled {
            let _ = write!(csv, ",{}", hist.counts()[k]);
        }
        csv.push('\n');
    }
    write_atomic(&out_dir.join("pattern.csv"), &csv)?;

    let mut summary = vec![
        ("visibility".to_string(), Json::Num(vis)),
        (
            "fringe_spacing_m".to_string(),
            spacing.map_or(Json::Null, Json::Num),
        ),
        (
            "synchrony_mismatch_center_s".to_string(),
            Json::Num(mismatch),
        ),
        ("emission_model".to_string(), Json::Str(emission.label())),
    ];
    if let Some((hist, gof, vis_mc, vis_mc_err)) = &sampled {
        summary.push(("n_events".into(), Json::Int(hist.total())));
        summary.push(("seed".into(), Json::Int(seed)));
        summary.push(("chi2".into(), Json::Num(gof.chi2)));
        summary.push(("p_value".into(), Json::Num(gof.p_value)));
        summary.push(("visibility_mc".into(), Json::Num(*vis_mc)));
        summary.push(("visibility_mc_stderr".into(), Json::Num(*vis_mc_err)));
    }
    write_atomic(&out_dir.join("summary.json"), &Json::Map(summary).render())?;

    let mut echo = echo_with_emission(&cfg, &emission);
    if let Some(n) = events {
        echo.push(("cli.events".into(), n.to_string()));
        echo.push(("cli.seed".into(), seed.to_string()));
    }
    finish(
        out_dir,
        echo,
        seed,
        vec!["pattern.csv".into(), "summary.json".into()],
        timer,
    )?;
    Ok(true)
}

/// `scan`: visibility against one swept parameter.
pub fn scan(
    config_path: &Path,
    emission_flag: Option<&str>,
    param: &str,
    from: f64,
    to: f64,
    steps: usize,
    out_dir: &Path,
) -> Result<bool> {
    let mut timer = PhaseTimer::new();
    let cfg = parse_config(config_path)?;
    let experiment = cfg.experiment.clone().ok_or_else(|| Error::Parameter {
        name: "config".into(),
        reason: "scan needs [experiment] and [screen] sections".into(),
    })?;
    let emission = resolve_emission(&cfg, emission_flag)?;
    let parameter = ScanParameter::parse(param)?;
    let values = scan_values(from, to, steps)?;
    timer.mark("parse");

    let curve = chronoslit_core::experiment::visibility_scan(
        &experiment,
        &emission,
        parameter,
        &values,
    )?;
    timer.mark("compute");

    let unit = match parameter {
        ScanParameter::DeltaT | ScanParameter::PulseSigma => "s",
        ScanParameter::WeightSplit => "dimensionless",
    };
    let mut csv = format!(
        "# param_value: {} ({unit}); visibility: dimensionless\n",
        parameter.name()
    );
    csv.push_str("param_value,visibility\n");
    for point in &curve {
        writeln!(csv, "{},{}", e12(point.value), e12(point.visibility))
            .expect("write to string");
    }
    write_atomic(&out_dir.join("scan.csv"), &csv)?;

    let mut echo = echo_with_emission(&cfg, &emission);
    echo.push(("cli.scan_param".into(), parameter.name().into()));
    echo.push(("cli.scan_from".into(), format!("{from}")));
    echo.push(("cli.scan_to".into(), format!("{to}")));
    echo.push(("cli.scan_steps".into(), steps.to_string()));
    finish(out_dir, echo, 0, vec!["scan.csv".into()], timer)?;
    Ok(true)
}
