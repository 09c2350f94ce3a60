//! The experiment runners behind the six subcommands.

use rayon::prelude::*;
use serde_json::{json, Value};

use sqdistill_core::fock::{self, c, State, TruncationReport, DEFAULT_DIM, GUARD_BAND, TAIL_TOL};
use sqdistill_core::gaussian::{self, DIM_CAP};
use sqdistill_core::gaussification::{self, GaussifyOptions, GaussifyRun, SqueezePrediction};
use sqdistill_core::purification;
use sqdistill_core::subtraction::{self, SubtractionParams};
use sqdistill_core::two_mode;
use sqdistill_core::{DistillationConfig, Error as CoreError};

use crate::emit::{self, Cell, Table};
use crate::{
    BreedArgs, CliError, CommonArgs, DistillArgs, Format, GaussifyArgs, PurifyArgs, PurifyPath,
    SweepArgs, TwoModeArgs,
};

/// Fully resolved shared parameters for one run.
struct Resolved {
    cfg: DistillationConfig,
    delta_optimal: bool,
    format: Format,
    out: Option<std::path::PathBuf>,
    workers: Option<usize>,
    seed: Option<u64>,
}

/// One-line parameter set used in every error context.
fn params_summary(cfg: &DistillationConfig) -> String {
    let dim = cfg.dim.map_or_else(|| "auto".to_string(), |d| d.to_string());
    format!(
        "r = {}, delta_sq = {}, transmittance = {}, eta = {}, dim = {dim}, max_iters = {}, \
         conv_tol = {}",
        cfg.r, cfg.delta_sq, cfg.transmittance, cfg.eta, cfg.max_iters, cfg.conv_tol
    )
}

/// Merges flags with defaults and validates the physical parameter set.
fn resolve_common(
    args: &CommonArgs,
    command: &str,
    default_format: Format,
) -> Result<Resolved, CliError> {
    let defaults = DistillationConfig::default();
    let r = args.r.unwrap_or(defaults.r);
    let (delta_sq, delta_optimal) = match args.delta_sq.as_deref() {
        None => (defaults.delta_sq, false),
        Some("opt") => {
            let value = subtraction::optimal_delta_sq(r).map_err(|source| CliError::Module {
                context: format!("resolving the optimal offset for {command} at r = {r}"),
                source,
            })?;
            (value, true)
        }
        Some(text) => match text.parse::<f64>() {
            Ok(value) => (value, false),
            Err(_) => {
                return Err(CliError::Config(format!(
                    "--delta-sq must be a number or \"opt\", got {text:?}"
                )))
            }
        },
    };
    let cfg = DistillationConfig {
        r,
        delta_sq,
        transmittance: args.transmittance.unwrap_or(defaults.transmittance),
        eta: args.eta.unwrap_or(defaults.eta),
        target_vy: args.target_vy.or(defaults.target_vy),
        dim: args.dim.or(defaults.dim),
        max_iters: args.max_iters.unwrap_or(defaults.max_iters),
        conv_tol: args.conv_tol.unwrap_or(defaults.conv_tol),
    };
    cfg.validate().map_err(|source| CliError::Module {
        context: format!("validating {command} parameters ({})", params_summary(&cfg)),
        source,
    })?;
    Ok(Resolved {
        cfg,
        delta_optimal,
        format: args.format.unwrap_or(default_format),
        out: args.out.clone(),
        workers: args.workers,
        seed: args.seed,
    })
}

/// Resolved parameters as the JSON `params` block.
fn params_json(resolved: &Resolved, dim_used: Option<usize>) -> Value {
    json!({
        "r": resolved.cfg.r,
        "delta_sq": resolved.cfg.delta_sq,
        "delta_sq_optimal": resolved.delta_optimal,
        "transmittance": resolved.cfg.transmittance,
        "eta": resolved.cfg.eta,
        "target_vy": resolved.cfg.target_vy,
        "dim": dim_used,
        "max_iters": resolved.cfg.max_iters,
        "conv_tol": resolved.cfg.conv_tol,
        "seed": resolved.seed,
    })
}

/// Runs the construction at increasing dimension until truncation-clean.
///
/// An explicit dimension is used as given; otherwise the dimension grows from
/// `start` until the diagnostics come back clean or the hard cap is reached.
fn with_auto_dim<T>(
    explicit: Option<usize>,
    start: usize,
    mut build: impl FnMut(usize) -> Result<(T, TruncationReport), CoreError>,
) -> Result<(T, usize, TruncationReport), CoreError> {
    if let Some(dim) = explicit {
        return build(dim).map(|(value, report)| (value, dim, report));
    }
    let mut dim = start.clamp(3, DIM_CAP);
    loop {
        match build(dim) {
            Ok((value, report)) if report.clean => return Ok((value, dim, report)),
            Ok((_, report)) => {
                if dim >= DIM_CAP {
                    return Err(CoreError::Truncation {
                        dim,
                        suggested: dim + GUARD_BAND,
                        tail_mass: report.tail_mass,
                        tail_tol: report.tail_tol,
                    });
                }
                dim = (dim + 10).min(DIM_CAP);
            }
            Err(CoreError::Truncation { suggested, .. }) if dim < DIM_CAP => {
                dim = suggested.max(dim + 10).min(DIM_CAP);
            }
            Err(e) => return Err(e),
        }
    }
}

/// Purity of a state, exact for pure states.
fn state_purity(state: &State) -> Result<f64, CoreError> {
    match state {
        State::Pure(_) => Ok(1.0),
        State::Mixed(rho) => fock::purity(rho),
    }
}

/// Truncation diagnostics as a JSON block.
fn truncation_json(dim: usize, report: &TruncationReport) -> Value {
    json!({
        "dim": dim,
        "tail_mass": report.tail_mass,
        "guard": report.guard,
        "tail_tol": report.tail_tol,
        "clean": report.clean,
    })
}

/// Cascade run summary as a JSON block.
fn gaussify_summary(run: &GaussifyRun) -> Value {
    json!({
        "steps": run.steps,
        "converged": run.converged,
        "diverged": run.diverged,
        "fitted_r": run.fitted_r,
        "predicted_tanh_r": run.predicted_tanh_r,
        "final_v_x": run.final_variances.0,
        "final_v_y": run.final_variances.1,
        "final_residual": run.final_residual,
        "cumulative_probability": run.cumulative_probability,
        "ln_cumulative_probability": run.ln_cumulative_probability,
    })
}

/// Per-step cascade trace as table rows.
fn trace_rows(run: &GaussifyRun) -> Vec<Vec<Cell>> {
    run.trace
        .iter()
        .map(|row| {
            vec![
                Cell::Int(row.step as u64),
                Cell::Num(row.v_x),
                Cell::Num(row.v_y),
                Cell::Num(row.residual),
                Cell::Num(row.heralding_probability),
            ]
        })
        .collect()
}

const TRACE_COLUMNS: [&str; 5] = ["step", "v_x", "v_y", "residual", "heralding_probability"];

/// Distills a squeezed vacuum and cross-checks the closed forms numerically.
pub fn distill(args: &DistillArgs) -> Result<(), CliError> {
    let resolved = resolve_common(&args.common, "distill", Format::Json)?;
    let cfg = resolved.cfg.clone();
    let module = |source: CoreError| CliError::Module {
        context: format!("distill ({})", params_summary(&cfg)),
        source,
    };

    let input_v_x = (2.0 * cfg.r).exp();
    let input_v_y = (-2.0 * cfg.r).exp();
    let (analytic_v_x, analytic_v_y) =
        subtraction::subtracted_variances(cfg.r, cfg.delta_sq).map_err(&module)?;

    let start = gaussian::clean_dim_for_squeeze(cfg.r).max(DEFAULT_DIM);
    let ((state, weight, numeric_v_x, numeric_v_y), dim, trunc) =
        with_auto_dim(cfg.dim, start, |dim| {
            let psi = gaussian::squeezed_vacuum(cfg.r, dim)?;
            let op = subtraction::subtraction_operator(cfg.delta_sq, dim)?;
            let (state, weight) = State::Pure(psi).apply_conditional(&op)?;
            let report = state.truncation_report(GUARD_BAND, TAIL_TOL);
            let variances = gaussian::quadrature_variances(&state)?;
            Ok(((state, weight, variances.v_x, variances.v_y), report))
        })
        .map_err(&module)?;

    let analytic_success =
        subtraction::success_probability(cfg.r, cfg.transmittance, cfg.delta_sq)
            .map_err(&module)?;
    let simulated_success = if cfg.transmittance < 1.0 {
        let params =
            SubtractionParams::new(cfg.delta_sq, cfg.transmittance, cfg.eta).map_err(&module)?;
        let psi = gaussian::squeezed_vacuum(cfg.r, dim).map_err(&module)?;
        let outcome = if cfg.eta < 1.0 {
            subtraction::lossy_tapped_subtraction(&psi, &params, 14).map_err(&module)?
        } else {
            subtraction::tapped_subtraction(&psi, &params).map_err(&module)?
        };
        Some(outcome.success_probability)
    } else {
        None
    };
    let success_deviation = simulated_success.map(|p| (p - analytic_success).abs());

    let squeeze_gain = input_v_y / analytic_v_y;
    let gain_db = 10.0 * squeeze_gain.log10();

    let gauss = args.gaussify.then(|| {
        gaussification::gaussify_iterate(
            &state,
            &GaussifyOptions { max_iters: cfg.max_iters, conv_tol: cfg.conv_tol },
        )
    });

    let mut columns = vec![
        "r",
        "delta_sq",
        "transmittance",
        "eta",
        "input_v_x",
        "input_v_y",
        "analytic_v_x",
        "analytic_v_y",
        "numeric_v_x",
        "numeric_v_y",
        "deviation_v_x",
        "deviation_v_y",
        "subtraction_weight",
        "success_probability_analytic",
        "success_probability_simulated",
        "squeeze_gain",
        "squeeze_gain_db",
        "dim",
        "tail_mass",
    ];
    let mut row = vec![
        Cell::Num(cfg.r),
        Cell::Num(cfg.delta_sq),
        Cell::Num(cfg.transmittance),
        Cell::Num(cfg.eta),
        Cell::Num(input_v_x),
        Cell::Num(input_v_y),
        Cell::Num(analytic_v_x),
        Cell::Num(analytic_v_y),
        Cell::Num(numeric_v_x),
        Cell::Num(numeric_v_y),
        Cell::Num((analytic_v_x - numeric_v_x).abs()),
        Cell::Num((analytic_v_y - numeric_v_y).abs()),
        Cell::Num(weight),
        Cell::Num(analytic_success),
        simulated_success.map_or(Cell::Empty, Cell::Num),
        Cell::Num(squeeze_gain),
        Cell::Num(gain_db),
        Cell::Int(dim as u64),
        Cell::Num(trunc.tail_mass),
    ];
    if let Some(run) = &gauss {
        columns.extend([
            "gaussify_steps",
            "gaussify_converged",
            "gaussify_diverged",
            "gaussify_fitted_r",
            "gaussify_final_v_x",
            "gaussify_final_v_y",
        ]);
        row.extend([
            Cell::Int(run.steps as u64),
            Cell::Flag(run.converged),
            Cell::Flag(run.diverged),
            run.fitted_r.map_or(Cell::Empty, Cell::Num),
            Cell::Num(run.final_variances.0),
            Cell::Num(run.final_variances.1),
        ]);
    }
    let table = Table { columns, rows: vec![row] };

    let report = json!({
        "command": "distill",
        "params": params_json(&resolved, Some(dim)),
        "input_variances": {"v_x": input_v_x, "v_y": input_v_y},
        "analytic_variances": {"v_x": analytic_v_x, "v_y": analytic_v_y},
        "numeric_variances": {"v_x": numeric_v_x, "v_y": numeric_v_y},
        "variance_deviation": {
            "v_x": (analytic_v_x - numeric_v_x).abs(),
            "v_y": (analytic_v_y - numeric_v_y).abs(),
        },
        "subtraction_weight": weight,
        "success_probability": {
            "analytic": analytic_success,
            "simulated": simulated_success,
            "deviation": success_deviation,
        },
        "squeeze_gain": {"factor": squeeze_gain, "db": gain_db},
        "truncation": truncation_json(dim, &trunc),
        "gaussification": gauss.as_ref().map(gaussify_summary),
    });
    emit::emit(&table, &report, resolved.format, resolved.out.as_deref())
}

/// Builds the target-variance grid from the explicit list or linear-grid flags.
fn build_targets(args: &SweepArgs, cfg: &DistillationConfig) -> Result<Vec<f64>, CliError> {
    if let Some(list) = &args.targets {
        return Ok(list.clone());
    }
    match (args.target_start, args.target_stop, args.target_count) {
        (Some(start), Some(stop), Some(count)) => {
            let mut grid = Vec::with_capacity(count);
            for i in 0..count {
                let frac = if count > 1 { i as f64 / (count - 1) as f64 } else { 0.0 };
                grid.push(start + (stop - start) * frac);
            }
            Ok(grid)
        }
        (None, None, None) => match cfg.target_vy {
            Some(single) => Ok(vec![single]),
            None => Err(CliError::Config(
                "optimize-sweep needs --targets, a --target-start/--target-stop/--target-count \
                 grid, or --target-vy"
                    .into(),
            )),
        },
        _ => Err(CliError::Config(
            "--target-start, --target-stop, and --target-count must be given together".into(),
        )),
    }
}

const SWEEP_COLUMNS: [&str; 6] =
    ["V_Y_target", "P_succ*", "T*", "delta_sq*", "alpha_sq*", "status"];

/// Maximizes the heralded success probability over a grid of target variances.
pub fn optimize_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let resolved = resolve_common(&args.common, "optimize-sweep", Format::Csv)?;
    let cfg = resolved.cfg.clone();
    let targets = build_targets(args, &cfg)?;
    let input_v_y = (-2.0 * cfg.r).exp();
    for &target in &targets {
        if !target.is_finite() || target <= 0.0 || target >= input_v_y {
            return Err(CliError::Config(format!(
                "target variance {target} must lie strictly inside (0, {input_v_y}), the input \
                 variance at r = {}",
                cfg.r
            )));
        }
    }

    let evaluate = |target: f64| -> Result<Vec<Cell>, CliError> {
        match subtraction::optimize_success(cfg.r, target) {
            Ok(o) => Ok(vec![
                Cell::Num(target),
                Cell::Num(o.success_probability),
                Cell::Num(o.transmittance),
                Cell::Num(o.delta_sq),
                Cell::Num(o.alpha_sq),
                Cell::Text("ok".into()),
            ]),
            Err(CoreError::UnreachableTarget { .. }) => Ok(vec![
                Cell::Num(target),
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Text("unreachable".into()),
            ]),
            Err(source) => Err(CliError::Module {
                context: format!(
                    "optimize-sweep at target_vy = {target} ({})",
                    params_summary(&cfg)
                ),
                source,
            }),
        }
    };
    let rows: Vec<Vec<Cell>> = match resolved.workers {
        Some(n) if n > 0 => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(|e| {
                CliError::Config(format!("cannot build a {n}-worker pool: {e}"))
            })?;
            pool.install(|| targets.par_iter().map(|&t| evaluate(t)).collect::<Result<_, _>>())?
        }
        _ => targets.iter().map(|&t| evaluate(t)).collect::<Result<_, _>>()?,
    };
    let table = Table { columns: SWEEP_COLUMNS.to_vec(), rows };
    let report = json!({
        "command": "optimize-sweep",
        "params": params_json(&resolved, None),
        "input_v_y": input_v_y,
        "rows": table.rows_as_json(),
    });
    emit::emit(&table, &report, resolved.format, resolved.out.as_deref())
}

/// Gaussifies the subtracted state and emits the per-step trace.
pub fn gaussify(args: &GaussifyArgs) -> Result<(), CliError> {
    let resolved = resolve_common(&args.common, "gaussify", Format::Csv)?;
    let cfg = resolved.cfg.clone();
    let module = |source: CoreError| CliError::Module {
        context: format!("gaussify ({})", params_summary(&cfg)),
        source,
    };

    let start = gaussian::clean_dim_for_squeeze(cfg.r).max(DEFAULT_DIM);
    let ((state, weight), dim, trunc) = with_auto_dim(cfg.dim, start, |dim| {
        let psi = gaussian::squeezed_vacuum(cfg.r, dim)?;
        let op = subtraction::subtraction_operator(cfg.delta_sq, dim)?;
        let (state, weight) = State::Pure(psi).apply_conditional(&op)?;
        let report = state.truncation_report(GUARD_BAND, TAIL_TOL);
        Ok(((state, weight), report))
    })
    .map_err(&module)?;

    let run = gaussification::gaussify_iterate(
        &state,
        &GaussifyOptions { max_iters: cfg.max_iters, conv_tol: cfg.conv_tol },
    );
    let prediction = match gaussification::gaussified_squeeze(cfg.r, cfg.delta_sq)
        .map_err(&module)?
    {
        SqueezePrediction::Converges { r_g } => {
            json!({"converges": true, "r_g": r_g})
        }
        SqueezePrediction::Diverges { tanh_r_g } => {
            json!({"converges": false, "tanh_r_g": tanh_r_g})
        }
    };

    let table = Table { columns: TRACE_COLUMNS.to_vec(), rows: trace_rows(&run) };
    let report = json!({
        "command": "gaussify",
        "params": params_json(&resolved, Some(dim)),
        "subtraction_weight": weight,
        "closed_form_prediction": prediction,
        "summary": gaussify_summary(&run),
        "trace": table.rows_as_json(),
        "truncation": truncation_json(dim, &trunc),
    });
    emit::emit(&table, &report, resolved.format, resolved.out.as_deref())
}

/// How the purifier's input state is specified.
enum PurifyInput {
    /// Coherent state of the given amplitude.
    Coherent(f64),
    /// Squeezed vacuum sent through a loss channel.
    Lossy { r0: f64, t0: f64 },
}

/// Purifies a mixed input through the Fock filter or plain subtraction.
pub fn purify(args: &PurifyArgs) -> Result<(), CliError> {
    let resolved = resolve_common(&args.common, "purify", Format::Json)?;
    let cfg = resolved.cfg.clone();

    let spec = match (args.alpha, args.vx, args.vy, args.t0) {
        (Some(alpha), None, None, None) => PurifyInput::Coherent(alpha),
        (None, Some(v_x), Some(v_y), None) => {
            let params =
                purification::params_from_variances(v_x, v_y).map_err(|source| {
                    CliError::Module {
                        context: format!("purify input variances ({v_x}, {v_y})"),
                        source,
                    }
                })?;
            PurifyInput::Lossy { r0: params.r0, t0: params.t0 }
        }
        (None, None, None, t0) => PurifyInput::Lossy { r0: cfg.r, t0: t0.unwrap_or(1.0) },
        (None, Some(_), None, _) | (None, None, Some(_), _) => {
            return Err(CliError::Config("--vx and --vy must be given together".into()))
        }
        _ => {
            return Err(CliError::Config(
                "choose one input: --alpha, --vx with --vy, or --r with --t0".into(),
            ))
        }
    };
    let input_label = match &spec {
        PurifyInput::Coherent(alpha) => format!("coherent input alpha = {alpha}"),
        PurifyInput::Lossy { r0, t0 } => format!("lossy squeezed input r0 = {r0}, t0 = {t0}"),
    };
    let module = |source: CoreError| CliError::Module {
        context: format!("purify, {input_label} ({})", params_summary(&cfg)),
        source,
    };

    let start = match &spec {
        PurifyInput::Coherent(_) => DEFAULT_DIM,
        PurifyInput::Lossy { r0, .. } => gaussian::clean_dim_for_squeeze(*r0).max(DEFAULT_DIM),
    };
    let (input, dim, input_trunc) = with_auto_dim(cfg.dim, start, |dim| {
        let state = match &spec {
            PurifyInput::Coherent(alpha) => State::Pure(gaussian::coherent_state(c(*alpha), dim)?),
            PurifyInput::Lossy { r0, t0 } => {
                let psi = gaussian::squeezed_vacuum(*r0, dim)?;
                purification::apply_loss(&State::Pure(psi), *t0)?
            }
        };
        let report = state.truncation_report(GUARD_BAND, TAIL_TOL);
        Ok((state, report))
    })
    .map_err(&module)?;

    let input_report = gaussian::quadrature_variances(&input).map_err(&module)?;
    let v_floor = purification::v_min_bound(input_report.v_x, input_report.v_y).map_err(&module)?;
    let options = GaussifyOptions { max_iters: cfg.max_iters, conv_tol: cfg.conv_tol };

    let path = args.path.unwrap_or(PurifyPath::Filter);
    let (path_name, herald_weight, prediction, run) = match path {
        PurifyPath::Filter => {
            let result = purification::purify_pipeline(&input, &options).map_err(&module)?;
            let prediction = json!({
                "tanh_r": result.predicted_tanh_r,
                "r": result.predicted_r,
                "sigma20_magnitude": result.sigma20_filtered.norm(),
            });
            ("filter", result.filter_weight, prediction, result.run)
        }
        PurifyPath::Subtract => {
            let op = subtraction::subtraction_operator(cfg.delta_sq, dim).map_err(&module)?;
            let (sub, weight) = input.apply_conditional(&op).map_err(&module)?;
            let run = gaussification::gaussify_iterate(&sub, &options);
            ("subtract", weight, Value::Null, run)
        }
    };

    let final_purity = state_purity(run.iterates.last().unwrap()).map_err(&module)?;
    let (final_v_x, final_v_y) = run.final_variances;
    let bound_respected = final_v_y >= v_floor - 1e-9;

    let columns = vec![
        "path",
        "herald_weight",
        "input_v_x",
        "input_v_y",
        "v_min_floor",
        "fitted_r",
        "steps",
        "converged",
        "diverged",
        "final_purity",
        "final_v_x",
        "final_v_y",
        "bound_respected",
        "dim",
    ];
    let row = vec![
        Cell::Text(path_name.into()),
        Cell::Num(herald_weight),
        Cell::Num(input_report.v_x),
        Cell::Num(input_report.v_y),
        Cell::Num(v_floor),
        run.fitted_r.map_or(Cell::Empty, Cell::Num),
        Cell::Int(run.steps as u64),
        Cell::Flag(run.converged),
        Cell::Flag(run.diverged),
        Cell::Num(final_purity),
        Cell::Num(final_v_x),
        Cell::Num(final_v_y),
        Cell::Flag(bound_respected),
        Cell::Int(dim as u64),
    ];
    let trace = Table { columns: TRACE_COLUMNS.to_vec(), rows: trace_rows(&run) };
    let table = Table { columns, rows: vec![row] };

    let report = json!({
        "command": "purify",
        "params": params_json(&resolved, Some(dim)),
        "input": {
            "kind": input_label,
            "v_x": input_report.v_x,
            "v_y": input_report.v_y,
            "v_min_floor": v_floor,
            "tail_mass": input_trunc.tail_mass,
        },
        "path": path_name,
        "herald_weight": herald_weight,
        "prediction": prediction,
        "summary": gaussify_summary(&run),
        "final_purity": final_purity,
        "bound_respected": bound_respected,
        "trace": trace.rows_as_json(),
    });
    emit::emit(&table, &report, resolved.format, resolved.out.as_deref())
}

/// Runs the coincident two-mode subtraction and decouples the kept mode.
pub fn two_mode(args: &TwoModeArgs) -> Result<(), CliError> {
    let resolved = resolve_common(&args.common, "two-mode", Format::Csv)?;
    let cfg = resolved.cfg.clone();
    let module = |source: CoreError| CliError::Module {
        context: format!("two-mode ({})", params_summary(&cfg)),
        source,
    };

    let start = two_mode::clean_dim_for_tmsv(cfg.r).max(DEFAULT_DIM);
    let ((weight, heralding, rho), dim, trunc) = with_auto_dim(cfg.dim, start, |dim| {
        let ladder = two_mode::tmsv_state(cfg.r, dim)?;
        let joint = two_mode::joint_subtract(&ladder)?;
        let tail = joint.state.tail_mass(GUARD_BAND);
        let report = TruncationReport {
            tail_mass: tail,
            guard: GUARD_BAND,
            tail_tol: TAIL_TOL,
            clean: tail < TAIL_TOL,
        };
        let rho = two_mode::decouple_and_reduce(&joint.state)?;
        Ok(((joint.success_probability, joint.heralding, rho), report))
    })
    .map_err(&module)?;

    let purity = fock::purity(&rho).map_err(&module)?;
    let variances = gaussian::quadrature_variances(&State::Mixed(rho)).map_err(&module)?;
    let purity_analytic = two_mode::two_mode_purity_analytic(cfg.r);
    let (v_x_analytic, v_y_analytic) = two_mode::decoupled_variances_analytic(cfg.r);
    let weight_analytic = two_mode::joint_subtract_weight(cfg.r).map_err(&module)?;
    let record = two_mode::compare_single_vs_two_mode(cfg.r).map_err(&module)?;

    let columns = vec![
        "r",
        "lambda",
        "joint_weight",
        "joint_weight_analytic",
        "purity",
        "purity_analytic",
        "v_x",
        "v_y",
        "v_x_analytic",
        "v_y_analytic",
        "single_mode_v_y",
        "input_v_y",
        "dim",
    ];
    let row = vec![
        Cell::Num(cfg.r),
        Cell::Num(cfg.r.tanh()),
        Cell::Num(weight),
        Cell::Num(weight_analytic),
        Cell::Num(purity),
        Cell::Num(purity_analytic),
        Cell::Num(variances.v_x),
        Cell::Num(variances.v_y),
        Cell::Num(v_x_analytic),
        Cell::Num(v_y_analytic),
        Cell::Num(record.single_mode_vy),
        Cell::Num(record.input_vy),
        Cell::Int(dim as u64),
    ];
    let table = Table { columns, rows: vec![row] };

    let report = json!({
        "command": "two-mode",
        "params": params_json(&resolved, Some(dim)),
        "lambda": cfg.r.tanh(),
        "joint_subtraction": {
            "weight": weight,
            "weight_analytic": weight_analytic,
            "heralding": heralding,
        },
        "decoupled_mode": {
            "purity": purity,
            "purity_analytic": purity_analytic,
            "v_x": variances.v_x,
            "v_y": variances.v_y,
            "v_x_analytic": v_x_analytic,
            "v_y_analytic": v_y_analytic,
        },
        "comparison": {
            "single_mode_v_y": record.single_mode_vy,
            "two_mode_v_y": record.two_mode_vy,
            "input_v_y": record.input_vy,
        },
        "truncation": truncation_json(dim, &trunc),
    });
    emit::emit(&table, &report, resolved.format, resolved.out.as_deref())
}

/// Breeds a grid-state approximation and certifies it against the closed form.
pub fn breed(args: &BreedArgs) -> Result<(), CliError> {
    let resolved = resolve_common(&args.common, "breed", Format::Csv)?;
    let cfg = resolved.cfg.clone();
    let x = args.x.unwrap_or(0.0);
    if !x.is_finite() {
        return Err(CliError::Config(format!("--x must be finite, got {x}")));
    }
    let module = |source: CoreError| CliError::Module {
        context: format!("breed (x = {x}, {})", params_summary(&cfg)),
        source,
    };

    let start = gaussian::clean_dim_for_squeeze(cfg.r).max(DEFAULT_DIM);
    let (outcome, dim, trunc) = with_auto_dim(cfg.dim, start, |dim| {
        let outcome = two_mode::breed_gkp(cfg.r, x, dim)?;
        let report = outcome.truncation;
        Ok((outcome, report))
    })
    .map_err(&module)?;

    let target = two_mode::breed_target(cfg.r, x, dim).map_err(&module)?;
    let fidelity_deficit = (1.0 - outcome.state.fidelity_with(&State::Pure(target))).max(0.0);
    let psi = match &outcome.state {
        State::Pure(v) => v.clone(),
        State::Mixed(_) => unreachable!("homodyne heralding keeps the state pure"),
    };
    let cert = two_mode::certify_even_manifold(&psi).map_err(&module)?;
    let xs: Vec<f64> = (-40..=40).map(|i| f64::from(i) * 0.1).collect();
    let fit = two_mode::fit_breeding_waveform(&psi, &xs).map_err(&module)?;
    let envelope_target = (-2.0 * cfg.r).exp();

    let columns = vec![
        "r",
        "x",
        "success_weight",
        "fidelity_deficit",
        "certified_r",
        "manifold_residual",
        "waveform_c",
        "envelope_target",
        "waveform_residual",
        "dim",
    ];
    let row = vec![
        Cell::Num(cfg.r),
        Cell::Num(x),
        Cell::Num(outcome.success_probability),
        Cell::Num(fidelity_deficit),
        Cell::Num(cert.r_prime),
        Cell::Num(cert.residual),
        Cell::Num(fit.c),
        Cell::Num(envelope_target),
        Cell::Num(fit.relative_residual),
        Cell::Int(dim as u64),
    ];
    let table = Table { columns, rows: vec![row] };

    let report = json!({
        "command": "breed",
        "params": params_json(&resolved, Some(dim)),
        "x": x,
        "success_weight": outcome.success_probability,
        "heralding": outcome.heralding,
        "fidelity_deficit": fidelity_deficit,
        "manifold": {
            "certified_r": cert.r_prime,
            "residual": cert.residual,
            "vacuum_magnitude": cert.c0.norm(),
            "two_photon_magnitude": cert.c2.norm(),
        },
        "waveform": {
            "c": fit.c,
            "envelope_target": envelope_target,
            "envelope_deviation": (fit.c - envelope_target).abs(),
            "b0_magnitude": fit.b0.norm(),
            "b2_magnitude": fit.b2.norm(),
            "relative_residual": fit.relative_residual,
        },
        "truncation": truncation_json(dim, &trunc),
    });
    emit::emit(&table, &report, resolved.format, resolved.out.as_deref())
}
