//! One function per subcommand: resolve parameters, run the library
//! pipeline, and lay the results out as CSV tables plus a manifest.

use std::path::PathBuf;

use serde_json::{json, Value};

use excitonic::optimize::{BOUND_HALFWIDTH, EVAL_BUDGET, REL_TOL, START_JITTER};
use excitonic::{
    build, diagonalize, emission_report, max_power, power_reading, run_ensemble, sensitivity,
    single_lbfgs_demo, steady_current, sweep_de, sweep_j, sweep_phonon, zero_bias_study,
    Config, EigenBasis, EnergyProblem, GridSpec, GroupProblem, LoadRate, Method, ModelParams,
    Objective, OptRun, PhononAxis, PowerReading, RatePieces, SweepResult,
    FAST_EC_RATE,
};

use crate::artifact::{fnum, RunDir};
use crate::CliError;

/// Resolved invocation context shared by every subcommand.
pub struct Ctx {
    pub config: Config,
    pub config_path: Option<PathBuf>,
    pub config_bytes: Vec<u8>,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub n_override: Option<usize>,
    pub objective_override: Option<Objective>,
}

/// What a command did: where the artifacts went and how many of its
/// independent runs (ensemble members, sweep points) succeeded.
pub struct Outcome {
    pub dir: PathBuf,
    pub succeeded: usize,
    pub total: usize,
}

impl Ctx {
    pub fn params(&self) -> Result<ModelParams, CliError> {
        let mut cfg = self.config.clone();
        if let Some(n) = self.n_override {
            cfg.n_sites = Some(n);
        }
        cfg.into_params().map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn objective(&self) -> Objective {
        self.objective_override
            .or(self.config.objective)
            .unwrap_or(Objective::Power)
    }

    fn run_dir(&self, command: &str, request: Value) -> Result<RunDir, CliError> {
        RunDir::create(
            &self.out_dir,
            command,
            &request,
            self.config_path.as_deref(),
            &self.config_bytes,
            self.seed,
        )
    }
}

fn objective_name(o: Objective) -> &'static str {
    match o {
        Objective::Power => "power",
        Objective::Current => "current",
    }
}

/// CSV column-name suffix carrying the objective's unit (e = hbar = 1).
fn objective_unit(o: Objective) -> &'static str {
    match o {
        Objective::Power => "ev2",
        Objective::Current => "ev",
    }
}

fn parse_grid(what: &str, text: &str) -> Result<Vec<f64>, CliError> {
    GridSpec::parse(text)
        .map(|g| g.values)
        .map_err(|e| CliError::Config(format!("{what}: {e}")))
}

fn basis_of(params: &ModelParams) -> EigenBasis {
    diagonalize(&build(&params.chain))
}

fn state_kind(basis: &EigenBasis, state: usize) -> &'static str {
    let n = basis.n_sites;
    match state {
        s if s < n => "chain",
        s if s == n => "ground",
        s if s == n + 1 => "ec_excited",
        _ => "ec_ground",
    }
}

/// Collective optical weight (sum of site amplitudes, squared) of one
/// eigenstate; exactly zero for the unmixed ground and EC states.
fn collective_weight(basis: &EigenBasis, state: usize) -> f64 {
    let s: f64 = (0..basis.n_sites).map(|j| basis.overlap(state, j)).sum();
    s * s
}

fn eigen_table(basis: &EigenBasis) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header = vec![
        "state".to_string(),
        "kind".to_string(),
        "energy_ev".to_string(),
        "participation_ratio".to_string(),
        "brightness".to_string(),
    ];
    for j in 1..=basis.n_sites {
        header.push(format!("amp_site_{j}"));
    }
    header.extend(["amp_ground".to_string(), "amp_ec_excited".to_string(), "amp_ec_ground".to_string()]);

    let rows = (0..basis.dim())
        .map(|s| {
            let mut row = vec![
                s.to_string(),
                state_kind(basis, s).to_string(),
                fnum(basis.energies[s]),
                fnum(basis.participation_ratio(s)),
                fnum(collective_weight(basis, s)),
            ];
            row.extend((0..basis.dim()).map(|i| fnum(basis.overlap(s, i))));
            row
        })
        .collect();
    (header, rows)
}

fn write_eigen_csv(run: &mut RunDir, name: &str, basis: &EigenBasis) -> Result<(), CliError> {
    let (header, rows) = eigen_table(basis);
    let refs: Vec<&str> = header.iter().map(String::as_str).collect();
    run.write_csv(name, &refs, &rows)
}

/// The power figure at the configured load: pinned if the config pins it,
/// otherwise maximized over the load rate.
fn resolved_reading(params: &ModelParams, basis: &EigenBasis) -> Result<PowerReading, CliError> {
    let pieces = RatePieces::new(params, basis);
    match params.load_rate {
        LoadRate::Pinned(g) => power_reading(params, basis, &pieces, g),
        LoadRate::Optimized => max_power(params, basis, &pieces),
    }
    .map_err(|e| CliError::Runtime(e.to_string()))
}

pub fn steady_state(ctx: &Ctx) -> Result<Outcome, CliError> {
    let params = ctx.params()?;
    let objective = ctx.objective();
    let basis = basis_of(&params);

    let request = json!({
        "n_sites": params.n_sites(),
        "objective": objective_name(objective),
    });
    let mut run = ctx.run_dir("steady-state", request)?;

    let (reading, current, metadata) = match objective {
        Objective::Power => {
            let r = resolved_reading(&params, &basis)?;
            let meta = json!({
                "load_rate_source": match params.load_rate {
                    LoadRate::Pinned(_) => "pinned",
                    LoadRate::Optimized => "power_optimal",
                },
                "load_search_relative_bracket": 1e-4,
            });
            (r, None, meta)
        }
        Objective::Current => {
            // fast irreversible contacts; populations taken from the same
            // stationary state the current figure is computed in
            let i = steady_current(&params, &basis).map_err(|e| CliError::Runtime(e.to_string()))?;
            let cm = params.current_mode(FAST_EC_RATE);
            let pieces = RatePieces::new(&cm, &basis);
            let r = power_reading(&cm, &basis, &pieces, FAST_EC_RATE)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            (r, Some(i), json!({ "fast_contact_rate_ev": FAST_EC_RATE }))
        }
    };
    let emission = emission_report(&basis, &reading.populations);
    run.set_metadata(metadata);

    let summary_header = [
        "objective",
        "load_rate_ev",
        "current_ev",
        "voltage_ev",
        "power_ev2",
        "total_emission",
        "mean_participation_ratio",
        "flat_objective",
    ];
    let summary_row = match current {
        // current mode: the load-power columns do not apply
        Some(i) => vec![
            "current".to_string(),
            fnum(reading.load_rate),
            fnum(i),
            String::new(),
            String::new(),
            fnum(emission.total_emission),
            fnum(basis.mean_participation_ratio()),
            reading.flat_objective.to_string(),
        ],
        None => vec![
            "power".to_string(),
            fnum(reading.load_rate),
            fnum(reading.current),
            fnum(reading.voltage),
            fnum(reading.power),
            fnum(emission.total_emission),
            fnum(basis.mean_participation_ratio()),
            reading.flat_objective.to_string(),
        ],
    };
    run.write_csv("summary.csv", &summary_header, &[summary_row])?;

    let pop_header = ["state", "kind", "energy_ev", "population"];
    let pop_rows: Vec<Vec<String>> = (0..basis.dim())
        .map(|s| {
            vec![
                s.to_string(),
                state_kind(&basis, s).to_string(),
                fnum(basis.energies[s]),
                fnum(reading.populations[s]),
            ]
        })
        .collect();
    run.write_csv("populations.csv", &pop_header, &pop_rows)?;
    write_eigen_csv(&mut run, "eigen_report.csv", &basis)?;

    Ok(Outcome {
        dir: run.finish()?,
        succeeded: 1,
        total: 1,
    })
}

pub fn eigen_report(ctx: &Ctx) -> Result<Outcome, CliError> {
    let params = ctx.params()?;
    let basis = basis_of(&params);
    let request = json!({ "n_sites": params.n_sites() });
    let mut run = ctx.run_dir("eigen-report", request)?;
    run.set_metadata(json!({
        "mean_participation_ratio": basis.mean_participation_ratio(),
    }));
    write_eigen_csv(&mut run, "eigen_report.csv", &basis)?;
    Ok(Outcome {
        dir: run.finish()?,
        succeeded: 1,
        total: 1,
    })
}

pub fn rates_dump(ctx: &Ctx) -> Result<Outcome, CliError> {
    let params = ctx.params()?;
    let basis = basis_of(&params);
    let reading = resolved_reading(&params, &basis)?;
    let load_rate = reading.load_rate;
    let model = excitonic::assemble_rates(&params, &basis, load_rate);

    let request = json!({ "n_sites": params.n_sites() });
    let mut run = ctx.run_dir("rates-dump", request)?;
    run.set_metadata(json!({
        "load_rate_ev": load_rate,
        "load_rate_source": match params.load_rate {
            LoadRate::Pinned(_) => "pinned",
            LoadRate::Optimized => "power_optimal",
        },
        "dim": model.dim(),
        "processes": model.per_process.iter().map(|(l, _)| l.clone()).collect::<Vec<_>>(),
    }));

    let mut header = vec![
        "to_state".to_string(),
        "from_state".to_string(),
        "omega_ev".to_string(),
        "w_total_ev".to_string(),
    ];
    for (label, _) in &model.per_process {
        header.push(format!("w_{label}_ev"));
    }
    let dim = model.dim();
    let mut rows = Vec::with_capacity(dim * (dim - 1));
    for to in 0..dim {
        for from in 0..dim {
            if to == from {
                continue;
            }
            let mut row = vec![
                to.to_string(),
                from.to_string(),
                fnum(basis.energies[from] - basis.energies[to]),
                fnum(model.w[(to, from)]),
            ];
            row.extend(model.per_process.iter().map(|(_, w)| fnum(w[(to, from)])));
            rows.push(row);
        }
    }
    let refs: Vec<&str> = header.iter().map(String::as_str).collect();
    run.write_csv("rates.csv", &refs, &rows)?;
    Ok(Outcome {
        dir: run.finish()?,
        succeeded: 1,
        total: 1,
    })
}

fn ensemble_tables(
    run: &mut RunDir,
    problem: &EnergyProblem,
    runs: &[OptRun],
    objective: Objective,
) -> Result<(), CliError> {
    let unit = objective_unit(objective);
    let baseline = problem.evaluate(&problem.start_coordinates());

    run.write_json("runs.json", &serde_json::to_value(runs).map_err(|e| {
        CliError::Runtime(format!("cannot serialize runs: {e}"))
    })?)?;

    let header_owned = [
        "rank".to_string(),
        "start_index".to_string(),
        "method".to_string(),
        format!("start_objective_{unit}"),
        format!("final_objective_{unit}"),
        "enhancement".to_string(),
        "evaluations".to_string(),
        "failed_evaluations".to_string(),
        "error".to_string(),
    ];
    let header: Vec<&str> = header_owned.iter().map(String::as_str).collect();
    let rows: Vec<Vec<String>> = runs
        .iter()
        .enumerate()
        .map(|(rank, r)| {
            vec![
                (rank + 1).to_string(),
                r.start_index.to_string(),
                r.method.label().to_string(),
                fnum(r.start_objective),
                fnum(r.final_objective),
                baseline.map(|b| fnum(r.final_objective / b)).unwrap_or_default(),
                r.evaluations.to_string(),
                r.failed_evaluations.to_string(),
                r.error.clone().unwrap_or_default(),
            ]
        })
        .collect();
    run.write_csv("starts_optima.csv", &header, &rows)?;

    let traj_header_owned = [
        "rank".to_string(),
        "evaluation".to_string(),
        format!("best_objective_{unit}"),
    ];
    let traj_header: Vec<&str> = traj_header_owned.iter().map(String::as_str).collect();
    let mut traj_rows = Vec::new();
    for (rank, r) in runs.iter().enumerate() {
        for (eval, best) in &r.trace {
            traj_rows.push(vec![(rank + 1).to_string(), eval.to_string(), fnum(*best)]);
        }
    }
    run.write_csv("trajectories.csv", &traj_header, &traj_rows)?;

    if let Some(best) = runs.first() {
        let rows: Vec<Vec<String>> = best
            .start_energies
            .iter()
            .zip(&best.final_energies)
            .enumerate()
            .map(|(i, (s, f))| vec![(i + 1).to_string(), fnum(*s), fnum(*f)])
            .collect();
        run.write_csv(
            "best_energies.csv",
            &["site", "start_energy_ev", "final_energy_ev"],
            &rows,
        )?;
    }
    Ok(())
}

fn solver_metadata(methods: &[Method], count: usize, seed: u64, baseline: Option<f64>) -> Value {
    json!({
        "ensemble_count": count,
        "seed": seed,
        "methods": methods.iter().map(|m| m.label()).collect::<Vec<_>>(),
        "start_jitter_ev": START_JITTER,
        "bound_halfwidth_ev": BOUND_HALFWIDTH,
        "eval_budget_per_stage": EVAL_BUDGET,
        "stall_relative_tolerance": REL_TOL,
        "baseline_objective": baseline,
    })
}

pub fn optimize(ctx: &Ctx, count: usize, methods: &[Method]) -> Result<Outcome, CliError> {
    let params = ctx.params()?;
    let objective = ctx.objective();
    let problem = EnergyProblem::interior(params, objective);

    let request = json!({
        "n_sites": problem.base.n_sites(),
        "objective": objective_name(objective),
        "ensemble_count": count,
        "methods": methods.iter().map(|m| m.label()).collect::<Vec<_>>(),
    });
    let mut run = ctx.run_dir("optimize", request)?;
    let runs = run_ensemble(&problem, count, ctx.seed, methods);
    let baseline = problem.evaluate(&problem.start_coordinates());
    run.set_metadata(solver_metadata(methods, count, ctx.seed, baseline));
    ensemble_tables(&mut run, &problem, &runs, objective)?;

    let succeeded = runs.iter().filter(|r| r.error.is_none()).count();
    Ok(Outcome {
        dir: run.finish()?,
        succeeded,
        total: runs.len(),
    })
}

pub fn grouped_optimize(
    ctx: &Ctx,
    count: usize,
    methods: &[Method],
    n_group: usize,
) -> Result<Outcome, CliError> {
    let params = ctx.params()?;
    let objective = ctx.objective();
    let gp = GroupProblem::new(n_group, params.n_sites());
    let problem = EnergyProblem::grouped(gp, params, objective)
        .map_err(|e| CliError::Config(e.to_string()))?;

    let request = json!({
        "n_sites": problem.base.n_sites(),
        "objective": objective_name(objective),
        "ensemble_count": count,
        "methods": methods.iter().map(|m| m.label()).collect::<Vec<_>>(),
        "n_group": n_group,
    });
    let mut run = ctx.run_dir("grouped-optimize", request)?;
    let runs = run_ensemble(&problem, count, ctx.seed, methods);
    let baseline = problem.evaluate(&problem.start_coordinates());
    let mut meta = solver_metadata(methods, count, ctx.seed, baseline);
    meta["n_group"] = json!(gp.n_group);
    meta["n_edge"] = json!(gp.n_edge);
    run.set_metadata(meta);
    ensemble_tables(&mut run, &problem, &runs, objective)?;

    let succeeded = runs.iter().filter(|r| r.error.is_none()).count();
    Ok(Outcome {
        dir: run.finish()?,
        succeeded,
        total: runs.len(),
    })
}

/// Long-form table: one row per (grid point, named value); a failed point
/// contributes a single row with the error filled in.
fn sweep_tables(run: &mut RunDir, name: &str, sweep: &SweepResult) -> Result<usize, CliError> {
    let mut header = vec!["point".to_string()];
    header.extend(sweep.axes.iter().cloned());
    header.extend([
        "point_seed".to_string(),
        "name".to_string(),
        "value".to_string(),
        "flags".to_string(),
        "error".to_string(),
    ]);
    let refs: Vec<&str> = header.iter().map(String::as_str).collect();

    let mut rows = Vec::new();
    for (i, p) in sweep.points.iter().enumerate() {
        let fixed = |name: &str, value: String| {
            let mut row = vec![i.to_string()];
            row.extend(p.coords.iter().map(|c| fnum(*c)));
            row.extend([
                p.seed.map(|s| s.to_string()).unwrap_or_default(),
                name.to_string(),
                value,
                p.flags.join(";"),
                p.error.clone().unwrap_or_default(),
            ]);
            row
        };
        if p.values.is_empty() {
            rows.push(fixed("", String::new()));
        }
        for (name, value) in &p.values {
            rows.push(fixed(name, fnum(*value)));
        }
    }
    run.write_csv(name, &refs, &rows)?;
    Ok(sweep.points.iter().filter(|p| p.error.is_none()).count())
}

fn sweep_metadata(sweep: &SweepResult) -> Value {
    let notes: serde_json::Map<String, Value> = sweep
        .metadata
        .iter()
        .map(|(k, v)| (k.clone(), json!(v)))
        .collect();
    json!({
        "axes": sweep.axes,
        "grid": sweep.grid,
        "notes": notes,
    })
}

fn finish_sweep(ctx: &Ctx, command: &str, request: Value, sweep: &SweepResult) -> Result<Outcome, CliError> {
    let mut run = ctx.run_dir(command, request)?;
    run.set_metadata(sweep_metadata(sweep));
    let succeeded = sweep_tables(&mut run, "sweep.csv", sweep)?;
    Ok(Outcome {
        dir: run.finish()?,
        succeeded,
        total: sweep.points.len(),
    })
}

pub fn sweep_coupling(ctx: &Ctx, grid_text: &str, count: usize) -> Result<Outcome, CliError> {
    let params = ctx.params()?;
    let grid = parse_grid("--grid", grid_text)?;
    let request = json!({
        "n_sites": params.n_sites(),
        "grid": grid,
        "ensemble_count": count,
    });
    let sweep = sweep_j(&params, &grid, count, ctx.seed).map_err(|e| CliError::Config(e.to_string()))?;
    finish_sweep(ctx, "sweep-j", request, &sweep)
}

pub fn sweep_bias(ctx: &Ctx, grid_text: &str, count: usize) -> Result<Outcome, CliError> {
    let params = ctx.params()?;
    let grid = parse_grid("--grid", grid_text)?;
    let request = json!({
        "n_sites": params.n_sites(),
        "grid": grid,
        "ensemble_count": count,
    });
    let sweep = sweep_de(&params, &grid, count, ctx.seed).map_err(|e| CliError::Config(e.to_string()))?;
    finish_sweep(ctx, "sweep-de", request, &sweep)
}

/// The omega0 and Gamma sweeps compare the base (linear) chain against a
/// second fixed energy vector, read from its own config file.
fn spiked_energies(path: &PathBuf, n: usize) -> Result<Vec<f64>, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Config(format!("cannot read spiked config '{}': {e}", path.display())))?;
    let text = String::from_utf8(bytes)
        .map_err(|_| CliError::Config(format!("spiked config '{}' is not UTF-8", path.display())))?;
    let cfg = Config::parse(&text).map_err(|e| CliError::Config(e.to_string()))?;
    let params = cfg.into_params().map_err(|e| CliError::Config(e.to_string()))?;
    if params.n_sites() != n {
        return Err(CliError::Config(format!(
            "spiked config has {} sites, base has {n}",
            params.n_sites()
        )));
    }
    Ok(params.chain.onsite_energies)
}

pub fn sweep_bath(
    ctx: &Ctx,
    which: BathAxis,
    grid_text: &str,
    spiked_config: Option<&PathBuf>,
    count: usize,
) -> Result<Outcome, CliError> {
    let params = ctx.params()?;
    let grid = parse_grid("--grid", grid_text)?;
    let linear = params.chain.onsite_energies.clone();
    let (axis, command) = match which {
        BathAxis::Peak | BathAxis::Width => {
            let path = spiked_config.ok_or_else(|| {
                CliError::Config("this sweep needs --spiked-config with the comparison energies".into())
            })?;
            let spiked = spiked_energies(path, params.n_sites())?;
            match which {
                BathAxis::Peak => (
                    PhononAxis::Peak {
                        linear: linear.clone(),
                        spiked,
                    },
                    "sweep-omega0",
                ),
                _ => (
                    PhononAxis::Width {
                        linear: linear.clone(),
                        spiked,
                    },
                    "sweep-gamma",
                ),
            }
        }
        BathAxis::Temperature => (PhononAxis::Temperature { count }, "sweep-tph"),
    };
    let request = json!({
        "n_sites": params.n_sites(),
        "grid": grid,
        "ensemble_count": count,
    });
    let sweep =
        sweep_phonon(&params, &axis, &grid, ctx.seed).map_err(|e| CliError::Config(e.to_string()))?;
    finish_sweep(ctx, command, request, &sweep)
}

#[derive(Clone, Copy)]
pub enum BathAxis {
    Peak,
    Width,
    Temperature,
}

pub fn sweep_losses(
    ctx: &Ctx,
    em_text: &str,
    nr_text: &str,
    count: usize,
) -> Result<Outcome, CliError> {
    let params = ctx.params()?;
    let em = parse_grid("--em-grid", em_text)?;
    let nr = parse_grid("--nr-grid", nr_text)?;
    let request = json!({
        "n_sites": params.n_sites(),
        "em_grid": em,
        "nr_grid": nr,
        "ensemble_count": count,
    });
    let sweep = excitonic::loss_grid(&params, &em, &nr, count, ctx.seed)
        .map_err(|e| CliError::Config(e.to_string()))?;
    finish_sweep(ctx, "sweep-loss-grid", request, &sweep)
}

pub fn sweep_zero_bias(ctx: &Ctx, de_text: &str, gamma_text: &str) -> Result<Outcome, CliError> {
    let params = ctx.params()?;
    let de = parse_grid("--de-grid", de_text)?;
    let gamma = parse_grid("--gamma-ph", gamma_text)?;
    let request = json!({
        "n_sites": params.n_sites(),
        "de_grid": de,
        "gamma_phonon": gamma,
    });
    let sweep = zero_bias_study(&params, &gamma, &de).map_err(|e| CliError::Config(e.to_string()))?;
    finish_sweep(ctx, "sweep-zero-bias", request, &sweep)
}

pub fn sensitivity_report(ctx: &Ctx) -> Result<Outcome, CliError> {
    let params = ctx.params()?;
    let at = params.chain.onsite_energies.clone();
    let request = json!({ "n_sites": params.n_sites() });
    let report =
        sensitivity(&params, &at).map_err(|e| CliError::Runtime(e.to_string()))?;

    let mut run = ctx.run_dir("sensitivity", request)?;
    run.set_metadata(json!({
        "base_power_ev2": report.base_power,
        "load_rate_ev": report.load_rate,
        "relative_probe_step": excitonic::analysis::SENSITIVITY_STEP,
        "richardson_relative_floor": excitonic::analysis::RICHARDSON_REL_FLOOR,
    }));

    let header = [
        "index",
        "name",
        "derivative_ev2",
        "richardson",
        "unscalable",
        "supplementary",
    ];
    let row = |e: &excitonic::SensitivityEntry, extra: bool| {
        vec![
            e.index.to_string(),
            e.name.clone(),
            fnum(e.derivative),
            fnum(e.richardson),
            e.unscalable.to_string(),
            extra.to_string(),
        ]
    };
    let mut rows: Vec<Vec<String>> = report.entries.iter().map(|e| row(e, false)).collect();
    rows.extend(report.extras.iter().map(|e| row(e, true)));
    run.write_csv("sensitivity.csv", &header, &rows)?;
    Ok(Outcome {
        dir: run.finish()?,
        succeeded: 1,
        total: 1,
    })
}

pub fn lbfgs_demo(ctx: &Ctx, grid_text: &str, ensemble_count: usize) -> Result<Outcome, CliError> {
    let params = ctx.params()?;
    let objective = ctx.objective();
    let unit = objective_unit(objective);
    let grid = parse_grid("--j-grid", grid_text)?;
    let problem = EnergyProblem::interior(params, objective);

    let request = json!({
        "n_sites": problem.base.n_sites(),
        "objective": objective_name(objective),
        "j_grid": grid,
        "ensemble_count": ensemble_count,
    });
    let mut run = ctx.run_dir("lbfgs-demo", request)?;

    let demo = single_lbfgs_demo(&problem, &grid);
    let header_owned = [
        "j_coupling_ev".to_string(),
        "configuration".to_string(),
        format!("objective_{unit}"),
        "evaluations".to_string(),
        "error".to_string(),
    ];
    let header: Vec<&str> = header_owned.iter().map(String::as_str).collect();
    let mut rows: Vec<Vec<String>> = demo
        .iter()
        .map(|d| {
            vec![
                fnum(d.j_coupling),
                "single".to_string(),
                fnum(d.objective),
                d.run.evaluations.to_string(),
                d.run.error.clone().unwrap_or_default(),
            ]
        })
        .collect();
    let mut succeeded = demo.iter().filter(|d| d.run.error.is_none()).count();
    let mut total = demo.len();

    // optional companion curve: a fixed-seed ensemble at every coupling, so
    // the same jittered starts are reused across the grid
    if ensemble_count > 0 {
        for &j in &grid {
            let p = problem.with_j_coupling(j);
            let runs = run_ensemble(&p, ensemble_count, ctx.seed, &[Method::Sequential]);
            let best = &runs[0];
            rows.push(vec![
                fnum(j),
                "ensemble".to_string(),
                fnum(best.final_objective),
                runs.iter().map(|r| r.evaluations).sum::<usize>().to_string(),
                best.error.clone().unwrap_or_default(),
            ]);
            succeeded += usize::from(best.error.is_none());
            total += 1;
        }
    }
    run.set_metadata(json!({
        "seed": ctx.seed,
        "ensemble_count": ensemble_count,
        "eval_budget_per_stage": EVAL_BUDGET,
        "stall_relative_tolerance": REL_TOL,
    }));
    run.write_csv("demo.csv", &header, &rows)?;
    run.write_json(
        "runs.json",
        &serde_json::to_value(&demo).map_err(|e| CliError::Runtime(format!("cannot serialize runs: {e}")))?,
    )?;
    Ok(Outcome {
        dir: run.finish()?,
        succeeded,
        total,
    })
}
