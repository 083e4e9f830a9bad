//! Command-line front end: writes each experiment as CSV data plus a JSON
//! manifest carrying full provenance (params, seeds, numeric settings).
//! Reruns with identical config and seed produce byte-identical files.
//!
//! Exit codes: 0 success, 2 config error, 3 solver non-convergence.

// `!(x > 0.0)` validation is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use clap::{Args, Parser, Subcommand};
use icesheet::action::{
    solve_bvp_collocation, solve_bvp_shooting, CollocationOptions, ShootingOptions, TransitionSpec,
};
use icesheet::analysis::{compare_mlt_mpp, mode_vs_noise, mode_vs_params, ParamAxis, COINCIDENCE_RATIO};
use icesheet::config::{parse_f64_list, ConfigFile, ModelOverrides};
use icesheet::error::{Error, Result};
use icesheet::fokker_planck::{maximal_likely_trajectory, FpeSettings};
use icesheet::io;
use icesheet::model::{
    cusp_surface, equilibria, lamperti_forward, potential_u, ModelParams,
};
use icesheet::sde::{simulate_ensemble, SimConfig};
use serde::Serialize;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "icesheet", version, about = "Stochastic ice-sheet model analysis")]
struct Cli {
    /// Config file (flat key = value with [sections] per subcommand).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// RNG seed (required by `simulate`).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker-thread cap; does not affect results.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(flatten)]
    model: ModelArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ModelArgs {
    /// Yield-stress parameter (meters).
    #[arg(long, global = true)]
    sigma_m: Option<f64>,
    /// Mass-balance rate (1/kyr).
    #[arg(long, global = true)]
    beta: Option<f64>,
    /// Mass-balance slope.
    #[arg(long, global = true)]
    lambda: Option<f64>,
    /// Distance of the origin from the polar ocean (km, <= 0).
    #[arg(long, global = true)]
    r_km: Option<f64>,
    /// Noise amplitude knob.
    #[arg(long, global = true)]
    eps0: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Deterministic fixed points, stability, and regime.
    Equilibria,
    /// Potential curves U(X) for a list of lambda values.
    Potential {
        /// Comma-separated lambda values.
        #[arg(long, default_value = "0.001,0.0012,0.0014")]
        lambdas: String,
        #[arg(long)]
        x_max_km: Option<f64>,
        #[arg(long)]
        n_samples: Option<usize>,
    },
    /// Equilibrium-count table over the (r, lambda) plane with fold flags.
    Cusp {
        #[arg(long)]
        r_min_km: Option<f64>,
        #[arg(long)]
        r_max_km: Option<f64>,
        #[arg(long)]
        lambda_min: Option<f64>,
        #[arg(long)]
        lambda_max: Option<f64>,
        #[arg(long)]
        n_r: Option<usize>,
        #[arg(long)]
        n_lambda: Option<usize>,
    },
    /// Monte Carlo ensemble of the SDE (requires --seed).
    Simulate {
        #[arg(long)]
        x0_km: Option<f64>,
        #[arg(long)]
        t_end_kyr: Option<f64>,
        #[arg(long)]
        dt_kyr: Option<f64>,
        #[arg(long)]
        n_paths: Option<usize>,
        #[arg(long)]
        record_stride: Option<usize>,
    },
    /// Maximal likely trajectories from one or more initial states.
    Mlt {
        /// Comma-separated initial states (km).
        #[arg(long)]
        x0_km: Option<String>,
        #[arg(long)]
        t_end_kyr: Option<f64>,
        #[arg(long)]
        n_cells: Option<usize>,
        #[arg(long)]
        x_max_km: Option<f64>,
        #[arg(long)]
        dt_kyr: Option<f64>,
        #[arg(long)]
        output_stride: Option<usize>,
        #[arg(long)]
        init_width_cells: Option<f64>,
        /// Also write the full density field per start.
        #[arg(long)]
        density: bool,
    },
    /// Most probable transition path between two states.
    Mpp {
        #[arg(long)]
        x0_km: Option<f64>,
        #[arg(long)]
        x1_km: Option<f64>,
        #[arg(long)]
        t1_kyr: Option<f64>,
        #[arg(long)]
        n_nodes: Option<usize>,
        /// collocation | shooting | both
        #[arg(long)]
        solver: Option<String>,
        #[arg(long)]
        substeps: Option<usize>,
    },
    /// Maximal likely trajectory versus most probable path.
    Compare {
        #[arg(long)]
        x0_km: Option<f64>,
        #[arg(long)]
        x1_km: Option<f64>,
        #[arg(long)]
        t_max_kyr: Option<f64>,
        #[arg(long)]
        ratio_threshold: Option<f64>,
        #[arg(long)]
        n_cells: Option<usize>,
        #[arg(long)]
        x_max_km: Option<f64>,
    },
    /// Terminal-mode sweep over eps0, lambda, or r.
    Sweep {
        /// eps0 | lambda | r
        #[arg(long)]
        axis: Option<String>,
        /// Comma-separated axis values, strictly increasing.
        #[arg(long)]
        values: Option<String>,
        #[arg(long)]
        x0_km: Option<f64>,
        #[arg(long)]
        t_end_kyr: Option<f64>,
        #[arg(long)]
        n_cells: Option<usize>,
        #[arg(long)]
        x_max_km: Option<f64>,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let overrides = ModelOverrides {
        sigma_m: cli.model.sigma_m,
        beta_per_kyr: cli.model.beta,
        lambda: cli.model.lambda,
        r_km: cli.model.r_km,
        eps0: cli.model.eps0,
    };
    let params = cfg.model_params(&overrides)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| dispatch(cli, &cfg, &params))
}

fn dispatch(cli: &Cli, cfg: &ConfigFile, params: &ModelParams) -> Result<()> {
    let out = cli.out.as_path();
    match &cli.command {
        Command::Equilibria => cmd_equilibria(out, params),
        Command::Potential { lambdas, x_max_km, n_samples } => {
            let lambdas = match cfg.get_f64_list("potential", "lambdas")? {
                Some(v) if lambdas == "0.001,0.0012,0.0014" => v,
                _ => parse_f64_list(lambdas).map_err(Error::Config)?,
            };
            let x_max = x_max_km.or(cfg.get_f64("potential", "x_max_km")?).unwrap_or(3000.0);
            let n = n_samples.or(cfg.get_usize("potential", "n_samples")?).unwrap_or(600);
            cmd_potential(out, params, &lambdas, x_max, n)
        }
        Command::Cusp { r_min_km, r_max_km, lambda_min, lambda_max, n_r, n_lambda } => {
            let r0 = r_min_km.or(cfg.get_f64("cusp", "r_min_km")?).unwrap_or(-400.0);
            let r1 = r_max_km.or(cfg.get_f64("cusp", "r_max_km")?).unwrap_or(0.0);
            let l0 = lambda_min.or(cfg.get_f64("cusp", "lambda_min")?).unwrap_or(5.0e-4);
            let l1 = lambda_max.or(cfg.get_f64("cusp", "lambda_max")?).unwrap_or(2.5e-3);
            let nr = n_r.or(cfg.get_usize("cusp", "n_r")?).unwrap_or(81);
            let nl = n_lambda.or(cfg.get_usize("cusp", "n_lambda")?).unwrap_or(81);
            cmd_cusp(out, params, (r0, r1), (l0, l1), (nr, nl))
        }
        Command::Simulate { x0_km, t_end_kyr, dt_kyr, n_paths, record_stride } => {
            let seed = cli
                .seed
                .or(cfg.get_u64("simulate", "seed")?)
                .ok_or_else(|| Error::Config("simulate requires --seed (or [simulate] seed)".into()))?;
            let x0 = x0_km.or(cfg.get_f64("simulate", "x0_km")?).unwrap_or(1800.0);
            let t_end = t_end_kyr.or(cfg.get_f64("simulate", "t_end_kyr")?).unwrap_or(100.0);
            let dt = dt_kyr.or(cfg.get_f64("simulate", "dt_kyr")?).unwrap_or(0.01);
            let n = n_paths.or(cfg.get_usize("simulate", "n_paths")?).unwrap_or(100);
            let stride = record_stride
                .or(cfg.get_usize("simulate", "record_stride")?)
                .unwrap_or_else(|| SimConfig::auto_stride(dt, t_end));
            cmd_simulate(out, params, x0, SimConfig::new(dt, t_end, n, seed, stride)?)
        }
        Command::Mlt { x0_km, t_end_kyr, n_cells, x_max_km, dt_kyr, output_stride, init_width_cells, density } => {
            let x0s = match x0_km {
                Some(s) => parse_f64_list(s).map_err(Error::Config)?,
                None => cfg
                    .get_f64_list("mlt", "x0_km")?
                    .unwrap_or_else(|| vec![1800.0, 1600.0, 1000.0, 100.0, 50.0]),
            };
            let t_end = t_end_kyr.or(cfg.get_f64("mlt", "t_end_kyr")?).unwrap_or(100.0);
            let mut settings = FpeSettings::default();
            if let Some(n) = n_cells.or(cfg.get_usize("mlt", "n_cells")?) {
                settings.n_cells = n;
            }
            if let Some(xm) = x_max_km.or(cfg.get_f64("mlt", "x_max_km")?) {
                settings.x_max = xm;
            }
            if let Some(dt) = dt_kyr.or(cfg.get_f64("mlt", "dt_kyr")?) {
                settings.dt = dt;
            }
            if let Some(s) = output_stride.or(cfg.get_usize("mlt", "output_stride")?) {
                settings.output_stride = s;
            }
            if let Some(w) = init_width_cells.or(cfg.get_f64("mlt", "init_width_cells")?) {
                settings.init_width_cells = w;
            }
            cmd_mlt(out, params, &x0s, t_end, &settings, *density)
        }
        Command::Mpp { x0_km, x1_km, t1_kyr, n_nodes, solver, substeps } => {
            let set = equilibria(params)?;
            let default_x0 = set.ice_covered().unwrap_or(1738.6);
            let x0 = x0_km.or(cfg.get_f64("mpp", "x0_km")?).unwrap_or(default_x0);
            let x1 = x1_km.or(cfg.get_f64("mpp", "x1_km")?).unwrap_or(0.0);
            let t1 = t1_kyr.or(cfg.get_f64("mpp", "t1_kyr")?).unwrap_or(100.0);
            let n_nodes = n_nodes.or(cfg.get_usize("mpp", "n_nodes")?).unwrap_or(800);
            let solver = solver
                .clone()
                .or(cfg.get("mpp", "solver").map(|s| s.to_string()))
                .unwrap_or_else(|| "collocation".into());
            let substeps = substeps.or(cfg.get_usize("mpp", "substeps")?).unwrap_or(50);
            cmd_mpp(out, params, x0, x1, t1, n_nodes, &solver, substeps)
        }
        Command::Compare { x0_km, x1_km, t_max_kyr, ratio_threshold, n_cells, x_max_km } => {
            let x0 = x0_km.or(cfg.get_f64("compare", "x0_km")?).unwrap_or(1800.0);
            let x1 = x1_km.or(cfg.get_f64("compare", "x1_km")?).unwrap_or(1740.0);
            let t_max = t_max_kyr.or(cfg.get_f64("compare", "t_max_kyr")?).unwrap_or(100.0);
            let ratio = ratio_threshold
                .or(cfg.get_f64("compare", "ratio_threshold")?)
                .unwrap_or(COINCIDENCE_RATIO);
            let mut settings = FpeSettings::default();
            if let Some(n) = n_cells.or(cfg.get_usize("compare", "n_cells")?) {
                settings.n_cells = n;
            }
            if let Some(xm) = x_max_km.or(cfg.get_f64("compare", "x_max_km")?) {
                settings.x_max = xm;
            }
            cmd_compare(out, params, x0, x1, t_max, ratio, &settings)
        }
        Command::Sweep { axis, values, x0_km, t_end_kyr, n_cells, x_max_km } => {
            let axis = axis
                .clone()
                .or(cfg.get("sweep", "axis").map(|s| s.to_string()))
                .unwrap_or_else(|| "eps0".into());
            let values = match values {
                Some(s) => parse_f64_list(s).map_err(Error::Config)?,
                None => cfg
                    .get_f64_list("sweep", "values")?
                    .unwrap_or_else(|| vec![0.01, 0.05, 0.1]),
            };
            let x0 = x0_km.or(cfg.get_f64("sweep", "x0_km")?).unwrap_or(1800.0);
            let t_end = t_end_kyr.or(cfg.get_f64("sweep", "t_end_kyr")?).unwrap_or(150.0);
            let mut settings = FpeSettings::default();
            if let Some(n) = n_cells.or(cfg.get_usize("sweep", "n_cells")?) {
                settings.n_cells = n;
            }
            if let Some(xm) = x_max_km.or(cfg.get_f64("sweep", "x_max_km")?) {
                settings.x_max = xm;
            }
            cmd_sweep(out, params, &axis, &values, x0, t_end, &settings)
        }
    }
}

fn cmd_equilibria(out: &Path, params: &ModelParams) -> Result<()> {
    let set = equilibria(params)?;
    let report = io::EquilibriaReport::from_set(&set, params);
    io::write_json(&out.join("equilibria.json"), &report)?;
    let manifest = io::Manifest::new("equilibria", params).with_outputs(&["equilibria.json"]);
    io::write_json(&out.join("manifest.json"), &manifest)?;
    println!(
        "regime: {}; states: {}",
        report.regime,
        report
            .states
            .iter()
            .map(|s| format!("{:.4} km ({:?})", s.x_km, s.stability))
            .collect::<Vec<_>>()
            .join(", ")
    );
    Ok(())
}

#[derive(Serialize)]
struct PotentialCurveInfo {
    lambda: f64,
    discriminant: f64,
    n_interior_extrema: usize,
    fold_degenerate: bool,
}

fn cmd_potential(out: &Path, params: &ModelParams, lambdas: &[f64], x_max: f64, n_samples: usize) -> Result<()> {
    if lambdas.is_empty() {
        return Err(Error::Config("potential: empty lambda list".into()));
    }
    if n_samples < 2 || !(x_max > 0.0) {
        return Err(Error::Config("potential: need n_samples >= 2 and x_max > 0".into()));
    }
    let mut csv = String::from("X_km");
    for l in lambdas {
        csv.push_str(&format!(",U_lambda_{l}"));
    }
    csv.push('\n');
    let curves: Vec<ModelParams> = lambdas
        .iter()
        .map(|&l| {
            let p = ModelParams { lambda: l, ..*params };
            p.validate().map(|_| p)
        })
        .collect::<Result<_>>()?;
    for i in 0..n_samples {
        let x = x_max * i as f64 / (n_samples - 1) as f64;
        csv.push_str(&format!("{x}"));
        for p in &curves {
            csv.push_str(&format!(",{}", potential_u(x, p)?));
        }
        csv.push('\n');
    }
    io::write_text(&out.join("potential.csv"), &csv)?;
    let infos: Vec<PotentialCurveInfo> = curves
        .iter()
        .map(|p| {
            let set = equilibria(p)?;
            Ok(PotentialCurveInfo {
                lambda: p.lambda,
                discriminant: set.discriminant,
                n_interior_extrema: set.states.iter().filter(|s| s.x > 0.0).count(),
                fold_degenerate: set.regime == icesheet::model::Regime::Degenerate,
            })
        })
        .collect::<Result<_>>()?;
    let manifest = io::Manifest::new("potential", params)
        .with_settings(&infos)?
        .with_outputs(&["potential.csv"]);
    io::write_json(&out.join("manifest.json"), &manifest)?;
    Ok(())
}

fn cmd_cusp(
    out: &Path,
    params: &ModelParams,
    r_range: (f64, f64),
    lambda_range: (f64, f64),
    resolution: (usize, usize),
) -> Result<()> {
    let rows = cusp_surface(params, r_range, lambda_range, resolution)?;
    let mut csv = String::from("r_km,lambda,n_equilibria,fold_boundary\n");
    for row in &rows {
        csv.push_str(&format!("{},{},{},{}\n", row.r, row.lambda, row.n_equilibria, row.fold_boundary));
    }
    io::write_text(&out.join("cusp.csv"), &csv)?;
    #[derive(Serialize)]
    struct CuspSettings {
        r_range: (f64, f64),
        lambda_range: (f64, f64),
        resolution: (usize, usize),
    }
    let manifest = io::Manifest::new("cusp", params)
        .with_settings(&CuspSettings { r_range, lambda_range, resolution })?
        .with_outputs(&["cusp.csv"]);
    io::write_json(&out.join("manifest.json"), &manifest)?;
    Ok(())
}

fn cmd_simulate(out: &Path, params: &ModelParams, x0: f64, config: SimConfig) -> Result<()> {
    let ensemble = simulate_ensemble(x0, params, &config)?;
    io::write_text(&out.join("paths.csv"), &io::ensemble_csv(&ensemble))?;
    #[derive(Serialize)]
    struct SimSettings {
        x0_km: f64,
        config: SimConfig,
    }
    let manifest = io::Manifest::new("simulate", params)
        .with_seed(config.seed)
        .with_settings(&SimSettings { x0_km: x0, config })?
        .with_outputs(&["paths.csv"]);
    io::write_json(&out.join("manifest.json"), &manifest)?;
    println!("{} paths over {} kyr written", config.n_paths, config.horizon);
    Ok(())
}

fn cmd_mlt(
    out: &Path,
    params: &ModelParams,
    x0s: &[f64],
    t_end: f64,
    settings: &FpeSettings,
    write_density: bool,
) -> Result<()> {
    if x0s.is_empty() {
        return Err(Error::Config("mlt: empty initial-state list".into()));
    }
    let mut outputs = Vec::new();
    for &x0 in x0s {
        let field = icesheet::fokker_planck::solve(params, x0, t_end, settings)?;
        let mlt = maximal_likely_trajectory(&field)?;
        let name = format!("mlt_{x0}.csv");
        io::write_text(&out.join(&name), &io::mlt_csv(&mlt))?;
        if write_density {
            let dname = format!("density_{x0}.csv");
            io::write_text(&out.join(&dname), &io::density_csv(&field))?;
            outputs.push(dname);
        }
        println!(
            "X0 = {x0} km: terminal mode {:.4} km ({})",
            mlt.terminal_state,
            if mlt.converged { "converged" } else { "not converged" }
        );
        outputs.push(name);
    }
    #[derive(Serialize)]
    struct MltSettings<'a> {
        x0_km: &'a [f64],
        t_end_kyr: f64,
        fpe: &'a FpeSettings,
    }
    let out_refs: Vec<&str> = outputs.iter().map(|s| s.as_str()).collect();
    let manifest = io::Manifest::new("mlt", params)
        .with_settings(&MltSettings { x0_km: x0s, t_end_kyr: t_end, fpe: settings })?
        .with_outputs(&out_refs);
    io::write_json(&out.join("manifest.json"), &manifest)?;
    Ok(())
}

#[derive(Serialize)]
struct SolverReport {
    solver: String,
    iterations: usize,
    continuation_steps: usize,
    residual_norm: f64,
    om_action: f64,
    fw_action: f64,
    hamiltonian_drift: f64,
}

#[allow(clippy::too_many_arguments)]
fn cmd_mpp(
    out: &Path,
    params: &ModelParams,
    x0: f64,
    x1: f64,
    t1: f64,
    n_nodes: usize,
    solver: &str,
    substeps: usize,
) -> Result<()> {
    let floor = icesheet::action::default_z_floor();
    let z0 = lamperti_forward(x0)?.max(floor);
    let z1 = lamperti_forward(x1)?.max(floor);
    let spec = TransitionSpec::with_floor(z0, z1, 0.0, t1, *params, floor)?;

    let mut outputs: Vec<String> = Vec::new();
    let mut reports = Vec::new();
    let run_colloc = solver == "collocation" || solver == "both";
    let run_shoot = solver == "shooting" || solver == "both";
    if !run_colloc && !run_shoot {
        return Err(Error::Config(format!("mpp: unknown solver `{solver}` (collocation|shooting|both)")));
    }
    let attach = |path: &icesheet::action::TransitionPath| SolverReport {
        solver: format!("{:?}", path.solver_used).to_lowercase(),
        iterations: path.iterations,
        continuation_steps: path.continuation_steps,
        residual_norm: path.residual_norm,
        om_action: path.om_action,
        fw_action: path.fw_action,
        hamiltonian_drift: path.hamiltonian_drift(params),
    };
    if run_colloc {
        let opts = CollocationOptions { n_nodes, ..Default::default() };
        let path = solve_bvp_collocation(&spec, &opts).map_err(add_mpp_advice)?;
        io::write_text(&out.join("mpp.csv"), &io::transition_csv(&path))?;
        reports.push(attach(&path));
        outputs.push("mpp.csv".into());
        println!(
            "collocation: OM action {:.6}, FW action {:.6}, residual {:.2e}",
            path.om_action, path.fw_action, path.residual_norm
        );
    }
    if run_shoot {
        let opts = ShootingOptions { n_nodes, substeps };
        let path = solve_bvp_shooting(&spec, &opts).map_err(add_mpp_advice)?;
        io::write_text(&out.join("mpp_shooting.csv"), &io::transition_csv(&path))?;
        reports.push(attach(&path));
        outputs.push("mpp_shooting.csv".into());
        println!(
            "shooting: OM action {:.6}, FW action {:.6}, endpoint residual {:.2e}",
            path.om_action, path.fw_action, path.residual_norm
        );
    }
    io::write_json(&out.join("mpp_report.json"), &reports)?;
    outputs.push("mpp_report.json".into());

    #[derive(Serialize)]
    struct MppSettings {
        x0_km: f64,
        x1_km: f64,
        t1_kyr: f64,
        n_nodes: usize,
        substeps: usize,
        z_floor: f64,
    }
    let out_refs: Vec<&str> = outputs.iter().map(|s| s.as_str()).collect();
    let manifest = io::Manifest::new("mpp", params)
        .with_settings(&MppSettings { x0_km: x0, x1_km: x1, t1_kyr: t1, n_nodes, substeps, z_floor: floor })?
        .with_outputs(&out_refs);
    io::write_json(&out.join("manifest.json"), &manifest)?;
    Ok(())
}

fn add_mpp_advice(e: Error) -> Error {
    match e {
        Error::NonConvergence { context, residual, iterations, last_iterate } => Error::NonConvergence {
            context: format!(
                "{context}; try a larger --eps0 or a shorter --t1-kyr first and continue from there"
            ),
            residual,
            iterations,
            last_iterate,
        },
        other => other,
    }
}

fn cmd_compare(
    out: &Path,
    params: &ModelParams,
    x0: f64,
    x1: f64,
    t_max: f64,
    ratio_threshold: f64,
    settings: &FpeSettings,
) -> Result<()> {
    let cmp = compare_mlt_mpp(x0, x1, params, t_max, settings, &CollocationOptions::default(), ratio_threshold)?;
    io::write_text(&out.join("compare.csv"), &io::compare_csv(&cmp))?;
    #[derive(Serialize)]
    struct CompareReport {
        t1_kyr: f64,
        sup_distance_km: f64,
        range_km: f64,
        ratio: f64,
        coincident: bool,
    }
    let report = CompareReport {
        t1_kyr: cmp.t1,
        sup_distance_km: cmp.sup_distance,
        range_km: cmp.range,
        ratio: cmp.ratio,
        coincident: cmp.coincident,
    };
    io::write_json(&out.join("compare.json"), &report)?;
    #[derive(Serialize)]
    struct CompareSettings<'a> {
        x0_km: f64,
        x1_km: f64,
        t_max_kyr: f64,
        ratio_threshold: f64,
        fpe: &'a FpeSettings,
    }
    let manifest = io::Manifest::new("compare", params)
        .with_settings(&CompareSettings { x0_km: x0, x1_km: x1, t_max_kyr: t_max, ratio_threshold, fpe: settings })?
        .with_outputs(&["compare.csv", "compare.json"]);
    io::write_json(&out.join("manifest.json"), &manifest)?;
    println!(
        "t1 = {:.3} kyr, sup distance {:.3} km over range {:.3} km ({})",
        cmp.t1,
        cmp.sup_distance,
        cmp.range,
        if cmp.coincident { "coincident" } else { "distinct" }
    );
    Ok(())
}

fn cmd_sweep(
    out: &Path,
    params: &ModelParams,
    axis: &str,
    values: &[f64],
    x0: f64,
    t_end: f64,
    settings: &FpeSettings,
) -> Result<()> {
    let sweep = match axis {
        "eps0" => mode_vs_noise(params, x0, values, t_end, settings)?,
        "lambda" => mode_vs_params(params, ParamAxis::Lambda, values, x0, t_end, settings)?,
        "r" => mode_vs_params(params, ParamAxis::R, values, x0, t_end, settings)?,
        other => return Err(Error::Config(format!("sweep: unknown axis `{other}` (eps0|lambda|r)"))),
    };
    io::write_text(&out.join("sweep.csv"), &io::sweep_csv(&sweep))?;
    #[derive(Serialize)]
    struct SweepPoint {
        value: f64,
        params: ModelParams,
    }
    #[derive(Serialize)]
    struct SweepSettings<'a> {
        axis: &'a str,
        x0_km: f64,
        t_end_kyr: f64,
        fpe: &'a FpeSettings,
        points: Vec<SweepPoint>,
    }
    let points = values
        .iter()
        .map(|&v| SweepPoint {
            value: v,
            params: match axis {
                "eps0" => params.with_epsilon0(v),
                "lambda" => ModelParams { lambda: v, ..*params },
                _ => ModelParams { r: v, ..*params },
            },
        })
        .collect();
    let manifest = io::Manifest::new("sweep", params)
        .with_settings(&SweepSettings { axis, x0_km: x0, t_end_kyr: t_end, fpe: settings, points })?
        .with_outputs(&["sweep.csv"]);
    io::write_json(&out.join("manifest.json"), &manifest)?;
    for (v, m) in sweep.values.iter().zip(&sweep.outcomes) {
        println!("{axis} = {v}: terminal mode {m:.4} km");
    }
    Ok(())
}

