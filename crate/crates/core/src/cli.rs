//! Command-line front end.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{parse_list, RunConfig, WeightPolicy};
use crate::error::{Error, Result};
use crate::fit::loglog_slope;
use crate::io;
use crate::lattice::simulate_wave;
use crate::limit::{solve_limit_ode, LimitOde};
use crate::linearization::{
    essential_spectrum, kernel_scan, KernelScanOptions, LinearOperatorSpec,
};
use crate::potential::PotentialParams;
use crate::rescaled::{asymptotic_ode_residuals, rescale_and_fit, RescaledKernel, Scaling, TPair};
use crate::wave::{asymptotic_errors, nondegeneracy, solve_wave, WaveSolution};

#[derive(Debug, Parser)]
#[command(
    name = "fpu-solitary",
    version,
    about = "Solitary waves in FPU chains with a singular potential"
)]
pub struct Cli {
    /// Configuration file with `key = value` lines.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (relative paths are joined onto $FPU_SOLITARY_OUT).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct GridArgs {
    #[arg(long)]
    pub m: Option<f64>,
    /// Half-width of the computational interval.
    #[arg(long = "X")]
    pub half_width: Option<f64>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Args, Default)]
pub struct WeightArgs {
    /// Weight as a fraction of the critical weight.
    #[arg(long = "a-frac", conflicts_with = "a")]
    pub a_frac: Option<f64>,
    /// Absolute weight.
    #[arg(long)]
    pub a: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the limit ODE and estimate κ̄.
    LimitOde {
        #[arg(long)]
        m: f64,
        #[arg(long, default_value_t = 50.0)]
        xmax: f64,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
    },
    /// Compute one travelling wave.
    Solve {
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Convergence and kernel table over a list of δ.
    Sweep {
        /// Comma-separated list.
        #[arg(long)]
        deltas: Option<String>,
        /// CSV report path; defaults to `sweep_m{m}.csv` in the output directory.
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        weight: WeightArgs,
    },
    /// Essential spectrum and kernel scan of the linearization.
    Linearize {
        /// Saved wave (CSV or JSON); solved from the configuration when absent.
        #[arg(long)]
        wave: Option<PathBuf>,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        weight: WeightArgs,
        #[arg(long, default_value_t = 20.0)]
        kmax: f64,
        #[arg(long, default_value_t = 2001)]
        nk: usize,
    },
    /// Rescaled kernel analysis of a saved wave.
    Rescale {
        #[arg(long)]
        wave: PathBuf,
        #[command(flatten)]
        weight: WeightArgs,
    },
    /// Lattice simulation of a saved wave.
    Simulate {
        #[arg(long)]
        wave: PathBuf,
        /// Horizon in units of 1/√σ.
        #[arg(long = "T-transits", default_value_t = 5.0)]
        transits: f64,
        #[arg(long)]
        dt: Option<f64>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::LimitOde { .. } => "limit-ode",
            Command::Solve { .. } => "solve",
            Command::Sweep { .. } => "sweep",
            Command::Linearize { .. } => "linearize",
            Command::Rescale { .. } => "rescale",
            Command::Simulate { .. } => "simulate",
        }
    }
}

fn apply_grid(cfg: &mut RunConfig, g: &GridArgs) {
    if let Some(m) = g.m {
        cfg.m = m;
    }
    if let Some(x) = g.half_width {
        cfg.half_width = x;
    }
    if let Some(h) = g.h {
        cfg.h = h;
    }
    if let Some(t) = g.tol {
        cfg.tol = t;
    }
    if let Some(n) = g.max_iter {
        cfg.max_iter = n;
    }
}

fn apply_weight(cfg: &mut RunConfig, w: &WeightArgs) {
    if let Some(f) = w.a_frac {
        cfg.weight = WeightPolicy::Fraction(f);
    }
    if let Some(a) = w.a {
        cfg.weight = WeightPolicy::Absolute(a);
    }
}

/// Resolves the configuration: file, then flags.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    match &cli.command {
        Command::LimitOde { m, .. } => cfg.m = *m,
        Command::Solve { delta, grid } => {
            apply_grid(&mut cfg, grid);
            cfg.deltas = vec![*delta];
        }
        Command::Sweep {
            deltas,
            grid,
            weight,
            ..
        } => {
            apply_grid(&mut cfg, grid);
            apply_weight(&mut cfg, weight);
            if let Some(list) = deltas {
                cfg.deltas = parse_list("deltas", list)?;
            }
        }
        Command::Linearize {
            delta,
            grid,
            weight,
            ..
        } => {
            apply_grid(&mut cfg, grid);
            apply_weight(&mut cfg, weight);
            cfg.deltas = vec![*delta];
        }
        Command::Rescale { weight, .. } => apply_weight(&mut cfg, weight),
        Command::Simulate { .. } => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Limit ODE long enough for the rescaled analysis of every wave on `X`.
pub fn analysis_ode(m: f64) -> Result<LimitOde> {
    solve_limit_ode(m, 2000.0, 2e-3)
}

/// Shooting range for `T_e`.
pub const T_PAIR_RANGE: f64 = 1500.0;
pub const T_PAIR_STEP: f64 = 2.5e-3;

/// Kernel scan followed by the rescaled fit in both scalings.
pub fn rescale_wave(
    wave: &WaveSolution,
    weight: WeightPolicy,
    pair: &TPair<'_>,
    seed: u64,
) -> Result<(RescaledKernel, RescaledKernel, usize, f64)> {
    let a = weight.resolve(wave.speed())?;
    let spec = LinearOperatorSpec::new(wave, a)?;
    let opts = KernelScanOptions {
        seed,
        parity: false,
        ..Default::default()
    };
    let report = kernel_scan(&spec, &opts)?;
    let measured = rescale_and_fit(wave, &report.kernel_vector, pair, a, Scaling::MeasuredWidth)?;
    let by_delta = rescale_and_fit(wave, &report.kernel_vector, pair, a, Scaling::Delta)?;
    Ok((measured, by_delta, report.kernel_count, report.gap_ratio))
}

fn rescale_json(rk: &RescaledKernel) -> serde_json::Value {
    let ode = asymptotic_ode_residuals(rk);
    json!({
        "c_e": rk.c_e,
        "c_o": rk.c_o,
        "sup_residual_eq18": rk.sup_residual,
        "fp_residual_eq12": rk.fixed_point_residual,
        "E0_int0": ode.int0,
        "E0_int1": ode.int1,
        "Z_inf": rk.z_inf,
        "ell": rk.ell,
        "scaling": rk.scaling,
        "a": rk.a,
        "normalization": rk.normalization,
        "residuals": ode,
    })
}

#[derive(Clone, Debug, Serialize)]
struct SweepRow {
    delta: f64,
    eps: f64,
    mu: f64,
    sigma: f64,
    err_r_inf: f64,
    err_v_inf: f64,
    err_mu_scaled: f64,
    err_sigma_scaled: f64,
    c_e: f64,
    c_o: f64,
    kernel_count: usize,
    sv_ratio: f64,
}

const SWEEP_HEADER: [&str; 12] = [
    "delta",
    "eps",
    "mu",
    "sigma",
    "err_R_inf",
    "err_V_inf",
    "err_mu_scaled",
    "err_sigma_scaled",
    "c_e",
    "c_o",
    "kernel_count",
    "sv_ratio",
];

fn slope_of(rows: &[SweepRow], f: impl Fn(&SweepRow) -> f64) -> Option<f64> {
    let x: Vec<f64> = rows.iter().map(|r| r.delta).collect();
    let y: Vec<f64> = rows.iter().map(|r| f(r).abs()).collect();
    loglog_slope(&x, &y)
}

fn sweep(cfg: &RunConfig, report: Option<&Path>, hash: &str, out: &Path) -> Result<Vec<PathBuf>> {
    let params = PotentialParams::new(cfg.m)?;
    let grid = cfg.grid()?;
    let ode = analysis_ode(cfg.m)?;
    let pair = TPair::solve(&ode, T_PAIR_RANGE, T_PAIR_STEP)?;
    let rows: Vec<SweepRow> = cfg
        .deltas
        .par_iter()
        .map(|&delta| {
            let w = solve_wave(&params, delta, &grid, cfg.tol, cfg.max_iter)?;
            if w.grid != grid {
                return Err(Error::InvalidInput(
                    "sweep rows computed on differing grids".into(),
                ));
            }
            let err = asymptotic_errors(&w, &ode)?;
            let (rk, _, count, ratio) = rescale_wave(&w, cfg.weight, &pair, cfg.seed)?;
            Ok(SweepRow {
                delta,
                eps: w.eps,
                mu: w.mu,
                sigma: w.sigma,
                err_r_inf: err.r_inf,
                err_v_inf: err.v_inf,
                err_mu_scaled: err.mu_scaled,
                err_sigma_scaled: err.sigma_scaled,
                c_e: rk.c_e,
                c_o: rk.c_o,
                kernel_count: count,
                sv_ratio: ratio,
            })
        })
        .collect::<Result<_>>()?;

    let csv = report
        .map(Path::to_path_buf)
        .unwrap_or_else(|| out.join(format!("sweep_m{}.csv", cfg.m)));
    io::write_csv(
        &csv,
        Some(hash),
        &SWEEP_HEADER,
        rows.iter().map(|r| {
            vec![
                r.delta,
                r.eps,
                r.mu,
                r.sigma,
                r.err_r_inf,
                r.err_v_inf,
                r.err_mu_scaled,
                r.err_sigma_scaled,
                r.c_e,
                r.c_o,
                r.kernel_count as f64,
                r.sv_ratio,
            ]
        }),
    )?;
    let slopes = json!({
        "err_R_inf": slope_of(&rows, |r| r.err_r_inf),
        "err_V_inf": slope_of(&rows, |r| r.err_v_inf),
        "err_mu_scaled": slope_of(&rows, |r| r.err_mu_scaled),
        "err_sigma_scaled": slope_of(&rows, |r| r.err_sigma_scaled),
        "c_e": slope_of(&rows, |r| r.c_e),
    });
    // The slopes close the table as a comment row so the CSV stays numeric.
    let mut text = std::fs::read_to_string(&csv).map_err(|e| Error::Io {
        path: csv.display().to_string(),
        source: e,
    })?;
    let fmt = |v: &serde_json::Value| v.as_f64().map(io::fmt_f64).unwrap_or_else(|| "nan".into());
    text.push_str(&format!(
        "# slopes,err_R_inf={},err_V_inf={},err_mu_scaled={},err_sigma_scaled={},c_e={}\n",
        fmt(&slopes["err_R_inf"]),
        fmt(&slopes["err_V_inf"]),
        fmt(&slopes["err_mu_scaled"]),
        fmt(&slopes["err_sigma_scaled"]),
        fmt(&slopes["c_e"]),
    ));
    std::fs::write(&csv, text).map_err(|e| Error::Io {
        path: csv.display().to_string(),
        source: e,
    })?;

    let mut paths = vec![csv.clone()];
    let nondeg = if cfg.deltas.len() >= 3 {
        Some(nondegeneracy(&params, &grid, &cfg.deltas)?)
    } else {
        None
    };
    let json_path = csv.with_extension("json");
    io::write_json(
        &json_path,
        &json!({
            "rows": rows,
            "slopes": slopes,
            "nondegeneracy": nondeg,
            "manifest_sha256": hash,
        }),
    )?;
    paths.push(json_path);
    Ok(paths)
}

fn load_wave(path: &Path) -> Result<WaveSolution> {
    WaveSolution::load(path)
}

/// Executes a parsed command line and returns the files written.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    let cfg = resolve_config(cli)?;
    let name = cli.command.name();
    let hash = cfg.manifest_hash(name);
    let out = cfg.resolved_out_dir();
    let mut paths = Vec::new();
    match &cli.command {
        Command::LimitOde { m, xmax, step } => {
            let ode = solve_limit_ode(*m, *xmax, *step)?;
            let stem = format!("limit_m{m}");
            let csv = out.join(format!("{stem}.csv"));
            io::write_csv(
                &csv,
                Some(&hash),
                &["xbar", "Sbar", "Sbar_prime"],
                ode.samples().map(|(x, s, sp)| vec![x, s, sp]),
            )?;
            let k = ode.kappa_estimate();
            let json_path = out.join(format!("{stem}.json"));
            io::write_json(
                &json_path,
                &json!({
                    "m": m,
                    "mu_bar": ode.mu_bar(),
                    "kappa_bar": ode.kappa_bar(),
                    "kappa_estimate": k,
                    "energy_drift": ode.energy_drift(),
                    "richardson_error": ode.richardson_error(),
                    "manifest_sha256": hash,
                }),
            )?;
            paths.extend([csv, json_path]);
        }
        Command::Solve { .. } => {
            let params = PotentialParams::new(cfg.m)?;
            let w = solve_wave(&params, cfg.deltas[0], &cfg.grid()?, cfg.tol, cfg.max_iter)?;
            let (csv, json_path) = w.save(&out, Some(&hash))?;
            paths.extend([csv, json_path]);
        }
        Command::Sweep { report, .. } => {
            paths.extend(sweep(&cfg, report.as_deref(), &hash, &out)?);
        }
        Command::Linearize { wave, kmax, nk, .. } => {
            let w = match wave {
                Some(p) => load_wave(p)?,
                None => {
                    let params = PotentialParams::new(cfg.m)?;
                    solve_wave(&params, cfg.deltas[0], &cfg.grid()?, cfg.tol, cfg.max_iter)?
                }
            };
            let a = cfg.weight.resolve(w.speed())?;
            let spec = LinearOperatorSpec::new(&w, a)?;
            let curves = essential_spectrum(w.speed(), a, *kmax, *nk)?;
            let stem = format!("spectrum_m{}_d{}_a{:.6}", w.m, w.delta, a);
            let csv = out.join(format!("{stem}.csv"));
            curves.write_csv(&csv, Some(&hash))?;
            let opts = KernelScanOptions {
                seed: cfg.seed,
                ..Default::default()
            };
            let report = kernel_scan(&spec, &opts)?;
            let json_path = out.join(format!("{stem}.json"));
            io::write_json(
                &json_path,
                &json!({
                    "a_c": report.a_c,
                    "b_star": report.b_star,
                    "singular_values": report.singular_values,
                    "kernel_count": report.kernel_count,
                    "even_subspace_min_sv": report.even_subspace_min_sv,
                    "report": report,
                    "manifest_sha256": hash,
                }),
            )?;
            paths.extend([csv, json_path]);
        }
        Command::Rescale { wave, .. } => {
            let w = load_wave(wave)?;
            let ode = analysis_ode(w.m)?;
            let pair = TPair::solve(&ode, T_PAIR_RANGE, T_PAIR_STEP)?;
            let (rk, rk_delta, count, ratio) = rescale_wave(&w, cfg.weight, &pair, cfg.seed)?;
            let stem = format!("rescaled_m{}_d{}", w.m, w.delta);
            let csv = out.join(format!("{stem}.csv"));
            rk.write_csv(&csv, Some(&hash))?;
            let mut value = rescale_json(&rk);
            value["delta_scaling"] = rescale_json(&rk_delta);
            value["kernel_count"] = json!(count);
            value["sv_ratio"] = json!(ratio);
            value["t_pair"] = serde_json::to_value(pair.checks()?).expect("plain data");
            value["manifest_sha256"] = json!(hash);
            let json_path = out.join(format!("{stem}.json"));
            io::write_json(&json_path, &value)?;
            paths.extend([csv, json_path]);
        }
        Command::Simulate { wave, transits, dt } => {
            let w = load_wave(wave)?;
            let (report, initial, last) = simulate_wave(&w, *transits, *dt)?;
            for state in [&initial, &last] {
                let p = out.join(format!("traj_t{:.6}.csv", state.t));
                state.write_csv(&p, Some(&hash))?;
                paths.push(p);
            }
            let json_path = out.join(format!("simulate_m{}_d{}.json", w.m, w.delta));
            let mut value = serde_json::to_value(&report).expect("plain data");
            value["manifest_sha256"] = json!(hash);
            io::write_json(&json_path, &value)?;
            paths.push(json_path);
        }
    }
    paths.push(cfg.write_manifest(&out, name)?);
    Ok(paths)
}

/// Exit status for an error: 1 for numerical failures, 2 for usage and
/// configuration errors.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_numerical() {
        1
    } else {
        2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_config() {
        let cli = Cli::parse_from([
            "fpu-solitary",
            "sweep",
            "--deltas",
            "0.2,0.1",
            "--a-frac",
            "0.25",
            "--X",
            "8",
        ]);
        let cfg = resolve_config(&cli).unwrap();
        assert_eq!(cfg.deltas, vec![0.2, 0.1]);
        assert_eq!(cfg.weight, WeightPolicy::Fraction(0.25));
        assert_eq!(cfg.half_width, 8.0);
    }

    #[test]
    fn empty_deltas_is_a_usage_error() {
        let cli = Cli::parse_from(["fpu-solitary", "sweep", "--deltas", ""]);
        let err = resolve_config(&cli).unwrap_err();
        assert_eq!(exit_code(&err), 2);
    }

    #[test]
    fn missing_m_is_rejected_by_the_parser() {
        assert!(Cli::try_parse_from(["fpu-solitary", "limit-ode"]).is_err());
        assert!(
            Cli::try_parse_from(["fpu-solitary", "sweep", "--a", "1", "--a-frac", "0.5"]).is_err()
        );
    }
}
