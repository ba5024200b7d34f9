use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use dqd_core::config::{CoherenceTime, OutputFormat, RawConfig, RunConfig, RunMode, SweepSection};
use dqd_core::output::{self, sidecar_path};
use dqd_core::runner;
use dqd_core::summarize;
use dqd_core::sweep::{best_point, SweepAxis, SweepMetric, SweepMode, SweepParam};

#[derive(Parser)]
#[command(
    name = "dqd",
    version,
    about = "Double-quantum-dot qubit transfer simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Time-domain run (lyapunov or lzs) written as a trajectory table.
    Simulate(Common),
    /// Closed-form LZS transfer probability over a pulse-duration grid.
    Analytic(Common),
    /// Two-axis parameter sweep.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sweep: SweepFlags,
    },
    /// Bloch-vector trajectory of a run.
    ExportBloch {
        #[command(flatten)]
        common: Common,
        /// Replay the recorded control waveform with dissipation switched off.
        #[arg(long)]
        replay_closed: bool,
    },
}

#[derive(Args)]
struct Common {
    /// JSON config file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// lyapunov | lzs | analytic-lzs | sweep
    #[arg(long)]
    mode: Option<RunMode>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv | json
    #[arg(long)]
    format: Option<OutputFormat>,
    #[command(flatten)]
    fields: FieldFlags,
}

/// One flag per numeric config key.
#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct FieldFlags {
    /// Initial detuning ε₀ (μeV)
    #[arg(long)]
    eps0: Option<f64>,
    /// Tunnel gap Δ (μeV); required
    #[arg(long)]
    delta: Option<f64>,
    /// Relaxation time (ps); `inf` disables
    #[arg(long)]
    t1: Option<f64>,
    /// Dephasing time (ps); `inf` disables
    #[arg(long)]
    t2: Option<f64>,
    #[arg(long)]
    hbar: Option<f64>,
    /// Sets g1 and g2 together
    #[arg(long)]
    gain: Option<f64>,
    #[arg(long)]
    g1: Option<f64>,
    #[arg(long)]
    g2: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    f_max: Option<f64>,
    #[arg(long)]
    hold_dt: Option<f64>,
    #[arg(long)]
    substeps: Option<usize>,
    #[arg(long)]
    deadpoint_kick: Option<f64>,
    #[arg(long)]
    v_tolerance: Option<f64>,
    #[arg(long)]
    gain_unit: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    amplitude_a: Option<f64>,
    #[arg(long)]
    t_r: Option<f64>,
    #[arg(long)]
    cycles: Option<u32>,
    #[arg(long)]
    t_p_min: Option<f64>,
    #[arg(long)]
    t_p_max: Option<f64>,
    #[arg(long)]
    t_p_steps: Option<usize>,
}

impl FieldFlags {
    fn into_raw(self) -> RawConfig {
        RawConfig {
            eps0: self.eps0,
            delta: self.delta,
            t1: self.t1.map(CoherenceTime),
            t2: self.t2.map(CoherenceTime),
            hbar: self.hbar,
            g1: self.g1.or(self.gain),
            g2: self.g2.or(self.gain),
            theta: self.theta,
            f_max: self.f_max,
            hold_dt: self.hold_dt,
            substeps: self.substeps,
            deadpoint_kick: self.deadpoint_kick,
            v_tolerance: self.v_tolerance,
            gain_unit: self.gain_unit,
            t_end: self.t_end,
            amplitude_a: self.amplitude_a,
            t_r: self.t_r,
            cycles: self.cycles,
            t_p_min: self.t_p_min,
            t_p_max: self.t_p_max,
            t_p_steps: self.t_p_steps,
            ..RawConfig::default()
        }
    }
}

#[derive(Args)]
struct SweepFlags {
    /// param:min:max:steps, e.g. gain:0.1:1.5:25
    #[arg(long, value_parser = parse_axis)]
    axis1: Option<SweepAxis>,
    #[arg(long, value_parser = parse_axis)]
    axis2: Option<SweepAxis>,
    /// max_p_l | max_fidelity | final_p_l | final_fidelity | p_l_at_t=<ps>
    #[arg(long, value_parser = parse_metric)]
    metric: Option<SweepMetric>,
    /// lyapunov | lzs
    #[arg(long, value_parser = parse_sweep_mode)]
    base_mode: Option<SweepMode>,
    #[arg(long)]
    p_l_floor: Option<f64>,
}

fn parse_param(s: &str) -> std::result::Result<SweepParam, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| format!("unknown sweep parameter {s:?}"))
}

fn parse_axis(s: &str) -> std::result::Result<SweepAxis, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [p, lo, hi, n] = parts.as_slice() else {
        return Err("expected param:min:max:steps".into());
    };
    let num = |x: &str| x.parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
    Ok(SweepAxis::new(
        parse_param(p)?,
        num(lo)?,
        num(hi)?,
        n.parse().map_err(|e| format!("{n:?}: {e}"))?,
    ))
}

fn parse_metric(s: &str) -> std::result::Result<SweepMetric, String> {
    Ok(match s {
        "max_p_l" => SweepMetric::MaxPL,
        "max_fidelity" => SweepMetric::MaxFidelity,
        "final_p_l" => SweepMetric::FinalPL,
        "final_fidelity" => SweepMetric::FinalFidelity,
        _ => match s.strip_prefix("p_l_at_t=") {
            Some(t) => SweepMetric::PLAtT {
                t: t.parse().map_err(|e| format!("{t:?}: {e}"))?,
            },
            None => return Err(format!("unknown metric {s:?}")),
        },
    })
}

fn parse_sweep_mode(s: &str) -> std::result::Result<SweepMode, String> {
    match s {
        "lyapunov" => Ok(SweepMode::Lyapunov),
        "lzs" => Ok(SweepMode::Lzs),
        _ => Err(format!("unknown base mode {s:?}")),
    }
}

fn load(common: Common) -> Result<RawConfig> {
    let file = match &common.config {
        Some(p) => RawConfig::from_file(p)?,
        None => RawConfig::default(),
    };
    let flags = RawConfig {
        mode: common.mode,
        out: common.out,
        format: common.format,
        ..common.fields.into_raw()
    };
    Ok(file.merge(flags))
}

fn resolve(mut raw: RawConfig, forced: Option<RunMode>, allowed: &[RunMode]) -> Result<RunConfig> {
    if let Some(m) = forced {
        if raw.mode.is_some_and(|r| r != m) {
            bail!("invalid mode: this subcommand runs {m:?}");
        }
        raw.mode = Some(m);
    }
    let cfg = raw.resolve()?;
    if !allowed.contains(&cfg.mode) {
        bail!(
            "invalid mode: {:?} is not valid for this subcommand",
            cfg.mode
        );
    }
    if cfg.out.is_none() {
        bail!("invalid out: required key is missing");
    }
    Ok(cfg)
}

fn write_outputs(cfg: &RunConfig, body: &[u8]) -> Result<PathBuf> {
    let out = cfg.out.clone().expect("checked in resolve");
    output::write_file(&out, body)?;
    output::write_file(&sidecar_path(&out), cfg.to_json_pretty()?.as_bytes())?;
    Ok(out)
}

fn print_line(value: serde_json::Value) -> Result<()> {
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "{value}")?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(common) => {
            let raw = load(common)?;
            let cfg = resolve(raw, None, &[RunMode::Lyapunov, RunMode::Lzs])?;
            let traj = runner::run_trajectory(&cfg)?;
            let body = output::emit_trajectory(&traj, cfg.format)?;
            let out = write_outputs(&cfg, &body)?;
            print_line(serde_json::json!({
                "out": out,
                "records": traj.len(),
                "summary": summarize(&traj)?,
            }))
        }
        Command::Analytic(common) => {
            let raw = load(common)?;
            let cfg = resolve(raw, Some(RunMode::AnalyticLzs), &[RunMode::AnalyticLzs])?;
            let rows = runner::run_analytic(&cfg)?;
            let mut body = Vec::new();
            match cfg.format {
                OutputFormat::Csv => output::write_analytic_csv(&rows, &mut body)?,
                OutputFormat::Json => output::write_analytic_json(&rows, &mut body)?,
            }
            let out = write_outputs(&cfg, &body)?;
            print_line(serde_json::json!({ "out": out, "rows": rows.len() }))
        }
        Command::Sweep { common, sweep } => {
            let mut raw = load(common)?;
            raw.sweep = merge_sweep(raw.sweep, sweep)?;
            let cfg = resolve(raw, Some(RunMode::Sweep), &[RunMode::Sweep])?;
            let result = runner::run_sweep_config(&cfg)?;
            let mut body = Vec::new();
            match cfg.format {
                OutputFormat::Csv => output::write_sweep_csv(&result, &mut body)?,
                OutputFormat::Json => output::write_sweep_json(&result, &mut body)?,
            }
            let out = write_outputs(&cfg, &body)?;
            let masked = result.mask.iter().flatten().filter(|&&m| m).count();
            let best = best_point(&result).ok();
            print_line(serde_json::json!({
                "out": out,
                "masked_cells": masked,
                "best": best.map(|(x1, x2, v)| serde_json::json!({
                    result.axis1.name.clone(): x1,
                    result.axis2.name.clone(): x2,
                    "value": v,
                })),
            }))
        }
        Command::ExportBloch {
            common,
            replay_closed,
        } => {
            let raw = load(common)?;
            let cfg = resolve(raw, None, &[RunMode::Lyapunov, RunMode::Lzs])?;
            let mut traj = runner::run_trajectory(&cfg)?;
            if replay_closed {
                traj = runner::replay_closed(&traj, &cfg)?;
            }
            let rows = output::bloch_rows(&traj);
            let mut body = Vec::new();
            match cfg.format {
                OutputFormat::Csv => output::write_bloch_csv(&rows, &mut body)?,
                OutputFormat::Json => output::write_bloch_json(&rows, &mut body)?,
            }
            let out = write_outputs(&cfg, &body)?;
            let max_norm = rows.iter().map(|r| r.bloch_norm).fold(0.0, f64::max);
            print_line(serde_json::json!({
                "out": out,
                "records": rows.len(),
                "replay_closed": replay_closed,
                "max_bloch_norm": max_norm,
            }))
        }
    }
}

fn merge_sweep(file: Option<SweepSection>, flags: SweepFlags) -> Result<Option<SweepSection>> {
    let any_flag = flags.axis1.is_some()
        || flags.axis2.is_some()
        || flags.metric.is_some()
        || flags.base_mode.is_some()
        || flags.p_l_floor.is_some();
    if !any_flag {
        return Ok(file);
    }
    let axis1 = flags
        .axis1
        .or(file.map(|s| s.axis1))
        .context("invalid axis1: required key is missing")?;
    let axis2 = flags
        .axis2
        .or(file.map(|s| s.axis2))
        .context("invalid axis2: required key is missing")?;
    Ok(Some(SweepSection {
        axis1,
        axis2,
        metric: flags
            .metric
            .or(file.map(|s| s.metric))
            .unwrap_or(SweepMetric::MaxPL),
        base_mode: flags
            .base_mode
            .or(file.map(|s| s.base_mode))
            .unwrap_or(SweepMode::Lyapunov),
        p_l_floor: flags.p_l_floor.or(file.and_then(|s| s.p_l_floor)),
    }))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("dqd: {}", first.trim_start_matches("error: ").trim());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("dqd: error: {msg}");
            ExitCode::FAILURE
        }
    }
}
