//! Command-line front end: single solves, profile generation, schedule
//! verification and Monte Carlo sweeps.
//!
//! Flags use presentation units (mW, mJ, ms, kbits); file formats are SI
//! (seconds, watts, joules, bits). Exit codes: 0 success, 1 usage or input
//! error, 2 infeasible instance or failed verification, 3 internal error.

use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use ehrelay::baselines::{
    fixed_power_rmax, fixed_power_tmin, fixed_scheduling_rmax, fixed_scheduling_tmin,
    upper_bound_rmax, upper_bound_tmin,
};
use ehrelay::dwf::{compute_dwf, DwfDecomposition};
use ehrelay::oracle::{check_feasibility_with_model, FeasibilityReport};
use ehrelay::profile::{generate_poisson, ArrivalGenConfig};
use ehrelay::rmax::rmax;
use ehrelay::sweep::{run_sweep, SweepConfig, SweepObjective, SweepVariable, CSV_HEADER};
use ehrelay::tmin::tmin;
use ehrelay::{EhProfile, Error, RateModel, RelayConstraints, TransmissionPolicy};

#[derive(Parser)]
#[command(
    name = "ehrelay",
    about = "Scheduling and power allocation for an energy-harvesting source \
             behind a half-duplex relay",
    version
)]
struct Cli {
    #[command(flatten)]
    model: ModelArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ModelArgs {
    /// Channel bandwidth, Hz.
    #[arg(long, global = true, default_value_t = 1e6)]
    bandwidth_hz: f64,
    /// Noise power spectral density, W/Hz.
    #[arg(long, global = true, default_value_t = 1e-19)]
    noise_density_w_per_hz: f64,
    /// Path loss, dB.
    #[arg(long, global = true, default_value_t = 100.0)]
    path_loss_db: f64,
}

#[derive(Args)]
struct RelayArgs {
    /// Relay peak transmit power, mW.
    #[arg(long)]
    peak_mw: Option<f64>,
    /// Relay total energy budget, mJ.
    #[arg(long)]
    relay_energy_mj: Option<f64>,
}

impl RelayArgs {
    fn constraints(&self) -> Result<RelayConstraints, Error> {
        let c = RelayConstraints {
            peak_power_w: self.peak_mw.map(|v| v * 1e-3),
            total_energy_j: self.relay_energy_mj.map(|v| v * 1e-3),
        };
        c.validate()?;
        Ok(c)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineKindArg {
    FixedScheduling,
    FixedPower,
    UpperBound,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Rmax,
    Tmin,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariableArg {
    EhRate,
    RelayPeak,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a random arrival profile from a Poisson process.
    GenProfile {
        /// Mean arrival rate, 1/s.
        #[arg(long)]
        lambda_e: f64,
        /// Energy per arrival, mJ.
        #[arg(long)]
        energy_unit_mj: f64,
        /// Generation window, ms.
        #[arg(long)]
        horizon_ms: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Water-filling decomposition of a profile.
    Dwf {
        /// Profile JSON file.
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        horizon_ms: f64,
        #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
        format: OutputFormat,
    },
    /// Maximize delivered data over a fixed horizon.
    Rmax {
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        horizon_ms: f64,
        #[command(flatten)]
        relay: RelayArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Minimize the completion time of a fixed payload.
    Tmin {
        #[arg(long)]
        profile: PathBuf,
        /// Payload, kbits.
        #[arg(long)]
        data_kbits: f64,
        #[command(flatten)]
        relay: RelayArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a comparison policy instead of the optimal one.
    Baseline {
        #[arg(long, value_enum)]
        kind: BaselineKindArg,
        #[arg(long, value_enum)]
        objective: ObjectiveArg,
        #[arg(long)]
        profile: PathBuf,
        /// Horizon for the rmax objective, ms.
        #[arg(long)]
        horizon_ms: Option<f64>,
        /// Payload for the tmin objective, kbits.
        #[arg(long)]
        data_kbits: Option<f64>,
        #[command(flatten)]
        relay: RelayArgs,
    },
    /// Check a schedule against a profile and the relay limits.
    Verify {
        /// Policy JSON: either a bare stage list object or a solver output.
        #[arg(long)]
        policy: PathBuf,
        #[arg(long)]
        profile: PathBuf,
        /// Horizon to enforce, ms (defaults to the end of the schedule).
        #[arg(long)]
        horizon_ms: Option<f64>,
        #[command(flatten)]
        relay: RelayArgs,
    },
    /// Monte Carlo sweep emitting one CSV row per swept value.
    Sweep {
        #[arg(long, value_enum)]
        objective: ObjectiveArg,
        #[arg(long, value_enum)]
        variable: VariableArg,
        /// Swept values, mW, comma separated. Defaults: 1,2,3,4,5 for the
        /// harvest rate; 2,5,10,20,50 for the relay peak.
        #[arg(long, value_delimiter = ',')]
        values_mw: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 1.0)]
        lambda_e: f64,
        #[arg(long, default_value_t = 100.0)]
        horizon_ms: f64,
        #[arg(long, default_value_t = 20.0)]
        data_kbits: f64,
        /// Average harvest rate when sweeping the relay peak, mW.
        #[arg(long, default_value_t = 3.0)]
        eh_rate_mw: f64,
        #[arg(long, default_value_t = 10.0)]
        peak_mw: f64,
        #[arg(long)]
        relay_energy_mj: Option<f64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output CSV file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Serialize)]
struct RmaxOutput {
    throughput_bits: f64,
    dwf: DwfDecomposition,
    policy: TransmissionPolicy,
}

#[derive(Serialize)]
struct TminOutput {
    completion_time_s: f64,
    dwf: DwfDecomposition,
    policy: TransmissionPolicy,
}

#[derive(Serialize)]
struct BaselineOutput {
    kind: String,
    objective: String,
    /// Bits for the rmax objective, seconds for the tmin objective.
    value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    policy: Option<TransmissionPolicy>,
}

/// Accepts either a bare policy or any solver output wrapping one.
#[derive(Deserialize)]
struct PolicyFile {
    #[serde(default)]
    policy: Option<TransmissionPolicy>,
    #[serde(default)]
    stages: Option<Vec<ehrelay::Stage>>,
}

enum CliError {
    Usage(String),
    Solver(Error),
    Violations,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Solver(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(format!("io error: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Usage(format!("json error: {e}"))
    }
}

fn read_profile(path: &PathBuf) -> Result<EhProfile, CliError> {
    let text = fs::read_to_string(path)?;
    let profile: EhProfile = serde_json::from_str(&text)?;
    profile.validate()?;
    Ok(profile)
}

fn read_policy(path: &PathBuf) -> Result<TransmissionPolicy, CliError> {
    let text = fs::read_to_string(path)?;
    let parsed: PolicyFile = serde_json::from_str(&text)?;
    let policy = match (parsed.policy, parsed.stages) {
        (Some(p), _) => p,
        (None, Some(stages)) => TransmissionPolicy { stages },
        (None, None) => {
            return Err(CliError::Usage(
                "policy file has neither a `policy` object nor a `stages` list".into(),
            ))
        }
    };
    policy.validate_structure()?;
    Ok(policy)
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let model = RateModel::with_path_loss_db(
        cli.model.bandwidth_hz,
        cli.model.noise_density_w_per_hz,
        cli.model.path_loss_db,
    )?;
    match cli.command {
        Command::GenProfile { lambda_e, energy_unit_mj, horizon_ms, seed, out } => {
            let cfg = ArrivalGenConfig {
                arrival_rate_per_s: lambda_e,
                energy_unit_j: energy_unit_mj * 1e-3,
                horizon_s: horizon_ms * 1e-3,
                seed,
            };
            let profile = generate_poisson(&cfg)?;
            emit(&out, &format!("{}\n", serde_json::to_string_pretty(&profile)?))
        }
        Command::Dwf { profile, horizon_ms, format } => {
            let p = read_profile(&profile)?;
            let d = compute_dwf(&p, horizon_ms * 1e-3)?;
            match format {
                OutputFormat::Json => {
                    emit(&None, &format!("{}\n", serde_json::to_string_pretty(&d)?))
                }
                OutputFormat::Csv => {
                    let mut text = String::from("k,point_time_s,length_s,energy_j,power_w\n");
                    for k in 0..d.interval_count() {
                        text.push_str(&format!(
                            "{},{},{},{},{}\n",
                            k,
                            d.point_times_s[k],
                            d.interval_lengths_s[k],
                            d.interval_energies_j[k],
                            d.single_hop_powers_w[k]
                        ));
                    }
                    emit(&None, &text)
                }
            }
        }
        Command::Rmax { profile, horizon_ms, relay, out } => {
            let p = read_profile(&profile)?;
            let c = relay.constraints()?;
            let sol = rmax(&p, horizon_ms * 1e-3, &c, &model)?;
            let output = RmaxOutput {
                throughput_bits: sol.throughput_bits,
                dwf: sol.decomposition,
                policy: sol.policy,
            };
            emit(&out, &format!("{}\n", serde_json::to_string_pretty(&output)?))
        }
        Command::Tmin { profile, data_kbits, relay, out } => {
            let p = read_profile(&profile)?;
            let c = relay.constraints()?;
            let sol = tmin(&p, data_kbits * 1e3, &c, &model)?;
            let output = TminOutput {
                completion_time_s: sol.completion_time_s,
                dwf: sol.decomposition,
                policy: sol.policy,
            };
            emit(&out, &format!("{}\n", serde_json::to_string_pretty(&output)?))
        }
        Command::Baseline { kind, objective, profile, horizon_ms, data_kbits, relay } => {
            let p = read_profile(&profile)?;
            let c = relay.constraints()?;
            let (kind_name, value, policy) = match objective {
                ObjectiveArg::Rmax => {
                    let horizon = horizon_ms
                        .ok_or_else(|| CliError::Usage("--horizon-ms is required for rmax".into()))?
                        * 1e-3;
                    match kind {
                        BaselineKindArg::FixedScheduling => {
                            let (policy, v) = fixed_scheduling_rmax(&p, horizon, &c, &model)?;
                            ("fixed_scheduling", v, Some(policy))
                        }
                        BaselineKindArg::FixedPower => {
                            let (policy, v) = fixed_power_rmax(&p, horizon, &c, &model)?;
                            ("fixed_power", v, Some(policy))
                        }
                        BaselineKindArg::UpperBound => {
                            ("upper_bound", upper_bound_rmax(&p, horizon, &c, &model)?, None)
                        }
                    }
                }
                ObjectiveArg::Tmin => {
                    let data = data_kbits
                        .ok_or_else(|| CliError::Usage("--data-kbits is required for tmin".into()))?
                        * 1e3;
                    match kind {
                        BaselineKindArg::FixedScheduling => {
                            let (policy, v) = fixed_scheduling_tmin(&p, data, &c, &model)?;
                            ("fixed_scheduling", v, Some(policy))
                        }
                        BaselineKindArg::FixedPower => {
                            let (policy, v) = fixed_power_tmin(&p, data, &c, &model)?;
                            ("fixed_power", v, Some(policy))
                        }
                        BaselineKindArg::UpperBound => {
                            ("upper_bound", upper_bound_tmin(&p, data, &c, &model)?, None)
                        }
                    }
                }
            };
            let output = BaselineOutput {
                kind: kind_name.to_string(),
                objective: match objective {
                    ObjectiveArg::Rmax => "rmax".to_string(),
                    ObjectiveArg::Tmin => "tmin".to_string(),
                },
                value,
                policy,
            };
            emit(&None, &format!("{}\n", serde_json::to_string_pretty(&output)?))
        }
        Command::Verify { policy, profile, horizon_ms, relay } => {
            let p = read_profile(&profile)?;
            let pol = read_policy(&policy)?;
            let c = RelayConstraints {
                peak_power_w: relay.peak_mw.map(|v| v * 1e-3),
                total_energy_j: relay.relay_energy_mj.map(|v| v * 1e-3),
            };
            let horizon = horizon_ms.map_or_else(|| pol.end_time_s(), |v| v * 1e-3);
            let report: FeasibilityReport =
                check_feasibility_with_model(&pol, &p, &c, horizon, &model)?;
            emit(&None, &format!("{}\n", serde_json::to_string_pretty(&report)?))?;
            if report.ok {
                Ok(())
            } else {
                Err(CliError::Violations)
            }
        }
        Command::Sweep {
            objective,
            variable,
            values_mw,
            trials,
            lambda_e,
            horizon_ms,
            data_kbits,
            eh_rate_mw,
            peak_mw,
            relay_energy_mj,
            seed,
            out,
        } => {
            let variable = match variable {
                VariableArg::EhRate => SweepVariable::EhRate,
                VariableArg::RelayPeak => SweepVariable::RelayPeak,
            };
            let values_mw = values_mw.unwrap_or_else(|| match variable {
                SweepVariable::EhRate => vec![1.0, 2.0, 3.0, 4.0, 5.0],
                SweepVariable::RelayPeak => vec![2.0, 5.0, 10.0, 20.0, 50.0],
            });
            let cfg = SweepConfig {
                objective: match objective {
                    ObjectiveArg::Rmax => SweepObjective::Rmax,
                    ObjectiveArg::Tmin => SweepObjective::Tmin,
                },
                variable,
                values: values_mw.iter().map(|v| v * 1e-3).collect(),
                trials,
                lambda_e_per_s: lambda_e,
                horizon_s: horizon_ms * 1e-3,
                data_bits: data_kbits * 1e3,
                avg_eh_rate_w: eh_rate_mw * 1e-3,
                relay: RelayConstraints {
                    peak_power_w: Some(peak_mw * 1e-3),
                    total_energy_j: relay_energy_mj.map(|v| v * 1e-3),
                },
                seed,
            };
            let rows = run_sweep(&cfg, &model)?;
            let mut text = format!("{CSV_HEADER}\n");
            for row in rows {
                text.push_str(&row.to_csv_line());
                text.push('\n');
            }
            emit(&out, &text)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are not errors.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Solver(e)) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::InvalidInput(_) | Error::TooLarge(_) => 1,
                Error::Infeasible(_) => 2,
                Error::Internal(_) => 3,
            };
            ExitCode::from(code)
        }
        Err(CliError::Violations) => ExitCode::from(2),
    }
}
