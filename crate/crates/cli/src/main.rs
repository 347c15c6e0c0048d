//! `noma-ec`: effective-capacity sweeps, validation and pairing searches for
//! uplink NOMA, written as CSV.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Outcome;
use crate::config::{Overrides, UsageError};

#[derive(Debug, Parser)]
#[command(name = "noma-ec", version, about = "Effective capacity of uplink NOMA versus OMA")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Closed forms against Monte Carlo for the two-user network.
    ///
    /// Columns: rho_db, rho_linear, ec1_cf, ec1_mc, ec1_se, ec2_cf, ec2_mc,
    /// ec2_se, ec2_method, pass. Exits 1 if any |cf - mc| > 3 se.
    /// Defaults: grid 0..40 dB step 10, 10^6 samples.
    Validate,
    /// Two-user NOMA and OMA ECs over an SNR grid (closed forms).
    ///
    /// Columns: rho_db, rho_linear, ec1, ec2, ec1_oma, ec2_oma, v_n, v_o,
    /// ec2_method. Default grid -10..50 dB step 2.
    SweepSnr,
    /// Two-user ECs over a grid of QoS exponents at one SNR.
    ///
    /// Columns: beta, rho_db, rho_linear, ec1, ec2, ec1_oma, ec2_oma, v_n,
    /// v_o, ec2_method. Both users take the grid value. Default 30 dB.
    SweepDelay,
    /// Per-user and total NOMA minus OMA gaps over an SNR grid.
    ///
    /// Columns: rho_db, rho_linear, gap1, gap2, v_n_minus_v_o, gap2_sign.
    /// The number of sign changes of gap2 goes to stderr.
    Gaps,
    /// Exhaustive search over pairings or groupings of M users.
    ///
    /// Columns: rho_db, rho_linear, rank, partition, total, total_se,
    /// oma_total, oma_se, gain, gain_se, inseparable. Exits 3 if the leader
    /// is within 3 standard errors of another partition. Defaults: M = 4,
    /// groups of 2, 30 dB, 10^5 samples.
    PairingSearch,
    /// Full NOMA, best grouping, best pairing and OMA totals.
    ///
    /// Columns: rho_db, rho_linear, scheme, partition, total, total_se,
    /// margin_to_next, margin_se. Exits 1 if the ordering is violated and 3
    /// if a margin is within 3 standard errors. Defaults: M = 6, 30 dB,
    /// 10^5 samples, powers growing by a factor of 4 from weakest to
    /// strongest inside each group.
    CompareSchemes,
    /// Asymptotic-limit checks for the two-user network and the M = 4 pairing.
    ///
    /// Columns: quantity, label, rho_db, rho_linear, predicted, measured,
    /// tolerance, tolerance_kind, pass. Exits 1 if any check fails.
    Limits,
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    let o = cli.overrides.resolve()?;
    if let Some(t) = o.threads {
        if t == 0 {
            return config::usage("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    match cli.command {
        Command::Validate => commands::validate(&o),
        Command::SweepSnr => commands::sweep_snr(&o),
        Command::SweepDelay => commands::sweep_delay(&o),
        Command::Gaps => commands::gaps(&o),
        Command::PairingSearch => commands::pairing_search(&o),
        Command::CompareSchemes => commands::compare(&o),
        Command::Limits => commands::limits(&o),
    }
}

fn is_usage(err: &anyhow::Error) -> bool {
    err.chain()
        .any(|e| e.is::<UsageError>() || matches!(e.downcast_ref::<noma_ec::Error>(), Some(noma_ec::Error::Domain(_))))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::GateFailure) => ExitCode::from(1),
        Ok(Outcome::Inconclusive) => ExitCode::from(3),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(if is_usage(&err) { 2 } else { 1 })
        }
    }
}
