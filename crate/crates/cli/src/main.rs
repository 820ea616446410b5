//! Command-line front end for the spectral-sentinel toolkit.
//!
//! Subcommands: `diagnose`, `smooth`, `simulate`, `verify`, `gen-matrix`.
//! Exit codes: 0 success, 1 verification failure, 2 usage/parse error,
//! 3 degenerate input, 4 simulated divergence.

mod commands;
mod config;
mod jsonout;
mod matio;

use commands::{
    cmd_diagnose, cmd_gen_matrix, cmd_simulate, cmd_smooth, cmd_verify, EXIT_USAGE,
};

const USAGE: &str = "\
spectral-sentinel — stable-rank diagnostics and spectrum smoothing

USAGE:
  spectral-sentinel diagnose <matrix> [--alignment-with <matrix>]
  spectral-sentinel smooth <matrix> --policy conv|softmax|clip|log
                    [--params <spec>] --out <path> [--seed N] [--exact]
  spectral-sentinel simulate --trace <out.csv> [--d N] [--t N] [--eta F]
                    [--steps N] [--seed N] [--spectrum geometric:R|explicit:v1,..]
                    [--pss on|off] [--tau F] [--alpha F] [--policy P]
                    [--engine structured|mc] [--batch N] [--c F|auto|inf]
  spectral-sentinel verify [--theorem sr|align|repr|bounds|psign|all]
                    [--seeds N] [--config <file>] [key=value ...]
  spectral-sentinel gen-matrix --kind gaussian|diag:v1,v2,..|lowrank:k
                    --out <path> [--rows N] [--cols N] [--seed N]
                    [--format ssm1|csv]

Matrix files are SSM1 binaries or headerless CSV; SSM1 is canonical.
The environment variable SPECTRAL_SENTINEL_SEED supplies a default seed
(the --seed flag wins).

Exit codes: 0 ok, 1 verification failure, 2 usage error, 3 degenerate
input, 4 simulated divergence.
";

fn main() {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let Some(command) = argv.first() else {
        eprint!("{USAGE}");
        std::process::exit(EXIT_USAGE);
    };
    let rest = &argv[1..];
    let result = match command.as_str() {
        "diagnose" => cmd_diagnose(rest),
        "smooth" => cmd_smooth(rest),
        "simulate" => cmd_simulate(rest),
        "verify" => cmd_verify(rest),
        "gen-matrix" => cmd_gen_matrix(rest),
        "--help" | "-h" | "help" => {
            print!("{USAGE}");
            return;
        }
        other => {
            eprintln!("unknown command '{other}'");
            eprint!("{USAGE}");
            std::process::exit(EXIT_USAGE);
        }
    };
    match result {
        Ok(code) => std::process::exit(code),
        Err(failure) => {
            eprintln!("{}", failure.message);
            std::process::exit(failure.code);
        }
    }
}
