//! Command-line front end: run experiments from a config file, summarize
//! existing record files, and verify the closed-form estimator oracles.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use guideboot::harness::{
    aggregate, parse_config, parse_records, parse_seeds, run_experiment, write_outputs,
    SummaryRow, AGENT_REGISTRY,
};
use guideboot::oracles::{
    bootstrap_estimator_stats, guideboot_estimator_stats, mc_guideboot_estimator,
};
use guideboot::RngStream;

#[derive(Parser)]
#[command(
    name = "guideboot",
    about = "Guided-bootstrap contextual bandit experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's seeds: `a..b` or a comma list.
        #[arg(long)]
        seeds: Option<String>,
        /// Override the config's agents: comma-separated names.
        #[arg(long)]
        agents: Option<String>,
        /// Directory for the output files (prepended to relative paths).
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Recompute the summary from an existing records file.
    Summarize {
        #[arg(long)]
        records: PathBuf,
    },
    /// Check the single-arm estimator simulation against the closed forms.
    OracleCheck,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run {
            config,
            seeds,
            agents,
            out_dir,
        } => cmd_run(&config, seeds.as_deref(), agents.as_deref(), out_dir.as_deref()),
        Command::Summarize { records } => cmd_summarize(&records),
        Command::OracleCheck => return cmd_oracle_check(),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn cmd_run(
    config_path: &std::path::Path,
    seeds: Option<&str>,
    agents: Option<&str>,
    out_dir: Option<&std::path::Path>,
) -> guideboot::Result<()> {
    let mut config = parse_config(config_path)?;
    if let Some(spec) = seeds {
        config.seeds = parse_seeds(spec).ok_or_else(|| {
            guideboot::Error::invalid_input(format!("bad --seeds `{spec}` (use a..b or a list)"))
        })?;
    }
    if let Some(list) = agents {
        let names: Vec<String> = list
            .split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect();
        for n in &names {
            if !AGENT_REGISTRY.contains(&n.as_str()) {
                return Err(guideboot::Error::invalid_input(format!(
                    "unknown agent `{n}` (registered: {})",
                    AGENT_REGISTRY.join(", ")
                )));
            }
        }
        if names.is_empty() {
            return Err(guideboot::Error::invalid_input("--agents lists no agents"));
        }
        config.agents = names;
    }
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        if config.output.records.is_relative() {
            config.output.records = dir.join(&config.output.records);
        }
        if config.output.summary.is_relative() {
            config.output.summary = dir.join(&config.output.summary);
        }
    }

    let records = run_experiment(&config)?;
    let summary = aggregate(&records)?;
    write_outputs(
        &records,
        &summary,
        &config.output.records,
        &config.output.summary,
    )?;
    print_summary(&summary);
    println!("records: {}", config.output.records.display());
    println!("summary: {}", config.output.summary.display());
    Ok(())
}

fn cmd_summarize(records_path: &std::path::Path) -> guideboot::Result<()> {
    let records = parse_records(records_path)?;
    let summary = aggregate(&records)?;
    print_summary(&summary);
    Ok(())
}

fn print_summary(rows: &[SummaryRow]) {
    println!("{}", guideboot::harness::SUMMARY_HEADER);
    for r in rows {
        println!(
            "{},{},{},{},{}",
            r.agent,
            r.metric,
            guideboot::harness::output::sig6(r.mean),
            guideboot::harness::output::sig6(r.std),
            r.seeds
        );
    }
}

fn cmd_oracle_check() -> ExitCode {
    let mut all_ok = true;
    let alpha = 1.0;
    let n = 50usize;
    let trials = 1_000_000usize;
    for &n_s in &[0usize, 1, 25] {
        let closed = guideboot_estimator_stats(alpha, n as f64, n_s as f64).unwrap();
        let mut rng = RngStream::from_seed(2024).derive("oracle-check").unwrap();
        let mc = mc_guideboot_estimator(alpha, n, n_s, trials, &mut rng).unwrap();
        let se = (closed.variance / trials as f64).sqrt();
        let mean_ok = (mc.mean - closed.mean).abs() < 4.0 * se;
        let var_ok = (mc.variance - closed.variance).abs() / closed.variance < 0.02;
        let ok = mean_ok && var_ok;
        all_ok &= ok;
        println!(
            "{} single-arm moments (n_s = {n_s}): mc mean {:.6} vs closed {:.6} (4se = {:.2e}), mc var {:.3e} vs closed {:.3e}",
            if ok { "PASS" } else { "FAIL" },
            mc.mean,
            closed.mean,
            4.0 * se,
            mc.variance,
            closed.variance,
        );
    }
    let stuck = bootstrap_estimator_stats(50.0, 0.0).unwrap();
    let fixed = guideboot_estimator_stats(1.0, 50.0, 0.0).unwrap();
    let pathology_ok =
        stuck.mean == 0.0 && stuck.variance == 0.0 && fixed.mean > 0.0 && fixed.variance > 0.0;
    all_ok &= pathology_ok;
    println!(
        "{} cold-start pathology: bootstrap (0, 0), guided ({:.6}, {:.3e})",
        if pathology_ok { "PASS" } else { "FAIL" },
        fixed.mean,
        fixed.variance
    );
    if all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
