use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sojourn::analytic::{aggregate_metrics, AnalyticOptions, AnalyticReport};
use sojourn::compare::{compare_results, render as render_comparison, Verdict};
use sojourn::error::exit;
use sojourn::identities::{render as render_identities, run_suite};
use sojourn::output::{write_analytic, write_json, write_manifest, write_simulation, FileEntry, Manifest, Units};
use sojourn::scenario::{GridSpec, Scenario};
use sojourn::sim::{simulate, SimSummary};
use sojourn::{Error, Result};

/// Sojourn times and handoff rates in K-tier Poisson cellular networks.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the analytic curves and metrics.
    Analyze(RunArgs),
    /// Run the Monte Carlo simulator.
    Simulate(RunArgs),
    /// Run both and compare them.
    Compare(RunArgs),
    /// Run the built-in identity checks.
    Validate,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory; overrides the scenario's `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the scenario's simulation seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Linear grid `a:b:n`; overrides the scenario's grid.
    #[arg(long)]
    grid: Option<String>,
}

struct Run {
    scenario: Scenario,
    out: PathBuf,
    seed: Option<u64>,
}

impl Run {
    fn load(args: &RunArgs) -> Result<Self> {
        let mut scenario = Scenario::load(&args.scenario)?;
        if let Some(g) = &args.grid {
            scenario.analysis.grid = GridSpec::parse_cli(g)?;
            scenario.validate()?;
        }
        let out = args.out.clone().unwrap_or_else(|| scenario.output.dir.clone());
        Ok(Self {
            scenario,
            out,
            seed: args.seed,
        })
    }

    fn manifest(&self, command: &str, seed: Option<u64>, files: Vec<FileEntry>) -> Result<()> {
        write_manifest(
            &self.out,
            &Manifest {
                command: command.into(),
                units: Units::default(),
                scenario: self.scenario.clone(),
                seed,
                files,
            },
        )
    }

    fn analytic(&self) -> Result<AnalyticReport> {
        let net = self.scenario.network()?;
        let grid = self.scenario.grid(&net)?;
        aggregate_metrics(&net, &self.scenario.mobility, &grid, &AnalyticOptions::default())
    }

    fn simulation(&self) -> Result<SimSummary> {
        let net = self.scenario.network()?;
        let grid = self.scenario.grid(&net)?;
        let cfg = self.scenario.sim_config(&net, self.seed)?;
        simulate(&net, &self.scenario.mobility, &cfg, &grid)
    }
}

fn analytic_table(r: &AnalyticReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>4} {:>10} {:>12} {:>12} {:>12} {:>12} {:>10}",
        "tier", "P(tier)", "E[S]", "H", "H (TTT)", "ping-pong", "time frac"
    );
    for (k, t) in r.metrics.tiers.iter().enumerate() {
        let _ = writeln!(
            s,
            "{:>4} {:>10.6} {:>12.6} {:>12.6} {:>12.6} {:>12.6} {:>10.6}",
            k + 1,
            t.association_prob,
            t.mean_sojourn,
            t.handoff_rate,
            t.effective_handoff_rate,
            t.ping_pong_rate,
            t.time_fraction
        );
    }
    let _ = writeln!(
        s,
        " all {:>10} {:>12.6} {:>12.6}",
        "",
        r.metrics.mean_sojourn_unconditional,
        r.metrics.total_handoff_rate
    );
    s
}

fn sim_table(s: &SimSummary) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "seed {} replications {} horizon {}", s.seed, s.replications, s.horizon);
    let _ = writeln!(
        out,
        "{:>4} {:>22} {:>22} {:>22} {:>8}",
        "tier", "H", "E[S]", "time frac", "dwells"
    );
    for k in 0..s.handoff_rate.len() {
        let e = |x: sojourn::sim::Estimate| format!("{:.6} +- {:.1e}", x.value, x.stderr);
        let _ = writeln!(
            out,
            "{:>4} {:>22} {:>22} {:>22} {:>8}",
            k + 1,
            e(s.handoff_rate[k]),
            e(s.mean_sojourn[k]),
            e(s.time_fraction[k]),
            s.sojourn_counts[k]
        );
    }
    for w in &s.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    out
}

fn analyze(args: &RunArgs) -> Result<i32> {
    let run = Run::load(args)?;
    let report = run.analytic()?;
    let files = write_analytic(&run.out, &report)?;
    run.manifest("analyze", None, files)?;
    print!("{}", analytic_table(&report));
    Ok(exit::OK)
}

fn simulate_cmd(args: &RunArgs) -> Result<i32> {
    let run = Run::load(args)?;
    if run.scenario.simulation.is_none() {
        return Err(Error::Scenario("simulate needs a `simulation` section".into()));
    }
    let summary = run.simulation()?;
    for w in &summary.warnings {
        eprintln!("warning: {w}");
    }
    let files = write_simulation(&run.out, &summary)?;
    run.manifest("simulate", Some(summary.seed), files)?;
    print!("{}", sim_table(&summary));
    Ok(exit::OK)
}

fn compare_cmd(args: &RunArgs) -> Result<i32> {
    let run = Run::load(args)?;
    let report = run.analytic()?;
    let summary = run.simulation()?;
    let cmp = compare_results(&report, &summary)?;
    let mut files = write_analytic(&run.out, &report)?;
    files.extend(write_simulation(&run.out, &summary)?);
    write_json(&run.out.join("comparison.json"), &cmp)?;
    files.push(FileEntry {
        file: "comparison.json".into(),
        quantity: "comparison".into(),
        tier: None,
        provenance: sojourn::model::Provenance::Empirical,
    });
    run.manifest("compare", Some(summary.seed), files)?;
    for w in &summary.warnings {
        eprintln!("warning: {w}");
    }
    print!("{}", render_comparison(&cmp));
    Ok(if cmp.verdict == Verdict::Pass { exit::OK } else { exit::VERDICT })
}

fn validate() -> Result<i32> {
    let checks = run_suite()?;
    print!("{}", render_identities(&checks));
    Ok(if checks.iter().all(|c| c.passed) { exit::OK } else { exit::IDENTITY })
}

fn run(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Simulate(a) => simulate_cmd(a),
        Command::Compare(a) => compare_cmd(a),
        Command::Validate => validate(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
