use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use battmon::config::HarnessConfig;
use battmon::export::{case_key, export};
use battmon::harness::run_benchmark;
use battmon::metrics::{Quantity, RmseFormula};
use battmon::rng::derive_seed;
use battmon::scenario::{simulate_truth, Case};
use battmon::{verify, Variant};

#[derive(Parser)]
#[command(
    name = "battmon",
    version,
    about = "Battery state and parameter estimation benchmark"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full benchmark and export tables and time series.
    Run(Common),
    /// Simulate the truth trajectory only.
    Simulate(Common),
    /// List the filter variants and their configuration keys.
    Filters,
    /// Run the built-in self-checks.
    Verify,
}

#[derive(Clone, Copy, ValueEnum)]
enum CaseArg {
    Noise,
    Mismatch,
    Both,
}

#[derive(Args)]
struct Common {
    /// TOML configuration; the shipped default when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    case: Option<CaseArg>,
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo runs.
    #[arg(long)]
    runs: Option<usize>,
    /// Comma-separated subset of ekf,pf,qkf,svsf.
    #[arg(long, value_delimiter = ',')]
    filters: Option<Vec<String>>,
}

impl Common {
    fn resolve(&self) -> Result<HarnessConfig> {
        let mut cfg = match &self.config {
            Some(path) => HarnessConfig::load(path)?,
            None => HarnessConfig::paper_default(),
        };
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if let Some(case) = self.case {
            cfg.cases = match case {
                CaseArg::Noise => vec![Case::NoiseOnly],
                CaseArg::Mismatch => vec![Case::WithModelError],
                CaseArg::Both => Case::ALL.to_vec(),
            };
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(runs) = self.runs {
            cfg.monte_carlo_runs = runs;
        }
        if let Some(names) = &self.filters {
            cfg.filters = names
                .iter()
                .map(|n| Variant::parse(n))
                .collect::<battmon::Result<_>>()?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(common: &Common) -> Result<()> {
    let cfg = common.resolve()?;
    let results = run_benchmark(&cfg)?;
    export(&results, &cfg, &cfg.output_dir)?;
    for r in &results {
        println!("run {} (truth seed {})", r.run, r.truth_seed);
        for c in &r.cases {
            println!("  {}", case_key(c.case));
            println!(
                "    {:<6}{:>12}{:>12}{:>12}{:>12}{:>10}  diverged",
                "", "V_Cb", "V_Cc", "C_b", "C_c", "time s"
            );
            for row in &c.table.rows {
                print!("    {:<6}", row.variant.label());
                for q in Quantity::ALL {
                    print!("{:>12.3e}", row.get(q, RmseFormula::Paper));
                }
                println!("{:>10.3}  {}", row.wall_time_s, if row.diverged { "yes" } else { "no" });
            }
            let order: Vec<&str> = c.ranking.order.iter().map(|v| v.label()).collect();
            println!("    ranking by {}: {}", c.ranking.key, order.join(" < "));
        }
    }
    println!("wrote {}", cfg.output_dir.display());
    Ok(())
}

fn simulate(common: &Common) -> Result<()> {
    let cfg = common.resolve()?;
    std::fs::create_dir_all(&cfg.output_dir).with_context(|| format!("creating {}", cfg.output_dir.display()))?;
    for run in 0..cfg.monte_carlo_runs {
        let truth = simulate_truth(&cfg.scenario(derive_seed(cfg.seed, run as u64, 0))?)?;
        let mut out = String::from("t,i_s,v_cb,v_cc,c_b,c_c,v_o,z1,z2\n");
        for k in 0..truth.len() {
            let row = [
                truth.t[k],
                truth.i_s[k],
                truth.v_cb[k],
                truth.v_cc[k],
                truth.c_b[k],
                truth.c_c[k],
                truth.v_o[k],
                truth.z[k][0],
                truth.z[k][1],
            ];
            let cells: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        let path = cfg.output_dir.join(format!("truth_{run:03}.csv"));
        std::fs::write(&path, out).with_context(|| format!("writing {}", path.display()))?;
        println!("wrote {} ({} samples)", path.display(), truth.len());
    }
    Ok(())
}

fn filters() {
    println!("ekf   extended Kalman filter      estimators.ekf.p0");
    println!("pf    SIR particle filter         estimators.pf.particles, .resample_threshold, .p0");
    println!("qkf   quadrature Kalman filter    estimators.qkf.points_per_dim, .p0");
    println!(
        "svsf  smooth variable structure   estimators.svsf.gamma, .psi, .pseudo_min_drive, .error_bound, .dwell_steps"
    );
    println!("shared: estimators.q, estimators.r, estimators.initial_voltage_offset");
}

fn verify_all() -> Result<()> {
    let mut failed = 0;
    for c in verify::run_all() {
        println!("{} {:<20} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        failed += usize::from(!c.passed);
    }
    if failed > 0 {
        bail!("{failed} self-check(s) failed");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(c) => run(c),
        Command::Simulate(c) => simulate(c),
        Command::Filters => {
            filters();
            Ok(())
        }
        Command::Verify => verify_all(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
