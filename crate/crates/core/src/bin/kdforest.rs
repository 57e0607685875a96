//! Benchmark and verification CLI.
//!
//! Subcommands: `build-bench`, `knn-bench`, `forest-bench`, `verify`. All
//! emit the measurement CSV (stdout, or `--out <path>`); `verify` prints a
//! pass/fail table and exits nonzero on any failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use kdforest::bench::{
    self, BenchRecord, BenchSpec, Distribution, Mode, Scenario,
};
use kdforest::tree::SplitPolicy;

// Registered here so `verify`'s allocation-freedom audit observes every
// allocation the process makes.
#[global_allocator]
static ALLOC: kdforest::audit::CountingAlloc = kdforest::audit::CountingAlloc;

#[derive(Parser)]
#[command(name = "kdforest", version, about = "Deterministic kd-tree / interval-forest benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Measure tree build time across sizes.
    BuildBench(CommonArgs),
    /// Measure KNN query cost (wall time and node visits).
    KnnBench(CommonArgs),
    /// Compare one tree against a planned forest on the same data.
    ForestBench(CommonArgs),
    /// Run the exactness, memory-discipline, and determinism checks.
    Verify(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Comma-separated, strictly ascending node counts.
    #[arg(long, value_delimiter = ',', default_value = "1000")]
    sizes: Vec<usize>,
    /// Coordinate dimensionality D.
    #[arg(long, default_value_t = 3)]
    dims: usize,
    /// Neighbors per query.
    #[arg(long, default_value_t = 30)]
    k: usize,
    /// Rebuild threshold b (growth ratio that triggers a rebuild).
    #[arg(long, default_value_t = 2.0)]
    threshold: f64,
    /// Split policy: global-median | node-split.
    #[arg(long, default_value = "node-split", value_parser = parse_policy)]
    policy: SplitPolicy,
    /// Query mode: exact | path-descent | single-tree | exact-forest.
    #[arg(long, default_value = "exact", value_parser = parse_mode)]
    mode: Mode,
    /// Automatic rebuilds: on | off.
    #[arg(long, default_value = "on", value_parser = parse_on_off)]
    rebuild: bool,
    /// Input distribution: uniform | drift | orthant.
    #[arg(long, default_value = "uniform", value_parser = parse_dist)]
    dist: Distribution,
    /// PRNG seed; fixes datasets, queries, and every counter column.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Repetitions (timing runs or queries, per scenario).
    #[arg(long, default_value_t = 3)]
    reps: usize,
    /// CSV output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_policy(s: &str) -> Result<SplitPolicy, String> {
    SplitPolicy::from_label(s).ok_or_else(|| format!("expected global-median|node-split, got '{s}'"))
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    Mode::from_label(s)
        .ok_or_else(|| format!("expected exact|path-descent|single-tree|exact-forest, got '{s}'"))
}

fn parse_dist(s: &str) -> Result<Distribution, String> {
    Distribution::from_label(s).ok_or_else(|| format!("expected uniform|drift|orthant, got '{s}'"))
}

fn parse_on_off(s: &str) -> Result<bool, String> {
    match s {
        "on" => Ok(true),
        "off" => Ok(false),
        _ => Err(format!("expected on|off, got '{s}'")),
    }
}

impl CommonArgs {
    fn into_spec(self, scenario: Scenario) -> BenchSpec {
        BenchSpec {
            scenario,
            sizes: self.sizes,
            dims: self.dims,
            k: self.k,
            threshold: self.threshold,
            policy: self.policy,
            mode: self.mode,
            rebuild_enabled: self.rebuild,
            distribution: self.dist,
            seed: self.seed,
            repetitions: self.reps,
            out: self.out,
        }
    }
}

fn emit(spec: &BenchSpec, records: &[BenchRecord]) -> std::io::Result<()> {
    match &spec.out {
        Some(path) => {
            bench::emit_csv_path(path, records)?;
            eprintln!("wrote {} rows to {}", records.len(), path.display());
            Ok(())
        }
        None => bench::write_csv(&mut std::io::stdout().lock(), records),
    }
}

fn wall_summary(records: &[BenchRecord]) {
    use std::collections::BTreeMap;
    let mut groups: BTreeMap<(String, usize, &'static str), Vec<u64>> = BTreeMap::new();
    for r in records {
        groups.entry((r.scenario.clone(), r.n, r.mode.label())).or_default().push(r.wall_nanos);
    }
    for ((scenario, n, mode), mut walls) in groups {
        walls.sort_unstable();
        let mean = walls.iter().sum::<u64>() / walls.len() as u64;
        let median = walls[walls.len() / 2];
        eprintln!(
            "{scenario} n={n} mode={mode} reps={} mean_ns={mean} median_ns={median}",
            walls.len()
        );
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Box<dyn std::error::Error>> {
    match cli.command {
        Command::BuildBench(args) => {
            let spec = args.into_spec(Scenario::Build);
            let records = bench::run_build(&spec)?;
            emit(&spec, &records)?;
            wall_summary(&records);
            Ok(ExitCode::SUCCESS)
        }
        Command::KnnBench(args) => {
            let spec = args.into_spec(Scenario::Knn);
            let records = bench::run_knn(&spec)?;
            emit(&spec, &records)?;
            wall_summary(&records);
            Ok(ExitCode::SUCCESS)
        }
        Command::ForestBench(args) => {
            let spec = args.into_spec(Scenario::Forest);
            let (records, stats) = bench::run_forest(&spec)?;
            emit(&spec, &records)?;
            for s in &stats {
                eprintln!(
                    "plan n={} trees={} per_tree_capacity={}",
                    s.n, s.plan_trees, s.plan_capacity
                );
                eprintln!(
                    "rebuild-work n={}: single rebuilds={} total={} max={} | forest rebuilds={} total={} max={} | max_probes={}",
                    s.n,
                    s.single_rebuilds,
                    s.single_work,
                    s.single_max_work,
                    s.forest_rebuilds,
                    s.forest_work,
                    s.forest_max_work,
                    s.max_probes
                );
            }
            wall_summary(&records);
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify(args) => {
            let spec = args.into_spec(Scenario::Verify);
            let (report, records) = bench::run_verify(&spec)?;
            report.write_table(&mut std::io::stdout().lock())?;
            if let Some(path) = &spec.out {
                bench::emit_csv_path(path, &records)?;
                eprintln!("wrote {} rows to {}", records.len(), path.display());
            }
            Ok(if report.all_pass() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}
