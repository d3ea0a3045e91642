use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use redsim::scenario::{
    read_report_csv, run_comparison, run_matrix, write_compare_csv, RunOptions, ScenarioConfig,
};
use redsim::topology::{import_cch, parse_edge_list, Level};

mod plot;

/// In-network caching and redundancy elimination simulator.
///
/// Config keys can be overridden with REDSIM_<KEY> environment variables,
/// e.g. REDSIM_SEEDS="[1, 2]".
#[derive(Parser)]
#[command(name = "redsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario matrix and write its report.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        parallel: usize,
        /// Requests per trace, warmup included (overrides n_requests).
        #[arg(long)]
        requests: Option<usize>,
        /// Also write traces, fulfillment logs and SmartRE manifests.
        #[arg(long)]
        export: bool,
    },
    /// Convert a topology to the edge-list format.
    ImportTopology {
        input: PathBuf,
        output: PathBuf,
        #[arg(long, value_enum, default_value_t = InputFormat::Cch)]
        format: InputFormat,
        /// Level to emit; a .cch import yields both.
        #[arg(long, value_enum, default_value_t = LevelArg::Pop)]
        level: LevelArg,
        /// Name written to the header; defaults to the input file stem.
        #[arg(long)]
        name: Option<String>,
    },
    /// Join INCA and SmartRE footprint reductions on the capacity axis.
    Compare {
        #[arg(long)]
        config: PathBuf,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        parallel: usize,
        #[arg(long)]
        requests: Option<usize>,
    },
    /// Draw mean rows of a report as an SVG chart.
    Plot {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = plot::Metric::FootprintReduction)]
        metric: plot::Metric,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum InputFormat {
    /// Rocketfuel router adjacency (`.cch`).
    Cch,
    /// An existing edge list, re-validated and normalized.
    EdgeList,
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Pop,
    Router,
}

impl From<LevelArg> for Level {
    fn from(l: LevelArg) -> Self {
        match l {
            LevelArg::Pop => Level::Pop,
            LevelArg::Router => Level::Router,
        }
    }
}

fn load_config(path: &Path, requests: Option<usize>) -> Result<ScenarioConfig> {
    let source = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut overrides = ScenarioConfig::env_overrides();
    if let Some(n) = requests {
        overrides.push(("n_requests".into(), n.to_string()));
    }
    ScenarioConfig::from_toml_with_overrides(&source, overrides)
        .with_context(|| format!("loading {}", path.display()))
}

fn run(
    config: &Path,
    out: &Path,
    parallel: usize,
    requests: Option<usize>,
    export: bool,
) -> Result<()> {
    let config = load_config(config, requests)?;
    let options = RunOptions {
        parallel,
        export_dir: export.then(|| out.join("export")),
    };
    let report = run_matrix(&config, &options)?;
    report.write_dir(out)?;
    println!(
        "{} rows, config {} -> {}",
        report.rows.len(),
        report.config_hash,
        out.join("report.csv").display()
    );
    Ok(())
}

fn import(
    input: &Path,
    output: &Path,
    format: InputFormat,
    level: Level,
    name: Option<String>,
) -> Result<()> {
    let source =
        fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let name = name.unwrap_or_else(|| {
        input
            .file_stem()
            .map_or_else(|| "imported".into(), |s| s.to_string_lossy().into_owned())
    });
    let topo = match format {
        InputFormat::Cch => {
            let imported = import_cch(&source, &name)?;
            if imported.dropped_routers > 0 {
                eprintln!(
                    "dropped {} routers outside the largest component",
                    imported.dropped_routers
                );
            }
            match level {
                Level::Pop => imported.pops,
                Level::Router => imported.routers,
            }
        }
        InputFormat::EdgeList => parse_edge_list(&source, level)?,
    };
    fs::write(output, topo.to_edge_list())
        .with_context(|| format!("writing {}", output.display()))?;
    println!(
        "{}: {} nodes, {} edges, {} POPs",
        output.display(),
        topo.node_count(),
        topo.edge_count(),
        topo.pop_nodes().len()
    );
    Ok(())
}

fn compare(
    config: &Path,
    out: Option<&Path>,
    parallel: usize,
    requests: Option<usize>,
) -> Result<()> {
    let config = load_config(config, requests)?;
    let rows = run_comparison(
        &config,
        &RunOptions {
            parallel,
            export_dir: None,
        },
    )?;
    match out {
        Some(path) => write_compare_csv(&rows, BufWriter::new(File::create(path)?))?,
        None => write_compare_csv(&rows, io::stdout().lock())?,
    }
    Ok(())
}

fn draw(report: &Path, out: Option<&Path>, metric: plot::Metric) -> Result<()> {
    let rows = read_report_csv(
        File::open(report).with_context(|| format!("reading {}", report.display()))?,
    )?;
    if !rows.iter().any(|r| r.is_mean()) {
        bail!("{} has no mean rows to plot", report.display());
    }
    let svg = plot::render(&rows, metric);
    let path = out.map_or_else(|| report.with_extension("svg"), Path::to_path_buf);
    let mut f = BufWriter::new(File::create(&path)?);
    f.write_all(svg.as_bytes())?;
    f.flush()?;
    println!("{}", path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            out,
            parallel,
            requests,
            export,
        } => run(&config, &out, parallel, requests, export),
        Command::ImportTopology {
            input,
            output,
            format,
            level,
            name,
        } => import(&input, &output, format, level.into(), name),
        Command::Compare {
            config,
            out,
            parallel,
            requests,
        } => compare(&config, out.as_deref(), parallel, requests),
        Command::Plot {
            report,
            out,
            metric,
        } => draw(&report, out.as_deref(), metric),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
