//! `scatterforge`: generate shapes, simulate loudness images, build the
//! degradation datasets and score predictions.
//!
//! Exit codes: 0 success, 1 invalid input or configuration, 2 finished with
//! failures (see the printed summary and `logs/summary.json`).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use scatterforge::loudness::LoudnessGrid;
use scatterforge::npy;
use scatterforge::pipeline::{self, RunConfig, RunPlan, RunSummary, Stage};
use scatterforge::{Error, Profile, Split};

#[derive(Parser)]
#[command(name = "scatterforge", version, about = "Acoustic scattering datasets and IMED scoring")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// Run configuration (TOML). Without one the profile defaults are used.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "scatterforge-out")]
    out: PathBuf,
    /// Simulation worker threads.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Base seed: training shapes use it, test shapes use seed + 1.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Keep simulation results whose task digest still matches.
    #[arg(long, global = true)]
    resume: bool,
    /// Scene defaults for keys the config leaves out.
    #[arg(long, global = true, value_enum, default_value_t = ProfileArg::Desk)]
    profile: ProfileArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Desk,
    Paper,
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Train,
    Test,
}

impl From<SplitArg> for Split {
    fn from(s: SplitArg) -> Split {
        match s {
            SplitArg::Train => Split::Training,
            SplitArg::Test => Split::Test,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a contiguous range of stages.
    Run {
        #[arg(long, default_value = "gen-shapes")]
        from: String,
        #[arg(long, default_value = "expand")]
        to: String,
    },
    /// Draw the training and test objects.
    GenShapes,
    /// Compute every (object, source, band) loudness grid.
    Simulate,
    /// Rasterize every object into its occupancy target.
    Rasterize,
    /// Assemble the undegraded dataset of each split.
    Pack,
    /// Derive the 24 degraded datasets of each split.
    Expand,
    /// Score `<tag>/predictions/<id>.pred.npy` files and write the report.
    Evaluate {
        #[arg(long, value_enum, default_value_t = SplitArg::Test)]
        split: SplitArg,
        /// Directory holding `<tag>/predictions/`; defaults to the split's datasets.
        #[arg(long)]
        predictions: Option<PathBuf>,
    },
    /// Write one loudness grid as .npy and as a grayscale .pgm.
    DumpGrid {
        #[arg(long, value_enum, default_value_t = SplitArg::Train)]
        split: SplitArg,
        #[arg(long)]
        object: String,
        #[arg(long, default_value_t = 0)]
        source: usize,
        #[arg(long, default_value_t = 0)]
        band: usize,
        /// Output path without extension.
        #[arg(long)]
        dest: PathBuf,
    },
    /// Print the resolved configuration.
    ShowConfig,
}

fn load_config(g: &GlobalArgs) -> Result<RunConfig, Error> {
    let profile = match g.profile {
        ProfileArg::Desk => Profile::Desk,
        ProfileArg::Paper => Profile::Paper,
    };
    let mut cfg = match &g.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            RunConfig::from_toml_str(&text, profile)?
        }
        None => RunConfig::for_profile(profile),
    };
    if let Some(seed) = g.seed {
        cfg.reseed(seed);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn plan(g: &GlobalArgs, stages: Vec<Stage>) -> Result<RunPlan, Error> {
    let mut plan = RunPlan::new(load_config(g)?, &g.out, stages);
    plan.config_path = g.config.clone();
    plan.workers = g.workers;
    plan.resume = g.resume;
    Ok(plan)
}

fn print_summary(summary: &RunSummary) {
    for r in &summary.stages {
        println!(
            "{:<11} {:>6} done {:>6} reused {:>4} failed",
            r.stage.name(),
            r.completed,
            r.skipped,
            r.failures.len()
        );
        for f in &r.failures {
            let channel = match (f.source_index, f.band) {
                (Some(j), Some(i)) => format!(" s{j} b{i}"),
                _ => String::new(),
            };
            println!("  {} {}{channel}: {}", f.split.tag(), f.object, f.error);
        }
        for n in &r.notes {
            println!("  note: {n}");
        }
    }
}

/// 8-bit grayscale, top row = largest y. Unknown cells are black; known
/// cells span 1..=255 between the grid's extreme values.
fn write_pgm(path: &Path, grid: &LoudnessGrid) -> Result<(), Error> {
    let known: Vec<f32> = (0..grid.values.len()).filter(|&k| grid.known[k]).map(|k| grid.values[k]).collect();
    let lo = known.iter().copied().fold(f32::INFINITY, f32::min);
    let hi = known.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut bytes = format!("P5\n{} {}\n255\n", grid.dim, grid.dim).into_bytes();
    for row in (0..grid.dim).rev() {
        for col in 0..grid.dim {
            bytes.push(match grid.get(row, col) {
                Some(v) => 1 + ((v - lo) / span * 254.0).round() as u8,
                None => 0,
            });
        }
    }
    let io = |e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    };
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io)?;
    }
    fs::File::create(path).and_then(|mut f| f.write_all(&bytes)).map_err(io)
}

fn execute(cli: Cli) -> Result<bool, Error> {
    let g = &cli.global;
    let stages = match &cli.command {
        Command::Run { from, to } => {
            let (from, to): (Stage, Stage) = (from.parse()?, to.parse()?);
            Stage::ALL.into_iter().filter(|s| (from..=to).contains(s)).collect()
        }
        Command::GenShapes => vec![Stage::GenShapes],
        Command::Simulate => vec![Stage::Simulate],
        Command::Rasterize => vec![Stage::Rasterize],
        Command::Pack => vec![Stage::Pack],
        Command::Expand => vec![Stage::Expand],
        Command::Evaluate { .. } => vec![Stage::Evaluate],
        Command::DumpGrid {
            split,
            object,
            source,
            band,
            dest,
        } => {
            let plan = plan(g, vec![Stage::Simulate])?;
            let grid = pipeline::object_grid(&plan, (*split).into(), object, *source, *band)?;
            let npy_path = dest.with_extension("npy");
            npy::write_f32(&npy_path, &[grid.dim, grid.dim], &grid.values)?;
            let pgm_path = dest.with_extension("pgm");
            write_pgm(&pgm_path, &grid)?;
            println!("wrote {} and {}", npy_path.display(), pgm_path.display());
            return Ok(true);
        }
        Command::ShowConfig => {
            print!("{}", load_config(g)?.to_toml_string());
            return Ok(true);
        }
    };
    let mut plan = plan(g, stages)?;
    if let Command::Evaluate { split, predictions } = &cli.command {
        plan.evaluate_split = (*split).into();
        plan.predictions = predictions.clone();
    }
    let summary = pipeline::run(&plan)?;
    print_summary(&summary);
    if plan.stages.contains(&Stage::Evaluate) {
        println!("report: {}", plan.predictions_root().join("report.txt").display());
    }
    Ok(summary.is_complete())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
