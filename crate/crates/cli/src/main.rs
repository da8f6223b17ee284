//! `anahita` command-line front end.
//!
//! Exit codes: 0 success, 1 other runtime error, 2 file or parse error,
//! 3 numerical divergence of the vehicle simulation.

mod plot;
mod sim;
mod tools;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub msg: String,
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        Self { code: 2, msg: msg.into() }
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        Self { code: 1, msg: msg.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.msg)
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;

pub fn read_text(path: &std::path::Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

pub fn read_bytes(path: &std::path::Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

pub fn write_file(path: &std::path::Path, data: impl AsRef<[u8]>) -> CliResult {
    std::fs::write(path, data).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))
}

#[derive(Parser, Debug)]
#[command(name = "anahita", version, about = "AUV simulator and autonomy stack")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Mission simulation.
    #[command(subcommand)]
    Sim(SimCommand),
    /// Thrust allocation for a body-frame wrench.
    Allocate(AllocateArgs),
    /// Camera pipeline on PPM/PGM images.
    #[command(subcommand)]
    Vision(VisionCommand),
    /// Hydrophone trace synthesis and bearing estimation.
    #[command(subcommand)]
    Acoustics(AcousticsCommand),
    /// Telemetry columns to an SVG line chart.
    Plot(PlotArgs),
    /// Print the vehicle parameter file in effect for a scenario.
    Params(ParamsArgs),
}

#[derive(Subcommand, Debug)]
enum SimCommand {
    /// Run a mission plan against one or more scenarios.
    Run(SimRunArgs),
}

#[derive(Args, Debug)]
pub struct SimRunArgs {
    /// Scenario file; repeat for several independent runs.
    #[arg(long, required = true)]
    pub scenario: Vec<PathBuf>,
    #[arg(long)]
    pub plan: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the integration step, s.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Overrides the simulated duration, s.
    #[arg(long)]
    pub duration: Option<f64>,
    /// Output directory; one subdirectory per scenario when several are given.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Scenarios simulated concurrently.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Args, Debug)]
pub struct AllocateArgs {
    /// X Y Z K M N.
    #[arg(long, num_args = 6, allow_negative_numbers = true, required = true)]
    pub tau: Vec<f64>,
    /// Vehicle parameter file (`[vehicle]` section) for the lever arms.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Per-thruster limit, N; defaults to the vehicle's.
    #[arg(long)]
    pub t_max: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum VisionCommand {
    /// White balance plus CLAHE (or either stage alone).
    Enhance(EnhanceArgs),
    /// Threshold, close and find the target blob.
    Detect(DetectArgs),
    /// Render the scenario's world from a camera pose.
    Render(RenderArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum EnhanceMethod {
    Blue,
    WhiteBalance,
    Clahe,
}

#[derive(Args, Debug)]
pub struct EnhanceArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = EnhanceMethod::Blue)]
    pub method: EnhanceMethod,
    #[arg(long, default_value_t = 0.005)]
    pub discard_ratio: f64,
    #[arg(long, default_value_t = 2.0)]
    pub clip_limit: f64,
}

#[derive(Args, Debug)]
pub struct DetectArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// `h_min h_max s_min s_max v_min v_max`.
    #[arg(long)]
    pub threshold: String,
    /// contour or hough.
    #[arg(long, default_value = "contour")]
    pub mode: String,
    #[arg(long, default_value_t = 50)]
    pub min_area: usize,
    #[arg(long, default_value_t = 5)]
    pub kernel: usize,
    /// Two or more `dim:distance` pairs for range estimation.
    #[arg(long, num_args = 2..)]
    pub calibration: Vec<String>,
    /// Writes the closed threshold mask as PGM.
    #[arg(long)]
    pub mask: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum CameraArg {
    Front,
    Bottom,
}

#[derive(Args, Debug)]
pub struct RenderArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, value_enum, default_value_t = CameraArg::Front)]
    pub camera: CameraArg,
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    pub x: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    pub y: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 1.0)]
    pub z: f64,
    /// Heading, degrees.
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    pub yaw: f64,
    /// Applies water attenuation for this range, m.
    #[arg(long)]
    pub degrade: Option<f64>,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Subcommand, Debug)]
enum AcousticsCommand {
    /// Heading from four conditioned traces `ch0.txt`..`ch3.txt` plus `fs.cfg`.
    Locate(LocateArgs),
    /// Writes one conditioned ping in the format `locate` reads.
    Synth(SynthArgs),
}

#[derive(Args, Debug)]
pub struct LocateArgs {
    #[arg(long)]
    pub traces: PathBuf,
    /// Scenario whose `[acoustics]` section sets the array geometry.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Pinger position in the body frame, m.
    #[arg(long, allow_negative_numbers = true)]
    pub x: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub y: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    pub z: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct PlotArgs {
    #[arg(long)]
    pub telemetry: PathBuf,
    /// Comma-separated column names, e.g. `x,y,z`.
    #[arg(long, default_value = "x,y,z,psi")]
    pub columns: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ParamsArgs {
    #[arg(long)]
    pub scenario: Option<PathBuf>,
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Sim(SimCommand::Run(a)) => sim::run(&a),
        Command::Allocate(a) => tools::allocate(&a),
        Command::Vision(VisionCommand::Enhance(a)) => tools::enhance(&a),
        Command::Vision(VisionCommand::Detect(a)) => tools::detect(&a),
        Command::Vision(VisionCommand::Render(a)) => tools::render(&a),
        Command::Acoustics(AcousticsCommand::Locate(a)) => tools::locate(&a),
        Command::Acoustics(AcousticsCommand::Synth(a)) => tools::synth(&a),
        Command::Plot(a) => plot::run(&a),
        Command::Params(a) => tools::params(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
