//! Single-subsystem commands.

use std::path::Path;

use anahita_core::acoustics::{condition, locate as locate_bearing, parse_sidecar, sidecar_text, synth_ping, Trace};
use anahita_core::frames::{GeneralizedForce, Pose};
use anahita_core::mission::{CameraId, Scenario};
use anahita_core::params::{load_params, VehicleParams};
use anahita_core::allocation::AllocationMatrix;
use anahita_core::rng::{stream, stream_rng};
use anahita_core::vision::detect::{close, threshold};
use anahita_core::vision::{
    blue_filter, calibrate, clahe, degrade, detect as detect_blob, white_balance, BlueFilterConfig, ClaheConfig,
    DegradeConfig, DetectConfig, DetectMode, Image, ThresholdRange,
};
use nalgebra::Vector3;

use crate::{
    read_bytes, read_text, write_file, AllocateArgs, CameraArg, CliError, CliResult, DetectArgs, EnhanceArgs,
    EnhanceMethod, LocateArgs, ParamsArgs, RenderArgs, SynthArgs,
};

/// Rounds to 1e-9 and prints the shortest form, never `-0`.
pub fn format_thrust(v: f64) -> String {
    let r = (v * 1e9).round() / 1e9;
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}

fn load_scenario(path: &Path) -> CliResult<Scenario> {
    Scenario::parse(&read_text(path)?).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn input_err(path: &Path) -> impl Fn(anahita_core::vision::VisionError) -> CliError + '_ {
    move |e| CliError::input(format!("{}: {e}", path.display()))
}

pub fn allocate(args: &AllocateArgs) -> CliResult {
    let params = match &args.params {
        Some(p) => load_params(&read_text(p)?).map_err(|e| CliError::input(format!("{}: {e}", p.display())))?,
        None => VehicleParams::default(),
    };
    let b = AllocationMatrix::new(params.lever_arms).map_err(|e| CliError::input(e.to_string()))?;
    let tau: [f64; 6] = args
        .tau
        .as_slice()
        .try_into()
        .map_err(|_| CliError::input("--tau takes six numbers"))?;
    let (t, scale) = b
        .allocate(&GeneralizedForce::from_array(tau), args.t_max.unwrap_or(params.t_max))
        .map_err(|e| CliError::input(e.to_string()))?;
    let line: Vec<String> = t.0.iter().map(|v| format_thrust(*v)).collect();
    println!("{}", line.join(" "));
    if scale < 1.0 {
        eprintln!("saturated: wrench scaled by {scale:.6}");
    }
    Ok(())
}

pub fn enhance(args: &EnhanceArgs) -> CliResult {
    let img = Image::from_pnm(&read_bytes(&args.input)?).map_err(input_err(&args.input))?;
    let clahe_cfg = ClaheConfig {
        clip_limit: args.clip_limit,
        ..ClaheConfig::default()
    };
    let out = match args.method {
        EnhanceMethod::Blue => blue_filter(
            &img,
            &BlueFilterConfig {
                discard_ratio: args.discard_ratio,
                clahe: clahe_cfg,
            },
        ),
        EnhanceMethod::WhiteBalance => white_balance(&img, args.discard_ratio),
        EnhanceMethod::Clahe => clahe(&img, &clahe_cfg),
    }
    .map_err(|e| CliError::input(e.to_string()))?;
    write_file(&args.output, out.to_pnm())
}

fn parse_calibration(pairs: &[String]) -> CliResult<Vec<(f64, f64)>> {
    pairs
        .iter()
        .map(|p| {
            let (a, b) = p
                .split_once(':')
                .ok_or_else(|| CliError::input(format!("calibration point `{p}` is not dim:distance")))?;
            let num = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::input(format!("calibration point `{p}` is not numeric")))
            };
            Ok((num(a)?, num(b)?))
        })
        .collect()
}

pub fn detect(args: &DetectArgs) -> CliResult {
    let img = Image::from_pnm(&read_bytes(&args.input)?).map_err(input_err(&args.input))?;
    let range: ThresholdRange = args.threshold.parse().map_err(|e| CliError::input(format!("--threshold: {e}")))?;
    let mode: DetectMode = args.mode.parse().map_err(|e| CliError::input(format!("--mode: {e}")))?;
    let mut cfg = DetectConfig::new(range, mode);
    cfg.min_area = args.min_area;
    cfg.kernel = args.kernel;
    cfg.validate().map_err(|e| CliError::input(e.to_string()))?;
    let calib = if args.calibration.is_empty() {
        None
    } else {
        Some(calibrate(&parse_calibration(&args.calibration)?).map_err(|e| CliError::input(e.to_string()))?)
    };
    if let Some(path) = &args.mask {
        let mask = close(&threshold(&img, &cfg.range), img.width, img.height, cfg.kernel, cfg.iterations);
        let data = mask.iter().map(|&m| if m { 255 } else { 0 }).collect();
        let pgm = Image::from_raw(img.width, img.height, 1, data).map_err(|e| CliError::runtime(e.to_string()))?;
        write_file(path, pgm.to_pnm())?;
    }
    match detect_blob(&img, &cfg).map_err(|e| CliError::input(e.to_string()))? {
        Some(det) => {
            let det = match &calib {
                Some(c) => det.with_distance(c),
                None => det,
            };
            println!("{}", det.report_line());
        }
        None => println!("not found"),
    }
    Ok(())
}

pub fn render(args: &RenderArgs) -> CliResult {
    let scenario = load_scenario(&args.scenario)?;
    let cam = match args.camera {
        CameraArg::Front => CameraId::Front,
        CameraArg::Bottom => CameraId::Bottom,
    };
    let pose = Pose::new(args.x, args.y, args.z, 0.0, 0.0, args.yaw.to_radians());
    let mut img = scenario.world.render(cam, &pose);
    if let Some(d) = args.degrade {
        let cfg = DegradeConfig::at_distance(d);
        img = degrade(&img, &cfg).map_err(|e| CliError::input(format!("--degrade: {e}")))?;
    }
    write_file(&args.output, img.to_pnm())
}

fn acoustics_config(scenario: &Option<std::path::PathBuf>) -> CliResult<anahita_core::acoustics::AcousticsConfig> {
    Ok(match scenario {
        Some(p) => load_scenario(p)?.acoustics,
        None => Default::default(),
    })
}

/// Azimuth in degrees with three decimals, never `-0.000`.
pub fn format_azimuth(rad: f64) -> String {
    let s = format!("{:.3}", rad.to_degrees());
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

pub fn locate(args: &LocateArgs) -> CliResult {
    let cfg = acoustics_config(&args.scenario)?;
    let dir = &args.traces;
    let fs = parse_sidecar(&read_text(&dir.join("fs.cfg"))?)
        .map_err(|e| CliError::input(format!("{}: {e}", dir.join("fs.cfg").display())))?;
    let mut traces = Vec::with_capacity(4);
    for i in 0..4 {
        let path = dir.join(format!("ch{i}.txt"));
        let t = Trace::from_text(&read_text(&path)?, fs).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        traces.push(t);
    }
    let traces: [Trace; 4] = traces.try_into().expect("four channels");
    let bearing = locate_bearing(&traces, &cfg.geometry).map_err(|e| CliError::runtime(e.to_string()))?;
    println!("{}", format_azimuth(bearing.azimuth));
    Ok(())
}

pub fn synth(args: &SynthArgs) -> CliResult {
    let cfg = acoustics_config(&args.scenario)?;
    let mut rng = stream_rng(args.seed, stream::ACOUSTICS);
    let raw = synth_ping(&cfg, &Vector3::new(args.x, args.y, args.z), &mut rng)
        .map_err(|e| CliError::input(e.to_string()))?;
    let traces = condition(&raw, &cfg);
    std::fs::create_dir_all(&args.out).map_err(|e| CliError::runtime(format!("{}: {e}", args.out.display())))?;
    for (i, t) in traces.iter().enumerate() {
        write_file(&args.out.join(format!("ch{i}.txt")), t.to_text())?;
    }
    write_file(&args.out.join("fs.cfg"), sidecar_text(cfg.fs))
}

pub fn params(args: &ParamsArgs) -> CliResult {
    let p = match &args.scenario {
        Some(path) => load_scenario(path)?.params,
        None => VehicleParams::default(),
    };
    print!("{}", p.to_config_string());
    Ok(())
}
