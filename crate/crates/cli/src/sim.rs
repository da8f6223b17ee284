//! `sim run`: mission runs, optionally several scenarios in parallel.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anahita_core::mission::{run_mission, MissionError, MissionPlan, Scenario};
use anahita_core::telemetry::write_csv;

use crate::{read_text, write_file, CliError, CliResult, SimRunArgs};

fn mission_error(path: &Path, e: MissionError) -> CliError {
    let msg = format!("{}: {e}", path.display());
    match e {
        MissionError::Dynamics(_) => CliError { code: 3, msg },
        MissionError::Config(_) | MissionError::Reference(_) => CliError::input(msg),
        _ => CliError::runtime(msg),
    }
}

fn load_scenario(path: &Path, args: &SimRunArgs) -> CliResult<Scenario> {
    let mut sc = Scenario::parse(&read_text(path)?).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    if let Some(seed) = args.seed {
        sc.sim.seed = seed;
    }
    if let Some(dt) = args.dt {
        sc.sim.dt = dt;
    }
    if let Some(d) = args.duration {
        sc.sim.duration = d;
    }
    sc.sim
        .validate()
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    Ok(sc)
}

fn run_one(path: &Path, plan: &MissionPlan, args: &SimRunArgs, out: &Path) -> CliResult {
    let scenario = load_scenario(path, args)?;
    let output = run_mission(plan, &scenario).map_err(|e| mission_error(path, e))?;
    std::fs::create_dir_all(out).map_err(|e| CliError::runtime(format!("{}: {e}", out.display())))?;
    write_file(&out.join("telemetry.csv"), write_csv(&output.telemetry))?;
    write_file(&out.join("report.txt"), output.report.to_text())?;
    Ok(())
}

/// Output directory per scenario: `out` itself for a single run, otherwise
/// `out/<file stem>`.
fn output_dirs(args: &SimRunArgs) -> CliResult<Vec<PathBuf>> {
    if args.scenario.len() == 1 {
        return Ok(vec![args.out.clone()]);
    }
    let mut seen = BTreeSet::new();
    args.scenario
        .iter()
        .map(|p| {
            let stem = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .ok_or_else(|| CliError::input(format!("{}: not a file name", p.display())))?;
            if !seen.insert(stem.clone()) {
                return Err(CliError::input(format!("two scenarios share the file stem `{stem}`")));
            }
            Ok(args.out.join(stem))
        })
        .collect()
}

pub fn run(args: &SimRunArgs) -> CliResult {
    if args.jobs == 0 {
        return Err(CliError::input("--jobs must be at least 1"));
    }
    let plan = MissionPlan::parse(&read_text(&args.plan)?)
        .map_err(|e| CliError::input(format!("{}: {e}", args.plan.display())))?;
    let dirs = output_dirs(args)?;
    let next = AtomicUsize::new(0);
    let errors = Mutex::new(Vec::new());
    std::thread::scope(|s| {
        for _ in 0..args.jobs.min(dirs.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= dirs.len() {
                    break;
                }
                if let Err(e) = run_one(&args.scenario[i], &plan, args, &dirs[i]) {
                    errors.lock().unwrap().push((i, e));
                }
            });
        }
    });
    let mut errors = errors.into_inner().unwrap();
    errors.sort_by_key(|(i, _)| *i);
    let Some(worst) = errors.iter().map(|(_, e)| e.code).max() else {
        return Ok(());
    };
    let msg = errors.iter().map(|(_, e)| e.msg.as_str()).collect::<Vec<_>>().join("\n");
    Err(CliError { code: worst, msg })
}
