//! Acceptance criteria 1–11. Runs as a plain binary so every criterion prints
//! one PASS/FAIL line; the process exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector, Vector3};
use rand::Rng;

use anahita_core::acoustics::{analog_chain, ping_bearing, tdoa, AcousticsConfig, AnalogChainConfig, Trace};
use anahita_core::allocation::AllocationMatrix;
use anahita_core::control::{Controller, MotionGoal};
use anahita_core::dynamics::{restoring_force, VehicleModel, VehicleState};
use anahita_core::frames::{wrap_angle, BodyVelocity, GeneralizedForce, Pose, ThrustVector};
use anahita_core::mission::{run_mission, MissionPlan, Scenario};
use anahita_core::params::{VehicleParams, GRAVITY};
use anahita_core::payloads::{drop, landing_point, DropperState, ProjectileSpec};
use anahita_core::power::{monitor, MonitorConfig, PowerSystem, Rail, RailReading};
use anahita_core::rng::{stream, stream_rng};
use anahita_core::sensors::{depth_read, NoiseConfig};
use anahita_core::telemetry::write_csv;
use anahita_core::vision::{
    blue_filter, calibrate, degrade, detect, estimate_distance, render_scene, white_balance, BlueFilterConfig,
    DegradeConfig, DetectConfig, DetectMode, Image, SceneSpec, Shape, ThresholdRange,
};

const REFERENCE_SCENARIO: &str = include_str!("../../../docs/reference_scenario.cfg");
const REFERENCE_PLAN: &str = include_str!("../../../docs/reference_plan.cfg");

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Thrust vector whose wrench is a pure force along one body axis.
fn steady_speed(axis: usize, force: f64) -> (f64, Duration) {
    let clock = Instant::now();
    let mut params = VehicleParams::default();
    // Isolate the translational response from hydrostatics.
    params.ballast_mass = params.displaced_mass - params.mass;
    let model = VehicleModel::new(params).unwrap();
    let mut tau = [0.0; 6];
    tau[axis] = force;
    let (thrust, scale) = model.allocation.allocate(&GeneralizedForce::from_array(tau), 20.0).unwrap();
    assert_eq!(scale, 1.0);
    let mut s = VehicleState::at_rest(Pose::new(0.0, 0.0, 2.0, 0.0, 0.0, 0.0));
    for _ in 0..6000 {
        s = model.step(&s, &thrust, 0.01).unwrap();
    }
    let v = s.nu.as_vector()[axis];
    (v, clock.elapsed())
}

fn criterion_1() -> Verdict {
    let (u, tu) = steady_speed(0, 10.8);
    let (v, tv) = steady_speed(1, 6.02);
    let ok = (u - 0.6).abs() <= 0.006 && (v - 0.3).abs() <= 0.003 && tu.as_secs_f64() < 1.0 && tv.as_secs_f64() < 1.0;
    check(
        ok,
        format!("surge {u:.5} m/s ({tu:.2?}), sway {v:.5} m/s ({tv:.2?})"),
    )
}

fn criterion_2() -> Verdict {
    let p = VehicleParams {
        ballast_mass: 0.0,
        ..VehicleParams::default()
    };
    let g = restoring_force(&Pose::default(), &p);
    let net = -g.as_array()[2];
    let oracle = (35.0 - 26.4) * GRAVITY;
    check(
        (net - 84.37).abs() <= 0.01 && (net - oracle).abs() < 1e-9,
        format!("net upward force {net:.4} N"),
    )
}

fn criterion_3() -> Verdict {
    let b = AllocationMatrix::new(VehicleParams::default().lever_arms).unwrap();
    let mut rng = stream_rng(11, 0);
    let mut worst_round_trip: f64 = 0.0;
    for _ in 0..1000 {
        // Wrenches produced by thrusts inside ±t_max/3 keep the min-norm
        // solution inside the limits.
        let t: [f64; 8] = std::array::from_fn(|_| rng.random_range(-20.0 / 3.0..20.0 / 3.0));
        let tau = b.forward(&ThrustVector(t));
        let (alloc, scale) = b.allocate(&tau, 20.0).unwrap();
        if scale != 1.0 {
            return Err(format!("feasible wrench was scaled by {scale}"));
        }
        let back = b.forward(&alloc);
        let err = (back.as_vector() - tau.as_vector()).amax();
        worst_round_trip = worst_round_trip.max(err);
    }
    // Minimum-norm oracle from the KKT system [I Bᵀ; B 0][t; λ] = [0; τ].
    let m = b.matrix();
    let mut kkt = DMatrix::zeros(14, 14);
    for i in 0..8 {
        kkt[(i, i)] = 1.0;
    }
    for r in 0..6 {
        for c in 0..8 {
            kkt[(8 + r, c)] = m[(r, c)];
            kkt[(c, 8 + r)] = m[(r, c)];
        }
    }
    let lu = kkt.full_piv_lu();
    let mut worst_oracle: f64 = 0.0;
    for _ in 0..100 {
        let tau: [f64; 6] = std::array::from_fn(|_| rng.random_range(-10.0..10.0));
        let (alloc, _) = b.allocate(&GeneralizedForce::from_array(tau), 1e6).unwrap();
        let mut rhs = DVector::zeros(14);
        rhs.rows_mut(8, 6).copy_from_slice(&tau);
        let oracle = lu.solve(&rhs).ok_or("singular KKT system")?;
        for i in 0..8 {
            worst_oracle = worst_oracle.max((alloc.0[i] - oracle[i]).abs());
        }
    }
    check(
        worst_round_trip < 1e-9 && worst_oracle < 1e-8,
        format!("round trip {worst_round_trip:.2e}, least-squares oracle {worst_oracle:.2e}"),
    )
}

fn criterion_4() -> Verdict {
    let clock = Instant::now();
    let model = VehicleModel::new(VehicleParams::default()).unwrap();
    let noise = NoiseConfig::default();
    let mut rng = stream_rng(4, stream::DEPTH);
    let mut controller = Controller::default();
    let goal = MotionGoal::hold(Pose::new(0.0, 0.0, 2.0, 0.0, 0.0, 0.0));
    let dt = 0.01;
    let mut s = VehicleState::at_rest(Pose::default());
    let mut worst: f64 = 0.0;
    for k in 0..6000 {
        let reading = depth_read(s.pose.z, s.t, &noise, &mut rng);
        let nav = Pose { z: reading.depth, ..s.pose };
        let tau = controller.step(&goal, &nav, dt);
        let (t, _) = model.allocation.allocate(&tau, model.params.t_max).unwrap();
        s = model.step(&s, &t, dt).unwrap();
        if k >= 5000 {
            worst = worst.max((s.pose.z - 2.0).abs());
        }
    }
    let elapsed = clock.elapsed();
    check(
        worst <= 0.005 && elapsed.as_secs_f64() < 2.0,
        format!("max |error| over last 10 s {:.2} mm ({elapsed:.2?})", worst * 1e3),
    )
}

/// Successive peaks of |x| for a sampled oscillation.
fn peaks(xs: &[f64]) -> Vec<f64> {
    xs.windows(3)
        .filter(|w| w[1].abs() >= w[0].abs() && w[1].abs() > w[2].abs())
        .map(|w| w[1].abs())
        .collect()
}

fn criterion_5() -> Verdict {
    let model = VehicleModel::new(VehicleParams::default()).unwrap();
    let mut detail = Vec::new();
    let mut ok = true;
    for (name, pose) in [
        ("roll", Pose::new(0.0, 0.0, 2.0, 0.1, 0.0, 0.0)),
        ("pitch", Pose::new(0.0, 0.0, 2.0, 0.0, 0.1, 0.0)),
    ] {
        let mut s = VehicleState::at_rest(pose);
        let mut trace = vec![0.1];
        for _ in 0..6000 {
            s = model.step(&s, &ThrustVector::ZERO, 0.01).unwrap();
            trace.push(if name == "roll" { s.pose.phi } else { s.pose.theta });
        }
        let env = peaks(&trace);
        let monotone = env.windows(2).all(|w| w[1] <= w[0] + 1e-12);
        let last = trace[trace.len() - 200..].iter().fold(0.0f64, |m, x| m.max(x.abs()));
        ok &= monotone && last < 0.01 && env.first().is_some_and(|p| *p <= 0.1 + 1e-9);
        detail.push(format!("{name}: {} peaks, monotone {monotone}, final {last:.4} rad", env.len()));
    }
    check(ok, detail.join("; "))
}

fn tone_gain(chain: &AnalogChainConfig, freq: f64, fs: f64) -> f64 {
    let n = 40_000;
    let input = Trace::new((0..n).map(|k| 1e-4 * (2.0 * PI * freq * k as f64 / fs).sin()).collect(), fs).unwrap();
    let out = analog_chain(&input, chain);
    let tail = &out.samples[n / 2..];
    let rms = (tail.iter().map(|v| v * v).sum::<f64>() / tail.len() as f64).sqrt();
    rms / (1e-4 / 2f64.sqrt())
}

fn criterion_6() -> Verdict {
    let chain = AnalogChainConfig::default();
    let fs = 1.0e6;
    let low = tone_gain(&chain, 1_000.0, fs);
    let high = tone_gain(&chain, 75_000.0, fs);
    let atten = 20.0 * (low / high).log10();
    let expected = 50.0 * chain.gain2;
    let pass_err = (low - expected).abs() / expected;
    check(
        chain.lpf_order == 6 && chain.lpf_cutoff == 37_500.0 && atten >= 35.0 && pass_err <= 0.01,
        format!("75 kHz attenuation {atten:.1} dB, passband gain {low:.2} (expected {expected})"),
    )
}

fn criterion_7() -> Verdict {
    let clock = Instant::now();
    let fs = 1.0e6;
    let mut rng = stream_rng(7, stream::ACOUSTICS);
    let base: Vec<f64> = (0..4000)
        .map(|k| {
            let t = k as f64 / fs;
            let env = (-((t - 0.001) / 0.0003).powi(2)).exp();
            env * (2.0 * PI * 30_000.0 * t).sin() + 0.01 * rng.random_range(-1.0..1.0)
        })
        .collect();
    let mut worst_shift: f64 = 0.0;
    for shift in [-40i64, -7, -1, 0, 1, 3, 25, 60] {
        let shifted: Vec<f64> = (0..base.len() as i64)
            .map(|k| {
                let j = k - shift;
                if (0..base.len() as i64).contains(&j) {
                    base[j as usize]
                } else {
                    0.0
                }
            })
            .collect();
        let a = Trace::new(base.clone(), fs).unwrap();
        let b = Trace::new(shifted, fs).unwrap();
        let est = tdoa(&a, &b).map_err(|e| format!("tdoa failed: {e}"))? * fs;
        worst_shift = worst_shift.max((est - shift as f64).abs());
    }

    let cfg = AcousticsConfig::default();
    let mut total = 0.0;
    let mut draws = 0;
    let mut per_az = Vec::new();
    for az_deg in [0.0f64, 30.0, -30.0, 60.0, -60.0] {
        let az = az_deg.to_radians();
        let src = Vector3::new(100.0 * az.cos(), 100.0 * az.sin(), 0.0);
        let mut sum = 0.0;
        for _ in 0..200 {
            let err = match ping_bearing(&cfg, &src, &mut rng) {
                Ok(b) => wrap_angle(b.azimuth - az).abs().to_degrees(),
                Err(_) => 180.0,
            };
            sum += err;
        }
        per_az.push(format!("{az_deg:+.0}°:{:.2}", sum / 200.0));
        total += sum;
        draws += 200;
    }
    let mean = total / draws as f64;
    let elapsed = clock.elapsed();
    check(
        worst_shift <= 0.5 && mean <= 2.0 && elapsed.as_secs_f64() < 30.0,
        format!(
            "integer shifts within {worst_shift:.3} samples; mean heading error {mean:.3}° [{}] ({elapsed:.2?})",
            per_az.join(" ")
        ),
    )
}

fn buoy_observation(d: f64) -> Option<(f64, f64, f64)> {
    const FOCAL: f64 = 320.0;
    let scene = SceneSpec::new(640, 480, DegradeConfig::DEFAULT_BACKLIGHT).with(Shape::Disk {
        cx: 300.0,
        cy: 250.0,
        r: FOCAL * 0.3 / d,
        color: [230, 40, 30],
    });
    let img = render_scene(&scene).ok()?;
    let seen = degrade(&img, &DegradeConfig::at_distance(d)).ok()?;
    let enhanced = blue_filter(&seen, &BlueFilterConfig::default()).ok()?;
    let cfg = DetectConfig::new("330 30 0.5 1 100 255".parse::<ThresholdRange>().ok()?, DetectMode::Contour);
    let det = detect(&enhanced, &cfg).ok()??;
    Some((det.center.0, det.center.1, det.blob_dim))
}

fn criterion_8() -> Verdict {
    let mut obs = Vec::new();
    for d in [1.0, 1.5, 2.0, 2.5] {
        match buoy_observation(d) {
            Some(o) => obs.push((d, o)),
            None => return Err(format!("buoy not detected at {d} m")),
        }
    }
    let center_err = obs
        .iter()
        .map(|(_, (x, y, _))| (x - 300.0).hypot(y - 250.0))
        .fold(0.0f64, f64::max);
    let calib = calibrate(&[(obs[0].1 .2, 1.0), (obs[2].1 .2, 2.0)]).map_err(|e| e.to_string())?;
    let range_err = obs
        .iter()
        .map(|(d, (_, _, dim))| (estimate_distance(*dim, &calib) - d).abs() / d)
        .fold(0.0f64, f64::max);

    let mut rng = stream_rng(8, stream::VISION);
    let mut wb_ok = 0;
    for _ in 0..100 {
        let (w, h) = (rng.random_range(4..48), rng.random_range(4..48));
        let lo: [u8; 3] = std::array::from_fn(|_| rng.random_range(0..200));
        let data: Vec<u8> = (0..w * h * 3)
            .map(|i| {
                let c = lo[i % 3];
                let spread: u8 = rng.random_range(1..56);
                rng.random_range(c..=c.saturating_add(spread))
            })
            .collect();
        let img = Image::from_raw(w, h, 3, data).unwrap();
        let out = white_balance(&img, BlueFilterConfig::default().discard_ratio).unwrap();
        let good = (0..3).all(|c| {
            let (a, b) = img.channel_range(c);
            let (lo, hi) = out.channel_range(c);
            a == b || (lo == 0 && hi == 255)
        });
        wb_ok += good as usize;
    }
    check(
        center_err <= 3.0 && range_err <= 0.10 && wb_ok == 100,
        format!(
            "max center error {center_err:.2} px, max range error {:.1}%, white balance {wb_ok}/100",
            range_err * 100.0
        ),
    )
}

fn criterion_9() -> Verdict {
    let mut rng = stream_rng(9, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let vehicle = VehicleState {
            pose: Pose::new(0.0, 0.0, rng.random_range(0.5..3.0), 0.0, 0.0, rng.random_range(-PI..PI)),
            nu: BodyVelocity::new(rng.random_range(-0.6..0.6), rng.random_range(-0.3..0.3), 0.0, 0.0, 0.0, 0.0),
            t: 0.0,
        };
        let (_, marker) = drop(
            &DropperState::default(),
            &vehicle,
            &Vector3::new(0.0, 0.0, 0.15),
            &ProjectileSpec::MARKER,
        )
        .unwrap();
        let floor = 4.0;
        let coarse = landing_point(&marker, floor, 1e-3, 60.0).ok_or("marker never landed")?;
        let fine = landing_point(&marker, floor, 1e-5, 60.0).ok_or("marker never landed")?;
        let travel = (fine - marker.position).norm();
        worst = worst.max((coarse - fine).norm() / travel);
    }

    let scenario = Scenario::parse(REFERENCE_SCENARIO).map_err(|e| e.to_string())?;
    let greedy = MissionPlan::parse(
        "name = greedy\n[task.1]\nkind = marker_drop\ncount = 5\ntimeout = 90\ntransit = heave 1.5 10; sway -1 15; surge 22 60\n\
         [task.2]\nkind = marker_drop\ncount = 2\ntimeout = 20\n",
    )
    .map_err(|e| e.to_string())?;
    let mut spawned = Vec::new();
    for plan in [MissionPlan::parse(REFERENCE_PLAN).map_err(|e| e.to_string())?, greedy] {
        let out = run_mission(&plan, &scenario).map_err(|e| e.to_string())?;
        spawned.push(out.report.markers_spawned);
    }
    check(
        worst <= 0.05 && spawned.iter().all(|&n| n <= 2),
        format!(
            "worst landing deviation {:.4}% of travel; markers spawned per mission {spawned:?}",
            worst * 100.0
        ),
    )
}

fn criterion_10() -> Verdict {
    let thrusts = [5.0; 8];
    let mut p = PowerSystem::default();
    p.kill.hard_kill = true;
    let hard = *p.step(&thrusts, 0.01);
    let hard_ok = Rail::ALL.iter().all(|r| !hard.powered(*r) && hard.get(*r).voltage == 0.0);

    let mut p = PowerSystem::default();
    p.kill.soft_kill = true;
    let soft = *p.step(&thrusts, 0.01);
    let soft_ok = Rail::ALL.iter().all(|r| soft.powered(*r) == (*r == Rail::V19));

    let mut pod_ok = true;
    for i in 0..2 {
        let mut p = PowerSystem::default();
        p.step(&thrusts, 0.01);
        p.remove_pod(i);
        let s = *p.step(&thrusts, 0.01);
        pod_ok &= Rail::ALL.iter().all(|r| s.powered(*r)) && s.bus_voltage > 0.0;
    }

    let reading = RailReading {
        nominal: 19.0,
        voltage: 19.0,
        current: 0.0,
        powered: true,
    };
    let (code, _) = monitor(Rail::V19, &reading, &MonitorConfig::default(), &mut stream_rng(10, stream::POWER));
    check(
        hard_ok && soft_ok && pod_ok && Rail::V19.divider() == 0.25 && code == 972,
        format!("hard kill {hard_ok}, soft kill {soft_ok}, single-pod bus {pod_ok}, 19 V code {code}"),
    )
}

fn criterion_11() -> Verdict {
    let scenario = Scenario::parse(REFERENCE_SCENARIO).map_err(|e| e.to_string())?;
    let plan = MissionPlan::parse(REFERENCE_PLAN).map_err(|e| e.to_string())?;
    let clock = Instant::now();
    let a = run_mission(&plan, &scenario).map_err(|e| e.to_string())?;
    let first = clock.elapsed();
    let b = run_mission(&plan, &scenario).map_err(|e| e.to_string())?;
    let identical = write_csv(&a.telemetry) == write_csv(&b.telemetry) && a.report.to_text() == b.report.to_text();

    // Worst case: the full 300 s with the camera pipeline active throughout.
    let lost = MissionPlan::parse("name = lost\n[task.1]\nkind = buoy\ntimeout = 300\n").map_err(|e| e.to_string())?;
    let mut far = scenario.clone();
    far.world.targets.get_mut("buoy").unwrap().position = Vector3::new(-40.0, 0.0, 1.8);
    let clock = Instant::now();
    let worst = run_mission(&lost, &far).map_err(|e| e.to_string())?;
    let worst_time = clock.elapsed();
    let sim_end = worst.telemetry.last().map_or(0.0, |r| r.t);

    check(
        identical && first.as_secs_f64() < 10.0 && worst_time.as_secs_f64() < 10.0 && sim_end >= 299.9,
        format!(
            "byte-identical {identical}; reference mission {first:.2?} (status {:?}), 300 s worst case {worst_time:.2?}",
            a.report.status
        ),
    )
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("drag reproduction", criterion_1),
        ("buoyancy", criterion_2),
        ("allocation round trip", criterion_3),
        ("depth hold", criterion_4),
        ("static stability", criterion_5),
        ("filter response", criterion_6),
        ("TDOA heading", criterion_7),
        ("vision pipeline", criterion_8),
        ("marker ballistics", criterion_9),
        ("power semantics", criterion_10),
        ("determinism and runtime", criterion_11),
    ];
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let verdict = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match verdict {
            Ok(detail) => println!("criterion {:>2} PASS {name}: {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {:>2} FAIL {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
