//! Render → degrade → enhance → detect on the standard buoy scene.

use anahita_core::vision::{
    blue_filter, calibrate, degrade, detect, estimate_distance, render_scene, BlueFilterConfig, DegradeConfig,
    DetectConfig, DetectMode, SceneSpec, Shape, ThresholdRange,
};

const FOCAL_PX: f64 = 320.0;
const BUOY_RADIUS: f64 = 0.3;
const BUOY_COLOR: [u8; 3] = [230, 40, 30];

fn buoy_scene(distance: f64, cx: f64, cy: f64) -> SceneSpec {
    SceneSpec::new(640, 480, DegradeConfig::DEFAULT_BACKLIGHT).with(Shape::Disk {
        cx,
        cy,
        r: FOCAL_PX * BUOY_RADIUS / distance,
        color: BUOY_COLOR,
    })
}

fn buoy_detect_config() -> DetectConfig {
    DetectConfig::new("330 30 0.5 1 100 255".parse::<ThresholdRange>().unwrap(), DetectMode::Contour)
}

fn observe(distance: f64, cx: f64, cy: f64) -> anahita_core::vision::Detection {
    let img = render_scene(&buoy_scene(distance, cx, cy)).unwrap();
    let seen = degrade(&img, &DegradeConfig::at_distance(distance)).unwrap();
    let enhanced = blue_filter(&seen, &BlueFilterConfig::default()).unwrap();
    detect(&enhanced, &buoy_detect_config()).unwrap().expect("buoy visible")
}

#[test]
fn center_recovered_up_to_three_meters() {
    for &d in &[0.8, 1.0, 1.5, 2.0, 2.5, 3.0] {
        for &(cx, cy) in &[(320.0, 240.0), (250.0, 300.0), (401.0, 187.0)] {
            let det = observe(d, cx, cy);
            let err = (det.center.0 - cx).hypot(det.center.1 - cy);
            assert!(err <= 3.0, "d={d} center {:?} vs ({cx},{cy})", det.center);
        }
    }
}

#[test]
fn two_point_calibration_ranges_within_ten_percent() {
    let calib = calibrate(&[(observe(1.0, 320.0, 240.0).blob_dim, 1.0), (observe(2.0, 320.0, 240.0).blob_dim, 2.0)])
        .unwrap();
    for &d in &[1.0, 1.5, 2.0, 2.5] {
        let est = estimate_distance(observe(d, 320.0, 240.0).blob_dim, &calib);
        assert!((est - d).abs() / d <= 0.10, "d={d} est={est}");
    }
}
