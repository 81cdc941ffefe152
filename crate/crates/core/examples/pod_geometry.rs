//! Lays out the five-module camera pod and checks which modules see a few targets.

use geoloc::geometry::{make_pod, project, global_to_camera, visible_modules, CameraIntrinsics, PodConfig, Pose};
use geoloc::scenario::throughput_check;
use nalgebra::Vector3;

fn main() {
    let intr = CameraIntrinsics::new(4096, 3000, 48f64.to_radians(), 36f64.to_radians()).expect("valid intrinsics");
    let pod = make_pod(5, 48f64.to_radians(), 12f64.to_radians(), &intr).expect("valid pod");
    println!("modules: {}  total HFOV: {:.1} deg", pod.modules.len(), pod.total_hfov_rad.to_degrees());
    println!("focal length: {:.2} px  principal point: {:?}", intr.focal_px(), intr.principal_point());
    for i in 0..pod.modules.len() {
        let (lo, hi) = pod.module_interval(i);
        println!("  module {i}: yaw {:+6.1} .. {:+6.1} deg", lo.to_degrees(), hi.to_degrees());
    }

    let pose = Pose::planar(100.0, 50.0, 0.0, 90f64.to_radians(), 0.0);
    let targets = [
        ("ahead", Vector3::new(100.0, 90.0, 1.0)),
        ("left", Vector3::new(60.0, 50.0, 1.0)),
        ("right-forward", Vector3::new(130.0, 70.0, 1.0)),
        ("behind", Vector3::new(100.0, 10.0, 1.0)),
    ];
    println!("\nvehicle at (100, 50) facing north");
    for (name, p) in &targets {
        let seen = visible_modules(p, &pose, &pod, 150.0);
        print!("  {name:<14} seen by {seen:?}");
        if let Some(&m) = seen.first() {
            let c = global_to_camera(p, &pod.module_extrinsics(m), &pose);
            let px = project(&c, &pod.modules[m].intrinsics).expect("in front of camera").pixel;
            print!("  -> pixel ({:.1}, {:.1}) in module {m}", px.u, px.v);
        }
        println!();
    }

    let ugv = PodConfig::ugv_reference();
    println!(
        "\nreference ground pod at 4 Hz: {:.1} MPixel/s over {} cameras",
        throughput_check(&ugv, 4.0) / 1e6,
        ugv.modules.iter().map(|m| m.cameras.len()).sum::<usize>()
    );
}
