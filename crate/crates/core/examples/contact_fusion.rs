//! Turns a 2D detection plus its stereo points into a global contact.

use geoloc::fusion::{bearing_covariance, make_contact, BBox, CloudPoint, CovarianceParams, DepthPolicy, Detection2D, PointCloudCam};
use geoloc::geometry::{backproject, PodConfig, Pixel, Pose};
use geoloc::ObjectClass;
use nalgebra::{SymmetricEigen, Vector3};

fn main() {
    let pod = PodConfig::ugv_reference();
    let module = 2;
    let intr = &pod.modules[module].intrinsics;
    let extr = pod.module_extrinsics(module);
    let pose = Pose::planar(500.0, 200.0, 0.0, 0.0, 12.0);

    let det = Detection2D {
        bbox: BBox { u_min: 2100.0, v_min: 1450.0, u_max: 2160.0, v_max: 1600.0 },
        class: ObjectClass::Person,
        confidence: 0.87,
        module_index: module,
        timestamp: 12.0,
    };
    // stereo returns inside the box at about 42 m, plus background further away
    let mut points = Vec::new();
    for k in 0..30 {
        let px = Pixel::new(2105.0 + 1.7 * k as f64, 1460.0 + 4.5 * k as f64);
        let z = 42.0 + 0.05 * ((k % 7) as f64 - 3.0);
        points.push(CloudPoint { position: backproject(px, z, intr).unwrap(), pixel: px });
    }
    for k in 0..10 {
        let px = Pixel::new(2000.0 + 30.0 * k as f64, 1200.0);
        points.push(CloudPoint { position: backproject(px, 90.0, intr).unwrap(), pixel: px });
    }
    let cloud = PointCloudCam { module_index: module, points };

    let params = CovarianceParams::default();
    let c = make_contact(&det, &cloud, intr, &extr, &pose, &DepthPolicy::default(), &params, 1).expect("valid detection");
    println!("contact: {:?} at ({:.2}, {:.2}, {:.2}) via {:?}", c.class, c.position.x, c.position.y, c.position.z, c.depth_source);
    let range = (c.position - pose.position).norm();
    let eig = SymmetricEigen::new(c.covariance).eigenvalues;
    println!("range {range:.2} m, covariance eigenvalues {:.4} {:.4} {:.4}", eig[0], eig[1], eig[2]);
    println!(
        "expected: k_range r^2 = {:.4}, k_bearing r^2 = {:.4}",
        params.k_range * range * range,
        params.k_bearing * range * range
    );

    let b = Vector3::new(1.0, 0.0, 0.0);
    let near = bearing_covariance(50.0, &b, &params).unwrap();
    let far = bearing_covariance(100.0, &b, &params).unwrap();
    println!("doubling range scales covariance by {:.1}", far[(0, 0)] / near[(0, 0)]);
}
