//! Per-frame stage timings of the perception pipeline and camera throughput.

use geoloc::geometry::PodConfig;
use geoloc::scenario::{pipeline_latency, throughput_check, PipelineModel};

fn main() {
    let model = PipelineModel::default();
    println!("frame  capture  cpu  preproc  stereo  transfer  detect  loc3d  | end-to-end (ms)");
    let mut total = 0.0;
    for f in 0..8 {
        let (t, e2e) = pipeline_latency(&model, 42, f);
        total += e2e;
        println!(
            "{f:>5}  {:7.1}  {:3.0}  {:7.1}  {:6.1}  {:8.1}  {:6.1}  {:5.1}  | {:.1}",
            t.trigger_to_capture * 1e3,
            t.capture_to_cpu * 1e3,
            t.preprocess * 1e3,
            t.stereo_pointcloud * 1e3,
            t.transfer * 1e3,
            t.detection * 1e3,
            t.localization_3d * 1e3,
            e2e * 1e3
        );
    }
    println!("mean end-to-end: {:.1} ms", total / 8.0 * 1e3);
    for (name, pod) in [("ground", PodConfig::ugv_reference()), ("aerial", PodConfig::uav_reference())] {
        println!("{name} pod at 4 Hz: {:.1} MPixel/s", throughput_check(&pod, 4.0) / 1e6);
    }
}
