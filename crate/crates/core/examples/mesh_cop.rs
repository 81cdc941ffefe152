//! Two robots report the same objects over lossy links; the COP merges them
//! and the delivery log replays to the same picture.

use geoloc::meshnet::{replay_log, run_network, LinkModel, SendEvent, TrackReport};
use geoloc::ObjectClass;
use nalgebra::Vector3;

fn main() {
    let objects = [(ObjectClass::Person, 40.0, 10.0), (ObjectClass::PickupTruck, 75.0, -20.0)];
    let mut events = Vec::new();
    for step in 0..50 {
        let t = step as f64 * 0.5;
        for robot in 0..2u32 {
            for (k, &(class, x, y)) in objects.iter().enumerate() {
                let jitter = 0.3 * (robot as f64 - 0.5);
                events.push(SendEvent {
                    t_send: t,
                    link: robot as usize,
                    report: TrackReport {
                        robot_id: robot + 1,
                        track_id: k as u32 + 1,
                        class,
                        position: Vector3::new(x + jitter, y - jitter, 0.9),
                        covariance_diag: Vector3::new(0.5, 0.5, 0.5) * (1.0 + robot as f64),
                        confidence: 0.9,
                        timestamp: t,
                        payload_bytes: 65536,
                    },
                });
            }
        }
    }
    let links = [
        LinkModel { loss_prob: 0.1, rng_seed: 1, ..Default::default() },
        LinkModel { loss_prob: 0.4, rng_seed: 2, ..Default::default() },
    ];
    let run = run_network(&events, &links, 5.0).expect("well-formed events");
    println!("sent {}, delivered {}, dropped {}", run.sends, run.deliveries, run.drops);
    for o in &run.cop.objects {
        println!(
            "  COP object {} {:?} at ({:.2}, {:.2}) from {} contributors",
            o.id,
            o.class,
            o.position.x,
            o.position.y,
            o.contributors.len()
        );
    }
    let replayed = replay_log(&run.log, 5.0).expect("log is consistent");
    println!("replayed picture identical: {}", replayed == run.cop);
}
