//! Closed-loop pure pursuit on a straight path starting 2 m off the line.

use geoloc::navigation::control::cross_track_error;
use geoloc::navigation::{step_vehicle, PursuitOutput, PursuitParams, PurePursuit, Trajectory, VehicleState};
use nalgebra::Vector2;

fn main() {
    let path = Trajectory::straight(&[(0.0, 0.0), (120.0, 0.0)], 0.2);
    let params = PursuitParams::default();
    let mut pp = PurePursuit::new(params);
    let mut s = VehicleState::new(Vector2::new(0.0, 2.0), 0.0);
    let mut travelled = 0.0;
    let mut next_report = 0.0;
    println!("lookahead {} m, speed {} m/s", params.lookahead, params.speed);
    loop {
        let cmd = match pp.command(&s, &path) {
            PursuitOutput::Drive(c) => c,
            PursuitOutput::Finished => break,
        };
        s = step_vehicle(&s, &cmd, 0.02);
        travelled += cmd.speed * 0.02;
        if travelled >= next_report {
            println!(
                "  {:6.1} m travelled: cross-track {:.4} m, curvature {:+.4}",
                travelled,
                cross_track_error(&path, s.position),
                cmd.curvature
            );
            next_report += 10.0;
        }
    }
    println!("finished at x = {:.2} after {:.1} s", s.position.x, s.time);
}
