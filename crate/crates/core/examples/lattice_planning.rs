//! Anytime lattice planning around a wall, printing each improvement.

use geoloc::navigation::{generate_primitives, plan_ara, EpsSchedule, Goal, LatticeGraph};
use geoloc::terrain::CostMapGlobal;
use nalgebra::Vector2;

fn main() {
    let mut map = CostMapGlobal::uniform(Vector2::new(0.0, 0.0), 0.5, 80, 60, 1.0);
    for iy in 0..45 {
        for ix in 38..41 {
            map.set_cost(ix, iy, f64::INFINITY);
        }
    }
    for iy in 40..60 {
        for ix in 10..30 {
            map.set_cost(ix, iy, 4.0);
        }
    }
    let prims = generate_primitives(4.0, 2.0, 16, 0.5).expect("valid lattice");
    println!("{} motion primitives", prims.len());
    let graph = LatticeGraph::new(&map, &prims).expect("map matches lattice");
    let start = graph.snap(3.0, 3.0, 0.0);
    let goal = Goal::new(36.0, 5.0, 1.0);
    let r = plan_ara(start, &goal, &map, &prims, &EpsSchedule::default()).expect("goal reachable");
    for it in &r.iterations {
        println!("  eps {:.1}: cost {:.3} after {} expansions", it.eps, it.cost, it.expansions);
    }
    let end = r.trajectory.points.last().expect("non-empty");
    println!(
        "final: cost {:.3}, eps {}, {} states, path length {:.1} m, ends at ({:.1}, {:.1})",
        r.cost,
        r.achieved_eps,
        r.states.len(),
        r.trajectory.length(),
        end.x,
        end.y
    );
}
