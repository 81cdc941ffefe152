//! Builds a roughness cost-map for a synthetic field and a local occupancy
//! grid around a vehicle parked in front of an object.

use geoloc::geometry::Pose;
use geoloc::scenario::sensing::simulate_lidar_scan;
use geoloc::scenario::world::{gen_world, ObjectSpec, RoughPatch, WorldSpec};
use geoloc::terrain::{occupancy_costmap, update_local_grid, LocalElevationGrid, LocalGridParams, OccState, RoughnessParams};
use geoloc::ObjectClass;

fn main() {
    let spec = WorldSpec {
        width: 60.0,
        height: 30.0,
        relief: 0.2,
        rough_patches: vec![RoughPatch { x0: 25.0, y0: 8.0, x1: 40.0, y1: 22.0, amplitude: 0.4 }],
        objects: vec![ObjectSpec { class: ObjectClass::PickupTruck, x: 18.0, y: 15.0 }],
        ..Default::default()
    };
    let world = gen_world(3, &spec).expect("valid world");
    let params = RoughnessParams::default();
    let map = world.costmap(&params, 1.0).expect("dense cloud");
    println!(
        "cost-map {}x{} cells: {} navigable, {} blocked, {} unknown",
        map.width,
        map.height,
        map.navigable_count(),
        map.width * map.height - map.navigable_count() - map.unknown_count(),
        map.unknown_count()
    );
    for iy in (0..map.height as i64).rev().step_by(2) {
        let row: String = (0..map.width as i64)
            .map(|ix| match map.cell(ix, iy) {
                Some(c) if !c.navigable() => '#',
                Some(c) if c.cost > 2.0 => '+',
                Some(_) => '.',
                None => '?',
            })
            .collect();
        println!("  {row}");
    }

    let mut grid = LocalElevationGrid::new(LocalGridParams { lookahead: 5.0, size_cells: 40, ..Default::default() });
    let pose = Pose::planar(8.0, 15.0, world.height_at(8.0, 15.0), 0.0, 0.0);
    let scan = simulate_lidar_scan(&pose, &world, 20.0);
    let used = update_local_grid(&mut grid, &scan, &pose, 20.0, 0.2);
    let occ = occupancy_costmap(&grid, 0.2);
    println!(
        "\nlocal grid: {used} voxels, {} free / {} occupied / {} unknown cells",
        occ.count(OccState::Free),
        occ.count(OccState::Occupied),
        occ.count(OccState::Unknown)
    );
    let r = world.objects[0].radius;
    println!("cell on the near side of the truck ({:.2}, 15): {:?}", 18.0 - r, occ.state_at(18.0 - r + 0.05, 15.0));
}
