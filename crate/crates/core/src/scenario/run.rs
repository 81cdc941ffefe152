//! Fixed-step simulation of every robot, its perception chain and the network.

use super::config::{RobotConfig, RobotKind, ScenarioConfig};
use super::pipeline::{pipeline_latency, throughput_check, StageTimes};
use super::score::{cop_consistency, score_estimates, score_per_robot, Estimate, RunMetrics};
use super::sensing::{
    interpolate_pose, simulate_detector, simulate_lidar_scan, simulate_pose, simulate_stereo_cloud, SimDetection, ViewMode,
};
use super::world::{gen_world, World};
use super::{derive_seed, ScenarioError, DOMAIN_PIPELINE, DOMAIN_POSE, DOMAIN_SENSING};
use crate::fusion::{bearing_covariance, make_contact, Contact, DepthSource, PointCloudCam};
use crate::geometry::{backproject, PodConfig, Pose};
use crate::meshnet::{run_network, LinkModel, NetworkRun, SendEvent, TrackReport};
use crate::navigation::{
    generate_primitives, path_blocked_ahead, plan_route, step_vehicle, Command, PursuitOutput, PurePursuit, RouteResult,
    Trajectory, VehicleState,
};
use crate::terrain::{occupancy_costmap, update_local_grid, LocalElevationGrid, OccupancyMap};
use crate::tracker::{Track, TrackDatabase, TrackEvent};
use nalgebra::{Vector2, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Simulation step in seconds.
pub const TICK: f64 = 0.01;
/// Pose samples and control run every `POSE_TICKS` steps (50 Hz).
pub const POSE_TICKS: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatencyRecord {
    pub robot: u32,
    pub frame: u64,
    pub t_capture: f64,
    pub end_to_end: f64,
    /// Simulation time at which the frame's contacts reached the tracker or COP uplink.
    pub t_ingest: f64,
    pub stages: StageTimes,
    pub detections: usize,
    pub contacts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackLogRecord {
    pub robot: u32,
    #[serde(flatten)]
    pub event: TrackEvent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotTrace {
    pub id: u32,
    pub kind: RobotKind,
    pub planned: Option<Trajectory>,
    pub plan_cost: Option<f64>,
    pub plan_eps: Option<f64>,
    pub plan_expansions: Option<u64>,
    /// True positions every half second.
    pub driven: Vec<[f64; 2]>,
    pub throughput: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: RunMetrics,
    pub world: World,
    /// Final confirmed tracks as `(robot id, track)`.
    pub tracks: Vec<(u32, Track)>,
    pub network: NetworkRun,
    pub latency: Vec<LatencyRecord>,
    pub track_log: Vec<TrackLogRecord>,
    pub robots: Vec<RobotTrace>,
    pub seed: u64,
    pub duration: f64,
    pub merge_radius: f64,
    pub capture_rate: f64,
}

struct Capture {
    t: f64,
    frame: u64,
    detections: Vec<SimDetection>,
    clouds: Vec<PointCloudCam>,
    stages: StageTimes,
    end_to_end: f64,
}

struct Release {
    t_release: f64,
    t_capture: f64,
    frame: u64,
    contacts: Vec<Contact>,
    stages: StageTimes,
    end_to_end: f64,
    detections: usize,
}

struct Agent<'a> {
    cfg: &'a RobotConfig,
    link: usize,
    pod: PodConfig,
    mode: ViewMode,
    truth: VehicleState,
    altitude: f64,
    cmd: Command,
    route: Option<RouteResult>,
    pursuit: PurePursuit,
    waypoint: usize,
    grid: LocalElevationGrid,
    occ: Option<OccupancyMap>,
    samples: (Option<Pose>, Option<Pose>),
    pending: Option<Capture>,
    queue: Vec<Release>,
    tracker: Option<TrackDatabase>,
    sense_rng: ChaCha8Rng,
    pose_rng: ChaCha8Rng,
    frame: u64,
    next_report_id: u32,
    sends: Vec<SendEvent>,
    driven: Vec<[f64; 2]>,
}

impl Agent<'_> {
    fn true_pose(&self, world: &World, t: f64) -> Pose {
        let p = self.truth.position;
        let z = match self.cfg.kind {
            RobotKind::Ugv => world.height_at(p.x, p.y),
            RobotKind::Uav => self.altitude,
        };
        Pose::planar(p.x, p.y, z, self.truth.heading, t)
    }
}

fn bracket(samples: &(Option<Pose>, Option<Pose>), t: f64) -> Option<Pose> {
    match samples {
        (_, Some(b)) if b.timestamp == t => Some(b.clone()),
        (Some(a), Some(b)) if a.timestamp <= t && t <= b.timestamp => Some(interpolate_pose(a, b, t)),
        _ => None,
    }
}

/// Lifts detections to contacts with the pose measured at capture time.
fn contacts_for(agent: &Agent, cap: &Capture, pose: &Pose, cfg: &ScenarioConfig, world: &World) -> Result<Vec<Contact>, ScenarioError> {
    let mut out = Vec::new();
    for d in &cap.detections {
        let det = &d.detection;
        let m = det.module_index;
        let intr = &agent.pod.modules[m].intrinsics;
        let extr = agent.pod.module_extrinsics(m);
        match agent.mode {
            ViewMode::Billboard => {
                out.push(make_contact(
                    det,
                    &cap.clouds[m],
                    intr,
                    &extr,
                    pose,
                    &cfg.fusion.depth,
                    &cfg.fusion.covariance,
                    agent.cfg.id,
                )?);
            }
            ViewMode::Footprint => {
                // no stereo on the aerial vehicle: intersect the box-center ray with the terrain
                let ray = backproject(det.bbox.center(), 1.0, intr).map_err(crate::fusion::FusionError::from)?;
                let origin = pose.transform_point(&extr.translation);
                let dir = pose.orientation * (extr.rotation * ray);
                let Some(hit) = world.ray_terrain(&origin, &dir, 10_000.0) else { continue };
                let offset = hit - pose.position;
                let range = offset.norm();
                if range <= 0.0 {
                    continue;
                }
                out.push(Contact {
                    position: hit,
                    covariance: bearing_covariance(range, &(offset / range), &cfg.fusion.covariance)?,
                    class: det.class,
                    confidence: det.confidence,
                    source_robot: agent.cfg.id,
                    timestamp: cap.t,
                    depth_source: DepthSource::StereoMedian,
                });
            }
        }
    }
    Ok(out)
}

fn report(robot: u32, track_id: u32, c: &Contact, mean: &Vector3<f64>, t: f64, payload: u32) -> TrackReport {
    TrackReport {
        robot_id: robot,
        track_id,
        class: c.class,
        position: *mean,
        covariance_diag: c.covariance.diagonal(),
        confidence: c.confidence as f32,
        timestamp: t,
        payload_bytes: payload,
    }
}

fn track_report(robot: u32, tr: &Track, t: f64, payload: u32) -> TrackReport {
    TrackReport {
        robot_id: robot,
        track_id: tr.id,
        class: tr.class,
        position: tr.mean,
        covariance_diag: tr.covariance.diagonal(),
        confidence: tr.confidence as f32,
        timestamp: t,
        payload_bytes: payload,
    }
}

/// Runs a validated configuration to completion. The same configuration
/// always produces the same output.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunOutput, ScenarioError> {
    cfg.validate()?;
    let seed = cfg.run.seed;
    let world = gen_world(seed, &cfg.world)?;
    let lat = &cfg.planner.lattice;
    let prims = generate_primitives(lat.min_turn_radius, lat.arc_length, lat.headings, cfg.planner.cell_size)
        .map_err(|e| ScenarioError::Plan { robot: 0, source: e })?;
    let needs_map = cfg.robots.iter().any(|r| r.kind == RobotKind::Ugv);
    let costmap = if needs_map {
        Some(world.costmap(&cfg.planner.roughness, cfg.planner.cell_size)?)
    } else {
        None
    };

    let mut agents = Vec::with_capacity(cfg.robots.len());
    for (i, rc) in cfg.robots.iter().enumerate() {
        let start = Vector2::new(rc.start[0], rc.start[1]);
        let truth = VehicleState::new(start, rc.heading_deg.to_radians());
        let (pod, mode, route, tracker) = match rc.kind {
            RobotKind::Ugv => {
                let wps: Vec<Vector2<f64>> = rc.waypoints.iter().map(|w| Vector2::new(w[0], w[1])).collect();
                let route = plan_route(
                    &truth,
                    &wps,
                    costmap.as_ref().expect("built for ground vehicles"),
                    &prims,
                    &cfg.planner.schedule,
                    cfg.planner.goal_tolerance,
                )
                .map_err(|e| ScenarioError::Plan { robot: rc.id, source: e })?;
                (PodConfig::ugv_reference(), ViewMode::Billboard, Some(route), Some(TrackDatabase::new(cfg.tracker)?))
            }
            RobotKind::Uav => (PodConfig::uav_reference(), ViewMode::Footprint, None, None),
        };
        agents.push(Agent {
            cfg: rc,
            link: i,
            pod,
            mode,
            truth,
            altitude: world.height_at(start.x, start.y) + rc.altitude,
            cmd: Command { speed: 0.0, curvature: 0.0 },
            route,
            pursuit: PurePursuit::new(cfg.control.pursuit),
            waypoint: 0,
            grid: LocalElevationGrid::new(cfg.control.local_grid),
            occ: None,
            samples: (None, None),
            pending: None,
            queue: Vec::new(),
            tracker,
            sense_rng: ChaCha8Rng::seed_from_u64(derive_seed(seed, DOMAIN_SENSING, rc.id as u64, 0)),
            pose_rng: ChaCha8Rng::seed_from_u64(derive_seed(seed, DOMAIN_POSE, rc.id as u64, 0)),
            frame: 0,
            next_report_id: 1,
            sends: Vec::new(),
            driven: Vec::new(),
        });
    }

    let ticks = (cfg.run.duration / TICK).round() as u64;
    let capture_ticks = ((1.0 / cfg.sensing.capture_rate) / TICK).round().max(1.0) as u64;
    let scan_ticks = ((1.0 / cfg.control.scan_rate) / TICK).round().max(1.0) as u64;
    let mut latency = Vec::new();
    let mut track_log = Vec::new();
    let (mut n_frames, mut n_dets, mut n_contacts) = (0usize, 0usize, 0usize);
    let payload = cfg.network.payload_bytes;

    for k in 0..=ticks {
        let t = k as f64 * TICK;
        for a in agents.iter_mut() {
            let truth_pose = a.true_pose(&world, t);
            if k % 50 == 0 {
                a.driven.push([a.truth.position.x, a.truth.position.y]);
            }

            if k % POSE_TICKS == 0 {
                let measured = simulate_pose(&truth_pose, &cfg.sensing.pose_noise, &mut a.pose_rng);
                a.samples = (a.samples.1.take(), Some(measured));
            }

            if k % capture_ticks == 0 {
                let detections = simulate_detector(&truth_pose, &a.pod, &world, &cfg.sensing, a.mode, t, &mut a.sense_rng);
                let clouds = match a.mode {
                    ViewMode::Billboard => simulate_stereo_cloud(&truth_pose, &a.pod, &world, &cfg.sensing, a.mode, &mut a.sense_rng),
                    ViewMode::Footprint => Vec::new(),
                };
                let (stages, e2e) = pipeline_latency(&cfg.pipeline, derive_seed(seed, DOMAIN_PIPELINE, a.cfg.id as u64, 0), a.frame);
                a.pending = Some(Capture {
                    t,
                    frame: a.frame,
                    detections,
                    clouds,
                    stages,
                    end_to_end: e2e,
                });
                a.frame += 1;
                n_frames += 1;
            }

            // localize once the pose measurements bracket the capture time
            if let Some(cap) = &a.pending {
                if let Some(pose) = bracket(&a.samples, cap.t) {
                    let contacts = contacts_for(a, cap, &pose, cfg, &world)?;
                    let cap = a.pending.take().expect("checked above");
                    n_dets += cap.detections.len();
                    n_contacts += contacts.len();
                    a.queue.push(Release {
                        t_release: cap.t + cap.end_to_end,
                        t_capture: cap.t,
                        frame: cap.frame,
                        detections: cap.detections.len(),
                        contacts,
                        stages: cap.stages,
                        end_to_end: cap.end_to_end,
                    });
                }
            }

            let mut due: Vec<Release> = Vec::new();
            let mut i = 0;
            while i < a.queue.len() {
                if a.queue[i].t_release <= t {
                    due.push(a.queue.remove(i));
                } else {
                    i += 1;
                }
            }
            due.sort_by(|x, y| x.t_release.total_cmp(&y.t_release).then(x.frame.cmp(&y.frame)));
            for r in due {
                latency.push(LatencyRecord {
                    robot: a.cfg.id,
                    frame: r.frame,
                    t_capture: r.t_capture,
                    end_to_end: r.end_to_end,
                    t_ingest: t,
                    stages: r.stages,
                    detections: r.detections,
                    contacts: r.contacts.len(),
                });
                match &mut a.tracker {
                    Some(db) => {
                        let events = db.lifecycle_step(&r.contacts, t)?;
                        for tr in db.due_reports(&events) {
                            a.sends.push(SendEvent {
                                t_send: t,
                                link: a.link,
                                report: track_report(a.cfg.id, tr, t, payload),
                            });
                        }
                        track_log.extend(events.into_iter().map(|event| TrackLogRecord { robot: a.cfg.id, event }));
                    }
                    None => {
                        for c in &r.contacts {
                            let id = a.next_report_id;
                            a.next_report_id += 1;
                            a.sends.push(SendEvent {
                                t_send: t,
                                link: a.link,
                                report: report(a.cfg.id, id, c, &c.position, t, payload),
                            });
                        }
                    }
                }
            }

            if a.cfg.kind == RobotKind::Ugv && k % scan_ticks == 0 {
                let scan = simulate_lidar_scan(&truth_pose, &world, cfg.control.local_grid.range_limit);
                let g = &cfg.control.local_grid;
                update_local_grid(&mut a.grid, &scan, &truth_pose, g.range_limit, g.voxel_size);
                a.occ = Some(occupancy_costmap(&a.grid, cfg.control.obstacle_threshold));
            }

            if k % POSE_TICKS == 0 {
                let measured = a.samples.1.as_ref().expect("sampled this tick");
                let est = VehicleState {
                    position: measured.position.xy(),
                    heading: measured.yaw(),
                    ..a.truth
                };
                a.cmd = match a.cfg.kind {
                    RobotKind::Ugv => {
                        let route = a.route.as_ref().expect("ground vehicles have a route");
                        match a.pursuit.command(&est, &route.trajectory) {
                            PursuitOutput::Finished => Command { speed: 0.0, curvature: 0.0 },
                            PursuitOutput::Drive(c) => {
                                let s = a.pursuit.progress_s(&route.trajectory);
                                let blocked = a
                                    .occ
                                    .as_ref()
                                    .is_some_and(|o| path_blocked_ahead(&route.trajectory, s, cfg.control.stop_distance, o));
                                if blocked {
                                    Command { speed: 0.0, ..c }
                                } else {
                                    c
                                }
                            }
                        }
                    }
                    RobotKind::Uav => {
                        // straight legs between waypoints; reaching one switches to the next
                        let step = a.cfg.speed * POSE_TICKS as f64 * TICK;
                        while let Some(w) = a.cfg.waypoints.get(a.waypoint) {
                            if (Vector2::new(w[0], w[1]) - est.position).norm() > step {
                                break;
                            }
                            a.waypoint += 1;
                        }
                        match a.cfg.waypoints.get(a.waypoint) {
                            Some(w) => {
                                let d = Vector2::new(w[0], w[1]) - a.truth.position;
                                a.truth.heading = d.y.atan2(d.x);
                                Command { speed: a.cfg.speed, curvature: 0.0 }
                            }
                            None => Command { speed: 0.0, curvature: 0.0 },
                        }
                    }
                };
            }
            a.truth = step_vehicle(&a.truth, &a.cmd, TICK);
        }
    }

    let mut events: Vec<SendEvent> = Vec::new();
    for a in &agents {
        events.extend(a.sends.iter().cloned());
    }
    // stable: equal times keep robot order, then emission order
    events.sort_by(|x, y| x.t_send.total_cmp(&y.t_send));
    let links: Vec<LinkModel> = cfg.robots.iter().map(|r| cfg.link_for(r)).collect();
    let network = run_network(&events, &links, cfg.network.merge_radius)?;

    let mut tracks = Vec::new();
    for a in &agents {
        if let Some(db) = &a.tracker {
            tracks.extend(db.confirmed().map(|t| (a.cfg.id, t.clone())));
        }
    }
    let by_robot: Vec<(u32, Vec<Estimate>)> = agents
        .iter()
        .filter(|a| a.tracker.is_some())
        .map(|a| {
            let est = tracks
                .iter()
                .filter(|(r, _)| *r == a.cfg.id)
                .map(|(_, t)| Estimate { class: t.class, position: t.mean })
                .collect();
            (a.cfg.id, est)
        })
        .collect();
    let cop_est: Vec<Estimate> = network
        .cop
        .objects
        .iter()
        .map(|o| Estimate { class: o.class, position: o.position })
        .collect();
    let radius = cfg.scoring.match_radius;
    let ts = score_per_robot(&by_robot, &world.objects, radius);
    let cs = score_estimates(&cop_est, &world.objects, radius);
    let lat_values: Vec<f64> = latency.iter().map(|l| l.end_to_end).collect();
    let metrics = RunMetrics {
        objects: world.objects.len(),
        tracks: tracks.len(),
        track_precision: ts.precision,
        track_recall: ts.recall,
        vacuous: ts.vacuous,
        geo_error_mean: ts.error_mean,
        geo_error_max: ts.error_max,
        cop_objects: cop_est.len(),
        cop_precision: cs.precision,
        cop_recall: cs.recall,
        cop_error_max: cs.error_max,
        cop_consistency: cop_consistency(&cop_est, &world.objects, radius),
        frames: n_frames,
        detections: n_dets,
        contacts: n_contacts,
        latency_mean: if lat_values.is_empty() { 0.0 } else { lat_values.iter().sum::<f64>() / lat_values.len() as f64 },
        latency_max: lat_values.iter().copied().fold(0.0, f64::max),
        sends: network.sends,
        deliveries: network.deliveries,
        drops: network.drops,
    };

    let robots = agents
        .into_iter()
        .map(|a| RobotTrace {
            id: a.cfg.id,
            kind: a.cfg.kind,
            plan_cost: a.route.as_ref().map(|r| r.cost()),
            plan_eps: a.route.as_ref().map(|r| r.achieved_eps()),
            plan_expansions: a.route.as_ref().map(|r| r.legs.iter().map(|l| l.expansions).sum()),
            planned: a.route.map(|r| r.trajectory),
            driven: a.driven,
            throughput: throughput_check(&a.pod, cfg.sensing.capture_rate),
        })
        .collect();

    Ok(RunOutput {
        metrics,
        world,
        tracks,
        network,
        latency,
        track_log,
        robots,
        seed,
        duration: cfg.run.duration,
        merge_radius: cfg.network.merge_radius,
        capture_rate: cfg.sensing.capture_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::ObjectClass;
    use crate::scenario::sensing::SensingModel;
    use crate::scenario::world::{ObjectSpec, WorldSpec};

    pub(crate) fn noiseless_config() -> ScenarioConfig {
        let classes = [ObjectClass::Person, ObjectClass::EGator, ObjectClass::PickupTruck, ObjectClass::Person, ObjectClass::EGator];
        let objects = classes
            .iter()
            .enumerate()
            .map(|(i, &class)| ObjectSpec {
                class,
                x: 30.0 + 25.0 * i as f64,
                y: if i % 2 == 0 { 52.0 } else { 28.0 },
            })
            .collect();
        let mut cfg = ScenarioConfig::default();
        cfg.run.duration = 40.0;
        cfg.world = WorldSpec {
            width: 160.0,
            height: 80.0,
            relief: 0.0,
            objects,
            ..Default::default()
        };
        cfg.sensing = SensingModel {
            max_range: 100.0,
            ..SensingModel::noiseless()
        };
        cfg.network.link.loss_prob = 0.0;
        cfg.robots = vec![
            RobotConfig {
                id: 1,
                kind: RobotKind::Ugv,
                start: [10.0, 40.0],
                heading_deg: 0.0,
                waypoints: vec![[150.0, 40.0]],
                speed: 5.0,
                altitude: 60.0,
                link: None,
            },
            RobotConfig {
                id: 2,
                kind: RobotKind::Uav,
                start: [10.0, 40.0],
                heading_deg: 0.0,
                waypoints: vec![[150.0, 40.0]],
                speed: 5.0,
                altitude: 60.0,
                link: None,
            },
        ];
        cfg
    }

    #[test]
    fn noiseless_end_to_end() {
        let out = run_scenario(&noiseless_config()).unwrap();
        let m = &out.metrics;
        assert_eq!(m.objects, 5);
        assert_eq!((m.track_recall, m.track_precision), (1.0, 1.0), "{m:?}");
        assert!(m.geo_error_max < 0.5, "{m:?}");
        assert_eq!(m.cop_consistency, 1.0, "{m:?}");
        assert_eq!((m.cop_recall, m.cop_precision), (1.0, 1.0), "{m:?}");
        assert!(!m.vacuous);
        for l in &out.latency {
            assert!(l.t_ingest >= l.t_capture + l.end_to_end);
        }
    }

    #[test]
    fn empty_world_is_vacuous() {
        let mut cfg = noiseless_config();
        cfg.world.objects.clear();
        cfg.run.duration = 5.0;
        let out = run_scenario(&cfg).unwrap();
        assert_eq!(out.metrics.tracks, 0);
        assert_eq!(out.metrics.cop_objects, 0);
        assert!(out.metrics.vacuous);
        assert_eq!((out.metrics.track_precision, out.metrics.track_recall), (1.0, 1.0));
    }

    #[test]
    fn uav_geolocation_exact_on_flat_ground() {
        let mut cfg = noiseless_config();
        cfg.robots.remove(0);
        cfg.run.duration = 20.0;
        let out = run_scenario(&cfg).unwrap();
        assert!(out.metrics.cop_objects > 0);
        for o in &out.network.cop.objects {
            let truth = out.world.objects.iter().find(|w| w.class == o.class && (w.position - o.position).norm() < 1.0).unwrap();
            assert!((truth.position - o.position).norm() < 1e-6, "{:?} vs {:?}", o.position, truth.position);
        }
    }
}
