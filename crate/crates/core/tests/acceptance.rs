//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use geoloc::cli::{cmd_replay, cmd_run, ReplayArgs, RunArgs};
use geoloc::fusion::{bearing_covariance, CovarianceParams, DepthSource};
use geoloc::geometry::{make_pod, CameraIntrinsics, Pixel, PodConfig, Pose};
use geoloc::meshnet::{run_network, LinkModel, LogRecord, SendEvent, TrackReport};
use geoloc::navigation::control::cross_track_error;
use geoloc::navigation::{
    generate_primitives, plan_ara, step_vehicle, EpsSchedule, Goal, LatticeGraph, LatticeState, PursuitOutput, PursuitParams,
    PurePursuit, Trajectory, VehicleState,
};
use geoloc::scenario::sensing::{simulate_stereo_cloud, SensingModel, ViewMode};
use geoloc::scenario::world::{gen_world, ObjectSpec, WorldSpec};
use geoloc::scenario::{run_scenario, stereo_depth_sigma, throughput_check, RobotConfig, RobotKind, ScenarioConfig, OUTPUT_FILES};
use geoloc::terrain::local::CellStats;
use geoloc::terrain::CostMapGlobal;
use geoloc::tracker::{predict, update, LifecycleParams, Track, TrackDatabase, TrackEvent};
use geoloc::{Contact, ObjectClass};
use nalgebra::{Matrix3, SymmetricEigen, Vector2, Vector3};
use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::path::PathBuf;
use std::time::Instant;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

// 1 -------------------------------------------------------------------------

fn pod_geometry() -> Outcome {
    let intr = CameraIntrinsics::new(4096, 3000, 48f64.to_radians(), 36f64.to_radians()).map_err(|e| e.to_string())?;
    let pod = make_pod(5, 48f64.to_radians(), 12f64.to_radians(), &intr).map_err(|e| e.to_string())?;
    let deg = pod.total_hfov_rad.to_degrees();
    ensure((deg - 192.0).abs() < 1e-9, format!("total HFOV {deg} deg"))?;
    ensure(
        (pod.total_hfov_rad - 192f64.to_radians()).abs() <= 4.0 * f64::EPSILON,
        format!("total HFOV {} rad", pod.total_hfov_rad),
    )?;
    let n = 2000;
    let start = Instant::now();
    for _ in 0..n {
        std::hint::black_box(make_pod(5, 48f64.to_radians(), 12f64.to_radians(), std::hint::black_box(&intr)).unwrap());
    }
    let per_call = start.elapsed().as_secs_f64() / n as f64;
    ensure(per_call < 1e-3, format!("make_pod takes {:.3} ms", per_call * 1e3))?;
    Ok(format!("total HFOV {deg:.6} deg, make_pod {:.2} us per call", per_call * 1e6))
}

// 2 -------------------------------------------------------------------------

fn throughput() -> Outcome {
    let rate = throughput_check(&PodConfig::ugv_reference(), 4.0);
    // independent arithmetic: per module two 4096x3000 NIR, one 4096x3000 RGB, one 640x480 thermal
    let oracle = 5.0 * (3.0 * 4096.0 * 3000.0 + 640.0 * 480.0) * 4.0;
    ensure(rate == oracle, format!("computed {rate} vs oracle {oracle}"))?;
    let reference = 728e6;
    let rel = (rate - reference) / reference;
    ensure(rel.abs() <= 0.05, format!("{:.1} MPixel/s is {:+.2}% from 728", rate / 1e6, rel * 100.0))?;
    let rounded = 5.0 * (3.0 * 12e6 + 0.3e6) * 4.0;
    Ok(format!(
        "{:.1} MPixel/s vs 728 ({:+.2}%); discrepancy: 12.29 MP sensors counted at full resolution, \
         rounding them to 12.0 MP gives {:.1} MPixel/s ({:+.2}%); pan-tilt cameras excluded",
        rate / 1e6,
        rel * 100.0,
        rounded / 1e6,
        (rounded - reference) / reference * 100.0
    ))
}

// 3 -------------------------------------------------------------------------

fn scripted_contact(t: f64) -> Contact {
    Contact {
        position: Vector3::new(10.0, 20.0, 1.0),
        covariance: Matrix3::identity(),
        class: ObjectClass::Person,
        confidence: 0.9,
        source_robot: 1,
        timestamp: t,
        depth_source: DepthSource::StereoMedian,
    }
}

/// `(time, kind, id)` for confirm and death events of a scripted stream.
fn lifecycle_events(matches: &[f64], extra_steps: &[f64]) -> Result<Vec<(f64, &'static str, u32)>, String> {
    let params = LifecycleParams::default();
    ensure(params.n_confirm == 3 && params.max_gap == 30.0, "defaults are not N=3, t=30 s")?;
    let mut db = TrackDatabase::new(params).map_err(|e| e.to_string())?;
    let mut steps: Vec<(f64, bool)> = matches.iter().map(|&t| (t, true)).collect();
    steps.extend(extra_steps.iter().map(|&t| (t, false)));
    steps.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = Vec::new();
    for (t, with) in steps {
        let contacts = if with { vec![scripted_contact(t)] } else { vec![] };
        for e in db.lifecycle_step(&contacts, t).map_err(|e| e.to_string())? {
            match e {
                TrackEvent::Born { id, t } => out.push((t, "born", id)),
                TrackEvent::Confirmed { id, t } => out.push((t, "confirmed", id)),
                TrackEvent::Died { id, t } => out.push((t, "died", id)),
                _ => {}
            }
        }
    }
    Ok(out)
}

fn tracker_lifecycle() -> Outcome {
    let a = lifecycle_events(&[0.0, 10.0, 20.0], &[])?;
    ensure(a == vec![(0.0, "born", 1), (20.0, "confirmed", 1)], format!("stream 0,10,20 gave {a:?}"))?;

    let b = lifecycle_events(&[0.0, 40.0, 50.0, 60.0], &[])?;
    ensure(b == vec![(0.0, "born", 1), (60.0, "confirmed", 1)], format!("stream 0,40,50,60 gave {b:?}"))?;
    // the chain restarted at 40: nothing confirmed at 50
    let mut db = TrackDatabase::new(LifecycleParams::default()).unwrap();
    for t in [0.0, 40.0] {
        db.lifecycle_step(&[scripted_contact(t)], t).unwrap();
    }
    let chain = db.track(1).map(|t| t.chain_len);
    ensure(chain == Some(1), format!("chain after the 40 s gap is {chain:?}, expected restart at 1"))?;

    let c = lifecycle_events(&[0.0, 10.0, 20.0], &[139.0, 140.0])?;
    ensure(
        c == vec![(0.0, "born", 1), (20.0, "confirmed", 1), (140.0, "died", 1)],
        format!("timeout stream gave {c:?}"),
    )?;
    Ok("0/10/20 confirms at 20; 0/40/50/60 restarts at 40 and confirms at 60; silent 120 s kills at 140".into())
}

// 4 -------------------------------------------------------------------------

fn random_spd(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
    let a = Matrix3::from_fn(|_, _| rng.random_range(-2.0..2.0));
    a * a.transpose() + Matrix3::identity() * rng.random_range(0.05..1.0)
}

fn track_with(p: Matrix3<f64>, mean: Vector3<f64>) -> Track {
    Track::from_contact(
        1,
        &Contact {
            position: mean,
            covariance: p,
            ..scripted_contact(0.0)
        },
    )
}

fn kalman() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_cov: f64 = 0.0;
    let mut worst_mean: f64 = 0.0;
    for i in 0..1000 {
        let p = random_spd(&mut rng);
        let r = random_spd(&mut rng);
        let m = Vector3::from_fn(|_, _| rng.random_range(-50.0..50.0));
        let z = Vector3::from_fn(|_, _| rng.random_range(-50.0..50.0));
        let tr = track_with(p, m);
        let c = Contact {
            position: z,
            covariance: r,
            timestamp: 1.0,
            ..scripted_contact(1.0)
        };
        let up = update(&tr, &c).map_err(|e| format!("pair {i}: {e}"))?;
        let (pi, ri) = (p.try_inverse().unwrap(), r.try_inverse().unwrap());
        let info = pi + ri;
        let post_info = up.covariance.try_inverse().ok_or(format!("pair {i}: singular posterior"))?;
        worst_cov = worst_cov.max((post_info - info).norm() / info.norm());
        let mean_oracle = info.try_inverse().unwrap() * (pi * m + ri * z);
        worst_mean = worst_mean.max((up.mean - mean_oracle).norm() / mean_oracle.norm().max(1.0));
    }
    ensure(worst_cov <= 1e-6, format!("information-form covariance mismatch {worst_cov:e}"))?;
    ensure(worst_mean <= 1e-6, format!("information-form mean mismatch {worst_mean:e}"))?;

    let mut runner = TestRunner::new(PropConfig {
        cases: 512,
        failure_persistence: None,
        ..PropConfig::default()
    });
    let tr = track_with(random_spd(&mut rng), Vector3::new(1.0, 2.0, 3.0));
    runner
        .run(&(0.0f64..1e7), |dt| {
            let p = predict(&tr, dt).unwrap();
            prop_assert_eq!(p.mean, tr.mean);
            prop_assert_eq!(p.covariance, tr.covariance);
            Ok(())
        })
        .map_err(|e| format!("predict not identity: {e}"))?;
    ensure(predict(&tr, -1.0).is_err(), "negative dt accepted")?;
    Ok(format!(
        "1000 SPD pairs: covariance rel err {worst_cov:.2e}, mean rel err {worst_mean:.2e}; predict identity on 512 dt values"
    ))
}

// 5 -------------------------------------------------------------------------

fn covariance_law() -> Outcome {
    let params = CovarianceParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..2000 {
        let r = rng.random_range(0.5..150.0);
        let b = Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0));
        if b.norm() < 1e-3 {
            continue;
        }
        let b = b.normalize();
        let cov = bearing_covariance(r, &b, &params).map_err(|e| e.to_string())?;
        let mut eig: Vec<f64> = SymmetricEigen::new(cov).eigenvalues.iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        let mut want = [params.k_bearing * r * r, params.k_bearing * r * r, params.k_range * r * r];
        want.sort_by(f64::total_cmp);
        for (g, w) in eig.iter().zip(want) {
            worst = worst.max((g - w).abs());
        }
        let doubled = bearing_covariance(2.0 * r, &b, &params).map_err(|e| e.to_string())?;
        ensure(doubled == cov * 4.0, format!("range doubling at r={r} is not an exact x4"))?;
    }
    ensure(worst <= 1e-9, format!("eigenvalue error {worst:e}"))?;
    Ok(format!("2000 random bearings: max eigenvalue error {worst:.2e}; doubling range gives exactly 4x"))
}

// 6 -------------------------------------------------------------------------

fn terrain_statistics() -> Outcome {
    let mut runner = TestRunner::new(PropConfig {
        cases: 256,
        failure_persistence: None,
        ..PropConfig::default()
    });
    let strategy = proptest::collection::vec(-50.0f64..50.0, 1..200).prop_flat_map(|v| {
        let n = v.len();
        (Just(v), Just((0..n).collect::<Vec<usize>>()).prop_shuffle())
    });
    runner
        .run(&strategy, |(heights, order)| {
            let mut s = CellStats::default();
            for &i in &order {
                s.push(heights[i]);
            }
            let n = heights.len() as f64;
            let mean = heights.iter().sum::<f64>() / n;
            let sd = (heights.iter().map(|h| (h - mean).powi(2)).sum::<f64>() / n).sqrt();
            prop_assert!((s.mean - mean).abs() <= 1e-9, "mean {} vs {}", s.mean, mean);
            prop_assert!((s.population_std() - sd).abs() <= 1e-9, "sd {} vs {}", s.population_std(), sd);
            Ok(())
        })
        .map_err(|e| format!("recursive vs batch: {e}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let normal = Normal::new(3.0, 0.25).unwrap();
    let heights: Vec<f64> = (0..10_000).map(|_| normal.sample(&mut rng)).collect();
    let mut s = CellStats::default();
    heights.iter().for_each(|&h| s.push(h));
    let cut = s.mean - s.population_std();
    let frac = heights.iter().filter(|&&h| h > cut).count() as f64 / heights.len() as f64;
    ensure((frac - 0.841).abs() <= 0.02, format!("fraction above mean - sd is {frac}"))?;
    Ok(format!("256 shuffled streams match batch within 1e-9; fraction above mean-sd = {frac:.4}"))
}

// 7 -------------------------------------------------------------------------

fn seeded_map(seed: u64) -> CostMapGlobal {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut map = CostMapGlobal::uniform(Vector2::zeros(), 0.5, 30, 30, 1.0);
    for iy in 0..30 {
        for ix in 0..30 {
            let near_ends = (ix < 6 && iy < 6) || (ix > 23 && iy > 23);
            let c = if !near_ends && rng.random::<f64>() < 0.12 {
                f64::INFINITY
            } else {
                rng.random_range(1.0..5.0)
            };
            map.set_cost(ix, iy, c);
        }
    }
    map
}

/// Plain Dijkstra over the same lattice graph, stopping at the first goal-region state.
fn dijkstra(graph: &LatticeGraph, start: LatticeState, goal: &Goal) -> Option<f64> {
    let mut dist = vec![f64::INFINITY; graph.state_count()];
    let mut heap = BinaryHeap::new();
    let s0 = graph.index(start);
    dist[s0] = 0.0;
    heap.push(Reverse((ordered(0.0), s0)));
    while let Some(Reverse((d, i))) = heap.pop() {
        let d = f64::from_bits(d);
        if d > dist[i] {
            continue;
        }
        let s = graph.state(i);
        if (graph.position(s) - goal.position).norm() <= goal.tolerance {
            return Some(d);
        }
        graph.for_each_successor(s, |n, c, _| {
            let j = graph.index(n);
            if d + c < dist[j] {
                dist[j] = d + c;
                heap.push(Reverse((ordered(d + c), j)));
            }
        });
    }
    None
}

/// Non-negative floats order like their bit patterns.
fn ordered(x: f64) -> u64 {
    x.to_bits()
}

fn planner_optimality() -> Outcome {
    let prims = generate_primitives(4.0, 2.0, 16, 0.5).map_err(|e| e.to_string())?;
    let sched = EpsSchedule::default();
    let mut slowest: f64 = 0.0;
    let mut solved = 0;
    let mut unsolvable = 0;
    let mut expansions = 0u64;
    let mut costs = Vec::new();
    for seed in 1..=40u64 {
        if solved == 10 {
            break;
        }
        let map = seeded_map(seed);
        let graph = LatticeGraph::new(&map, &prims).map_err(|e| e.to_string())?;
        let start = LatticeState::new(2, 2, 2);
        let goal = Goal::new(13.25, 13.25, 1.0);
        let oracle = dijkstra(&graph, start, &goal);
        let t0 = Instant::now();
        let plan = plan_ara(start, &goal, &map, &prims, &sched);
        let elapsed = t0.elapsed().as_secs_f64();
        slowest = slowest.max(elapsed);
        ensure(elapsed < 5.0, format!("map {seed}: schedule took {elapsed:.2} s"))?;
        match (oracle, plan) {
            (Some(best), Ok(r)) => {
                ensure(r.achieved_eps == 1.0, format!("map {seed}: achieved eps {}", r.achieved_eps))?;
                ensure(
                    (r.cost - best).abs() <= 1e-9,
                    format!("map {seed}: ARA* cost {} vs Dijkstra {best}", r.cost),
                )?;
                for it in &r.iterations {
                    ensure(
                        it.cost <= it.eps * best + 1e-9,
                        format!("map {seed}: eps {} solution {} exceeds bound {}", it.eps, it.cost, it.eps * best),
                    )?;
                }
                expansions += r.iterations.iter().map(|i| i.expansions).sum::<u64>();
                costs.push(best);
                solved += 1;
            }
            // both agree there is no path; draw another map
            (None, Err(_)) => unsolvable += 1,
            (o, p) => return Err(format!("map {seed}: oracle {o:?} disagrees with planner {:?}", p.map(|r| r.cost))),
        }
    }
    ensure(solved == 10, format!("only {solved} solvable maps in 40 seeds"))?;
    Ok(format!(
        "10 solvable maps optimal within 1e-9, every iteration within its eps bound; \
         optimal costs {:.2}..{:.2}, {expansions} expansions in total; \
         {unsolvable} blocked maps agreed unsolvable; slowest {slowest:.4} s",
        costs.iter().copied().fold(f64::INFINITY, f64::min),
        costs.iter().copied().fold(0.0, f64::max)
    ))
}

// 8 -------------------------------------------------------------------------

fn controller() -> Outcome {
    let path = Trajectory::straight(&[(0.0, 0.0), (200.0, 0.0)], 0.1);
    let params = PursuitParams {
        lookahead: 8.0,
        speed: 3.0,
        ..PursuitParams::default()
    };
    let mut worst_overall: f64 = 0.0;
    for (offset, heading) in [(1.0, 0.0), (-2.0, 0.0), (0.5, 0.3), (0.0, -0.4)] {
        let mut pp = PurePursuit::new(params);
        let mut s = VehicleState::new(Vector2::new(0.0, offset), heading);
        let mut travelled = 0.0;
        let mut worst_after: f64 = 0.0;
        while let PursuitOutput::Drive(cmd) = pp.command(&s, &path) {
            ensure(cmd.speed == 3.0, "speed not held at 3 m/s")?;
            s = step_vehicle(&s, &cmd, 0.02);
            travelled += cmd.speed * 0.02;
            if travelled >= 50.0 {
                worst_after = worst_after.max(cross_track_error(&path, s.position));
            }
        }
        ensure(travelled > 150.0, format!("run stopped after {travelled} m"))?;
        ensure(
            worst_after < 0.1,
            format!("start offset {offset} m, heading {heading} rad: {worst_after:.4} m error after 50 m"),
        )?;
        worst_overall = worst_overall.max(worst_after);
    }
    Ok(format!("4 initial offsets: worst cross-track error after 50 m of travel {worst_overall:.4} m"))
}

// 9 -------------------------------------------------------------------------

fn stereo_noise() -> Outcome {
    let f = 4603.7;
    let expected = stereo_depth_sigma(50.0, f, 0.2, 0.5);
    ensure((expected - 1.358).abs() < 5e-4, format!("formula gives {expected}"))?;

    let intr = CameraIntrinsics::from_focal(4096, 3000, f, Pixel::new(2048.0, 1500.0)).map_err(|e| e.to_string())?;
    let pod = make_pod(1, intr.hfov_rad(), 0.0, &intr).map_err(|e| e.to_string())?;
    let world = gen_world(
        9,
        &WorldSpec {
            width: 200.0,
            height: 100.0,
            relief: 0.0,
            objects: vec![ObjectSpec { class: ObjectClass::PickupTruck, x: 60.0, y: 50.0 }],
            ..Default::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let pose = Pose::planar(10.0, 50.0, 0.0, 0.0, 0.0);
    let model = SensingModel {
        object_points: 100,
        terrain_points: 0,
        ..SensingModel::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut depths = Vec::with_capacity(10_000);
    while depths.len() < 10_000 {
        let clouds = simulate_stereo_cloud(&pose, &pod, &world, &model, ViewMode::Billboard, &mut rng);
        depths.extend(clouds[0].points.iter().map(|p| p.position.z));
    }
    depths.truncate(10_000);
    let mean = depths.iter().sum::<f64>() / depths.len() as f64;
    let sd = (depths.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / (depths.len() - 1) as f64).sqrt();
    ensure((mean - 50.0).abs() < 0.1, format!("mean depth {mean}"))?;
    ensure((sd / 1.358 - 1.0).abs() <= 0.10, format!("empirical sigma {sd:.4} m"))?;
    Ok(format!("sigma_z formula {expected:.4} m; empirical {sd:.4} m over 10^4 simulated points (mean {mean:.3} m)"))
}

// 10 ------------------------------------------------------------------------

fn network_events(n: usize) -> Vec<SendEvent> {
    (0..n)
        .map(|i| SendEvent {
            t_send: i as f64 * 0.01,
            link: i % 2,
            report: TrackReport {
                robot_id: (i % 2) as u32 + 1,
                track_id: (i / 2) as u32,
                class: ObjectClass::ALL[i % 3],
                position: Vector3::new((i % 97) as f64 * 10.0, (i % 89) as f64 * 10.0, 0.0),
                covariance_diag: Vector3::new(1.0, 1.0, 1.0),
                confidence: 0.8,
                timestamp: i as f64 * 0.01,
                payload_bytes: 512,
            },
        })
        .collect()
}

fn network() -> Outcome {
    let links = [
        LinkModel { loss_prob: 0.5, rng_seed: 77, ..Default::default() },
        LinkModel { loss_prob: 0.5, rng_seed: 78, ..Default::default() },
    ];
    let events = network_events(10_000);
    let a = run_network(&events, &links, 5.0).map_err(|e| e.to_string())?;
    let b = run_network(&events, &links, 5.0).map_err(|e| e.to_string())?;
    ensure(a.deliveries == b.deliveries && a.log == b.log, "two runs with the same seed differ")?;
    let sd = (10_000.0f64 * 0.25).sqrt();
    ensure(
        (a.deliveries as f64 - 5000.0).abs() <= 3.0 * sd,
        format!("{} delivered, outside 5000 +/- {}", a.deliveries, 3.0 * sd),
    )?;
    ensure(a.sends == 10_000 && a.deliveries + a.drops == a.sends, "conservation violated")?;

    let mut outcome: BTreeMap<u64, usize> = BTreeMap::new();
    let mut sent_link: BTreeMap<u64, usize> = BTreeMap::new();
    let mut last_seq: BTreeMap<usize, u64> = BTreeMap::new();
    let mut last_t: BTreeMap<usize, f64> = BTreeMap::new();
    for rec in &a.log {
        match *rec {
            LogRecord::Send { seq, link, .. } => {
                sent_link.insert(seq, link);
            }
            LogRecord::Drop { seq, .. } => *outcome.entry(seq).or_default() += 1,
            LogRecord::Deliver { seq, link, t } => {
                *outcome.entry(seq).or_default() += 1;
                ensure(sent_link.get(&seq) == Some(&link), format!("message {seq} delivered before sent or on wrong link"))?;
                if let Some(&p) = last_seq.get(&link) {
                    ensure(seq > p, format!("link {link}: message {seq} overtook {p}"))?;
                }
                if let Some(&pt) = last_t.get(&link) {
                    ensure(t >= pt, format!("link {link}: delivery time went backwards"))?;
                }
                last_seq.insert(link, seq);
                last_t.insert(link, t);
            }
        }
    }
    ensure(
        outcome.len() == 10_000 && outcome.values().all(|&c| c == 1),
        "some message was neither delivered nor dropped exactly once",
    )?;
    Ok(format!(
        "{} of 10000 delivered (3-sigma band 4850..5150), identical across runs; FIFO and conservation hold",
        a.deliveries
    ))
}

// 11 ------------------------------------------------------------------------

fn noiseless_config() -> ScenarioConfig {
    let classes = [ObjectClass::Person, ObjectClass::EGator, ObjectClass::PickupTruck, ObjectClass::Person, ObjectClass::EGator];
    let mut cfg = ScenarioConfig::default();
    cfg.run.duration = 40.0;
    cfg.world = WorldSpec {
        width: 160.0,
        height: 80.0,
        relief: 0.0,
        objects: classes
            .iter()
            .enumerate()
            .map(|(i, &class)| ObjectSpec {
                class,
                x: 30.0 + 25.0 * i as f64,
                y: if i % 2 == 0 { 52.0 } else { 28.0 },
            })
            .collect(),
        ..Default::default()
    };
    cfg.sensing = SensingModel {
        max_range: 100.0,
        ..SensingModel::noiseless()
    };
    let robot = |id, kind| RobotConfig {
        id,
        kind,
        start: [10.0, 40.0],
        heading_deg: 0.0,
        waypoints: vec![[150.0, 40.0]],
        speed: 5.0,
        altitude: 60.0,
        link: None,
    };
    cfg.robots = vec![robot(1, RobotKind::Ugv), robot(2, RobotKind::Uav)];
    cfg
}

fn end_to_end() -> Outcome {
    let cfg = noiseless_config();
    ensure(cfg.sensing.p_detect_at(0.0) == 1.0 && cfg.sensing.p_detect_at(1e4) == 1.0, "p_detect not identically 1")?;
    let t0 = Instant::now();
    let out = run_scenario(&cfg).map_err(|e| e.to_string())?;
    let secs = t0.elapsed().as_secs_f64();
    let m = &out.metrics;
    ensure(m.objects == 5, format!("{} objects", m.objects))?;
    ensure(m.track_recall == 1.0, format!("recall {}", m.track_recall))?;
    ensure(m.track_precision == 1.0, format!("precision {}", m.track_precision))?;
    ensure(m.geo_error_max < 0.5, format!("geolocation error {} m", m.geo_error_max))?;
    ensure(m.cop_consistency == 1.0, format!("COP consistency {}", m.cop_consistency))?;
    ensure(secs < 60.0, format!("run took {secs:.1} s"))?;
    for l in &out.latency {
        ensure(
            l.t_ingest >= l.t_capture + l.end_to_end,
            format!("frame {} ingested at {} before {}", l.frame, l.t_ingest, l.t_capture + l.end_to_end),
        )?;
    }
    Ok(format!(
        "recall {} precision {} max error {:.4} m, COP consistency {}, {} tracks, runtime {secs:.2} s",
        m.track_recall, m.track_precision, m.geo_error_max, m.cop_consistency, m.tracks
    ))
}

// 12 ------------------------------------------------------------------------

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = manifest_dir().join("scenarios/demo.toml");
    let dirs = [tmp.path().join("a"), tmp.path().join("b")];
    for d in &dirs {
        cmd_run(&RunArgs {
            config: config.clone(),
            out: d.clone(),
            seed: None,
        })
        .map_err(|e| e.to_string())?;
    }
    for name in OUTPUT_FILES {
        let a = std::fs::read(dirs[0].join(name)).map_err(|e| format!("{name}: {e}"))?;
        let b = std::fs::read(dirs[1].join(name)).map_err(|e| format!("{name}: {e}"))?;
        ensure(!a.is_empty() || name == "track_log.jsonl", format!("{name} is empty"))?;
        ensure(a == b, format!("{name} differs between runs"))?;
    }
    let replay_dir = tmp.path().join("replay");
    cmd_replay(&ReplayArgs {
        log: dirs[0].join("delivery_log.jsonl"),
        out: replay_dir.clone(),
        merge_radius: None,
    })
    .map_err(|e| e.to_string())?;
    let original = std::fs::read(dirs[0].join("cop.geojson")).unwrap();
    let replayed = std::fs::read(replay_dir.join("cop.geojson")).map_err(|e| e.to_string())?;
    ensure(original == replayed, "replayed cop.geojson differs")?;
    Ok(format!("{} output files byte-identical across two runs; replayed cop.geojson identical", OUTPUT_FILES.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("pod geometry", pod_geometry),
        ("throughput arithmetic", throughput),
        ("tracker lifecycle", tracker_lifecycle),
        ("Kalman correctness", kalman),
        ("covariance law", covariance_law),
        ("terrain statistics", terrain_statistics),
        ("planner optimality", planner_optimality),
        ("controller", controller),
        ("stereo noise model", stereo_noise),
        ("network", network),
        ("end-to-end noiseless scenario", end_to_end),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let result = std::panic::catch_unwind(f).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match result {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} acceptance criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
