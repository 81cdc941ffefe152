//! Scripted contact streams through the track lifecycle: confirmation,
//! chain restart after a long gap, and death by timeout.

use geoloc::fusion::DepthSource;
use geoloc::tracker::{LifecycleParams, TrackDatabase, TrackEvent};
use geoloc::{Contact, ObjectClass};
use nalgebra::{Matrix3, Vector3};

fn contact(t: f64) -> Contact {
    Contact {
        position: Vector3::new(250.0, 80.0, 1.0),
        covariance: Matrix3::identity() * 0.5,
        class: ObjectClass::EGator,
        confidence: 0.9,
        source_robot: 1,
        timestamp: t,
        depth_source: DepthSource::StereoMedian,
    }
}

fn run(name: &str, matches: &[f64], finish: Option<f64>) {
    let mut db = TrackDatabase::new(LifecycleParams::default()).expect("default params are valid");
    println!("{name}: matches at {matches:?}");
    let mut steps: Vec<(f64, bool)> = matches.iter().map(|&t| (t, true)).collect();
    if let Some(t) = finish {
        steps.push((t, false));
    }
    for (t, with_contact) in steps {
        let contacts = if with_contact { vec![contact(t)] } else { vec![] };
        for e in db.lifecycle_step(&contacts, t).expect("time moves forward") {
            match e {
                TrackEvent::Born { id, t } => println!("  t={t:>5}: track {id} born"),
                TrackEvent::Confirmed { id, t } => println!("  t={t:>5}: track {id} confirmed"),
                TrackEvent::Died { id, t } => println!("  t={t:>5}: track {id} died"),
                TrackEvent::Updated { id, t, matches } => {
                    let chain = db.track(id).map_or(0, |tr| tr.chain_len);
                    println!("  t={t:>5}: track {id} updated ({matches} matches, chain {chain})");
                }
                TrackEvent::Suppressed { t } => println!("  t={t:>5}: duplicate suppressed"),
            }
        }
    }
    println!();
}

fn main() {
    run("regular sightings", &[0.0, 10.0, 20.0], None);
    run("gap longer than 30 s", &[0.0, 40.0, 50.0, 60.0], None);
    run("lost object", &[0.0, 10.0, 20.0], Some(140.0));
}
