use std::collections::BTreeSet;

use awarekit_core::geometry::Point2;
use awarekit_core::pipeline::{run_scenario, NullClock, RunMode, SimConfig, Simulator};
use awarekit_core::registry::Registry;
use awarekit_core::world::{
    EgoState, Frame, GroundTruthObject, LaneSegment, MapModel, ObjectCategory, Scenario, SubSituation, Zone, ZoneTag,
};
use proptest::prelude::*;

fn map(tag: ZoneTag) -> MapModel {
    MapModel::new(
        vec![
            LaneSegment::new("east", vec![Point2::new(-500.0, 0.0), Point2::new(500.0, 0.0)]),
            LaneSegment::new("west", vec![Point2::new(500.0, 3.5), Point2::new(-500.0, 3.5)]),
        ],
        vec![Zone {
            tag,
            polygon: vec![
                Point2::new(-600.0, -600.0),
                Point2::new(600.0, -600.0),
                Point2::new(600.0, 600.0),
                Point2::new(-600.0, 600.0),
            ],
        }],
    )
    .unwrap()
}

#[derive(Debug, Clone)]
struct Obj {
    x: f64,
    y: f64,
    vx: f64,
    category: ObjectCategory,
}

fn objects() -> impl Strategy<Value = Vec<Obj>> {
    let category = prop::sample::select(vec![ObjectCategory::Vehicle, ObjectCategory::Vru, ObjectCategory::Static]);
    prop::collection::vec(
        (-60.0f64..60.0, prop::sample::select(vec![0.0, 3.5, -8.0, 30.0]), 0.0f64..15.0, category)
            .prop_map(|(x, y, vx, category)| Obj { x, y, vx, category }),
        0..6,
    )
}

fn scenario(objs: &[Obj], speed: f64, frames: usize, intersection_from: usize) -> Scenario {
    let frames = (0..frames)
        .map(|k| {
            let t = k as f64 * 0.1;
            let ex = -100.0 + speed * t;
            let mut annotations = BTreeSet::new();
            if k >= intersection_from {
                annotations.insert(SubSituation::ComplexIntersection);
            }
            Frame {
                timestamp: t,
                ego: EgoState { position: Point2::new(ex, 0.0), heading: 0.0, speed, yaw_rate: 0.0, timestamp: t },
                objects: objs
                    .iter()
                    .enumerate()
                    .map(|(i, o)| GroundTruthObject {
                        id: format!("o{i}"),
                        position: Point2::new(ex + o.x + o.vx * t, o.y),
                        velocity: Point2::new(o.vx, 0.0),
                        category: o.category,
                    })
                    .collect(),
                annotations,
            }
        })
        .collect();
    Scenario::new("m".into(), 0.1, frames).unwrap()
}

fn run(map: &MapModel, s: &Scenario, mode: RunMode, seed: u64) -> awarekit_core::pipeline::RunOutput {
    let config = SimConfig { seed, ..SimConfig::default() }.with_mode(mode);
    run_scenario(map, &Registry::reference(), s, config, &mut NullClock, &mut |_, _| {}).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn aware_never_costs_more_than_naive(
        tag in prop::sample::select(ZoneTag::ALL.to_vec()),
        objs in objects(),
        speed in 0.0f64..25.0,
        from in 0usize..30,
        seed in any::<u64>(),
    ) {
        let m = map(tag);
        let s = scenario(&objs, speed, 20, from);
        let aware = run(&m, &s, RunMode::Aware, seed);
        let naive = run(&m, &s, RunMode::Naive, seed);
        prop_assert!(aware.metrics.accumulated_cost <= naive.metrics.accumulated_cost + 1e-12);
        prop_assert!((naive.metrics.accumulated_cost - 20.0 * 1.48).abs() < 1e-9);
        for (id, u) in &naive.metrics.uptime {
            let expected = if id.as_str() == "TRACKING_B" { 0.0 } else { 1.0 };
            prop_assert_eq!(*u, expected);
        }
        for u in aware.metrics.uptime.values() {
            prop_assert!((0.0..=1.0).contains(u));
        }
        for c in &aware.cycles {
            prop_assert!(c.counts.filtered <= c.counts.emitted);
            for (id, cost) in &c.module_cost {
                prop_assert!(c.modules.contains(id));
                prop_assert!(*cost > 0.0);
            }
        }
    }

    #[test]
    fn identical_inputs_give_identical_runs(
        tag in prop::sample::select(ZoneTag::ALL.to_vec()),
        objs in objects(),
        seed in any::<u64>(),
    ) {
        let m = map(tag);
        let s = scenario(&objs, 12.0, 15, 8);
        prop_assert_eq!(run(&m, &s, RunMode::Aware, seed), run(&m, &s, RunMode::Aware, seed));
    }

    #[test]
    fn gated_modules_only_see_relevant_data(
        tag in prop::sample::select(ZoneTag::ALL.to_vec()),
        objs in objects(),
        speed in 0.0f64..25.0,
    ) {
        let m = map(tag);
        let r = Registry::reference();
        let s = scenario(&objs, speed, 15, 100);
        let mut sim = Simulator::new(&m, &r, SimConfig::default()).unwrap();
        for f in s.frames() {
            let res = sim.run_cycle(f, &mut NullClock);
            let grid = sim.last_mlam().unwrap();
            for t in sim.tracks() {
                prop_assert!(grid.is_relevant_at(t.position));
            }
            let relevant = f.objects.iter().filter(|o| grid.is_relevant_at(o.position)).count();
            for (id, n) in &res.processed {
                if r.get(id).unwrap().is_source() {
                    prop_assert!(*n <= relevant);
                }
            }
        }
    }
}
