#![allow(dead_code)]

use std::path::PathBuf;
use std::process::{Command, Output};
use std::time::Instant;

use awarekit::data_dir;
use awarekit::formats::{load_catalog, load_map, load_scenario};
use awarekit_core::pipeline::{run_scenario, Clock, RunMode, RunOutput, SimConfig};
use awarekit_core::registry::Registry;
use awarekit_core::world::{MapModel, Scenario};

pub const SCENARIOS: [&str; 4] = ["handover", "intersection", "highway", "mixed"];

pub fn data(name: &str) -> PathBuf {
    data_dir().join(name)
}

pub fn scenario_path(name: &str) -> PathBuf {
    data(&format!("scenario_{name}.json"))
}

pub fn ring_map() -> MapModel {
    load_map(&data("ring_map.json")).expect("bundled map loads")
}

pub fn scenario(name: &str) -> Scenario {
    load_scenario(&scenario_path(name)).expect("bundled scenario loads")
}

pub fn catalog() -> Registry {
    load_catalog(&data("catalog_reference.json")).expect("bundled catalog loads")
}

pub struct WallClock(pub Instant);

impl Clock for WallClock {
    fn now_ms(&mut self) -> f64 {
        self.0.elapsed().as_secs_f64() * 1e3
    }
}

pub fn simulate(map: &MapModel, scenario: &Scenario, mode: RunMode) -> RunOutput {
    let config = SimConfig::default().with_mode(mode);
    run_scenario(map, &catalog(), scenario, config, &mut WallClock(Instant::now()), &mut |_, _| {})
        .expect("simulation runs")
}

pub fn ids(modules: &[&str]) -> Vec<String> {
    let mut v: Vec<String> = modules.iter().map(|s| s.to_string()).collect();
    v.sort();
    v
}

pub fn awarekit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_awarekit"))
        .args(args)
        .env("AWAREKIT_LOG", "error")
        .output()
        .expect("binary starts")
}

pub fn path_str(p: &std::path::Path) -> &str {
    p.to_str().expect("utf-8 path")
}
