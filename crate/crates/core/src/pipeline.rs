//! Awareness-processing cycle loop over a scenario, with mock perception
//! modules and cost accounting against the always-on baseline.
//!
//! Stage order per cycle: detect situation, build the attention map, refresh
//! the configuration forest, select the configuration, run the selected
//! modules with the attention map as a binary data gate.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::attention::polar::segment_of;
use crate::attention::{build_mlam, to_polar, AttentionGrid, AttentionParams, GridError, PolarRequirementMap};
use crate::geometry::{Point2, Rotation};
use crate::optimizer::{
    aggregate_cost, is_relation_valid, AggregationMode, ConfigForest, Configuration, RuleSet,
};
use crate::registry::{
    ModuleDescriptor, ModuleId, Registry, RegistryError, OBJECT_DETECTION, PLAUSIBILIZATION,
    TRACKING, LIDAR_OD, RADAR_OD, TRACKING_B,
};
use crate::situation::{detect_situation, ActivationTable, Situation};
use crate::world::{EgoState, Frame, MapModel, ObjectCategory, Scenario, ZoneTag};

/// Detections closer than this are treated as one object by the tracker.
pub const DUPLICATE_RADIUS_M: f64 = 1.0;
/// Association gate between a prior track and a new detection.
pub const DEFAULT_TRACK_GATE_M: f64 = 3.0;
/// Lateral window in which the longitudinal tracker looks for its lead object.
pub const LEAD_HALF_WIDTH_M: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    Aware,
    Naive,
}

impl RunMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RunMode::Aware => "aware",
            RunMode::Naive => "naive",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub mode: RunMode,
    pub aggregation: AggregationMode,
    pub seed: u64,
    pub attention: AttentionParams,
    pub activation: ActivationTable,
    pub rules: RuleSet,
    /// Detector whose previous-cycle output feeds the object layer, first active wins.
    pub object_layer_preference: Vec<ModuleId>,
    /// Tracking modules that keep only the lead object's longitudinal distance.
    pub longitudinal_trackers: BTreeSet<ModuleId>,
    pub track_gate_m: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            mode: RunMode::Aware,
            aggregation: AggregationMode::SourceCapped,
            seed: 0,
            attention: AttentionParams::default(),
            activation: ActivationTable::default(),
            rules: RuleSet::default(),
            object_layer_preference: alloc::vec![LIDAR_OD.into(), RADAR_OD.into()],
            longitudinal_trackers: BTreeSet::from([ModuleId::from(TRACKING_B)]),
            track_gate_m: DEFAULT_TRACK_GATE_M,
        }
    }
}

impl SimConfig {
    pub fn with_mode(mut self, mode: RunMode) -> Self {
        self.mode = mode;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Milliseconds from an arbitrary epoch; lets callers measure overhead without
/// the core depending on a platform clock.
pub trait Clock {
    fn now_ms(&mut self) -> f64;
}

/// Reports zero elapsed time.
#[derive(Debug, Clone, Copy, Default)]
pub struct NullClock;

impl Clock for NullClock {
    fn now_ms(&mut self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MockDetection {
    pub object_id: alloc::string::String,
    pub position: Point2,
    pub category: ObjectCategory,
    pub source: ModuleId,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DetectionOutcome {
    pub detections: Vec<MockDetection>,
    /// Objects the sensor produced before the attention gate.
    pub emitted: usize,
    /// Of those, dropped by the gate.
    pub filtered: usize,
}

/// Mock object detector: one detection per ground-truth object inside the
/// field of view. VRUs are lost with probability `1 - p` where `p < 1` is the
/// module's performance in the current location. With a gate, only objects on
/// relevant cells survive.
pub fn mock_detect(
    module: &ModuleDescriptor,
    frame: &Frame,
    gate: Option<&AttentionGrid>,
    situation: &Situation,
    rng: &mut impl Rng,
) -> DetectionOutcome {
    let mut out = DetectionOutcome::default();
    let mut objects: Vec<_> = frame.objects.iter().collect();
    objects.sort_by(|a, b| a.id.cmp(&b.id));
    let vru_miss = 1.0 - module.performance_for(situation).clamp(0.0, 1.0);
    for obj in objects {
        let rel = obj.position - frame.ego.position;
        if rel.norm() > module.coverage.range_m || !module.coverage.covers_segment(segment_of(rel.x, rel.y)) {
            continue;
        }
        if obj.category == ObjectCategory::Vru && vru_miss > 0.0 && rng.gen_bool(vru_miss) {
            continue;
        }
        out.emitted += 1;
        if let Some(g) = gate {
            if !g.is_relevant_at(obj.position) {
                out.filtered += 1;
                continue;
            }
        }
        out.detections.push(MockDetection {
            object_id: obj.id.clone(),
            position: obj.position,
            category: obj.category,
            source: module.id.clone(),
        });
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackerKind {
    /// Nearest-neighbour association of every detection.
    MultiObject,
    /// Single lead object, longitudinal distance only.
    Longitudinal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub id: u64,
    pub position: Point2,
    /// Distance ahead of the ego along its heading.
    pub longitudinal_m: f64,
}

/// Mock tracker. Prior tracks keep their id when a detection falls within `gate_m`;
/// tracks without a detection end.
pub fn mock_track(
    kind: TrackerKind,
    ego: &EgoState,
    detections: &[MockDetection],
    prior: &[Track],
    next_id: &mut u64,
    gate_m: f64,
) -> Vec<Track> {
    let to_ego = Rotation::new(-ego.heading);
    let local = |p: Point2| to_ego.apply(p - ego.position);

    let mut points: Vec<Point2> = Vec::new();
    for d in detections {
        if !points.iter().any(|p| p.distance(d.position) <= DUPLICATE_RADIUS_M) {
            points.push(d.position);
        }
    }
    if kind == TrackerKind::Longitudinal {
        let lead = points
            .iter()
            .map(|p| (*p, local(*p)))
            .filter(|(_, l)| l.x > 0.0 && l.y.abs() <= LEAD_HALF_WIDTH_M)
            .min_by(|a, b| a.1.x.total_cmp(&b.1.x));
        points = lead.map(|(p, _)| alloc::vec![p]).unwrap_or_default();
    }

    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (ti, t) in prior.iter().enumerate() {
        for (di, p) in points.iter().enumerate() {
            let d = t.position.distance(*p);
            if d <= gate_m {
                pairs.push((d, ti, di));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut track_used = alloc::vec![false; prior.len()];
    let mut assigned: Vec<Option<u64>> = alloc::vec![None; points.len()];
    for (_, ti, di) in pairs {
        if !track_used[ti] && assigned[di].is_none() {
            track_used[ti] = true;
            assigned[di] = Some(prior[ti].id);
        }
    }
    points
        .iter()
        .zip(assigned)
        .map(|(p, id)| {
            let id = id.unwrap_or_else(|| {
                let id = *next_id;
                *next_id += 1;
                id
            });
            Track {
                id,
                position: *p,
                longitudinal_m: local(*p).x,
            }
        })
        .collect()
}

/// Cost charged for one cycle of an active module.
pub fn account_cost(module: &ModuleDescriptor, processed_items: usize) -> f64 {
    module.cost_for(processed_items)
}

/// Every module always on, one variant per category: the variant with the
/// highest summed performance over all locations, lower id on ties.
pub fn naive_configuration(registry: &Registry) -> Configuration {
    let mut chosen: Vec<&ModuleDescriptor> = Vec::new();
    for m in registry.modules() {
        if m.variant.is_none() {
            chosen.push(m);
            continue;
        }
        let total = |d: &ModuleDescriptor| -> f64 { ZoneTag::ALL.iter().map(|z| d.performance.get(*z)).sum() };
        let best = registry
            .modules()
            .filter(|o| o.id == m.id || m.is_alternative_to(o))
            .max_by(|a, b| total(a).total_cmp(&total(b)).then_with(|| b.id.cmp(&a.id)))
            .expect("contains m");
        if best.id == m.id {
            chosen.push(m);
        }
    }
    // drop members whose inputs are missing until the set is consistent
    while !chosen.is_empty() && !is_relation_valid(&chosen) {
        let before = chosen.len();
        let snapshot = chosen.clone();
        chosen.retain(|m| m.is_source() || m.requirements_met(snapshot.iter().copied()));
        if chosen.len() == before {
            break;
        }
    }
    Configuration {
        modules: chosen.iter().map(|m| m.id.clone()).collect(),
        cost: aggregate_cost(&chosen, 0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CycleCounts {
    pub emitted: usize,
    pub filtered: usize,
    pub tracked: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleResult {
    pub cycle: usize,
    pub timestamp: f64,
    pub situation: Situation,
    /// Active modules, sorted by id.
    pub modules: Vec<ModuleId>,
    /// Charged cost of each active module.
    pub module_cost: BTreeMap<ModuleId, f64>,
    pub total_cost: f64,
    pub processed: BTreeMap<ModuleId, usize>,
    pub counts: CycleCounts,
    /// Highest per-cell requirement; `None` in naive mode.
    pub max_requirement: Option<f64>,
    pub relevant_cells: usize,
    /// Optimizer found no feasible configuration this cycle.
    pub degraded: bool,
    /// Measured awareness-processing time.
    pub overhead_ms: f64,
    /// Polar requirement used for selection; `None` in naive mode.
    pub requirement: Option<PolarRequirementMap>,
}

impl CycleResult {
    pub fn is_active(&self, id: &str) -> bool {
        self.modules.iter().any(|m| m.as_str() == id)
    }
}

/// Holds the per-run state carried between cycles.
pub struct Simulator<'a> {
    map: &'a MapModel,
    registry: &'a Registry,
    config: SimConfig,
    forest: ConfigForest,
    naive: Configuration,
    previous: Option<Configuration>,
    previous_detections: BTreeMap<ModuleId, Vec<MockDetection>>,
    tracks: Vec<Track>,
    next_track_id: u64,
    cycle: usize,
    last_mlam: Option<AttentionGrid>,
}

impl<'a> Simulator<'a> {
    pub fn new(map: &'a MapModel, registry: &'a Registry, config: SimConfig) -> Result<Self, SimError> {
        registry.validate_relations()?;
        let k = config.attention.dilation_kernel;
        if k == 0 || k.is_multiple_of(2) {
            return Err(GridError::BadKernel(k).into());
        }
        Ok(Self {
            map,
            registry,
            forest: ConfigForest::build(registry, config.aggregation),
            naive: naive_configuration(registry),
            config,
            previous: None,
            previous_detections: BTreeMap::new(),
            tracks: Vec::new(),
            next_track_id: 0,
            cycle: 0,
            last_mlam: None,
        })
    }

    pub fn forest(&self) -> &ConfigForest {
        &self.forest
    }

    /// Attention map of the last aware cycle.
    pub fn last_mlam(&self) -> Option<&AttentionGrid> {
        self.last_mlam.as_ref()
    }

    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    /// Previous-cycle detections of the preferred active detector.
    fn object_layer_input(&self) -> Vec<Point2> {
        let preferred = self
            .config
            .object_layer_preference
            .iter()
            .find(|id| self.previous_detections.contains_key(*id))
            .or_else(|| self.previous_detections.keys().next());
        preferred
            .and_then(|id| self.previous_detections.get(id))
            .map(|d| d.iter().map(|d| d.position).collect())
            .unwrap_or_default()
    }

    fn rng_for(&self, module_index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed ^ (self.cycle as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        rng.set_stream(module_index as u64);
        rng
    }

    pub fn run_cycle(&mut self, frame: &Frame, clock: &mut dyn Clock) -> CycleResult {
        let started = clock.now_ms();
        let situation = detect_situation(self.map, frame);
        let mut degraded = false;
        let mut requirement = None;
        let mut max_requirement = None;
        let relevant_cells;
        let configuration = match self.config.mode {
            RunMode::Naive => {
                self.last_mlam = None;
                relevant_cells = self.config.attention.grid.cell_count();
                self.naive.clone()
            }
            RunMode::Aware => {
                let activation = self.config.activation.active_layers(&situation);
                let objects = self.object_layer_input();
                let mlam = build_mlam(self.map, &frame.ego, activation, &objects, &self.config.attention)
                    .expect("attention parameters validated at construction");
                let polar = to_polar(&mlam);
                relevant_cells = mlam.relevant_cells().len();
                max_requirement = Some(mlam.max_value());
                self.forest.update_for_situation(self.registry, &situation, relevant_cells);
                let constraints = self.config.rules.constraints_for(&situation);
                self.forest.apply_constraints(self.registry, &constraints);
                let selected = match self.forest.select_optimal(&polar) {
                    Ok(c) => c,
                    Err(_) => {
                        degraded = true;
                        self.previous.clone().unwrap_or_else(|| self.naive.clone())
                    }
                };
                requirement = Some(polar);
                self.last_mlam = Some(mlam);
                selected
            }
        };
        let overhead_ms = match self.config.mode {
            RunMode::Aware => (clock.now_ms() - started).max(0.0),
            RunMode::Naive => 0.0,
        };

        let (module_cost, processed, counts) = self.execute(frame, &situation, &configuration);
        let total_cost = module_cost.values().fold(0.0, |acc, c| acc + c);
        let result = CycleResult {
            cycle: self.cycle,
            timestamp: frame.timestamp,
            situation,
            modules: configuration.modules.clone(),
            module_cost,
            total_cost,
            processed,
            counts,
            max_requirement,
            relevant_cells,
            degraded,
            overhead_ms,
            requirement,
        };
        self.previous = Some(configuration);
        self.cycle += 1;
        result
    }

    fn execute(
        &mut self,
        frame: &Frame,
        situation: &Situation,
        configuration: &Configuration,
    ) -> (BTreeMap<ModuleId, f64>, BTreeMap<ModuleId, usize>, CycleCounts) {
        let gate = match self.config.mode {
            RunMode::Aware => self.last_mlam.clone(),
            RunMode::Naive => None,
        };
        let active: Vec<&ModuleDescriptor> = configuration
            .modules
            .iter()
            .filter_map(|id| self.registry.get(id))
            .collect();
        let mut processed: BTreeMap<ModuleId, usize> = BTreeMap::new();
        let mut counts = CycleCounts::default();

        let mut detections: BTreeMap<ModuleId, Vec<MockDetection>> = BTreeMap::new();
        for m in active.iter().filter(|m| m.category == OBJECT_DETECTION) {
            let index = self.registry.modules().position(|d| d.id == m.id).unwrap_or(0);
            let mut rng = self.rng_for(index);
            let outcome = mock_detect(m, frame, gate.as_ref(), situation, &mut rng);
            counts.emitted += outcome.emitted;
            counts.filtered += outcome.filtered;
            processed.insert(m.id.clone(), outcome.emitted - outcome.filtered);
            detections.insert(m.id.clone(), outcome.detections);
        }
        let all_detections: Vec<MockDetection> = detections.values().flatten().cloned().collect();

        let tracker = active.iter().find(|m| m.category == TRACKING);
        match tracker {
            Some(t) => {
                let kind = if self.config.longitudinal_trackers.contains(&t.id) {
                    TrackerKind::Longitudinal
                } else {
                    TrackerKind::MultiObject
                };
                let tracks = mock_track(
                    kind,
                    &frame.ego,
                    &all_detections,
                    &self.tracks,
                    &mut self.next_track_id,
                    self.config.track_gate_m,
                );
                processed.insert(t.id.clone(), all_detections.len());
                self.tracks = tracks;
            }
            None => self.tracks.clear(),
        }
        counts.tracked = self.tracks.len();

        for m in active.iter().filter(|m| m.category == PLAUSIBILIZATION) {
            let n = self
                .tracks
                .iter()
                .filter(|t| gate.as_ref().is_none_or(|g| g.is_relevant_at(t.position)))
                .count();
            processed.insert(m.id.clone(), n);
        }

        let mut cost = BTreeMap::new();
        for m in &active {
            let n = processed.get(&m.id).copied().unwrap_or(0);
            processed.entry(m.id.clone()).or_insert(0);
            cost.insert(m.id.clone(), account_cost(m, n));
        }
        self.previous_detections = detections;
        (cost, processed, counts)
    }
}

/// Aggregates of one run, computed from its cycle results only.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub mode: RunMode,
    pub frames: usize,
    /// Fraction of cycles each catalog module was active.
    pub uptime: BTreeMap<ModuleId, f64>,
    pub avg_active_modules: BTreeMap<ZoneTag, f64>,
    pub accumulated_cost: f64,
    pub module_cost: BTreeMap<ModuleId, f64>,
    pub overhead_ms_total: f64,
    pub overhead_ms_max: f64,
    pub degraded_cycles: usize,
}

impl RunMetrics {
    pub fn from_cycles(mode: RunMode, catalog: &[ModuleId], cycles: &[CycleResult]) -> Self {
        let frames = cycles.len();
        let mut uptime = BTreeMap::new();
        let mut module_cost = BTreeMap::new();
        for id in catalog {
            let active = cycles.iter().filter(|c| c.modules.contains(id)).count();
            uptime.insert(
                id.clone(),
                if frames == 0 { 0.0 } else { active as f64 / frames as f64 },
            );
            let cost = cycles
                .iter()
                .filter_map(|c| c.module_cost.get(id))
                .fold(0.0, |acc, c| acc + c);
            module_cost.insert(id.clone(), cost);
        }
        let mut per_zone: BTreeMap<ZoneTag, (usize, usize)> = BTreeMap::new();
        for c in cycles {
            let e = per_zone.entry(c.situation.location).or_default();
            e.0 += c.modules.len();
            e.1 += 1;
        }
        let avg_active_modules = per_zone
            .into_iter()
            .map(|(z, (m, n))| (z, m as f64 / n as f64))
            .collect();
        Self {
            mode,
            frames,
            uptime,
            avg_active_modules,
            accumulated_cost: cycles.iter().fold(0.0, |acc, c| acc + c.total_cost),
            module_cost,
            overhead_ms_total: cycles.iter().fold(0.0, |acc, c| acc + c.overhead_ms),
            overhead_ms_max: cycles.iter().map(|c| c.overhead_ms).fold(0.0, f64::max),
            degraded_cycles: cycles.iter().filter(|c| c.degraded).count(),
        }
    }

    pub fn overhead_ms_mean(&self) -> f64 {
        if self.frames == 0 {
            0.0
        } else {
            self.overhead_ms_total / self.frames as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub cycles: Vec<CycleResult>,
    pub metrics: RunMetrics,
}

/// Runs every frame of the scenario through a fresh simulator. `observer` sees
/// each cycle together with its attention map (aware mode).
pub fn run_scenario(
    map: &MapModel,
    registry: &Registry,
    scenario: &Scenario,
    config: SimConfig,
    clock: &mut dyn Clock,
    observer: &mut dyn FnMut(&CycleResult, Option<&AttentionGrid>),
) -> Result<RunOutput, SimError> {
    let mode = config.mode;
    let mut sim = Simulator::new(map, registry, config)?;
    let mut cycles = Vec::with_capacity(scenario.frames().len());
    for frame in scenario.frames() {
        let result = sim.run_cycle(frame, clock);
        observer(&result, sim.last_mlam());
        cycles.push(result);
    }
    let metrics = RunMetrics::from_cycles(mode, &registry.ids(), &cycles);
    Ok(RunOutput { cycles, metrics })
}
