//! Catalog of perception module descriptors.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::attention::SEGMENTS;
use crate::situation::Situation;
use crate::world::{SubSituation, ZoneTag};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModuleId(pub String);

impl ModuleId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ModuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ModuleId {
    fn from(s: &str) -> Self {
        ModuleId(s.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModuleType {
    Source,
    NonSource,
}

/// Polar field of view. Segment `k` (bearing `[k, k+1)` degrees) is covered
/// when it lies entirely inside the arc starting at `angle_start_deg`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coverage {
    pub angle_start_deg: f64,
    pub angle_span_deg: f64,
    /// `f64::INFINITY` for unbounded range.
    pub range_m: f64,
}

impl Default for Coverage {
    fn default() -> Self {
        Self::full()
    }
}

impl Coverage {
    pub const fn full() -> Self {
        Self {
            angle_start_deg: 0.0,
            angle_span_deg: 360.0,
            range_m: f64::INFINITY,
        }
    }

    pub fn is_full_circle(&self) -> bool {
        self.angle_span_deg >= 360.0
    }

    pub fn covers_segment(&self, segment: usize) -> bool {
        if self.is_full_circle() {
            return true;
        }
        let offset = libm::fmod(segment as f64 - self.angle_start_deg, 360.0);
        let offset = if offset < 0.0 { offset + 360.0 } else { offset };
        offset + 1.0 <= self.angle_span_deg + 1e-9
    }

    /// Range reached in each segment; `None` where the segment is outside the arc.
    pub fn segment_ranges(&self) -> Vec<Option<f64>> {
        (0..SEGMENTS)
            .map(|s| self.covers_segment(s).then_some(self.range_m))
            .collect()
    }
}

/// Provided performance per location; uniform across the covered regions.
#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceTable(pub BTreeMap<ZoneTag, f64>);

impl PerformanceTable {
    pub fn new(highway: f64, rural: f64, urban: f64) -> Self {
        Self(BTreeMap::from([
            (ZoneTag::Highway, highway),
            (ZoneTag::Rural, rural),
            (ZoneTag::Urban, urban),
        ]))
    }

    pub fn get(&self, location: ZoneTag) -> f64 {
        self.0.get(&location).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostForm {
    Constant,
    PerItem,
}

impl CostForm {
    pub fn as_str(self) -> &'static str {
        match self {
            CostForm::Constant => "constant",
            CostForm::PerItem => "per_item",
        }
    }
}

/// Affine cost in abstract units: `base + per_item * count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostModel {
    pub form: CostForm,
    pub base: f64,
    pub per_item: f64,
}

impl CostModel {
    pub const fn constant(base: f64) -> Self {
        Self {
            form: CostForm::Constant,
            base,
            per_item: 0.0,
        }
    }

    pub const fn per_item(base: f64, per_item: f64) -> Self {
        Self {
            form: CostForm::PerItem,
            base,
            per_item,
        }
    }

    pub fn evaluate(&self, count: usize) -> f64 {
        match self.form {
            CostForm::Constant => self.base,
            CostForm::PerItem => self.base + self.per_item * count as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct CategoryRequirement {
    pub category: String,
    pub min_count: usize,
}

/// Gate on the current situation; `None` fields match anything.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct SituationGate {
    pub location: Option<ZoneTag>,
    pub sub: Option<SubSituation>,
}

impl SituationGate {
    pub fn sub(sub: SubSituation) -> Self {
        Self {
            location: None,
            sub: Some(sub),
        }
    }

    pub fn matches(&self, situation: &Situation) -> bool {
        self.location.is_none_or(|l| l == situation.location)
            && self.sub.is_none_or(|s| situation.has(s))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RelationSet {
    /// Other configured modules this one consumes, by category.
    pub requires_category: Vec<CategoryRequirement>,
    /// If set, the module is only usable while one of the gates matches.
    pub valid_only_in: Option<Vec<SituationGate>>,
    pub notes: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModuleDescriptor {
    pub id: ModuleId,
    pub category: String,
    /// Alternative implementations of one category carry distinct variant
    /// labels and are mutually exclusive within a configuration.
    pub variant: Option<String>,
    pub module_type: ModuleType,
    pub coverage: Coverage,
    pub performance: PerformanceTable,
    pub cost: CostModel,
    pub relations: RelationSet,
}

impl ModuleDescriptor {
    pub fn is_source(&self) -> bool {
        self.module_type == ModuleType::Source
    }

    pub fn performance_for(&self, situation: &Situation) -> f64 {
        self.performance.get(situation.location)
    }

    pub fn cost_for(&self, relevant_region_count: usize) -> f64 {
        self.cost.evaluate(relevant_region_count)
    }

    /// Situation gates from the relation set.
    pub fn is_valid_in(&self, situation: &Situation) -> bool {
        self.relations
            .valid_only_in
            .as_ref()
            .is_none_or(|gates| gates.iter().any(|g| g.matches(situation)))
    }

    /// True when both are labelled variants of the same category.
    pub fn is_alternative_to(&self, other: &ModuleDescriptor) -> bool {
        self.id != other.id
            && self.category == other.category
            && self.variant.is_some()
            && other.variant.is_some()
    }

    /// Whether `members` (excluding `self`) satisfy every category requirement.
    pub fn requirements_met<'a, I>(&self, members: I) -> bool
    where
        I: IntoIterator<Item = &'a ModuleDescriptor> + Clone,
    {
        self.relations.requires_category.iter().all(|req| {
            members
                .clone()
                .into_iter()
                .filter(|m| m.id != self.id && m.category == req.category)
                .count()
                >= req.min_count
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegistryError {
    #[error("module id `{0}` is already registered")]
    DuplicateId(ModuleId),
    #[error("source module `{0}` must not require other modules")]
    SourceWithRequirement(ModuleId),
    #[error("module `{module}` has invalid performance for {location}")]
    InvalidPerformance { module: ModuleId, location: ZoneTag },
    #[error("module `{0}` has an invalid cost model")]
    InvalidCost(ModuleId),
    #[error("module `{0}` has an invalid coverage")]
    InvalidCoverage(ModuleId),
    #[error("module `{module}` requires unknown category `{category}`")]
    UnresolvableCategory { module: ModuleId, category: String },
    #[error("registry has no source module")]
    NoSource,
}

/// Module catalog keyed and iterated by id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Registry {
    modules: BTreeMap<ModuleId, ModuleDescriptor>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register_module(&mut self, descriptor: ModuleDescriptor) -> Result<(), RegistryError> {
        let id = descriptor.id.clone();
        if self.modules.contains_key(&id) {
            return Err(RegistryError::DuplicateId(id));
        }
        if descriptor.is_source() && !descriptor.relations.requires_category.is_empty() {
            return Err(RegistryError::SourceWithRequirement(id));
        }
        for location in ZoneTag::ALL {
            let p = descriptor.performance.0.get(&location).copied();
            if !p.is_some_and(|p| p >= 0.0 && p.is_finite()) {
                return Err(RegistryError::InvalidPerformance {
                    module: id,
                    location,
                });
            }
        }
        let c = &descriptor.cost;
        let cost_ok = c.base >= 0.0
            && c.base.is_finite()
            && c.per_item >= 0.0
            && c.per_item.is_finite()
            && (c.form == CostForm::PerItem || c.per_item == 0.0);
        if !cost_ok {
            return Err(RegistryError::InvalidCost(id));
        }
        let cov = &descriptor.coverage;
        if !(cov.angle_span_deg > 0.0 && cov.angle_start_deg.is_finite() && cov.range_m > 0.0) {
            return Err(RegistryError::InvalidCoverage(id));
        }
        self.modules.insert(id, descriptor);
        Ok(())
    }

    pub fn validate_relations(&self) -> Result<(), RegistryError> {
        if !self.modules.values().any(|m| m.is_source()) {
            return Err(RegistryError::NoSource);
        }
        for m in self.modules.values() {
            for req in &m.relations.requires_category {
                let known = self
                    .modules
                    .values()
                    .any(|o| o.id != m.id && o.category == req.category);
                if !known {
                    return Err(RegistryError::UnresolvableCategory {
                        module: m.id.clone(),
                        category: req.category.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn get(&self, id: &ModuleId) -> Option<&ModuleDescriptor> {
        self.modules.get(id)
    }

    /// Descriptors in id order.
    pub fn modules(&self) -> impl Iterator<Item = &ModuleDescriptor> + Clone {
        self.modules.values()
    }

    pub fn ids(&self) -> Vec<ModuleId> {
        self.modules.keys().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.modules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modules.is_empty()
    }

    pub fn sources(&self) -> impl Iterator<Item = &ModuleDescriptor> {
        self.modules.values().filter(|m| m.is_source())
    }

    pub fn non_sources(&self) -> impl Iterator<Item = &ModuleDescriptor> {
        self.modules.values().filter(|m| !m.is_source())
    }

    /// The reference vehicle catalog: two object detectors, two tracking
    /// variants, and an object plausibilization stage.
    pub fn reference() -> Self {
        let mut r = Registry::new();
        let requires = |category: &str| {
            vec![CategoryRequirement {
                category: category.to_string(),
                min_count: 1,
            }]
        };
        let entries = [
            ModuleDescriptor {
                id: LIDAR_OD.into(),
                category: OBJECT_DETECTION.into(),
                variant: None,
                module_type: ModuleType::Source,
                coverage: Coverage::full(),
                performance: PerformanceTable::new(1.0, 1.0, 1.0),
                cost: CostModel::constant(1.0),
                relations: RelationSet::default(),
            },
            ModuleDescriptor {
                id: RADAR_OD.into(),
                category: OBJECT_DETECTION.into(),
                variant: None,
                module_type: ModuleType::Source,
                coverage: Coverage::full(),
                performance: PerformanceTable::new(1.0, 1.0, 0.5),
                cost: CostModel::constant(0.33),
                relations: RelationSet {
                    notes: "low VRU performance".into(),
                    ..RelationSet::default()
                },
            },
            ModuleDescriptor {
                id: TRACKING_A.into(),
                category: TRACKING.into(),
                variant: Some("A".into()),
                module_type: ModuleType::NonSource,
                coverage: Coverage::full(),
                performance: PerformanceTable::new(1.0, 1.0, 1.0),
                cost: CostModel::constant(0.1),
                relations: RelationSet {
                    requires_category: requires(OBJECT_DETECTION),
                    valid_only_in: None,
                    notes: "requires one OD module".into(),
                },
            },
            ModuleDescriptor {
                id: TRACKING_B.into(),
                category: TRACKING.into(),
                variant: Some("B".into()),
                module_type: ModuleType::NonSource,
                coverage: Coverage::full(),
                performance: PerformanceTable::new(1.0, 0.1, 0.1),
                cost: CostModel::constant(0.05),
                relations: RelationSet {
                    requires_category: requires(OBJECT_DETECTION),
                    valid_only_in: Some(vec![SituationGate::sub(SubSituation::FollowDrive)]),
                    notes: "requires one OD module, longitudinal distance only, follow drive only"
                        .into(),
                },
            },
            ModuleDescriptor {
                id: PLAUSIB.into(),
                category: PLAUSIBILIZATION.into(),
                variant: None,
                module_type: ModuleType::NonSource,
                coverage: Coverage::full(),
                performance: PerformanceTable::new(1.0, 1.0, 1.0),
                cost: CostModel::constant(0.05),
                relations: RelationSet {
                    requires_category: requires(TRACKING),
                    valid_only_in: None,
                    notes: "requires TRACKING".into(),
                },
            },
        ];
        for m in entries {
            r.register_module(m).expect("reference catalog is consistent");
        }
        r
    }
}

pub const OBJECT_DETECTION: &str = "object_detection";
pub const TRACKING: &str = "tracking";
pub const PLAUSIBILIZATION: &str = "plausibilization";

pub const LIDAR_OD: &str = "LIDAR_OD";
pub const RADAR_OD: &str = "RADAR_OD";
pub const TRACKING_A: &str = "TRACKING_A";
pub const TRACKING_B: &str = "TRACKING_B";
pub const PLAUSIB: &str = "PLAUSIB";
