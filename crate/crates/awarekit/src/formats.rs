//! JSON file formats for maps, scenarios, module catalogs, constraint rules and
//! activation tables. Loaders validate through the core constructors.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use awarekit_core::geometry::Point2;
use awarekit_core::optimizer::{ConstraintError, ConstraintRule, RuleCondition, RuleSet};
use awarekit_core::registry::{
    CategoryRequirement, CostForm, CostModel, Coverage, ModuleDescriptor, ModuleType, PerformanceTable, Registry,
    RegistryError, RelationSet, SituationGate,
};
use awarekit_core::situation::{ActivationTable, LayerActivation};
use awarekit_core::world::{
    EgoState, Frame, GroundTruthObject, LaneId, LaneSegment, MapError, MapModel, ObjectCategory, Scenario,
    ScenarioError, SubSituation, Zone, ZoneTag,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}\n    {snippet}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
        snippet: String,
    },
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Map {
        path: PathBuf,
        #[source]
        source: MapError,
    },
    #[error("{path}: {source}")]
    Scenario {
        path: PathBuf,
        #[source]
        source: ScenarioError,
    },
    #[error("{path}: {source}")]
    Registry {
        path: PathBuf,
        #[source]
        source: RegistryError,
    },
    #[error("{path}: {source}")]
    Rules {
        path: PathBuf,
        #[source]
        source: ConstraintError,
    },
}

fn invalid(path: &Path, message: impl Into<String>) -> LoadError {
    LoadError::Invalid {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Parses `text`, turning serde errors into line/column diagnostics.
pub fn parse_json<T: DeserializeOwned>(path: &Path, text: &str) -> Result<T, LoadError> {
    serde_json::from_str(text).map_err(|e| {
        let snippet = text
            .lines()
            .nth(e.line().saturating_sub(1))
            .unwrap_or("")
            .trim()
            .chars()
            .take(120)
            .collect();
        LoadError::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
            snippet,
        }
    })
}

fn read(path: &Path) -> Result<String, LoadError> {
    fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn pt([x, y]: [f64; 2]) -> Point2 {
    Point2::new(x, y)
}

fn arr(p: Point2) -> [f64; 2] {
    [p.x, p.y]
}

// ---- map ----

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapDoc {
    pub lanes: Vec<LaneDoc>,
    pub zones: Vec<ZoneDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaneDoc {
    pub id: String,
    pub centerline: Vec<[f64; 2]>,
    #[serde(default)]
    pub successors: Vec<String>,
    #[serde(default)]
    pub adjacent: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZoneDoc {
    pub tag: String,
    pub polygon: Vec<[f64; 2]>,
}

impl MapDoc {
    pub fn from_model(map: &MapModel) -> Self {
        MapDoc {
            lanes: map
                .lanes()
                .iter()
                .map(|l| LaneDoc {
                    id: l.id.0.clone(),
                    centerline: l.centerline.iter().copied().map(arr).collect(),
                    successors: l.successors.iter().map(|s| s.0.clone()).collect(),
                    adjacent: l.adjacent.iter().map(|s| s.0.clone()).collect(),
                })
                .collect(),
            zones: map
                .zones()
                .iter()
                .map(|z| ZoneDoc {
                    tag: z.tag.as_str().into(),
                    polygon: z.polygon.iter().copied().map(arr).collect(),
                })
                .collect(),
        }
    }

    pub fn into_model(self, path: &Path) -> Result<MapModel, LoadError> {
        let lanes = self
            .lanes
            .into_iter()
            .map(|l| LaneSegment {
                id: LaneId(l.id),
                centerline: l.centerline.into_iter().map(pt).collect(),
                successors: l.successors.into_iter().map(LaneId).collect(),
                adjacent: l.adjacent.into_iter().map(LaneId).collect(),
            })
            .collect();
        let zones = self
            .zones
            .into_iter()
            .map(|z| {
                let tag = z.tag.parse::<ZoneTag>().map_err(|e| invalid(path, e.to_string()))?;
                Ok(Zone {
                    tag,
                    polygon: z.polygon.into_iter().map(pt).collect(),
                })
            })
            .collect::<Result<_, LoadError>>()?;
        MapModel::new(lanes, zones).map_err(|source| LoadError::Map {
            path: path.to_path_buf(),
            source,
        })
    }
}

pub fn parse_map(path: &Path, text: &str) -> Result<MapModel, LoadError> {
    parse_json::<MapDoc>(path, text)?.into_model(path)
}

pub fn load_map(path: &Path) -> Result<MapModel, LoadError> {
    parse_map(path, &read(path)?)
}

pub fn map_to_json(map: &MapModel) -> String {
    serde_json::to_string_pretty(&MapDoc::from_model(map)).expect("map serializes")
}

// ---- scenario ----

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<String>,
    pub cycle_period: f64,
    pub frames: Vec<FrameDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameDoc {
    pub t: f64,
    pub ego: EgoDoc,
    #[serde(default)]
    pub objects: Vec<ObjectDoc>,
    #[serde(default)]
    pub annotations: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EgoDoc {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
    #[serde(default)]
    pub yaw_rate: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectDoc {
    pub id: String,
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub vx: f64,
    #[serde(default)]
    pub vy: f64,
    #[serde(default = "default_category")]
    pub category: String,
}

fn default_category() -> String {
    ObjectCategory::Vehicle.as_str().into()
}

impl ScenarioDoc {
    pub fn into_scenario(self, path: &Path) -> Result<Scenario, LoadError> {
        let mut frames = Vec::with_capacity(self.frames.len());
        for (i, f) in self.frames.into_iter().enumerate() {
            let mut annotations = BTreeSet::new();
            for a in &f.annotations {
                let tag = a
                    .parse::<SubSituation>()
                    .map_err(|e| invalid(path, format!("frame {i}: {e}")))?;
                annotations.insert(tag);
            }
            let objects = f
                .objects
                .into_iter()
                .map(|o| {
                    let category = o
                        .category
                        .parse::<ObjectCategory>()
                        .map_err(|c| invalid(path, format!("frame {i}: unknown object category `{c}`")))?;
                    Ok(GroundTruthObject {
                        id: o.id,
                        position: Point2::new(o.x, o.y),
                        velocity: Point2::new(o.vx, o.vy),
                        category,
                    })
                })
                .collect::<Result<_, LoadError>>()?;
            frames.push(Frame {
                timestamp: f.t,
                ego: EgoState {
                    position: Point2::new(f.ego.x, f.ego.y),
                    heading: f.ego.heading,
                    speed: f.ego.speed,
                    yaw_rate: f.ego.yaw_rate,
                    timestamp: f.t,
                },
                objects,
                annotations,
            });
        }
        Scenario::new(self.map.unwrap_or_default(), self.cycle_period, frames).map_err(|source| {
            LoadError::Scenario {
                path: path.to_path_buf(),
                source,
            }
        })
    }
}

pub fn parse_scenario(path: &Path, text: &str) -> Result<Scenario, LoadError> {
    parse_json::<ScenarioDoc>(path, text)?.into_scenario(path)
}

pub fn load_scenario(path: &Path) -> Result<Scenario, LoadError> {
    parse_scenario(path, &read(path)?)
}

// ---- module catalog ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogDoc {
    pub modules: Vec<ModuleDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModuleDoc {
    pub id: String,
    pub category: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    #[serde(rename = "type")]
    pub module_type: String,
    pub cost: CostDoc,
    pub performance: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coverage: Option<CoverageDoc>,
    #[serde(default)]
    pub relations: RelationsDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostDoc {
    pub form: String,
    pub base: f64,
    #[serde(default)]
    pub per_item: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverageDoc {
    #[serde(default)]
    pub angle_start_deg: f64,
    #[serde(default = "full_span")]
    pub angle_span_deg: f64,
    /// Absent means unbounded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range_m: Option<f64>,
}

fn full_span() -> f64 {
    360.0
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationsDoc {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub requires_category: Vec<(String, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valid_only_in: Option<Vec<GateDoc>>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub notes: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sub: Option<String>,
}

fn parse_gate(path: &Path, location: &Option<String>, sub: &Option<String>) -> Result<(Option<ZoneTag>, Option<SubSituation>), LoadError> {
    let location = location
        .as_deref()
        .map(str::parse::<ZoneTag>)
        .transpose()
        .map_err(|e| invalid(path, e.to_string()))?;
    let sub = sub
        .as_deref()
        .map(str::parse::<SubSituation>)
        .transpose()
        .map_err(|e| invalid(path, e.to_string()))?;
    Ok((location, sub))
}

impl ModuleDoc {
    pub fn from_descriptor(m: &ModuleDescriptor) -> Self {
        let full = m.coverage == Coverage::full();
        ModuleDoc {
            id: m.id.0.clone(),
            category: m.category.clone(),
            variant: m.variant.clone(),
            module_type: match m.module_type {
                ModuleType::Source => "source",
                ModuleType::NonSource => "non_source",
            }
            .into(),
            cost: CostDoc {
                form: m.cost.form.as_str().into(),
                base: m.cost.base,
                per_item: m.cost.per_item,
            },
            performance: ZoneTag::ALL
                .iter()
                .map(|z| (z.as_str().to_string(), m.performance.get(*z)))
                .collect(),
            coverage: (!full).then(|| CoverageDoc {
                angle_start_deg: m.coverage.angle_start_deg,
                angle_span_deg: m.coverage.angle_span_deg,
                range_m: m.coverage.range_m.is_finite().then_some(m.coverage.range_m),
            }),
            relations: RelationsDoc {
                requires_category: m
                    .relations
                    .requires_category
                    .iter()
                    .map(|r| (r.category.clone(), r.min_count))
                    .collect(),
                valid_only_in: m.relations.valid_only_in.as_ref().map(|gates| {
                    gates
                        .iter()
                        .map(|g| GateDoc {
                            location: g.location.map(|l| l.as_str().into()),
                            sub: g.sub.map(|s| s.as_str().into()),
                        })
                        .collect()
                }),
                notes: m.relations.notes.clone(),
            },
        }
    }

    pub fn into_descriptor(self, path: &Path) -> Result<ModuleDescriptor, LoadError> {
        let module_type = match self.module_type.as_str() {
            "source" => ModuleType::Source,
            "non_source" => ModuleType::NonSource,
            other => return Err(invalid(path, format!("module `{}`: unknown type `{other}`", self.id))),
        };
        let form = match self.cost.form.as_str() {
            "constant" => CostForm::Constant,
            "per_item" => CostForm::PerItem,
            other => return Err(invalid(path, format!("module `{}`: unknown cost form `{other}`", self.id))),
        };
        let mut performance = BTreeMap::new();
        for (k, v) in &self.performance {
            let z = k.parse::<ZoneTag>().map_err(|e| invalid(path, format!("module `{}`: {e}", self.id)))?;
            performance.insert(z, *v);
        }
        if let Some(z) = ZoneTag::ALL.iter().find(|z| !performance.contains_key(z)) {
            return Err(invalid(path, format!("module `{}`: no performance for `{z}`", self.id)));
        }
        let coverage = match self.coverage {
            None => Coverage::full(),
            Some(c) => Coverage {
                angle_start_deg: c.angle_start_deg,
                angle_span_deg: c.angle_span_deg,
                range_m: c.range_m.unwrap_or(f64::INFINITY),
            },
        };
        let valid_only_in = match self.relations.valid_only_in {
            None => None,
            Some(gates) => Some(
                gates
                    .iter()
                    .map(|g| parse_gate(path, &g.location, &g.sub).map(|(location, sub)| SituationGate { location, sub }))
                    .collect::<Result<Vec<_>, _>>()?,
            ),
        };
        Ok(ModuleDescriptor {
            id: self.id.as_str().into(),
            category: self.category,
            variant: self.variant,
            module_type,
            coverage,
            performance: PerformanceTable(performance),
            cost: CostModel {
                form,
                base: self.cost.base,
                per_item: if form == CostForm::Constant { 0.0 } else { self.cost.per_item },
            },
            relations: RelationSet {
                requires_category: self
                    .relations
                    .requires_category
                    .into_iter()
                    .map(|(category, min_count)| CategoryRequirement { category, min_count })
                    .collect(),
                valid_only_in,
                notes: self.relations.notes,
            },
        })
    }
}

pub fn catalog_to_json(registry: &Registry) -> String {
    let doc = CatalogDoc {
        modules: registry.modules().map(ModuleDoc::from_descriptor).collect(),
    };
    serde_json::to_string_pretty(&doc).expect("catalog serializes")
}

pub fn parse_catalog(path: &Path, text: &str) -> Result<Registry, LoadError> {
    let doc: CatalogDoc = parse_json(path, text)?;
    let mut registry = Registry::new();
    let reg_err = |source| LoadError::Registry {
        path: path.to_path_buf(),
        source,
    };
    for m in doc.modules {
        registry.register_module(m.into_descriptor(path)?).map_err(reg_err)?;
    }
    registry.validate_relations().map_err(reg_err)?;
    Ok(registry)
}

pub fn load_catalog(path: &Path) -> Result<Registry, LoadError> {
    parse_catalog(path, &read(path)?)
}

// ---- constraint rules ----

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RulesDoc {
    pub rules: Vec<RuleDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleDoc {
    #[serde(default)]
    pub when: GateDoc,
    #[serde(default)]
    pub require_category: Option<(String, usize)>,
    #[serde(default)]
    pub require_modules: Vec<String>,
    #[serde(default)]
    pub forbid_modules: Vec<String>,
}

pub fn parse_rules(path: &Path, text: &str) -> Result<RuleSet, LoadError> {
    let doc: RulesDoc = parse_json(path, text)?;
    let mut rules = Vec::with_capacity(doc.rules.len());
    for r in doc.rules {
        let (location, sub) = parse_gate(path, &r.when.location, &r.when.sub)?;
        rules.push(ConstraintRule {
            when: RuleCondition { location, sub },
            require_category: r
                .require_category
                .map(|(category, min_count)| CategoryRequirement { category, min_count }),
            require_modules: r.require_modules.iter().map(|s| s.as_str().into()).collect(),
            forbid_modules: r.forbid_modules.iter().map(|s| s.as_str().into()).collect(),
        });
    }
    RuleSet::new(rules).map_err(|source| LoadError::Rules {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_rules(path: &Path) -> Result<RuleSet, LoadError> {
    parse_rules(path, &read(path)?)
}

// ---- activation table ----

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActivationDoc {
    pub activation: BTreeMap<String, Vec<String>>,
}

pub fn parse_activation(path: &Path, text: &str) -> Result<ActivationTable, LoadError> {
    let doc: ActivationDoc = parse_json(path, text)?;
    let mut table = ActivationTable::empty();
    for (location, layers) in doc.activation {
        let z = location.parse::<ZoneTag>().map_err(|e| invalid(path, e.to_string()))?;
        let mut a = LayerActivation::NONE;
        for layer in &layers {
            match layer.as_str() {
                "lane_own" => a.lane_own = true,
                "lane_other" => a.lane_other = true,
                "ego_path" => a.ego_path = true,
                "object" => a.object = true,
                other => return Err(invalid(path, format!("`{location}`: unknown layer `{other}`"))),
            }
        }
        table.set(z, a);
    }
    Ok(table)
}

pub fn load_activation(path: &Path) -> Result<ActivationTable, LoadError> {
    parse_activation(path, &read(path)?)
}
