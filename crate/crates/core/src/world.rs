//! Road map, scenario recordings, and the spatial queries the attention layers need.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

use crate::geometry::{
    angle_diff, polygon_contains, polygon_is_simple, project_on_polyline, Point2,
};

/// Lanes further than this from the ego position are never its own lane.
pub const OWN_LANE_MAX_DISTANCE_M: f64 = 5.0;
/// Maximum heading deviation between ego and lane tangent for own-lane association.
pub const OWN_LANE_MAX_HEADING_RAD: f64 = core::f64::consts::FRAC_PI_2;
/// Distance ties closer than this are broken by lane id.
const DISTANCE_TIE_EPS: f64 = 1e-9;

/// Geographic location class of a map zone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ZoneTag {
    Highway,
    Rural,
    Urban,
}

impl ZoneTag {
    pub const ALL: [ZoneTag; 3] = [ZoneTag::Highway, ZoneTag::Rural, ZoneTag::Urban];

    /// Tag reported for points outside every zone.
    pub const DEFAULT: ZoneTag = ZoneTag::Rural;

    pub fn as_str(self) -> &'static str {
        match self {
            ZoneTag::Highway => "highway",
            ZoneTag::Rural => "rural",
            ZoneTag::Urban => "urban",
        }
    }
}

impl fmt::Display for ZoneTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown zone tag `{0}`")]
pub struct UnknownZoneTag(pub String);

impl FromStr for ZoneTag {
    type Err = UnknownZoneTag;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "highway" => Ok(ZoneTag::Highway),
            "rural" => Ok(ZoneTag::Rural),
            "urban" => Ok(ZoneTag::Urban),
            other => Err(UnknownZoneTag(other.into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LaneId(pub String);

impl LaneId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for LaneId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for LaneId {
    fn from(s: &str) -> Self {
        LaneId(s.into())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaneSegment {
    pub id: LaneId,
    pub centerline: Vec<Point2>,
    pub successors: Vec<LaneId>,
    /// Neighbouring lanes with the same driving direction.
    pub adjacent: Vec<LaneId>,
}

impl LaneSegment {
    pub fn new(id: &str, centerline: Vec<Point2>) -> Self {
        Self {
            id: LaneId::from(id),
            centerline,
            successors: Vec::new(),
            adjacent: Vec::new(),
        }
    }

    pub fn with_successors(mut self, ids: &[&str]) -> Self {
        self.successors = ids.iter().map(|s| LaneId::from(*s)).collect();
        self
    }

    pub fn with_adjacent(mut self, ids: &[&str]) -> Self {
        self.adjacent = ids.iter().map(|s| LaneId::from(*s)).collect();
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Zone {
    pub tag: ZoneTag,
    pub polygon: Vec<Point2>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MapError {
    #[error("duplicate lane id `{0}`")]
    DuplicateLane(LaneId),
    #[error("lane `{0}` needs at least two distinct consecutive centerline points")]
    DegenerateCenterline(LaneId),
    #[error("lane `{lane}` references unknown lane `{target}`")]
    DanglingReference { lane: LaneId, target: LaneId },
    #[error("zone #{0} polygon is not simple")]
    ZoneNotSimple(usize),
    #[error("lane `{0}` leaves every zone")]
    ZoneGap(LaneId),
    #[error("non-finite coordinate in {0}")]
    NonFinite(String),
}

/// Validated road map. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct MapModel {
    lanes: Vec<LaneSegment>,
    zones: Vec<Zone>,
    index: BTreeMap<LaneId, usize>,
}

impl MapModel {
    pub fn new(lanes: Vec<LaneSegment>, zones: Vec<Zone>) -> Result<Self, MapError> {
        let mut index = BTreeMap::new();
        for (i, lane) in lanes.iter().enumerate() {
            if index.insert(lane.id.clone(), i).is_some() {
                return Err(MapError::DuplicateLane(lane.id.clone()));
            }
            if lane.centerline.iter().any(|p| !p.is_finite()) {
                return Err(MapError::NonFinite(alloc::format!("lane `{}`", lane.id)));
            }
            if lane.centerline.len() < 2 || lane.centerline.windows(2).any(|w| w[0] == w[1]) {
                return Err(MapError::DegenerateCenterline(lane.id.clone()));
            }
        }
        for lane in &lanes {
            for target in lane.successors.iter().chain(&lane.adjacent) {
                if !index.contains_key(target) {
                    return Err(MapError::DanglingReference {
                        lane: lane.id.clone(),
                        target: target.clone(),
                    });
                }
            }
        }
        for (i, zone) in zones.iter().enumerate() {
            if zone.polygon.iter().any(|p| !p.is_finite()) {
                return Err(MapError::NonFinite(alloc::format!("zone #{i}")));
            }
            if !polygon_is_simple(&zone.polygon) {
                return Err(MapError::ZoneNotSimple(i));
            }
        }
        for lane in &lanes {
            let covered = lane
                .centerline
                .iter()
                .all(|p| zones.iter().any(|z| polygon_contains(&z.polygon, *p)));
            if !covered {
                return Err(MapError::ZoneGap(lane.id.clone()));
            }
        }
        Ok(Self {
            lanes,
            zones,
            index,
        })
    }

    /// Lanes in file order.
    pub fn lanes(&self) -> &[LaneSegment] {
        &self.lanes
    }

    pub fn zones(&self) -> &[Zone] {
        &self.zones
    }

    pub fn lane(&self, id: &LaneId) -> Option<&LaneSegment> {
        self.index.get(id).map(|&i| &self.lanes[i])
    }

    /// Tag of the first zone containing `position`, or [`ZoneTag::DEFAULT`].
    pub fn zone_at(&self, position: Point2) -> ZoneTag {
        self.zones
            .iter()
            .find(|z| polygon_contains(&z.polygon, position))
            .map_or(ZoneTag::DEFAULT, |z| z.tag)
    }

    /// The heading-compatible lane nearest to the ego position, if within
    /// [`OWN_LANE_MAX_DISTANCE_M`]. Near-equal distances resolve to the lower id.
    pub fn own_lane_at(&self, ego: &EgoState) -> Option<&LaneSegment> {
        let mut best: Option<(f64, &LaneSegment)> = None;
        for lane in self.lanes_by_id() {
            let Some(pr) = project_on_polyline(ego.position, &lane.centerline) else {
                continue;
            };
            if angle_diff(pr.tangent, ego.heading) >= OWN_LANE_MAX_HEADING_RAD {
                continue;
            }
            match best {
                Some((d, _)) if pr.distance >= d - DISTANCE_TIE_EPS => {}
                _ => best = Some((pr.distance, lane)),
            }
        }
        best.filter(|(d, _)| *d <= OWN_LANE_MAX_DISTANCE_M)
            .map(|(_, lane)| lane)
    }

    /// Lanes whose centerline passes within the closed ball of `radius_m`, in id order.
    pub fn lanes_within_radius(&self, position: Point2, radius_m: f64) -> Vec<&LaneSegment> {
        self.lanes_by_id()
            .filter(|lane| {
                project_on_polyline(position, &lane.centerline)
                    .is_some_and(|pr| pr.distance <= radius_m)
            })
            .collect()
    }

    /// Breadth-first successor closure of `lane` up to `depth` hops, including
    /// `lane` itself, in id order.
    pub fn lane_successors_transitive(&self, lane: &LaneId, depth: usize) -> Vec<&LaneSegment> {
        let mut seen = BTreeSet::new();
        if self.lane(lane).is_none() {
            return Vec::new();
        }
        let mut queue = VecDeque::new();
        seen.insert(lane.clone());
        queue.push_back((lane.clone(), 0usize));
        while let Some((id, d)) = queue.pop_front() {
            if d == depth {
                continue;
            }
            if let Some(seg) = self.lane(&id) {
                for next in &seg.successors {
                    if seen.insert(next.clone()) {
                        queue.push_back((next.clone(), d + 1));
                    }
                }
            }
        }
        seen.iter().filter_map(|id| self.lane(id)).collect()
    }

    fn lanes_by_id(&self) -> impl Iterator<Item = &LaneSegment> {
        self.index.values().map(move |&i| &self.lanes[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EgoState {
    pub position: Point2,
    /// Radians, counter-clockwise from world +x.
    pub heading: f64,
    pub speed: f64,
    pub yaw_rate: f64,
    pub timestamp: f64,
}

impl EgoState {
    pub fn velocity(&self) -> Point2 {
        Point2::new(
            self.speed * libm::cos(self.heading),
            self.speed * libm::sin(self.heading),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ObjectCategory {
    Vehicle,
    Vru,
    Static,
}

impl ObjectCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            ObjectCategory::Vehicle => "vehicle",
            ObjectCategory::Vru => "vru",
            ObjectCategory::Static => "static",
        }
    }
}

impl FromStr for ObjectCategory {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "vehicle" => Ok(ObjectCategory::Vehicle),
            "vru" => Ok(ObjectCategory::Vru),
            "static" => Ok(ObjectCategory::Static),
            other => Err(other.into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthObject {
    pub id: String,
    pub position: Point2,
    pub velocity: Point2,
    pub category: ObjectCategory,
}

/// Sub-situation flags layered on top of the geographic location.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SubSituation {
    FollowDrive,
    ComplexIntersection,
}

impl SubSituation {
    pub fn as_str(self) -> &'static str {
        match self {
            SubSituation::FollowDrive => "follow_drive",
            SubSituation::ComplexIntersection => "complex_intersection",
        }
    }
}

impl fmt::Display for SubSituation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown sub-situation tag `{0}`")]
pub struct UnknownSubSituation(pub String);

impl FromStr for SubSituation {
    type Err = UnknownSubSituation;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "follow_drive" => Ok(SubSituation::FollowDrive),
            "complex_intersection" => Ok(SubSituation::ComplexIntersection),
            other => Err(UnknownSubSituation(other.into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub timestamp: f64,
    pub ego: EgoState,
    pub objects: Vec<GroundTruthObject>,
    pub annotations: BTreeSet<SubSituation>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("scenario has no frames")]
    Empty,
    #[error("cycle period must be positive, got {0}")]
    InvalidPeriod(f64),
    #[error("timestamp regression at frame {index}: {previous} -> {current}")]
    TimestampRegression {
        index: usize,
        previous: f64,
        current: f64,
    },
    #[error("frame {index} step {step} s deviates from cycle period {period} s")]
    NonUniformPeriod { index: usize, step: f64, period: f64 },
    #[error("frame {0}: ego timestamp differs from frame timestamp")]
    EgoTimestamp(usize),
    #[error("frame {0}: ego speed must be finite and non-negative")]
    InvalidSpeed(usize),
    #[error("frame {0}: non-finite value")]
    NonFinite(usize),
}

/// Tolerance on the per-frame time step.
pub const PERIOD_TOLERANCE_S: f64 = 1e-6;

/// Validated time-ordered recording.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub map_ref: String,
    pub cycle_period: f64,
    frames: Vec<Frame>,
}

impl Scenario {
    pub fn new(map_ref: String, cycle_period: f64, frames: Vec<Frame>) -> Result<Self, ScenarioError> {
        if !(cycle_period > 0.0 && cycle_period.is_finite()) {
            return Err(ScenarioError::InvalidPeriod(cycle_period));
        }
        if frames.is_empty() {
            return Err(ScenarioError::Empty);
        }
        for (i, f) in frames.iter().enumerate() {
            let ego = &f.ego;
            let finite = f.timestamp.is_finite()
                && ego.position.is_finite()
                && ego.heading.is_finite()
                && ego.yaw_rate.is_finite()
                && f
                    .objects
                    .iter()
                    .all(|o| o.position.is_finite() && o.velocity.is_finite());
            if !finite {
                return Err(ScenarioError::NonFinite(i));
            }
            if !(ego.speed >= 0.0 && ego.speed.is_finite()) {
                return Err(ScenarioError::InvalidSpeed(i));
            }
            if ego.timestamp != f.timestamp {
                return Err(ScenarioError::EgoTimestamp(i));
            }
        }
        for (i, w) in frames.windows(2).enumerate() {
            let step = w[1].timestamp - w[0].timestamp;
            if step <= 0.0 {
                return Err(ScenarioError::TimestampRegression {
                    index: i + 1,
                    previous: w[0].timestamp,
                    current: w[1].timestamp,
                });
            }
            if (step - cycle_period).abs() > PERIOD_TOLERANCE_S {
                return Err(ScenarioError::NonUniformPeriod {
                    index: i + 1,
                    step,
                    period: cycle_period,
                });
            }
        }
        Ok(Self {
            map_ref,
            cycle_period,
            frames,
        })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn pt(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    fn square(tag: ZoneTag, x0: f64, y0: f64, x1: f64, y1: f64) -> Zone {
        Zone {
            tag,
            polygon: vec![pt(x0, y0), pt(x1, y0), pt(x1, y1), pt(x0, y1)],
        }
    }

    fn two_lane_road() -> MapModel {
        MapModel::new(
            vec![
                LaneSegment::new("L1", vec![pt(0.0, 0.0), pt(100.0, 0.0)]).with_adjacent(&["L2"]),
                LaneSegment::new("L2", vec![pt(0.0, 3.5), pt(100.0, 3.5)]).with_adjacent(&["L1"]),
            ],
            vec![square(ZoneTag::Urban, -10.0, -10.0, 110.0, 10.0)],
        )
        .unwrap()
    }

    fn ego_at(x: f64, y: f64, heading: f64) -> EgoState {
        EgoState {
            position: pt(x, y),
            heading,
            speed: 10.0,
            yaw_rate: 0.0,
            timestamp: 0.0,
        }
    }

    #[test]
    fn minimal_map_loads() {
        let map = two_lane_road();
        assert_eq!(map.lanes().len(), 2);
        assert_eq!(map.zones().len(), 1);
    }

    #[test]
    fn dangling_successor_is_rejected() {
        let err = MapModel::new(
            vec![LaneSegment::new("L1", vec![pt(0.0, 0.0), pt(1.0, 0.0)]).with_successors(&["L99"])],
            vec![square(ZoneTag::Urban, -10.0, -10.0, 10.0, 10.0)],
        )
        .unwrap_err();
        assert_eq!(
            err,
            MapError::DanglingReference {
                lane: "L1".into(),
                target: "L99".into()
            }
        );
    }

    #[test]
    fn lane_outside_zones_is_rejected() {
        let err = MapModel::new(
            vec![LaneSegment::new("L1", vec![pt(0.0, 0.0), pt(50.0, 0.0)])],
            vec![square(ZoneTag::Urban, -10.0, -10.0, 10.0, 10.0)],
        )
        .unwrap_err();
        assert_eq!(err, MapError::ZoneGap("L1".into()));
    }

    #[test]
    fn repeated_centerline_point_is_rejected() {
        let err = MapModel::new(
            vec![LaneSegment::new("L1", vec![pt(0.0, 0.0), pt(0.0, 0.0), pt(1.0, 0.0)])],
            vec![square(ZoneTag::Urban, -10.0, -10.0, 10.0, 10.0)],
        )
        .unwrap_err();
        assert_eq!(err, MapError::DegenerateCenterline("L1".into()));
    }

    #[test]
    fn zone_lookup_uses_first_match_and_default() {
        let map = MapModel::new(
            vec![LaneSegment::new("L1", vec![pt(0.0, 0.0), pt(1.0, 0.0)])],
            vec![
                square(ZoneTag::Urban, -10.0, -10.0, 10.0, 10.0),
                square(ZoneTag::Highway, -20.0, -20.0, 20.0, 20.0),
            ],
        )
        .unwrap();
        assert_eq!(map.zone_at(pt(0.0, 0.0)), ZoneTag::Urban);
        assert_eq!(map.zone_at(pt(15.0, 0.0)), ZoneTag::Highway);
        assert_eq!(map.zone_at(pt(500.0, 0.0)), ZoneTag::Rural);
    }

    #[test]
    fn own_lane_follows_position_and_heading() {
        let map = two_lane_road();
        assert_eq!(map.own_lane_at(&ego_at(20.0, 0.0, 0.0)).unwrap().id.as_str(), "L1");
        assert_eq!(map.own_lane_at(&ego_at(20.0, 3.4, 0.0)).unwrap().id.as_str(), "L2");
        // facing backwards: neither lane is heading-compatible
        assert!(map.own_lane_at(&ego_at(20.0, 0.0, 3.0)).is_none());
        assert!(map.own_lane_at(&ego_at(20.0, 13.5, 0.0)).is_none());
    }

    #[test]
    fn own_lane_tie_goes_to_lower_id() {
        let map = two_lane_road();
        assert_eq!(map.own_lane_at(&ego_at(20.0, 1.75, 0.0)).unwrap().id.as_str(), "L1");
    }

    #[test]
    fn own_lane_distance_limit_is_closed() {
        let map = two_lane_road();
        assert!(map.own_lane_at(&ego_at(20.0, -5.0, 0.0)).is_some());
        assert!(map.own_lane_at(&ego_at(20.0, -5.001, 0.0)).is_none());
    }

    #[test]
    fn radius_query_is_a_closed_ball() {
        let map = two_lane_road();
        let ids = |v: Vec<&LaneSegment>| v.iter().map(|l| l.id.0.clone()).collect::<Vec<_>>();
        assert_eq!(ids(map.lanes_within_radius(pt(50.0, -2.0), 2.0)), ["L1"]);
        assert_eq!(ids(map.lanes_within_radius(pt(50.0, -2.0), 5.5)), ["L1", "L2"]);
        assert!(map.lanes_within_radius(pt(50.0, -2.0), 1.9).is_empty());
    }

    fn ring() -> MapModel {
        let sq = [pt(0.0, 0.0), pt(10.0, 0.0), pt(10.0, 10.0), pt(0.0, 10.0)];
        let lanes = (0..4)
            .map(|i| {
                let id = alloc::format!("R{i}");
                let next = alloc::format!("R{}", (i + 1) % 4);
                LaneSegment::new(&id, vec![sq[i], sq[(i + 1) % 4]]).with_successors(&[&next])
            })
            .collect();
        MapModel::new(lanes, vec![square(ZoneTag::Rural, -1.0, -1.0, 11.0, 11.0)]).unwrap()
    }

    #[test]
    fn successor_closure() {
        let map = ring();
        let ids = |v: Vec<&LaneSegment>| v.iter().map(|l| l.id.0.clone()).collect::<Vec<_>>();
        assert_eq!(ids(map.lane_successors_transitive(&"R0".into(), 0)), ["R0"]);
        assert_eq!(ids(map.lane_successors_transitive(&"R0".into(), 2)), ["R0", "R1", "R2"]);
        assert_eq!(
            ids(map.lane_successors_transitive(&"R2".into(), 100)),
            ["R0", "R1", "R2", "R3"]
        );
        assert!(map.lane_successors_transitive(&"nope".into(), 3).is_empty());
    }

    fn frame(t: f64) -> Frame {
        Frame {
            timestamp: t,
            ego: EgoState {
                timestamp: t,
                ..ego_at(0.0, 0.0, 0.0)
            },
            objects: Vec::new(),
            annotations: BTreeSet::new(),
        }
    }

    #[test]
    fn scenario_validation() {
        let frames: Vec<_> = (0..10).map(|i| frame(i as f64 * 0.1)).collect();
        assert_eq!(Scenario::new("m".into(), 0.1, frames).unwrap().frames().len(), 10);
        let err = Scenario::new("m".into(), 0.1, vec![frame(0.0), frame(0.0)]).unwrap_err();
        assert!(matches!(err, ScenarioError::TimestampRegression { index: 1, .. }));
        let err = Scenario::new("m".into(), 0.1, vec![frame(0.0), frame(0.3)]).unwrap_err();
        assert!(matches!(err, ScenarioError::NonUniformPeriod { index: 1, .. }));
        assert_eq!(Scenario::new("m".into(), 0.1, vec![]).unwrap_err(), ScenarioError::Empty);
    }
}
