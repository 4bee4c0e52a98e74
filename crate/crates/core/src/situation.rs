//! Situation detection and the situation-to-layer activation table.

use alloc::collections::{BTreeMap, BTreeSet};

use crate::geometry::{angle_diff, project_on_polyline};
use crate::world::{Frame, LaneId, MapModel, SubSituation, ZoneTag};

/// Lead object must be at most this far ahead.
pub const FOLLOW_MAX_RANGE_M: f64 = 40.0;
/// Maximum speed difference between ego and lead, m/s.
pub const FOLLOW_MAX_RELATIVE_SPEED: f64 = 2.0;
/// Maximum deviation of the lead's motion from the lane tangent.
pub const FOLLOW_MAX_HEADING_RAD: f64 = 30.0 * core::f64::consts::PI / 180.0;
/// Lateral distance from the own-lane centerline still counted as "in lane".
pub const FOLLOW_LANE_HALF_WIDTH_M: f64 = 2.0;
/// Successor hops searched when placing an object in the own lane.
pub const FOLLOW_LANE_DEPTH: usize = 3;
/// Below this speed an object has no meaningful heading.
const MIN_HEADING_SPEED: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Situation {
    pub location: ZoneTag,
    pub sub: BTreeSet<SubSituation>,
}

impl Situation {
    pub fn new(location: ZoneTag) -> Self {
        Self {
            location,
            sub: BTreeSet::new(),
        }
    }

    pub fn with(mut self, sub: SubSituation) -> Self {
        self.sub.insert(sub);
        self
    }

    pub fn has(&self, sub: SubSituation) -> bool {
        self.sub.contains(&sub)
    }
}

/// Which attention layers a situation switches on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LayerActivation {
    pub lane_own: bool,
    pub lane_other: bool,
    pub ego_path: bool,
    pub object: bool,
}

impl LayerActivation {
    pub const NONE: LayerActivation = LayerActivation {
        lane_own: false,
        lane_other: false,
        ego_path: false,
        object: false,
    };

    pub fn any(&self) -> bool {
        self.lane_own || self.lane_other || self.ego_path || self.object
    }
}

/// Maps a location to its active layers. Locations missing from the table activate nothing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivationTable {
    rows: BTreeMap<ZoneTag, LayerActivation>,
}

impl Default for ActivationTable {
    fn default() -> Self {
        let mut rows = BTreeMap::new();
        rows.insert(
            ZoneTag::Highway,
            LayerActivation {
                lane_own: true,
                ego_path: true,
                ..LayerActivation::NONE
            },
        );
        rows.insert(
            ZoneTag::Rural,
            LayerActivation {
                lane_own: true,
                ego_path: true,
                object: true,
                ..LayerActivation::NONE
            },
        );
        rows.insert(
            ZoneTag::Urban,
            LayerActivation {
                lane_own: true,
                lane_other: true,
                ego_path: true,
                object: true,
            },
        );
        Self { rows }
    }
}

impl ActivationTable {
    pub fn empty() -> Self {
        Self {
            rows: BTreeMap::new(),
        }
    }

    pub fn set(&mut self, location: ZoneTag, activation: LayerActivation) {
        self.rows.insert(location, activation);
    }

    pub fn rows(&self) -> impl Iterator<Item = (ZoneTag, LayerActivation)> + '_ {
        self.rows.iter().map(|(k, v)| (*k, *v))
    }

    /// Sub-situations never change the layer set; only the location does.
    pub fn active_layers(&self, situation: &Situation) -> LayerActivation {
        self.rows
            .get(&situation.location)
            .copied()
            .unwrap_or(LayerActivation::NONE)
    }
}

/// True iff exactly one object is in the ego's own lane (or its near
/// successors) ahead within range, moving at near ego speed along the lane.
pub fn detect_follow_drive(map: &MapModel, frame: &Frame) -> bool {
    let ego = &frame.ego;
    let Some(own) = map.own_lane_at(ego) else {
        return false;
    };
    let lanes = map.lane_successors_transitive(&own.id, FOLLOW_LANE_DEPTH);
    let forward = crate::geometry::Point2::new(libm::cos(ego.heading), libm::sin(ego.heading));
    let ego_velocity = ego.velocity();

    let leads = frame
        .objects
        .iter()
        .filter(|obj| {
            let rel = obj.position - ego.position;
            let ahead = rel.dot(forward);
            if ahead <= 0.0 || rel.norm() > FOLLOW_MAX_RANGE_M {
                return false;
            }
            if (obj.velocity - ego_velocity).norm() >= FOLLOW_MAX_RELATIVE_SPEED {
                return false;
            }
            if obj.velocity.norm() < MIN_HEADING_SPEED {
                return false;
            }
            let heading = obj.velocity.angle();
            lanes.iter().any(|lane| {
                project_on_polyline(obj.position, &lane.centerline).is_some_and(|pr| {
                    pr.distance <= FOLLOW_LANE_HALF_WIDTH_M
                        && angle_diff(heading, pr.tangent) <= FOLLOW_MAX_HEADING_RAD
                })
            })
        })
        .count();
    leads == 1
}

/// Location from the map, complex intersection from the frame annotation,
/// follow drive from [`detect_follow_drive`].
pub fn detect_situation(map: &MapModel, frame: &Frame) -> Situation {
    let mut situation = Situation::new(map.zone_at(frame.ego.position));
    if frame.annotations.contains(&SubSituation::ComplexIntersection) {
        situation.sub.insert(SubSituation::ComplexIntersection);
    }
    if detect_follow_drive(map, frame) {
        situation.sub.insert(SubSituation::FollowDrive);
    }
    situation
}

/// Lane the follow-drive check treats as the ego's own, exposed for logging.
pub fn own_lane_id(map: &MapModel, frame: &Frame) -> Option<LaneId> {
    map.own_lane_at(&frame.ego).map(|l| l.id.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point2;
    use crate::world::{EgoState, GroundTruthObject, LaneSegment, ObjectCategory, Zone};
    use alloc::vec;
    use alloc::vec::Vec;

    fn pt(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    fn map() -> MapModel {
        let zone = |tag, x0: f64, x1: f64| Zone {
            tag,
            polygon: vec![pt(x0, -20.0), pt(x1, -20.0), pt(x1, 20.0), pt(x0, 20.0)],
        };
        MapModel::new(
            vec![
                LaneSegment::new("E1", vec![pt(0.0, 0.0), pt(200.0, 0.0)]).with_successors(&["E2"]),
                LaneSegment::new("E2", vec![pt(200.0, 0.0), pt(400.0, 0.0)]),
                LaneSegment::new("W1", vec![pt(400.0, 4.0), pt(0.0, 4.0)]),
            ],
            vec![
                zone(ZoneTag::Highway, -10.0, 300.0),
                zone(ZoneTag::Urban, 300.0, 410.0),
            ],
        )
        .unwrap()
    }

    fn frame(x: f64, objects: Vec<GroundTruthObject>) -> Frame {
        Frame {
            timestamp: 0.0,
            ego: EgoState {
                position: pt(x, 0.0),
                heading: 0.0,
                speed: 25.0,
                yaw_rate: 0.0,
                timestamp: 0.0,
            },
            objects,
            annotations: BTreeSet::new(),
        }
    }

    fn vehicle(id: &str, x: f64, y: f64, vx: f64) -> GroundTruthObject {
        GroundTruthObject {
            id: id.into(),
            position: pt(x, y),
            velocity: pt(vx, 0.0),
            category: ObjectCategory::Vehicle,
        }
    }

    #[test]
    fn activation_table_rows() {
        let t = ActivationTable::default();
        let hw = t.active_layers(&Situation::new(ZoneTag::Highway));
        assert!(hw.lane_own && !hw.lane_other && hw.ego_path && !hw.object);
        let ru = t.active_layers(&Situation::new(ZoneTag::Rural));
        assert!(ru.lane_own && !ru.lane_other && ru.ego_path && ru.object);
        let ur = t.active_layers(&Situation::new(ZoneTag::Urban));
        assert!(ur.lane_own && ur.lane_other && ur.ego_path && ur.object);
        let ur_cx = t.active_layers(
            &Situation::new(ZoneTag::Urban).with(SubSituation::ComplexIntersection),
        );
        assert_eq!(ur, ur_cx);
    }

    #[test]
    fn lead_vehicle_same_speed_is_follow_drive() {
        let m = map();
        assert!(detect_follow_drive(&m, &frame(50.0, vec![vehicle("a", 70.0, 0.0, 25.0)])));
        // lead on the successor lane
        assert!(detect_follow_drive(&m, &frame(190.0, vec![vehicle("a", 215.0, 0.5, 24.0)])));
    }

    #[test]
    fn follow_drive_gates() {
        let m = map();
        assert!(!detect_follow_drive(&m, &frame(50.0, vec![])));
        // oncoming in own lane
        assert!(!detect_follow_drive(&m, &frame(50.0, vec![vehicle("a", 70.0, 0.0, -25.0)])));
        // too far
        assert!(!detect_follow_drive(&m, &frame(50.0, vec![vehicle("a", 95.0, 0.0, 25.0)])));
        // too fast
        assert!(!detect_follow_drive(&m, &frame(50.0, vec![vehicle("a", 70.0, 0.0, 30.0)])));
        // behind
        assert!(!detect_follow_drive(&m, &frame(50.0, vec![vehicle("a", 30.0, 0.0, 25.0)])));
        // other lane
        assert!(!detect_follow_drive(&m, &frame(50.0, vec![vehicle("a", 70.0, 4.0, 25.0)])));
        // two leads
        assert!(!detect_follow_drive(
            &m,
            &frame(50.0, vec![vehicle("a", 70.0, 0.0, 25.0), vehicle("b", 80.0, 0.0, 25.0)])
        ));
    }

    #[test]
    fn situation_detection() {
        let m = map();
        assert_eq!(detect_situation(&m, &frame(50.0, vec![])), Situation::new(ZoneTag::Highway));
        assert_eq!(
            detect_situation(&m, &frame(50.0, vec![vehicle("a", 70.0, 0.0, 25.0)])),
            Situation::new(ZoneTag::Highway).with(SubSituation::FollowDrive)
        );
        let mut f = frame(350.0, vec![]);
        f.annotations.insert(SubSituation::ComplexIntersection);
        assert_eq!(
            detect_situation(&m, &f),
            Situation::new(ZoneTag::Urban).with(SubSituation::ComplexIntersection)
        );
        assert_eq!(own_lane_id(&m, &f).unwrap().as_str(), "E2");
    }
}
