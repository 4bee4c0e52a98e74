#!/usr/bin/env python3
"""Regenerates the bundled map, scenarios and catalog.

Run from this directory: python3 gen_fixtures.py
"""

import json
import math

PERIOD = 0.1
LANE_LEN = 100.0

# zone boxes, listed in lookup order
ZONES = [
    ("highway", (-100, -100, 700, 200)),
    ("rural", (700, -100, 1300, 500)),
    ("urban", (-100, 200, 700, 500)),
]


class Ring:
    """Counter-clockwise rounded rectangle, arc-length parametrized from the
    start of the bottom straight."""

    def __init__(self, x0, y0, x1, y1, r):
        self.r = r
        w, h = x1 - x0 - 2 * r, y1 - y0 - 2 * r
        arc = math.pi * r / 2
        self.pieces = []  # (kind, length, data)
        s = 0.0
        for kind, length, data in [
            ("line", w, ((x0 + r, y0), 0.0)),
            ("arc", arc, ((x1 - r, y1 - r - h), -math.pi / 2)),
            ("line", h, ((x1, y0 + r), math.pi / 2)),
            ("arc", arc, ((x1 - r, y1 - r), 0.0)),
            ("line", w, ((x1 - r, y1), math.pi)),
            ("arc", arc, ((x0 + r, y1 - r), math.pi / 2)),
            ("line", h, ((x0, y1 - r), -math.pi / 2)),
            ("arc", arc, ((x0 + r, y0 + r), math.pi)),
        ]:
            self.pieces.append((kind, s, length, data))
            s += length
        self.length = s

    def locate(self, s):
        s %= self.length
        for kind, start, length, data in self.pieces:
            if s <= start + length + 1e-9:
                return kind, s - start, data
        raise AssertionError

    def pose(self, s):
        """Position, heading and curvature at arc length s."""
        kind, u, data = self.locate(s)
        if kind == "line":
            (px, py), h = data
            return (px + u * math.cos(h), py + u * math.sin(h)), h, 0.0
        (cx, cy), a0 = data
        a = a0 + u / self.r
        return (cx + self.r * math.cos(a), cy + self.r * math.sin(a)), a + math.pi / 2, 1.0 / self.r

    def vertices(self, s0, s1):
        """Polyline from s0 to s1 with arcs sampled every 3 degrees."""
        ss = {s0, s1}
        for kind, start, length, _ in self.pieces:
            if kind == "arc":
                n = 30
                for k in range(n + 1):
                    v = start + length * k / n
                    if s0 < v < s1:
                        ss.add(v)
        return [self.pose(v)[0] for v in sorted(ss)]


def ring_for(offset):
    """Ring at `offset` meters to the left of the reference ring."""
    return Ring(offset, offset, 1200 - offset, 400 - offset, 30 - offset)


RINGS = {"A": ring_for(0.0), "B": ring_for(3.5), "C": ring_for(-3.5)}


def rnd(v):
    return round(v, 4)


def build_map():
    lanes = []
    for name, ring in RINGS.items():
        n = round(ring.length / LANE_LEN)
        cuts = [ring.length * k / n for k in range(n + 1)]
        ids = [f"{name}{k:02d}" for k in range(n)]
        for k in range(n):
            pts = ring.vertices(cuts[k], cuts[k + 1])
            if name == "C":
                # clockwise traffic
                pts = pts[::-1]
                succ = ids[(k - 1) % n]
            else:
                succ = ids[(k + 1) % n]
            lane = {
                "id": ids[k],
                "centerline": [[rnd(x), rnd(y)] for x, y in pts],
                "successors": [succ],
            }
            if name in "AB":
                lane["adjacent"] = [("B" if name == "A" else "A") + f"{k:02d}"]
            lanes.append(lane)
    zones = [
        {"tag": tag, "polygon": [[x0, y0], [x1, y0], [x1, y1], [x0, y1]]}
        for tag, (x0, y0, x1, y1) in ZONES
    ]
    return {"lanes": lanes, "zones": zones}


class Track:
    """Object moving along a ring at constant speed, or parked."""

    def __init__(self, oid, category, ring=None, s0=0.0, speed=0.0, clockwise=False,
                 lateral=0.0, at=None, active=(0.0, math.inf)):
        self.oid, self.category = oid, category
        self.ring, self.s0, self.speed = ring, s0, speed
        self.clockwise, self.lateral, self.at, self.active = clockwise, lateral, at, active

    def state(self, t):
        if not (self.active[0] <= t < self.active[1]):
            return None
        if self.at is not None:
            return self.at, (0.0, 0.0)
        sign = -1.0 if self.clockwise else 1.0
        (x, y), h, _ = self.ring.pose(self.s0 + sign * self.speed * t)
        if self.clockwise:
            h += math.pi
        x -= self.lateral * math.sin(h)
        y += self.lateral * math.cos(h)
        return (x, y), (self.speed * math.cos(h), self.speed * math.sin(h))


def s_at_x_bottom(ring, x):
    return x - ring.pieces[0][3][0][0]


def s_at_x_top(ring, x):
    kind, start, length, ((px, py), h) = ring.pieces[4]
    return start + (px - x)


def scenario(ego_ring, s0, speed, duration, objects=(), clockwise=False,
             annotate=(), visible=100.0, name=None):
    frames = []
    n = round(duration / PERIOD)
    sign = -1.0 if clockwise else 1.0
    for k in range(n):
        t = k * PERIOD
        (x, y), h, kappa = ego_ring.pose(s0 + sign * speed * t)
        if clockwise:
            h += math.pi
        frame = {
            "t": rnd(t),
            "ego": {
                "x": rnd(x), "y": rnd(y),
                "heading": rnd(math.atan2(math.sin(h), math.cos(h))),
                "speed": speed,
                "yaw_rate": rnd(sign * speed * kappa),
            },
            "objects": [],
            "annotations": [],
        }
        for obj in objects:
            st = obj.state(t)
            if st is None:
                continue
            (ox, oy), (vx, vy) = st
            if math.hypot(ox - x, oy - y) > visible:
                continue
            frame["objects"].append({
                "id": obj.oid, "x": rnd(ox), "y": rnd(oy),
                "vx": rnd(vx), "vy": rnd(vy), "category": obj.category,
            })
        for tag, (t0, t1) in annotate:
            if t0 <= t < t1:
                frame["annotations"].append(tag)
        frames.append(frame)
    return {"map": "ring_map.json", "cycle_period": PERIOD, "frames": frames}


def handover():
    # clockwise on the outer ring: bottom straight westwards, up the left side into town
    c = RINGS["C"]
    start = s_at_x_bottom(c, 400.0)
    speed = 25.0
    lead = Track("lead", "vehicle", c, start - 30.0, speed, clockwise=True, active=(5.0, 12.0))
    return scenario(c, start, speed, 32.0, [lead], clockwise=True)


def intersection():
    a = RINGS["A"]
    start = s_at_x_top(a, 600.0)
    speed = 10.0
    car = Track("car", "vehicle", RINGS["B"], s_at_x_top(RINGS["B"], 590.0), speed)
    return scenario(a, start, speed, 20.0, [car], annotate=[("complex_intersection", (8.0, 14.0))])


def highway():
    a = RINGS["A"]
    start = s_at_x_bottom(a, 50.0)
    speed = 25.0
    objects = [
        Track("lead", "vehicle", a, start + 30.0, speed, active=(8.0, 16.0)),
        Track("oncoming", "vehicle", RINGS["C"], s_at_x_bottom(RINGS["C"], 650.0), 22.0, clockwise=True),
        Track("parked_1", "static", at=(300.0, -40.0)),
        Track("parked_2", "static", at=(320.0, -45.0)),
        Track("parked_3", "vehicle", at=(480.0, 35.0)),
    ]
    return scenario(a, start, speed, 24.0, objects)


def mixed():
    a, b, c = RINGS["A"], RINGS["B"], RINGS["C"]
    start = s_at_x_bottom(a, 100.0)
    speed = 20.0
    top = lambda x: s_at_x_top(a, x)
    t_at = lambda s: (s - start) / speed
    objects = [
        # highway: a lead car for a while, parked cars off the road
        Track("lead", "vehicle", a, start + 25.0, speed, active=(8.0, 18.0)),
        Track("parked_1", "static", at=(350.0, -45.0)),
        Track("parked_2", "vehicle", at=(420.0, 30.0)),
        # rural: a cyclist at the lane edge, oncoming traffic, a roadside car
        Track("cyclist", "vru", a, s_at_x_bottom(a, 880.0), 5.0, lateral=1.5),
        Track("oncoming_1", "vehicle", c, c.length * 0.32, 18.0, clockwise=True),
        Track("roadside", "vehicle", at=(1210.0, 200.0)),
        # urban: pedestrians on the sidewalk, a car in the neighbouring lane
        Track("ped_1", "vru", at=(560.0, 409.0)),
        Track("ped_2", "vru", at=(548.0, 411.0)),
        Track("ped_3", "vru", at=(240.0, 409.0)),
        Track("car", "vehicle", b, s_at_x_top(b, 590.0), 12.0, active=(t_at(top(660.0)), t_at(top(360.0)))),
        Track("oncoming_2", "vehicle", c, c.length * 0.78, 15.0, clockwise=True),
    ]
    ci = (t_at(top(420.0)), t_at(top(300.0)))
    return scenario(a, start, speed, a.length / speed, objects, annotate=[("complex_intersection", ci)])


CATALOG = {
    "modules": [
        {"id": "LIDAR_OD", "category": "object_detection", "type": "source",
         "cost": {"form": "constant", "base": 1.0},
         "performance": {"highway": 1.0, "rural": 1.0, "urban": 1.0}},
        {"id": "RADAR_OD", "category": "object_detection", "type": "source",
         "cost": {"form": "constant", "base": 0.33},
         "performance": {"highway": 1.0, "rural": 1.0, "urban": 0.5},
         "relations": {"notes": "low VRU performance"}},
        {"id": "TRACKING_A", "category": "tracking", "variant": "A", "type": "non_source",
         "cost": {"form": "constant", "base": 0.1},
         "performance": {"highway": 1.0, "rural": 1.0, "urban": 1.0},
         "relations": {"requires_category": [["object_detection", 1]], "notes": "requires one OD module"}},
        {"id": "TRACKING_B", "category": "tracking", "variant": "B", "type": "non_source",
         "cost": {"form": "constant", "base": 0.05},
         "performance": {"highway": 1.0, "rural": 0.1, "urban": 0.1},
         "relations": {"requires_category": [["object_detection", 1]],
                       "valid_only_in": [{"sub": "follow_drive"}],
                       "notes": "requires one OD module, longitudinal distance only, follow drive only"}},
        {"id": "PLAUSIB", "category": "plausibilization", "type": "non_source",
         "cost": {"form": "constant", "base": 0.05},
         "performance": {"highway": 1.0, "rural": 1.0, "urban": 1.0},
         "relations": {"requires_category": [["tracking", 1]], "notes": "requires TRACKING"}},
    ]
}

RULES = {"rules": [{"when": {"sub": "complex_intersection"}, "require_category": ["object_detection", 2]}]}

ACTIVATION = {"activation": {
    "highway": ["lane_own", "ego_path"],
    "rural": ["lane_own", "ego_path", "object"],
    "urban": ["lane_own", "lane_other", "ego_path", "object"],
}}


def dump(name, doc, compact=False):
    with open(name, "w") as f:
        if compact:
            json.dump(doc, f, separators=(",", ":"))
        else:
            json.dump(doc, f, indent=1)
        f.write("\n")


if __name__ == "__main__":
    dump("ring_map.json", build_map())
    dump("scenario_handover.json", handover(), compact=True)
    dump("scenario_intersection.json", intersection(), compact=True)
    dump("scenario_highway.json", highway(), compact=True)
    dump("scenario_mixed.json", mixed(), compact=True)
    dump("catalog_reference.json", CATALOG)
    dump("rules_default.json", RULES)
    dump("activation_default.json", ACTIVATION)
