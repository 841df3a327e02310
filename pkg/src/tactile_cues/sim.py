"""Quasi-static scene simulator producing labeled taxel-grid trials.

A robot hand carrying the curved sensor moves along a piecewise-linear path
in the horizontal plane (normal, tangential) at constant speed and meets a
rigid object whose near face starts at normal coordinate 0. The object
responds according to its mobility condition; each frame is rendered
through a force-to-signal model with Gaussian count noise.
"""
from __future__ import annotations

import enum
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Literal, Sequence

import numpy as np

from .classify import MotionClass, TangentialClass
from .frames import FULL_SCALE, RawFrame, SensorGeometry
from .tipping import OutOfRangeError, TipScenario, tip_angle, x_max

G = 9.81  # m/s^2


@dataclass(frozen=True)
class Cylinder:
    diameter: float

    kind = "cylinder"


@dataclass(frozen=True)
class Box:
    width: float  # along the push
    depth: float  # across the contacted face

    kind = "box"


@dataclass(frozen=True)
class ObjectSpec:
    name: str
    footprint: Cylinder | Box
    height: float  # mm
    weight: float  # g
    friction_mu: float = 0.3

    def __post_init__(self):
        dims = (self.footprint.diameter,) if isinstance(self.footprint, Cylinder) else (
            self.footprint.width, self.footprint.depth)
        if min(dims) <= 0 or self.height <= 0:
            raise ValueError(f"{self.name}: dimensions must be positive")
        if self.weight <= 0:
            raise ValueError(f"{self.name}: weight must be positive")
        if not 0 < self.friction_mu < 2:
            raise ValueError(f"{self.name}: friction_mu must lie in (0, 2)")

    @property
    def push_width(self) -> float:
        fp = self.footprint
        return fp.diameter if isinstance(fp, Cylinder) else fp.width

    @property
    def gravity_force(self) -> float:
        return self.weight / 1000.0 * G


class Mobility(str, enum.Enum):
    FREE = "free"
    TIP_PRONE = "tip_prone"
    WALL_CONSTRAINED = "wall_constrained"


Adversarial = Literal["stationary", "reverse"]


@dataclass(frozen=True)
class TrialConfig:
    mobility: Mobility
    speed: float = 10.0  # mm/s along the path
    contact_height: float = 100.0  # mm above the support surface
    tangential_ratio: float = 0.0  # tangential / normal path component
    max_normal_force: float = 30.0  # N, robot stop
    immovable_threshold: float = 20.0  # N
    wall_stiffness: float = 2.0  # N/mm
    noise_sigma: float = 2.0  # counts
    seed: int = 0
    approach_gap: float = 2.0  # mm between sensor and object at t = 0
    push_distance: float = 30.0  # mm of normal travel after contact
    contact_point: tuple[float, float] = (30.0, 15.0)  # sensor (x, y) mm at first contact
    path: Literal["push", "brush"] = "push"
    brush_depth: float = 5.0  # normal penetration before brushing, mm
    tangential_follow: float = 0.0  # fraction of robot tangential motion the object follows
    adversarial: Adversarial | None = None
    signal_f0: float = 6.0  # N

    def __post_init__(self):
        object.__setattr__(self, "mobility", Mobility(self.mobility))
        object.__setattr__(self, "contact_point", tuple(float(v) for v in self.contact_point))
        if self.speed <= 0:
            raise ValueError("speed must be > 0")
        if self.contact_height <= 0:
            raise ValueError("contact_height must be > 0")
        if self.max_normal_force <= self.immovable_threshold:
            raise ValueError("max_normal_force must exceed immovable_threshold")
        if self.wall_stiffness <= 0 or self.noise_sigma < 0 or self.signal_f0 <= 0:
            raise ValueError("wall_stiffness and signal_f0 must be > 0, noise_sigma >= 0")
        if self.path not in ("push", "brush"):
            raise ValueError(f"unknown path {self.path!r}")
        if self.adversarial not in (None, "stationary", "reverse"):
            raise ValueError(f"unknown adversarial mode {self.adversarial!r}")
        if not 0 <= self.tangential_follow <= 1:
            raise ValueError("tangential_follow must lie in [0, 1]")


@dataclass(eq=False)
class TrialRecord:
    geometry: SensorGeometry
    object: ObjectSpec
    config: TrialConfig
    baseline: np.ndarray
    frames: list[RawFrame]
    true_class: MotionClass
    true_tangential: TangentialClass | None = None

    def __eq__(self, other):
        if not isinstance(other, TrialRecord):
            return NotImplemented
        return (
            self.geometry == other.geometry
            and self.object == other.object
            and self.config == other.config
            and np.array_equal(self.baseline, other.baseline)
            and self.baseline.dtype.kind == other.baseline.dtype.kind
            and self.frames == other.frames
            and self.true_class == other.true_class
            and self.true_tangential == other.true_tangential
        )


def true_class_for(obj: ObjectSpec, config: TrialConfig) -> MotionClass:
    if config.mobility is Mobility.WALL_CONSTRAINED:
        return MotionClass.IMMOVABLE
    if config.mobility is Mobility.TIP_PRONE:
        return MotionClass.TIPPING
    if obj.friction_mu * obj.gravity_force > config.immovable_threshold:
        return MotionClass.IMMOVABLE
    return MotionClass.SLIDING


def true_tangential_for(config: TrialConfig) -> TangentialClass | None:
    if config.path != "brush":
        return None
    return TangentialClass.STATIONARY if config.tangential_follow == 0 else TangentialClass.MOVING_CONTACT


# --- signal model ---------------------------------------------------------

PRESSURE_GAIN = 7.0  # peak taxel load per sqrt(N) of contact force
FOOTPRINT_BASE = 6.0  # mm
FOOTPRINT_GROWTH = 2.0  # mm per sqrt(N)
CYLINDER_ASPECT = 0.75  # horizontal / vertical half-width


def force_to_signal(force, f0: float = 6.0):
    """Normalized taxel value for an effective taxel load, 255 / (1 + F / F0)."""
    f = np.asarray(force, dtype=float)
    if np.any(f < 0):
        raise ValueError("force must be >= 0")
    out = FULL_SCALE / (1.0 + f / f0)
    return float(out) if out.ndim == 0 else out


def footprint_halfwidth(force: float) -> float:
    """Vertical patch half-width; grows like sqrt(F) as for a line contact."""
    return FOOTPRINT_BASE + FOOTPRINT_GROWTH * math.sqrt(force)


def taxel_loads(force: float, contact_point: tuple[float, float], obj: ObjectSpec,
                geometry: SensorGeometry) -> np.ndarray:
    """Effective load on every taxel for a contact of total force ``force``."""
    if force <= 0:
        return np.zeros(geometry.shape)
    cx, cy = contact_point
    a_v = footprint_halfwidth(force)
    yy, xx = (np.mgrid[0:geometry.rows, 0:geometry.cols] + 0.5) * geometry.pitch
    dy = (yy - cy) / a_v
    if isinstance(obj.footprint, Cylinder):
        dx = (xx - cx) / (CYLINDER_ASPECT * a_v)
    else:
        dx = np.maximum(0.0, np.abs(xx - cx) - obj.footprint.depth / 2) / a_v
    r = np.hypot(dx, dy)
    falloff = np.where(r < 1.0, np.cos(0.5 * np.pi * np.minimum(r, 1.0)), 0.0)
    return PRESSURE_GAIN * math.sqrt(force) * falloff


def make_baseline(geometry: SensorGeometry, seed: int = 0, level: float = 500.0,
                  spread: float = 40.0) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xBA5E]))
    base = np.rint(rng.normal(level, spread, geometry.shape)).astype(np.int64)
    return np.maximum(base, 100)


# --- scene ------------------------------------------------------------------

@dataclass(frozen=True)
class Scene:
    geometry: SensorGeometry
    object: ObjectSpec
    config: TrialConfig

    @property
    def waypoints(self) -> list[tuple[float, float]]:
        c = self.config
        start = (-c.approach_gap, 0.0)
        if c.path == "push":
            return [start, (c.push_distance, (c.push_distance + c.approach_gap) * c.tangential_ratio)]
        return [start, (c.brush_depth, 0.0), (c.brush_depth, c.push_distance)]

    @property
    def path_length(self) -> float:
        w = self.waypoints
        return sum(math.dist(a, b) for a, b in zip(w, w[1:]))

    def pose_at(self, arc: float) -> tuple[float, float]:
        w = self.waypoints
        for a, b in zip(w, w[1:]):
            seg = math.dist(a, b)
            if arc <= seg:
                f = arc / seg
                return (a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1]))
            arc -= seg
        return w[-1]

    @property
    def tip(self) -> TipScenario:
        return TipScenario(self.geometry.radius, self.object.push_width, self.config.contact_height)


@dataclass(frozen=True)
class SceneState:
    step: int = 0
    arc: float = 0.0
    pose: tuple[float, float] = (0.0, 0.0)
    contact_tangential: float | None = None  # robot tangential pose at first contact
    theta: float = 0.0
    force: float = 0.0
    contact_point: tuple[float, float] | None = None
    done: bool = False
    reason: str = ""


def _tipping_force(scene: Scene, x: float, theta: float) -> float:
    # torque balance about the far bottom edge; push acts normal to the face
    s, obj = scene.tip, scene.object
    lever_w = 0.5 * s.w * math.cos(theta) - 0.5 * obj.height * math.sin(theta)
    y_face = (x - s.R - s.w + s.w * math.cos(theta)) * math.sin(theta) + (s.h - s.w * math.sin(theta)) * math.cos(theta)
    return max(obj.gravity_force * lever_w / max(y_face, 1e-6), 0.05)


def resolve(scene: Scene, step: int, arc: float, contact_tangential: float | None) -> SceneState:
    """Quasi-static object response at a given point along the robot path."""
    geo, obj, cfg = scene.geometry, scene.object, scene.config
    if arc > scene.path_length + 1e-9:
        return SceneState(step, arc, scene.pose_at(arc), contact_tangential, done=True, reason="path_end")
    n, t = scene.pose_at(arc)
    if n < 0:
        return SceneState(step, arc, (n, t), contact_tangential)
    if contact_tangential is None:
        contact_tangential = t
    sx0, sy0 = cfg.contact_point
    lateral = sx0 - (t - contact_tangential) * (1.0 - cfg.tangential_follow)
    true_cls = true_class_for(obj, cfg)
    theta = 0.0
    sy = sy0
    if true_cls is MotionClass.IMMOVABLE:
        force = cfg.wall_stiffness * n
        if force > cfg.max_normal_force:
            return SceneState(step, arc, (n, t), contact_tangential, done=True, reason="force_limit")
    elif true_cls is MotionClass.SLIDING:
        force = obj.friction_mu * obj.gravity_force
    else:
        try:
            theta = tip_angle(scene.tip, n)
        except OutOfRangeError:
            return SceneState(step, arc, (n, t), contact_tangential, done=True, reason="topple")
        drop = geo.radius * theta
        if cfg.adversarial == "stationary":
            sy = sy0
        elif cfg.adversarial == "reverse":
            sy = sy0 - 0.6 * drop
        else:
            sy = sy0 + drop
        force = _tipping_force(scene, n, theta)
    margin = geo.pitch
    off_sensor = not (margin <= sy <= geo.height - margin)
    if isinstance(obj.footprint, Cylinder):
        off_sensor |= not (margin <= lateral <= geo.width - margin)
    if off_sensor:
        return SceneState(step, arc, (n, t), contact_tangential, theta, done=True, reason="contact_left_sensor")
    return SceneState(step, arc, (n, t), contact_tangential, theta, force, (lateral, sy))


def initial_state(scene: Scene) -> SceneState:
    return resolve(scene, 0, 0.0, None)


def step_scene(state: SceneState, scene: Scene, dt: float | None = None,
               speed: float | None = None) -> SceneState:
    """Advance the robot one frame along its path and resolve the object."""
    if state.done:
        return state
    if dt is None:
        dt = 1.0 / scene.geometry.sample_rate
    v = scene.config.speed if speed is None else speed
    return resolve(scene, state.step + 1, state.arc + v * dt, state.contact_tangential)


def render_frame(state: SceneState, scene: Scene, baseline: np.ndarray,
                 rng: np.random.Generator | None = None) -> RawFrame:
    geo, cfg = scene.geometry, scene.config
    if state.contact_point is None:
        signal = np.full(geo.shape, FULL_SCALE)
    else:
        loads = taxel_loads(state.force, state.contact_point, scene.object, geo)
        signal = force_to_signal(loads, cfg.signal_f0)
    counts = baseline * signal / FULL_SCALE
    if cfg.noise_sigma > 0:
        if rng is None:
            raise ValueError("noise requires a random generator")
        counts = counts + rng.normal(0.0, cfg.noise_sigma, geo.shape)
    counts = np.maximum(np.rint(counts), 0).astype(np.int64)
    return RawFrame(timestamp=state.step / geo.sample_rate, robot_pose=state.pose, counts=counts)


def simulate_trial(geometry: SensorGeometry, obj: ObjectSpec, config: TrialConfig,
                   baseline: np.ndarray | None = None) -> TrialRecord:
    scene = Scene(geometry, obj, config)
    if baseline is None:
        baseline = make_baseline(geometry, config.seed)
    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    state = initial_state(scene)
    frames = []
    while not state.done:
        frames.append(render_frame(state, scene, baseline, rng))
        state = step_scene(state, scene)
    if not frames:
        raise ValueError("trial produced no frames")
    return TrialRecord(geometry, obj, config, np.asarray(baseline), frames,
                       true_class_for(obj, config), true_tangential_for(config))


# --- catalog and dataset ----------------------------------------------------

def object_from_dict(d: dict) -> ObjectSpec:
    fp = d["footprint"]
    if fp["kind"] == "cylinder":
        footprint = Cylinder(float(fp["diameter"]))
    elif fp["kind"] == "box":
        footprint = Box(float(fp["width"]), float(fp["depth"]))
    else:
        raise ValueError(f"unknown footprint kind {fp['kind']!r}")
    return ObjectSpec(d["name"], footprint, float(d["height"]), float(d["weight"]),
                      float(d.get("friction_mu", 0.3)))


def object_to_dict(obj: ObjectSpec) -> dict:
    fp = obj.footprint
    if isinstance(fp, Cylinder):
        fpd = {"kind": "cylinder", "diameter": fp.diameter}
    else:
        fpd = {"kind": "box", "width": fp.width, "depth": fp.depth}
    return {"name": obj.name, "footprint": fpd, "height": obj.height,
            "weight": obj.weight, "friction_mu": obj.friction_mu}


def load_catalog(path=None, object_set: Literal["all", "prototypical"] = "all") -> list[ObjectSpec]:
    """Read an object catalog (JSON list); defaults to the bundled 13-object table."""
    if path is None:
        text = resources.files("tactile_cues").joinpath("data/objects.json").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    entries = json.loads(text)
    if object_set == "prototypical":
        entries = [e for e in entries if e.get("set") == "prototypical"]
    if not entries:
        raise ValueError("catalog is empty")
    return [object_from_dict(e) for e in entries]


CONDITIONS = (Mobility.FREE, Mobility.TIP_PRONE, Mobility.WALL_CONSTRAINED)


@dataclass(frozen=True)
class DatasetSpec:
    objects: tuple[ObjectSpec, ...]
    trials_per_condition: int = 20
    seed: int = 0
    geometry: SensorGeometry = field(default_factory=SensorGeometry)
    noise_sigma: float = 2.0
    adversarial: bool = False

    @property
    def size(self) -> int:
        return len(self.objects) * len(CONDITIONS) * self.trials_per_condition


def trial_config_for(spec: DatasetSpec, index: int) -> tuple[ObjectSpec, TrialConfig]:
    """Configuration of trial ``index``; depends only on the index and dataset seed."""
    per_obj = len(CONDITIONS) * spec.trials_per_condition
    obj = spec.objects[index // per_obj]
    mobility = CONDITIONS[(index % per_obj) // spec.trials_per_condition]
    j = index % spec.trials_per_condition
    ss = np.random.SeedSequence([spec.seed, index])
    rng = np.random.default_rng(ss)
    geo = spec.geometry
    ratio = 0.0 if j < spec.trials_per_condition // 2 else 1.0
    h = obj.height * rng.uniform(0.55, 0.8)
    sy0 = rng.uniform(12.0, 22.0)
    if ratio == 0 or isinstance(obj.footprint, Box):
        sx0 = geo.width / 2 + rng.uniform(-6.0, 6.0)
    else:
        sx0 = geo.width - rng.uniform(12.0, 16.0)
    adversarial = None
    if spec.adversarial and mobility is Mobility.TIP_PRONE and rng.uniform() < 0.5:
        adversarial = "stationary" if rng.uniform() < 0.5 else "reverse"
        if adversarial == "reverse":
            # upward drift needs room above the first contact
            sy0 = rng.uniform(0.5, 0.7) * geo.height
    config = TrialConfig(
        mobility=mobility,
        contact_height=float(h),
        tangential_ratio=ratio,
        noise_sigma=spec.noise_sigma,
        seed=int(ss.generate_state(1)[0]),
        approach_gap=float(rng.uniform(1.0, 3.0)),
        contact_point=(float(sx0), float(sy0)),
        adversarial=adversarial,
    )
    return obj, config


def generate_trial(spec: DatasetSpec, index: int, baseline: np.ndarray | None = None) -> TrialRecord:
    obj, config = trial_config_for(spec, index)
    if baseline is None:
        baseline = make_baseline(spec.geometry, spec.seed)
    return simulate_trial(spec.geometry, obj, config, baseline)


def _generate_chunk(args):
    spec, indices = args
    base = make_baseline(spec.geometry, spec.seed)
    return [generate_trial(spec, i, base) for i in indices]


def generate_dataset(objects: Sequence[ObjectSpec], trials_per_condition: int = 20, seed: int = 0,
                     geometry: SensorGeometry | None = None, noise_sigma: float = 2.0,
                     adversarial: bool = False, jobs: int = 1) -> list[TrialRecord]:
    """Every object x mobility condition x trial, in that order.

    Half the trials of each condition push purely along the normal, half
    with an equal tangential component. Trial seeds derive from the index,
    so ``jobs > 1`` reproduces the sequential output exactly.
    """
    if not objects:
        raise ValueError("catalog is empty")
    spec = DatasetSpec(tuple(objects), trials_per_condition, seed,
                       geometry or SensorGeometry(), noise_sigma, adversarial)
    indices = list(range(spec.size))
    if jobs <= 1:
        return _generate_chunk((spec, indices))
    chunks = [indices[k::jobs] for k in range(jobs)]
    with ProcessPoolExecutor(jobs) as pool:
        parts = list(pool.map(_generate_chunk, [(spec, c) for c in chunks]))
    out: list[TrialRecord | None] = [None] * spec.size
    for c, part in zip(chunks, parts):
        for i, rec in zip(c, part):
            out[i] = rec
    return out  # type: ignore[return-value]
