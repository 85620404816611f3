"""Procedural walker: kinematics, capsule avatar and software rasterizer.

World frame: x is the walking direction, y points to the subject's left,
z is up; units are millimetres and the floor is ``z = 0``. The walker stays
on a virtual treadmill, so the pelvis never moves horizontally.

Camera azimuth 0 is a sagittal (side) view with the subject walking to the
right of the image; azimuth 90 looks at the subject from the front.
Elevation is the camera angle above the horizontal.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

import numpy as np

from . import mocap, quat
from .errors import AvatarOutOfFrame, ConfigError

SEGMENTS = ("thigh", "shank", "foot", "torso", "upper_arm", "forearm", "neck_head")

JOINT_NAMES = (
    "pelvis", "spine", "chest", "neck", "head",
    "l_shoulder", "l_elbow", "l_wrist", "r_shoulder", "r_elbow", "r_wrist",
    "l_hip", "l_knee", "l_ankle", "l_toe", "r_hip", "r_knee", "r_ankle", "r_toe",
)

# bone (parent joint, child joint) -> segment whose radius it uses
BONES = (
    ("pelvis", "spine", "torso"), ("spine", "chest", "torso"),
    ("chest", "neck", "neck"), ("neck", "head", "neck"),
    ("chest", "l_shoulder", "upper_arm"), ("l_shoulder", "l_elbow", "upper_arm"),
    ("l_elbow", "l_wrist", "forearm"),
    ("chest", "r_shoulder", "upper_arm"), ("r_shoulder", "r_elbow", "upper_arm"),
    ("r_elbow", "r_wrist", "forearm"),
    ("pelvis", "l_hip", "thigh"), ("l_hip", "l_knee", "thigh"),
    ("l_knee", "l_ankle", "shank"), ("l_ankle", "l_toe", "foot"),
    ("pelvis", "r_hip", "thigh"), ("r_hip", "r_knee", "thigh"),
    ("r_knee", "r_ankle", "shank"), ("r_ankle", "r_toe", "foot"),
)

NECK_RADIUS_FRACTION = 0.45

BASE_COLORS = {
    "torso": (196, 84, 62),
    "neck": (222, 172, 140),
    "head": (222, 172, 140),
    "upper_arm": (196, 84, 62),
    "forearm": (222, 172, 140),
    "thigh": (58, 62, 150),
    "shank": (58, 62, 150),
    "foot": (44, 40, 40),
}
OCCLUDER_COLOR = (128, 128, 128)
AMBIENT = 0.35
KEY_MARGIN = 32


@dataclass(frozen=True)
class WalkerIdentity:
    """Subject-specific anthropometry and gait style.

    Lengths and radii are millimetres, amplitudes degrees, ``phase_quirk``
    radians. ``hip_width`` and ``shoulder_width`` set the lateral spacing of
    the limb roots.
    """

    segment_lengths: dict
    segment_radii: dict
    hip_amplitude: float = 25.0
    knee_amplitude: float = 45.0
    arm_amplitude: float = 20.0
    phase_quirk: float = 0.0
    cadence_bias: float = 1.0
    hip_width: float = 190.0
    shoulder_width: float = 350.0
    name: str = "subject"

    def __post_init__(self):
        for kind, table in (("length", self.segment_lengths), ("radius", self.segment_radii)):
            missing = set(SEGMENTS) - set(table)
            if missing:
                raise ConfigError(f"segment {kind} missing for {sorted(missing)}")
            for seg in SEGMENTS:
                if not table[seg] > 0:
                    raise ConfigError(f"segment {kind} of {seg!r} must be > 0")
        for attr in ("hip_amplitude", "knee_amplitude", "arm_amplitude"):
            if not 0.0 <= getattr(self, attr) <= 90.0:
                raise ConfigError(f"{attr} must lie in [0, 90] degrees")
        if not 0.8 <= self.cadence_bias <= 1.2:
            raise ConfigError("cadence_bias must lie in [0.8, 1.2]")
        if not (self.hip_width > 0 and self.shoulder_width > 0):
            raise ConfigError("hip_width and shoulder_width must be > 0")

    @property
    def leg_length(self):
        return self.segment_lengths["thigh"] + self.segment_lengths["shank"]


def default_identity(name="subject"):
    return WalkerIdentity(
        segment_lengths=dict(thigh=450.0, shank=430.0, foot=180.0, torso=540.0,
                             upper_arm=300.0, forearm=270.0, neck_head=260.0),
        segment_radii=dict(thigh=75.0, shank=52.0, foot=40.0, torso=135.0,
                           upper_arm=46.0, forearm=38.0, neck_head=95.0),
        name=name,
    )


def random_identity(rng, name="subject"):
    """Draw a plausible identity from ``rng`` (a numpy Generator)."""
    u = rng.uniform
    return WalkerIdentity(
        segment_lengths=dict(thigh=u(400, 500), shank=u(380, 470), foot=u(150, 210),
                             torso=u(470, 610), upper_arm=u(260, 340), forearm=u(230, 300),
                             neck_head=u(220, 290)),
        segment_radii=dict(thigh=u(62, 92), shank=u(42, 60), foot=u(34, 46), torso=u(105, 165),
                           upper_arm=u(38, 56), forearm=u(30, 45), neck_head=u(85, 108)),
        hip_amplitude=u(18, 32),
        knee_amplitude=u(30, 60),
        arm_amplitude=u(8, 35),
        phase_quirk=u(-0.5, 0.5),
        cadence_bias=u(0.9, 1.1),
        hip_width=u(160, 230),
        shoulder_width=u(300, 410),
        name=name,
    )


def identity_population(count, seed):
    """``count`` reproducible identities named ``s01``, ``s02``, ..."""
    rng = np.random.default_rng(seed)
    return [random_identity(rng, f"s{i + 1:02d}") for i in range(count)]


@dataclass(frozen=True)
class ConfounderConfig:
    """Controllable nuisance factors for one rendered sequence.

    ``occluder`` is an image-space rectangle ``(row0, col0, row1, col1)``
    (half-open); ``light_direction`` points from the subject towards the
    light and is only used for shaded frames.
    """

    azimuth: float = 0.0
    elevation: float = 0.0
    clothing_bulk: float = 1.0
    speed: float = 5.0
    boundary_noise: float = 0.0
    occluder: tuple | None = None
    background_color: tuple = (0, 177, 64)
    light_direction: tuple = (-0.4, -0.8, 0.6)

    def __post_init__(self):
        if not 0.0 <= self.azimuth <= 180.0:
            raise ConfigError("azimuth must lie in [0, 180] degrees")
        if not 0.0 <= self.elevation <= 90.0:
            raise ConfigError("elevation must lie in [0, 90] degrees")
        if not self.clothing_bulk >= 1.0:
            raise ConfigError("clothing_bulk must be >= 1")
        if not 3.0 <= self.speed <= 12.0:
            raise ConfigError("speed must lie in [3, 12] km/h")
        if not 0.0 <= self.boundary_noise < 1.0:
            raise ConfigError("boundary_noise must lie in [0, 1)")
        if self.occluder is not None:
            r0, c0, r1, c1 = self.occluder
            if not (r1 > r0 and c1 > c0):
                raise ConfigError("occluder must be (row0, col0, row1, col1) with positive extent")
        if len(self.background_color) != 3 or not all(0 <= c <= 255 for c in self.background_color):
            raise ConfigError("background_color must be an RGB triple in [0, 255]")
        if np.linalg.norm(self.light_direction) == 0:
            raise ConfigError("light_direction must be non-zero")


def viewpoint_grid(azimuth_step=5.0, elevation_step=5.0):
    """All (azimuth, elevation) pairs covering [0, 180] x [0, 90] inclusive."""
    az = np.arange(0.0, 180.0 + 1e-9, azimuth_step)
    el = np.arange(0.0, 90.0 + 1e-9, elevation_step)
    return [(float(a), float(e)) for a, e in itertools.product(az, el)]


@dataclass(frozen=True)
class Camera:
    """Viewing setup.

    For ``projection="orthographic"`` the image scale is
    ``focal_length / distance`` pixels per millimetre, i.e. the scale a
    perspective camera has at the target depth.
    """

    azimuth: float = 0.0
    elevation: float = 0.0
    distance: float = 5000.0
    projection: str = "orthographic"
    focal_length: float = 450.0
    width: int = 120
    height: int = 180
    target: tuple = (0.0, 0.0, 900.0)

    def __post_init__(self):
        if self.projection not in ("orthographic", "perspective"):
            raise ConfigError("projection must be 'orthographic' or 'perspective'")
        if not (self.width > 0 and self.height > 0):
            raise ConfigError("image dimensions must be positive")
        if not (self.distance > 0 and self.focal_length > 0):
            raise ConfigError("distance and focal_length must be positive")

    @classmethod
    def from_confounders(cls, confounders, **kwargs):
        return cls(azimuth=confounders.azimuth, elevation=confounders.elevation, **kwargs)

    def basis(self):
        """(right, up, view direction) unit vectors in world coordinates."""
        a, e = np.radians(self.azimuth), np.radians(self.elevation)
        to_camera = np.array([np.sin(a) * np.cos(e), -np.cos(a) * np.cos(e), np.sin(e)])
        right = np.array([np.cos(a), np.sin(a), 0.0])
        view = -to_camera
        up = np.cross(right, view)
        return right, up, view

    def rays(self):
        """Ray origins and unit directions for every pixel centre, row-major."""
        right, up, view = self.basis()
        target = np.asarray(self.target, dtype=float)
        cols = np.arange(self.width) + 0.5 - self.width / 2.0
        rows = self.height / 2.0 - (np.arange(self.height) + 0.5)
        x, y = np.meshgrid(cols, rows)
        x, y = x.ravel(), y.ravel()
        eye = target - self.distance * view
        if self.projection == "orthographic":
            s = self.focal_length / self.distance
            origins = eye + np.outer(x / s, right) + np.outer(y / s, up)
            dirs = np.broadcast_to(view, origins.shape)
        else:
            d = self.focal_length * view + np.outer(x, right) + np.outer(y, up)
            dirs = d / np.linalg.norm(d, axis=1, keepdims=True)
            origins = np.broadcast_to(eye, dirs.shape)
        return origins, dirs


# ---------------------------------------------------------------------------
# kinematics


def stride_frequency(speed, cadence_bias=1.0):
    """Full gait cycles per second at ``speed`` km/h."""
    return (0.5 + 0.08 * speed) * cadence_bias


def walker_skeleton(identity):
    """Rest-pose skeleton (standing, arms down) for ``identity``."""
    L = identity.segment_lengths
    hw, sw = identity.hip_width / 2.0, identity.shoulder_width / 2.0
    ankle_height = identity.segment_radii["foot"]
    spec = {
        "pelvis": (None, (0, 0, identity.leg_length + ankle_height)),
        "spine": ("pelvis", (0, 0, L["torso"] / 2)),
        "chest": ("spine", (0, 0, L["torso"] / 2)),
        "neck": ("chest", (0, 0, 0.35 * L["neck_head"])),
        "head": ("neck", (0, 0, 0.40 * L["neck_head"])),
        "l_shoulder": ("chest", (0, sw, 0)),
        "l_elbow": ("l_shoulder", (0, 0, -L["upper_arm"])),
        "l_wrist": ("l_elbow", (0, 0, -L["forearm"])),
        "r_shoulder": ("chest", (0, -sw, 0)),
        "r_elbow": ("r_shoulder", (0, 0, -L["upper_arm"])),
        "r_wrist": ("r_elbow", (0, 0, -L["forearm"])),
        "l_hip": ("pelvis", (0, hw, 0)),
        "l_knee": ("l_hip", (0, 0, -L["thigh"])),
        "l_ankle": ("l_knee", (0, 0, -L["shank"])),
        "l_toe": ("l_ankle", (L["foot"], 0, 0)),
        "r_hip": ("pelvis", (0, -hw, 0)),
        "r_knee": ("r_hip", (0, 0, -L["thigh"])),
        "r_ankle": ("r_knee", (0, 0, -L["shank"])),
        "r_toe": ("r_ankle", (L["foot"], 0, 0)),
    }
    index = {n: i for i, n in enumerate(JOINT_NAMES)}
    joints = []
    for name in JOINT_NAMES:
        parent, offset = spec[name]
        joints.append(mocap.JointDef(name, None if parent is None else index[parent], offset))
    return mocap.Skeleton(joints)


def _pitch(angle_rad):
    """Quaternions for rotations about the lateral (y) axis."""
    half = 0.5 * np.asarray(angle_rad, dtype=float)
    z = np.zeros_like(half)
    return np.stack([np.cos(half), z, np.sin(half), z], axis=-1)


def synthesize_kinematics(identity, speed, duration, fps):
    """Walking motion for ``identity`` on a treadmill at ``speed`` km/h.

    Hips swing sinusoidally in antiphase; each knee follows a rectified
    sinusoid a quarter cycle behind its hip; arms swing against the
    ipsilateral leg, offset by ``phase_quirk``; ankles keep the feet level and
    the pelvis bobs at twice the stride frequency.
    """
    if not 3.0 <= speed <= 12.0:
        raise ConfigError("speed must lie in [3, 12] km/h")
    if not (duration > 0 and fps > 0):
        raise ConfigError("duration and fps must be positive")
    n = int(round(duration * fps))
    if n < 1:
        raise ConfigError("duration * fps must give at least one frame")
    f = stride_frequency(speed, identity.cadence_bias)
    psi = 2.0 * np.pi * f * np.arange(n) / fps
    A_h = np.radians(identity.hip_amplitude)
    A_k = np.radians(identity.knee_amplitude)
    A_a = np.radians(identity.arm_amplitude)

    index = {name: i for i, name in enumerate(JOINT_NAMES)}
    rot = np.zeros((n, len(JOINT_NAMES), 4))
    rot[..., 0] = 1.0
    for side, leg_phase in (("l", 0.0), ("r", np.pi)):
        hip = A_h * np.sin(psi + leg_phase)
        knee = A_k * np.maximum(0.0, np.sin(psi + leg_phase - np.pi / 2))
        # forward flexion is a negative rotation about +y
        rot[:, index[f"{side}_hip"]] = _pitch(-hip)
        rot[:, index[f"{side}_knee"]] = _pitch(knee)
        rot[:, index[f"{side}_ankle"]] = _pitch(hip - knee)
        arm_phase = psi + leg_phase + np.pi + identity.phase_quirk
        arm = A_a * np.sin(arm_phase)
        elbow = 0.25 * A_a * (1.0 + np.sin(arm_phase))
        rot[:, index[f"{side}_shoulder"]] = _pitch(-arm)
        rot[:, index[f"{side}_elbow"]] = _pitch(-elbow)

    # no bob for a walker that does not swing its legs
    bob = 0.02 * identity.leg_length if identity.hip_amplitude > 0 else 0.0
    translation = np.zeros((n, 3))
    translation[:, 2] = bob * np.cos(2.0 * psi)
    return mocap.MotionClip(walker_skeleton(identity), fps, quat.canonical(rot), translation)


# ---------------------------------------------------------------------------
# capsule avatar


@dataclass(frozen=True)
class Capsule:
    """Segment ``a``-``b`` swept by a sphere of ``radius``; a sphere if a == b."""

    a: np.ndarray
    b: np.ndarray
    radius: float
    segment: str = ""


def pose_capsules(transforms, identity, clothing_bulk=1.0):
    """One capsule per bone plus a head sphere.

    ``transforms`` is a per-joint list of world transforms (see
    :func:`gaitsynth.mocap.forward_kinematics`) or an ``(J, 3)`` array of
    world joint positions, ordered as :data:`JOINT_NAMES`.
    """
    if clothing_bulk < 1.0:
        raise ConfigError("clothing_bulk must be >= 1")
    if isinstance(transforms, np.ndarray):
        pos = transforms
    else:
        pos = np.array([t.translation for t in transforms])
    index = {name: i for i, name in enumerate(JOINT_NAMES)}
    radii = identity.segment_radii
    caps = []
    for parent, child, segment in BONES:
        if segment == "neck":
            r = NECK_RADIUS_FRACTION * radii["neck_head"]
        else:
            r = radii[segment]
        caps.append(Capsule(pos[index[parent]], pos[index[child]], r * clothing_bulk, segment))
    head = pos[index["head"]]
    caps.append(Capsule(head, head, radii["neck_head"] * clothing_bulk, "head"))
    return caps


def _capsule_arrays(capsules):
    a = np.array([c.a for c in capsules], dtype=float)
    b = np.array([c.b for c in capsules], dtype=float)
    r = np.array([c.radius for c in capsules], dtype=float)
    return a, b, r


def _intersect(capsules, camera, need_surface):
    """Ray/capsule tests for all pixels.

    Returns the hit mask ``(P, C)`` and, when ``need_surface``, the entry
    distance along each ray and the closest axis point parameter.
    """
    if not capsules:
        raise ConfigError("no capsules to render")
    origins, dirs = camera.rays()
    a, b, r = _capsule_arrays(capsules)
    w = b - a                                    # (C, 3)
    q0 = a[None, :, :] - origins[:, None, :]     # (P, C, 3)
    qu = np.einsum("pck,pk->pc", q0, dirs)
    wu = dirs @ w.T                              # (P, C)
    ww = np.einsum("ck,ck->c", w, w)
    qw = np.einsum("pck,ck->pc", q0, w)
    # squared line distance D(s) = A s^2 + 2 B s + C0
    A = ww[None, :] - wu * wu
    B = qw - qu * wu
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(A > 1e-12, -B / A, 0.0)
    s = np.clip(s, 0.0, 1.0)
    along = qu + s * wu
    dist2 = np.einsum("pck,pck->pc", q0, q0) + 2 * s * qw + s * s * ww[None, :] - along * along
    hit = (dist2 <= (r * r)[None, :]) & (along > 0)
    if not need_surface:
        return hit, None, None, (origins, dirs, a, w, r)
    depth = along - np.sqrt(np.maximum(r[None, :] ** 2 - dist2, 0.0))
    return hit, depth, s, (origins, dirs, a, w, r)


def _raster_orthographic(capsules, camera, light_direction):
    """Image-space rasterizer for parallel rays.

    With parallel rays the ray/capsule distance equals the 2-D distance from
    the pixel centre to the projected segment, so each capsule is tested only
    inside its projected bounding box. Returns (mask, colour or None).
    """
    right, up, view = camera.basis()
    target = np.asarray(camera.target, dtype=float)
    eye = target - camera.distance * view
    scale = camera.focal_length / camera.distance
    H, W = camera.height, camera.width
    mask = np.zeros((H, W), dtype=bool)
    shade = light_direction is not None
    if shade:
        depth = np.full((H, W), np.inf)
        color = np.zeros((H, W, 3))
        light = np.asarray(light_direction, dtype=float)
        light = light / np.linalg.norm(light)

    for cap in capsules:
        ends = np.array([cap.a, cap.b], dtype=float) - target
        cx = W / 2.0 + scale * (ends @ right)
        cy = H / 2.0 - scale * (ends @ up)
        z = (np.array([cap.a, cap.b], dtype=float) - eye) @ view
        rp = cap.radius * scale
        c0 = max(int(np.floor(min(cx) - rp - 0.5)), 0)
        c1 = min(int(np.ceil(max(cx) + rp + 0.5)), W)
        r0 = max(int(np.floor(min(cy) - rp - 0.5)), 0)
        r1 = min(int(np.ceil(max(cy) + rp + 0.5)), H)
        if c0 >= c1 or r0 >= r1 or max(z) + cap.radius <= 0:
            continue
        px = np.arange(c0, c1) + 0.5
        py = np.arange(r0, r1) + 0.5
        dx = px[None, :] - cx[0]
        dy = py[:, None] - cy[0]
        ex, ey = cx[1] - cx[0], cy[1] - cy[0]
        ee = ex * ex + ey * ey
        t = np.clip((dx * ex + dy * ey) / ee, 0.0, 1.0) if ee > 0 else np.zeros_like(dx * dy)
        ox = dx - t * ex
        oy = dy - t * ey
        d2 = ox * ox + oy * oy
        hit = (d2 <= rp * rp) & ((z[0] + t * (z[1] - z[0])) > 0)
        if not hit.any():
            continue
        mask[r0:r1, c0:c1] |= hit
        if not shade:
            continue
        # depth of the entry point and the sphere normal around the axis point
        h = np.sqrt(np.maximum(rp * rp - d2, 0.0)) / scale
        entry = z[0] + t * (z[1] - z[0]) - h
        closer = hit & (entry < depth[r0:r1, c0:c1])
        if not closer.any():
            continue
        n = ((ox / scale)[..., None] * right - (oy / scale)[..., None] * up
             - h[..., None] * view) / cap.radius
        lambert = np.clip(n @ light, 0.0, 1.0)
        base = np.array(BASE_COLORS[cap.segment or "torso"], dtype=float)
        col = base * (AMBIENT + (1.0 - AMBIENT) * lambert)[..., None]
        region_d = depth[r0:r1, c0:c1]
        region_c = color[r0:r1, c0:c1]
        region_d[closer] = entry[closer]
        region_c[closer] = col[closer]
    return mask, (color if shade else None)


def render_silhouette(capsules, camera):
    """Binary mask: a pixel is foreground iff its ray meets any capsule."""
    if not capsules:
        raise ConfigError("no capsules to render")
    if camera.projection == "orthographic":
        mask, _ = _raster_orthographic(capsules, camera, None)
    else:
        hit, _, _, _ = _intersect(capsules, camera, need_surface=False)
        mask = hit.any(axis=1).reshape(camera.height, camera.width)
    if not mask.any():
        raise AvatarOutOfFrame("avatar projects entirely outside the frame")
    return mask


def _shade(capsules, camera, light_direction):
    """Return (mask, rgb float image) with Lambert shading and a depth test."""
    if not capsules:
        raise ConfigError("no capsules to render")
    if camera.projection == "orthographic":
        return _raster_orthographic(capsules, camera, light_direction)
    hit, depth, s, (origins, dirs, a, w, r) = _intersect(capsules, camera, need_surface=True)
    mask = hit.any(axis=1)
    depth = np.where(hit, depth, np.inf)
    front = np.argmin(depth, axis=1)
    rows = np.arange(len(front))
    t = depth[rows, front]
    t = np.where(mask, t, 0.0)
    point = origins + t[:, None] * dirs
    axis_pt = a[front] + s[rows, front][:, None] * w[front]
    normal = point - axis_pt
    norm = np.linalg.norm(normal, axis=1, keepdims=True)
    normal = np.where(norm > 0, normal / np.where(norm > 0, norm, 1.0), -dirs)
    light = np.asarray(light_direction, dtype=float)
    light = light / np.linalg.norm(light)
    lambert = np.clip(normal @ light, 0.0, 1.0)
    base = np.array([BASE_COLORS[c.segment or "torso"] for c in capsules], dtype=float)
    color = base[front] * (AMBIENT + (1.0 - AMBIENT) * lambert)[:, None]
    shape = (camera.height, camera.width)
    return mask.reshape(shape), color.reshape(shape + (3,))


def _boundary(mask):
    """Pixels with a 4-neighbour of the opposite class."""
    p = np.pad(mask, 1, mode="edge")
    c = p[1:-1, 1:-1]
    return ((p[:-2, 1:-1] != c) | (p[2:, 1:-1] != c)
            | (p[1:-1, :-2] != c) | (p[1:-1, 2:] != c))


def _separate(rgb, background, margin=KEY_MARGIN):
    """Push foreground colours at least ``margin`` away from the background."""
    bg = np.asarray(background, dtype=int)
    diff = np.abs(rgb.astype(int) - bg).max(axis=-1)
    close = diff <= margin
    if close.any():
        # move the channel farthest from its range end by margin + 1
        pushed = rgb[close].astype(int)
        up = bg < 128
        pushed[:, 0] = np.where(up[0], bg[0] + margin + 1, bg[0] - margin - 1)
        rgb = rgb.copy()
        rgb[close] = np.clip(pushed, 0, 255).astype(np.uint8)
    return rgb


def frame_rng(seed, frame_index):
    """Counter-style random stream keyed by (sequence seed, frame index)."""
    return np.random.default_rng([int(seed), int(frame_index)])


def render_shaded(capsules, camera, confounders, seed=0, frame_index=0):
    """RGB uint8 frame of the avatar over a uniform background.

    Boundary noise flips each silhouette-boundary pixel with probability
    ``confounders.boundary_noise``; draws come from a stream keyed by
    ``(seed, frame_index)`` and indexed by pixel, so every frame is
    reproducible independently of the others.
    """
    mask, color = _shade(capsules, camera, confounders.light_direction)
    return _compose(mask, color, confounders, seed, frame_index)


def _compose(mask, color, confounders, seed, frame_index):
    if not mask.any():
        raise AvatarOutOfFrame("avatar projects entirely outside the frame")
    bg = np.asarray(confounders.background_color, dtype=np.uint8)
    fg = np.clip(np.floor(color + 0.5), 0, 255).astype(np.uint8)
    fg = _separate(fg, bg)
    img = np.where(mask[..., None], fg, bg)

    if confounders.boundary_noise > 0:
        u = frame_rng(seed, frame_index).random(mask.size).reshape(mask.shape)
        flip = _boundary(mask) & (u < confounders.boundary_noise)
        off = flip & mask
        on = flip & ~mask
        img[off] = bg
        if on.any():
            # borrow the colour of a foreground 4-neighbour
            h, w = mask.shape
            pm = np.pad(mask, 1)
            pi = np.pad(img, ((1, 1), (1, 1), (0, 0)))
            fill = np.zeros_like(img)
            done = np.zeros_like(mask)
            for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                nm = pm[1 + dr:1 + dr + h, 1 + dc:1 + dc + w]
                ni = pi[1 + dr:1 + dr + h, 1 + dc:1 + dc + w]
                take = on & nm & ~done
                fill[take] = ni[take]
                done |= take
            img[on] = fill[on]

    if confounders.occluder is not None:
        r0, c0, r1, c1 = confounders.occluder
        img[max(r0, 0):max(r1, 0), max(c0, 0):max(c1, 0)] = OCCLUDER_COLOR
    return img


# ---------------------------------------------------------------------------
# sequences


@dataclass
class Sequence:
    """Rendered sequence plus ground truth.

    ``masks`` are the noise-free renderer silhouettes; ``boundaries`` are the
    ground-truth cycles as half-open ``(start, end)`` frame ranges.
    """

    frames: np.ndarray
    masks: np.ndarray
    background: np.ndarray
    boundaries: list
    stride_frequency: float
    fps: float
    identity: WalkerIdentity = field(repr=False)
    confounders: ConfounderConfig = field(repr=False)


def ground_truth_boundaries(frequency, fps, n_frames):
    """Cycle ranges between consecutive left full-stride instants."""
    k = np.arange(0, int(n_frames * frequency / fps) + 2)
    instants = np.floor((0.25 + k) / frequency * fps + 0.5).astype(int)
    instants = instants[instants < n_frames]
    return [(int(s), int(e)) for s, e in zip(instants[:-1], instants[1:])]


def render_frame(identity, confounders, camera, positions, seed, frame_index):
    """Render one frame from world joint positions; returns (rgb, clean mask)."""
    caps = pose_capsules(positions, identity, confounders.clothing_bulk)
    mask, color = _shade(caps, camera, confounders.light_direction)
    return _compose(mask, color, confounders, seed, frame_index), mask


def generate_sequence(identity, confounders, duration, fps, seed, camera=None):
    """Synthesize, pose and render a full sequence.

    The output depends only on the arguments: frames are rendered
    independently with per-frame random streams.
    """
    if camera is None:
        camera = Camera.from_confounders(confounders)
    else:
        camera = replace(camera, azimuth=confounders.azimuth, elevation=confounders.elevation)
    clip = synthesize_kinematics(identity, confounders.speed, duration, fps)
    world = mocap.forward_kinematics_positions(clip.skeleton, clip.rotations, clip.root_translation)
    frames = np.empty((len(clip), camera.height, camera.width, 3), dtype=np.uint8)
    masks = np.empty((len(clip), camera.height, camera.width), dtype=bool)
    for i in range(len(clip)):
        frames[i], masks[i] = render_frame(identity, confounders, camera, world[i], seed, i)
    background = np.empty((camera.height, camera.width, 3), dtype=np.uint8)
    background[:] = confounders.background_color
    f = stride_frequency(confounders.speed, identity.cadence_bias)
    return Sequence(frames, masks, background, ground_truth_boundaries(f, fps, len(clip)),
                    f, fps, identity, confounders)
