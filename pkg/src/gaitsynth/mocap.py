"""Motion-capture data model, parsers, resampling, retargeting and kinematics.

Skeleton joints are stored in topological order (parent index < own index).
Offsets are in millimetres; rotations are unit quaternions ``(w, x, y, z)``
relative to the parent joint frame.

Two text formats are supported:

* a BVH subset (ROOT/JOINT/End Site, OFFSET, CHANNELS of 3 rotations or of
  3 positions + 3 rotations on the root, one MOTION row per frame);
* a joint-stream CSV with header ``frame,joint,px,py,pz,qw,qx,qy,qz``
  preceded by ``#joint name parent ox oy oz`` skeleton lines and an optional
  ``#rate FPS`` line.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from . import quat
from .errors import (
    ChannelMismatch,
    ConfigError,
    EmptyClip,
    IncompatibleHierarchy,
    MalformedNumber,
    MissingJointRow,
    MissingSection,
    NonUnitQuaternion,
    ParseError,
    UnknownJointName,
    UnmappedJoint,
    UnsupportedChannelOrder,
)

UNIT_TOLERANCE = 1e-6
CSV_NORM_TOLERANCE = 1e-3
DEFAULT_CSV_RATE = 200.0

_ROOT_CHANNELS = ("Xposition", "Yposition", "Zposition", "Zrotation", "Xrotation", "Yrotation")
_JOINT_CHANNELS = ("Zrotation", "Xrotation", "Yrotation")


@dataclass(eq=False)
class JointDef:
    """One skeleton joint.

    ``channels`` and ``end_site`` only matter for BVH serialization.
    """

    name: str
    parent: int | None
    rest_offset: np.ndarray
    rest_orientation: np.ndarray = field(default_factory=lambda: quat.IDENTITY.copy())
    channels: tuple = ()
    end_site: np.ndarray | None = None

    def __post_init__(self):
        self.rest_offset = np.asarray(self.rest_offset, dtype=float).reshape(3)
        self.rest_orientation = np.asarray(self.rest_orientation, dtype=float).reshape(4)
        if abs(np.linalg.norm(self.rest_orientation) - 1.0) > UNIT_TOLERANCE:
            raise ConfigError(f"joint {self.name!r}: rest_orientation is not unit norm")
        if self.end_site is not None:
            self.end_site = np.asarray(self.end_site, dtype=float).reshape(3)
        self.channels = tuple(self.channels)


class Skeleton:
    """Ordered, acyclic joint hierarchy with exactly one root (index 0)."""

    def __init__(self, joints):
        self.joints = tuple(joints)
        if not self.joints:
            raise ConfigError("skeleton has no joints")
        names = [j.name for j in self.joints]
        if len(set(names)) != len(names):
            raise ConfigError("joint names must be unique")
        roots = [i for i, j in enumerate(self.joints) if j.parent is None]
        if roots != [0]:
            raise ConfigError("skeleton must have exactly one root, at index 0")
        for i, j in enumerate(self.joints[1:], start=1):
            if not 0 <= j.parent < i:
                raise ConfigError(f"joint {j.name!r}: parent index must precede the joint")
        self._index = {n: i for i, n in enumerate(names)}

    def __len__(self):
        return len(self.joints)

    def __iter__(self):
        return iter(self.joints)

    @property
    def names(self):
        return [j.name for j in self.joints]

    @property
    def parents(self):
        return [j.parent for j in self.joints]

    def index(self, name):
        try:
            return self._index[name]
        except KeyError:
            raise UnknownJointName(f"unknown joint {name!r}") from None

    def children(self, i):
        return [k for k, j in enumerate(self.joints) if j.parent == i]

    def rest_world_orientations(self):
        """World orientation of every joint frame in the rest pose."""
        out = np.empty((len(self), 4))
        for i, j in enumerate(self.joints):
            parent = quat.IDENTITY if j.parent is None else out[j.parent]
            out[i] = quat.multiply(parent, j.rest_orientation)
        return out

    def rest_positions(self):
        """World joint positions in the rest pose (root at its offset)."""
        rot = np.broadcast_to(quat.IDENTITY, (1, len(self), 4))
        return forward_kinematics_positions(self, rot, np.zeros((1, 3)))[0]

    def same_as(self, other, atol=0.0):
        if len(self) != len(other):
            return False
        for a, b in zip(self.joints, other.joints):
            if a.name != b.name or a.parent != b.parent:
                return False
            if not np.allclose(a.rest_offset, b.rest_offset, rtol=0, atol=atol):
                return False
            if not np.allclose(a.rest_orientation, b.rest_orientation, rtol=0, atol=atol):
                return False
        return True


@dataclass
class JointPose:
    rotation: np.ndarray
    translation: np.ndarray | None = None


class MotionClip:
    """Skeleton plus per-frame joint rotations sampled at ``rate`` fps.

    Parameters
    ----------
    skeleton : Skeleton
    rate : float
        Frames per second.
    rotations : array, shape (frames, joints, 4)
        Per-joint local rotations, normalized and canonicalized on input.
    root_translation : array, shape (frames, 3), optional
        Root translation per frame; zeros when omitted.
    """

    def __init__(self, skeleton, rate, rotations, root_translation=None):
        rotations = np.asarray(rotations, dtype=float)
        if rotations.ndim != 3 or rotations.shape[0] == 0:
            raise EmptyClip("motion clip has no frames")
        if rotations.shape[1:] != (len(skeleton), 4):
            raise ConfigError("rotations must have shape (frames, joints, 4)")
        if not rate > 0:
            raise ConfigError("rate must be positive")
        norms = np.linalg.norm(rotations, axis=-1)
        if np.any(np.abs(norms - 1.0) > UNIT_TOLERANCE):
            raise ConfigError("all rotations must be unit quaternions")
        self.skeleton = skeleton
        self.rate = float(rate)
        self.rotations = quat.canonical(rotations)
        if root_translation is None:
            root_translation = np.zeros((rotations.shape[0], 3))
        self.root_translation = np.asarray(root_translation, dtype=float).reshape(-1, 3)
        if len(self.root_translation) != len(self.rotations):
            raise ConfigError("root_translation length must match frame count")

    def __len__(self):
        return len(self.rotations)

    @property
    def duration(self):
        return (len(self) - 1) / self.rate

    def frame(self, i):
        """Frame ``i`` as a list of :class:`JointPose`."""
        poses = [JointPose(self.rotations[i, j].copy()) for j in range(len(self.skeleton))]
        poses[0].translation = self.root_translation[i].copy()
        return poses

    @property
    def frames(self):
        return [self.frame(i) for i in range(len(self))]

    def same_as(self, other, atol=0.0):
        """Field-by-field comparison with absolute tolerance ``atol``."""
        if not self.skeleton.same_as(other.skeleton, atol=atol):
            return False
        if self.rate != other.rate or len(self) != len(other):
            return False
        if not np.allclose(self.root_translation, other.root_translation, rtol=0, atol=atol):
            return False
        return bool(np.allclose(self.rotations, other.rotations, rtol=0, atol=atol))


# ---------------------------------------------------------------------------
# BVH


def _number(token, line):
    try:
        value = float(token)
    except ValueError:
        raise MalformedNumber(f"not a number: {token!r}", line) from None
    if not np.isfinite(value):
        raise MalformedNumber(f"non-finite number: {token!r}", line)
    return value


def _channel_layout(channels, is_root, line):
    """Split a CHANNELS list into (position order, rotation order)."""
    kinds = [c[1:] for c in channels]
    axes = [c[0].upper() for c in channels]
    valid = all(k in ("position", "rotation") for k in kinds) and all(a in "XYZ" for a in axes)
    if not valid:
        raise UnsupportedChannelOrder(f"unsupported channel names {channels}", line)
    if len(channels) == 3 and kinds == ["rotation"] * 3:
        positions, rotations = "", "".join(axes)
    elif len(channels) == 6 and is_root and kinds == ["position"] * 3 + ["rotation"] * 3:
        positions, rotations = "".join(axes[:3]), "".join(axes[3:])
    else:
        raise UnsupportedChannelOrder(
            f"expected 3 rotation channels (or 3 position + 3 rotation on the root), got {channels}", line)
    if len(set(rotations)) != 3 or (positions and len(set(positions)) != 3):
        raise UnsupportedChannelOrder(f"repeated axis in channels {channels}", line)
    return positions, rotations


class _Tokens:
    def __init__(self, lines):
        self.items = [(tok, n) for n, text in lines for tok in text.split()]
        self.pos = 0

    def next(self, what):
        if self.pos >= len(self.items):
            last = self.items[-1][1] if self.items else None
            raise ParseError(f"unexpected end of HIERARCHY, expected {what}", last)
        item = self.items[self.pos]
        self.pos += 1
        return item

    def expect(self, word):
        tok, line = self.next(word)
        if tok != word:
            raise ParseError(f"expected {word!r}, found {tok!r}", line)
        return line


def parse_bvh(text):
    """Parse a BVH document into a :class:`MotionClip`.

    Raises
    ------
    MissingSection, ChannelMismatch, MalformedNumber, UnsupportedChannelOrder
        With 1-based line numbers where applicable.
    """
    lines = text.splitlines()
    starts = {}
    for n, raw in enumerate(lines, start=1):
        word = raw.strip().split(maxsplit=1)[0] if raw.strip() else ""
        if word in ("HIERARCHY", "MOTION") and word not in starts:
            starts[word] = n
    if "HIERARCHY" not in starts:
        raise MissingSection("no HIERARCHY section")
    if "MOTION" not in starts:
        raise MissingSection("no MOTION section")
    h0, m0 = starts["HIERARCHY"], starts["MOTION"]
    if m0 < h0:
        raise MissingSection("MOTION precedes HIERARCHY", m0)

    toks = _Tokens([(n, lines[n - 1]) for n in range(h0 + 1, m0)])
    joints = []
    layouts = []

    def parse_joint(parent, keyword_line, is_root):
        name, _ = toks.next("joint name")
        toks.expect("{")
        offset_line = toks.expect("OFFSET")
        offset = [_number(toks.next("offset")[0], offset_line) for _ in range(3)]
        ch_line = toks.expect("CHANNELS")
        count_tok, _ = toks.next("channel count")
        try:
            count = int(count_tok)
        except ValueError:
            raise MalformedNumber(f"bad channel count {count_tok!r}", ch_line) from None
        channels = [toks.next("channel name")[0] for _ in range(count)]
        layout = _channel_layout(channels, is_root, ch_line)
        index = len(joints)
        joints.append(JointDef(name, parent, offset, channels=channels))
        layouts.append(layout)
        while True:
            tok, line = toks.next("JOINT, End Site or '}'")
            if tok == "}":
                return
            if tok == "JOINT":
                parse_joint(index, line, False)
            elif tok == "End":
                site_tok, _ = toks.next("Site")
                if site_tok != "Site":
                    raise ParseError(f"expected 'Site', found {site_tok!r}", line)
                toks.expect("{")
                site_line = toks.expect("OFFSET")
                joints[index].end_site = np.array(
                    [_number(toks.next("offset")[0], site_line) for _ in range(3)])
                toks.expect("}")
            else:
                raise ParseError(f"unexpected token {tok!r}", line)

    tok, line = toks.next("ROOT")
    if tok != "ROOT":
        raise ParseError(f"expected 'ROOT', found {tok!r}", line)
    parse_joint(None, line, True)
    if toks.pos != len(toks.items):
        raise ParseError("trailing tokens after root joint", toks.items[toks.pos][1])
    skeleton = Skeleton(joints)

    # MOTION section
    body = [(n, lines[n - 1].strip()) for n in range(m0 + 1, len(lines) + 1)]
    body = [(n, s) for n, s in body if s]
    if len(body) < 2:
        raise MissingSection("MOTION section lacks 'Frames:' and 'Frame Time:'", m0)
    n_line, frames_text = body[0]
    t_line, time_text = body[1]
    if not frames_text.startswith("Frames:"):
        raise MissingSection("expected 'Frames:'", n_line)
    if not time_text.startswith("Frame Time:"):
        raise MissingSection("expected 'Frame Time:'", t_line)
    n_frames_f = _number(frames_text.split(":", 1)[1].strip(), n_line)
    if n_frames_f != int(n_frames_f) or n_frames_f < 0:
        raise MalformedNumber("frame count must be a non-negative integer", n_line)
    n_frames = int(n_frames_f)
    frame_time = _number(time_text.split(":", 1)[1].strip(), t_line)
    if frame_time <= 0:
        raise MalformedNumber("frame time must be positive", t_line)
    rows = body[2:]
    total = sum(len(j.channels) for j in joints)
    if len(rows) != n_frames:
        raise ChannelMismatch(f"declared {n_frames} frames but found {len(rows)} rows",
                              rows[-1][0] if rows else t_line)
    if n_frames == 0:
        raise EmptyClip("BVH document has no frames")

    rotations = np.empty((n_frames, len(joints), 4))
    root_translation = np.zeros((n_frames, 3))
    for f, (line, row) in enumerate(rows):
        values = row.split()
        if len(values) != total:
            raise ChannelMismatch(f"row has {len(values)} values, {total} channels declared", line)
        values = [_number(v, line) for v in values]
        k = 0
        for j, (positions, order) in enumerate(layouts):
            if positions:
                for axis, v in zip(positions, values[k:k + 3]):
                    root_translation[f, "XYZ".index(axis)] = v
                k += 3
            rotations[f, j] = quat.canonical(quat.from_euler(values[k:k + 3], order))
            k += 3
    return MotionClip(skeleton, 1.0 / frame_time, rotations, root_translation)


def _fmt(x):
    return repr(float(x))


def write_bvh(clip):
    """Serialize ``clip`` as BVH text (inverse of :func:`parse_bvh`).

    Joints without stored channel lists get ``Zrotation Xrotation Yrotation``
    (plus X/Y/Z positions on the root).
    """
    sk = clip.skeleton
    for j in sk:
        if not np.allclose(j.rest_orientation, quat.IDENTITY):
            raise ConfigError(f"joint {j.name!r}: BVH cannot store a rest orientation")
    channels = [j.channels or (_ROOT_CHANNELS if j.parent is None else _JOINT_CHANNELS) for j in sk]
    layouts = [_channel_layout(list(c), j.parent is None, None) for c, j in zip(channels, sk)]

    out = ["HIERARCHY"]

    def emit(i, depth):
        j = sk.joints[i]
        pad = "  " * depth
        out.append(f"{pad}{'ROOT' if j.parent is None else 'JOINT'} {j.name}")
        out.append(pad + "{")
        out.append(f"{pad}  OFFSET {' '.join(_fmt(v) for v in j.rest_offset)}")
        out.append(f"{pad}  CHANNELS {len(channels[i])} {' '.join(channels[i])}")
        for c in sk.children(i):
            emit(c, depth + 1)
        if j.end_site is not None:
            out.append(f"{pad}  End Site")
            out.append(pad + "  {")
            out.append(f"{pad}    OFFSET {' '.join(_fmt(v) for v in j.end_site)}")
            out.append(pad + "  }")
        out.append(pad + "}")

    emit(0, 0)
    out.append("MOTION")
    out.append(f"Frames: {len(clip)}")
    out.append(f"Frame Time: {_fmt(1.0 / clip.rate)}")
    for f in range(len(clip)):
        row = []
        for j, (positions, order) in enumerate(layouts):
            if positions:
                row.extend(clip.root_translation[f, "XYZ".index(a)] for a in positions)
            row.extend(quat.to_euler(clip.rotations[f, j], order))
        out.append(" ".join(_fmt(v) for v in row))
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# joint-stream CSV

CSV_HEADER = ["frame", "joint", "px", "py", "pz", "qw", "qx", "qy", "qz"]


def parse_joint_csv(text):
    """Parse the joint-stream CSV format into a :class:`MotionClip`.

    Quaternions whose norm deviates from 1 by at most 1e-3 are normalized;
    larger deviations raise :class:`NonUnitQuaternion`. Positions of non-root
    joints are ignored (they follow from forward kinematics).
    """
    lines = text.splitlines()
    joint_rows = []
    rate = DEFAULT_CSV_RATE
    body_start = None
    for n, raw in enumerate(lines, start=1):
        s = raw.strip()
        if not s:
            continue
        if s.startswith("#joint"):
            parts = s.split()
            if len(parts) != 6:
                raise ParseError("expected '#joint name parent ox oy oz'", n)
            joint_rows.append((n, parts[1], parts[2], [_number(v, n) for v in parts[3:]]))
        elif s.startswith("#rate"):
            parts = s.split()
            if len(parts) != 2:
                raise ParseError("expected '#rate FPS'", n)
            rate = _number(parts[1], n)
            if rate <= 0:
                raise MalformedNumber("rate must be positive", n)
        elif s.startswith("#"):
            continue
        else:
            body_start = n
            break
    if not joint_rows:
        raise MissingSection("no '#joint' skeleton lines")
    if body_start is None:
        raise MissingSection("no CSV header")

    names = [r[1] for r in joint_rows]
    joints = []
    for n, name, parent, offset in joint_rows:
        if parent in ("-", "none", "None", ""):
            p = None
        elif parent in names[:len(joints)]:
            p = names.index(parent)
        else:
            raise UnknownJointName(f"parent {parent!r} of joint {name!r} is not defined above it", n)
        joints.append(JointDef(name, p, offset))
    try:
        skeleton = Skeleton(joints)
    except ConfigError as exc:
        raise ParseError(str(exc), joint_rows[0][0]) from None

    reader = csv.reader(io.StringIO("\n".join(lines[body_start - 1:])))
    header = [h.strip() for h in next(reader)]
    if header != CSV_HEADER:
        raise MissingSection(f"expected header {','.join(CSV_HEADER)}", body_start)

    frames = {}
    order = []
    for offset, row in enumerate(reader):
        line = body_start + 1 + offset
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(CSV_HEADER):
            raise ChannelMismatch(f"expected {len(CSV_HEADER)} fields, got {len(row)}", line)
        frame_tok, name = row[0].strip(), row[1].strip()
        try:
            frame_id = int(frame_tok)
        except ValueError:
            raise MalformedNumber(f"bad frame index {frame_tok!r}", line) from None
        values = [_number(v, line) for v in row[2:]]
        if name not in names:
            raise UnknownJointName(f"unknown joint {name!r}", line)
        q = np.array(values[3:])
        norm = np.linalg.norm(q)
        if abs(norm - 1.0) > CSV_NORM_TOLERANCE:
            raise NonUnitQuaternion(f"quaternion norm {norm:.6g} for joint {name!r}", line)
        if frame_id not in frames:
            if order and frame_id < order[-1]:
                raise ParseError("rows must be grouped by ascending frame", line)
            frames[frame_id] = {"line": line}
            order.append(frame_id)
        elif frame_id != order[-1]:
            raise ParseError("rows must be grouped by frame", line)
        frames[frame_id][name] = (np.array(values[:3]), q / norm)

    if not order:
        raise EmptyClip("joint CSV has no frames")
    rotations = np.empty((len(order), len(names), 4))
    root_translation = np.empty((len(order), 3))
    for f, frame_id in enumerate(order):
        rows = frames[frame_id]
        for j, name in enumerate(names):
            if name not in rows:
                raise MissingJointRow(f"frame {frame_id} lacks joint {name!r}", rows["line"])
            pos, q = rows[name]
            rotations[f, j] = q
            if j == 0:
                root_translation[f] = pos
    return MotionClip(skeleton, rate, rotations, root_translation)


def write_joint_csv(clip):
    """Serialize ``clip`` in the joint-stream CSV format.

    Non-root position columns carry forward-kinematics world positions.
    """
    sk = clip.skeleton
    out = io.StringIO()
    out.write(f"#rate {_fmt(clip.rate)}\n")
    for j in sk:
        parent = "-" if j.parent is None else sk.joints[j.parent].name
        out.write(f"#joint {j.name} {parent} {' '.join(_fmt(v) for v in j.rest_offset)}\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    world = forward_kinematics_positions(sk, clip.rotations, clip.root_translation)
    for f in range(len(clip)):
        for j, joint in enumerate(sk):
            pos = clip.root_translation[f] if j == 0 else world[f, j]
            writer.writerow([f, joint.name, *map(_fmt, pos), *map(_fmt, clip.rotations[f, j])])
    return out.getvalue()


# ---------------------------------------------------------------------------
# resampling and retargeting


def resample(clip, target_rate):
    """Resample ``clip`` to ``target_rate`` fps.

    Root translations are interpolated linearly and rotations by slerp.
    When ``clip.rate`` is an integer multiple of ``target_rate`` the output
    frames are exact copies of the corresponding input frames.
    """
    if clip is None or len(clip) == 0:
        raise EmptyClip("cannot resample an empty clip")
    if not target_rate > 0:
        raise ConfigError("target_rate must be positive")
    n_in = len(clip)
    ratio = clip.rate / target_rate
    step = round(ratio)
    if abs(ratio - step) < 1e-12 and step >= 1:
        idx = np.arange(0, n_in, step)
        return MotionClip(clip.skeleton, target_rate, clip.rotations[idx].copy(),
                          clip.root_translation[idx].copy())

    n_out = int(np.floor(clip.duration * target_rate + 1e-9)) + 1
    rotations = np.empty((n_out, len(clip.skeleton), 4))
    translation = np.empty((n_out, 3))
    for i in range(n_out):
        u = i * ratio
        i0 = min(int(np.floor(u)), n_in - 1)
        frac = u - i0
        if frac <= 1e-12 or i0 == n_in - 1:
            rotations[i] = clip.rotations[i0]
            translation[i] = clip.root_translation[i0]
            continue
        i1 = i0 + 1
        translation[i] = (1 - frac) * clip.root_translation[i0] + frac * clip.root_translation[i1]
        for j in range(len(clip.skeleton)):
            rotations[i, j] = quat.slerp(clip.rotations[i0, j], clip.rotations[i1, j], frac)
    return MotionClip(clip.skeleton, target_rate, rotations, translation)


def leg_chain_length(skeleton, up_axis=2):
    """Sum of rest-offset lengths from the root to its lowest leaf joint."""
    pos = skeleton.rest_positions()
    leaves = [i for i in range(len(skeleton)) if not skeleton.children(i)]
    lowest = min(leaves, key=lambda i: (pos[i, up_axis], i))
    total = 0.0
    j = lowest
    while skeleton.joints[j].parent is not None:
        total += float(np.linalg.norm(skeleton.joints[j].rest_offset))
        j = skeleton.joints[j].parent
    return total


def retarget(clip, target, name_map, up_axis=2):
    """Transfer ``clip`` onto the ``target`` skeleton.

    Parameters
    ----------
    clip : MotionClip
        Source motion.
    target : Skeleton
        Target rig; may differ from the source in rest orientations and
        bone lengths.
    name_map : dict
        Source joint name -> target joint name; must cover every target joint.
    up_axis : int
        World axis used to find the leg chain for height scaling.

    Notes
    -----
    Each mapped joint's rotation becomes ``O^-1 * q * O`` where ``O`` is the
    fixed rest-frame discrepancy ``B_src^-1 * B_tgt`` between the world rest
    orientations of the two joint frames. Root translation is scaled by the
    ratio of leg-chain lengths.
    """
    src = clip.skeleton
    inverse = {}
    for s_name, t_name in name_map.items():
        inverse[t_name] = s_name
    source_index = []
    for t_joint in target:
        s_name = inverse.get(t_joint.name)
        if s_name is None:
            raise UnmappedJoint(f"target joint {t_joint.name!r} has no source mapping")
        try:
            source_index.append(src.index(s_name))
        except UnknownJointName:
            raise UnmappedJoint(f"source joint {s_name!r} (for {t_joint.name!r}) not in source skeleton") from None
    for t, t_joint in enumerate(target):
        s_parent = src.joints[source_index[t]].parent
        t_parent = t_joint.parent
        expected = None if t_parent is None else source_index[t_parent]
        if s_parent != expected:
            raise IncompatibleHierarchy(f"parent of {t_joint.name!r} disagrees between rigs")

    b_src = src.rest_world_orientations()[source_index]
    b_tgt = target.rest_world_orientations()
    offset = quat.multiply(quat.conjugate(b_src), b_tgt)
    q = clip.rotations[:, source_index]
    rotations = quat.multiply(quat.multiply(quat.conjugate(offset), q), offset)

    h_src = leg_chain_length(src, up_axis)
    h_tgt = leg_chain_length(target, up_axis)
    scale = h_tgt / h_src if h_src > 0 else 1.0
    return MotionClip(target, clip.rate, rotations, clip.root_translation * scale)


# ---------------------------------------------------------------------------
# forward kinematics


@dataclass
class Transform:
    rotation: np.ndarray
    translation: np.ndarray


def forward_kinematics_quats(skeleton, rotations, root_translation):
    """World orientations and positions for a stack of frames.

    Returns ``(orientations, positions)`` with shapes ``(F, J, 4)`` and
    ``(F, J, 3)``.
    """
    rotations = np.asarray(rotations, dtype=float)
    root_translation = np.asarray(root_translation, dtype=float).reshape(-1, 3)
    n = rotations.shape[0]
    orient = np.empty((n, len(skeleton), 4))
    pos = np.empty((n, len(skeleton), 3))
    for j, joint in enumerate(skeleton.joints):
        if joint.parent is None:
            pos[:, j] = root_translation + joint.rest_offset
            orient[:, j] = quat.multiply(joint.rest_orientation, rotations[:, j])
        else:
            p = joint.parent
            pos[:, j] = pos[:, p] + quat.rotate(orient[:, p], joint.rest_offset)
            orient[:, j] = quat.multiply(orient[:, p], quat.multiply(joint.rest_orientation, rotations[:, j]))
    return orient, pos


def forward_kinematics_positions(skeleton, rotations, root_translation):
    return forward_kinematics_quats(skeleton, rotations, root_translation)[1]


def forward_kinematics(skeleton, frame):
    """World transform of every joint for one frame.

    ``frame`` is a list of :class:`JointPose`, one per joint. A joint's world
    transform is its parent's world transform, then the rest offset, the rest
    orientation and finally the pose rotation; the root also applies its pose
    translation.
    """
    rotations = np.array([p.rotation for p in frame], dtype=float)[None]
    root = frame[0].translation
    root = np.zeros(3) if root is None else np.asarray(root, dtype=float)
    orient, pos = forward_kinematics_quats(skeleton, rotations, root[None])
    mats = quat.to_matrix(orient[0])
    return [Transform(mats[j], pos[0, j]) for j in range(len(skeleton))]
