"""Small quaternion toolkit.

Quaternions are stored as numpy arrays ``(w, x, y, z)``. Functions accept a
single quaternion of shape ``(4,)`` or a stack of shape ``(..., 4)``.
"""

import numpy as np

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])

_AXES = {"X": np.array([1.0, 0.0, 0.0]),
         "Y": np.array([0.0, 1.0, 0.0]),
         "Z": np.array([0.0, 0.0, 1.0])}


def canonical(q):
    """Return the double-cover representative with non-negative scalar part."""
    q = np.asarray(q, dtype=float)
    return np.where(q[..., :1] < 0, -q, q)


def normalize(q):
    q = np.asarray(q, dtype=float)
    return q / np.linalg.norm(q, axis=-1, keepdims=True)


def multiply(a, b):
    """Hamilton product ``a * b`` (apply ``b`` first, then ``a``)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    aw, ax, ay, az = np.moveaxis(a, -1, 0)
    bw, bx, by, bz = np.moveaxis(b, -1, 0)
    return np.stack([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ], axis=-1)


def conjugate(q):
    q = np.asarray(q, dtype=float)
    return q * np.array([1.0, -1.0, -1.0, -1.0])


def from_axis_angle(axis, angle):
    """Rotation by ``angle`` radians about ``axis`` (need not be unit)."""
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    half = 0.5 * angle
    return np.concatenate([[np.cos(half)], np.sin(half) * axis])


def from_euler(angles_deg, order):
    """Compose intrinsic rotations in ``order`` (e.g. ``"ZXY"``).

    The result equals ``R_order[0] @ R_order[1] @ R_order[2]``, which is the
    BVH convention for a CHANNELS line listing rotations in that order.
    """
    q = IDENTITY.copy()
    for axis, angle in zip(order, angles_deg):
        q = multiply(q, from_axis_angle(_AXES[axis], np.radians(angle)))
    return q


def to_euler(q, order):
    """Inverse of :func:`from_euler`, in degrees."""
    from scipy.spatial.transform import Rotation

    w, x, y, z = np.asarray(q, dtype=float)
    return Rotation.from_quat([x, y, z, w]).as_euler(order.upper(), degrees=True)


def to_matrix(q):
    """Rotation matrix (or stack of matrices) for unit quaternion(s)."""
    q = np.asarray(q, dtype=float)
    w, x, y, z = np.moveaxis(q, -1, 0)
    m = np.stack([
        1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
        2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
        2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y),
    ], axis=-1)
    return m.reshape(q.shape[:-1] + (3, 3))


def rotate(q, v):
    """Rotate vector(s) ``v`` by quaternion ``q``."""
    return np.einsum("...ij,...j->...i", to_matrix(q), np.asarray(v, dtype=float))


def angle(q):
    """Rotation angle in radians, in ``[0, pi]``."""
    w = np.abs(np.clip(np.asarray(q, dtype=float)[..., 0], -1.0, 1.0))
    return 2.0 * np.arccos(w)


def slerp(a, b, t, linear_threshold=1e-5):
    """Spherical interpolation along the shortest arc.

    Falls back to normalized linear interpolation when the arc angle is below
    ``linear_threshold`` radians.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    dot = float(np.dot(a, b))
    if dot < 0.0:
        b = -b
        dot = -dot
    theta = np.arccos(min(dot, 1.0))
    if theta < linear_threshold:
        return canonical(normalize((1.0 - t) * a + t * b))
    s = np.sin(theta)
    out = (np.sin((1.0 - t) * theta) / s) * a + (np.sin(t * theta) / s) * b
    return canonical(normalize(out))
