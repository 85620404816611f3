"""Pipeline configuration: one YAML file with a section per stage.

Every field is validated on load, before any command touches the output
directory. Errors name the offending key path and its 1-based line::

    error: confounders.variants[0].speed (line 14): speed must lie in [3, 12] km/h
"""

from dataclasses import dataclass, field, replace
from itertools import product
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigError
from .features import KINDS, PROVENANCES, default_crop_grid
from .pipeline import SEGMENTATION_METHODS
from .recognition import CONDITIONS, ExperimentSpec
from .walker import (SEGMENTS, Camera, ConfounderConfig, WalkerIdentity, default_identity,
                     identity_population)

SWEEPABLE = ("azimuth", "elevation", "clothing_bulk", "speed", "boundary_noise")
CONFOUNDER_KEYS = SWEEPABLE + ("occluder", "background_color", "light_direction")
CAMERA_KEYS = ("distance", "projection", "focal_length", "width", "height")


class _Doc:
    """Plain Python data plus the source line of every key path."""

    def __init__(self, text, source="<config>"):
        try:
            node = yaml.compose(text, Loader=yaml.SafeLoader)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            where = f" (line {mark.line + 1})" if mark else ""
            raise ConfigError(f"{source}{where}: invalid YAML: {getattr(exc, 'problem', exc)}") from None
        self.lines = {}
        self.data = {} if node is None else self._walk(node, ())
        if not isinstance(self.data, dict):
            raise ConfigError(f"{source}: top level must be a mapping")

    def _walk(self, node, path):
        self.lines[path] = node.start_mark.line + 1
        if isinstance(node, yaml.MappingNode):
            out = {}
            for k, v in node.value:
                key = k.value
                if key in out:
                    raise ConfigError(f"{_dotted(path + (key,))} (line {k.start_mark.line + 1}): "
                                      "duplicate key")
                out[key] = self._walk(v, path + (key,))
                self.lines[path + (key,)] = k.start_mark.line + 1
            return out
        if isinstance(node, yaml.SequenceNode):
            return [self._walk(v, path + (i,)) for i, v in enumerate(node.value)]
        return _scalar(node)

    def line(self, path):
        while path not in self.lines and path:
            path = path[:-1]
        return self.lines.get(path, 1)

    def error(self, path, message):
        return ConfigError(f"{_dotted(path)} (line {self.line(path)}): {message}")


def _scalar(node):
    loader = yaml.SafeLoader("")
    try:
        return loader.construct_object(node)
    finally:
        loader.dispose()


def _dotted(path):
    out = ""
    for p in path:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out or "<root>"


class _Section:
    """Typed accessors over one mapping of the document."""

    def __init__(self, doc, path, allowed):
        self.doc, self.path = doc, path
        value = doc.data
        for p in path:
            if isinstance(value, dict):
                value = value.get(p, {})
            elif isinstance(value, list) and isinstance(p, int):
                value = value[p]
        if value is None:
            value = {}
        if not isinstance(value, dict):
            raise doc.error(path, "must be a mapping")
        unknown = sorted(set(value) - set(allowed))
        if unknown:
            raise doc.error(path + (unknown[0],), f"unknown key {unknown[0]!r}; "
                            f"expected one of {sorted(allowed)}")
        self.value = value

    def has(self, key):
        return key in self.value

    def raw(self, key, default=None):
        return self.value.get(key, default)

    def err(self, key, message):
        return self.doc.error(self.path + (key,), message)

    def number(self, key, default, lo=None, hi=None, integer=False, strict_lo=False):
        v = self.value.get(key, default)
        if v is None:
            return None
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise self.err(key, f"{key} must be a number")
        if integer and int(v) != v:
            raise self.err(key, f"{key} must be an integer")
        if lo is not None and (v <= lo if strict_lo else v < lo):
            raise self.err(key, f"{key} must be {'>' if strict_lo else '>='} {lo}")
        if hi is not None and v > hi:
            raise self.err(key, f"{key} must be <= {hi}")
        return int(v) if integer else float(v)

    def boolean(self, key, default):
        v = self.value.get(key, default)
        if v is not None and not isinstance(v, bool):
            raise self.err(key, f"{key} must be true or false")
        return v

    def choice(self, key, default, options):
        v = self.value.get(key, default)
        if v not in options:
            raise self.err(key, f"{key} must be one of {list(options)}")
        return v


# ---------------------------------------------------------------------------


@dataclass
class Variant:
    """A named rendering setup; the sweep expands it into one or more confounder sets."""

    name: str
    provenance: str
    segmentation: str
    confounders: list = field(default_factory=list)


@dataclass
class PipelineConfig:
    seed: int = 0
    output: str | None = None
    identities: list = field(default_factory=list)
    variants: list = field(default_factory=list)
    duration: float = 4.0
    fps: float = 25.0
    camera: Camera = field(default_factory=lambda: Camera(0.0, 0.0))
    tolerance: int = 30
    keep_largest: bool | None = None
    cycle_params: dict = field(default_factory=dict)
    kinds: tuple = ("GEI",)
    crop_margins: list | None = None
    dump_images: bool = True
    comparisons: list = field(default_factory=list)
    aligned: bool = True
    experiment: ExperimentSpec = field(default_factory=ExperimentSpec)
    azimuth_step: float = 5.0
    elevation_step: float = 5.0
    source: str = "<config>"

    def variant(self, name):
        for v in self.variants:
            if v.name == name:
                return v
        raise KeyError(name)


TOP_KEYS = ("seed", "output", "identities", "confounders", "synth", "segmentation", "cycles",
            "features", "similarity", "experiment", "viewsweep")


def _identities(doc):
    sec = _Section(doc, ("identities",), ("population", "subjects"))
    out = []
    if sec.has("population"):
        pop = _Section(doc, ("identities", "population"), ("count", "seed"))
        count = pop.number("count", 1, lo=1, integer=True)
        out.extend(identity_population(count, pop.number("seed", 0, lo=0, integer=True)))
    subjects = sec.raw("subjects", []) or []
    if not isinstance(subjects, list):
        raise sec.err("subjects", "subjects must be a list")
    fields = ("name", "segment_lengths", "segment_radii", "hip_amplitude", "knee_amplitude",
              "arm_amplitude", "phase_quirk", "cadence_bias", "hip_width", "shoulder_width")
    for i, _ in enumerate(subjects):
        path = ("identities", "subjects", i)
        s = _Section(doc, path, fields)
        name = s.raw("name")
        if not isinstance(name, str) or not name:
            raise doc.error(path + ("name",), "every subject needs a non-empty name")
        base = default_identity(name)
        kw = {}
        for table in ("segment_lengths", "segment_radii"):
            t = _Section(doc, path + (table,), SEGMENTS)
            merged = dict(getattr(base, table))
            for seg in t.value:
                merged[seg] = t.number(seg, None, lo=0, strict_lo=True)
            kw[table] = merged
        for key in fields[3:]:
            if s.has(key):
                kw[key] = s.number(key, None)
        try:
            out.append(replace(base, **kw))
        except ConfigError as exc:
            raise _field_error(doc, path, s.value, exc) from None
    if not out:
        raise doc.error(("identities",), "at least one identity is required")
    names = [i.name for i in out]
    dup = sorted({n for n in names if names.count(n) > 1})
    if dup:
        raise doc.error(("identities",), f"duplicate identity names {dup}")
    for n in names:
        if not all(c.isalnum() or c in "-_" for c in n):
            raise doc.error(("identities",), f"identity name {n!r} may only use letters, digits, - and _")
    return out


def _field_error(doc, path, mapping, exc):
    msg = str(exc)
    for key in mapping:
        if msg.startswith(str(key)) or f"of {key!r}" in msg:
            return doc.error(path + (key,), msg)
    return doc.error(path, msg)


def _sweep_values(doc, path, spec):
    if isinstance(spec, list):
        vals = spec
    elif isinstance(spec, dict):
        s = _Section(doc, path, ("start", "stop", "step"))
        start, stop = s.number("start", None), s.number("stop", None)
        step = s.number("step", None, lo=0, strict_lo=True)
        if start is None or stop is None or step is None:
            raise doc.error(path, "range sweep needs start, stop and step")
        vals = list(np.round(np.arange(start, stop + step * 1e-9, step), 9))
    else:
        raise doc.error(path, "sweep values must be a list or a {start, stop, step} range")
    if not vals or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in vals):
        raise doc.error(path, "sweep values must be a non-empty list of numbers")
    return [float(v) for v in vals]


def _confounder_kwargs(sec):
    kw = {}
    for key in CONFOUNDER_KEYS:
        if not sec.has(key):
            continue
        v = sec.raw(key)
        if key in SWEEPABLE:
            kw[key] = sec.number(key, None)
        elif key == "occluder":
            if v is not None and (not isinstance(v, list) or len(v) != 4
                                  or not all(isinstance(x, int) for x in v)):
                raise sec.err(key, "occluder must be [row0, col0, row1, col1] integers or null")
            kw[key] = None if v is None else tuple(v)
        else:
            if not isinstance(v, list) or len(v) != 3 or not all(
                    isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
                raise sec.err(key, f"{key} must be a list of three numbers")
            kw[key] = tuple(int(x) for x in v) if key == "background_color" else tuple(map(float, v))
    return kw


def _variants(doc):
    sec = _Section(doc, ("confounders",), ("defaults", "variants", "sweep"))
    defaults = _Section(doc, ("confounders", "defaults"), CONFOUNDER_KEYS)
    base_kw = _confounder_kwargs(defaults)
    sweep_sec = _Section(doc, ("confounders", "sweep"), SWEEPABLE)
    sweep = [(k, _sweep_values(doc, ("confounders", "sweep", k), sweep_sec.raw(k)))
             for k in SWEEPABLE if sweep_sec.has(k)]
    raw = sec.raw("variants")
    if raw is None:
        raw = [{"name": "synthetic", "provenance": "synthetic", "segmentation": "chroma"}]
    if not isinstance(raw, list) or not raw:
        raise sec.err("variants", "variants must be a non-empty list")
    out = []
    for i, _ in enumerate(raw):
        path = ("confounders", "variants", i)
        if sec.raw("variants") is None:
            v = _Section(_Doc("{}"), (), ())
            v.value = raw[i]
        else:
            v = _Section(doc, path, ("name", "provenance", "segmentation") + CONFOUNDER_KEYS)
        name = v.raw("name")
        if not isinstance(name, str) or not name or not all(c.isalnum() or c in "-_" for c in name):
            raise doc.error(path + ("name",), "variant name must be a non-empty [A-Za-z0-9_-] string")
        provenance = v.choice("provenance", "synthetic", PROVENANCES)
        method = v.choice("segmentation", "chroma", SEGMENTATION_METHODS)
        kw = dict(base_kw, **_confounder_kwargs(v))
        combos = list(product(*[vals for _, vals in sweep])) if sweep else [()]
        confs = []
        for combo in combos:
            ckw = dict(kw, **{k: x for (k, _), x in zip(sweep, combo)})
            try:
                confs.append(ConfounderConfig(**ckw))
            except ConfigError as exc:
                merged = dict(v.value)
                msg = str(exc)
                key = next((k for k in ckw if msg.startswith(k)), None)
                if key in dict(sweep):
                    raise doc.error(("confounders", "sweep", key), msg) from None
                if key in v.value:
                    raise doc.error(path + (key,), msg) from None
                if key in defaults.value:
                    raise doc.error(("confounders", "defaults", key), msg) from None
                raise _field_error(doc, path, merged, exc) from None
        out.append(Variant(name, provenance, method, confs))
    names = [v.name for v in out]
    if len(set(names)) != len(names):
        raise sec.err("variants", "variant names must be unique")
    return out


def parse_config(text, source="<config>", seed=None):
    """Validate a YAML document into a :class:`PipelineConfig`."""
    doc = _Doc(text, source)
    top = _Section(doc, (), TOP_KEYS)
    cfg = PipelineConfig(source=source)
    cfg.seed = top.number("seed", 0, lo=0, integer=True) if seed is None else int(seed)
    out = top.raw("output")
    if out is not None and not isinstance(out, str):
        raise top.err("output", "output must be a path string")
    cfg.output = out
    cfg.identities = _identities(doc)
    cfg.variants = _variants(doc)

    syn = _Section(doc, ("synth",), ("duration", "fps") + CAMERA_KEYS)
    cfg.duration = syn.number("duration", 4.0, lo=0, strict_lo=True)
    cfg.fps = syn.number("fps", 25.0, lo=0, strict_lo=True)
    if cfg.duration * cfg.fps < 0.5:
        raise syn.err("duration", "duration * fps must give at least one frame")
    try:
        cfg.camera = Camera(0.0, 0.0,
                            distance=syn.number("distance", 5000.0, lo=0, strict_lo=True),
                            projection=syn.choice("projection", "orthographic",
                                                  ("orthographic", "perspective")),
                            focal_length=syn.number("focal_length", 450.0, lo=0, strict_lo=True),
                            width=syn.number("width", 120, lo=1, integer=True),
                            height=syn.number("height", 180, lo=1, integer=True))
    except ConfigError as exc:
        raise doc.error(("synth",), str(exc)) from None

    sg = _Section(doc, ("segmentation",), ("tolerance", "keep_largest"))
    cfg.tolerance = sg.number("tolerance", 30, lo=0, hi=255, integer=True)
    cfg.keep_largest = sg.boolean("keep_largest", None)

    cy = _Section(doc, ("cycles",), ("lower_fraction", "window", "min_distance", "min_prominence",
                                     "prominence_fraction"))
    window = cy.number("window", 5, lo=1, integer=True)
    if window % 2 == 0:
        raise cy.err("window", "window must be odd")
    lf = cy.number("lower_fraction", 0.5, lo=0, hi=1, strict_lo=True)
    cfg.cycle_params = dict(lower_fraction=lf, window=window,
                            min_distance=cy.number("min_distance", None, lo=1, integer=True),
                            min_prominence=cy.number("min_prominence", None, lo=0),
                            prominence_fraction=cy.number("prominence_fraction", 0.02, lo=0))

    fe = _Section(doc, ("features",), ("kinds", "crop_margins", "dump_images"))
    kinds = fe.raw("kinds", ["GEI"])
    if not isinstance(kinds, list) or not kinds or any(k not in KINDS for k in kinds) \
            or len(set(kinds)) != len(kinds):
        raise fe.err("kinds", f"kinds must be a non-empty list drawn from {list(KINDS)}")
    cfg.kinds = tuple(kinds)
    crops = fe.raw("crop_margins")
    if crops == "default":
        cfg.crop_margins = default_crop_grid()
    elif crops is None:
        cfg.crop_margins = None
    else:
        if not isinstance(crops, list) or not all(
                isinstance(c, list) and len(c) == 4 and all(isinstance(x, int) and x >= 0 for x in c)
                for c in crops):
            raise fe.err("crop_margins", "crop_margins must be 'default', null or a list of "
                         "[top, bottom, left, right] non-negative integers")
        from .features import HEIGHT, MIN_INTERIOR, WIDTH
        for c in crops:
            if HEIGHT - c[0] - c[1] < MIN_INTERIOR[0] or WIDTH - c[2] - c[3] < MIN_INTERIOR[1]:
                raise fe.err("crop_margins", f"crop {c} leaves less than a "
                             f"{MIN_INTERIOR[0]}x{MIN_INTERIOR[1]} interior")
        cfg.crop_margins = [tuple(c) for c in crops]
    cfg.dump_images = fe.boolean("dump_images", True)

    si = _Section(doc, ("similarity",), ("comparisons", "aligned"))
    cfg.aligned = si.boolean("aligned", True)
    names = [v.name for v in cfg.variants]
    comps = si.raw("comparisons")
    if comps is None:
        comps = [[n, n] for n in names]
    if not isinstance(comps, list):
        raise si.err("comparisons", "comparisons must be a list of [variant_a, variant_b] pairs")
    for i, c in enumerate(comps):
        if not isinstance(c, list) or len(c) != 2 or any(x not in names for x in c):
            raise doc.error(("similarity", "comparisons", i),
                            f"comparison must name two variants from {names}")
    cfg.comparisons = [tuple(c) for c in comps]

    ex = _Section(doc, ("experiment",), ("conditions", "component_counts", "split_seed",
                                         "reg_weight", "epochs", "kind"))
    conds = ex.raw("conditions", list(CONDITIONS))
    ks = ex.raw("component_counts", [5, 10, 20, 50])
    if not isinstance(conds, list) or not conds:
        raise ex.err("conditions", "conditions must be a non-empty list")
    if not isinstance(ks, list) or any(isinstance(k, bool) or not isinstance(k, int) for k in ks):
        raise ex.err("component_counts", "component_counts must be a list of integers")
    try:
        cfg.experiment = ExperimentSpec(
            conditions=conds, component_counts=ks,
            split_seed=ex.number("split_seed", 0, lo=0, integer=True),
            reg_weight=ex.number("reg_weight", 1e-2, lo=0, strict_lo=True),
            epochs=ex.number("epochs", 200, lo=1, integer=True),
            kind=ex.choice("kind", "GEI", KINDS))
    except ConfigError as exc:
        key = "conditions" if "condition" in str(exc) else "component_counts"
        raise ex.err(key, str(exc)) from None
    if cfg.experiment.kind not in cfg.kinds:
        raise ex.err("kind", f"experiment kind {cfg.experiment.kind!r} is not among features.kinds")

    vs = _Section(doc, ("viewsweep",), ("azimuth_step", "elevation_step"))
    cfg.azimuth_step = vs.number("azimuth_step", 5.0, lo=0, strict_lo=True)
    cfg.elevation_step = vs.number("elevation_step", 5.0, lo=0, strict_lo=True)
    return cfg


def load_config(path, seed=None):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from None
    return parse_config(text, str(path), seed)
