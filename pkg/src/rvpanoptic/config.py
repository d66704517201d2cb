"""Flat ``key = value`` configuration with section prefixes.

The same keys appear in config files and as ``--key value`` CLI flags;
precedence is flag > file > default. Parsing reports the offending line
number on any error. The synthetic-scene description uses the same syntax
with indexed ``object.<i>.*`` keys.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .depth import CompletionConfig
from .errors import ConfigError, PipelineError
from .fusion import KnnParams
from .instance import InstanceParams
from .losses import LossWeights
from .projection import ProjectionConfig
from .synthetic import InstanceBlueprint, SceneSpec

# SemanticKITTI-style 19-class remapping: ids 1..8 are countable things.
DEFAULT_THINGS = "1,2,3,4,5,6,7,8"

# key -> (type tag, default string, help)
SCHEMA: dict[str, tuple[str, str, str]] = {
    "projection.height": ("int", "64", "range image rows"),
    "projection.width": ("int", "2048", "range image columns"),
    "projection.fov_up_deg": ("float", "3.0", "upper elevation bound"),
    "projection.fov_down_deg": ("float", "-25.0", "lower elevation bound"),
    "completion.window": ("int", "7", "directional fill window (odd)"),
    "completion.weight_scale": ("float", "1.0", "Gaussian weight peak"),
    "completion.weight_width": ("float", "1.0", "Gaussian weight sigma"),
    "completion.wrap_azimuth": ("bool", "off", "cyclic columns during fill"),
    "instance.grid_size": ("float", "0.15", "pillar cell size in meters"),
    "instance.threshold": ("float", "0.5", "connectivity threshold"),
    "instance.alpha": ("alpha", "derived", "kernel decay or 'derived'"),
    "knn.k": ("int", "5", "neighbors kept per point"),
    "knn.window": ("int", "5", "search window (odd)"),
    "knn.range_cutoff": ("float", "1.0", "max range difference in meters"),
    "knn.sigma": ("float", "1.0", "vote weight sigma in pixels"),
    "loss.beta_semantic": ("float", "1.0", "semantic loss weight"),
    "loss.beta_embedding": ("float", "0.1", "embedding loss weight"),
    "loss.beta_instance": ("float", "0.2", "instance loss weight"),
    "classes.count": ("int", "20", "number of class ids incl. ignore"),
    "classes.things": ("int_list", DEFAULT_THINGS, "thing class ids"),
    "classes.ignore": ("int", "0", "ignore class id"),
    "eval.min_points": ("int", "0", "min GT segment size (20 for nuScenes)"),
    "stages.depth_normals": ("bool", "on", "run completion + normals"),
    "stages.knn": ("bool", "on", "run KNN refinement"),
    "data.scan_dir": ("str", "", "default scan directory"),
    "data.label_dir": ("str", "", "default label directory"),
}


@dataclass(frozen=True)
class PipelineConfig:
    projection: ProjectionConfig = field(default_factory=ProjectionConfig)
    completion: CompletionConfig = field(default_factory=CompletionConfig)
    instance: InstanceParams = field(default_factory=InstanceParams)
    knn: KnnParams = field(default_factory=KnnParams)
    loss: LossWeights = field(default_factory=LossWeights)
    num_classes: int = 20
    thing_classes: frozenset[int] = frozenset(range(1, 9))
    ignore_class: int = 0
    min_points: int = 0
    run_depth_normals: bool = True
    run_knn: bool = True
    scan_dir: str = ""
    label_dir: str = ""


def _coerce(key: str, raw: str, where: str):
    kind = SCHEMA[key][0]
    raw = raw.strip()
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            lowered = raw.lower()
            if lowered in ("1", "true", "on", "yes"):
                return True
            if lowered in ("0", "false", "off", "no"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if kind == "int_list":
            return tuple(int(tok) for tok in raw.split(",") if tok.strip())
        if kind == "alpha":
            return None if raw.lower() == "derived" else float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"{where}: bad value for {key}: {exc}") from exc


def parse_config_text(text: str, source: str = "<config>") -> dict[str, tuple[str, str]]:
    """Key -> (raw value, location) for every assignment in the text.

    Raises:
        ConfigError: malformed line or unknown key, with its line number.
    """
    out: dict[str, tuple[str, str]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source} line {lineno}: expected 'key = value'")
        key, _, value = stripped.partition("=")
        key = key.strip()
        if key not in SCHEMA:
            raise ConfigError(f"{source} line {lineno}: unknown key {key!r}")
        out[key] = (value.strip(), f"{source} line {lineno}")
    return out


def build_config(values: dict[str, tuple[str, str]]) -> PipelineConfig:
    """Instantiate the typed config from raw strings, validating everything."""
    merged = {key: (spec[1], "<default>") for key, spec in SCHEMA.items()}
    merged.update(values)
    v = {key: _coerce(key, raw, where) for key, (raw, where) in merged.items()}
    try:
        return PipelineConfig(
            projection=ProjectionConfig(
                height=v["projection.height"], width=v["projection.width"],
                fov_up_deg=v["projection.fov_up_deg"],
                fov_down_deg=v["projection.fov_down_deg"]),
            completion=CompletionConfig(
                window=v["completion.window"],
                weight_scale=v["completion.weight_scale"],
                weight_width=v["completion.weight_width"],
                wrap_azimuth=v["completion.wrap_azimuth"]),
            instance=InstanceParams(
                grid_size=v["instance.grid_size"],
                threshold=v["instance.threshold"],
                alpha=v["instance.alpha"]),
            knn=KnnParams(k=v["knn.k"], window=v["knn.window"],
                          range_cutoff=v["knn.range_cutoff"],
                          sigma=v["knn.sigma"]),
            loss=LossWeights(beta_semantic=v["loss.beta_semantic"],
                             beta_embedding=v["loss.beta_embedding"],
                             beta_instance=v["loss.beta_instance"]),
            num_classes=v["classes.count"],
            thing_classes=frozenset(v["classes.things"]),
            ignore_class=v["classes.ignore"],
            min_points=v["eval.min_points"],
            run_depth_normals=v["stages.depth_normals"],
            run_knn=v["stages.knn"],
            scan_dir=v["data.scan_dir"],
            label_dir=v["data.label_dir"],
        )
    except PipelineError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path=None, overrides: dict[str, str] | None = None) -> PipelineConfig:
    """Config from an optional file plus flag overrides (flag wins)."""
    values: dict[str, tuple[str, str]] = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        values.update(parse_config_text(text, source=str(path)))
    for key, raw in (overrides or {}).items():
        if key not in SCHEMA:
            raise ConfigError(f"unknown config key {key!r}")
        values[key] = (raw, "<flag>")
    return build_config(values)


# -- synthetic scene files ---------------------------------------------------

_SCENE_SCALARS = {
    "seed": int,
    "noise_sigma": float,
    "ground_class": int,
    "sensor.beams": int,
    "sensor.width": int,
    "sensor.fov_up_deg": float,
    "sensor.fov_down_deg": float,
}


def parse_scene_text(text: str, source: str = "<scene>") -> SceneSpec:
    """Build a SceneSpec from indexed key=value text.

    Raises:
        ConfigError: malformed line, unknown key, or invalid blueprint.
    """
    scalars: dict[str, object] = {}
    ground_z: float | None = -1.8
    objects: dict[int, dict[str, str]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source} line {lineno}: expected 'key = value'")
        key, _, value = stripped.partition("=")
        key, value = key.strip(), value.strip()
        where = f"{source} line {lineno}"
        if key == "ground_z":
            try:
                ground_z = None if value.lower() == "none" else float(value)
            except ValueError as exc:
                raise ConfigError(f"{where}: bad value: {exc}") from exc
        elif key in _SCENE_SCALARS:
            try:
                scalars[key] = _SCENE_SCALARS[key](value)
            except ValueError as exc:
                raise ConfigError(f"{where}: bad value: {exc}") from exc
        elif key.startswith("object."):
            parts = key.split(".")
            if len(parts) != 3 or not parts[1].isdigit():
                raise ConfigError(f"{where}: expected object.<index>.<field>")
            objects.setdefault(int(parts[1]), {})[parts[2]] = value
        else:
            raise ConfigError(f"{where}: unknown key {key!r}")

    blueprints = []
    for idx in sorted(objects):
        fields = objects[idx]
        try:
            center = tuple(float(t) for t in fields.get("center", "0,0,0").split(","))
            size = tuple(float(t) for t in fields.get("size", "1,1,1").split(","))
            if len(center) != 3 or len(size) != 3:
                raise ValueError("center and size need 3 comma-separated values")
            blueprints.append(InstanceBlueprint(
                shape=fields.get("shape", "box"),
                center=center, size=size,
                yaw_deg=float(fields.get("yaw_deg", "0")),
                semantic_class=int(fields.get("class", "1"))))
        except (ValueError, PipelineError) as exc:
            raise ConfigError(f"{source}: object.{idx}: {exc}") from exc

    sensor = ProjectionConfig(
        height=scalars.get("sensor.beams", 64),
        width=scalars.get("sensor.width", 2048),
        fov_up_deg=scalars.get("sensor.fov_up_deg", 3.0),
        fov_down_deg=scalars.get("sensor.fov_down_deg", -25.0))
    try:
        return SceneSpec(instances=tuple(blueprints), ground_z=ground_z,
                         ground_class=scalars.get("ground_class", 9),
                         sensor=sensor,
                         noise_sigma=scalars.get("noise_sigma", 0.0),
                         seed=scalars.get("seed", 0))
    except PipelineError as exc:
        raise ConfigError(f"{source}: {exc}") from exc


def load_scene(path) -> SceneSpec:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read scene {path}: {exc}") from exc
    return parse_scene_text(text, source=str(path))
