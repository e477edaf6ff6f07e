"""Pipeline configuration: one flat key-value file drives every stage.

Format: ``key = value`` per line, ``#`` starts a comment, unknown keys are
rejected. Values use explicit units (pixels, cells, sensor units). The
resolved configuration is echoed into every report so a run can be
repeated bit-identically.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import ConfigError
from .evaluation import PROTOCOLS, SplitSpec
from .features import HogConfig, NormalizationSpec
from .elm import ACTIVATIONS
from .projection import ProjectionConfig
from .pyramid import GAUSSIAN, LAPLACIAN


@dataclass
class PipelineConfig:
    layers: int = 3
    pyramid_kind: str = LAPLACIAN
    projection: ProjectionConfig = field(default_factory=ProjectionConfig)
    norm: NormalizationSpec = field(default_factory=NormalizationSpec)
    hog: HogConfig = field(default_factory=HogConfig)
    pca_components: int = 550
    elm_hidden: int = 1000
    elm_activation: str = "sigmoid"
    seed: int = 42
    split: SplitSpec = field(default_factory=lambda: SplitSpec("cross_subject_odd_even"))
    dataset: str = "data"
    output: str = "out"
    jobs: int = 1

    def validate(self) -> None:
        """Collect every violated constraint; raise ConfigError with all."""
        problems = []
        if self.layers < 1:
            problems.append(f"layers must be >= 1, got {self.layers}")
        if self.pyramid_kind not in (GAUSSIAN, LAPLACIAN):
            problems.append(
                f"pyramid must be '{GAUSSIAN}' or '{LAPLACIAN}', got {self.pyramid_kind!r}"
            )
        problems += self.projection.validate()
        problems += self.hog.validate()
        if self.hog.cell >= 1:
            problems += self.norm.validate(self.hog.cell)
        if self.pca_components < 1:
            problems.append(f"pca.components must be >= 1, got {self.pca_components}")
        if self.elm_hidden < 1:
            problems.append(f"elm.hidden must be >= 1, got {self.elm_hidden}")
        if self.elm_activation not in ACTIVATIONS:
            problems.append(
                f"elm.activation must be one of {sorted(ACTIVATIONS)}, "
                f"got {self.elm_activation!r}"
            )
        if self.seed < 0:
            problems.append(f"seed must be non-negative, got {self.seed}")
        if self.jobs < 1:
            problems.append(f"jobs must be >= 1, got {self.jobs}")
        problems += self.split.validate()
        if problems:
            raise ConfigError(problems)

    def to_flat(self) -> dict[str, str]:
        """Resolved key-value view, echoed verbatim into reports."""
        return {
            "layers": str(self.layers),
            "pyramid": self.pyramid_kind,
            "projection.depth_bins": str(self.projection.depth_bins),
            "projection.depth_min": _fmt(self.projection.depth_min),
            "projection.depth_max": _fmt(self.projection.depth_max),
            "norm.width": str(self.norm.width),
            "norm.height": str(self.norm.height),
            "norm.depth": str(self.norm.depth),
            "hog.cell": str(self.hog.cell),
            "hog.bins": str(self.hog.bins),
            "hog.block": str(self.hog.block),
            "hog.stride": str(self.hog.stride),
            "hog.epsilon": _fmt(self.hog.l2_epsilon),
            "pca.components": str(self.pca_components),
            "elm.hidden": str(self.elm_hidden),
            "elm.activation": self.elm_activation,
            "seed": str(self.seed),
            "split.protocol": self.split.protocol,
            "split.subset": self.split.subset or "",
            "dataset": self.dataset,
            "output": self.output,
            "jobs": str(self.jobs),
        }

    def to_text(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in self.to_flat().items())


def _fmt(x: float) -> str:
    return repr(int(x)) if float(x) == int(x) else repr(float(x))


_INT_KEYS = {
    "layers", "projection.depth_bins", "norm.width", "norm.height", "norm.depth",
    "hog.cell", "hog.bins", "hog.block", "hog.stride", "pca.components",
    "elm.hidden", "seed", "jobs",
}
_FLOAT_KEYS = {"projection.depth_min", "projection.depth_max", "hog.epsilon"}
_STR_KEYS = {
    "pyramid", "elm.activation", "split.protocol", "split.subset",
    "dataset", "output",
}
ALL_KEYS = _INT_KEYS | _FLOAT_KEYS | _STR_KEYS


def parse_config_text(text: str, source: str = "<config>") -> PipelineConfig:
    values: dict[str, str] = {}
    problems = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
            continue
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in ALL_KEYS:
            problems.append(f"{source}:{lineno}: unknown key {key!r}")
            continue
        if key in values:
            problems.append(f"{source}:{lineno}: duplicate key {key!r}")
            continue
        values[key] = value

    def take(key, caster, default):
        if key not in values:
            return default
        try:
            return caster(values[key])
        except ValueError:
            problems.append(f"{source}: key {key!r} has malformed value {values[key]!r}")
            return default

    cfg = PipelineConfig(
        layers=take("layers", int, 3),
        pyramid_kind=take("pyramid", str, LAPLACIAN),
        projection=ProjectionConfig(
            depth_bins=take("projection.depth_bins", int, 64),
            depth_min=take("projection.depth_min", float, 0.0),
            depth_max=take("projection.depth_max", float, 4000.0),
        ),
        norm=NormalizationSpec(
            width=take("norm.width", int, 60),
            height=take("norm.height", int, 100),
            depth=take("norm.depth", int, 80),
        ),
        hog=HogConfig(
            cell=take("hog.cell", int, 10),
            bins=take("hog.bins", int, 9),
            block=take("hog.block", int, 2),
            stride=take("hog.stride", int, 10),
            l2_epsilon=take("hog.epsilon", float, 1e-5),
        ),
        pca_components=take("pca.components", int, 550),
        elm_hidden=take("elm.hidden", int, 1000),
        elm_activation=take("elm.activation", str, "sigmoid"),
        seed=take("seed", int, 42),
        split=SplitSpec(
            protocol=take("split.protocol", str, PROTOCOLS[0]),
            subset=take("split.subset", str, "") or None,
        ),
        dataset=take("dataset", str, "data"),
        output=take("output", str, "out"),
        jobs=take("jobs", int, 1),
    )
    if problems:
        raise ConfigError(problems)
    cfg.validate()
    return cfg


def load_config(path, overrides: dict | None = None) -> PipelineConfig:
    try:
        text = Path(path).read_text()
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    cfg = parse_config_text(text, source=str(path))
    if overrides:
        cfg = replace(cfg, **overrides)
        cfg.validate()
    return cfg


def default_config_text() -> str:
    """A commented template for `lpdmi eval --config`."""
    return (
        "# lpdmi pipeline configuration\n"
        "layers = 3                 # pyramid levels L\n"
        "pyramid = laplacian        # laplacian | gaussian\n"
        "projection.depth_bins = 64 # side/top depth axis slots\n"
        "projection.depth_min = 0   # sensor units mapped to intensity 0\n"
        "projection.depth_max = 4000\n"
        "norm.width = 60            # pixels, front/top horizontal target\n"
        "norm.height = 100          # pixels, front/side vertical target\n"
        "norm.depth = 80            # pixels, side horizontal / top vertical\n"
        "hog.cell = 10              # pixels\n"
        "hog.bins = 9\n"
        "hog.block = 2              # cells per block side\n"
        "hog.stride = 10            # pixels\n"
        "hog.epsilon = 1e-05\n"
        "pca.components = 550       # capped at min(samples, dims) with a warning\n"
        "elm.hidden = 1000\n"
        "elm.activation = sigmoid   # sigmoid | radial-basis | sine\n"
        "seed = 42\n"
        "split.protocol = cross_subject_odd_even\n"
        "split.subset =             # AS1 | AS2 | AS3, for subset protocols\n"
        "dataset = data\n"
        "output = out\n"
        "jobs = 1\n"
    )
