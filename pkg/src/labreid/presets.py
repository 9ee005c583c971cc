"""Named pipeline configurations.

Each preset bundles the channel weights, class weights, histogram
smoothing, binarization factor, and distance threshold for one recorded
ablation row.  Presets are plain text config files; the packaged set can
be extended by passing a file path wherever a preset name is accepted.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .color import DistanceConfig, SmoothingConfig
from .config import ConfigDoc, parse_config_text, read_config
from .engine import ChannelWeights, ClassWeights
from .errors import ConfigError
from .masks import WEIGHTED_CLASSES

DEFAULT_PRESET = "table3_2_row11"


@dataclass(frozen=True)
class Preset:
    name: str
    channel_weights: ChannelWeights
    class_weights: ClassWeights
    smoothing: SmoothingConfig
    binarize_factor: float = 1.0
    distance: DistanceConfig = DistanceConfig()

    def __post_init__(self) -> None:
        if not self.binarize_factor > 0:
            raise ConfigError(f"binarize_factor must be positive, got {self.binarize_factor}")


def _preset_from_doc(doc: ConfigDoc, name: str) -> Preset:
    fields: dict[str, tuple[str, ...]] = {}
    for entry in doc.entries:
        key, args = entry[0], tuple(entry[1:])
        if key in fields:
            raise ConfigError(f"{doc.source}: duplicate {key!r} line")
        fields[key] = args
    try:
        ch = [float(x) for x in fields.pop("channel_weights")]
        cl = [float(x) for x in fields.pop("class_weights")]
        lf_str, order = fields.pop("smoothing")
        factor = float(fields.pop("binarize_factor", ("1.0",))[0])
        d_thr = float(fields.pop("d_threshold", ("40.0",))[0])
    except KeyError as exc:
        raise ConfigError(f"{doc.source}: missing {exc.args[0]!r} line") from None
    except ValueError as exc:
        raise ConfigError(f"{doc.source}: {exc}") from None
    if fields:
        raise ConfigError(f"{doc.source}: unknown lines {sorted(fields)}")
    if len(ch) != 5:
        raise ConfigError(f"{doc.source}: channel_weights needs 5 values, got {len(ch)}")
    if len(cl) != len(WEIGHTED_CLASSES):
        raise ConfigError(
            f"{doc.source}: class_weights needs {len(WEIGHTED_CLASSES)} values, got {len(cl)}"
        )
    if order not in ("before", "after"):
        raise ConfigError(f"{doc.source}: smoothing order must be 'before' or 'after', got {order!r}")
    try:
        return Preset(
            name=name,
            channel_weights=ChannelWeights(*ch),
            class_weights=ClassWeights(table=dict(zip(WEIGHTED_CLASSES, cl))),
            smoothing=SmoothingConfig(
                filter_length=int(lf_str), apply_before_compression=order == "before"
            ),
            binarize_factor=factor,
            distance=DistanceConfig(d_threshold=d_thr),
        )
    except ValueError as exc:
        raise ConfigError(f"{doc.source}: {exc}") from None


def list_presets() -> list[str]:
    """Names of all packaged presets, sorted."""
    pkg = resources.files("labreid.data.presets")
    return sorted(p.name[:-5] for p in pkg.iterdir() if p.name.endswith(".conf"))


def load_preset(name_or_path: str | Path) -> Preset:
    """Load a preset by packaged name or by config file path.

    The name "default" resolves to the best packaged configuration.
    """
    text_name = str(name_or_path)
    if text_name == "default":
        text_name = DEFAULT_PRESET
    if "/" in text_name or text_name.endswith(".conf") or isinstance(name_or_path, Path):
        doc = read_config(Path(text_name), "preset")
        return _preset_from_doc(doc, Path(text_name).stem)
    entry = resources.files("labreid.data.presets").joinpath(f"{text_name}.conf")
    if not entry.is_file():
        known = ", ".join(list_presets())
        raise ConfigError(f"unknown preset {text_name!r}; packaged presets: {known}")
    doc = parse_config_text(entry.read_text("utf-8"), "preset", source=f"{text_name}.conf")
    return _preset_from_doc(doc, text_name)
