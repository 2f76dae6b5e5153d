"""Visual encodings: normalizers, color maps, stepped size maps, defaults.

Continuous color maps are 256-entry RGBA lookup tables bundled as static
assets (nearest-entry lookup, no interpolation; at 256 entries the
quantization error is below 8-bit display resolution). The categorical
default is the 8-color Okabe-Ito colorblind-safe palette, assigned in sorted
label order and cycling past 8 labels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources

import numpy as np

from .errors import ConfigError, KindMismatchError
from .table import (
    CategoricalColumn,
    ChannelKind,
    ColumnStats,
    PointTable,
    column_stats,
    infer_channel_kind,
)

RGBA = tuple[int, int, int, int]

# Okabe-Ito palette in its conventional published order.
OKABE_ITO: tuple[RGBA, ...] = (
    (0, 0, 0, 255),        # black
    (230, 159, 0, 255),    # orange
    (86, 180, 233, 255),   # sky blue
    (0, 158, 115, 255),    # bluish green
    (240, 228, 66, 255),   # yellow
    (0, 114, 178, 255),    # blue
    (213, 94, 0, 255),     # vermillion
    (204, 121, 167, 255),  # reddish purple
)

LUT_ENTRIES = 256
_lut_cache: dict[str, np.ndarray] = {}


def load_lut(name: str) -> np.ndarray:
    """256x4 uint8 lookup table bundled with the package (viridis, magma)."""
    if name not in _lut_cache:
        try:
            raw = resources.files("megascatter").joinpath(f"assets/{name}.rgba").read_bytes()
        except FileNotFoundError:
            raise ConfigError(f"unknown continuous color map: {name!r}") from None
        table = np.frombuffer(raw, dtype=np.uint8).reshape(-1, 4)
        if len(table) < 2:
            raise ConfigError(f"color map {name!r} must have at least 2 entries")
        table.flags.writeable = False
        _lut_cache[name] = table
    return _lut_cache[name]


def available_color_maps() -> tuple[str, ...]:
    return ("viridis", "magma")


class NormKind(Enum):
    LINEAR = "linear"
    LOG = "log"
    ASINH = "asinh"


@dataclass(frozen=True)
class Normalizer:
    """Monotone map from a (v_min, v_max) domain onto [0, 1], clamped.

    ``log`` requires a strictly positive domain; values <= 0 clamp to 0 at
    evaluation time (data outliers are not configuration errors). ``asinh``
    uses a linear-region width ``a`` (default 1).
    """

    kind: NormKind
    v_min: float
    v_max: float
    a: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.v_min) and math.isfinite(self.v_max)):
            raise ConfigError("normalizer domain must be finite")
        if not self.v_min < self.v_max:
            raise ConfigError("normalizer domain requires v_min < v_max")
        if self.kind is NormKind.LOG and self.v_min <= 0:
            raise ConfigError("log normalizer requires v_min > 0")
        if self.kind is NormKind.ASINH and not self.a > 0:
            raise ConfigError("asinh normalizer requires a > 0")


def normalize(n: Normalizer, v: float) -> float:
    """Scalar normalization; see :func:`normalize_array` for the bulk path."""
    return float(normalize_array(n, np.asarray([v], dtype=np.float64))[0])


def normalize_array(n: Normalizer, values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if n.kind is NormKind.LINEAR:
        t = (values - n.v_min) / (n.v_max - n.v_min)
    elif n.kind is NormKind.LOG:
        lo = math.log(n.v_min)
        hi = math.log(n.v_max)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (np.log(values) - lo) / (hi - lo)
        t = np.where(values <= 0, 0.0, t)
    else:
        lo = math.asinh(n.v_min / n.a)
        hi = math.asinh(n.v_max / n.a)
        t = (np.arcsinh(values / n.a) - lo) / (hi - lo)
    t = np.clip(t, 0.0, 1.0)
    # Pin the endpoints: the transforms above can miss them by an ulp.
    t[values == n.v_min] = 0.0
    t[values == n.v_max] = 1.0
    return t


@dataclass(frozen=True)
class ColorMap:
    """Either a categorical palette or a named continuous lookup table."""

    kind: ChannelKind
    palette: tuple[RGBA, ...] = ()
    lut_name: str = ""
    reverse: bool = False

    def __post_init__(self):
        if self.kind is ChannelKind.CATEGORICAL:
            if not self.palette:
                raise ConfigError("categorical color map needs a nonempty palette")
            for c in self.palette:
                if len(c) != 4 or any(not (0 <= v <= 255) for v in c):
                    raise ConfigError(f"bad RGBA entry: {c!r}")
        else:
            load_lut(self.lut_name)  # validates name and entry count

    @classmethod
    def categorical(cls, palette: tuple[RGBA, ...] = OKABE_ITO) -> "ColorMap":
        return cls(kind=ChannelKind.CATEGORICAL, palette=tuple(palette))

    @classmethod
    def continuous(cls, name: str, reverse: bool = False) -> "ColorMap":
        return cls(kind=ChannelKind.CONTINUOUS, lut_name=name, reverse=reverse)


@dataclass(frozen=True)
class SizeMap:
    """``step_count`` evenly spaced pixel sizes from min_px to max_px."""

    min_px: float
    max_px: float
    step_count: int

    def __post_init__(self):
        if not self.min_px > 0:
            raise ConfigError("min_px must be positive")
        if self.max_px < self.min_px:
            raise ConfigError("max_px must be >= min_px")
        if self.step_count < 1:
            raise ConfigError("step_count must be >= 1")

    def step(self, i: int) -> float:
        if self.step_count == 1:
            return self.min_px
        return self.min_px + (self.max_px - self.min_px) * i / (self.step_count - 1)


class Channel(Enum):
    COLOR = "color"
    SIZE = "size"
    OPACITY = "opacity"


@dataclass(frozen=True)
class EncodingSpec:
    """Binding of one visual channel to a source column or a constant."""

    channel: Channel
    source: str | None = None
    constant: float | tuple | None = None
    normalizer: Normalizer | None = None
    color_map: ColorMap | None = None
    size_map: SizeMap | None = None
    palette_cycles: bool = False

    def __post_init__(self):
        if (self.source is None) == (self.constant is None):
            raise ConfigError("exactly one of source column / constant must be set")
        if self.channel is Channel.OPACITY and self.constant is not None:
            value = float(self.constant)
            if not (0.0 < value <= 1.0):
                raise ConfigError("constant opacity must lie in (0, 1]")
        if self.channel is Channel.COLOR and self.source is not None:
            if self.color_map is None:
                raise ConfigError("color-by-column needs a color map")
        if self.channel is Channel.SIZE and self.source is not None:
            if self.size_map is None:
                raise ConfigError("size-by-column needs a size map")


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def resolve_color(spec: EncodingSpec, value: float | int, stats: ColumnStats) -> RGBA:
    """Color for one value: palette entry (categorical) or LUT entry at
    round(t * (len - 1)) after optional reversal (continuous)."""
    if spec.channel is not Channel.COLOR:
        raise ConfigError("resolve_color requires a color-channel spec")
    cmap = spec.color_map
    if cmap is None:
        raise ConfigError("spec has no color map")
    if cmap.kind is ChannelKind.CATEGORICAL:
        code = int(value)
        if code < 0:
            raise ValueError(f"negative category code: {code}")
        return cmap.palette[code % len(cmap.palette)]
    if spec.normalizer is None:
        raise ConfigError("continuous color spec has no normalizer")
    t = normalize(spec.normalizer, float(value))
    if cmap.reverse:
        t = 1.0 - t
    lut = load_lut(cmap.lut_name)
    entry = lut[_round_half_up(t * (len(lut) - 1))]
    return (int(entry[0]), int(entry[1]), int(entry[2]), int(entry[3]))


def resolve_colors(spec: EncodingSpec, values: np.ndarray) -> np.ndarray:
    """Vectorized resolve_color: (n, 4) uint8."""
    cmap = spec.color_map
    if cmap is None:
        raise ConfigError("spec has no color map")
    if cmap.kind is ChannelKind.CATEGORICAL:
        palette = np.asarray(cmap.palette, dtype=np.uint8)
        codes = np.asarray(values, dtype=np.int64) % len(palette)
        return palette[codes]
    if spec.normalizer is None:
        raise ConfigError("continuous color spec has no normalizer")
    t = normalize_array(spec.normalizer, values)
    if cmap.reverse:
        t = 1.0 - t
    lut = load_lut(cmap.lut_name)
    idx = np.floor(t * (len(lut) - 1) + 0.5).astype(np.int64)
    return lut[idx]


def resolve_size(spec: EncodingSpec, value: float) -> float:
    """Pixel size: t is snapped to the nearest of the evenly spaced steps
    (round half up)."""
    if spec.channel is not Channel.SIZE:
        raise ConfigError("resolve_size requires a size-channel spec")
    smap = spec.size_map
    if smap is None:
        raise ConfigError("spec has no size map")
    if spec.normalizer is None:
        raise ConfigError("size spec has no normalizer")
    t = normalize(spec.normalizer, float(value))
    i = _round_half_up(t * (smap.step_count - 1))
    return smap.step(i)


def resolve_sizes(spec: EncodingSpec, values: np.ndarray) -> np.ndarray:
    smap = spec.size_map
    if smap is None or spec.normalizer is None:
        raise ConfigError("size spec needs a size map and a normalizer")
    t = normalize_array(spec.normalizer, values)
    i = np.floor(t * (smap.step_count - 1) + 0.5)
    if smap.step_count == 1:
        return np.full(len(t), smap.min_px, dtype=np.float64)
    return smap.min_px + (smap.max_px - smap.min_px) * i / (smap.step_count - 1)


def default_normalizer_domain(stats: ColumnStats) -> tuple[float, float]:
    """(min, max) widened when degenerate so Normalizer construction holds."""
    lo, hi = stats.min, stats.max
    if lo == hi:
        return (lo, hi + 1.0)
    return (lo, hi)


def build_encoding(
    table: PointTable,
    channel: Channel,
    by: str | None = None,
    value: float | tuple | None = None,
    map_spec: str | tuple[float, float, int] | None = None,
    norm_kind: NormKind | None = None,
    norm_domain: tuple[float, float] | None = None,
    norm_a: float = 1.0,
    reverse: bool = False,
) -> EncodingSpec:
    """Assemble a validated EncodingSpec from loose parameters.

    This is the single entry point behind both the CLI flags and the
    set_encoding control message. Omitted pieces fall back to the same
    defaults as :func:`default_encoding`: Okabe-Ito / viridis color maps, a
    linear normalizer over the column's (min, max).
    """
    if by is None:
        if value is None:
            raise ConfigError(f"{channel.value}: need a source column or a constant")
        return EncodingSpec(channel=channel, constant=value)

    kind = infer_channel_kind(table, by)
    if channel is Channel.OPACITY:
        raise ConfigError("opacity-by-column is not supported; use a constant")
    if channel is Channel.COLOR and kind is ChannelKind.CATEGORICAL:
        if map_spec is not None and not isinstance(map_spec, str):
            raise ConfigError("categorical color maps are named palettes")
        if isinstance(map_spec, str) and map_spec not in ("okabe-ito",):
            raise KindMismatchError(
                f"column {by!r} is categorical; continuous map {map_spec!r} does not apply"
            )
        stats = column_stats(table, by)
        return EncodingSpec(
            channel=Channel.COLOR,
            source=by,
            color_map=ColorMap.categorical(),
            palette_cycles=stats.unique_count > len(OKABE_ITO),
        )

    stats = column_stats(table, by)
    if norm_domain is None:
        lo, hi = default_normalizer_domain(stats)
        if (norm_kind or NormKind.LINEAR) is NormKind.LOG and lo <= 0:
            raise ConfigError(
                f"log normalizer needs a positive domain; column {by!r} reaches {lo}"
            )
    else:
        lo, hi = norm_domain
    normalizer = Normalizer(norm_kind or NormKind.LINEAR, lo, hi, a=norm_a)

    if channel is Channel.COLOR:
        if map_spec is not None and not isinstance(map_spec, str):
            raise ConfigError("continuous color maps are named lookup tables")
        return EncodingSpec(
            channel=Channel.COLOR,
            source=by,
            normalizer=normalizer,
            color_map=ColorMap.continuous(map_spec or "viridis", reverse=reverse),
        )
    if channel is Channel.SIZE:
        if map_spec is None:
            size_map = SizeMap(1.0, 8.0, 10)
        elif isinstance(map_spec, str):
            raise ConfigError("size maps are (min_px, max_px, steps) triples")
        else:
            size_map = SizeMap(float(map_spec[0]), float(map_spec[1]), int(map_spec[2]))
        return EncodingSpec(
            channel=Channel.SIZE, source=by, normalizer=normalizer, size_map=size_map
        )
    raise ConfigError(f"cannot bind channel {channel.value!r} to a column")


def default_encoding(table: PointTable, channel: Channel, column: str) -> EncodingSpec:
    """Default color encoding for a column.

    Categorical columns get the Okabe-Ito palette in sorted label order,
    cycling (and flagged as such) past 8 labels. Continuous columns get
    viridis with a linear normalizer over the column's (min, max).
    """
    if channel is not Channel.COLOR:
        raise ConfigError("defaults are defined for the color channel only")
    kind = infer_channel_kind(table, column)
    stats = column_stats(table, column)
    if kind is ChannelKind.CATEGORICAL:
        return EncodingSpec(
            channel=Channel.COLOR,
            source=column,
            color_map=ColorMap.categorical(),
            palette_cycles=stats.unique_count > len(OKABE_ITO),
        )
    lo, hi = default_normalizer_domain(stats)
    return EncodingSpec(
        channel=Channel.COLOR,
        source=column,
        normalizer=Normalizer(NormKind.LINEAR, lo, hi),
        color_map=ColorMap.continuous("viridis"),
    )
