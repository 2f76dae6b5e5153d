"""megascatter: interactive large-scale scatterplot engine.

Core pipeline: ingest a CSV into an immutable :class:`PointTable`, build a
:class:`SpatialIndex` over it, then select (lasso / explicit indices),
encode (color/size/opacity), synchronize linked views, stream over the
binary wire protocol, or render headless PNGs.
"""

from .encoding import (
    Channel,
    ColorMap,
    EncodingSpec,
    NormKind,
    Normalizer,
    OKABE_ITO,
    SizeMap,
    default_encoding,
    normalize,
    resolve_color,
    resolve_size,
)
from .errors import MegascatterError
from .quadtree import (
    Extent,
    SpatialIndex,
    build_index,
    count_extent,
    pick_nearest,
    query_extent,
)
from .selection import (
    CombineMode,
    LassoPolygon,
    SelectionSet,
    combine,
    lasso_select,
    query_select,
)
from .table import (
    CategoricalColumn,
    ChannelKind,
    ColumnStats,
    NumericColumn,
    PointTable,
    category_frequencies,
    column_stats,
    histogram,
    infer_channel_kind,
    ingest_csv,
)
from .viewstate import (
    Camera,
    ComposeGroup,
    StateDelta,
    ViewEvent,
    ViewportPx,
    apply_event,
    default_camera,
    dynamic_opacity,
    fit_camera_to_points,
)

__version__ = "0.1.0"

__all__ = [
    "Camera",
    "CategoricalColumn",
    "Channel",
    "ChannelKind",
    "ColorMap",
    "ColumnStats",
    "CombineMode",
    "ComposeGroup",
    "EncodingSpec",
    "Extent",
    "LassoPolygon",
    "MegascatterError",
    "NormKind",
    "Normalizer",
    "NumericColumn",
    "OKABE_ITO",
    "PointTable",
    "SelectionSet",
    "SizeMap",
    "SpatialIndex",
    "StateDelta",
    "ViewEvent",
    "ViewportPx",
    "apply_event",
    "build_index",
    "category_frequencies",
    "column_stats",
    "combine",
    "count_extent",
    "default_camera",
    "default_encoding",
    "dynamic_opacity",
    "fit_camera_to_points",
    "histogram",
    "infer_channel_kind",
    "ingest_csv",
    "lasso_select",
    "normalize",
    "pick_nearest",
    "query_extent",
    "query_select",
    "resolve_color",
    "resolve_size",
]
