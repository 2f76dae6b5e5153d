"""Command line entry point: serve sessions, render PNGs, print stats.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .encoding import Channel, NormKind, build_encoding
from .errors import MegascatterError
from .quadtree import Extent, build_index
from .raster import RenderEncodings, render_image
from .table import (
    CategoricalColumn,
    PointTable,
    column_stats,
    infer_channel_kind,
    ingest_csv,
)
from .viewstate import Camera, ViewportPx
from .png import write_png

DEFAULT_PORT = 8080
PORT_ENV_VAR = "MSC_PORT"

_NAMED_COLORS = {
    "black": (0, 0, 0, 255),
    "white": (255, 255, 255, 255),
    "transparent": (0, 0, 0, 0),
}


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage problems; this artifact reserves 2 for data."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _size_map_triple(text: str) -> tuple[float, float, int]:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected min,max,steps")
    try:
        return (float(parts[0]), float(parts[1]), int(parts[2]))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _extent_quad(text: str) -> Extent:
    parts = text.split(",")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("expected xmin,ymin,xmax,ymax")
    try:
        x_min, y_min, x_max, y_max = (float(p) for p in parts)
        return Extent(x_min, x_max, y_min, y_max)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _color(text: str) -> tuple[int, int, int, int]:
    if text.lower() in _NAMED_COLORS:
        return _NAMED_COLORS[text.lower()]
    raw = text.lstrip("#")
    if len(raw) not in (6, 8):
        raise argparse.ArgumentTypeError("expected a name or #RRGGBB[AA]")
    try:
        parts = [int(raw[i:i + 2], 16) for i in range(0, len(raw), 2)]
    except ValueError:
        raise argparse.ArgumentTypeError("expected a name or #RRGGBB[AA]") from None
    if len(parts) == 3:
        parts.append(255)
    return tuple(parts)


def _opacity(text: str) -> float:
    try:
        value = float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    if not (0.0 < value <= 1.0):
        raise argparse.ArgumentTypeError("opacity must lie in (0, 1]")
    return value


def _add_dataset_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--data", required=True, help="CSV file with a header row")
    parser.add_argument("--x", required=True, help="x coordinate column")
    parser.add_argument("--y", required=True, help="y coordinate column")
    parser.add_argument("--color-by", help="column driving point color")
    parser.add_argument("--size-by", help="column driving point size")
    parser.add_argument("--opacity", type=_opacity, help="constant opacity in (0, 1]")
    parser.add_argument("--color-map", help="continuous color map name (viridis, magma)")
    parser.add_argument("--size-map", type=_size_map_triple, metavar="MIN,MAX,STEPS",
                        help="stepped size map, e.g. 1,8,10")
    parser.add_argument("--norm", choices=[k.value for k in NormKind],
                        help="normalizer for by-column channels (default linear)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="megascatter", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="serve an interactive session")
    _add_dataset_flags(serve)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=None,
                       help=f"default: ${PORT_ENV_VAR} or {DEFAULT_PORT}")
    serve.add_argument("--views", type=int, default=1, help="number of linked views")
    serve.add_argument("--no-sync-selection", action="store_true")
    serve.add_argument("--no-sync-hover", action="store_true")
    serve.add_argument("--sync-view", action="store_true")
    serve.add_argument("--zoom-on-selection", action="store_true")
    serve.add_argument("--frontend", help="directory of the built frontend bundle")

    render = sub.add_parser("render", help="render a static PNG")
    _add_dataset_flags(render)
    render.add_argument("--out", required=True, help="output PNG path")
    render.add_argument("--width", type=int, default=800)
    render.add_argument("--height", type=int, default=600)
    render.add_argument("--extent", type=_extent_quad, metavar="XMIN,YMIN,XMAX,YMAX",
                        help="camera extent (default: full data bounding box)")
    render.add_argument("--background", type=_color, default=_NAMED_COLORS["black"])

    stats = sub.add_parser("stats", help="print dataset statistics")
    _add_dataset_flags(stats)
    stats.add_argument("--column", help="single column to describe (default: all)")

    return parser


def _load_table(args) -> PointTable:
    path = Path(args.data)
    if not path.is_file():
        raise MegascatterError(f"no such file: {path}")
    with open(path, "rb") as fh:
        return ingest_csv(fh, args.x, args.y)


def _encodings_from_flags(table: PointTable, args) -> RenderEncodings:
    norm_kind = NormKind(args.norm) if args.norm else None
    color = size = opacity = None
    if args.color_by:
        color = build_encoding(
            table, Channel.COLOR, by=args.color_by,
            map_spec=args.color_map, norm_kind=norm_kind,
        )
    if args.size_by:
        size = build_encoding(
            table, Channel.SIZE, by=args.size_by,
            map_spec=args.size_map, norm_kind=norm_kind,
        )
    if args.opacity is not None:
        opacity = build_encoding(table, Channel.OPACITY, value=args.opacity)
    return RenderEncodings(color=color, size=size, opacity=opacity)


def _bbox_camera(table: PointTable) -> Camera:
    from .viewstate import _widen_degenerate

    x0, x1, y0, y1 = table.bounds()
    x0, x1 = _widen_degenerate(x0, x1, x1 - x0)
    y0, y1 = _widen_degenerate(y0, y1, y1 - y0)
    return Camera(Extent(x0, x1, y0, y1))


def _cmd_render(args) -> int:
    table = _load_table(args)
    encodings = _encodings_from_flags(table, args)
    index = build_index(table)
    camera = Camera(args.extent) if args.extent else _bbox_camera(table)
    vp = ViewportPx(args.width, args.height)
    image = render_image(table, index, camera, vp, encodings, background=args.background)
    write_png(args.out, image)
    print(f"wrote {args.out} ({vp.width_px}x{vp.height_px}, {table.row_count} points)")
    return 0


def _cmd_stats(args) -> int:
    table = _load_table(args)
    if args.column:
        table.column(args.column)  # raises the named-column error first
    names = [args.column] if args.column else list(table.columns)
    print(f"rows: {table.row_count}")
    x0, x1, y0, y1 = table.bounds()
    print(f"x [{x0:g}, {x1:g}]  y [{y0:g}, {y1:g}]")
    for name in names:
        kind = infer_channel_kind(table, name)
        s = column_stats(table, name)
        col = table.columns[name]
        if isinstance(col, CategoricalColumn):
            print(f"{name}: categorical, {s.unique_count} labels")
        else:
            print(f"{name}: continuous, min {s.min:g}, max {s.max:g}"
                  + (", has nonpositive values" if s.has_nonpositive else ""))
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app, create_session

    table = _load_table(args)
    encodings = _encodings_from_flags(table, args)
    if args.views < 1:
        raise MegascatterError("--views must be >= 1")
    view_ids = [f"v{i}" for i in range(args.views)]
    session = create_session(
        "default",
        table,
        view_ids=view_ids,
        encodings=encodings,
        sync_selection=not args.no_sync_selection,
        sync_hover=not args.no_sync_hover,
        sync_view=args.sync_view,
        zoom_on_selection=args.zoom_on_selection,
    )

    static_dir = args.frontend
    if static_dir is None:
        for candidate in (
            Path.cwd() / "frontend" / "dist",
            Path(__file__).resolve().parents[2] / "frontend" / "dist",
        ):
            if candidate.is_dir():
                static_dir = candidate
                break

    port = args.port
    if port is None:
        env_port = os.environ.get(PORT_ENV_VAR)
        port = int(env_port) if env_port else DEFAULT_PORT

    app = create_app({"default": session}, static_dir=static_dir)
    print(f"serving {args.data} on http://{args.host}:{port} "
          f"({table.row_count} points, {len(view_ids)} view(s))")
    uvicorn.run(app, host=args.host, port=port, log_level="warning")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "render":
            return _cmd_render(args)
        if args.command == "stats":
            return _cmd_stats(args)
        return _cmd_serve(args)
    except MegascatterError as exc:
        print(f"megascatter: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"megascatter: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
