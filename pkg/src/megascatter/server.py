"""Session service: routes control/data messages between core and clients.

A :class:`Session` owns one dataset, its spatial index, one
:class:`ComposeGroup`, per-view encodings, and the registry of connected
clients. :func:`handle_message` is the transport-agnostic heart: it takes one
inbound envelope from one client and returns the ordered list of
(connection, envelope) pairs to deliver. The websocket layer below it only
moves bytes and serializes events per session.

Protocol notes (see wire.py for the frame layout):
  - Clients must send ``hello`` first; the reply is a ``dataset_info``
    control message followed by a binary points chunk with every column.
  - Bulk selections travel as binary selection frames. A broadcast frame is
    announced by a ``selection_update`` control message whose body carries
    ``{"binary": true}``; the next binary message on that connection is the
    frame it announced.
  - A client subscribed to exactly one view may send bare selection/camera
    frames; with several subscriptions the view must be named in a control
    message instead.
"""

from __future__ import annotations

import asyncio
import itertools
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Union

import numpy as np

from . import wire
from .encoding import Channel, EncodingSpec, NormKind, build_encoding
from .errors import (
    ColumnError,
    ConfigError,
    EmptySelectionError,
    InvalidPolygonError,
    KindMismatchError,
    MegascatterError,
    MembershipError,
    ProtocolError,
    SelectionRangeError,
)
from .quadtree import Extent, SpatialIndex, count_extent, pick_nearest
from .raster import RenderEncodings
from .selection import LassoPolygon, SelectionSet, lasso_select, query_select
from .table import CategoricalColumn, PointTable, category_frequencies, column_stats, histogram
from .viewstate import (
    Camera,
    ComposeGroup,
    ViewEvent,
    ViewportPx,
    apply_event,
    dynamic_opacity,
)

Envelope = Union[wire.ControlMessage, wire.Frame]
Outgoing = list[tuple[str, Envelope]]

TOOLTIP_BINS = 16

_ERROR_CODES = {
    ProtocolError: "protocol",
    ColumnError: "column",
    SelectionRangeError: "range",
    InvalidPolygonError: "polygon",
    ConfigError: "config",
    MembershipError: "membership",
    KindMismatchError: "kind",
    EmptySelectionError: "selection",
}


@dataclass
class Session:
    """One dataset, one compose group, many clients."""

    session_id: str
    table: PointTable
    index: SpatialIndex
    group: ComposeGroup
    encodings: dict[str, RenderEncodings]
    clients: dict[str, set[str]] = field(default_factory=dict)
    selection_observers: list[Callable[[str, SelectionSet], None]] = field(default_factory=list)

    @property
    def view_ids(self) -> list[str]:
        return list(self.group.views)

    def observe_selection(self, callback: Callable[[str, SelectionSet], None]) -> None:
        """Register a programmatic observer; called on every selection change."""
        self.selection_observers.append(callback)

    def view_alpha(self, view_id: str) -> float:
        state = self.group.view(view_id)
        visible = count_extent(self.index, state.camera.extent)
        size = self.encodings.get(view_id, RenderEncodings()).representative_size()
        return dynamic_opacity(visible, size, state.viewport)


def create_session(
    session_id: str,
    table: PointTable,
    view_ids: list[str] | None = None,
    encodings: RenderEncodings | None = None,
    viewport: ViewportPx = ViewportPx(640, 480),
    sync_selection: bool = True,
    sync_hover: bool = True,
    sync_view: bool = False,
    zoom_on_selection: bool = False,
) -> Session:
    from .quadtree import build_index

    ids = view_ids or ["v0"]
    group = ComposeGroup.create(
        table,
        ids,
        viewport=viewport,
        sync_selection=sync_selection,
        sync_hover=sync_hover,
        sync_view=sync_view,
        zoom_on_selection=zoom_on_selection,
    )
    enc = encodings or RenderEncodings()
    return Session(
        session_id=session_id,
        table=table,
        index=build_index(table),
        group=group,
        encodings={vid: enc for vid in ids},
    )


def _error_envelope(session: Session, view: str | None, exc: Exception) -> wire.ControlMessage:
    code = "internal"
    for klass, name in _ERROR_CODES.items():
        if isinstance(exc, klass):
            code = name
            break
    return wire.ControlMessage(
        type="error",
        session=session.session_id,
        view=view,
        body={"code": code, "message": str(exc)},
    )


def _encoding_json(spec: EncodingSpec | None) -> dict | None:
    if spec is None:
        return None
    out: dict = {"channel": spec.channel.value}
    if spec.constant is not None:
        out["value"] = spec.constant if not isinstance(spec.constant, tuple) else list(spec.constant)
    if spec.source is not None:
        out["by"] = spec.source
    if spec.normalizer is not None:
        out["norm"] = {
            "kind": spec.normalizer.kind.value,
            "domain": [spec.normalizer.v_min, spec.normalizer.v_max],
            "a": spec.normalizer.a,
        }
    if spec.color_map is not None:
        if spec.color_map.lut_name:
            out["map"] = spec.color_map.lut_name
            out["order"] = "reverse" if spec.color_map.reverse else "forward"
        else:
            out["map"] = "okabe-ito"
            out["palette_cycles"] = spec.palette_cycles
    if spec.size_map is not None:
        out["map"] = [spec.size_map.min_px, spec.size_map.max_px, spec.size_map.step_count]
    return out


def _column_info(session: Session, name: str) -> dict:
    col = session.table.columns[name]
    stats = column_stats(session.table, name)
    if isinstance(col, CategoricalColumn):
        return {
            "name": name,
            "kind": "categorical",
            "min": stats.min,
            "max": stats.max,
            "has_nonpositive": stats.has_nonpositive,
            "unique_count": stats.unique_count,
            "labels": list(col.labels),
            "distribution": {"frequencies": category_frequencies(session.table, name)},
        }
    width = (stats.max - stats.min) / TOOLTIP_BINS if session.table.row_count else 0.0
    return {
        "name": name,
        "kind": "continuous",
        "min": stats.min,
        "max": stats.max,
        "has_nonpositive": stats.has_nonpositive,
        "distribution": {
            "bins": histogram(session.table, name, TOOLTIP_BINS),
            "bin_start": stats.min,
            "bin_width": width,
        },
    }


def _view_info(session: Session, view_id: str) -> dict:
    state = session.group.view(view_id)
    enc = session.encodings.get(view_id, RenderEncodings())
    e = state.camera.extent
    return {
        "id": view_id,
        "camera": [e.x_min, e.x_max, e.y_min, e.y_max],
        "alpha": session.view_alpha(view_id),
        "selection_count": len(state.selection),
        "hovered": state.hovered,
        "encodings": {
            "color": _encoding_json(enc.color),
            "size": _encoding_json(enc.size),
            "opacity": _encoding_json(enc.opacity),
        },
    }


def _dataset_info(session: Session) -> wire.ControlMessage:
    g = session.group
    return wire.ControlMessage(
        type="dataset_info",
        session=session.session_id,
        body={
            "row_count": session.table.row_count,
            "bounds": list(session.table.bounds()),
            "columns": [_column_info(session, n) for n in session.table.columns],
            "views": [_view_info(session, vid) for vid in session.view_ids],
            "sync": {
                "selection": g.sync_selection,
                "hover": g.sync_hover,
                "view": g.sync_view,
                "zoom_on_selection": g.zoom_on_selection,
            },
        },
    )


def _row_record(session: Session, row: int) -> dict:
    record: dict = {
        "x": float(session.table.x[row]),
        "y": float(session.table.y[row]),
    }
    for name, col in session.table.columns.items():
        if isinstance(col, CategoricalColumn):
            record[name] = col.labels[int(col.codes[row])]
        else:
            record[name] = float(col.values[row])
    return record


def _view_update_msg(session: Session, view_id: str, include_extent: bool) -> wire.ControlMessage:
    state = session.group.view(view_id)
    body: dict = {"alpha": session.view_alpha(view_id)}
    if include_extent:
        e = state.camera.extent
        body["extent"] = [e.x_min, e.x_max, e.y_min, e.y_max]
    return wire.ControlMessage(
        type="view_update", session=session.session_id, view=view_id, body=body
    )


def _selection_announcement(session: Session, view_id: str, count: int) -> wire.ControlMessage:
    return wire.ControlMessage(
        type="selection_update",
        session=session.session_id,
        view=view_id,
        body={"count": count, "binary": True},
    )


def _clients_for_view(session: Session, view_id: str) -> list[str]:
    return [cid for cid, views in session.clients.items() if view_id in views]


def _require_view(session: Session, msg: wire.ControlMessage) -> str:
    if msg.view is None:
        raise ProtocolError(f"{msg.type} requires a view id")
    if msg.view not in session.group.views:
        raise MembershipError(msg.view)
    return msg.view


def _parse_selection_body(session: Session, body: dict) -> SelectionSet:
    if "indices" in body:
        raw = body["indices"]
        if not isinstance(raw, list):
            raise ProtocolError("'indices' must be a list of integers")
        return query_select(session.table, raw)
    if "lasso" in body:
        verts = body["lasso"]
        if not isinstance(verts, list):
            raise ProtocolError("'lasso' must be a list of [x, y] vertices")
        poly = LassoPolygon(np.asarray(verts, dtype=np.float64).reshape(-1, 2))
        return lasso_select(session.index, session.table, poly)
    raise ProtocolError("selection_update needs 'indices' or 'lasso'")


def _apply_and_fanout(
    session: Session,
    client: str,
    origin_view: str,
    event: ViewEvent,
    origin_knows_selection: bool,
) -> Outgoing:
    """Run one event through the group and translate deltas to messages."""
    before = session.group
    after, deltas = apply_event(before, event)
    session.group = after

    out: Outgoing = []
    if event.selection is not None:
        for observer in session.selection_observers:
            observer(origin_view, event.selection)

    # Per-view deltas go to every subscribed client except the origin; the
    # origin client still receives server-computed news (cameras, lasso
    # results) it could not know.
    sent_selection: set[str] = set()
    for view_id, delta in deltas:
        for cid in _clients_for_view(session, view_id):
            if cid == client:
                continue
            if delta.selection is not None and cid not in sent_selection:
                out.append((cid, _selection_announcement(session, view_id, len(delta.selection))))
                out.append((cid, wire.encode_selection(delta.selection)))
                sent_selection.add(cid)
            if delta.camera is not None:
                out.append((cid, _view_update_msg(session, view_id, include_extent=True)))
            if delta.hover_changed:
                body = {"row": delta.hovered}
                if delta.hovered is not None:
                    body["record"] = _row_record(session, delta.hovered)
                out.append((cid, wire.ControlMessage(
                    type="hover_update", session=session.session_id, view=view_id, body=body,
                )))

    if event.selection is not None and not origin_knows_selection:
        out.append((client, _selection_announcement(session, origin_view, len(event.selection))))
        out.append((client, wire.encode_selection(event.selection)))
    origin_cam_changed = (
        before.view(origin_view).camera != after.view(origin_view).camera
    )
    if origin_cam_changed:
        include_extent = event.camera is None  # a camera event's origin sent the extent
        out.append((client, _view_update_msg(session, origin_view, include_extent)))
    elif event.camera is not None:
        out.append((client, _view_update_msg(session, origin_view, include_extent=False)))
    return out


def _handle_hello(session: Session, client: str, msg: wire.ControlMessage) -> Outgoing:
    subscribe = msg.body.get("subscribe")
    if subscribe is None:
        views = set(session.view_ids)
    else:
        if not isinstance(subscribe, list) or not subscribe:
            raise ProtocolError("'subscribe' must be a nonempty list of view ids")
        views = set()
        for vid in subscribe:
            if vid not in session.group.views:
                raise MembershipError(str(vid))
            views.add(vid)
    session.clients[client] = views

    viewport = msg.body.get("viewport")
    if viewport is not None:
        vp = ViewportPx(int(viewport["width"]), int(viewport["height"]))
        new_views = dict(session.group.views)
        for vid in views:
            new_views[vid] = replace(new_views[vid], viewport=vp)
        session.group = replace(session.group, views=new_views)

    out: Outgoing = [(client, _dataset_info(session))]
    # "x"/"y" are reserved wire names for the coordinate columns, which the
    # chunk always carries first; skip aux columns that would collide.
    aux = tuple(n for n in session.table.columns if n not in ("x", "y"))
    out.append((client, wire.encode_points_chunk(session.table, columns=aux)))
    return out


def _handle_selection_update(session: Session, client: str, msg: wire.ControlMessage) -> Outgoing:
    view = _require_view(session, msg)
    sel = _parse_selection_body(session, msg.body)
    return _apply_and_fanout(
        session, client, view, ViewEvent.select(view, sel),
        origin_knows_selection="indices" in msg.body,
    )


def _handle_view_update(session: Session, client: str, msg: wire.ControlMessage) -> Outgoing:
    view = _require_view(session, msg)
    body = msg.body
    viewport = body.get("viewport")
    if viewport is not None:
        vp = ViewportPx(int(viewport["width"]), int(viewport["height"]))
        new_views = dict(session.group.views)
        new_views[view] = replace(new_views[view], viewport=vp)
        session.group = replace(session.group, views=new_views)
    extent = body.get("extent")
    if extent is None:
        return [(client, _view_update_msg(session, view, include_extent=False))]
    if not (isinstance(extent, list) and len(extent) == 4):
        raise ProtocolError("'extent' must be [x_min, x_max, y_min, y_max]")
    try:
        cam = Camera(Extent(*[float(v) for v in extent]))
    except (TypeError, ValueError) as exc:
        raise ProtocolError(f"invalid extent: {exc}") from None
    return _apply_and_fanout(session, client, view, ViewEvent.move_camera(view, cam), True)


def _handle_hover_update(session: Session, client: str, msg: wire.ControlMessage) -> Outgoing:
    view = _require_view(session, msg)
    body = msg.body
    if "pick" in body:
        probe = body["pick"]
        if not (isinstance(probe, list) and len(probe) == 2):
            raise ProtocolError("'pick' must be [x, y]")
        max_dist = float(body.get("max_dist", 0.0))
        if not (math.isfinite(max_dist) and max_dist > 0):
            raise ProtocolError("'max_dist' must be a positive number")
        row = pick_nearest(session.index, float(probe[0]), float(probe[1]), max_dist)
    elif "row" in body:
        row = body["row"]
        if row is not None:
            row = int(row)
            if not (0 <= row < session.table.row_count):
                raise SelectionRangeError(row, session.table.row_count)
    else:
        raise ProtocolError("hover_update needs 'row' or 'pick'")

    out = _apply_and_fanout(session, client, view, ViewEvent.hover(view, row), True)
    reply_body: dict = {"row": row}
    if row is not None:
        reply_body["record"] = _row_record(session, row)
    out.append((client, wire.ControlMessage(
        type="hover_update", session=session.session_id, view=view, body=reply_body,
    )))
    return out


def _handle_set_encoding(session: Session, client: str, msg: wire.ControlMessage) -> Outgoing:
    view = _require_view(session, msg)
    body = msg.body
    channel_name = body.get("channel")
    try:
        channel = Channel(channel_name)
    except ValueError:
        raise ProtocolError(f"unknown channel {channel_name!r}") from None

    map_spec = body.get("map")
    if isinstance(map_spec, list):
        if len(map_spec) != 3:
            raise ProtocolError("a size map is [min_px, max_px, steps]")
        map_spec = (float(map_spec[0]), float(map_spec[1]), int(map_spec[2]))
    norm = body.get("norm") or {}
    norm_kind = NormKind(norm["kind"]) if "kind" in norm else None
    domain = tuple(norm["domain"]) if "domain" in norm else None
    value = body.get("value")
    spec = build_encoding(
        session.table,
        channel,
        by=body.get("by"),
        value=tuple(value) if isinstance(value, list) else value,
        map_spec=map_spec,
        norm_kind=norm_kind,
        norm_domain=domain,
        norm_a=float(norm.get("a", 1.0)),
        reverse=body.get("order") == "reverse",
    )
    enc = session.encodings.get(view, RenderEncodings())
    session.encodings[view] = replace(enc, **{channel.value: spec})

    notice = wire.ControlMessage(
        type="set_encoding",
        session=session.session_id,
        view=view,
        body={"encoding": _encoding_json(spec), "alpha": session.view_alpha(view)},
    )
    return [(cid, notice) for cid in _clients_for_view(session, view)]


_CONTROL_HANDLERS = {
    "hello": _handle_hello,
    "selection_update": _handle_selection_update,
    "view_update": _handle_view_update,
    "hover_update": _handle_hover_update,
    "set_encoding": _handle_set_encoding,
}


def _sole_view(session: Session, client: str) -> str:
    views = session.clients.get(client, set())
    if len(views) != 1:
        raise ProtocolError(
            "bare binary frames are only accepted from clients subscribed to "
            "exactly one view; name the view in a control message instead"
        )
    return next(iter(views))


def handle_message(session: Session, client: str, msg: Envelope) -> Outgoing:
    """Process one inbound envelope; never raises for client mistakes.

    Returns (connection id, envelope) pairs in delivery order. Errors caused
    by the message produce a single error envelope back to the sender.
    """
    try:
        if isinstance(msg, wire.Frame):
            if client not in session.clients:
                raise ProtocolError("send hello before any other message")
            view = _sole_view(session, client)
            if msg.frame_type == wire.FRAME_SELECTION:
                sel = wire.decode_selection(msg)
                if len(sel) and int(sel.indices[-1]) >= session.table.row_count:
                    raise SelectionRangeError(int(sel.indices[-1]), session.table.row_count)
                return _apply_and_fanout(session, client, view, ViewEvent.select(view, sel), True)
            if msg.frame_type == wire.FRAME_CAMERA:
                cam = wire.decode_camera(msg)
                return _apply_and_fanout(session, client, view, ViewEvent.move_camera(view, cam), True)
            raise ProtocolError(f"clients may not send frame type {msg.frame_type}")

        if msg.type == "hello":
            return _handle_hello(session, client, msg)
        if client not in session.clients:
            raise ProtocolError("send hello before any other message")
        handler = _CONTROL_HANDLERS.get(msg.type)
        if handler is None:
            raise ProtocolError(f"clients may not send {msg.type!r} messages")
        return handler(session, client, msg)
    except MegascatterError as exc:
        return [(client, _error_envelope(session, msg.view if isinstance(msg, wire.ControlMessage) else None, exc))]
    except (KeyError, TypeError, ValueError) as exc:
        return [(client, _error_envelope(session, None, ProtocolError(f"malformed message: {exc}")))]


def drop_client(session: Session, client: str) -> None:
    session.clients.pop(client, None)


# --------------------------------------------------------------------------
# Websocket transport


def create_app(sessions: dict[str, Session], static_dir: str | Path | None = None):
    """FastAPI app exposing /ws plus the frontend's static bundle."""
    from fastapi import FastAPI, WebSocket, WebSocketDisconnect
    from fastapi.responses import HTMLResponse
    from fastapi.staticfiles import StaticFiles

    app = FastAPI(title="megascatter")
    locks = {sid: asyncio.Lock() for sid in sessions}
    conn_ids = itertools.count()
    sockets: dict[str, dict[str, object]] = {sid: {} for sid in sessions}

    static_path = Path(static_dir) if static_dir else None
    have_static = static_path is not None and static_path.is_dir()

    @app.get("/healthz")
    async def healthz():
        return {
            "sessions": {
                sid: {"rows": s.table.row_count, "clients": len(s.clients)}
                for sid, s in sessions.items()
            }
        }

    if have_static:
        app.mount("/app", StaticFiles(directory=str(static_path), html=True), name="app")

        @app.get("/")
        async def index():
            return HTMLResponse(
                '<!doctype html><meta http-equiv="refresh" content="0; url=/app/">'
            )
    else:

        @app.get("/")
        async def index_placeholder():
            return HTMLResponse(
                "<!doctype html><title>megascatter</title>"
                "<p>megascatter server is running. The frontend bundle is not "
                "built; connect over the websocket endpoint at /ws.</p>"
            )

    @app.websocket("/ws")
    async def ws_endpoint(websocket: WebSocket):
        session_id = websocket.query_params.get("session", "default")
        session = sessions.get(session_id)
        await websocket.accept()
        if session is None:
            await websocket.send_text(wire.ControlMessage(
                type="error", session=session_id,
                body={"code": "session", "message": f"unknown session {session_id!r}"},
            ).to_json())
            await websocket.close()
            return
        client = f"c{next(conn_ids)}"
        registry = sockets[session_id]
        registry[client] = websocket
        lock = locks[session_id]
        try:
            while True:
                message = await websocket.receive()
                if message.get("type") == "websocket.disconnect":
                    break
                if message.get("bytes") is not None:
                    try:
                        envelope: Envelope = wire.parse_frame(message["bytes"])
                    except MegascatterError as exc:
                        await websocket.send_text(_error_envelope(session, None, exc).to_json())
                        continue
                elif message.get("text") is not None:
                    try:
                        envelope = wire.decode_control(message["text"])
                    except MegascatterError as exc:
                        await websocket.send_text(_error_envelope(session, None, exc).to_json())
                        continue
                else:
                    continue
                async with lock:
                    outgoing = handle_message(session, client, envelope)
                    await _deliver(registry, outgoing)
        except WebSocketDisconnect:
            pass
        finally:
            registry.pop(client, None)
            async with lock:
                drop_client(session, client)

    return app


async def _deliver(registry: dict, outgoing: Outgoing):
    for target, envelope in outgoing:
        socket = registry.get(target)
        if socket is None:
            continue  # client gone mid-broadcast; others still get theirs
        if isinstance(envelope, wire.Frame):
            await socket.send_bytes(envelope.to_bytes())
        else:
            await socket.send_text(envelope.to_json())
