# dataset_io/export.py
"""
Dataset exports of a finished trace.

    full-jsonl   one canonical JSON record per line (lossless)
    flat-csv     scalar channels only, one row per tick (lossy)
    raster-pack  rasters.bin: per tick a little-endian uint32 length then the
                 row-major uint8 cell codes; rasters.idx: "tick offset length"
                 per line, offset pointing at the length prefix
"""

import json
import logging
import math
import struct
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from dataset_io.trace import Trace
from scenario_model.errors import ConfigurationError, IntegrityError
from world_engine.state import EventKind

logger = logging.getLogger(__name__)

TRACE_FILE = "trace.jsonl"
CSV_FILE = "trace.csv"
RASTER_FILE = "rasters.bin"
RASTER_INDEX_FILE = "rasters.idx"

FLAT_CSV_COLUMNS = (
    "tick", "sim_time",
    "ego_x", "ego_y", "ego_heading", "ego_speed", "ego_steer",
    "action", "throttle", "brake", "steer",
    "active_actors", "detections", "min_lidar",
    "collision", "trigger_fired", "goal_reached", "substitution",
    "terminal",
)


class ExportFormat(str, Enum):
    FULL_JSONL = "full-jsonl"
    FLAT_CSV = "flat-csv"
    RASTER_PACK = "raster-pack"


def write_full_jsonl(trace: Trace, path: Path) -> Path:
    path = Path(path)
    path.write_bytes(trace.body())
    return path


def read_full_jsonl(path: Path) -> List[Dict[str, Any]]:
    return parse_jsonl(Path(path).read_bytes())


def parse_jsonl(data: bytes) -> List[Dict[str, Any]]:
    try:
        return [json.loads(line) for line in data.decode("utf-8").splitlines() if line]
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise IntegrityError(f"unreadable trace: {e}") from None


def _action_label(action: Optional[Dict[str, Any]]) -> str:
    if action is None:
        return ""
    return action["discrete"] if "discrete" in action else "continuous"


def _has(events, kind: EventKind) -> int:
    return int(any(e["kind"] == kind.value for e in events))


def flat_rows(trace: Trace) -> List[Dict[str, Any]]:
    rows = []
    for rec in trace.records:
        obs = rec["observation"]
        control = rec["control"] or {}
        lidar = obs.get("lidar")
        detections = obs.get("detections")
        events = rec["events"]
        rows.append({
            "tick": rec["tick"],
            "sim_time": rec["sim_time"],
            "ego_x": rec["ego"]["x"],
            "ego_y": rec["ego"]["y"],
            "ego_heading": rec["ego"]["heading"],
            "ego_speed": rec["ego"]["speed"],
            "ego_steer": rec["ego"]["steer"],
            "action": _action_label(rec["action"]),
            "throttle": control.get("throttle", math.nan),
            "brake": control.get("brake", math.nan),
            "steer": control.get("steer", math.nan),
            "active_actors": sum(1 for s in rec["actors"].values() if s["active"]),
            "detections": len(detections) if detections is not None else -1,
            "min_lidar": min(lidar) if lidar else math.nan,
            "collision": _has(events, EventKind.COLLISION),
            "trigger_fired": _has(events, EventKind.TRIGGER_FIRED),
            "goal_reached": _has(events, EventKind.GOAL_REACHED),
            "substitution": _has(events, EventKind.PROTOCOL_SUBSTITUTION),
            "terminal": (rec["terminal"] or {}).get("reason", ""),
        })
    return rows


def write_flat_csv(trace: Trace, path: Path) -> Path:
    path = Path(path)
    frame = pd.DataFrame(flat_rows(trace), columns=list(FLAT_CSV_COLUMNS))
    frame.to_csv(path, index=False, lineterminator="\n")
    return path


def write_raster_pack(trace: Trace, bin_path: Path, idx_path: Path) -> Tuple[Path, Path]:
    if not trace.rasters:
        raise ConfigurationError("trace has no rasters; record the 'raster' channel to export raster-pack")
    offset = 0
    index_lines = []
    with open(bin_path, "wb") as out:
        for tick in sorted(trace.rasters):
            payload = np.ascontiguousarray(trace.rasters[tick], dtype=np.uint8).tobytes()
            out.write(struct.pack("<I", len(payload)))
            out.write(payload)
            index_lines.append(f"{tick} {offset} {len(payload)}\n")
            offset += 4 + len(payload)
    Path(idx_path).write_text("".join(index_lines), encoding="utf-8", newline="\n")
    return Path(bin_path), Path(idx_path)


def read_raster_pack(bin_path: Path, idx_path: Path) -> Dict[int, np.ndarray]:
    data = Path(bin_path).read_bytes()
    rasters: Dict[int, np.ndarray] = {}
    for n, line in enumerate(Path(idx_path).read_text(encoding="utf-8").splitlines(), start=1):
        try:
            tick, offset, length = (int(part) for part in line.split())
        except ValueError:
            raise IntegrityError(f"{idx_path}:{n}: malformed index line") from None
        if offset + 4 + length > len(data):
            raise IntegrityError(f"{idx_path}:{n}: record runs past the end of {bin_path}")
        (prefix,) = struct.unpack_from("<I", data, offset)
        if prefix != length:
            raise IntegrityError(f"{idx_path}:{n}: length prefix {prefix} != index length {length}")
        cells = math.isqrt(length)
        if cells * cells != length:
            raise IntegrityError(f"{idx_path}:{n}: raster of {length} bytes is not square")
        payload = np.frombuffer(data, dtype=np.uint8, count=length, offset=offset + 4)
        rasters[tick] = payload.reshape(cells, cells).copy()
    return rasters


def export_trace(trace: Trace, fmt: ExportFormat, out_dir: Path) -> List[Path]:
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        if fmt == ExportFormat.FULL_JSONL:
            written = [write_full_jsonl(trace, out_dir / TRACE_FILE)]
        elif fmt == ExportFormat.FLAT_CSV:
            written = [write_flat_csv(trace, out_dir / CSV_FILE)]
        else:
            written = list(write_raster_pack(trace, out_dir / RASTER_FILE, out_dir / RASTER_INDEX_FILE))
    except OSError as e:
        raise ConfigurationError(f"cannot write {fmt.value} export to {out_dir}: {e}") from None
    logger.debug("[+] Exported %s to %s", fmt.value, out_dir)
    return written
