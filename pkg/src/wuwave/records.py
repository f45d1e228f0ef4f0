"""Run records: manifests, CSV time series, binary checkpoints and SVG plots.

CSV files start with a versioned comment line ``# wuwave <schema> v<N>``
followed by the column header; numbers are written with 17 significant
digits so that they round-trip exactly.

Checkpoints are a plain-text header terminated by ``end_header`` and then
the arrays zeta - alpha and D_t zeta as interleaved (re, im) little-endian
float64 values, offset first.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path

import numpy as np

from .spectral import Grid
from .waterwave import WaterState

CSV_VERSION = 1
CHECKPOINT_VERSION = 1
MANIFEST_VERSION = 1


# --------------------------------------------------------------------------
# manifests


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def content_hash(text: str) -> str:
    """Git-style blob hash (sha1 of 'blob <len>\\0' + content)."""
    data = text.encode("utf-8")
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def write_manifest(path, command: str, config: dict, extra: dict | None = None) -> dict:
    """Write the run manifest; the hash covers the command and full config."""
    inputs = {"command": command, "config": config}
    manifest = {
        "schema": f"wuwave-manifest v{MANIFEST_VERSION}",
        "command": command,
        "config": config,
        "input_hash": content_hash(canonical_json(inputs)),
    }
    if extra:
        manifest.update(extra)
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return manifest


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


# --------------------------------------------------------------------------
# CSV


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


class CsvWriter:
    """Append-only CSV with a versioned schema line; rows are flushed as written."""

    def __init__(self, path, schema: str, columns):
        self.path = Path(path)
        self.columns = list(columns)
        self._fh = open(self.path, "w", newline="", encoding="utf-8")
        self._fh.write(f"# wuwave {schema} v{CSV_VERSION}\n")
        self._writer = csv.writer(self._fh, lineterminator="\n")
        self._writer.writerow(self.columns)
        self._fh.flush()

    def write(self, row: dict) -> None:
        self._writer.writerow([format_value(row[c]) for c in self.columns])
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_csv(path, schema: str, columns, rows) -> None:
    with CsvWriter(path, schema, columns) as w:
        for row in rows:
            w.write(row)


def read_csv(path) -> tuple[str, list[dict]]:
    """(schema line, rows as dicts of floats)."""
    with open(path, encoding="utf-8") as fh:
        schema = fh.readline().strip()
        rows = [{k: float(v) for k, v in row.items()} for row in csv.DictReader(fh)]
    return schema, rows


# --------------------------------------------------------------------------
# checkpoints


def write_checkpoint(path, state: WaterState, eps: float) -> None:
    g = state.grid
    header = (
        f"wuwave checkpoint v{CHECKPOINT_VERSION}\n"
        f"grid q={g.q!r} n={g.n}\n"
        f"t {state.t!r}\n"
        f"eps {eps!r}\n"
        f"q {g.q!r}\n"
        f"n {g.n}\n"
        "layout offset,u interleaved re/im float64 little-endian\n"
        "end_header\n"
    )
    data = np.empty(4 * g.n, dtype="<f8")
    data[0:2 * g.n:2] = state.offset.real
    data[1:2 * g.n:2] = state.offset.imag
    data[2 * g.n::2] = state.u.real
    data[2 * g.n + 1::2] = state.u.imag
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(data.tobytes())


def read_checkpoint(path) -> tuple[WaterState, float]:
    """(state, eps) from a checkpoint file."""
    with open(path, "rb") as fh:
        blob = fh.read()
    marker = b"end_header\n"
    cut = blob.index(marker) + len(marker)
    fields = {}
    for line in blob[:cut].decode("ascii").splitlines()[1:-1]:
        key, _, value = line.partition(" ")
        fields[key] = value
    n = int(fields["n"])
    grid = Grid(float(fields["q"]), n)
    data = np.frombuffer(blob[cut:], dtype="<f8")
    if data.size != 4 * n:
        raise ValueError(f"checkpoint holds {data.size} values, expected {4 * n}")
    offset = data[0:2 * n:2] + 1j * data[1:2 * n:2]
    u = data[2 * n::2] + 1j * data[2 * n + 1::2]
    return WaterState(grid, float(fields["t"]), offset, u), float(fields["eps"])


# --------------------------------------------------------------------------
# plots


def plot_series(path, series: dict, xlabel: str, ylabel: str, title: str = "",
                logy: bool = False) -> None:
    """Static SVG line plot; series maps a label to (x, y)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "wuwave"
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for label, (x, y) in series.items():
        ax.plot(x, y, label=label)
    # a log axis needs positive data (an unperturbed run has zero sidebands)
    if logy and any(np.any(np.asarray(y, dtype=float) > 0) for _, y in series.values()):
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if len(series) > 1:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
