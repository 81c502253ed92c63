"""CSV, JSON, SVG and manifest writers.

CSV floats use the shortest round-trip representation so repeated runs are
byte-identical and files reload losslessly.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


_BOOLS = {"true": 1.0, "false": 0.0}


def read_csv(path) -> tuple[list[str], np.ndarray]:
    """Header and numeric body; ``true``/``false`` load as 1.0/0.0."""
    with Path(path).open() as fh:
        r = csv.reader(fh)
        header = next(r)
        data = [[_BOOLS[x] if x in _BOOLS else float(x) for x in row] for row in r]
    return header, np.asarray(data, dtype=float)


def _jsonable(o):
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if hasattr(o, "value"):
        return o.value
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_jsonable, allow_nan=True) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(dumps(obj))
    return path


def sha256(path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


MANIFEST = "manifest.json"


def write_manifest(out_dir, config: dict, timings: dict, versions: dict) -> Path:
    """List every file in ``out_dir`` with its SHA-256."""
    out_dir = Path(out_dir)
    files = sorted(p for p in out_dir.rglob("*") if p.is_file() and p.name != MANIFEST)
    entries = [{"path": str(p.relative_to(out_dir)), "sha256": sha256(p),
                "bytes": p.stat().st_size} for p in files]
    return write_json(out_dir / MANIFEST, {"config": config, "files": entries,
                                           "versions": versions, "timings_s": timings})


def verify_manifest(out_dir) -> list[str]:
    """Problems found when checking the manifest against the directory (empty if none)."""
    out_dir = Path(out_dir)
    man = json.loads((out_dir / MANIFEST).read_text())
    listed = {e["path"]: e["sha256"] for e in man["files"]}
    problems = []
    for p in sorted(out_dir.rglob("*")):
        if not p.is_file() or p.name == MANIFEST:
            continue
        rel = str(p.relative_to(out_dir))
        if rel not in listed:
            problems.append(f"unlisted file {rel}")
        elif listed.pop(rel) != sha256(p):
            problems.append(f"hash mismatch {rel}")
    problems += [f"missing file {k}" for k in listed]
    return problems


# --- SVG -------------------------------------------------------------------

W, H = 800, 600
LEFT, RIGHT, TOP, BOTTOM = 80, 30, 50, 70
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _nice_ticks(lo: float, hi: float, n: int = 6) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    out = []
    v = start
    while v <= hi + 1e-12 * abs(step):
        out.append(round(v, 12))
        v += step
    return out


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def svg_line_chart(path, series, title: str = "", xlabel: str = "", ylabel: str = "",
                   hlines: Sequence[float] = (), logx: bool = False,
                   logy: bool = False) -> Path:
    """Standalone 800x600 SVG line chart.

    ``series`` is a list of ``(label, x, y)``; ``hlines`` draws dashed
    horizontal reference lines (for example ``y = 0``).
    """
    tx = (lambda v: np.log10(v)) if logx else (lambda v: np.asarray(v, dtype=float))
    ty = (lambda v: np.log10(v)) if logy else (lambda v: np.asarray(v, dtype=float))
    xs = [tx(np.asarray(x, dtype=float)) for _, x, _ in series]
    ys = [ty(np.asarray(y, dtype=float)) for _, _, y in series]
    allx = np.concatenate(xs)
    ally = np.concatenate(ys + [np.asarray(hlines, dtype=float)])
    allx, ally = allx[np.isfinite(allx)], ally[np.isfinite(ally)]
    x0, x1 = float(allx.min()), float(allx.max())
    y0, y1 = float(ally.min()), float(ally.max())
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    pad = 0.05 * (y1 - y0) if y1 > y0 else 0.5 * max(abs(y0), 1e-12)
    y0, y1 = y0 - pad, y1 + pad
    pw, ph = W - LEFT - RIGHT, H - TOP - BOTTOM

    def X(v):
        return LEFT + (v - x0) / (x1 - x0) * pw

    def Y(v):
        return TOP + (y1 - v) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {W} {H}" '
           f'width="{W}" height="{H}" font-family="sans-serif" font-size="13">',
           f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
           f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for v in _nice_ticks(x0, x1):
        lab = f"{10 ** v:.3g}" if logx else f"{v:.6g}"
        out.append(f'<line x1="{X(v):.2f}" y1="{TOP + ph}" x2="{X(v):.2f}" y2="{TOP + ph + 5}" '
                   f'stroke="black"/><text x="{X(v):.2f}" y="{TOP + ph + 20}" '
                   f'text-anchor="middle">{lab}</text>')
    for v in _nice_ticks(y0, y1):
        lab = f"{10 ** v:.3g}" if logy else f"{v:.6g}"
        out.append(f'<line x1="{LEFT - 5}" y1="{Y(v):.2f}" x2="{LEFT}" y2="{Y(v):.2f}" '
                   f'stroke="black"/><text x="{LEFT - 8}" y="{Y(v) + 4:.2f}" '
                   f'text-anchor="end">{lab}</text>')
    for v in hlines:
        vv = float(ty(v))
        out.append(f'<line x1="{LEFT}" y1="{Y(vv):.2f}" x2="{LEFT + pw}" y2="{Y(vv):.2f}" '
                   f'stroke="gray" stroke-dasharray="6,4"/>')
    for k, ((label, _, _), x, y) in enumerate(zip(series, xs, ys)):
        color = PALETTE[k % len(PALETTE)]
        ok = np.isfinite(x) & np.isfinite(y)
        pts = " ".join(f"{X(a):.2f},{Y(b):.2f}" for a, b in zip(x[ok], y[ok]))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{pts}"/>')
        out.append(f'<text x="{LEFT + pw - 10}" y="{TOP + 20 + 18 * k}" text-anchor="end" '
                   f'fill="{color}">{_esc(label)}</text>')
    out.append(f'<text x="{W / 2}" y="28" text-anchor="middle" font-size="16">{_esc(title)}</text>')
    out.append(f'<text x="{LEFT + pw / 2}" y="{H - 20}" text-anchor="middle">{_esc(xlabel)}</text>')
    out.append(f'<text x="20" y="{TOP + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 20 {TOP + ph / 2})">{_esc(ylabel)}</text>')
    out.append("</svg>\n")
    path = Path(path)
    path.write_text("\n".join(out))
    return path
