"""Snapshot, schedule and spectrum file formats.

Decimal output uses 17 significant digits so that doubles survive a text
round trip exactly.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .ladder import Boundary, LadderConfig, LadderState

MAGIC = b"LCH1"
_HEADER = struct.Struct("<4sdqddBqdB")


def fmt(x) -> str:
    return format(float(x), ".17g")


def _boundary_tag(b: Boundary) -> str:
    if b.is_periodic:
        return "periodic"
    return f"absorbing:{b.sponge_width}:{fmt(b.max_damping)}"


def _parse_boundary(tag: str) -> Boundary:
    if tag == "periodic":
        return Boundary.periodic()
    parts = tag.split(":")
    if parts[0] != "absorbing" or len(parts) != 3:
        raise ConfigError(f"bad boundary tag {tag!r}")
    return Boundary.absorbing(int(parts[1]), float(parts[2]))


def write_snapshot_csv(path, state: LadderState, config: LadderConfig) -> None:
    cplx = np.iscomplexobj(state.a) or np.iscomplexobj(state.q)
    lines = [f"# t={fmt(state.t)}", f"# n_cells={state.n_cells}", f"# inductance={fmt(config.inductance)}",
             f"# dx={fmt(config.dx)}", f"# boundary={_boundary_tag(config.boundary)}"]
    if cplx:
        lines.append("n,A_re,A_im,Q_re,Q_im")
        for n, (a, q) in enumerate(zip(state.a, state.q)):
            lines.append(f"{n},{fmt(a.real)},{fmt(a.imag)},{fmt(q.real)},{fmt(q.imag)}")
    else:
        lines.append("n,A,Q")
        for n, (a, q) in enumerate(zip(state.a, state.q)):
            lines.append(f"{n},{fmt(a)},{fmt(q)}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_snapshot_csv(path):
    """Return (state, header) where header holds n_cells, inductance, dx and boundary."""
    header = {}
    rows = []
    cols = None
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition("=")
            header[key] = val
        elif cols is None:
            cols = line.split(",")
        elif line:
            rows.append([float(s) for s in line.split(",")])
    if cols is None:
        raise ConfigError(f"{path}: missing column header")
    data = np.array(rows).reshape(-1, len(cols))
    if cols == ["n", "A", "Q"]:
        a, q = data[:, 1].copy(), data[:, 2].copy()
    elif cols == ["n", "A_re", "A_im", "Q_re", "Q_im"]:
        a = data[:, 1] + 1j * data[:, 2]
        q = data[:, 3] + 1j * data[:, 4]
    else:
        raise ConfigError(f"{path}: unknown columns {cols}")
    info = {"n_cells": int(header["n_cells"]), "inductance": float(header["inductance"]),
            "dx": float(header["dx"]), "boundary": _parse_boundary(header["boundary"])}
    if a.size != info["n_cells"]:
        raise ConfigError(f"{path}: {a.size} rows for {info['n_cells']} cells")
    return LadderState(a, q, float(header["t"])), info


def write_snapshot_binary(path, state: LadderState, config: LadderConfig) -> None:
    cplx = np.iscomplexobj(state.a) or np.iscomplexobj(state.q)
    b = config.boundary
    head = _HEADER.pack(MAGIC, state.t, state.n_cells, config.inductance, config.dx,
                        0 if b.is_periodic else 1, b.sponge_width, b.max_damping, int(cplx))
    dtype = "<c16" if cplx else "<f8"
    with open(path, "wb") as fh:
        fh.write(head)
        fh.write(np.asarray(state.a, dtype=dtype).tobytes())
        fh.write(np.asarray(state.q, dtype=dtype).tobytes())


def read_snapshot_binary(path):
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise ConfigError(f"{path}: not a snapshot file (bad magic)")
    _, t, n, L, dx, kind, width, damping, cplx = _HEADER.unpack_from(raw)
    dtype = np.dtype("<c16" if cplx else "<f8")
    body = np.frombuffer(raw, dtype=dtype, offset=_HEADER.size)
    if body.size != 2 * n:
        raise ConfigError(f"{path}: truncated snapshot")
    boundary = Boundary.periodic() if kind == 0 else Boundary.absorbing(width, damping)
    info = {"n_cells": n, "inductance": L, "dx": dx, "boundary": boundary}
    return LadderState(body[:n].astype(dtype.newbyteorder("=")), body[n:].astype(dtype.newbyteorder("=")), t), info


def write_schedule_csv(path, caps, times) -> None:
    """Sampled capacitance table with one row per (cell, time)."""
    lines = ["cell,time,C"]
    for t in times:
        c = caps.values(t)
        lines.extend(f"{n},{fmt(t)},{fmt(v)}" for n, v in enumerate(c))
    Path(path).write_text("\n".join(lines) + "\n")


def _meta_value(v):
    if isinstance(v, (tuple, list, np.ndarray)):
        return " ".join(_meta_value(x) for x in v)
    if isinstance(v, (float, np.floating)):
        return fmt(v)
    return str(v)


def write_scatter_csv(path, result) -> None:
    """One row per usable bin (omega, alpha2, beta2, ratio) after a '#' metadata header."""
    lines = [f"# {k}={_meta_value(v)}" for k, v in result.metadata.items()]
    lines.append(f"# t_fit={'none' if result.t_fit is None else fmt(result.t_fit)}")
    lines.append(f"# fit_r2={'none' if result.fit_r2 is None else fmt(result.fit_r2)}")
    lines.append("omega,alpha2,beta2,ratio")
    for w, a, b in result.samples:
        lines.append(f"{fmt(w)},{fmt(a)},{fmt(b)},{fmt(b / a if a else float('nan'))}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_spectrum_plot(path, result) -> None:
    lines = [f"{fmt(w)} {fmt(b)}" for w, _, b in result.samples]
    Path(path).write_text("\n".join(lines) + "\n")
