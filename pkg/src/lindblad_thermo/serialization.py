"""Plain-text model format, trajectory CSV and key-value config files.

Model files are ``key = value`` lines; ``#`` starts a comment.  Only nonzero
matrix entries are written.  Complex numbers are written ``re+imi``::

    dim = 2
    hbar = 1.0
    H[1,1] = 1.0+0.0i
    bath = B
    bath.B.beta = 1.0
    bath.B.mu = 0.0
    bath.B.channel.0.omega = 1.0
    bath.B.channel.0.rate = 1.0
    bath.B.channel.0.L[0,1] = 1.0+0.0i
"""
from __future__ import annotations

import csv
import io
import re
from typing import Iterable

import numpy as np

from .lindblad_core import BathSpec, JumpChannel, LindbladModel, ModelError

_ENTRY = re.compile(r"^(?P<name>[A-Za-z_]\w*)\[(?P<i>\d+),(?P<j>\d+)\]$")


def format_complex(z: complex) -> str:
    z = complex(z)
    im = repr(float(z.imag))
    sign = "" if im.startswith("-") else "+"
    return f"{float(z.real)!r}{sign}{im}i"


def parse_complex(text: str) -> complex:
    s = text.strip().replace(" ", "")
    if s.endswith("i"):
        s = s[:-1] + "j"
    try:
        return complex(s)
    except ValueError:
        raise ValueError(f"cannot parse complex number {text!r}") from None


def parse_key_values(text: str) -> dict:
    """Ordered ``key -> raw string`` mapping; later keys override earlier ones."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ValueError(f"line {lineno}: empty key")
        out[key] = value
    return out


def read_config(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return parse_key_values(fh.read())


def _matrix_lines(name: str, m: np.ndarray) -> list:
    rows, cols = np.nonzero(m)
    return [f"{name}[{i},{j}] = {format_complex(m[i, j])}" for i, j in zip(rows, cols)]


def dump_model(model: LindbladModel) -> str:
    lines = [f"dim = {model.dim}", f"hbar = {float(model.hbar)!r}"]
    lines += _matrix_lines("H", model.hamiltonian)
    for b in model.baths:
        lines += [f"bath = {b.label}", f"bath.{b.label}.beta = {float(b.beta)!r}",
                  f"bath.{b.label}.mu = {float(b.mu)!r}"]
        for k, ch in enumerate(b.channels):
            p = f"bath.{b.label}.channel.{k}"
            lines += [f"{p}.omega = {float(ch.omega)!r}", f"{p}.rate = {float(ch.rate)!r}"]
            lines += _matrix_lines(f"{p}.L", ch.op)
    return "\n".join(lines) + "\n"


def _put(target: np.ndarray, key: str, name: str, i: int, j: int, value: str):
    d = target.shape[0]
    if not (i < d and j < d):
        raise ModelError(f"{key}: index out of range for dimension {d}")
    target[i, j] = parse_complex(value)


def load_model(text: str) -> LindbladModel:
    """Inverse of :func:`dump_model`."""
    lines = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            if "=" not in line:
                raise ModelError(f"line {lineno}: expected 'key = value'")
            key, value = (p.strip() for p in line.split("=", 1))
            lines.append((key, value))
    header = dict(lines)
    if "dim" not in header:
        raise ModelError("missing 'dim'")
    d = int(header["dim"])
    hbar = float(header.get("hbar", 1.0))
    h = np.zeros((d, d), dtype=complex)
    baths: dict = {}
    order = []
    for key, value in lines:
        if key in ("dim", "hbar"):
            continue
        if key == "bath":
            if value not in baths:
                baths[value] = {"beta": None, "mu": 0.0, "channels": {}}
                order.append(value)
            continue
        m = _ENTRY.match(key)
        if m and m["name"] == "H":
            _put(h, key, "H", int(m["i"]), int(m["j"]), value)
            continue
        parts = key.split(".")
        if len(parts) < 3 or parts[0] != "bath" or parts[1] not in baths:
            raise ModelError(f"unknown key {key!r}")
        b = baths[parts[1]]
        if len(parts) == 3 and parts[2] in ("beta", "mu"):
            b[parts[2]] = float(value)
        elif len(parts) == 5 and parts[2] == "channel":
            ch = b["channels"].setdefault(int(parts[3]), {"omega": None, "rate": None,
                                                           "op": np.zeros((d, d), dtype=complex)})
            em = _ENTRY.match(parts[4])
            if parts[4] in ("omega", "rate"):
                ch[parts[4]] = float(value)
            elif em and em["name"] == "L":
                _put(ch["op"], key, "L", int(em["i"]), int(em["j"]), value)
            else:
                raise ModelError(f"unknown key {key!r}")
        else:
            raise ModelError(f"unknown key {key!r}")
    specs = []
    for label in order:
        b = baths[label]
        if b["beta"] is None:
            raise ModelError(f"bath {label} has no beta")
        chans = []
        for k in sorted(b["channels"]):
            c = b["channels"][k]
            if c["omega"] is None or c["rate"] is None:
                raise ModelError(f"bath {label} channel {k} lacks omega or rate")
            chans.append(JumpChannel(c["omega"], c["rate"], c["op"]))
        specs.append(BathSpec(label, b["beta"], tuple(chans), mu=b["mu"]))
    return LindbladModel(h, tuple(specs), hbar=hbar)


def trajectory_header(dim: int) -> list:
    cols = ["t"]
    for i in range(dim):
        for j in range(dim):
            cols += [f"re_{i}_{j}", f"im_{i}_{j}"]
    return cols


def trajectory_rows(times: Iterable[float], states: np.ndarray) -> list:
    rows = []
    for t, rho in zip(times, states):
        flat = np.asarray(rho).ravel()
        inter = np.empty(2 * flat.size)
        inter[0::2] = flat.real
        inter[1::2] = flat.imag
        rows.append([float(t), *inter.tolist()])
    return rows


def trajectory_csv(times, states) -> str:
    states = np.asarray(states)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(trajectory_header(states.shape[-1]))
    w.writerows(trajectory_rows(times, states))
    return buf.getvalue()


def read_trajectory_csv(text: str) -> tuple:
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], np.array(rows[1:], dtype=float)
    d = int(round(((len(header) - 1) / 2) ** 0.5))
    vals = body[:, 1::2] + 1j * body[:, 2::2]
    return body[:, 0], vals.reshape(-1, d, d)
