"""File formats.

All writers are atomic (temp file + ``os.replace``). Floats are written as
their shortest round-trip ``repr`` so text round trips are bit-exact.

Model file layout (little-endian throughout)::

    offset  size      field
    0       8         magic b"NGMMODEL"
    8       4         uint32 format version (1)
    12      8 x 3     uint64 n, d, m
    36      8 x 3     float64 lam, sigma_x, sigma_b
    60      8*n*d     float64 train_x, row-major (standardized scale)
    ...     8*n*m     float64 train_b, row-major
    ...     8*n*d     float64 coeffs, row-major
    ...     8*d       float64 center
    ...     8*d       float64 scale
"""
from __future__ import annotations

import csv
import hashlib
import io as _io
import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .errors import InvalidInputError
from .graph import EdgeSetCollection, OmegaField
from .kernels import KernelConfig
from .score import RepresenterModel

MODEL_MAGIC = b"NGMMODEL"
MODEL_VERSION = 1
_HEADER = struct.Struct("<8sIQQQddd")


def atomic_write_bytes(path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_json(path, obj) -> None:
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def _fmt(v: float) -> str:
    return repr(float(v))


def write_matrix_csv(path, M) -> None:
    """Headerless CSV, one row per line."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    lines = [",".join(_fmt(v) for v in row) for row in M]
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_matrix_csv(path) -> np.ndarray:
    M = np.loadtxt(path, delimiter=",", ndmin=2, dtype=float)
    if not np.all(np.isfinite(M)):
        raise InvalidInputError(f"{path}: non-finite values")
    return M


def write_edge_list(path, A) -> None:
    """One ``i j`` line per undirected edge with ``i < j``; a ``# n=`` header keeps isolated nodes."""
    A = np.asarray(A)
    i, j = np.nonzero(np.triu(A, k=1))
    lines = [f"# n={A.shape[0]}"] + [f"{a} {b}" for a, b in zip(i.tolist(), j.tolist())]
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_edge_list(path, n: int | None = None) -> np.ndarray:
    """Symmetric 0/1 adjacency from an edge list of 0-based node pairs.

    Lines starting with ``#`` are comments, except that ``# n=<count>`` fixes the
    node count when ``n`` is not given. Self-loops are dropped.
    """
    pairs = []
    header_n = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s:
                continue
            if s.startswith("#"):
                body = s[1:].strip()
                if body.startswith("n="):
                    header_n = int(body[2:])
                continue
            parts = s.split()
            if len(parts) < 2:
                raise InvalidInputError(f"{path}:{lineno}: expected 'i j'")
            a, b = int(parts[0]), int(parts[1])
            if a < 0 or b < 0:
                raise InvalidInputError(f"{path}:{lineno}: negative node index")
            pairs.append((a, b))
    if n is None:
        n = header_n if header_n is not None else (1 + max((max(p) for p in pairs), default=-1))
    A = np.zeros((n, n), dtype=np.int8)
    for a, b in pairs:
        if a >= n or b >= n:
            raise InvalidInputError(f"{path}: node index out of range for n={n}")
        if a != b:
            A[a, b] = A[b, a] = 1
    return A


def write_edges_jsonl(path, edges: EdgeSetCollection) -> None:
    lines = []
    for i, es in enumerate(edges.edges):
        obj = {"node": i, "d": edges.d, "edges": [list(p) for p in sorted(es)]}
        lines.append(json.dumps(obj, separators=(",", ":")))
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_edges_jsonl(path, d: int | None = None) -> EdgeSetCollection:
    rows = []
    with open(path) as fh:
        for line in fh:
            if line.strip():
                rows.append(json.loads(line))
    rows.sort(key=lambda r: r["node"])
    if [r["node"] for r in rows] != list(range(len(rows))):
        raise InvalidInputError(f"{path}: node ids must be 0..n-1")
    declared = {r["d"] for r in rows if "d" in r}
    if len(declared) > 1:
        raise InvalidInputError(f"{path}: rows disagree on d: {sorted(declared)}")
    if d is None:
        if not declared:
            raise InvalidInputError(f"{path}: cannot determine d; pass it explicitly")
        d = declared.pop()
    elif declared and declared != {d}:
        raise InvalidInputError(f"{path}: file declares d={declared.pop()}, expected d={d}")
    return EdgeSetCollection(n=len(rows), d=int(d),
                             edges=tuple(frozenset(tuple(p) for p in r["edges"]) for r in rows))


def write_omega_csv(path, field: OmegaField) -> None:
    """Columns ``node,j,l,value`` for ``j <= l``."""
    d = field.d
    ju, lu = np.triu_indices(d)
    buf = _io.StringIO()
    buf.write("node,j,l,value\n")
    for i in range(field.n):
        vals = field.matrices[i, ju, lu]
        for j, l, v in zip(ju.tolist(), lu.tolist(), vals.tolist()):
            buf.write(f"{i},{j},{l},{_fmt(v)}\n")
    atomic_write_text(path, buf.getvalue())


def read_omega_csv(path) -> OmegaField:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    node = np.array([int(r["node"]) for r in rows])
    j = np.array([int(r["j"]) for r in rows])
    l = np.array([int(r["l"]) for r in rows])
    v = np.array([float(r["value"]) for r in rows])
    n, d = int(node.max()) + 1, int(l.max()) + 1
    M = np.zeros((n, d, d))
    M[node, j, l] = v
    M[node, l, j] = v
    return OmegaField(matrices=M, raw=M.copy())


def model_to_bytes(model: RepresenterModel) -> bytes:
    head = _HEADER.pack(MODEL_MAGIC, MODEL_VERSION, model.n, model.d, model.m,
                        model.lam, model.kernel.sigma_x, model.kernel.sigma_b)
    body = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes()
                    for a in (model.train_x, model.train_b, model.coeffs, model.center, model.scale))
    return head + body


def model_from_bytes(data: bytes) -> RepresenterModel:
    if len(data) < _HEADER.size:
        raise InvalidInputError("model file truncated")
    magic, version, n, d, m, lam, sx, sb = _HEADER.unpack_from(data)
    if magic != MODEL_MAGIC:
        raise InvalidInputError("not an ngm model file")
    if version != MODEL_VERSION:
        raise InvalidInputError(f"unsupported model format version {version}")
    sizes = [n * d, n * m, n * d, d, d]
    expected = _HEADER.size + 8 * sum(sizes)
    if len(data) != expected:
        raise InvalidInputError(f"model file has {len(data)} bytes, expected {expected}")
    flat = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).astype(float)
    parts = np.split(flat, np.cumsum(sizes)[:-1])
    return RepresenterModel(train_x=parts[0].reshape(n, d), train_b=parts[1].reshape(n, m),
                            coeffs=parts[2].reshape(n, d), lam=lam,
                            kernel=KernelConfig(sigma_x=sx, sigma_b=sb),
                            center=parts[3], scale=parts[4])


def save_model(path, model: RepresenterModel) -> None:
    atomic_write_bytes(path, model_to_bytes(model))


def load_model(path) -> RepresenterModel:
    return model_from_bytes(Path(path).read_bytes())


def write_rows_csv(path, header, rows) -> None:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(x) if isinstance(x, float) else x for x in r])
    atomic_write_text(path, buf.getvalue())
