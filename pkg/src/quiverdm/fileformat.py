"""Text serialization of quiver representations.

A document is a JSON object::

    {
      "format": 1,
      "n": 1,
      "vertices": [
        {"subset": [], "dim": 1},
        {"subset": [1], "dim": 1}
      ],
      "edges": [
        {
          "from": [],
          "direction": 1,
          "u": {
            "rows": 1,
            "cols": 1,
            "data": [
              [[1.0, 0.0]]
            ]
          },
          "y": {...}
        }
      ],
      "metadata": {}
    }

Complex entries are [re, im] pairs, matrices are row-major with one row per
line, and ``u`` is the dims(from + direction) x dims(from) forward matrix.
Floats are written in shortest round-trip form, so parsing and writing again
reproduces the same bytes.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .quiver import QuiverRep, add, all_edges, all_vertices, vertex

FORMAT_VERSION = 1


class FormatError(ValueError):
    """Raised for unreadable or inconsistent documents."""


def _matrix_doc(m: np.ndarray) -> dict:
    data = [[[float(x.real), float(x.imag)] for x in row] for row in m]
    return {"rows": int(m.shape[0]), "cols": int(m.shape[1]), "data": data}


def to_document(rep: QuiverRep, metadata: dict | None = None) -> dict:
    return {
        "format": FORMAT_VERSION,
        "n": rep.n,
        "vertices": [{"subset": list(v), "dim": rep.dims[v]} for v in rep.vertices()],
        "edges": [
            {"from": list(v), "direction": i, "u": _matrix_doc(rep.u[v, i]), "y": _matrix_doc(rep.y[v, i])}
            for v, i in rep.edges()
        ],
        "metadata": metadata or {},
    }


def _is_flat(obj) -> bool:
    """Scalars, and lists nested at most two deep without dicts, are written on one line."""
    if isinstance(obj, dict):
        return all(_is_scalar(v) or (isinstance(v, list) and _depth(v) <= 1) for v in obj.values())
    if isinstance(obj, list):
        return _depth(obj) <= 2
    return True


def _is_scalar(obj) -> bool:
    return obj is None or isinstance(obj, (bool, int, float, str))


def _depth(obj) -> int:
    if isinstance(obj, list):
        return 1 + max((_depth(x) for x in obj), default=0)
    if isinstance(obj, dict):
        return 99
    return 0


def _emit(obj, level: int) -> str:
    if _is_flat(obj):
        return json.dumps(obj, allow_nan=False)
    pad = "  " * (level + 1)
    end = "  " * level
    if isinstance(obj, dict):
        items = [f"{pad}{json.dumps(k)}: {_emit(v, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    items = [pad + _emit(x, level + 1) for x in obj]
    return "[\n" + ",\n".join(items) + "\n" + end + "]"


def dumps(rep: QuiverRep, metadata: dict | None = None) -> str:
    return _emit(to_document(rep, metadata), 0) + "\n"


def _fail(msg: str):
    raise FormatError(msg)


def _int(doc, key, where):
    val = doc.get(key) if isinstance(doc, dict) else None
    if not isinstance(val, int) or isinstance(val, bool):
        _fail(f"{where}: field {key!r} must be an integer")
    return val


def _subset(obj, n, where):
    if not isinstance(obj, list) or not all(isinstance(k, int) and not isinstance(k, bool) for k in obj):
        _fail(f"{where}: subset must be a list of integers")
    if obj != sorted(set(obj)) or any(k < 1 or k > n for k in obj):
        _fail(f"{where}: subset {obj} must be sorted, without duplicates, within 1..{n}")
    return vertex(obj)


def _matrix(doc, shape, where):
    if not isinstance(doc, dict):
        _fail(f"{where}: matrix must be an object")
    rows, cols = _int(doc, "rows", where), _int(doc, "cols", where)
    if (rows, cols) != shape:
        _fail(f"{where}: declared shape {(rows, cols)} does not match the vertex dimensions {shape}")
    data = doc.get("data")
    if not isinstance(data, list) or len(data) != rows:
        _fail(f"{where}: data must list {rows} rows")
    out = np.zeros(shape, dtype=complex)
    for r, row in enumerate(data):
        if not isinstance(row, list) or len(row) != cols:
            _fail(f"{where}: row {r} must have {cols} entries")
        for c, pair in enumerate(row):
            ok = (isinstance(pair, list) and len(pair) == 2
                  and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in pair))
            if not ok or not all(math.isfinite(x) for x in pair):
                _fail(f"{where}: entry ({r}, {c}) must be a finite [re, im] pair")
            out[r, c] = complex(pair[0], pair[1])
    return out


def from_document(doc) -> tuple[QuiverRep, dict]:
    if not isinstance(doc, dict):
        _fail("document must be a JSON object")
    if doc.get("format") != FORMAT_VERSION:
        _fail(f"unsupported format version {doc.get('format')!r}, expected {FORMAT_VERSION}")
    n = _int(doc, "n", "document")
    if n < 1:
        _fail("n must be at least 1")
    vertices = doc.get("vertices")
    if not isinstance(vertices, list):
        _fail("vertices must be a list")
    dims = {}
    for k, vd in enumerate(vertices):
        where = f"vertices[{k}]"
        if not isinstance(vd, dict):
            _fail(f"{where}: must be an object")
        v = _subset(vd.get("subset"), n, where)
        d = _int(vd, "dim", where)
        if d < 0:
            _fail(f"{where}: dim must be nonnegative")
        if v in dims:
            _fail(f"{where}: duplicate vertex {list(v)}")
        dims[v] = d
    missing = [list(v) for v in all_vertices(n) if v not in dims]
    if missing:
        _fail(f"missing vertices {missing}")
    edges = doc.get("edges")
    if not isinstance(edges, list):
        _fail("edges must be a list")
    u, y = {}, {}
    for k, ed in enumerate(edges):
        where = f"edges[{k}]"
        if not isinstance(ed, dict):
            _fail(f"{where}: must be an object")
        v = _subset(ed.get("from"), n, where)
        i = _int(ed, "direction", where)
        if i < 1 or i > n or i in v:
            _fail(f"{where}: direction {i} is not a valid edge from {list(v)}")
        if (v, i) in u:
            _fail(f"{where}: duplicate edge")
        w = add(v, i)
        u[v, i] = _matrix(ed.get("u"), (dims[w], dims[v]), f"{where}.u")
        y[v, i] = _matrix(ed.get("y"), (dims[v], dims[w]), f"{where}.y")
    missing_e = [f"{list(v)}->{i}" for v, i in all_edges(n) if (v, i) not in u]
    if missing_e:
        _fail(f"missing edges {missing_e}")
    meta = doc.get("metadata", {})
    if not isinstance(meta, dict):
        _fail("metadata must be an object")
    return QuiverRep(n, dims, u, y), meta


def loads(text: str) -> tuple[QuiverRep, dict]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"parse error at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return from_document(doc)


def read(path) -> tuple[QuiverRep, dict]:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    return loads(text)


def write(path, rep: QuiverRep, metadata: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(rep, metadata))
