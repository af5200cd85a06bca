"""Plain-text ``polymesh 1`` reader and writer.

Format (``#`` starts a comment, blank lines ignored)::

    polymesh 1
    nodes N
    <i> <x> <y>
    cells E
    <i> <k> <v_0> ... <v_k-1>
    boundary B
    <node_a> <node_b> <marker>
"""
from __future__ import annotations

import os

import numpy as np

from .exceptions import MeshError, MeshFormatError
from .geometry import PolygonMesh


def write_mesh(mesh: PolygonMesh, path) -> None:
    """Write ``mesh``; coordinates use 17 significant digits so reads round-trip."""
    lines = ["polymesh 1", f"nodes {mesh.n_nodes}"]
    lines += [f"{i} {x:.17g} {y:.17g}" for i, (x, y) in enumerate(mesh.nodes)]
    lines.append(f"cells {mesh.n_cells}")
    for i, c in enumerate(mesh.cells):
        lines.append(f"{i} {len(c)} " + " ".join(str(int(v)) for v in c))
    lines.append(f"boundary {len(mesh.boundary_edges)}")
    lines += [f"{a} {b} {m}" for a, b, m in mesh.boundary_edges]
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _records(text: str):
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield no, line.split()


def _int(tok: str, no: int, what: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise MeshFormatError(f"expected integer {what}, got {tok!r}", no) from None


def _float(tok: str, no: int) -> float:
    try:
        v = float(tok)
    except ValueError:
        raise MeshFormatError(f"expected a number, got {tok!r}", no) from None
    if not np.isfinite(v):
        raise MeshFormatError(f"non-finite coordinate {tok!r}", no)
    return v


def _section(it, name: str, last_no: int):
    try:
        no, tok = next(it)
    except StopIteration:
        raise MeshFormatError(f"missing '{name}' section", last_no) from None
    if len(tok) != 2 or tok[0] != name:
        raise MeshFormatError(f"expected '{name} <count>', got {' '.join(tok)!r}", no)
    count = _int(tok[1], no, f"{name} count")
    if count < 0:
        raise MeshFormatError(f"negative {name} count", no)
    return no, count


def _body(it, n: int, name: str, header_no: int):
    out = []
    no = header_no
    for _ in range(n):
        try:
            no, tok = next(it)
        except StopIteration:
            raise MeshFormatError(f"file ends inside '{name}' section", no) from None
        out.append((no, tok))
    return out


def parse_mesh(text: str, validate: bool = True) -> PolygonMesh:
    """Parse polymesh text; errors carry the offending line number."""
    it = _records(text)
    try:
        no, tok = next(it)
    except StopIteration:
        raise MeshFormatError("empty file", 1) from None
    if tok != ["polymesh", "1"]:
        raise MeshFormatError(f"expected header 'polymesh 1', got {' '.join(tok)!r}", no)

    no, nn = _section(it, "nodes", no)
    nodes = np.zeros((nn, 2))
    for i, (lno, tok) in enumerate(_body(it, nn, "nodes", no)):
        if len(tok) != 3:
            raise MeshFormatError("node line needs '<index> <x> <y>'", lno)
        if _int(tok[0], lno, "node index") != i:
            raise MeshFormatError(f"node index {tok[0]} out of sequence (expected {i})", lno)
        nodes[i] = _float(tok[1], lno), _float(tok[2], lno)
        no = lno

    no, nc = _section(it, "cells", no)
    cells = []
    for i, (lno, tok) in enumerate(_body(it, nc, "cells", no)):
        if len(tok) < 2:
            raise MeshFormatError("cell line needs '<index> <k> <v_0> ...'", lno)
        if _int(tok[0], lno, "cell index") != i:
            raise MeshFormatError(f"cell index {tok[0]} out of sequence (expected {i})", lno)
        k = _int(tok[1], lno, "vertex count")
        if k < 3 or len(tok) != k + 2:
            raise MeshFormatError(f"cell {i}: declares {k} vertices, lists {len(tok) - 2}", lno)
        verts = [_int(t, lno, "node index") for t in tok[2:]]
        for v in verts:
            if not 0 <= v < nn:
                raise MeshFormatError(f"cell {i} references node {v}, but there are {nn} nodes", lno)
        cells.append(verts)
        no = lno

    no, nb = _section(it, "boundary", no)
    edges = []
    for lno, tok in _body(it, nb, "boundary", no):
        if len(tok) != 3:
            raise MeshFormatError("boundary line needs '<node_a> <node_b> <marker>'", lno)
        a, b = _int(tok[0], lno, "node index"), _int(tok[1], lno, "node index")
        if not (0 <= a < nn and 0 <= b < nn):
            raise MeshFormatError(f"boundary edge ({a}, {b}) references a missing node", lno)
        edges.append((a, b, tok[2]))
        no = lno
    extra = next(it, None)
    if extra is not None:
        raise MeshFormatError("unexpected content after boundary section", extra[0])

    mesh = PolygonMesh(nodes, cells, edges)
    if validate:
        mesh.validate()
    return mesh


def read_mesh(path, validate: bool = True) -> PolygonMesh:
    """Read a polymesh file; raises ``FileNotFoundError`` or :class:`MeshError`."""
    if not os.path.exists(path):
        raise FileNotFoundError(f"mesh file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        return parse_mesh(text, validate)
    except MeshFormatError:
        raise
    except MeshError as exc:
        raise MeshError(f"{path}: {exc}") from exc
