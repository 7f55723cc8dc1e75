"""JSON model descriptions.

Numbers are written as decimal strings (``"0.5"``, ``"-0.25+0.5i"``) so a
file means the same thing on every platform. Two kinds are supported::

    {"kind": "hilbert", "dimension": 8, "field": "R",
     "constants": {"v0": ["0.5", "0", ...]},
     "eigenvalues": ["1", "0.70710678118654752+0.70710678118654752i", ...],
     "projection_rank": 4,
     "group": {"elements": [...], "identity": "0", "table": [[...]],
               "matrices": {"1": [["1", "0"], ["0", "-1"]]}},
     "ms_bound": 2}

    {"kind": "discrete", "elements": ["a", "b", ...],
     "relations": {"E": [["a", "b"], ...]},
     "functions": {"add": [["a", "b", "c"], ...]},   # argument labels then value
     "constants": {"c1": "a"},
     "arities": {"E": 2}}                            # optional; needed for empty relations

A discrete file may instead name a builder:
``{"kind": "discrete", "builder": "kpartite", "args": {"k": 2, "s": 3}}``.
Builders: kpartite, union_complete, path_graph, grid, elementary_abelian,
vector_space_f2.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..scalars import format_scalar, parse_scalar, scalar
from . import discrete as _discrete
from .base import ModelError
from .discrete import DiscreteStructure, build_discrete
from .groups import FiniteGroup
from .hilbert import COMPLEX, REAL, HilbertStructure, build_hilbert, expand_group_action, expand_projection, expand_unitary

BUILDERS = {
    "kpartite": _discrete.kpartite,
    "union_complete": _discrete.union_complete,
    "path_graph": _discrete.path_graph,
    "grid": _discrete.grid,
    "elementary_abelian": _discrete.elementary_abelian,
    "vector_space_f2": _discrete.vector_space_f2,
}


def _num(x) -> str:
    x = complex(x)
    return format_scalar(scalar(x.real if x.imag == 0 else x))


def _vec(values, field) -> np.ndarray:
    vals = [complex(parse_scalar(str(v))) for v in values]
    if field == REAL:
        if any(v.imag for v in vals):
            raise ModelError("complex entry in a real model")
        return np.array([v.real for v in vals])
    return np.array(vals)


def label_text(lab) -> str:
    if isinstance(lab, tuple):
        return ".".join(str(p) for p in lab)
    return str(lab)


def describe_hilbert(S: HilbertStructure) -> dict:
    out = {"kind": "hilbert", "dimension": S.n, "field": S.field}
    out["constants"] = {k: [_num(x) for x in v] for k, v in sorted(S.constants.items())}
    if S.eigenvalues is not None:
        out["eigenvalues"] = [format_scalar(w) for w in S.eigenvalues]
    if S.projection_rank is not None:
        out["projection_rank"] = S.projection_rank
    if S.group is not None:
        g = S.group.to_json()
        g["matrices"] = {k: [[_num(x) for x in row] for row in S.group_matrices[k]] for k in S.group.elements}
        out["group"] = g
    if S.ms_bound is not None:
        out["ms_bound"] = S.ms_bound
    return out


def describe_discrete(M: DiscreteStructure) -> dict:
    labels = [label_text(lab) for lab in M.labels]
    if len(set(labels)) != len(labels):
        raise ModelError("element labels are not distinct as text")
    rels = {}
    for r, tab in sorted(M.relations.items()):
        rels[r] = [[labels[i] for i in idx] for idx in np.argwhere(tab).tolist()]
    fns = {}
    for f, tab in sorted(M.functions.items()):
        rows = []
        for idx in np.ndindex(tab.shape):
            rows.append([labels[i] for i in idx] + [labels[int(tab[idx])]])
        fns[f] = rows
    consts = {c: labels[i] for c, i in sorted(M.constants.items())}
    arity = {r: int(t.ndim) for r, t in sorted(M.relations.items())}
    return {"kind": "discrete", "name": M.name, "elements": labels, "relations": rels, "arities": arity,
            "functions": fns, "constants": consts}


def describe(S) -> dict:
    if isinstance(S, HilbertStructure):
        return describe_hilbert(S)
    if isinstance(S, DiscreteStructure):
        return describe_discrete(S)
    raise ModelError(f"cannot describe {type(S).__name__}")


def model_from_dict(data: dict):
    kind = data.get("kind")
    if kind == "hilbert":
        return _hilbert_from_dict(data)
    if kind == "discrete":
        return _discrete_from_dict(data)
    raise ModelError(f"unknown model kind {kind!r}")


def _hilbert_from_dict(data):
    try:
        n = int(data["dimension"])
    except (KeyError, ValueError):
        raise ModelError("hilbert model needs an integer 'dimension'") from None
    field = data.get("field", REAL)
    if field not in (REAL, COMPLEX):
        raise ModelError(f"field must be R or C, got {field!r}")
    consts = {k: _vec(v, field) for k, v in data.get("constants", {}).items()}
    S = build_hilbert(n, field, consts, ms_bound=data.get("ms_bound"))
    if "eigenvalues" in data:
        S = expand_unitary(S, [parse_scalar(str(w)) for w in data["eigenvalues"]])
    if "projection_rank" in data:
        S = expand_projection(S, int(data["projection_rank"]))
    if "group" in data:
        g = data["group"]
        G = FiniteGroup.from_json(g)
        mats = {k: np.array([_vec(row, COMPLEX) for row in M]) for k, M in g.get("matrices", {}).items()}
        if field == REAL:
            for k, M in mats.items():
                if np.any(M.imag):
                    raise ModelError(f"complex matrix for {k} in a real model")
            mats = {k: M.real for k, M in mats.items()}
        S = expand_group_action(S, G, mats)
    return S


def _discrete_from_dict(data):
    if "builder" in data:
        name = data["builder"]
        if name not in BUILDERS:
            raise ModelError(f"unknown builder {name!r}; known: {sorted(BUILDERS)}")
        M = BUILDERS[name](**data.get("args", {}))
        if data.get("constants"):
            M = M.with_constants({c: _find_label(M, v) for c, v in data["constants"].items()})
        return M
    elements = list(data["elements"])
    rels = {}
    for r, rows in data.get("relations", {}).items():
        if rows:
            rels[r] = [tuple(t) for t in rows]
        else:
            rels[r] = np.zeros((len(elements),) * int(data.get("arities", {}).get(r, 1)), dtype=bool)
    fns = {}
    for f, rows in data.get("functions", {}).items():
        fns[f] = {tuple(r[:-1]) if len(r) > 2 else r[0]: r[-1] for r in rows}
    return build_discrete(elements, rels, fns, data.get("constants", {}), data.get("name", "discrete"))


def _find_label(M: DiscreteStructure, text):
    for lab in M.labels:
        if label_text(lab) == str(text):
            return lab
    raise ModelError(f"{text!r} is not an element")


def load_model(path):
    with open(path) as fh:
        return model_from_dict(json.load(fh))


def dump_model(S, path=None) -> str:
    text = json.dumps(describe(S), sort_keys=True, indent=2) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text
