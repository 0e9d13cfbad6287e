"""Model JSON serialization.

Document schema (shared by plain networks and templates)::

    {
      "kind": "network" | "unrolled" | "dbn_template",
      "variables": [{"name": ..., "states": [...], "kind": ...,
                     "intervals": [[lo, hi], ...]?}, ...],
      "template": {"slice0_arcs": [[a, b], ...],
                   "intra_arcs":  [[a, b], ...],
                   "inter_arcs":  [[a, b], ...],
                   "static_arcs": [[a, b] | [a, b, [t, ...]], ...]},
      "arcs": [[a, b], ...],            # plain/unrolled networks only
      "cpts": {node: {"parents": [...], "rows": [[...], ...]}, ...},
      "outcomes": {"1": "decline@1", ...}?
    }

A document with a ``template`` key loads as a :class:`DbnTemplate`;
otherwise it loads as a :class:`DiscreteNetwork`. Infinite interval bounds
are encoded as null. Serialization is deterministic: identical models give
byte-identical files.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

from .errors import InvalidModel
from .model import (
    Cpt,
    DbnTemplate,
    DiscreteNetwork,
    VariableDef,
    validate_network,
)


def _interval_out(iv: tuple[float, float]) -> list:
    lo, hi = iv
    return [None if math.isinf(lo) else lo, None if math.isinf(hi) else hi]


def _interval_in(raw) -> tuple[float, float]:
    lo, hi = raw
    return (
        float("-inf") if lo is None else float(lo),
        float("inf") if hi is None else float(hi),
    )


def _variables_out(variables) -> list[dict]:
    out = []
    for v in variables:
        d: dict[str, Any] = {"name": v.name, "states": list(v.states), "kind": v.kind}
        if v.intervals is not None:
            d["intervals"] = [_interval_out(iv) for iv in v.intervals]
        out.append(d)
    return out


def _variables_in(raw) -> list[VariableDef]:
    out = []
    for d in raw:
        intervals = d.get("intervals")
        out.append(
            VariableDef(
                name=str(d["name"]),
                states=tuple(str(s) for s in d["states"]),
                kind=str(d.get("kind", "per_slice")),
                intervals=None if intervals is None else tuple(_interval_in(iv) for iv in intervals),
            )
        )
    return out


def _cpts_out(cpts) -> dict:
    return {
        name: {"parents": list(cpt.parents), "rows": cpt.rows.tolist()}
        for name, cpt in cpts.items()
    }


def _cpts_in(raw) -> dict[str, Cpt]:
    out = {}
    for name, d in raw.items():
        out[name] = Cpt(child=str(name), parents=tuple(d.get("parents", ())), rows=d["rows"])
    return out


def network_to_dict(net: DiscreteNetwork, kind: str = "network") -> dict:
    doc: dict[str, Any] = {
        "kind": kind,
        "variables": _variables_out(net.variables),
        "arcs": [[a, b] for a, b in net.arcs],
        "cpts": _cpts_out(net.cpts),
    }
    if net.outcomes:
        doc["outcomes"] = {str(t): name for t, name in sorted(net.outcomes.items())}
    return doc


def network_from_dict(doc: dict) -> DiscreteNetwork:
    if "variables" not in doc:
        raise InvalidModel("model document has no 'variables' key")
    variables = _variables_in(doc["variables"])
    arcs = [tuple(a) for a in doc.get("arcs", ())]
    cpts = _cpts_in(doc.get("cpts", {}))
    outcomes = {int(t): str(n) for t, n in doc.get("outcomes", {}).items()}
    net = DiscreteNetwork(variables, arcs, cpts, outcomes)
    report = validate_network(net)
    if not report.ok:
        report.raise_first()
    return net


def template_to_dict(template: DbnTemplate) -> dict:
    static_arcs = []
    for src, dst, slices in template.static_arcs:
        if slices is None:
            static_arcs.append([src, dst])
        else:
            static_arcs.append([src, dst, list(slices)])
    return {
        "kind": "dbn_template",
        "variables": _variables_out(template.variables),
        "template": {
            "slice0_arcs": [[a, b] for a, b in template.slice0_arcs],
            "intra_arcs": [[a, b] for a, b in template.intra_arcs],
            "inter_arcs": [[a, b] for a, b in template.inter_arcs],
            "static_arcs": static_arcs,
        },
        "cpts": _cpts_out(template.cpts),
    }


def template_from_dict(doc: dict) -> DbnTemplate:
    if "template" not in doc or "variables" not in doc:
        raise InvalidModel("template document needs 'template' and 'variables' keys")
    t = doc["template"]
    static_arcs = []
    for arc in t.get("static_arcs", ()):
        if len(arc) == 2:
            static_arcs.append((arc[0], arc[1], None))
        else:
            static_arcs.append((arc[0], arc[1], tuple(int(x) for x in arc[2])))
    return DbnTemplate(
        variables=tuple(_variables_in(doc["variables"])),
        slice0_arcs=tuple((a, b) for a, b in t.get("slice0_arcs", ())),
        intra_arcs=tuple((a, b) for a, b in t.get("intra_arcs", ())),
        inter_arcs=tuple((a, b) for a, b in t.get("inter_arcs", ())),
        static_arcs=tuple(static_arcs),
        cpts=_cpts_in(doc.get("cpts", {})),
    )


def dumps_model(obj: DiscreteNetwork | DbnTemplate, kind: str | None = None) -> str:
    """Deterministic JSON text for a network or template."""
    if isinstance(obj, DbnTemplate):
        doc = template_to_dict(obj)
    else:
        doc = network_to_dict(obj, kind=kind or "network")
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def save_model(obj: DiscreteNetwork | DbnTemplate, path: str | Path, kind: str | None = None) -> None:
    Path(path).write_text(dumps_model(obj, kind=kind), encoding="utf-8")


def load_model(path: str | Path) -> DiscreteNetwork | DbnTemplate:
    """Load a model document; returns a template iff it has a template key."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidModel(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict) or "variables" not in doc or "cpts" not in doc:
        raise InvalidModel(f"{path}: missing required keys 'variables'/'cpts'")
    if "template" in doc:
        return template_from_dict(doc)
    return network_from_dict(doc)
