"""The self-describing text format for operads and modules.

One JSON-compatible document format (version "operad-forge/1") covers
dg operads, dg modular operads, truncated operads and (modular)
Sigma-modules; rationals are serialized as strings "p/q" (or "p" when
the denominator is one), so round trips are exact.  Serialization is
canonical: parse(serialize(x)) = x and serialize is byte-deterministic.
"""

from __future__ import annotations

import json
from fractions import Fraction

from .chain import ChainComplex, ChainMap
from .operad import CompTable, ContrTable, DGOperad, ModularOperad
from .qlinalg import Matrix
from .sigma import GroupAction, ModularSigmaModule, SigmaModule

FORMAT_VERSION = "operad-forge/1"


class DocumentError(ValueError):
    """Malformed document (missing fields, bad rationals, bad shapes)."""


def rational_to_str(x) -> str:
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


_RATIONAL_RE = None


def rational_from_str(s) -> Fraction:
    global _RATIONAL_RE
    if _RATIONAL_RE is None:
        import re
        _RATIONAL_RE = re.compile(r"-?\d+(/\d+)?\Z")
    if not isinstance(s, str) or not _RATIONAL_RE.match(s):
        raise DocumentError(f"bad rational {s!r} (expected 'p' or 'p/q')")
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise DocumentError(f"bad rational {s!r}") from exc


def matrix_to_lists(m: Matrix):
    return [[rational_to_str(x) for x in row] for row in m.data]


def matrix_from_lists(data, rows, cols):
    if not isinstance(data, list) or len(data) != rows \
            or any(not isinstance(r, list) or len(r) != cols for r in data):
        raise DocumentError(f"matrix shape mismatch (expected {rows}x{cols})")
    return Matrix(rows, cols,
                  [[rational_from_str(x) for x in row] for row in data])


def _key_to_str(key):
    if isinstance(key, tuple):
        return f"{key[0]},{key[1]}"
    return str(key)


def _key_from_str(s, modular):
    try:
        if modular:
            g, l = s.split(",")
            return (int(g), int(l))
        return int(s)
    except (ValueError, AttributeError) as exc:
        raise DocumentError(f"bad component key {s!r}") from exc


def _component_to_doc(ga: GroupAction):
    c = ga.complex
    out = {"dims": {str(d): n for d, n in sorted(c.dims.items())}}
    diff = {str(d): matrix_to_lists(m) for d, m in sorted(c.diff.items())}
    if diff:
        out["differential"] = diff
    action = []
    for gen in ga.generators:
        action.append({str(d): matrix_to_lists(m)
                       for d, m in sorted(gen.blocks.items())})
    if action:
        out["action"] = action
    return out


def _component_from_doc(key, doc):
    if "dims" not in doc or not isinstance(doc["dims"], dict):
        raise DocumentError(f"component {key}: missing dims")
    try:
        dims = {int(d): int(n) for d, n in doc["dims"].items()}
    except ValueError as exc:
        raise DocumentError(f"component {key}: bad degree") from exc
    diff = {}
    for d, data in doc.get("differential", {}).items():
        d = int(d)
        diff[d] = matrix_from_lists(data, dims.get(d - 1, 0), dims.get(d, 0))
    try:
        complex_ = ChainComplex(dims, diff)
    except ValueError as exc:
        raise DocumentError(f"component {key}: {exc}") from exc
    n = key[1] if isinstance(key, tuple) else key
    gens = []
    action_doc = doc.get("action", [])
    if action_doc and len(action_doc) != max(n - 1, 0):
        raise DocumentError(f"component {key}: expected {max(n - 1, 0)} "
                            "action generators")
    for gen in action_doc:
        blocks = {}
        for d, data in gen.items():
            d = int(d)
            blocks[d] = matrix_from_lists(data, dims.get(d, 0), dims.get(d, 0))
        try:
            gens.append(ChainMap(complex_, complex_, blocks))
        except ValueError as exc:
            raise DocumentError(f"component {key}: bad action ({exc})") from exc
    if not action_doc:
        gens = [ChainMap.identity(complex_)] * max(n - 1, 0)
    try:
        return GroupAction(n, complex_, gens)
    except ValueError as exc:
        raise DocumentError(f"component {key}: {exc}") from exc


def _comp_tables_to_doc(comp, modular):
    out = []
    for trip in sorted(comp, key=lambda t: str(t)):
        table = comp[trip]
        key1, i, key2 = trip
        blocks = {}
        for (d1, d2), cells in sorted(table.entries.items(),
                                      key=lambda kv: str(kv[0])):
            entry = {}
            for (k1, k2), cell in sorted(cells.items()):
                for row, coeff in sorted(cell.items()):
                    entry.setdefault(f"{k1},{k2}", []).append(
                        [row, rational_to_str(coeff)])
            if entry:
                blocks[f"{d1},{d2}"] = entry
        out.append({"source": [list(key1) if modular else key1, i,
                               list(key2) if modular else key2],
                    "blocks": blocks})
    return out


def _comp_tables_from_doc(entries, modular):
    comp = {}
    for item in entries:
        src = item.get("source")
        if not isinstance(src, list) or len(src) != 3:
            raise DocumentError("composition entry needs [key, slot, key]")
        key1 = tuple(src[0]) if modular else src[0]
        key2 = tuple(src[2]) if modular else src[2]
        i = src[1]
        table = CompTable()
        for degs, cells in item.get("blocks", {}).items():
            d1, d2 = (int(x) for x in degs.split(","))
            for pair, rowlist in cells.items():
                k1, k2 = (int(x) for x in pair.split(","))
                for row, coeff in rowlist:
                    table.add(d1, k1, d2, k2, int(row),
                              rational_from_str(coeff))
        comp[(key1, i, key2)] = table
    return comp


def _contr_tables_to_doc(contr):
    out = []
    for (key, i, j) in sorted(contr, key=str):
        table = contr[(key, i, j)]
        blocks = {}
        for d, cells in sorted(table.entries.items()):
            entry = {}
            for k, cell in sorted(cells.items()):
                for row, coeff in sorted(cell.items()):
                    entry.setdefault(str(k), []).append(
                        [row, rational_to_str(coeff)])
            if entry:
                blocks[str(d)] = entry
        out.append({"source": [list(key), i, j], "blocks": blocks})
    return out


def _contr_tables_from_doc(entries):
    contr = {}
    for item in entries:
        src = item.get("source")
        if not isinstance(src, list) or len(src) != 3:
            raise DocumentError("contraction entry needs [key, i, j]")
        key = tuple(src[0])
        i, j = src[1], src[2]
        table = ContrTable()
        for d, cells in item.get("blocks", {}).items():
            for k, rowlist in cells.items():
                for row, coeff in rowlist:
                    table.add(int(d), int(k), int(row),
                              rational_from_str(coeff))
        contr[(key, i, j)] = table
    return contr


def to_document(obj, name="", seed=0, endomorphism=None, tower=None) -> dict:
    """Serialize an operad, modular operad or (modular) Sigma-module."""
    doc = {"format": FORMAT_VERSION,
           "metadata": {"name": name, "seed": seed}}
    if isinstance(obj, ModularOperad):
        doc["kind"] = "modular" if obj.cut is None else "truncated"
        doc["indexing"] = "modular"
        doc["window"] = {"max_dim": obj.max_dim}
        if obj.cut is not None:
            doc["truncation_cut"] = obj.cut
        doc["components"] = {
            _key_to_str(k): _component_to_doc(ga)
            for k, ga in sorted(obj.module.components.items())}
        doc["compositions"] = _comp_tables_to_doc(obj.comp, True)
        doc["contractions"] = _contr_tables_to_doc(obj.contr)
    elif isinstance(obj, DGOperad):
        doc["kind"] = "operad" if obj.cut is None else "truncated"
        doc["indexing"] = "arity"
        doc["window"] = {"max_arity": obj.max_arity}
        if obj.cut is not None:
            doc["truncation_cut"] = obj.cut
        doc["components"] = {
            _key_to_str(k): _component_to_doc(ga)
            for k, ga in sorted(obj.module.components.items())}
        doc["compositions"] = _comp_tables_to_doc(obj.comp, False)
    elif isinstance(obj, ModularSigmaModule):
        doc["kind"] = "sigma-module"
        doc["indexing"] = "modular"
        doc["components"] = {
            _key_to_str(k): _component_to_doc(ga)
            for k, ga in sorted(obj.components.items())}
    elif isinstance(obj, SigmaModule):
        doc["kind"] = "sigma-module"
        doc["indexing"] = "arity"
        doc["components"] = {
            _key_to_str(k): _component_to_doc(ga)
            for k, ga in sorted(obj.components.items())}
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")
    if endomorphism:
        doc["endomorphism"] = {
            _key_to_str(k): {str(d): matrix_to_lists(m)
                             for d, m in sorted(blocks.items())}
            for k, blocks in endomorphism.items()}
    if tower:
        doc["tower"] = tower
    return doc


def from_document(doc):
    """Parse a document; returns (object, metadata dict)."""
    if not isinstance(doc, dict):
        raise DocumentError("document must be an object")
    if doc.get("format") != FORMAT_VERSION:
        raise DocumentError(f"unsupported format {doc.get('format')!r} "
                            f"(expected {FORMAT_VERSION!r})")
    kind = doc.get("kind")
    if kind not in ("operad", "modular", "truncated", "sigma-module"):
        raise DocumentError(f"unknown kind {kind!r}")
    modular = doc.get("indexing") == "modular"
    components = {}
    for key_s, comp_doc in doc.get("components", {}).items():
        key = _key_from_str(key_s, modular)
        components[key] = _component_from_doc(key, comp_doc)
    metadata = dict(doc.get("metadata", {}))
    metadata["kind"] = kind
    metadata["indexing"] = doc.get("indexing", "arity")
    if kind == "sigma-module":
        module = (ModularSigmaModule(components) if modular
                  else SigmaModule(components))
        return module, metadata
    comp = _comp_tables_from_doc(doc.get("compositions", []), modular)
    cut = doc.get("truncation_cut") if kind == "truncated" else None
    if kind == "truncated" and cut is None:
        raise DocumentError("truncated document needs truncation_cut")
    window = doc.get("window", {})
    if modular:
        contr = _contr_tables_from_doc(doc.get("contractions", []))
        max_dim = window.get("max_dim")
        if max_dim is None:
            raise DocumentError("modular document needs window.max_dim")
        op = ModularOperad(ModularSigmaModule(components), comp, contr,
                           max_dim=max_dim, cut=cut)
        _check_table_indices(op, contr=contr)
    else:
        max_arity = window.get("max_arity")
        if max_arity is None:
            raise DocumentError("operad document needs window.max_arity")
        op = DGOperad(SigmaModule(components), comp,
                      max_arity=max_arity, cut=cut)
        _check_table_indices(op)
    if "endomorphism" in doc:
        endo = {}
        for key_s, blocks in doc["endomorphism"].items():
            key = _key_from_str(key_s, modular)
            c = op.component(key)
            endo[key] = {int(d): matrix_from_lists(m, c.dim(int(d)),
                                                   c.dim(int(d)))
                         for d, m in blocks.items()}
        metadata["endomorphism"] = endo
    if "tower" in doc:
        metadata["tower"] = doc["tower"]
    return op, metadata


def _check_table_indices(op, contr=None):
    """Every referenced degree pair and basis index must be in range."""
    for (key1, i, key2), table in op.comp.items():
        n1 = key1[1] if isinstance(key1, tuple) else key1
        if not (1 <= i <= n1):
            raise DocumentError(f"composition slot {i} out of range for {key1}")
        try:
            tkey = op.comp_target(key1, i, key2)
            c1, c2, ct = (op.component(key1), op.component(key2),
                          op.component(tkey))
        except (ValueError, KeyError) as exc:
            raise DocumentError(f"bad composition source {key1}, {key2}") \
                from exc
        for (d1, d2), cells in table.entries.items():
            for (k1, k2), cell in cells.items():
                if k1 >= c1.dim(d1) or k2 >= c2.dim(d2):
                    raise DocumentError(
                        f"composition {key1} o_{i} {key2}: basis index out "
                        f"of range at degrees ({d1},{d2})")
                for row in cell:
                    if row >= ct.dim(d1 + d2):
                        raise DocumentError(
                            f"composition {key1} o_{i} {key2}: target row "
                            f"out of range at degree {d1 + d2}")
    for (key, i, j), table in (contr or {}).items():
        c = op.component(key)
        ct = op.component((key[0] + 1, key[1] - 2))
        if not (1 <= i < j <= key[1]):
            raise DocumentError(f"contraction legs ({i},{j}) out of range "
                                f"for {key}")
        for d, cells in table.entries.items():
            for k, cell in cells.items():
                if k >= c.dim(d):
                    raise DocumentError(f"contraction on {key}: basis index "
                                        f"out of range at degree {d}")
                for row in cell:
                    if row >= ct.dim(d):
                        raise DocumentError(f"contraction on {key}: target "
                                            f"row out of range at degree {d}")


def dumps(doc: dict) -> str:
    """Canonical byte-deterministic serialization."""
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def loads(text: str) -> dict:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"not valid JSON: {exc}") from exc


def save(path, obj, **kwargs):
    doc = to_document(obj, **kwargs) if not isinstance(obj, dict) else obj
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(doc))


def load(path):
    with open(path, encoding="utf-8") as fh:
        return from_document(loads(fh.read()))


def morphism_to_doc(morphism, label=""):
    blocks = {}
    for key, cm in sorted(morphism.maps.items(), key=lambda kv: str(kv[0])):
        blocks[_key_to_str(key)] = {
            str(d): matrix_to_lists(m) for d, m in sorted(cm.blocks.items())}
    return {"label": label, "components": blocks}


def witness_to_document(witness, alpha, name="", seed=0) -> dict:
    """Serialize a formality witness: the zigzag arrows as matrices."""
    return {
        "format": FORMAT_VERSION,
        "kind": "formality-witness",
        "metadata": {"name": name, "seed": seed},
        "alpha": rational_to_str(alpha),
        "arrows": [morphism_to_doc(arrow, label)
                   for label, arrow in witness.arrows],
    }
