"""Model-file parsing and deterministic report serialization.

Input and output share one JSON dialect: UTF-8, complex arrays as parallel
real "re"/"im" lists in row-major order with an explicit shape, every
numerical verdict wrapped as {"value", "tolerance", "pass"}.  Reports are
serialized with sorted keys and fixed indentation so identical runs are
byte-identical.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

from . import builders
from .errors import MalformedInput
from .sectors import GaugeAction
from .selfdual import BlockOperator, SelfDualSpace

SCHEMA_VERSION = 1


def complex_array_payload(arr: np.ndarray) -> dict:
    """Row-major parallel re/im encoding with explicit shape."""
    a = np.asarray(arr, dtype=complex)
    return {
        "shape": list(a.shape),
        "re": [float(x) for x in a.real.ravel(order="C")],
        "im": [float(x) for x in a.imag.ravel(order="C")],
    }


def parse_complex_matrix(obj) -> np.ndarray:
    """Accept either the flat shape/re/im payload or nested row lists."""
    if not isinstance(obj, dict) or "re" not in obj or "im" not in obj:
        raise MalformedInput("complex matrix needs parallel 're'/'im' arrays")
    re, im = obj["re"], obj["im"]
    if "shape" in obj:
        shape = tuple(int(s) for s in obj["shape"])
        size = math.prod(shape)
        if len(re) != size or len(im) != size:
            raise MalformedInput(
                f"re/im lengths {len(re)}/{len(im)} do not fill shape {shape}")
        return (np.asarray(re, dtype=float)
                + 1j * np.asarray(im, dtype=float)).reshape(shape)
    if not re or not isinstance(re[0], list):
        raise MalformedInput("nested matrix rows required when shape absent")
    width = len(re[0])
    for part_name, part in (("re", re), ("im", im)):
        for row in part:
            if not isinstance(row, list) or len(row) != width:
                raise MalformedInput(
                    f"{part_name} rows have inconsistent lengths")
    if len(re) != len(im):
        raise MalformedInput("re and im row counts differ")
    return np.asarray(re, dtype=float) + 1j * np.asarray(im, dtype=float)


def comparison(value: float, tolerance: float) -> dict:
    value = float(value)
    tolerance = float(tolerance)
    return {"value": value, "tolerance": tolerance,
            "pass": bool(value <= tolerance)}


def jsonify(obj):
    """Recursively convert numpy/complex/dataclass values to JSON types."""
    if isinstance(obj, dict):
        return {str(k): jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonify(v) for v in obj]
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: jsonify(getattr(obj, f.name))
                for f in dataclasses.fields(obj)}
    if isinstance(obj, np.ndarray):
        return complex_array_payload(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        if math.isinf(obj):
            return "infinite"
        if math.isnan(obj):
            return "nan"
        return float(obj)
    return obj


def canonical_json(payload: dict) -> str:
    return json.dumps(jsonify(payload), sort_keys=True, indent=2,
                      ensure_ascii=False) + "\n"


def sha256_of_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        digest.update(handle.read())
    return digest.hexdigest()


@dataclass(frozen=True)
class ModelFile:
    label: str
    algebra: str
    operator: BlockOperator
    gauge: GaugeAction | None
    gauge_samples: int
    gauge_seed: int
    source_digest: str


def _parse_gauge(block: dict, n_modes: int) -> tuple:
    group = block.get("group")
    samples = int(block.get("samples", 50))
    seed = int(block.get("seed", 0))
    if group == "u1":
        charges = block.get("charges")
        if charges is None:
            raise MalformedInput("u1 gauge block needs 'charges'")
        action = GaugeAction("u1", n_modes,
                             charges=tuple(int(c) for c in charges))
        samples = int(block.get("samples", 64))
    elif group in ("un", "sun"):
        action = GaugeAction(group, n_modes,
                             species=int(block.get("species", 0)))
    elif group == "z2":
        action = GaugeAction("z2", n_modes)
    elif group == "custom":
        mats = [parse_complex_matrix(u) for u in block.get("unitaries", [])]
        action = GaugeAction("custom", n_modes,
                             unitaries=tuple(mats))
    else:
        raise MalformedInput(f"unknown gauge group {group!r}")
    return action, samples, seed


def load_model(path: str) -> ModelFile:
    """Parse and validate a model file; MalformedInput on any inconsistency."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            raw = json.load(handle)
    except OSError as exc:
        raise MalformedInput(f"cannot read model file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise MalformedInput(f"model file is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise MalformedInput("model file must be a JSON object")

    algebra = raw.get("algebra", "car")
    if algebra not in ("car", "ccr"):
        raise MalformedInput(f"algebra must be 'car' or 'ccr', not {algebra!r}")

    iso = raw.get("isometry")
    if not isinstance(iso, dict):
        raise MalformedInput("model needs an 'isometry' object")
    space_block = raw.get("space", {})
    if "builder" in iso:
        operator = builders.build(str(iso["builder"]),
                                  iso.get("params", {}))
    elif "matrix" in iso:
        matrix = parse_complex_matrix(iso["matrix"])
        dom = space_block.get("domain_modes")
        cod = space_block.get("codomain_modes", dom)
        if dom is None:
            raise MalformedInput(
                "explicit matrices need space.domain_modes (and codomain_modes)")
        dom, cod = int(dom), int(cod)
        if matrix.shape != (2 * cod, 2 * dom):
            raise MalformedInput(
                f"matrix shape {matrix.shape} inconsistent with space "
                f"({2 * cod} x {2 * dom} expected)")
        operator = BlockOperator(matrix, SelfDualSpace(dom), SelfDualSpace(cod))
    else:
        raise MalformedInput("isometry needs 'builder' or 'matrix'")

    gauge, samples, seed = None, 0, 0
    if "gauge" in raw:
        if not isinstance(raw["gauge"], dict):
            raise MalformedInput("gauge block must be an object")
        gauge, samples, seed = _parse_gauge(raw["gauge"],
                                            operator.codomain.n_modes)

    return ModelFile(
        label=str(raw.get("label", "model")),
        algebra=algebra,
        operator=operator,
        gauge=gauge,
        gauge_samples=samples,
        gauge_seed=seed,
        source_digest=sha256_of_file(path),
    )
