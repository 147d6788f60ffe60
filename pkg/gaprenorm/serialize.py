"""JSON and CSV conversion for engine objects.

JSON floats are written with Python's shortest round-trip repr, so reading a
document back gives the same doubles. CSV floats use 17 significant digits.
"""

import csv
import io
import json
import logging
import math
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import jsonschema
import numpy as np
from pydantic import BaseModel

from .decomp import DecompItem, DecomposedGapMap, Decomposition
from .diffeo import DEFAULT_M, Diffeo
from .errors import GapRenormError, MalformedInputError
from .gapmap import GapMap, build_gap_map
from .renorm import Combinatorics, RenormStep, Trajectory, affine_distance
from .search import SearchResult

logger = logging.getLogger(__name__)

SCHEMA_DIR = Path(__file__).parent / "schemas"


def to_plain(value: Any) -> Any:
    """Recursively turn numpy values, models and enums into JSON-ready Python objects."""
    if isinstance(value, BaseModel):
        return to_plain(value.model_dump())
    if isinstance(value, dict):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_plain(v) for v in value.tolist()]
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, Combinatorics):
        return str(value)
    if isinstance(value, GapRenormError):
        return to_plain(value.to_dict())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def dumps(doc: Any) -> str:
    return json.dumps(to_plain(doc), indent=2, allow_nan=False) + "\n"


# Encoders


def diffeo_to_json(d: Diffeo) -> Dict[str, Any]:
    return {"basis": "chebyshev", "m": d.m, "coeffs": to_plain(d.coeffs)}


def gap_map_to_json(f: GapMap) -> Dict[str, Any]:
    return {
        "alpha": f.alpha,
        "beta": f.beta,
        "b": f.b,
        "phi_L": diffeo_to_json(f.phi_L),
        "phi_R": diffeo_to_json(f.phi_R),
        "nu": f.nu,
    }


def step_to_json(step: RenormStep, depth: int) -> Dict[str, Any]:
    return {
        "depth": depth,
        "k": step.k,
        "sigma": step.sigma.value,
        "I_prime": list(step.I_prime),
        "I_prime_len": step.I_prime_len,
        "margin": step.margin,
        "affine_distance": affine_distance(step.renormalized),
        "map": gap_map_to_json(step.renormalized),
    }


def trajectory_to_json(t: Trajectory) -> Dict[str, Any]:
    return {
        "initial": gap_map_to_json(t.initial),
        "initial_affine_distance": affine_distance(t.initial),
        "gamma": str(t.gamma),
        "steps": [step_to_json(s, i + 1) for i, s in enumerate(t.steps)],
        "blocked": None if t.blocked is None else to_plain(t.blocked.to_dict()),
    }


def decomposition_to_json(d: Decomposition) -> List[Dict[str, Any]]:
    return [{"label": list(item.label), "diffeo": diffeo_to_json(item.diffeo)} for item in d.items]


def decomposed_to_json(df: DecomposedGapMap) -> Dict[str, Any]:
    return {
        "alpha": df.alpha,
        "beta": df.beta,
        "b": df.b,
        "depth": df.depth,
        "dec_L": decomposition_to_json(df.dec_L),
        "dec_R": decomposition_to_json(df.dec_R),
    }


def search_result_to_json(result: SearchResult, target: Combinatorics, depth: int) -> Dict[str, Any]:
    return {
        "target": str(target),
        "depth": depth,
        "b_star": result.b_star,
        "achieved_depth": result.achieved_depth,
        "gamma": str(result.gamma),
        "bracket": list(result.bracket),
        "bracket_width": result.bracket_width,
        "window": list(result.window),
        "b_center": result.b_center,
    }


# Decoders


@lru_cache
def load_schema(name: str) -> Dict[str, Any]:
    return json.loads((SCHEMA_DIR / f"{name}.schema.json").read_text())


def validate(doc: Any, name: str) -> None:
    try:
        jsonschema.validate(instance=doc, schema=load_schema(name))
    except jsonschema.ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path) or "(root)"
        raise MalformedInputError(f"{name}: {where}: {e.message}", path=where)


def parse_json(text: str, source: str = "<input>") -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise MalformedInputError(f"{source}: line {e.lineno}: {e.msg}", line=e.lineno, column=e.colno)


def load_json(path: str) -> Any:
    file_path = Path(path)
    if not file_path.is_file():
        raise MalformedInputError(f"file not found: {path}", path=path)
    return parse_json(file_path.read_text(), str(path))


def diffeo_from_json(doc: Any, m: Optional[int] = None) -> Diffeo:
    if doc is None or doc == "identity":
        return Diffeo.identity(m or DEFAULT_M)
    d = Diffeo(doc["coeffs"])
    return d.resized(m) if m is not None else d


def gap_map_from_json(doc: Dict[str, Any], m: Optional[int] = None) -> GapMap:
    validate(doc, "gap_map")
    return build_gap_map(
        doc["alpha"],
        doc["beta"],
        doc["b"],
        diffeo_from_json(doc.get("phi_L"), m),
        diffeo_from_json(doc.get("phi_R"), m),
    )


def decomposition_from_json(items: Sequence[Dict[str, Any]]) -> Decomposition:
    return Decomposition(
        tuple(DecompItem(tuple(item["label"]), diffeo_from_json(item["diffeo"])) for item in items)
    )


def decomposed_from_json(doc: Dict[str, Any]) -> DecomposedGapMap:
    validate(doc, "decomposed_gap_map")
    return DecomposedGapMap(
        doc["alpha"],
        doc["beta"],
        doc["b"],
        decomposition_from_json(doc["dec_L"]),
        decomposition_from_json(doc["dec_R"]),
        doc.get("depth", 0),
    )


# CSV


def _cell(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return "%.17g" % value
    return str(value)


def to_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buffer.getvalue()


TRAJECTORY_COLUMNS = ("depth", "k", "sigma", "I_prime_len", "affine_distance")


def trajectory_csv(t: Trajectory) -> str:
    rows = [(0, "", "", "", affine_distance(t.initial))]
    rows += [
        (i + 1, s.k, s.sigma.value, s.I_prime_len, affine_distance(s.renormalized))
        for i, s in enumerate(t.steps)
    ]
    return to_csv(TRAJECTORY_COLUMNS, rows)


def matrix_csv(matrix: np.ndarray) -> str:
    return to_csv([f"c{j}" for j in range(matrix.shape[1])], matrix.tolist())


def spectrum_csv(magnitudes: Sequence[float]) -> str:
    return to_csv(("index", "magnitude"), [(i, float(v)) for i, v in enumerate(magnitudes)])
