"""Metric files: one json document per chart.

Field order on export is fixed (name, dimension, coordinates, parameters,
metric, sample_box, then the optional sigma and vector_A) so exports are
byte-stable.
"""

from __future__ import annotations

import json

from .errors import InputError, MetricValidationError, MissingField
from .exprdsl import MetricSpec, to_text

REQUIRED = ("name", "coordinates", "metric")


def spec_to_dict(spec):
    doc = {
        "name": spec.name,
        "dimension": spec.dimension,
        "coordinates": list(spec.coordinates),
        "parameters": {k: float(v) for k, v in spec.parameters.items()},
        "metric": [[to_text(e) for e in row] for row in spec.components],
        "sample_box": [[float(lo), float(hi)] for lo, hi in spec.sample_box],
    }
    if spec.sigma is not None:
        doc["sigma"] = to_text(spec.sigma)
    if spec.vector_A is not None:
        doc["vector_A"] = [to_text(e) for e in spec.vector_A]
    return doc


def dumps(spec):
    return json.dumps(spec_to_dict(spec), indent=2, ensure_ascii=False) + "\n"


def spec_from_dict(doc):
    if not isinstance(doc, dict):
        raise InputError("metric file must hold a json object")
    for key in REQUIRED:
        if key not in doc:
            raise MissingField(f"metric file lacks field {key!r}")
    coords = doc["coordinates"]
    if "dimension" in doc and doc["dimension"] != len(coords):
        raise MetricValidationError(
            f"dimension {doc['dimension']} does not match {len(coords)} coordinates"
        )
    grid = doc["metric"]
    if not isinstance(grid, list) or any(not isinstance(row, list) for row in grid):
        raise MetricValidationError("metric must be a list of rows")
    try:
        parameters = {str(k): float(v) for k, v in doc.get("parameters", {}).items()}
    except (TypeError, ValueError, AttributeError):
        raise MetricValidationError("parameters must map names to numbers") from None
    return MetricSpec.from_strings(
        str(doc["name"]),
        coords,
        [[str(t) for t in row] for row in grid],
        parameters=parameters,
        sample_box=doc.get("sample_box"),
        sigma=doc.get("sigma"),
        vector_A=doc.get("vector_A"),
    )


def loads(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid json: {exc}") from None
    return spec_from_dict(doc)


def load(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    return loads(text)


def save(spec, path):
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(dumps(spec))
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc.strerror}") from None
