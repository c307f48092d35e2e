"""JSON schemas for run configs and emitted reports, with validators."""

import json
from functools import lru_cache
from importlib import resources

from jsonschema import Draft202012Validator
from referencing import Registry, Resource

NAMES = ("config", "certificate", "solve_report", "sweep_report", "uniqueness_report",
         "hcma_report", "counterexample_summary", "manifest")

# report file name -> schema name
ARTIFACT_SCHEMAS = {
    "report.json": "solve_report",
    "certificate.json": "certificate",
    "sweep.json": "sweep_report",
    "uniqueness.json": "uniqueness_report",
    "hcma_residual.json": "hcma_report",
    "summary.json": "counterexample_summary",
    "manifest.json": "manifest",
}


def load(name):
    """Parsed schema document by short name, e.g. ``"config"``."""
    return json.loads(resources.files(__name__).joinpath(f"{name}.schema.json").read_text())


@lru_cache(maxsize=None)
def _registry():
    return Registry().with_resources(
        (f"{n}.schema.json", Resource.from_contents(load(n))) for n in NAMES)


@lru_cache(maxsize=None)
def validator(name):
    return Draft202012Validator(load(name), registry=_registry())


def errors(doc, name):
    """List of ``(path, message)`` for every violation, best match first."""
    v = validator(name)
    out = []
    for e in sorted(v.iter_errors(doc), key=lambda e: (len(e.path), list(map(str, e.path)))):
        out.append(("/".join(str(p) for p in e.absolute_path), e.message))
    return out


def validate(doc, name):
    """Raise ``ValueError`` naming the offending key if ``doc`` violates schema ``name``."""
    errs = errors(doc, name)
    if errs:
        path, msg = errs[0]
        where = path or "<root>"
        raise ValueError(f"{name}: at '{where}': {msg}")
    return doc


def validate_file(path):
    """Validate an emitted artifact chosen by its file name."""
    from pathlib import Path

    p = Path(path)
    name = ARTIFACT_SCHEMAS.get(p.name)
    if name is None:
        raise ValueError(f"no schema registered for {p.name}")
    return validate(json.loads(p.read_text()), name)
