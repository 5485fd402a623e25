"""Scenario files: YAML documents validated against a JSON schema.

A minimal file only needs ``election.n``; everything else falls back to
the defaults below, and each fallback is recorded in the returned
scenario's ``provenance`` list.
"""

from __future__ import annotations

import dataclasses

import jsonschema
import yaml

from . import agents as ag
from . import protocol as pr
from .analysis.scenario import PROTOCOLS, Scenario
from .errors import (
    BoardroomError,
    InvalidConfig,
    ParseError,
    StrategyPreconditionFailed,
    ValidationError,
)

SCHEMA_VERSION = 1

_prob = {"type": "number", "minimum": 0, "maximum": 1}
_nonneg = {"type": "number", "exclusiveMinimum": 0}
_choice = {"type": "integer", "minimum": 0}
_agent = {"type": "integer", "minimum": -2}

_VOTER = {
    "role": {"enum": [r.value for r in ag.Role]},
    "demand": _choice,
    "adversary": _agent,
    "strategy": {"enum": [s.value for s in ag.StrategyKind]},
    "p_forget": _prob,
    "p_orient": _prob,
    "p_desc": _prob,
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "boardroom scenario",
    "type": "object",
    "additionalProperties": False,
    "required": ["election"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "election": {
            "type": "object",
            "additionalProperties": False,
            "required": ["n"],
            "properties": {
                "n": {"type": "integer", "minimum": pr.MIN_VOTERS, "maximum": pr.MAX_VOTERS},
                "k": {"type": "integer", "minimum": 2, "maximum": 6,
                      "description": "foldable ballots need k < 7"},
                "extras": {"type": "integer", "minimum": 0},
                "variants": {"type": "array", "uniqueItems": True,
                             "items": {"enum": sorted(pr.VARIANTS)}},
            },
        },
        "physical": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "nominal_weight": _nonneg,
                "weight_jitter": {"type": "number", "minimum": 0},
                "scale_tolerance": _nonneg,
                "pattern_space": {"type": "integer", "minimum": 1},
                "p_desc": _prob,
                "p_conf": _prob,
                "stamp_charges": {"type": "integer", "minimum": 1},
                "visible_disk": {"type": "boolean"},
                "camera_defeated": {"type": "boolean"},
            },
        },
        "behavior": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "p_peek": _prob,
                "p_unconcealed": _prob,
                "p_camera": _prob,
                "p_spb_peek": _prob,
                "spb_shuffle": _prob,
                "ballot_draw": {"type": "boolean"},
                "audit_m": {"type": "integer", "minimum": 0},
                "strict_rotation": {"type": "boolean"},
            },
        },
        "detection": {
            "type": "object",
            "additionalProperties": False,
            "properties": {f.name: _prob for f in dataclasses.fields(ag.DetectionModel)},
        },
        "roster": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "defaults": {"type": "object", "additionalProperties": False, "properties": _VOTER},
                "preferences": {
                    "oneOf": [
                        {"type": "array", "items": _choice},
                        {"const": "cyclic"},
                    ]
                },
                "voters": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["id"],
                        "properties": {"id": {"type": "integer", "minimum": 0},
                                       "preference": _choice, **_VOTER},
                    },
                },
            },
        },
        "strategies": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["kind"],
                "properties": {
                    "kind": {"enum": [s.value for s in ag.StrategyKind]},
                    "actor": _agent,
                    "target": {"type": ["integer", "null"], "minimum": 0},
                    "choice": _choice,
                    "defect": {"enum": ["pinhole", "smudge", "crease", "tear"]},
                    "count": {"type": "integer", "minimum": 0},
                    "half": {"enum": [0, 1]},
                    "p_detect": _prob,
                },
            },
        },
        "run": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "protocol": {"enum": list(PROTOCOLS)},
                "trials": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
                "sweep": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["path", "values"],
                        "properties": {
                            "path": {"type": "string"},
                            "values": {"type": "array", "minItems": 1},
                        },
                    },
                },
            },
        },
    },
}

RUN_DEFAULTS = {"protocol": "BVP1", "trials": 1000, "seed": 0}


def _load(text, path):
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        raise ParseError(f"malformed scenario: {getattr(e, 'problem', e)}",
                         line=mark.line + 1 if mark else None, path=path) from None
    if not isinstance(doc, dict):
        raise ParseError("scenario must be a mapping at top level", line=1, path=path)
    return doc


def _validate(doc):
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        where = ".".join(str(p) for p in e.absolute_path) or "<root>"
        hint = e.schema.get("description") if isinstance(e.schema, dict) else None
        raise ValidationError(where, f"{e.message} ({hint})" if hint else e.message)


def _section(cls, values, name, notes):
    values = values or {}
    for f in dataclasses.fields(cls):
        if f.name not in values:
            default = f.default if f.default is not dataclasses.MISSING else f.default_factory()
            notes.append(f"{name}.{f.name} = {default!r} (default)")
    try:
        return cls(**values)
    except (ValueError, TypeError) as e:
        raise ValidationError(name, str(e)) from None


def _roster(doc, n, k, notes):
    spec = doc.get("roster") or {}
    defaults = dict(spec.get("defaults") or {})
    prefs = spec.get("preferences", "cyclic")
    if "preferences" not in spec:
        notes.append("roster.preferences = 'cyclic' (default: voter i prefers i mod k)")
    if prefs == "cyclic":
        prefs = [i % k for i in range(n)]
    if len(prefs) != n:
        raise ValidationError("roster.preferences", f"{len(prefs)} entries for n={n}")
    overrides = {}
    for v in spec.get("voters") or []:
        if v["id"] >= n:
            raise ValidationError("roster.voters", f"voter id {v['id']} outside [0, {n})")
        if v["id"] in overrides:
            raise ValidationError("roster.voters", f"voter {v['id']} listed twice")
        overrides[v["id"]] = v
    roster = []
    for i in range(n):
        fields = {**defaults, **{key: val for key, val in overrides.get(i, {}).items() if key != "id"}}
        pref = fields.pop("preference", prefs[i])
        try:
            roster.append(ag.VoterProfile(i, i, pref, **fields))
        except ValueError as e:
            raise ValidationError(f"roster.voters[{i}]", str(e)) from None
    return roster


def parse_scenario(data: bytes | str, path: str | None = None) -> Scenario:
    """Parse and validate a scenario document."""
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as e:
            raise ParseError(f"not UTF-8: {e}", path=path) from None
    doc = _load(data, path)
    _validate(doc)
    notes: list[str] = []
    el = doc["election"]
    n = el["n"]
    k = el.get("k", 2)
    for key, default in (("k", 2), ("extras", 2), ("variants", [])):
        if key not in el:
            notes.append(f"election.{key} = {default!r} (default)")
    physical = _section(pr.PhysicalParams, doc.get("physical"), "physical", notes)
    behavior = _section(pr.BehaviorParams, doc.get("behavior"), "behavior", notes)
    detection = _section(ag.DetectionModel, doc.get("detection"), "detection", notes)
    try:
        config = pr.ElectionConfig(n, k, el.get("extras", 2), frozenset(el.get("variants", [])),
                                   physical, behavior, detection)
    except InvalidConfig as e:
        raise ValidationError("election", str(e)) from None
    roster = _roster(doc, n, k, notes)
    strategies = []
    for i, s in enumerate(doc.get("strategies") or []):
        try:
            strategies.append(ag.AdversaryStrategy(**s))
        except BoardroomError as e:
            raise ValidationError(f"strategies.{i}", str(e)) from None
    run = {**RUN_DEFAULTS, **(doc.get("run") or {})}
    for key, default in RUN_DEFAULTS.items():
        if key not in (doc.get("run") or {}):
            notes.append(f"run.{key} = {default!r} (default)")
    sweep = [(a["path"], a["values"]) for a in run.get("sweep", [])]
    scenario = Scenario(config, roster, strategies, run["protocol"], run["trials"], run["seed"], sweep)
    try:
        scenario.check()
        for point in scenario.points() if sweep else ():
            scenario.at(point)
    except (InvalidConfig, StrategyPreconditionFailed) as e:
        raise ValidationError("scenario", str(e)) from None
    scenario.provenance = notes
    return scenario


def load_scenario(path) -> Scenario:
    with open(path, "rb") as fh:
        return parse_scenario(fh.read(), path=str(path))
