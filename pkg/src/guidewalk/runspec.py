"""Run specification documents: parsing, canonical form, and content hashes.

A run spec fully describes one sampling run (model, guidance terms, sampler,
outputs). Documents are canonicalized -- numbers coerced to their declared
types, defaults filled in, mask file references replaced by content ids --
and the run id is the SHA-256 of the canonical JSON, so identical requests
collapse to one artifact directory no matter where they came from.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

from .errors import DocumentError
from .guidance import (
    CONSTANT,
    PIECEWISE,
    RAMP_DOWN,
    RAMP_UP,
    GSF,
    GuidanceTerm,
    SpatialMask,
    TemporalProfile,
    make_mask,
)
from .models import ConditionModel, NULL_CONDITION
from .sampler import DDIM, DDPM, SamplerConfig
from .schedule import linear_beta_schedule

EMIT_KINDS = ("fields", "images", "metrics", "normmaps")

MASK_UNIFORM = "uniform"


@dataclass(frozen=True)
class TermSpec:
    condition: str
    temporal: TemporalProfile
    mask: object  # "uniform" | {"id": hex} | {"builder": {...}}

    def to_document(self) -> dict:
        tp = self.temporal
        tdoc: dict = {"kind": tp.kind}
        if tp.kind == PIECEWISE:
            tdoc["knots"] = [[t, s] for t, s in tp.knots]
        elif tp.kind == RAMP_UP:
            tdoc["m"] = tp.m
            tdoc["a"] = tp.a
        else:
            tdoc["m"] = tp.m
        return {"condition": self.condition, "temporal": tdoc, "mask": self.mask}


@dataclass(frozen=True)
class SamplerSpec:
    steps: int
    seed: int
    kind: str = DDPM
    eta: float = 0.0
    beta_min: float = 1e-4
    beta_max: float = 0.02

    def to_document(self) -> dict:
        doc = {
            "kind": self.kind,
            "steps": self.steps,
            "seed": self.seed,
            "beta_min": self.beta_min,
            "beta_max": self.beta_max,
        }
        if self.kind == DDIM:
            doc["eta"] = self.eta
        return doc


@dataclass(frozen=True)
class OutputSpec:
    samples: int = 1
    record_trajectory: bool = False
    emit: tuple[str, ...] = ("fields",)

    def to_document(self) -> dict:
        return {
            "samples": self.samples,
            "record_trajectory": self.record_trajectory,
            "emit": sorted(self.emit),
        }


@dataclass(frozen=True)
class RunSpec:
    model: str
    terms: tuple[TermSpec, ...]
    sampler: SamplerSpec
    outputs: OutputSpec

    def to_document(self) -> dict:
        return {
            "model": self.model,
            "terms": [t.to_document() for t in self.terms],
            "sampler": self.sampler.to_document(),
            "outputs": self.outputs.to_document(),
        }

    def canonical_json(self) -> str:
        return canonical_json(self.to_document())

    def run_id(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()

    def with_terms(self, terms) -> "RunSpec":
        return RunSpec(self.model, tuple(terms), self.sampler, self.outputs)

    def with_seed(self, seed: int) -> "RunSpec":
        sampler = SamplerSpec(
            self.sampler.steps, int(seed), self.sampler.kind,
            self.sampler.eta, self.sampler.beta_min, self.sampler.beta_max,
        )
        return RunSpec(self.model, self.terms, sampler, self.outputs)


def canonical_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=False)


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


def _real(doc, path: str) -> float:
    if isinstance(doc, bool) or not isinstance(doc, (int, float)):
        raise DocumentError(f"expected a number, got {type(doc).__name__}", path)
    return float(doc)


def _count(doc, path: str, minimum: int = 0) -> int:
    if isinstance(doc, bool) or not isinstance(doc, int):
        raise DocumentError(f"expected an integer, got {type(doc).__name__}", path)
    if doc < minimum:
        raise DocumentError(f"must be >= {minimum}, got {doc}", path)
    return int(doc)


def parse_temporal(doc, path: str) -> TemporalProfile:
    if not isinstance(doc, dict):
        raise DocumentError("temporal must be an object", path)
    kind = doc.get("kind")
    try:
        if kind == CONSTANT:
            return TemporalProfile.constant(_real(doc.get("m", 0.0), f"{path}.m"))
        if kind == RAMP_UP:
            return TemporalProfile.ramp_up(
                _real(doc.get("m", 0.0), f"{path}.m"),
                _real(doc.get("a", 1.0), f"{path}.a"),
            )
        if kind == RAMP_DOWN:
            return TemporalProfile.ramp_down(_real(doc.get("m", 0.0), f"{path}.m"))
        if kind == PIECEWISE:
            knots = doc.get("knots")
            if not isinstance(knots, list) or not knots:
                raise DocumentError("piecewise needs a non-empty knots list", f"{path}.knots")
            pairs = []
            for ki, knot in enumerate(knots):
                if not isinstance(knot, (list, tuple)) or len(knot) != 2:
                    raise DocumentError("knot must be a [t, s] pair", f"{path}.knots[{ki}]")
                pairs.append(
                    (_real(knot[0], f"{path}.knots[{ki}]"), _real(knot[1], f"{path}.knots[{ki}]"))
                )
            return TemporalProfile.piecewise(pairs)
    except ValueError as exc:
        raise DocumentError(str(exc), path) from None
    raise DocumentError(f"unknown temporal kind {kind!r}", path)


_BUILDER_KEYS = {
    "rect": {"u0": int, "v0": int, "u1": int, "v1": int},
    "radial": {"cu": float, "cv": float, "r0": float, "r1": float},
    "linear_fade": {"axis": str, "from": float, "to": float},
}


def _normalize_builder(doc, path: str) -> dict:
    if not isinstance(doc, dict):
        raise DocumentError("builder must be an object", path)
    kind = doc.get("kind")
    if kind not in _BUILDER_KEYS:
        raise DocumentError(f"unknown mask builder kind {kind!r}", path)
    out = {"kind": kind}
    for key, typ in _BUILDER_KEYS[kind].items():
        if key not in doc:
            raise DocumentError(f"builder missing {key!r}", path)
        if typ is int:
            out[key] = _count(doc[key], f"{path}.{key}")
        elif typ is float:
            out[key] = _real(doc[key], f"{path}.{key}")
        else:
            if not isinstance(doc[key], str):
                raise DocumentError(f"{key} must be a string", f"{path}.{key}")
            out[key] = doc[key]
    return out


def parse_mask_ref(doc, path: str, mask_resolver=None):
    """Normalize a mask reference.

    File references need a resolver (callable path -> content id); they are
    rejected when none is available, e.g. over the HTTP API.
    """
    if doc is None or doc == MASK_UNIFORM:
        return MASK_UNIFORM
    if isinstance(doc, dict):
        if "id" in doc:
            if not isinstance(doc["id"], str) or not doc["id"]:
                raise DocumentError("mask id must be a non-empty string", path)
            return {"id": doc["id"]}
        if "builder" in doc:
            return {"builder": _normalize_builder(doc["builder"], f"{path}.builder")}
        if "file" in doc:
            if mask_resolver is None:
                raise DocumentError("file mask references are not accepted here", path)
            if not isinstance(doc["file"], str):
                raise DocumentError("mask file must be a string path", path)
            try:
                return {"id": mask_resolver(doc["file"])}
            except OSError as exc:
                raise DocumentError(f"cannot read mask file: {exc}", path) from None
    raise DocumentError(
        "mask must be 'uniform', {'id': ...}, {'file': ...} or {'builder': ...}", path
    )


def parse_runspec(document, mask_resolver=None) -> RunSpec:
    """Parse and canonicalize a run spec document (JSON text or dict)."""
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise DocumentError(f"invalid JSON: {exc}") from None
    if not isinstance(document, dict):
        raise DocumentError("run spec must be an object")

    model = document.get("model")
    if not isinstance(model, str) or not model:
        raise DocumentError("model must be a non-empty string", "model")

    terms_doc = document.get("terms", [])
    if not isinstance(terms_doc, list):
        raise DocumentError("terms must be a list", "terms")
    terms = []
    for ti, tdoc in enumerate(terms_doc):
        tpath = f"terms[{ti}]"
        if not isinstance(tdoc, dict):
            raise DocumentError("term must be an object", tpath)
        cond = tdoc.get("condition")
        if not isinstance(cond, str) or not cond:
            raise DocumentError("term needs a condition id", f"{tpath}.condition")
        if cond == NULL_CONDITION:
            raise DocumentError(
                "the null condition is implicit and cannot carry a term",
                f"{tpath}.condition",
            )
        temporal = parse_temporal(tdoc.get("temporal"), f"{tpath}.temporal")
        mask = parse_mask_ref(tdoc.get("mask"), f"{tpath}.mask", mask_resolver)
        terms.append(TermSpec(cond, temporal, mask))

    sdoc = document.get("sampler")
    if not isinstance(sdoc, dict):
        raise DocumentError("sampler must be an object", "sampler")
    kind = sdoc.get("kind", DDPM)
    if kind not in (DDPM, DDIM):
        raise DocumentError(f"unknown sampler kind {kind!r}", "sampler.kind")
    eta = _real(sdoc.get("eta", 0.0), "sampler.eta")
    if kind == DDPM and "eta" in sdoc and eta != 0.0:
        raise DocumentError("eta applies to the ddim sampler only", "sampler.eta")
    if not 0.0 <= eta <= 1.0:
        raise DocumentError(f"eta must be in [0, 1], got {eta}", "sampler.eta")
    steps = _count(sdoc.get("steps", 50), "sampler.steps", minimum=2)
    seed = sdoc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise DocumentError("seed must be an integer", "sampler.seed")
    beta_min = _real(sdoc.get("beta_min", 1e-4), "sampler.beta_min")
    beta_max = _real(sdoc.get("beta_max", 0.02), "sampler.beta_max")
    if not 0.0 < beta_min <= beta_max < 1.0:
        raise DocumentError(
            f"need 0 < beta_min <= beta_max < 1, got {beta_min}, {beta_max}",
            "sampler",
        )
    sampler = SamplerSpec(steps, seed, kind, eta if kind == DDIM else 0.0, beta_min, beta_max)

    odoc = document.get("outputs", {})
    if not isinstance(odoc, dict):
        raise DocumentError("outputs must be an object", "outputs")
    samples = _count(odoc.get("samples", 1), "outputs.samples", minimum=1)
    record = bool(odoc.get("record_trajectory", False))
    emit_doc = odoc.get("emit", ["fields"])
    if not isinstance(emit_doc, list) or not emit_doc:
        raise DocumentError("emit must be a non-empty list", "outputs.emit")
    emit = []
    for kind_ in emit_doc:
        if kind_ not in EMIT_KINDS:
            raise DocumentError(
                f"unknown emit kind {kind_!r} (have {list(EMIT_KINDS)})", "outputs.emit"
            )
        if kind_ not in emit:
            emit.append(kind_)
    if "normmaps" in emit and not record:
        raise DocumentError(
            "emitting normmaps requires record_trajectory = true", "outputs"
        )
    outputs = OutputSpec(samples, record, tuple(sorted(emit)))

    return RunSpec(model, tuple(terms), sampler, outputs)


# ---------------------------------------------------------------------------
# resolution into executable objects
# ---------------------------------------------------------------------------


def build_schedule(sampler: SamplerSpec):
    return linear_beta_schedule(sampler.steps, sampler.beta_min, sampler.beta_max)


def resolve_terms(
    spec: RunSpec, model: ConditionModel, mask_loader=None
) -> list[GuidanceTerm]:
    """Turn term specs into guidance terms, materializing masks."""
    terms = []
    for ti, tspec in enumerate(spec.terms):
        if tspec.condition not in model.conditions:
            raise DocumentError(
                f"condition {tspec.condition!r} not in model "
                f"(have {model.condition_ids})",
                f"terms[{ti}].condition",
            )
        mask_ref = tspec.mask
        if mask_ref == MASK_UNIFORM:
            mask = SpatialMask.uniform()
        elif "builder" in mask_ref:
            try:
                mask = make_mask(model.shape, mask_ref["builder"])
            except (ValueError, KeyError) as exc:
                raise DocumentError(str(exc), f"terms[{ti}].mask.builder") from None
        else:
            if mask_loader is None:
                raise DocumentError(
                    "mask ids require an artifact store", f"terms[{ti}].mask"
                )
            try:
                mask_field = mask_loader(mask_ref["id"])
            except (OSError, KeyError) as exc:
                raise DocumentError(
                    f"unknown mask id {mask_ref['id']!r}: {exc}", f"terms[{ti}].mask"
                ) from None
            if mask_field.shape != model.shape:
                raise DocumentError(
                    f"mask shape {mask_field.shape.dims} != model shape {model.shape.dims}",
                    f"terms[{ti}].mask",
                )
            mask = SpatialMask.from_field(mask_field)
        terms.append(GuidanceTerm(tspec.condition, GSF(tspec.temporal, mask)))
    return terms


def sampler_config(spec: RunSpec) -> SamplerConfig:
    return SamplerConfig(
        schedule=build_schedule(spec.sampler),
        seed=spec.sampler.seed,
        kind=spec.sampler.kind,
        eta=spec.sampler.eta,
        num_samples=spec.outputs.samples,
        record_trajectory=spec.outputs.record_trajectory,
    )
