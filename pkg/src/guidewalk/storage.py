"""Content-addressed artifact store and the single run-execution path.

Every surface (CLI, HTTP service) funnels through `execute_run`, so one run
spec always produces one byte-identical artifact tree. Run directories are
written to a temp location and atomically renamed into place; existing run
directories are never touched again.
"""

from __future__ import annotations

import hashlib
import json
import os
import shutil
import tempfile
from dataclasses import dataclass

import numpy as np

from . import gwf
from .diagnostics import (
    MetricReport,
    effective_mean,
    low_band_share,
    mean_field_error,
    norm_map_series,
    reports_to_json,
)
from .errors import DocumentError
from .fields import Field
from .models import BUILTIN_NAMES, ConditionModel, builtin_model, load_model_file
from .runspec import RunSpec, parse_runspec, resolve_terms, sampler_config
from .sampler import run_sampling

MANIFEST_NAME = "manifest.json"


class ArtifactStore:
    """Append-only store: runs under runs/<id>/, masks under masks/<id>.gwf."""

    def __init__(self, root: str):
        self.root = os.path.abspath(root)
        os.makedirs(self.runs_root, exist_ok=True)
        os.makedirs(self.masks_root, exist_ok=True)

    @property
    def runs_root(self) -> str:
        return os.path.join(self.root, "runs")

    @property
    def masks_root(self) -> str:
        return os.path.join(self.root, "masks")

    # -- masks --------------------------------------------------------------

    def store_mask(self, mask: Field) -> str:
        raw = gwf.field_to_bytes(mask)
        mask_id = hashlib.sha256(raw).hexdigest()
        path = self._mask_path(mask_id)
        if not os.path.exists(path):
            self._write_atomic(path, raw)
        return mask_id

    def store_mask_file(self, path: str) -> str:
        with open(path, "rb") as fh:
            raw = fh.read()
        return self.store_mask(gwf.field_from_bytes(raw))

    def load_mask(self, mask_id: str) -> Field:
        path = self._mask_path(mask_id)
        if not os.path.exists(path):
            raise KeyError(f"no stored mask {mask_id!r}")
        return gwf.read_field(path)

    def _mask_path(self, mask_id: str) -> str:
        if not mask_id.isalnum():
            raise KeyError(f"malformed mask id {mask_id!r}")
        return os.path.join(self.masks_root, f"{mask_id}.gwf")

    # -- runs ---------------------------------------------------------------

    def run_dir(self, run_id: str) -> str:
        return os.path.join(self.runs_root, run_id)

    def has_run(self, run_id: str) -> bool:
        return os.path.exists(os.path.join(self.run_dir(run_id), MANIFEST_NAME))

    def read_manifest(self, run_id: str) -> dict:
        with open(os.path.join(self.run_dir(run_id), MANIFEST_NAME), "r") as fh:
            return json.load(fh)

    def _write_atomic(self, path: str, raw: bytes) -> None:
        fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path))
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(raw)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def publish_run(self, run_id: str, staged_dir: str) -> None:
        """Move a fully written staging directory into place (idempotent)."""
        target = self.run_dir(run_id)
        if self.has_run(run_id):
            shutil.rmtree(staged_dir)
            return
        try:
            os.rename(staged_dir, target)
        except OSError:
            # lost a publish race; the existing directory wins
            if self.has_run(run_id):
                shutil.rmtree(staged_dir)
            else:
                raise


@dataclass(frozen=True)
class ModelRegistry:
    """Resolves model references: builtin names, registered files, or paths."""

    models_dir: str = ""

    def names(self) -> list[str]:
        names = list(BUILTIN_NAMES)
        if self.models_dir and os.path.isdir(self.models_dir):
            for entry in sorted(os.listdir(self.models_dir)):
                if entry.endswith(".json"):
                    names.append(entry[: -len(".json")])
        return names

    def load(self, ref: str) -> ConditionModel:
        if ref in BUILTIN_NAMES:
            return builtin_model(ref)
        if self.models_dir:
            candidate = os.path.join(self.models_dir, f"{ref}.json")
            if os.path.exists(candidate):
                return load_model_file(candidate)
        if ref.endswith(".json") and os.path.exists(ref):
            return load_model_file(ref)
        raise DocumentError(f"unknown model {ref!r} (have {self.names()})", "model")


def _default_metrics(model, terms, samples, sample_digest) -> list[MetricReport]:
    stacked = np.stack([s.values for s in samples])
    reports = [
        MetricReport.info_metric(
            "samples_digest", 0.0, sha256=sample_digest, count=len(samples)
        ),
        MetricReport.info_metric(
            "sample_mean_rms", float(np.sqrt((stacked.mean(0) ** 2).mean()))
        ),
    ]
    try:
        target = effective_mean(model, terms)
    except ValueError:
        return reports
    reports.append(
        MetricReport.error_metric(
            "mean_field_error_vs_mu_eff",
            mean_field_error(samples, target),
            0.1,
        )
    )
    return reports


def execute_run(
    spec: RunSpec,
    store: ArtifactStore,
    registry: ModelRegistry | None = None,
    progress=None,
) -> str:
    """Run a spec and persist its artifacts; returns the run id.

    Already-present runs are returned without recomputation (content
    addressing makes the call idempotent).
    """
    registry = registry or ModelRegistry()
    run_id = spec.run_id()
    if store.has_run(run_id):
        return run_id

    model = registry.load(spec.model)
    terms = resolve_terms(spec, model, mask_loader=store.load_mask)
    if "normmaps" in spec.outputs.emit and not model.shape.is_grid:
        raise DocumentError("normmaps require a grid-shaped model", "outputs.emit")
    config = sampler_config(spec)
    samples, trajectories = run_sampling(model, terms, config, progress=progress)

    staged = tempfile.mkdtemp(prefix=f".staging-{run_id[:12]}-", dir=store.runs_root)
    try:
        manifest: dict = {
            "run_id": run_id,
            "runspec": spec.to_document(),
            "model_shape": {"kind": model.shape.kind, "dims": list(model.shape.dims)},
            "samples": [],
        }
        os.makedirs(os.path.join(staged, "samples"))
        digest = hashlib.sha256()
        for i, sample in enumerate(samples):
            rel = f"samples/{i:06d}.gwf"
            raw = gwf.field_to_bytes(sample)
            digest.update(raw)
            with open(os.path.join(staged, rel), "wb") as fh:
                fh.write(raw)
            manifest["samples"].append(rel)
        sample_digest = digest.hexdigest()
        manifest["samples_digest"] = sample_digest

        if "images" in spec.outputs.emit:
            os.makedirs(os.path.join(staged, "images"))
            renders = []
            for i, sample in enumerate(samples):
                rel = f"images/{i:06d}.pgm"
                # render from the float32 round-trip so on-the-fly renders of
                # the stored field files match these bytes exactly
                raw, lo, hi = gwf.render_pgm(
                    gwf.field_from_bytes(gwf.field_to_bytes(sample))
                )
                with open(os.path.join(staged, rel), "wb") as fh:
                    fh.write(raw)
                renders.append({"file": rel, "min": lo, "max": hi})
            manifest["images"] = renders

        if "normmaps" in spec.outputs.emit and trajectories:
            os.makedirs(os.path.join(staged, "normmaps"))
            series = norm_map_series(trajectories[0])
            entries = []
            for step, (t, norm_map) in enumerate(series):
                rel = f"normmaps/{step:06d}.pgm"
                raw, lo, hi = gwf.render_pgm(norm_map)
                with open(os.path.join(staged, rel), "wb") as fh:
                    fh.write(raw)
                entry = {"file": rel, "step": step, "t": t, "min": lo, "max": hi}
                if model.shape.is_grid:
                    cutoff = max(1, min(model.shape.dims) // 4)
                    entry["low_band_share"] = low_band_share(norm_map, cutoff)
                entries.append(entry)
            manifest["normmaps"] = entries

        if "metrics" in spec.outputs.emit:
            reports = _default_metrics(model, terms, samples, sample_digest)
            with open(os.path.join(staged, "metrics.json"), "w") as fh:
                fh.write(reports_to_json(reports))
            manifest["metrics"] = "metrics.json"

        with open(os.path.join(staged, MANIFEST_NAME), "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except BaseException:
        shutil.rmtree(staged, ignore_errors=True)
        raise
    store.publish_run(run_id, staged)
    return run_id


def load_runspec_file(path: str, store: ArtifactStore) -> RunSpec:
    base_dir = os.path.dirname(os.path.abspath(path))

    def resolver(ref: str) -> str:
        full = ref if os.path.isabs(ref) else os.path.join(base_dir, ref)
        return store.store_mask_file(full)

    with open(path, "r", encoding="utf-8") as fh:
        return parse_runspec(fh.read(), mask_resolver=resolver)
