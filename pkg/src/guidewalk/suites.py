"""Named metric suites for `diagnose`: batch verification over a store."""

from __future__ import annotations

import json
import os

from . import gwf
from .diagnostics import (
    MetricReport,
    effective_mean,
    layout_preservation,
    mean_field_error,
)
from .errors import DocumentError
from .runspec import parse_runspec, resolve_terms
from .storage import ArtifactStore, ModelRegistry

SUITE_NAMES = ("gaussian_oracle", "norm_maps", "layout")


def _run_ids(store: ArtifactStore) -> list[str]:
    if not os.path.isdir(store.runs_root):
        return []
    return sorted(
        d
        for d in os.listdir(store.runs_root)
        if not d.startswith(".") and store.has_run(d)
    )


def _load_samples(store: ArtifactStore, run_id: str, manifest: dict):
    run_dir = store.run_dir(run_id)
    return [gwf.read_field(os.path.join(run_dir, rel)) for rel in manifest["samples"]]


def _suite_gaussian_oracle(store: ArtifactStore, registry: ModelRegistry):
    """Sample means vs the closed-form effective mean, where it is defined."""
    reports = []
    for run_id in _run_ids(store):
        manifest = store.read_manifest(run_id)
        spec = parse_runspec(manifest["runspec"])
        try:
            model = registry.load(spec.model)
            terms = resolve_terms(spec, model, mask_loader=store.load_mask)
            target = effective_mean(model, terms)
        except (ValueError, DocumentError):
            continue  # not an equal-variance constant-scale run
        samples = _load_samples(store, run_id, manifest)
        reports.append(
            MetricReport.error_metric(
                "mean_field_error_vs_mu_eff",
                mean_field_error(samples, target),
                0.1,
                run_id=run_id,
                samples=len(samples),
            )
        )
    return reports


def _suite_norm_maps(store: ArtifactStore, registry: ModelRegistry):
    """Low-band share of the prediction-norm map should fall over time."""
    reports = []
    for run_id in _run_ids(store):
        manifest = store.read_manifest(run_id)
        entries = manifest.get("normmaps")
        if not entries:
            continue
        early = next((e for e in entries if abs(e["t"] - 1.0) < 1e-9), entries[0])
        late = min(entries, key=lambda e: abs(e["t"] - 0.2))
        reports.append(
            MetricReport.error_metric(
                "low_band_share_drop",
                late["low_band_share"] - early["low_band_share"],
                0.0,
                run_id=run_id,
                share_at_t1=early["low_band_share"],
                share_at_t02=late["low_band_share"],
            )
        )
    return reports


def _suite_layout(store: ArtifactStore, registry: ModelRegistry):
    """Layout preservation of each walk cell relative to the first cell."""
    reports = []
    walks_dir = os.path.join(store.root, "walks")
    if not os.path.isdir(walks_dir):
        return reports
    for entry in sorted(os.listdir(walks_dir)):
        if not entry.endswith(".json"):
            continue
        with open(os.path.join(walks_dir, entry), "r") as fh:
            walk = json.load(fh)
        cells = walk.get("cells", [])
        if len(cells) < 2:
            continue
        ref_manifest = store.read_manifest(cells[0]["run_id"])
        ref = _load_samples(store, cells[0]["run_id"], ref_manifest)[0]
        if not ref.shape.is_grid:
            continue
        cutoff = max(1, min(ref.shape.dims) // 4)
        for cell in cells[1:]:
            sample = _load_samples(
                store, cell["run_id"], store.read_manifest(cell["run_id"])
            )[0]
            reports.append(
                MetricReport.info_metric(
                    "layout_preservation_vs_first_cell",
                    layout_preservation(ref, sample, cutoff),
                    walk=entry[:-5],
                    run_id=cell["run_id"],
                    cutoff=cutoff,
                )
            )
    return reports


_SUITES = {
    "gaussian_oracle": _suite_gaussian_oracle,
    "norm_maps": _suite_norm_maps,
    "layout": _suite_layout,
}


def run_suite(name: str, store: ArtifactStore, registry: ModelRegistry) -> list[MetricReport]:
    if name not in _SUITES:
        raise DocumentError(f"unknown suite {name!r} (have {sorted(_SUITES)})", "suite")
    return _SUITES[name](store, registry)
