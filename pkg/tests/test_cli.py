import json
import os

from guidewalk.cli import main


def write_json(path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh)
    return str(path)


def runspec_doc(**sampler_overrides):
    sampler = {"kind": "ddpm", "steps": 20, "seed": 3, "beta_min": 1e-3, "beta_max": 0.2}
    sampler.update(sampler_overrides)
    return {
        "model": "two_styles_2d",
        "terms": [{"condition": "base", "temporal": {"kind": "constant", "m": 1.0}}],
        "sampler": sampler,
        "outputs": {"samples": 16, "emit": ["fields", "images", "metrics"]},
    }


def tree_bytes(root):
    """Relative path -> file bytes for a whole directory tree."""
    out = {}
    for dirpath, _, files in os.walk(root):
        for name in files:
            full = os.path.join(dirpath, name)
            rel = os.path.relpath(full, root)
            with open(full, "rb") as fh:
                out[rel] = fh.read()
    return out


def test_sample_writes_expected_artifacts(tmp_path, capsys):
    spec = write_json(tmp_path / "spec.json", runspec_doc())
    out = tmp_path / "store"
    assert main(["sample", spec, "--out", str(out)]) == 0
    run_id = capsys.readouterr().out.strip()
    run_dir = out / "runs" / run_id
    manifest = json.loads((run_dir / "manifest.json").read_text())
    assert len(manifest["samples"]) == 16
    assert all((run_dir / rel).exists() for rel in manifest["samples"])
    assert (run_dir / "metrics.json").exists()
    assert len(manifest["images"]) == 16


def test_sample_reruns_are_byte_identical(tmp_path):
    spec = write_json(tmp_path / "spec.json", runspec_doc())
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["sample", spec, "--out", str(a)]) == 0
    assert main(["sample", spec, "--out", str(b)]) == 0
    assert tree_bytes(a) == tree_bytes(b)


def test_sample_into_same_store_does_not_mutate(tmp_path):
    spec = write_json(tmp_path / "spec.json", runspec_doc())
    out = tmp_path / "store"
    assert main(["sample", spec, "--out", str(out)]) == 0
    before = tree_bytes(out)
    mtimes = {}
    for dirpath, _, files in os.walk(out):
        for name in files:
            full = os.path.join(dirpath, name)
            mtimes[full] = os.stat(full).st_mtime_ns
    assert main(["sample", spec, "--out", str(out)]) == 0
    assert tree_bytes(out) == before
    for full, stamp in mtimes.items():
        assert os.stat(full).st_mtime_ns == stamp  # untouched, not rewritten


def test_validation_error_exit_code_and_message(tmp_path, capsys):
    model_doc = {
        "shape": {"kind": "flat", "d": 2},
        "conditions": [
            {"id": "base", "components": [{"mean": [0.0, 0.0], "variance": 1.0, "weight": 1.0}]}
        ],
    }
    model_path = write_json(tmp_path / "model.json", model_doc)
    doc = runspec_doc()
    doc["model"] = model_path
    doc["terms"] = []
    spec = write_json(tmp_path / "spec.json", doc)
    code = main(["sample", spec, "--out", str(tmp_path / "store")])
    assert code == 2
    assert "missing null condition" in capsys.readouterr().err


def test_unknown_model_is_validation_error(tmp_path, capsys):
    doc = runspec_doc()
    doc["model"] = "not_a_model"
    spec = write_json(tmp_path / "spec.json", doc)
    assert main(["sample", spec, "--out", str(tmp_path / "store")]) == 2


def test_model_file_and_custom_models_dir(tmp_path, capsys):
    model_doc = {
        "shape": {"kind": "flat", "d": 2},
        "conditions": [
            {"id": "null", "components": [{"mean": [0.0, 0.0]}]},
            {"id": "base", "components": [{"mean": [1.0, 1.0]}]},
        ],
    }
    models_dir = tmp_path / "models"
    models_dir.mkdir()
    write_json(models_dir / "pair.json", model_doc)
    doc = runspec_doc()
    doc["model"] = "pair"
    spec = write_json(tmp_path / "spec.json", doc)
    code = main(["sample", spec, "--out", str(tmp_path / "store"), "--models", str(models_dir)])
    assert code == 0


def test_walk_grid_and_concurrent_equals_serial(tmp_path, capsys):
    walk_doc = {
        "base": {
            "model": "two_styles_2d",
            "terms": [
                {"condition": "style_A", "temporal": {"kind": "constant", "m": 1.0}},
                {"condition": "style_B", "temporal": {"kind": "constant", "m": 1.0}},
            ],
            "sampler": {"steps": 15, "seed": 9, "beta_min": 1e-3, "beta_max": 0.2},
            "outputs": {"samples": 2},
        },
        "axes": [
            {"term": 0, "parameter": "magnitude", "values": [0.0, 1.0, 2.0]},
            {"term": 1, "parameter": "magnitude", "values": [0.0, 1.0, 2.0]},
        ],
    }
    spec = write_json(tmp_path / "walk.json", walk_doc)
    serial, threaded = tmp_path / "serial", tmp_path / "threaded"
    assert main(["walk", spec, "--out", str(serial)]) == 0
    manifest_path = capsys.readouterr().out.strip()
    cells = json.loads(open(manifest_path).read())["cells"]
    assert len(cells) == 9
    assert main(["walk", spec, "--out", str(threaded), "--jobs", "4"]) == 0
    assert tree_bytes(serial) == tree_bytes(threaded)


def test_interp_endpoints_match_single_style_sample(tmp_path, capsys):
    base = {
        "model": "two_styles_2d",
        "terms": [{"condition": "base", "temporal": {"kind": "constant", "m": 1.0}}],
        "sampler": {"steps": 15, "seed": 4, "beta_min": 1e-3, "beta_max": 0.2},
        "outputs": {"samples": 2},
    }
    interp_doc = {
        "base": base,
        "interpolate": {
            "condition_a": "style_A",
            "condition_b": "style_B",
            "m": 2.0,
            "lambdas": [0.0, 0.5, 1.0],
            "temporal": {"kind": "constant"},
        },
    }
    spec = write_json(tmp_path / "interp.json", interp_doc)
    store = tmp_path / "store"
    assert main(["interp", spec, "--out", str(store)]) == 0
    manifest = json.loads(open(capsys.readouterr().out.strip()).read())
    lam0_id = manifest["cells"][0]["run_id"]

    # single-style run WITHOUT the interpolation's zero-scale partner term:
    # endpoint samples must still match byte for byte
    single = dict(base)
    single["terms"] = base["terms"] + [
        {"condition": "style_A", "temporal": {"kind": "constant", "m": 2.0}}
    ]
    sspec = write_json(tmp_path / "single.json", single)
    assert main(["sample", sspec, "--out", str(store)]) == 0
    from guidewalk.runspec import parse_runspec

    single_id = parse_runspec(single).run_id()
    assert single_id != lam0_id  # different documents...
    run_a = store / "runs" / lam0_id / "samples"
    run_b = store / "runs" / single_id / "samples"
    for rel in os.listdir(run_a):  # ...identical artifacts
        assert (run_a / rel).read_bytes() == (run_b / rel).read_bytes()


def test_diagnose_gaussian_oracle_suite(tmp_path, capsys):
    model_doc = {
        "shape": {"kind": "flat", "d": 2},
        "conditions": [
            {"id": "null", "components": [{"mean": [0.0, 0.0]}]},
            {"id": "c", "components": [{"mean": [1.0, -1.0]}]},
        ],
    }
    models_dir = tmp_path / "models"
    models_dir.mkdir()
    write_json(models_dir / "pair.json", model_doc)
    doc = {
        "model": "pair",
        "terms": [{"condition": "c", "temporal": {"kind": "constant", "m": 0.5}}],
        "sampler": {"steps": 250, "seed": 5, "beta_min": 1e-4, "beta_max": 0.04},
        "outputs": {"samples": 2048},
    }
    spec = write_json(tmp_path / "spec.json", doc)
    store = tmp_path / "store"
    assert main(["sample", spec, "--out", str(store), "--models", str(models_dir)]) == 0
    capsys.readouterr()
    code = main(["diagnose", str(store), "--suite", "gaussian_oracle", "--models", str(models_dir)])
    out = capsys.readouterr().out
    assert code == 0
    assert "PASS mean_field_error_vs_mu_eff" in out
    reports = json.loads((store / "diagnostics" / "gaussian_oracle.json").read_text())
    assert reports and all(r["pass"] for r in reports)


def test_diagnose_unknown_suite(tmp_path):
    assert main(["diagnose", str(tmp_path), "--suite", "nope"]) == 2
