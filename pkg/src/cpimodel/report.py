"""TSV/JSON report writing with an embedded run manifest."""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path
from typing import Any

from . import __version__
from .regression import FitResult, ModelSpec

# Column order of the monthly model tables.
MODEL_COLUMNS = ("C1", "t1", "b1", "C2", "t2", "b2", "c", "d", "sterr")


def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return "sha256:" + h.hexdigest()


def build_manifest(command: str, config: Mapping[str, Any], inputs: Iterable[str | Path]) -> dict:
    return {
        "command": command,
        "config": dict(config),
        "inputs": {str(p): file_digest(p) for p in inputs},
        "version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).replace(microsecond=0).isoformat(),
    }


def fmt(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.3f}"
    return str(v)


def model_row(spec: ModelSpec, sterr: float | None = None) -> list[Any]:
    return [spec.code1, spec.lag1, spec.b1, spec.code2, spec.lag2, spec.b2, spec.c, spec.d, sterr]


def fit_to_dict(fit: FitResult) -> dict:
    return {
        **fit.spec.to_dict(),
        "sterr": fit.sterr,
        "ssr": fit.ssr,
        "r2": fit.r2,
        "n_obs": fit.n_obs,
        "start": str(fit.start),
        "anchor": str(fit.anchor),
    }


def render_tsv(manifest: Mapping[str, Any], header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    lines = [f"# {key}\t{json.dumps(manifest[key], sort_keys=True)}" for key in manifest]
    lines.append("\t".join(header))
    for row in rows:
        lines.append("\t".join(fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def render_json(manifest: Mapping[str, Any], result: Mapping[str, Any]) -> str:
    return json.dumps({"manifest": manifest, "result": result}, indent=2, allow_nan=False) + "\n"


def strip_manifest(text: str) -> str:
    """Report body without the manifest block, for byte comparisons."""
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        doc.pop("manifest", None)
        return json.dumps(doc, indent=2)
    return "".join(line + "\n" for line in text.splitlines() if not line.startswith("# "))


def write_reports(
    out_dir: str | Path,
    name: str,
    manifest: Mapping[str, Any],
    result: Mapping[str, Any],
    header: Sequence[str],
    rows: Sequence[Sequence[Any]],
    fmt_choice: str = "both",
) -> tuple[list[Path], str]:
    """Write ``name.tsv`` and/or ``name.json``; returns written paths and the TSV text."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tsv = render_tsv(manifest, header, rows)
    written = []
    if fmt_choice in ("tsv", "both"):
        p = out / f"{name}.tsv"
        p.write_text(tsv, encoding="utf-8")
        written.append(p)
    if fmt_choice in ("json", "both"):
        p = out / f"{name}.json"
        p.write_text(render_json(manifest, result), encoding="utf-8")
        written.append(p)
    return written, tsv


def load_model(path: str | Path) -> ModelSpec:
    """Read a ModelSpec from a bare spec JSON or from a search/stability report."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    for key in ("result", "model"):
        if isinstance(doc, dict) and key in doc and isinstance(doc[key], dict):
            doc = doc[key]
    if isinstance(doc, dict) and "model" in doc:
        doc = doc["model"]
    return ModelSpec.from_dict(doc)
