"""End-to-end drivers behind the ``cluster``, ``simulate`` and ``diagnose`` commands.

All artifacts are written into a staging directory next to the target and
moved into place only when the whole run succeeds.
"""

from __future__ import annotations

import contextlib
import csv
import hashlib
import json
import logging
import math
import os
import shutil
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .config import DiagnoseConfig, PipelineConfig, SimulationConfig
from .diagnostics import NormalityReport, jarque_bera
from .errors import ArgumentError, IngestionError, UsageError
from .features import acf_values, effective_lags
from .fuzzy import afcm_fit, consensus_groups, select_c
from .harness import L_GRID, T_GRID, results_csv, run_scenario, scenario_spec
from .score_models import MIN_FIT_LENGTH, DcsSpec, ReturnSeries, extract_moments, fit_mle

log = logging.getLogger(__name__)

MISSING = {"", "na", "nan", "null", "none", "#n/a"}
DATE_HEADERS = {"date", "dates", "time", "timestamp", "day", "period"}


def _parse_float(text: str) -> float | None:
    """Dot-decimal parse independent of the process locale; ``None`` marks a missing cell."""
    s = text.strip()
    if s.lower() in MISSING:
        return None
    return float(s)


def ingest_csv(path: str | os.PathLike) -> list[ReturnSeries]:
    """Read a panel with one series per column.

    The first column is taken as row labels (dates) when its header looks
    like a date header or its first cell is not a number. A missing cell
    drops only that point of that column.

    Raises
    ------
    IngestionError
        Unreadable file, no data rows, a non-numeric or non-finite cell, a
        duplicate column name, or a column with fewer than 30 usable values.
    """
    try:
        with open(path, newline="", encoding="utf-8-sig") as fh:
            rows = list(csv.reader(fh))
    except (OSError, UnicodeDecodeError, csv.Error) as exc:
        raise IngestionError(f"cannot read {path}: {exc}") from exc
    rows = [r for r in rows if any(cell.strip() for cell in r)]
    if not rows:
        raise IngestionError(f"{path}: file is empty")
    header = [h.strip() for h in rows[0]]
    body = rows[1:]
    if not body:
        raise IngestionError(f"{path}: header only, no data rows")

    has_dates = header[0].lower() in DATE_HEADERS
    if not has_dates:
        try:
            _parse_float(body[0][0])
        except (ValueError, IndexError):
            has_dates = True
    cols = list(range(1 if has_dates else 0, len(header)))
    if not cols:
        raise IngestionError(f"{path}: no series columns")
    names = [header[j] for j in cols]
    if any(not n for n in names):
        raise IngestionError(f"{path}: empty column name in header")
    if len(set(names)) != len(names):
        raise IngestionError(f"{path}: duplicate column names")

    values: dict[str, list[float]] = {n: [] for n in names}
    labels: dict[str, list[str]] = {n: [] for n in names}
    for i, row in enumerate(body, start=2):
        if len(row) > len(header):
            raise IngestionError(f"{path}: row {i} has {len(row)} cells, header has {len(header)}")
        label = row[0].strip() if has_dates else str(i - 1)
        for j, name in zip(cols, names):
            cell = row[j] if j < len(row) else ""
            try:
                v = _parse_float(cell)
            except ValueError:
                raise IngestionError(f"{path}: non-numeric value {cell!r} in column {name!r}, row {i}") from None
            if v is None:
                continue
            if not math.isfinite(v):
                raise IngestionError(f"{path}: non-finite value {cell!r} in column {name!r}, row {i}")
            values[name].append(v)
            labels[name].append(label)
    out = []
    for name in names:
        if len(values[name]) < MIN_FIT_LENGTH:
            raise IngestionError(
                f"{path}: column {name!r} has {len(values[name])} usable rows, need at least {MIN_FIT_LENGTH}"
            )
        out.append(ReturnSeries(name, np.array(values[name]), tuple(labels[name])))
    return out


# ---------------------------------------------------------------- formatting

def _raw(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _fmt4(x) -> str:
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.4f}"
    return str(x)


def _write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence], fmt=_raw) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def _write_pair(directory: Path, stem: str, header, rows) -> None:
    """4-decimal human table plus a full-precision ``_raw`` companion."""
    rows = list(rows)
    _write_csv(directory / f"{stem}.csv", header, rows, _fmt4)
    _write_csv(directory / f"{stem}_raw.csv", header, rows, _raw)


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = int(epoch) if epoch and epoch.strip().isdigit() else int(time.time())
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(t))


def _file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_json(path: Path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")


@contextlib.contextmanager
def staged_output(out: str | os.PathLike):
    """Yield a scratch directory that replaces ``out`` on success and vanishes on failure.

    An existing ``out`` is only replaced when it is empty or holds a previous
    run (has a ``manifest.json``).
    """
    target = Path(out).resolve()
    if target.exists():
        if not target.is_dir():
            raise UsageError(f"output path {target} exists and is not a directory")
        if any(target.iterdir()) and not (target / "manifest.json").exists():
            raise UsageError(f"output directory {target} is not empty and holds no previous run")
    target.parent.mkdir(parents=True, exist_ok=True)
    stage = Path(tempfile.mkdtemp(prefix=f".{target.name}.", dir=target.parent))
    try:
        yield stage
    except BaseException:
        shutil.rmtree(stage, ignore_errors=True)
        raise
    if target.exists():
        shutil.rmtree(target)
    os.replace(stage, target)
    os.chmod(target, 0o755)


# ------------------------------------------------------------------- cluster

def _fit_one(args):
    spec, series = args
    fitted = fit_mle(spec, series)
    return fitted, extract_moments(fitted, series)


def _fit_all(spec: DcsSpec, panel: list[ReturnSeries], workers: int):
    tasks = [(spec, s) for s in panel]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
            return list(pool.map(_fit_one, tasks))
    return [_fit_one(t) for t in tasks]


def _diagnostics_rows(reports: list[NormalityReport]):
    header = ("id", "n", "skewness", "kurtosis", "jb_stat", "jb_pvalue", "adj_jb_stat", "adj_jb_pvalue")
    rows = [tuple(r.to_dict()[h] for h in header) for r in reports]
    return header, rows


def run_pipeline(config: PipelineConfig) -> dict:
    """Diagnose, fit, extract moments, cluster per moment and write all artifacts.

    Returns the manifest that was written.
    """
    config.validate()
    panel = ingest_csv(config.input)
    panel.sort(key=lambda s: s.id)
    ids = tuple(s.id for s in panel)
    K = len(panel)
    spec = config.spec
    if config.c is not None:
        if config.c > K:
            raise ArgumentError(f"c={config.c} exceeds the number of series K={K}")
        c_range = None
    else:
        c_max = min(config.c_max, K - 1)
        if c_max < config.c_min:
            raise ArgumentError(f"need at least {config.c_min + 1} series to compare cluster counts (K={K})")
        if c_max < config.c_max:
            log.warning("c_max lowered from %d to K-1=%d", config.c_max, c_max)
        c_range = (config.c_min, c_max)

    with staged_output(config.out) as stage:
        reports = [jarque_bera(s) for s in panel]
        header, rows = _diagnostics_rows(reports)
        _write_pair(stage, "diagnostics", header, rows)

        fits = _fit_all(spec, panel, config.workers)
        moments_dir = stage / "moments"
        moments_dir.mkdir()
        names = spec.family.moment_names
        for s, (_, paths) in zip(panel, fits):
            labels = s.labels or tuple(str(t + 1) for t in range(len(s)))
            cols = [paths.moments[n] for n in names]
            rows = ((labels[t], s.values[t], *(c[t] for c in cols)) for t in range(len(s)))
            _write_csv(moments_dir / f"{s.id}.csv", ("label", "y", *names), rows)

        L = effective_lags(config.lags, [len(s) for s in panel])
        level_labels = []
        silhouettes: dict[str, dict[int, float]] = {}
        chosen: dict[str, int] = {}
        for name in names:
            X = np.vstack([acf_values(paths.moments[name], L) for _, paths in fits])
            if c_range is None:
                result = afcm_fit(X, config.c, config.m, config.tol, config.max_iter, config.restarts, config.seed, ids)
                silhouettes[name] = {config.c: result.silhouette}
            else:
                sel = select_c(X, *c_range, config.m, config.tol, config.max_iter, config.restarts, config.seed, ids)
                result = sel.results[sel.best_C]
                silhouettes[name] = dict(sel.table)
            chosen[name] = result.membership.C
            level_labels.append(result.labels)
            U = result.membership.u
            header = ("id", *(f"u{c + 1}" for c in range(U.shape[1])), "assigned")
            rows = [(ids[k], *U[k], int(result.labels[k]) + 1) for k in range(K)]
            _write_pair(stage, f"membership_{name}", header, rows)

        all_c = sorted({c for table in silhouettes.values() for c in table})
        rows = [(c, *(silhouettes[n].get(c, "") for n in names)) for c in all_c]
        _write_pair(stage, "silhouette", ("C", *names), rows)

        groups = consensus_groups(level_labels, ids)
        _write_csv(stage / "consensus.csv", ("group", "id"), ((g + 1, i) for g, grp in enumerate(groups) for i in grp))

        manifest = {
            "tool": "dcsfcm",
            "version": __version__,
            "command": "cluster",
            "timestamp": _timestamp(),
            "config": config.to_dict(),
            "input_sha256": _file_sha256(config.input),
            "model": spec.to_dict(),
            "lags_used": L,
            "series": [f.summary() for f, _ in fits],
            "silhouette": {n: {str(c): v for c, v in silhouettes[n].items()} for n in names},
            "selected_C": chosen,
            "consensus": [list(g) for g in groups],
        }
        _write_json(stage / "manifest.json", manifest)
    return manifest


# ------------------------------------------------------------------ simulate

def run_simulation(config: SimulationConfig) -> list:
    """Run the classification study over the configured ``(T, L)`` grid."""
    config.validate()
    T_values = (config.T,) if config.T is not None else T_GRID
    L_values = (config.lags,) if config.lags is not None else L_GRID
    reports = []
    specs = []
    for T in T_values:
        for L in L_values:
            spec = scenario_spec(
                config.scenario, T, L, config.M, seed=config.seed,
                m=config.m, tol=config.tol, max_iter=config.max_iter, restarts=config.restarts,
            )
            specs.append(spec)
            reports.extend(run_scenario(spec, jobs=max(1, config.jobs)))
    with staged_output(config.out) as stage:
        (stage / "simulation.csv").write_text(results_csv(reports), encoding="utf-8")
        _write_csv(
            stage / "replications.csv",
            ("scenario", "method", "T", "L", "replication", "rate"),
            ((r.scenario, r.method, r.T, r.L, i, float(v)) for r in reports for i, v in enumerate(r.per_replication)),
        )
        a, b = specs[0].group_a, specs[0].group_b
        manifest = {
            "tool": "dcsfcm",
            "version": __version__,
            "command": "simulate",
            "timestamp": _timestamp(),
            "config": config.to_dict(),
            "dgp": {"group_a": vars(a), "group_b": vars(b), "counts": [specs[0].count_a, specs[0].count_b]},
            "model": specs[0].model.to_dict(),
            "results": [r.row() for r in reports],
        }
        _write_json(stage / "manifest.json", manifest)
    return reports


# ------------------------------------------------------------------ diagnose

def run_diagnose(config: DiagnoseConfig) -> str:
    """JB table for every column; written to ``out`` when given, always returned as text."""
    config.validate()
    panel = ingest_csv(config.input)
    reports = [jarque_bera(s) for s in panel]
    header, rows = _diagnostics_rows(reports)
    if config.out:
        with staged_output(config.out) as stage:
            _write_pair(stage, "diagnostics", header, rows)
            _write_json(stage / "manifest.json", {
                "tool": "dcsfcm", "version": __version__, "command": "diagnose",
                "timestamp": _timestamp(), "config": config.to_dict(),
                "input_sha256": _file_sha256(config.input),
            })
    lines = [",".join(header)] + [",".join(_fmt4(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"
