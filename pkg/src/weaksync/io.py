"""Matrix text files and scenario documents."""
from __future__ import annotations

import hashlib
from pathlib import Path
from typing import NamedTuple

import numpy as np
import yaml

from . import _kernel
from .control import AgentModel
from .graph import load_graph
from .simulator import ConfigError, ScenarioConfig


def parse_matrix(text: str, what: str = "matrix") -> np.ndarray:
    """Row-major text: one row per line, entries separated by commas and/or whitespace."""
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].replace(",", " ").strip()
        if not line:
            continue
        try:
            rows.append([float(tok) for tok in line.split()])
        except ValueError:
            raise ConfigError(f"{what}: line {lineno}: non-numeric entry in {raw.strip()!r}") from None
    if not rows:
        raise ConfigError(f"{what}: no rows")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ConfigError(f"{what}: rows have differing lengths {sorted(widths)}")
    return np.array(rows, dtype=float)


def load_matrix(path) -> np.ndarray:
    path = Path(path)
    return parse_matrix(path.read_text(), what=str(path))


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _matrix_entry(value, base: Path, what: str, inputs: dict) -> np.ndarray:
    if isinstance(value, str):
        p = (base / value).resolve()
        if not p.is_file():
            raise ConfigError(f"{what}: file not found: {p}")
        inputs[str(p)] = sha256_file(p)
        return load_matrix(p)
    if isinstance(value, (list, int, float)):
        try:
            return np.atleast_2d(np.array(value, dtype=float))
        except (TypeError, ValueError):
            raise ConfigError(f"{what}: inline matrix is not rectangular numeric data") from None
    raise ConfigError(f"{what}: expected a file path or an inline matrix")


def _num(section: dict, key: str, default, what: str):
    value = section.get(key, default)
    if value is None:
        return None
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{what}.{key}: expected a number, got {value!r}") from None


ANALYSIS_DEFAULTS = {"zeta_tol": 1e-3, "sync_tol": 1e-2, "growth_tol": 1e-3, "window": 0.1}


class Scenario(NamedTuple):
    config: ScenarioConfig
    analysis: dict
    inputs: dict  # resolved path -> sha256
    graph_path: str


def load_scenario(path) -> Scenario:
    """Read a scenario document; graph and model paths are relative to it."""
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: scenario must be a mapping")
    base = path.parent
    inputs = {str(path.resolve()): sha256_file(path)}

    if "graph" not in doc:
        raise ConfigError(f"{path}: missing 'graph'")
    gpath = (base / str(doc["graph"])).resolve()
    if not gpath.is_file():
        raise ConfigError(f"{path}: graph file not found: {gpath}")
    inputs[str(gpath)] = sha256_file(gpath)
    graph = load_graph(gpath.read_text(), path=str(gpath))

    model_doc = doc.get("model") or {}
    if "A" not in model_doc or "B" not in model_doc:
        raise ConfigError(f"{path}: model needs both A and B")
    try:
        model = AgentModel(
            _matrix_entry(model_doc["A"], base, "model.A", inputs),
            _matrix_entry(model_doc["B"], base, "model.B", inputs),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"model: {exc}") from None

    init = doc.get("initial") or {}
    x0 = init.get("x0")
    if x0 is not None:
        x0 = _matrix_entry(x0, base, "initial.x0", inputs)
    seed = init.get("seed")
    if seed is not None:
        seed = int(seed)
    rho0 = init.get("rho0", 0.0)
    rho0 = [float(v) for v in rho0] if isinstance(rho0, list) else float(rho0)

    tsec = doc.get("time") or {}
    isec = doc.get("integrator") or {}
    if "t_final" not in tsec:
        raise ConfigError(f"{path}: missing time.t_final")
    cfg = ScenarioConfig(
        graph=graph,
        model=model,
        t_final=_num(tsec, "t_final", None, "time"),
        sample_interval=_num(tsec, "sample_interval", 0.1, "time"),
        x0=x0,
        seed=seed,
        rho0=rho0,
        rtol=_num(isec, "rtol", 1e-8, "integrator"),
        atol=_num(isec, "atol", 1e-10, "integrator"),
        backend=isec.get("backend"),
        name=str(doc.get("name", path.stem)),
    )
    asec = doc.get("analysis") or {}
    unknown = set(asec) - set(ANALYSIS_DEFAULTS)
    if unknown:
        raise ConfigError(f"{path}: unknown analysis keys {sorted(unknown)}")
    analysis = {k: _num(asec, k, v, "analysis") for k, v in ANALYSIS_DEFAULTS.items()}
    return Scenario(cfg, analysis, inputs, str(gpath))


def resolved_config(cfg: ScenarioConfig, analysis: dict, graph_path=None) -> dict:
    """Every setting of a run, defaults included, in JSON-friendly form."""
    return {
        "name": cfg.name,
        "graph": {"path": graph_path, "node_count": cfg.graph.node_count, "edge_count": len(cfg.graph.edges)},
        "model": {"A": cfg.model.A.tolist(), "B": cfg.model.B.tolist()},
        "initial": {
            "seed": cfg.seed,
            "x0": None if cfg.x0 is None else np.asarray(cfg.x0).tolist(),
            "x0_distribution": None if cfg.x0 is not None else "uniform[-1,1] per component",
            "rho0": np.asarray(cfg.rho0).tolist(),
        },
        "time": {"t_final": cfg.t_final, "sample_interval": cfg.sample_interval},
        "integrator": {
            "method": "Dormand-Prince 5(4), PI step control, dense output",
            "rtol": cfg.rtol,
            "atol": cfg.atol,
            "max_step": cfg.sample_interval,
            "backend": _kernel.get(cfg.backend).BACKEND,
        },
        "analysis": dict(analysis),
    }
