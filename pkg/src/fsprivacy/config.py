"""Experiment configuration: one JSON document per experiment.

Schema (agents are 1-indexed)::

    {
      "topology": {"n": 3, "edges": [[1, 2], [1, 3], [2, 3]]},
      "costs": [{"kind": "quadratic", "Q": [[2]], "alpha": [1], "gamma": 0}, ...],
      "box": {"lo": [-100], "hi": [100]},
      "sigma": 1.0,
      "corrupted": [3],                 # optional
      "scenario_b": [2, 1, 3],          # optional; flat for m = 1, else m rows of n
      "degree": 1,                      # optional; polynomial coefficient audited
      "t": 1,                           # optional; corruption budget for graph-report
      "dgd": {"max_rounds": 5000, "step0": 1.0, "step_schedule": "inverse_sqrt",
              "tolerance": 1e-9, "init": "center", "update": "atc"},
      "trials": 100000,
      "histogram_bins": 50,
      "seed": 2024,                     # optional; generated and recorded if absent
      "out": "results"
    }
"""
from __future__ import annotations

import copy
import hashlib
import json
import re
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from .costs import Box, Cost, PolynomialCost, cost_from_dict
from .errors import DomainError
from .graph import Topology, is_connected
from .optimizer import DgdConfig

_KNOWN_KEYS = {
    "topology", "costs", "box", "sigma", "corrupted", "scenario_b", "degree", "t",
    "dgd", "trials", "histogram_bins", "seed", "out",
}


class ConfigError(Exception):
    """Invalid configuration; carries the offending key path and source line."""

    def __init__(self, message: str, path: str = "", line: Optional[int] = None, source: str = "<config>"):
        self.path = path
        self.line = line
        self.source = source
        where = source if line is None else f"{source}:{line}"
        super().__init__(f"{where}: {path + ': ' if path else ''}{message}")


def _locate(text: str, path: list) -> Optional[int]:
    """Best-effort line number of a key path in the raw JSON text."""
    pos, found = 0, None
    for part in path:
        if isinstance(part, str):
            m = re.compile(r'"%s"\s*:' % re.escape(part)).search(text, pos)
            if m is None:
                break
            pos = found = m.start()
    if found is None:
        return None
    return text.count("\n", 0, found) + 1


def _path_str(path: list) -> str:
    out = ""
    for p in path:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else p)
    return out


@dataclass
class ExperimentConfig:
    topology: Topology
    costs: list
    sigma: float
    box: Optional[Box] = None
    corrupted: tuple = ()
    scenario_b: Optional[np.ndarray] = None
    degree: int = 1
    t: Optional[int] = None
    dgd: dict = field(default_factory=dict)
    trials: int = 100_000
    histogram_bins: int = 50
    seed: Optional[int] = None
    out: str = "results"
    raw: dict = field(default_factory=dict, repr=False)

    def dgd_config(self) -> DgdConfig:
        if self.box is None:
            raise DomainError("'box' is required to run the optimizer")
        return DgdConfig(box=self.box, **self.dgd)

    def private_coefficients(self) -> np.ndarray:
        """m x n matrix of the audited coefficients (affine part, or degree ``degree``)."""
        if self.degree == 1:
            return np.column_stack([c.affine for c in self.costs])
        return np.array([[c.coefficient(self.degree) for c in self.costs]])

    def canonical(self) -> dict:
        """Settings that determine results; the output directory is left out."""
        d = dict(self.raw)
        d.pop("out", None)
        d["trials"] = self.trials
        d["seed"] = self.seed
        return d

    def digest(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def parse_config(data: Any, text: str = "", source: str = "<config>") -> ExperimentConfig:
    def fail(msg: str, path: list):
        raise ConfigError(msg, _path_str(path), _locate(text, path) if text else None, source)

    if not isinstance(data, dict):
        fail("top level must be a JSON object", [])
    for key in data:
        if key not in _KNOWN_KEYS:
            fail(f"unknown key {key!r}", [key])
    for key in ("topology", "costs", "sigma"):
        if key not in data:
            fail(f"missing required key {key!r}", [])

    try:
        topo = Topology.from_dict(data["topology"])
    except (DomainError, TypeError, ValueError) as exc:
        fail(str(exc), ["topology"])
    if not is_connected(topo):
        fail("topology is disconnected; masking needs a connected graph", ["topology"])

    if not isinstance(data["costs"], list) or len(data["costs"]) != topo.n:
        fail(f"expected a list of {topo.n} costs", ["costs"])
    costs: list[Cost] = []
    for idx, cd in enumerate(data["costs"]):
        try:
            costs.append(cost_from_dict(cd))
        except (DomainError, KeyError, TypeError, ValueError, AttributeError) as exc:
            fail(f"invalid cost: {exc}", ["costs", idx])
    if len({c.dim for c in costs}) != 1:
        fail("costs have mixed dimensions", ["costs"])
    m = costs[0].dim

    sigma = data["sigma"]
    if not isinstance(sigma, (int, float)) or isinstance(sigma, bool) or not sigma > 0:
        fail("sigma must be a positive number", ["sigma"])

    box = None
    if "box" in data:
        try:
            box = Box(data["box"]["lo"], data["box"]["hi"])
        except (DomainError, KeyError, TypeError, ValueError) as exc:
            fail(f"invalid box: {exc}", ["box"])
        if box.dim != m:
            fail(f"box has dimension {box.dim}, costs have {m}", ["box"])

    corrupted = tuple(data.get("corrupted", ()))
    for a in corrupted:
        if not isinstance(a, int) or not 1 <= a <= topo.n:
            fail(f"agent id {a!r} outside 1..{topo.n}", ["corrupted"])
    if len(set(corrupted)) >= topo.n:
        fail("at least one agent must stay honest", ["corrupted"])

    degree = data.get("degree", 1)
    if not isinstance(degree, int) or degree < 1:
        fail("degree must be a positive integer", ["degree"])
    if degree > 1 and not all(isinstance(c, PolynomialCost) and c.degree >= degree for c in costs):
        fail(f"degree {degree} needs polynomial costs of at least that degree", ["degree"])
    rows = 1 if degree > 1 else m

    scenario_b = None
    if "scenario_b" in data:
        try:
            scenario_b = np.atleast_2d(np.asarray(data["scenario_b"], dtype=float))
        except (TypeError, ValueError) as exc:
            fail(f"not a numeric array: {exc}", ["scenario_b"])
        if scenario_b.shape != (rows, topo.n):
            fail(f"expected shape ({rows}, {topo.n}), got {scenario_b.shape}", ["scenario_b"])

    t = data.get("t")
    if t is not None and (not isinstance(t, int) or t < 0):
        fail("t must be a non-negative integer", ["t"])

    dgd = dict(data.get("dgd", {}))
    allowed = {"max_rounds", "step0", "step_schedule", "weight_scheme", "tolerance", "init", "update", "patience"}
    for key in dgd:
        if key not in allowed:
            fail(f"unknown DGD setting {key!r}", ["dgd", key])
    if box is not None:
        try:
            DgdConfig(box=box, **dgd)
        except (DomainError, TypeError) as exc:
            fail(str(exc), ["dgd"])

    trials = data.get("trials", 100_000)
    if not isinstance(trials, int) or trials < 1:
        fail("trials must be a positive integer", ["trials"])
    bins = data.get("histogram_bins", 50)
    if not isinstance(bins, int) or bins < 0:
        fail("histogram_bins must be a non-negative integer", ["histogram_bins"])
    seed = data.get("seed")
    if seed is not None and (not isinstance(seed, int) or seed < 0):
        fail("seed must be a non-negative integer", ["seed"])
    out = data.get("out", "results")
    if not isinstance(out, str):
        fail("out must be a path string", ["out"])

    return ExperimentConfig(
        topology=topo, costs=costs, sigma=float(sigma), box=box, corrupted=corrupted,
        scenario_b=scenario_b, degree=degree, t=t, dgd=dgd, trials=trials,
        histogram_bins=bins, seed=seed, out=out, raw=copy.deepcopy(data),
    )


def load_config(path) -> ExperimentConfig:
    source = str(path)
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", source=source) from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg} (column {exc.colno})", line=exc.lineno, source=source) from None
    return parse_config(data, text, source)
