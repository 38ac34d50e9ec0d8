"""Scenario configuration: JSON-compatible schema, validation, and the
named presets that drive the end-to-end pipelines."""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from .gasmodel import (AtomicCharges, ChargeDistribution, ConfinementSpec,
                       ContinuousCharges, GasSpec, KernelSpec, ManifoldSpec,
                       WeightSpec)


class ConfigError(ValueError):
    pass


_GAS_KEYS = {"d", "kernel", "confinement", "weight", "charges", "manifold"}
_RUN_KEYS = {"n", "seed", "replicas", "schedule", "stratified"}
_ANALYSIS_KEYS = {"observables", "bins", "r0_list", "annulus_width"}
_OUTPUT_KEYS = {"directory", "formats"}
_TOP_KEYS = {"name", "gas", "run", "analysis", "output"}

_OBSERVABLES = {"radial", "nearest", "correlation", "ordering"}
_FORMATS = {"csv", "npz", "png"}


def _check_keys(block: Dict[str, Any], allowed: set, where: str) -> None:
    unknown = set(block) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in {where}")


def _require(block: Dict[str, Any], key: str, where: str) -> Any:
    if key not in block:
        raise ConfigError(f"missing key '{key}' in {where}")
    return block[key]


@dataclass
class ScenarioConfig:
    """Validated scenario document. `raw` is the canonical dict form and
    round-trips through JSON unchanged."""

    name: str
    gas: Dict[str, Any]
    run: Dict[str, Any]
    analysis: Dict[str, Any]
    output: Dict[str, Any]

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "ScenarioConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config document must be a mapping")
        _check_keys(doc, _TOP_KEYS, "top level")
        gas = _require(doc, "gas", "top level")
        _check_keys(gas, _GAS_KEYS, "gas block")
        _require(gas, "d", "gas block")
        _require(gas, "weight", "gas block")
        _require(gas, "charges", "gas block")
        run = dict(doc.get("run", {}))
        _check_keys(run, _RUN_KEYS, "run block")
        run.setdefault("n", 500)
        run.setdefault("seed", 0)
        run.setdefault("replicas", 1)
        run.setdefault("schedule", "fast")
        run.setdefault("stratified", True)
        analysis = dict(doc.get("analysis", {}))
        _check_keys(analysis, _ANALYSIS_KEYS, "analysis block")
        analysis.setdefault("observables", ["radial", "ordering"])
        analysis.setdefault("bins", 32)
        bad = set(analysis["observables"]) - _OBSERVABLES
        if bad:
            raise ConfigError(f"unknown observable(s) {sorted(bad)}")
        output = dict(doc.get("output", {}))
        _check_keys(output, _OUTPUT_KEYS, "output block")
        output.setdefault("directory", "out")
        output.setdefault("formats", ["csv", "png"])
        bad = set(output["formats"]) - _FORMATS
        if bad:
            raise ConfigError(f"unknown output format(s) {sorted(bad)}")
        cfg = cls(name=str(doc.get("name", "scenario")), gas=copy.deepcopy(gas),
                  run=run, analysis=analysis, output=output)
        cfg.build_gas_spec()  # validate eagerly
        return cfg

    @classmethod
    def from_json(cls, text: str) -> "ScenarioConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid JSON: {e}") from e
        return cls.from_dict(doc)

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "gas": copy.deepcopy(self.gas),
                "run": dict(self.run), "analysis": dict(self.analysis),
                "output": dict(self.output)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    # ---- builders -------------------------------------------------------

    def build_kernel(self) -> KernelSpec:
        blk = self.gas.get("kernel", {"type": "coulomb"})
        _check_keys(blk, {"type", "eta"}, "kernel block")
        kind = blk.get("type", "coulomb")
        if kind == "coulomb":
            return KernelSpec.coulomb()
        if kind == "riesz":
            return KernelSpec.riesz(float(_require(blk, "eta", "kernel block")))
        raise ConfigError(f"unknown kernel type '{kind}'")

    def build_confinement(self) -> ConfinementSpec:
        blk = self.gas.get("confinement", {"family": "quadratic"})
        _check_keys(blk, {"family", "axis"}, "confinement block")
        fam = blk.get("family", "quadratic")
        if fam == "quadratic":
            return ConfinementSpec.quadratic()
        if fam == "quartic_minus_quadratic":
            return ConfinementSpec.quartic_minus_quadratic()
        if fam == "coordinate_square":
            return ConfinementSpec.coordinate_square(int(blk.get("axis", 0)))
        raise ConfigError(f"unknown confinement family '{fam}'")

    def build_weight(self) -> WeightSpec:
        blk = self.gas["weight"]
        _check_keys(blk, {"family", "c"}, "weight block")
        fam = _require(blk, "family", "weight block")
        if fam == "constant":
            return WeightSpec.constant(float(blk.get("c", 1.0)))
        factories = {
            "linear": WeightSpec.linear,
            "inverse_sqrt": WeightSpec.inverse_sqrt,
            "inverse": WeightSpec.inverse,
            "sine_offset": WeightSpec.sine_offset,
        }
        if fam not in factories:
            raise ConfigError(f"unknown weight family '{fam}'")
        return factories[fam]()

    def build_charges(self) -> ChargeDistribution:
        blk = self.gas["charges"]
        kind = _require(blk, "type", "charges block")
        if kind == "uniform":
            _check_keys(blk, {"type", "low", "high"}, "charges block")
            return ContinuousCharges.uniform(float(_require(blk, "low", "charges")),
                                             float(_require(blk, "high", "charges")))
        if kind == "atoms":
            _check_keys(blk, {"type", "values", "weights"}, "charges block")
            values = _require(blk, "values", "charges")
            weights = _require(blk, "weights", "charges")
            return AtomicCharges(list(zip(values, weights)))
        if kind == "tabulated":
            _check_keys(blk, {"type", "q", "nu"}, "charges block")
            return ContinuousCharges.tabulated(
                np.asarray(_require(blk, "q", "charges"), float),
                np.asarray(_require(blk, "nu", "charges"), float))
        raise ConfigError(f"unknown charges type '{kind}'")

    def build_manifold(self) -> Optional[ManifoldSpec]:
        name = self.gas.get("manifold")
        if name in (None, "none"):
            return None
        if name == "sphere":
            return ManifoldSpec.unit_sphere()
        if name == "torus":
            return ManifoldSpec.torus()
        raise ConfigError(f"unknown manifold '{name}'")

    def build_gas_spec(self) -> GasSpec:
        try:
            return GasSpec(d=int(self.gas["d"]), kernel=self.build_kernel(),
                           confinement=self.build_confinement(),
                           weight=self.build_weight(),
                           charges=self.build_charges(),
                           manifold=self.build_manifold())
        except ConfigError:
            raise
        except (ValueError, TypeError, KeyError) as e:
            raise ConfigError(str(e)) from e

    def build_schedule(self):
        from .minimizer import FAST_SCHEDULE, AnnealSchedule
        sched = self.run.get("schedule", "fast")
        if sched == "fast":
            return FAST_SCHEDULE
        if sched == "thorough":
            return AnnealSchedule()
        if isinstance(sched, dict):
            return AnnealSchedule(**sched)
        raise ConfigError(f"unknown schedule '{sched}'")


def apply_overrides(doc: Dict[str, Any], overrides: List[str]) -> Dict[str, Any]:
    """Apply repeatable `key.path=value` overrides to a config dict; values
    parsed as JSON with a string fallback."""
    doc = copy.deepcopy(doc)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override '{item}' is not of the form key=value")
        path, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        keys = path.split(".")
        node = doc
        for k in keys[:-1]:
            node = node.setdefault(k, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override path '{path}' crosses a non-mapping")
        node[keys[-1]] = value
    return doc


def _preset_docs() -> Dict[str, Dict[str, Any]]:
    uniform12 = {"type": "uniform", "low": 1.0, "high": 2.0}
    base_run = {"n": 1000, "seed": 7, "replicas": 4, "schedule": "fast",
                "stratified": True}
    docs: Dict[str, Dict[str, Any]] = {
        "fig1_increasing": {
            "name": "fig1_increasing",
            "gas": {"d": 2, "kernel": {"type": "coulomb"},
                    "confinement": {"family": "quadratic"},
                    "weight": {"family": "linear", "c": 1.0},
                    "charges": dict(uniform12)},
            "run": dict(base_run),
            "analysis": {"observables": ["radial", "ordering"], "bins": 32},
        },
        "fig1_constant": {
            "name": "fig1_constant",
            "gas": {"d": 2, "kernel": {"type": "coulomb"},
                    "confinement": {"family": "quadratic"},
                    "weight": {"family": "constant", "c": 1.0},
                    "charges": dict(uniform12)},
            "run": dict(base_run),
            "analysis": {"observables": ["radial", "ordering"], "bins": 32},
        },
        "fig1_decreasing": {
            "name": "fig1_decreasing",
            "gas": {"d": 2, "kernel": {"type": "coulomb"},
                    "confinement": {"family": "quadratic"},
                    "weight": {"family": "inverse_sqrt", "c": 1.0},
                    "charges": dict(uniform12)},
            "run": dict(base_run),
            "analysis": {"observables": ["radial", "ordering"], "bins": 32},
        },
        "fig4_atom": {
            "name": "fig4_atom",
            "gas": {"d": 2, "kernel": {"type": "coulomb"},
                    "confinement": {"family": "quadratic"},
                    "weight": {"family": "linear", "c": 1.0},
                    "charges": {"type": "atoms", "values": [1.0, 2.0, 3.0],
                                "weights": [1 / 3, 1 / 3, 1 / 3]}},
            "run": {"n": 600, "seed": 11, "replicas": 1, "schedule": "fast",
                    "stratified": True},
            "analysis": {"observables": ["radial", "ordering"], "bins": 32},
        },
        "fig7_reconstruction": {
            "name": "fig7_reconstruction",
            "gas": {"d": 2, "kernel": {"type": "coulomb"},
                    "confinement": {"family": "quadratic"},
                    "weight": {"family": "inverse", "c": 1.0},
                    "charges": dict(uniform12)},  # replaced by the designed nu
            "run": {"n": 1000, "seed": 3, "replicas": 10, "schedule": "fast",
                    "stratified": True},
            "analysis": {"observables": ["radial", "ordering"], "bins": 24},
        },
        "fig8_eta": {
            "name": "fig8_eta",
            "gas": {"d": 2, "kernel": {"type": "riesz", "eta": 0.5},
                    "confinement": {"family": "quadratic"},
                    "weight": {"family": "linear", "c": 1.0},
                    "charges": dict(uniform12)},
            "run": {"n": 500, "seed": 13, "replicas": 2, "schedule": "fast",
                    "stratified": True},
            "analysis": {"observables": ["radial", "ordering"], "bins": 32},
        },
        "fig9_sphere": {
            "name": "fig9_sphere",
            "gas": {"d": 3, "kernel": {"type": "riesz", "eta": -1.0},
                    "confinement": {"family": "coordinate_square", "axis": 2},
                    "weight": {"family": "linear", "c": 1.0},
                    "charges": dict(uniform12), "manifold": "sphere"},
            "run": {"n": 500, "seed": 17, "replicas": 1, "schedule": "fast",
                    "stratified": True},
            "analysis": {"observables": ["ordering"], "bins": 32},
        },
        "fig9_torus": {
            "name": "fig9_torus",
            "gas": {"d": 3, "kernel": {"type": "riesz", "eta": -1.0},
                    "confinement": {"family": "coordinate_square", "axis": 1},
                    "weight": {"family": "linear", "c": 1.0},
                    "charges": dict(uniform12), "manifold": "torus"},
            "run": {"n": 500, "seed": 19, "replicas": 1, "schedule": "fast",
                    "stratified": True},
            "analysis": {"observables": ["ordering"], "bins": 32},
        },
    }
    return docs


def preset_names() -> List[str]:
    return sorted(_preset_docs())


def load_preset(name: str) -> ScenarioConfig:
    docs = _preset_docs()
    if name not in docs:
        raise ConfigError(
            f"unknown preset '{name}'; available: {', '.join(sorted(docs))}")
    return ScenarioConfig.from_dict(docs[name])
