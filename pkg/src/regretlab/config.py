"""Experiment configuration: JSON documents plus command-line overrides."""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ContractViolation
from .glm import GeneratorSpec, ThetaBox
from .predictors import DEFAULT_ALPHA, DEFAULT_BETA, DEFAULT_LAMBDA, DEFAULT_TAU, PredictorSpec
from .regret import VARIANTS

COMMANDS = ("regret", "capacity", "theory", "sweep")
U64_MAX = (1 << 64) - 1

# Run-time knobs that must not change the config hash.
_UNHASHED = ("workers", "out")

HEADLINE_SWEEP = {
    "box": {"lo": [-1.0], "hi": [1.0]},
    "predictors": [
        {"kind": "robust", "lam": DEFAULT_LAMBDA, "tau": DEFAULT_TAU, "alpha": DEFAULT_ALPHA,
         "beta": DEFAULT_BETA, "v_mode": "schedule"},
        {"kind": "shtarkov", "tau": 0.0, "v_mode": "fixed", "v": 1.0},
        {"kind": "jeffreys"},
    ],
    "generators": [{"kind": "heavy_tail", "b": 1.0, "n": "horizon"}],
    "horizons": [100, 1000, 10000],
    "variants": ["pac"],
    "reps": 10000,
    "seed": 20240101,
}

DEFAULT_THEORY = {
    "n_grid": [100, 1000, 10000, 100000],
    "d": 1,
    "leb": 1.0,
    "a": 1.0,
    "b": 1.0,
    "eps_grid": [1e-8, 1e-6, 1e-4, 1e-2],
    "units": "nats",
}


def _box_from(doc) -> ThetaBox:
    if doc is None:
        return ThetaBox.interval(0.0, 1.0)
    if not isinstance(doc, dict) or "lo" not in doc or "hi" not in doc:
        raise ContractViolation("box must be an object with 'lo' and 'hi' arrays")
    return ThetaBox(doc["lo"], doc["hi"])


def predictor_from_dict(doc: dict) -> PredictorSpec:
    if not isinstance(doc, dict) or "kind" not in doc:
        raise ContractViolation("predictor entries need a 'kind'")
    kw = dict(doc)
    kind = kw.pop("kind")
    if "lambda" in kw:
        kw["lam"] = kw.pop("lambda")
    if kw.get("theta") is not None:
        kw["theta"] = tuple(float(t) for t in (kw["theta"] if isinstance(kw["theta"], list) else [kw["theta"]]))
    if kind == "robust":
        kw.setdefault("tau", DEFAULT_TAU)
        kw.setdefault("v_mode", "schedule")
    try:
        return PredictorSpec(kind, **kw)
    except TypeError as exc:
        raise ContractViolation(f"bad predictor entry {doc}: {exc}") from None


def generator_from_dict(doc: dict, n: int, box: ThetaBox) -> GeneratorSpec:
    """Build a generator for horizon ``n``; heavy-tail ``n`` may be the string ``"horizon"``."""
    if not isinstance(doc, dict) or "kind" not in doc:
        raise ContractViolation("generator entries need a 'kind'")
    kind = doc["kind"]
    try:
        if kind == "gaussian":
            return GeneratorSpec.gaussian(doc["theta"], doc.get("sigma2", 1.0))
        if kind == "uniform":
            return GeneratorSpec.uniform(_box_from(doc["box"]) if "box" in doc else box)
        if kind == "point_mass":
            return GeneratorSpec.point_mass(doc["c"])
        if kind == "laplace":
            return GeneratorSpec.laplace(doc["theta"], doc.get("scale", 1.0))
        if kind == "heavy_tail":
            m = doc.get("n", "horizon")
            m = n if m == "horizon" else float(m)
            return GeneratorSpec.heavy_tail(float(doc.get("b", 1.0)), m)
    except KeyError as exc:
        raise ContractViolation(f"generator {kind!r} is missing field {exc}") from None
    raise ContractViolation(f"unknown generator kind {kind!r}")


@dataclass
class ExperimentConfig:
    """Resolved settings for one CLI invocation.

    ``raw`` keeps the merged JSON document; it is what gets hashed.
    """

    command: str
    raw: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ContractViolation(f"command must be one of {COMMANDS}")
        self._validate()

    @classmethod
    def load(cls, command: str, path=None, overrides: dict | None = None) -> "ExperimentConfig":
        if path is not None:
            try:
                doc = json.loads(Path(path).read_text())
            except OSError as exc:
                raise ContractViolation(f"cannot read config {path}: {exc.strerror}") from None
            except json.JSONDecodeError as exc:
                raise ContractViolation(f"config {path} is not valid JSON: {exc}") from None
            if not isinstance(doc, dict):
                raise ContractViolation("config document must be a JSON object")
        elif command == "sweep":
            doc = copy.deepcopy(HEADLINE_SWEEP)
        else:
            doc = {}
        if "command" in doc and doc["command"] != command:
            raise ContractViolation(f"config is for {doc['command']!r}, invoked as {command!r}")
        doc.pop("command", None)
        for k, v in (overrides or {}).items():
            if v is not None:
                doc[k] = v
        return cls(command, doc)

    # accessors

    @property
    def seed(self) -> int:
        return int(self.raw.get("seed", 0))

    @property
    def workers(self) -> int:
        return int(self.raw.get("workers", 1))

    @property
    def reps(self) -> int:
        return int(self.raw.get("reps", 1000))

    @property
    def out(self):
        return self.raw.get("out")

    @property
    def horizons(self) -> list[int]:
        return [int(n) for n in self.raw.get("horizons", [100])]

    @property
    def variants(self) -> list[str]:
        return list(self.raw.get("variants", ["pac"]))

    @property
    def box(self) -> ThetaBox:
        return _box_from(self.raw.get("box"))

    @property
    def predictors(self) -> list[PredictorSpec]:
        docs = self.raw.get("predictors")
        if docs is None:
            docs = [self.raw["predictor"]] if "predictor" in self.raw else []
        return [predictor_from_dict(d) for d in docs]

    @property
    def generator_docs(self) -> list[dict]:
        docs = self.raw.get("generators")
        if docs is None:
            docs = [self.raw["generator"]] if "generator" in self.raw else []
        return list(docs)

    @property
    def tolerances(self) -> dict:
        return dict(self.raw.get("tolerances", {}))

    @property
    def theory(self) -> dict:
        t = dict(DEFAULT_THEORY)
        t.update(self.raw.get("theory", {}))
        if "horizons" in self.raw:
            t["n_grid"] = self.horizons
        return t

    def config_hash(self) -> str:
        doc = {k: v for k, v in self.raw.items() if k not in _UNHASHED}
        doc["command"] = self.command
        blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def _validate(self):
        raw = self.raw
        seed = raw.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed <= U64_MAX:
            raise ContractViolation("seed must be an integer in [0, 2^64)")
        if not isinstance(self.workers, int) or self.workers < 1:
            raise ContractViolation("workers must be at least 1")
        if self.command in ("regret", "sweep", "theory"):
            hz = raw.get("horizons", self.theory["n_grid"] if self.command == "theory" else [100])
            if not hz or any(int(n) != n or n < 1 for n in hz):
                raise ContractViolation("horizons must be positive integers")
            if any(b <= a for a, b in zip(hz, hz[1:])):
                raise ContractViolation("horizons must be strictly increasing")
        if self.command in ("regret", "sweep"):
            if self.reps < 1:
                raise ContractViolation("reps must be at least 1")
            if not set(self.variants) <= set(VARIANTS) or not self.variants:
                raise ContractViolation(f"variants must be a non-empty subset of {VARIANTS}")
            preds, gens = self.predictors, self.generator_docs
            if not preds or not gens:
                raise ContractViolation("regret runs need at least one predictor and one generator")
            if self.command == "regret" and (len(preds) > 1 or len(gens) > 1):
                raise ContractViolation("'regret' takes one predictor and one generator; use 'sweep' for grids")
            box = self.box
            for g in gens:
                for n in self.horizons:
                    if generator_from_dict(g, n, box).dim != box.dim:
                        raise ContractViolation("generator and box dimensions differ")
        if self.command == "theory":
            t = self.theory
            if t["units"] not in ("nats", "bits"):
                raise ContractViolation("units must be 'nats' or 'bits'")
            eg = t["eps_grid"]
            if any(b <= a for a, b in zip(eg, eg[1:])) or any(not 0 < e < 1 for e in eg):
                raise ContractViolation("eps_grid must be strictly increasing inside (0, 1)")
