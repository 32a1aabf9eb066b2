"""Scenario files: schema, loading, and the classify / simulate / verify drivers.

A scenario pins down a pair ``(xi, eta)``, a killing rate and a mode.  Files
hold either one scenario object or ``{"schema_version": 1, "scenarios": [...]}``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .calculus import IntegrandFunction
from .classify import (LawVerdict, StopRule, SupportDescriptor, Tri, classify_ac_unkilled,
                       classify_continuity_killed, classify_deterministic_integrand,
                       classify_fixed_t, classify_support, unkilled_support)
from .errors import SchemaError, UnsupportedCombination
from .model import ProcessSpec
from .simulate import (RngStream, SampleBatch, SimParams, fixed_t_batch,
                       killed_functional_batch, unkilled_functional_batch)
from . import verify as V

SCHEMA_VERSION = 1

_NUM = {"oneOf": [{"type": "number"}, {"type": "string"}]}

_COMPONENT = {
    "type": "object",
    "required": ["type"],
    "properties": {
        "type": {"enum": ["atoms", "density", "stable", "atom_sequence"]},
        "atoms": {"type": "array", "minItems": 1,
                  "items": {"type": "array", "minItems": 2, "maxItems": 2,
                            "prefixItems": [_NUM, {"type": "number", "exclusiveMinimum": 0}]}},
        "interval": {"type": "array", "minItems": 2, "maxItems": 2, "items": _NUM},
        "c": {"type": "number", "exclusiveMinimum": 0},
        "family": {"enum": ["constant", "power"]},
        "p": {"type": "number"},
        "alpha": {"type": "number"},
        "c_plus": {"type": "number", "minimum": 0},
        "c_minus": {"type": "number", "minimum": 0},
        "cutoff": _NUM,
        "base": {"type": "number"},
        "growth": {"type": "number"},
        "scale": {"type": "number"},
        "weight": {"type": "number"},
    },
}

_PROCESS = {
    "type": "object",
    "properties": {
        "sigma2": {"type": "number", "minimum": 0},
        "gamma": {"type": "number"},
        "drift": {"type": "number"},
        "measure": {"type": "array", "items": _COMPONENT},
        "flags": {"type": "array", "items": {"enum": ["ACP_holds", "ACP_fails", "potential_measure_singular",
                                                      "unkilled_integral_converges"]}},
    },
    "additionalProperties": False,
}

_MODE = {
    "oneOf": [
        {"enum": ["killed", "unkilled"]},
        {"type": "object", "required": ["kind"],
         "properties": {
             "kind": {"enum": ["killed", "unkilled", "fixed_t", "deterministic_integrand"]},
             "t": {"type": "number", "exclusiveMinimum": 0},
             "f": {"type": "object"},
             "stop": {"type": "object"},
         }},
    ]
}

SCENARIO_SCHEMA = {
    "type": "object",
    "required": ["id", "eta"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "id": {"type": "string", "minLength": 1},
        "description": {"type": "string"},
        "xi": _PROCESS,
        "eta": _PROCESS,
        "q": {"type": "number", "minimum": 0},
        "mode": _MODE,
        "sim": {"type": "object"},
        "verify": {"type": "object"},
        "expected": {"type": "object"},
    },
    "additionalProperties": False,
}

FILE_SCHEMA = {
    "type": "object",
    "required": ["schema_version"],
    "properties": {"schema_version": {"const": SCHEMA_VERSION}},
    "oneOf": [
        {"required": ["scenarios"],
         "properties": {"scenarios": {"type": "array", "minItems": 1, "items": SCENARIO_SCHEMA}}},
        {"required": ["id"]},
    ],
}

_SCENARIO_VALIDATOR = jsonschema.Draft202012Validator(SCENARIO_SCHEMA)
_FILE_VALIDATOR = jsonschema.Draft202012Validator(FILE_SCHEMA)


@dataclass
class Scenario:
    id: str
    xi: ProcessSpec | None
    eta: ProcessSpec
    q: float = 1.0
    mode: str = "killed"
    t: float | None = None
    f: IntegrandFunction | None = None
    stop: StopRule | None = None
    sim: dict = field(default_factory=dict)
    verify: dict = field(default_factory=dict)
    expected: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict, repr=False)

    def sim_params(self, overrides: dict | None = None) -> SimParams:
        kw = {**self.sim, **(overrides or {})}
        try:
            return SimParams(**kw)
        except TypeError as e:
            raise SchemaError(str(e), path=f"{self.id}/sim") from e


def _error_path(err: jsonschema.ValidationError) -> str:
    return "/" + "/".join(str(p) for p in err.absolute_path)


def parse_scenario(d: dict, path: str = "") -> Scenario:
    """Validate one scenario object and build a :class:`Scenario`."""
    try:
        _SCENARIO_VALIDATOR.validate(d)
    except jsonschema.ValidationError as e:
        raise SchemaError(e.message, path=path + _error_path(e)) from None
    mode = d.get("mode", "killed")
    mode = {"kind": mode} if isinstance(mode, str) else dict(mode)
    kind = mode["kind"]
    q = float(d.get("q", 0.0 if kind == "unkilled" else 1.0))
    try:
        xi = ProcessSpec.from_dict(d["xi"]) if "xi" in d else None
        eta = ProcessSpec.from_dict(d["eta"])
    except (ValueError, KeyError, TypeError) as e:
        raise SchemaError(f"invalid process: {e}", path=path) from None
    sc = Scenario(d["id"], xi, eta, q, kind, sim=d.get("sim", {}), verify=d.get("verify", {}),
                  expected=d.get("expected", {}), raw=d)
    if kind in ("killed", "unkilled", "fixed_t") and xi is None:
        raise SchemaError("xi is required for this mode", path=path + "/xi")
    if kind == "killed" and not q > 0:
        raise SchemaError("killed mode needs q > 0", path=path + "/q")
    if kind == "unkilled":
        if q != 0:
            raise SchemaError("unkilled mode needs q = 0", path=path + "/q")
        if not (xi.has("unkilled_integral_converges") or eta.has("unkilled_integral_converges")):
            raise SchemaError("q = 0 requires the unkilled_integral_converges flag", path=path + "/xi/flags")
    if kind == "fixed_t":
        if "t" not in mode:
            raise SchemaError("fixed_t mode needs t", path=path + "/mode/t")
        sc.t = float(mode["t"])
    if kind == "deterministic_integrand":
        if "f" not in mode or "stop" not in mode:
            raise SchemaError("deterministic_integrand mode needs f and stop", path=path + "/mode")
        try:
            sc.f = IntegrandFunction.from_dict(mode["f"])
            sc.stop = StopRule(**mode["stop"])
        except (ValueError, KeyError, TypeError) as e:
            raise SchemaError(str(e), path=path + "/mode") from None
    return sc


def parse_document(doc) -> list[Scenario]:
    if not isinstance(doc, dict):
        raise SchemaError("scenario file must hold a JSON object", path="/")
    try:
        _FILE_VALIDATOR.validate(doc)
    except jsonschema.ValidationError as e:
        # re-validate the offending scenario to get a precise path
        if isinstance(doc.get("scenarios"), list):
            for i, s in enumerate(doc["scenarios"]):
                if isinstance(s, dict):
                    parse_scenario(s, f"/scenarios/{i}")
        elif "id" in doc:
            parse_scenario({k: v for k, v in doc.items() if k != "schema_version"}, "")
        raise SchemaError(e.message, path=_error_path(e)) from None
    if "scenarios" in doc:
        out = [parse_scenario(s, f"/scenarios/{i}") for i, s in enumerate(doc["scenarios"])]
    else:
        out = [parse_scenario(doc)]
    ids = [s.id for s in out]
    if len(set(ids)) != len(ids):
        raise SchemaError("duplicate scenario ids", path="/scenarios")
    return out


def load_scenarios(path) -> list[Scenario]:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise SchemaError(f"not valid JSON: {e}", path="/") from None
    return parse_document(doc)


def golden_path():
    return resources.files("levyexp") / "data" / "golden.json"


def load_golden() -> list[Scenario]:
    return parse_document(json.loads(golden_path().read_text()))


# ---------------------------------------------------------------------------
# classification


@dataclass
class Classification:
    scenario_id: str
    support: SupportDescriptor | None
    law: LawVerdict

    def to_dict(self) -> dict:
        return {"scenario_id": self.scenario_id,
                "support": None if self.support is None else self.support.to_dict(),
                "law": self.law.to_dict()}

    def clauses(self) -> list[str]:
        trail = list(self.law.trail)
        s = self.support
        while s is not None:
            trail += list(s.trail)
            s = s.refinement
        return [t.clause for t in trail]


def classify_scenario(sc: Scenario) -> Classification:
    if sc.mode == "killed":
        return Classification(sc.id, classify_support(sc.xi, sc.eta, sc.q),
                              classify_continuity_killed(sc.xi, sc.eta, sc.q))
    if sc.mode == "unkilled":
        return Classification(sc.id, unkilled_support(sc.xi, sc.eta), classify_ac_unkilled(sc.xi, sc.eta))
    if sc.mode == "fixed_t":
        return Classification(sc.id, None, classify_fixed_t(sc.xi, sc.eta, sc.t))
    return Classification(sc.id, None, classify_deterministic_integrand(sc.f, sc.eta, sc.stop))


def compare_expected(sc: Scenario, cl: Classification) -> list[str]:
    """Mismatches between a classification and the scenario's ``expected`` block."""
    exp = sc.expected
    problems = []
    if "support" in exp:
        got = None if cl.support is None else cl.support.to_dict()
        want = exp["support"]
        if got is None:
            problems.append("support: none produced")
        else:
            if got["shape"] != want["shape"]:
                problems.append(f"support shape {got['shape']} != {want['shape']}")
            elif "params" in want and not _params_equal(got["params"], want["params"]):
                problems.append(f"support params {got['params']} != {want['params']}")
            if "relation" in want and got["relation"] != want["relation"]:
                problems.append(f"support relation {got['relation']} != {want['relation']}")
            if "refinement" in want:
                ref = got.get("refinement")
                rw = want["refinement"]
                if ref is None or ref["shape"] != rw["shape"] or (
                        "params" in rw and not _params_equal(ref["params"], rw["params"])):
                    problems.append(f"support refinement {ref and (ref['shape'], ref['params'])} != {rw}")
    if "law" in exp:
        flags = cl.law.flags()
        for k, v in exp["law"].items():
            if flags.get(k) != v:
                problems.append(f"{k} {flags.get(k)} != {v}")
    if "clause" in exp:
        wanted = exp["clause"] if isinstance(exp["clause"], list) else [exp["clause"]]
        have = cl.clauses()
        for c in wanted:
            if c not in have:
                problems.append(f"clause {c} not in trail {have}")
    return problems


def _params_equal(a, b, tol: float = 1e-12) -> bool:
    if isinstance(a, dict) and isinstance(b, dict):
        return a.keys() == b.keys() and all(_params_equal(a[k], b[k], tol) for k in a)
    if isinstance(a, list) and isinstance(b, list):
        return len(a) == len(b) and all(_params_equal(x, y, tol) for x, y in zip(a, b))
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        return math.isclose(a, b, rel_tol=tol, abs_tol=tol)
    return a == b


# ---------------------------------------------------------------------------
# simulation


def simulate_scenario(sc: Scenario, n: int, seed: int, params: SimParams | None = None) -> SampleBatch:
    params = params or sc.sim_params()
    if sc.mode == "killed":
        return killed_functional_batch(sc.xi, sc.eta, sc.q, n, seed, params, sc.id)
    if sc.mode == "unkilled":
        return unkilled_functional_batch(sc.xi, sc.eta, n, seed, params, sc.id)
    if sc.mode == "fixed_t":
        return fixed_t_batch(sc.xi, sc.eta, sc.t, n, seed, params, sc.id)
    raise UnsupportedCombination("deterministic-integrand scenarios are classified only, not simulated")


def batch_to_csv(batch: SampleBatch) -> str:
    """Metadata rows prefixed ``#`` then one value per line (shortest round-trip repr)."""
    meta = {"scenario": batch.scenario_id, "seed": batch.seed, "n": len(batch), "kind": batch.kind,
            "params": json.dumps(batch.params, sort_keys=True),
            "extra": json.dumps(batch.extra, sort_keys=True)}
    lines = [f"# {k}: {v}" for k, v in meta.items()]
    lines.append("value")
    lines += [repr(float(x)) for x in batch.values]
    return "\n".join(lines) + "\n"


def read_csv_values(text: str) -> np.ndarray:
    rows = [ln for ln in text.splitlines() if ln and not ln.startswith("#") and ln != "value"]
    return np.array([float(r) for r in rows])


# ---------------------------------------------------------------------------
# verification


def _law_reports(sc: Scenario, cl: Classification, batch: SampleBatch, vopts: dict) -> list[V.EmpiricalReport]:
    out = []
    law = cl.law
    n = len(batch)
    if "atom_expected" in vopts:
        out.append(V.atom_at_zero_test(batch, vopts.get("atom_eps", 1e-12), vopts["atom_expected"]))
    elif law.atom_at_zero is not Tri.UNKNOWN:
        rep = V.atom_at_zero_test(batch, vopts.get("atom_eps", 1e-12))
        if law.atom_at_zero is Tri.YES:
            ok = rep.statistic > rep.diagnostics["radius"]
        else:
            ok = rep.statistic <= rep.diagnostics["radius"]
        rep.status = V.PASS if ok else V.FAIL
        rep.test = f"atom_at_zero_{law.atom_at_zero.value.lower()}"
        out.append(rep)
    if law.continuous is not Tri.UNKNOWN:
        w = vopts.get("atom_window", 1e-9 * max(1.0, float(np.max(np.abs(batch.values)))))
        floor = vopts.get("atom_floor", 1e-3)
        rep = V.max_atom_screen(batch, w, threshold=floor)
        if law.continuous is Tri.NO:
            rep.status = V.FAIL if rep.passed else V.PASS  # an atom must show up
            rep.test = "max_atom_present"
        else:
            rep.test = "max_atom_absent"
        rep.diagnostics["n"] = n
        out.append(rep)
    return out


def verify_scenario(sc: Scenario, n: int, seeds, params: SimParams | None = None,
                    cl: Classification | None = None) -> dict:
    """Classify, simulate per seed, run every applicable test and aggregate across seeds.

    Seed-level failures are tolerated up to ``verify.max_failures`` (default 1)
    per test; tests marked ``expect: fail`` (negative controls) must fail on every seed.
    """
    params = params or sc.sim_params()
    cl = cl or classify_scenario(sc)
    vopts = sc.verify
    per_test: dict[str, list[V.EmpiricalReport]] = {}
    expect_fail: set[str] = set()
    for seed in seeds:
        batch = simulate_scenario(sc, n, seed, params)
        reps = []
        if cl.support is not None and vopts.get("support", True):
            eps = vopts.get("support_eps", 1e-6 if _exact(sc, params) else 1e-3)
            rep = V.support_coverage_test(batch, cl.support, eps=eps, grid=vopts.get("grid"),
                                          decisive=None if cl.law.continuous is Tri.YES else False)
            reps.append(rep)
        if "lattice" in vopts:
            lt = vopts["lattice"]
            reps.append(V.lattice_test(batch, lt.get("eps", 1e-9), range(lt.get("hit_up_to", 10) + 1)))
        if "range" in vopts:
            rg = vopts["range"]
            v = batch.values
            ok = (float(v.max()) >= rg.get("max_at_least", -math.inf)
                  and float(v.min()) <= rg.get("min_at_most", math.inf))
            reps.append(V.EmpiricalReport(sc.id, "range", float(v.max()), rg.get("max_at_least", math.nan),
                                          V.PASS if ok else V.FAIL, {"min": float(v.min())}))
        if "ks_exponential" in vopts:
            rate = float(vopts["ks_exponential"])
            reps.append(V.ks_one_sample(batch, lambda x: -np.expm1(-rate * np.maximum(x, 0)),
                                        test="ks_exponential"))
        if sc.mode == "killed":
            for st in vopts.get("stationarity", []):
                name, rep = _gou_test(sc, st, n, seed, params, batch.values)
                reps.append(rep)
                if st.get("expect", "pass") == "fail":
                    expect_fail.add(name)
        if vopts.get("law", True):
            reps += _law_reports(sc, cl, batch, vopts)
        for r in reps:
            r.scenario_id = sc.id
            r.diagnostics["seed"] = seed
            per_test.setdefault(r.test, []).append(r)
    summary = []
    for name, reps in per_test.items():
        if name in expect_fail:
            fails = sum(r.status == V.FAIL for r in reps)
            agg = V.EmpiricalReport(sc.id, name, float(fails), float(len(reps)),
                                    V.PASS if fails == len(reps) else V.FAIL,
                                    {"seeds": len(reps), "expect": "fail"})
        else:
            agg = V.aggregate(reps, vopts.get("max_failures", 1), name)
        summary.append(agg)
    return {"scenario_id": sc.id, "classification": cl.to_dict(), "n": n, "seeds": list(seeds),
            "params": params.provenance(), "tests": [a.to_dict() for a in summary],
            "seed_reports": [r.to_dict() for reps in per_test.values() for r in reps],
            "passed": all(a.passed for a in summary)}


def _gou_test(sc, st: dict, n: int, seed: int, params: SimParams, z: np.ndarray):
    t = float(st["t"])
    kind = st.get("kind", "stationarity")
    x0 = None
    if st.get("input") == "exponential":
        x0 = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(9,)))).exponential(size=n)
    elif st.get("input") == "constant":
        x0 = np.full(n, float(st.get("value", 1e3)))
    if kind == "fixed_point":
        rep = V.fixed_point_test(sc.xi, sc.eta, sc.q, t, n, seed, params, z=x0, left=z)
    else:
        rep = V.stationarity_test(sc.xi, sc.eta, sc.q, t, n, seed, params, x0=z if x0 is None else x0)
    name = f"{kind}_t{t:g}" + (f"_{st['input']}" if "input" in st else "")
    rep.test = name
    return name, rep


def _exact(sc: Scenario, params: SimParams) -> bool:
    return all(p is None or p.sim_recipe(params.delta, params.policy).exact for p in (sc.xi, sc.eta))
