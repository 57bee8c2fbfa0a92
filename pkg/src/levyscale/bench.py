"""Benchmark harness for the published accuracy tables.

Every suite evaluates ``W`` (or ``W'``) of one model on the grid
``x_i = i/20, i = 1..100`` with several backends and compares the result to
a stored reference.  References live in versioned JSON fixtures under
``levyscale/data`` and are produced by ``scripts/make_references.py`` with
methods that never share code paths with the backend under test.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from importlib import resources

import mpmath
import numpy as np

from .errors import ConfigError
from . import inversion
from .inversion import FilonConfig, MpConfig, TransformFn, MP_METHODS
from .model import LevyModel, Drift, model_from_dict, model_to_dict
from .scale import eval_scale, canonical_backend

FIXTURE_VERSION = 1
SUITES = ("table1", "table2", "table3", "table4", "table5", "table6")
GRID = np.arange(1, 101) / 20.0
Q = 0.5


# --------------------------------------------------------------------------
# models
# --------------------------------------------------------------------------

def theta_model(sigma: float = 0.25) -> LevyModel:
    comps = [{"type": "drift", "mu": 2.0},
             {"type": "theta", "c": 1.0, "alpha": 1.0, "beta": 0.5, "lambda": 1.5}]
    if sigma:
        comps.insert(0, {"type": "gaussian", "sigma": sigma})
    return model_from_dict({"components": comps, "label": f"theta sigma={sigma}"})


def rational_model() -> LevyModel:
    terms = [{"a": 1.0, "rho": 1.0, "m": 1},
             {"a": 0.5, "rho": {"re": 1.0, "im": -4.0}, "m": 1},
             {"a": 0.5, "rho": {"re": 1.0, "im": 4.0}, "m": 1}]
    return model_from_dict({"components": [{"type": "gaussian", "sigma": 0.25},
                                           {"type": "drift", "mu": 2.0},
                                           {"type": "rational", "terms": terms}],
                            "label": "rational jumps"})


@dataclass(frozen=True)
class ParamSet:
    """One mixture of drift, Brownian motion, tempered stable, stable,
    atom and shifted exponential parts.  Zero ``c`` removes a part."""

    name: str
    sigma: float = 0.0
    mu: float = 2.0
    c1: float = 0.0
    lam1: float = 0.0
    alpha1: float = 0.0
    c2: float = 0.0
    alpha2: float = 0.0
    c3: float = 0.0
    a3: float = 0.0
    c4: float = 0.0
    a4: float = 0.0

    def model(self) -> LevyModel:
        comps = [{"type": "drift", "mu": self.mu}]
        if self.sigma:
            comps.append({"type": "gaussian", "sigma": self.sigma})
        if self.c1:
            comps.append({"type": "tempered_stable", "c": self.c1, "lambda": self.lam1,
                          "alpha": self.alpha1})
        if self.c2:
            comps.append({"type": "stable", "c": self.c2, "alpha": self.alpha2})
        if self.c3:
            comps.append({"type": "atom", "c": self.c3, "a": self.a3})
        if self.c4:
            comps.append({"type": "shifted_exponential", "c": self.c4, "a": self.a4})
        return model_from_dict({"components": comps, "label": self.name})


PARAM_SETS = {
    1: ParamSet("Set 1", c1=1.0, lam1=1.0, alpha1=0.5, c2=1.0, alpha2=1.5),
    2: ParamSet("Set 2", c1=0.05, lam1=1.0, alpha1=-5.0, c2=0.25, alpha2=1.5),
    3: ParamSet("Set 3", sigma=0.25, c1=1.0, lam1=1.0, alpha1=0.5, c4=1.0, a4=1.0),
    4: ParamSet("Set 4", c1=1.0, lam1=1.0, alpha1=0.5, c3=1.0, a3=1.0),
}


# --------------------------------------------------------------------------
# cases
# --------------------------------------------------------------------------

def make_config(backend: str, params: dict | None):
    """Backend config from a plain dict (the form stored in reports)."""
    backend = canonical_backend(backend)
    params = dict(params or {})
    params.pop("method", None)
    if backend == "filon":
        return FilonConfig(**params)
    if backend in MP_METHODS:
        return MpConfig(**params)
    return params


@dataclass
class BenchCase:
    name: str
    model: dict
    q: float
    quantity: str
    backend: str
    cfg: dict
    ceiling: float | None = None      # max rel error must not exceed this
    floor: float | None = None        # max rel error must be at least this
    time_ceiling: float | None = None
    exclude: tuple = ()               # abscissae left out of the error
    x: tuple = tuple(GRID)

    def config(self):
        return make_config(self.backend, self.cfg)


@dataclass
class CaseResult:
    name: str
    backend: str
    config: dict
    max_rel_error: float
    argmax_x: float
    max_rel_error_all: float
    argmax_x_all: float
    wall_time: float
    time_ceiling: float | None
    ceiling: float | None
    floor: float | None
    passed: bool
    slow: bool
    errors: list = field(default_factory=list)
    message: str = ""


@dataclass
class Suite:
    name: str
    title: str
    reference: dict
    cases: list
    assertions: list = field(default_factory=list)


def _mp(name, backend, M, digits, **kw):
    return dict(name=name, backend=backend, cfg={"M": M, "digits": digits}, **kw)


# Wall-time ceilings are twenty times the published timings.
def _suite_cases(suite: str) -> tuple[list, list]:
    if suite == "table1":
        return [
            dict(name="Filon b=1e7", backend="filon",
                 cfg={"b": 1e7, "N": 10_000, "n": 10, "p": 5.0}, ceiling=1e-10,
                 time_ceiling=3.6),
            _mp("Gaver-Stehfest M=20", "gaver_stehfest", 20, 44, ceiling=1e-9, time_ceiling=8.0),
            _mp("Euler M=20", "euler", 20, 32, ceiling=1e-11, time_ceiling=1.0),
            _mp("Talbot M=20", "talbot", 20, 32, ceiling=1e-11, time_ceiling=0.5),
        ], []
    if suite == "table2":
        return [
            dict(name="Filon b=1e9", backend="filon",
                 cfg={"b": 1e9, "N": 100_000, "n": 10, "p": 5.0, "Nx": 100_000},
                 floor=1e-6, time_ceiling=58.0),
            _mp("Gaver-Stehfest M=20", "gaver_stehfest", 20, 44, ceiling=4.6e-10, time_ceiling=9.0),
            _mp("Euler M=20", "euler", 20, 32, ceiling=1e-11, time_ceiling=1.0),
            _mp("Talbot M=20", "talbot", 20, 32, ceiling=1.5e-10, time_ceiling=0.46),
        ], []
    if suite == "table3":
        return [
            dict(name="Filon b=1e7", backend="filon",
                 cfg={"b": 1e7, "N": 10_000, "n": 10, "p": 5.0}, ceiling=1.2e-9,
                 time_ceiling=2.8),
            _mp("Gaver-Stehfest M=20", "gaver_stehfest", 20, 44, ceiling=1.2e-3, time_ceiling=1.2),
            _mp("Euler M=20", "euler", 20, 32, ceiling=1e-11, time_ceiling=0.96),
            _mp("Talbot M=20", "talbot", 20, 32, time_ceiling=0.44),
            _mp("Talbot M=80", "talbot", 80, 80, ceiling=1e-10, time_ceiling=12.0),
        ], [("greater", "Talbot M=20", "Euler M=20")]
    if suite in ("table4", "table5"):
        filon_t = 9.2 if suite == "table4" else 9.4
        return [
            dict(name="Filon b=1e7", backend="filon",
                 cfg={"b": 1e7, "N": 10_000, "n": 10, "p": 5.0}, ceiling=1e-9,
                 time_ceiling=filon_t),
            _mp("Gaver-Stehfest M=20", "gaver_stehfest", 20, 44, ceiling=1e-9, time_ceiling=22.0),
            _mp("Euler M=20", "euler", 20, 32, ceiling=1e-9, time_ceiling=1.0),
            _mp("Talbot M=20", "talbot", 20, 32, ceiling=1e-9, time_ceiling=0.48),
        ], []
    if suite == "table6":
        times = {("gaver_stehfest", 20): 22.0, ("euler", 20): 1.0, ("talbot", 20): 0.48,
                 ("gaver_stehfest", 40): 90.0, ("euler", 40): 92.0, ("talbot", 40): 44.0,
                 ("gaver_stehfest", 80): 440.0, ("euler", 80): 360.0, ("talbot", 80): 174.0}
        cases = [dict(name="Filon b=1e7 N=1e5", backend="filon",
                      cfg={"b": 1e7, "N": 100_000, "n": 10, "p": 5.0, "Nx": 100_000},
                      ceiling=1e-6, exclude=(1.0,), time_ceiling=102.0)]
        names = {"gaver_stehfest": "Gaver-Stehfest", "euler": "Euler", "talbot": "Talbot"}
        for M in (20, 40, 80):
            for b in ("gaver_stehfest", "euler", "talbot"):
                digits = math.ceil(2.2 * M) if b == "gaver_stehfest" else max(M, 32)
                cases.append(_mp(f"{names[b]} M={M}", b, M, digits, floor=1e-6,
                                 time_ceiling=times[(b, M)]))
        return cases, [("argmax_at", "Filon b=1e7 N=1e5", 1.0)]
    raise ConfigError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")


_SUITE_MODELS = {
    "table1": (lambda: theta_model(0.25), "W", "Computing W for the theta-process, sigma=0.25"),
    "table2": (lambda: theta_model(0.0), "Wprime", "Computing W' for the theta-process, sigma=0"),
    "table3": (rational_model, "W", "Computing W for the process with rational jumps"),
    "table4": (PARAM_SETS[1].model, "W", "Computing W for parameter Set 1"),
    "table5": (PARAM_SETS[2].model, "W", "Computing W for parameter Set 2"),
    "table6": (PARAM_SETS[4].model, "W", "Computing W for parameter Set 4"),
}


# --------------------------------------------------------------------------
# references
# --------------------------------------------------------------------------

def atom_expansion_W(model: LevyModel, q: float, x, *, M: int = 60, digits: int = 90,
                     method: str = "euler") -> np.ndarray:
    """``W`` for a model with a single atom in its Levy measure.

    Writing ``psi - q = D - c e^{-a z}`` with ``D`` smooth gives
    ``1/(psi - q) = sum_k c^k e^{-k a z} / D^{k+1}``, so
    ``W(x) = sum_k c^k w_{k+1}(x - k a)`` where ``w_m`` inverts ``1/D^m``.
    Every ``w_m`` is smooth, which is what makes this a good reference at
    the kinks ``x = k a`` where direct inversion stagnates.
    """
    atoms = [c for c in model.components if c.kind == "atom"]
    if len(atoms) != 1:
        raise ConfigError("atom expansion needs exactly one atom component")
    atom = atoms[0]
    rest = LevyModel(tuple(c for c in model.components if c is not atom) + (Drift(0.0),),
                     model.label)
    invert = MP_METHODS[canonical_backend(method)]
    cfg = MpConfig(M, digits)
    out = []
    for xv in np.atleast_1d(np.asarray(x, dtype=float)):
        total = mpmath.mpf(0)
        k = 0
        while xv - atom.a * k > 0:
            def g(z, K, k=k):
                d = rest.psi(z, K) - K.real(atom.c) - K.real(q)
                return 1 / d ** (k + 1)
            # psi of the atom part is c(e^{-az} - 1); the -c is folded into D
            total += mpmath.mpf(-atom.c) ** k * invert(TransformFn(g, 0.0, True, True),
                                                       xv - atom.a * k, cfg, raw=True)
            k += 1
        out.append(float(total))
    return np.array(out)


def compute_reference(suite: str) -> dict:
    """Reference values for ``suite`` as a fixture dict."""
    build, quantity, title = _SUITE_MODELS[suite]
    model = build()
    x = GRID
    extra = {}
    if suite == "table1":
        source = {"method": "meromorphic", "J": 1000, "digits": 200}
        ref = eval_scale(model, Q, x, quantity, "meromorphic", {"J": 1000, "digits": 200})[quantity]
    elif suite == "table2":
        source = {"method": "meromorphic", "J": 1000, "digits": 60}
        ref = eval_scale(model, Q, x, quantity, "meromorphic", {"J": 1000, "digits": 60})[quantity]
    elif suite == "table3":
        source = {"method": "rational"}
        ref = eval_scale(model, Q, x, quantity, "rational")[quantity]
    elif suite in ("table4", "table5"):
        fc = {"b": 1e10, "n": 200, "p": 5.0, "N": 50_000}
        source = {"method": "filon-highres", **fc}
        ref = eval_scale(model, Q, x, quantity, "filon", FilonConfig(**fc))[quantity]
        check = eval_scale(model, Q, x, quantity, "euler", MpConfig(60, 90))[quantity]
        extra["crosscheck"] = {"method": "euler", "M": 60, "digits": 90,
                               "max_rel_diff": float(np.max(np.abs(check / ref - 1)))}
    elif suite == "table6":
        source = {"method": "atom-expansion", "inner": "euler", "M": 60, "digits": 90}
        ref = atom_expansion_W(model, Q, x, M=60, digits=90)
        check = atom_expansion_W(model, Q, x, M=80, digits=80, method="talbot")
        extra["crosscheck"] = {"method": "atom-expansion", "inner": "talbot", "M": 80,
                               "digits": 80,
                               "max_rel_diff": float(np.max(np.abs(check / ref - 1)))}
    else:
        raise ConfigError(f"unknown suite {suite!r}")
    return {"version": FIXTURE_VERSION, "suite": suite, "title": title,
            "model": model_to_dict(model), "q": Q, "quantity": quantity,
            "x": [float(v) for v in x], "reference": [float(v) for v in ref],
            "reference_source": source, **extra}


def load_reference(suite: str) -> dict:
    if suite not in SUITES:
        raise ConfigError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    text = resources.files("levyscale").joinpath("data", f"{suite}.json").read_text()
    data = json.loads(text)
    if data.get("version") != FIXTURE_VERSION:
        raise ConfigError(f"fixture {suite}.json has version {data.get('version')}, "
                          f"expected {FIXTURE_VERSION}")
    return data


def build_suite(suite: str) -> Suite:
    ref = load_reference(suite)
    specs, assertions = _suite_cases(suite)
    cases = [BenchCase(model=ref["model"], q=ref["q"], quantity=ref["quantity"],
                       x=tuple(ref["x"]), **s) for s in specs]
    return Suite(suite, ref.get("title", suite), ref, cases, assertions)


# --------------------------------------------------------------------------
# running
# --------------------------------------------------------------------------

def _max_err(err: np.ndarray, x: np.ndarray, mask: np.ndarray) -> tuple[float, float]:
    if not np.any(mask):
        return float("nan"), float("nan")
    e = np.where(mask, err, -np.inf)
    i = int(np.argmax(e))
    return float(err[i]), float(x[i])


def _warm_coefficients(backend, cfg):
    # Coefficient tables are a one-off precomputation shared by all x; build
    # them before the clock starts so wall times measure the inversion itself.
    if not isinstance(cfg, inversion.MpConfig):
        return
    table = {"gaver_stehfest": inversion.gs_coefficients, "euler": inversion.euler_coefficients,
             "talbot": inversion.talbot_nodes}.get(backend)
    if table is not None:
        table(cfg.M, cfg.digits_for(canonical_backend(backend)))


def run_case(case: BenchCase, reference) -> CaseResult:
    model = model_from_dict(case.model)
    x = np.asarray(case.x, dtype=float)
    ref = np.asarray(reference, dtype=float)
    cfg = case.config()
    _warm_coefficients(case.backend, cfg)
    t0 = time.perf_counter()
    grid = eval_scale(model, case.q, x, case.quantity, case.backend, cfg)
    wall = time.perf_counter() - t0
    val = grid[case.quantity]
    err = np.abs(val - ref) / np.abs(ref)
    err = np.where(np.isfinite(err), err, np.inf)
    keep = ~np.isin(x, np.asarray(case.exclude, dtype=float))
    e_in, x_in = _max_err(err, x, keep)
    e_all, x_all = _max_err(err, x, np.ones_like(keep))
    ok = True
    if case.ceiling is not None and not e_in <= case.ceiling:
        ok = False
    if case.floor is not None and not e_in >= case.floor:
        ok = False
    slow = case.time_ceiling is not None and wall > case.time_ceiling
    return CaseResult(case.name, case.backend, grid.config, e_in, x_in, e_all, x_all, wall,
                      case.time_ceiling, case.ceiling, case.floor, ok, slow,
                      [float(v) for v in err])


def _check_assertion(a, by_name) -> tuple[bool, str]:
    kind = a[0]
    if kind == "greater":
        lhs, rhs = by_name[a[1]], by_name[a[2]]
        ok = lhs.max_rel_error > rhs.max_rel_error
        return ok, (f"error({a[1]}) = {lhs.max_rel_error:.2e} > "
                    f"error({a[2]}) = {rhs.max_rel_error:.2e}")
    if kind == "argmax_at":
        r = by_name[a[1]]
        ok = r.argmax_x_all == a[2]
        return ok, f"error of {a[1]} is largest at x = {r.argmax_x_all:g} (expected {a[2]:g})"
    raise ConfigError(f"unknown assertion {kind!r}")


def _run_one(args):
    case, ref = args
    return run_case(case, ref)


def run_suite(suite: str, *, jobs: int = 1, only=None) -> dict:
    """Run every case of ``suite`` and return the report dict.

    ``only`` restricts the run to the named cases (assertions that mention a
    skipped case are skipped too).  ``jobs > 1`` spreads the cases over a
    process pool.
    """
    s = build_suite(suite)
    cases = [c for c in s.cases if only is None or c.name in only]
    ref = s.reference["reference"]
    if jobs > 1 and len(cases) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, [(c, ref) for c in cases]))
    else:
        results = [run_case(c, ref) for c in cases]
    by_name = {r.name: r for r in results}
    checks = []
    for a in s.assertions:
        if all(n in by_name for n in a[1:] if isinstance(n, str)):
            ok, msg = _check_assertion(a, by_name)
            checks.append({"assertion": list(a), "passed": ok, "message": msg})
    passed = all(r.passed for r in results) and all(c["passed"] for c in checks)
    return {
        "suite": suite,
        "title": s.title,
        "fixture_version": s.reference["version"],
        "model": s.reference["model"],
        "q": s.reference["q"],
        "quantity": s.reference["quantity"],
        "x": s.reference["x"],
        "reference_source": s.reference["reference_source"],
        "cases": [asdict(r) for r in results],
        "assertions": checks,
        "passed": passed,
    }


def format_table(report: dict) -> str:
    """Human readable summary of a suite report."""
    lines = [f"{report['suite']}: {report['title']} (q={report['q']:g}, "
             f"reference: {report['reference_source']['method']})"]
    head = f"{'case':<22} {'max rel err':>12} {'at x':>6} {'bound':>14} {'time s':>8} {'limit':>7}  status"
    lines += [head, "-" * len(head)]
    for c in report["cases"]:
        if c["ceiling"] is not None:
            bound = f"<= {c['ceiling']:.1e}"
        elif c["floor"] is not None:
            bound = f">= {c['floor']:.1e}"
        else:
            bound = "-"
        limit = f"{c['time_ceiling']:.2f}" if c["time_ceiling"] is not None else "-"
        status = "PASS" if c["passed"] else "FAIL"
        if c["slow"]:
            status += " SLOW"
        lines.append(f"{c['name']:<22} {c['max_rel_error']:>12.2e} {c['argmax_x']:>6.2f} "
                     f"{bound:>14} {c['wall_time']:>8.2f} {limit:>7}  {status}")
    for a in report["assertions"]:
        lines.append(f"check: {a['message']}  {'PASS' if a['passed'] else 'FAIL'}")
    lines.append(f"suite {'PASS' if report['passed'] else 'FAIL'}")
    return "\n".join(lines)
