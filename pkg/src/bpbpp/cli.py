"""Batch front end: JSON problem files in, certificates and reports out.

Exit codes: 0 certified / none-found, 1 malformed input, 2 rejected
precondition, 3 heuristic-only result.  Reports are deterministic for a
fixed problem file (including seed) up to the timing fields.
"""
from __future__ import annotations

import argparse
import concurrent.futures
import csv
import io
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field

import numpy as np

TOOL_VERSION = "0.1.0"
SCHEMA_VERSION = 1

TASKS = ["correct-functional", "correct-operator", "correct-bilinear",
         "correct-ck-bilinear", "modulus", "probe-eta", "counterexample",
         "suite"]

SPACE_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["lp", "weighted-lp", "polyhedral", "gauge", "direct-sum"]},
        "p": {"anyOf": [{"type": "number"}, {"const": "inf"}]},
        "dim": {"type": "integer", "minimum": 1},
        "generators": {"type": "array"},
        "weights": {"type": "array"},
        "children": {"type": "array"},
        "sumKind": {"enum": ["l1", "linf"]},
        "bodyParams": {"type": "object"},
    },
    "required": ["kind"],
}

PROBLEM_SCHEMA = {
    "type": "object",
    "properties": {
        "version": {"const": SCHEMA_VERSION},
        "task": {"enum": TASKS},
        "space": SPACE_SCHEMA,
        "space2": SPACE_SCHEMA,
        "codomain": {"anyOf": [SPACE_SCHEMA, {"const": "scalar"}]},
        "functional": {"type": "array"},
        "operator": {
            "type": "object",
            "properties": {"matrix": {"type": "array"}},
            "required": ["matrix"],
        },
        "bilinear": {
            "type": "object",
            "properties": {"tensor": {"type": "array"}},
            "required": ["tensor"],
        },
        "field": {
            "type": "object",
            "properties": {"points": {"type": "array"}, "forms": {"type": "array"}},
            "required": ["points", "forms"],
        },
        "point": {"type": "array"},
        "point2": {"type": "array"},
        "epsilon": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 2},
        "eta": {"type": ["number", "null"]},
        "beta": {
            "type": "object",
            "properties": {"rho": {"type": "number"},
                           "points": {"type": "array"},
                           "functionals": {"type": "array"}},
        },
        "modulus": {
            "type": "object",
            "properties": {"which": {"enum": ["convexity", "smoothness"]},
                           "argument": {"type": "number"}},
            "required": ["which", "argument"],
        },
        "suite": {
            "type": "object",
            "properties": {"name": {"enum": ["smoothness-characterization", "beta",
                                             "hilbert", "bilinear", "ck", "sums"]}},
            "required": ["name"],
        },
        "seed": {"type": "integer", "minimum": 0},
        "budget": {"type": "integer", "minimum": 1},
    },
    "required": ["version", "task"],
}


class ProblemError(ValueError):
    """Malformed problem file; message is path-qualified."""


def validate_problem(problem: dict) -> None:
    import jsonschema

    try:
        jsonschema.validate(problem, PROBLEM_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ProblemError(f"{exc.json_path}: {exc.message}") from exc
    task = problem["task"]
    needs = {
        "correct-functional": ["space", "functional", "point", "epsilon"],
        "correct-operator": ["space", "codomain", "operator", "point", "epsilon"],
        "correct-bilinear": ["space", "space2", "bilinear", "point", "point2",
                             "epsilon"],
        "correct-ck-bilinear": ["space", "space2", "field", "point", "point2",
                                "epsilon"],
        "modulus": ["space", "modulus"],
        "probe-eta": ["space", "codomain", "epsilon"],
        "counterexample": ["space", "codomain", "epsilon", "eta"],
        "suite": ["suite"],
    }[task]
    for key in needs:
        if problem.get(key) is None:
            raise ProblemError(f"$.{key}: required by task {task!r}")


@dataclass
class Report:
    task: str
    status: str  # certified | rejected | heuristic | witness-found | none-found
    payload: dict
    timings: dict = field(default_factory=dict)
    version: int = SCHEMA_VERSION
    tool: str = f"bpbpp {TOOL_VERSION}"

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2)


_STATUS_EXIT = {"certified": 0, "none-found": 0, "witness-found": 0,
                "estimated": 0, "computed": 0, "suite-passed": 0,
                "heuristic": 3, "rejected": 2, "suite-failed": 2}


def _dims_consistent(problem: dict) -> None:
    from .spaces import make_space

    task = problem["task"]
    X = make_space(problem["space"]) if "space" in problem else None
    if task == "correct-functional":
        if len(problem["functional"]) != X.dim or len(problem["point"]) != X.dim:
            raise ProblemError("$.functional/point: length must equal space dim")
    if task == "correct-operator":
        cod = problem["codomain"]
        cdim = 1 if cod == "scalar" else make_space(cod).dim
        M = np.asarray(problem["operator"]["matrix"], dtype=float)
        if M.shape != (cdim, X.dim):
            raise ProblemError(
                f"$.operator.matrix: shape {M.shape} != ({cdim}, {X.dim})")


def run(problem: dict, *, seed: int | None = None,
        budget: int | None = None) -> Report:
    """Dispatch one problem to the matching module operation."""
    from .certificates import CorrectionRejected
    from .spaces import SpaceError

    t0 = time.perf_counter()
    try:
        validate_problem(problem)
        _dims_consistent(problem)
    except ProblemError:
        raise
    except (SpaceError, ValueError) as exc:
        raise ProblemError(f"$: {exc}") from exc
    seed = problem.get("seed", 0) if seed is None else seed
    budget = problem.get("budget", 2000) if budget is None else budget
    task = problem["task"]
    try:
        status, payload = _dispatch(task, problem, seed, budget)
    except CorrectionRejected as exc:
        status = "rejected"
        payload = {"reason": exc.reason,
                   "diagnostics": _jsonable(exc.diagnostics)}
    except (SpaceError, ValueError) as exc:
        raise ProblemError(f"$: {exc}") from exc
    dt = time.perf_counter() - t0
    return Report(task=task, status=status, payload=payload,
                  timings={"seconds": round(dt, 6)})


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def _dispatch(task: str, problem: dict, seed: int, budget: int):
    from .bilinear import (BilinearMap, FormField,
                           beta_bilinear_correction,
                           bilinear_point_correction_xh, ck_bilinear_correction,
                           make_form)
    from .corrections import (BetaStructure, beta_perturbation,
                              functional_point_correction,
                              hilbert_domain_correction)
    from .operators import make_operator
    from .probe import counterexample_search, estimate_eta_pair
    from .spaces import (make_space, modulus_convexity, modulus_smoothness,
                         scalar_space)

    if task == "suite":
        return run_suite(problem["suite"]["name"], seed=seed, budget=budget)

    X = make_space(problem["space"])
    if task == "correct-functional":
        x1, cert = functional_point_correction(
            X, np.asarray(problem["functional"], dtype=float),
            np.asarray(problem["point"], dtype=float), problem["epsilon"],
            seed=seed)
        return "certified", {"certificate": cert.to_payload()}
    if task == "correct-operator":
        cod = scalar_space() if problem["codomain"] == "scalar" else \
            make_space(problem["codomain"])
        T = make_operator(np.asarray(problem["operator"]["matrix"], dtype=float),
                          X, cod)
        x0 = np.asarray(problem["point"], dtype=float)
        eps = problem["epsilon"]
        if "beta" in problem:
            b = problem["beta"]
            beta = BetaStructure(cod, np.asarray(b["points"], dtype=float),
                                 np.asarray(b["functionals"], dtype=float),
                                 float(b["rho"]))
            _, cert = beta_perturbation(T, x0, eps, beta, seed=seed)
        elif X.kind == "lp" and X.p == 2:
            _, cert = hilbert_domain_correction(T, x0, eps, seed=seed,
                                                budget=budget)
        elif cod.dim == 1:
            x1, cert = functional_point_correction(
                X, T.matrix[0] * cod.norm(np.ones(1)), x0, eps, seed=seed)
        elif cod.kind == "lp" and cod.p == math.inf:
            beta = BetaStructure.canonical_linf(cod)
            _, cert = beta_perturbation(T, x0, eps, beta, seed=seed)
        else:
            from .certificates import CorrectionRejected
            raise CorrectionRejected(
                "no implemented corrector for this pair; supply a beta block, "
                "a Euclidean domain, or an linf/scalar codomain",
                domain=X.label(), codomain=cod.label())
        return "certified", {"certificate": cert.to_payload()}
    if task == "correct-bilinear":
        Y = make_space(problem["space2"])
        tensor = np.asarray(problem["bilinear"]["tensor"], dtype=float)
        x0 = np.asarray(problem["point"], dtype=float)
        y0 = np.asarray(problem["point2"], dtype=float)
        eps = problem["epsilon"]
        if "beta" in problem:
            b = problem["beta"]
            Z = make_space(problem["codomain"])
            beta = BetaStructure(Z, np.asarray(b["points"], dtype=float),
                                 np.asarray(b["functionals"], dtype=float),
                                 float(b["rho"]))
            B = BilinearMap(tensor, X, Y, Z)
            _, cert = beta_bilinear_correction(B, x0, y0, eps, beta, seed=seed,
                                               budget=budget)
        else:
            B = make_form(tensor[0] if tensor.ndim == 3 else tensor, X, Y)
            _, cert = bilinear_point_correction_xh(B, x0, y0, eps, seed=seed,
                                                   budget=budget)
        return "certified", {"certificate": cert.to_payload()}
    if task == "correct-ck-bilinear":
        Y = make_space(problem["space2"])
        forms = [make_form(np.asarray(m, dtype=float), X, Y)
                 for m in problem["field"]["forms"]]
        fld = FormField([str(p) for p in problem["field"]["points"]], forms)
        x0 = np.asarray(problem["point"], dtype=float)
        y0 = np.asarray(problem["point2"], dtype=float)
        _, cert = ck_bilinear_correction(fld, x0, y0, problem["epsilon"],
                                         seed=seed, budget=budget)
        return "certified", {"certificate": cert.to_payload()}
    if task == "modulus":
        which = problem["modulus"]["which"]
        arg = problem["modulus"]["argument"]
        est = (modulus_convexity(X, arg, budget=budget, seed=seed)
               if which == "convexity"
               else modulus_smoothness(X, arg, budget=budget, seed=seed))
        return "computed", {"modulus": {"which": which, "argument": est.argument,
                                        "value": est.value,
                                        "boundKind": est.bound_kind,
                                        "method": est.method,
                                        "trials": est.trials}}
    if task == "probe-eta":
        cod = "scalar" if problem["codomain"] == "scalar" else \
            make_space(problem["codomain"])
        est = estimate_eta_pair(X, cod, problem["epsilon"], budget=budget,
                                seed=seed)
        status = "heuristic" if est.flagged else "estimated"
        return status, {"etaEstimate": {
            "pair": list(est.pair), "epsilon": est.epsilon,
            "etaLower": est.eta_lower, "etaUpper": est.eta_upper,
            "trials": est.trials, "seed": est.seed,
            "witnesses": [asdict(w) for w in est.witnesses]}}
    if task == "counterexample":
        cod = "scalar" if problem["codomain"] == "scalar" else \
            make_space(problem["codomain"])
        w = counterexample_search(X, cod, problem["epsilon"], problem["eta"],
                                  budget=budget, seed=seed)
        if w is None:
            return "none-found", {"witness": None}
        return "witness-found", {"witness": asdict(w)}
    raise ProblemError(f"$.task: unknown task {task!r}")


# ---------------------------------------------------------------------------
# theorem suites
# ---------------------------------------------------------------------------

def run_suite(name: str, seed: int = 0, budget: int = 800):
    """Seeded acceptance batches, one per major result family."""
    from . import suites

    runner = {
        "smoothness-characterization": suites.suite_smoothness_characterization,
        "beta": suites.suite_beta,
        "hilbert": suites.suite_hilbert,
        "bilinear": suites.suite_bilinear,
        "ck": suites.suite_ck,
        "sums": suites.suite_sums,
    }.get(name)
    if runner is None:
        raise ProblemError(f"$.suite.name: unknown suite {name!r}")
    result = runner(seed=seed, budget=budget)
    status = "suite-passed" if result["failed"] == 0 else "suite-failed"
    return status, {"suite": result}


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _flatten_for_csv(idx: int, rep: Report) -> dict:
    row = {"index": idx, "task": rep.task, "status": rep.status,
           "seconds": rep.timings.get("seconds")}
    cert = rep.payload.get("certificate") if isinstance(rep.payload, dict) else None
    if cert:
        row.update({"distance": cert["distance"],
                    "distance_bound": cert["distance_bound"],
                    "attainment_residual": cert["attainment_residual"]})
    wit = rep.payload.get("witness") if isinstance(rep.payload, dict) else None
    if wit:
        row.update({"gap": wit["value_gap"], "distance": wit["distance"]})
    est = rep.payload.get("etaEstimate") if isinstance(rep.payload, dict) else None
    if est:
        row.update({"eta_lower": est["etaLower"], "eta_upper": est["etaUpper"]})
    mod = rep.payload.get("modulus") if isinstance(rep.payload, dict) else None
    if mod:
        row.update({"value": mod["value"], "bound_kind": mod["boundKind"]})
    return row


def _emit_csv(reports: list[Report]) -> str:
    rows = [_flatten_for_csv(i, r) for i, r in enumerate(reports)]
    cols: list[str] = []
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols)
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def _run_verify(path: str) -> int:
    from .verify import verify_certificate, verify_witness

    with open(path) as fh:
        doc = json.load(fh)
    reports = doc if isinstance(doc, list) else [doc]
    all_ok = True
    for i, rep in enumerate(reports):
        payload = rep.get("payload", {})
        if payload.get("certificate"):
            ok, detail = verify_certificate(payload["certificate"])
        elif payload.get("witness"):
            ok, detail = verify_witness(payload["witness"])
        else:
            ok, detail = True, {"note": "nothing to verify"}
        all_ok &= ok
        print(json.dumps({"index": i, "verified": ok, "detail": _jsonable(detail)},
                         sort_keys=True))
    return 0 if all_ok else 2


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="bpbpp",
        description="norm-attainment corrections at a fixed point: problem "
                    "files in, certificates and reports out")
    ap.add_argument("--input", required=True, help="problem file (JSON)")
    ap.add_argument("--verify", action="store_true",
                    help="re-verify the certificates in a report file using "
                         "only the norm oracles")
    ap.add_argument("--seed", type=int, default=None, help="override seed")
    ap.add_argument("--jobs", type=int, default=1, help="concurrent batch entries")
    ap.add_argument("--format", choices=["json", "csv"], default="json")
    ap.add_argument("--budget", type=int, default=None,
                    help="override iteration budget")
    args = ap.parse_args(argv)

    if args.verify:
        return _run_verify(args.input)

    try:
        with open(args.input) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: $: {exc}", file=sys.stderr)
        return 1
    problems = doc if isinstance(doc, list) else [doc]
    reports: list[Report | None] = [None] * len(problems)
    try:
        if args.jobs > 1:
            with concurrent.futures.ThreadPoolExecutor(args.jobs) as pool:
                futs = {pool.submit(run, p, seed=args.seed, budget=args.budget): i
                        for i, p in enumerate(problems)}
                for fut in concurrent.futures.as_completed(futs):
                    reports[futs[fut]] = fut.result()
        else:
            for i, p in enumerate(problems):
                reports[i] = run(p, seed=args.seed, budget=args.budget)
    except ProblemError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.format == "csv":
        sys.stdout.write(_emit_csv(reports))
    elif len(reports) == 1:
        print(reports[0].to_json())
    else:
        print(json.dumps([asdict(r) for r in reports], sort_keys=True, indent=2))
    return max(_STATUS_EXIT.get(r.status, 0) for r in reports)


if __name__ == "__main__":
    sys.exit(main())
