"""``jmlab`` command-line interface.

Subcommands: ``validate``, ``analyze``, ``dilate``, ``gallery``, ``search``
and ``sweep``.  Reports go to stdout as JSON (or CSV with ``--format csv``
where a table makes sense); diagnostics go to stderr.

Exit codes: 0 success, 1 domain failure (invalid input data, a relation that
fails, a sweep with violations), 2 usage or parse failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import gallery, linalg as la, randomize, relations, search
from .errors import JmlabError, RelationViolation
from .povm import JointPovm, max_element_distance, validate as validate_povm
from .process import commutation_defect, model_from_dict, naimark_dilate, povm_from_process, resolve_model
from .scenario import Scenario, dumps
from .tolerances import Tolerances

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    """Bad invocation or unreadable input (exit code 2)."""


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _seed(args) -> int | None:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("JMLAB_SEED")
    if env:
        try:
            return int(env)
        except ValueError as exc:
            raise UsageError(f"JMLAB_SEED must be an integer, got {env!r}") from exc
    return None


def _tol(args) -> Tolerances:
    return Tolerances() if args.tol is None else Tolerances(slack=args.tol)


def _read_json(path: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: malformed JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise UsageError(f"{path}: expected a JSON object")
    return data


def _load_scenario(path: str) -> Scenario:
    data = _read_json(path)
    try:
        return Scenario.from_dict(data)
    except (KeyError, TypeError) as exc:
        raise UsageError(f"{path}: missing or malformed field {exc}") from exc


def _emit(args, name: str, payload: dict | str, suffix: str = "json") -> None:
    text = payload if isinstance(payload, str) else dumps(payload) + "\n"
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        target = out / f"{name}.{suffix}"
        target.write_text(text)
        print(f"wrote {target}", file=sys.stderr)
    sys.stdout.write(text)


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------

def _check(name: str, defect: float, limit: float) -> dict:
    return {"name": name, "ok": bool(defect <= limit), "defect": float(defect), "limit": limit}


def _model_checks(data: dict, tol: Tolerances) -> list[dict]:
    kind = data.get("kind") or ("povm" if "elements" in data else "process" if "U" in data
                                else "ancilla" if "C" in data else None)
    checks = []
    if kind == "povm":
        p = JointPovm.from_dict(data)
        v = validate_povm(p, tol)
        psd = max(0.0, -float(v.min_eigenvalues.min()))
        checks += [_check("povm.hermitian", v.hermitian_defect, tol.hermitian),
                   _check("povm.positivity", psd, tol.psd),
                   _check("povm.completeness", v.completeness_defect, tol.completeness)]
    elif kind in ("process", "ancilla"):
        xi = la.decode_vector(data["xi"])
        checks.append(_check(f"{kind}.xi_norm", abs(np.linalg.norm(xi) - 1), tol.normalization))
        names = ("M1", "M2") if kind == "process" else ("C", "D")
        X, Y = (la.decode_matrix(data[n]) for n in names)
        for n, M in zip(names, (X, Y)):
            checks.append(_check(f"{kind}.{n}_hermitian", la.hermitian_defect(M), tol.hermitian))
        checks.append(_check(f"{kind}.commutation", commutation_defect(X, Y), tol.commute))
        if kind == "process":
            U = la.decode_matrix(data["U"])
            checks.append(_check("process.unitarity",
                                 float(np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0])))), tol.unitary))
    else:
        raise UsageError(f"unknown model kind {kind!r}")
    return checks


def _validate_payload(data: dict, tol: Tolerances) -> dict:
    checks = []
    try:
        if "A" in data:
            A, B = la.decode_matrix(data["A"]), la.decode_matrix(data["B"])
            psi = la.decode_vector(data["psi"])
            dims_ok = A.shape == B.shape and A.ndim == 2 and A.shape[0] == A.shape[1] == psi.size
            checks.append({"name": "scenario.dimensions", "ok": bool(dims_ok), "defect": 0.0 if dims_ok else 1.0,
                           "limit": 0.0})
            if "dim" in data:
                checks.append(_check("scenario.dim", float(int(data["dim"]) != psi.size), 0.0))
            checks.append(_check("scenario.A_hermitian", la.hermitian_defect(A), tol.hermitian))
            checks.append(_check("scenario.B_hermitian", la.hermitian_defect(B), tol.hermitian))
            checks.append(_check("scenario.psi_norm", abs(np.linalg.norm(psi) - 1), tol.normalization))
            model = data.get("model")
        else:
            model = data
        if model is not None:
            checks += _model_checks(model, tol)
            if all(c["ok"] for c in checks) and "A" in data:
                p, _ = resolve_model(model_from_dict(model), tol)
                checks.append(_check("model.dimension", float(p.dim != psi.size), 0.0))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, JmlabError):
            raise
        raise UsageError(f"malformed payload: {exc!r}") from exc
    return {"valid": all(c["ok"] for c in checks), "checks": checks}


def cmd_validate(args) -> int:
    report = _validate_payload(_read_json(args.path), _tol(args))
    _emit(args, "validate", report)
    if not report["valid"]:
        failed = ", ".join(c["name"] for c in report["checks"] if not c["ok"])
        print(f"invalid: {failed}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


# ---------------------------------------------------------------------------
# analyze / dilate
# ---------------------------------------------------------------------------

def cmd_analyze(args) -> int:
    sc = _load_scenario(args.path)
    if sc.model is None:
        raise UsageError("scenario has no model to analyze")
    tol = _tol(args)
    report = relations.full_report(sc.model, sc.A, sc.B, sc.psi, tol)
    if args.format == "csv":
        _emit(args, "report", relations.rows_to_csv(relations.report_rows(report, sc.name or 0)), "csv")
    else:
        _emit(args, "report", report.to_dict())
    if not report.universal_hold:
        print("universal relation violated", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_dilate(args) -> int:
    sc = _load_scenario(args.path)
    if not isinstance(sc.model, JointPovm):
        raise UsageError("dilate needs a scenario whose model is a POVM")
    seed = _seed(args)
    mp = naimark_dilate(sc.model, seed=0 if seed is None else seed, tol=_tol(args))
    _emit(args, "process", {"kind": "process", **mp.to_dict()})
    if args.verify:
        defect = max_element_distance(povm_from_process(mp), sc.model)
        print(f"round-trip defect {defect:.3e}", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# gallery
# ---------------------------------------------------------------------------

def _clock_pair(d: int):
    pair = gallery.DiscretePair(d)
    return pair.X, pair.P, la.normalize(np.eye(d)[0] + np.eye(d)[1])


def _gallery_scenario(name: str, args) -> Scenario | dict:
    d = args.dim
    if name in ("guess", "smeared"):
        if d == 2:
            A, B, psi = la.SIGMA_X, la.SIGMA_Y, la.KET0
        else:
            A, B, psi = _clock_pair(d)
        y0 = la.real_expectation(B, psi)
        model = gallery.guess_model(A, B, y0) if name == "guess" else gallery.smeared_model(A, args.eta, y0)
        return Scenario(A, B, psi, model, name=f"{name}-d{d}")
    if name == "unbiased":
        eta = args.eta if args.eta > 0 else 1 / np.sqrt(2)
        a, b = (1.0, 0.0, 0.0), (0.0, 1.0, 0.0)
        model = gallery.unbiased_qubit_model(a, b, eta)
        return Scenario(gallery.bloch_observable(a), gallery.bloch_observable(b), la.KET0, model,
                        name=f"unbiased-eta{eta:g}")
    if name == "product":
        A = np.diag(np.arange(d, dtype=float))
        B = np.diag((-1.0) ** np.arange(d))
        return Scenario(A, B, la.normalize(np.ones(d)), gallery.product_model(A, B), name=f"product-d{d}")
    if name == "epr":
        X, P, psi = _clock_pair(d)
        model = gallery.epr_difference_sum_model(d, gallery.sharpened_probe(d, args.width))
        return Scenario(X, P, psi, model, name=f"epr-d{d}")
    if name == "independent":
        A = la.SIGMA_Z
        B = np.diag([1.0, 2.0])
        model = gallery.disjoint_noise_model(A, B, la.SIGMA_X, la.KET_PLUS, la.SIGMA_Z, la.KET_PLUS)
        return Scenario(A, B, la.KET_PLUS, model, name="independent")
    if name == "random":
        seed = _seed(args)
        rng = randomize.rng_from(0 if seed is None else seed)
        p = randomize.random_povm(d, 2, 2, rng)
        return Scenario(randomize.random_hermitian(d, rng), randomize.random_hermitian(d, rng),
                        randomize.random_state(d, rng), p, name=f"random-d{d}")
    if name == "ccr":
        return gallery.truncated_ccr_demo(args.N, hbar=args.hbar).to_dict()
    raise UsageError(f"unknown gallery entry {name!r}; choose from {', '.join(GALLERY)}")


GALLERY = ("guess", "smeared", "unbiased", "product", "epr", "independent", "random", "ccr")


def cmd_gallery(args) -> int:
    out = _gallery_scenario(args.name, args)
    if isinstance(out, Scenario):
        _emit(args, out.name, out.to_dict())
        return EXIT_OK
    _emit(args, f"ccr-N{args.N}", out)
    return EXIT_OK if out["all_ok"] else EXIT_FAIL


# ---------------------------------------------------------------------------
# search / sweep
# ---------------------------------------------------------------------------

def _scenario_from_config(entry, base: Path) -> Scenario:
    if isinstance(entry, str):
        path = Path(entry)
        return _load_scenario(str(path if path.is_absolute() else base / path))
    if isinstance(entry, dict):
        return Scenario.from_dict(entry)
    raise UsageError("scenario must be a path or an inline object")


def _search_config(cfg: dict, args) -> search.SearchConfig:
    seed = _seed(args)
    if seed is not None:
        cfg = {**cfg, "seed": seed}
    try:
        out = search.SearchConfig.from_dict(cfg)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad search config: {exc}") from exc
    if args.tol is not None:
        out = search.SearchConfig(**{**out.__dict__, "tol": _tol(args)})
    return out


def cmd_search(args) -> int:
    cfg = _read_json(args.config)
    base = Path(args.config).parent
    if "scenario" not in cfg:
        raise UsageError("search config needs a 'scenario' (path or inline object)")
    sc = _scenario_from_config(cfg["scenario"], base)
    result = search.minimize(sc, _search_config(cfg, args))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "trace.csv").write_text(result.trace_csv())
    if args.format == "csv":
        _emit(args, "search", result.trace_csv(), "csv")
    else:
        _emit(args, "search", result.to_dict())
    return EXIT_OK


def _relations_instance(job) -> list[dict]:
    idx, seed, dims, grid_max, tol = job
    rng = np.random.default_rng(np.random.SeedSequence([seed, idx]))
    d = int(rng.integers(dims[0], dims[1] + 1))
    nx, ny = (int(v) for v in rng.integers(1, grid_max + 1, size=2))
    p = randomize.random_povm(d, nx, ny, rng)
    A, B = randomize.random_hermitian(d, rng), randomize.random_hermitian(d, rng)
    psi = randomize.random_state(d, rng)
    mp = naimark_dilate(p, seed=rng, tol=tol)
    return relations.report_rows(relations.full_report(mp, A, B, psi, tol), idx)


def _search_instance_scenarios(cfg: dict, seed: int, base: Path) -> list[Scenario]:
    if "scenarios" in cfg:
        return [_scenario_from_config(e, base) for e in cfg["scenarios"]]
    count = int(cfg.get("instances", 10))
    dims = cfg.get("dims", [2, 3])
    out = []
    for idx in range(count):
        rng = np.random.default_rng(np.random.SeedSequence([seed, idx]))
        d = int(rng.integers(dims[0], dims[1] + 1))
        out.append(Scenario(randomize.random_hermitian(d, rng), randomize.random_hermitian(d, rng),
                            randomize.random_state(d, rng), name=f"random-{idx}"))
    return out


def cmd_sweep(args) -> int:
    cfg = _read_json(args.config)
    seed = _seed(args)
    seed = int(cfg.get("seed", 0)) if seed is None else seed
    tol = _tol(args)
    kind = cfg.get("kind", "relations")
    jobs = args.jobs or os.cpu_count() or 1
    if kind == "relations":
        count = int(cfg.get("instances", 100))
        dims = cfg.get("dims", [2, 5])
        grid_max = int(cfg.get("grid_max", 3))
        jobs_list = [(i, seed, dims, grid_max, tol) for i in range(count)]
        rows = [r for chunk in search.map_jobs(_relations_instance, jobs_list, jobs) for r in chunk]
        violations = [r for r in rows if r["name"] in relations.UNIVERSAL and not r["holds"]]
        table = relations.rows_to_csv(rows)
        summary = {"kind": kind, "instances": count, "seed": seed, "records": len(rows),
                   "violations": len(violations),
                   "min_slack": {n: min(r["slack"] for r in rows if r["name"] == n) for n in relations.UNIVERSAL}}
    elif kind == "search":
        scenarios = _search_instance_scenarios(cfg, seed, Path(args.config).parent)
        rows = search.sweep(scenarios, _search_config({**cfg.get("search", {}), "seed": seed}, args), jobs)
        violations = [r for r in rows if r["min_uvur_slack"] < -tol.slack or r["min_gur_slack"] < -tol.slack]
        table = search.rows_to_csv(rows)
        summary = {"kind": kind, "instances": len(rows), "seed": seed, "violations": len(violations),
                   "rows": rows}
    else:
        raise UsageError(f"unknown sweep kind {kind!r}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "sweep.csv").write_text(table)
    if args.format == "csv":
        _emit(args, "sweep", table, "csv")
    else:
        _emit(args, "sweep", summary)
    return EXIT_FAIL if violations else EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    d = argparse.SUPPRESS if suppress else None
    parser.add_argument("--seed", type=int, default=d, help="RNG seed (falls back to $JMLAB_SEED)")
    parser.add_argument("--jobs", type=int, default=d, help="worker processes for sweeps")
    parser.add_argument("--format", choices=("json", "csv"), default=argparse.SUPPRESS if suppress else "json")
    parser.add_argument("--out", default=d, help="directory for output files")
    parser.add_argument("--tol", type=float, default=d, help="slack tolerance for relation checks")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jmlab", description="Joint-measurement laboratory")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        _global_flags(p, suppress=True)
        p.set_defaults(func=func)
        return p

    add("validate", cmd_validate, "check a scenario or model file").add_argument("path")
    add("analyze", cmd_analyze, "evaluate every relation for a scenario").add_argument("path")
    p = add("dilate", cmd_dilate, "build a measuring process for a POVM scenario")
    p.add_argument("path")
    p.add_argument("--verify", action="store_true", help="print the round-trip defect to stderr")
    p = add("gallery", cmd_gallery, "emit a canonical scenario")
    p.add_argument("name", choices=GALLERY)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--eta", type=float, default=0.0, help="smearing / sharpness parameter")
    p.add_argument("--width", type=float, default=0.5, help="probe width for epr")
    p.add_argument("--N", type=int, default=16, help="oscillator cutoff for ccr")
    p.add_argument("--hbar", type=float, default=1.0)
    add("search", cmd_search, "minimize a noise objective").add_argument("config")
    add("sweep", cmd_sweep, "run a batch of random instances").add_argument("config")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"jmlab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (JmlabError, RelationViolation, ValueError) as exc:
        print(f"jmlab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
