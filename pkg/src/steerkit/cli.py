"""Command-line front end: ``steerkit compute | verify | sample``.

stdout carries only the machine-readable result; diagnostics and timing go
to stderr.  Exit codes: 0 success, 1 usage or validation error, 2 numerical
failure, 3 verification campaign finished with violations.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from typing import Sequence

import numpy as np

from steerkit import io as sio
from steerkit.assemblage import (
    MeasurementAssemblage,
    Povm,
    StateAssemblage,
    validate_ma,
    validate_sa,
)
from steerkit.conic import Settings, to_sdpa
from steerkit.conic.model import capture_problems
from steerkit.filters import random_filter
from steerkit.games import random_game
from steerkit.harness.report import _jsonable
from steerkit.harness.sampling import (
    InstanceSpec,
    as_rng,
    sample_random_bipartite,
    sample_random_ma,
    sample_random_sa,
    sample_random_state,
)
from steerkit.harness.verify import CHECKS, run_campaign
from steerkit.linop import ValidationError
from steerkit.measures import MEASURES, MeasureResult, SolverError

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL, EXIT_VIOLATIONS = 0, 1, 2, 3

MA_MEASURES = ("ir", "ir-random", "ir-jm", "iw", "iw-dual")
SA_MEASURES = ("sr", "sr-consistent", "sr-random", "sr-clhs", "sw")
POVM_MEASURES = ("rom",)


class UsageError(Exception):
    pass


def _err(msg: str) -> None:
    print(f"steerkit: {msg}", file=sys.stderr)


def _parse_params(items: Sequence[str] | None) -> dict:
    out: dict = {}
    for item in items or ():
        if "=" not in item:
            raise UsageError(f"--param expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        k = k.strip()
        if not k:
            raise UsageError(f"--param with empty key: {item!r}")
        try:
            out[k] = json.loads(v)
        except json.JSONDecodeError:
            out[k] = v
    return out


def _settings(params: dict) -> Settings:
    kw = {}
    for key, conv in (("feas_tol", float), ("gap_tol", float), ("max_iter", int)):
        if key in params:
            try:
                kw[key] = conv(params[key])
            except (TypeError, ValueError) as exc:
                raise UsageError(f"--param {key}: {exc}") from exc
    return Settings(**kw)


def _write(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _encode_part(obj):
    if obj is None:
        return None
    if isinstance(obj, (MeasurementAssemblage, StateAssemblage, Povm)):
        return sio.to_doc(obj)
    return sio.encode_complex(obj)


def result_to_dict(res: MeasureResult) -> dict:
    return {
        "measure": res.measure,
        "value": res.value,
        "status": res.status,
        "primal_objective": res.primal_objective,
        "dual_objective": res.dual_objective,
        "gap": res.gap,
        "decomposition": {
            "free": _encode_part(res.free),
            "noise": _encode_part(res.noise),
            "parents": _encode_part(res.parents),
        },
        "certificate": {k: sio.encode_complex(v) for k, v in res.certificate.items()},
    }


def _coerce(obj, measure: str):
    """Check that the input kind fits the measure; validate it."""
    if measure in MA_MEASURES:
        if isinstance(obj, Povm):
            obj = obj.as_assemblage()
        if not isinstance(obj, MeasurementAssemblage):
            raise ValidationError(f"measure {measure!r} needs an 'ma' (or 'povm') input")
        rep = validate_ma(obj)
    elif measure in SA_MEASURES:
        if not isinstance(obj, StateAssemblage):
            raise ValidationError(f"measure {measure!r} needs an 'sa' input")
        rep = validate_sa(obj)
    else:
        if isinstance(obj, MeasurementAssemblage) and obj.n_settings == 1:
            obj = obj.povm(0)
        if not isinstance(obj, Povm):
            raise ValidationError(f"measure {measure!r} needs a 'povm' input")
        rep = validate_ma(obj.as_assemblage())
    if not rep:
        bad = ", ".join(f"{k}={v:.3g}" for k, v in rep.residuals.items() if v > rep.tol)
        raise ValidationError(f"invalid input (residuals above {rep.tol:g}: {bad})")
    return obj


# ---------------------------------------------------------------------------
# commands


def cmd_compute(args) -> int:
    if args.measure not in MEASURES:
        raise UsageError(f"unknown measure {args.measure!r}; expected one of {', '.join(MEASURES)}")
    if args.input is None:
        raise UsageError("compute needs --input")
    if args.format != "json":
        raise UsageError("compute writes JSON only")
    params = _parse_params(args.param)
    settings = _settings(params)
    if args.tol is not None:
        settings = Settings(args.tol, args.tol, settings.max_iter, settings.step)
    obj = _coerce(sio.load(args.input), args.measure)
    t0 = time.perf_counter()
    with capture_problems() as problems:
        res = MEASURES[args.measure](obj, settings)
    print(f"{args.measure}: {res.value:.12g} ({time.perf_counter() - t0:.3f} s)", file=sys.stderr)
    if args.dump_sdp:
        _dump(problems, args.dump_sdp)
    _write(json.dumps(result_to_dict(res), indent=1, default=_jsonable) + "\n", args.out)
    return EXIT_OK


def _dump(problems, path: str) -> None:
    if not problems:
        _err("no conic problem was solved (closed-form shortcut); nothing dumped")
        return
    for i, prob in enumerate(problems):
        target = path if len(problems) == 1 else f"{path}.{i}"
        with open(target, "w", encoding="utf-8") as fh:
            fh.write(to_sdpa(prob))
        _err(f"wrote SDPA problem to {target}")


def cmd_verify(args) -> int:
    if args.check not in CHECKS:
        raise UsageError(f"unknown check {args.check!r}; expected one of {', '.join(CHECKS)}")
    if args.format not in ("json", "csv"):
        raise UsageError(f"unknown format {args.format!r}")
    params = _parse_params(args.param)
    if args.tol is not None:
        params["tol"] = args.tol
    dim = int(params.get("dim", 2))
    trials = args.trials if args.trials is not None else (50 if dim == 2 else 20)
    if trials < 1:
        raise UsageError("--trials must be positive")
    rep = run_campaign(args.check, trials, args.seed, params)
    _write(rep.render(args.format, timing=False), args.out)
    print(f"{rep.summary_line()} ({rep.wall_time:.2f} s)", file=sys.stderr)
    return EXIT_OK if rep.passed else EXIT_VIOLATIONS


def cmd_sample(args) -> int:
    params = _parse_params(args.param)
    spec = InstanceSpec(args.dim, args.settings, args.outcomes)
    rng = as_rng(args.seed)
    kind = args.kind
    if kind == "ma":
        obj = sample_random_ma(spec, rng)
    elif kind == "povm":
        obj = sample_random_ma(InstanceSpec(args.dim, 1, args.outcomes), rng).povm(0)
    elif kind == "sa":
        obj = sample_random_sa(spec, rng)
    elif kind == "state":
        if params.get("bipartite"):
            obj = ("state", sample_random_bipartite(spec, rng), (args.dim, args.dim))
        else:
            obj = ("state", sample_random_state(spec, rng), None)
    elif kind == "filter":
        try:
            cls = sio.parse_map_class(args.map_class)
        except ValueError as exc:
            raise ValidationError(f"unknown map class {args.map_class!r}") from exc
        if args.kraus < 1:
            raise ValidationError("--kraus must be at least 1")
        obj = random_filter(args.dim, args.kraus, cls, rng)
    elif kind == "game":
        obj = random_game(args.dim, args.settings, args.outcomes, rng)
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(f"unknown kind {kind!r}")
    _write(sio.dumps(obj), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="steerkit", description="Incompatibility and steering measures, filters and verification campaigns.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", help="output path (default: stdout)")
        sp.add_argument("--format", default="json", choices=("json", "csv"))
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--param", action="append", metavar="KEY=VALUE", help="extra parameter (repeatable)")

    c = sub.add_parser("compute", help="compute a measure for an input object")
    common(c)
    c.add_argument("--measure", required=True, help=", ".join(MEASURES))
    c.add_argument("--input", help="JSON input file")
    c.add_argument("--tol", type=float, help="solver feasibility and gap tolerance (default 1e-8)")
    c.add_argument("--dump-sdp", metavar="PATH", help="write the solved SDP in SDPA sparse format")
    c.set_defaults(func=cmd_compute)

    v = sub.add_parser("verify", help="run a seeded verification campaign")
    common(v)
    v.add_argument("--check", required=True, help=", ".join(CHECKS))
    v.add_argument("--trials", type=int)
    v.add_argument("--tol", type=float, help="comparison tolerance (default 1e-5)")
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("sample", help="write a seeded random instance")
    common(s)
    s.add_argument("--kind", required=True, choices=("ma", "sa", "povm", "state", "filter", "game"))
    s.add_argument("--dim", type=int, default=2)
    s.add_argument("--settings", type=int, default=2)
    s.add_argument("--outcomes", type=int, default=2)
    s.add_argument("--class", dest="map_class", default="cptni", help="cptni, cptp or positive_non_cp")
    s.add_argument("--kraus", type=int, default=1)
    s.set_defaults(func=cmd_sample)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse: 0 for --help, 2 for usage errors
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    try:
        return args.func(args)
    except (UsageError, ValidationError) as exc:
        _err(str(exc))
        return EXIT_INVALID
    except OSError as exc:
        _err(str(exc))
        return EXIT_INVALID
    except SolverError as exc:
        _err(str(exc))
        return EXIT_NUMERICAL
    except (np.linalg.LinAlgError, FloatingPointError) as exc:
        _err(f"numerical failure: {exc}")
        return EXIT_NUMERICAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
