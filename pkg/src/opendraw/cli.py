"""Batch front end: a thin client over the reliability service.

Subcommands mirror the service endpoints.  By default the request is handled
in-process (no server needed); pass ``--server URL`` (or set OPENDRAW_SERVER)
to send it to a running instance instead.  Results are written as CSV with
the run's provenance (seed, sample sizes, truncation settings, weight-table
hash) embedded as leading comment lines, so a file can be reproduced
byte-for-byte from its own header plus the config.
"""

from __future__ import annotations

import argparse
import os
import sys

import pydantic

from . import config as cfgmod
from . import sweep
from .errors import ConfigError, OpendrawError
from .service import handlers, schemas

_REQUESTS = {
    "reliability": (schemas.ReliabilityRequest, handlers.reliability,
                    "/v1/reliability", sweep.RELIABILITY_FIELDS),
    "critical-tension": (schemas.CriticalTensionRequest, handlers.critical_tension,
                         "/v1/critical-tension", sweep.RELIABILITY_FIELDS),
    "first-passage": (schemas.FirstPassageRequest, handlers.first_passage,
                      "/v1/first-passage", sweep.FIRST_PASSAGE_FIELDS),
}


def _add_common(p: argparse.ArgumentParser, config_required: bool = True) -> None:
    p.add_argument("--config", default=os.environ.get("OPENDRAW_CONFIG"),
                   required=config_required and "OPENDRAW_CONFIG" not in os.environ,
                   help="run configuration file (INI sections)")
    p.add_argument("--out", default=os.environ.get("OPENDRAW_OUT"),
                   help="output CSV path (default: stdout)")
    p.add_argument("--seed", type=int, help="override [run] seed")
    p.add_argument("--threads", type=int, help="override [run] threads")
    p.add_argument("--samples", type=int, help="override [run] samples (outer MC)")
    p.add_argument("--inner", type=int, help="override [run] inner (q-integral samples)")
    p.add_argument("--server", default=os.environ.get("OPENDRAW_SERVER"),
                   help="base URL of a running service; default is in-process")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="opendraw",
        description="Transit nonfracture probabilities for cracked moving webs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("reliability", "sweep r1/r2 over a parameter grid"),
        ("critical-tension", "solve the largest tension meeting a reliability target"),
        ("first-passage", "tabulate spectral survival against the path oracle"),
    ):
        _add_common(sub.add_parser(name, help=help_text))

    v = sub.add_parser("validate", help="run the oracle cross-validation battery")
    _add_common(v, config_required=False)
    v.add_argument("--full", action="store_true", help="run the long battery")

    s = sub.add_parser("serve", help="run the HTTP service")
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--port", type=int, default=8000)
    return parser


def _overrides(args) -> dict:
    out = cfgmod.env_overrides()
    for key in ("seed", "threads", "samples", "inner"):
        val = getattr(args, key, None)
        if val is not None:
            out[key] = val
    return out


def _dispatch(args, request_model, handler, route):
    if args.server:
        import httpx

        resp = httpx.post(args.server.rstrip("/") + route,
                          json=request_model.model_dump(), timeout=None)
        if resp.status_code != 200:
            raise OpendrawError(f"server returned {resp.status_code}: {resp.text}")
        return resp.json()
    return handler(request_model).model_dump()


def _emit(args, fieldnames, payload) -> None:
    text = sweep.render_csv(payload["metadata"], fieldnames, payload["rows"])
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "serve":
        import uvicorn

        from .service import app

        uvicorn.run(app, host=args.host, port=args.port)
        return 0

    try:
        if args.command == "validate":
            seed, level = 0, "full" if args.full else "quick"
            if args.config:
                cfg = cfgmod.load_config(args.config, "validate")
                seed = cfg["run"]["seed"]
                level = cfg["run"].get("level", level)
            if args.seed is not None:
                seed = args.seed
            req = schemas.ValidateRequest(level=level, seed=seed)
            payload = _dispatch(args, req, handlers.validate, "/v1/validate")
            _emit(args, sweep.VALIDATE_FIELDS, payload)
            ok = all(r["passed"] for r in payload["rows"])
            for r in payload["rows"]:
                status = "PASS" if r["passed"] else "FAIL"
                print(f"[{status}] {r['check']}: {r['detail']}", file=sys.stderr)
            return 0 if ok else 1

        request_model, handler, route, fields = _REQUESTS[args.command]
        cfg = cfgmod.load_config(args.config, args.command)
        cfg = cfgmod.apply_overrides(cfg, _overrides(args))
        try:
            req = request_model(**cfg)
        except pydantic.ValidationError as exc:
            problems = [
                ".".join(str(p) for p in err["loc"]) + ": " + err["msg"]
                for err in exc.errors()
            ]
            raise ConfigError(problems) from None
        payload = _dispatch(args, req, handler, route)
        _emit(args, fields, payload)
        return 0
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return 2
    except OpendrawError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
