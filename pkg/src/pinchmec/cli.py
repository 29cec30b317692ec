"""Command-line client for the sweep service.

``run`` and ``trace`` are thin HTTP clients: with --server they talk to a
running service, without it they mount the app in-process and speak to it
through the same request/response models, so one-shot runs need no server.
``serve`` starts the service under uvicorn.

Exit codes: 0 success, 2 configuration error, 3 infeasibility.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import httpx

from .errors import ConfigurationError
from .scenario import load_config
from .service.models import ScenarioModel

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_FAILURE = 1


def _client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=None)
    import warnings

    with warnings.catch_warnings():
        # the ASGI test transport import warns about its httpx coupling
        warnings.simplefilter("ignore", DeprecationWarning)
        from fastapi.testclient import TestClient

    from .service import create_app

    return TestClient(create_app(), raise_server_exceptions=False)


def _error_kind(response: httpx.Response) -> str:
    try:
        detail = response.json().get("detail")
        if isinstance(detail, dict):
            return detail.get("error_kind", "internal")
    except ValueError:
        pass
    return "internal"


def _exit_code_for(kind: str) -> int:
    return {"configuration": EXIT_CONFIG, "infeasible": EXIT_INFEASIBLE}.get(kind, EXIT_FAILURE)


def _fail(response: httpx.Response) -> int:
    kind = _error_kind(response)
    print(f"error ({kind}): {response.text}", file=sys.stderr)
    return _exit_code_for(kind)


def _scenario_payload(config_path: str | None) -> dict:
    if config_path is None:
        return ScenarioModel().model_dump()
    config = load_config(config_path)
    return ScenarioModel.from_config(config).model_dump()


def _options_payload(args) -> dict:
    return {
        "outer_tol": args.outer_tol,
        "max_outer": args.max_outer,
        "pso_particles": args.pso_particles,
        "pso_max_iters": args.pso_iters,
        "pso_starts": args.pso_starts,
    }


def _floats(text: str) -> list[float]:
    return [float(part) for part in text.split(",") if part.strip()]


def _ints(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part.strip()]


def _strs(text: str) -> list[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def cmd_run(args) -> int:
    try:
        scenario = _scenario_payload(args.config)
    except (ConfigurationError, OSError) as exc:
        print(f"error (configuration): {exc}", file=sys.stderr)
        return EXIT_CONFIG

    payload = {
        "scenario": scenario,
        "sweep": {
            "param": args.sweep,
            "values": _floats(args.values),
            "schemes": _strs(args.schemes),
            "seeds": _ints(args.seeds),
            "workers": args.workers,
        },
        "options": _options_payload(args),
    }
    with _client(args.server) as client:
        response = client.post("/sweeps", json=payload)
        if response.status_code != 200:
            return _fail(response)
        job_id = response.json()["job_id"]

        while True:
            status = client.get(f"/sweeps/{job_id}")
            if status.status_code != 200:
                return _fail(status)
            body = status.json()
            if body["state"] == "failed":
                print(f"error ({body['error_kind']}): {body['error']}", file=sys.stderr)
                return _exit_code_for(body["error_kind"])
            if body["state"] == "done":
                break
            time.sleep(args.poll_interval)

        failures = body.get("failures") or []
        for failure in failures:
            print(
                f"warning: cell value={failure['value']} scheme={failure['scheme']} "
                f"seed={failure['seed']} failed: {failure['error']}",
                file=sys.stderr,
            )
        if not body.get("rows"):
            kinds = {failure.get("kind", "internal") for failure in failures}
            print("error: every sweep cell failed", file=sys.stderr)
            if "infeasible" in kinds:
                return EXIT_INFEASIBLE
            if kinds == {"configuration"}:
                return EXIT_CONFIG
            return EXIT_FAILURE

        csv = client.get(f"/sweeps/{job_id}/csv")
        if csv.status_code != 200:
            return _fail(csv)
        Path(args.out).write_bytes(csv.content)
    print(f"wrote {len(body['rows'])} rows to {args.out}")
    return EXIT_OK


def cmd_trace(args) -> int:
    try:
        scenario = _scenario_payload(args.config)
    except (ConfigurationError, OSError) as exc:
        print(f"error (configuration): {exc}", file=sys.stderr)
        return EXIT_CONFIG

    payload = {"scenario": scenario, "seed": args.seed, "options": _options_payload(args)}
    with _client(args.server) as client:
        response = client.post("/trace", json=payload)
        if response.status_code != 200:
            return _fail(response)
        Path(args.out).write_text(response.json()["csv"])
    print(f"wrote convergence trace to {args.out}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


def _add_engine_options(parser: argparse.ArgumentParser):
    parser.add_argument("--outer-tol", type=float, default=1e-6)
    parser.add_argument("--max-outer", type=int, default=30)
    parser.add_argument("--pso-particles", type=int, default=50)
    parser.add_argument("--pso-iters", type=int, default=200)
    parser.add_argument("--pso-starts", type=int, default=4)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pinchmec")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a parameter sweep and save the CSV table")
    run.add_argument("--config", help="flat key = value scenario file")
    run.add_argument(
        "--sweep", required=True, choices=["bs_power_dbm", "num_antennas", "bandwidth"]
    )
    run.add_argument("--values", required=True, help="comma-separated values")
    run.add_argument(
        "--schemes",
        required=True,
        help="comma-separated subset of proposed,conventional_mimo,fixed_pa,tdma",
    )
    run.add_argument(
        "--seeds", default=",".join(str(s) for s in range(20)), help="comma-separated seeds"
    )
    run.add_argument("--out", required=True)
    run.add_argument("--server", help="service URL; omitted -> in-process service")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--poll-interval", type=float, default=0.2)
    _add_engine_options(run)
    run.set_defaults(func=cmd_run)

    trace = sub.add_parser("trace", help="save a convergence trace for one seed")
    trace.add_argument("--config")
    trace.add_argument("--seed", type=int, required=True)
    trace.add_argument("--out", required=True)
    trace.add_argument("--server")
    _add_engine_options(trace)
    trace.set_defaults(func=cmd_trace)

    serve = sub.add_parser("serve", help="start the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
