"""Command line client.

Each subcommand builds a service request and runs it in-process, or
against a running server when ``--url`` is given. Exit codes: 0 success,
1 invalid input, 2 numerical or runtime failure.
"""

import argparse
import json
import logging
from pathlib import Path
import sys

from pydantic import ValidationError

from . import service
from .ensemble import EnsembleConfig, sample_instance
from .harness import SweepConfig, SweepRecord, emit_csv, emit_plot, read_csv, write_metadata
from .linalg import SingularMatrixError
from .oracle import OracleError
from .solver import StepSizeError

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class RemoteError(RuntimeError):
    def __init__(self, status, detail):
        super().__init__(f"server returned {status}: {detail}")
        self.status = status


def _remote(url, endpoint, payload):
    import httpx

    resp = httpx.post(f"{url.rstrip('/')}/{endpoint}", json=payload, timeout=None)
    if resp.status_code != 200:
        try:
            detail = resp.json().get("detail")
        except ValueError:
            detail = resp.text
        raise RemoteError(resp.status_code, detail)
    return resp


def _call(args, endpoint, handler, req, response_model=None):
    if args.url:
        resp = _remote(args.url, endpoint, req.model_dump(mode="json"))
        return response_model.model_validate(resp.json()) if response_model else resp.text
    return handler(req)


def _read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise service.RequestError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise service.RequestError(f"{path} is not valid JSON: {exc}") from exc


def _parse_h(text):
    return text if text == "auto" else float(text)


def _emit(obj, out):
    text = json.dumps(obj, indent=2)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def cmd_solve(args):
    req = service.SolveRequest(problem=_read_json(args.problem), weights=args.weights,
                               h=_parse_h(args.h), phi_n=args.phi_n, tol_kkt=args.tol_kkt,
                               max_iters=args.max_iters)
    res = _call(args, "solve", service.handle_solve, req, service.SolveResponse)
    _emit(res.model_dump(), args.out)
    return EXIT_OK


def cmd_check(args):
    req = service.ProblemRequest(problem=_read_json(args.problem), weights=args.weights,
                                 h=_parse_h(args.h), phi_n=args.phi_n)
    res = _call(args, "check", service.handle_check, req, service.CertificateResponse)
    _emit(res.model_dump(), args.out)
    return EXIT_OK


def cmd_oracle(args):
    req = service.ProblemRequest(problem=_read_json(args.problem), weights=args.weights,
                                 h=_parse_h(args.h), phi_n=args.phi_n)
    res = _call(args, "oracle", service.handle_oracle, req, service.OracleResponse)
    _emit(res.model_dump(), args.out)
    return EXIT_OK


def cmd_predict(args):
    req = service.PredictRequest(n=args.n, k=args.k, eta=args.eta, sigma_z=args.sigma_z,
                                 sigma_a=args.sigma_a, phi_n=args.phi_n, m=args.m,
                                 epsilon_prime=args.epsilon_prime, c3=args.c3)
    res = _call(args, "predict", service.handle_predict, req, service.PredictResponse)
    rows = [
        ("h (selection rule at m)", res.h),
        ("m* (sample threshold at h)", res.m_star),
        ("theta(m*)", res.theta_m_star),
        ("m* (h tuned with m)", res.m_star_tuned),
        ("theta(m* tuned)", res.theta_m_star_tuned),
        ("g(h) (c3 = %g)" % args.c3, res.gap),
        ("theta(m)", res.theta_m),
    ]
    width = max(len(label) for label, _ in rows)
    for label, value in rows:
        print(f"{label:<{width}}  {value:.6g}")
    return EXIT_OK


def cmd_sweep(args):
    try:
        cfg = SweepConfig.model_validate(_read_json(args.config))
    except ValidationError as exc:
        raise service.RequestError(str(exc)) from exc
    if args.url:
        resp = _remote(args.url, "sweep", cfg.model_dump(mode="json"))
        records = [SweepRecord(**r) for r in resp.json()["records"]]
    else:
        from .harness import run_sweep

        records = run_sweep(cfg, workers=args.workers)
    emit_csv(records, args.out)
    write_metadata(cfg, str(args.out) + ".meta.json")
    print(f"wrote {len(records)} records to {args.out}")
    return EXIT_OK


def cmd_plot(args):
    records = read_csv(args.csv)
    if args.url:
        req = service.PlotRequest(records=[r.__dict__ for r in records], x=args.x)
        Path(args.out).write_text(_remote(args.url, "plot", req.model_dump()).text)
    else:
        emit_plot(records, args.out, args.x)
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_generate(args):
    cfg = EnsembleConfig(n=args.n, k=args.k, m=args.m, sigma_a=args.sigma_a,
                         sigma_z=args.sigma_z, seed=args.seed)
    Path(args.out).write_text(sample_instance(cfg).to_json() + "\n")
    return EXIT_OK


def cmd_serve(args):
    import uvicorn

    uvicorn.run("wl1recovery.api:app", host=args.host, port=args.port)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="wl1recovery", description=__doc__.splitlines()[0])
    p.add_argument("--url", help="send requests to a running wl1recovery server")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def problem_args(sp):
        sp.add_argument("--problem", required=True, help="problem JSON document")
        sp.add_argument("--weights", default="uniform:1.0",
                        help="uniform:c, support:c (c on the true support, 1 elsewhere) or a file")
        sp.add_argument("--h", default="auto", help="regularization weight or 'auto'")
        sp.add_argument("--phi-n", type=float, default=9.0, help="phi_n for h=auto")
        sp.add_argument("--out", help="write JSON here instead of stdout")

    sp = sub.add_parser("solve", help="solve the weighted LASSO")
    problem_args(sp)
    sp.add_argument("--tol-kkt", type=float, default=1e-9)
    sp.add_argument("--max-iters", type=int, default=50_000)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("check", help="evaluate the sufficient recovery events")
    problem_args(sp)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("oracle", help="exhaustive global minimizer (n <= 14)")
    problem_args(sp)
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("predict", help="closed-form h, thresholds and gap")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--eta", type=float, default=1.0)
    sp.add_argument("--sigma-z", type=float, default=0.5)
    sp.add_argument("--sigma-a", type=float, default=1.0)
    sp.add_argument("--phi-n", type=float, default=9.0)
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--epsilon-prime", type=float, default=0.0)
    sp.add_argument("--c3", type=float, default=1.0)
    sp.set_defaults(func=cmd_predict)

    sp = sub.add_parser("sweep", help="run a phase-transition sweep")
    sp.add_argument("--config", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--workers", type=int, default=1)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("plot", help="SVG chart from a sweep CSV")
    sp.add_argument("--csv", required=True)
    sp.add_argument("--x", choices=("m", "theta"), default="theta")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_plot)

    sp = sub.add_parser("generate", help="write a random problem JSON document")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--sigma-a", type=float, default=1.0)
    sp.add_argument("--sigma-z", type=float, default=0.5)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_generate)

    sp = sub.add_parser("serve", help="run the HTTP service")
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8000)
    sp.set_defaults(func=cmd_serve)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (SingularMatrixError, StepSizeError, OracleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except RemoteError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID if exc.status == 422 else EXIT_RUNTIME
    except (ValueError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
