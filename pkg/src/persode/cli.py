"""Command-line interface: serve, simulate, decay-sweep, oracle-check."""

import argparse
import json
import math
import sys
from pathlib import Path

from .config import load_service_config
from .engine import Engine
from .memory_core import DEFAULT_DECAY_RATE, ScoringParams, decay_factor
from .oracle import run_oracle_check
from .providers import (
    HttpChatBackend,
    HttpExtractorBackend,
    HttpImageBackend,
    ProviderSet,
)
from .sim import load_script, report_to_json, run_script
from .store import JournalStore

CALIBRATION_GRID_POINT = 6.0


def decay_sweep(lambdas: list[float], horizon_days: float, step_days: float) -> str:
    """CSV of decay values over a time grid, one series per decay rate.

    The calibration series (rate ln(4)/6, which hits 0.25 at day six) is
    always included so the sweep is self-checking.
    """
    if horizon_days <= 0 or step_days <= 0:
        raise ValueError("horizon and step must be positive")
    if any(lam <= 0 for lam in lambdas):
        raise ValueError("decay rates must be positive")

    rates = list(lambdas)
    if not any(math.isclose(lam, DEFAULT_DECAY_RATE, rel_tol=0, abs_tol=1e-12) for lam in rates):
        rates.append(DEFAULT_DECAY_RATE)

    grid = []
    steps = int(horizon_days / step_days + 1e-9)
    for i in range(steps + 1):
        grid.append(round(i * step_days, 9))
    if not any(math.isclose(g, CALIBRATION_GRID_POINT, abs_tol=1e-9) for g in grid):
        grid.append(CALIBRATION_GRID_POINT)
        grid.sort()

    lines = ["lambda,delta_t_days,decay"]
    for lam in rates:
        params = ScoringParams(decay_rate=lam)
        for delta in grid:
            lines.append(f"{lam:.12g},{delta:.12g},{decay_factor(delta, params):.12g}")
    return "\n".join(lines) + "\n"


def _build_providers(config) -> ProviderSet:
    if config.mock_providers:
        return ProviderSet.mocks()
    chat_cfg = config.chat_provider_config()
    image_cfg = config.image_provider_config()
    return ProviderSet(
        chat=HttpChatBackend(chat_cfg),
        image=HttpImageBackend(image_cfg),
        extractor=HttpExtractorBackend(chat_cfg),
        chat_cfg=chat_cfg,
        image_cfg=image_cfg,
    )


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    config = load_service_config(
        args.config,
        overrides={
            "host": args.host,
            "port": args.port,
            "data_dir": args.data_dir,
            "mock_providers": args.mock_providers if args.mock_providers else None,
        },
    )
    engine = Engine(store=JournalStore(config.data_dir), providers=_build_providers(config))
    app = create_app(engine, mock_providers=config.mock_providers)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
    return 0


def cmd_simulate(args) -> int:
    script = load_script(args.script)
    if args.seed is not None:
        script = type(script)(
            messages=script.messages,
            preferences=script.preferences,
            user_id=script.user_id,
            close_at=script.close_at,
            seed=args.seed,
            assertions=script.assertions,
        )
    report = run_script(script, data_dir=args.data_dir)
    output = report_to_json(report)
    if args.out:
        Path(args.out).write_text(output, encoding="utf-8")
    else:
        sys.stdout.write(output)
    failed = [a for a in report["assertions"] if not a["ok"]]
    if failed:
        print(f"{len(failed)} assertion(s) failed", file=sys.stderr)
        return 1
    return 0


def cmd_decay_sweep(args) -> int:
    lambdas = [float(v) for v in args.lambdas.split(",") if v.strip()] if args.lambdas else []
    csv_text = decay_sweep(lambdas, args.horizon, args.step)
    if args.out:
        Path(args.out).write_text(csv_text, encoding="utf-8")
    else:
        sys.stdout.write(csv_text)
    return 0


def cmd_oracle_check(args) -> int:
    report = run_oracle_check(corpora=args.corpora, seed=args.seed)
    summary = {
        "corpora": report.corpora,
        "fragments": report.fragments,
        "ok": report.ok,
        "mismatches": report.mismatches[:10],
    }
    print(json.dumps(summary, sort_keys=True))
    return 0 if report.ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="persode", description="Journaling engine service and tools")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default=None)
    serve.add_argument("--port", type=int, default=None)
    serve.add_argument("--data-dir", default=None)
    serve.add_argument("--mock-providers", action="store_true", default=False)
    serve.add_argument("--config", default=None, help="key=value config file")
    serve.set_defaults(func=cmd_serve)

    simulate = sub.add_parser("simulate", help="replay a scripted session with a virtual clock")
    simulate.add_argument("--script", required=True)
    simulate.add_argument("--seed", type=int, default=None)
    simulate.add_argument("--data-dir", default="persode_sim_data")
    simulate.add_argument("--out", default=None)
    simulate.set_defaults(func=cmd_simulate)

    sweep = sub.add_parser("decay-sweep", help="CSV table of decay values")
    sweep.add_argument("--lambdas", default="", help="comma-separated decay rates per day")
    sweep.add_argument("--horizon", type=float, default=30.0)
    sweep.add_argument("--step", type=float, default=1.0)
    sweep.add_argument("--out", default=None)
    sweep.set_defaults(func=cmd_decay_sweep)

    oracle = sub.add_parser("oracle-check", help="retrieval oracle equivalence check")
    oracle.add_argument("--corpora", type=int, default=100)
    oracle.add_argument("--seed", type=int, default=2024)
    oracle.set_defaults(func=cmd_oracle_check)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
