"""Command-line client for the service.

All subcommands go through the HTTP API: against a remote server when --url
is given, otherwise against the in-process app over an ASGI transport, so no
separate server is needed for local runs.
"""

from __future__ import annotations

import argparse
import asyncio
import sys
from typing import Optional

import httpx

from .experiments import ALLOWED_STRATEGIES, EXPERIMENTS, load_config_file

RATE_STRATEGIES = ("fixed", "mmsqe", "revmmsqe", "mixed", "mmsqe_slow",
                   "revmmsqe_slow", "infinite")


class ClientError(RuntimeError):
    pass


class UsageError(ClientError):
    pass


class ServiceClient:
    """POSTs JSON to the service, in-process unless a URL is given."""

    def __init__(self, url: Optional[str] = None):
        self.url = url

    def post(self, path: str, payload: dict) -> dict:
        if self.url:
            with httpx.Client(base_url=self.url, timeout=None) as client:
                response = client.post(path, json=payload)
        else:
            response = asyncio.run(self._post_local(path, payload))
        if response.status_code != 200:
            try:
                detail = response.json().get("detail", response.text)
            except ValueError:
                detail = response.text
            raise ClientError(f"{path} failed ({response.status_code}): "
                              f"{detail}")
        return response.json()

    async def _post_local(self, path: str, payload: dict) -> httpx.Response:
        from .service.app import app

        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(transport=transport,
                                     base_url="http://adcalloc",
                                     timeout=None) as client:
            return await client.post(path, json=payload)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adcalloc",
        description="Resolution-adaptive ADC bit allocation: allocation, "
                    "rate/capacity evaluation and experiment sweeps.")
    parser.add_argument("--url", default=None,
                        help="service URL (default: run in-process)")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, strategies=None):
        p.add_argument("--config", default=None, help="INI config file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None, help="output file")
        p.add_argument("--pu-dbm", type=float, default=None,
                       dest="pu_dbm", help="transmit power override [dBm]")
        p.add_argument("--nr", type=int, default=None,
                       help="number of BS antennas override")
        p.add_argument("--bits", type=int, default=None,
                       help="constraint bits override")
        if strategies:
            p.add_argument("--strategy", default=None, choices=strategies)

    p_alloc = sub.add_parser("allocate", help="print one bit allocation")
    common(p_alloc, ("fixed", "mmsqe", "revmmsqe", "mixed"))

    p_cap = sub.add_parser("capacity", help="mean capacity per strategy")
    common(p_cap)
    p_cap.add_argument("--strategy", default=None,
                       help="comma-separated strategy list")
    p_cap.add_argument("--trials", type=int, default=None)
    p_cap.add_argument("--blocks", type=int, default=None)

    p_rate = sub.add_parser("rate", help="ergodic MRC rate and power report")
    common(p_rate, RATE_STRATEGIES)
    p_rate.add_argument("--trials", type=int, default=None)
    p_rate.add_argument("--blocks", type=int, default=None)

    p_sweep = sub.add_parser("sweep", help="run an experiment, emit CSV")
    common(p_sweep)
    p_sweep.add_argument("--experiment", default=None, choices=EXPERIMENTS)
    p_sweep.add_argument("--values", default=None,
                         help="comma-separated sweep values")
    p_sweep.add_argument("--strategy", default=None,
                         help="comma-separated strategy list")
    p_sweep.add_argument("--trials", type=int, default=None)
    p_sweep.add_argument("--blocks", type=int, default=None)
    p_sweep.add_argument("--cells", type=int, default=None,
                         help="single n_cells value for multicell sweeps")

    p_val = sub.add_parser("validate",
                           help="Monte-Carlo vs analytic-rate CSV")
    common(p_val)
    p_val.add_argument("--values", default=None,
                       help="comma-separated p_u sweep values [dBm]")
    p_val.add_argument("--trials", type=int, default=None)
    p_val.add_argument("--blocks", type=int, default=None)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)

    return parser


def _load_sections(args) -> dict:
    sections = {"system": {}, "power": {}, "experiment": {}}
    if getattr(args, "config", None):
        sections = load_config_file(args.config)
    overrides = {"pu_dbm": "tx_power_dbm", "nr": "n_antennas",
                 "bits": "constraint_bits"}
    for arg_name, key in overrides.items():
        value = getattr(args, arg_name, None)
        if value is not None:
            sections["system"][key] = value
    for key in ("trials", "blocks", "seed"):
        value = getattr(args, key, None)
        if value is not None:
            sections["experiment"][key] = value
    return sections


def _experiment_args(sections, args) -> dict:
    exp = dict(sections["experiment"])
    payload = {
        "config": sections["system"],
        "power": sections["power"],
    }
    for key in ("trials", "blocks", "seed", "es_dbm"):
        if key in exp:
            payload[key] = exp[key]
    if exp.get("values"):
        payload["values"] = list(exp["values"])
    if getattr(args, "values", None):
        payload["values"] = [float(v) for v in args.values.split(",")]
    return payload


def _write_out(text: str, path: Optional[str]) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"wrote {path}")
    else:
        sys.stdout.write(text)


def _cmd_allocate(client: ServiceClient, args) -> int:
    sections = _load_sections(args)
    payload = {"config": sections["system"],
               "seed": sections["experiment"].get("seed", 0)}
    if args.strategy:
        payload["strategy"] = args.strategy
    result = client.post("/allocate", payload)
    bits = result["integer_bits"]
    print(f"strategy          {result['strategy']}")
    print(f"constraint bits   {result['constraint_bits']}")
    print(f"integer bits      {' '.join(str(b) for b in bits)}")
    print(f"active chains     {result['active_count']} / {len(bits)}")
    print(f"power check       {result['adc_steps']} / "
          f"{result['budget_steps']} conv-steps "
          f"({'ok' if result['feasible'] else 'VIOLATED'})")
    if args.out:
        _write_out("\n".join(str(b) for b in bits) + "\n", args.out)
    return 0


def _cmd_capacity(client: ServiceClient, args) -> int:
    sections = _load_sections(args)
    payload = {"config": sections["system"], "power": sections["power"],
               "seed": sections["experiment"].get("seed", 0)}
    for key in ("trials", "blocks"):
        if key in sections["experiment"]:
            payload[key] = sections["experiment"][key]
    if args.strategy:
        payload["strategies"] = args.strategy.split(",")
    result = client.post("/capacity", payload)
    lines = ["strategy,capacity_mean,stderr"]
    for row in result["rows"]:
        print(f"{row['strategy']:>14}  {row['capacity_mean']:.9g} "
              f"bits/s/Hz  (stderr {row['stderr']:.3g})")
        lines.append(f"{row['strategy']},{row['capacity_mean']:.9g},"
                     f"{row['stderr']:.9g}")
    if args.out:
        _write_out("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_rate(client: ServiceClient, args) -> int:
    sections = _load_sections(args)
    payload = {"config": sections["system"], "power": sections["power"],
               "seed": sections["experiment"].get("seed", 0)}
    for key in ("trials", "blocks"):
        if key in sections["experiment"]:
            payload[key] = sections["experiment"][key]
    if args.strategy:
        payload["strategy"] = args.strategy
    result = client.post("/rate", payload)
    report = result["report"]
    power = result["power"]
    per_user = " ".join(f"{r:.4f}" for r in report["per_user_rate"])
    print(f"per-user rates    {per_user}")
    print(f"sum rate          {report['sum_rate']:.9g} bits/s/Hz "
          f"(stderr {report['stderr_sum_rate']:.3g})")
    print(f"total power       {power['p_total_w']:.9g} W "
          f"(ADC {power['p_adc_w']:.4g}, switching {power['p_switch_w']:.4g})")
    print(f"energy efficiency {power['energy_eff']:.9g} bits/J")
    print(f"active chains     {result['n_act_mean']:.2f} mean")
    return 0


def _cmd_sweep(client: ServiceClient, args, experiment=None) -> int:
    sections = _load_sections(args)
    payload = _experiment_args(sections, args)
    exp = experiment or getattr(args, "experiment", None) or \
        sections["experiment"].get("experiment")
    if not exp:
        raise UsageError("no experiment given (use --experiment or a "
                         "config file [experiment] section)")
    if exp not in EXPERIMENTS:
        raise UsageError(f"unknown experiment {exp!r}")
    if getattr(args, "cells", None) is not None:
        payload["values"] = [float(args.cells)]
    strategy = getattr(args, "strategy", None)
    if strategy:
        payload["strategies"] = strategy.split(",")
    elif sections["experiment"].get("strategies"):
        payload["strategies"] = list(sections["experiment"]["strategies"])
    bad = set(payload.get("strategies", ())) - ALLOWED_STRATEGIES[exp]
    if bad:
        raise UsageError(f"strategies {sorted(bad)} not valid for {exp}")
    path = "/validate" if experiment == "validate_analytic" else "/sweep"
    if path == "/validate":
        payload.pop("strategies", None)
    else:
        payload["experiment"] = exp
    result = client.post(path, payload)
    out = getattr(args, "out", None) or sections["experiment"].get("out")
    _write_out(result["csv_text"], out)
    print(f"# {result['positions_policy']}", file=sys.stderr)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "serve":
        import uvicorn

        from .service.app import app
        uvicorn.run(app, host=args.host, port=args.port)
        return 0
    client = ServiceClient(args.url)
    try:
        if args.command == "allocate":
            return _cmd_allocate(client, args)
        if args.command == "capacity":
            return _cmd_capacity(client, args)
        if args.command == "rate":
            return _cmd_rate(client, args)
        if args.command == "sweep":
            return _cmd_sweep(client, args)
        if args.command == "validate":
            return _cmd_sweep(client, args, experiment="validate_analytic")
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (ClientError, ValueError, OSError, httpx.HTTPError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    parser.error(f"unknown command {args.command!r}")
    return 2


if __name__ == "__main__":
    sys.exit(main())
