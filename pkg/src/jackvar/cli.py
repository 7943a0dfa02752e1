"""Command-line front end: a thin client over the HTTP service.

Each command sends one request.  By default it targets the in-process
app over an in-memory transport, so CLI runs and a deployed service
behave identically; --server points the same client at a live instance.

Exit codes: 0 success, 2 input/config error, 3 numerical failure,
4 usage error.
"""

from __future__ import annotations

import argparse
import asyncio
import csv
import json
import sys

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import httpx

from .errors import ConfigError
from .measures import load_sample
from .reports import canonical_json

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_USAGE = 4


class _Parser(argparse.ArgumentParser):
    """Parser whose usage failures exit with code 4, not argparse's 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="jackvar",
        description="Jackknife and infinitesimal-jackknife variance "
        "estimation, asymptotic oracles, and Monte Carlo experiments.",
    )
    parser.add_argument(
        "--server",
        metavar="URL",
        default=None,
        help="send requests to a running service at URL instead of the "
        "in-process app",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    est = sub.add_parser("estimate", help="variance estimates for a data file")
    est.add_argument("data", help="CSV/text file, one value per line")
    est.add_argument(
        "--functional",
        required=True,
        help="functional key: mean, square_of_mean, exp_of_mean, or "
        "trimmed_l:raised_cosine:alpha=<float>",
    )
    est.add_argument(
        "--tau2",
        action="store_true",
        help="also report tau^2, the variance of the truncated squared "
        "pseudovalues",
    )
    est.add_argument(
        "--bootstrap",
        type=int,
        metavar="B",
        default=None,
        help="also report the pseudovalue-bootstrap variance over B rounds",
    )
    est.add_argument(
        "--bound",
        default="inf",
        help="truncation bound for squared pseudovalues: auto (squared "
        "influence sup norm, trimmed L only), inf, or a number",
    )
    est.add_argument("--seed", type=int, default=0, help="bootstrap seed")
    est.add_argument("--out", default=None, help="write the JSON report to this path")
    est.set_defaults(handler=cmd_estimate)

    orc = sub.add_parser("oracle", help="asymptotic-variance oracles")
    orc.add_argument("--functional", required=True, help="functional key")
    orc.add_argument(
        "--population",
        required=True,
        help="population key: normal:mu=..,sigma=.., uniform:a=..,b=.., "
        "or exponential:rate=..",
    )
    orc.add_argument("--out", default=None, help="write the JSON report to this path")
    orc.set_defaults(handler=cmd_oracle)

    exp = sub.add_parser("experiment", help="run a Monte Carlo experiment")
    exp.add_argument("config", help="TOML experiment config")
    exp.add_argument("--out", default=None, help="write the JSON report to this path")
    exp.add_argument(
        "--raw",
        metavar="CSV",
        default=None,
        help="also dump per-replicate statistics to this CSV path",
    )
    exp.set_defaults(handler=cmd_experiment)

    swp = sub.add_parser(
        "sweep", help="variance-vs-oracle table across the config's n values"
    )
    swp.add_argument("config", help="TOML experiment config (>= 2 sample sizes)")
    swp.add_argument("--out", default=None, help="write the JSON report to this path")
    swp.set_defaults(handler=cmd_sweep)

    return parser


def _post(server: str | None, path: str, payload: dict) -> httpx.Response:
    if server:
        with httpx.Client(base_url=server, timeout=None) as client:
            return client.post(path, json=payload)

    async def run() -> httpx.Response:
        from .service.app import create_app

        transport = httpx.ASGITransport(app=create_app())
        async with httpx.AsyncClient(
            transport=transport, base_url="http://jackvar.internal", timeout=None
        ) as client:
            return await client.post(path, json=payload)

    return asyncio.run(run())


def _detail(response: httpx.Response) -> str:
    try:
        detail = response.json().get("detail")
    except ValueError:
        detail = None
    if isinstance(detail, str):
        return detail
    if detail is not None:
        return json.dumps(detail)
    return response.text.strip() or f"HTTP {response.status_code}"


def _deliver(response: httpx.Response, out_path: str | None) -> int:
    if response.status_code == 200:
        text = canonical_json(response.json())
        if out_path:
            with open(out_path, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return EXIT_OK
    print(f"jackvar: {_detail(response)}", file=sys.stderr)
    return EXIT_CONFIG if response.status_code < 500 else EXIT_NUMERICAL


def _parse_bound(text: str):
    if text in ("auto", "inf"):
        return text
    try:
        return float(text)
    except ValueError:
        raise ConfigError(
            f"bad --bound value {text!r}: expected auto, inf, or a number"
        ) from None


def _load_toml(path: str) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: invalid TOML: {exc}") from None


def _write_raw_csv(report: dict, path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "rep", "vjack", "ij", "scaled_diff"])
        for entry in report["results"]:
            reps = entry["replicates"]
            rows = zip(reps["vjack"], reps["ij"], reps["scaled_diff"])
            for rep, row in enumerate(rows):
                writer.writerow([entry["n"], rep, *row])


def cmd_estimate(args) -> int:
    data = load_sample(args.data)
    payload = {
        "values": [float(v) for v in data.values],
        "functional": args.functional,
        "tau2": bool(args.tau2),
        "bootstrap_reps": args.bootstrap,
        "bound": _parse_bound(args.bound),
        "seed": args.seed,
    }
    return _deliver(_post(args.server, "/estimate", payload), args.out)


def cmd_oracle(args) -> int:
    payload = {"functional": args.functional, "population": args.population}
    return _deliver(_post(args.server, "/oracle", payload), args.out)


def cmd_experiment(args) -> int:
    response = _post(args.server, "/experiment", _load_toml(args.config))
    code = _deliver(response, args.out)
    if code == EXIT_OK and args.raw:
        _write_raw_csv(response.json(), args.raw)
    return code


def cmd_sweep(args) -> int:
    return _deliver(_post(args.server, "/sweep", _load_toml(args.config)), args.out)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"jackvar: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except httpx.HTTPError as exc:
        print(f"jackvar: request failed: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
