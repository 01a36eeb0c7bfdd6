"""Command-line front end.

Subcommands ``simulate``, ``sweep``, ``backtest`` and ``enumerate`` write
comma-delimited tables (or a JSON mirror with ``--json``). Whenever
``--out`` is given a ``*.manifest.json`` is written next to the output; the
``replay`` subcommand re-runs a manifest and checks the output digests.

Exit codes: 0 success, 2 usage, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import datetime as dt
import hashlib
import io
import json
import math
import os
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from . import __version__
from .backtest import (
    BacktestConfig,
    enumerate_md1_expectation,
    run_index_detail,
    run_md3,
    run_single,
    split_intervals,
)
from .data_io import (
    CoveragePolicy,
    DataError,
    align_panel,
    filter_coverage,
    read_listing,
    read_quotes,
    years_spanned,
)
from .experiments import sweep_m, sweep_to_plateau
from .market_model import PricePanel, PricingError, log_delta
from .sde_sim import EnsembleConfig, GouParams, SimConfig, simulate_batch
from .strategies import BinomialModel, Md1Params, Md2Params, Md3Params, WarmupError

EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

SPLITS = {"none": 1, "halves": 2, "thirds": 3}
ROMAN = ("I", "II", "III")


class UsageError(Exception):
    pass


class NumericalFailure(Exception):
    pass


def fmt(x) -> str:
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        return repr(x)
    return "" if x is None else str(x)


def csv_text(header: Sequence[str], rows: Sequence[Sequence], footer: Sequence[str] = ()) -> str:
    out = io.StringIO()
    out.write(",".join(header) + "\n")
    for row in rows:
        out.write(",".join(fmt(v) for v in row) + "\n")
    for line in footer:
        out.write(f"# {line}\n")
    return out.getvalue()


def json_text(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=True) + "\n"


def parse_m(spec: str) -> List[int]:
    """``"5"``, ``"1,2,5"`` or ``"1..30"`` (inclusive)."""
    out: List[int] = []
    try:
        for part in spec.split(","):
            part = part.strip()
            if ".." in part:
                lo, hi = part.split("..")
                out.extend(range(int(lo), int(hi) + 1))
            else:
                out.append(int(part))
    except ValueError:
        raise UsageError(f"bad m specification {spec!r}") from None
    if not out or any(m < 1 for m in out) or any(b <= a for a, b in zip(out, out[1:])):
        raise UsageError(f"m values must be positive and strictly ascending: {spec!r}")
    return out


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


class Outputs:
    """Collects named text outputs and writes them with a manifest."""

    def __init__(self, out: Optional[str], directory: bool):
        self.out = out
        self.directory = directory
        self.files: Dict[str, str] = {}

    def add(self, name: str, text: str):
        self.files[name] = text

    def path_for(self, name: str) -> Path:
        return Path(self.out) / name if self.directory else Path(self.out)

    def write(self, manifest: dict):
        if self.out is None:
            for text in self.files.values():
                sys.stdout.write(text)
            return
        if self.directory:
            Path(self.out).mkdir(parents=True, exist_ok=True)
        digests = {}
        for name, text in self.files.items():
            path = self.path_for(name)
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_bytes(text.encode("utf-8"))
            digests[str(path)] = hashlib.sha256(text.encode("utf-8")).hexdigest()
        manifest["outputs"] = digests
        mpath = Path(self.out) / "manifest.json" if self.directory else Path(str(self.out) + ".manifest.json")
        mpath.write_text(json_text(manifest), encoding="utf-8")


def base_manifest(args, argv: Sequence[str], inputs: Sequence[str] = ()) -> dict:
    params = {k: v for k, v in vars(args).items() if k not in ("func",)}
    return {
        "command": args.command,
        "argv": list(argv),
        "cwd": os.getcwd(),
        "parameters": params,
        "inputs": {str(Path(p).resolve()): sha256_file(p) for p in inputs},
        "version": __version__,
        "timestamp": dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds"),
    }


# -- simulate ---------------------------------------------------------------


def _gou(args) -> GouParams:
    try:
        return GouParams(alpha=args.alpha, a0=args.a0, beta=args.beta, mu=args.mu, x0=args.x0)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_simulate(args, argv):
    p = _gou(args)
    sim = SimConfig(args.units, args.substeps, args.seed)
    batch = simulate_batch(p, sim, [args.path_index])
    prices = batch.prices[0]
    floored = bool(batch.floored[0])
    outs = Outputs(args.out, directory=False)
    if args.json:
        outs.add("path", json_text({"tick": list(range(prices.size)), "price": [float(x) for x in prices], "floored": floored}))
    else:
        footer = ["floored=true"] if floored else []
        outs.add("path", csv_text(["tick", "price"], [(t, float(x)) for t, x in enumerate(prices)], footer))
    outs.write(base_manifest(args, argv))
    if floored and args.max_floored < 1:
        raise NumericalFailure("path hit the positivity floor")


# -- sweep ------------------------------------------------------------------


def cmd_sweep(args, argv):
    p = _gou(args)
    sim = SimConfig(args.units, args.substeps, args.seed)
    ens = EnsembleConfig(args.paths, args.seed)
    cfg = BacktestConfig(cost_rate=args.cost)
    if args.m == "auto":
        result = sweep_to_plateau(p, sim, ens, cfg, workers=args.workers)
    else:
        result = sweep_m(parse_m(args.m), p, sim, ens, cfg, workers=args.workers)
    m_c = "undefined" if result.m_c is None else str(result.m_c)
    outs = Outputs(args.out, directory=False)
    if args.json:
        doc = {
            "rows": [{"m": r.m, "mean_R": r.mean_r, "stderr": r.stderr, "n_paths": r.n_paths} for r in result.rows],
            "m_c": result.m_c,
            "floored_paths": result.floored_paths,
        }
        outs.add("sweep", json_text(doc))
    else:
        rows = [(r.m, r.mean_r, r.stderr, r.n_paths) for r in result.rows]
        outs.add("sweep", csv_text(["m", "mean_R", "stderr", "n_paths"], rows,
                                   [f"m_c={m_c}", f"floored_paths={result.floored_paths}"]))
    outs.write(base_manifest(args, argv))
    if result.floored_paths > args.max_floored:
        raise NumericalFailure(f"{result.floored_paths} paths hit the positivity floor")


# -- backtest ---------------------------------------------------------------


def _load_panel(args) -> (PricePanel, List[str]):
    if bool(args.panel) == bool(args.series):
        raise UsageError("give exactly one of --panel or --series")
    if args.series:
        tables = [read_quotes(args.series)]
        inputs = [args.series]
    else:
        tables = read_listing(args.panel)
        inputs = [args.panel]
    policy = CoveragePolicy(args.min_coverage, (args.start, args.end) if (args.start or args.end) else None)
    kept = filter_coverage(tables, policy)
    return align_panel(kept), inputs


MIN_YEARS_TO_ANNUALISE = 0.25


def _yearly(r: float, labels) -> tuple:
    # annualising a few days of history only produces absurd numbers
    years = years_spanned(labels)
    if years is None or years < MIN_YEARS_TO_ANNUALISE:
        return (None, None)
    return (r / years, math.expm1(r / years))


def _pick_single(panel: PricePanel, security: Optional[str]):
    if security is not None:
        return panel.series(security)
    if len(panel.securities) != 1:
        raise UsageError("md1/md2 need a single security; pass --security ID or use --strategy index")
    return panel.securities[0]


def _run(strategy: str, panel: PricePanel, m: Optional[int], args, cfg):
    """Returns ``(cumulative_return, wealth_path, trades)``."""
    if strategy == "md1":
        res = run_single(_pick_single(panel, args.security), Md1Params(args.md1_A), cfg)
        return res.cumulative_return, res.wealth_path, res.trades
    if strategy == "md2":
        res = run_single(_pick_single(panel, args.security), Md2Params(m), cfg)
        return res.cumulative_return, res.wealth_path, res.trades
    if strategy == "md3":
        res = run_md3(panel, Md3Params(m), cfg)
        return res.cumulative_return, res.wealth_path, res.trades
    detail = run_index_detail(panel, Md2Params(m), cfg)
    trades = sorted((t for r in detail.components.values() for t in r.trades), key=lambda t: t.tick)
    return detail.cumulative_return, detail.wealth_path, trades


def cmd_backtest(args, argv):
    strategy = "md1" if args.md1_A is not None else args.strategy
    if strategy == "md1" and args.md1_A is None:
        raise UsageError("--strategy md1 needs --md1-A")
    panel, inputs = _load_panel(args)
    cfg = BacktestConfig(cost_rate=args.cost)
    m_values = [None] if strategy == "md1" else parse_m(args.m)
    parts = SPLITS[args.split]
    pieces = [("all", panel)]
    if parts > 1:
        min_len = (max(m_values) if m_values[0] is not None else 0) + 2
        try:
            subs = split_intervals(panel, parts, min_len)
        except ValueError as exc:
            raise DataError(str(exc)) from None
        pieces += list(zip(ROMAN, subs))

    result_rows = []
    for name, piece in pieces:
        for m in m_values:
            r, _, _ = _run(strategy, piece, m, args, cfg)
            ylog, ysimple = _yearly(r, piece.labels)
            result_rows.append((name, "" if m is None else m, r, ylog, ysimple))

    detail_m = m_values[0] if args.detail_m is None else args.detail_m
    _, wpath, trades = _run(strategy, panel, detail_m, args, cfg)
    labels = panel.labels
    wealth_rows = [(t, labels[t] if labels else "", float(w)) for t, w in enumerate(wpath)]
    trade_rows = [
        (tr.tick, labels[tr.tick] if labels else "", tr.side.value, tr.security_id, tr.price, tr.quantity, tr.cost_paid)
        for tr in trades
    ]

    outs = Outputs(args.out, directory=True)
    if args.json:
        doc = {
            "strategy": strategy,
            "securities": [str(s) for s in panel.ids],
            "returns": [dict(zip(("interval", "m", "R", "yearly_log", "yearly_simple"), row)) for row in result_rows],
            "detail_m": detail_m,
            "wealth": [dict(zip(("tick", "date", "wealth"), row)) for row in wealth_rows],
            "trades": [dict(zip(("tick", "date", "side", "security", "price", "quantity", "cost"), row))
                       for row in trade_rows],
        }
        outs.add("result.json", json_text(doc))
    else:
        outs.add("returns.csv", csv_text(["interval", "m", "R", "yearly_log", "yearly_simple"], result_rows))
        outs.add("wealth.csv", csv_text(["tick", "date", "wealth"], wealth_rows))
        outs.add("trades.csv", csv_text(["tick", "date", "side", "security", "price", "quantity", "cost"], trade_rows))
    if args.out is None:
        # stdout gets only the returns table
        outs.files = {k: v for k, v in outs.files.items() if k in ("returns.csv", "result.json")}
    inputs = list(inputs)
    if args.panel:
        inputs += [str(p) for p in _listing_files(args.panel)]
    outs.write(base_manifest(args, argv, inputs))


def _listing_files(listing) -> List[Path]:
    listing = Path(listing)
    files = []
    for raw in listing.read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if line and not line.startswith("#"):
            f = Path(line.split(",")[1].strip())
            files.append(f if f.is_absolute() else listing.parent / f)
    return files


# -- enumerate --------------------------------------------------------------


def cmd_enumerate(args, argv):
    try:
        model = BinomialModel(args.A, args.a)
        exact = enumerate_md1_expectation(model, args.n, BacktestConfig(cost_rate=args.cost))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    ld = log_delta(args.A, args.a)
    ref8 = args.n / 8 * ld
    ref4 = args.n / 4 * ld
    ratio = exact / ref8 if ref8 != 0 else float("nan")
    outs = Outputs(args.out, directory=False)
    header = ["n", "A", "a", "cost", "exact_mean_R", "ref_n_over_8_log_delta", "ref_n_over_4_log_delta", "ratio_to_n_over_8"]
    row = (args.n, float(args.A), float(args.a), float(args.cost), exact, ref8, ref4, ratio)
    if args.json:
        outs.add("enumerate", json_text(dict(zip(header, row))))
    else:
        outs.add("enumerate", csv_text(header, [row]))
    outs.write(base_manifest(args, argv))


# -- replay -----------------------------------------------------------------


def cmd_replay(args, argv):
    manifest = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
    old_argv = list(manifest["argv"])
    if args.workers is not None and "--workers" in old_argv:
        i = old_argv.index("--workers")
        old_argv[i + 1] = str(args.workers)
    elif args.workers is not None and manifest["command"] == "sweep":
        old_argv += ["--workers", str(args.workers)]
    expected = manifest.get("outputs", {})
    cwd = os.getcwd()
    os.chdir(manifest["cwd"])
    try:
        for path, digest in manifest.get("inputs", {}).items():
            if sha256_file(path) != digest:
                raise DataError(f"input {path} changed since the manifest was written")
        code = main(old_argv)
        if code != 0:
            return code
        bad = [p for p, d in expected.items() if sha256_file(p) != d]
    finally:
        os.chdir(cwd)
    if bad:
        sys.stderr.write("replay mismatch: " + ", ".join(bad) + "\n")
        raise NumericalFailure("outputs differ from manifest")
    sys.stderr.write(f"replay reproduced {len(expected)} output(s)\n")


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="demon-trader", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, paths=False, cost=True):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help="output file (or directory for backtest); stdout if omitted")
        p.add_argument("--json", action="store_true", help="emit a JSON document instead of CSV")
        if paths:
            p.add_argument("--paths", type=int, default=2000)
        if cost:
            p.add_argument("--cost", type=float, default=0.0, help="proportional cost per trade")

    def gou(p):
        p.add_argument("--alpha", type=float, required=True)
        p.add_argument("--a0", type=float, required=True)
        p.add_argument("--beta", type=float, required=True)
        p.add_argument("--mu", type=float, default=0.0)
        p.add_argument("--x0", type=float, default=None)
        p.add_argument("--units", type=int, default=1000)
        p.add_argument("--substeps", type=int, default=16)
        p.add_argument("--max-floored", type=int, default=0,
                       help="tolerated number of paths that hit the positivity floor")

    p = sub.add_parser("simulate", help="simulate one price path")
    gou(p)
    common(p, cost=False)
    p.add_argument("--path-index", type=int, default=0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="MD2 mean return versus window length on simulated paths")
    gou(p)
    common(p, paths=True)
    p.add_argument("--m", default="1..30", help="'1..30', '1,2,5' or 'auto' (walk until plateau)")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("backtest", help="run MD1/MD2/MD3/index backtests on quote files")
    common(p)
    p.add_argument("--panel", help="listing file of 'security_id,path' rows")
    p.add_argument("--series", help="a single 'date,price' quote file")
    p.add_argument("--strategy", choices=("md1", "md2", "md3", "index"), default="md2")
    p.add_argument("--m", default="5")
    p.add_argument("--md1-A", dest="md1_A", type=float, default=None, help="MD1 fundamental level (implies md1)")
    p.add_argument("--security", default=None)
    p.add_argument("--split", choices=tuple(SPLITS), default="none")
    p.add_argument("--detail-m", type=int, default=None, help="m for the wealth path and trade log")
    p.add_argument("--min-coverage", type=float, default=0.99)
    p.add_argument("--start", default=None)
    p.add_argument("--end", default=None)
    p.set_defaults(func=cmd_backtest)

    p = sub.add_parser("enumerate", help="exact MD1 mean return over all binomial paths")
    p.add_argument("--A", dest="A", type=float, required=True)
    p.add_argument("--a", dest="a", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    common(p)
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("replay", help="re-run a manifest and verify its outputs")
    p.add_argument("manifest")
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args, argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except (DataError, WarmupError, PricingError, OSError) as exc:
        sys.stderr.write(f"data error: {exc}\n")
        return EXIT_DATA
    except NumericalFailure as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERIC
    return 0


if __name__ == "__main__":
    sys.exit(main())
