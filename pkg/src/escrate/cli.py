"""Command-line front end: ``escrate <command> --config experiment.json``.

Commands are ``pressure``, ``escape``, ``dimension`` and ``oracle``. Each
writes a table (CSV, or JSON with ``--format json``) and a summary JSON into
the output directory and prints the summary on stdout.

Exit codes: 0 success, 2 configuration error, 3 numerical failure. Errors are
reported as a JSON object on stderr. ``ESCRATE_THREADS`` sets the number of
worker threads used for sweeps.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import warnings
from fractions import Fraction
from pathlib import Path

from . import __version__, _linalg
from .dimension import (BISECT_WIDTH, ROOT_TOL, bowen_root, dimension_sweep,
                        write_dimension_csv)
from .errors import ConfigError, EnumerationCapExceeded, EscrateError
from .geometry import (MarkovIntervalMap, ball_to_cylinders, cantor_map, doubling_map,
                       encode_point, log_derivative_potential, quadratic_toy_map)
from .holes import (escape_sweep, hole_family_from_words, standard_hole_family,
                    write_escape_csv)
from .oracle import (ENUMERATION_CAP, exhaustive_survival, fit_escape_rate, kac_check,
                     monte_carlo_survival)
from .symbolic import STATE_CAP, Subshift, SymbolicPoint, champernowne_digits
from .thermo import Potential, gibbs_constant_check, spectral_data

COMMANDS = ("pressure", "escape", "dimension", "oracle")
PRESETS = {"cantor": cantor_map, "doubling": doubling_map, "quadratic_toy": quadratic_toy_map}
CENTER_DIGITS = 64


class Experiment:
    """Parsed experiment configuration.

    Config keys: ``system`` (``{"subshift": ...}`` or ``{"map": ...}``),
    ``potential``, ``hole`` and ``run`` (per-command options).
    """

    def __init__(self, config: dict, depth: int | None = None, seed: int | None = None):
        if not isinstance(config, dict):
            raise ConfigError("config must be a JSON object")
        self.raw = config
        self.depth = depth
        self.map = None
        system = config.get("system")
        if not isinstance(system, dict) or len(system) != 1:
            raise ConfigError("config needs exactly one system: {'subshift': ...} or {'map': ...}")
        try:
            if "subshift" in system:
                spec = system["subshift"]
                self.subshift = (Subshift.golden_mean() if spec == "golden_mean"
                                 else Subshift.from_json(spec))
            elif "map" in system:
                spec = system["map"]
                if isinstance(spec, str) or "preset" in spec:
                    name = spec if isinstance(spec, str) else spec["preset"]
                    if name not in PRESETS:
                        raise ConfigError(f"unknown map preset {name!r}")
                    self.map = PRESETS[name]()
                else:
                    self.map = MarkovIntervalMap.from_json(spec)
                self.subshift = self.map.subshift
            else:
                raise ConfigError(f"unknown system kind {next(iter(system))!r}")
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"invalid system: {exc}") from exc
        self.run = config.get("run", {})
        if not isinstance(self.run, dict):
            raise ConfigError("'run' must be an object of per-command options")
        self.seed = seed if seed is not None else int(self.options("oracle").get("seed", 0))

    def options(self, command: str) -> dict:
        opts = self.run.get(command, {})
        if not isinstance(opts, dict):
            raise ConfigError(f"options for {command!r} must be an object")
        return opts

    def potential(self) -> Potential:
        spec = self.raw.get("potential", {"constant": 0.0})
        s = self.subshift
        try:
            if "bowen" in spec:
                if self.map is None:
                    raise ConfigError("a Bowen potential needs a map system")
                base = log_derivative_potential(self.map, int(spec.get("depth", self.depth or 1)))
                t = spec.get("t")
                if t is None:
                    t = bowen_root(self.map, base=base)
                return base.scaled(-float(t))
            if "constant" in spec:
                return Potential.constant(s, float(spec["constant"]))
            if "symbol_values" in spec:
                return Potential.from_symbol_values(s, spec["symbol_values"])
            if "values" in spec:
                return Potential.from_json(s, spec)
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"invalid potential: {exc}") from exc
        raise ConfigError("potential needs 'constant', 'symbol_values', 'values' or 'bowen'")

    def center(self, digits: int) -> SymbolicPoint:
        spec = self.hole_spec().get("center")
        if spec is None:
            raise ConfigError("hole needs a 'center'")
        s = self.subshift
        try:
            if "periodic" in spec:
                return SymbolicPoint.periodic(s.parse_word(spec["periodic"]),
                                              s.parse_word(spec.get("preperiod", "")))
            if "prefix" in spec:
                return SymbolicPoint.from_prefix(s.parse_word(spec["prefix"]))
            if "champernowne" in spec:
                return SymbolicPoint.from_prefix(champernowne_digits(int(spec["champernowne"])))
            if "point" in spec:
                if self.map is None:
                    raise ConfigError("a real centre point needs a map system")
                return encode_point(self.map, self.point(), digits)
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"invalid centre: {exc}") from exc
        raise ConfigError("centre needs 'periodic', 'prefix', 'champernowne' or 'point'")

    def point(self):
        raw = self.hole_spec()["center"]["point"]
        return Fraction(raw) if isinstance(raw, str) else raw

    def hole_spec(self) -> dict:
        spec = self.raw.get("hole")
        if not isinstance(spec, dict):
            raise ConfigError("config has no 'hole' section")
        return spec

    def n_range(self) -> list:
        """Hole indices from ``n_range: [start, stop]`` (inclusive) or an
        explicit ``n_values`` list."""
        spec = self.hole_spec()
        try:
            if "n_values" in spec:
                ns = [int(n) for n in spec["n_values"]]
            elif "n_range" in spec:
                raw = spec["n_range"]
                if not isinstance(raw, list) or len(raw) != 2:
                    raise ConfigError("n_range must be [start, stop]")
                ns = list(range(int(raw[0]), int(raw[1]) + 1))
            else:
                raise ConfigError("hole needs 'n_range' or 'n_values'")
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid hole indices: {exc}") from exc
        if not ns:
            raise ConfigError("empty n_range")
        if min(ns) < 1:
            raise ConfigError("hole indices start at 1")
        return ns

    def kind(self) -> str:
        kind = self.hole_spec().get("kind", "cylinder")
        if kind not in ("cylinder", "ball"):
            raise ConfigError(f"unknown hole kind {kind!r}")
        return kind

    def cylinder_family(self):
        ns = self.n_range()
        z = self.center(max(ns) + CENTER_DIGITS)
        if not z.is_admissible(self.subshift):
            raise ConfigError("centre point is not admissible")
        return standard_hole_family(self.subshift, z, max(ns), min(ns)), ns

    def ball_families(self, potential: Potential | None):
        """Inner and outer cylinder families of the balls ``B(z, eps)``."""
        if self.map is None:
            raise ConfigError("ball holes need a map system")
        spec = self.hole_spec()
        eps = spec.get("epsilons")
        if not eps:
            raise ConfigError("ball holes need a non-empty 'epsilons' list")
        eta = float(spec.get("eta", 0.1))
        x = self.point()
        z = encode_point(self.map, x, CENTER_DIGITS)
        balls = [ball_to_cylinders(self.map, x, float(e), eta, potential) for e in eps]
        ns = list(range(1, len(balls) + 1))
        inner = hole_family_from_words(self.subshift, z, [b.inner for b in balls], ns, "ball-inner")
        outer = hole_family_from_words(self.subshift, z, [b.outer for b in balls], ns, "ball-outer")
        return balls, inner, outer, ns


def config_hash(config: dict) -> str:
    return hashlib.sha256(json.dumps(config, sort_keys=True).encode()).hexdigest()


def _tolerances() -> dict:
    return {"power_iteration_tol": _linalg.TOL, "power_iteration_max_iter": _linalg.MAX_ITER,
            "bowen_root_tol": ROOT_TOL, "bisection_width": BISECT_WIDTH,
            "state_cap": STATE_CAP, "enumeration_cap": ENUMERATION_CAP}


def _workers() -> int:
    raw = os.environ.get("ESCRATE_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"ESCRATE_THREADS must be an integer, got {raw!r}") from None


def _clean(obj):
    """JSON-safe copy: non-finite floats become strings."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else str(obj)
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item"):
        return _clean(obj.item())
    return obj


def _csv_to_records(text: str) -> list:
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    head = lines[0].split(",")
    out = []
    for ln in lines[1:]:
        rec = {}
        for k, v in zip(head, ln.split(",")):
            try:
                rec[k] = int(v)
            except ValueError:
                try:
                    rec[k] = float(v)
                except ValueError:
                    rec[k] = v
        out.append(rec)
    return out


def cmd_pressure(exp: Experiment) -> tuple:
    s = exp.subshift
    phi = exp.potential()
    opts = exp.options("pressure")
    depth = max(exp.depth or 1, phi.depth)
    data = spectral_data(s, phi, depth)
    n_max = int(opts.get("gibbs_n_max", 8))
    c, per = gibbs_constant_check(s, phi, n_max, per_depth=True)
    table = "depth,gibbs_constant\n" + "".join(
        f"{n},{float(v)!r}\n" for n, v in enumerate(per, start=1))
    summary = {"lambda": data.lambda_, "pressure": data.pressure, "depth": depth,
               "gibbs_constant": c, "iterations": data.iterations, "residual": data.residual}
    return table, summary


def _escape_rows(exp, phi, family, ns, workers):
    sweep = escape_sweep(exp.subshift, phi, family, ns, workers=workers)
    return sweep.rows, sweep.report


def cmd_escape(exp: Experiment) -> tuple:
    phi = exp.potential()
    workers = _workers()
    if exp.kind() == "cylinder":
        family, ns = exp.cylinder_family()
        rows, report = _escape_rows(exp, phi, family, ns, workers)
        return write_escape_csv(rows), report
    balls, inner, outer, ns = exp.ball_families(phi)
    rin, rep_in = _escape_rows(exp, phi, inner, ns, workers)
    rout, rep_out = _escape_rows(exp, phi, outer, ns, workers)
    text_in = write_escape_csv(rin).splitlines()
    text_out = write_escape_csv(rout).splitlines()
    lines = ["family,epsilon,depth,eta," + text_in[0]]
    for fam, text in (("inner", text_in), ("outer", text_out)):
        for b, ln in zip(balls, text[1:]):
            lines.append(f"{fam},{b.epsilon!r},{b.depth},{b.eta!r},{ln}")
    brackets = []
    for b, ri, ro in zip(balls, rin, rout):
        # escape rate and measure are both monotone in the hole
        low = ri.escape_rate / ro.mu_hole if ro.mu_hole > 0 else math.nan
        high = ro.escape_rate / ri.mu_hole if ri.mu_hole > 0 else math.inf
        brackets.append({"epsilon": b.epsilon, "depth": b.depth, "eta": b.eta,
                         "low": low, "high": high,
                         "one_minus_eta": 1 - b.eta, "one_plus_eta": 1 + b.eta})
    summary = {"inner": rep_in, "outer": rep_out, "predicted": rep_in["predicted"],
               "brackets": brackets}
    return "\n".join(lines) + "\n", summary


def cmd_dimension(exp: Experiment) -> tuple:
    if exp.map is None:
        raise ConfigError("the dimension command needs a map system")
    opts = exp.options("dimension")
    pdepth = opts.get("potential_depth", exp.depth)
    workers = _workers()
    if "hole" not in exp.raw:
        base = log_derivative_potential(exp.map, int(pdepth or 1))
        s = bowen_root(exp.map, base=base)
        return f"s,oscillation_diagnostic\n{s!r},{base.oscillation!r}\n", {"s": s}
    if exp.kind() == "cylinder":
        family, ns = exp.cylinder_family()
        rows = dimension_sweep(exp.map, family, ns, pdepth, workers)
        last = rows[-1]
        summary = {"s": last.s, "last_n": last.n, "last_s_n": last.s_n, "last_ratio": last.ratio,
                   "predicted": last.predicted, "deviation": last.deviation,
                   "lyapunov": last.lyapunov, "oscillation": last.oscillation,
                   "s_n_monotone": all(b.s_n >= a.s_n - 1e-10 for a, b in zip(rows, rows[1:]))}
        return write_dimension_csv(rows), summary
    balls, inner, outer, ns = exp.ball_families(None)
    rin = dimension_sweep(exp.map, inner, ns, pdepth, workers)
    rout = dimension_sweep(exp.map, outer, ns, pdepth, workers)
    t_in = write_dimension_csv(rin).splitlines()
    t_out = write_dimension_csv(rout).splitlines()
    lines = ["family,epsilon,depth,eta," + t_in[0]]
    for fam, text in (("inner", t_in), ("outer", t_out)):
        for b, ln in zip(balls, text[1:]):
            lines.append(f"{fam},{b.epsilon!r},{b.depth},{b.eta!r},{ln}")
    brackets = []
    for b, ri, ro in zip(balls, rin, rout):
        low = (ri.s - ri.s_n) / ro.mu_hole if ro.mu_hole > 0 else math.nan
        high = (ro.s - ro.s_n) / ri.mu_hole if ri.mu_hole > 0 else math.inf
        brackets.append({"epsilon": b.epsilon, "depth": b.depth, "eta": b.eta,
                         "low": low, "high": high,
                         "one_minus_eta": 1 - b.eta, "one_plus_eta": 1 + b.eta})
    summary = {"s": rin[-1].s, "predicted": rin[-1].predicted, "brackets": brackets}
    return "\n".join(lines) + "\n", summary


def _oracle_hole(exp: Experiment):
    spec = exp.hole_spec()
    if "words" in spec:
        try:
            return [exp.subshift.parse_word(w) for w in spec["words"]]
        except ValueError as exc:
            raise ConfigError(f"invalid hole word: {exc}") from exc
    ns = exp.n_range()
    n = int(exp.options("oracle").get("n", max(ns)))
    return [exp.center(n).digits(n)]


def cmd_oracle(exp: Experiment) -> tuple:
    s = exp.subshift
    phi = exp.potential()
    hole = _oracle_hole(exp)
    opts = exp.options("oracle")
    k_max = int(opts.get("k_max", 12))
    samples = int(opts.get("samples", 100_000))
    tail = float(opts.get("tail_fraction", 0.5))
    curves = []
    summary = {"hole": [s.format_word(w) for w in hole], "k_max": k_max,
               "seed": exp.seed, "samples": samples, "warnings": []}
    exhaustive = None
    try:
        exhaustive = exhaustive_survival(s, phi, hole, k_max)
        curves.append(exhaustive)
    except EnumerationCapExceeded as exc:
        msg = f"enumeration too large, Monte-Carlo only: {exc}"
        warnings.warn(msg, RuntimeWarning)
        summary["warnings"].append(msg)
        summary["mc_only"] = True
    mc = monte_carlo_survival(s, phi, hole, k_max, samples, exp.seed)
    curves.append(mc)
    lines = ["method,k,survival,stderr"]
    for c in curves:
        for i, k in enumerate(c.k_values):
            se = "" if c.stderr is None else repr(float(c.stderr[i]))
            lines.append(f"{c.method},{int(k)},{float(c.survival[i])!r},{se}")
    best = exhaustive if exhaustive is not None else mc
    try:
        rate, err = fit_escape_rate(best, tail)
        summary["fit"] = {"method": best.method, "rate": rate, "stderr": err,
                          "tail_fraction": tail}
    except EscrateError as exc:
        summary["fit"] = {"method": best.method, "error": str(exc)}
    if exhaustive is not None and opts.get("kac", True):
        try:
            kac = kac_check(s, phi, hole, int(opts.get("kac_k_max", 2 * k_max)))
            summary["kac"] = {"lhs_low": kac.lhs_low, "lhs_high": kac.lhs_high,
                              "rhs": kac.rhs, "gap": kac.gap, "k_max": kac.k_max}
        except EnumerationCapExceeded as exc:
            summary["kac"] = {"error": str(exc)}
    return "\n".join(lines) + "\n", summary


HANDLERS = {"pressure": cmd_pressure, "escape": cmd_escape,
            "dimension": cmd_dimension, "oracle": cmd_oracle}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="escrate", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="experiment JSON file")
    p.add_argument("--out", default=None, help="output directory (default: config 'output')")
    p.add_argument("--depth", type=int, default=None, help="matrix / potential depth")
    p.add_argument("--seed", type=int, default=None, help="Monte-Carlo seed")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def _fail(code: int, exc: BaseException) -> int:
    err = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    print(json.dumps(err), file=sys.stderr)
    return code


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        with open(args.config) as fh:
            config = json.load(fh)
        exp = Experiment(config, depth=args.depth, seed=args.seed)
        out = args.out or (config.get("output", {}) or {}).get("directory")
    except ConfigError as exc:
        return _fail(2, exc)
    except (OSError, json.JSONDecodeError, ValueError, KeyError, TypeError) as exc:
        return _fail(2, exc)
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            table, summary = HANDLERS[args.command](exp)
    except ConfigError as exc:
        return _fail(2, exc)
    except (EscrateError, ArithmeticError) as exc:
        return _fail(3, exc)
    except (ValueError, KeyError, TypeError) as exc:
        return _fail(2, exc)
    for w in caught:
        print(json.dumps({"warning": str(w.message)}), file=sys.stderr)
    summary = {"command": args.command, "config_hash": config_hash(config),
               "version": __version__, "tolerances": _tolerances(), "seed": exp.seed,
               **summary}
    summary = _clean(summary)
    body = (json.dumps(_clean(_csv_to_records(table)), indent=2, sort_keys=True) + "\n"
            if args.format == "json" else table)
    text = json.dumps(summary, indent=2, sort_keys=True) + "\n"
    if out:
        path = Path(out)
        path.mkdir(parents=True, exist_ok=True)
        (path / f"{args.command}.{args.format}").write_text(body)
        (path / f"{args.command}_summary.json").write_text(text)
    sys.stdout.write(text)
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
