"""Command line interface: ``spherepack <command> [options]``.

Every tabular command writes CSV (to ``--out`` or stdout) with a fixed column
order and 12 significant digits; ``verify`` writes a JSON summary. Errors are
reported on stderr as JSON ``{"error": CODE, "message": ...}``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np

from .bound import nagaoka_exact_errors, sp_bound
from .channel import PRESETS, SymmetricCqChannel, preset
from .divergence import capacity, r_infinity
from .errors import DomainError, SpherePackError, ValidationError
from .exponent import esp_point, saddle_fixed_point, sigma_star
from .oracle import min_type1_product
from .qcore import trace_distance
from .verification import CHECKS, preset_label, run_suite, summarize

EXIT_OK, EXIT_FAILED, EXIT_ERROR = 0, 1, 2


# ---------------------------------------------------------------- channel specs

def _complex_matrix(data, dim: int, key: str) -> np.ndarray:
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{key}: entries must be [re, im] number pairs",
                              [("SPEC_SCHEMA", f"{key}: {exc}")]) from None
    if arr.shape != (dim, dim, 2):
        raise ValidationError(f"{key}: expected shape ({dim}, {dim}, 2), got {arr.shape}",
                              [("SPEC_SCHEMA", f"{key} shape {arr.shape}")])
    return arr[..., 0] + 1j * arr[..., 1]


def channel_from_spec(spec: dict) -> SymmetricCqChannel:
    """Build a channel from a parsed channel-spec object.

    Either ``{"preset": name, "params": {...}}`` or
    ``{"dim": d, "alphabet": K, "W1": [[[re, im], ...], ...], "V": [...]}``.
    """
    if not isinstance(spec, dict):
        raise ValidationError("channel spec must be a JSON object", [("SPEC_SCHEMA", type(spec).__name__)])
    if "preset" in spec:
        params = spec.get("params", {}) or {}
        if not isinstance(params, dict):
            raise ValidationError("params must be an object", [("SPEC_SCHEMA", "params")])
        return preset(spec["preset"], params)
    missing = [k for k in ("dim", "alphabet", "W1", "V") if k not in spec]
    if missing:
        raise ValidationError(f"channel spec missing keys {missing}", [("SPEC_SCHEMA", ",".join(missing))])
    dim, k = spec["dim"], spec["alphabet"]
    if not (isinstance(dim, int) and dim > 0 and isinstance(k, int) and k > 0):
        raise ValidationError("dim and alphabet must be positive integers", [("SPEC_SCHEMA", "dim/alphabet")])
    w1 = _complex_matrix(spec["W1"], dim, "W1")
    v = _complex_matrix(spec["V"], dim, "V")
    return SymmetricCqChannel(w1, v, k, name=spec.get("name"))


def load_channel_spec(path: str) -> SymmetricCqChannel:
    try:
        with open(path, encoding="utf-8") as fh:
            spec = json.load(fh)
    except OSError as exc:
        raise SpherePackError(f"cannot read {path}: {exc.strerror}", code="SPEC_UNREADABLE") from None
    except json.JSONDecodeError as exc:
        raise SpherePackError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})",
                              code="SPEC_MALFORMED") from None
    return channel_from_spec(spec)


# ---------------------------------------------------------------- csv output

def fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    if value == 0.0:
        return "0"
    return format(value, ".12g")


def render_csv(rows: Iterable[Sequence], schema: Sequence[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(schema)
    for row in rows:
        if len(row) != len(schema):
            raise SpherePackError(f"row has {len(row)} fields, schema has {len(schema)}", code="ROW_SCHEMA")
        writer.writerow([fmt(v) if not isinstance(v, str) else v for v in row])
    return buf.getvalue()


def atomic_write(path: str, text: str) -> None:
    """Write via a temporary file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    try:
        fd, tmp = tempfile.mkstemp(prefix=".spherepack-", dir=directory)
    except OSError as exc:
        raise SpherePackError(f"cannot write to {directory}: {exc.strerror}", code="OUTPUT_UNWRITABLE") from None
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(rows: Iterable[Sequence], schema: Sequence[str], path: str | None) -> None:
    text = render_csv(rows, schema)
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        atomic_write(path, text)


# ---------------------------------------------------------------- configuration

@dataclass
class RunConfig:
    rates: list[float] = field(default_factory=list)
    ns: list[int] = field(default_factory=list)
    gamma: float = 1.0
    xi: float | None = None
    tol_fixed_point: float = 1e-12
    tol_search: float = 1e-12
    out: str | None = None
    jobs: int = 1

    def validate(self, ch: SymmetricCqChannel | None = None):
        bad = []
        for name in ("tol_fixed_point", "tol_search", "gamma"):
            if not getattr(self, name) > 0:
                bad.append(("CONFIG_RANGE", f"{name} must be positive"))
        if self.xi is not None and not self.xi > 0:
            bad.append(("CONFIG_RANGE", "xi must be positive"))
        if self.jobs < 1:
            bad.append(("CONFIG_RANGE", "jobs must be at least 1"))
        if any(n < 1 for n in self.ns):
            bad.append(("CONFIG_RANGE", "blocklengths must be at least 1"))
        if ch is not None and self.rates:
            cap = capacity(ch)
            if any(not 0.0 <= r < cap for r in self.rates):
                bad.append(("RATE_RANGE", f"rates must lie in [0, C) = [0, {cap:.12g})"))
        if bad:
            raise ValidationError("invalid configuration: " + "; ".join(m for _, m in bad), bad)
        return self


def parse_grid(text: str, kind: Callable = float) -> list:
    parts = text.split(":")
    if len(parts) != 3:
        raise ValidationError(f"grid '{text}' must look like a:b:steps", [("GRID_SYNTAX", text)])
    try:
        a, b, steps = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ValidationError(f"grid '{text}' must look like a:b:steps", [("GRID_SYNTAX", text)]) from None
    if steps < 1:
        raise ValidationError("grid needs at least one step", [("GRID_SYNTAX", text)])
    values = np.linspace(a, b, steps)
    if kind is int:
        out = []
        for v in values:
            n = int(round(v))
            if n not in out:
                out.append(n)
        return out
    return [float(v) for v in values]


def parse_params(items: Sequence[str] | None) -> dict:
    params = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ValidationError(f"--param expects k=v, got '{item}'", [("PARAM_SYNTAX", item)])
        try:
            params[key.strip()] = float(value)
        except ValueError:
            raise ValidationError(f"--param value '{value}' is not a number", [("PARAM_SYNTAX", item)]) from None
    return params


CONFIG_KEYS = {"rate", "rates", "n", "n_range", "gamma", "xi", "tol_fixed_point", "tol_search",
               "out", "jobs", "channel", "preset", "params"}


def load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise SpherePackError(f"cannot read {path}: {exc.strerror}", code="CONFIG_UNREADABLE") from None
    except json.JSONDecodeError as exc:
        raise SpherePackError(f"{path}: invalid JSON ({exc.msg})", code="CONFIG_MALFORMED") from None
    if not isinstance(data, dict):
        raise ValidationError("config file must hold a JSON object", [("CONFIG_SCHEMA", path)])
    unknown = sorted(set(data) - CONFIG_KEYS)
    if unknown:
        raise ValidationError(f"unknown config keys {unknown}", [("CONFIG_SCHEMA", ",".join(unknown))])
    return data


def merged(args: argparse.Namespace, file_cfg: dict, key: str, default=None):
    """Flags override the config file, which overrides defaults."""
    value = getattr(args, key, None)
    if value is not None:
        return value
    return file_cfg.get(key, default)


def resolve(args: argparse.Namespace):
    file_cfg = load_config_file(getattr(args, "config", None))
    channel_path = merged(args, file_cfg, "channel")
    preset_name = merged(args, file_cfg, "preset")
    if channel_path and preset_name:
        raise ValidationError("use either --channel or --preset", [("CHANNEL_SOURCE", "both given")])
    if channel_path:
        ch = load_channel_spec(channel_path)
    elif preset_name:
        params = dict(file_cfg.get("params", {}) or {})
        params.update(parse_params(args.param))
        ch = preset(preset_name, params)
    else:
        raise ValidationError("a channel is required (--channel PATH or --preset NAME)",
                              [("CHANNEL_SOURCE", "missing")])

    rates = []
    rate = merged(args, file_cfg, "rate")
    if rate is not None:
        rates.extend(float(r) for r in (rate if isinstance(rate, list) else [rate]))
    grid = merged(args, file_cfg, "rates")
    if grid:
        rates.extend(parse_grid(grid))
    ns = []
    n = merged(args, file_cfg, "n")
    if n is not None:
        ns.extend(int(v) for v in (n if isinstance(n, list) else [n]))
    n_grid = merged(args, file_cfg, "n_range")
    if n_grid:
        ns.extend(parse_grid(n_grid, int))
    cfg = RunConfig(
        rates=rates,
        ns=ns,
        gamma=float(merged(args, file_cfg, "gamma", 1.0)),
        xi=merged(args, file_cfg, "xi"),
        tol_fixed_point=float(merged(args, file_cfg, "tol_fixed_point", 1e-12)),
        tol_search=float(merged(args, file_cfg, "tol_search", 1e-12)),
        out=merged(args, file_cfg, "out"),
        jobs=int(merged(args, file_cfg, "jobs", 1)),
    )
    return ch, cfg.validate(ch)


def _require(values, what: str):
    if not values:
        raise ValidationError(f"this command needs {what}", [("MISSING_GRID", what)])
    return values


def ordered_map(fn, items, jobs: int):
    """Evaluate ``fn`` over ``items`` with up to ``jobs`` workers, preserving order."""
    if jobs <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------- commands

CAPACITY_SCHEMA = ("C", "R_inf")
EXPONENT_SCHEMA = ("R", "E_sp", "s_star", "alpha_star")
BOUND_SCHEMA = ("R", "n", "gamma", "xi", "gamma_n", "R_n", "E_sp_R", "E_sp_Rn", "s_star_R",
                "v_min", "v_max", "t_max", "k_max", "A", "upsilon", "N1", "N2", "N3", "N0",
                "log_direct_bound", "direct_bound", "log_theorem_bound", "theorem_bound",
                "log_correction", "valid")
ORACLE_SCHEMA = ("R", "n", "gamma", "R_n", "sigma_rate", "mu", "alpha_hat", "direct_bound",
                 "log_direct_bound", "valid", "alpha_U", "beta_U", "phi", "log_delta")


def saddle_schema(dim: int) -> tuple[str, ...]:
    cols = ["R", "alpha_star", "s_star", "E_sp", "fixed_point_residual", "equalization_gap",
            "iterations", "iterate_gap"]
    for i in range(dim):
        for j in range(dim):
            cols += [f"sigma_{i + 1}{j + 1}_re", f"sigma_{i + 1}{j + 1}_im"]
    return tuple(cols)


def cmd_capacity(ch, cfg):
    return [(capacity(ch), r_infinity(ch))], CAPACITY_SCHEMA


def cmd_exponent(ch, cfg):
    rates = _require(cfg.rates, "--rate or --rates")

    def row(r):
        pt = esp_point(ch, r, cfg.tol_search)
        return (r, pt.esp, pt.s_star, 0.0 if pt.infinite else pt.alpha_star)

    return ordered_map(row, rates, cfg.jobs), EXPONENT_SCHEMA


def cmd_saddle(ch, cfg):
    rates = _require(cfg.rates, "--rate or --rates")

    def row(r):
        sp = sigma_star(ch, r)
        fp = saddle_fixed_point(ch, ch.uniform(), sp.alpha_star, np.eye(ch.dim) / ch.dim,
                                tol=cfg.tol_fixed_point)
        entries = []
        for value in sp.sigma_star.ravel():
            entries += [value.real, value.imag]
        return (r, sp.alpha_star, sp.s_star, sp.esp, sp.fixed_point_residual, sp.equalization_gap,
                fp.iterations, trace_distance(fp.sigma, sp.sigma_star), *entries)

    return ordered_map(row, rates, cfg.jobs), saddle_schema(ch.dim)


def _bound_row(rep):
    c = rep.constants
    consts = (c.v_min, c.v_max, c.t_max, c.k_max, c.a_const) if c else (math.nan,) * 5
    return (rep.R, rep.n, rep.gamma, rep.xi, rep.gamma_n, rep.R_n, rep.esp_R, rep.esp_Rn, rep.s_star_R,
            *consts, rep.upsilon, rep.N1, rep.N2, rep.N3, rep.N0, rep.log_direct_bound, rep.direct_bound,
            rep.log_theorem_bound, rep.theorem_bound, rep.log_correction, rep.valid)


def cmd_bound(ch, cfg):
    rates = _require(cfg.rates, "--rate or --rates")
    ns = _require(cfg.ns, "--n or --n-range")
    pairs = [(r, n) for r in rates for n in ns]
    rows = ordered_map(lambda rn: _bound_row(sp_bound(ch, rn[0], rn[1], cfg.gamma, cfg.xi)), pairs, cfg.jobs)
    return rows, BOUND_SCHEMA


def cmd_oracle(ch, cfg):
    """Exact minimum type-I error of ``W_1^(x)n`` vs ``sigma*^(x)n`` next to the bound.

    By symmetry every input sequence gives the same value, so the constant
    sequence is used. The state is the saddle point at ``R_n`` when that rate
    is interior, otherwise at ``R``.
    """
    rates = _require(cfg.rates, "--rate or --rates")
    ns = _require(cfg.ns, "--n or --n-range")
    rinf = r_infinity(ch)

    def row(rn):
        r, n = rn
        rep = sp_bound(ch, r, n, cfg.gamma, cfg.xi)
        interior = rinf < rep.R_n < capacity(ch)
        sigma_rate = rep.R_n if interior else r
        sigma = sigma_star(ch, sigma_rate).sigma_star
        mu = math.exp(-n * rep.R_n)
        alpha_hat = min_type1_product(ch, [1] * n, sigma, min(mu, 1.0))
        if interior:
            ng = nagaoka_exact_errors(ch, [1.0] + [0.0] * (ch.k - 1), rep.R_n, n, sigma)
            extra = (ng.alpha_u, ng.beta_u, ng.phi, ng.log_delta)
        else:
            extra = (math.nan,) * 4
        return (r, n, cfg.gamma, rep.R_n, sigma_rate, mu, alpha_hat, rep.direct_bound,
                rep.log_direct_bound, rep.valid, *extra)

    pairs = [(r, n) for r in rates for n in ns]
    return ordered_map(row, pairs, cfg.jobs), ORACLE_SCHEMA


def cmd_verify(args) -> int:
    if args.channel or args.preset:
        ch, _ = resolve(args)
        label = args.preset and preset_label(args.preset, parse_params(args.param)) or args.channel
        channels = [(label, ch)]
    else:
        channels = None
    checks = args.check or None
    if checks:
        unknown = [c for c in checks if c not in CHECKS]
        if unknown:
            raise ValidationError(f"unknown checks {unknown}", [("UNKNOWN_CHECK", ",".join(unknown))])
    summary = summarize(run_suite(channels, checks))
    text = json.dumps(summary, indent=2, sort_keys=True) + "\n"
    if args.out and args.out != "-":
        atomic_write(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if summary["failed"] == 0 else EXIT_FAILED


COMMANDS = {
    "capacity": (cmd_capacity, "capacity C and the rate R_inf"),
    "exponent": (cmd_exponent, "sphere-packing exponent over a rate grid"),
    "saddle": (cmd_saddle, "saddle-point state and its certificates"),
    "bound": (cmd_bound, "finite-blocklength bound report over rate and n grids"),
    "oracle": (cmd_oracle, "exact minimum type-I error next to the bound (small n)"),
}


def _add_common(p: argparse.ArgumentParser):
    src = p.add_argument_group("channel")
    src.add_argument("--channel", metavar="PATH", help="JSON channel spec")
    src.add_argument("--preset", choices=PRESETS, help="built-in channel")
    src.add_argument("--param", action="append", metavar="K=V", help="preset parameter (repeatable)")
    p.add_argument("--config", metavar="PATH", help="JSON config; flags take precedence")
    p.add_argument("--out", metavar="PATH", help="output file (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spherepack", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        p.add_argument("--rate", type=float, nargs="+", help="rate(s) in nats")
        p.add_argument("--rates", metavar="A:B:STEPS", help="evenly spaced rate grid")
        p.add_argument("--n", type=int, nargs="+", help="blocklength(s)")
        p.add_argument("--n-range", dest="n_range", metavar="A:B:STEPS", help="evenly spaced blocklengths")
        p.add_argument("--gamma", type=float, help="back-off parameter gamma > 0 (default 1)")
        p.add_argument("--xi", type=float, help="rate margin xi (default (R - R_inf)/2, or R/2 if R_inf = 0)")
        p.add_argument("--tol-fixed-point", dest="tol_fixed_point", type=float)
        p.add_argument("--tol-search", dest="tol_search", type=float)
        p.add_argument("--jobs", type=int, help="parallel grid evaluation")
    p = sub.add_parser("verify", help="run the invariant suite (nonzero exit on failure)")
    _add_common(p)
    p.add_argument("--check", action="append", choices=sorted(CHECKS), help="run only these checks")
    return parser


def _report_error(exc: SpherePackError) -> int:
    payload = {"error": exc.code or "ERROR", "message": str(exc)}
    violations = getattr(exc, "violations", None)
    if violations:
        payload["violations"] = [{"code": c, "message": m} for c, m in violations]
    sys.stderr.write(json.dumps(payload) + "\n")
    return EXIT_ERROR


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            return cmd_verify(args)
        ch, cfg = resolve(args)
        fn, _ = COMMANDS[args.command]
        rows, schema = fn(ch, cfg)
        write_csv(rows, schema, cfg.out)
        return EXIT_OK
    except SpherePackError as exc:
        return _report_error(exc)


if __name__ == "__main__":
    sys.exit(main())
