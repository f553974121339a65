"""Command-line front end: ``stats``, ``scan``, ``cutoff`` and ``validate``.

Exit codes: 0 success, 1 usage or configuration error, 2 validity failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelParams
from .errors import DegenerateBranchError, DomainError, TruncationError
from .keyrate import ProtocolParams
from .numerics import DEFAULT_QUAD_POINTS, QuadratureSpec, poisson_pmf
from .optimizer import NoKeyError, SearchDomain, cutoff_distance, scan
from .photon_stats import (
    DEFAULT_N_MAX,
    SourceConfig,
    branch_vectors,
    conditional_distributions,
    estimation_certificate,
    low_order_closed_forms,
    noclick_prob,
    noclick_total,
    total_prob,
)

EXIT_OK, EXIT_USAGE, EXIT_INVALID = 0, 1, 2

SCAN_COLUMNS = [
    "distance_km", "eta", "mu1_opt", "mu2_opt", "R_passive", "R_active",
    "Q_total", "E_total", "Q_noclick", "E_noclick",
    "Y1_lower", "e1_upper", "Y0_lower", "Y0_upper",
]
STATS_COLUMNS = ["n", "p_total", "p_noclick", "p_click", "r_click", "r_noclick", "poisson_same_mean_as_r_click"]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    channel: ChannelParams = field(default_factory=ChannelParams)
    protocol: ProtocolParams = field(default_factory=ProtocolParams)
    source: SourceConfig = field(default_factory=lambda: SourceConfig(1e-4, 0.55, 0.5))
    domain: SearchDomain = field(default_factory=SearchDomain)
    n_max: int = DEFAULT_N_MAX
    quad_points: int = DEFAULT_QUAD_POINTS
    output: str | None = None


# config key -> (section, field name, type)
_KEYS = {
    "alpha": ("channel", "alpha_db_per_km", float),
    "alpha_db_per_km": ("channel", "alpha_db_per_km", float),
    "eta_det": ("channel", "eta_det", float),
    "ed": ("channel", "e_d", float),
    "e_d": ("channel", "e_d", float),
    "e0": ("channel", "e_0", float),
    "e_0": ("channel", "e_0", float),
    "y0": ("channel", "y_0", float),
    "y_0": ("channel", "y_0", float),
    "q": ("protocol", "q_eff", float),
    "q_eff": ("protocol", "q_eff", float),
    "f_ec": ("protocol", "f_ec", float),
    "mu1": ("source", "mu1", float),
    "mu2": ("source", "mu2", float),
    "t": ("source", "t", float),
    "mu1_min": ("domain", "mu1_min", float),
    "mu1_max": ("domain", "mu1_max", float),
    "mu2_min": ("domain", "mu2_min", float),
    "mu2_max": ("domain", "mu2_max", float),
    "grid": ("domain", "grid", int),
    "optimize_t": ("domain", "optimize_t", "bool"),
    "n_max": ("run", "n_max", int),
    "nmax": ("run", "n_max", int),
    "quad_points": ("run", "quad_points", int),
    "output": ("run", "output", str),
}


def _convert(raw: str, kind, key: str, lineno: int):
    if kind == "bool":
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"line {lineno}: {key} expects a boolean, got {raw!r}")
    try:
        value = kind(raw)
    except ValueError:
        raise ConfigError(f"line {lineno}: {key} expects {kind.__name__}, got {raw!r}") from None
    if kind is float and not math.isfinite(value):
        raise ConfigError(f"line {lineno}: {key} must be finite")
    return value


def parse_config(text: str) -> RunConfig:
    """Parse ``key = value`` lines (``#`` starts a comment); unset keys keep the GYS defaults."""
    sections: dict[str, dict] = {"channel": {}, "protocol": {}, "source": {}, "domain": {}, "run": {}}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if not raw:
            raise ConfigError(f"line {lineno}: missing value for {key!r}")
        section, name, kind = _KEYS[key]
        if name in sections[section]:
            raise ConfigError(f"line {lineno}: {key!r} sets {name} a second time")
        sections[section][name] = _convert(raw, kind, key, lineno)

    src = sections["source"]
    try:
        channel = ChannelParams(**sections["channel"])
        protocol = ProtocolParams(**sections["protocol"])
        source = SourceConfig(src.get("mu1", 1e-4), src.get("mu2", 0.55), src.get("t", 0.5))
        domain = SearchDomain(**{"t": source.t, **sections["domain"]})
        run = sections["run"]
        cfg = RunConfig(channel, protocol, source, domain, **run)
        QuadratureSpec(cfg.quad_points)
        if cfg.n_max < 2:
            raise DomainError(f"n_max must be at least 2, got {cfg.n_max}")
    except DomainError as exc:
        raise ConfigError(f"invalid configuration: {exc}") from None
    return cfg


def load_config(path: str | None) -> RunConfig:
    if path is None:
        return parse_config("")
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.10g}"


def _write_csv(rows: list[list], header: list[str], path: str | None, stdout) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    if path is None:
        stdout.write(buf.getvalue())
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".scan-", suffix=".csv")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def stats_rows(cfg: SourceConfig, n_max: int, quad: QuadratureSpec) -> tuple[list[list], bool]:
    """Rows of the ``stats`` table and whether the estimation certificate holds."""
    if cfg.mu1 + cfg.mu2 == 0.0:
        return [[0, 1.0, 1.0, 0.0, None, 1.0, None]], False
    work = max(n_max, DEFAULT_N_MAX)
    total, noclick, click = branch_vectors(cfg, work, quad)
    try:
        r_click, r_noclick = conditional_distributions(cfg, work, quad)
        rc, rn = r_click.probs, r_noclick.probs
        mean_c = r_click.mean()
    except DegenerateBranchError:
        f = noclick_total(cfg)
        rc = None
        rn = noclick / f if f > 0 else None
        mean_c = None
    rows = []
    for n in range(n_max + 1):
        rows.append([
            n, total[n], noclick[n], click[n],
            None if rc is None else rc[n],
            None if rn is None else rn[n],
            None if mean_c is None else poisson_pmf(mean_c, n),
        ])
    return rows, estimation_certificate(cfg, quad).valid


def validate_report(cfg: RunConfig) -> tuple[list[str], bool]:
    lines: list[str] = []
    ok_all = True

    def record(name: str, ok: bool, detail: str) -> None:
        nonlocal ok_all
        ok_all &= ok
        lines.append(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")

    quad = QuadratureSpec(cfg.quad_points)
    record(
        "quadrature-degree",
        quad.exact_degree() >= cfg.n_max,
        f"points={quad.points} exact_degree={quad.exact_degree()} n_max={cfg.n_max}",
    )
    src = cfg.source
    cert = estimation_certificate(src, quad)
    record(
        "certificate",
        cert.valid,
        f"d1={cert.d1:.6e} d0={cert.d0:.6e} de={cert.de:.6e} y0_coeff_sign={cert.y0_coeff_sign} "
        f"ratios_ok={cert.ratios_ok}",
    )
    try:
        total, noclick, click = branch_vectors(src, cfg.n_max, quad)
        f = noclick_total(src)
        res_total = abs(1.0 - math.fsum(total))
        res_noclick = abs(f - math.fsum(noclick))
        res_branch = abs(1.0 - math.fsum(click) - math.fsum(noclick))
        worst = max(res_total, res_noclick, res_branch)
        record(
            "normalization",
            worst <= 1e-10,
            f"total={res_total:.3e} noclick_vs_F={res_noclick:.3e} branches={res_branch:.3e}",
        )
    except (TruncationError, ArithmeticError) as exc:
        record("normalization", False, str(exc))
    low = low_order_closed_forms(src)
    quad_vals = [noclick_prob(src, n, quad) for n in range(3)] + [total_prob(src, n, quad) for n in range(3)]
    closed = list(low.noclick) + list(low.total)
    dev = max(abs(a - b) / abs(b) if b else abs(a) for a, b in zip(quad_vals, closed))
    record("closed-form-vs-quadrature", dev <= 1e-10, f"max_rel_dev={dev:.3e}")
    return lines, ok_all


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="passive-decoy", description="Passive decoy-state QKD from interfering coherent pulses.")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    s = sub.add_parser("stats", help="photon-number statistics of mode a as CSV")
    s.add_argument("--mu1", type=float, default=1.0)
    s.add_argument("--mu2", type=float, default=1.0)
    s.add_argument("--t", type=float, default=0.5)
    s.add_argument("--nmax", type=int, default=10)
    s.add_argument("--quad-points", type=int, default=DEFAULT_QUAD_POINTS)
    s.set_defaults(usage=s.format_usage())

    s = sub.add_parser("scan", help="key rate versus distance as CSV")
    s.add_argument("--config")
    s.add_argument("--lmin", type=float, default=0.0)
    s.add_argument("--lmax", type=float, default=150.0)
    s.add_argument("--step", type=float, default=1.0)
    s.add_argument("--mode", choices=["both", "passive", "active"], default="both")
    s.add_argument("--output", "-o", help="CSV path (default: config 'output' or stdout)")
    s.add_argument("--fixed", action="store_true", help="use the config mu1/mu2 at every distance")
    s.add_argument("--jobs", type=int, default=1)

    s = sub.add_parser("cutoff", help="largest distance with positive optimized key rate")
    s.add_argument("--config")
    s.add_argument("--mode", choices=["passive", "active"], default="passive")

    s = sub.add_parser("validate", help="certificate and numerical checks at the configured source")
    s.add_argument("--config")
    return p


def _cmd_stats(args, stdout, stderr) -> int:
    try:
        cfg = SourceConfig(args.mu1, args.mu2, args.t)
        quad = QuadratureSpec(args.quad_points)
        if args.nmax < 0:
            raise DomainError("--nmax must be non-negative")
    except DomainError as exc:
        stderr.write(args.usage)
        stderr.write(f"passive-decoy stats: {exc}\n")
        return EXIT_USAGE
    rows, valid = stats_rows(cfg, args.nmax, quad)
    _write_csv(rows, STATS_COLUMNS, None, stdout)
    if not valid:
        stderr.write("estimation certificate fails for this source (statistics printed anyway)\n")
        return EXIT_INVALID
    return EXIT_OK


def _scan_table(rows) -> list[list]:
    table = []
    for r in rows:
        pt = r.passive.point if r.passive is not None else None
        obs = pt.observed if pt is not None else None
        b = pt.bounds if pt is not None else None
        table.append([
            r.distance_km, r.eta,
            None if r.passive is None else r.passive.mu1,
            None if r.passive is None else r.passive.mu2,
            r.r_passive, r.r_active,
            obs and obs.q_total, obs and obs.e_total, obs and obs.q_noclick, obs and obs.e_noclick,
            b and b.y1_lower, b and b.e1_upper, b and b.y0_lower, b and b.y0_upper,
        ])
    return table


def _cmd_scan(args, stdout, stderr) -> int:
    cfg = load_config(args.config)
    try:
        rows = scan(
            cfg.channel, cfg.protocol, args.lmin, args.lmax, args.step, args.mode, cfg.domain,
            fixed=cfg.source if args.fixed else None, jobs=args.jobs,
        )
    except DomainError as exc:
        stderr.write(f"passive-decoy scan: {exc}\n")
        return EXIT_USAGE
    _write_csv(_scan_table(rows), SCAN_COLUMNS, args.output or cfg.output, stdout)
    return EXIT_OK


def _cmd_cutoff(args, stdout, stderr) -> int:
    cfg = load_config(args.config)
    try:
        value = cutoff_distance(cfg.channel, cfg.protocol, args.mode, cfg.domain)
    except NoKeyError as exc:
        stderr.write(f"passive-decoy cutoff: {exc}\n")
        return EXIT_INVALID
    stdout.write(f"{args.mode} cutoff_km={value:.2f}\n")
    return EXIT_OK


def _cmd_validate(args, stdout, stderr) -> int:
    cfg = load_config(args.config)
    lines, ok = validate_report(cfg)
    stdout.write("\n".join(lines) + "\n")
    stdout.write(("PASS" if ok else "FAIL") + "\n")
    return EXIT_OK if ok else EXIT_INVALID


def main(argv: list[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    handlers = {"stats": _cmd_stats, "scan": _cmd_scan, "cutoff": _cmd_cutoff, "validate": _cmd_validate}
    try:
        return handlers[args.cmd](args, stdout, stderr)
    except ConfigError as exc:
        stderr.write(f"passive-decoy: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
