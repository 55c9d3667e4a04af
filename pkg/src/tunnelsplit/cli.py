"""Command-line scenario runner.

    tunnelsplit params    [--k-range KMIN KMAX N]
    tunnelsplit decompose [--k K] [--t T]
    tunnelsplit times     [--k-range KMIN KMAX N]
    tunnelsplit larmor                       (always JSON)
    tunnelsplit hartman   [--k K] [--d-range DMIN DMAX N]

Common flags: ``--config PATH`` (TOML, see :mod:`tunnelsplit.config`),
``--out PATH``, ``--format {csv,json}``, ``--precision P``, ``--threads N``
(falls back to ``TUNNELSPLIT_THREADS``). Exit status is 0 on success, 2 for
usage or configuration errors and 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .config import ConfigError, RunConfig, load_config, with_overrides
from .quadrature import QuadratureError
from .stationary import (DecompositionError, ODEFailure, SingularMatchingError,
                         default_xgrid, probability_flux, stationary_decompose, tunneling_params)
from .times import (TimingError, characteristic_times, dwell_ref_rect, dwell_smith, dwell_tr_rect,
                    phase_time)
from .wavepacket import (PacketError, ScatteringPacket, larmor_time_spectral,
                         larmor_time_timeintegral, packet_xgrid)

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3

NUMERIC_ERRORS = (ArithmeticError, SingularMatchingError, DecompositionError, ODEFailure,
                  QuadratureError, PacketError, TimingError)


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _fmt(v, precision: int) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return format(float(v), f".{precision}g")


def write_csv(header, rows, precision: int) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v, precision) for v in row) + "\n")
    return buf.getvalue()


def _round_floats(obj, precision: int):
    if isinstance(obj, float):
        return float(format(obj, f".{precision}g")) if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _round_floats(v, precision) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v, precision) for v in obj]
    return obj


def write_json(obj, precision: int) -> str:
    return json.dumps(_round_floats(obj, precision), indent=2) + "\n"


def table_output(cfg: RunConfig, header, rows, extra=None) -> str:
    p = cfg.output.precision
    if cfg.output.format == "csv":
        return write_csv(header, rows, p)
    obj = {"columns": list(header), "rows": [[float(v) for v in r] for r in rows]}
    if extra:
        obj.update(extra)
    return write_json(obj, p)


def _map(func, items, threads: int):
    items = list(items)
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(func, items))
    return [func(i) for i in items]


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _k_values(cfg: RunConfig):
    s = cfg.scan
    if not (0 < s.k_min <= s.k_max) or s.n < 1:
        raise UsageError("scan: need 0 < k_min <= k_max and n >= 1")
    return np.linspace(s.k_min, s.k_max, s.n) if s.n > 1 else np.array([s.k_min])


def cmd_params(cfg: RunConfig, threads: int = 1) -> str:
    bar = cfg.make_barrier()
    ode = cfg.ode_settings()

    def row(k):
        p = tunneling_params(bar, float(k), ode)
        return (k, bar.units.energy(k), p.T, p.R, p.J, p.F)

    rows = _map(row, _k_values(cfg), threads)
    return table_output(cfg, ("k", "E", "T", "R", "J", "F"), rows)


def cmd_decompose(cfg: RunConfig, t: float | None = None, threads: int = 1) -> str:
    bar = cfg.make_barrier()
    header = ("x", "re_full", "im_full", "re_tr", "im_tr", "re_ref", "im_ref", "flux_tr", "flux_ref")
    u = bar.units
    if t is None:
        k = cfg.scan.k
        x = default_xgrid(bar, k, n=cfg.grids.n_x, padding=cfg.grids.padding)
        dec = stationary_decompose(bar, k, xgrid=x, ode_settings=cfg.ode_settings())
        full, tr, ref = dec.psi_full, dec.psi_tr, dec.psi_ref
        ftr, fref = dec.flux_tr, dec.flux_ref
    else:
        spec = cfg.make_packet()
        pk = ScatteringPacket(bar, spec, n_nodes=cfg.grids.n_k, eps_k=cfg.tolerances.eps_k,
                              threads=threads, ode_settings=cfg.ode_settings())
        x = packet_xgrid(bar, spec, t_max=max(t, 0.0), t_min=min(t, 0.0), h=cfg.grids.h or None)
        full, tr, ref, _, dtr, dref = pk.fields(t, x, derivatives=True)
        ftr, fref = probability_flux(tr, dtr, u), probability_flux(ref, dref, u)
    rows = zip(x, full.real, full.imag, tr.real, tr.imag, ref.real, ref.imag, ftr, fref)
    return table_output(cfg, header, list(rows))


def cmd_times(cfg: RunConfig, threads: int = 1, packet: bool = True) -> str:
    bar = cfg.make_barrier()
    header = ("k", "tau_dwell_tr", "tau_dwell_ref", "tau_0", "tau_z", "tau_smith", "tau_bohm",
              "tau_phase")

    def row(k):
        c = characteristic_times(bar, float(k))
        return (k, c.tau_dwell_tr, c.tau_dwell_ref, c.tau_0, c.tau_z, c.tau_smith, c.tau_bohm,
                c.tau_phase)

    rows = _map(row, _k_values(cfg), threads)
    extra = None
    if cfg.output.format == "json" and packet:
        spec = cfg.make_packet()
        pk = ScatteringPacket(bar, spec, n_nodes=cfg.grids.n_k, eps_k=cfg.tolerances.eps_k,
                              threads=threads, ode_settings=cfg.ode_settings())
        T, R = pk.spectral_norms()
        summary = {"T": T, "R": R}
        for kind in ("tr", "ref"):
            summary[f"tau_L_{kind}_spectral"] = larmor_time_spectral(pk, kind).tau
            summary[f"tau_L_{kind}_time_integral"] = larmor_time_timeintegral(
                pk, kind, eps_t=cfg.tolerances.eps_t).tau
        extra = {"packet": summary}
    return table_output(cfg, header, rows, extra)


def cmd_larmor(cfg: RunConfig, threads: int = 1) -> str:
    from .larmor import precession_rate
    bar = cfg.make_barrier()
    spec = cfg.make_packet()
    omegas = cfg.larmor.omega_list or None
    pk = ScatteringPacket(bar, spec, n_nodes=cfg.grids.n_k, eps_k=cfg.tolerances.eps_k,
                          threads=threads, ode_settings=cfg.ode_settings())
    report = {"k0": spec.k0, "l0": spec.l0}
    for kind in ("tr", "ref"):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            res = precession_rate(bar, spec, kind, omegas, n_nodes=cfg.grids.n_k,
                                  eps_k=cfg.tolerances.eps_k, threads=threads,
                                  ode_settings=cfg.ode_settings())
        spectral = larmor_time_spectral(pk, kind).tau
        rel = abs(res.tau - spectral) / abs(spectral)
        report[kind] = {
            "series": [{"omega": s.omega, "theta0": s.theta0, "phi0": s.phi0,
                        "theta_late": s.theta_late, "phi_late": s.phi_late} for s in res.series],
            "t_late": res.t_late,
            "tau_precession": res.tau,
            "tau_spectral": spectral,
            "tau_0": res.tau0,
            "tau_z": res.tauz,
            "extrapolation_converged": res.converged,
            "relative_difference": rel,
            "pass": bool(rel <= 0.01),
        }
    return write_json(report, cfg.output.precision)


def cmd_hartman(cfg: RunConfig, threads: int = 1) -> str:
    cfg.make_barrier()
    if cfg.barrier.kind != "rect":
        raise UsageError("hartman scan needs barrier.kind = 'rect'")
    s = cfg.scan
    if not (0 < s.d_min <= s.d_max) or s.n_d < 1:
        raise UsageError("scan: need 0 < d_min <= d_max and n_d >= 1")
    k = s.k
    ds = np.linspace(s.d_min, s.d_max, s.n_d) if s.n_d > 1 else np.array([s.d_min])

    def row(d):
        bar = cfg.make_barrier(d=float(d))
        smith = dwell_smith(bar, k)
        T = tunneling_params(bar, k).T
        return (d, dwell_tr_rect(bar, k), dwell_ref_rect(bar, k), smith, smith / T,
                phase_time(bar, k))

    rows = _map(row, ds, threads)
    return table_output(cfg, ("d", "tau_dwell_tr", "tau_dwell_ref", "tau_smith", "tau_bohm",
                              "tau_phase"), rows)


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML run configuration")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--precision", type=int)
    common.add_argument("--threads", type=int)

    p = argparse.ArgumentParser(prog="tunnelsplit", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("params", "times"):
        sp = sub.add_parser(name, parents=[common])
        sp.add_argument("--k-range", nargs=3, type=float, metavar=("KMIN", "KMAX", "N"))
    sp = sub.add_parser("decompose", parents=[common])
    sp.add_argument("--k", type=float)
    sp.add_argument("--t", type=float, help="packet snapshot time (stationary if omitted)")
    sub.add_parser("larmor", parents=[common])
    sp = sub.add_parser("hartman", parents=[common])
    sp.add_argument("--k", type=float)
    sp.add_argument("--d-range", nargs=3, type=float, metavar=("DMIN", "DMAX", "N"))
    return p


def _threads(arg) -> int:
    if arg is not None:
        n = arg
    else:
        env = os.environ.get("TUNNELSPLIT_THREADS", "")
        try:
            n = int(env) if env else 1
        except ValueError:
            raise UsageError(f"TUNNELSPLIT_THREADS must be an integer, got {env!r}") from None
    if n < 1:
        raise UsageError("thread count must be >= 1")
    return n


def _resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    out = {}
    if args.format:
        out["format"] = args.format
    if args.precision is not None:
        out["precision"] = args.precision
    if args.out:
        out["path"] = args.out
    scan = {}
    if getattr(args, "k_range", None):
        kmin, kmax, n = args.k_range
        scan.update(k_min=kmin, k_max=kmax, n=int(n))
    if getattr(args, "d_range", None):
        dmin, dmax, n = args.d_range
        scan.update(d_min=dmin, d_max=dmax, n_d=int(n))
    if getattr(args, "k", None) is not None:
        scan["k"] = args.k
    try:
        cfg = with_overrides(cfg, output=out, scan=scan)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def run(argv=None) -> tuple[str, str | None]:
    """Run the CLI and return ``(output_text, output_path)`` without writing."""
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = _resolve_config(args)
    threads = _threads(args.threads)
    cmd = args.command
    if cmd == "params":
        text = cmd_params(cfg, threads)
    elif cmd == "decompose":
        text = cmd_decompose(cfg, args.t, threads)
    elif cmd == "times":
        text = cmd_times(cfg, threads)
    elif cmd == "larmor":
        text = cmd_larmor(cfg, threads)
    else:
        text = cmd_hartman(cfg, threads)
    return text, (cfg.output.path or None)


def main(argv=None) -> int:
    try:
        text, path = run(argv)
    except SystemExit as exc:                      # argparse
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    except (ConfigError, UsageError) as exc:
        print(f"tunnelsplit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NUMERIC_ERRORS as exc:
        print(f"tunnelsplit: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if path:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
