"""Command-line front end.

Every command writes its artifact to ``--output`` (a file path, or a
directory in which ``<command>.<format>`` is created) plus a sibling
``<artifact>.manifest.json`` holding the resolved configuration, the seed and
``git describe`` of the source tree.  The default output directory is taken
from ``SIEVEIFS_OUTPUT_DIR`` and falls back to the working directory.

CSV schemas (header row always present):

* ``simulate-path``: ``replicate,x,value``; one row per breakpoint, the first
  row of each replicate at ``x = a``.
* ``variation``: ``replicate,jump_pvar,n_jumps``.
* ``scatter``: ``zeta_x,zeta_1``.
* ``covariance``: ``x,y,empirical,stderr,closed_form,z_score``.

Failures exit with status 2 and print a JSON object with ``error`` and
``message`` keys (plus ``bound`` and ``n_used`` for truncation failures) on
stderr.
"""

import argparse
import csv
import io
import json
import math
import os
import subprocess
import sys

import numpy as np

from . import __version__
from ._rng import stream
from ._validation import ConfigurationError, TruncationError

__all__ = ["main", "build_parser", "SCHEMA_VERSION"]

SCHEMA_VERSION = 1
ENV_OUTPUT_DIR = "SIEVEIFS_OUTPUT_DIR"
COMMANDS = ("simulate-path", "marginal-test", "covariance", "variation", "integrate", "markov-check",
            "generator", "dimension", "scatter", "battery")
_DEFAULT_FORMAT = {"scatter": "svg", "simulate-path": "csv", "variation": "csv"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigurationError(message)


def _floats(text):
    return [float(v) for v in str(text).split(",") if v.strip()]


def _ints(text):
    return [int(v) for v in str(text).split(",") if v.strip()]


def build_parser():
    p = _Parser(prog="sieveifs", description="Sieved iterated function systems.")
    p.add_argument("--version", action="version", version=f"sieveifs {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON file; keys use the long option names with underscores")
        s.add_argument("--seed", type=int)
        s.add_argument("--n", type=int)
        s.add_argument("--output")
        s.add_argument("--format", choices=("csv", "json", "svg"))
        if name != "battery":
            s.add_argument("--system", help="bc, bernoulli, gaussian, dickman (or a JSON descriptor)")
            s.add_argument("--lambda", dest="lam", type=float)
            s.add_argument("--sd", type=float)
            s.add_argument("--tol", type=float)
        if name in ("simulate-path", "variation"):
            s.add_argument("--a", type=float)
            s.add_argument("--b", type=float)
        if name == "variation":
            s.add_argument("--p", type=float)
        if name in ("marginal-test", "scatter", "dimension", "markov-check"):
            s.add_argument("--x", type=float)
        if name == "covariance":
            s.add_argument("--grid", help="pairs x:y separated by commas, e.g. 0.5:1,1:1")
        if name == "integrate":
            s.add_argument("--p", type=float)
            s.add_argument("--beta", type=float, help="h(x) = c x^beta")
            s.add_argument("--c", type=float)
            s.add_argument("--a-values", dest="a_values")
        if name == "markov-check":
            s.add_argument("--u", type=float)
            s.add_argument("--y", type=float)
        if name == "generator":
            s.add_argument("--z", type=float)
            s.add_argument("--h", help="polynomial coefficients, lowest degree first")
            s.add_argument("--delta", type=float)
        if name == "dimension":
            s.add_argument("--z", help="pair z1,z2")
            s.add_argument("--mode", choices=("exact", "mc"))
            s.add_argument("--kmin", type=int)
            s.add_argument("--kmax", type=int)
        if name == "battery":
            s.add_argument("--only", help="comma-separated criterion numbers")
    return p


_DEFAULTS = {
    "seed": 0, "system": "bc", "lam": 0.5, "sd": 1.0, "tol": 1e-10,
    "a": math.exp(-1.0), "b": 1.0, "p": 1.0, "x": 0.8, "grid": "0.5:1,1:1",
    "beta": 1.0, "c": 1.0, "a_values": "0.5,0.25,0.125,0.0625", "u": 0.5, "y": None,
    "z": None, "h": "0,1", "delta": 0.01, "mode": "exact", "kmin": 4, "kmax": 10, "only": None,
}
_DEFAULT_N = {
    "simulate-path": 10, "marginal-test": 10 ** 4, "covariance": 10 ** 5, "variation": 1000,
    "integrate": 1000, "markov-check": 10 ** 4, "generator": 10 ** 6, "dimension": 10 ** 6,
    "scatter": 10 ** 4, "battery": 0,
}


def _resolve(args):
    """Merge defaults, the JSON config and explicit flags (flags win)."""
    cfg = dict(_DEFAULTS)
    cfg["n"] = _DEFAULT_N[args.command]
    cfg["format"] = _DEFAULT_FORMAT.get(args.command, "json")
    if args.config:
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(loaded, dict):
            raise ConfigurationError("config must be a JSON object")
        if "lambda" in loaded:
            loaded["lam"] = loaded.pop("lambda")
        cfg.update(loaded)
    for k, v in vars(args).items():
        if v is not None and k not in ("config", "command"):
            cfg[k] = v
    cfg["command"] = args.command
    return cfg


def _system(cfg):
    from .systems import SystemSpec

    s = cfg["system"]
    if isinstance(s, dict):
        return SystemSpec.from_dict(s)
    s = str(s)
    if s.startswith("{"):
        return SystemSpec.from_dict(json.loads(s))
    if s in ("bc", "bernoulli"):
        return SystemSpec.bernoulli(float(cfg["lam"]))
    if s == "gaussian":
        return SystemSpec.gaussian(float(cfg["lam"]), float(cfg["sd"]))
    if s == "dickman":
        return SystemSpec.dickman()
    raise ConfigurationError(f"unknown system {s!r}; pass a JSON descriptor for other families")


def _git_describe():
    here = os.path.dirname(os.path.abspath(__file__))
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"], cwd=here,
                             capture_output=True, text=True, timeout=10)
    except (OSError, subprocess.SubprocessError):
        return "unknown"
    return out.stdout.strip() if out.returncode == 0 and out.stdout.strip() else "unknown"


def _output_path(cfg):
    out = cfg.get("output")
    if not out or os.path.isdir(out) or str(out).endswith(os.sep):
        folder = out or os.environ.get(ENV_OUTPUT_DIR) or os.getcwd()
        out = os.path.join(folder, f"{cfg['command']}.{cfg['format']}")
    parent = os.path.dirname(os.path.abspath(out))
    os.makedirs(parent, exist_ok=True)
    return out


def _dumps(obj):
    return json.dumps(obj, sort_keys=True, indent=2, default=_jsonable) + "\n"


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    if hasattr(v, "to_dict"):
        return v.to_dict()
    return str(v)


def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def _need_format(cfg, allowed):
    if cfg["format"] not in allowed:
        raise ConfigurationError(f"{cfg['command']} supports --format {'/'.join(allowed)}")


# ---------------------------------------------------------------------------
# commands; each returns (text, payload-for-exit-status)
# ---------------------------------------------------------------------------


def _cmd_simulate_path(cfg):
    from .sieve import sample_paths

    _need_format(cfg, ("csv", "json"))
    paths = sample_paths(_system(cfg), float(cfg["a"]), int(cfg["n"]), float(cfg["tol"]), stream(cfg["seed"], "cli-paths"))
    if cfg["format"] == "json":
        return _dumps([p.to_dict() for p in paths]), True
    rows = []
    for i, p in enumerate(paths):
        rows += [(i, float(x), float(v)) for x, v in zip(np.concatenate([[p.a], p.breakpoints]), p.values)]
    return _csv(["replicate", "x", "value"], rows), True


def _cmd_marginal_test(cfg):
    from .stats import marginal_oracle_test

    _need_format(cfg, ("json",))
    rep = marginal_oracle_test(_system(cfg), float(cfg["x"]), int(cfg["n"]), cfg["seed"], float(cfg["tol"]))
    return _dumps(rep.to_dict()), rep.passed


def _cmd_covariance(cfg):
    from .stats import covariance_battery

    _need_format(cfg, ("csv", "json"))
    grid = [tuple(float(t) for t in pair.split(":")) for pair in str(cfg["grid"]).split(",")]
    if any(len(g) != 2 for g in grid):
        raise ConfigurationError("grid entries must look like x:y")
    rep = covariance_battery(_system(cfg), grid, int(cfg["n"]), cfg["seed"], float(cfg["tol"]))
    if cfg["format"] == "json":
        return _dumps(rep.to_dict()), rep.passed
    rows = [(g[0], g[1], e, s, c, z) for g, e, s, c, z in
            zip(rep.grid, rep.empirical, rep.stderr, rep.closed_form, rep.z_scores)]
    return _csv(["x", "y", "empirical", "stderr", "closed_form", "z_score"], rows), rep.passed


def _cmd_variation(cfg):
    from .paths import p_variation, variation_bound
    from .sieve import sample_paths

    _need_format(cfg, ("csv", "json"))
    spec = _system(cfg)
    a, b, p = float(cfg["a"]), float(cfg["b"]), float(cfg["p"])
    paths = sample_paths(spec, a, int(cfg["n"]), float(cfg["tol"]), stream(cfg["seed"], "cli-variation"))
    reps = [p_variation(path, p, a, b, with_bound=False) for path in paths]
    if cfg["format"] == "csv":
        return _csv(["replicate", "jump_pvar", "n_jumps"], [(i, r.jump_pvar, r.n_jumps) for i, r in enumerate(reps)]), True
    bound, bound_se = variation_bound(spec, p, a, b)
    sums = np.array([r.jump_pvar for r in reps])
    return _dumps({"p": p, "interval": [a, b], "mean": float(sums.mean()),
                   "stderr": float(sums.std(ddof=1) / math.sqrt(sums.size)) if sums.size > 1 else None,
                   "bound": bound, "bound_stderr": bound_se, "n": int(sums.size)}), True


def _cmd_integrate(cfg):
    from .paths import PowerLaw, integrate_to_zero

    _need_format(cfg, ("json",))
    rep = integrate_to_zero(_system(cfg), PowerLaw(float(cfg["c"]), float(cfg["beta"])), float(cfg["p"]),
                            _floats(cfg["a_values"]), int(cfg["n"]), max(float(cfg["tol"]), 1e-10),
                            stream(cfg["seed"], "cli-integrate"))
    d = {"p": rep.p, "a_values": rep.a_values, "integrability": rep.integrability.__dict__,
         "cauchy": rep.cauchy, "cauchy_stderr": rep.cauchy_stderr, "decreasing": rep.decreasing, "n": rep.n}
    return _dumps(d), True


def _cmd_markov_check(cfg):
    from .markov import conditional_forward, conditional_reverse
    from .sieve import sample_marginal
    from .stats import ks_two_sample
    from .systems import SystemSpec, sample_limit

    _need_format(cfg, ("json",))
    lam, x, n, seed = float(cfg["lam"]), float(cfg["x"]), int(cfg["n"]), cfg["seed"]
    spec = SystemSpec.bernoulli(lam)
    z = sample_marginal(spec, x, n, rng=stream(seed, "cli-markov-start"))
    if cfg.get("y") is not None:
        moved = conditional_reverse(z, lam, x, float(cfg["y"]), rng=stream(seed, "cli-markov-move"))
        name = f"reverse-{x}-to-{cfg['y']}"
    else:
        moved = conditional_forward(z, lam, x, float(cfg["u"]), rng=stream(seed, "cli-markov-move"))
        name = f"forward-{x}-by-{cfg['u']}"
    rep = ks_two_sample(moved, sample_limit(spec, n, rng=stream(seed, "cli-markov-direct")), name, seed)
    return _dumps(rep.to_dict()), rep.passed


def _cmd_generator(cfg):
    from .markov import generator_fd_check, generator_forward

    _need_format(cfg, ("json",))
    lam = float(cfg["lam"])
    # alternating digits 1010...: inside the attractor for every lambda
    z = 1.0 / (1.0 - lam * lam) if cfg.get("z") is None else float(cfg["z"])
    h = _floats(cfg["h"]) if isinstance(cfg["h"], str) else [float(v) for v in cfg["h"]]
    val, bound = generator_forward(z, lam, h, return_bound=True)
    out = {"z": z, "lambda": lam, "h": h, "series": val, "series_bound": bound}
    ok = True
    if int(cfg["n"]) > 0:
        rep = generator_fd_check(z, lam, h, float(cfg["delta"]), int(cfg["n"]), stream(cfg["seed"], "cli-generator"))
        out["fd"] = rep.to_dict()
        ok = rep.consistent
    return _dumps(out), ok


def _cmd_dimension(cfg):
    from .dimension import local_dimension_fit

    _need_format(cfg, ("json",))
    z = cfg.get("z") or "1,1"
    z = _floats(z) if isinstance(z, str) else [float(v) for v in z]
    if len(z) != 2:
        raise ConfigurationError("--z needs two coordinates")
    est = local_dimension_fit(tuple(z), float(cfg["x"]), (int(cfg["kmin"]), int(cfg["kmax"])), cfg["mode"],
                              stream(cfg["seed"], "cli-dimension"), int(cfg["n"]))
    return _dumps(est.to_dict()), True


def _cmd_scatter(cfg):
    from .sieve import sample_coupled
    from .svg import scatter_svg

    _need_format(cfg, ("svg", "csv"))
    spec = _system(cfg)
    x = float(cfg["x"])
    pts = sample_coupled(spec, [x, 1.0], int(cfg["n"]), float(cfg["tol"]), stream(cfg["seed"], "cli-scatter"))
    if cfg["format"] == "csv":
        return _csv(["zeta_x", "zeta_1"], pts.tolist()), True
    lo = min(0.0, float(pts.min()))
    hi = max(2.0, float(pts.max()))
    return scatter_svg(pts, (lo, hi), (lo, hi), title=f"(zeta({x}), zeta(1)), n = {len(pts)}",
                       xlabel=f"zeta({x})"), True


def _cmd_battery(cfg):
    from .battery import run_battery

    _need_format(cfg, ("json",))
    only = _ints(cfg["only"]) if isinstance(cfg.get("only"), str) else cfg.get("only")

    def progress(number, rep, seconds):
        print(f"criterion {number:2d} {'PASS' if rep.passed else 'FAIL'} {rep.name} ({seconds:.1f}s)",
              file=sys.stderr, flush=True)

    reports = run_battery(cfg["seed"], only, progress)
    return "".join(r.to_json() + "\n" for r in reports), all(r.passed for r in reports)


_COMMANDS = {name: globals()["_cmd_" + name.replace("-", "_")] for name in COMMANDS}


def _error_json(exc):
    d = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, TruncationError):
        d["bound"] = exc.bound
        d["n_used"] = exc.n_used
    return json.dumps(d, sort_keys=True, default=str)


def main(argv=None):
    """Entry point; returns the exit status (0 success, 1 check failed, 2 error)."""
    try:
        args = build_parser().parse_args(argv)
        cfg = _resolve(args)
        if cfg["n"] is not None and int(cfg["n"]) < 0:
            raise ConfigurationError("--n must be nonnegative")
        text, ok = _COMMANDS[cfg["command"]](cfg)
        path = _output_path(cfg)
        with open(path, "w", newline="") as fh:
            fh.write(text)
        manifest = {"config": {k: v for k, v in sorted(cfg.items())}, "git_describe": _git_describe(),
                    "seed": cfg["seed"], "schema_version": SCHEMA_VERSION, "version": __version__,
                    "artifact": os.path.basename(path)}
        with open(path + ".manifest.json", "w") as fh:
            fh.write(_dumps(manifest))
    except (ConfigurationError, TruncationError, ValueError, TypeError, OSError) as exc:
        print(_error_json(exc), file=sys.stderr)
        return 2
    return 0 if ok else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
