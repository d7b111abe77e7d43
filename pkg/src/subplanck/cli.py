"""Command-line entry point: ``subplanck <command> [flags]``.

Every command writes a CSV table whose first line is ``#`` followed by a
JSON header echoing the resolved configuration, so the header alone is
enough to re-run the command.  Output goes to ``--out`` (written atomically)
or to stdout.  A relative ``--out`` is resolved against ``$SUBPLANCK_OUTPUT_DIR``
when that variable is set.

Parameters may also come from ``--config FILE``: either a JSON object or
flat ``key = value`` lines.  Flags given on the command line win over the
file; keys the command does not know are rejected.

Exit codes: 0 success, 2 usage or configuration error, 3 numerical failure
(truncation overflow, unstable regime, vanishing measurement branch).
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
from pathlib import Path

import numpy as np

from . import fock, metrology, phasespace, preparation, states
from .errors import (InvalidState, SubPlanckError, TruncationOverflow, UnstableRegime,
                     ZeroProbabilityBranch)
from .fock import TruncationPolicy
from .states import StateSpec

OUTPUT_DIR_ENV = "SUBPLANCK_OUTPUT_DIR"
EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 2, 3
NUMERICAL_ERRORS = (TruncationOverflow, UnstableRegime, ZeroProbabilityBranch)


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------- parsing helpers

def parse_complex(text) -> complex:
    if isinstance(text, (int, float, complex)):
        return complex(text)
    if isinstance(text, list) and len(text) == 2:
        return complex(float(text[0]), float(text[1]))
    try:
        return complex(str(text).replace(" ", "").replace("i", "j"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from None


def parse_sign(text) -> int:
    try:
        return states._sign(text if text in ("+", "-") else int(text))
    except (InvalidState, ValueError):
        raise argparse.ArgumentTypeError(f"sign must be + or -, got {text!r}") from None


def load_config(path: str) -> dict:
    """JSON object or ``key = value`` lines (``#`` starts a comment)."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad JSON in {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return data
    data = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        data[key.replace("-", "_")] = value
    return data


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, complex):
        return repr(v.real) if v.imag == 0 else repr(v).strip("()")
    return "" if v is None else str(v)


def _jsonable(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def render_table(header: dict, columns, rows) -> str:
    buf = io.StringIO()
    buf.write("# " + json.dumps(_jsonable(header), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def resolve_out(path: str | None) -> Path | None:
    if path is None:
        return None
    p = Path(path)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    return p


def write_atomic(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(args, text: str, sidecar: dict | None = None):
    out = resolve_out(args.out)
    if out is None:
        sys.stdout.write(text)
        return
    write_atomic(out, text)
    if sidecar is not None:
        write_atomic(out.with_name(out.name + ".json"),
                     json.dumps(_jsonable(sidecar), sort_keys=True, indent=2) + "\n")


# ---------------------------------------------------------------- argument definitions

STATE_FIELDS = ("r", "alpha", "n", "beta", "l", "sign")


def _add_spec_args(p):
    p.add_argument("kind", nargs="?", choices=states.KINDS)
    p.add_argument("--state", choices=states.KINDS, help="same as the positional kind")
    p.add_argument("--r", type=float)
    p.add_argument("--alpha", type=parse_complex)
    p.add_argument("--n", type=int)
    p.add_argument("--beta", type=parse_complex)
    p.add_argument("--l", type=int)
    p.add_argument("--sign", type=parse_sign)


def _add_common(p, seed=False):
    p.add_argument("--config")
    p.add_argument("--out")
    p.add_argument("--target-tail", type=float)
    p.add_argument("--max-dim", type=int)
    if seed:
        p.add_argument("--seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="subplanck", description=__doc__.split("\n\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("state", help="photon-number distribution of a state")
    _add_spec_args(p)
    _add_common(p)

    p = sub.add_parser("fidelity-table", help="fidelities of the superposed states with compass states")
    _add_common(p)
    p.add_argument("--debug-self", action="store_true", default=None,
                   help="append a self-fidelity row")

    p = sub.add_parser("wigner", help="Wigner function on a grid")
    _add_spec_args(p)
    _add_common(p)
    for name in ("x-min", "x-max", "p-min", "p-max"):
        p.add_argument(f"--{name}", type=float)
    p.add_argument("--nx", type=int)
    p.add_argument("--np", type=int)

    p = sub.add_parser("overlap", help="overlap of a state with its displaced copy")
    _add_spec_args(p)
    _add_common(p)
    p.add_argument("--delta", type=parse_complex, action="append")
    p.add_argument("--via-wigner", action="store_true", default=None)

    p = sub.add_parser("sensitivity", help="small-shift variance, or a Monte Carlo of the readout")
    _add_spec_args(p)
    _add_common(p, seed=True)
    p.add_argument("--theta", type=float, action="append")
    p.add_argument("--R", type=int)
    p.add_argument("--shift", type=parse_complex,
                   help="run the two-level readout protocol at this shift")
    p.add_argument("--seeds", type=int, help="number of consecutive seeds for the protocol")

    p = sub.add_parser("ratio", help="variance and photon-number ratios against compass states")
    _add_spec_args(p)
    _add_common(p)
    p.add_argument("--ks-l", type=int)
    p.add_argument("--ks-sign", type=parse_sign)
    p.add_argument("--beta-min", type=float)
    p.add_argument("--beta-max", type=float)
    p.add_argument("--beta-steps", type=int)
    p.add_argument("--theta", type=float)

    p = sub.add_parser("damping", help="damping-constant error bound")
    _add_spec_args(p)
    _add_common(p)
    p.add_argument("--kappa", type=float)
    p.add_argument("--t", type=float)
    p.add_argument("--fig6", action="store_true", default=None,
                   help="tabulate Var(N)/<N>^2 and 1/<N> for the two compass probes")
    p.add_argument("--beta-min", type=float)
    p.add_argument("--beta-max", type=float)
    p.add_argument("--beta-steps", type=int)

    p = sub.add_parser("prepare", help="qubit-oscillator preparation models")
    p.add_argument("model", choices=("h1", "h2"))
    _add_common(p, seed=True)
    p.add_argument("--Lambda", type=float)
    p.add_argument("--G", type=float)
    p.add_argument("--g", type=float)
    p.add_argument("--dim", type=int)
    p.add_argument("--guard", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--g1", type=float)
    p.add_argument("--g2", type=float)
    p.add_argument("--omega", type=float)
    p.add_argument("--t", type=float)
    p.add_argument("--scan-t", action="store_true", default=None)
    p.add_argument("--t-min", type=float)
    p.add_argument("--t-max", type=float)
    p.add_argument("--t-steps", type=int)
    return ap


DEFAULTS = {
    "r": 0.0, "alpha": 0j, "n": 0, "beta": 0j, "l": 0, "sign": 1,
    "target_tail": 1e-12, "max_dim": 600, "seed": 0,
    "x_min": -6.0, "x_max": 6.0, "p_min": -6.0, "p_max": 6.0, "nx": 256, "np": 256,
    "delta": [0.1], "via_wigner": False, "debug_self": False,
    "theta": [0.0, math.pi / 4, math.pi / 2], "R": 1, "seeds": 1, "shift": None,
    "ks_l": 0, "ks_sign": -1, "beta_min": 0.5, "beta_max": 2.0, "beta_steps": 31,
    "kappa": 0.0, "t": 1.0, "fig6": False,
    "Lambda": 1.0, "G": 0.3, "g": 0.2, "dim": 80, "guard": fock.DEFAULT_GUARD,
    "g1": 0.1, "g2": 0.2, "omega": 1.0, "scan_t": False,
    "t_min": 0.25, "t_max": 20.0, "t_steps": 80,
}
COMMAND_DEFAULTS = {
    "ratio": {"theta": 0.0},
    "damping": {"beta_min": 0.05, "beta_max": 3.0, "beta_steps": 60},
}
CONVERTERS = {"alpha": parse_complex, "beta": parse_complex, "sign": parse_sign,
              "ks_sign": parse_sign}
NOT_CONFIGURABLE = {"config", "out", "command"}


def _convert(key, value, action):
    if key in CONVERTERS:
        if isinstance(value, list) and key in ("alpha", "beta") and len(value) == 2 \
                and not isinstance(value[0], list):
            return parse_complex(value)
        return CONVERTERS[key](value)
    if action is not None and isinstance(action, argparse._StoreTrueAction):
        if isinstance(value, bool):
            return value
        return str(value).strip().lower() in ("1", "true", "yes", "on")
    conv = getattr(action, "type", None) or str
    if action is not None and isinstance(action, argparse._AppendAction):
        items = value if isinstance(value, list) else str(value).split(",")
        return [conv(v) for v in items]
    return conv(value)


def resolve(args: argparse.Namespace, parser: argparse.ArgumentParser) -> dict:
    """Merge command-line flags over config file over defaults; reject unknown keys."""
    sub = parser._subparsers._group_actions[0].choices[args.command]
    actions = {a.dest: a for a in sub._actions if a.dest != "help"}
    cfg = {}
    if args.config:
        raw = load_config(args.config)
        for key, value in raw.items():
            key = key.replace("-", "_")
            if key not in actions or key in NOT_CONFIGURABLE:
                raise ConfigError(f"unknown config key {key!r} for {args.command}")
            if value is None:  # an echoed header records unset options as null
                continue
            try:
                cfg[key] = _convert(key, value, actions[key])
            except (ValueError, TypeError, argparse.ArgumentTypeError) as exc:
                raise ConfigError(f"bad value for {key}: {exc}") from None
    defaults = DEFAULTS | COMMAND_DEFAULTS.get(args.command, {})
    out = {}
    for dest in actions:
        if dest in NOT_CONFIGURABLE:
            continue
        val = getattr(args, dest, None)
        if val is None:
            val = cfg.get(dest, defaults.get(dest))
        out[dest] = val
    if "state" in out:
        alias = out.pop("state")
        if alias is not None:
            if out["kind"] not in (None, alias):
                raise ConfigError(f"conflicting state kinds {out['kind']!r} and {alias!r}")
            out["kind"] = alias
    return out


def spec_from(cfg: dict) -> StateSpec:
    kind = cfg["kind"]
    if kind is None:
        raise ConfigError("state kind is required")
    r, alpha, n, beta, l, sign = (cfg[k] for k in STATE_FIELDS)
    makers = {
        "ssdns": lambda: StateSpec.ssdns(r, _real(alpha, "alpha"), n),
        "ssns": lambda: StateSpec.ssns(r, n),
        "compass": lambda: StateSpec.compass(beta, l, sign),
        "cat": lambda: StateSpec.cat(beta, sign),
        "coherent": lambda: StateSpec.coherent(alpha),
        "fock": lambda: StateSpec.fock(n),
        "sqdisp": lambda: StateSpec.sqdisp(r, alpha, n),
    }
    return makers[kind]()


def _real(z: complex, name: str) -> float:
    if complex(z).imag != 0:
        raise InvalidState(f"{name} must be real")
    return float(complex(z).real)


def policy_from(cfg: dict) -> TruncationPolicy:
    return TruncationPolicy(target_tail=cfg["target_tail"], max_dim=cfg["max_dim"])


def _echo(cfg: dict, command: str) -> dict:
    return {"command": command, "config": {k: v for k, v in sorted(cfg.items())}}


# ---------------------------------------------------------------- commands

def cmd_state(cfg, args):
    spec = spec_from(cfg)
    psi = states.build_state(spec, policy_from(cfg))
    dist = states.number_distribution(psi)
    header = _echo(cfg, "state") | {"spec": spec.params(), "tail_mass": psi.tail_mass,
                                    "dim": psi.dim, "support_step": dist.support_step}
    rows = [(int(m), float(dist.probs[m])) for m in dist.support]
    emit(args, render_table(header, ("m", "prob"), rows))


def cmd_fidelity_table(cfg, args):
    policy = policy_from(cfg)
    table = states.fidelity_table(policy=policy)
    cols = ("state", "alpha", "n", "r", "beta", "l", "sign", "fidelity",
            "l_used", "published", "note")
    rows = []
    for row in table:
        beta = row["beta"]
        beta = complex(*beta) if isinstance(beta, list) else complex(beta)
        rows.append((row["state"], row["alpha"], row["n"], row["r"], beta, row["l"],
                     row["sign"], row["fidelity"], row["l_used"], row["published"], row["note"]))
    if cfg["debug_self"]:
        spec = states.TABLE_I[0].probe
        rows.append((spec.kind, 0.0, spec.n, spec.r, 0j, "", "", states.fidelity(spec, spec, policy),
                     "", 1.0, "self"))
    emit(args, render_table(_echo(cfg, "fidelity-table"), cols, rows))


def _grid_from(cfg) -> phasespace.PhaseSpaceGrid:
    return phasespace.PhaseSpaceGrid(cfg["x_min"], cfg["x_max"], cfg["p_min"], cfg["p_max"],
                                     cfg["nx"], cfg["np"])


def cmd_wigner(cfg, args):
    spec = spec_from(cfg)
    psi = states.build_state(spec, policy_from(cfg))
    grid = _grid_from(cfg)
    field = phasespace.wigner(psi, grid)
    meta = _echo(cfg, "wigner") | {
        "spec": spec.params(), "tail_mass": psi.tail_mass, "dim": psi.dim,
        "grid": grid.as_dict(), "normalization": field.integral(),
        "purity": phasespace.purity(field),
        "min": float(field.values.min()), "max": float(field.values.max()),
    }
    X, P = np.meshgrid(grid.xs, grid.ps, indexing="ij")
    rows = zip(X.ravel(), P.ravel(), field.values.ravel())
    emit(args, render_table(meta, ("x", "p", "W"), rows), sidecar=meta)


def cmd_overlap(cfg, args):
    spec = spec_from(cfg)
    psi = states.build_state(spec, policy_from(cfg))
    cols = ["delta_re", "delta_im", "overlap"]
    if cfg["via_wigner"]:
        cols.append("overlap_wigner")
    rows = []
    for d in cfg["delta"]:
        d = complex(d)
        row = [d.real, d.imag, phasespace.displaced_overlap(psi, d)]
        if cfg["via_wigner"]:
            row.append(phasespace.overlap_via_wigner(psi, d))
        rows.append(row)
    header = _echo(cfg, "overlap") | {"spec": spec.params(), "tail_mass": psi.tail_mass}
    emit(args, render_table(header, cols, rows))


def cmd_sensitivity(cfg, args):
    spec = spec_from(cfg)
    policy = policy_from(cfg)
    psi = states.build_state(spec, policy)
    if cfg["R"] < 1:
        raise InvalidState("R must be >= 1")
    header = _echo(cfg, "sensitivity") | {"spec": spec.params(), "tail_mass": psi.tail_mass}
    if cfg["shift"] is not None:
        proto = metrology.TLSProtocol(psi, cfg["shift"])
        header |= {"p_e": proto.p_e, "window": proto.window,
                   "delta_method_variance": proto.delta_method_variance(cfg["R"])}
        rows = []
        for k in range(cfg["seeds"]):
            est = proto.run(cfg["R"], cfg["seed"] + k)
            rows.append((est.seed, est.m, est.s_hat, est.p_e, est.s_true))
        emit(args, render_table(header, ("seed", "m", "s_hat", "p_e", "s_true"), rows))
        return
    rows = []
    for th in cfg["theta"]:
        rep = metrology.variance_report(psi, th, cfg["R"])
        rows.append((rep.theta, rep.c, rep.variance, rep.mean_n, rep.var_n, rep.R))
    emit(args, render_table(header, ("theta", "c", "variance", "mean_n", "var_n", "R"), rows))


def _sweep(cfg) -> np.ndarray:
    if cfg["beta_steps"] < 1:
        raise InvalidState("beta_steps must be >= 1")
    if not 0 < cfg["beta_min"] <= cfg["beta_max"]:
        raise InvalidState("need 0 < beta_min <= beta_max")
    return np.linspace(cfg["beta_min"], cfg["beta_max"], cfg["beta_steps"])


def cmd_ratio(cfg, args):
    spec = spec_from(cfg)
    policy = policy_from(cfg)
    l, sign = cfg["ks_l"], cfg["ks_sign"]
    StateSpec.compass(1.0, l, sign)  # validate the label before the sweep
    table = metrology.ratio_curves(spec, lambda b: StateSpec.compass(b, l, sign),
                                   _sweep(cfg), cfg["theta"], policy)
    rows = []
    prev = None
    for row in table.rows:
        marks = []
        if prev is not None:
            if (prev[1] - 1) * (row[1] - 1) < 0:
                marks.append("variance")
            if (prev[2] - 1) * (row[2] - 1) < 0:
                marks.append("mean_n")
        rows.append((*row, ";".join(marks)))
        prev = row
    header = _echo(cfg, "ratio") | {"spec": spec.params(),
                                    "variance_crossings": table.variance_crossings,
                                    "mean_n_crossings": table.mean_n_crossings}
    emit(args, render_table(header, (*metrology.RATIO_COLUMNS, "crossing"), rows))


def cmd_damping(cfg, args):
    policy = policy_from(cfg)
    if cfg["fig6"]:
        rows = metrology.fig6_curves(_sweep(cfg), policy)
        emit(args, render_table(_echo(cfg, "damping"), metrology.FIG6_COLUMNS, rows))
        return
    spec = spec_from(cfg)
    est = metrology.damping_error(spec, cfg["kappa"], cfg["t"], policy)
    header = _echo(cfg, "damping") | {"spec": spec.params()}
    emit(args, render_table(header, ("kappa", "t", "eta", "delta_kappa", "mean_n", "var_n"),
                            [(est.kappa, est.t, est.eta, est.delta_kappa, est.mean_n, est.var_n)]))


def cmd_prepare(cfg, args):
    if cfg["model"] == "h1":
        p = preparation.RabiParams.h1(cfg["Lambda"], cfg["G"], cfg["g"])
        chk = preparation.h1_diagonalization_check(p, cfg["dim"], cfg["guard"])
        tr = chk.transform
        header = _echo(cfg, "prepare") | {
            "residual": chk.residual, "diagonal_error": chk.diagonal_error,
            "chi": tr.chi, "lambda": tr.lam, "epsilon": tr.eps,
            "published": preparation.h1_published_constants(p)}
        rows = [(b, k, tr.energy(k), f) for (b, k), f in sorted(chk.branch_fidelity.items())]
        emit(args, render_table(header, ("branch", "k", "energy", "fidelity"), rows))
        return
    p = preparation.RabiParams.h2(cfg["g1"], cfg["g2"], cfg["omega"])
    if cfg["scan_t"]:
        if cfg["t_steps"] < 1 or not 0 < cfg["t_min"] <= cfg["t_max"]:
            raise InvalidState("need t_steps >= 1 and 0 < t_min <= t_max")
        times = np.linspace(cfg["t_min"], cfg["t_max"], cfg["t_steps"])
    else:
        times = [cfg["t"]]
    scan = preparation.ssns_scan(p, cfg["n"], times, cfg["dim"], cfg["guard"])
    best = max(scan, key=lambda s: s.fidelity_best)
    header = _echo(cfg, "prepare") | {"best": {"t": best.t, "r": best.r_best,
                                               "fidelity": best.fidelity_best}}
    cols = ("t", "probability", "r_published", "fidelity_published_r", "r_best", "fidelity_best",
            "closed_form_overlap")
    rows = [(s.t, s.probability, s.r_published, s.fidelity_published_r, s.r_best, s.fidelity_best,
             s.closed_form_overlap) for s in scan]
    emit(args, render_table(header, cols, rows))


COMMANDS = {
    "state": cmd_state, "fidelity-table": cmd_fidelity_table, "wigner": cmd_wigner,
    "overlap": cmd_overlap, "sensitivity": cmd_sensitivity, "ratio": cmd_ratio,
    "damping": cmd_damping, "prepare": cmd_prepare,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        cfg = resolve(args, parser)
        COMMANDS[args.command](cfg, args)
    except NUMERICAL_ERRORS as exc:
        print(f"subplanck: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, SubPlanckError, ValueError, argparse.ArgumentTypeError) as exc:
        print(f"subplanck: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
