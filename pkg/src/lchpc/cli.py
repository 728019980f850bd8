"""Command-line entry point.

Subcommands::

    lchpc codebook       codeword and beam-pattern CSVs
    lchpc demo           trace one seeded hierarchical search on stdout
    lchpc search-success success-rate sweep CSV
    lchpc rate           achievable-rate sweep CSV
    lchpc timeslots      training time-slot table over antenna counts

Settings come from built-in defaults, then an optional ``--config`` YAML file
with keys named like the flags, then the flags themselves.
"""

import argparse
import datetime as _dt
import json
import logging
import os
import sys
import time
from dataclasses import replace

import numpy as np
import yaml

from . import __version__
from .channel import generate_channel
from .codebook import OVERSAMPLE, beam_gain, build_codebook
from .errors import ConfigError, ContractViolation
from .experiments import (
    RATE_COLUMNS, SUCCESS_COLUMNS, TIMESLOT_COLUMNS, SimConfig, run_rate_sweep,
    run_success_sweep, success_decision, timeslot_table, trial_rngs, write_csv,
)
from .precoding import achievable_rate, lc_hpc, rate_bound
from .search import hierarchical_search

log = logging.getLogger("lchpc")

# flag name -> (SimConfig field, parser); list-valued flags sweep over values
_SIM_FLAGS = {
    "n-a": ("n_a", int), "m-a": ("m_a", int), "n-r": ("n_r", int), "m-r": ("m_r", int),
    "n-s": ("n_s", "ints"), "l": ("l", int), "m": ("m", int), "k": ("k", "ints"),
    "i-ly": ("i_ly", "ints"), "snr-db": ("snr_db_grid", "floats"), "trials": ("trials", int),
    "seed": ("master_seed", int),
}
_SWEEPS = ("n_s", "k", "i_ly")
_SUBCOMMAND_DEFAULTS = {"timeslots": {"n_r": 4, "m_r": 4, "n_s": [3]}}
DEFAULT_ANTENNAS = (8, 16, 32, 64, 128, 256)


def _number_list(kind):
    cast = int if kind == "ints" else float

    def parse(text):
        if isinstance(text, (list, tuple)):
            return [cast(v) for v in text]
        if isinstance(text, (int, float)):
            return [cast(text)]
        try:
            return [cast(v) for v in str(text).split(",") if v.strip()]
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    return parse


def _add_sim_flags(p):
    p.add_argument("--config", help="YAML file of flag-named settings")
    for flag, (_, kind) in _SIM_FLAGS.items():
        typ = kind if callable(kind) else _number_list(kind)
        p.add_argument(f"--{flag}", type=typ, default=None)
    p.add_argument("--noisy-estimation", action="store_true", default=None,
                   help="estimate the baseband channel (and search, for rate) with noise")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--out-dir", default=".")


def build_parser():
    parser = argparse.ArgumentParser(prog="lchpc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    cb = sub.add_parser("codebook", help="dump JOINT codewords and beam patterns")
    cb.add_argument("--n", type=int, default=32)
    cb.add_argument("--m", type=int, default=2)
    cb.add_argument("--k", type=int, default=2)
    cb.add_argument("--points", type=int, default=512, help="beam-pattern grid size")
    cb.add_argument("--out-dir", default=".")

    for name, help_ in (("demo", "trace one seeded search"),
                        ("search-success", "success-rate sweep"),
                        ("rate", "achievable-rate sweep"),
                        ("timeslots", "time-slot table over antenna counts")):
        p = sub.add_parser(name, help=help_)
        _add_sim_flags(p)
        if name == "timeslots":
            p.add_argument("--antennas", type=_number_list("ints"), default=list(DEFAULT_ANTENNAS))
    return parser


def _load_file(path):
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ConfigError([f"{path}: expected a flat mapping of settings"])
    out, bad = {}, []
    for key, value in data.items():
        flag = str(key).replace("_", "-")
        if flag == "noisy-estimation":
            out["noiseless_estimation"] = not bool(value)
        elif flag in _SIM_FLAGS:
            name, kind = _SIM_FLAGS[flag]
            out[name] = _number_list(kind)(value) if isinstance(kind, str) else kind(value)
        else:
            bad.append(f"{path}: unknown setting {key!r}")
    if bad:
        raise ConfigError(bad)
    return out


def _settings(ns, command=None):
    """Merge defaults, subcommand defaults, config file and flags."""
    merged = dict(_SUBCOMMAND_DEFAULTS.get(command, {}))
    if getattr(ns, "config", None):
        merged.update(_load_file(ns.config))
    for flag, (name, _) in _SIM_FLAGS.items():
        value = getattr(ns, flag.replace("-", "_"), None)
        if value is not None:
            merged[name] = value
    if getattr(ns, "noisy_estimation", None):
        merged["noiseless_estimation"] = False
    return merged


def _as_list(v):
    return list(v) if isinstance(v, (list, tuple)) else [v]


def config_from_settings(settings):
    """SimConfig (first value of each sweep list) and the sweep lists.

    Every combination of sweep values is validated; all violations are
    reported together.
    """
    sweeps = {name: _as_list(settings[name]) for name in _SWEEPS if name in settings}
    base = {k: v for k, v in settings.items() if k not in _SWEEPS}
    if "snr_db_grid" in base:
        base["snr_db_grid"] = tuple(float(v) for v in _as_list(base["snr_db_grid"]))
    for name, values in sweeps.items():
        if not values:
            raise ConfigError([f"{name} needs at least one value"])
        base[name] = values[0]
    cfg = SimConfig(**base)
    problems = []
    for n_s in sweeps.get("n_s", [cfg.n_s]):
        for k in sweeps.get("k", [cfg.k]):
            for i_ly in sweeps.get("i_ly", [cfg.i_ly]):
                for msg in replace(cfg, n_s=n_s, k=k, i_ly=i_ly).violations():
                    if msg not in problems:
                        problems.append(msg)
    if problems:
        raise ConfigError(problems)
    return cfg, sweeps


def parse_config(argv=None, config_file=None):
    """Parse simulation flags (no subcommand) into a validated SimConfig."""
    p = argparse.ArgumentParser(prog="lchpc")
    _add_sim_flags(p)
    ns = p.parse_args([] if argv is None else argv)
    if config_file is not None:
        ns.config = config_file
    cfg, _ = config_from_settings(_settings(ns))
    return cfg


def _manifest(command, config, sweeps, started, duration, outputs):
    return {
        "subcommand": command,
        "config": config,
        "sweeps": sweeps,
        "code_version": __version__,
        "started_at": started,
        "duration_s": duration,
        "output_paths": outputs,
    }


def _write_manifest(out_dir, manifest):
    path = os.path.join(out_dir, "manifest.json")
    manifest["output_paths"] = manifest["output_paths"] + [path]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _cmd_codebook(ns):
    cb = build_codebook(ns.n, ns.m, ns.k)
    words, pattern = [], []
    omegas = np.linspace(-1.0, 1.0, ns.points)
    for cw in cb.all_codewords():
        for idx, w in enumerate(cw.weights):
            words.append({"layer": cw.layer, "position": cw.position, "antenna_index": idx,
                          "re": float(w.real), "im": float(w.imag)})
        for om, g in zip(omegas, beam_gain(cw, omegas)):
            pattern.append({"layer": cw.layer, "position": cw.position,
                            "omega": float(om), "gain": float(g)})
    os.makedirs(ns.out_dir, exist_ok=True)
    return [
        write_csv(os.path.join(ns.out_dir, "codewords.csv"), words,
                  ("layer", "position", "antenna_index", "re", "im")),
        write_csv(os.path.join(ns.out_dir, "beam_pattern.csv"), pattern,
                  ("layer", "position", "omega", "gain")),
    ], {"n": ns.n, "m": ns.m, "k": ns.k, "points": ns.points}


def _cmd_demo(ns, cfg, sweeps, out=None):
    out = out or sys.stdout
    snr_db = cfg.snr_db_grid[0]
    power = 10.0 ** (snr_db / 10.0)
    chan_rng, noise_rng = trial_rngs(cfg.master_seed, 0, 0)
    h = generate_channel(cfg.n_a, cfg.m_a, cfg.l, chan_rng)
    cb_bs = build_codebook(cfg.n_a, cfg.m, cfg.k)
    cb_ms = build_codebook(cfg.m_a, cfg.m, cfg.k)
    trace = []
    res = hierarchical_search(h, cb_bs, cb_ms, cfg.n_s, cfg.i_ly, power, noise_rng, trace=trace)
    print(f"seed={cfg.master_seed} snr_db={snr_db} N_A={cfg.n_a} M_A={cfg.m_a} L={cfg.l} "
          f"N_S={cfg.n_s} K={cfg.k} i_LY={cfg.i_ly}", file=out)
    for i, p in enumerate(h.paths, start=1):
        print(f"true path {i}: |gain|={abs(p.gain):.4f} aod_cos={p.aod_cos:+.4f} "
              f"aoa_cos={p.aoa_cos:+.4f}", file=out)
    for st in trace:
        layer = "os" if st.ms_layer == OVERSAMPLE else f"ms{st.ms_layer}/bs{st.bs_layer}"
        if len(st.candidates) <= 8:
            tested = " ".join(f"{c}:{m:.3f}" for c, m in zip(st.candidates, st.magnitudes))
        else:
            tested = f"{len(st.candidates)} pairs, max |y|={max(st.magnitudes):.3f}"
        print(f"path {st.path} {st.phase:<10} {layer:<10} {tested} -> {st.winner}", file=out)
    for (i, j), b, (aod, aoa) in zip(res.pairs, res.gains, res.angles()):
        print(f"found (I={i}, J={j}) aod_cos={aod:+.4f} aoa_cos={aoa:+.4f} |beta|={abs(b):.3f}",
              file=out)
    sol = lc_hpc(h, res, cb_bs, cb_ms, power)
    print(f"success={success_decision(res, h, cfg.n_s)} measurements={res.measurements_used} "
          f"rate_lc_hpc={achievable_rate(h, sol, power):.4f} "
          f"rate_bound={rate_bound(h, cfg.n_s, power):.4f}", file=out)
    return []


def _progress(row):
    log.info("done snr_db=%s n_s=%s k=%s i_ly=%s", row["snr_db"], row["n_s"], row["k"], row["i_ly"])


def _cmd_sweep(ns, cfg, sweeps, kind):
    kwargs = dict(n_s_values=sweeps.get("n_s"), k_values=sweeps.get("k"),
                  i_ly_values=sweeps.get("i_ly"), threads=max(1, ns.threads), progress=_progress)
    if kind == "success":
        rows = run_success_sweep(cfg, **kwargs)
        return [write_csv(os.path.join(ns.out_dir, "success.csv"), rows, SUCCESS_COLUMNS)]
    rows = run_rate_sweep(cfg, **kwargs)
    return [write_csv(os.path.join(ns.out_dir, "rate.csv"), rows, RATE_COLUMNS)]


def _cmd_timeslots(ns, cfg, sweeps):
    bad = []
    for n in ns.antennas:
        bad.extend(f"antennas={n}: {msg}" for msg in replace(cfg, n_a=n, m_a=n).violations())
    if bad:
        raise ConfigError(bad)
    rows = []
    for n_s in sweeps.get("n_s", [cfg.n_s]):
        rows.extend(timeslot_table(replace(cfg, n_s=n_s), ns.antennas))
    return [write_csv(os.path.join(ns.out_dir, "timeslots.csv"), rows, TIMESLOT_COLUMNS)]


def dispatch(ns):
    """Run a parsed command; returns the process exit status."""
    started = _dt.datetime.now(_dt.timezone.utc).isoformat()
    t0 = time.perf_counter()
    try:
        if ns.command == "codebook":
            outputs, config = _cmd_codebook(ns)
            sweeps = {}
        else:
            cfg, sweeps = config_from_settings(_settings(ns, ns.command))
            config = cfg.to_dict()
            if ns.command == "demo":
                _cmd_demo(ns, cfg, sweeps)
                return 0
            os.makedirs(ns.out_dir, exist_ok=True)
            if ns.command == "search-success":
                outputs = _cmd_sweep(ns, cfg, sweeps, "success")
            elif ns.command == "rate":
                outputs = _cmd_sweep(ns, cfg, sweeps, "rate")
            elif ns.command == "timeslots":
                outputs = _cmd_timeslots(ns, cfg, sweeps)
            else:
                print(f"lchpc: unknown subcommand {ns.command!r}", file=sys.stderr)
                return 2
    except (ConfigError, ContractViolation) as exc:
        problems = getattr(exc, "violations", [str(exc)])
        print("lchpc: invalid configuration:", file=sys.stderr)
        for msg in problems:
            print(f"  - {msg}", file=sys.stderr)
        return 2
    manifest = _manifest(ns.command, config, sweeps, started, time.perf_counter() - t0, outputs)
    _write_manifest(ns.out_dir, manifest)
    return 0


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format="%(message)s", stream=sys.stderr)
    ns = build_parser().parse_args(argv)
    return dispatch(ns)


if __name__ == "__main__":
    sys.exit(main())
