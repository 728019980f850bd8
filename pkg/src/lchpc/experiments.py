"""Monte Carlo experiments: search success rate, achievable rate, time slots.

Every trial draws its channel from ``(master_seed, trial_index)`` and its
noise from ``(master_seed, trial_index, snr_index)``, so all variants of a
sweep (different N_S, K, i_LY) see the same channels, and results do not
depend on how trials are spread over worker processes.
"""

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .channel import generate_channel
from .codebook import build_codebook, integer_log
from .errors import ConfigError
from .precoding import achievable_rate, lc_hpc, rate_bound
from .search import hierarchical_search

Z95 = 1.959963984540054

SUCCESS_COLUMNS = ("snr_db", "n_s", "k", "i_ly", "trials", "success_rate", "ci95_half_width",
                   "mean_found", "mean_measurements")
RATE_COLUMNS = ("snr_db", "n_s", "k", "i_ly", "trials", "rate_lc_hpc_mean", "rate_lc_hpc_ci95",
                "rate_bound_mean", "rate_bound_ci95", "mean_streams")
TIMESLOT_COLUMNS = ("n_a", "m_a", "t_ss", "t_hs", "t_sp")


@dataclass(frozen=True)
class SimConfig:
    n_a: int = 32
    m_a: int = 32
    n_r: int = 3
    m_r: int = 3
    n_s: int = 3
    l: int = 4
    m: int = 2
    k: int = 2
    i_ly: int = 2
    snr_db_grid: tuple = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    trials: int = 1000
    master_seed: int = 0
    noiseless_estimation: bool = True

    def violations(self):
        out = []
        for name in ("n_a", "m_a", "n_r", "m_r", "n_s", "l", "m", "k", "i_ly", "trials"):
            if getattr(self, name) < 1:
                out.append(f"{name} must be >= 1 (got {getattr(self, name)})")
        if self.n_s > min(self.n_r, self.m_r):
            out.append(f"n_s={self.n_s} exceeds min(n_r, m_r)={min(self.n_r, self.m_r)}")
        if self.l < self.n_s:
            out.append(f"l={self.l} must be >= n_s={self.n_s}")
        if self.m != 2:
            out.append(f"m={self.m} is not supported (only M=2)")
        s_a = integer_log(self.n_a, self.m) if self.m >= 2 else None
        s_m = integer_log(self.m_a, self.m) if self.m >= 2 else None
        if s_a is None:
            out.append(f"n_a={self.n_a} is not a power of m={self.m}")
        if s_m is None:
            out.append(f"m_a={self.m_a} is not a power of m={self.m}")
        if s_a is not None and s_m is not None and self.i_ly > min(s_a, s_m):
            out.append(f"i_ly={self.i_ly} exceeds log_m(min(n_a, m_a))={min(s_a, s_m)}")
        if not self.snr_db_grid:
            out.append("snr_db_grid is empty")
        return out

    def validate(self):
        problems = self.violations()
        if problems:
            raise ConfigError(problems)
        return self

    def to_dict(self):
        d = asdict(self)
        d["snr_db_grid"] = list(self.snr_db_grid)
        return d


@dataclass(frozen=True)
class TrialRecord:
    trial_index: int
    snr_db: float
    success: bool
    n_found: int
    rate_lc_hpc: float
    rate_bound: float
    measurements_used: int


def _wrapped_gap(a, b):
    # g(N, w) has period 2 in w
    d = abs(a - b) % 2.0
    return min(d, 2.0 - d)


def success_decision(result, truth, n_s=None):
    """True iff ``n_s`` MPCs were found and each claims a distinct true path.

    A found pair claims a true path when the AoD error is below ``1/N_A`` and
    the AoA error below ``1/M_A``. Found pairs claim greedily in found order,
    each taking the closest unclaimed path that qualifies.
    """
    n_s = result.n_found if n_s is None else n_s
    if result.n_found < n_s or n_s == 0:
        return False
    tol_bs = 1.0 / truth.n_bs_antennas
    tol_ms = 1.0 / truth.n_ms_antennas
    claimed = set()
    for aod, aoa in result.angles():
        best, best_err = None, None
        for idx, path in enumerate(truth.paths):
            if idx in claimed:
                continue
            e_bs = _wrapped_gap(path.aod_cos, aod)
            e_ms = _wrapped_gap(path.aoa_cos, aoa)
            if e_bs < tol_bs and e_ms < tol_ms:
                err = e_bs / tol_bs + e_ms / tol_ms
                if best is None or err < best_err:
                    best, best_err = idx, err
        if best is None:
            return False
        claimed.add(best)
    return True


def _ceil_div(a, b):
    return -(-a // b)


def time_cost_hierarchical(cfg):
    """Time slots of the hierarchical search with ``N_R*M_R`` parallel measurements."""
    per_slot = cfg.n_r * cfg.m_r
    stages = integer_log(cfg.n_a, cfg.m) + integer_log(cfg.m_a, cfg.m) - 2 * cfg.i_ly
    per_path = (stages * _ceil_div(cfg.m, per_slot)
                + _ceil_div(cfg.m ** (2 * cfg.i_ly), per_slot)
                + _ceil_div(cfg.k**2, per_slot))
    return cfg.n_s * per_path


def time_cost_sequential(cfg):
    return _ceil_div(cfg.k**2 * cfg.m_a * cfg.n_a, cfg.n_r * cfg.m_r)


def time_cost_sparse(cfg):
    """Measurement count of the OMP-based sparse hierarchical scheme (real-valued)."""
    return (cfg.m * cfg.n_s**2 * _ceil_div(cfg.m * cfg.n_s, cfg.n_r)
            * math.log(cfg.k * cfg.n_a / cfg.n_s, cfg.m))


def timeslot_table(cfg, antenna_counts=(8, 16, 32, 64, 128, 256)):
    """Rows of (n_a, m_a, t_ss, t_hs, t_sp) with ``m_a = n_a``."""
    rows = []
    for n in antenna_counts:
        c = replace(cfg, n_a=n, m_a=n)
        rows.append({"n_a": n, "m_a": n, "t_ss": time_cost_sequential(c),
                     "t_hs": time_cost_hierarchical(c), "t_sp": time_cost_sparse(c)})
    return rows


def trial_rngs(master_seed, trial_index, snr_index):
    """(channel_rng, noise_rng) for one trial at one SNR point."""
    chan = np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(trial_index, 0)))
    noise = np.random.default_rng(
        np.random.SeedSequence(master_seed, spawn_key=(trial_index, 1, snr_index)))
    return chan, noise


def run_trial(cfg, snr_index, trial_index, noiseless_search):
    """One channel draw, one hierarchical search, one LC-HPC link."""
    snr_db = cfg.snr_db_grid[snr_index]
    power = 10.0 ** (snr_db / 10.0)
    chan_rng, noise_rng = trial_rngs(cfg.master_seed, trial_index, snr_index)
    h = generate_channel(cfg.n_a, cfg.m_a, cfg.l, chan_rng)
    cb_bs = build_codebook(cfg.n_a, cfg.m, cfg.k)
    cb_ms = build_codebook(cfg.m_a, cfg.m, cfg.k)
    result = hierarchical_search(h, cb_bs, cb_ms, cfg.n_s, cfg.i_ly, power, noise_rng,
                                 noiseless=noiseless_search)
    training_snr = None if cfg.noiseless_estimation else power
    sol = lc_hpc(h, result, cb_bs, cb_ms, power, noise_rng, training_snr)
    return TrialRecord(
        trial_index=trial_index,
        snr_db=snr_db,
        success=success_decision(result, h, cfg.n_s),
        n_found=result.n_found,
        rate_lc_hpc=achievable_rate(h, sol, power),
        rate_bound=rate_bound(h, cfg.n_s, power),
        measurements_used=result.measurements_used,
    )


def _trial_batch(args):
    cfg, snr_index, trial_indices, noiseless_search = args
    return [run_trial(cfg, snr_index, t, noiseless_search) for t in trial_indices]


@dataclass
class _Runner:
    threads: int = 1
    chunk: int = 50
    _pool: object = field(default=None, repr=False)

    def __enter__(self):
        if self.threads > 1:
            self._pool = ProcessPoolExecutor(max_workers=self.threads)
        return self

    def __exit__(self, *exc):
        if self._pool is not None:
            self._pool.shutdown()

    def records(self, cfg, snr_index, noiseless_search):
        batches = [(cfg, snr_index, range(s, min(s + self.chunk, cfg.trials)), noiseless_search)
                   for s in range(0, cfg.trials, self.chunk)]
        mapper = self._pool.map if self._pool is not None else map
        out = []
        for batch in mapper(_trial_batch, batches):
            out.extend(batch)
        return out


def _variants(cfg, n_s_values, k_values, i_ly_values):
    out = []
    for n_s in n_s_values or (cfg.n_s,):
        for k in k_values or (cfg.k,):
            for i_ly in i_ly_values or (cfg.i_ly,):
                out.append(replace(cfg, n_s=n_s, k=k, i_ly=i_ly).validate())
    return out


def _mean_ci(values):
    n = len(values)
    mean = math.fsum(values) / n
    if n < 2:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, Z95 * math.sqrt(var / n)


def run_success_sweep(cfg, n_s_values=None, k_values=None, i_ly_values=None, threads=1,
                      progress=None):
    """Success rate per (snr_db, n_s, k, i_ly) with noisy hierarchical search."""
    rows = []
    with _Runner(threads) as runner:
        for variant in _variants(cfg, n_s_values, k_values, i_ly_values):
            for si, snr_db in enumerate(variant.snr_db_grid):
                recs = runner.records(variant, si, noiseless_search=False)
                n = len(recs)
                p = sum(r.success for r in recs) / n
                rows.append({
                    "snr_db": snr_db, "n_s": variant.n_s, "k": variant.k, "i_ly": variant.i_ly,
                    "trials": n, "success_rate": p,
                    "ci95_half_width": Z95 * math.sqrt(p * (1 - p) / n),
                    "mean_found": math.fsum(r.n_found for r in recs) / n,
                    "mean_measurements": math.fsum(r.measurements_used for r in recs) / n,
                })
                if progress:
                    progress(rows[-1])
    return rows


def run_rate_sweep(cfg, n_s_values=None, k_values=None, i_ly_values=None, threads=1,
                   progress=None, return_records=False):
    """Mean LC-HPC rate and rate bound per (snr_db, n_s, k, i_ly).

    The search is noiseless when ``cfg.noiseless_estimation`` is set.
    """
    rows, all_records = [], {}
    with _Runner(threads) as runner:
        for variant in _variants(cfg, n_s_values, k_values, i_ly_values):
            for si, snr_db in enumerate(variant.snr_db_grid):
                recs = runner.records(variant, si, noiseless_search=variant.noiseless_estimation)
                lc_mean, lc_ci = _mean_ci([r.rate_lc_hpc for r in recs])
                bd_mean, bd_ci = _mean_ci([r.rate_bound for r in recs])
                rows.append({
                    "snr_db": snr_db, "n_s": variant.n_s, "k": variant.k, "i_ly": variant.i_ly,
                    "trials": len(recs), "rate_lc_hpc_mean": lc_mean, "rate_lc_hpc_ci95": lc_ci,
                    "rate_bound_mean": bd_mean, "rate_bound_ci95": bd_ci,
                    "mean_streams": math.fsum(r.n_found for r in recs) / len(recs),
                })
                all_records[(snr_db, variant.n_s, variant.k, variant.i_ly)] = recs
                if progress:
                    progress(rows[-1])
    return (rows, all_records) if return_records else rows


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path, rows, columns):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in columns])
    return path


def config_fields():
    return [f.name for f in fields(SimConfig)]
