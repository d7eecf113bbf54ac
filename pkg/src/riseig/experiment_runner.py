"""Monte-Carlo experiments behind the eigenvalue and sum-rate figures.

Every trial draws its randomness from ``default_rng([seed, trial_index])``,
so a trial's result does not depend on which worker ran it or in which
order.  Trials are reduced in index order and written as CSV.
"""

import csv
import dataclasses
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from ._validation import ConvergenceError, DomainError, OptimizerError, SingularChannelError
from .channel_model import (
    FadingKind,
    FadingSpec,
    PathLossParams,
    PhaseConfig,
    SystemDimensions,
    build_scenario_channels,
    compose_effective,
)
from .phase_optimizer import OptimizerConfig, optimize_geo_mean, optimize_har_mean, random_phases
from .rate_evaluation import PowerPoint, dpc_sum_capacity, zf_sum_rate
from .spectral_metrics import gram_spectrum, high_snr_rate, spectrum_means

__all__ = [
    "EIGEN_METHODS",
    "RATE_METHODS",
    "APPROX_METHODS",
    "ScenarioConfig",
    "TrialRecord",
    "ExperimentResult",
    "PRESETS",
    "preset",
    "load_config",
    "run_eigenvalue_experiment",
    "run_snr_sweep",
    "run_element_sweep",
    "run_experiment",
]

log = logging.getLogger(__name__)

EIGEN_METHODS = ("GeoMean", "HarMean", "Random", "Off")
RATE_METHODS = ("DPC-opt", "ZF-opt", "DPC-random", "ZF-random", "DPC-off", "ZF-off")
# high-SNR lines: dashed geometric-mean (DPC) and dotted harmonic-mean (linear)
APPROX_METHODS = ("Geo-off", "Har-off", "Geo-random", "Har-random", "Geo-opt", "Har-opt", "Har-linear")
FAILURES = "failures"

_TRIAL_ERRORS = (OptimizerError, SingularChannelError, ConvergenceError, np.linalg.LinAlgError)


@dataclass
class ScenarioConfig:
    """Everything one experiment needs.  Distances in meters, powers in dBm."""

    name: str = "custom"
    experiment: str = "eigenvalues"
    dimensions: SystemDimensions = field(
        default_factory=lambda: SystemDimensions(n_bs=16, n_ms=1, n_users=6, n_ris_elements=(256,))
    )
    bs_position: tuple = (0.0, 0.0)
    ris_positions: tuple = ((200.0, 0.0),)
    user_center: tuple = (200.0, 30.0)
    user_radius: float = 10.0
    pathloss_d: PathLossParams = field(default_factory=lambda: PathLossParams(30.0, 3.76))
    pathloss_re: PathLossParams = field(default_factory=lambda: PathLossParams(30.0, 3.76))
    pathloss_s: PathLossParams = field(default_factory=lambda: PathLossParams(30.0, 2.2))
    fading_d: FadingSpec = field(default_factory=FadingSpec)
    fading_re: FadingSpec = field(default_factory=FadingSpec)
    fading_s: FadingSpec = field(default_factory=FadingSpec)
    extra_loss_db: float = 0.0
    extra_loss_users: tuple = ()
    noise_dbm: float = -100.0
    n_trials: int = 100
    seed: int = 0
    power_grid_dbm: tuple = tuple(float(p) for p in range(-10, 45, 5))
    sweep_power_dbm: float = 40.0
    ris_element_grid: tuple = (1, 4, 16, 64, 256)
    rank_grid: tuple = (1, 2, 6)
    max_sweeps: int = 100
    rel_tolerance: float = 1e-6
    output_dir: str = "results"

    def __post_init__(self):
        if self.n_trials < 1:
            raise DomainError("n_trials must be >= 1")
        if self.experiment not in _RUNNERS:
            raise DomainError(f"unknown experiment {self.experiment!r}")
        if len(self.ris_positions) != len(self.dimensions.n_ris_elements):
            raise DomainError("need one RIS position per surface")
        grid = {
            "eigenvalues": self.rank_grid,
            "snr_sweep": self.power_grid_dbm,
            "element_sweep": self.ris_element_grid,
        }[self.experiment]
        if len(grid) == 0:
            raise DomainError(f"{self.experiment} needs a nonempty grid")
        if any(u < 0 or u >= self.dimensions.n_users for u in self.extra_loss_users):
            raise DomainError("extra_loss_users must be valid 0-based user indices")

    def to_dict(self):
        def convert(obj):
            if isinstance(obj, FadingKind):
                return obj.value
            if isinstance(obj, (tuple, list)):
                return [convert(o) for o in obj]
            if isinstance(obj, dict):
                return {k: convert(v) for k, v in obj.items()}
            return obj

        return convert(dataclasses.asdict(self))

    def optimizer_config(self, init):
        return OptimizerConfig(max_sweeps=self.max_sweeps, rel_tolerance=self.rel_tolerance, init=init)


@dataclass
class TrialRecord:
    """One method's outcome in one trial at one grid point."""

    trial_index: int
    method: str
    grid_value: float
    eigenvalues: np.ndarray = None
    rates: dict = field(default_factory=dict)
    sweeps: int = 0

    def __post_init__(self):
        if self.method not in EIGEN_METHODS + RATE_METHODS + APPROX_METHODS:
            raise DomainError(f"unknown method label {self.method!r}")


@dataclass
class ExperimentResult:
    config: ScenarioConfig
    records: list
    failures: dict
    header: tuple
    rows: list
    paths: list = field(default_factory=list)

    def by_method(self, method, grid_value=None):
        return [
            rec
            for rec in self.records
            if rec.method == method and (grid_value is None or rec.grid_value == grid_value)
        ]


# -- presets ---------------------------------------------------------------


def _fig1(name, rank, beta_re):
    return ScenarioConfig(
        name=name,
        experiment="eigenvalues",
        pathloss_re=PathLossParams(30.0, beta_re),
        fading_s=FadingSpec(FadingKind.KRONECKER_RANK, rank=rank),
        extra_loss_db=20.0,
        extra_loss_users=(3, 4, 5),
        rank_grid=(rank,),
    )


def _fig34(name, experiment, fading_s):
    return ScenarioConfig(
        name=name,
        experiment=experiment,
        pathloss_re=PathLossParams(30.0, 2.2),
        fading_s=fading_s,
    )


_RAYLEIGH = FadingSpec(FadingKind.RAYLEIGH)
_RICIAN6 = FadingSpec(FadingKind.RICIAN, rician_factor_db=6.0)

PRESETS = {
    "fig1a": lambda: _fig1("fig1a", 1, 3.76),
    "fig1b": lambda: _fig1("fig1b", 2, 3.76),
    "fig1c": lambda: _fig1("fig1c", 6, 3.76),
    "fig1d": lambda: _fig1("fig1d", 6, 2.2),
    "fig3a": lambda: _fig34("fig3a", "snr_sweep", _RAYLEIGH),
    "fig3b": lambda: _fig34("fig3b", "snr_sweep", _RICIAN6),
    "fig4a": lambda: _fig34("fig4a", "element_sweep", _RAYLEIGH),
    "fig4b": lambda: _fig34("fig4b", "element_sweep", _RICIAN6),
}


def preset(name, **overrides):
    """A fresh :class:`ScenarioConfig` for a named preset, with field overrides."""
    try:
        config = PRESETS[name]()
    except KeyError:
        raise DomainError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return replace(config, **overrides) if overrides else config


# -- config files ------------------------------------------------------------


def _load_toml(path):
    try:
        import tomllib
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def load_config(path):
    """Read a TOML scenario file.

    Top-level keys are :class:`ScenarioConfig` fields; ``preset = "..."``
    picks a starting point.  Tables ``[dimensions]``, ``[geometry]``,
    ``[pathloss.direct|reflect|bs_ris]``, ``[fading.direct|reflect|bs_ris]``,
    ``[extra_loss]`` and ``[optimizer]`` fill the nested fields.
    """
    raw = dict(_load_toml(path))
    base = preset(raw.pop("preset")) if "preset" in raw else ScenarioConfig()
    kw = {}
    if "dimensions" in raw:
        d = dict(dataclasses.asdict(base.dimensions), **raw.pop("dimensions"))
        kw["dimensions"] = SystemDimensions(**d)
    geo = raw.pop("geometry", {})
    for key in ("bs_position", "user_center", "user_radius"):
        if key in geo:
            kw[key] = tuple(geo[key]) if isinstance(geo[key], list) else geo[key]
    if "ris_positions" in geo:
        kw["ris_positions"] = tuple(tuple(p) for p in geo["ris_positions"])
    links = {"direct": "d", "reflect": "re", "bs_ris": "s"}
    for link, suffix in links.items():
        pl = raw.get("pathloss", {}).get(link)
        if pl:
            old = getattr(base, f"pathloss_{suffix}")
            kw[f"pathloss_{suffix}"] = replace(old, **pl)
        fd = raw.get("fading", {}).get(link)
        if fd:
            kw[f"fading_{suffix}"] = FadingSpec(**fd)
    raw.pop("pathloss", None)
    raw.pop("fading", None)
    extra = raw.pop("extra_loss", {})
    if "db" in extra:
        kw["extra_loss_db"] = float(extra["db"])
    if "users" in extra:
        kw["extra_loss_users"] = tuple(int(u) for u in extra["users"])
    kw.update(raw.pop("optimizer", {}))
    for key, value in raw.items():
        if key not in {f.name for f in dataclasses.fields(ScenarioConfig)}:
            raise DomainError(f"unknown config key {key!r}")
        kw[key] = tuple(value) if isinstance(value, list) else value
    return replace(base, **kw)


# -- trials ------------------------------------------------------------------


def trial_rng(seed, trial_index):
    return np.random.default_rng([int(seed), int(trial_index)])


def _phase_set(config, channels, rng):
    """Random start plus both optimized phase vectors from that same start."""
    theta_rand = random_phases(rng, channels.n_ris_total)
    theta_geo, tr_geo = optimize_geo_mean(channels, config.optimizer_config(theta_rand), rng)
    theta_har, tr_har = optimize_har_mean(channels, config.optimizer_config(theta_rand), rng)
    return theta_rand, (theta_geo, tr_geo.sweeps_run), (theta_har, tr_har.sweeps_run)


def eigenvalue_trial(config, rank, trial_index):
    """Gram eigenvalues of one realization under the four phase choices."""
    cfg = replace(config, fading_s=replace(config.fading_s, kind=FadingKind.KRONECKER_RANK, rank=rank))
    rng = trial_rng(config.seed, trial_index)
    channels, _ = build_scenario_channels(rng, cfg)
    theta_rand, (theta_geo, sw_geo), (theta_har, sw_har) = _phase_set(cfg, channels, rng)
    choices = [
        ("GeoMean", theta_geo, sw_geo),
        ("HarMean", theta_har, sw_har),
        ("Random", theta_rand, 0),
        ("Off", PhaseConfig.off(), 0),
    ]
    return [
        TrialRecord(
            trial_index,
            method,
            rank,
            eigenvalues=gram_spectrum(compose_effective(channels, theta)).values,
            sweeps=sweeps,
        )
        for method, theta, sweeps in choices
    ]


def _rate_records(config, channels, rng, trial_index, grid_value, powers_dbm):
    theta_rand, (theta_geo, sw_geo), (theta_har, sw_har) = _phase_set(config, channels, rng)
    h = {
        "opt": compose_effective(channels, theta_geo),
        "linear": compose_effective(channels, theta_har),
        "random": compose_effective(channels, theta_rand),
        "off": compose_effective(channels, PhaseConfig.off()),
    }
    r = channels.r
    points = [PowerPoint.from_dbm(p, config.noise_dbm) for p in powers_dbm]
    means = {key: spectrum_means(gram_spectrum(mat)) for key, mat in h.items()}

    def rates(fn, mat):
        return {p: fn(mat, pp) for p, pp in zip(powers_dbm, points)}

    def approx(mean):
        return {
            p: float(high_snr_rate(pp.snr, r, r * np.log2(mean)))
            for p, pp in zip(powers_dbm, points)
        }

    out = [
        ("DPC-opt", rates(dpc_sum_capacity, h["opt"]), sw_geo),
        ("ZF-opt", rates(zf_sum_rate, h["linear"]), sw_har),
        ("DPC-random", rates(dpc_sum_capacity, h["random"]), 0),
        ("ZF-random", rates(zf_sum_rate, h["random"]), 0),
        ("DPC-off", rates(dpc_sum_capacity, h["off"]), 0),
        ("ZF-off", rates(zf_sum_rate, h["off"]), 0),
        ("Geo-off", approx(means["off"][0]), 0),
        ("Har-off", approx(means["off"][1]), 0),
        ("Geo-random", approx(means["random"][0]), 0),
        ("Har-random", approx(means["random"][1]), 0),
        ("Geo-opt", approx(means["opt"][0]), 0),
        ("Har-opt", approx(means["opt"][1]), 0),
        ("Har-linear", approx(means["linear"][1]), 0),
    ]
    return [TrialRecord(trial_index, m, grid_value, rates=rt, sweeps=sw) for m, rt, sw in out]


def snr_trial(config, trial_index):
    rng = trial_rng(config.seed, trial_index)
    channels, _ = build_scenario_channels(rng, config)
    return _rate_records(config, channels, rng, trial_index, np.nan, list(config.power_grid_dbm))


def element_trial(config, n_ris, trial_index):
    dims = replace(config.dimensions, n_ris_elements=(int(n_ris),) * len(config.ris_positions))
    cfg = replace(config, dimensions=dims)
    rng = trial_rng(config.seed, trial_index)
    channels, _ = build_scenario_channels(rng, cfg)
    p = config.sweep_power_dbm
    return _rate_records(cfg, channels, rng, trial_index, n_ris, [p])


def _run_trials(fn, n_trials, threads):
    def guarded(i):
        try:
            return fn(i)
        except _TRIAL_ERRORS as exc:
            log.warning("trial %d failed: %s", i, exc)
            return None

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(guarded, range(n_trials)))
    else:
        results = [guarded(i) for i in range(n_trials)]
    ok = [rec for res in results if res is not None for rec in res]
    return ok, sum(res is None for res in results)


def _mean_stderr(values):
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return float("nan"), float("nan")
    if values.size == 1:
        return float(values[0]), 0.0
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(values.size))


# -- experiments -------------------------------------------------------------


def run_eigenvalue_experiment(config, threads=1, write=True):
    """Mean eigenvalue per (rank, method, index); rows ``rank,method,eig_index,mean_value``."""
    records, failures, rows = [], {}, []
    r = config.dimensions.r
    for rank in config.rank_grid:
        recs, failed = _run_trials(lambda i: eigenvalue_trial(config, rank, i), config.n_trials, threads)
        records += recs
        failures[rank] = failed
        for method in EIGEN_METHODS:
            eigs = np.array([rec.eigenvalues for rec in recs if rec.method == method]).reshape(-1, r)
            means = eigs.mean(axis=0) if eigs.size else np.full(r, np.nan)
            rows += [(rank, method, i + 1, float(means[i])) for i in range(r)]
        rows.append((rank, FAILURES, 0, failed))
    result = ExperimentResult(config, records, failures, ("rank", "method", "eig_index", "mean_value"), rows)
    return _finish(result, write)


def _rate_rows(records, grid_values, key):
    rows = []
    for x in grid_values:
        for method in RATE_METHODS + APPROX_METHODS:
            vals = [rec.rates[x] for rec in records if rec.method == method and key(rec, x)]
            rows.append((x, method) + _mean_stderr(vals))
    return rows


def run_snr_sweep(config, threads=1, write=True):
    """Mean sum rate per (power, method); rows ``x,method,mean_rate_bpcu,stderr``."""
    powers = list(config.power_grid_dbm)
    records, failed = _run_trials(lambda i: snr_trial(config, i), config.n_trials, threads)
    rows = _rate_rows(records, powers, lambda rec, x: True)
    rows.append(("all", FAILURES, failed, 0.0))
    result = ExperimentResult(
        config, records, {"all": failed}, ("x", "method", "mean_rate_bpcu", "stderr"), rows
    )
    return _finish(result, write)


def run_element_sweep(config, threads=1, write=True):
    """Mean sum rate per (N_RIS, method) at ``sweep_power_dbm``."""
    records, failures = [], {}
    p = config.sweep_power_dbm
    rows = []
    for n_ris in config.ris_element_grid:
        recs, failed = _run_trials(lambda i: element_trial(config, n_ris, i), config.n_trials, threads)
        for rec in recs:
            rec.rates = {n_ris: rec.rates[p]}
        records += recs
        failures[n_ris] = failed
        rows += _rate_rows(recs, [n_ris], lambda rec, x: True)
        rows.append((n_ris, FAILURES, failed, 0.0))
    result = ExperimentResult(config, records, failures, ("x", "method", "mean_rate_bpcu", "stderr"), rows)
    return _finish(result, write)


_RUNNERS = {
    "eigenvalues": run_eigenvalue_experiment,
    "snr_sweep": run_snr_sweep,
    "element_sweep": run_element_sweep,
}

_SUFFIX = {"eigenvalues": "eigenvalues", "snr_sweep": "rates", "element_sweep": "rates"}


def _finish(result, write):
    if write:
        result.paths = write_outputs(result)
    return result


def write_outputs(result):
    """Write ``<name>_<kind>.csv`` and a ``<name>.json`` sidecar; return both paths."""
    config = result.config
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{config.name}_{_SUFFIX[config.experiment]}.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(result.header)
        for row in result.rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    meta_path = out / f"{config.name}.json"
    meta = {
        "artifact": "riseig",
        "version": __version__,
        "seed": config.seed,
        "config": config.to_dict(),
        "failures": {str(k): v for k, v in result.failures.items()},
    }
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return [csv_path, meta_path]


def run_experiment(config, threads=1, write=True):
    """Dispatch on ``config.experiment``."""
    return _RUNNERS[config.experiment](config, threads=threads, write=write)
