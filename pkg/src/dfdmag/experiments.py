"""Experiment drivers: estimator sweeps, bias/efficiency studies, interpolation noise.

Each driver takes a :class:`SweepConfig` and returns plain row records; the
CLI turns those into CSV. Everything random is derived from
``config.master_seed``, so a run is reproducible from its config alone.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import spearmanr

from .estimate import OBJECTIVES, ObjectiveSpec, estimate_sigma_r
from .exceptions import ConfigurationError
from .imaging import NoiseSpec
from .optics import relative_blur
from .stats import gaussian_kernel_vector, monte_carlo_bias, noise_diagnostics, trial_seed
from .textures import TEXTURE_KINDS, FractalTexture, make_texture
from .warp import interpolation_noise, warp_pair_forward

SWEEP_KINDS = ("scale", "blur", "noise")
STUDY_SCALE = 0.9

# fixed parameters and grids of the three estimator sweeps
SWEEP_DEFAULTS = {
    "scale": dict(sigma1=0.7, sigma2=1.2, noise_var=1.0, grid=[0.70, 0.75, 0.80, 0.85, 0.90, 0.95]),
    "blur": dict(s_w=0.9, sigma1=0.7, noise_var=1.0, grid=[0.7, 0.8, 0.9, 1.0, 1.1, 1.2, 1.3, 1.4, 1.5]),
    "noise": dict(s_w=0.9, sigma1=1.0, sigma2=1.5, grid=[1.0, 5.0, 10.0, 15.0, 20.0, 25.0]),
}


@dataclass
class SweepConfig:
    """Run configuration; JSON config files use these field names.

    ``noise_var`` and the noise-sweep grid are variances on the 0-255 scale.
    ``mc_noise_var`` (bias/efficiency studies) is on the ``[0, 1]`` scale.
    Parameters left as ``None`` take the per-sweep defaults.
    """

    sweep_kind: str = "scale"
    sigma1: float | None = None
    sigma2: float | None = None
    s_w: float | None = None
    noise_var: float | None = None
    grid: list | None = None
    estimators: list = field(default_factory=lambda: list(OBJECTIVES))
    texture: str = "fractal"
    size: int = 256
    master_seed: int = 0
    method: str = "bilinear"
    sigma_lo: float = 0.05
    sigma_hi: float = 3.0
    sigma_step: float = 0.05
    refine: bool = True
    noise_sanity_row: bool = True
    # bias / crlb studies
    trials: int = 500
    patch_size: int = 16
    kernel_size: int = 5
    kernel_sigma: float = 1.0
    mc_noise_var: float = 1e-4
    # interpolation-noise report
    interp_method: str = "bilinear"
    bins: int = 41
    max_lag: int = 5
    out: str | None = None

    @classmethod
    def from_dict(cls, data: dict) -> "SweepConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigurationError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "SweepConfig":
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigurationError(f"{path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigurationError(f"{path}: config must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def resolved(self) -> "SweepConfig":
        """Copy with per-sweep defaults filled in and fields validated."""
        if self.sweep_kind not in SWEEP_KINDS:
            raise ConfigurationError(f"sweep_kind must be one of {SWEEP_KINDS}, got {self.sweep_kind!r}")
        updates = {k: v for k, v in SWEEP_DEFAULTS[self.sweep_kind].items() if getattr(self, k) is None}
        cfg = dataclasses.replace(self, **updates)
        if cfg.noise_var is None:
            cfg.noise_var = 0.0
        cfg.estimators = [str(e).lower() for e in cfg.estimators]
        bad = [e for e in cfg.estimators if e not in OBJECTIVES]
        if bad or not cfg.estimators:
            raise ConfigurationError(f"estimators must be a non-empty subset of {OBJECTIVES}, got {self.estimators}")
        if cfg.texture not in TEXTURE_KINDS:
            raise ConfigurationError(f"texture must be one of {TEXTURE_KINDS}, got {cfg.texture!r}")
        grid = [float(v) for v in cfg.grid]
        if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigurationError(f"grid must be non-empty and strictly increasing, got {cfg.grid}")
        if any(v <= 0 for v in grid) and cfg.sweep_kind != "noise":
            raise ConfigurationError(f"{cfg.sweep_kind} grid values must be positive")
        cfg.grid = grid
        return cfg

    def objective_spec(self, kind: str) -> ObjectiveSpec:
        try:
            return ObjectiveSpec(
                kind=kind,
                sigma_lo=self.sigma_lo,
                sigma_hi=self.sigma_hi,
                sigma_step=self.sigma_step,
                refine=self.refine,
                method=self.method,
            )
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from exc


@dataclass
class SweepRow:
    sweep: str
    s_w: float
    sigma1: float
    sigma2: float
    noise_var: float
    estimator: str
    sigma_r_true: float
    sigma_r_hat: float
    abs_error: float
    seed: int


def _sweep_points(cfg: SweepConfig):
    """``(s_w, sigma1, sigma2, noise_var)`` for every grid point, in grid order."""
    points = []
    for value in cfg.grid:
        if cfg.sweep_kind == "scale":
            points.append((value, cfg.sigma1, cfg.sigma2, cfg.noise_var))
        elif cfg.sweep_kind == "blur":
            points.append((cfg.s_w, cfg.sigma1, value, cfg.noise_var))
        else:
            points.append((cfg.s_w, cfg.sigma1, cfg.sigma2, value))
    if cfg.sweep_kind == "noise" and cfg.noise_sanity_row and 0.0 not in cfg.grid:
        points.append((cfg.s_w, cfg.sigma1, cfg.sigma2, 0.0))
    return points


def simulate_pair(texture, s_w, sigma1, sigma2, noise_var_255, seed):
    """Forward-simulate one pair with noise streams derived from ``seed``."""
    s1, s2 = np.random.SeedSequence(seed).generate_state(2, np.uint64)
    return warp_pair_forward(
        texture,
        s_w,
        sigma1,
        sigma2,
        NoiseSpec.from_8bit(noise_var_255, int(s1)),
        NoiseSpec.from_8bit(noise_var_255, int(s2)),
    )


def run_sweep(cfg: SweepConfig) -> list[SweepRow]:
    """One row per (grid point, estimator). All estimators see the same pair."""
    cfg = cfg.resolved()
    texture = make_texture(cfg.texture, cfg.size, cfg.master_seed)
    rows = []
    for index, (s_w, sigma1, sigma2, noise_var) in enumerate(_sweep_points(cfg)):
        true = relative_blur(sigma1, sigma2, s_w)
        seed = trial_seed(cfg.master_seed, index)
        g1, g2 = simulate_pair(texture, s_w, sigma1, sigma2, noise_var, seed)
        for kind in cfg.estimators:
            est = estimate_sigma_r(g1, g2, s_w, cfg.objective_spec(kind)).sigma_r_hat
            rows.append(
                SweepRow(cfg.sweep_kind, s_w, sigma1, sigma2, noise_var, kind, true, est, abs(est - true), seed)
            )
    return rows


def run_sweep_scale(cfg: SweepConfig | None = None) -> list[SweepRow]:
    cfg = dataclasses.replace(cfg or SweepConfig(), sweep_kind="scale")
    return run_sweep(cfg)


def run_sweep_blur(cfg: SweepConfig | None = None) -> list[SweepRow]:
    cfg = dataclasses.replace(cfg or SweepConfig(), sweep_kind="blur")
    return run_sweep(cfg)


def run_sweep_noise(cfg: SweepConfig | None = None) -> list[SweepRow]:
    cfg = dataclasses.replace(cfg or SweepConfig(), sweep_kind="noise")
    return run_sweep(cfg)


def mean_abs_error(rows, estimator, where=None) -> float:
    errs = [r.abs_error for r in rows if r.estimator == estimator and (where is None or where(r))]
    return float(np.mean(errs))


def _study_source(cfg: SweepConfig):
    # patch taken from the centre of a larger scene so magnification never leaves the support
    return FractalTexture(max(4 * cfg.patch_size, 64), seed=cfg.master_seed)


def run_bias_study(cfg: SweepConfig):
    """Monte Carlo bias of LS with and without the magnified system (``s_w`` defaults to 0.9)."""
    h = gaussian_kernel_vector(cfg.kernel_sigma, cfg.kernel_size)
    return monte_carlo_bias(
        _study_source(cfg),
        STUDY_SCALE if cfg.s_w is None else cfg.s_w,
        h,
        cfg.mc_noise_var,
        trials=cfg.trials,
        master_seed=cfg.master_seed,
        k=cfg.kernel_size,
        patch_size=cfg.patch_size,
    )


def run_interp_noise_report(cfg: SweepConfig):
    """Interpolation noise of the configured scene resampled by ``s_w`` (default 0.9)."""
    scene = make_texture(cfg.texture, cfg.size, cfg.master_seed)
    scale = STUDY_SCALE if cfg.s_w is None else cfg.s_w
    field_ = interpolation_noise(scene, scale, cfg.interp_method)
    return field_, noise_diagnostics(field_, cfg.bins, cfg.max_lag)


def fmt(value) -> str:
    """CSV cell: floats with 9 significant digits, everything else via ``str``."""
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".9g")
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    return str(value)


def to_csv(header, rows, provenance=None) -> str:
    """Render rows as CSV text, preceded by ``# key: value`` provenance lines."""
    buf = io.StringIO()
    for key, value in (provenance or {}).items():
        buf.write(f"# {key}: {value}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def sweep_csv(rows: list[SweepRow], provenance=None) -> str:
    header = [f.name for f in dataclasses.fields(SweepRow)]
    return to_csv(header, [dataclasses.astuple(r) for r in rows], provenance)


def spearman(x, y) -> float:
    rho = spearmanr(x, y).statistic
    return float(rho) if not math.isnan(rho) else 0.0
