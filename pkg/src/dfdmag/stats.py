"""Matrix-form analysis of blur estimation with and without magnification.

A ``k x k`` kernel ``h`` convolved with an image patch, restricted to the
valid region, is linear in ``h``: ``g = F vec(h)``. The columns of ``F`` are
shifted copies of the patch (a block Toeplitz matrix). With ``F_s`` built from
the magnified patch:

* LS with the right matrix, ``(F_s' F_s)^-1 F_s' g``, is unbiased with
  covariance ``var (F_s' F_s)^-1`` (the Cramer-Rao bound for white Gaussian noise);
* LS with the unmagnified matrix has bias ``(F' F)^-1 F' F_s h - h``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import linalg
from scipy import stats as sps

from ._validation import check_image, check_scalar
from .exceptions import DomainError, NumericError, RankDeficientError
from .textures import AnalyticImage
from .warp import scale_image

COND_WARN = 1e8
COND_ERROR = 1e12


@dataclass(frozen=True)
class ConvSystem:
    """``matrix @ vec(h)`` equals the valid-region convolution ``h * patch``.

    ``vec`` is row-major over the ``k x k`` kernel.
    """

    matrix: np.ndarray = field(repr=False)
    kernel_size: int
    patch: np.ndarray = field(repr=False)
    condition: float = math.nan

    @property
    def output_shape(self):
        n = self.kernel_size - 1
        return (self.patch.shape[0] - n, self.patch.shape[1] - n)

    def apply(self, h) -> np.ndarray:
        return self.matrix @ np.asarray(h, dtype=np.float64).ravel()


def _check_condition(cond: float, what: str):
    if not np.isfinite(cond) or cond > COND_ERROR:
        raise RankDeficientError(f"{what} is rank deficient (condition number {cond:.3g})")
    if cond > COND_WARN:
        warnings.warn(f"{what} is ill-conditioned (condition number {cond:.3g})", RuntimeWarning, stacklevel=3)


def build_conv_system(patch, k: int = 5, check_rank: bool = True) -> ConvSystem:
    """Block Toeplitz matrix of ``patch`` for a ``k x k`` kernel (valid region).

    Raises :class:`RankDeficientError` when the columns are (numerically)
    dependent, e.g. for a flat patch.
    """
    patch = check_image(patch, "patch")
    if int(k) != k or k < 1 or k % 2 == 0:
        raise DomainError(f"kernel size must be a positive odd integer, got {k!r}")
    k = int(k)
    if min(patch.shape) < k + 2:
        raise DomainError(f"patch {patch.shape} too small for a {k}x{k} kernel")
    # windows[i, j] is patch[i:i+k, j:j+k]; convolution pairs h[a, b] with
    # patch[i + k-1-a, j + k-1-b], i.e. the window flipped in both axes
    windows = sliding_window_view(patch, (k, k))[:, :, ::-1, ::-1]
    matrix = np.ascontiguousarray(windows.reshape(-1, k * k))
    cond = math.nan
    if check_rank:
        sv = np.linalg.svd(matrix, compute_uv=False)
        cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else math.inf
        _check_condition(cond, "convolution system")
    return ConvSystem(matrix, k, patch, cond)


def _matrix(system) -> np.ndarray:
    return system.matrix if isinstance(system, ConvSystem) else np.asarray(system, dtype=np.float64)


def ls_blur_estimate(system, g) -> np.ndarray:
    """Least-squares kernel ``argmin ||g - F h||`` via a QR factorization.

    ``g`` may be a vector or a matrix holding one observation per column.
    """
    F = _matrix(system)
    g = np.asarray(g, dtype=np.float64)
    Q, R = linalg.qr(F, mode="economic")
    diag = np.abs(np.diag(R))
    if diag.min() <= diag.max() * 1e-14:
        raise RankDeficientError("convolution system is rank deficient")
    return linalg.solve_triangular(R, Q.T @ g)


def analytic_bias(F, F_s, h) -> np.ndarray:
    """Bias ``(F' F)^-1 F' F_s h - h`` of LS with ``F`` when the data follow ``F_s``.

    Evaluated as the LS fit of ``(F_s - F) h`` so it is exactly zero when the
    two systems coincide.
    """
    A, B = _matrix(F), _matrix(F_s)
    if A.shape != B.shape:
        raise DomainError(f"system shapes differ: {A.shape} vs {B.shape}")
    h = np.asarray(h, dtype=np.float64).ravel()
    if h.size != A.shape[1]:
        raise DomainError(f"kernel has {h.size} taps, systems expect {A.shape[1]}")
    diff = (B - A) @ h
    if not diff.any():
        return np.zeros_like(h)
    return ls_blur_estimate(A, diff)


def crlb(F_s, noise_variance: float) -> np.ndarray:
    """Cramer-Rao bound ``noise_variance * (F_s' F_s)^-1`` for the kernel estimate."""
    noise_variance = check_scalar(noise_variance, "noise_variance", min_value=0.0, include_min=False)
    F = _matrix(F_s)
    R = linalg.qr(F, mode="r")[0][: F.shape[1]]
    diag = np.abs(np.diag(R))
    if diag.min() <= diag.max() * 1e-14:
        raise RankDeficientError("convolution system is rank deficient")
    # (F'F)^-1 = R^-1 R^-T
    Rinv = linalg.solve_triangular(R, np.eye(R.shape[0]))
    return noise_variance * (Rinv @ Rinv.T)


def gaussian_kernel_vector(sigma: float, k: int) -> np.ndarray:
    """Sampled Gaussian truncated to ``k x k`` and normalized, flattened row-major."""
    r = k // 2
    x = np.arange(-r, r + 1, dtype=np.float64)
    # tiny sigma overflows to inf, which correctly zeroes the off-centre taps
    with np.errstate(over="ignore"):
        w = np.exp(-0.5 * (x / sigma) ** 2)
    h = np.outer(w, w)
    return (h / h.sum()).ravel()


def trial_seed(master_seed: int, trial: int) -> int:
    """Seed of trial ``trial``: first 64-bit word of ``SeedSequence([master_seed, trial])``."""
    return int(np.random.SeedSequence([int(master_seed), int(trial)]).generate_state(1, np.uint64)[0])


@dataclass
class McReport:
    label: str
    trials: int
    empirical_bias: np.ndarray
    bias_std_err: np.ndarray
    empirical_cov_trace: float
    crlb_trace: float
    master_seed: int
    analytic_bias: np.ndarray
    trial_seeds: list = field(default_factory=list, repr=False)

    @property
    def bias_norm(self) -> float:
        return float(np.linalg.norm(self.empirical_bias))

    @property
    def z_scores(self) -> np.ndarray:
        """``(empirical - analytic) / std_err`` per kernel component."""
        return (self.empirical_bias - self.analytic_bias) / self.bias_std_err


def scaled_patch_pair(source, s_w: float, size: int | None = None, method: str = "bicubic"):
    """Reference patch ``f`` and magnified patch ``f(x / s_w)``.

    ``source`` is a raster (warped with ``method``) or an :class:`AnalyticImage`
    (magnified exactly). Both are cropped to the central ``size x size``
    window when ``size`` is given.
    """
    s_w = check_scalar(s_w, "s_w", min_value=0.0, include_min=False)
    if isinstance(source, AnalyticImage):
        f = source.rasterize()
        f_s = source.rasterize(scale=1.0 / s_w)
    else:
        f = check_image(source, "patch")
        f_s = f if s_w == 1.0 else scale_image(f, 1.0 / s_w, method)
    if size is not None:
        h, w = f.shape
        if size > min(h, w):
            raise DomainError(f"patch size {size} exceeds source {f.shape}")
        top, left = (h - size) // 2, (w - size) // 2
        f = f[top : top + size, left : left + size]
        f_s = f_s[top : top + size, left : left + size]
    return f, f_s


def monte_carlo_bias(
    patch,
    s_w: float,
    h_true,
    noise_variance: float,
    trials: int = 500,
    master_seed: int = 0,
    k: int | None = None,
    patch_size: int | None = None,
    method: str = "bicubic",
):
    """Simulate ``g = F_s h_true + noise`` and fit with ``F_s`` and with ``F``.

    Returns ``(aware, ignorant)`` :class:`McReport` objects. ``aware`` uses the
    magnified system (unbiased, covariance at the bound); ``ignorant`` uses
    the unmagnified one. Its covariance trace is also that of the
    bias-corrected estimator, since subtracting a constant does not change the
    covariance. Trial ``t`` draws its noise from :func:`trial_seed`.
    """
    if int(trials) != trials or trials < 2:
        raise DomainError(f"trials must be an integer >= 2, got {trials!r}")
    trials = int(trials)
    noise_variance = check_scalar(noise_variance, "noise_variance", min_value=0.0, include_min=False)
    h_true = np.asarray(h_true, dtype=np.float64)
    if k is None:
        k = h_true.shape[0] if h_true.ndim == 2 else int(round(math.sqrt(h_true.size)))
    h_true = h_true.ravel()
    if h_true.size != k * k:
        raise DomainError(f"h_true has {h_true.size} taps, expected {k * k}")

    f, f_s = scaled_patch_pair(patch, s_w, patch_size, method)
    F = build_conv_system(f, k)
    F_s = build_conv_system(f_s, k)

    clean = F_s.apply(h_true)
    seeds = [trial_seed(master_seed, t) for t in range(trials)]
    std = math.sqrt(noise_variance)
    G = np.empty((clean.size, trials))
    for t, seed in enumerate(seeds):
        G[:, t] = clean + np.random.default_rng(seed).normal(0.0, std, clean.size)

    reports = []
    for label, system, expected_bias in (
        ("scale-aware", F_s, np.zeros_like(h_true)),
        ("scale-ignorant", F, analytic_bias(F, F_s, h_true)),
    ):
        H = ls_blur_estimate(system, G)
        if not np.all(np.isfinite(H)):
            raise NumericError(f"{label} estimates are not finite")
        mean = H.mean(axis=1)
        cov = np.cov(H)
        reports.append(
            McReport(
                label=label,
                trials=trials,
                empirical_bias=mean - h_true,
                bias_std_err=np.sqrt(np.diag(cov) / trials),
                empirical_cov_trace=float(np.trace(cov)),
                crlb_trace=float(np.trace(crlb(F_s, noise_variance))),
                master_seed=int(master_seed),
                analytic_bias=expected_bias,
                trial_seeds=seeds,
            )
        )
    return tuple(reports)


@dataclass
class NoiseDiagnostics:
    bin_edges: np.ndarray
    counts: np.ndarray
    excess_kurtosis: float
    autocorr: np.ndarray
    n: int

    @property
    def correlation_threshold(self) -> float:
        """``3 / sqrt(n)``, the 3-sigma band of a white-noise lag correlation."""
        return 3.0 / math.sqrt(self.n)


def noise_diagnostics(field, bins: int = 41, max_lag: int = 5) -> NoiseDiagnostics:
    """Histogram, excess kurtosis and horizontal autocorrelation of a noise field.

    Masked pixels are ignored. The histogram covers ``[-m, m]`` with ``m`` the
    largest absolute value. Lag ``L`` correlation pairs pixels ``L`` columns
    apart where both are unmasked.
    """
    data = np.ma.asarray(field, dtype=np.float64)
    if data.ndim != 2:
        raise DomainError(f"noise field must be 2-D, got {data.ndim}-D")
    mask = np.ma.getmaskarray(data)
    values = data.compressed()
    n = values.size
    if n < 2:
        raise DomainError("noise field has fewer than two valid samples")
    mean = values.mean()
    var = np.mean((values - mean) ** 2)
    if not var > 0.0:
        raise NumericError("constant noise field: kurtosis is undefined")

    m = float(np.max(np.abs(values)))
    counts, edges = np.histogram(values, bins=bins, range=(-m, m))
    kurt = float(sps.kurtosis(values, fisher=True, bias=True))

    centered = np.where(mask, 0.0, data.filled(0.0) - mean)
    valid = ~mask
    ac = np.empty(max_lag + 1)
    ac[0] = 1.0
    for lag in range(1, max_lag + 1):
        both = valid[:, :-lag] & valid[:, lag:]
        pairs = both.sum()
        if pairs == 0:
            ac[lag] = np.nan
            continue
        ac[lag] = float(np.sum(centered[:, :-lag] * centered[:, lag:] * both) / pairs / var)
    return NoiseDiagnostics(edges, counts, kurt, ac, n)
