"""Bipolar Watson distribution on the unit sphere.

Axes are plain ``float64`` arrays: a single axis has shape ``(3,)`` and a
sample has shape ``(n, 3)``.  ``x`` and ``-x`` describe the same axis;
:func:`canonical_axes` picks the representative whose first nonzero
component is positive.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate, optimize

from .errors import DegenerateMeanError, DomainError, NonConcentratedError

SIGN_TOL = 1e-12
TIE_TOL = 1e-9
ASYMPTOTIC_KAPPA = 500.0
QUAD_RTOL = 1e-12
MAX_ANGLE_DISPERSION_DEG = math.degrees(math.asin(math.sqrt(2.0 / 3.0)))


def canonical_axes(x):
    """Flip signs so the first component with ``|c| > 1e-12`` is positive.

    Works on any array whose last dimension is 3.
    """
    x = np.array(x, dtype=float)
    if x.shape[-1] != 3:
        raise DomainError("axes must have a trailing dimension of 3")
    big = np.abs(x) > SIGN_TOL
    first = np.argmax(big, axis=-1)
    lead = np.take_along_axis(x, first[..., None], axis=-1)
    sign = np.where(lead < 0, -1.0, 1.0)
    return x * sign


def as_axes(x, normalize=True):
    """Validate and canonicalize an axis or stack of axes."""
    x = np.array(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] != 3:
        raise DomainError("axes must have a trailing dimension of 3")
    if not np.all(np.isfinite(x)):
        raise DomainError("axes must be finite")
    norms = np.linalg.norm(x, axis=-1, keepdims=True)
    if np.any(norms == 0):
        raise DomainError("zero vector is not an axis")
    if normalize:
        x = x / norms
    elif np.any(np.abs(norms - 1) > SIGN_TOL):
        raise DomainError("axes must have unit norm")
    return canonical_axes(x)


def _as_sample(sample):
    x = np.asarray(sample, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != 3:
        raise DomainError("a sample must have shape (n, 3)")
    if x.shape[0] == 0:
        raise DomainError("empty sample")
    return x


@dataclass(frozen=True)
class WatsonParams:
    mean_axis: np.ndarray
    kappa: float

    def __post_init__(self):
        if not self.kappa >= 0:
            raise DomainError("kappa must be >= 0 (girdle Watson is not supported)")
        object.__setattr__(self, "mean_axis", as_axes(self.mean_axis))
        object.__setattr__(self, "kappa", float(self.kappa))


@dataclass(frozen=True)
class DispersionSummary:
    gamma: float
    s: float
    angle_dispersion_deg: float
    kappa_hat: Optional[float]
    n: int
    mean_axis: Optional[np.ndarray]
    status: str = "ok"  # "ok" | "non-concentrated" | "degenerate-mean"

    @property
    def concentrated(self):
        return self.kappa_hat is not None


# ---------------------------------------------------------------- scatter / eigen


def scatter_matrix(sample):
    """``(1/n) sum x_i x_i^T`` of an ``(n, 3)`` sample."""
    x = _as_sample(sample)
    return x.T @ x / x.shape[0]


def scatter_matrices(x):
    """Batched scatter matrices of ``(..., n, 3)`` samples -> ``(..., 3, 3)``."""
    x = np.asarray(x, dtype=float)
    return np.einsum("...ni,...nj->...ij", x, x) / x.shape[-2]


def top_eigenvalues(S):
    """Largest eigenvalue of each symmetric 3x3 matrix in a stack."""
    return np.linalg.eigvalsh(S)[..., -1]


def principal_axis(S):
    """Largest eigenvalue of ``S`` and its canonical unit eigenvector.

    Raises ``DegenerateMeanError`` when the two largest eigenvalues are
    closer than ``TIE_TOL``.
    """
    S = np.asarray(S, dtype=float)
    if S.shape != (3, 3):
        raise DomainError("scatter matrix must be 3x3")
    w, v = np.linalg.eigh(S)
    if w[2] - w[1] < TIE_TOL:
        raise DegenerateMeanError(w[2], w[1])
    return float(w[2]), canonical_axes(v[:, 2])


# ---------------------------------------------------------------- normalizer and A


def _scaled_integral(kappa, power):
    # int_0^1 t^power exp(kappa (t^2 - 1)) dt
    val, _ = integrate.quad(
        lambda t: t**power * math.exp(kappa * (t * t - 1.0)),
        0.0,
        1.0,
        epsabs=0.0,
        epsrel=QUAD_RTOL,
        limit=200,
    )
    return val


def _radial_integral(kappa):
    # asymptotic series of int_0^1 kappa exp(-kappa u) / sqrt(1 - u) du,
    # which sits inside [1 + (k-1)e^-k, 1 + 2/k - (3 + 2/k)e^-k]
    k = kappa
    return 1.0 + 1.0 / (2 * k) + 3.0 / (4 * k**2) + 15.0 / (8 * k**3) + 105.0 / (16 * k**4)


def _radial_integral_derivative(kappa):
    k = kappa
    return -1.0 / (2 * k**2) - 3.0 / (2 * k**3) - 45.0 / (8 * k**4) - 105.0 / (4 * k**5)


def _check_kappa(kappa):
    if not kappa >= 0:
        raise DomainError(f"kappa must be >= 0, got {kappa!r}")
    return float(kappa)


def log_normalizing_constant(kappa):
    """``log C(kappa)``; stays finite for kappa far beyond exp overflow."""
    kappa = _check_kappa(kappa)
    if kappa >= ASYMPTOTIC_KAPPA:
        return math.log(kappa) - math.log(math.pi) - kappa - math.log(_radial_integral(kappa))
    if kappa == 0:
        return -math.log(2 * math.pi)
    return -(math.log(2 * math.pi) + kappa + math.log(_scaled_integral(kappa, 0)))


def normalizing_constant(kappa):
    """``C(kappa) = [2 pi int_0^1 exp(kappa u^2) du]^-1`` (hemisphere convention)."""
    return math.exp(log_normalizing_constant(kappa))


def concentration_A(kappa):
    """``A(kappa) = -C'(kappa)/C(kappa)``, the expected ``(mu^T x)^2``."""
    kappa = _check_kappa(kappa)
    if kappa == 0:
        return 1.0 / 3.0
    if kappa >= ASYMPTOTIC_KAPPA:
        return 1.0 - 1.0 / kappa + _radial_integral_derivative(kappa) / _radial_integral(kappa)
    return _scaled_integral(kappa, 2) / _scaled_integral(kappa, 0)


def solve_concentration(gamma):
    """Maximum-likelihood kappa: the root of ``A(kappa) = gamma``."""
    gamma = float(gamma)
    if not gamma > 1.0 / 3.0:
        raise NonConcentratedError(f"gamma = {gamma!r} <= 1/3: no concentrated solution")
    if not gamma < 1.0:
        raise DomainError(f"gamma must be < 1, got {gamma!r}")
    hi = 2.0 / (1.0 - gamma) + 10.0
    while concentration_A(hi) < gamma:
        hi *= 2.0
    return optimize.brentq(
        lambda k: concentration_A(k) - gamma, 0.0, hi, xtol=1e-300, rtol=1e-15, maxiter=500
    )


# ---------------------------------------------------------------- estimators


def dispersion(sample):
    """Mean axis, dispersion ``s = 1 - gamma`` and the MLE of kappa."""
    x = _as_sample(sample)
    n = x.shape[0]
    S = x.T @ x / n
    w, v = np.linalg.eigh(S)
    gamma = float(min(w[2], 1.0))
    s = 1.0 - gamma
    angle = math.degrees(math.asin(math.sqrt(min(max(s, 0.0), 1.0))))
    if w[2] - w[1] < TIE_TOL:
        return DispersionSummary(gamma, s, angle, None, n, None, "degenerate-mean")
    axis = canonical_axes(v[:, 2])
    if gamma <= 1.0 / 3.0:
        return DispersionSummary(gamma, s, angle, None, n, axis, "non-concentrated")
    if gamma >= 1.0 - 1e-15:
        kappa_hat = math.inf
    else:
        kappa_hat = solve_concentration(gamma)
    return DispersionSummary(gamma, s, angle, kappa_hat, n, axis)


def watson_log_density(x, params):
    """Log density of the Watson law w.r.t. area on the half sphere."""
    x = np.asarray(x, dtype=float)
    c = x @ params.mean_axis
    return log_normalizing_constant(params.kappa) + params.kappa * c * c


# ---------------------------------------------------------------- sampling


def _colatitude_cosines(kappa, size, rng):
    """Draw ``u = cos(theta)`` on [0, 1] with density proportional to exp(kappa u^2).

    Rejection from the truncated exponential envelope exp(kappa u) >= exp(kappa u^2);
    acceptance tends to 1/2 as kappa grows, instead of 1/(2 kappa) for a
    uniform-in-u envelope.
    """
    if kappa == 0:
        return rng.random(size)
    out = np.empty(size)
    filled = 0
    while filled < size:
        m = int(1.2 * (size - filled) / _acceptance_rate(kappa)) + 16
        v = rng.random(m)
        u = 1.0 + np.log1p(v * math.expm1(-kappa)) / kappa
        keep = u[rng.random(m) < np.exp(kappa * u * (u - 1.0))]
        k = min(keep.size, size - filled)
        out[filled : filled + k] = keep[:k]
        filled += k
    return np.clip(out, 0.0, 1.0)


def _acceptance_rate(kappa):
    # int exp(k u^2) / int exp(k u) over [0, 1]
    log_num = log_normalizing_constant(0.0) - log_normalizing_constant(kappa)
    log_den = math.log(-math.expm1(-kappa) / kappa) + kappa
    return min(1.0, max(math.exp(log_num - log_den), 1e-3))


def sample_pole(kappa, size, rng):
    """``size`` Watson draws around the +z pole, as an array ``(size, 3)``."""
    kappa = _check_kappa(kappa)
    u = _colatitude_cosines(kappa, size, rng)
    phi = rng.random(size) * (2.0 * math.pi)
    st = np.sqrt(np.maximum(1.0 - u * u, 0.0))
    return np.stack([st * np.cos(phi), st * np.sin(phi), u], axis=-1)


def frame_from_pole(mu):
    """Rotation matrices taking +z to ``mu``; ``mu`` may be a stack ``(..., 3)``."""
    mu = np.asarray(mu, dtype=float)
    mu = mu / np.linalg.norm(mu, axis=-1, keepdims=True)
    helper = np.zeros(mu.shape)
    use_x = np.abs(mu[..., 0]) < 0.9
    helper[..., 0] = np.where(use_x, 1.0, 0.0)
    helper[..., 1] = np.where(use_x, 0.0, 1.0)
    e1 = np.cross(helper, mu)
    e1 /= np.linalg.norm(e1, axis=-1, keepdims=True)
    e2 = np.cross(mu, e1)
    return np.stack([e1, e2, mu], axis=-1)


def sample_watson(params, n, seed=None):
    """``n`` i.i.d. canonical axes from Watson(mean_axis, kappa).

    ``seed`` is an integer or a ``numpy.random.Generator``.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    rng = np.random.default_rng(seed)
    pts = sample_pole(params.kappa, int(n), rng)
    R = frame_from_pole(params.mean_axis)
    return canonical_axes(pts @ R.T)


def rotation_about(axis, angle_rad):
    """Rodrigues rotation matrix for a unit ``axis`` and angle in radians."""
    k = np.asarray(axis, dtype=float)
    k = k / np.linalg.norm(k)
    K = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + math.sin(angle_rad) * K + (1 - math.cos(angle_rad)) * (K @ K)
