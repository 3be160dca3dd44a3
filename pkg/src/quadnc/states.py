"""Quadrature probability densities of lossy single-mode states.

All densities use a vacuum quadrature variance of 1/4, i.e. the vacuum
density is ``sqrt(2/pi) * exp(-2 x**2)``.  Photon loss at overall efficiency
``eta`` is applied to every family.
"""
from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, replace

import numpy as np
from scipy import integrate

from .errors import InputError, ParameterError

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
VACUUM_VARIANCE = 0.25
X_RANGE = 8.0
PHASE_AVERAGE_NODES = 256


class Family(str, enum.Enum):
    COHERENT = "coherent"
    THERMAL = "thermal"
    FOCK = "fock"
    SQUEEZED_COHERENT = "squeezed"
    SPACS = "spacs"
    COHERENT_MIXTURE = "mixture"
    PHASE_AVERAGED_COHERENT = "phase-averaged"
    ODD_CAT = "cat"

    @property
    def code(self) -> int:
        """Stable small integer used when deriving per-example seeds."""
        return list(Family).index(self)

    @classmethod
    def parse(cls, tag: str) -> "Family":
        try:
            return cls(tag.strip().lower())
        except ValueError:
            valid = ", ".join(f.value for f in cls)
            raise ParameterError(f"unknown family {tag!r}; valid tags: {valid}") from None


class ClassLabel(enum.IntEnum):
    CLASSICAL = 0
    NONCLASSICAL = 1


_CLASSICAL = {
    Family.COHERENT,
    Family.THERMAL,
    Family.COHERENT_MIXTURE,
    Family.PHASE_AVERAGED_COHERENT,
}


def label_of(family: Family) -> ClassLabel:
    return ClassLabel.CLASSICAL if family in _CLASSICAL else ClassLabel.NONCLASSICAL


# fields each family actually reads; the rest are ignored
FAMILY_FIELDS = {
    Family.COHERENT: ("alpha",),
    Family.THERMAL: ("nbar",),
    Family.FOCK: ("n",),
    Family.SQUEEZED_COHERENT: ("alpha", "xi"),
    Family.SPACS: ("alpha",),
    Family.COHERENT_MIXTURE: ("alpha",),
    Family.PHASE_AVERAGED_COHERENT: ("alpha",),
    Family.ODD_CAT: ("alpha",),
}


@dataclass(frozen=True)
class StateSpec:
    """One state family with its physical parameters.

    Only the fields listed in ``FAMILY_FIELDS[family]`` (plus ``eta`` and
    ``phi``) influence the density.
    """

    family: Family
    alpha: float = 0.0
    nbar: float = 0.0
    n: int = 0
    xi: float = 0.0
    eta: float = 1.0
    phi: float = 0.0

    def __post_init__(self):
        if not isinstance(self.family, Family):
            object.__setattr__(self, "family", Family.parse(str(self.family)))
        self.validate()

    def validate(self) -> None:
        for name in ("alpha", "nbar", "xi", "eta", "phi"):
            if not math.isfinite(getattr(self, name)):
                raise ParameterError(f"{name} must be finite, got {getattr(self, name)!r}")
        if not 0.0 < self.eta <= 1.0:
            raise ParameterError(f"eta must lie in (0, 1], got {self.eta}")
        if self.nbar < 0:
            raise ParameterError(f"nbar must be >= 0, got {self.nbar}")
        if self.xi < 0:
            raise ParameterError(f"xi must be >= 0, got {self.xi}")
        if int(self.n) != self.n or self.n < 0:
            raise ParameterError(f"n must be a non-negative integer, got {self.n}")

    @property
    def label(self) -> ClassLabel:
        return label_of(self.family)

    def with_(self, **changes) -> "StateSpec":
        return replace(self, **changes)

    def relevant_params(self) -> dict:
        """Parameters read by this family, in a stable order."""
        return {k: getattr(self, k) for k in FAMILY_FIELDS[self.family] + ("eta", "phi")}

    def to_dict(self) -> dict:
        d = asdict(self)
        d["family"] = self.family.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "StateSpec":
        d = dict(d)
        d["family"] = Family.parse(d["family"])
        if "n" in d:
            d["n"] = int(d["n"])
        return cls(**d)


def hermite(k: int, y):
    """Physicists' Hermite polynomial H_k(y) by the three-term recurrence."""
    y = np.asarray(y, dtype=float)
    h_prev = np.ones_like(y)
    if k == 0:
        return h_prev
    h = 2.0 * y
    for j in range(1, k):
        h_prev, h = h, 2.0 * y * h - 2.0 * j * h_prev
    return h


def _gaussian(x, mean, var):
    return np.exp(-((x - mean) ** 2) / (2.0 * var)) / np.sqrt(2.0 * math.pi * var)


def _coherent(x, alpha, eta, phi):
    return SQRT_2_OVER_PI * np.exp(-2.0 * (x - math.sqrt(eta) * alpha * math.cos(phi)) ** 2)


def _thermal(x, nbar, eta):
    w = 1.0 + 2.0 * eta * nbar
    return np.sqrt(2.0 / (math.pi * w)) * np.exp(-2.0 * x**2 / w)


def ideal_fock_density(k: int, x):
    """Lossless density of the k-photon Fock state."""
    x = np.asarray(x, dtype=float)
    hk = hermite(k, math.sqrt(2.0) * x)
    return SQRT_2_OVER_PI * np.exp(-2.0 * x**2) * hk**2 / (2.0**k * math.factorial(k))


def _fock(x, n, eta):
    # binomial photon loss: each photon survives with probability eta
    out = np.zeros_like(x)
    for k in range(n + 1):
        w = math.comb(n, k) * eta**k * (1.0 - eta) ** (n - k)
        if w:
            out += w * ideal_fock_density(k, x)
    return out


def fock_density_tabulated(n: int, eta: float, x):
    """Lossy Fock density written as a single sum over even Hermite polynomials.

    Algebraically identical to the binomial-loss mixture used by
    :func:`density`; tests use it as an independent evaluation route.
    """
    x = np.asarray(x, dtype=float)
    terms = sum(
        math.comb(n, k) * eta**k / (2.0**k * math.factorial(k)) * hermite(2 * k, math.sqrt(2.0) * x)
        for k in range(n + 1)
    )
    return SQRT_2_OVER_PI * np.exp(-2.0 * x**2) * terms


def squeezed_variance(xi: float, eta: float, phi: float) -> float:
    """Quadrature variance of a lossy squeezed state; phi=0 is the squeezed axis."""
    c2, s2 = math.cos(phi) ** 2, math.sin(phi) ** 2
    return (1.0 - eta + eta * (math.exp(-2.0 * xi) * c2 + math.exp(2.0 * xi) * s2)) / 4.0


def _squeezed(x, alpha, xi, eta, phi):
    mean = math.sqrt(eta) * alpha * math.cos(phi)
    return _gaussian(x, mean, squeezed_variance(xi, eta, phi))


def _spacs(x, alpha, eta, phi):
    c, s = math.cos(phi), math.sin(phi)
    se = math.sqrt(eta)
    g = _coherent(x, alpha, eta, phi) / (1.0 + alpha**2)
    bracket = (
        eta * (2.0 * x * c - (2.0 * eta - 1.0) / se * alpha) ** 2
        + 4.0 * eta * x**2 * s**2
        + (1.0 - eta) * (1.0 + 4.0 * eta * alpha**2 * s**2)
    )
    return g * bracket


def _mixture(x, alpha, eta, phi):
    return 0.5 * (_coherent(x, alpha, eta, phi) + _coherent(x, -alpha, eta, phi))


def _phase_averaged(x, alpha, eta):
    theta = 2.0 * math.pi * np.arange(PHASE_AVERAGE_NODES) / PHASE_AVERAGE_NODES
    means = math.sqrt(eta) * alpha * np.cos(theta)
    flat = x.reshape(-1)
    out = np.empty_like(flat)
    # chunked so the (points x nodes) temporary stays small
    step = 4096
    for i in range(0, flat.size, step):
        d = flat[i : i + step, None] - means[None, :]
        out[i : i + step] = SQRT_2_OVER_PI * np.exp(-2.0 * d * d).mean(axis=1)
    return out.reshape(x.shape)


def _odd_cat(x, alpha, eta, phi):
    """Lossy odd cat, rearranged to avoid cancellation as alpha -> 0.

    The tabulated bracket equals
    2 exp(-2x^2 - 2 eta a^2 cos^2) [cosh u - exp(-2(1-eta) a^2) cos v]
    with u = 4 x sqrt(eta) a cos(phi), v = 4 x sqrt(eta) a sin(phi).
    """
    a2 = alpha * alpha
    if a2 == 0.0:
        # limit: lossy single photon
        return SQRT_2_OVER_PI * np.exp(-2.0 * x**2) * (4.0 * eta * x**2 + 1.0 - eta)
    b = math.sqrt(eta) * alpha
    c, s = math.cos(phi), math.sin(phi)
    u = 4.0 * x * b * c
    v = 4.0 * x * b * s
    coh = math.expm1(-2.0 * (1.0 - eta) * a2)
    norm = -math.expm1(-2.0 * a2)
    log_env = -2.0 * x**2 - 2.0 * b * b * c * c
    big = np.abs(u) > 600.0
    if not np.any(big):
        inner = 2.0 * np.sinh(0.5 * u) ** 2 + 2.0 * np.sin(0.5 * v) ** 2 - np.cos(v) * coh
        return SQRT_2_OVER_PI * np.exp(log_env) * inner / norm
    # far tails (only reached by tail integrals): cosh(u) dominates, keep it in the exponent
    res = np.empty_like(x)
    ok = ~big
    inner = 2.0 * np.sinh(0.5 * u[ok]) ** 2 + 2.0 * np.sin(0.5 * v[ok]) ** 2 - np.cos(v[ok]) * coh
    res[ok] = np.exp(log_env[ok]) * inner
    ub = np.abs(u[big])
    res[big] = 0.5 * np.exp(log_env[big] + ub)
    return SQRT_2_OVER_PI * res / norm


def density(spec: StateSpec, x):
    """Quadrature density p(x, phi) of ``spec``.

    ``x`` may be a scalar or an array; a scalar input returns a float.
    """
    xa = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(xa)):
        raise InputError("quadrature value must be finite")
    fam = spec.family
    if fam is Family.COHERENT:
        p = _coherent(xa, spec.alpha, spec.eta, spec.phi)
    elif fam is Family.THERMAL:
        p = _thermal(xa, spec.nbar, spec.eta)
    elif fam is Family.FOCK:
        p = _fock(xa, int(spec.n), spec.eta)
    elif fam is Family.SQUEEZED_COHERENT:
        p = _squeezed(xa, spec.alpha, spec.xi, spec.eta, spec.phi)
    elif fam is Family.SPACS:
        p = _spacs(xa, spec.alpha, spec.eta, spec.phi)
    elif fam is Family.COHERENT_MIXTURE:
        p = _mixture(xa, spec.alpha, spec.eta, spec.phi)
    elif fam is Family.PHASE_AVERAGED_COHERENT:
        p = _phase_averaged(np.atleast_1d(xa), spec.alpha, spec.eta).reshape(xa.shape)
    elif fam is Family.ODD_CAT:
        p = _odd_cat(np.atleast_1d(xa), spec.alpha, spec.eta, spec.phi).reshape(xa.shape)
    else:  # pragma: no cover
        raise ParameterError(f"unsupported family {fam}")
    p = np.asarray(p, dtype=float)
    if p.ndim == 0:
        return float(p)
    return p


def density_grid(spec: StateSpec, xmin: float, xmax: float, npoints: int) -> list[tuple[float, float]]:
    if npoints < 2:
        raise InputError(f"density grid needs at least 2 points, got {npoints}")
    if not xmin < xmax:
        raise InputError(f"need xmin < xmax, got [{xmin}, {xmax}]")
    xs = np.linspace(xmin, xmax, npoints)
    ps = density(spec, xs)
    return list(zip(xs.tolist(), ps.tolist()))


def integrate_density(spec: StateSpec, a: float, b: float) -> float:
    """Adaptive-quadrature integral of the density over [a, b]."""
    val, _ = integrate.quad(lambda t: density(spec, t), a, b, limit=400, epsabs=1e-14, epsrel=1e-12)
    return val


def tail_mass(spec: StateSpec) -> float:
    """Probability of an outcome with |x| > 8.

    The two tails are integrated directly rather than formed as
    ``1 - integral(-8, 8)``, so tiny tails are not lost to round-off.
    """
    f = lambda t: density(spec, t)  # noqa: E731
    left, _ = integrate.quad(f, -np.inf, -X_RANGE, limit=200, epsabs=0.0, epsrel=1e-10)
    right, _ = integrate.quad(f, X_RANGE, np.inf, limit=200, epsabs=0.0, epsrel=1e-10)
    return left + right
