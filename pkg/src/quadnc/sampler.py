"""Seeded sampling of quadrature outcomes from a state density.

The production path inverts a tabulated CDF; :func:`sample_rejection` is an
independent exact sampler kept as a cross-check.

Seeds: every random stream is a PCG64 generator seeded with a 64-bit integer.
Child seeds are derived as ``derive_seed(master, *job_index)``, i.e. the first
64-bit word of ``numpy.random.SeedSequence(master, spawn_key=job_index)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .errors import FormatError, InputError, InternalError
from .states import X_RANGE, Family, StateSpec, density

DEFAULT_RESOLUTION = 16384
MIN_RESOLUTION = 1024


def derive_seed(master: int, *job_index: int) -> int:
    ss = np.random.SeedSequence(int(master), spawn_key=tuple(int(k) for k in job_index))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


@dataclass(frozen=True, eq=False)
class QuadratureBatch:
    values: np.ndarray
    phi: float = 0.0
    spec: StateSpec | None = None
    seed: int | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1 or v.size < 1:
            raise InputError("empty batch")
        if not np.all(np.isfinite(v)):
            raise InputError("batch contains non-finite values")
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class SamplerTable:
    grid: np.ndarray
    cdf: np.ndarray
    spec: StateSpec | None = field(default=None)

    @property
    def resolution(self) -> int:
        return self.grid.shape[0]


def build_table(spec: StateSpec, resolution: int = DEFAULT_RESOLUTION) -> SamplerTable:
    """Tabulate the CDF of ``spec`` on a uniform grid over [-8, 8].

    Probability outside [-8, 8] is folded in by renormalizing the CDF to end at 1.
    """
    if resolution < MIN_RESOLUTION:
        raise InputError(f"resolution must be >= {MIN_RESOLUTION}, got {resolution}")
    grid = np.linspace(-X_RANGE, X_RANGE, resolution)
    p = density(spec, grid)
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise InternalError(f"density of {spec} is negative or non-finite on the sampling grid")
    dx = grid[1] - grid[0]
    cdf = np.empty(resolution)
    cdf[0] = 0.0
    np.cumsum(0.5 * dx * (p[1:] + p[:-1]), out=cdf[1:])
    total = cdf[-1]
    if not total > 0:
        raise InternalError(f"density of {spec} has no mass on [-8, 8]")
    cdf /= total
    if np.any(np.diff(cdf) < 0):
        raise InternalError("tabulated CDF is not monotone")
    grid.setflags(write=False)
    cdf.setflags(write=False)
    return SamplerTable(grid=grid, cdf=cdf, spec=spec)


def sample(table: SamplerTable, count: int, seed: int) -> QuadratureBatch:
    """Draw ``count`` outcomes by inverse-CDF with linear interpolation."""
    if count < 1:
        raise InputError(f"count must be >= 1, got {count}")
    u = make_rng(seed).random(count)
    values = kernels.inverse_cdf(u, table.grid, table.cdf)
    phi = table.spec.phi if table.spec is not None else 0.0
    return QuadratureBatch(values=values, phi=phi, spec=table.spec, seed=int(seed))


def sample_rejection(spec: StateSpec, count: int, seed: int) -> QuadratureBatch:
    """Exact rejection sampling on [-8, 8] under a uniform envelope."""
    if count < 1:
        raise InputError(f"count must be >= 1, got {count}")
    peak = float(np.max(density(spec, np.linspace(-X_RANGE, X_RANGE, 20001))))
    envelope = 1.05 * peak
    rng = make_rng(seed)
    out = []
    have = 0
    while have < count:
        m = max(1024, 2 * (count - have) * int(math.ceil(2 * X_RANGE * envelope)))
        x = rng.uniform(-X_RANGE, X_RANGE, m)
        p = density(spec, x)
        if np.any(p > envelope):
            raise InternalError("density exceeds the rejection envelope")
        keep = x[rng.random(m) * envelope < p]
        out.append(keep)
        have += keep.size
    values = np.concatenate(out)[:count]
    return QuadratureBatch(values=values, phi=spec.phi, spec=spec, seed=int(seed))


def simulate(spec: StateSpec, count: int, seed: int, resolution: int = DEFAULT_RESOLUTION) -> QuadratureBatch:
    return sample(build_table(spec, resolution), count, seed)


# --- batch files -----------------------------------------------------------

_PARAM_KEYS = ("alpha", "nbar", "n", "xi", "eta")


def _fmt(v: float) -> str:
    return "%.17g" % v


def format_batch_header(batch: QuadratureBatch) -> str:
    parts = [f"phi={_fmt(batch.phi)}", f"seed={batch.seed if batch.seed is not None else 'none'}"]
    if batch.spec is None:
        parts.append("family=none")
    else:
        parts.append(f"family={batch.spec.family.value}")
        for k in _PARAM_KEYS:
            v = getattr(batch.spec, k)
            parts.append(f"{k}={int(v) if k == 'n' else _fmt(v)}")
    return " ".join(parts)


def write_batch(batch: QuadratureBatch, path, comments: list[str] | None = None) -> None:
    lines = [format_batch_header(batch)]
    lines += [f"# {c}" for c in comments or []]
    lines += [_fmt(v) for v in batch.values.tolist()]
    Path(path).write_text("\n".join(lines) + "\n")


def _parse_header(line: str) -> dict:
    out = {}
    for tok in line.split():
        if "=" not in tok:
            raise FormatError(f"malformed header token {tok!r}")
        k, v = tok.split("=", 1)
        out[k] = v
    return out


def read_batch(path) -> QuadratureBatch:
    """Read an event file.

    The header line is optional so raw experimental dumps (one value per
    line) are accepted; lines starting with ``#`` are ignored.
    """
    text = Path(path).read_text()
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    header = {}
    if lines and "=" in lines[0]:
        header = _parse_header(lines[0])
        lines = lines[1:]
    if not lines:
        raise InputError(f"empty batch: {path}")
    try:
        values = np.array([float(ln.split()[0].rstrip(",")) for ln in lines])
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
    phi = float(header.get("phi", 0.0))
    seed = header.get("seed", "none")
    seed = None if seed == "none" else int(seed)
    spec = None
    fam = header.get("family", "none")
    if fam != "none":
        kw = {"family": Family.parse(fam), "phi": phi}
        for k in _PARAM_KEYS:
            if k in header:
                kw[k] = int(header[k]) if k == "n" else float(header[k])
        spec = StateSpec(**kw)
    return QuadratureBatch(values=values, phi=phi, spec=spec, seed=seed)
