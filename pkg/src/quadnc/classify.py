"""Verdicts from network outputs, the sub-shot-noise baseline, and evaluation sweeps."""
from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import nn
from .errors import InputError
from .features import featurize, featurize_values, subsample
from .sampler import QuadratureBatch, build_table, derive_seed, make_rng, sample
from .states import VACUUM_VARIANCE, X_RANGE, Family, StateSpec, squeezed_variance

DEFAULT_THRESHOLD = 0.9
DEFAULT_EVENTS = 16000
DEFAULT_SEEDS = 4
DEFAULT_ETA = 0.6

# per-sweep stream codes for derive_seed
_SWEEP_CODES = {"families": 1, "phase-squeezed": 2, "spacs-grid": 3, "cat": 4, "sample-size": 5, "ablation": 6}


@dataclass(frozen=True)
class Verdict:
    r: float
    threshold: float
    nonclassical: bool
    sample_variance: float
    variance_nonclassical: bool
    events: int = 0


def verdict_from(r: float, values: np.ndarray, threshold: float = DEFAULT_THRESHOLD) -> Verdict:
    inside = values[(values >= -X_RANGE) & (values <= X_RANGE)]
    var = float(np.var(inside, ddof=1)) if inside.size > 1 else math.nan
    return Verdict(
        r=float(r),
        threshold=float(threshold),
        nonclassical=bool(r > threshold),
        sample_variance=var,
        variance_nonclassical=bool(var < VACUUM_VARIANCE),
        events=int(inside.size),
    )


def _check_threshold(threshold: float) -> None:
    if not 0.0 < threshold < 1.0:
        raise InputError(f"threshold must lie in (0, 1), got {threshold}")


def predict(model: nn.NetworkModel, batch: QuadratureBatch, threshold: float = DEFAULT_THRESHOLD) -> Verdict:
    """Classify one batch: nonclassical iff r > threshold (strict)."""
    _check_threshold(threshold)
    fv = featurize(batch)
    r = float(nn.forward(model, fv)[1])
    return verdict_from(r, batch.values, threshold)


def predict_values(model, values: np.ndarray, threshold: float = DEFAULT_THRESHOLD) -> Verdict:
    r = float(nn.forward(model, featurize_values(values))[1])
    return verdict_from(r, values, threshold)


@dataclass
class SweepPoint:
    params: dict
    verdicts: list
    spec: StateSpec | None = None

    @property
    def rs(self) -> np.ndarray:
        return np.array([v.r for v in self.verdicts])

    @property
    def r(self) -> float:
        return float(self.rs.mean())

    @property
    def variance(self) -> float:
        return float(np.mean([v.sample_variance for v in self.verdicts]))

    @property
    def nonclassical(self) -> bool:
        """Majority verdict; ties count as classical."""
        return 2 * sum(v.nonclassical for v in self.verdicts) > len(self.verdicts)

    @property
    def variance_nonclassical(self) -> bool:
        return 2 * sum(v.variance_nonclassical for v in self.verdicts) > len(self.verdicts)

    @property
    def events(self) -> int:
        return self.verdicts[0].events if self.verdicts else 0


@dataclass
class SweepReport:
    name: str
    columns: tuple
    axes: dict
    points: list
    config: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.points)

    def select(self, **where) -> list:
        return [p for p in self.points if all(_close(p.params.get(k), v) for k, v in where.items())]

    def to_csv(self) -> str:
        cols = list(self.columns) + [
            "r_mean", "r_min", "r_max", "variance", "nonclassical", "variance_nonclassical", "seeds", "events",
        ]
        lines = ["# config: " + json.dumps({"sweep": self.name, **self.config}, sort_keys=True), ",".join(cols)]
        for p in self.points:
            row = [_cell(p.params.get(c)) for c in self.columns]
            rs = p.rs
            row += [
                "%.17g" % rs.mean(), "%.17g" % rs.min(), "%.17g" % rs.max(), "%.17g" % p.variance,
                str(int(p.nonclassical)), str(int(p.variance_nonclassical)), str(len(p.verdicts)), str(p.events),
            ]
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_csv())


def _close(a, b) -> bool:
    if isinstance(a, float) or isinstance(b, float):
        return a is not None and b is not None and math.isclose(a, b, rel_tol=1e-12, abs_tol=1e-12)
    return a == b


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "%.17g" % v
    return str(v)


# --- evaluation machinery ----------------------------------------------------


def _evaluate(args):
    model, spec, events, seeds, threshold = args
    table = build_table(spec)
    out = []
    for s in seeds:
        batch = sample(table, events, s)
        out.append(predict(model, batch, threshold))
    return out


def _run_points(model, specs_and_seeds, events, threshold, jobs):
    tasks = [(model, spec, events, seeds, threshold) for spec, seeds in specs_and_seeds]
    if jobs <= 1:
        return [_evaluate(t) for t in tasks]
    with ProcessPoolExecutor(jobs) as pool:
        return list(pool.map(_evaluate, tasks))


def _point_seeds(master: int, sweep: str, index: int, reps: int) -> list:
    return [derive_seed(master, _SWEEP_CODES[sweep], index, k) for k in range(reps)]


def _base_config(seed, events, threshold, seeds, eta=None) -> dict:
    cfg = {"seed": int(seed), "events": int(events), "threshold": float(threshold), "seeds_per_point": int(seeds)}
    if eta is not None:
        cfg["eta"] = float(eta)
    return cfg


def sweep_training_families(
    model,
    seed: int = 0,
    events: int = DEFAULT_EVENTS,
    threshold: float = DEFAULT_THRESHOLD,
    eta: float = DEFAULT_ETA,
    fock_repeats: int = 4,
    jobs: int = 1,
) -> SweepReport:
    """The six training families over their parameter ranges at phi=0.

    One simulation per grid point, except Fock states which are simulated
    ``fock_repeats`` times each.  Squeezing of the squeezed-coherent points is
    drawn uniformly from [0.5, 1] per point.
    """
    xi_rng = make_rng(derive_seed(seed, _SWEEP_CODES["families"], 10**6))
    grid = []
    for a in np.linspace(-5, 5, 21):
        grid.append(StateSpec(Family.COHERENT, alpha=float(a), eta=eta))
    for nb in np.linspace(0, 5, 11):
        grid.append(StateSpec(Family.THERMAL, nbar=float(nb), eta=eta))
    for a in np.linspace(-5, 5, 21):
        grid.append(StateSpec(Family.COHERENT_MIXTURE, alpha=float(a), eta=eta))
    fock = [(n, rep) for n in range(1, 7) for rep in range(fock_repeats)]
    for n, _ in fock:
        grid.append(StateSpec(Family.FOCK, n=n, eta=eta))
    for a in np.linspace(-5, 5, 21):
        grid.append(StateSpec(Family.SQUEEZED_COHERENT, alpha=float(a), xi=float(xi_rng.uniform(0.5, 1.0)), eta=eta))
    for a in np.linspace(-3, 3, 21):
        grid.append(StateSpec(Family.SPACS, alpha=float(a), eta=eta))

    pairs = [(spec, _point_seeds(seed, "families", i, 1)) for i, spec in enumerate(grid)]
    results = _run_points(model, pairs, events, threshold, jobs)
    points = []
    reps = iter(rep for _, rep in fock)
    for spec, verdicts in zip(grid, results):
        params = {"family": spec.family.value, "label": int(spec.label)}
        params.update(spec.relevant_params())
        params.pop("eta")
        params.pop("phi")
        if spec.family is Family.FOCK:
            params["rep"] = next(reps)
        points.append(SweepPoint(params, verdicts, spec))
    cfg = _base_config(seed, events, threshold, 1, eta)
    cfg["fock_repeats"] = fock_repeats
    return SweepReport(
        "families",
        ("family", "label", "alpha", "nbar", "n", "xi", "rep"),
        {"family": [f.value for f in (Family.COHERENT, Family.THERMAL, Family.COHERENT_MIXTURE,
                                      Family.FOCK, Family.SQUEEZED_COHERENT, Family.SPACS)]},
        points,
        cfg,
    )


def phase_grid(nbins: int) -> np.ndarray:
    return 2.0 * math.pi * np.arange(nbins) / nbins


def sweep_phase_squeezed(
    model,
    xi: float = 0.5,
    nbins: int = 125,
    seed: int = 0,
    events: int = DEFAULT_EVENTS,
    threshold: float = DEFAULT_THRESHOLD,
    eta: float = DEFAULT_ETA,
    seeds: int = DEFAULT_SEEDS,
    jobs: int = 1,
) -> SweepReport:
    """Squeezed vacuum measured at ``nbins`` phases k * 2 pi / nbins."""
    if nbins < 2:
        raise InputError(f"nbins must be >= 2, got {nbins}")
    phis = phase_grid(nbins)
    specs = [StateSpec(Family.SQUEEZED_COHERENT, alpha=0.0, xi=xi, eta=eta, phi=float(p)) for p in phis]
    pairs = [(s, _point_seeds(seed, "phase-squeezed", i, seeds)) for i, s in enumerate(specs)]
    results = _run_points(model, pairs, events, threshold, jobs)
    points = [SweepPoint({"phi": float(p)}, v, s) for p, v, s in zip(phis, results, specs)]
    cfg = _base_config(seed, events, threshold, seeds, eta)
    cfg.update(xi=float(xi), nbins=int(nbins))
    return SweepReport("phase-squeezed", ("phi",), {"phi": phis.tolist()}, points, cfg)


def analytic_subshot_phases(xi: float, eta: float, phis) -> np.ndarray:
    """Boolean mask of phases where the lossy squeezed-vacuum variance is below 1/4."""
    return np.array([squeezed_variance(xi, eta, float(p)) < VACUUM_VARIANCE for p in phis])


def jaccard(a, b) -> float:
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    union = np.sum(a | b)
    return 1.0 if union == 0 else float(np.sum(a & b) / union)


def default_spacs_alphas() -> np.ndarray:
    return np.linspace(0.0, 3.0, 14)


def default_spacs_phis() -> np.ndarray:
    return np.linspace(0.0, math.pi, 11)


def sweep_spacs_grid(
    model,
    alphas=None,
    phis=None,
    seed: int = 0,
    events: int = DEFAULT_EVENTS,
    threshold: float = DEFAULT_THRESHOLD,
    eta: float = DEFAULT_ETA,
    seeds: int = DEFAULT_SEEDS,
    jobs: int = 1,
) -> SweepReport:
    alphas = default_spacs_alphas() if alphas is None else np.asarray(alphas, dtype=float)
    phis = default_spacs_phis() if phis is None else np.asarray(phis, dtype=float)
    if alphas.size == 0 or phis.size == 0:
        raise InputError("alpha and phi grids must be non-empty")
    specs, params = [], []
    for p in phis:
        for a in alphas:
            specs.append(StateSpec(Family.SPACS, alpha=float(a), eta=eta, phi=float(p)))
            params.append({"phi": float(p), "alpha": float(a)})
    pairs = [(s, _point_seeds(seed, "spacs-grid", i, seeds)) for i, s in enumerate(specs)]
    results = _run_points(model, pairs, events, threshold, jobs)
    points = [SweepPoint(pp, v, s) for pp, v, s in zip(params, results, specs)]
    return SweepReport(
        "spacs-grid", ("phi", "alpha"), {"phi": phis.tolist(), "alpha": alphas.tolist()}, points,
        _base_config(seed, events, threshold, seeds, eta),
    )


def default_cat_alphas() -> np.ndarray:
    return np.linspace(0.0, 5.0, 26)


def sweep_cat(
    model,
    phis=(math.pi / 2, math.pi / 4),
    alphas=None,
    eta: float = DEFAULT_ETA,
    seed: int = 0,
    events: int = DEFAULT_EVENTS,
    threshold: float = DEFAULT_THRESHOLD,
    seeds: int = DEFAULT_SEEDS,
    jobs: int = 1,
) -> SweepReport:
    alphas = default_cat_alphas() if alphas is None else np.asarray(alphas, dtype=float)
    phis = [float(p) for p in phis]
    specs, params = [], []
    for p in phis:
        for a in alphas:
            specs.append(StateSpec(Family.ODD_CAT, alpha=float(a), eta=eta, phi=p))
            params.append({"phi": p, "alpha": float(a)})
    pairs = [(s, _point_seeds(seed, "cat", i, seeds)) for i, s in enumerate(specs)]
    results = _run_points(model, pairs, events, threshold, jobs)
    points = [SweepPoint(pp, v, s) for pp, v, s in zip(params, results, specs)]
    return SweepReport(
        "cat", ("phi", "alpha"), {"phi": phis, "alpha": alphas.tolist()}, points,
        _base_config(seed, events, threshold, seeds, eta),
    )


DEFAULT_SIZES = (50, 100, 200, 400, 800, 1000, 2000, 4000, 8000, 16000)


def sweep_sample_size(
    model,
    batch_nc: QuadratureBatch,
    batch_c: QuadratureBatch,
    sizes=DEFAULT_SIZES,
    seed: int = 0,
    threshold: float = DEFAULT_THRESHOLD,
    seeds: int = 10,
) -> SweepReport:
    """r of subsampled histograms of a nonclassical and a classical batch."""
    sizes = [int(s) for s in sizes]
    if sizes != sorted(sizes):
        raise InputError("sizes must be sorted ascending")
    limit = min(len(batch_nc), len(batch_c))
    if sizes and (sizes[0] < 1 or sizes[-1] > limit):
        raise InputError(f"sample sizes must lie in [1, {limit}]")
    points = []
    for state, batch in (("nonclassical", batch_nc), ("classical", batch_c)):
        for j, size in enumerate(sizes):
            reps = 1 if size == len(batch) else seeds
            verdicts = []
            for k in range(reps):
                s = derive_seed(seed, _SWEEP_CODES["sample-size"], j, k)
                verdicts.append(predict_values(model, subsample(batch, size, s), threshold))
            points.append(SweepPoint({"state": state, "size": size}, verdicts, batch.spec))
    cfg = {"seed": int(seed), "threshold": float(threshold), "seeds_per_point": int(seeds),
           "events_nonclassical": len(batch_nc), "events_classical": len(batch_c)}
    return SweepReport("sample-size", ("state", "size"), {"size": sizes}, points, cfg)


def separation_by_size(report: SweepReport, threshold: float = DEFAULT_THRESHOLD) -> dict:
    """size -> True when the majority of subsamples give r_nc > t and r_c < t."""
    out = {}
    for size in report.axes["size"]:
        nc = report.select(state="nonclassical", size=size)[0]
        c = report.select(state="classical", size=size)[0]
        out[size] = nc.nonclassical and 2 * sum(v.r < threshold for v in c.verdicts) > len(c.verdicts)
    return out


def default_ablation_alphas() -> np.ndarray:
    return np.linspace(0.0, 5.0, 51)


def sweep_ablation(
    model_no_spacs,
    alphas=None,
    seed: int = 0,
    events: int = DEFAULT_EVENTS,
    threshold: float = DEFAULT_THRESHOLD,
    eta: float = DEFAULT_ETA,
    seeds: int = DEFAULT_SEEDS,
    jobs: int = 1,
) -> SweepReport:
    """Simulated SPACS at phi=0 judged by a model trained without SPACS."""
    alphas = default_ablation_alphas() if alphas is None else np.asarray(alphas, dtype=float)
    specs = [StateSpec(Family.SPACS, alpha=float(a), eta=eta, phi=0.0) for a in alphas]
    pairs = [(s, _point_seeds(seed, "ablation", i, seeds)) for i, s in enumerate(specs)]
    results = _run_points(model_no_spacs, pairs, events, threshold, jobs)
    points = [SweepPoint({"alpha": float(a)}, v, s) for a, v, s in zip(alphas, results, specs)]
    return SweepReport("ablation", ("alpha",), {"alpha": alphas.tolist()}, points,
                       _base_config(seed, events, threshold, seeds, eta))
