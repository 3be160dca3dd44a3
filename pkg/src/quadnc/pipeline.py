"""Simulated training corpora: parameter draws -> events -> histograms -> labels."""
from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, FormatError
from .features import NBINS, FeatureVector, featurize
from .sampler import DEFAULT_RESOLUTION, build_table, derive_seed, make_rng, sample
from .states import ClassLabel, Family, StateSpec, label_of


@dataclass(frozen=True)
class FamilyRange:
    """A family with uniform parameter ranges; ``n`` ranges are inclusive integers."""

    family: Family
    ranges: tuple = ()  # ((name, lo, hi), ...)

    @property
    def label(self) -> ClassLabel:
        return label_of(self.family)

    def draw(self, rng: np.random.Generator) -> dict:
        params = {}
        for name, lo, hi in self.ranges:
            if name == "n":
                params[name] = int(rng.integers(int(lo), int(hi) + 1))
            else:
                params[name] = float(rng.uniform(lo, hi))
        return params

    def to_dict(self) -> dict:
        return {"family": self.family.value, "ranges": [[k, lo, hi] for k, lo, hi in self.ranges]}

    @classmethod
    def from_dict(cls, d: dict) -> "FamilyRange":
        return cls(Family.parse(d["family"]), tuple((k, lo, hi) for k, lo, hi in d["ranges"]))


@dataclass(frozen=True)
class CorpusConfig:
    families: tuple
    vectors_per_family: int = 20000
    events_per_vector: int = 16000
    eta: float = 0.6
    phi: float = 0.0
    seed: int = 0
    resolution: int = DEFAULT_RESOLUTION

    def validate(self) -> None:
        if self.vectors_per_family < 1 or self.events_per_vector < 1:
            raise ConfigError("vectors_per_family and events_per_vector must be >= 1")
        if not self.families:
            raise ConfigError("no families configured")
        if not 0.0 < self.eta <= 1.0:
            raise ConfigError(f"eta must lie in (0, 1], got {self.eta}")

    def family_tags(self) -> list[str]:
        return [f.family.value for f in self.families]

    def find(self, family: Family) -> int:
        for i, f in enumerate(self.families):
            if f.family is family:
                return i
        return -1

    def to_dict(self) -> dict:
        return {
            "families": [f.to_dict() for f in self.families],
            "vectors_per_family": self.vectors_per_family,
            "events_per_vector": self.events_per_vector,
            "eta": self.eta,
            "phi": self.phi,
            "seed": self.seed,
            "resolution": self.resolution,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CorpusConfig":
        d = dict(d)
        d["families"] = tuple(FamilyRange.from_dict(f) for f in d["families"])
        return cls(**d)


def default_training_config(**overrides) -> CorpusConfig:
    fams = (
        FamilyRange(Family.COHERENT, (("alpha", -5.0, 5.0),)),
        FamilyRange(Family.THERMAL, (("nbar", 0.0, 5.0),)),
        FamilyRange(Family.COHERENT_MIXTURE, (("alpha", -5.0, 5.0),)),
        FamilyRange(Family.FOCK, (("n", 1, 6),)),
        FamilyRange(Family.SQUEEZED_COHERENT, (("alpha", -5.0, 5.0), ("xi", 0.5, 1.0))),
        FamilyRange(Family.SPACS, (("alpha", -3.0, 3.0),)),
    )
    return replace(CorpusConfig(families=fams), **overrides)


def _check_labels(families) -> None:
    labels = {f.label for f in families}
    if labels != {ClassLabel.CLASSICAL, ClassLabel.NONCLASSICAL}:
        raise ConfigError("configuration must keep at least one classical and one nonclassical family")


def ablated_config(exclude: Family | str, config: CorpusConfig | None = None) -> CorpusConfig:
    """``config`` (default: the standard training set) without one family."""
    config = config or default_training_config()
    try:
        fam = exclude if isinstance(exclude, Family) else Family.parse(exclude)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    i = config.find(fam)
    if i < 0:
        raise ConfigError(f"family {fam.value!r} is not part of the configuration")
    remaining = config.families[:i] + config.families[i + 1 :]
    _check_labels(remaining)
    return replace(config, families=remaining)


def swap_classical_variant(config: CorpusConfig, use_phase_averaged: bool | None = None) -> CorpusConfig:
    """Exchange the coherent-mixture family for the phase-averaged coherent one.

    ``use_phase_averaged=None`` toggles whichever is present; ``True`` /
    ``False`` select the target variant explicitly.
    """
    i_mix = config.find(Family.COHERENT_MIXTURE)
    i_av = config.find(Family.PHASE_AVERAGED_COHERENT)
    if i_mix < 0 and i_av < 0:
        raise ConfigError("configuration has neither a coherent-mixture nor a phase-averaged family")
    if use_phase_averaged is None:
        use_phase_averaged = i_mix >= 0
    src, target = (i_mix, Family.PHASE_AVERAGED_COHERENT) if use_phase_averaged else (i_av, Family.COHERENT_MIXTURE)
    if src < 0:
        return config
    fams = list(config.families)
    fams[src] = FamilyRange(target, fams[src].ranges)
    return replace(config, families=tuple(fams))


@dataclass
class Corpus:
    """Aligned features, labels and provenance.

    ``provenance[i]`` is ``(StateSpec, event_seed)``; re-sampling that spec
    with that seed reproduces example ``i`` exactly.
    """

    features: np.ndarray  # (N, 160)
    kept: np.ndarray
    dropped: np.ndarray
    labels: np.ndarray
    provenance: list
    config: CorpusConfig | None = None

    def __len__(self) -> int:
        return self.labels.shape[0]

    def feature(self, i: int) -> FeatureVector:
        return FeatureVector(self.features[i], int(self.kept[i]), int(self.dropped[i]))

    def dataset(self):
        return self.features, self.labels


def example_spec(config: CorpusConfig, fam: FamilyRange, index: int) -> tuple[StateSpec, int]:
    """State parameters and event seed of example ``index`` of family ``fam``."""
    example_seed = derive_seed(config.seed, fam.family.code, index)
    params = fam.draw(make_rng(derive_seed(example_seed, 0)))
    spec = StateSpec(fam.family, eta=config.eta, phi=config.phi, **params)
    return spec, derive_seed(example_seed, 1)


def simulate_features(spec: StateSpec, events: int, seed: int, resolution: int = DEFAULT_RESOLUTION) -> FeatureVector:
    return featurize(sample(build_table(spec, resolution), events, seed))


def _simulate_tasks(config: CorpusConfig, tasks) -> list:
    out = []
    for fam_idx, index in tasks:
        fam = config.families[fam_idx]
        spec, event_seed = example_spec(config, fam, index)
        fv = simulate_features(spec, config.events_per_vector, event_seed, config.resolution)
        out.append((spec, event_seed, fv))
    return out


def _run_chunk(args):
    config_dict, tasks = args
    return _simulate_tasks(CorpusConfig.from_dict(config_dict), tasks)


def generate_corpus(config: CorpusConfig, jobs: int = 1, progress=None) -> Corpus:
    """Simulate every example of ``config``; ordering is (family, vector index) for any ``jobs``."""
    config.validate()
    tasks = [(fi, k) for fi in range(len(config.families)) for k in range(config.vectors_per_family)]
    if jobs <= 1:
        results = []
        for fi, k in tasks:
            results.extend(_simulate_tasks(config, [(fi, k)]))
            if progress is not None:
                progress(len(results), len(tasks))
    else:
        size = max(1, len(tasks) // (jobs * 8))
        chunks = [tasks[i : i + size] for i in range(0, len(tasks), size)]
        results = []
        with ProcessPoolExecutor(jobs) as pool:
            for part in pool.map(_run_chunk, [(config.to_dict(), c) for c in chunks]):
                results.extend(part)
                if progress is not None:
                    progress(len(results), len(tasks))
    feats = np.stack([fv.bins for _, _, fv in results])
    return Corpus(
        features=feats,
        kept=np.array([fv.kept for _, _, fv in results], dtype=np.int64),
        dropped=np.array([fv.dropped for _, _, fv in results], dtype=np.int64),
        labels=np.array([int(spec.label) for spec, _, _ in results], dtype=np.int64),
        provenance=[(spec, seed) for spec, seed, _ in results],
        config=config,
    )


# --- corpus files ------------------------------------------------------------

_PROV_FIELDS = ("family", "alpha", "nbar", "n", "xi", "eta", "phi", "seed")


def _f(v: float) -> str:
    return "%.17g" % v


def write_corpus(corpus: Corpus, path, extra: dict | None = None) -> None:
    header = {"corpus_config": corpus.config.to_dict() if corpus.config else None}
    if extra:
        header.update(extra)
    cols = ["label", *_PROV_FIELDS, "kept", "dropped"] + [f"bin{i}" for i in range(NBINS)]
    with open(path, "w") as fh:
        fh.write("# config: " + json.dumps(header, sort_keys=True) + "\n")
        fh.write(",".join(cols) + "\n")
        for i in range(len(corpus)):
            spec, seed = corpus.provenance[i]
            row = [
                str(int(corpus.labels[i])),
                spec.family.value,
                _f(spec.alpha),
                _f(spec.nbar),
                str(int(spec.n)),
                _f(spec.xi),
                _f(spec.eta),
                _f(spec.phi),
                str(seed),
                str(int(corpus.kept[i])),
                str(int(corpus.dropped[i])),
            ]
            row += [_f(v) for v in corpus.features[i].tolist()]
            fh.write(",".join(row) + "\n")


def read_corpus(path) -> Corpus:
    lines = Path(path).read_text().splitlines()
    if len(lines) < 2 or not lines[0].startswith("# config: "):
        raise FormatError(f"{path}: not a corpus file")
    try:
        header = json.loads(lines[0][len("# config: ") :])
        cfg = header.get("corpus_config")
        config = CorpusConfig.from_dict(cfg) if cfg else None
        labels, kept, dropped, prov, feats = [], [], [], [], []
        for ln in lines[2:]:
            p = ln.split(",")
            if len(p) != 11 + NBINS:
                raise FormatError(f"row has {len(p)} fields, expected {11 + NBINS}")
            labels.append(int(p[0]))
            spec = StateSpec(
                Family.parse(p[1]), alpha=float(p[2]), nbar=float(p[3]), n=int(p[4]),
                xi=float(p[5]), eta=float(p[6]), phi=float(p[7]),
            )
            prov.append((spec, int(p[8])))
            kept.append(int(p[9]))
            dropped.append(int(p[10]))
            feats.append([float(v) for v in p[11:]])
    except (ValueError, KeyError, TypeError) as exc:
        raise FormatError(f"{path}: {exc}") from None
    return Corpus(
        features=np.array(feats, dtype=np.float64).reshape(-1, NBINS),
        kept=np.array(kept, dtype=np.int64),
        dropped=np.array(dropped, dtype=np.int64),
        labels=np.array(labels, dtype=np.int64),
        provenance=prov,
        config=config,
    )
