import numpy as np
import pytest

from quadnc.errors import ConfigError, FormatError
from quadnc.features import featurize
from quadnc.pipeline import (
    CorpusConfig,
    FamilyRange,
    ablated_config,
    default_training_config,
    example_spec,
    generate_corpus,
    read_corpus,
    swap_classical_variant,
    write_corpus,
)
from quadnc.sampler import simulate
from quadnc.states import ClassLabel, Family


def small(**kw):
    kw.setdefault("vectors_per_family", 3)
    kw.setdefault("events_per_vector", 500)
    kw.setdefault("resolution", 2048)
    return default_training_config(**kw)


def test_default_config():
    cfg = default_training_config()
    assert len(cfg.families) == 6
    labels = [f.label for f in cfg.families]
    assert labels.count(ClassLabel.CLASSICAL) == 3 and labels.count(ClassLabel.NONCLASSICAL) == 3
    spacs = cfg.families[cfg.find(Family.SPACS)]
    assert spacs.ranges == (("alpha", -3.0, 3.0),)
    sq = cfg.families[cfg.find(Family.SQUEEZED_COHERENT)]
    assert ("xi", 0.5, 1.0) in sq.ranges
    assert (cfg.vectors_per_family, cfg.events_per_vector, cfg.eta, cfg.phi) == (20000, 16000, 0.6, 0.0)


def test_default_size_and_balance():
    cfg = default_training_config()
    total = cfg.vectors_per_family * len(cfg.families)
    assert total == 120000
    per_label = sum(cfg.vectors_per_family for f in cfg.families if f.label is ClassLabel.NONCLASSICAL)
    assert per_label == 60000


def test_ablation():
    assert len(ablated_config("spacs").families) == 5
    assert ablated_config(Family.SPACS).find(Family.SPACS) == -1
    cfg = ablated_config("coherent")
    cfg = ablated_config("thermal", cfg)
    with pytest.raises(ConfigError):
        ablated_config("mixture", cfg)
    with pytest.raises(ConfigError):
        ablated_config("banana")
    with pytest.raises(ConfigError):
        ablated_config("cat")


def test_swap_variant():
    cfg = default_training_config()
    swapped = swap_classical_variant(cfg)
    assert swapped.find(Family.PHASE_AVERAGED_COHERENT) >= 0
    assert swapped.find(Family.COHERENT_MIXTURE) == -1
    i = swapped.find(Family.PHASE_AVERAGED_COHERENT)
    assert swapped.families[i].ranges == cfg.families[cfg.find(Family.COHERENT_MIXTURE)].ranges
    assert swap_classical_variant(swapped) == cfg
    assert swap_classical_variant(cfg, use_phase_averaged=False) == cfg
    with pytest.raises(ConfigError):
        swap_classical_variant(ablated_config("mixture"))


def test_config_validation_and_roundtrip():
    cfg = small(seed=9)
    assert CorpusConfig.from_dict(cfg.to_dict()) == cfg
    for bad in (dict(vectors_per_family=0), dict(events_per_vector=0), dict(eta=0.0)):
        with pytest.raises(ConfigError):
            small(**bad).validate()


def test_family_range_draw():
    fr = FamilyRange(Family.FOCK, (("n", 1, 6),))
    rng = np.random.default_rng(0)
    ns = {fr.draw(rng)["n"] for _ in range(300)}
    assert ns == {1, 2, 3, 4, 5, 6}


def test_generate_corpus_shape_and_provenance():
    cfg = small()
    c = generate_corpus(cfg)
    assert len(c) == 18 and c.features.shape == (18, 160)
    assert np.sum(c.labels == 1) == 9
    assert np.all(c.dropped == 0)
    for i in (0, 7, 17):
        spec, seed = c.provenance[i]
        again = featurize(simulate(spec, cfg.events_per_vector, seed, cfg.resolution))
        np.testing.assert_array_equal(again.bins, c.features[i])
        assert int(spec.label) == c.labels[i]
        assert spec.eta == 0.6 and spec.phi == 0.0


def test_single_example_corpus():
    cfg = CorpusConfig(families=(FamilyRange(Family.THERMAL, (("nbar", 0.0, 5.0),)),), vectors_per_family=1,
                       events_per_vector=200, resolution=2048)
    c = generate_corpus(cfg)
    spec, seed = example_spec(cfg, cfg.families[0], 0)
    assert c.provenance == [(spec, seed)]


def test_corpus_deterministic_and_parallel_equal():
    cfg = small(seed=4)
    a = generate_corpus(cfg)
    b = generate_corpus(cfg, jobs=2)
    np.testing.assert_array_equal(a.features, b.features)
    assert a.provenance == b.provenance
    c = generate_corpus(small(seed=5))
    assert not np.array_equal(a.features, c.features)


def test_progress_callback():
    seen = []
    generate_corpus(small(vectors_per_family=1), progress=lambda k, n: seen.append((k, n)))
    assert seen[-1] == (6, 6)


def test_corpus_file_roundtrip(tmp_path):
    c = generate_corpus(small())
    p = tmp_path / "c.csv"
    write_corpus(c, p, extra={"note": 1})
    back = read_corpus(p)
    np.testing.assert_array_equal(back.features, c.features)
    np.testing.assert_array_equal(back.labels, c.labels)
    assert back.provenance == c.provenance and back.config == c.config
    p2 = tmp_path / "c2.csv"
    write_corpus(back, p2, extra={"note": 1})
    assert p2.read_bytes() == p.read_bytes()


def test_corpus_file_errors(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("label,family\n1,fock\n")
    with pytest.raises(FormatError):
        read_corpus(p)
    p.write_text('# config: {"corpus_config": null}\nheader\n1,fock,0\n')
    with pytest.raises(FormatError):
        read_corpus(p)
