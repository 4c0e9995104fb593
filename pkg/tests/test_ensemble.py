import numpy as np
import pytest

from claimrank.ensemble import (
    CONF_RANK,
    CONF_SIMILARITY,
    FusionConfig,
    ModelProfile,
    build_profiles,
    fuse,
    read_profiles,
    write_profiles,
)
from claimrank.errors import FusionError
from claimrank.evaluation import Cell, EvalReport
from claimrank.retrieval import RankedList


def oracle_fuse(rankings, profiles, lang, conf_kind, k_out, pool_k=None):
    """Exhaustive score-table oracle: iterate candidates, scan each model's
    list from scratch for every candidate."""
    candidates = set()
    for model_id, ranked in rankings.items():
        if profiles[model_id].weight_for(lang) == 0.0:
            continue  # contract: zero-weight models contribute no candidates
        hits = ranked.hits[:pool_k] if pool_k is not None else ranked.hits
        candidates |= {doc_id for doc_id, _ in hits}
    table = {}
    for doc_id in candidates:
        total = 0.0
        for model_id, ranked in rankings.items():
            hits = ranked.hits[:pool_k] if pool_k is not None else ranked.hits
            weight = profiles[model_id].weight_for(lang)
            for rank, (candidate, score) in enumerate(hits, start=1):
                if candidate == doc_id:
                    if conf_kind == CONF_SIMILARITY:
                        conf = score
                    else:
                        conf = (len(hits) - rank + 1) / len(hits)
                    total += conf * weight
        table[doc_id] = total
    ordered = sorted(table.items(), key=lambda item: (-item[1], item[0]))
    return [doc_id for doc_id, _ in ordered[:k_out]]


def ranked(post_id, *hits):
    return RankedList(post_id=post_id, hits=tuple(hits))


def profile(model_id, default=1.0, **langs):
    return ModelProfile(model_id=model_id, lang_weights=langs, default_weight=default)


def random_instance(rng, n_models=3, n_candidates=20):
    candidates = [f"f{i:03d}" for i in range(n_candidates)]
    rankings = {}
    profiles = {}
    for m in range(n_models):
        model_id = f"model{m}"
        chosen = rng.permutation(n_candidates)[: int(rng.integers(5, n_candidates))]
        hits = sorted(
            ((candidates[i], float(rng.uniform(-1, 1))) for i in chosen),
            key=lambda pair: (-pair[1], pair[0]),
        )
        rankings[model_id] = ranked("p1", *hits)
        profiles[model_id] = profile(
            model_id,
            default=float(rng.uniform(0, 1)),
            fra=float(rng.uniform(0, 1)),
        )
    return rankings, profiles


def test_single_model_order_is_preserved():
    rankings = {"m": ranked("p1", ("a", 0.9), ("b", 0.5), ("c", 0.1))}
    profiles = {"m": profile("m", fra=0.7)}
    out = fuse(rankings, profiles, "fra", FusionConfig(k_out=2))
    assert out.hit_ids() == ["a", "b"]


def test_zero_weight_model_contributes_nothing():
    rankings = {
        "good": ranked("p1", ("a", 0.9), ("b", 0.5)),
        "zero": ranked("p1", ("z", 1.0), ("b", 1.0)),
    }
    profiles = {"good": profile("good", fra=0.8), "zero": profile("zero", fra=0.0)}
    with_zero = fuse(rankings, profiles, "fra", FusionConfig())
    without = fuse(
        {"good": rankings["good"]}, {"good": profiles["good"]}, "fra", FusionConfig()
    )
    assert with_zero == without


def test_hand_set_three_model_table():
    rankings = {
        "m1": ranked("p1", ("a", 0.9), ("b", 0.8), ("c", 0.7)),
        "m2": ranked("p1", ("b", 0.95), ("d", 0.6), ("a", 0.5)),
        "m3": ranked("p1", ("e", 1.0), ("a", 0.4)),
    }
    profiles = {
        "m1": profile("m1", fra=1.0),
        "m2": profile("m2", fra=0.5),
        "m3": profile("m3", fra=0.25),
    }
    out = fuse(rankings, profiles, "fra", FusionConfig(k_out=5))
    # a: .9 + .25 + .1 = 1.25; b: .8 + .475 = 1.275; c: .7; d: .3; e: .25
    assert out.hit_ids() == ["b", "a", "c", "d", "e"]
    assert out.hits[0][1] == pytest.approx(1.275)
    assert out.hit_ids() == oracle_fuse(rankings, profiles, "fra", CONF_SIMILARITY, 5)


@pytest.mark.parametrize("conf", [CONF_SIMILARITY, CONF_RANK])
def test_matches_oracle_on_random_instances(rng, conf):
    for _ in range(25):
        rankings, profiles = random_instance(rng)
        cfg = FusionConfig(confidence=conf, k_out=10)
        out = fuse(rankings, profiles, "fra", cfg)
        assert out.hit_ids() == oracle_fuse(rankings, profiles, "fra", conf, 10)


def test_global_weight_scaling_keeps_the_ordering(rng):
    for c in (0.25, 0.5):
        rankings, profiles = random_instance(rng)
        scaled = {
            model_id: ModelProfile(
                model_id=model_id,
                lang_weights={k: v * c for k, v in p.lang_weights.items()},
                default_weight=p.default_weight * c,
            )
            for model_id, p in profiles.items()
        }
        base = fuse(rankings, profiles, "fra", FusionConfig(k_out=20))
        after = fuse(rankings, scaled, "fra", FusionConfig(k_out=20))
        assert base.hit_ids() == after.hit_ids()


def test_model_supply_order_is_irrelevant(rng):
    rankings, profiles = random_instance(rng)
    reversed_rankings = dict(reversed(list(rankings.items())))
    a = fuse(rankings, profiles, "fra", FusionConfig())
    b = fuse(reversed_rankings, profiles, "fra", FusionConfig())
    assert a == b


def test_output_shape_invariants(rng):
    rankings, profiles = random_instance(rng, n_candidates=8)
    out = fuse(rankings, profiles, "fra", FusionConfig(k_out=50))
    union = set()
    for ranked_list in rankings.values():
        union |= set(ranked_list.hit_ids())
    assert len(out.hits) == min(50, len(union))
    assert len(set(out.hit_ids())) == len(out.hits)
    scores = [s for _, s in out.hits]
    assert scores == sorted(scores, reverse=True)


def test_unlisted_language_uses_default_weight():
    rankings = {"m": ranked("p1", ("a", 1.0))}
    profiles = {"m": profile("m", default=0.5, fra=1.0)}
    out = fuse(rankings, profiles, "tha", FusionConfig())
    assert out.hits[0][1] == pytest.approx(0.5)


def test_rank_linear_confidence():
    rankings = {"m": ranked("p1", ("a", 0.99), ("b", 0.5), ("c", -0.2), ("d", -0.9))}
    profiles = {"m": profile("m", fra=1.0)}
    out = fuse(rankings, profiles, "fra", FusionConfig(confidence=CONF_RANK))
    assert [s for _, s in out.hits] == pytest.approx([1.0, 0.75, 0.5, 0.25])


def test_pool_k_truncates_before_scoring():
    rankings = {"m": ranked("p1", ("a", 0.9), ("b", 0.8), ("c", 0.7))}
    profiles = {"m": profile("m", fra=1.0)}
    out = fuse(rankings, profiles, "fra", FusionConfig(), pool_k=2)
    assert out.hit_ids() == ["a", "b"]


def test_post_id_disagreement_rejected():
    rankings = {"m1": ranked("p1", ("a", 0.9)), "m2": ranked("p2", ("a", 0.9))}
    profiles = {"m1": profile("m1"), "m2": profile("m2")}
    with pytest.raises(FusionError, match="disagree"):
        fuse(rankings, profiles, "fra", FusionConfig())


def test_missing_profile_rejected():
    rankings = {"m1": ranked("p1", ("a", 0.9))}
    with pytest.raises(FusionError, match="no profile"):
        fuse(rankings, {}, "fra", FusionConfig())


def test_bad_config_rejected():
    with pytest.raises(FusionError):
        FusionConfig(k_out=0)
    with pytest.raises(FusionError):
        FusionConfig(confidence="vibes")
    with pytest.raises(FusionError):
        ModelProfile(model_id="m", lang_weights={"fra": 1.5})


# ------------------------------------------------------------------- profiles


def report_with(model_id, cells, k=10):
    per_lang = {lang: Cell(value=v, n_posts=10) for lang, v in cells.items()}
    total = sum(c.n_posts for c in per_lang.values())
    average = sum(c.value * c.n_posts for c in per_lang.values()) / total
    return EvalReport(
        model_id=model_id, k=k, per_lang=per_lang, crosslingual=None,
        average=average,
        average_unweighted=sum(cells.values()) / len(cells),
    )


def test_build_profiles_uses_per_language_cells():
    report = report_with("bilingual-large", {"fra": 0.94, "tha": 1.00})
    (prof,) = build_profiles([report])
    assert prof.lang_weights == {"fra": 0.94, "tha": 1.00}
    assert prof.default_weight == pytest.approx(0.97)


def test_build_profiles_uniform_model():
    (prof,) = build_profiles([report_with("m", {"fra": 1.0, "deu": 1.0})])
    assert set(prof.lang_weights.values()) == {1.0}
    assert prof.default_weight == 1.0


def test_build_profiles_weights_always_valid(rng):
    reports = [
        report_with(f"m{i}", {lang: float(rng.uniform(0, 1))
                              for lang in ("fra", "spa", "tha")})
        for i in range(5)
    ]
    for prof in build_profiles(reports):
        assert all(0.0 <= w <= 1.0 for w in prof.lang_weights.values())
        assert 0.0 <= prof.default_weight <= 1.0


def test_build_profiles_missing_cells_rejected():
    class Hollow:
        model_id = "m"

    with pytest.raises(FusionError, match="lacks"):
        build_profiles([Hollow()])


def test_profiles_file_round_trip(tmp_path):
    profiles = [
        profile("m1", default=0.8, fra=0.94, tha=1.0),
        profile("m2", default=0.6, spa=0.5),
    ]
    path = tmp_path / "profiles.json"
    write_profiles(profiles, path)
    loaded = read_profiles(path)
    assert loaded["m1"].lang_weights == {"fra": 0.94, "tha": 1.0}
    assert loaded["m1"].default_weight == 0.8
    assert loaded["m2"].weight_for("unknown") == 0.6
