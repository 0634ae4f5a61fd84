"""Randomized property suites.

Six suites, each at least 500 cases: CPE round-trip, cluster/expand
identity, metric equivalence against a naive set-enumeration oracle on small
graphs, relative-frequency normalization, the lifecycle-weakness inequality
and event-replay determinism.
"""

import random
import string

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gen import random_graph, random_timeline
from oracles import brute_metrics
from vulngraph import cpe, graph, metrics, timeline as tl_mod
from vulngraph.cpe import ANY, NA, WellFormedName
from vulngraph.graph import ClusterRule, cluster_by, expand_clusters
from vulngraph.timeline import Timeline

CASES = 500

_LITERAL_ALPHABET = (
    string.ascii_lowercase + string.digits + "._-" + "!\"#$%&'()*+,/:;<=>?@[\\]^`{|}~"
)

_literal = st.text(alphabet=_LITERAL_ALPHABET, min_size=1, max_size=12)
_value = st.one_of(st.just(ANY), st.just(NA), _literal)
_wfn = st.builds(
    WellFormedName,
    part=st.sampled_from(["a", "o", "h", ANY]),
    vendor=_value,
    product=_value,
    version=_value,
    update=_value,
    edition=_value,
    language=_value,
    sw_edition=_value,
    target_sw=_value,
    target_hw=_value,
    other=_value,
)


@settings(max_examples=1000, deadline=None)
@given(_wfn)
def test_cpe_parse_bind_roundtrip(w):
    bound = cpe.bind_formatted(w)
    assert cpe.parse_formatted(bound) == w
    # binding is canonical: case differences vanish on re-parse
    assert cpe.parse_formatted(bound.upper()) == w


@settings(max_examples=CASES, deadline=None)
@given(st.lists(st.text(alphabet=string.ascii_lowercase + string.digits + ".-",
                        max_size=8), min_size=3, max_size=3))
def test_compare_versions_total_order(triple):
    a, b, c = triple
    # antisymmetry
    assert cpe.compare_versions(a, b) == -cpe.compare_versions(b, a)
    assert cpe.compare_versions(a, a) == 0
    # transitivity over the sorted triple
    lo, mid, hi = sorted(triple, key=cpe.version_key)
    assert cpe.compare_versions(lo, mid) <= 0
    assert cpe.compare_versions(mid, hi) <= 0
    assert cpe.compare_versions(lo, hi) <= 0


def test_cluster_expand_identity():
    for seed in range(CASES):
        rng = random.Random(seed)
        g, _ = random_graph(rng)
        if rng.random() < 0.5:
            rule = ClusterRule.no_vulnerabilities()
        else:
            rule = ClusterRule.cvss_below(round(rng.uniform(0.0, 10.0), 1))
        scope = None
        active_ids = [a.asset_id for a in g.active_assets()]
        if active_ids and rng.random() < 0.3:
            scope = set(rng.sample(active_ids, rng.randint(1, len(active_ids))))
        clustered = cluster_by(g, rule, scope=scope)
        assert graph.edg_to_dict(expand_clusters(clustered)) == graph.edg_to_dict(g), seed


def test_metrics_match_brute_force_oracle():
    checked_nonempty = 0
    for seed in range(CASES):
        g, _ = random_graph(random.Random(seed))
        doc = graph.edg_to_dict(g)
        assert 1 + len(doc["assets"]) + len(doc["vulns"]) <= 24  # small graphs
        expected = brute_metrics(doc)
        assert metrics.n_assets(g) == expected["n"], seed
        assert metrics.m1(g) == expected["m1"], seed
        assert metrics.m7(g) == expected["m7"], seed
        if expected["n"]:
            assert metrics.m0(g) == pytest.approx(expected["m0"]), seed
        for asset_id, count in expected["m3"].items():
            assert metrics.m3(g, asset_id) == count, seed
        total = sum(expected["m3"].values())
        if total:
            checked_nonempty += 1
            for asset_id, share in expected["m4"].items():
                assert metrics.m4(g, asset_id) == pytest.approx(share), seed
        for asset_id, per_cwe in expected["m5"].items():
            for cwe_id, count in per_cwe.items():
                assert metrics.m5(g, asset_id, cwe_id) == count, seed
        for cwe_id, count in expected["m6"].items():
            assert metrics.m6(g, cwe_id) == count, seed
    assert checked_nonempty >= 100  # the suite must exercise vulnerable graphs


def test_m4_sums_to_one():
    checked = 0
    for seed in range(CASES):
        g, _ = random_graph(random.Random(seed + 10_000))
        rep = metrics.snapshot_report(g)
        if sum(rep.m3_by_asset.values()) == 0:
            continue
        checked += 1
        assert abs(sum(rep.m4_by_asset.values()) - 1.0) <= 1e-9, seed
    assert checked >= 100


def test_m8_union_never_exceeds_sum():
    for seed in range(CASES):
        tl, cat = random_timeline(random.Random(seed + 20_000))
        union = metrics.m8(tl, cat, "union")
        total = metrics.m8(tl, cat, "sum")
        assert union <= total, seed
        assert metrics.m2(tl, cat) == sum(
            metrics.m1(g) for g in tl_mod.epoch_snapshots(tl, cat)), seed


def test_event_replay_determinism():
    for seed in range(CASES):
        tl, cat = random_timeline(random.Random(seed + 30_000))
        first = [tl_mod.canonical_json(graph.edg_to_dict(g))
                 for _, g in tl_mod.replay(tl, cat)]
        second = [tl_mod.canonical_json(graph.edg_to_dict(g))
                  for _, g in tl_mod.replay(tl, cat)]
        assert first == second, seed
        # persisting and reloading the log changes nothing either
        reloaded = tl_mod.timeline_from_dict(tl_mod.timeline_to_dict(tl))
        third = [tl_mod.canonical_json(graph.edg_to_dict(g))
                 for _, g in tl_mod.replay(reloaded, cat)]
        assert first == third, seed


def test_version_chain_length_tracks_updates():
    for seed in range(100):
        rng = random.Random(seed + 40_000)
        tl, cat = random_timeline(rng)
        last = None
        for _, last in tl_mod.replay(tl, cat):
            pass
        updates: dict[str, int] = {}
        for event in tl.events:
            if event.kind == "asset_updated":
                updates[event.asset_id] = updates.get(event.asset_id, 0) + 1
        for asset_id, k in updates.items():
            assert len(graph.version_chain(last, asset_id)) == k + 1, seed


def test_metrics_invariant_under_clustering():
    for seed in range(100):
        rng = random.Random(seed + 50_000)
        g, _ = random_graph(rng)
        clustered = cluster_by(g, ClusterRule.cvss_below(round(rng.uniform(0, 10), 1)))
        assert metrics.m1(clustered) == metrics.m1(g), seed
        assert metrics.m7(clustered) == metrics.m7(g), seed
        assert metrics.n_assets(clustered) == metrics.n_assets(g), seed
