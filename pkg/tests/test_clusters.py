from helpers import make_catalog, manifest, name, record, wstr
from vulngraph import graph
from vulngraph.graph import ClusterRule, Edge, build_edg, cluster_by, expand_clusters

AT = "2020-06-01T00:00:00Z"


def vuln_free_system():
    m = manifest(
        [("a1", wstr("v", "p1", "1.0")), ("a2", wstr("v", "p2", "1.0")),
         ("a3", wstr("v", "p3", "1.0"))],
        [("a1", "a3")],
    )
    return build_edg(name("v", "sut", "1.0"), m, make_catalog(), AT)


def two_severity_system():
    """Two carriers under the root: one at 7.5, one at 3.1."""
    cat = make_catalog(records=[
        record("CVE-2020-0001", 7.5, "CWE-119", affected=[wstr("v", "high", "1.0")]),
        record("CVE-2020-0002", 3.1, "CWE-200", affected=[wstr("v", "low", "1.0")]),
    ])
    m = manifest([("high", wstr("v", "high", "1.0")), ("low", wstr("v", "low", "1.0"))])
    return build_edg(name("v", "sut", "1.0"), m, cat, AT), cat


def test_vuln_free_system_collapses_to_one_cluster():
    g = vuln_free_system()
    clustered = cluster_by(g, ClusterRule.no_vulnerabilities())
    assert len(clustered.clusters) == 1
    cluster = next(iter(clustered.clusters.values()))
    assert {a.asset_id for a in cluster.assets} == {"a1", "a2", "a3"}
    assert clustered.assets == {}
    # the root keeps one edge into the cluster
    assert {e for e in clustered.edges} == {
        Edge(source="root", target=cluster.cluster_id)
    }


def test_threshold_absorbs_only_low_scores():
    g, _ = two_severity_system()
    clustered = cluster_by(g, ClusterRule.cvss_below(6.0))
    assert len(clustered.clusters) == 1
    cluster = next(iter(clustered.clusters.values()))
    assert {a.asset_id for a in cluster.assets} == {"low"}
    assert {v.cve_id for v in cluster.vulns} == {"CVE-2020-0002"}
    # the severe carrier stays visible with its vulnerability
    assert "high@0" in clustered.assets
    assert "CVE-2020-0001" in clustered.vulns


def test_threshold_zero_equals_no_vulnerabilities():
    g, _ = two_severity_system()
    a = cluster_by(g, ClusterRule.cvss_below(0.0))
    b = cluster_by(g, ClusterRule.no_vulnerabilities())
    assert graph.edg_to_dict(a) == graph.edg_to_dict(b)
    # neither carrier qualifies; nothing to group
    assert a.clusters == {}


def test_no_eligible_group_returns_graph_unchanged():
    g, _ = two_severity_system()
    out = cluster_by(g, ClusterRule.cvss_below(1.0))
    assert out is g


def test_expand_restores_exactly():
    for build in (vuln_free_system, lambda: two_severity_system()[0]):
        g = build()
        for rule in (ClusterRule.no_vulnerabilities(), ClusterRule.cvss_below(6.0),
                     ClusterRule.cvss_below(10.0)):
            clustered = cluster_by(g, rule)
            assert graph.edg_to_dict(expand_clusters(clustered)) == graph.edg_to_dict(g)


def test_expand_without_clusters_is_identity():
    g = vuln_free_system()
    assert expand_clusters(g) is g


def test_scope_limits_membership():
    g = vuln_free_system()
    clustered = cluster_by(g, ClusterRule.no_vulnerabilities(), scope={"a1", "a3"})
    cluster = next(iter(clustered.clusters.values()))
    assert {a.asset_id for a in cluster.assets} == {"a1", "a3"}
    assert "a2@0" in clustered.assets
    assert graph.edg_to_dict(expand_clusters(clustered)) == graph.edg_to_dict(g)


def test_ineligible_asset_splits_components():
    # eligible - INELIGIBLE - eligible: the middle carrier keeps the sides apart
    cat = make_catalog(records=[
        record("CVE-2020-0001", 9.0, "CWE-119", affected=[wstr("v", "mid", "1.0")]),
    ])
    m = manifest(
        [("left", wstr("v", "left", "1.0")), ("mid", wstr("v", "mid", "1.0")),
         ("right", wstr("v", "right", "1.0"))],
        [("left", "mid"), ("mid", "right")],
    )
    g = build_edg(name("v", "sut", "1.0"), m, cat, AT)
    clustered = cluster_by(g, ClusterRule.no_vulnerabilities())
    # 'left' hangs off the root, 'right' only off 'mid': two singleton groups
    assert len(clustered.clusters) == 2
    members = sorted(
        tuple(sorted(a.asset_id for a in c.assets)) for c in clustered.clusters.values()
    )
    assert members == [("left",), ("right",)]
    assert graph.edg_to_dict(expand_clusters(clustered)) == graph.edg_to_dict(g)


def test_shared_vulnerability_is_not_absorbed_across_groups():
    # one sub-threshold CVE attached to two carriers separated by a severe one
    cat = make_catalog(records=[
        record("CVE-2020-0001", 3.0, "CWE-200",
               affected=[wstr("v", "left", "1.0"), wstr("v", "right", "1.0")]),
        record("CVE-2020-0002", 9.0, "CWE-119", affected=[wstr("v", "mid", "1.0")]),
    ])
    m = manifest(
        [("left", wstr("v", "left", "1.0")), ("mid", wstr("v", "mid", "1.0")),
         ("right", wstr("v", "right", "1.0"))],
        [("left", "mid"), ("mid", "right")],
    )
    g = build_edg(name("v", "sut", "1.0"), m, cat, AT)
    clustered = cluster_by(g, ClusterRule.cvss_below(6.0))
    assert len(clustered.clusters) == 2
    # the shared vulnerability stays outside, re-attached to both clusters
    assert "CVE-2020-0001" in clustered.vulns
    cluster_ids = set(clustered.clusters)
    attached_from = {e.source for e in clustered.edges if e.target == "CVE-2020-0001"}
    assert attached_from == cluster_ids
    assert graph.edg_to_dict(expand_clusters(clustered)) == graph.edg_to_dict(g)


def test_deprecated_assets_never_cluster():
    g, cat = two_severity_system()
    g = graph.update_asset(g, "low", name("v", "low", "2.0"), cat,
                           fixes={"CVE-2020-0002"})
    clustered = cluster_by(g, ClusterRule.no_vulnerabilities())
    member_ids = {a.node_id for c in clustered.clusters.values() for a in c.assets}
    assert "low@0" not in member_ids  # the replaced version stays as history
    assert "low@1" in member_ids
    assert graph.edg_to_dict(expand_clusters(clustered)) == graph.edg_to_dict(g)


def test_cluster_keeps_boundary_to_deprecated_history():
    g, cat = two_severity_system()
    g = graph.update_asset(g, "low", name("v", "low", "2.0"), cat,
                           fixes={"CVE-2020-0002"})
    clustered = cluster_by(g, ClusterRule.no_vulnerabilities())
    # the deprecated root->low@0 edge now points at the cluster that holds low@1
    deprecated = [e for e in clustered.edges if e.kind == "deprecated"]
    assert any(e.target in clustered.clusters for e in deprecated) or any(
        e.target == "low@0" for e in deprecated
    )
    assert graph.edg_to_dict(expand_clusters(clustered)) == graph.edg_to_dict(g)


def test_openplc_v3_low_threshold_absorbs_everything_else(openplc_snapshots):
    g = openplc_snapshots["V3"]
    clustered = cluster_by(g, ClusterRule.no_vulnerabilities())
    # vulnerability-free assets collapse; the two carriers stay visible
    visible = {a.asset_id for a in clustered.assets.values() if not a.deprecated}
    assert visible == {"libgcc_s", "libc"}
    assert graph.edg_to_dict(expand_clusters(clustered)) == graph.edg_to_dict(g)
