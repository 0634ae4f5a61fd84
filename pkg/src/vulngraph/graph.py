"""The dependency-graph core.

A snapshot (:class:`Edg`) is a typed directed graph with one root node (the
system under test), asset nodes, known-vulnerability nodes and optional
cluster nodes, joined by ``normal`` and ``deprecated`` edges.  Edges are
stored as drawn: asset -> thing it depends on, asset -> its vulnerability;
impact queries traverse against that direction.

Snapshots are immutable values: every operation returns a new graph and
never mutates its input, so snapshots can be shared freely across threads.

Asset identity is a stable opaque token (``asset_id``) that survives version
updates; each update adds a new version node (``asset_id@k``) whose
``cpe_previous`` points at the replaced version, forming the traceable
version chain.  Updating or retiring an asset flips its dependency edges to
``deprecated``; a vulnerability edge on the replaced version stays ``normal``
unless the update fixed that vulnerability.  Deprecated versions are kept in
the graph for history but never participate in the active view, metrics,
clustering or impact queries.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from . import cpe
from .catalog import Catalog, VulnerabilityRecord
from .cpe import WellFormedName
from .errors import (
    BrokenChain,
    DuplicateId,
    EmptyManifest,
    SchemaError,
    SelfSucc,
    UnknownAsset,
    UnknownCve,
    UnknownDependencyTarget,
)

NORMAL = "normal"
DEPRECATED = "deprecated"

#: Node id of the root in the edge set (asset node ids always contain '@').
ROOT_ID = "root"


@dataclass(frozen=True)
class RootNode:
    sut_cpe: WellFormedName
    checked_at: str


@dataclass(frozen=True)
class AssetNode:
    node_id: str
    asset_id: str
    order: int
    cpe_current: WellFormedName
    cpe_previous: WellFormedName | None = None
    deprecated: bool = False

    @property
    def version_index(self) -> int:
        return int(self.node_id.rsplit("@", 1)[1])


@dataclass(frozen=True)
class VulnNode:
    cve_id: str
    cvss: float
    cwe_ids: tuple[str, ...]
    capec_ids: tuple[str, ...] = ()
    exploit_available: bool = False


@dataclass(frozen=True)
class Edge:
    source: str
    target: str
    kind: str = NORMAL


@dataclass(frozen=True)
class Cluster:
    """Summary node: retains its members and their edges for exact expansion."""

    cluster_id: str
    assets: tuple[AssetNode, ...]
    vulns: tuple[VulnNode, ...]
    internal_edges: tuple[Edge, ...]
    boundary_edges: tuple[Edge, ...]

    @property
    def member_ids(self) -> frozenset[str]:
        return frozenset(
            [a.node_id for a in self.assets] + [v.cve_id for v in self.vulns]
        )


@dataclass(frozen=True)
class ManifestEntry:
    asset_id: str
    cpe: WellFormedName


@dataclass(frozen=True)
class Manifest:
    entries: tuple[ManifestEntry, ...]
    dependencies: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class ClusterRule:
    """Grouping criterion: assets with no vulnerabilities, or whose attached
    vulnerabilities all score strictly below a threshold."""

    kind: str  # "no_vulnerabilities" | "cvss_below"
    threshold: float = 0.0

    @classmethod
    def no_vulnerabilities(cls) -> "ClusterRule":
        return cls(kind="no_vulnerabilities")

    @classmethod
    def cvss_below(cls, threshold: float) -> "ClusterRule":
        if not 0.0 <= threshold <= 10.0:
            raise ValueError(f"threshold {threshold} outside [0, 10]")
        return cls(kind="cvss_below", threshold=threshold)


@dataclass
class Edg:
    """One timestamped graph snapshot."""

    root: RootNode
    epoch: str | None = None
    assets: dict[str, AssetNode] = field(default_factory=dict)
    vulns: dict[str, VulnNode] = field(default_factory=dict)
    edges: set[Edge] = field(default_factory=set)
    clusters: dict[str, Cluster] = field(default_factory=dict)

    # -- basic views -------------------------------------------------------

    def clone(self) -> "Edg":
        return Edg(
            root=self.root,
            epoch=self.epoch,
            assets=dict(self.assets),
            vulns=dict(self.vulns),
            edges=set(self.edges),
            clusters=dict(self.clusters),
        )

    def lineage(self, asset_id: str) -> list[AssetNode]:
        """Version nodes of one asset, oldest first."""
        nodes = [a for a in self.assets.values() if a.asset_id == asset_id]
        nodes.sort(key=lambda a: a.version_index)
        return nodes

    def active_node(self, asset_id: str) -> AssetNode | None:
        for node in self.assets.values():
            if node.asset_id == asset_id and not node.deprecated:
                return node
        return None

    def require_active(self, asset_id: str) -> AssetNode:
        node = self.active_node(asset_id)
        if node is None:
            raise UnknownAsset(asset_id)
        return node

    def active_assets(self) -> list[AssetNode]:
        out = [a for a in self.assets.values() if not a.deprecated]
        out.sort(key=lambda a: (a.order, a.node_id))
        return out

    def normal_edges(self):
        return (e for e in self.edges if e.kind == NORMAL)

    def active_cves_of(self, node_id: str) -> tuple[str, ...]:
        """CVE ids attached to one asset node by normal edges."""
        found = {
            e.target
            for e in self.edges
            if e.kind == NORMAL and e.source == node_id and e.target in self.vulns
        }
        return tuple(sorted(found))

    def active_vulns(self) -> dict[str, VulnNode]:
        """Vulnerability nodes attached by a normal edge to a non-deprecated asset."""
        active_ids = {a.node_id for a in self.assets.values() if not a.deprecated}
        out = {}
        for e in self.edges:
            if e.kind == NORMAL and e.source in active_ids and e.target in self.vulns:
                out[e.target] = self.vulns[e.target]
        return out

    def node_count(self) -> int:
        return 1 + len(self.assets) + len(self.vulns) + len(self.clusters)


# ---------------------------------------------------------------------------
# building


def _validate_manifest(manifest: Manifest) -> None:
    if not manifest.entries:
        raise EmptyManifest("manifest has no assets")
    seen = set()
    for entry in manifest.entries:
        if entry.asset_id in seen:
            raise DuplicateId(entry.asset_id)
        seen.add(entry.asset_id)
    for i, (src, dst) in enumerate(manifest.dependencies):
        for end in (src, dst):
            if end not in seen:
                raise UnknownDependencyTarget(end)
        if src == dst:
            raise SchemaError("self dependency", f"dependencies[{i}]")


def _attach_record(g: Edg, node_id: str, record: VulnerabilityRecord, catalog: Catalog) -> None:
    if record.cve_id not in g.vulns:
        g.vulns[record.cve_id] = VulnNode(
            cve_id=record.cve_id,
            cvss=record.cvss,
            cwe_ids=record.cwe_ids,
            capec_ids=catalog.capec_ids_for_cwes(record.cwe_ids),
            exploit_available=record.exploit_available,
        )
    g.edges.add(Edge(source=node_id, target=record.cve_id))


def build_edg(
    sut: WellFormedName,
    manifest: Manifest,
    catalog: Catalog,
    at: str,
    epoch: str | None = None,
) -> Edg:
    """Build the initial snapshot from an asset manifest and a catalog.

    Every manifest entry becomes a fresh asset node (no previous version);
    one normal edge per dependency pair, plus root edges to the top-level
    assets (those nothing else depends on); every catalog hit for an asset's
    CPE at time ``at`` becomes an attached vulnerability node.
    """
    _validate_manifest(manifest)
    g = Edg(root=RootNode(sut_cpe=sut, checked_at=at), epoch=epoch)

    for order, entry in enumerate(manifest.entries):
        node = AssetNode(
            node_id=f"{entry.asset_id}@0",
            asset_id=entry.asset_id,
            order=order,
            cpe_current=entry.cpe,
        )
        g.assets[node.node_id] = node

    node_of = {a.asset_id: a.node_id for a in g.assets.values()}
    targets = set()
    for src, dst in manifest.dependencies:
        g.edges.add(Edge(source=node_of[src], target=node_of[dst]))
        targets.add(dst)
    for entry in manifest.entries:
        if entry.asset_id not in targets:
            g.edges.add(Edge(source=ROOT_ID, target=node_of[entry.asset_id]))

    for entry in manifest.entries:
        for record in catalog.lookup_vulnerabilities(entry.cpe, at):
            _attach_record(g, node_of[entry.asset_id], record, catalog)
    return g


# ---------------------------------------------------------------------------
# lifecycle mutations (each returns a new graph)


def add_asset(
    g: Edg,
    entry: ManifestEntry,
    dependencies,
    catalog: Catalog,
    top_level: bool = False,
    at: str | None = None,
) -> Edg:
    """Introduce a new asset with its dependency pairs (which must touch it)."""
    if g.lineage(entry.asset_id):
        raise DuplicateId(entry.asset_id)
    g = g.clone()
    order = max((a.order for a in g.assets.values()), default=-1) + 1
    node = AssetNode(
        node_id=f"{entry.asset_id}@0",
        asset_id=entry.asset_id,
        order=order,
        cpe_current=entry.cpe,
    )
    g.assets[node.node_id] = node

    for src, dst in dependencies:
        if entry.asset_id not in (src, dst):
            raise UnknownDependencyTarget(f"pair ({src}, {dst}) does not touch {entry.asset_id}")
        if src == dst:
            raise SchemaError("self dependency")
        ends = []
        for end in (src, dst):
            if end == entry.asset_id:
                ends.append(node.node_id)
            else:
                ends.append(g.require_active(end).node_id)
        g.edges.add(Edge(source=ends[0], target=ends[1]))
    if top_level:
        g.edges.add(Edge(source=ROOT_ID, target=node.node_id))

    lookup_at = at or g.root.checked_at
    for record in catalog.lookup_vulnerabilities(entry.cpe, lookup_at):
        _attach_record(g, node.node_id, record, catalog)
    return g


def discover_vuln(g: Edg, asset_id: str, cve_id: str, catalog: Catalog) -> Edg:
    """Attach a newly found catalog vulnerability to an asset."""
    node = g.require_active(asset_id)
    record = catalog.vulnerabilities.get(cve_id)
    if record is None:
        raise UnknownCve(cve_id)
    g = g.clone()
    _attach_record(g, node.node_id, record, catalog)
    return g


def patch_vuln(g: Edg, asset_id: str, cve_id: str) -> Edg:
    """Mark one asset's vulnerability as patched: its edge becomes deprecated."""
    node = g.require_active(asset_id)
    edge = Edge(source=node.node_id, target=cve_id)
    if cve_id not in g.vulns or edge not in g.edges:
        raise UnknownCve(f"{cve_id} is not attached to {asset_id}")
    g = g.clone()
    g.edges.discard(edge)
    g.edges.add(replace(edge, kind=DEPRECATED))
    return g


def update_asset(
    g: Edg,
    asset_id: str,
    new_cpe: WellFormedName,
    catalog: Catalog,
    fixes=frozenset(),
    at: str | None = None,
) -> Edg:
    """Create the successor version of an asset.

    The successor inherits every normal dependency edge of the replaced
    version (the replaced edges flip to deprecated) and every attached
    vulnerability not listed in ``fixes``; the replaced version keeps its
    normal edge to an unfixed vulnerability, while a fixed one is flipped to
    deprecated.  The catalog is re-queried for the new CPE and new hits are
    attached (``fixes`` suppresses re-attachment: the operator's statement
    wins over a stale applicability range).
    """
    old = g.require_active(asset_id)
    if new_cpe == old.cpe_current:
        raise SelfSucc(asset_id)
    # version chains are duplicate-free: no rolling back to an earlier CPE
    for node in g.lineage(asset_id):
        if node.cpe_current == new_cpe:
            raise SelfSucc(f"{asset_id}: {cpe.bind_formatted(new_cpe)} already in its chain")
    fixes = frozenset(fixes)
    g = g.clone()

    successor = AssetNode(
        node_id=f"{asset_id}@{old.version_index + 1}",
        asset_id=asset_id,
        order=old.order,
        cpe_current=new_cpe,
        cpe_previous=old.cpe_current,
    )
    g.assets[old.node_id] = replace(old, deprecated=True)
    g.assets[successor.node_id] = successor

    for edge in list(g.edges):
        if edge.kind != NORMAL or old.node_id not in (edge.source, edge.target):
            continue
        vuln_edge = edge.source == old.node_id and edge.target in g.vulns
        if vuln_edge:
            if edge.target in fixes:
                g.edges.discard(edge)
                g.edges.add(replace(edge, kind=DEPRECATED))
            else:
                # Not corrected by this update: both versions carry it.
                g.edges.add(Edge(source=successor.node_id, target=edge.target))
        else:
            g.edges.discard(edge)
            g.edges.add(replace(edge, kind=DEPRECATED))
            if edge.source == old.node_id:
                g.edges.add(Edge(source=successor.node_id, target=edge.target))
            else:
                g.edges.add(Edge(source=edge.source, target=successor.node_id))

    lookup_at = at or g.root.checked_at
    for record in catalog.lookup_vulnerabilities(new_cpe, lookup_at):
        if record.cve_id not in fixes:
            _attach_record(g, successor.node_id, record, catalog)
    if at is not None:
        g.root = replace(g.root, checked_at=at)
    return g


def retire_asset(g: Edg, asset_id: str) -> Edg:
    """Remove an asset from the active configuration.

    All its normal edges (dependencies and vulnerability attachments) flip to
    deprecated; the node stays in the graph as history.  No successor is
    created, which distinguishes retirement from an update.
    """
    node = g.require_active(asset_id)
    g = g.clone()
    g.assets[node.node_id] = replace(node, deprecated=True)
    for edge in list(g.edges):
        if edge.kind == NORMAL and node.node_id in (edge.source, edge.target):
            g.edges.discard(edge)
            g.edges.add(replace(edge, kind=DEPRECATED))
    return g


# ---------------------------------------------------------------------------
# queries


def version_chain(g: Edg, asset_id: str) -> list[WellFormedName]:
    """CPE values of an asset, current version first, following the
    previous-version pointers down to the very first version."""
    nodes = g.lineage(asset_id)
    if not nodes:
        raise UnknownAsset(asset_id)
    chain = []
    for i in range(len(nodes) - 1, -1, -1):
        node = nodes[i]
        chain.append(node.cpe_current)
        expected = nodes[i - 1].cpe_current if i > 0 else None
        if node.cpe_previous != expected:
            raise BrokenChain(
                f"{node.node_id}: previous pointer "
                f"{_fmt_cpe(node.cpe_previous)} does not reach {_fmt_cpe(expected)}"
            )
    return chain


def _fmt_cpe(w: WellFormedName | None) -> str:
    return cpe.bind_formatted(w) if w is not None else "null"


def active_subgraph(g: Edg) -> Edg:
    """The active configuration: non-deprecated assets, vulnerabilities still
    attached to one of them, normal edges among those nodes plus the root."""
    active_assets = {nid: a for nid, a in g.assets.items() if not a.deprecated}
    vulns = g.active_vulns()
    keep = set(active_assets) | set(vulns) | set(g.clusters) | {ROOT_ID}
    edges = {e for e in g.normal_edges() if e.source in keep and e.target in keep}
    return Edg(
        root=g.root,
        epoch=g.epoch,
        assets=active_assets,
        vulns=vulns,
        edges=edges,
        clusters=dict(g.clusters),
    )


def impact_set(g: Edg, cve_id: str) -> set[str]:
    """Asset ids hosting a vulnerability plus all assets that transitively
    depend on them (reverse reachability over active normal edges)."""
    if cve_id not in g.vulns:
        raise UnknownCve(cve_id)
    active = active_subgraph(g)
    hosts = {e.source for e in active.edges if e.target == cve_id}
    incoming: dict[str, set[str]] = {}
    for e in active.edges:
        if e.source != ROOT_ID and e.target in active.assets and e.source in active.assets:
            incoming.setdefault(e.target, set()).add(e.source)
    seen = set(hosts)
    frontier = list(hosts)
    while frontier:
        node = frontier.pop()
        for dependant in incoming.get(node, ()):
            if dependant not in seen:
                seen.add(dependant)
                frontier.append(dependant)
    return {active.assets[nid].asset_id for nid in seen if nid in active.assets}


# ---------------------------------------------------------------------------
# clusters


def _eligible(g: Edg, node: AssetNode, rule: ClusterRule) -> bool:
    cves = g.active_cves_of(node.node_id)
    if rule.kind == "no_vulnerabilities":
        return not cves
    return all(g.vulns[c].cvss < rule.threshold for c in cves)


def cluster_by(g: Edg, rule: ClusterRule, scope=None) -> Edg:
    """Replace maximal connected groups of qualifying active assets (and the
    vulnerabilities attached only inside a group) by cluster nodes.

    Connectivity is taken over the active normal edges, with the root acting
    as a connector but never a member, so a fully vulnerability-free system
    collapses into a single cluster.  ``scope`` optionally restricts
    eligibility to a subset of asset ids.  Boundary edges are re-targeted to
    the cluster; the originals are retained for exact expansion.
    """
    active = active_subgraph(g)
    scope_ids = None if scope is None else set(scope)
    eligible = {
        a.node_id
        for a in active.assets.values()
        if (scope_ids is None or a.asset_id in scope_ids) and _eligible(g, a, rule)
    }
    if not eligible:
        return g

    # Union-find over eligible assets; the root joins components but the
    # root itself never becomes a member.
    parent = {nid: nid for nid in eligible | {ROOT_ID}}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    for e in active.edges:
        if e.source in parent and e.target in parent:
            union(e.source, e.target)

    components: dict[str, set[str]] = {}
    for nid in eligible:
        components.setdefault(find(nid), set()).add(nid)

    groups = sorted(components.values(), key=lambda grp: min(grp))
    g2 = g.clone()
    next_index = len(g.clusters) + 1
    for group in groups:
        # Absorption is decided against the original graph: a vulnerability
        # joins the group only when every active attachment lies inside it
        # (one shared across groups stays visible outside all of them).
        absorbed = _absorbed_vulns(g, group)
        _form_cluster(g2, group, absorbed, f"cluster-{next_index}")
        next_index += 1
    return g2


def _absorbed_vulns(g: Edg, asset_node_ids: set[str]) -> set[str]:
    active_asset_ids = {nid for nid, a in g.assets.items() if not a.deprecated}
    absorbed = set()
    for cve_id in {
        e.target
        for e in g.normal_edges()
        if e.source in asset_node_ids and e.target in g.vulns
    }:
        attachments = {
            e.source
            for e in g.normal_edges()
            if e.target == cve_id and e.source in active_asset_ids
        }
        if attachments <= asset_node_ids:
            absorbed.add(cve_id)
    return absorbed


def _form_cluster(g: Edg, asset_node_ids: set[str], absorbed: set[str], cluster_id: str) -> None:
    members = asset_node_ids | absorbed
    internal, boundary = [], []
    for e in sorted(g.edges, key=lambda e: (e.source, e.target, e.kind)):
        src_in, dst_in = e.source in members, e.target in members
        if src_in and dst_in:
            internal.append(e)
        elif src_in or dst_in:
            boundary.append(e)

    cluster = Cluster(
        cluster_id=cluster_id,
        assets=tuple(sorted((g.assets[nid] for nid in asset_node_ids), key=lambda a: a.node_id)),
        vulns=tuple(sorted((g.vulns[c] for c in absorbed), key=lambda v: v.cve_id)),
        internal_edges=tuple(internal),
        boundary_edges=tuple(boundary),
    )
    g.clusters[cluster_id] = cluster

    for nid in asset_node_ids:
        del g.assets[nid]
    for cve_id in absorbed:
        del g.vulns[cve_id]
    for e in internal:
        g.edges.discard(e)
    for e in boundary:
        g.edges.discard(e)
        if e.source in members:
            g.edges.add(Edge(source=cluster_id, target=e.target, kind=e.kind))
        else:
            g.edges.add(Edge(source=e.source, target=cluster_id, kind=e.kind))


def expand_clusters(g: Edg) -> Edg:
    """Exact inverse of :func:`cluster_by`: restore members and edges."""
    if not g.clusters:
        return g
    g2 = g.clone()
    cluster_ids = set(g2.clusters)
    g2.edges = {e for e in g2.edges if e.source not in cluster_ids and e.target not in cluster_ids}
    for cluster in g2.clusters.values():
        for asset in cluster.assets:
            g2.assets[asset.node_id] = asset
        for vuln in cluster.vulns:
            g2.vulns[vuln.cve_id] = vuln
        g2.edges.update(cluster.internal_edges)
        g2.edges.update(cluster.boundary_edges)
    g2.clusters = {}
    return g2


# ---------------------------------------------------------------------------
# serialization


def edg_to_dict(g: Edg) -> dict:
    """Canonical JSON form; lists are sorted so equal graphs serialize equal."""

    def asset_dict(a: AssetNode):
        return {
            "node_id": a.node_id,
            "asset_id": a.asset_id,
            "order": a.order,
            "cpe": cpe.bind_formatted(a.cpe_current),
            "cpe_previous": cpe.bind_formatted(a.cpe_previous) if a.cpe_previous else None,
            "deprecated": a.deprecated,
        }

    def vuln_dict(v: VulnNode):
        return {
            "cve_id": v.cve_id,
            "cvss": v.cvss,
            "cwe_ids": list(v.cwe_ids),
            "capec_ids": list(v.capec_ids),
            "exploit_available": v.exploit_available,
        }

    def edge_dict(e: Edge):
        return {"source": e.source, "target": e.target, "kind": e.kind}

    return {
        "schema_version": 1,
        "epoch": g.epoch,
        "root": {"cpe": cpe.bind_formatted(g.root.sut_cpe), "checked_at": g.root.checked_at},
        "assets": [asset_dict(a) for a in sorted(g.assets.values(), key=lambda a: a.node_id)],
        "vulns": [vuln_dict(v) for v in sorted(g.vulns.values(), key=lambda v: v.cve_id)],
        "edges": [
            edge_dict(e) for e in sorted(g.edges, key=lambda e: (e.source, e.target, e.kind))
        ],
        "clusters": [
            {
                "cluster_id": c.cluster_id,
                "assets": [asset_dict(a) for a in c.assets],
                "vulns": [vuln_dict(v) for v in c.vulns],
                "internal_edges": [edge_dict(e) for e in c.internal_edges],
                "boundary_edges": [edge_dict(e) for e in c.boundary_edges],
            }
            for c in sorted(g.clusters.values(), key=lambda c: c.cluster_id)
        ],
    }


def edg_from_dict(doc: dict) -> Edg:
    def parse_asset(d) -> AssetNode:
        return AssetNode(
            node_id=d["node_id"],
            asset_id=d["asset_id"],
            order=d["order"],
            cpe_current=cpe.parse_formatted(d["cpe"]),
            cpe_previous=cpe.parse_formatted(d["cpe_previous"]) if d.get("cpe_previous") else None,
            deprecated=d.get("deprecated", False),
        )

    def parse_vuln(d) -> VulnNode:
        return VulnNode(
            cve_id=d["cve_id"],
            cvss=d["cvss"],
            cwe_ids=tuple(d["cwe_ids"]),
            capec_ids=tuple(d.get("capec_ids", [])),
            exploit_available=d.get("exploit_available", False),
        )

    def parse_edge(d) -> Edge:
        return Edge(source=d["source"], target=d["target"], kind=d["kind"])

    g = Edg(
        root=RootNode(
            sut_cpe=cpe.parse_formatted(doc["root"]["cpe"]),
            checked_at=doc["root"]["checked_at"],
        ),
        epoch=doc.get("epoch"),
    )
    for d in doc.get("assets", []):
        node = parse_asset(d)
        g.assets[node.node_id] = node
    for d in doc.get("vulns", []):
        node = parse_vuln(d)
        g.vulns[node.cve_id] = node
    for d in doc.get("edges", []):
        g.edges.add(parse_edge(d))
    for d in doc.get("clusters", []):
        cluster = Cluster(
            cluster_id=d["cluster_id"],
            assets=tuple(parse_asset(a) for a in d["assets"]),
            vulns=tuple(parse_vuln(v) for v in d["vulns"]),
            internal_edges=tuple(parse_edge(e) for e in d["internal_edges"]),
            boundary_edges=tuple(parse_edge(e) for e in d["boundary_edges"]),
        )
        g.clusters[cluster.cluster_id] = cluster
    return g
