"""Quantitative metric suite over snapshots and timelines.

All metrics measure the active configuration: deprecated assets and edges
never count, and cluster nodes are transparently expanded first.  Per-epoch
values (M0, M1, M3..M7) take one snapshot; the accumulated values (M2, M8 and
the lifetime weakness frequency) sum over the timeline's named epochs.

Counting rules: a CVE shared by several assets counts once in the system
union (M1, M6, M7) but once per asset in the per-asset sums (the M4
denominator); a CVE with several associated weaknesses counts once per
distinct weakness in M5/M6.  The ``CWE-NULL`` sentinel is an ordinary
weakness id here (it has its own row in the weakness tables) and is only
excluded from remediation joins.

Internal values are unrounded; display rounding is two decimals.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

from .catalog import CWE_NULL, Catalog
from .errors import NoAssets, NoVulnerabilities, UnknownAsset, UnknownMetric
from .graph import Edg, active_subgraph, expand_clusters
from .timeline import Timeline, epoch_snapshots

METRIC_IDS = tuple(f"M{i}" for i in range(9))


def _active(g: Edg) -> Edg:
    return active_subgraph(expand_clusters(g))


def _cwe_sort_key(cwe_id: str):
    tail = cwe_id.rsplit("-", 1)[1]
    return (1, 0) if tail == "NULL" else (0, int(tail))


def n_assets(g: Edg) -> int:
    return len(_active(g).assets)


def m1(g: Edg) -> int:
    """Number of vulnerabilities in the system: size of the union of the
    per-asset CVE sets."""
    return len(_active(g).vulns)


def m0(g: Edg) -> float:
    """Arithmetic mean of vulnerabilities per asset."""
    n = n_assets(g)
    if n == 0:
        raise NoAssets("mean undefined on a graph with no active assets")
    return m1(g) / n


def m3(g: Edg, asset_id: str) -> int:
    """Number of vulnerabilities attached to one asset."""
    active = _active(g)
    node = active.active_node(asset_id)
    if node is None:
        raise UnknownAsset(asset_id)
    return len(active.active_cves_of(node.node_id))


def _per_asset_counts(active: Edg) -> dict[str, int]:
    return {
        a.asset_id: len(active.active_cves_of(a.node_id)) for a in active.active_assets()
    }


def m4(g: Edg, asset_id: str) -> float:
    """Relative frequency: the asset's count over the per-asset sum (which
    exceeds the union when assets share a CVE)."""
    active = _active(g)
    counts = _per_asset_counts(active)
    if asset_id not in counts:
        raise UnknownAsset(asset_id)
    total = sum(counts.values())
    if total == 0:
        raise NoVulnerabilities("relative frequency undefined without vulnerabilities")
    return counts[asset_id] / total


def m5(g: Edg, asset_id: str, cwe_id: str) -> int:
    """Multiplicity of one weakness among one asset's vulnerabilities."""
    active = _active(g)
    node = active.active_node(asset_id)
    if node is None:
        raise UnknownAsset(asset_id)
    return sum(
        1 for c in active.active_cves_of(node.node_id) if cwe_id in active.vulns[c].cwe_ids
    )


def m6(g: Edg, cwe_id: str) -> int:
    """Multiplicity of one weakness among the system's vulnerabilities
    (union-counted across assets)."""
    return sum(1 for v in _active(g).vulns.values() if cwe_id in v.cwe_ids)


def m7(g: Edg) -> int:
    """Number of distinct weaknesses in the system."""
    cwes = set()
    for v in _active(g).vulns.values():
        cwes.update(v.cwe_ids)
    return len(cwes)


def m2(tl: Timeline, catalog: Catalog | None = None) -> int:
    """Vulnerabilities accumulated over the named epochs (sum, not union)."""
    return sum(m1(g) for g in epoch_snapshots(tl, catalog))


def m8(tl: Timeline, catalog: Catalog | None = None, mode: str = "union") -> int:
    """Weaknesses over the whole life cycle.

    ``union`` counts distinct weakness ids across epochs; ``sum`` adds up the
    per-epoch M7 values.  Union is the default and is never larger than sum.
    """
    if mode not in ("union", "sum"):
        raise ValueError(f"mode must be 'union' or 'sum', not {mode!r}")
    snapshots = epoch_snapshots(tl, catalog)
    if mode == "sum":
        return sum(m7(g) for g in snapshots)
    cwes: set[str] = set()
    for g in snapshots:
        for v in _active(g).vulns.values():
            cwes.update(v.cwe_ids)
    return len(cwes)


def _m6_map(active: Edg) -> dict[str, int]:
    counts: dict[str, int] = {}
    for v in active.vulns.values():
        for cwe_id in v.cwe_ids:
            counts[cwe_id] = counts.get(cwe_id, 0) + 1
    return counts


def lifecycle_weakness_frequency(tl: Timeline, catalog: Catalog | None = None) -> dict[str, int]:
    """Per-weakness sum of M6 over the named epochs, most frequent first."""
    totals: dict[str, int] = {}
    for g in epoch_snapshots(tl, catalog):
        for cwe_id, count in _m6_map(_active(g)).items():
            totals[cwe_id] = totals.get(cwe_id, 0) + count
    ordered = sorted(totals.items(), key=lambda kv: (-kv[1], _cwe_sort_key(kv[0])))
    return dict(ordered)


# ---------------------------------------------------------------------------
# prioritization


@dataclass(frozen=True)
class PrioritizedVulnerability:
    cve_id: str
    cvss: float
    asset_id: str
    exploit_available: bool
    rank: int


def prioritize(
    g: Edg,
    min_cvss: float = 0.0,
    max_cvss: float = 10.0,
    grouping: str = "by_asset",
) -> list[PrioritizedVulnerability]:
    """Patch queue of the active vulnerabilities scoring inside
    ``[min_cvss, max_cvss]``.

    ``by_asset`` groups rows by asset (assets in manifest/creation order),
    ``global`` is one flat list; either way rows sort by descending CVSS with
    ties broken exploit-available first, then ascending CVE id.  ``rank`` is
    the dense rank of the score inside its group, so every top-score entry is
    rank 1.
    """
    if not 0.0 <= min_cvss <= max_cvss <= 10.0:
        raise ValueError(f"need 0 <= min <= max <= 10, got [{min_cvss}, {max_cvss}]")
    if grouping not in ("by_asset", "global"):
        raise ValueError(f"grouping must be 'by_asset' or 'global', not {grouping!r}")

    active = _active(g)
    rows: list[tuple[int, str, object]] = []
    for asset in active.active_assets():
        for cve_id in active.active_cves_of(asset.node_id):
            vuln = active.vulns[cve_id]
            if min_cvss <= vuln.cvss <= max_cvss:
                rows.append((asset.order, asset.asset_id, vuln))

    def row_sort(row):
        order, asset_id, vuln = row
        group = (order, asset_id) if grouping == "by_asset" else (0, "")
        return group + (-vuln.cvss, not vuln.exploit_available, vuln.cve_id)

    rows.sort(key=row_sort)

    out: list[PrioritizedVulnerability] = []
    group_key = None
    rank = 0
    last_cvss = None
    for order, asset_id, vuln in rows:
        key = (order, asset_id) if grouping == "by_asset" else 0
        if key != group_key:
            group_key, rank, last_cvss = key, 0, None
        if vuln.cvss != last_cvss:
            rank += 1
            last_cvss = vuln.cvss
        out.append(
            PrioritizedVulnerability(
                cve_id=vuln.cve_id,
                cvss=vuln.cvss,
                asset_id=asset_id,
                exploit_available=vuln.exploit_available,
                rank=rank,
            )
        )
    return out


# ---------------------------------------------------------------------------
# ISA/IEC 62443 requirement annotations


_MAPPING_PATH = Path(__file__).parent / "data" / "iec62443_mapping.csv"
_mapping_cache: dict[str, frozenset[str]] | None = None


def iec62443_annotations(metric_id: str, mapping_path=None) -> frozenset[str]:
    """Requirement tags a metric supports, from the bundled mapping table."""
    global _mapping_cache
    metric_id = metric_id.upper()
    if metric_id not in METRIC_IDS:
        raise UnknownMetric(metric_id)
    if mapping_path is None and _mapping_cache is not None:
        return _mapping_cache[metric_id]
    mapping: dict[str, frozenset[str]] = {}
    with open(mapping_path or _MAPPING_PATH, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        tags = [name for name in reader.fieldnames if name != "metric"]
        for row in reader:
            mapping[row["metric"]] = frozenset(t for t in tags if row[t].strip() == "1")
    if mapping_path is None:
        _mapping_cache = mapping
    return mapping[metric_id]


# ---------------------------------------------------------------------------
# reports


@dataclass
class MetricReport:
    """Per-epoch values: scalars plus the per-asset and per-weakness maps."""

    epoch: str | None
    checked_at: str
    n_assets: int
    m0: float | None
    m1: int
    m7: int
    m3_by_asset: dict[str, int] = field(default_factory=dict)
    m4_by_asset: dict[str, float] = field(default_factory=dict)
    m5_by_asset_cwe: dict[str, dict[str, int]] = field(default_factory=dict)
    m6_by_cwe: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "epoch": self.epoch,
            "checked_at": self.checked_at,
            "n_assets": self.n_assets,
            "m0": self.m0,
            "m1": self.m1,
            "m7": self.m7,
            "m3_by_asset": dict(self.m3_by_asset),
            "m4_by_asset": dict(self.m4_by_asset),
            "m5_by_asset_cwe": {a: dict(m) for a, m in self.m5_by_asset_cwe.items()},
            "m6_by_cwe": dict(self.m6_by_cwe),
        }

    def to_text(self) -> str:
        return _render_metric_table(self)


def snapshot_report(g: Edg) -> MetricReport:
    active = _active(g)
    counts = _per_asset_counts(active)
    total = sum(counts.values())
    m5_map: dict[str, dict[str, int]] = {}
    for asset in active.active_assets():
        per_cwe: dict[str, int] = {}
        for cve_id in active.active_cves_of(asset.node_id):
            for cwe_id in active.vulns[cve_id].cwe_ids:
                per_cwe[cwe_id] = per_cwe.get(cwe_id, 0) + 1
        if per_cwe:
            m5_map[asset.asset_id] = dict(
                sorted(per_cwe.items(), key=lambda kv: _cwe_sort_key(kv[0]))
            )
    m6_map = dict(sorted(_m6_map(active).items(), key=lambda kv: _cwe_sort_key(kv[0])))
    n = len(active.assets)
    return MetricReport(
        epoch=g.epoch,
        checked_at=g.root.checked_at,
        n_assets=n,
        m0=(len(active.vulns) / n) if n else None,
        m1=len(active.vulns),
        m7=len({c for v in active.vulns.values() for c in v.cwe_ids}),
        m3_by_asset=counts,
        m4_by_asset={a: (c / total if total else 0.0) for a, c in counts.items()},
        m5_by_asset_cwe=m5_map,
        m6_by_cwe=m6_map,
    )


@dataclass
class LifecycleReport:
    """Accumulated values over the named epochs."""

    epoch_labels: list[str]
    m2: int
    m8_union: int
    m8_sum: int
    weakness_frequency: dict[str, int]
    per_epoch: list[MetricReport] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "epoch_labels": list(self.epoch_labels),
            "m2": self.m2,
            "m8_union": self.m8_union,
            "m8_sum": self.m8_sum,
            "weakness_frequency": dict(self.weakness_frequency),
            "per_epoch": [r.to_dict() for r in self.per_epoch],
        }

    def to_text(self) -> str:
        lines = []
        for report in self.per_epoch:
            lines.append(report.to_text())
            lines.append("")
        lines.append(f"M2 (accumulated vulnerabilities) = {self.m2}")
        lines.append(f"M8 (lifecycle weaknesses, union) = {self.m8_union}")
        lines.append(f"M8 (lifecycle weaknesses, sum)   = {self.m8_sum}")
        lines.append("weakness frequency over the life cycle:")
        for cwe_id, count in self.weakness_frequency.items():
            lines.append(f"  {cwe_id}: {count}")
        return "\n".join(lines)


def lifecycle_report(tl: Timeline, catalog: Catalog | None = None) -> LifecycleReport:
    snapshots = epoch_snapshots(tl, catalog)
    reports = [snapshot_report(g) for g in snapshots]
    cwes: set[str] = set()
    for g in snapshots:
        for v in _active(g).vulns.values():
            cwes.update(v.cwe_ids)
    totals: dict[str, int] = {}
    for report in reports:
        for cwe_id, count in report.m6_by_cwe.items():
            totals[cwe_id] = totals.get(cwe_id, 0) + count
    return LifecycleReport(
        epoch_labels=tl.epoch_labels(),
        m2=sum(r.m1 for r in reports),
        m8_union=len(cwes),
        m8_sum=sum(r.m7 for r in reports),
        weakness_frequency=dict(
            sorted(totals.items(), key=lambda kv: (-kv[1], _cwe_sort_key(kv[0])))
        ),
        per_epoch=reports,
    )


# ---------------------------------------------------------------------------
# plain-text rendering (assets as columns, metrics as rows)


def fmt2(value: float) -> str:
    return f"{value:.2f}"


def _render_metric_table(report: MetricReport) -> str:
    # Columns: assets that carry vulnerabilities, then the rest folded into
    # an "others" column, mirroring the usual presentation.
    vulnerable = [a for a, c in report.m3_by_asset.items() if c > 0]
    columns = vulnerable + ["others"]
    others_m3 = sum(c for a, c in report.m3_by_asset.items() if a not in vulnerable)
    others_m4 = sum(v for a, v in report.m4_by_asset.items() if a not in vulnerable)

    header = ["metric"] + columns
    rows: list[list[str]] = []
    span = len(columns)

    def spanned(label: str, value: str):
        rows.append([label, value] + [""] * (span - 1))

    spanned("n(t)", str(report.n_assets))
    spanned("M0", fmt2(report.m0) if report.m0 is not None else "-")
    spanned("M1", str(report.m1))
    rows.append(
        ["M3"] + [str(report.m3_by_asset[a]) for a in vulnerable] + [str(others_m3)]
    )
    rows.append(
        ["M4"] + [fmt2(report.m4_by_asset[a]) for a in vulnerable] + [fmt2(others_m4)]
    )
    all_cwes = sorted(report.m6_by_cwe, key=_cwe_sort_key)
    for cwe_id in all_cwes:
        cells = []
        for a in vulnerable:
            count = report.m5_by_asset_cwe.get(a, {}).get(cwe_id, 0)
            cells.append(str(count) if count else "-")
        rows.append([f"M5 {cwe_id}"] + cells + ["-"])
    for cwe_id in all_cwes:
        spanned(f"M6 {cwe_id}", str(report.m6_by_cwe[cwe_id]))
    spanned("M7", str(report.m7))

    widths = [len(h) for h in header]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    out = [f"epoch {report.epoch or '-'}  checked {report.checked_at}"]
    out.append("  ".join(h.ljust(widths[i]) for i, h in enumerate(header)).rstrip())
    for row in rows:
        out.append("  ".join(c.ljust(widths[i]) for i, c in enumerate(row)).rstrip())
    return "\n".join(out)
