"""Graph-based tracking of known vulnerabilities in component-based systems.

The package models a system under test as a typed directed graph of assets
(CPE-identified) and known vulnerabilities (CVE/CVSS/CWE/CAPEC), evolves it
through update and patch events, computes a quantitative metric suite over
snapshots and timelines, and emits DOT graphs, prioritized patch queues and
assessment reports.
"""

from . import catalog, cpe, graph, metrics, report, timeline
from .catalog import Catalog, load_catalog
from .cpe import WellFormedName, bind_formatted, parse_formatted
from .graph import ClusterRule, Edg, Manifest, ManifestEntry, build_edg
from .timeline import Timeline, load_timeline, save_timeline

__version__ = "0.1.0"

__all__ = [
    "Catalog",
    "ClusterRule",
    "Edg",
    "Manifest",
    "ManifestEntry",
    "Timeline",
    "WellFormedName",
    "bind_formatted",
    "build_edg",
    "catalog",
    "cpe",
    "graph",
    "load_catalog",
    "load_timeline",
    "metrics",
    "parse_formatted",
    "report",
    "save_timeline",
    "timeline",
]
