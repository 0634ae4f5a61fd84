"""Event-sourced lifecycle of a system under test.

A timeline is the initial manifest plus a strictly ordered event log; every
snapshot is reproducible by replaying the log against a catalog, and named
epoch marks ("V1", "V2", ...) designate the release snapshots that the
accumulated metrics sum over.  Replaying the same log always yields
byte-identical serialized snapshots.

Timestamps are ISO 8601 UTC with seconds precision (``2021-01-01T00:00:00Z``);
ties are broken by the event sequence number.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace

from . import cpe, graph
from .catalog import Catalog
from .cpe import WellFormedName
from .errors import NonMonotonicTimestamp, SchemaError, VulnGraphError
from .graph import Edg, Manifest, ManifestEntry

EVENT_KINDS = (
    "asset_added",
    "vuln_discovered",
    "asset_updated",
    "vuln_patched",
    "asset_retired",
    "noop",
)

_TS_RE = re.compile(r"\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}Z")


def validate_timestamp(at: str) -> str:
    if not _TS_RE.fullmatch(at):
        raise SchemaError(f"bad timestamp {at!r}, want YYYY-MM-DDTHH:MM:SSZ")
    return at


@dataclass(frozen=True)
class LifecycleEvent:
    at: str
    seq: int
    kind: str
    asset_id: str | None = None
    cve_id: str | None = None
    cpe_value: WellFormedName | None = None
    dependencies: tuple[tuple[str, str], ...] = ()
    top_level: bool = False
    fixes: tuple[str, ...] = ()


@dataclass(frozen=True)
class EpochMark:
    label: str
    at: str


@dataclass
class Timeline:
    """Initial manifest, event log and epoch marks for one system under test."""

    sut_cpe: WellFormedName
    manifest: Manifest
    built_at: str
    events: list[LifecycleEvent] = field(default_factory=list)
    epochs: list[EpochMark] = field(default_factory=list)
    # Optional embedded epoch snapshots (label -> serialized graph); purely a
    # cache so that read-only commands do not need the catalog.
    snapshots: dict[str, dict] = field(default_factory=dict)

    def last_position(self) -> tuple[str, int]:
        if self.events:
            last = self.events[-1]
            return last.at, last.seq
        return self.built_at, -1

    def epoch_labels(self) -> list[str]:
        return [mark.label for mark in self.epochs]

    def find_epoch(self, label: str) -> EpochMark:
        for mark in self.epochs:
            if mark.label == label:
                return mark
        raise VulnGraphError(f"unknown epoch {label!r}; have {self.epoch_labels()}")


def append_event(tl: Timeline, event: LifecycleEvent) -> Timeline:
    """Append one event; timestamps must not go backwards."""
    validate_timestamp(event.at)
    if event.kind not in EVENT_KINDS:
        raise SchemaError(f"unknown event kind {event.kind!r}")
    last_at, last_seq = tl.last_position()
    if event.at < last_at:
        raise NonMonotonicTimestamp(f"{event.at} is before {last_at}")
    if event.seq <= last_seq:
        event = replace(event, seq=last_seq + 1)
    return Timeline(
        sut_cpe=tl.sut_cpe,
        manifest=tl.manifest,
        built_at=tl.built_at,
        events=tl.events + [event],
        epochs=list(tl.epochs),
        snapshots=dict(tl.snapshots),
    )


def mark_epoch(tl: Timeline, label: str, at: str) -> Timeline:
    """Designate the state at ``at`` as a named release snapshot."""
    validate_timestamp(at)
    if label in tl.epoch_labels():
        raise SchemaError(f"epoch {label!r} already marked")
    if tl.epochs and at < tl.epochs[-1].at:
        raise NonMonotonicTimestamp(f"epoch {label} at {at} is before {tl.epochs[-1].at}")
    return Timeline(
        sut_cpe=tl.sut_cpe,
        manifest=tl.manifest,
        built_at=tl.built_at,
        events=list(tl.events),
        epochs=tl.epochs + [EpochMark(label=label, at=at)],
        snapshots=dict(tl.snapshots),
    )


def apply_event(g: Edg, event: LifecycleEvent, catalog: Catalog) -> Edg:
    """Apply one event to a snapshot, yielding the successor snapshot."""
    if event.kind == "asset_added":
        g = graph.add_asset(
            g,
            ManifestEntry(asset_id=event.asset_id, cpe=event.cpe_value),
            event.dependencies,
            catalog,
            top_level=event.top_level,
            at=event.at,
        )
    elif event.kind == "vuln_discovered":
        g = graph.discover_vuln(g, event.asset_id, event.cve_id, catalog)
    elif event.kind == "asset_updated":
        g = graph.update_asset(
            g, event.asset_id, event.cpe_value, catalog, fixes=event.fixes, at=event.at
        )
    elif event.kind == "vuln_patched":
        g = graph.patch_vuln(g, event.asset_id, event.cve_id)
    elif event.kind == "asset_retired":
        g = graph.retire_asset(g, event.asset_id)
    elif event.kind == "noop":
        g = g.clone()
    else:
        raise SchemaError(f"unknown event kind {event.kind!r}")
    g.root = replace(g.root, checked_at=event.at)
    return g


def replay(tl: Timeline, catalog: Catalog):
    """Yield ``(index, snapshot)`` for the initial build (index -1) and after
    every event.  Deterministic: same log, same catalog, same snapshots."""
    g = graph.build_edg(tl.sut_cpe, tl.manifest, catalog, tl.built_at)
    yield -1, g
    for i, event in enumerate(tl.events):
        g = apply_event(g, event, catalog)
        yield i, g


def snapshot_at(tl: Timeline, catalog: Catalog, at: str) -> Edg:
    """State after replaying all events with timestamp <= ``at``."""
    current = None
    for _, g in replay(tl, catalog):
        if g.root.checked_at <= at:
            current = g
        else:
            break
    if current is None:
        raise VulnGraphError(f"timeline starts at {tl.built_at}, after {at}")
    return current


def epoch_snapshot(tl: Timeline, catalog: Catalog | None, label: str) -> Edg:
    """Snapshot for a named epoch (embedded copy when present, else replay)."""
    mark = tl.find_epoch(label)
    if label in tl.snapshots:
        return graph.edg_from_dict(tl.snapshots[label])
    if catalog is None:
        raise VulnGraphError(f"no embedded snapshot for {label!r} and no catalog to replay")
    g = snapshot_at(tl, catalog, mark.at)
    g.epoch = label
    return g


def epoch_snapshots(tl: Timeline, catalog: Catalog | None) -> list[Edg]:
    return [epoch_snapshot(tl, catalog, mark.label) for mark in tl.epochs]


def embed_snapshots(tl: Timeline, catalog: Catalog) -> Timeline:
    """Compute and embed every epoch snapshot (cache for catalog-less reads)."""
    fresh = Timeline(
        sut_cpe=tl.sut_cpe,
        manifest=tl.manifest,
        built_at=tl.built_at,
        events=list(tl.events),
        epochs=list(tl.epochs),
        snapshots={},
    )
    for mark in tl.epochs:
        g = snapshot_at(fresh, catalog, mark.at)
        g.epoch = mark.label
        fresh.snapshots[mark.label] = graph.edg_to_dict(g)
    return fresh


# ---------------------------------------------------------------------------
# persistence


def manifest_to_dict(manifest: Manifest) -> dict:
    return {
        "assets": [
            {"id": e.asset_id, "cpe": cpe.bind_formatted(e.cpe)} for e in manifest.entries
        ],
        "dependencies": [list(pair) for pair in manifest.dependencies],
    }


def manifest_from_dict(doc: dict) -> Manifest:
    if not isinstance(doc, dict) or "assets" not in doc:
        raise SchemaError("manifest document needs an 'assets' list", "manifest")
    entries = []
    for i, raw in enumerate(doc["assets"]):
        try:
            entries.append(
                ManifestEntry(asset_id=raw["id"], cpe=cpe.parse_formatted(raw["cpe"]))
            )
        except KeyError as exc:
            raise SchemaError(f"missing {exc}", f"manifest.assets[{i}]") from exc
    dependencies = tuple(
        (pair[0], pair[1]) for pair in doc.get("dependencies", [])
    )
    return Manifest(entries=tuple(entries), dependencies=dependencies)


def _event_to_dict(event: LifecycleEvent) -> dict:
    out: dict = {"at": event.at, "seq": event.seq, "kind": event.kind}
    if event.asset_id is not None:
        out["asset_id"] = event.asset_id
    if event.cve_id is not None:
        out["cve_id"] = event.cve_id
    if event.cpe_value is not None:
        out["cpe"] = cpe.bind_formatted(event.cpe_value)
    if event.dependencies:
        out["dependencies"] = [list(pair) for pair in event.dependencies]
    if event.top_level:
        out["top_level"] = True
    if event.fixes:
        out["fixes"] = list(event.fixes)
    return out


def _event_from_dict(doc: dict) -> LifecycleEvent:
    return LifecycleEvent(
        at=doc["at"],
        seq=doc["seq"],
        kind=doc["kind"],
        asset_id=doc.get("asset_id"),
        cve_id=doc.get("cve_id"),
        cpe_value=cpe.parse_formatted(doc["cpe"]) if "cpe" in doc else None,
        dependencies=tuple((p[0], p[1]) for p in doc.get("dependencies", [])),
        top_level=doc.get("top_level", False),
        fixes=tuple(doc.get("fixes", [])),
    )


def timeline_to_dict(tl: Timeline) -> dict:
    return {
        "schema_version": 1,
        "sut": cpe.bind_formatted(tl.sut_cpe),
        "built_at": tl.built_at,
        "manifest": manifest_to_dict(tl.manifest),
        "epochs": [{"label": m.label, "at": m.at} for m in tl.epochs],
        "events": [_event_to_dict(e) for e in tl.events],
        "snapshots": {label: snap for label, snap in sorted(tl.snapshots.items())},
    }


def timeline_from_dict(doc: dict) -> Timeline:
    if not isinstance(doc, dict):
        raise SchemaError("timeline document must be an object")
    if doc.get("schema_version", 1) != 1:
        raise SchemaError(f"unsupported schema_version {doc.get('schema_version')}")
    for key in ("sut", "built_at", "manifest"):
        if key not in doc:
            raise SchemaError("missing required field", key)
    return Timeline(
        sut_cpe=cpe.parse_formatted(doc["sut"]),
        manifest=manifest_from_dict(doc["manifest"]),
        built_at=validate_timestamp(doc["built_at"]),
        events=[_event_from_dict(e) for e in doc.get("events", [])],
        epochs=[EpochMark(label=m["label"], at=m["at"]) for m in doc.get("epochs", [])],
        snapshots=dict(doc.get("snapshots", {})),
    )


def canonical_json(doc: dict) -> str:
    """The one serialization used wherever byte-identical output matters."""
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def save_timeline(tl: Timeline, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(timeline_to_dict(tl)))


def load_timeline(path) -> Timeline:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"not valid JSON: {exc}") from exc
    return timeline_from_dict(doc)


def load_manifest(path) -> Manifest:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"not valid JSON: {exc}") from exc
    return manifest_from_dict(doc)
