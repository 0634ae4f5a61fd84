"""Catalogs of the standards universes: CVE records, CWE weaknesses, CAPEC
attack patterns, plus the remediation knowledge base used for root-cause
reports.

A catalog is loaded from one canonical JSON document::

    {
      "schema_version": 1,
      "snapshot_date": "2021-01-01",
      "vulnerabilities": [...],
      "weaknesses": [...],
      "attack_patterns": [...],
      "remediation": [...]
    }

External feeds (NVD JSON 1.1) are converted into the same record shape by
:func:`import_nvd_feed`.  Catalogs are immutable after load; all lookups are
read-only.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field

from . import cpe
from .cpe import WellFormedName
from .errors import DuplicateId, FeedParseError, SchemaError, UnknownWeakness

#: Sentinel weakness id for CVEs with no assigned CWE.
CWE_NULL = "CWE-NULL"

ORDINAL_SCALE = ("very_low", "low", "medium", "high", "very_high")

REMEDIATION_KINDS = ("requirement", "training", "test_case")

_CVE_RE = re.compile(r"CVE-\d{4}-\d{4,}")
_CWE_RE = re.compile(r"CWE-(\d+|NULL)")
_CAPEC_RE = re.compile(r"CAPEC-\d+")
_DATE_RE = re.compile(r"\d{4}-\d{2}-\d{2}")


@dataclass(frozen=True)
class VersionRange:
    """Version interval with per-end inclusivity; either end may be open."""

    minimum: str | None = None
    maximum: str | None = None
    min_inclusive: bool = True
    max_inclusive: bool = False

    def contains(self, version: str) -> bool:
        if self.minimum is not None:
            c = cpe.compare_versions(version, self.minimum)
            if c < 0 or (c == 0 and not self.min_inclusive):
                return False
        if self.maximum is not None:
            c = cpe.compare_versions(version, self.maximum)
            if c > 0 or (c == 0 and not self.max_inclusive):
                return False
        return True


@dataclass(frozen=True)
class AffectedProduct:
    pattern: WellFormedName
    versions: VersionRange | None = None

    def matches(self, name: WellFormedName) -> bool:
        if not cpe.matches(name, self.pattern):
            return False
        if self.versions is None:
            return True
        # A range needs a literal version to test against; ANY/NA cannot be
        # shown to lie inside the interval.
        if not isinstance(name.version, str):
            return False
        return self.versions.contains(name.version)


@dataclass(frozen=True)
class VulnerabilityRecord:
    cve_id: str
    cvss: float
    cvss_scheme: str = "v2"
    cwe_ids: tuple[str, ...] = (CWE_NULL,)
    affected: tuple[AffectedProduct, ...] = ()
    exploit_available: bool = False
    published: str = "1999-01-01"

    def applies_to(self, name: WellFormedName, at: str | None = None) -> bool:
        if at is not None and self.published > at[:10]:
            return False
        return any(entry.matches(name) for entry in self.affected)


@dataclass(frozen=True)
class WeaknessRecord:
    cwe_id: str
    name: str = ""
    description: str = ""
    related_capec_ids: tuple[str, ...] = ()


@dataclass(frozen=True)
class AttackPatternRecord:
    capec_id: str
    name: str = ""
    likelihood: str = "medium"
    impact: str = "medium"


@dataclass(frozen=True)
class RemediationEntry:
    kind: str
    cwe_ids: tuple[str, ...]
    text: str
    capec_ids: tuple[str, ...] = ()


@dataclass
class Catalog:
    """Indexed, immutable-after-load collections of the four record types."""

    snapshot_date: str = "1999-01-01"
    vulnerabilities: dict[str, VulnerabilityRecord] = field(default_factory=dict)
    weaknesses: dict[str, WeaknessRecord] = field(default_factory=dict)
    attack_patterns: dict[str, AttackPatternRecord] = field(default_factory=dict)
    remediation: list[RemediationEntry] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def lookup_vulnerabilities(self, name: WellFormedName, at: str) -> list[VulnerabilityRecord]:
        """Records whose affected pattern matches ``name`` and that were
        published on or before ``at``, ordered by CVE id."""
        hits = [r for r in self.vulnerabilities.values() if r.applies_to(name, at)]
        hits.sort(key=lambda r: r.cve_id)
        return hits

    def capecs_for_weakness(self, cwe_id: str) -> list[AttackPatternRecord]:
        """Attack patterns linked to a weakness; empty for the null sentinel."""
        if cwe_id == CWE_NULL:
            return []
        weakness = self.weaknesses.get(cwe_id)
        if weakness is None:
            raise UnknownWeakness(cwe_id)
        out = [
            self.attack_patterns[c]
            for c in weakness.related_capec_ids
            if c in self.attack_patterns
        ]
        out.sort(key=lambda p: _capec_sort_key(p.capec_id))
        return out

    def capec_ids_for_cwes(self, cwe_ids) -> tuple[str, ...]:
        """Union of linked CAPEC ids over several weaknesses (unknowns skipped)."""
        ids: set[str] = set()
        for cwe_id in cwe_ids:
            weakness = self.weaknesses.get(cwe_id)
            if weakness is not None:
                ids.update(c for c in weakness.related_capec_ids if c in self.attack_patterns)
        return tuple(sorted(ids, key=_capec_sort_key))

    def remediation_for_weaknesses(self, cwe_ids) -> dict[str, list[RemediationEntry]]:
        """Entries whose weakness list intersects the query, grouped by kind.

        Order is the catalog's (stable); entries shared by several query
        weaknesses appear once.
        """
        query = set(cwe_ids)
        groups: dict[str, list[RemediationEntry]] = {k: [] for k in REMEDIATION_KINDS}
        for entry in self.remediation:
            if query.intersection(entry.cwe_ids) and entry not in groups[entry.kind]:
                groups[entry.kind].append(entry)
        return groups


def _capec_sort_key(capec_id: str):
    try:
        return (0, int(capec_id.rsplit("-", 1)[1]))
    except (IndexError, ValueError):
        return (1, 0)


# ---------------------------------------------------------------------------
# canonical JSON document


def _expect(doc, key, types, path, default=_CVE_RE):  # default sentinel: required
    if key not in doc:
        if default is _CVE_RE:
            raise SchemaError("missing required field", f"{path}.{key}" if path else key)
        return default
    value = doc[key]
    if not isinstance(value, types):
        raise SchemaError(
            f"expected {getattr(types, '__name__', types)}, got {type(value).__name__}",
            f"{path}.{key}" if path else key,
        )
    return value


def _parse_range(doc, path) -> VersionRange:
    rng = VersionRange(
        minimum=_expect(doc, "min", str, path, None),
        maximum=_expect(doc, "max", str, path, None),
        min_inclusive=_expect(doc, "min_inclusive", bool, path, True),
        max_inclusive=_expect(doc, "max_inclusive", bool, path, False),
    )
    if rng.minimum is None and rng.maximum is None:
        raise SchemaError("version range needs at least one bound", path)
    return rng


def _parse_affected(doc, path) -> AffectedProduct:
    raw = _expect(doc, "cpe", str, path)
    try:
        pattern = cpe.parse_formatted(raw)
    except Exception as exc:
        raise SchemaError(str(exc), f"{path}.cpe") from exc
    versions = None
    if doc.get("versions") is not None:
        versions = _parse_range(_expect(doc, "versions", dict, path), f"{path}.versions")
    return AffectedProduct(pattern=pattern, versions=versions)


def _parse_vulnerability(doc, path) -> VulnerabilityRecord:
    cve_id = _expect(doc, "cve_id", str, path)
    if not _CVE_RE.fullmatch(cve_id):
        raise SchemaError(f"bad CVE id {cve_id!r}", f"{path}.cve_id")
    cvss = _expect(doc, "cvss", (int, float), path)
    if not 0.0 <= float(cvss) <= 10.0:
        raise SchemaError(f"cvss {cvss} outside [0.0, 10.0]", f"{path}.cvss")
    scheme = _expect(doc, "cvss_scheme", str, path, "v2")
    if scheme not in ("v2", "v3"):
        raise SchemaError(f"unknown cvss scheme {scheme!r}", f"{path}.cvss_scheme")
    cwe_ids = tuple(_expect(doc, "cwe_ids", list, path, []))
    for i, cwe_id in enumerate(cwe_ids):
        if not isinstance(cwe_id, str) or not _CWE_RE.fullmatch(cwe_id):
            raise SchemaError(f"bad CWE id {cwe_id!r}", f"{path}.cwe_ids[{i}]")
    if not cwe_ids:
        cwe_ids = (CWE_NULL,)
    affected = tuple(
        _parse_affected(entry, f"{path}.affected[{i}]")
        for i, entry in enumerate(_expect(doc, "affected", list, path, []))
    )
    published = _expect(doc, "published", str, path, "1999-01-01")
    if not _DATE_RE.fullmatch(published):
        raise SchemaError(f"bad date {published!r}", f"{path}.published")
    return VulnerabilityRecord(
        cve_id=cve_id,
        cvss=float(cvss),
        cvss_scheme=scheme,
        cwe_ids=cwe_ids,
        affected=affected,
        exploit_available=bool(_expect(doc, "exploit_available", bool, path, False)),
        published=published,
    )


def _parse_weakness(doc, path) -> WeaknessRecord:
    cwe_id = _expect(doc, "cwe_id", str, path)
    if not _CWE_RE.fullmatch(cwe_id):
        raise SchemaError(f"bad CWE id {cwe_id!r}", f"{path}.cwe_id")
    related = tuple(_expect(doc, "related_capec_ids", list, path, []))
    if cwe_id == CWE_NULL and related:
        raise SchemaError("the null weakness may not reference attack patterns", path)
    return WeaknessRecord(
        cwe_id=cwe_id,
        name=_expect(doc, "name", str, path, ""),
        description=_expect(doc, "description", str, path, ""),
        related_capec_ids=related,
    )


def _parse_attack_pattern(doc, path) -> AttackPatternRecord:
    capec_id = _expect(doc, "capec_id", str, path)
    if not _CAPEC_RE.fullmatch(capec_id):
        raise SchemaError(f"bad CAPEC id {capec_id!r}", f"{path}.capec_id")
    likelihood = _expect(doc, "likelihood", str, path, "medium")
    impact = _expect(doc, "impact", str, path, "medium")
    for label, value in (("likelihood", likelihood), ("impact", impact)):
        if value not in ORDINAL_SCALE:
            raise SchemaError(f"{label} {value!r} not on the five-step scale", path)
    return AttackPatternRecord(
        capec_id=capec_id,
        name=_expect(doc, "name", str, path, ""),
        likelihood=likelihood,
        impact=impact,
    )


def _parse_remediation(doc, path) -> RemediationEntry:
    kind = _expect(doc, "kind", str, path)
    if kind not in REMEDIATION_KINDS:
        raise SchemaError(f"unknown remediation kind {kind!r}", f"{path}.kind")
    cwe_ids = tuple(_expect(doc, "cwe_ids", list, path))
    if not cwe_ids:
        raise SchemaError("remediation entry needs at least one weakness", f"{path}.cwe_ids")
    capec_ids = tuple(_expect(doc, "capec_ids", list, path, []))
    if kind == "test_case" and not capec_ids:
        raise SchemaError("test_case entries need at least one CAPEC id", f"{path}.capec_ids")
    return RemediationEntry(
        kind=kind,
        cwe_ids=cwe_ids,
        capec_ids=capec_ids,
        text=_expect(doc, "text", str, path),
    )


def catalog_from_dict(doc: dict) -> Catalog:
    """Build and index a catalog from a canonical document (see module doc)."""
    if not isinstance(doc, dict):
        raise SchemaError("catalog document must be an object")
    version = _expect(doc, "schema_version", int, "", 1)
    if version != 1:
        raise SchemaError(f"unsupported schema_version {version}", "schema_version")

    catalog = Catalog(snapshot_date=_expect(doc, "snapshot_date", str, "", "1999-01-01"))

    for i, raw in enumerate(_expect(doc, "vulnerabilities", list, "", [])):
        record = _parse_vulnerability(raw, f"vulnerabilities[{i}]")
        if record.cve_id in catalog.vulnerabilities:
            raise DuplicateId(record.cve_id)
        catalog.vulnerabilities[record.cve_id] = record

    for i, raw in enumerate(_expect(doc, "weaknesses", list, "", [])):
        record = _parse_weakness(raw, f"weaknesses[{i}]")
        if record.cwe_id in catalog.weaknesses:
            raise DuplicateId(record.cwe_id)
        catalog.weaknesses[record.cwe_id] = record
    catalog.weaknesses.setdefault(CWE_NULL, WeaknessRecord(cwe_id=CWE_NULL, name="no assigned weakness"))

    for i, raw in enumerate(_expect(doc, "attack_patterns", list, "", [])):
        record = _parse_attack_pattern(raw, f"attack_patterns[{i}]")
        if record.capec_id in catalog.attack_patterns:
            raise DuplicateId(record.capec_id)
        catalog.attack_patterns[record.capec_id] = record

    for i, raw in enumerate(_expect(doc, "remediation", list, "", [])):
        catalog.remediation.append(_parse_remediation(raw, f"remediation[{i}]"))

    # Dangling references are reported, not fatal.
    for weakness in catalog.weaknesses.values():
        for capec_id in weakness.related_capec_ids:
            if capec_id not in catalog.attack_patterns:
                catalog.warnings.append(
                    f"{weakness.cwe_id} references unknown attack pattern {capec_id}"
                )
    return catalog


def load_catalog(path) -> Catalog:
    """Load the canonical catalog JSON file at ``path``."""
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"not valid JSON: {exc}") from exc
    return catalog_from_dict(doc)


def catalog_to_dict(catalog: Catalog) -> dict:
    """Canonical serialization; ``catalog_from_dict`` round-trips it."""

    def range_dict(rng: VersionRange):
        out = {"min_inclusive": rng.min_inclusive, "max_inclusive": rng.max_inclusive}
        if rng.minimum is not None:
            out["min"] = rng.minimum
        if rng.maximum is not None:
            out["max"] = rng.maximum
        return out

    return {
        "schema_version": 1,
        "snapshot_date": catalog.snapshot_date,
        "vulnerabilities": [
            {
                "cve_id": r.cve_id,
                "cvss": r.cvss,
                "cvss_scheme": r.cvss_scheme,
                "cwe_ids": list(r.cwe_ids),
                "affected": [
                    {
                        "cpe": cpe.bind_formatted(a.pattern),
                        "versions": range_dict(a.versions) if a.versions else None,
                    }
                    for a in r.affected
                ],
                "exploit_available": r.exploit_available,
                "published": r.published,
            }
            for r in sorted(catalog.vulnerabilities.values(), key=lambda r: r.cve_id)
        ],
        "weaknesses": [
            {
                "cwe_id": w.cwe_id,
                "name": w.name,
                "description": w.description,
                "related_capec_ids": list(w.related_capec_ids),
            }
            for w in sorted(catalog.weaknesses.values(), key=lambda w: w.cwe_id)
        ],
        "attack_patterns": [
            {
                "capec_id": p.capec_id,
                "name": p.name,
                "likelihood": p.likelihood,
                "impact": p.impact,
            }
            for p in sorted(catalog.attack_patterns.values(), key=lambda p: _capec_sort_key(p.capec_id))
        ],
        "remediation": [
            {
                "kind": e.kind,
                "cwe_ids": list(e.cwe_ids),
                "capec_ids": list(e.capec_ids),
                "text": e.text,
            }
            for e in catalog.remediation
        ],
    }


def save_catalog(catalog: Catalog, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(catalog_to_dict(catalog), fh, indent=2, sort_keys=True)
        fh.write("\n")


def merge_catalogs(base: Catalog, extra: Catalog) -> Catalog:
    """Merge two catalogs; overlapping ids raise :class:`DuplicateId`."""
    doc = catalog_to_dict(base)
    other = catalog_to_dict(extra)
    doc["vulnerabilities"] += other["vulnerabilities"]
    seen_weaknesses = {w["cwe_id"] for w in doc["weaknesses"]}
    doc["weaknesses"] += [w for w in other["weaknesses"] if w["cwe_id"] not in seen_weaknesses]
    seen_patterns = {p["capec_id"] for p in doc["attack_patterns"]}
    doc["attack_patterns"] += [p for p in other["attack_patterns"] if p["capec_id"] not in seen_patterns]
    doc["remediation"] += [e for e in other["remediation"] if e not in doc["remediation"]]
    doc["snapshot_date"] = max(base.snapshot_date, extra.snapshot_date)
    return catalog_from_dict(doc)


# ---------------------------------------------------------------------------
# NVD JSON feed (schema 1.1) import


def import_nvd_feed(path, prefer_v3: bool = True):
    """Convert an NVD 1.1 feed file into canonical vulnerability records.

    Returns ``(records, warnings)``.  The v3 base score is preferred (v2 as
    fallback) unless ``prefer_v3`` is false; the first listed CWE is kept and
    a missing/`NVD-CWE-*` problem type maps to ``CWE-NULL``; configuration
    nodes are flattened, best effort, to (cpe pattern, version range) pairs.
    Entries that cannot be converted are skipped with a warning.
    """
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FeedParseError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "CVE_Items" not in doc:
        raise FeedParseError("missing CVE_Items; not an NVD 1.1 feed")

    records: list[VulnerabilityRecord] = []
    warnings: list[str] = []
    for i, item in enumerate(doc["CVE_Items"]):
        try:
            records.append(_convert_nvd_item(item, prefer_v3, warnings))
        except _SkipEntry as skip:
            warnings.append(f"CVE_Items[{i}]: {skip}")
    return records, warnings


class _SkipEntry(Exception):
    pass


def _convert_nvd_item(item, prefer_v3, warnings) -> VulnerabilityRecord:
    meta = item.get("cve", {}).get("CVE_data_meta", {})
    cve_id = meta.get("ID")
    if not cve_id or not _CVE_RE.fullmatch(cve_id):
        raise _SkipEntry(f"missing or malformed CVE id {cve_id!r}")

    impact = item.get("impact", {})
    v3 = impact.get("baseMetricV3", {}).get("cvssV3", {}).get("baseScore")
    v2 = impact.get("baseMetricV2", {}).get("cvssV2", {}).get("baseScore")
    if prefer_v3:
        cvss, scheme = (v3, "v3") if v3 is not None else (v2, "v2")
    else:
        cvss, scheme = (v2, "v2") if v2 is not None else (v3, "v3")
    if cvss is None:
        raise _SkipEntry(f"{cve_id}: no CVSS base score")

    cwe_id = CWE_NULL
    for ptype in item.get("cve", {}).get("problemtype", {}).get("problemtype_data", []):
        for desc in ptype.get("description", []):
            value = desc.get("value", "")
            if _CWE_RE.fullmatch(value) and value != CWE_NULL:
                cwe_id = value
                break
        if cwe_id != CWE_NULL:
            break

    affected = []
    for node in item.get("configurations", {}).get("nodes", []):
        _flatten_nvd_node(node, affected, cve_id, warnings)

    published = item.get("publishedDate", "")[:10]
    if not _DATE_RE.fullmatch(published):
        published = "1999-01-01"

    return VulnerabilityRecord(
        cve_id=cve_id,
        cvss=float(cvss),
        cvss_scheme=scheme,
        cwe_ids=(cwe_id,),
        affected=tuple(affected),
        exploit_available=False,
        published=published,
    )


def _flatten_nvd_node(node, out, cve_id, warnings):
    for match in node.get("cpe_match", []):
        if not match.get("vulnerable", True):
            continue
        uri = match.get("cpe23Uri")
        if not uri:
            continue
        try:
            pattern = cpe.parse_formatted(uri)
        except Exception as exc:
            warnings.append(f"{cve_id}: skipped unparsable cpe {uri!r}: {exc}")
            continue
        bounds = {
            "minimum": match.get("versionStartIncluding") or match.get("versionStartExcluding"),
            "maximum": match.get("versionEndIncluding") or match.get("versionEndExcluding"),
            "min_inclusive": "versionStartExcluding" not in match,
            "max_inclusive": "versionEndIncluding" in match,
        }
        versions = None
        if bounds["minimum"] is not None or bounds["maximum"] is not None:
            versions = VersionRange(**bounds)
        out.append(AffectedProduct(pattern=pattern, versions=versions))
    for child in node.get("children", []):
        _flatten_nvd_node(child, out, cve_id, warnings)


def records_to_catalog(records, snapshot_date: str) -> Catalog:
    """Wrap imported records in a catalog (duplicate ids rejected)."""
    catalog = Catalog(snapshot_date=snapshot_date)
    for record in records:
        if record.cve_id in catalog.vulnerabilities:
            raise DuplicateId(record.cve_id)
        catalog.vulnerabilities[record.cve_id] = record
    catalog.weaknesses[CWE_NULL] = WeaknessRecord(cwe_id=CWE_NULL, name="no assigned weakness")
    return catalog


# ---------------------------------------------------------------------------
# CSV side-tables (weakness->attack pattern mapping, remediation KB)


def import_cwe_capec_csv(path) -> dict[str, tuple[str, ...]]:
    """Read the weakness-to-attack-pattern mapping.

    Columns: ``cwe_id,capec_ids`` with the CAPEC list semicolon separated.
    """
    mapping: dict[str, tuple[str, ...]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            capecs = tuple(c.strip() for c in row["capec_ids"].split(";") if c.strip())
            mapping[row["cwe_id"].strip()] = capecs
    return mapping


def import_remediation_csv(path) -> list[RemediationEntry]:
    """Read the remediation knowledge base.

    Columns: ``kind,cwe_ids,capec_ids,text`` with id lists semicolon separated.
    """
    entries = []
    with open(path, newline="", encoding="utf-8") as fh:
        for i, row in enumerate(csv.DictReader(fh)):
            kind = row["kind"].strip()
            if kind not in REMEDIATION_KINDS:
                raise SchemaError(f"unknown remediation kind {kind!r}", f"row {i + 1}")
            entries.append(
                RemediationEntry(
                    kind=kind,
                    cwe_ids=tuple(c.strip() for c in row["cwe_ids"].split(";") if c.strip()),
                    capec_ids=tuple(c.strip() for c in row["capec_ids"].split(";") if c.strip()),
                    text=row["text"].strip(),
                )
            )
    return entries
