"""Paths to the bundled desk-scale study data.

The bundle reproduces a three-release assessment of the OpenPLC controller
(epochs V1, V2, V3): a catalog whose per-asset and per-weakness counts match
the published study tables, the corresponding manifest and event timeline,
the weakness remediation knowledge base and the ISA/IEC 62443 metric mapping.
"""

from pathlib import Path

_DATA = Path(__file__).parent / "data"


def openplc_catalog_path() -> Path:
    return _DATA / "openplc_catalog.json"


def openplc_timeline_path() -> Path:
    return _DATA / "openplc_timeline.json"


def openplc_manifest_path() -> Path:
    return _DATA / "openplc_manifest.json"


def iec62443_mapping_path() -> Path:
    return _DATA / "iec62443_mapping.csv"


def remediation_csv_path() -> Path:
    return _DATA / "remediation.csv"


def cwe_capec_csv_path() -> Path:
    return _DATA / "cwe_capec.csv"
