"""Command-line frontend.

All state lives in explicit files (catalog JSON, timeline JSON); every
subcommand is deterministic given the same inputs, except ``event --at now``
which reads the clock only when asked to.  Exit codes: 0 success, 1 an alert
fired, 2 usage or data error.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone

from . import catalog as catalog_mod
from . import cpe, graph, metrics, report, timeline as timeline_mod
from .errors import VulnGraphError
from .graph import ClusterRule
from .report import AlertRule, RenderOptions


def _write(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        print(text)


def _load_timeline(args):
    return timeline_mod.load_timeline(args.timeline)


def _load_catalog(args):
    return catalog_mod.load_catalog(args.catalog) if getattr(args, "catalog", None) else None


def _snapshot(args):
    tl = _load_timeline(args)
    cat = _load_catalog(args)
    label = args.epoch or (tl.epochs[-1].label if tl.epochs else None)
    if label is None:
        raise VulnGraphError("timeline has no epochs; pass --epoch after marking one")
    return tl, timeline_mod.epoch_snapshot(tl, cat, label)


def _resolve_at(value: str) -> str:
    if value == "now":
        return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    return timeline_mod.validate_timestamp(value)


def _cluster_rule(args) -> ClusterRule | None:
    choice = getattr(args, "cluster", None) or getattr(args, "criterion", None)
    if choice in (None, "none"):
        return None
    if choice == "no-vulns":
        return ClusterRule.no_vulnerabilities()
    return ClusterRule.cvss_below(args.threshold)


# -- subcommand bodies -------------------------------------------------------


def _cmd_ingest(args) -> int:
    records, warnings = catalog_mod.import_nvd_feed(args.feed, prefer_v3=not args.prefer_v2)
    for line in warnings:
        print(f"warning: {line}", file=sys.stderr)
    cat = catalog_mod.records_to_catalog(records, snapshot_date=args.snapshot_date)
    if args.merge:
        cat = catalog_mod.merge_catalogs(catalog_mod.load_catalog(args.merge), cat)
    catalog_mod.save_catalog(cat, args.out)
    print(f"wrote {len(cat.vulnerabilities)} records to {args.out}")
    return 0


def _cmd_build(args) -> int:
    cat = catalog_mod.load_catalog(args.catalog)
    manifest = timeline_mod.load_manifest(args.manifest)
    at = _resolve_at(args.at)
    tl = timeline_mod.Timeline(
        sut_cpe=cpe.parse_formatted(args.sut), manifest=manifest, built_at=at
    )
    tl = timeline_mod.mark_epoch(tl, args.epoch, at)
    tl = timeline_mod.embed_snapshots(tl, cat)
    timeline_mod.save_timeline(tl, args.out)
    g = timeline_mod.epoch_snapshot(tl, cat, args.epoch)
    print(
        f"built {args.epoch}: {len(g.active_assets())} assets, "
        f"{len(g.active_vulns())} vulnerabilities -> {args.out}"
    )
    return 0


def _cmd_event(args) -> int:
    tl = _load_timeline(args)
    cat = catalog_mod.load_catalog(args.catalog)
    at = _resolve_at(args.at)
    if args.kind != "mark-epoch":
        dependencies = tuple(tuple(pair.split(":", 1)) for pair in args.dep or [])
        event = timeline_mod.LifecycleEvent(
            at=at,
            seq=0,
            kind=args.kind.replace("-", "_"),
            asset_id=args.asset,
            cve_id=args.cve,
            cpe_value=cpe.parse_formatted(args.cpe) if args.cpe else None,
            dependencies=dependencies,
            top_level=args.top_level,
            fixes=tuple(args.fixes.split(",")) if args.fixes else (),
        )
        # Validate by replaying up to and including the new event.
        candidate = timeline_mod.append_event(tl, event)
        for _ in timeline_mod.replay(candidate, cat):
            pass
        tl = candidate
    if args.mark_epoch:
        tl = timeline_mod.mark_epoch(tl, args.mark_epoch, at)
    tl = timeline_mod.embed_snapshots(tl, cat)
    timeline_mod.save_timeline(tl, args.out or args.timeline)
    print(f"appended {args.kind} at {at}")
    return 0


def _cmd_metrics(args) -> int:
    _, g = _snapshot(args)
    rep = metrics.snapshot_report(g)
    _write(json.dumps(rep.to_dict(), indent=2, sort_keys=True) if args.json else rep.to_text(),
           args.out)
    return 0


def _cmd_prioritize(args) -> int:
    _, g = _snapshot(args)
    grouping = "global" if args.global_order else "by_asset"
    rows = metrics.prioritize(g, args.min, args.max, grouping)
    if args.json:
        payload = [
            {
                "cve_id": r.cve_id,
                "cvss": r.cvss,
                "asset": r.asset_id,
                "exploit_available": r.exploit_available,
                "rank": r.rank,
            }
            for r in rows
        ]
        _write(json.dumps(payload, indent=2, sort_keys=True), args.out)
    else:
        lines = [f"{'CVE':<18} {'CVSS':>5}  ASSET"]
        for r in rows:
            mark = " (exploit)" if r.exploit_available else ""
            lines.append(f"{r.cve_id:<18} {r.cvss:>5.1f}  {r.asset_id}{mark}")
        _write("\n".join(lines), args.out)
    return 0


def _cmd_cluster(args) -> int:
    _, g = _snapshot(args)
    rule = _cluster_rule(args)
    if rule is None:
        raise VulnGraphError("pick a criterion: no-vulns or cvss-below")
    opts = RenderOptions(
        cluster_rule=rule,
        cluster_scope=tuple(args.scope.split(",")) if args.scope else None,
        show_deprecated=args.show_deprecated,
    )
    _write(report.export_dot(g, opts), args.out)
    return 0


def _cmd_impact(args) -> int:
    _, g = _snapshot(args)
    affected = sorted(graph.impact_set(g, args.cve))
    _write("\n".join(affected) if affected else "(no active asset affected)", args.out)
    return 0


def _cmd_export(args) -> int:
    _, g = _snapshot(args)
    opts = RenderOptions(
        cluster_rule=_cluster_rule(args),
        show_deprecated=args.show_deprecated,
        verbosity="full" if args.full_labels else "id",
    )
    _write(report.export_dot(g, opts), args.out)
    return 0


def _cmd_report(args) -> int:
    tl = _load_timeline(args)
    cat = catalog_mod.load_catalog(args.catalog)
    doc = report.generate_report(tl, cat, args.format)
    if args.format == "json":
        doc = json.dumps(doc, indent=2, sort_keys=True)
    _write(doc, args.out)
    return 0


def _cmd_alerts(args) -> int:
    _, g = _snapshot(args)
    rules = []
    if args.cvss_at_least is not None:
        rules.append(AlertRule.cvss_at_least(args.cvss_at_least))
    for spec_text in args.metric_bound or []:
        try:
            metric, comparator, value = spec_text.split(":")
        except ValueError:
            raise VulnGraphError(
                f"--metric-bound wants METRIC:CMP:VALUE, got {spec_text!r}"
            ) from None
        rules.append(AlertRule.metric_bound(metric, comparator, float(value)))
    firings = report.check_alerts(g, rules)
    for firing in firings:
        print(f"[{firing.rule.severity}] {firing.message}")
    if not firings:
        print("no alerts")
    return 1 if firings else 0


def _cmd_diff(args) -> int:
    tl = _load_timeline(args)
    cat = _load_catalog(args)
    delta = report.epoch_diff(tl, cat, args.from_epoch, args.to_epoch)
    if args.json:
        _write(json.dumps(delta, indent=2, sort_keys=True), args.out)
        return 0
    lines = []
    for key in ("assets_added", "assets_removed", "vulns_added", "vulns_fixed"):
        lines.append(f"{key}: {', '.join(delta[key]) if delta[key] else '-'}")
    _write("\n".join(lines), args.out)
    return 0


# -- parser -------------------------------------------------------------------


def _add_snapshot_args(p, catalog_required=False):
    p.add_argument("--timeline", required=True, help="timeline JSON file")
    p.add_argument("--catalog", required=catalog_required,
                   help="catalog JSON file (optional when snapshots are embedded)")
    p.add_argument("--epoch", help="epoch label (default: the latest)")
    p.add_argument("--out", help="write output here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vulngraph", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="convert an NVD 1.1 feed to a canonical catalog")
    p.add_argument("--feed", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--snapshot-date", default="1999-01-01")
    p.add_argument("--prefer-v2", action="store_true",
                   help="prefer CVSS v2 base scores over v3")
    p.add_argument("--merge", help="merge into an existing catalog file")
    p.set_defaults(fn=_cmd_ingest)

    p = sub.add_parser("build", help="build a timeline from a manifest and catalog")
    p.add_argument("--sut", required=True, help="CPE 2.3 name of the system under test")
    p.add_argument("--manifest", required=True)
    p.add_argument("--catalog", required=True)
    p.add_argument("--at", required=True, help="ISO 8601 UTC timestamp or 'now'")
    p.add_argument("--epoch", default="V1", help="label of the initial epoch")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_build)

    p = sub.add_parser("event", help="append a lifecycle event")
    p.add_argument("--timeline", required=True)
    p.add_argument("--catalog", required=True)
    p.add_argument(
        "--kind",
        required=True,
        choices=[
            "asset-added",
            "vuln-discovered",
            "asset-updated",
            "vuln-patched",
            "asset-retired",
            "noop",
            "mark-epoch",
        ],
    )
    p.add_argument("--at", required=True, help="ISO 8601 UTC timestamp or 'now'")
    p.add_argument("--asset")
    p.add_argument("--cve")
    p.add_argument("--cpe")
    p.add_argument("--fixes", help="comma-separated CVE ids fixed by an update")
    p.add_argument("--dep", action="append", metavar="SRC:DST",
                   help="dependency pair for asset-added (repeatable)")
    p.add_argument("--top-level", action="store_true")
    p.add_argument("--mark-epoch", metavar="LABEL",
                   help="also mark an epoch at the same timestamp")
    p.add_argument("--out", help="write here instead of updating in place")
    p.set_defaults(fn=_cmd_event)

    p = sub.add_parser("metrics", help="print the metric table for one epoch")
    _add_snapshot_args(p)
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=_cmd_metrics)

    p = sub.add_parser("prioritize", help="CVSS-sorted patch queue")
    _add_snapshot_args(p)
    p.add_argument("--min", type=float, default=0.0)
    p.add_argument("--max", type=float, default=10.0)
    p.add_argument("--global", dest="global_order", action="store_true",
                   help="one flat queue instead of per-asset groups")
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=_cmd_prioritize)

    p = sub.add_parser("cluster", help="export DOT with a clustering applied")
    _add_snapshot_args(p)
    p.add_argument("--criterion", choices=["no-vulns", "cvss-below"], required=True)
    p.add_argument("--threshold", type=float, default=0.0)
    p.add_argument("--scope", help="comma-separated asset ids to consider")
    p.add_argument("--show-deprecated", action="store_true")
    p.set_defaults(fn=_cmd_cluster)

    p = sub.add_parser("impact", help="assets reached by exploiting a CVE")
    _add_snapshot_args(p)
    p.add_argument("--cve", required=True)
    p.set_defaults(fn=_cmd_impact)

    p = sub.add_parser("export", help="export one epoch as Graphviz DOT")
    _add_snapshot_args(p)
    p.add_argument("--cluster", choices=["none", "no-vulns", "cvss-below"], default="none")
    p.add_argument("--threshold", type=float, default=0.0)
    p.add_argument("--show-deprecated", action="store_true")
    p.add_argument("--full-labels", action="store_true")
    p.set_defaults(fn=_cmd_export)

    p = sub.add_parser("report", help="full assessment report")
    p.add_argument("--timeline", required=True)
    p.add_argument("--catalog", required=True)
    p.add_argument("--format", choices=["markdown", "json"], default="markdown")
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_report)

    p = sub.add_parser("alerts", help="evaluate alert rules (exit 1 when any fires)")
    _add_snapshot_args(p)
    p.add_argument("--cvss-at-least", type=float)
    p.add_argument("--metric-bound", action="append", metavar="METRIC:CMP:VALUE",
                   help="e.g. M0:>=:1.0 (repeatable)")
    p.set_defaults(fn=_cmd_alerts)

    p = sub.add_parser("diff", help="asset/vulnerability delta between two epochs")
    p.add_argument("--timeline", required=True)
    p.add_argument("--catalog")
    p.add_argument("--from-epoch", required=True)
    p.add_argument("--to-epoch", required=True)
    p.add_argument("--json", action="store_true")
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_diff)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 on --help; keep that contract
        return 2 if exc.code else 0
    try:
        return args.fn(args)
    except (VulnGraphError, FileNotFoundError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
