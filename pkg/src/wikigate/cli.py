"""Admin command line: bootstrap, serve, batch moderation, audit export.

Exit codes: 0 success, 1 domain error, 2 usage error. Only mutating
commands open the event-log writer; list/show/stats work read-only from
the log, so they run alongside a live server.
"""

from __future__ import annotations

import argparse
import json
import shutil
import secrets as _secrets
import sys
from importlib import resources
from pathlib import Path

from . import audit, reporting, state as state_mod
from .config import DEFAULT_LISTEN, ServiceConfig, load_config
from .engine import WikiEngine
from .errors import NotFoundError, ValidationError, WikiGateError
from .identity import ROLE_MODERATOR
from .service import serve

STEWARD_USERNAME = "steward"
IMPORTER_USERNAME = "importer"


def _config_from_args(args) -> ServiceConfig:
    overrides = {}
    if getattr(args, "data_dir", None):
        overrides["data_dir"] = str(args.data_dir)
    if getattr(args, "listen", None):
        overrides["listen_address"] = args.listen
    if args.config:
        return load_config(args.config, overrides)
    if "data_dir" in overrides:
        return load_config(None, overrides)
    default = Path("config.json")
    if default.exists():
        return load_config(default, overrides)
    raise ValidationError("pass --config FILE or --data-dir DIR (no ./config.json found)")


def _read_only_state(config: ServiceConfig):
    events = audit.read_events(config.data_dir)
    return events, state_mod.replay(events)


def _ensure_author(engine: WikiEngine, username: str, display_name: str, moderator: bool):
    try:
        record = engine.state.registry.get_by_username(username)
    except NotFoundError:
        record = engine.register_author(
            username=username,
            display_name=display_name,
            affiliation="",
            secret=_secrets.token_hex(16),
        )
    if moderator and not record.is_moderator:
        engine.grant_moderator(username)
    return engine.state.registry.get_by_username(username)


def _moderator_for(engine: WikiEngine, args):
    username = getattr(args, "as_user", None)
    if username:
        record = engine.state.registry.get_by_username(username)
        if not record.is_moderator:
            raise ValidationError(f"{username!r} lacks the moderator role")
        return record
    return _ensure_author(engine, STEWARD_USERNAME, "Automated steward", moderator=True)


# -- commands --------------------------------------------------------------


def cmd_init(args) -> int:
    target = Path(args.dir)
    config_path = target / "config.json"
    if config_path.exists():
        raise ValidationError(f"{config_path} already exists; refusing to overwrite")
    target.mkdir(parents=True, exist_ok=True)

    stub_path = target / "evidence_stub.json"
    if not stub_path.exists():
        sample = resources.files("wikigate.data").joinpath("evidence_stub.json")
        stub_path.write_text(sample.read_text(encoding="utf-8"), encoding="utf-8")

    config = load_config(
        None,
        {
            "data_dir": str(target),
            "listen_address": args.listen or DEFAULT_LISTEN,
            "evidence_stub_path": str(stub_path),
        },
    )
    config_path.write_text(json.dumps(config.to_dict(), indent=2) + "\n", encoding="utf-8")
    # Touch the log so the directory is serve-ready.
    WikiEngine(config).close()
    print(f"initialized {target}")
    print(f"config written to {config_path}")
    return 0


def cmd_serve(args) -> int:
    config = _config_from_args(args)
    engine = WikiEngine(config)
    try:
        serve(engine, config.host, config.port)
    except OSError as exc:
        print(f"error: cannot listen on {config.listen_address}: {exc}", file=sys.stderr)
        engine.close()
        return 1
    return 0


def cmd_grant_moderator(args) -> int:
    config = _config_from_args(args)
    with WikiEngine(config) as engine:
        record = engine.grant_moderator(args.username)
        print(f"{record.username} roles: {', '.join(sorted(record.roles))}")
    return 0


def cmd_import(args) -> int:
    config = _config_from_args(args)
    source = Path(args.dir)
    if not source.is_dir():
        raise ValidationError(f"{source} is not a directory")
    files = sorted(p for p in source.iterdir() if p.is_file())
    with WikiEngine(config) as engine:
        importer = _ensure_author(engine, IMPORTER_USERNAME, "Batch importer", moderator=True)
        imported = 0
        for path in files:
            title = path.stem
            try:
                text = path.read_text(encoding="utf-8")
            except (OSError, UnicodeDecodeError) as exc:
                print(f"skipping {path.name}: {exc}", file=sys.stderr)
                continue
            try:
                engine.create_page(title, text, importer)
            except WikiGateError as exc:
                print(f"skipping {path.name}: {exc}", file=sys.stderr)
                continue
            imported += 1
        print(f"imported {imported} of {len(files)} files")
    return 0


def cmd_moderate_list(args) -> int:
    config = _config_from_args(args)
    _events, system = _read_only_state(config)
    pending = system.contributions.list(status="pending")
    if not pending:
        print("queue is empty")
        return 0
    print(f"{'id':32}  {'page':20}  {'kind':8}  {'composite':9}  submitted_at")
    for c in pending:
        report = system.reports.get(c.contribution_id)
        composite = f"{report.composite:.4f}" if report else "-"
        print(
            f"{c.contribution_id:32}  {c.page[:20]:20}  {c.kind:8}  "
            f"{composite:9}  {c.submitted_at}"
        )
    return 0


def cmd_moderate_show(args) -> int:
    config = _config_from_args(args)
    _events, system = _read_only_state(config)
    contribution = system.contributions.get(args.id)
    view = contribution.to_dict()
    report = system.reports.get(args.id)
    view["check_report"] = report.to_dict() if report else None
    view["verdict"] = system.verdicts.get(args.id)
    print(json.dumps(view, indent=2, ensure_ascii=False))
    return 0


def cmd_moderate_accept(args) -> int:
    config = _config_from_args(args)
    with WikiEngine(config) as engine:
        moderator = _moderator_for(engine, args)
        contribution = engine.decide_contribution(args.id, "accept", moderator)
        print(f"accepted {args.id} as revision {contribution.status.rev_seq}")
    return 0


def cmd_moderate_reject(args) -> int:
    config = _config_from_args(args)
    with WikiEngine(config) as engine:
        moderator = _moderator_for(engine, args)
        engine.decide_contribution(args.id, "reject", moderator, reason=args.reason)
        print(f"rejected {args.id}: {args.reason}")
    return 0


def cmd_moderate_revert(args) -> int:
    config = _config_from_args(args)
    with WikiEngine(config) as engine:
        moderator = _moderator_for(engine, args)
        rev = engine.revert_contribution(args.id, moderator)
        print(f"reverted {args.id}; {rev.page} is now at revision {rev.rev_seq}")
    return 0


def cmd_moderate_revert_page(args) -> int:
    config = _config_from_args(args)
    with WikiEngine(config) as engine:
        moderator = _moderator_for(engine, args)
        rev = engine.revert_page(args.title, args.to, moderator)
        print(f"{rev.page} restored to revision {args.to} content as revision {rev.rev_seq}")
    return 0


def cmd_audit_stats(args) -> int:
    config = _config_from_args(args)
    events, system = _read_only_state(config)
    usernames = {a: r.username for a, r in system.registry.authors.items()}
    report = audit.stats(
        events,
        author=args.author,
        page=args.page,
        usernames=usernames,
    )
    sys.stdout.write(reporting.format_stats(report))
    if args.out:
        for path in reporting.write_report(report, args.out):
            print(f"wrote {path}")
    return 0


def cmd_export(args) -> int:
    config = _config_from_args(args)
    log_path = Path(config.data_dir) / audit.LOG_NAME
    if not log_path.exists():
        raise NotFoundError(f"no event log at {log_path}")
    out = Path(args.out)
    if out.resolve() == log_path.resolve():
        raise ValidationError("export target is the live log itself")
    out.parent.mkdir(parents=True, exist_ok=True)
    shutil.copyfile(log_path, out)
    count = len(audit.read_events(config.data_dir))
    print(f"exported {count} events to {out}")
    return 0


# -- parser ----------------------------------------------------------------


def _add_config_args(parser) -> None:
    parser.add_argument("--config", help="path to the service config JSON")
    parser.add_argument("--data-dir", help="data directory (overrides config)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wikigate",
        description="Moderated wiki: append-only pages behind a contribution queue.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", help="create a data directory with config and empty log")
    p.add_argument("dir")
    p.add_argument("--listen", help=f"listen address (default {DEFAULT_LISTEN})")
    p.set_defaults(func=cmd_init)

    p = sub.add_parser("serve", help="run the HTTP service")
    _add_config_args(p)
    p.add_argument("--listen", help="listen address override")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("grant-moderator", help="give an author the moderator role")
    _add_config_args(p)
    p.add_argument("username")
    p.set_defaults(func=cmd_grant_moderator)

    p = sub.add_parser("import", help="create one page per file in a directory")
    _add_config_args(p)
    p.add_argument("dir")
    p.set_defaults(func=cmd_import)

    p = sub.add_parser("moderate", help="work the pending queue")
    msub = p.add_subparsers(dest="moderate_command", required=True)

    m = msub.add_parser("list", help="show pending contributions")
    _add_config_args(m)
    m.set_defaults(func=cmd_moderate_list)

    m = msub.add_parser("show", help="show one contribution in full")
    _add_config_args(m)
    m.add_argument("id")
    m.set_defaults(func=cmd_moderate_show)

    m = msub.add_parser("accept", help="accept a pending contribution")
    _add_config_args(m)
    m.add_argument("id")
    m.add_argument("--as", dest="as_user", help="moderator username to act as")
    m.set_defaults(func=cmd_moderate_accept)

    m = msub.add_parser("reject", help="reject a pending contribution")
    _add_config_args(m)
    m.add_argument("id")
    m.add_argument("--reason", required=True)
    m.add_argument("--as", dest="as_user", help="moderator username to act as")
    m.set_defaults(func=cmd_moderate_reject)

    m = msub.add_parser("revert", help="revert an accepted contribution")
    _add_config_args(m)
    m.add_argument("id")
    m.add_argument("--as", dest="as_user", help="moderator username to act as")
    m.set_defaults(func=cmd_moderate_revert)

    m = msub.add_parser("revert-page", help="restore a page to an explicit revision")
    _add_config_args(m)
    m.add_argument("title")
    m.add_argument("--to", type=int, required=True, help="target revision number")
    m.add_argument("--as", dest="as_user", help="moderator username to act as")
    m.set_defaults(func=cmd_moderate_revert_page)

    p = sub.add_parser("audit", help="analysis over the event log")
    asub = p.add_subparsers(dest="audit_command", required=True)
    a = asub.add_parser("stats", help="print tables; optionally write CSVs and charts")
    _add_config_args(a)
    a.add_argument("--author", help="narrow to one author (id or username)")
    a.add_argument("--page", help="narrow to one page title")
    a.add_argument("--out", help="directory for CSV and PNG files")
    a.set_defaults(func=cmd_audit_stats)

    p = sub.add_parser("export", help="copy the event log")
    _add_config_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except WikiGateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
