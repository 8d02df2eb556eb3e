"""HTTP/JSON surface over the engine.

Thin by design: parse the request, call one engine method, serialize the
result. Session checks happen here (bearer token in the Authorization
header); every domain rule lives below the engine boundary, and error
classes carry their own status codes. List endpoints page with a fixed
limit of 100 plus an ``offset`` query parameter.
"""

from __future__ import annotations

import json
import re
import signal
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, unquote, urlsplit

from .engine import WikiEngine
from .errors import (
    AuthorizationError,
    IdentityError,
    ValidationError,
    WikiGateError,
)

PAGE_LIMIT = 100

AUTH_NONE = None
AUTH_ANY = "any"
AUTH_MODERATOR = "moderator"

_ROUTES: list[tuple[str, re.Pattern, str, str | None]] = [
    ("GET", re.compile(r"^/healthz$"), "healthz", AUTH_NONE),
    ("POST", re.compile(r"^/authors$"), "register", AUTH_NONE),
    ("POST", re.compile(r"^/session$"), "login", AUTH_NONE),
    ("GET", re.compile(r"^/pages$"), "list_pages", AUTH_NONE),
    ("POST", re.compile(r"^/pages$"), "create_page", AUTH_MODERATOR),
    ("GET", re.compile(r"^/pages/([^/]+)/history$"), "page_history", AUTH_NONE),
    ("GET", re.compile(r"^/pages/([^/]+)/rev/([0-9]+)$"), "page_revision", AUTH_NONE),
    ("GET", re.compile(r"^/pages/([^/]+)$"), "page_view", AUTH_NONE),
    ("POST", re.compile(r"^/contributions$"), "submit", AUTH_ANY),
    ("GET", re.compile(r"^/contributions/([^/]+)$"), "contribution_view", AUTH_NONE),
    ("GET", re.compile(r"^/moderation/queue$"), "queue", AUTH_MODERATOR),
    ("POST", re.compile(r"^/moderation/([^/]+)/decision$"), "decision", AUTH_MODERATOR),
    ("POST", re.compile(r"^/moderation/([^/]+)/revert$"), "revert", AUTH_MODERATOR),
    ("GET", re.compile(r"^/audit/stats$"), "audit_stats", AUTH_NONE),
]


def _paginate(items: list, query: dict) -> list:
    try:
        offset = int(query.get("offset", ["0"])[0])
    except ValueError:
        offset = 0
    return items[max(0, offset) : max(0, offset) + PAGE_LIMIT]


class ApiHandler(BaseHTTPRequestHandler):
    engine: WikiEngine  # bound by make_server
    protocol_version = "HTTP/1.1"
    quiet = True

    # -- plumbing --------------------------------------------------------

    def log_message(self, fmt, *args):
        if not self.quiet:
            super().log_message(fmt, *args)

    def _cors(self) -> None:
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Headers", "Authorization, Content-Type")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")

    def _reply(self, status: int, body, content_type: str = "application/json") -> None:
        data = (
            body.encode("utf-8")
            if isinstance(body, str)
            else json.dumps(body, ensure_ascii=False).encode("utf-8")
        )
        self.send_response(status)
        self._cors()
        self.send_header("Content-Type", content_type + "; charset=utf-8")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def _error(self, status: int, message: str) -> None:
        self._reply(status, {"error": message})

    def _body(self) -> dict:
        raw = self._raw_body
        if not raw:
            return {}
        try:
            data = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, ValueError) as exc:
            raise ValidationError(f"request body is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ValidationError("request body must be a JSON object")
        return data

    def _bearer(self) -> str:
        header = self.headers.get("Authorization") or ""
        if not header.startswith("Bearer "):
            raise IdentityError("missing bearer token")
        return header[len("Bearer ") :]

    def _dispatch(self, method: str) -> None:
        # Drain the body up front, whether or not the route wants it: on a
        # keep-alive connection, unread bytes would be parsed as the start
        # of the next request.
        length = int(self.headers.get("Content-Length") or 0)
        self._raw_body = self.rfile.read(length) if length else b""
        split = urlsplit(self.path)
        path = split.path
        query = parse_qs(split.query)
        for route_method, pattern, name, auth in _ROUTES:
            if route_method != method:
                continue
            match = pattern.match(path)
            if not match:
                continue
            try:
                author = None
                if auth is not None:
                    author = self.engine.resolve(self._bearer())
                    if auth == AUTH_MODERATOR and not author.is_moderator:
                        raise AuthorizationError(
                            f"{author.username!r} lacks the moderator role"
                        )
                args = [unquote(g) for g in match.groups()]
                getattr(self, "handle_" + name)(query, author, *args)
            except WikiGateError as exc:
                self._error(exc.http_status, str(exc))
            except Exception as exc:  # pragma: no cover - defensive
                self._error(500, f"internal error: {exc}")
            return
        self._error(404, f"no route for {method} {path}")

    def do_GET(self) -> None:
        self._dispatch("GET")

    def do_POST(self) -> None:
        self._dispatch("POST")

    def do_OPTIONS(self) -> None:
        self.send_response(204)
        self._cors()
        self.send_header("Content-Length", "0")
        self.end_headers()

    # -- endpoints -------------------------------------------------------

    def handle_healthz(self, query, author) -> None:
        self._reply(200, "ok", content_type="text/plain")

    def handle_register(self, query, author) -> None:
        body = self._body()
        for key in ("username", "secret"):
            if not isinstance(body.get(key), str):
                raise ValidationError(f"field {key!r} (string) is required")
        record = self.engine.register_author(
            username=body["username"],
            display_name=str(body.get("display_name", "")),
            affiliation=str(body.get("affiliation", "")),
            secret=body["secret"],
        )
        self._reply(201, {"author_id": record.author_id})

    def handle_login(self, query, author) -> None:
        body = self._body()
        for key in ("username", "secret"):
            if not isinstance(body.get(key), str):
                raise ValidationError(f"field {key!r} (string) is required")
        token, expires_at = self.engine.authenticate(body["username"], body["secret"])
        self._reply(200, {"token": token, "expires_at": expires_at})

    def handle_list_pages(self, query, author) -> None:
        self._reply(200, {"pages": _paginate(self.engine.list_pages(), query)})

    def handle_create_page(self, query, author) -> None:
        body = self._body()
        for key in ("title", "text"):
            if not isinstance(body.get(key), str):
                raise ValidationError(f"field {key!r} (string) is required")
        rev = self.engine.create_page(body["title"], body["text"], author)
        self._reply(201, {"title": rev.page, "rev_seq": rev.rev_seq})

    def handle_page_view(self, query, author, title: str) -> None:
        self._reply(200, self.engine.page_view(title))

    def handle_page_history(self, query, author, title: str) -> None:
        self._reply(200, _paginate(self.engine.page_history(title), query))

    def handle_page_revision(self, query, author, title: str, rev: str) -> None:
        self._reply(200, self.engine.page_view(title, rev_seq=int(rev)))

    def handle_submit(self, query, author) -> None:
        body = self._body()
        if not isinstance(body.get("page"), str):
            raise ValidationError("field 'page' (string) is required")
        if not isinstance(body.get("base_rev_seq"), int):
            raise ValidationError("field 'base_rev_seq' (integer) is required")
        if not isinstance(body.get("kind"), str):
            raise ValidationError("field 'kind' (string) is required")
        if not isinstance(body.get("anchor"), dict):
            raise ValidationError("field 'anchor' (object) is required")
        if not isinstance(body.get("payload"), dict):
            raise ValidationError("field 'payload' (object) is required")
        contribution, _report, _verdict = self.engine.submit(
            token=self._bearer(),
            page=body["page"],
            base_rev_seq=body["base_rev_seq"],
            kind=body["kind"],
            anchor=body["anchor"],
            payload=body["payload"],
            rationale=str(body.get("rationale", "")),
        )
        self._reply(
            202,
            {
                "contribution_id": contribution.contribution_id,
                "status": contribution.status.to_dict(),
            },
        )

    def handle_contribution_view(self, query, author, contribution_id: str) -> None:
        self._reply(200, self.engine.contribution_view(contribution_id))

    def handle_queue(self, query, author) -> None:
        self._reply(200, _paginate(self.engine.moderation_queue(), query))

    def handle_decision(self, query, author, contribution_id: str) -> None:
        body = self._body()
        decision = body.get("decision")
        if decision not in ("accept", "reject"):
            raise ValidationError("field 'decision' must be \"accept\" or \"reject\"")
        reason = body.get("reason")
        if reason is not None and not isinstance(reason, str):
            raise ValidationError("field 'reason' must be a string")
        self.engine.decide_contribution(contribution_id, decision, author, reason)
        self._reply(200, self.engine.contribution_view(contribution_id))

    def handle_revert(self, query, author, contribution_id: str) -> None:
        rev = self.engine.revert_contribution(contribution_id, author)
        self._reply(
            200,
            {
                "revision": {
                    "page": rev.page,
                    "rev_seq": rev.rev_seq,
                    "author": rev.author,
                    "at": rev.at,
                    "source": rev.source,
                }
            },
        )

    def handle_audit_stats(self, query, author) -> None:
        report = self.engine.stats_report(
            author=query.get("author", [None])[0],
            page=query.get("page", [None])[0],
            since=query.get("since", [None])[0],
            until=query.get("until", [None])[0],
        )
        self._reply(200, report.to_dict())


def make_server(engine: WikiEngine, host: str, port: int) -> ThreadingHTTPServer:
    handler = type("BoundApiHandler", (ApiHandler,), {"engine": engine})
    server = ThreadingHTTPServer((host, port), handler)
    server.daemon_threads = True
    return server


def serve(engine: WikiEngine, host: str, port: int) -> None:
    """Run until SIGTERM/SIGINT; write a snapshot on the way out."""
    server = make_server(engine, host, port)

    def stop(signum, frame):
        threading.Thread(target=server.shutdown, daemon=True).start()

    signal.signal(signal.SIGTERM, stop)
    signal.signal(signal.SIGINT, stop)
    actual_host, actual_port = server.server_address[:2]
    print(f"listening on http://{actual_host}:{actual_port}", flush=True)
    try:
        server.serve_forever()
    finally:
        server.server_close()
        engine.write_snapshot()
        engine.close()
