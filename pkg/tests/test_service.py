import http.client
import json
import threading
import urllib.error
import urllib.request

import pytest

from conftest import register, SECRET
from wikigate.service import make_server, PAGE_LIMIT

PAGE_TEXT = (
    "Intro paragraph.\n"
    "\n"
    "== History ==\n"
    "\n"
    "Old body text.\n"
    "\n"
    "== Geography ==\n"
    "\n"
    "Rolling hills.\n"
)


class Client:
    def __init__(self, base_url):
        self.base_url = base_url

    def request(self, method, path, body=None, token=None):
        data = json.dumps(body).encode("utf-8") if body is not None else None
        req = urllib.request.Request(self.base_url + path, data=data, method=method)
        if data is not None:
            req.add_header("Content-Type", "application/json")
        if token is not None:
            req.add_header("Authorization", "Bearer " + token)
        try:
            with urllib.request.urlopen(req, timeout=10) as resp:
                return resp.status, self._decode(resp), dict(resp.headers)
        except urllib.error.HTTPError as err:
            return err.code, self._decode(err), dict(err.headers)

    @staticmethod
    def _decode(resp):
        raw = resp.read()
        if not raw:
            return None
        if "json" in (resp.headers.get("Content-Type") or ""):
            return json.loads(raw.decode("utf-8"))
        return raw.decode("utf-8")

    def get(self, path, token=None):
        return self.request("GET", path, token=token)

    def post(self, path, body=None, token=None):
        return self.request("POST", path, body=body, token=token)


@pytest.fixture
def api(engine):
    server = make_server(engine, "127.0.0.1", 0)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    client = Client(f"http://127.0.0.1:{server.server_address[1]}")
    client.engine = engine
    yield client
    server.shutdown()
    server.server_close()


def signup(api, username, moderator=False):
    api.post("/authors", {"username": username, "secret": SECRET})
    if moderator:
        api.engine.grant_moderator(username)
    status, body, _ = api.post("/session", {"username": username, "secret": SECRET})
    assert status == 200
    return body["token"]


def make_page(api, token, title="Topic", text=PAGE_TEXT):
    return api.post("/pages", {"title": title, "text": text}, token=token)


def submit(api, token, **kwargs):
    body = {
        "page": "Topic",
        "base_rev_seq": 1,
        "kind": "replace",
        "anchor": {"slug": "_page", "occurrence": 1},
        "payload": {"text": "Replacement body.\n"},
        "rationale": "tidy up",
    }
    body.update(kwargs)
    return api.post("/contributions", body, token=token)


class TestPlumbing:
    def test_healthz(self, api):
        status, body, headers = api.get("/healthz")
        assert (status, body) == (200, "ok")
        assert headers["Content-Type"].startswith("text/plain")

    def test_unknown_route_is_json_404(self, api):
        status, body, _ = api.get("/nope")
        assert status == 404
        assert "error" in body

    def test_options_preflight(self, api):
        status, _body, headers = api.request("OPTIONS", "/pages")
        assert status == 204
        assert headers["Access-Control-Allow-Origin"] == "*"
        assert "Authorization" in headers["Access-Control-Allow-Headers"]

    def test_keep_alive_survives_an_unread_post_body(self, api):
        # Even when no handler reads the POST body (404 here), the bytes
        # must be drained, or they prefix the next request on the wire.
        conn = http.client.HTTPConnection(
            api.base_url.removeprefix("http://"), timeout=10
        )
        try:
            conn.request(
                "POST", "/nope", body=b"{}",
                headers={"Content-Type": "application/json"},
            )
            first = conn.getresponse()
            first.read()
            assert first.status == 404
            conn.request("GET", "/healthz")
            second = conn.getresponse()
            assert second.status == 200
            assert second.read() == b"ok"
        finally:
            conn.close()

    def test_cors_on_every_response(self, api):
        for path in ("/healthz", "/pages", "/nope"):
            _status, _body, headers = api.get(path)
            assert headers["Access-Control-Allow-Origin"] == "*"

    def test_malformed_json_body(self, api):
        req = urllib.request.Request(
            api.base_url + "/authors", data=b"{oops", method="POST",
            headers={"Content-Type": "application/json"},
        )
        try:
            with urllib.request.urlopen(req, timeout=10) as resp:
                status = resp.status
        except urllib.error.HTTPError as err:
            status = err.code
        assert status == 422

    def test_non_object_body(self, api):
        status, body, _ = api.post("/authors", body=[1, 2])
        assert status == 422


class TestIdentityEndpoints:
    def test_register_returns_author_id(self, api):
        status, body, _ = api.post("/authors", {"username": "alice", "secret": SECRET})
        assert status == 201
        assert set(body) == {"author_id"}

    def test_register_validates_fields(self, api):
        assert api.post("/authors", {"username": "alice"})[0] == 422
        assert api.post("/authors", {"username": 7, "secret": SECRET})[0] == 422

    def test_register_duplicate(self, api):
        api.post("/authors", {"username": "alice", "secret": SECRET})
        status, body, _ = api.post("/authors", {"username": "alice", "secret": SECRET})
        assert status == 409

    def test_weak_secret(self, api):
        status, _, _ = api.post("/authors", {"username": "alice", "secret": "short"})
        assert status == 422

    def test_login_and_wrong_secret(self, api):
        api.post("/authors", {"username": "alice", "secret": SECRET})
        status, body, _ = api.post("/session", {"username": "alice", "secret": SECRET})
        assert status == 200
        assert set(body) == {"token", "expires_at"}
        status, body, _ = api.post("/session", {"username": "alice", "secret": "wrong-pw"})
        assert status == 401

    def test_login_does_not_reveal_unknown_users(self, api):
        api.post("/authors", {"username": "alice", "secret": SECRET})
        s1, b1, _ = api.post("/session", {"username": "alice", "secret": "wrong-pw"})
        s2, b2, _ = api.post("/session", {"username": "nobody", "secret": "wrong-pw"})
        assert (s1, b1) == (s2, b2)


class TestPageEndpoints:
    def test_create_requires_moderator(self, api):
        token = signup(api, "alice")
        assert make_page(api, None)[0] == 401
        assert make_page(api, token)[0] == 403
        mod = signup(api, "mod", moderator=True)
        status, body, _ = make_page(api, mod)
        assert (status, body) == (201, {"title": "Topic", "rev_seq": 1})
        assert make_page(api, mod)[0] == 409

    def test_list_pages(self, api):
        mod = signup(api, "mod", moderator=True)
        make_page(api, mod)
        status, body, _ = api.get("/pages")
        assert status == 200
        assert body == {"pages": [{"title": "Topic", "head_rev": 1}]}

    def test_pagination(self, api):
        mod = signup(api, "mod", moderator=True)
        record = api.engine.state.registry.get_by_username("mod")
        for i in range(PAGE_LIMIT + 5):
            api.engine.create_page(f"Page {i:03d}", "Body.\n", record)
        first = api.get("/pages")[1]["pages"]
        second = api.get(f"/pages?offset={PAGE_LIMIT}")[1]["pages"]
        assert len(first) == PAGE_LIMIT
        assert len(second) == 5
        assert first[0]["title"] == "Page 000"

    def test_page_view_and_encoding(self, api):
        mod = signup(api, "mod", moderator=True)
        make_page(api, mod, title="Great Wall")
        status, body, _ = api.get("/pages/Great%20Wall")
        assert status == 200
        assert body["title"] == "Great Wall"
        assert body["rev_seq"] == 1
        assert body["text"] == PAGE_TEXT
        assert body["source"] == {"type": "genesis"}
        assert body["anchors"][0] == {"slug": "_page", "occurrence": 1}

    def test_page_history_and_revision(self, api):
        mod = signup(api, "mod", moderator=True)
        make_page(api, mod)
        contributor = signup(api, "alice")
        _, sub, _ = submit(api, contributor)
        api.post(f"/moderation/{sub['contribution_id']}/decision", {"decision": "accept"}, token=mod)
        history = api.get("/pages/Topic/history")[1]
        assert [h["rev_seq"] for h in history] == [1, 2]
        rev1 = api.get("/pages/Topic/rev/1")[1]
        assert rev1["text"] == PAGE_TEXT
        assert api.get("/pages/Topic/rev/9")[0] == 404

    def test_unknown_page_404(self, api):
        assert api.get("/pages/Missing")[0] == 404
        assert api.get("/pages/Missing/history")[0] == 404


class TestContributionEndpoints:
    def test_submit_requires_token(self, api):
        mod = signup(api, "mod", moderator=True)
        make_page(api, mod)
        assert submit(api, None)[0] == 401
        assert submit(api, "f" * 32)[0] == 401

    def test_submit_enqueues(self, api):
        mod = signup(api, "mod", moderator=True)
        make_page(api, mod)
        token = signup(api, "alice")
        status, body, _ = submit(api, token)
        assert status == 202
        assert body["status"]["state"] == "pending"
        cid = body["contribution_id"]
        status, view, _ = api.get(f"/contributions/{cid}")
        assert status == 200
        assert view["check_report"]["composite"] == pytest.approx(0.25)
        assert view["verdict"]["verdict"] == "needs-human"
        assert view["rationale"] == "tidy up"

    def test_submit_field_validation(self, api):
        mod = signup(api, "mod", moderator=True)
        make_page(api, mod)
        token = signup(api, "alice")
        assert submit(api, token, page=7)[0] == 422
        assert submit(api, token, base_rev_seq="one")[0] == 422
        assert submit(api, token, anchor="_page")[0] == 422
        assert submit(api, token, payload={"wrong": 1})[0] == 422
        assert submit(api, token, kind="sabotage")[0] == 422

    def test_submit_unknown_targets(self, api):
        mod = signup(api, "mod", moderator=True)
        make_page(api, mod)
        token = signup(api, "alice")
        assert submit(api, token, page="Missing")[0] == 404
        assert submit(api, token, base_rev_seq=9)[0] == 404
        assert submit(api, token, anchor={"slug": "economy", "occurrence": 1})[0] == 404

    def test_contribution_view_unknown(self, api):
        assert api.get("/contributions/nope")[0] == 404


class TestModerationEndpoints:
    def setup_queue(self, api):
        mod = signup(api, "mod", moderator=True)
        make_page(api, mod)
        contributor = signup(api, "alice")
        _, body, _ = submit(api, contributor)
        return mod, contributor, body["contribution_id"]

    def test_queue_requires_moderator(self, api):
        mod, contributor, cid = self.setup_queue(api)
        assert api.get("/moderation/queue")[0] == 401
        assert api.get("/moderation/queue", token=contributor)[0] == 403
        status, queue, _ = api.get("/moderation/queue", token=mod)
        assert status == 200
        assert [c["contribution_id"] for c in queue] == [cid]
        assert queue[0]["check_report"] is not None

    def test_accept_then_double_decide_conflicts(self, api):
        mod, _, cid = self.setup_queue(api)
        status, body, _ = api.post(
            f"/moderation/{cid}/decision", {"decision": "accept"}, token=mod
        )
        assert status == 200
        assert body["status"]["state"] == "accepted"
        status, body, _ = api.post(
            f"/moderation/{cid}/decision", {"decision": "reject"}, token=mod
        )
        assert status == 409

    def test_reject_with_reason(self, api):
        mod, _, cid = self.setup_queue(api)
        status, body, _ = api.post(
            f"/moderation/{cid}/decision", {"decision": "reject", "reason": "unsourced"},
            token=mod,
        )
        assert status == 200
        assert body["status"] == {
            "state": "rejected",
            "reason": "unsourced",
            "decided_by": api.engine.state.registry.get_by_username("mod").author_id,
            "at": body["status"]["at"],
        }

    def test_decision_validation(self, api):
        mod, _, cid = self.setup_queue(api)
        assert api.post(f"/moderation/{cid}/decision", {"decision": "maybe"}, token=mod)[0] == 422
        assert api.post(f"/moderation/{cid}/decision", {"decision": "reject", "reason": 5}, token=mod)[0] == 422
        assert api.post("/moderation/nope/decision", {"decision": "accept"}, token=mod)[0] == 404

    def test_revert_flow(self, api):
        mod, _, cid = self.setup_queue(api)
        api.post(f"/moderation/{cid}/decision", {"decision": "accept"}, token=mod)
        status, body, _ = api.post(f"/moderation/{cid}/revert", token=mod)
        assert status == 200
        assert body["revision"]["rev_seq"] == 3
        assert body["revision"]["source"] == {"type": "revert", "target": 1, "via": cid}
        assert api.get("/pages/Topic")[1]["text"] == PAGE_TEXT

    def test_revert_pending_conflicts(self, api):
        mod, _, cid = self.setup_queue(api)
        assert api.post(f"/moderation/{cid}/revert", token=mod)[0] == 409

    def test_drifted_accept_is_409(self, api):
        mod, contributor, _ = self.setup_queue(api)
        patch_body = {
            "kind": "edit",
            "anchor": {"slug": "history", "occurrence": 1},
            "payload": {
                "patch": {
                    "hunks": [
                        {
                            "base_start": 0,
                            "context_before": ["== History ==\n", "\n"],
                            "removed": ["Old body text.\n"],
                            "added": ["Edited body text.\n"],
                            "context_after": [],
                        }
                    ],
                    "base_length": 3,
                }
            },
        }
        _, sub, _ = submit(api, contributor, **patch_body)
        cid_edit = sub["contribution_id"]
        _, sub2, _ = submit(
            api, contributor,
            kind="replace",
            anchor={"slug": "history", "occurrence": 1},
            payload={"text": "== History ==\n\nRewritten meanwhile.\n"},
        )
        api.post(f"/moderation/{sub2['contribution_id']}/decision", {"decision": "accept"}, token=mod)
        status, body, _ = api.post(
            f"/moderation/{cid_edit}/decision", {"decision": "accept"}, token=mod
        )
        assert status == 409
        assert "error" in body
        status, view, _ = api.get(f"/contributions/{cid_edit}")
        assert view["status"]["state"] == "pending"
        assert view["verdict"]["verdict"] == "needs-human"


class TestAuditEndpoint:
    def test_stats_shape_and_filters(self, api):
        mod = signup(api, "mod", moderator=True)
        make_page(api, mod)
        contributor = signup(api, "alice")
        _, sub, _ = submit(api, contributor)
        api.post(f"/moderation/{sub['contribution_id']}/decision", {"decision": "accept"}, token=mod)
        status, body, _ = api.get("/audit/stats")
        assert status == 200
        assert set(body) == {"authors", "pages", "queue_depth", "decisions"}
        assert body["decisions"] == {"auto": 0, "human": 1}
        assert body["pages"]["Topic"]["revisions"] == 2

        status, filtered, _ = api.get("/audit/stats?author=alice")
        alice_id = api.engine.state.registry.get_by_username("alice").author_id
        assert set(filtered["authors"]) == {alice_id}
        row = filtered["authors"][alice_id]
        assert (row["submitted"], row["accepted"]) == (1, 1)
        assert row["acceptance_rate"] == pytest.approx(1.0)

        status, by_page, _ = api.get("/audit/stats?page=Topic")
        assert set(by_page["pages"]) == {"Topic"}
