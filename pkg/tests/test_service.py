import pytest
from fastapi.testclient import TestClient
from jsonschema import Draft202012Validator

from persode.providers import MockImageBackend, ProviderSet
from persode.errors import ProviderUnavailable
from persode.service import create_app, load_api_schemas

from conftest import CAR_SPLASH_MESSAGES, T0

SCHEMAS = load_api_schemas()


def validator_for(name: str) -> Draft202012Validator:
    schema = {"$ref": f"#/$defs/{name}", "$defs": SCHEMAS["$defs"]}
    return Draft202012Validator(schema)


def check(name: str, payload):
    validator_for(name).validate(payload)
    return payload


@pytest.fixture
def client(engine_factory):
    engine, clock = engine_factory()
    app = create_app(engine, mock_providers=True)
    with TestClient(app, raise_server_exceptions=False) as test_client:
        test_client.clock = clock
        yield test_client


@pytest.fixture
def user_id(client):
    response = client.post("/users", json={"preferences": {"traits": ["empathetic"]}})
    assert response.status_code == 201
    return check("user", response.json())["user_id"]


def open_session(client, user_id):
    response = client.post(f"/users/{user_id}/sessions")
    assert response.status_code == 201
    return check("session", response.json())["session_id"]


class TestHealthAndCatalogs:
    def test_health(self, client):
        response = client.get("/health")
        assert response.status_code == 200
        body = check("health", response.json())
        assert body["mock_providers"] is True

    def test_catalogs_match_engine_catalogs(self, client):
        from persode.persona import load_catalogs

        response = client.get("/catalogs")
        assert response.status_code == 200
        assert check("catalogs", response.json()) == load_catalogs()


class TestUsersApi:
    def test_create_with_defaults(self, client):
        response = client.post("/users", json={})
        assert response.status_code == 201
        body = check("user", response.json())
        assert body["preferences"]["traits"] == ["friendly"]

    def test_create_validation_error_names_field(self, client):
        response = client.post(
            "/users", json={"preferences": {"traits": ["detailed", "direct"]}}
        )
        assert response.status_code == 400
        body = check("error", response.json())
        assert body["code"] == "validation_error"
        assert body["field"] == "traits"

    def test_get_and_put_preferences(self, client, user_id):
        response = client.get(f"/users/{user_id}/preferences")
        assert response.status_code == 200
        check("user", response.json())

        response = client.put(
            f"/users/{user_id}/preferences",
            json={"preferences": {"traits": ["calm"], "background_aesthetic": "seaside"}},
        )
        assert response.status_code == 200
        body = check("user", response.json())
        assert body["preferences"]["background_aesthetic"] == "seaside"

    def test_unknown_user_not_found(self, client):
        for path in ("/users/ghost/preferences", "/users/ghost/diaries", "/users/ghost/memories"):
            response = client.get(path)
            assert response.status_code == 404
            assert check("error", response.json())["code"] == "not_found"
        response = client.post("/users/ghost/sessions")
        assert response.status_code == 404
        check("error", response.json())


class TestConversationApi:
    def test_message_round_trip(self, client, user_id):
        session_id = open_session(client, user_id)
        response = client.post(
            f"/sessions/{session_id}/messages", json={"text": "hello there diary"}
        )
        assert response.status_code == 200
        body = check("message_response", response.json())
        assert body["cited_memory_ids"] == []
        assert body["reply"].strip()

    def test_messages_cite_memories_after_a_closed_session(self, client, user_id):
        session_id = open_session(client, user_id)
        for text, at in CAR_SPLASH_MESSAGES:
            client.clock.set(at)
            check(
                "message_response",
                client.post(f"/sessions/{session_id}/messages", json={"text": text}).json(),
            )
        client.clock.set(T0 + 300_000)
        close_body = check(
            "close_response", client.post(f"/sessions/{session_id}/close").json()
        )
        assert close_body["new_fragment_ids"] == ["f0001"]

        client.clock.set(T0 + 400_000)
        next_session = open_session(client, user_id)
        response = client.post(
            f"/sessions/{next_session}/messages",
            json={"text": "still thinking about that outfit and the water"},
        )
        body = check("message_response", response.json())
        assert body["cited_memory_ids"] == ["f0001"]
        assert body["ranked"][0]["term"] == "short"

    def test_empty_text_rejected(self, client, user_id):
        session_id = open_session(client, user_id)
        response = client.post(f"/sessions/{session_id}/messages", json={"text": "  "})
        assert response.status_code == 400
        assert check("error", response.json())["field"] == "text"

    def test_closed_session_conflict(self, client, user_id):
        session_id = open_session(client, user_id)
        client.post(f"/sessions/{session_id}/messages", json={"text": "quick note today"})
        assert client.post(f"/sessions/{session_id}/close").status_code == 200
        response = client.post(
            f"/sessions/{session_id}/messages", json={"text": "too late now"}
        )
        assert response.status_code == 409
        assert check("error", response.json())["code"] == "conflict"
        response = client.post(f"/sessions/{session_id}/close")
        assert response.status_code == 409
        check("error", response.json())

    def test_close_empty_session_invalid_state(self, client, user_id):
        session_id = open_session(client, user_id)
        response = client.post(f"/sessions/{session_id}/close")
        assert response.status_code == 409
        assert check("error", response.json())["code"] == "invalid_state"

    def test_unknown_session_not_found(self, client):
        response = client.post("/sessions/s9999/messages", json={"text": "anyone?"})
        assert response.status_code == 404
        check("error", response.json())


class TestProviderFailureApi:
    def test_chat_failure_maps_to_502(self, engine_factory):
        class DownChat:
            def complete(self, req):
                raise ProviderUnavailable("upstream down")

        providers = ProviderSet(
            chat=DownChat(), image=MockImageBackend(), extractor=None, sleep=lambda s: None
        )
        engine, _clock = engine_factory(providers=providers)
        app = create_app(engine)
        with TestClient(app, raise_server_exceptions=False) as client:
            user = check("user", client.post("/users", json={}).json())
            session_id = open_session(client, user["user_id"])
            response = client.post(
                f"/sessions/{session_id}/messages", json={"text": "hello out there"}
            )
            assert response.status_code == 502
            assert check("error", response.json())["code"] == "provider_unavailable"


class TestDiariesApi:
    def seed_diaries(self, client, user_id, count):
        for i in range(count):
            client.clock.set(T0 + i * 1_000_000)
            session_id = open_session(client, user_id)
            client.post(
                f"/sessions/{session_id}/messages",
                json={"text": f"note number {i} about the garden"},
            )
            assert client.post(f"/sessions/{session_id}/close").status_code == 200

    def test_pagination_five_entries_pages_of_two(self, client, user_id):
        self.seed_diaries(client, user_id, 5)
        sizes = []
        for page in (1, 2, 3):
            response = client.get(
                f"/users/{user_id}/diaries", params={"page": page, "page_size": 2}
            )
            body = check("diary_page", response.json())
            sizes.append(len(body["entries"]))
            assert body["total"] == 5
        assert sizes == [2, 2, 1]

    def test_bad_page_size_rejected(self, client, user_id):
        response = client.get(f"/users/{user_id}/diaries", params={"page_size": 0})
        assert response.status_code == 400
        check("error", response.json())

    def test_non_integer_page_rejected_with_error_body(self, client, user_id):
        response = client.get(f"/users/{user_id}/diaries", params={"page": "two"})
        assert response.status_code == 400
        check("error", response.json())


class TestMemoriesApi:
    def test_memories_listing_and_filters(self, client, user_id):
        session_id = open_session(client, user_id)
        for text, at in CAR_SPLASH_MESSAGES:
            client.clock.set(at)
            client.post(f"/sessions/{session_id}/messages", json={"text": text})
        client.clock.set(T0 + 300_000)
        client.post(f"/sessions/{session_id}/close")

        response = client.get(f"/users/{user_id}/memories")
        body = check("memories_response", response.json())
        assert len(body["fragments"]) == 1
        assert body["fragments"][0]["term"] == "short"

        response = client.get(f"/users/{user_id}/memories", params={"min_strength": 0.99})
        assert check("memories_response", response.json())["fragments"] == []

        response = client.get(f"/users/{user_id}/memories", params={"term": "long"})
        assert check("memories_response", response.json())["fragments"] == []

        response = client.get(f"/users/{user_id}/memories", params={"term": "medium"})
        assert response.status_code == 400
        assert check("error", response.json())["field"] == "term"
