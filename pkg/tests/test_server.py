import json

import pytest
from fastapi.testclient import TestClient

from vinesim.scenario import load_builtin
from vinesim.server import create_app


@pytest.fixture
def client():
    app = create_app(load_builtin("robosoft2018"), tick_hz=100.0, snapshot_hz=50.0)
    with TestClient(app) as c:
        yield c


def recv_until(ws, kind, limit=300):
    for _ in range(limit):
        msg = json.loads(ws.receive_text())
        if msg["type"] == kind:
            return msg
    raise AssertionError(f"no {kind!r} message within {limit} frames")


def test_http_course_endpoints(client):
    names = client.get("/courses").json()["builtin"]
    assert "robosoft2018" in names and "chavin" in names
    doc = client.get("/course").json()
    assert doc["name"] == "robosoft2018"
    assert doc["format"] == 1
    assert doc["robot"]["inflated_diameter_cm"] == 7.0


def test_join_and_state_stream(client):
    with client.websocket_connect("/ws") as ws:
        ws.send_text(json.dumps({"type": "join", "mode": "operate"}))
        joined = recv_until(ws, "joined")
        assert joined["mode"] == "operate"
        assert joined["course"] == "robosoft2018"
        state = recv_until(ws, "state")
        for key in ("tick", "total_length", "tip_pose", "pressures", "p_body", "estop"):
            assert key in state
        later = recv_until(ws, "state")
        assert later["tick"] > state["tick"]


def test_operator_input_drives_growth(client):
    with client.websocket_connect("/ws") as ws:
        ws.send_text(json.dumps({"type": "join", "mode": "operate"}))
        recv_until(ws, "joined")
        ws.send_text(
            json.dumps({"type": "input", "r_p": 1023.0, "r_m": 1023.0, "d": -1})
        )
        grown = None
        for _ in range(200):
            msg = json.loads(ws.receive_text())
            if msg["type"] == "state" and msg["total_length"] > 0.0:
                grown = msg
                break
        assert grown is not None
        assert grown["p_body"] > 0.0


def test_estop_over_wire(client):
    with client.websocket_connect("/ws") as ws:
        ws.send_text(json.dumps({"type": "join", "mode": "operate"}))
        recv_until(ws, "joined")
        ws.send_text(
            json.dumps({"type": "input", "r_p": 900.0, "r_m": 900.0, "d": -1, "estop": True})
        )
        for _ in range(200):
            msg = json.loads(ws.receive_text())
            if msg["type"] == "state" and msg["estop"]:
                assert msg["p_body"] == 0.0
                assert msg["pressures"] == [0.0, 0.0, 0.0]
                break
        else:
            raise AssertionError("estop never reflected in the stream")
        ws.send_text(json.dumps({"type": "estop_clear"}))
        for _ in range(200):
            msg = json.loads(ws.receive_text())
            if msg["type"] == "state" and not msg["estop"]:
                break
        else:
            raise AssertionError("estop_clear never took effect")


def test_second_client_is_read_only(client):
    with client.websocket_connect("/ws") as op:
        op.send_text(json.dumps({"type": "join", "mode": "operate"}))
        assert recv_until(op, "joined")["mode"] == "operate"
        with client.websocket_connect("/ws") as obs:
            obs.send_text(json.dumps({"type": "join", "mode": "operate"}))
            assert recv_until(obs, "joined")["mode"] == "observe"
            obs.send_text(json.dumps({"type": "input", "r_p": 500.0}))
            err = recv_until(obs, "error")
            assert "read-only" in err["reason"]


def test_operator_disconnect_fails_closed(client):
    with client.websocket_connect("/ws") as obs:
        obs.send_text(json.dumps({"type": "join", "mode": "observe"}))
        recv_until(obs, "joined")
        with client.websocket_connect("/ws") as op:
            op.send_text(json.dumps({"type": "join", "mode": "operate"}))
            recv_until(op, "joined")
            op.send_text(
                json.dumps({"type": "input", "r_p": 1023.0, "r_m": 1023.0, "d": -1})
            )
            for _ in range(200):
                msg = json.loads(obs.receive_text())
                if msg["type"] == "state" and msg["total_length"] > 0.0:
                    break
        # operator socket closed: the hub must vent within a tick
        for _ in range(300):
            msg = json.loads(obs.receive_text())
            if msg["type"] == "state" and msg["estop"]:
                assert msg["p_body"] == 0.0
                assert msg["pressures"] == [0.0, 0.0, 0.0]
                return
        raise AssertionError("disconnect did not trigger estop")


def test_malformed_frames_reported(client):
    with client.websocket_connect("/ws") as ws:
        ws.send_text(json.dumps({"type": "join", "mode": "operate"}))
        recv_until(ws, "joined")
        ws.send_text("not json")
        assert "JSON" in recv_until(ws, "error")["reason"]
        ws.send_text(json.dumps({"type": "mystery"}))
        assert "unknown" in recv_until(ws, "error")["reason"]
        ws.send_text(json.dumps({"type": "input", "r_p": 1e9}))
        assert "ADC" in recv_until(ws, "error")["reason"]
