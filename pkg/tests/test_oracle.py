import json
import urllib.error
import urllib.request

import numpy as np
import pytest

from blackbox_attack.models import LogisticRegression
from blackbox_attack.ndcore import SeededRng
from blackbox_attack.oracle import (
    BudgetExhausted,
    MalformedResponse,
    OracleHandle,
    QueryLedger,
    RemoteBackend,
    RemoteUnreachable,
    fingerprint,
    serve,
)


@pytest.fixture
def model():
    return LogisticRegression.create(5, 3, SeededRng(0))


def post(url, body, raw=False):
    data = body if raw else json.dumps(body).encode()
    req = urllib.request.Request(url + "/v1/label", data=data, method="POST")
    try:
        with urllib.request.urlopen(req) as r:
            return r.status, json.loads(r.read())
    except urllib.error.HTTPError as e:
        return e.code, json.loads(e.read())


def test_fingerprint_canonical():
    x = np.array([0.1, 0.2])
    assert fingerprint(x) == fingerprint([0.1, 0.2]) == fingerprint(x.astype(">f8"))
    assert fingerprint(x) != fingerprint([0.1, 0.2000000001])
    assert len(fingerprint(x)) == 20


def test_cache_hits_are_free(model):
    o = OracleHandle.local(model)
    X = SeededRng(1).uniform(size=(4, 5))
    first = o.batch_query(X)
    assert o.ledger.total_queries == 4
    assert o.batch_query(X[::-1]) == first[::-1]
    assert o.query_label(X[2]) == first[2]
    assert o.ledger.total_queries == 4
    assert first == model.predict(X).tolist()


def test_duplicates_in_one_batch_charged_once(model):
    o = OracleHandle.local(model)
    x = np.full(5, 0.3)
    assert len(o.batch_query([x, x, x])) == 3
    assert o.ledger.total_queries == 1


def test_budget_boundary_and_completed_prefix(model):
    o = OracleHandle.local(model, budget=3)
    X = SeededRng(2).uniform(size=(5, 5))
    assert len(o.batch_query(X[:3])) == 3
    o.batch_query(X[:3])  # cached, still fine at the limit
    with pytest.raises(BudgetExhausted) as e:
        o.batch_query(X)
    assert e.value.completed == model.predict(X[:3]).tolist()
    assert o.ledger.total_queries == 3


def test_partial_batch_under_budget(model):
    o = OracleHandle.local(model, budget=2)
    X = SeededRng(3).uniform(size=(4, 5))
    with pytest.raises(BudgetExhausted) as e:
        o.batch_query(X)
    assert len(e.value.completed) == 2 and o.ledger.total_queries == 2


def test_per_epoch_ledger():
    led = QueryLedger(budget=10)
    led.charge(3)
    led.new_epoch()
    led.charge(2)
    assert led.to_dict() == {"total_queries": 5, "budget": 10, "per_epoch": [3, 2]}
    assert led.remaining == 5


def test_evaluation_view_has_separate_ledger(model):
    o = OracleHandle.local(model, budget=1)
    ev = o.evaluation_view()
    ev.batch_query(SeededRng(4).uniform(size=(10, 5)))
    assert o.ledger.total_queries == 0 and ev.ledger.total_queries == 10


def test_dimension_mismatch(model):
    with pytest.raises(ValueError):
        OracleHandle.local(model).batch_query(np.zeros((1, 4)))


def test_service_protocol(model, tmp_path):
    ledger = tmp_path / "ledger.json"
    with serve(model, budget=3, ledger_path=ledger) as svc:
        with urllib.request.urlopen(svc.url + "/v1/meta") as r:
            assert json.loads(r.read()) == {"in_dim": 5, "classes": 3}
        x = [0.1, 0.2, 0.3, 0.4, 0.5]
        code, body = post(svc.url, {"input": x})
        assert code == 200 and body == {"label": int(model.predict(np.array([x]))[0])}
        assert post(svc.url, {"input": [0.1] * 4}) == (422, {"error": "dimension"})
        assert post(svc.url, {"input": ["0.1"] * 5}) == (400, {"error": "malformed"})
        assert post(svc.url, {"input": [True] * 5}) == (400, {"error": "malformed"})
        assert post(svc.url, b"not json", raw=True) == (400, {"error": "malformed"})
        assert post(svc.url, {"input": x, "extra": 1})[0] == 400
        assert post(svc.url, {"input": x})[0] == 200
        assert post(svc.url, {"input": x})[0] == 200
        assert post(svc.url, {"input": x}) == (429, {"error": "budget_exhausted"})
        assert svc.total_queries == 3
    assert json.loads(ledger.read_text()) == {"budget": 3, "total_queries": 3}


def test_remote_handle_matches_local(model):
    X = SeededRng(5).uniform(size=(20, 5))
    with serve(model) as svc:
        remote = OracleHandle.remote(svc.url)
        assert (remote.in_dim, remote.classes) == (5, 3)
        assert remote.batch_query(X) == model.predict(X).tolist()
        assert svc.total_queries == 20


def test_remote_budget_maps_to_exception(model):
    X = SeededRng(6).uniform(size=(3, 5))
    with serve(model, budget=2) as svc:
        with pytest.raises(BudgetExhausted) as e:
            OracleHandle.remote(svc.url).batch_query(X)
        assert len(e.value.completed) == 2


def test_remote_unreachable():
    with pytest.raises(RemoteUnreachable):
        RemoteBackend("http://127.0.0.1:9", timeout=2)


def test_remote_rejects_extra_response_fields(model, monkeypatch):
    with serve(model) as svc:
        backend = RemoteBackend(svc.url)
    monkeypatch.setattr(backend, "_call", lambda *a, **k: {"label": 1, "probs": [0.1]})
    with pytest.raises(MalformedResponse):
        backend.labels(np.zeros((1, 5)))
