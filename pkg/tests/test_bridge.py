import numpy as np
import pytest

from geoshap import (
    BridgedOracle,
    fit_remote,
    handshake,
    predict_batch,
    sample_background,
)
from geoshap.errors import (
    BridgeHandshakeError,
    BridgeProtocolError,
    BridgeTransportError,
)

from conftest import make_dataset, server_cmd


def test_handshake_reports_capabilities():
    with handshake(server_cmd("echo_server.py", 9)) as session:
        assert session.capabilities.n_columns == 9
        assert session.capabilities.trainable is False
        assert session.capabilities.concurrency_safe is False


def test_handshake_rejects_garbage_first_line():
    with pytest.raises(BridgeHandshakeError, match="starting model server"):
        handshake(server_cmd("garbage_server.py"))


def test_handshake_column_mismatch_refused():
    with pytest.raises(BridgeHandshakeError, match="declares 9 columns.*have 4"):
        handshake(server_cmd("echo_server.py", 9), expect_columns=4)


def test_handshake_unspawnable_command():
    with pytest.raises(BridgeHandshakeError, match="cannot spawn"):
        handshake(["/nonexistent/model-server"])


def test_predict_batch_echoes_first_column():
    with handshake(server_cmd("echo_server.py", 3)) as session:
        out = predict_batch(session, np.array([[1.0, 9.0, 9.0], [2.0, 8.0, 8.0]]))
        assert out == pytest.approx([1.0, 2.0], abs=0)


def test_predict_batch_empty_matrix():
    with handshake(server_cmd("echo_server.py", 3)) as session:
        out = predict_batch(session, np.empty((0, 3)))
        assert out.shape == (0,)


def test_server_death_mid_request():
    session = handshake(server_cmd("dying_server.py"))
    with pytest.raises(BridgeTransportError, match="request id 1"):
        predict_batch(session, np.zeros((2, 3)))
    session.close()


def test_request_ids_monotone():
    with handshake(server_cmd("echo_server.py", 2)) as session:
        for _ in range(5):
            predict_batch(session, np.ones((1, 2)))
        assert session._next_id == 6


def test_fit_remote_changes_predictions():
    with handshake(server_cmd("trainable_server.py", 2)) as session:
        rng = np.random.default_rng(0)
        X = rng.normal(size=(50, 2))
        y = 2.0 * X[:, 0] - 1.0 * X[:, 1] + 0.5
        fit_remote(session, X, y)
        first = predict_batch(session, X)
        assert first == pytest.approx(y, abs=1e-9)
        fit_remote(session, X, y + 10.0)  # shifted targets shift predictions
        second = predict_batch(session, X)
        assert second == pytest.approx(y + 10.0, abs=1e-9)


def test_fit_on_non_trainable_server_is_capability_error():
    with handshake(server_cmd("echo_server.py", 2)) as session:
        with pytest.raises(BridgeProtocolError, match="trainable"):
            fit_remote(session, np.ones((3, 2)), np.ones(3))


def test_fit_target_length_mismatch():
    with handshake(server_cmd("trainable_server.py", 2)) as session:
        with pytest.raises(BridgeProtocolError, match="3 rows vs 2 targets"):
            fit_remote(session, np.ones((3, 2)), np.ones(2))


def test_bridged_oracle_through_explain():
    from geoshap import ExplainConfig, explain

    ds = make_dataset(n=5, p=1, seed=1)
    with handshake(server_cmd("echo_server.py", 3), expect_columns=3) as session:
        oracle = BridgedOracle(session)
        bg = sample_background(ds, k=3, seed=0)
        es = explain(ds, oracle, bg, ExplainConfig(seed=0, threads=2))
        # server predicts the first column, i.e. a pure x1 model
        gap = np.abs(es.base_value + es.phi_geo + es.phi.sum(1) + es.phi_geo_x.sum(1)
                     - es.predictions)
        assert gap.max() <= 1e-8
        assert np.abs(es.phi_geo).max() <= 1e-12
        assert np.abs(es.phi_geo_x).max() <= 1e-12
