from __future__ import annotations

import socket
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import merge_reference
from predexplore.frontier import FrontierCluster, LocalWindow, detect_frontiers, extract_window
from predexplore.grid import CellIndex, CellState, GridMap, WorldPoint
from predexplore.prediction import (
    AlignmentError,
    EchoServer,
    ExternalPredictor,
    NullPredictor,
    OraclePredictor,
    PredictorUnavailable,
    ProtocolError,
    Provenance,
    decode_frame,
    encode_error,
    encode_request,
    encode_response,
    endpoint_from_spec,
    merge_local_predictions,
    predict,
    threshold_classify,
)
from predexplore.scene import generate_synthetic_floorplan
from predexplore.sensor import LidarConfig, RobotState, new_observed, sense

FIXTURES = Path(__file__).parent / "fixtures"

FREE = int(CellState.FREE)
UNKNOWN = int(CellState.UNKNOWN)
OCCUPIED = int(CellState.OCCUPIED)


def grid_of(cells, origin=(0.0, 0.0)):
    return GridMap(np.asarray(cells, dtype=np.uint8), 0.2, WorldPoint(*origin))


def window_at(grid, row, col, half):
    from predexplore.grid import clone_region

    return LocalWindow(clone_region(grid, (row, col), half), CellIndex(row, col), half)


class TestThresholdClassify:
    def test_boundaries(self):
        raw = np.array([[0, 79, 80, 100, 120, 121, 255]], dtype=np.uint8)
        out = threshold_classify(raw)
        assert out.tolist()[0] == [OCCUPIED, OCCUPIED, UNKNOWN, UNKNOWN, UNKNOWN, FREE, FREE]

    def test_all_bytes(self):
        raw = np.arange(256, dtype=np.uint8).reshape(16, 16)
        out = threshold_classify(raw)
        for v, o in zip(raw.ravel(), out.ravel()):
            expect = OCCUPIED if v < 80 else FREE if v > 120 else UNKNOWN
            assert o == expect

    def test_identity_on_tri_state(self):
        raw = np.array([[0, 100, 255]], dtype=np.uint8)
        assert np.array_equal(threshold_classify(raw), raw)


class TestEndpoints:
    def test_null_identity(self):
        rng = np.random.default_rng(1)
        cells = rng.choice([OCCUPIED, UNKNOWN, FREE], size=(12, 12)).astype(np.uint8)
        g = grid_of(cells)
        w = window_at(g, 6, 6, 4)
        out = predict(NullPredictor(), w)
        assert np.array_equal(out.cells, w.window.cells)
        assert out.origin == w.window.origin

    def test_oracle_reads_plan(self):
        scene = generate_synthetic_floorplan(4, 2, 1, (4.0, 5.0))
        obs = new_observed(scene.cluttered)
        sense(scene.cluttered, obs, RobotState(scene.interior_seed), LidarConfig(max_range=3.0))
        cluster = detect_frontiers(obs)[0]
        w = extract_window(obs, cluster)
        out = predict(OraclePredictor(scene.floorplan), w)
        # oracle output equals the plan wherever the window overlaps it
        rep = cluster.representative
        r0, c0 = rep.row - 60, rep.col - 60
        for lr in range(0, 120, 7):
            for lc in range(0, 120, 7):
                pr, pc = r0 + lr, c0 + lc
                if 0 <= pr < scene.floorplan.height and 0 <= pc < scene.floorplan.width:
                    assert out.cells[lr, lc] == scene.floorplan.cells[pr, pc]
                else:
                    assert out.cells[lr, lc] == UNKNOWN

    def test_oracle_rejects_misaligned_window(self):
        scene = generate_synthetic_floorplan(4, 1, 1, (4.0, 5.0))
        w = window_at(scene.floorplan, 5, 5, 4)
        w.window.origin = WorldPoint(w.window.origin.x + 0.07, w.window.origin.y)
        with pytest.raises(AlignmentError):
            OraclePredictor(scene.floorplan).raw_predict(w.window)

    def test_endpoint_from_spec(self):
        plan = grid_of(np.full((4, 4), FREE))
        assert isinstance(endpoint_from_spec("null"), NullPredictor)
        assert isinstance(endpoint_from_spec("oracle", plan), OraclePredictor)
        ext = endpoint_from_spec("10.0.0.5:9000")
        assert isinstance(ext, ExternalPredictor)
        assert (ext.host, ext.port) == ("10.0.0.5", 9000)
        with pytest.raises(ValueError):
            endpoint_from_spec("oracle")
        with pytest.raises(ValueError):
            endpoint_from_spec("banana")


class TestMerge:
    def test_observed_wins_and_last_writer(self):
        observed = grid_of([[UNKNOWN, FREE, UNKNOWN, UNKNOWN]])
        a = grid_of([[OCCUPIED, OCCUPIED], [OCCUPIED, OCCUPIED]])
        b = grid_of([[FREE, FREE], [FREE, FREE]])
        clusters = [
            FrontierCluster((CellIndex(0, 1),), CellIndex(0, 1)),
            FrontierCluster((CellIndex(0, 2),), CellIndex(0, 2)),
        ]
        out = merge_local_predictions(observed, clusters, [a, b])
        # col0: covered by A only (A spans cols 0..1), B spans cols 1..2
        assert out.map.cells.tolist() == [[OCCUPIED, FREE, FREE, UNKNOWN]]
        assert out.provenance.tolist() == [
            [int(Provenance.PREDICTED), int(Provenance.OBSERVED), int(Provenance.PREDICTED), int(Provenance.UNKNOWN)]
        ]

    def test_unknown_prediction_leaves_unknown(self):
        observed = grid_of([[UNKNOWN, UNKNOWN]])
        local = grid_of([[UNKNOWN, UNKNOWN], [UNKNOWN, UNKNOWN]])
        clusters = [FrontierCluster((CellIndex(0, 0),), CellIndex(0, 0))]
        out = merge_local_predictions(observed, clusters, [local])
        assert out.map.cells.tolist() == [[UNKNOWN, UNKNOWN]]

    def test_alignment_errors(self):
        observed = grid_of([[UNKNOWN]])
        square = grid_of([[FREE, FREE], [FREE, FREE]])
        clusters = [FrontierCluster((CellIndex(0, 0),), CellIndex(0, 0))]
        with pytest.raises(AlignmentError):
            merge_local_predictions(observed, clusters, [])
        odd = grid_of(np.full((3, 3), FREE))
        with pytest.raises(AlignmentError):
            merge_local_predictions(observed, clusters, [odd])
        rect = grid_of(np.full((2, 4), FREE))
        with pytest.raises(AlignmentError):
            merge_local_predictions(observed, clusters, [rect])
        merge_local_predictions(observed, clusters, [square])  # sane input passes

    def test_against_reference_randomized(self):
        rng = np.random.default_rng(2024)
        for _ in range(100):
            h, w = rng.integers(4, 14, size=2)
            observed = rng.choice([OCCUPIED, UNKNOWN, FREE], size=(h, w), p=[0.2, 0.5, 0.3]).astype(np.uint8)
            n = int(rng.integers(0, 4))
            reps, locals_ = [], []
            for _ in range(n):
                half = int(rng.integers(1, 5))
                reps.append((int(rng.integers(0, h)), int(rng.integers(0, w))))
                locals_.append(
                    rng.choice([OCCUPIED, UNKNOWN, FREE], size=(2 * half, 2 * half)).astype(np.uint8)
                )
            clusters = [FrontierCluster((CellIndex(*rc),), CellIndex(*rc)) for rc in reps]
            got = merge_local_predictions(
                grid_of(observed), clusters, [grid_of(l) for l in locals_]
            )
            want = merge_reference(observed, reps, locals_)
            assert np.array_equal(got.map.cells, want)
            # provenance bookkeeping matches the value outcome
            assert np.array_equal(
                got.provenance == int(Provenance.OBSERVED), observed != UNKNOWN
            )
            assert np.array_equal(
                got.provenance == int(Provenance.PREDICTED),
                (observed == UNKNOWN) & (want != UNKNOWN),
            )

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_conservative_property(self, seed):
        # no merge may ever touch an observed cell
        rng = np.random.default_rng(seed)
        observed = rng.choice([OCCUPIED, UNKNOWN, FREE], size=(10, 10)).astype(np.uint8)
        local = rng.choice([OCCUPIED, UNKNOWN, FREE], size=(8, 8)).astype(np.uint8)
        rep = CellIndex(int(rng.integers(0, 10)), int(rng.integers(0, 10)))
        out = merge_local_predictions(
            grid_of(observed), [FrontierCluster((rep,), rep)], [grid_of(local)]
        )
        known = observed != UNKNOWN
        assert np.array_equal(out.map.cells[known], observed[known])


class TestFraming:
    def test_request_fixture_roundtrip(self):
        buf = (FIXTURES / "request_3x2.bin").read_bytes()
        kind, payload = decode_frame(buf)
        assert kind == 0x01
        assert payload.tolist() == [[0, 100, 255], [255, 100, 0]]
        assert encode_request(payload) == buf

    def test_response_fixture_roundtrip(self):
        buf = (FIXTURES / "response_3x2.bin").read_bytes()
        kind, payload = decode_frame(buf)
        assert kind == 0x02
        assert payload.tolist() == [[7, 80, 120], [121, 200, 255]]
        assert encode_response(payload) == buf

    def test_error_fixture_roundtrip(self):
        buf = (FIXTURES / "error.bin").read_bytes()
        kind, message = decode_frame(buf)
        assert kind == 0xFF
        assert message == "window too large"
        assert encode_error(message) == buf

    def test_bad_magic(self):
        with pytest.raises(ProtocolError, match="magic"):
            decode_frame(b"NOPE" + b"\x01\x00\x01\x00\x01" + b"\x00")

    def test_truncated_payload(self):
        buf = (FIXTURES / "request_3x2.bin").read_bytes()
        with pytest.raises(ProtocolError):
            decode_frame(buf[:-2])

    def test_unknown_type(self):
        with pytest.raises(ProtocolError, match="0x7a"):
            decode_frame(b"P2PR" + b"\x7a" + b"\x00\x01\x00\x01" + b"\x00")

    def test_zero_dims(self):
        with pytest.raises(ProtocolError, match="zero"):
            decode_frame(b"P2PR" + b"\x01" + b"\x00\x00\x00\x00")

    def test_non_tri_state_request_rejected(self):
        with pytest.raises(ProtocolError, match="tri-state"):
            encode_request(np.array([[1, 2]], dtype=np.uint8))
        buf = b"P2PR" + b"\x01" + b"\x00\x02\x00\x01" + bytes([1, 2])
        with pytest.raises(ProtocolError, match="tri-state"):
            decode_frame(buf)

    def test_response_may_carry_any_bytes(self):
        raw = np.arange(12, dtype=np.uint8).reshape(3, 4)
        kind, back = decode_frame(encode_response(raw))
        assert kind == 0x02
        assert np.array_equal(back, raw)


class TestEchoServer:
    def test_roundtrip_through_socket(self):
        rng = np.random.default_rng(5)
        cells = rng.choice([OCCUPIED, UNKNOWN, FREE], size=(120, 120)).astype(np.uint8)
        g = grid_of(cells)
        w = window_at(g, 60, 60, 60)
        with EchoServer() as srv:
            ext = ExternalPredictor("127.0.0.1", srv.port)
            out = predict(ext, w)
        assert np.array_equal(out.cells, w.window.cells)

    def test_multiple_requests_one_connection(self):
        with EchoServer() as srv:
            with socket.create_connection(("127.0.0.1", srv.port), timeout=5) as sock:
                for k in range(3):
                    payload = np.full((2, 2), [OCCUPIED, UNKNOWN, FREE][k % 3], dtype=np.uint8)
                    sock.sendall(encode_request(payload))
                    from predexplore.prediction import _read_frame

                    kind, back = _read_frame(sock)
                    assert kind == 0x02
                    assert np.array_equal(back, payload)

    def test_malformed_frame_gets_error_not_crash(self):
        with EchoServer() as srv:
            with socket.create_connection(("127.0.0.1", srv.port), timeout=5) as sock:
                sock.sendall(b"GARBAGEGARBAGE")
                from predexplore.prediction import _read_frame

                kind, message = _read_frame(sock)
                assert kind == 0xFF
                assert "magic" in message
            # server survives and serves a fresh connection
            ext = ExternalPredictor("127.0.0.1", srv.port)
            w = window_at(grid_of(np.full((4, 4), FREE)), 2, 2, 2)
            out = predict(ext, w)
            assert np.array_equal(out.cells, w.window.cells)

    def test_unreachable_endpoint(self):
        with EchoServer() as srv:
            port = srv.port
        ext = ExternalPredictor("127.0.0.1", port, timeout=0.5)
        w = window_at(grid_of(np.full((4, 4), FREE)), 2, 2, 2)
        with pytest.raises(PredictorUnavailable):
            predict(ext, w)
