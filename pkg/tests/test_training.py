import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from qae3d.encoding import encode_point_cloud, qubits_for
from qae3d.errors import ConfigError, NumericalError
from qae3d.experiment import TrainConfig, apply_overrides, format_config, parse_config
from qae3d.training import (
    AdamState,
    OptimConfig,
    ScheduleState,
    TrainLog,
    adam_step,
    reconstruction_loss,
    reconstruction_loss_and_grad,
    run_optimiser,
    schedule_update,
    vertex_loss_and_grad,
)

from oracles import central_difference, eq3_loss


class TestLoss:
    def test_hand_example(self):
        alpha = np.array([0, 0, 0, 1.0])
        assert reconstruction_loss(alpha, [[1, 0, 0]]) == pytest.approx(0.76085, abs=1e-4)
        assert reconstruction_loss(alpha, [[1, 0, 0]]) == pytest.approx(eq3_loss(alpha, [[1, 0, 0]]), abs=1e-15)
        assert eq3_loss(alpha, [[1, 0, 0]]) == pytest.approx(1 / np.sqrt(3) + 1 - np.sqrt(2 / 3), abs=1e-15)

    @settings(max_examples=50)
    @given(seed=st.integers(0, 2**32 - 1), v=st.integers(1, 16))
    def test_zero_at_target(self, seed, v):
        pc = np.random.default_rng(seed).uniform(0, 1, (v, 3))
        assert reconstruction_loss(encode_point_cloud(pc, qubits_for(v)), pc) <= 1e-12

    @settings(max_examples=50)
    @given(seed=st.integers(0, 2**32 - 1), v=st.integers(1, 8))
    def test_matches_oracle_and_nonnegative(self, seed, v):
        rng = np.random.default_rng(seed)
        pc = rng.uniform(0, 1, (v, 3))
        alpha = np.abs(rng.normal(size=2 ** qubits_for(v)))
        value = reconstruction_loss(alpha, pc)
        assert value >= 0
        assert value == pytest.approx(eq3_loss(alpha, pc), rel=1e-12)

    def test_padding_mass_penalised(self):
        pc = [[0.5, 0.5, 0.5]]
        alpha = np.append(encode_point_cloud(pc, 2), [0.0, 0.0, 0.0, 0.0])
        alpha[5] = 0.25
        assert reconstruction_loss(alpha, pc) == pytest.approx(0.25)

    def test_gradient_matches_fd_away_from_kinks(self):
        rng = np.random.default_rng(4)
        pc = rng.uniform(0, 1, (3, 3))
        alpha = np.abs(rng.normal(size=16)) + 0.1
        _, g = reconstruction_loss_and_grad(alpha, pc)
        fd = central_difference(lambda a: reconstruction_loss(a, pc), alpha)
        assert np.allclose(g, fd, rtol=1e-6, atol=1e-8)

    def test_gradient_zero_at_target(self):
        pc = np.random.default_rng(0).uniform(0, 1, (2, 3))
        _, g = reconstruction_loss_and_grad(encode_point_cloud(pc, 3), pc)
        assert np.array_equal(g, np.zeros(8))

    def test_too_short(self):
        with pytest.raises(ValueError):
            reconstruction_loss(np.zeros(4), np.zeros((2, 3)))

    def test_vertex_loss(self):
        value, g = vertex_loss_and_grad(np.array([0.3, 0.4, 0, 0, 0, 0]), np.zeros((2, 3)))
        assert value == pytest.approx(0.5)
        assert np.allclose(g, [0.6, 0.8, 0, 0, 0, 0])


def reference_adam(grads, lr=1e-2, b1=0.9, b2=0.99, eps=1e-8, x=0.0):
    m = v = 0.0
    for t, g in enumerate(grads, start=1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        x -= lr * (m / (1 - b1**t)) / (math.sqrt(v / (1 - b2**t)) + eps)
    return x


class TestAdam:
    @given(g=arrays(float, 5, elements=st.floats(1e-3, 1e3) | st.floats(-1e3, -1e-3)))
    def test_first_step_is_sign(self, g):
        new, state = adam_step(np.zeros(5), g, AdamState.zeros(5))
        assert np.allclose(new, -1e-2 * np.sign(g), rtol=1e-4)
        assert state.t == 1

    def test_zero_gradient_keeps_params(self):
        p = np.array([1.0, -2.0])
        s = AdamState.zeros(2)
        for _ in range(10):
            p2, s = adam_step(p, np.zeros(2), s)
            assert np.array_equal(p2, p)

    def test_three_steps_vs_reference(self):
        p, s = np.array([0.0]), AdamState.zeros(1)
        for _ in range(3):
            p, s = adam_step(p, np.array([1.0]), s)
        assert abs(p[0] - reference_adam([1.0, 1.0, 1.0])) <= 1e-12

    def test_quadratic_converges(self):
        p = np.array([3.0, -2.0, 0.5])
        s = AdamState.zeros(3)
        for _ in range(5000):
            p, s = adam_step(p, 2 * p, s)
        assert np.linalg.norm(p) < 1e-3

    def test_nonfinite(self):
        with pytest.raises(NumericalError):
            adam_step(np.zeros(1), np.array([np.nan]), AdamState.zeros(1))

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            adam_step(np.zeros(2), np.zeros(3), AdamState.zeros(2))


class TestSchedule:
    def test_decreasing_never_reduces(self):
        s = ScheduleState(patience=5)
        for k in range(100):
            s = schedule_update(s, 10.0 - k * 0.01)
        assert s.lr == 1e-2

    def test_plateau_reduces_once(self):
        s = schedule_update(ScheduleState(patience=5), 1.0)
        for _ in range(5):
            s = schedule_update(s, 1.0)
        assert s.lr == pytest.approx(5e-3)
        for _ in range(4):
            s = schedule_update(s, 1.0)
        assert s.lr == pytest.approx(5e-3)

    def test_floor(self):
        s = ScheduleState(lr=1e-5, patience=1, best_loss=0.0)
        for _ in range(10):
            s = schedule_update(s, 1.0)
        assert s.lr == 1e-5

    def test_threshold(self):
        s = schedule_update(ScheduleState(patience=3, threshold=0.1), 1.0)
        for _ in range(3):
            s = schedule_update(s, 0.95)
        assert s.lr == pytest.approx(5e-3)

    def test_invalid(self):
        with pytest.raises(ValueError):
            ScheduleState(factor=1.0)


def quadratic(targets):
    def value_and_grad(p, i):
        d = p - targets[i]
        return float(d @ d), 2 * d

    return value_and_grad


class TestRunOptimiser:
    def test_zero_epochs(self):
        p0 = np.array([1.0, 2.0])
        p, log = run_optimiser(quadratic(np.zeros((3, 2))), p0, 3, epochs=0)
        assert np.array_equal(p, p0) and log.steps == []

    def test_steps_and_max_steps(self):
        p, log = run_optimiser(quadratic(np.zeros((4, 2))), np.ones(2), 4, epochs=3, max_steps=7)
        assert [s for s, _, _ in log.steps] == list(range(1, 8))

    def test_deterministic(self):
        targets = np.random.default_rng(0).normal(size=(5, 3))
        runs = [run_optimiser(quadratic(targets), np.zeros(3), 5, epochs=4, rng=np.random.default_rng(1))
                for _ in range(2)]
        assert np.array_equal(runs[0][0], runs[1][0])
        assert runs[0][1].to_csv() == runs[1][1].to_csv()

    def test_reshuffles_each_epoch(self):
        seen = []

        def vg(p, i):
            seen.append(i)
            return 0.0, np.zeros(1)

        run_optimiser(vg, np.zeros(1), 6, epochs=3, rng=np.random.default_rng(2))
        epochs = [seen[k : k + 6] for k in (0, 6, 12)]
        assert all(sorted(e) == list(range(6)) for e in epochs)
        assert epochs[0] != epochs[1] or epochs[1] != epochs[2]

    def test_converges_to_mean(self):
        targets = np.array([[1.0], [3.0]])
        cfg = OptimConfig(learning_rate=0.05, lr_patience=10**6)
        p, _ = run_optimiser(quadratic(targets), np.zeros(1), 2, epochs=2000, config=cfg)
        assert abs(p[0] - 2.0) < 0.05

    def test_nonfinite_loss_aborts(self):
        with pytest.raises(NumericalError, match="step 1"):
            run_optimiser(lambda p, i: (math.inf, np.zeros(1)), np.zeros(1), 2)

    def test_callback(self):
        calls = []
        run_optimiser(quadratic(np.zeros((2, 1))), np.ones(1), 2, epochs=2,
                      callback=lambda step, p: calls.append(step))
        assert calls == [1, 2, 3, 4]


class TestTrainLog:
    def test_csv_roundtrip(self):
        log = TrainLog()
        log.record_step(1, 0.5, 0.01)
        log.record_step(2, 0.25, 0.005)
        log.record_eval(0, "train", 12.5)
        log.record_eval(2, "test", 3.0)
        text = log.to_csv()
        assert text.splitlines()[0] == "step,loss,lr,split,metric_cm"
        back = TrainLog.from_csv(text)
        assert back.steps == log.steps and sorted(back.evals) == sorted(log.evals)
        assert back.final_eval("test") == 3.0 and back.final_eval("val") is None

    def test_steps_strictly_increase(self):
        log = TrainLog()
        log.record_step(3, 0.0, 0.1)
        with pytest.raises(ValueError):
            log.record_step(3, 0.0, 0.1)

    def test_bad_header(self):
        with pytest.raises(ValueError):
            TrainLog.from_csv("a,b\n1,2\n")


class TestConfig:
    def test_defaults_express_full_setup(self):
        c = TrainConfig()
        assert (c.n_discard, c.n_blocks, c.block, c.architecture, c.init) == (2, 8, "B", "repeat", "identity")
        assert c.qubits(16) == 6 and c.quantum_param_count(16) == 640
        assert (c.learning_rate, c.beta1, c.beta2) == (1e-2, 0.9, 0.99)
        assert parse_config("epochs = 10000\n").epochs == 10000

    def test_parse(self):
        c = parse_config("# comment\nblock = C\njoints = 5,6,7\nmax_steps = none\nlearning_rate = 0.05\nfc_match = true\n")
        assert c.block == "C" and c.joints == [5, 6, 7] and c.max_steps is None
        assert c.learning_rate == 0.05 and c.fc_match is True

    def test_unknown_key(self):
        with pytest.raises(ConfigError) as exc:
            parse_config("blocks = 3\n")
        assert exc.value.key == "blocks"

    def test_bad_value(self):
        with pytest.raises(ConfigError) as exc:
            parse_config("n_blocks = many\n")
        assert exc.value.key == "n_blocks"

    def test_format_roundtrip(self):
        c = apply_overrides(TrainConfig(), {"joints": "1,2,3", "seed": "9", "fps": "30"})
        assert parse_config(format_config(c)) == c

    @pytest.mark.parametrize("key,value,v", [
        ("n_discard", "6", 16), ("n_qubits", "5", 16), ("block", "E", None),
        ("learning_rate", "0", None), ("lr_factor", "1.5", None), ("epochs", "-1", None),
    ])
    def test_validate_names_key(self, key, value, v):
        with pytest.raises(ConfigError) as exc:
            apply_overrides(TrainConfig(), {key: value}).validate(v)
        assert exc.value.key == key
