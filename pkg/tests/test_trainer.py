import struct

import numpy as np
import pytest

from declip import trainer
from declip.errors import (CheckpointError, CheckpointVersionError, InvalidArgumentError,
                           MissingGroundTruthError, TrainingDivergedError)
from declip.forward_ops import ClipSpec, clip
from declip.metrics import sdr
from declip.network import MLPConfig, identity_params, init_params, predict
from declip.trainer import (MC_ONLY, SELF_MC_EI, SUPERVISED, OptState, SweepConfig, TrainConfig,
                            adam_step, evaluate, fit, grid_sweep, load_checkpoint,
                            rows_to_csv, save_checkpoint)

SYM = ClipSpec.symmetric(1.0)


def small_problem(seed=0, n=6, count=40):
    rng = np.random.default_rng(seed)
    x = 1.5 * rng.standard_normal((count, n))
    return x, clip(x, SYM)


def test_synthetic_defaults():
    tc = TrainConfig.synthetic()
    assert (tc.learning_rate, tc.epochs, tc.batch_size) == (1e-4, 300, 100)
    assert tc.loss_config.lam == 1.0
    assert (tc.loss_config.group.g_min, tc.loss_config.group.g_max) == (0.5, 1.5)
    cone = TrainConfig.cone()
    assert (cone.learning_rate, cone.batch_size) == (5e-4, 50)
    with pytest.raises(InvalidArgumentError):
        TrainConfig(loss_mode="bogus")


def test_adam_zero_grads_leave_params():
    p = init_params(MLPConfig((3, 4, 3)), 0)
    q, _ = adam_step(p, p.zeros_like(), OptState.for_params(p), 0.1)
    assert all(np.array_equal(a, b) for a, b in zip(p.arrays(), q.arrays()))


def test_adam_first_step_is_sign_like():
    p = init_params(MLPConfig((3, 4, 3)), 0)
    g = init_params(MLPConfig((3, 4, 3)), 1)
    q, state = adam_step(p, g, OptState.for_params(p), 0.01)
    for a, b, ga in zip(p.arrays(), q.arrays(), g.arrays()):
        assert np.allclose(b - a, -0.01 * ga / (np.abs(ga) + 1e-8), rtol=1e-12, atol=0)
    assert state.step == 1


def test_adam_constant_gradient_step_tends_to_lr():
    p = init_params(MLPConfig((2, 2)), 0)
    g = p.with_arrays([np.full((2, 2), 0.37)])
    state = OptState.for_params(p)
    for _ in range(200):
        prev = p.weights[0].copy()
        p, state = adam_step(p, g, state, 1e-3)
    assert np.allclose(prev - p.weights[0], 1e-3, rtol=1e-6)


def test_fit_is_deterministic():
    x, y = small_problem()
    p0 = init_params(MLPConfig((6, 8, 6)), 1)
    tc = TrainConfig.synthetic(epochs=5, batch_size=16, learning_rate=1e-2)
    a, ra = fit(tc, p0, y, SYM)
    b, rb = fit(tc, p0, y, SYM)
    assert all(np.array_equal(u, v) for u, v in zip(a.arrays(), b.arrays()))
    assert ra.to_csv() == rb.to_csv()
    assert len(ra.to_csv().splitlines()) == 1 + 5


def test_fit_mode_ground_truth_contract():
    x, y = small_problem()
    p0 = init_params(MLPConfig((6, 8, 6)), 1)
    with pytest.raises(MissingGroundTruthError):
        fit(TrainConfig(loss_mode=SUPERVISED, epochs=1), p0, y, SYM)
    with pytest.raises(InvalidArgumentError):
        fit(TrainConfig(loss_mode=SELF_MC_EI, epochs=1), p0, y, SYM, x=x)


def test_mc_only_fits_identity_on_unsaturated_data():
    y = np.random.default_rng(0).uniform(-0.5, 0.5, (200, 5))
    p = init_params(MLPConfig((5, 16, 5)), 0)
    tc = TrainConfig(learning_rate=1e-2, epochs=500, batch_size=50, loss_mode=MC_ONLY)
    p, report = fit(tc, p, y, SYM)
    assert report.losses[-1] < 1e-4
    assert np.mean((predict(p, y) - y) ** 2) < 1e-3
    assert np.mean(report.losses[-10:]) <= report.losses[9]


def test_supervised_training_improves_on_identity():
    x, y = small_problem(count=200)
    p = init_params(MLPConfig((6, 32, 6), skip_blend=True, clip_spec=SYM), 2)
    tc = TrainConfig(learning_rate=5e-3, epochs=100, batch_size=50, loss_mode=SUPERVISED)
    p, report = fit(tc, p, y, SYM, x=x, eval_set=(x, y))
    assert report.metrics[-1] > evaluate(None, x, y).mean
    assert np.isnan(report.metrics[0])


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_is_reported():
    y = np.full((4, 3), 1e200)
    p = init_params(MLPConfig((3, 3)), 0)
    spec = ClipSpec.symmetric(1e300)
    with pytest.raises(TrainingDivergedError) as err:
        fit(TrainConfig(loss_mode=MC_ONLY, epochs=1, batch_size=2), p, y, spec)
    assert err.value.step == 1 and err.value.batch == 0


def test_evaluate_identity_and_perfect():
    x, y = small_problem()
    s = evaluate(None, x, y)
    assert s.values[0] == sdr(x[0], clip(x[0], SYM))
    assert evaluate(identity_params(6), x, x).mean == 150.0
    assert evaluate(None, x, y).mean == s.mean


def test_grid_sweep_rows_and_worker_independence():
    cfg = SweepConfig(ambient_dim=8, count=30, hidden=8, depth=2,
                      train=TrainConfig.synthetic(epochs=2, batch_size=10))
    rows = grid_sweep([1, 2], [0.25], cfg)
    assert [(r["method"], r["k"]) for r in rows] == [
        ("identity", 1), ("identity", 2), ("supervised", 1), ("supervised", 2),
        ("self_supervised", 1), ("self_supervised", 2)]
    csv_text = rows_to_csv(rows, trainer.SWEEP_COLUMNS)
    assert csv_text == rows_to_csv(grid_sweep([1, 2], [0.25], cfg, workers=2),
                                   trainer.SWEEP_COLUMNS)
    single = grid_sweep([2], [0.25], cfg)
    assert len(single) == 3


def test_checkpoint_roundtrip(tmp_path):
    p = init_params(MLPConfig((4, 7, 3)), 9)
    path = tmp_path / "m.dclp"
    save_checkpoint(p, path)
    q = load_checkpoint(path)
    assert q.config.layer_widths == (4, 7, 3)
    assert all(np.array_equal(a, b) for a, b in zip(p.arrays(), q.arrays()))


def test_checkpoint_errors(tmp_path):
    p = init_params(MLPConfig((4, 3)), 0)
    path = tmp_path / "m.dclp"
    save_checkpoint(p, path)
    data = path.read_bytes()
    (tmp_path / "t.dclp").write_bytes(data[:-5])
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "t.dclp")
    (tmp_path / "v.dclp").write_bytes(data[:4] + struct.pack("<I", 2) + data[8:])
    with pytest.raises(CheckpointVersionError):
        load_checkpoint(tmp_path / "v.dclp")
    (tmp_path / "b.dclp").write_bytes(b"XXXX" + data[4:])
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "b.dclp")
    (tmp_path / "s.dclp").write_bytes(b"DCLP")
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "s.dclp")
    biased = init_params(MLPConfig((4, 3), bias_free=False), 0)
    with pytest.raises(CheckpointError):
        save_checkpoint(biased, tmp_path / "x.dclp")
