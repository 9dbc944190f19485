import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gnss_subsidence.errors import ConfigError, DomainError
from gnss_subsidence.forecast import (
    ML_KINDS,
    ModelKind,
    ModelSpec,
    build_windows,
    default_hyperparameters,
    defaults_help,
)
from gnss_subsidence.forecast.windows import contiguity_breaks
from gnss_subsidence.series import ScalarSeries, center_on_training_mean


def series(values, epochs=None):
    values = np.asarray(values, dtype=float)
    epochs = np.arange(values.size, dtype=float) if epochs is None else np.asarray(epochs, dtype=float)
    return ScalarSeries(epochs, values)


def test_windows_enumeration():
    d = build_windows(series([1, 2, 3, 4, 5]), 2, 5)
    assert d.inputs.tolist() == [[1, 2], [2, 3], [3, 4]]
    assert d.targets.tolist() == [3, 4, 5]
    assert d.target_index.tolist() == [2, 3, 4]
    assert d.skipped == 0 and len(d) == 3


def test_window_boundary_single_pair():
    d = build_windows(series(np.arange(10.0)), 9, 10)
    assert len(d) == 1 and d.targets[0] == 9.0


def test_windows_use_training_prefix_only():
    d = build_windows(series(np.arange(20.0)), 3, 8)
    assert d.targets.max() == 7.0 and d.train_values.size == 8


def test_windows_argument_errors():
    s = series(np.arange(5.0))
    with pytest.raises(DomainError):
        build_windows(s, 0, 5)
    with pytest.raises(DomainError):
        build_windows(s, 5, 5)
    with pytest.raises(DomainError):
        build_windows(s, 2, 6)


def oracle_pairs(n, w, bad):
    return [i for i in range(w, n) if not any(j in bad for j in range(i - w, i + 1))]


def test_hole_in_mask_drops_touching_pairs():
    values = np.arange(12.0)
    valid = np.ones(12, dtype=bool)
    valid[3] = False
    d = build_windows(series(values), 2, 12, valid=valid)
    assert d.target_index.tolist() == oracle_pairs(12, 2, {3})
    assert d.skipped == 10 - len(d)


def test_missing_epoch_breaks_windows():
    # sample at epoch 3 missing: indices 2 and 3 are not adjacent on the grid
    epochs = np.array([0, 1, 2, 4, 5, 6, 7, 8], dtype=float)
    d = build_windows(series(epochs, epochs), 2, 8)
    for x, y in zip(d.inputs, d.targets):
        assert np.all(np.diff(np.append(x, y)) == 1.0)
    assert d.target_index.tolist() == [2, 5, 6, 7]
    assert d.skipped == 2


@given(st.integers(3, 40), st.integers(1, 5), st.sets(st.integers(0, 39), max_size=6))
def test_windows_match_mask_oracle(n, w, holes):
    if n < w + 1:
        return
    valid = np.ones(n, dtype=bool)
    bad = {h for h in holes if h < n}
    valid[list(bad)] = False
    d = build_windows(series(np.arange(float(n))), w, n, valid=valid)
    assert d.target_index.tolist() == oracle_pairs(n, w, bad)
    assert len(d) + d.skipped == n - w


def test_contiguity_breaks():
    assert contiguity_breaks([0, 1, 2, 4, 5]).tolist() == [False, False, True, False]
    assert contiguity_breaks([0, 1, 2], nominal_step=0.5).tolist() == [True, True]
    assert contiguity_breaks([1.0]).size == 0


def test_centered_windows_carry_offset():
    c = center_on_training_mean(series([10, 11, 12, 13, 20]), 4)
    d = build_windows(c, 2, 4)
    assert d.offset == 11.5
    assert d.targets.tolist() == [0.5, 1.5]


def test_every_kind_has_defaults():
    assert len(ModelKind) == 9 and len(ML_KINDS) == 8
    for kind in ModelKind:
        spec = ModelSpec(kind)
        assert spec.resolved() == default_hyperparameters(kind)
        assert kind.value in defaults_help()


def test_spec_rejects_unknown_keys_and_kinds():
    with pytest.raises(ConfigError, match="unknown"):
        ModelSpec(ModelKind.KNN, {"kk": 3})
    with pytest.raises(ConfigError):
        ModelSpec("LSTM")
    with pytest.raises(ConfigError):
        ModelSpec("GP", seed=1.5)


def test_spec_coercion():
    s = ModelSpec("knn", {"k": "3", "weights": " Uniform "})
    assert s.kind is ModelKind.KNN
    assert s.resolved()["k"] == 3 and s.resolved()["weights"] == "uniform"
    assert ModelSpec("GP", {"length_scale": "auto"}).resolved()["length_scale"] is None
    assert ModelSpec("MLP", {"strict": "yes"}).resolved()["strict"] is True
    assert ModelSpec("CART", {"max_depth": 0}).resolved()["max_depth"] == 0


@pytest.mark.parametrize("kind,params", [
    ("KNN", {"k": 0}), ("KNN", {"k": 2.5}), ("GP", {"noise": -1}), ("GP", {"kernel": "periodic"}),
    ("SVR", {"C": "nan"}), ("THETA", {"alpha_step": 0.7}), ("MLP", {"strict": "maybe"}),
    ("CART", {"max_depth": -1}), ("RBF", {"centers": None}),
])
def test_spec_rejects_bad_values(kind, params):
    with pytest.raises(ConfigError):
        ModelSpec(kind, params)


def test_spec_hash_and_equality():
    a = ModelSpec("GP", {"noise": 1e-3}, seed=4)
    b = ModelSpec(ModelKind.GP, {"noise": "0.001"}, seed=4)
    assert a == b and hash(a) == hash(b)
    assert a != ModelSpec("GP", {"noise": 1e-3}, seed=5)
    assert a.describe()["hyperparameters"]["noise"] == 1e-3
