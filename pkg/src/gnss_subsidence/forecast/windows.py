"""Sliding-window datasets for autoregressive forecasting."""

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError
from ..series import CenteredSeries, _frozen


@dataclass(frozen=True)
class WindowedDataset:
    """
    Input/target pairs ``inputs[i] -> targets[i]`` over a training prefix.

    ``inputs[i]`` holds the ``w`` values immediately preceding
    ``targets[i]``; ``target_index[i]`` is the sample index of the target.
    ``train_values`` is the whole centred training prefix (used by models
    that ignore windows) and ``offset`` the mean that was removed.
    """

    window_length: int
    inputs: np.ndarray
    targets: np.ndarray
    n_train: int
    target_index: np.ndarray
    train_values: np.ndarray
    offset: float = 0.0
    skipped: int = 0
    last_epoch: float = 0.0
    step: float = 0.0

    def __post_init__(self):
        inputs = _frozen(self.inputs).reshape(-1, self.window_length)
        targets = _frozen(self.targets)
        if inputs.shape[0] != targets.size:
            raise DomainError("one target per input window is required")
        if not (np.all(np.isfinite(inputs)) and np.all(np.isfinite(targets))):
            raise DomainError("window values must be finite")
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "target_index", _frozen(self.target_index, dtype=int))
        object.__setattr__(self, "train_values", _frozen(self.train_values))

    def __len__(self):
        return self.targets.size


def contiguity_breaks(epochs, nominal_step=None, tolerance_fraction=0.5):
    """
    ``breaks[i]`` is True when samples ``i`` and ``i + 1`` are not adjacent,
    i.e. one or more expected epochs are missing between them.
    """
    epochs = np.asarray(epochs, dtype=float)
    if epochs.size < 2:
        return np.zeros(0, dtype=bool)
    dt = np.diff(epochs)
    step = float(np.median(dt)) if nominal_step is None else float(nominal_step)
    return dt > step * (1.0 + tolerance_fraction)


def build_windows(s, w, n_train, nominal_step=None, valid=None):
    """
    Sliding windows of length ``w`` over the first ``n_train`` samples.

    There are ``n_train - w`` candidate pairs. A pair is skipped (and counted
    in ``skipped``) when its ``w + 1`` samples are not consecutive on the
    sampling grid, or when any of them is non-finite or flagged False in
    ``valid``.

    Parameters
    ----------
    s : CenteredSeries or ScalarSeries
    w : int
        window length, ``w >= 1``
    n_train : int
        training count, ``n_train >= w + 1``
    nominal_step : float, optional
        grid step in sidereal years; the median spacing when omitted
    valid : bool array, optional
        per-sample usability flags
    """
    w, n_train = int(w), int(n_train)
    if w < 1:
        raise DomainError(f"window length must be at least 1, got {w}")
    if n_train < w + 1:
        raise DomainError(f"n_train = {n_train} leaves no pair for window length {w}")
    if len(s) < n_train:
        raise DomainError(f"series has {len(s)} samples, fewer than n_train = {n_train}")
    values = np.asarray(s.values[:n_train], dtype=float)
    ok = np.isfinite(values)
    if valid is not None:
        valid = np.asarray(valid, dtype=bool)
        if valid.size < n_train:
            raise DomainError("valid mask shorter than the training prefix")
        ok &= valid[:n_train]
    breaks = contiguity_breaks(s.epochs[:n_train], nominal_step)

    # bad[i] counts unusable samples / breaks so that a window test is a
    # difference of cumulative sums
    bad_sample = np.concatenate([[0], np.cumsum(~ok)])
    bad_break = np.concatenate([[0], np.cumsum(breaks)])
    idx = np.arange(w, n_train)
    n_bad = bad_sample[idx + 1] - bad_sample[idx - w]
    n_brk = bad_break[idx] - bad_break[idx - w]
    keep = (n_bad == 0) & (n_brk == 0)
    idx = idx[keep]
    inputs = np.stack([values[i - w:i] for i in idx]) if idx.size else np.zeros((0, w))
    offset = float(s.training_mean) if isinstance(s, CenteredSeries) else 0.0
    return WindowedDataset(
        window_length=w,
        inputs=inputs,
        targets=values[idx],
        n_train=n_train,
        target_index=idx,
        train_values=values,
        offset=offset,
        skipped=int(np.count_nonzero(~keep)),
        last_epoch=float(s.epochs[n_train - 1]),
        step=float(np.median(np.diff(s.epochs[:n_train]))) if nominal_step is None else float(nominal_step),
    )
