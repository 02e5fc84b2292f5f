from __future__ import annotations

import warnings

import numpy as np


class ScalerStateError(RuntimeError):
    """Transform requested before ``fit``."""


class MinMaxScaler:
    """Per-dimension linear map of the fitted ``[min, max]`` onto ``[0, 1]``.

    Constant dimensions are mapped to 0 and listed in ``constant_dims``.
    Data from other sources may land outside ``[0, 1]``; that is allowed.
    """

    def __init__(self):
        self.min_: np.ndarray | None = None
        self.max_: np.ndarray | None = None
        self.constant_dims: list[int] = []
        self.warnings: list[str] = []

    def fit(self, data) -> "MinMaxScaler":
        arr = np.asarray(data, dtype=np.float64)
        arr = arr.reshape(-1, arr.shape[-1])
        if arr.shape[0] == 0:
            raise ValueError("cannot fit a scaler on empty data")
        self.min_ = arr.min(axis=0)
        self.max_ = arr.max(axis=0)
        self.constant_dims = [int(d) for d in np.flatnonzero(~(self.max_ > self.min_))]
        self.warnings = [f"dimension {d} is constant; mapped to 0" for d in self.constant_dims]
        for msg in self.warnings:
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
        return self

    def _check(self):
        if self.min_ is None:
            raise ScalerStateError("scaler used before fit")

    @property
    def _span(self) -> np.ndarray:
        span = self.max_ - self.min_
        return np.where(span > 0, span, 1.0)

    def transform(self, data) -> np.ndarray:
        self._check()
        arr = np.asarray(data, dtype=np.float64)
        out = (arr - self.min_) / self._span
        if self.constant_dims:
            out[..., self.constant_dims] = 0.0
        return out

    def inverse_transform(self, data) -> np.ndarray:
        self._check()
        arr = np.asarray(data, dtype=np.float64)
        out = arr * self._span + self.min_
        if self.constant_dims:
            out[..., self.constant_dims] = self.min_[self.constant_dims]
        return out

    def to_dict(self) -> dict:
        self._check()
        return {"min": self.min_.tolist(), "max": self.max_.tolist()}


def fit_scaler(source_data) -> MinMaxScaler:
    return MinMaxScaler().fit(source_data)


def apply_scaler(scaler: MinMaxScaler, data) -> np.ndarray:
    return scaler.transform(data)


def invert_scaler(scaler: MinMaxScaler, data) -> np.ndarray:
    return scaler.inverse_transform(data)
