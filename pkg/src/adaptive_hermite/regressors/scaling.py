"""Affine feature scaling to [-1, 1] (the LIBSVM svm-scale convention)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# spans below this fraction of the largest feature magnitude are roundoff
# (e.g. odd Hermite coefficients of even profiles) and count as constant
RELATIVE_SPAN_FLOOR = 1e-10


@dataclass(frozen=True, eq=False)
class MinMaxScaler:
    lo: np.ndarray
    hi: np.ndarray

    @classmethod
    def fit(cls, x) -> "MinMaxScaler":
        x = np.atleast_2d(np.asarray(x, dtype=float))
        lo, hi = x.min(axis=0), x.max(axis=0)
        floor = RELATIVE_SPAN_FLOOR * np.max(np.abs(x), initial=0.0)
        flat = (hi - lo) <= floor
        hi = np.where(flat, lo, hi)
        return cls(lo, hi)

    def transform(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        span = self.hi - self.lo
        live = span > 0
        out = np.zeros_like(x)
        # constant training features carry no information and map to 0
        out[..., live] = 2.0 * (x[..., live] - self.lo[live]) / span[live] - 1.0
        return out

    def inverse_transform(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        return self.lo + 0.5 * (z + 1.0) * (self.hi - self.lo)

    def to_dict(self) -> dict:
        return {"lo": self.lo.tolist(), "hi": self.hi.tolist()}

    @classmethod
    def from_dict(cls, d) -> "MinMaxScaler":
        return cls(np.array(d["lo"], dtype=float), np.array(d["hi"], dtype=float))
