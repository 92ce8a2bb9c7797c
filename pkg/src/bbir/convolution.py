"""Streaming complex FIR convolution with the history term exposed separately.

At step n the output is ``b[n] = s_0 a[n] + H[n]`` where
``H[n] = sum_{k=1..min(n,N)} s_k a[n-k]`` depends only on past inputs. A solver can
therefore compute ``H[n]`` first, solve for the unknown ``a[n]``, then call
:meth:`Convolver.advance`.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .fourier_fit import ImpulseResponse, tap_energy_profile


class Convolver:
    """Per-port history of the last N incident wave vectors, zero before the start."""

    def __init__(self, ir: ImpulseResponse):
        self.ir = ir
        self._taps = ir.taps
        self._n_hist = ir.order_n
        self._buf = np.zeros((max(self._n_hist, 1), ir.port_count), dtype=complex)
        self._head = 0  # slot that receives the next input
        self.step_index = 0

    @property
    def port_count(self) -> int:
        return self.ir.port_count

    def _coerce(self, a_n) -> np.ndarray:
        a = np.asarray(a_n, dtype=complex).reshape(-1)
        if a.size != self.port_count:
            raise ValidationError(f"expected {self.port_count} input values, got {a.size}")
        if not np.all(np.isfinite(a)):
            raise ValidationError("non-finite input wave")
        return a

    def history_term(self) -> np.ndarray:
        """Everything in the convolution sum except the ``s_0 a[n]`` term."""
        if self._n_hist == 0:
            return np.zeros(self.port_count, dtype=complex)
        # slot of a[n-k] for k = 1..N
        idx = (self._head - 1 - np.arange(self._n_hist)) % self._n_hist
        return np.einsum("kij,kj->i", self._taps[1:], self._buf[idx])

    def advance(self, a_n) -> np.ndarray:
        a = self._coerce(a_n)
        b = self._taps[0] @ a + self.history_term()
        if self._n_hist:
            self._buf[self._head] = a
            self._head = (self._head + 1) % self._n_hist
        self.step_index += 1
        return b

    def reset(self) -> None:
        self._buf[:] = 0
        self._head = 0
        self.step_index = 0


def convolve_stream(ir: ImpulseResponse, inputs) -> np.ndarray:
    """Run a fresh :class:`Convolver` over ``inputs`` of shape ``(n, P)`` (or ``(n,)`` for one port)."""
    conv = Convolver(ir)
    a = np.asarray(inputs, dtype=complex)
    a = a.reshape(a.shape[0], -1)
    return np.array([conv.advance(row) for row in a]).reshape(a.shape[0], ir.port_count)


def truncate(ir: ImpulseResponse, energy_keep: float) -> ImpulseResponse:
    """Shortest tap prefix holding at least ``energy_keep`` of the total energy."""
    if not 0 < energy_keep <= 1:
        raise ValidationError(f"energy_keep must lie in (0, 1], got {energy_keep}")
    profile = tap_energy_profile(ir)
    if energy_keep == 1:
        return ir
    k = int(np.searchsorted(profile, energy_keep, side="left"))
    return ir.with_taps(ir.taps[: k + 1])
