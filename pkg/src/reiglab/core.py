"""Deterministic random streams and log-domain reductions.

All randomness in the package flows through ``RandomStream``, a frozen
handle on one member of a family of counter-based generator streams.
Streams are addressed by ``(master_seed, stream_index)`` where the index
is a spawn path; derived streams are obtained with ``substream`` and can
never collide with their parent or with siblings.  Because a stream's
draws depend only on its address, results are reproducible regardless of
how work is scheduled across processes or threads.

Probability densities are handled in the log domain throughout the
package; ``log_mean_exp`` is the one reduction used to average them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "RandomStream",
    "log_mean_exp",
    "standard_normal_draws",
    "substream",
]

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RandomStream:
    """Address of one deterministic random stream.

    Parameters
    ----------
    master_seed:
        Nonnegative integer shared by every stream of one run.
    stream_index:
        Spawn path identifying this stream within the family.  A bare
        integer is accepted and treated as a path of length one.
    """

    master_seed: int
    stream_index: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if not isinstance(self.master_seed, (int, np.integer)) or self.master_seed < 0:
            raise ValueError(f"master_seed must be a nonnegative integer, got {self.master_seed!r}")
        idx = self.stream_index
        if isinstance(idx, (int, np.integer)):
            idx = (int(idx),)
        idx = tuple(int(i) for i in idx)
        if any(i < 0 for i in idx):
            raise ValueError(f"stream_index entries must be nonnegative, got {idx!r}")
        object.__setattr__(self, "master_seed", int(self.master_seed))
        object.__setattr__(self, "stream_index", idx)

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream.

        Equal ``(master_seed, stream_index)`` always yields the identical
        draw sequence; the generator is counter-based (Philox), so state
        never leaks between streams.
        """
        seq = np.random.SeedSequence(self.master_seed & _MASK64, spawn_key=self.stream_index)
        return np.random.Generator(np.random.Philox(seq))

    def substream(self, index: int) -> "RandomStream":
        """Child stream for nonnegative ``index``; distinct indices never share state."""
        if not isinstance(index, (int, np.integer)) or index < 0:
            raise ValueError(f"substream index must be a nonnegative integer, got {index!r}")
        return RandomStream(self.master_seed, self.stream_index + (int(index),))


def substream(stream: RandomStream, index: int) -> RandomStream:
    """Functional form of :meth:`RandomStream.substream`."""
    return stream.substream(index)


def standard_normal_draws(stream: RandomStream, n: int) -> np.ndarray:
    """``n`` standard normal draws from the start of ``stream``; ``n = 0`` is allowed."""
    if not isinstance(n, (int, np.integer)) or n < 0:
        raise ValueError(f"draw count must be a nonnegative integer, got {n!r}")
    return stream.generator().standard_normal(int(n))


def log_mean_exp(values: np.ndarray, axis: int | None = None) -> float | np.ndarray:
    """log(mean(exp(values))) with max-shifting, tolerant of -inf entries.

    Entries may be ``-inf`` (zero mass); ``+inf`` and NaN are rejected.
    An all ``-inf`` slice reduces to ``-inf``.  The reduction never
    produces NaN on valid input.
    """
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("log_mean_exp of an empty array")
    if np.isnan(v).any():
        raise ValueError("log_mean_exp input contains NaN")
    if np.isposinf(v).any():
        raise ValueError("log_mean_exp input contains +inf")
    m = np.max(v, axis=axis, keepdims=True)
    # max-shift; an all -inf slice would otherwise produce inf - inf = NaN
    shifted = np.where(np.isneginf(m), -np.inf, v - np.where(np.isneginf(m), 0.0, m))
    with np.errstate(divide="ignore"):
        out = np.squeeze(m, axis=axis) if axis is not None else m.reshape(())
        res = out + np.log(np.mean(np.exp(shifted), axis=axis))
    if axis is None:
        return float(res)
    return res
