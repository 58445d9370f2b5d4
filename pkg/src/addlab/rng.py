"""Reproducible random streams keyed by (seed, stream-id).

Monte Carlo sweeps split work into fixed-size chunks; chunk ``i`` draws from
the sub-stream with stream-id ``base + i`` and results are reduced in chunk
order, so estimates are bit-identical regardless of the number of worker
threads.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    """A named random stream: identical (seed, stream_id) gives identical draws."""

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(
            entropy=self.seed & _MASK64, spawn_key=(self.stream_id & _MASK64,)
        )
        return np.random.default_rng(ss)

    def stream(self, task_index: int) -> "RngStream":
        """Sub-stream for one Monte Carlo task (stream-id = base + task index)."""
        return RngStream(self.seed, self.stream_id + task_index)


def as_generator(rng) -> np.random.Generator:
    """Accept either an RngStream or a numpy Generator."""
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng)!r}")


def run_chunked(count: int, rng: RngStream, worker, threads: int = 1,
                chunk_size: int = 10_000) -> list:
    """Run ``worker(generator, m)`` over chunks summing to ``count`` samples.

    The chunk layout depends only on ``count`` and ``chunk_size``, and chunk
    ``i`` uses ``rng.stream(i)``, so the list of per-chunk results is
    independent of ``threads``.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    jobs = []
    done = 0
    while done < count:
        m = min(chunk_size, count - done)
        jobs.append((len(jobs), m))
        done += m

    def run(job):
        i, m = job
        return worker(rng.stream(i).generator(), m)

    if threads <= 1 or len(jobs) == 1:
        return [run(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(run, jobs))


def fraction_with_stderr(hits: int, total: int) -> tuple[float, float]:
    """Binomial point estimate and its standard error."""
    p = hits / total
    return p, float(np.sqrt(max(p * (1.0 - p), 1.0 / total) / total))
