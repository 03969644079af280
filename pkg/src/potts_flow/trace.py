"""Iteration driver and convergence trace shared by both models."""
import csv
import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

TRACE_HEADER = ("iter", "energy", "rel_err", "residual", "elapsed_ms")

#: Consecutive iterations the self-referencing rule must hold before a run stops.
SELF_STOP_WINDOW = 10


@dataclass
class TraceRecord:
    iter: int
    energy: float
    rel_err: float
    residual: float
    elapsed_ms: float


@dataclass
class Trace:
    """Per-iteration history of one run.

    ``rel_err`` is ``|E_k - E*| / |E*|`` against :attr:`reference_energy`, or
    ``|E_k - E_{k-1}| / |E_k|`` when the run used the self-referencing rule
    (``reference_energy is None``).
    """
    algorithm: str
    reference_energy: Optional[float] = None
    converged: bool = False
    records: List[TraceRecord] = field(default_factory=list)

    @property
    def iterations(self):
        return self.records[-1].iter if self.records else 0

    @property
    def final_energy(self):
        return self.records[-1].energy if self.records else float("nan")

    @property
    def final_rel_err(self):
        return self.records[-1].rel_err if self.records else float("nan")

    @property
    def seconds(self):
        return self.records[-1].elapsed_ms / 1000.0 if self.records else 0.0

    def first_below(self, eps):
        """First record whose ``rel_err`` is at most ``eps``, or None."""
        for rec in self.records:
            if rec.rel_err <= eps:
                return rec
        return None

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(TRACE_HEADER)
            for r in self.records:
                # repr keeps full precision so rel_err can be recomputed exactly
                w.writerow([r.iter, repr(r.energy), repr(r.rel_err),
                            repr(r.residual), f"{r.elapsed_ms:.3f}"])


def relative_error(energy, reference):
    if reference == 0:
        return abs(energy)
    return abs(energy - reference) / abs(reference)


def iterate(algorithm: str, state, step: Callable, energy: Callable, residual: Callable,
            eps: float, max_iters: int, reference_energy: Optional[float] = None,
            self_stop: bool = False):
    """Run ``step`` until the relative energy error drops to ``eps``.

    With ``self_stop`` the criterion compares the energies of successive
    iterates instead of a reference value. It is first evaluated at
    iteration 2 and must hold for :data:`SELF_STOP_WINDOW` consecutive
    iterations, since oscillating energies can coincide by chance long
    before convergence. Returns ``(state, trace)``; ``trace.converged`` is
    False when ``max_iters`` ran out first.
    """
    if not self_stop and reference_energy is None:
        raise ValueError("a reference energy is required unless self_stop is set")
    trace = Trace(algorithm, None if self_stop else float(reference_energy))
    prev = None
    streak = 0
    need = SELF_STOP_WINDOW if self_stop else 1
    t0 = time.perf_counter()
    for k in range(1, max_iters + 1):
        state = step(state)
        e = energy(state)
        if self_stop:
            rel = np.inf if prev is None else relative_error(prev, e)
        else:
            rel = relative_error(e, trace.reference_energy)
        elapsed = (time.perf_counter() - t0) * 1000.0
        trace.records.append(TraceRecord(k, e, rel, residual(state), elapsed))
        prev = e
        streak = streak + 1 if rel <= eps else 0
        if streak >= need:
            trace.converged = True
            break
    return state, trace
