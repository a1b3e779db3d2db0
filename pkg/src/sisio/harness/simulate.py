"""Ground-truth simulation of the plant.

Randomness comes from numpy's PCG64 bit generator seeded with the run seed.
Draw order is fixed: the initial state first, then for every step the
measurement noise followed by the process noise.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .. import expr as ex
from ..errors import SimulationDivergedError
from ..interval import IntervalVector
from ..observer import SystemModel
from .config import Config, Scenario


@dataclass(frozen=True)
class TruthTrace:
    """Rows ``k = 0..K`` of the true state, unknown input, output and known input."""

    x: np.ndarray  # (K+1, n)
    d: np.ndarray  # (K+1, p)
    y: np.ndarray  # (K+1, l)
    u: np.ndarray  # (K+1, m)
    seed: int | None = None
    left_domain: bool = False
    first_exit: int | None = None

    def __len__(self) -> int:
        return self.x.shape[0]

    @property
    def ks(self) -> np.ndarray:
        return np.arange(len(self))


def _draw(rng: np.random.Generator, lo: np.ndarray, hi: np.ndarray, mode: str) -> np.ndarray:
    if mode == "extremal":
        pick = rng.integers(0, 2, size=lo.shape[0])
        return np.where(pick == 1, hi, lo)
    return rng.uniform(lo, hi)


def _signal(nodes, x: np.ndarray, k: int, size: int) -> np.ndarray:
    if size == 0:
        return np.zeros(0)
    return np.array([ex.evaluate(node, x, k) for node in nodes], dtype=float)


def simulate_truth(
    model: SystemModel, x0: IntervalVector, scenario: Scenario,
) -> TruthTrace:
    """Simulate ``scenario.horizon`` steps from a sampled ``x0`` in the given box."""
    rng = np.random.Generator(np.random.PCG64(scenario.seed))
    K = scenario.horizon
    n, l, m, p = model.n, model.l, model.m, model.p
    f = ex.compile_vector(model.f_dec.base)
    g = ex.compile_vector(model.g_dec.base)
    X = np.empty((K + 1, n))
    Dv = np.empty((K + 1, p))
    Y = np.empty((K + 1, l))
    U = np.empty((K + 1, m))
    x = _draw(rng, x0.lo, x0.hi, scenario.noise)
    first_exit = None
    for k in range(K + 1):
        if not np.all(np.isfinite(x)):
            raise SimulationDivergedError(f"true state became non-finite at step {k}")
        if first_exit is None and not model.domain.contains(x):
            first_exit = k
        u = _signal(scenario.u, x, k, m)
        d = _signal(scenario.d, x, k, p)
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(d))):
            raise SimulationDivergedError(f"input signal became non-finite at step {k}")
        v = _draw(rng, model.v_lo, model.v_hi, scenario.noise)
        X[k], U[k], Dv[k] = x, u, d
        Y[k] = g(x) + model.D @ u + model.H @ d + v
        if not np.all(np.isfinite(Y[k])):
            raise SimulationDivergedError(f"measurement became non-finite at step {k}")
        if k < K:
            w = _draw(rng, model.w_lo, model.w_hi, scenario.noise)
            x = f(x) + model.B @ u + model.G @ d + w
    if first_exit is not None:
        warnings.warn(
            f"true trajectory left the model domain at step {first_exit}", RuntimeWarning, stacklevel=2
        )
    return TruthTrace(X, Dv, Y, U, scenario.seed, first_exit is not None, first_exit)


def simulate_config(
    cfg: Config, *, seed: int | None = None, steps: int | None = None, noise: str | None = None
) -> TruthTrace:
    sc = cfg.scenario
    changes = {}
    if seed is not None:
        changes["seed"] = seed
    if steps is not None:
        changes["horizon"] = steps
    if noise is not None:
        changes["noise"] = noise
    if changes:
        sc = sc.with_(**changes)
    return simulate_truth(cfg.model, cfg.x0, sc)
