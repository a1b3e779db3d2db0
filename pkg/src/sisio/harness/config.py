"""JSON model/scenario configuration."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from .. import expr as ex
from ..errors import DimensionError, InvalidInputError
from ..interval import IntervalVector
from ..mixed_monotone import JacobianBounds
from ..observer import SystemModel

BUILTIN_CONFIGS = ("paper_example", "paper_example_adversarial", "toy_contractive", "toy_contractive_wrong_g")
NOISE_MODES = ("uniform", "extremal")


@dataclass(frozen=True)
class Scenario:
    """Signals and sampling rules for one simulated run.

    ``u`` and ``d`` expressions may use ``k`` and the true state ``x1..xn``.
    """

    u: tuple
    d: tuple
    horizon: int
    seed: int
    noise: str = "uniform"
    u_text: tuple = ()
    d_text: tuple = ()

    def with_(self, **changes) -> Scenario:
        kw = dict(
            u=self.u, d=self.d, horizon=self.horizon, seed=self.seed, noise=self.noise,
            u_text=self.u_text, d_text=self.d_text,
        )
        kw.update(changes)
        return Scenario(**kw)


@dataclass(frozen=True)
class Config:
    model: SystemModel
    x0: IntervalVector
    scenario: Scenario
    raw: dict


def _vec(section: dict, key: str, size: int) -> np.ndarray:
    v = np.atleast_1d(np.asarray(section[key], dtype=float))
    if v.size == 1 and size != 1:
        v = np.full(size, float(v[0]))
    if v.shape != (size,):
        raise DimensionError(f"{key} must have {size} entries, got {v.size}")
    return v


def _mat(raw, rows: int, cols: int, name: str) -> np.ndarray:
    if raw is None:
        return np.zeros((rows, cols))
    A = np.asarray(raw, dtype=float)
    if A.size == 0:
        return np.zeros((rows, cols))
    if A.ndim == 1 and A.size == rows * cols:
        A = A.reshape(rows, cols)
    if A.shape != (rows, cols):
        raise DimensionError(f"matrix {name} must be {rows}x{cols}, got {A.shape}")
    return A


def parse_scenario(raw: dict, n: int, m: int, p: int) -> Scenario:
    u_text = tuple(raw.get("u", ["0"] * m))
    d_text = tuple(raw.get("d", ["0"] * p))
    if len(u_text) != m or len(d_text) != p:
        raise DimensionError(f"scenario needs {m} u and {p} d expressions")
    noise = raw.get("noise", "uniform")
    if noise not in NOISE_MODES:
        raise InvalidInputError(f"noise mode must be one of {NOISE_MODES}")
    seed = int(raw.get("seed", 0))
    if not 0 <= seed < 2**64:
        raise InvalidInputError("seed must be an unsigned 64-bit integer")
    return Scenario(
        u=tuple(ex.parse(t, n, allow_time=True) for t in u_text),
        d=tuple(ex.parse(t, n, allow_time=True) for t in d_text),
        horizon=int(raw.get("horizon", 200)),
        seed=seed,
        noise=noise,
        u_text=u_text,
        d_text=d_text,
    )


def config_from_dict(raw: dict[str, Any], grid: int | None = None) -> Config:
    raw = copy.deepcopy(raw)
    dims = raw["dimensions"]
    n, m, l, p = (int(dims[k]) for k in ("n", "m", "l", "p"))
    dyn = raw["dynamics"]
    f, g = list(dyn["f"]), list(dyn["g"])
    if len(f) != n or len(g) != l:
        raise DimensionError(f"expected {n} f and {l} g expressions, got {len(f)} and {len(g)}")
    mats = raw.get("matrices", {})
    B = _mat(mats.get("B"), n, m, "B")
    D = _mat(mats.get("D"), l, m, "D")
    G = _mat(mats.get("G"), n, p, "G")
    H = _mat(mats.get("H"), l, p, "H")
    noise = raw["noise"]
    dom = raw["domain"]
    domain = IntervalVector(_vec(dom, "lo", n), _vec(dom, "hi", n))
    init = raw["initial"]
    x0 = IntervalVector(_vec(init, "x0_lo", n), _vec(init, "x0_hi", n))

    f_bounds = g_bounds = None
    jb = raw.get("jacobian_bounds")
    if jb:
        if "f" in jb:
            f_bounds = JacobianBounds(jb["f"]["low"], jb["f"]["high"])
        if "g" in jb:
            g_bounds = JacobianBounds(jb["g"]["low"], jb["g"]["high"])
    lip = raw.get("lipschitz", {}) or {}

    model = SystemModel.create(
        f, g, B=B, D=D, G=G, H=H,
        w_lo=_vec(noise, "w_lo", n), w_hi=_vec(noise, "w_hi", n),
        v_lo=_vec(noise, "v_lo", l), v_hi=_vec(noise, "v_hi", l),
        domain=domain, f_bounds=f_bounds, g_bounds=g_bounds,
        L_f=lip.get("L_f"), L_g=lip.get("L_g"),
        grid=grid if grid is not None else raw.get("grid"),
    )
    scenario = parse_scenario(raw.get("scenario", {}), n, m, p)
    return Config(model, x0, scenario, raw)


def builtin_config_path(name: str) -> Path:
    return Path(str(resources.files("sisio") / "data" / f"{name}.json"))


def load_raw(path_or_name: str | Path) -> dict:
    path = Path(path_or_name)
    if not path.is_file() and str(path_or_name) in BUILTIN_CONFIGS:
        path = builtin_config_path(str(path_or_name))
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def load_config(path_or_name: str | Path, grid: int | None = None) -> Config:
    """Load a config file, or one of :data:`BUILTIN_CONFIGS` by name."""
    return config_from_dict(load_raw(path_or_name), grid)
