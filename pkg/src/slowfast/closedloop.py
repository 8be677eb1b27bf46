"""Assembly of runnable closed loops from a system and a controller variant.

Variants are small picklable records so that region-of-attraction sweeps
can fan out across processes; the actual closures are rebuilt inside each
worker. State vectors are packed as [x_1, ..., x_m, z].
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np

from .control import (
    HighGainParams,
    Theorem2Params,
    Theorem3Params,
    _thm2_u,
    _thm3_w,
)
from .normal_form import NormalFormSystem
from .sim import IntegratorConfig, Outcome, Trajectory, classify, integrate
from .systems import TunnelDiodeSystem, example1_controllers

__all__ = [
    "OpenLoop",
    "Thm2",
    "Thm2Plus3",
    "HighGain",
    "Variant",
    "describe",
    "build_closed_loop",
    "CellRunner",
    "ExprSlowField",
]


@dataclass(frozen=True)
class OpenLoop:
    pass


@dataclass(frozen=True)
class Thm2:
    p: Theorem2Params


@dataclass(frozen=True)
class Thm2Plus3:
    p2: Theorem2Params
    p3: Theorem3Params


@dataclass(frozen=True)
class HighGain:
    a: tuple[float, ...]
    b: float
    cancel_constants: bool = False


Variant = Union[OpenLoop, Thm2, Thm2Plus3, HighGain]


def describe(variant: Variant) -> str:
    if isinstance(variant, OpenLoop):
        return "open-loop"
    if isinstance(variant, Thm2):
        p = variant.p
        return f"thm2(a={p.a.tolist()}, b={p.b}, c={p.c.tolist()})"
    if isinstance(variant, Thm2Plus3):
        p2, p3 = variant.p2, variant.p3
        return (
            f"thm2+w(a={p2.a.tolist()}, b={p2.b}, "
            f"K={p3.K.tolist()}, chi_star={p3.chi_star.tolist()})"
        )
    if isinstance(variant, HighGain):
        return (
            f"highgain(A={list(variant.a)}, B={variant.b}, "
            f"cancel_constants={variant.cancel_constants})"
        )
    raise TypeError(f"unknown controller variant {variant!r}")


def _drift_at_origin(system) -> np.ndarray:
    m = system.n_slow
    return np.asarray(system.slow_f(np.zeros(m), 0.0, 0.0), dtype=float)


def build_closed_loop(system, variant: Variant):
    """(rhs, control_eval, n_controls) for the slow-time closed loop.

    ``control_eval`` reports the signal that is recorded in trajectories;
    for the circuit fold stabilizer these are the literal slot controls,
    for everything else the additive control vector.
    """
    if isinstance(system, NormalFormSystem):
        return _build_normal_form(system, variant)
    if isinstance(system, TunnelDiodeSystem):
        return _build_tunnel_diode(system, variant)
    raise TypeError(f"unsupported system type {type(system).__name__}")


def _build_normal_form(sys: NormalFormSystem, variant: Variant):
    k, eps, f = sys.k, sys.epsilon, sys.slow_f
    m = k - 1

    if isinstance(variant, OpenLoop):
        zeros = np.zeros(m)

        def ueval(t, y):
            return zeros
    elif isinstance(variant, Thm2):
        p = variant.p
        if p.a.size != m:
            raise ValueError(f"controller sized for k = {p.a.size + 1}, system has k = {k}")

        def ueval(t, y):
            return _thm2_u(y[:-1], y[-1], eps, k, p)
    elif isinstance(variant, Thm2Plus3):
        p2, p3 = variant.p2, variant.p3
        if p2.a.size != m or p3.K.size != m:
            raise ValueError(f"controller sized for k = {p2.a.size + 1}, system has k = {k}")

        def ueval(t, y):
            x, z = y[:-1], y[-1]
            return _thm2_u(x, z, eps, k, p2) + _thm3_w(x, z, k, p3)
    elif isinstance(variant, HighGain):
        hg = HighGainParams(
            a=np.asarray(variant.a, dtype=float),
            b=variant.b,
            epsilon=eps,
            constants=_drift_at_origin(sys) if variant.cancel_constants else None,
        )
        if hg.a.size != m:
            raise ValueError(f"controller sized for {hg.a.size} slow states, system has {m}")
        ainv = hg.a / eps
        binv = hg.b / eps
        const = hg.constants if hg.constants is not None else np.zeros(m)

        def ueval(t, y):
            v = -ainv * y[:-1] - const
            v[0] += binv * y[-1]
            return v
    else:
        raise TypeError(f"unknown controller variant {variant!r}")

    if k == 2:
        # scalar fast path; the sweep spends nearly all its time here
        def rhs(t, y):
            u = ueval(t, y)
            z = y[1]
            return np.array(
                [f(y[:1], z, eps)[0] + u[0], -(z * z + y[0]) / eps]
            )
    else:
        def rhs(t, y):
            x, z = y[:-1], y[-1]
            u = ueval(t, y)
            out = np.empty(k)
            out[:-1] = f(x, z, eps) + u
            s = z**k
            zp = 1.0
            for i in range(m):
                s += x[i] * zp
                zp *= z
            out[-1] = -s / eps
            return out

    return rhs, ueval, m


def _build_tunnel_diode(sys: TunnelDiodeSystem, variant: Variant):
    eps = sys.epsilon
    m = 2

    if isinstance(variant, OpenLoop):
        zeros = np.zeros(m)

        def ueval(t, y):
            return zeros

        def rhs(t, y):
            return sys.rhs_translated(y, zeros)
    elif isinstance(variant, Thm2):
        p = variant.p
        if p.a.size != m:
            raise ValueError("circuit controller needs gains for 2 slow states")
        u_fold, _ = example1_controllers(eps, p.a[0], p.a[1], p.b)
        c1, c2 = p.c

        def ueval(t, y):
            u = u_fold(y[0], y[1], y[2])
            # shift the printed constants (4, 16) if other drift constants
            # were requested in the configuration
            u[0] += 4.0 - c1
            u[1] += c2 - 16.0
            return u

        def rhs(t, y):
            return sys.rhs_translated(y, ueval(t, y))
    elif isinstance(variant, HighGain):
        _, v_eval = example1_controllers(
            eps, 1.0, 1.0, 1.0, A1=variant.a[0], A2=variant.a[1], B=variant.b,
            cancel_constants=variant.cancel_constants,
        )

        def ueval(t, y):
            return v_eval(y[0], y[1], y[2])

        def rhs(t, y):
            return sys.rhs_additive(y, ueval(t, y))
    else:
        raise TypeError(
            f"controller variant {describe(variant)} is not defined for the circuit"
        )

    return rhs, ueval, m


@lru_cache(maxsize=64)
def _compile_exprs(exprs: tuple[str, ...]):
    return tuple(compile(e, f"<slow_f[{i}]>", "eval") for i, e in enumerate(exprs))


_EXPR_NAMES = {
    name: getattr(np, name)
    for name in ("sin", "cos", "tan", "exp", "log", "sqrt", "abs", "tanh")
}
_EXPR_NAMES["pi"] = float(np.pi)


@dataclass(frozen=True)
class ExprSlowField:
    """Slow drift defined by expression strings in x1..xm, z and epsilon.

    Holds only the source strings, so instances pickle cleanly into sweep
    workers; compilation is cached per expression tuple.
    """

    exprs: tuple[str, ...]

    def __call__(self, x, z: float, eps: float) -> np.ndarray:
        env = {f"x{i + 1}": float(x[i]) for i in range(len(self.exprs))}
        env["z"] = float(z)
        env["epsilon"] = float(eps)
        env.update(_EXPR_NAMES)
        codes = _compile_exprs(self.exprs)
        return np.array([float(eval(c, {"__builtins__": {}}, env)) for c in codes])


@dataclass(frozen=True)
class CellRunner:
    """Classifies one initial condition under a fixed closed loop.

    Numerical failures are recorded as diverged so a sweep never aborts.
    Planar k = 2 cells go through the scalar fast path unless
    ``use_fast_path`` is cleared (tests clear it to cross-check the paths).
    """

    system: object
    variant: Variant
    cfg: IntegratorConfig
    ball: float = 1e-3
    dwell: float = 1.0
    early_stop: bool = True
    use_fast_path: bool = True

    def simulate(self, ic) -> Trajectory:
        rhs, _, _ = build_closed_loop(self.system, self.variant)
        stop = self.ball if self.early_stop else None
        return integrate(rhs, np.asarray(ic, dtype=float), self.cfg,
                         stop_ball=stop, stop_dwell=self.dwell)

    def _fast_args(self) -> dict | None:
        from .systems import planar_slow_f

        sysm, variant = self.system, self.variant
        if not (isinstance(sysm, NormalFormSystem) and sysm.k == 2
                and sysm.slow_f is planar_slow_f):
            return None
        if isinstance(variant, OpenLoop):
            return {"kind": "open", "c1": 0.0, "a1": 0.0, "b": 0.0,
                    "K1": 0.0, "chi1": 0.0}
        if isinstance(variant, Thm2):
            p = variant.p
            return {"kind": "thm2", "c1": float(p.c[0]), "a1": float(p.a[0]),
                    "b": float(p.b), "K1": 0.0, "chi1": 0.0}
        if isinstance(variant, Thm2Plus3):
            p2, p3 = variant.p2, variant.p3
            return {"kind": "thm2plus3", "c1": float(p2.c[0]),
                    "a1": float(p2.a[0]), "b": float(p2.b),
                    "K1": float(p3.K[0]), "chi1": float(p3.chi_star[0])}
        return None

    def __call__(self, ic) -> Outcome:
        try:
            if self.use_fast_path:
                args = self._fast_args()
                if args is not None:
                    from .fastcell import classify_planar_cell

                    return classify_planar_cell(
                        ic, eps=self.system.epsilon, cfg=self.cfg,
                        ball=self.ball, dwell=self.dwell,
                        early_stop=self.early_stop, **args,
                    )
            traj = self.simulate(ic)
        except Exception:  # noqa: BLE001 - cell failures must not kill a sweep
            return Outcome.diverged(0.0)
        return classify(traj, ball=self.ball, dwell=self.dwell)
