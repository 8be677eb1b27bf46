"""Numerical certificates for the chart algebra, controllers and flows.

Every suite draws its own samples from a seeded generator, checks one
invariant at a fixed tolerance, and reports the worst error observed.
The suites double as the acceptance checks wired into the command line.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import blowup, control, normal_form
from .closedloop import Thm2, build_closed_loop
from .sim import config_for, integrate
from .systems import build_planar_example

__all__ = ["SuiteResult", "SUITES", "run_suites"]


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    max_err: float
    tol: float
    n_samples: int
    detail: str = ""

    def line(self) -> str:
        status = "ok" if self.passed else "FAIL"
        extra = f" {self.detail}" if self.detail else ""
        return (
            f"{status}\t{self.name}\tmax_err={self.max_err:.3e}"
            f"\ttol={self.tol:.1e}\tn={self.n_samples}{extra}"
        )


def _rel(err: float, scale: float) -> float:
    return err / max(1.0, abs(scale))


def _random_p2(rng: np.random.Generator, k: int) -> control.Theorem2Params:
    return control.Theorem2Params(
        c=rng.uniform(-2.0, 2.0, k - 1),
        a=rng.uniform(0.1, 10.0, k - 1),
        b=rng.uniform(0.1, 10.0),
    )


@dataclass(frozen=True)
class _AffineField:
    """Picklable smooth slow drift with fixed random coefficients."""

    const: tuple[float, ...]
    lin_x: tuple[tuple[float, ...], ...]
    lin_z: tuple[float, ...]
    lin_eps: tuple[float, ...]

    def __call__(self, x, z, eps):
        out = np.array(self.const)
        out += np.asarray(self.lin_x) @ np.asarray(x, dtype=float)
        out += np.asarray(self.lin_z) * z + np.asarray(self.lin_eps) * eps
        return out


def _random_field(rng: np.random.Generator, m: int) -> _AffineField:
    return _AffineField(
        const=tuple(rng.uniform(-2, 2, m)),
        lin_x=tuple(tuple(row) for row in rng.uniform(-1, 1, (m, m))),
        lin_z=tuple(rng.uniform(-1, 1, m)),
        lin_eps=tuple(rng.uniform(-1, 1, m)),
    )


def suite_quasihomogeneity(rng: np.random.Generator) -> SuiteResult:
    """g(lam^(k-i+1) x_i, lam z) = lam^k g(x, z) over random points.

    Error is taken relative to the scaled term magnitudes so that points
    where g itself nearly cancels do not inflate the metric.
    """
    tol, worst = 1e-11, 0.0
    n = 1000
    for _ in range(n):
        k = int(rng.integers(2, 7))
        x = rng.uniform(-2, 2, k - 1)
        z = rng.uniform(-2, 2)
        lam = rng.uniform(0.1, 3.0)
        scaled_x = np.array([lam ** (k - i) * x[i] for i in range(k - 1)])
        lhs = normal_form.eval_g(scaled_x, lam * z, k)
        rhs = lam**k * normal_form.eval_g(x, z, k)
        scale = lam**k * (
            1.0 + abs(z) ** k
            + sum(abs(x[i]) * abs(z) ** i for i in range(k - 1))
        )
        worst = max(worst, abs(lhs - rhs) / scale)
    return SuiteResult("quasihomogeneity", worst <= tol, worst, tol, n)


def suite_fast_field_horner(rng: np.random.Generator) -> SuiteResult:
    """Direct power-sum evaluation of g against an independent Horner form."""
    tol, worst = 1e-14, 0.0
    n = 1000
    for _ in range(n):
        k = int(rng.integers(2, 7))
        x = rng.uniform(-3, 3, k - 1)
        z = rng.uniform(-3, 3)
        coeffs = np.zeros(k + 1)
        coeffs[: k - 1] = x
        coeffs[k] = 1.0
        acc = 0.0
        for c in coeffs[::-1]:
            acc = acc * z + c
        worst = max(worst, _rel(abs(normal_form.eval_g(x, z, k) + acc), acc))
    return SuiteResult("fast-field-horner", worst <= tol, worst, tol, n)


def suite_slow_fast_scaling(rng: np.random.Generator) -> SuiteResult:
    """Slow-time field equals the fast-time field divided by epsilon."""
    tol, worst = 1e-14, 0.0
    n = 200
    for _ in range(n):
        k = int(rng.integers(2, 7))
        eps = float(rng.uniform(1e-3, 1.0))
        sysm = normal_form.NormalFormSystem(k=k, epsilon=eps,
                                            slow_f=_random_field(rng, k - 1))
        s = normal_form.State(x=rng.uniform(-2, 2, k - 1), z=rng.uniform(-2, 2))
        u = normal_form.ControlInput(rng.uniform(-2, 2, k - 1))
        dxf, dzf = normal_form.eval_rhs_fast(sysm, s, u)
        dxs, dzs = normal_form.eval_rhs_slow(sysm, s, u)
        err = max(
            float(np.max(np.abs(dxs - dxf / eps), initial=0.0)),
            abs(dzs - dzf / eps),
        )
        worst = max(worst, _rel(err, dzs))
    return SuiteResult("slow-fast-scaling", worst <= tol, worst, tol, n)


def suite_degeneracy_origin(rng: np.random.Generator) -> SuiteResult:
    """The origin has full degeneracy order k for every k in 2..6."""
    ks = range(2, 7)
    bad = [
        k for k in ks
        if normal_form.degeneracy_order(np.zeros(k - 1), 0.0, k) != k
    ]
    return SuiteResult(
        "degeneracy-origin", not bad, float(len(bad)), 0.0, len(list(ks)),
        detail=f"failed k={bad}" if bad else "",
    )


def suite_chart_roundtrip(rng: np.random.Generator) -> SuiteResult:
    """Blow-down of blow-up is the identity, in both charts."""
    tol, worst = 1e-12, 0.0
    n = 1000
    for _ in range(n):
        k = int(rng.integers(2, 7))
        x = rng.uniform(-2, 2, k - 1)
        eps = float(rng.uniform(1e-6, 1.0))
        z = rng.uniform(-2, 2)
        s = normal_form.State(x=x, z=z)
        back, eps_back = blowup.from_family_chart(
            blowup.to_family_chart(s, eps, k), k
        )
        err = max(
            float(np.max(np.abs(back.x - x))), abs(back.z - z), abs(eps_back - eps)
        )
        worst = max(worst, _rel(err, float(np.max(np.abs(x), initial=abs(z)))))
        zneg = -abs(z) - 0.05
        s2 = normal_form.State(x=x, z=zneg)
        back2, eps2 = blowup.from_directional_zneg(
            blowup.to_directional_zneg(s2, eps, k), k
        )
        err2 = max(
            float(np.max(np.abs(back2.x - x))), abs(back2.z - zneg), abs(eps2 - eps)
        )
        worst = max(worst, _rel(err2, float(np.max(np.abs(x), initial=abs(zneg)))))
    return SuiteResult("chart-roundtrip", worst <= tol, worst, tol, 2 * n)


def suite_chart_compatibility(rng: np.random.Generator) -> SuiteResult:
    """For z < 0 both charts describe the same point after blow-down."""
    tol, worst = 1e-12, 0.0
    n = 500
    for _ in range(n):
        k = int(rng.integers(2, 7))
        x = rng.uniform(-2, 2, k - 1)
        z = -float(rng.uniform(0.05, 2.0))
        eps = float(rng.uniform(1e-6, 1.0))
        s = normal_form.State(x=x, z=z)
        a, eps_a = blowup.from_family_chart(blowup.to_family_chart(s, eps, k), k)
        b, eps_b = blowup.from_directional_zneg(
            blowup.to_directional_zneg(s, eps, k), k
        )
        err = max(
            float(np.max(np.abs(a.x - b.x))), abs(a.z - b.z), abs(eps_a - eps_b)
        )
        worst = max(worst, _rel(err, float(np.max(np.abs(x), initial=abs(z)))))
    return SuiteResult("chart-compatibility", worst <= tol, worst, tol, n)


def suite_blowdown_identity(rng: np.random.Generator) -> SuiteResult:
    """The family-chart controller blows down to the original controller."""
    tol, worst = 1e-11, 0.0
    n = 1000
    for _ in range(n):
        k = int(rng.integers(2, 7))
        p = _random_p2(rng, k)
        x = rng.uniform(-2, 2, k - 1)
        z = rng.uniform(-2, 2)
        eps = float(rng.uniform(1e-6, 1.0))
        s = normal_form.State(x=x, z=z)
        direct = control.thm2_control(s, eps, k, p).u
        chart = control.chart_controller_family(
            blowup.to_family_chart(s, eps, k), k, p
        )
        for d, ch in zip(direct, chart):
            worst = max(worst, _rel(abs(d - ch), d))
    return SuiteResult("blowdown-identity", worst <= tol, worst, tol, n)


def suite_eigenvalues(rng: np.random.Generator) -> SuiteResult:
    """Closed-form spectrum is Hurwitz and matches a numerical eigensolver."""
    tol, worst = 1e-9, 0.0
    n = 200
    hurwitz_ok = True
    for _ in range(n):
        k = int(rng.integers(2, 7))
        p = control.Theorem2Params(
            c=np.zeros(k - 1),
            a=rng.uniform(1e-6, 10.0, k - 1),
            b=rng.uniform(1e-6, 10.0),
        )
        lam = control.eigenvalues_origin(k, p)
        if np.any(lam.real >= 0):
            hurwitz_ok = False
        numeric = list(np.linalg.eigvals(control.closed_loop_jacobian_origin(k, p)))
        for lv in lam:
            j = int(np.argmin([abs(lv - nv) for nv in numeric]))
            worst = max(worst, abs(lv - numeric.pop(j)))
    return SuiteResult(
        "eigenvalues", worst <= tol and hurwitz_ok, worst, tol, n,
        detail="" if hurwitz_ok else "non-Hurwitz draw found",
    )


def suite_jacobian_fd(rng: np.random.Generator) -> SuiteResult:
    """Central differences of the sphere-restricted closed loop reproduce J."""
    tol, worst = 1e-6, 0.0
    h = 1e-6
    n = 0
    for k in (2, 3, 4):
        p = _random_p2(rng, k)
        sysm = normal_form.NormalFormSystem(
            k=k, epsilon=1e-2, slow_f=_random_field(rng, k - 1)
        )
        # the drift constants must match f(0,0,0) for the origin to be fixed
        f0 = sysm.slow_f(np.zeros(k - 1), 0.0, 0.0)
        p = control.Theorem2Params(c=f0, a=p.a, b=p.b)

        def field(v: np.ndarray) -> np.ndarray:
            chart = blowup.FamilyChartState(r_bar=0.0, x_bar=v[:-1], z_bar=v[-1])
            _, dx, dz = control.closed_loop_rhs_family(chart, sysm, p)
            return np.append(dx, dz)

        J = control.closed_loop_jacobian_origin(k, p)
        for j in range(k):
            e = np.zeros(k)
            e[j] = h
            col = (field(e) - field(-e)) / (2 * h)
            worst = max(worst, float(np.max(np.abs(col - J[:, j]))))
            n += 1
    return SuiteResult("jacobian-fd", worst <= tol, worst, tol, n)


def suite_compensation_chart_form(rng: np.random.Generator) -> SuiteResult:
    """Compensation blows up to K_i rho^(k-i+2) (chi*_i - chi_i) for z < 0."""
    tol, worst = 1e-11, 0.0
    n = 1000
    for _ in range(n):
        k = int(rng.integers(2, 7))
        chi_star = np.zeros(k - 1)
        chi_star[0] = -float(rng.uniform(1.01, 4.0))
        p3 = control.Theorem3Params(K=rng.uniform(0.0, 20.0, k - 1), chi_star=chi_star)
        x = rng.uniform(-2, 2, k - 1)
        z = -float(rng.uniform(0.05, 2.0))
        s = normal_form.State(x=x, z=z)
        w = control.thm3_compensation(s, k, p3).u
        ch = blowup.to_directional_zneg(s, 0.0, k)
        for i in range(k - 1):
            expected = p3.K[i] * ch.rho ** (k - i + 1) * (chi_star[i] - ch.chi[i])
            worst = max(worst, _rel(abs(w[i] - expected), expected))
    return SuiteResult("compensation-chart-form", worst <= tol, worst, tol, n)


def suite_scale_behavior(rng: np.random.Generator) -> SuiteResult:
    """Linear-part gain magnitude scales as eps^(-k/(2k-1))."""
    tol, worst = 1e-12, 0.0
    n = 100
    for _ in range(n):
        k = int(rng.integers(2, 7))
        p = control.Theorem2Params(
            c=np.zeros(k - 1), a=rng.uniform(0.1, 5.0, k - 1), b=1.0
        )
        x = rng.uniform(0.1, 2.0, k - 1)
        eps = float(rng.uniform(1e-4, 1e-1))
        s = normal_form.State(x=x, z=0.0)
        hi = np.linalg.norm(control.thm2_control(s, eps / 8.0, k, p).u)
        lo = np.linalg.norm(control.thm2_control(s, eps, k, p).u)
        expected = 8.0 ** (k / (2 * k - 1))
        worst = max(worst, abs(hi / lo - expected) / expected)
    return SuiteResult("scale-behavior", worst <= tol, worst, tol, n)


def _directional_pushforward_error(
    rng: np.random.Generator, k: int
) -> float:
    """One tangency sample: J_blowdown @ chart field vs fast field / rho^(k-1)."""
    sysm = normal_form.NormalFormSystem(
        k=k, epsilon=1.0, slow_f=_random_field(rng, k - 1)
    )
    p2 = _random_p2(rng, k)
    chi_star = np.zeros(k - 1)
    chi_star[0] = -2.0
    p3 = control.Theorem3Params(K=rng.uniform(0.0, 5.0, k - 1), chi_star=chi_star)

    def ctrl(x, z, eps):
        return (
            control._thm2_u(np.asarray(x), z, eps, k, p2)
            + control._thm3_w(np.asarray(x), z, k, p3)
        )

    # rho <= 1 keeps the rho^(2k-1) powers from amplifying the finite
    # difference truncation error past the certificate tolerance
    rho = float(rng.uniform(0.2, 1.0))
    chi = rng.uniform(-1.5, 1.5, k - 1)
    mu = float(rng.uniform(0.1, 1.5))
    c = blowup.DirectionalChartState(rho=rho, chi=chi, mu=mu)
    drho, dchi, dmu = blowup.desing_rhs_directional(c, sysm, ctrl)
    chart_rhs = np.concatenate(([drho], dchi, [dmu]))

    def blowdown_vec(v: np.ndarray) -> np.ndarray:
        cs = blowup.DirectionalChartState(rho=v[0], chi=v[1:k], mu=v[k])
        st, eps = blowup.from_directional_zneg(cs, k)
        return np.concatenate((st.x, [st.z, eps]))

    v0 = np.concatenate(([rho], chi, [mu]))
    J = np.empty((k + 1, k + 1))
    for j in range(k + 1):
        step = 1e-6 * max(1.0, abs(v0[j]))
        e = np.zeros(k + 1)
        e[j] = step
        J[:, j] = (blowdown_vec(v0 + e) - blowdown_vec(v0 - e)) / (2 * step)

    pushed = J @ chart_rhs
    st, eps = blowup.from_directional_zneg(c, k)
    sys_eps = normal_form.NormalFormSystem(k=k, epsilon=eps, slow_f=sysm.slow_f)
    dx, dz = normal_form.eval_rhs_fast(
        sys_eps, st, normal_form.ControlInput(ctrl(st.x, st.z, eps))
    )
    fast = np.concatenate((dx, [dz, 0.0]))
    err = np.abs(rho ** (k - 1) * pushed - fast)
    scale = max(1.0, float(np.max(np.abs(fast))))
    return float(np.max(err)) / scale


def suite_tangency(rng: np.random.Generator) -> SuiteResult:
    """Directional chart field is the original field up to the rho^(k-1) rescale.

    Validates the chain-rule form of the radial rate F(chi), whose printed
    summation bound is dimensionally impossible.
    """
    tol, worst = 1e-8, 0.0
    n = 500
    for i in range(n):
        k = (2, 4, 6)[i % 3]
        worst = max(worst, _directional_pushforward_error(rng, k))
    return SuiteResult("tangency", worst <= tol, worst, tol, n)


def suite_rhs_continuity_r0(rng: np.random.Generator) -> SuiteResult:
    """Closed-loop family field converges to its r_bar = 0 value as r_bar -> 0."""
    tol = 1e-6
    worst = 0.0
    n = 0
    for k in (2, 3, 4):
        sysm = normal_form.NormalFormSystem(
            k=k, epsilon=1e-2, slow_f=_random_field(rng, k - 1)
        )
        p = _random_p2(rng, k)
        x_bar = rng.uniform(-1, 1, k - 1)
        z_bar = float(rng.uniform(-1, 1))

        def value(r: float) -> np.ndarray:
            chart = blowup.FamilyChartState(r_bar=r, x_bar=x_bar, z_bar=z_bar)
            _, dx, dz = control.closed_loop_rhs_family(chart, sysm, p)
            return np.append(dx, dz)

        at_zero = value(0.0)
        prev = None
        for j in range(1, 13):
            dev = float(np.max(np.abs(value(10.0**-j) - at_zero)))
            if prev is not None and dev > prev + 1e-12:
                worst = max(worst, dev)
            prev = dev
            n += 1
        worst = max(worst, prev)  # final deviation must be tiny
    return SuiteResult("rhs-continuity-r0", worst <= tol, worst, tol, n)


def _draw_surviving_ic(
    rng: np.random.Generator, rhs, cfg, radius: float = 1.0, tries: int = 50
) -> np.ndarray:
    """Random IC with norm <= radius whose flow exists on the whole window.

    Escaping initial conditions leave in finite time (well before the
    comparison window ends), so conditioning on existence is required for
    a comparison 'over t in [0, T]' to be meaningful.
    """
    for _ in range(tries):
        ic = rng.uniform(-radius, radius, 2)
        if np.linalg.norm(ic) > radius:
            continue
        if not integrate(rhs, ic, cfg).outcome.is_diverged:
            return ic
    raise RuntimeError("no surviving initial condition found")


def suite_conjugacy(rng: np.random.Generator) -> SuiteResult:
    """Blow-down of the desingularized closed-loop flow matches direct integration.

    k = 2, eps = 0.01: the chart trajectory at desingularized time s equals
    the slow-time trajectory at t = eps^(2/3) s after blow-down.
    """
    tol = 1e-5
    k, eps = 2, 0.01
    sysm = build_planar_example(eps)
    p = control.Theorem2Params(c=[1.0], a=[1.0], b=3.0)
    tau = blowup.family_time_rescale(eps, k)
    t_final = 1.0

    rhs, _, _ = build_closed_loop(sysm, Thm2(p))
    cfg_direct = config_for(eps, t_final, rtol=1e-10, atol=1e-12,
                            record_stride=0.1)
    cfg_chart = config_for(eps, t_final / tau, rtol=1e-10, atol=1e-12,
                           max_step=1e-2, record_stride=0.1 / tau)

    worst = 0.0
    n = 0
    for _ in range(3):
        ic = _draw_surviving_ic(rng, rhs, cfg_direct)
        direct = integrate(rhs, ic, cfg_direct)
        chart0 = blowup.to_family_chart(
            normal_form.State(x=ic[:1], z=ic[1]), eps, k
        )
        r_bar = chart0.r_bar

        def chart_rhs(t, y, r_bar=r_bar):
            chart = blowup.FamilyChartState(r_bar=r_bar, x_bar=y[:1], z_bar=y[1])
            _, dx, dz = control.closed_loop_rhs_family(chart, sysm, p)
            return np.array([dx[0], dz])

        chart_traj = integrate(
            chart_rhs, np.array([chart0.x_bar[0], chart0.z_bar]), cfg_chart
        )
        for i in range(min(len(chart_traj), len(direct))):
            st, _ = blowup.from_family_chart(
                blowup.FamilyChartState(
                    r_bar=r_bar,
                    x_bar=chart_traj.states[i, :1],
                    z_bar=chart_traj.states[i, 1],
                ),
                k,
            )
            blown = np.array([st.x[0], st.z])
            err = float(np.max(np.abs(blown - direct.states[i])))
            worst = max(worst, _rel(err, float(np.max(np.abs(direct.states[i])))))
            n += 1
    return SuiteResult("conjugacy", worst <= tol, worst, tol, n)


SUITES: dict[str, Callable[[np.random.Generator], SuiteResult]] = {
    "quasihomogeneity": suite_quasihomogeneity,
    "fast-field-horner": suite_fast_field_horner,
    "slow-fast-scaling": suite_slow_fast_scaling,
    "degeneracy-origin": suite_degeneracy_origin,
    "chart-roundtrip": suite_chart_roundtrip,
    "chart-compatibility": suite_chart_compatibility,
    "blowdown-identity": suite_blowdown_identity,
    "eigenvalues": suite_eigenvalues,
    "jacobian-fd": suite_jacobian_fd,
    "compensation-chart-form": suite_compensation_chart_form,
    "scale-behavior": suite_scale_behavior,
    "tangency": suite_tangency,
    "rhs-continuity-r0": suite_rhs_continuity_r0,
    "conjugacy": suite_conjugacy,
}


def run_suites(seed: int = 0, names: list[str] | None = None) -> list[SuiteResult]:
    """Run the requested suites (all by default), each with a fresh seeded rng."""
    selected = names or list(SUITES)
    unknown = [n for n in selected if n not in SUITES]
    if unknown:
        raise ValueError(f"unknown suite(s): {', '.join(unknown)}")
    results = []
    for name in selected:
        rng = np.random.default_rng(seed)
        try:
            results.append(SUITES[name](rng))
        except Exception as exc:  # noqa: BLE001 - a crashed suite is a failure
            results.append(
                SuiteResult(name=name, passed=False, max_err=float("inf"),
                            tol=0.0, n_samples=0, detail=f"raised: {exc}")
            )
    return results
