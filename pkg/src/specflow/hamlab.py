"""Quasi-periodic Hamiltonian flows on the torus and their section data.

The systems handled here have H(x, y) = alpha1*x + alpha2*y + P(x, y) with P
a trig polynomial, so H is exactly quasi-periodic: H(x+m, y+n) - H(x, y) =
m*alpha1 + n*alpha2 in closed form.  The flow of interest is the velocity
change X = X_H / g for a positive weight g (possibly vanishing at declared
vertex points); orbits agree with those of X_H, only the clock differs.

Integration runs in the Hamiltonian clock (dx/dtau = dH/dy, dy/dtau =
-dH/dx) with the physical clock recovered as the quadrature state dT/dtau =
g.  That keeps the right-hand side polynomial even where g vanishes, so
passages near a vertex need no special stepping.

The section machinery works with a vertical circle {x = x0} parameterized by
y, using the induced coordinate s = H(x0, y) - H(x0, 0) mod alpha2.  Since
energy is conserved and crossing the section costs exactly alpha1, the first
return acts on s as s -> s - alpha1 (mod alpha2); the recorded orientation
of the section is -1 to flag that sign convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import ConfigError, PreconditionError, VerificationError
from .trig import TrigPoly

_TWO_PI = 2.0 * math.pi

FIXED_POINT_SPEED = 1e-8
TRANSVERSALITY_FLOOR = 1e-9
VERTEX_RADIUS = 1e-9
RETURN_CAP_FACTOR = 100.0


def _compiled(poly: TrigPoly) -> tuple[tuple[float, float, float, float], ...]:
    return tuple(
        (float(kx), float(ky), c, s) for (kx, ky), (c, s) in poly.terms.items()
    )


def _scalar(terms, x: float, y: float) -> float:
    tot = 0.0
    for kx, ky, c, s in terms:
        th = _TWO_PI * (kx * x + ky * y)
        tot += c * math.cos(th) + s * math.sin(th)
    return tot


@dataclass(frozen=True)
class CriticalPoint:
    x: float
    y: float
    kind: str  # "saddle" or "center"
    grad_norm: float
    hess_det: float


@dataclass(frozen=True)
class Section:
    """Vertical transversal circle {x = x0}, parameterized by y in [0, 1)."""

    x0: float
    orientation: int = -1


class HamiltonianSystem:
    """H(x, y) = alpha1*x + alpha2*y + P(x, y) with weight g."""

    def __init__(
        self,
        alpha1: float,
        alpha2: float,
        P: TrigPoly,
        g: TrigPoly,
        vertices: tuple[tuple[float, float], ...] = (),
        critical_points: tuple[CriticalPoint, ...] = (),
    ):
        if not (alpha2 > 0):
            raise ConfigError("alpha2 must be positive")
        self.alpha1 = float(alpha1)
        self.alpha2 = float(alpha2)
        self.P = P
        self.g = g
        self.vertices = tuple((float(vx) % 1.0, float(vy) % 1.0) for vx, vy in vertices)
        self.critical_points = tuple(critical_points)
        self.Px = P.derivative(0)
        self.Py = P.derivative(1)
        self._px = _compiled(self.Px)
        self._py = _compiled(self.Py)
        self._g = _compiled(g)
        self._check_weight_positive()

    def _check_weight_positive(self, n: int = 256) -> None:
        grid = (np.arange(n) + 0.5) / n
        gx, gy = np.meshgrid(grid, grid, indexing="ij")
        vals = self.g(gx, gy)
        if self.vertices:
            clear = np.ones_like(vals, dtype=bool)
            for vx, vy in self.vertices:
                dx = np.abs(gx - vx)
                dy = np.abs(gy - vy)
                d2 = np.minimum(dx, 1 - dx) ** 2 + np.minimum(dy, 1 - dy) ** 2
                clear &= d2 > (4.0 / n) ** 2
            vals = vals[clear]
        if vals.min() <= 0:
            raise ConfigError(
                "weight g is not positive away from the declared vertices"
            )

    # -- closed forms --------------------------------------------------------------

    def H(self, x, y):
        """Hamiltonian on the plane cover (quasi-periodic, not periodic)."""
        return self.alpha1 * x + self.alpha2 * y + self.P(x, y)

    def quasi_periodicity_residual(self, m: int, n: int) -> TrigPoly:
        """H(x+m, y+n) - H(x, y) - m*alpha1 - n*alpha2 as a polynomial.

        Exactly the zero polynomial: integer translates fix every integer
        mode, so the residual has no terms at all.
        """
        return self.P.shift(int(m), int(n)) - self.P

    def grad_H(self, x: float, y: float) -> tuple[float, float]:
        return (
            self.alpha1 + _scalar(self._px, x, y),
            self.alpha2 + _scalar(self._py, x, y),
        )

    def weight_at(self, x: float, y: float) -> float:
        return _scalar(self._g, x, y)

    # -- config round trip ---------------------------------------------------------

    def to_config(self) -> dict:
        out = {
            "alpha1": self.alpha1,
            "alpha2": self.alpha2,
            "P": self.P.to_config(),
            "g": self.g.to_config(),
        }
        if self.vertices:
            out["vertices"] = [[vx, vy] for vx, vy in self.vertices]
        if self.critical_points:
            out["critical_points"] = [
                {"x": c.x, "y": c.y, "kind": c.kind} for c in self.critical_points
            ]
        return out


def system_from_config(cfg: dict) -> HamiltonianSystem:
    try:
        alpha1 = float(cfg["alpha1"])
        alpha2 = float(cfg["alpha2"])
        p_terms = cfg.get("P", [])
        g_terms = cfg["g"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad hamiltonian config: {exc}") from exc
    vertices = tuple((v[0], v[1]) for v in cfg.get("vertices", ()))
    crits = tuple(
        CriticalPoint(
            x=float(c["x"]), y=float(c["y"]), kind=str(c["kind"]),
            grad_norm=float(c.get("grad_norm", 0.0)),
            hess_det=float(c.get("hess_det", 0.0)),
        )
        for c in cfg.get("critical_points", ())
    )
    return HamiltonianSystem(
        alpha1,
        alpha2,
        TrigPoly.from_config(p_terms),
        TrigPoly.from_config(g_terms),
        vertices=vertices,
        critical_points=crits,
    )


# -- pointwise field ---------------------------------------------------------------


def vector_field(sys: HamiltonianSystem, point) -> np.ndarray:
    """X = (dH/dy, -dH/dx) / g at the point; errors where g vanishes."""
    x, y = float(point[0]), float(point[1])
    for vx, vy in sys.vertices:
        dx = abs((x - vx + 0.5) % 1.0 - 0.5)
        dy = abs((y - vy + 0.5) % 1.0 - 0.5)
        if math.hypot(dx, dy) < VERTEX_RADIUS:
            raise PreconditionError(
                f"field undefined at declared vertex ({vx}, {vy})"
            )
    gv = sys.weight_at(x, y)
    if gv <= 0:
        raise PreconditionError(f"weight g({x}, {y}) = {gv} is not positive")
    hx, hy = sys.grad_H(x, y)
    return np.array([hy, -hx]) / gv


# -- integration -------------------------------------------------------------------


@dataclass(frozen=True)
class Trajectory:
    tau: np.ndarray  # Hamiltonian-clock times at solver steps
    t: np.ndarray  # physical-clock times
    x: np.ndarray  # cover coordinates (not wrapped)
    y: np.ndarray
    h_drift: float
    clock_reached: bool


def _events(*funcs):
    out = []
    for fn, direction in funcs:
        fn.terminal = True
        fn.direction = direction
        out.append(fn)
    return out


def integrate(
    sys: HamiltonianSystem,
    point,
    duration: float,
    tol: float = 1e-10,
    max_tau: float | None = None,
) -> Trajectory:
    """Flow the point for the given physical duration.

    Runs in the Hamiltonian clock with dT/dtau = g as a quadrature state and
    stops when T reaches the duration.  Monitors energy conservation along
    the way; orbits of the weighted field coincide with Hamiltonian orbits,
    so the drift of H measures pure integration error.
    """
    x0, y0 = float(point[0]), float(point[1])
    hx, hy = sys.grad_H(x0, y0)
    if math.hypot(hx, hy) < FIXED_POINT_SPEED:
        raise PreconditionError(
            f"({x0}, {y0}) is a fixed point (|grad H| = {math.hypot(hx, hy):.2e})"
        )
    px, py, gc = sys._px, sys._py, sys._g
    a1, a2 = sys.alpha1, sys.alpha2

    def rhs(_tau, z):
        x, y = z[0], z[1]
        return (
            a2 + _scalar(py, x, y),
            -(a1 + _scalar(px, x, y)),
            _scalar(gc, x, y),
        )

    def clock(_tau, z):
        return z[2] - duration

    cap = max_tau if max_tau is not None else 200.0 * (abs(duration) + 1.0)
    sol = solve_ivp(
        rhs,
        (0.0, cap),
        (x0, y0, 0.0),
        method="DOP853",
        rtol=tol,
        atol=tol,
        events=_events((clock, 1)),
    )
    if sol.status == -1:
        raise VerificationError(
            f"integrator failed near ({sol.y[0, -1]:.6f}, {sol.y[1, -1]:.6f}): "
            f"{sol.message}"
        )
    reached = sol.status == 1
    xs, ys, ts = sol.y[0], sol.y[1], sol.y[2]
    if reached:
        ze = sol.y_events[0][0]
        xs = np.append(xs, ze[0])
        ys = np.append(ys, ze[1])
        ts = np.append(ts, ze[2])
        taus = np.append(sol.t, sol.t_events[0][0])
    else:
        taus = sol.t
    h_vals = sys.H(xs, ys)
    drift = float(np.max(np.abs(h_vals - h_vals[0])))
    return Trajectory(
        tau=taus, t=ts, x=xs, y=ys, h_drift=drift, clock_reached=reached
    )


# -- induced coordinate ------------------------------------------------------------


def _check_transversal_at(sys: HamiltonianSystem, section: Section, y: float) -> None:
    hy = sys.alpha2 + _scalar(sys._py, section.x0, y)
    if abs(hy) < TRANSVERSALITY_FLOOR:
        raise PreconditionError(
            f"section {{x = {section.x0}}} is tangent to the field at y = {y}"
        )


def check_transversal(sys: HamiltonianSystem, section: Section, samples: int = 512) -> float:
    """Least |dH/dy| over the section; errors if the field ever touches it."""
    ys = np.arange(samples) / samples
    hy = sys.alpha2 + sys.Py(section.x0, ys)
    worst = float(np.min(np.abs(hy)))
    if worst < TRANSVERSALITY_FLOOR or hy.min() * hy.max() <= 0:
        raise PreconditionError(
            f"section {{x = {section.x0}}} is not transversal to the field"
        )
    return worst


def induced_coordinate(sys: HamiltonianSystem, section: Section, param: float) -> float:
    """s = H(sigma(param)) - H(sigma(0)) reduced mod alpha2.

    The section circle is parameterized by y = param; transversality at the
    sample is checked.
    """
    _check_transversal_at(sys, section, param)
    x0 = section.x0
    s = sys.H(x0, param % 1.0) - sys.H(x0, 0.0)
    return float(s % sys.alpha2)


def induced_inverse(sys: HamiltonianSystem, section: Section, s: float) -> float:
    """The y in [0, 1) whose induced coordinate is s."""
    a2 = sys.alpha2
    s = float(s) % a2
    x0 = section.x0
    base = sys.H(x0, 0.0)

    def G(y):
        return sys.H(x0, y) - base - s

    if s == 0.0:
        return 0.0
    # G is increasing on [0, 1] (transversality) with G(0) = -s, G(1) = a2 - s
    return float(brentq(G, 0.0, 1.0, xtol=1e-15, rtol=8.9e-16))


# -- first-return map --------------------------------------------------------------


@dataclass(frozen=True)
class ReturnSample:
    s: float
    s_prime: float
    return_time: float
    tau_elapsed: float
    y_start: float
    y_end: float
    h_drift: float


def return_map(
    sys: HamiltonianSystem,
    section: Section,
    s: float,
    tol: float = 1e-10,
) -> ReturnSample:
    """First return of the induced point s to the section.

    Integrates in the Hamiltonian clock until the cover coordinate x gains
    exactly 1 (transversality makes every section crossing rightward, so the
    first crossing is the first return).  The physical time cap is
    100/alpha2; hitting it means the orbit did not come back.
    """
    y0 = induced_inverse(sys, section, s)
    _check_transversal_at(sys, section, y0)
    x0 = section.x0
    px, py, gc = sys._px, sys._py, sys._g
    a1, a2 = sys.alpha1, sys.alpha2
    cap = RETURN_CAP_FACTOR / a2

    def rhs(_tau, z):
        x, y = z[0], z[1]
        return (
            a2 + _scalar(py, x, y),
            -(a1 + _scalar(px, x, y)),
            _scalar(gc, x, y),
        )

    def crossing(_tau, z):
        return z[0] - (x0 + 1.0)

    def clock_cap(_tau, z):
        return z[2] - cap

    sol = solve_ivp(
        rhs,
        (0.0, 5000.0),
        (x0, y0, 0.0),
        method="DOP853",
        rtol=tol,
        atol=tol,
        events=_events((crossing, 1), (clock_cap, 1)),
    )
    if sol.status == -1:
        raise VerificationError(
            f"integrator failed near ({sol.y[0, -1]:.6f}, {sol.y[1, -1]:.6f}): "
            f"{sol.message}"
        )
    if len(sol.t_events[0]) == 0:
        raise PreconditionError(
            f"no return within the time cap {cap:.3f} starting from s = {s}"
        )
    ze = sol.y_events[0][0]
    tau_hit = float(sol.t_events[0][0])
    y_end = float(ze[1]) % 1.0
    s_prime = float((sys.H(x0, y_end) - sys.H(x0, 0.0)) % a2)
    h_start = sys.H(x0, y0)
    h_end = sys.H(ze[0], ze[1])
    return ReturnSample(
        s=float(s),
        s_prime=s_prime,
        return_time=float(ze[2]),
        tau_elapsed=tau_hit,
        y_start=y0,
        y_end=y_end,
        h_drift=float(abs(h_end - h_start)),
    )


# -- section profile ---------------------------------------------------------------


@dataclass(frozen=True)
class SectionProfile:
    x0: float
    orientation: int
    s: np.ndarray
    s_return: np.ndarray
    return_time: np.ndarray
    failures: tuple[tuple[int, str], ...]
    rotation_estimate: float
    beta_hat: tuple[float, ...]
    d_hat: tuple[float, ...]
    grid_size: int
    tol: float
    transversality_floor: float

    @property
    def jump_count(self) -> int:
        return len(self.beta_hat)


def _circular_mean(w: np.ndarray, period: float) -> float:
    """Mean of circle values clustered around w[0]."""
    centered = np.mod(w - w[0] + period / 2.0, period) - period / 2.0
    return float(np.mod(w[0] + centered.mean(), period))


def _one_sided_limit(times: list[float]) -> float:
    """Richardson value at offset 0 from samples at h, h/2, h/4."""
    f_h, f_h2, f_h4 = times
    return (8.0 * f_h4 - 6.0 * f_h2 + f_h) / 3.0


def section_profile(
    sys: HamiltonianSystem,
    section: Section,
    grid_size: int = 128,
    tol: float = 1e-10,
    refine_jumps: bool = True,
) -> SectionProfile:
    """Return-time profile over a uniform induced-coordinate grid.

    The grid is offset by half a cell so that symmetric jump locations do
    not land on sample points.  Jump candidates are grid steps whose
    return-time increment is an outlier; each is sharpened by bisection,
    kept only if the across-bracket gap persists as the bracket shrinks
    (a steep smooth ramp collapses under bisection, a discontinuity does
    not), and its size estimated from one-sided Richardson limits.
    """
    floor = check_transversal(sys, section)
    a2 = sys.alpha2
    h = a2 / grid_size
    s_grid = (np.arange(grid_size) + 0.5) * h
    s_ret = np.full(grid_size, np.nan)
    times = np.full(grid_size, np.nan)
    failures: list[tuple[int, str]] = []
    for j, s in enumerate(s_grid):
        try:
            r = return_map(sys, section, float(s), tol)
        except (PreconditionError, VerificationError) as exc:
            failures.append((j, str(exc)))
            continue
        s_ret[j] = r.s_prime
        times[j] = r.return_time

    good = ~np.isnan(times)
    if good.sum() < max(4, grid_size // 2):
        raise VerificationError(
            f"only {int(good.sum())}/{grid_size} grid returns succeeded"
        )
    w = np.mod(s_grid[good] - s_ret[good], a2)
    rotation = _circular_mean(w, a2)

    beta_hat: list[float] = []
    d_hat: list[float] = []
    if refine_jumps and good.all():
        diffs = np.diff(times)
        wrap = times[0] - times[-1]
        all_d = np.append(diffs, wrap)
        med = float(np.median(np.abs(all_d)))
        thr = max(4.0 * med, 1e-5)
        cand = [int(j) for j in np.nonzero(np.abs(all_d) > thr)[0]]
        if len(cand) > 64:
            order = np.argsort(-np.abs(all_d[cand]))
            cand = [cand[int(i)] for i in order[:64]]

        def time_at(sv: float) -> float:
            return return_map(sys, section, float(sv % a2), tol).return_time

        betas: list[float] = []
        for j in cand:
            lo, hi = s_grid[j], s_grid[j] + h  # right edge may wrap past a2
            f_lo, f_hi = times[j], times[(j + 1) % grid_size]
            gap0 = abs(f_hi - f_lo)
            try:
                for _ in range(16):
                    mid = 0.5 * (lo + hi)
                    f_mid = time_at(mid)
                    if abs(f_mid - f_lo) <= abs(f_mid - f_hi):
                        lo, f_lo = mid, f_mid
                    else:
                        hi, f_hi = mid, f_mid
            except (PreconditionError, VerificationError):
                continue
            if abs(f_hi - f_lo) < max(0.25 * gap0, 1e-4):
                continue  # gap collapsed: smooth ramp, not a jump
            beta = 0.5 * (lo + hi)
            if all(abs(beta - b) > 1e-5 for b in betas):
                betas.append(beta)
        betas.sort()

        for beta in betas:
            # one-sided sampling must stay clear of the neighboring jumps
            gap = min(
                (
                    min(abs(beta - b), a2 - abs(beta - b))
                    for b in betas
                    if b != beta
                ),
                default=a2,
            )
            h0 = min(0.5 * h, 0.2 * gap)
            try:
                left = _one_sided_limit(
                    [time_at(beta - h0 / k) for k in (1, 2, 4)]
                )
                right = _one_sided_limit(
                    [time_at(beta + h0 / k) for k in (1, 2, 4)]
                )
            except (PreconditionError, VerificationError):
                continue
            beta_hat.append(float(beta % a2))
            d_hat.append(float(left - right))

    return SectionProfile(
        x0=section.x0,
        orientation=section.orientation,
        s=s_grid,
        s_return=s_ret,
        return_time=times,
        failures=tuple(failures),
        rotation_estimate=rotation,
        beta_hat=tuple(beta_hat),
        d_hat=tuple(d_hat),
        grid_size=grid_size,
        tol=tol,
        transversality_floor=floor,
    )


# -- critical points and traps -----------------------------------------------------


def critical_points(
    sys: HamiltonianSystem, grid: int = 256, residual: float = 1e-10
) -> tuple[CriticalPoint, ...]:
    """Zeros of grad H located by a grid scan plus Newton polish."""
    gs = np.arange(grid) / grid
    gx, gy = np.meshgrid(gs, gs, indexing="ij")
    hx = sys.alpha1 + sys.Px(gx, gy)
    hy = sys.alpha2 + sys.Py(gx, gy)
    nrm = hx * hx + hy * hy
    local_min = np.ones_like(nrm, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di or dj:
                local_min &= nrm <= np.roll(np.roll(nrm, di, 0), dj, 1)
    seeds = np.argwhere(local_min & (nrm < 0.5))

    pxx = sys.Px.derivative(0)
    pxy = sys.Px.derivative(1)
    pyy = sys.Py.derivative(1)
    found: list[CriticalPoint] = []
    for i, j in seeds:
        x, y = gs[i], gs[j]
        for _ in range(80):
            fx = sys.alpha1 + float(sys.Px(x, y))
            fy = sys.alpha2 + float(sys.Py(x, y))
            a, b, c = float(pxx(x, y)), float(pxy(x, y)), float(pyy(x, y))
            det = a * c - b * b
            if det == 0:
                break
            dx = (-fx * c + fy * b) / det
            dy = (-fy * a + fx * b) / det
            x, y = x + dx, y + dy
            if abs(dx) + abs(dy) < 1e-15:
                break
        fx = sys.alpha1 + float(sys.Px(x, y))
        fy = sys.alpha2 + float(sys.Py(x, y))
        gn = math.hypot(fx, fy)
        if gn > residual:
            continue
        x, y = x % 1.0, y % 1.0
        dup = False
        for p in found:
            dx = abs((x - p.x + 0.5) % 1.0 - 0.5)
            dy = abs((y - p.y + 0.5) % 1.0 - 0.5)
            if math.hypot(dx, dy) < 1e-8:
                dup = True
                break
        if dup:
            continue
        a, b, c = float(pxx(x, y)), float(pxy(x, y)), float(pyy(x, y))
        det = a * c - b * b
        found.append(
            CriticalPoint(
                x=float(x),
                y=float(y),
                kind="saddle" if det < 0 else "center",
                grad_norm=gn,
                hess_det=float(det),
            )
        )
    return tuple(sorted(found, key=lambda p: (p.kind, p.x, p.y)))


@dataclass(frozen=True)
class TrapPatch:
    center: CriticalPoint
    saddle: CriticalPoint
    x_origin: float
    y_origin: float
    step: float
    mask: np.ndarray = field(repr=False)

    @property
    def area(self) -> float:
        return float(self.mask.sum()) * self.step * self.step

    def x_interval(self) -> tuple[float, float]:
        ii = np.nonzero(self.mask.any(axis=1))[0]
        return (
            self.x_origin + ii.min() * self.step,
            self.x_origin + (ii.max() + 1) * self.step,
        )

    def contains(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        n = self.mask.shape[0]
        rel_x = np.mod(xs - self.x_origin, 1.0)
        rel_y = np.mod(ys - self.y_origin, 1.0)
        ix = np.minimum((rel_x / self.step).astype(np.intp), n - 1)
        iy = np.minimum((rel_y / self.step).astype(np.intp), n - 1)
        return self.mask[ix, iy]


def trap_regions(
    sys: HamiltonianSystem,
    crits: tuple[CriticalPoint, ...] | None = None,
    patch_size: int = 1024,
) -> tuple[TrapPatch, ...]:
    """One bounded trap per center: the H-level disk cut by a saddle value.

    Works on a unit patch of the plane cover around each center, where H is
    simply a smooth function.  Each candidate saddle is lifted next to the
    center and the connected component of {sign(H - H(saddle)) = sign at
    the center} through the center is flood-filled; the nearest saddle whose
    component stays inside the patch wins.
    """
    if crits is None:
        crits = sys.critical_points or critical_points(sys)
    centers = [c for c in crits if c.kind == "center"]
    saddles = [c for c in crits if c.kind == "saddle"]
    if not centers:
        return ()
    if not saddles:
        raise VerificationError("centers found but no saddles to bound their traps")
    n = patch_size
    traps: list[TrapPatch] = []
    for c in centers:
        x_origin, y_origin = c.x - 0.5, c.y - 0.5
        gx = x_origin + (np.arange(n) + 0.5) / n
        gy = y_origin + (np.arange(n) + 0.5) / n
        Xg, Yg = np.meshgrid(gx, gy, indexing="ij")
        h_patch = sys.H(Xg, Yg)
        h_center = float(sys.H(c.x, c.y))

        def lifted_saddle_value(s: CriticalPoint) -> float:
            sx = s.x + round(c.x - s.x)
            sy = s.y + round(c.y - s.y)
            return float(sys.H(sx, sy))

        best: TrapPatch | None = None
        for s in sorted(
            saddles,
            key=lambda s: math.hypot(
                (s.x - c.x + 0.5) % 1.0 - 0.5, (s.y - c.y + 0.5) % 1.0 - 0.5
            ),
        ):
            h_s = lifted_saddle_value(s)
            if h_center == h_s:
                continue
            sign_mask = (h_patch > h_s) if h_center > h_s else (h_patch < h_s)
            labels, _ = ndimage.label(sign_mask)
            lc = labels[n // 2, n // 2]
            if lc == 0:
                continue
            comp = labels == lc
            touches = (
                comp[0, :].any()
                or comp[-1, :].any()
                or comp[:, 0].any()
                or comp[:, -1].any()
            )
            if touches:
                continue
            best = TrapPatch(
                center=c,
                saddle=s,
                x_origin=x_origin,
                y_origin=y_origin,
                step=1.0 / n,
                mask=comp,
            )
            break
        if best is None:
            raise VerificationError(
                f"no bounded trap found around center ({c.x:.6f}, {c.y:.6f})"
            )
        traps.append(best)
    return tuple(traps)


# -- area identity -----------------------------------------------------------------


@dataclass(frozen=True)
class AreaIdentityReport:
    lhs_estimate: float
    lhs_radius: float
    rhs_quadrature: float
    discrepancy: float
    ec_fraction: float
    trap_count: int
    n_samples: int
    seed: int


def area_identity_check(
    sys: HamiltonianSystem,
    section: Section,
    profile: SectionProfile,
    mc_samples: int = 1_000_000,
    seed: int = 0,
) -> AreaIdentityReport:
    """Monte Carlo integral of g over the minimal component vs the profile.

    The right-hand side is the periodic rectangle rule over the return-time
    profile (the grid is uniform in the induced coordinate, so the rule is
    the trapezoid rule for the periodic extension).  Membership in the
    minimal component means lying outside every flood-filled trap.
    """
    if profile.failures:
        raise PreconditionError(
            f"profile has {len(profile.failures)} failed grid points"
        )
    if mc_samples < 1000:
        raise PreconditionError("mc_samples must be at least 1000")
    rng = np.random.default_rng(seed)
    xs = rng.random(mc_samples)
    ys = rng.random(mc_samples)
    traps = trap_regions(sys)
    in_ec = np.ones(mc_samples, dtype=bool)
    for trap in traps:
        in_ec &= ~trap.contains(xs, ys)
    vals = sys.g(xs, ys) * in_ec
    lhs = float(vals.mean())
    radius = 1.96 * float(vals.std()) / math.sqrt(mc_samples)
    rhs = float(profile.return_time.mean() * sys.alpha2)
    return AreaIdentityReport(
        lhs_estimate=lhs,
        lhs_radius=radius,
        rhs_quadrature=rhs,
        discrepancy=abs(lhs - rhs) / abs(rhs),
        ec_fraction=float(in_ec.mean()),
        trap_count=len(traps),
        n_samples=mc_samples,
        seed=seed,
    )
