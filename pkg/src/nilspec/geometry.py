"""Left-invariant metrics, adapted frames, geodesic flow, and the submersion.

The frame respects the filtration nu + zeta + g^(2); geodesics integrate in
first-kind exponential coordinates with the left-trivialized velocity kept
in frame coefficients.  Two right-hand sides are provided: the general
left-trivialized form and the explicit three-step system, kept as an
oracle pair.  Exact rational data enters only at frame construction; all
trajectory work is floating point.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .algebra import StructureConstants, Subspace, quotient_algebra
from .group import GroupElement
from .rational import Vec, det, frac, mat, mat_inv, mat_mul, mat_vec, transpose, vec


class NotPositiveDefinite(ValueError):
    pass


class StepMismatch(ValueError):
    pass


class ToleranceNotMet(RuntimeError):
    pass


class NotHorizontal(UserWarning):
    pass


@dataclass(frozen=True)
class MetricSpec:
    """Inner product on the algebra, exact symmetric positive-definite gram."""

    gram: tuple

    def __post_init__(self):
        g = mat(self.gram)
        object.__setattr__(self, "gram", g)
        n = len(g)
        for i in range(n):
            for j in range(i):
                if g[i][j] != g[j][i]:
                    raise NotPositiveDefinite("gram not symmetric")
        for k in range(1, n + 1):
            minor = tuple(tuple(g[i][j] for j in range(k)) for i in range(k))
            if det(minor) <= 0:
                raise NotPositiveDefinite(f"leading minor {k} not positive")

    @classmethod
    def from_orthonormal_basis(cls, rows) -> "MetricSpec":
        """Metric declaring the given row vectors orthonormal: gram = (B^T B)^-1."""
        b = mat(rows)
        return cls(mat_inv(mat_mul(transpose(b), b)))

    def inner(self, u: Vec, v: Vec) -> Fraction:
        total = Fraction(0)
        for ui, row in zip(u, self.gram):
            if ui:
                for gij, vj in zip(row, v):
                    if gij and vj:
                        total += ui * gij * vj
        return total

    def norm2(self, u: Vec) -> Fraction:
        return self.inner(u, u)


def _extend_exact_basis(dim: int, stages) -> list[tuple]:
    """Ordered exact vectors whose prefixes span each filtration stage."""
    chosen: list[tuple] = []
    span = Subspace(dim)
    for stage_rows in stages:
        for r in stage_rows:
            if not span.contains(r):
                chosen.append(tuple(r))
                span = Subspace(dim, list(span.rows) + [list(r)])
    return chosen


class AdaptedFrame:
    """Orthonormal frame grouped as nu, zeta, g^(2) blocks with bracket constants.

    a[k,i,j], b[t,i,j] carry [X_i, X_j]; c[t,i,k] carries [X_i, Z_k].  Frame
    vectors are columns of `basis` (structural coordinates, floats).
    """

    def __init__(self, sc: StructureConstants, metric: MetricSpec, orthonormal_rows=None):
        if sc.step > 3:
            raise StepMismatch("adapted frames require step <= 3")
        self.sc = sc
        self.metric = metric
        n = sc.dim
        series = sc.derived_series
        v1 = series[0] if len(series) >= 2 else Subspace(n)
        v2 = series[1] if len(series) >= 3 else Subspace(n)
        self.dim_w = v2.dim
        self.dim_z = v1.dim - v2.dim
        self.dim_x = n - v1.dim
        gram_f = np.array([[float(x) for x in row] for row in metric.gram])
        if orthonormal_rows is not None:
            rows = self._verify_adapted_rows(mat(orthonormal_rows), v1, v2)
        else:
            ident = [tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n)]
            ordered = _extend_exact_basis(n, [v2.rows, v1.rows, ident])
            frame_rows = []
            raw = np.array([[float(x) for x in v] for v in ordered])  # rows = vectors
            for row in raw:
                w = row.copy()
                for prev in frame_rows:
                    w = w - (prev @ gram_f @ w) * prev
                nrm = float(np.sqrt(w @ gram_f @ w))
                frame_rows.append(w / nrm)
            # reorder blocks to (nu, zeta, w) so indices follow the X, Z, W layout
            wblk = frame_rows[: self.dim_w]
            zblk = frame_rows[self.dim_w: self.dim_w + self.dim_z]
            xblk = frame_rows[self.dim_w + self.dim_z:]
            rows = np.array(xblk + zblk + wblk)
        self.basis = rows.T.copy()               # columns = frame vectors
        self.basis_inv = np.linalg.inv(self.basis)
        self.gram_float = gram_f
        self.condition_number = float(np.linalg.cond(self.basis))
        self.bracket_tensor = np.zeros((n, n, n))
        for i in range(n):
            for j in range(n):
                bij = sc.bracket(sc.basis_vector(i), sc.basis_vector(j))
                for k in range(n):
                    self.bracket_tensor[i, j, k] = float(bij[k])
        # frame structure constants F[a,b,c]: [E_a, E_b] = sum_c F[a,b,c] E_c
        br = np.einsum("ia,jb,ijk->abk", self.basis, self.basis, self.bracket_tensor)
        self.frame_struct = np.einsum("abk,kc->abc", br, self.gram_float @ self.basis)
        J, K, T = self.dim_x, self.dim_z, self.dim_w
        self.a = self.frame_struct[:J, :J, J:J + K].transpose(2, 0, 1).copy()
        self.b = self.frame_struct[:J, :J, J + K:].transpose(2, 0, 1).copy()
        self.c = self.frame_struct[:J, J:J + K, J + K:].transpose(2, 0, 1).copy()

    def _verify_adapted_rows(self, rows, v1: Subspace, v2: Subspace) -> np.ndarray:
        """Exact checks that supplied orthonormal rows respect the filtration."""
        n = self.sc.dim
        if len(rows) != n:
            raise ValueError("orthonormal basis must have full dimension")
        for a, ra in enumerate(rows):
            for b, rb in enumerate(rows):
                if self.metric.inner(ra, rb) != Fraction(int(a == b)):
                    raise ValueError("supplied rows are not orthonormal for the metric")
        for a, ra in enumerate(rows):
            if a < self.dim_x:
                if v1.contains(ra):
                    raise ValueError(f"row {a} should be outside the derived algebra")
            elif a < self.dim_x + self.dim_z:
                if not v1.contains(ra) or v2.contains(ra):
                    raise ValueError(f"row {a} should span the zeta block")
            elif not v2.contains(ra):
                raise ValueError(f"row {a} should lie in g^(2)")
        return np.array([[float(x) for x in r] for r in rows])

    @property
    def dim(self) -> int:
        return self.sc.dim

    def coeffs(self, v_struct) -> np.ndarray:
        """Frame coefficients of a structural-coordinate vector."""
        return np.asarray(v_struct, dtype=float) @ self.gram_float @ self.basis

    def to_struct(self, coeffs) -> np.ndarray:
        return self.basis @ np.asarray(coeffs, dtype=float)

    def bracket_struct(self, u, v) -> np.ndarray:
        return np.einsum("i,j,ijk->k", u, v, self.bracket_tensor)

    def speed(self, coeffs) -> float:
        return float(np.linalg.norm(coeffs))


def koszul_connection(frame: AdaptedFrame, u_coeffs, v_coeffs) -> np.ndarray:
    """nabla_U V in frame coefficients for constant-coefficient frame fields.

    <nabla_V Y, U> = (<[U,V],Y> + <[U,Y],V> + <[V,Y],U>) / 2 specialises to
    frame structure constants here.
    """
    u = np.asarray(u_coeffs, dtype=float)
    v = np.asarray(v_coeffs, dtype=float)
    f = frame.frame_struct
    t1 = np.einsum("cab,a,b->c", f, u, v)   # <[E_c, U], V>
    t2 = np.einsum("cba,a,b->c", f, u, v)   # <[E_c, V], U>
    t3 = np.einsum("abc,a,b->c", f, u, v)   # <[U, V], E_c>
    return 0.5 * (t1 + t2 + t3)


def geodesic_rhs_general(frame: AdaptedFrame, pos_struct, v_coeffs):
    """Left-trivialized geodesic equations: <v', u> = <v, [v, u]>.

    Position is updated through the inverse exponential differential,
    truncated exactly for step <= 3.
    """
    v = np.asarray(v_coeffs, dtype=float)
    vdot = np.einsum("acb,a,b->c", frame.frame_struct, v, v)
    v_struct = frame.to_struct(v)
    xi = np.asarray(pos_struct, dtype=float)
    br1 = frame.bracket_struct(xi, v_struct)
    br2 = frame.bracket_struct(xi, br1)
    xidot = v_struct + 0.5 * br1 + br2 / 12.0
    return xidot, vdot


def geodesic_rhs_threestep(frame: AdaptedFrame, pos_frame, vbar):
    """The explicit three-step system in adapted coordinates.

    pos_frame are the exponential coordinates (x, z, w) in the adapted
    frame; vbar = (xbar, zbar, wbar) is the initial frame velocity of the
    geodesic through the identity.  Returns d/ds (x, z, w).
    """
    J, K, T = frame.dim_x, frame.dim_z, frame.dim_w
    A, B, C = frame.a, frame.b, frame.c
    p = np.asarray(pos_frame, dtype=float)
    x, z = p[:J], p[J:J + K]
    vb = np.asarray(vbar, dtype=float)
    xbar, zbar, wbar = vb[:J], vb[J:J + K], vb[J + K:]
    xdot = xbar.copy()
    if K:
        xdot -= np.einsum("l,kjl,k->j", x, A, zbar)
    if T:
        xdot -= np.einsum("l,tjl,t->j", x, B, wbar)
        if K:
            xdot -= np.einsum("k,tjk,t->j", z, C, wbar)
            xdot -= 0.5 * np.einsum("i,l,t,tik,kjl->j", x, x, wbar, C, A)
    zdot = zbar.copy()
    if K:
        zdot += 0.5 * np.einsum("i,j,kij->k", x, xdot, A)
        if T:
            zdot += np.einsum("j,t,tjk->k", x, wbar, C)
    wdot = wbar.copy()
    if T:
        wdot += 0.5 * np.einsum("i,j,tij->t", x, xdot, B)
        if K:
            wdot -= 0.5 * np.einsum("j,k,tjk->t", xdot, z, C)
            wdot += 0.5 * np.einsum("j,k,tjk->t", x, zdot, C)
            wdot -= np.einsum("i,j,l,tik,klj->t", x, xdot, x, C, A) / 6.0
    return np.concatenate([xdot, zdot, wdot])


def left_invariant_field_matrix(frame: AdaptedFrame, pos_frame) -> np.ndarray:
    """T with coordinate velocity = T(pos) @ frame velocity.

    Columns are the left-invariant frame fields written in exponential
    coordinates; equals id + ad_xi/2 + ad_xi^2/12 in frame coordinates.
    """
    n = frame.dim
    xi_struct = frame.to_struct(np.asarray(pos_frame, dtype=float))
    ad = np.einsum("i,ijk->jk", xi_struct, frame.bracket_tensor).T  # ad_xi matrix
    t_struct = np.eye(n) + 0.5 * ad + (ad @ ad) / 12.0
    return frame.basis_inv @ t_struct @ frame.basis


def frame_position(frame: AdaptedFrame, pos_struct) -> np.ndarray:
    return frame.basis_inv @ np.asarray(pos_struct, dtype=float)


@dataclass
class Trajectory:
    s: np.ndarray
    pos_struct: np.ndarray      # shape (N+1, n)
    v_coeffs: np.ndarray        # shape (N+1, n) frame velocity coefficients
    speed_drift: float
    step_size: float

    def index_at(self, s: float) -> int:
        i = int(round(s / self.step_size))
        if not (0 <= i < len(self.s)) or abs(self.s[i] - s) > 1e-9 + 1e-9 * abs(s):
            raise ValueError("sample time not on the trajectory grid")
        return i


def state_at(frame: AdaptedFrame, traj: Trajectory, t: float):
    """(position, velocity) at an arbitrary time: one partial RK4 substep
    from the nearest grid state below t."""
    n = frame.dim
    if t < -1e-12 or t > traj.s[-1] + 1e-12:
        raise ValueError("time outside the trajectory span")
    i = min(int(t / traj.step_size), len(traj.s) - 1)
    dt = t - traj.s[i]
    y = np.concatenate([traj.pos_struct[i], traj.v_coeffs[i]])
    if abs(dt) > 1e-15:
        def f(state):
            xidot, vdot = geodesic_rhs_general(frame, state[:n], state[n:])
            return np.concatenate([xidot, vdot])

        y = _rk4(f, y, dt)
    return y[:n], y[n:]


def _rk4(f, y, h):
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate_geodesic(frame: AdaptedFrame, v0, s_max: float, tol: float = 1e-9,
                       initial_pos=None, min_steps: int = 64,
                       max_halvings: int = 12) -> Trajectory:
    """Fixed-step RK4 with step halving until the speed drift beats tol."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = frame.dim
    v0 = np.asarray(v0, dtype=float)
    pos0 = np.zeros(n) if initial_pos is None else np.asarray(initial_pos, dtype=float)
    speed0 = frame.speed(v0)

    def f(y):
        xidot, vdot = geodesic_rhs_general(frame, y[:n], y[n:])
        return np.concatenate([xidot, vdot])

    steps = max(min_steps, int(np.ceil(abs(s_max) / 0.1)))
    for _ in range(max_halvings):
        h = s_max / steps
        ys = np.empty((steps + 1, 2 * n))
        ys[0] = np.concatenate([pos0, v0])
        y = ys[0]
        for i in range(steps):
            y = _rk4(f, y, h)
            ys[i + 1] = y
        drift = float(np.max(np.abs(np.linalg.norm(ys[:, n:], axis=1) - speed0)))
        if drift < tol:
            return Trajectory(
                s=np.linspace(0.0, s_max, steps + 1),
                pos_struct=ys[:, :n],
                v_coeffs=ys[:, n:],
                speed_drift=drift,
                step_size=h,
            )
        steps *= 2
    raise ToleranceNotMet(f"speed drift {drift} above {tol} at {steps // 2} steps")


def integrate_threestep(frame: AdaptedFrame, v0, s_max: float, steps: int) -> np.ndarray:
    """Integrate the explicit three-step system; returns frame positions."""
    vb = np.asarray(v0, dtype=float)

    def f(p):
        return geodesic_rhs_threestep(frame, p, vb)

    h = s_max / steps
    out = np.empty((steps + 1, frame.dim))
    out[0] = np.zeros(frame.dim)
    p = out[0]
    for i in range(steps):
        p = _rk4(f, p, h)
        out[i + 1] = p
    return out


# -- float group arithmetic (defect evaluation) -----------------------------

def float_bch(frame: AdaptedFrame, a, b) -> np.ndarray:
    ab = frame.bracket_struct(a, b)
    out = a + b + 0.5 * ab
    out += (frame.bracket_struct(a, ab) + frame.bracket_struct(b, -ab)) / 12.0
    return out


def log_distance(frame: AdaptedFrame, a, b) -> float:
    """Metric norm of log(a^-1 b): a chart surrogate for the distance."""
    d = float_bch(frame, -np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    return float(np.sqrt(d @ frame.gram_float @ d))


def translation_defect(frame: AdaptedFrame, gamma, traj: Trajectory, lam: float,
                       samples: int = 9) -> float:
    """Certifies a gamma-translated geodesic when the value is ~ 0.

    Max over sampled s of dist(gamma sigma(s), sigma(s + lam)) plus the
    frame-velocity mismatch |v(lam) - v(0)|.  The trajectory must cover
    [0, lam]; s samples are limited to what it covers beyond lam.
    """
    g = np.array([float(x) for x in gamma.log]) if isinstance(gamma, GroupElement) \
        else np.asarray(gamma, dtype=float)
    s_end = float(traj.s[-1])
    if lam > s_end + 1e-12:
        raise ValueError("trajectory does not cover [0, lam]")
    worst = 0.0
    for s in np.linspace(0.0, max(s_end - lam, 0.0), samples):
        pos_s, _ = state_at(frame, traj, s)
        pos_sl, _ = state_at(frame, traj, s + lam)
        moved = float_bch(frame, g, pos_s)
        worst = max(worst, log_distance(frame, pos_sl, moved))
    _, v_lam = state_at(frame, traj, lam)
    vmis = float(np.linalg.norm(v_lam - traj.v_coeffs[0]))
    return worst + vmis


def translation_bracket_residual(frame: AdaptedFrame, gamma, traj: Trajectory) -> float:
    """Orthogonality residual of the initial velocity against [log gamma, g].

    For a geodesic through the identity translated by gamma the inner
    products vanish; returns the largest magnitude over an orthonormal
    basis of the bracket image.
    """
    g = np.array([float(x) for x in gamma.log]) if isinstance(gamma, GroupElement) \
        else np.asarray(gamma, dtype=float)
    n = frame.dim
    image = [frame.bracket_struct(g, np.eye(n)[i]) for i in range(n)]
    onb = []
    for w in image:
        w = w.copy()
        for prev in onb:
            w -= (prev @ frame.gram_float @ w) * prev
        nrm = float(np.sqrt(w @ frame.gram_float @ w))
        if nrm > 1e-12:
            onb.append(w / nrm)
    v0_struct = frame.to_struct(traj.v_coeffs[0])
    if not onb:
        return 0.0
    return max(abs(float(b @ frame.gram_float @ v0_struct)) for b in onb)


def horizontality_residual(frame: AdaptedFrame, traj: Trajectory) -> float:
    """Largest g^(2)-component of the frame velocity along the trajectory."""
    if frame.dim_w == 0:
        return 0.0
    return float(np.max(np.abs(traj.v_coeffs[:, frame.dim_x + frame.dim_z:])))


# -- Riemannian submersion onto the quotient by g^(k-1) ----------------------

class SubmersionData:
    """Quotient group, metric, and the metric-orthogonal horizontal lift."""

    def __init__(self, sc: StructureConstants, metric: MetricSpec):
        if sc.step < 2:
            raise StepMismatch("quotient by g^(k-1) needs step >= 2")
        series = sc.derived_series
        fiber = series[-2]  # g^(k-1)
        self.sc = sc
        self.metric = metric
        self.fiber = fiber
        self.qsc, self.qmap = quotient_algebra(sc, fiber)
        # exact horizontal complement: vectors metric-orthogonal to the fiber
        rows = [tuple(metric.inner(f, sc.basis_vector(i)) for i in range(sc.dim))
                for f in fiber.rows]
        from .rational import nullspace

        horiz = nullspace(rows)
        # lift matrix: quotient coords -> horizontal structural vectors
        cols = []
        h_images = [self.qmap.project(h) for h in horiz]
        for a in range(self.qsc.dim):
            target = tuple(Fraction(int(a == b)) for b in range(self.qsc.dim))
            from .rational import solve as rsolve

            combo = rsolve(tuple(zip(*h_images)), target)
            if combo is None:
                raise RuntimeError("horizontal complement does not project onto quotient")
            col = [Fraction(0)] * sc.dim
            for c, h in zip(combo, horiz):
                for i in range(sc.dim):
                    col[i] += c * h[i]
            cols.append(tuple(col))
        self.lift_matrix = tuple(zip(*cols))   # rows; maps quotient coords up
        qgram = tuple(
            tuple(metric.inner(self._lift_exact(self._unit(a)), self._lift_exact(self._unit(b)))
                  for b in range(self.qsc.dim))
            for a in range(self.qsc.dim))
        self.qmetric = MetricSpec(qgram)
        self.proj_float = np.array([[float(x) for x in row] for row in self.qmap.projection]).T
        self.lift_float = np.array([[float(x) for x in row] for row in self.lift_matrix])

    def _unit(self, a):
        return tuple(Fraction(int(a == b)) for b in range(self.qsc.dim))

    def _lift_exact(self, w):
        return mat_vec(self.lift_matrix, w)

    def project_element(self, x: GroupElement) -> GroupElement:
        return GroupElement(self.qmap.project(x.log))

    def project_trajectory(self, traj: Trajectory, qframe: AdaptedFrame,
                           frame: AdaptedFrame) -> Trajectory:
        pos = traj.pos_struct @ self.proj_float.T
        v_struct = traj.v_coeffs @ frame.basis.T
        v_q = v_struct @ self.proj_float.T @ (qframe.gram_float @ qframe.basis)
        speeds = np.linalg.norm(v_q, axis=1)
        return Trajectory(
            s=traj.s, pos_struct=pos, v_coeffs=v_q,
            speed_drift=float(np.max(np.abs(speeds - speeds[0]))),
            step_size=traj.step_size,
        )

    def horizontal_lift_velocity(self, v_quotient_struct) -> np.ndarray:
        return self.lift_float @ np.asarray(v_quotient_struct, dtype=float)

    def fiber_component_norm(self, frame: AdaptedFrame, v_struct) -> float:
        """Metric norm of the g^(k-1)-component of a structural vector."""
        v = np.asarray(v_struct, dtype=float)
        h = self.lift_float @ (self.proj_float @ v)
        d = v - h
        return float(np.sqrt(d @ frame.gram_float @ d))
