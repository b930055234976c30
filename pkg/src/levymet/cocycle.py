"""Linear cocycle evaluators over sampled Lévy paths.

Every evaluator maps t to an invertible d x d matrix phi(t) with phi(0) = I
and exposes the window propagator Phi(t0 -> t1) = phi(t1) phi(t0)^(-1).
Negative times use the group convention phi(t) = Phi(t -> 0)^(-1), i.e.
forward evaluation over the reflected window; this realizes backward-time
stochastic integrals and automatically satisfies the singular-value
reciprocity between phi(t) and phi(-t, theta_t omega).

Backends:

* :class:`ExactDiagonal2D` -- closed form for the decoupled 2d benchmark
  system dX^i = c_i X^i dt + X^i dL^i with compensated small-jump drivers;
* :class:`StochasticExponential1D` -- Doléans-Dade exponential of a scalar
  driver;
* :class:`EulerEvaluator` -- jump-adapted Euler for dX = aX dt + sigma_i X dL^i:
  jumps are applied exactly as multiplicative factors (I + u sigma_i), the
  flow between jumps is explicit Euler or an exact matrix exponential;
* :func:`picard_solve` -- successive substitution for the equivalent random
  integral equation, used as an independent oracle for the Euler backend.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import (
    ConfigurationError,
    DegeneracyError,
    DivergenceError,
    HorizonError,
    InstabilityError,
    SingularityError,
    StructuralError,
    SupportError,
)

_OVERFLOW_NORM = 1e300
_LOG_OVERFLOW = 700.0


def _hs_norm(M):
    return float(np.linalg.norm(M))


def _check_finite(M):
    if not np.all(np.isfinite(M)) or np.max(np.abs(M)) > _OVERFLOW_NORM:
        raise InstabilityError("propagator overflow; reduce the step or use "
                               "log-scaled evaluation")


@dataclass(frozen=True)
class LinearSystem:
    """Coefficients of dX = a X dt + sigma_i X dL^i with q independent
    scalar drivers."""

    a: np.ndarray
    sigmas: tuple
    drivers: tuple
    large_jump_guard: bool = True

    def __post_init__(self):
        a = np.asarray(self.a, float)
        object.__setattr__(self, "a", a)
        sig = tuple(np.asarray(s, float) for s in self.sigmas)
        object.__setattr__(self, "sigmas", sig)
        object.__setattr__(self, "drivers", tuple(self.drivers))
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise StructuralError("a must be square")
        if len(sig) == 0 or len(sig) != len(self.drivers):
            raise StructuralError("need q >= 1 sigma matrices, one per driver")
        for s in sig:
            if s.shape != a.shape:
                raise StructuralError("sigma shape mismatch")
        for tr in self.drivers:
            if tr.d != 1:
                raise StructuralError("drivers must be scalar triplets")

    @property
    def d(self):
        return self.a.shape[0]

    @property
    def q(self):
        return len(self.sigmas)

    def drift_matrix(self):
        """a + sum_i sigma_i b^i."""
        B = self.a.copy()
        for s, tr in zip(self.sigmas, self.drivers):
            B += s * float(tr.drift[0])
        return B


class _EvaluatorBase:
    """Shared plumbing: phi from the window propagator, scaled products."""

    d = None
    backend = None

    def propagate(self, t0, t1):  # pragma: no cover - overridden
        raise NotImplementedError

    def matrix(self, t):
        if t == 0.0:
            return np.eye(self.d)
        if t > 0.0:
            return self.propagate(0.0, t)
        return np.linalg.inv(self.propagate(t, 0.0))

    def inverse(self, t):
        return np.linalg.inv(self.matrix(t))

    def matrix_scaled(self, t, window=1.0):
        """(M, logscale) with phi(t) = exp(logscale) * M; the product is
        renormalized every ``window`` time units so long horizons do not
        overflow.  Scalar rescaling preserves singular subspaces."""
        if t == 0.0:
            return np.eye(self.d), 0.0
        n = max(1, int(math.ceil(abs(t) / window - 1e-12)))
        edges = np.linspace(0.0, t, n + 1)
        M = np.eye(self.d)
        logscale = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            M = self.propagate(a, b) @ M
            nrm = _hs_norm(M)
            if nrm == 0.0 or not math.isfinite(nrm):
                raise InstabilityError("scaled product degenerated")
            M /= nrm
            logscale += math.log(nrm)
        return M, logscale


class ExactDiagonal2D(_EvaluatorBase):
    """Closed-form cocycle of the decoupled benchmark system

        dX^1 = c_1 X^1 dt + X^1 dL^1,   dX^2 = c_2 X^2 dt + X^2 dL^2,

    with compensated small-jump drivers sharing one measure.  phi(t) is
    diagonal with log-entries

        (c_i + I - K) t + sum_{0 < s <= t} log(1 + kappa^i_s)

    where I and K are the band integrals of log(1+u)-u and log(1+u); for
    t < 0 the jump sum runs over (t, 0] with a minus sign, which is exactly
    the inverse of the forward window.  All integrals are over the actually
    simulated band, so the evaluator is the exact solution along the
    sampled path.
    """

    backend = "exact_diagonal_2d"
    d = 2

    def __init__(self, driver_paths, measure, delta, drift_rates=(2.0, -4.0)):
        if len(driver_paths) != 2:
            raise StructuralError("need exactly two scalar driver paths")
        self.driver_paths = list(driver_paths)
        self.measure = measure
        self.delta = float(delta)
        self.drift_rates = tuple(float(c) for c in drift_rates)
        band = getattr(driver_paths[0], "band", None) or (0.0, self.delta)
        lo = min(band[0], self.delta)
        self._band = (lo, self.delta)
        self.compensator_integral = measure.log_compensator(lo, self.delta)
        self._log_moment = measure.log_moment(lo, self.delta)
        self._jump_t = []
        self._log_cum = []
        self._anchor = []
        for p in self.driver_paths:
            if p.d != 1:
                raise StructuralError("driver paths must be scalar")
            lo_h, hi_h = p.horizon
            times, sizes = p.jumps_in(lo_h, hi_h)
            sizes = sizes[:, 0]
            if np.any(sizes <= -1.0):
                raise SingularityError("jump factor 1 + u hit zero or below")
            if np.any(np.abs(sizes) > self.delta * (1 + 1e-12)):
                raise SupportError("driver carries jumps above delta; the "
                                   "closed form covers small jumps only")
            self._jump_t.append(times)
            cum = np.concatenate([[0.0], np.cumsum(np.log1p(sizes))])
            self._log_cum.append(cum)
            self._anchor.append(cum[np.searchsorted(times, 0.0, side="right")])

    @property
    def horizon(self):
        los, his = zip(*(p.horizon for p in self.driver_paths))
        return (max(los), min(his))

    def _check(self, t):
        lo, hi = self.horizon
        if t < lo - 1e-12 or t > hi + 1e-12:
            raise HorizonError(f"t={t} outside horizon [{lo}, {hi}]")

    def log_growth(self, t):
        """Vector of log phi(t)_ii; exact in log scale for any horizon."""
        self._check(t)
        out = np.empty(2)
        rate = self.compensator_integral - self._log_moment
        for i in range(2):
            idx = np.searchsorted(self._jump_t[i], t, side="right")
            jump_sum = self._log_cum[i][idx] - self._anchor[i]
            out[i] = (self.drift_rates[i] + rate) * t + jump_sum
        return out

    def matrix(self, t):
        lg = self.log_growth(t)
        if np.max(np.abs(lg)) > _LOG_OVERFLOW:
            raise InstabilityError("diagonal entry overflows; use "
                                   "matrix_scaled or log_growth")
        return np.diag(np.exp(lg))

    def inverse(self, t):
        lg = self.log_growth(t)
        if np.max(np.abs(lg)) > _LOG_OVERFLOW:
            raise InstabilityError("diagonal entry overflows; use log_growth")
        return np.diag(np.exp(-lg))

    def propagate(self, t0, t1):
        lg = self.log_growth(t1) - self.log_growth(t0)
        if np.max(np.abs(lg)) > _LOG_OVERFLOW:
            raise InstabilityError("window too long; split it")
        return np.diag(np.exp(lg))

    def matrix_scaled(self, t, window=1.0):
        lg = self.log_growth(t)
        s = float(np.max(lg))
        return np.diag(np.exp(lg - s)), s

    def shifted(self, s):
        return ExactDiagonal2D([p.shift(s) for p in self.driver_paths],
                               self.measure, self.delta, self.drift_rates)


class StochasticExponential1D(_EvaluatorBase):
    """Doléans-Dade exponential of a scalar semimartingale path G:

        Y_t = exp(G_t - [G,G]^c_t / 2) prod_{0<s<=t} (1 + dG_s) e^{-dG_s},

    for unit initial condition; the continuous bracket is sigma^2 t read
    from the path's triplet.  Forward time only.
    """

    backend = "stochastic_exponential_1d"
    d = 1

    def __init__(self, path):
        if path.d != 1:
            raise StructuralError("path must be scalar")
        self.path = path
        self.driver_paths = [path]
        A = path.triplet.gaussian if path.triplet is not None else None
        self._gauss_var = float(np.sum(A * A)) if A is not None else 0.0

    def log_value(self, t):
        if t < 0.0:
            raise HorizonError("the exponential is defined for t >= 0 here")
        g = float(self.path.evaluate(t)[0])
        times, sizes = self.path.jumps_in(0.0, t)
        sizes = sizes[:, 0]
        if np.any(sizes == -1.0):
            raise DegeneracyError("jump of exactly -1: solution leaves Gl(1)")
        if np.any(sizes < -1.0):
            raise DegeneracyError("jump below -1: factor changes sign")
        corr = float(np.sum(np.log1p(sizes) - sizes)) if sizes.size else 0.0
        return g - 0.5 * self._gauss_var * t + corr

    def value(self, t):
        return math.exp(self.log_value(t))

    def matrix(self, t):
        return np.array([[self.value(t)]])

    def propagate(self, t0, t1):
        return np.array([[math.exp(self.log_value(t1) - self.log_value(t0))]])

    def shifted(self, s):
        return StochasticExponential1D(self.path.shift(s))


class EulerEvaluator(_EvaluatorBase):
    """Jump-adapted Euler propagator for dX = a X dt + sigma_i X dL^i.

    The step grid is the uniform dt_int lattice refined by every jump time,
    so jumps are applied exactly as factors (I + kappa sigma_i); between
    jumps the continuous increments of the sampled drivers (drift,
    compensation, Gaussian part) feed an explicit Euler step, or a matrix
    exponential when scheme="expm".
    """

    backend = "euler"

    def __init__(self, system, driver_paths, dt_int, scheme="euler"):
        if len(driver_paths) != system.q:
            raise StructuralError("one driver path per sigma matrix")
        if dt_int <= 0.0:
            raise ConfigurationError("dt_int must be > 0")
        if scheme not in ("euler", "expm"):
            raise ConfigurationError("scheme must be 'euler' or 'expm'")
        self.system = system
        self.driver_paths = list(driver_paths)
        self.dt_int = float(dt_int)
        self.scheme = scheme
        self.d = system.d

    @property
    def horizon(self):
        los, his = zip(*(p.horizon for p in self.driver_paths))
        return (max(los), min(his))

    def _jump_events(self, a, b):
        events = {}
        for i, p in enumerate(self.driver_paths):
            times, sizes = p.jumps_in(a, b)
            for t, s in zip(times, sizes[:, 0]):
                events.setdefault(float(t), []).append((i, float(s)))
        return events

    def propagate(self, t0, t1):
        lo, hi = self.horizon
        if min(t0, t1) < lo - 1e-12 or max(t0, t1) > hi + 1e-12:
            raise HorizonError("window outside the sampled horizon")
        if t0 == t1:
            return np.eye(self.d)
        if t1 < t0:
            M = self.propagate(t1, t0)
            if abs(np.linalg.det(M)) == 0.0:
                raise SingularityError("forward window is singular")
            return np.linalg.inv(M)
        a_mat = self.system.a
        sig = self.system.sigmas
        jumps = self._jump_events(t0, t1)
        n = max(1, int(math.ceil((t1 - t0) / self.dt_int - 1e-9)))
        nodes = np.unique(np.concatenate([
            t0 + (t1 - t0) * np.arange(1, n) / n,
            np.asarray(sorted(jumps), float),
            [t1],
        ]))
        M = np.eye(self.d)
        prev = t0
        for t in nodes:
            h = t - prev
            if h > 0.0:
                G = h * a_mat
                for i, p in enumerate(self.driver_paths):
                    dc = float(p.continuous_increment(prev, t)[0])
                    G = G + dc * sig[i]
                step = expm(G) if self.scheme == "expm" else np.eye(self.d) + G
                M = step @ M
                _check_finite(M)
            for i, kappa in jumps.get(float(t), ()):
                J = np.eye(self.d) + kappa * sig[i]
                if self.system.large_jump_guard:
                    if abs(np.linalg.det(J)) < 1e-12:
                        raise SingularityError(
                            f"jump factor I + u*sigma_{i+1} is singular (u={kappa})"
                        )
                M = J @ M
                _check_finite(M)
            prev = t
        return M

    def shifted(self, s):
        return EulerEvaluator(self.system, [p.shift(s) for p in self.driver_paths],
                              self.dt_int, self.scheme)


# -- auxiliary linear system and Picard oracle ---------------------------------


def _psi_grid(system, driver_paths, times):
    """psi and psi^(-1) on a sorted breakpoint grid (first entry 0).

    psi solves d psi = sigma_i psi u dN~ restricted to |u| <= delta: between
    jumps d psi = -(sum_i sigma_i c_i) psi dt with c_i the small-jump
    compensation rate; at a small jump, psi <- (I + kappa sigma_i) psi and
    psi^(-1) <- psi^(-1) (I + kappa sigma_i)^(-1).
    """
    d = system.d
    C = np.zeros((d, d))
    for s_mat, p in zip(system.sigmas, driver_paths):
        C += float(p.comp_rate) * s_mat
    jumps = {}
    for i, p in enumerate(driver_paths):
        jt, js = p.jumps_in(0.0, times[-1])
        for t, s in zip(jt, js[:, 0]):
            if abs(s) <= system.drivers[i].delta:
                jumps.setdefault(float(t), []).append((i, float(s)))
    psis = np.empty((len(times), d, d))
    psinvs = np.empty((len(times), d, d))
    psi = np.eye(d)
    psinv = np.eye(d)
    psis[0], psinvs[0] = psi, psinv
    for k in range(1, len(times)):
        h = times[k] - times[k - 1]
        if h > 0.0:
            psi = (np.eye(d) - h * C) @ psi
            psinv = psinv @ (np.eye(d) + h * C)
        for i, kappa in jumps.get(float(times[k]), ()):
            J = np.eye(d) + kappa * system.sigmas[i]
            det = np.linalg.det(J)
            if abs(det) < 1e-12:
                raise SingularityError("singular small-jump factor in the "
                                       "auxiliary system")
            psi = J @ psi
            psinv = psinv @ np.linalg.inv(J)
        _check_finite(psi)
        psis[k], psinvs[k] = psi, psinv
    return psis, psinvs


def _breakpoints(driver_paths, t, dt_int):
    n = max(1, int(math.ceil(t / dt_int - 1e-9)))
    nodes = [t * np.arange(0, n + 1) / n]
    for p in driver_paths:
        jt, _ = p.jumps_in(0.0, t)
        nodes.append(jt)
    return np.unique(np.concatenate(nodes))


def auxiliary_psi(system, driver_paths, t, dt_int=1e-3):
    """psi_t of the compensated small-jump auxiliary equation (t >= 0)."""
    if t < 0.0:
        raise HorizonError("auxiliary system is integrated forward from 0")
    if t == 0.0:
        return np.eye(system.d)
    times = _breakpoints(driver_paths, t, dt_int)
    psis, _ = _psi_grid(system, driver_paths, times)
    return psis[-1]


def auxiliary_psi_inverse(system, driver_paths, t, dt_int=1e-3):
    """psi_t^(-1), integrated from its own equation (not by inverting psi):
    d psi^(-1) = -psi^(-1) dZ + jump corrections, which collapses to the
    factor (I + dZ_s)^(-1) at jumps."""
    if t < 0.0:
        raise HorizonError("auxiliary system is integrated forward from 0")
    if t == 0.0:
        return np.eye(system.d)
    times = _breakpoints(driver_paths, t, dt_int)
    _, psinvs = _psi_grid(system, driver_paths, times)
    return psinvs[-1]


@dataclass
class PicardResult:
    """n-th successive-substitution iterate at time t plus the sup-norm
    differences between consecutive iterates."""

    value: np.ndarray
    diffs: list

    @property
    def tail(self):
        return self.diffs[-1] if self.diffs else 0.0


def picard_solve(system, driver_paths, t, n_iter, x, dt_int=1e-3):
    """Successive substitution for the random integral equation

        X_t = psi_t ( x + int_0^t psi_s^(-1) (a + sigma_i b^i) X_s ds
                        + int_0^t int_{|u|>delta} psi_s^(-1) sigma_i X_s u N(ds,du) ),

    starting from X^0 = x.  Time integrals are left-endpoint Riemann sums
    on the jump-adapted grid; the counting-measure sum evaluates integrands
    at s-.  Serves as an independent oracle for the Euler backend.
    """
    if n_iter < 1:
        raise ConfigurationError("n_iter must be >= 1")
    if t <= 0.0:
        raise HorizonError("solve on a window (0, t] with t > 0")
    x = np.asarray(x, float)
    d = system.d
    times = _breakpoints(driver_paths, t, dt_int)
    psis, psinvs = _psi_grid(system, driver_paths, times)
    B = system.drift_matrix()
    large = {}
    for i, p in enumerate(driver_paths):
        jt, js = p.jumps_in(0.0, t)
        for tt, s in zip(jt, js[:, 0]):
            if abs(s) > system.drivers[i].delta:
                large.setdefault(float(tt), []).append((i, float(s)))

    # convergent iterates obey |X^{n+1}-X^n| <= (C3 xi_t)^n / n! * const, so
    # differences may grow until n ~ C3 xi_t; the divergence detector is
    # armed only past that hump, where genuine convergence forces decay
    c1 = max(_hs_norm(P) for P in psis)
    c2 = max(_hs_norm(P) for P in psinvs)
    c3 = c1 * c2 * (_hs_norm(B) + 1.0)
    xi = t
    for i, p in enumerate(driver_paths):
        jt, js = p.jumps_in(0.0, t)
        big = np.abs(js[:, 0]) > system.drivers[i].delta
        xi += _hs_norm(system.sigmas[i]) * float(np.sum(np.abs(js[big, 0])))
    hump = c3 * xi

    K = len(times)
    X_prev = np.tile(x, (K, 1))
    X_prev_pre = {k: x.copy() for k in range(K)}
    diffs = []
    grow = 0
    for _ in range(n_iter):
        X_new = np.empty((K, d))
        X_new_pre = {}
        acc = x.astype(float).copy()
        X_new[0] = x
        for k in range(1, K):
            h = times[k] - times[k - 1]
            acc = acc + h * (psinvs[k - 1] @ (B @ X_prev[k - 1]))
            hits = large.get(float(times[k]), ())
            if hits:
                X_new_pre[k] = psis[k] @ acc
                for i, kappa in hits:
                    acc = acc + kappa * (psinvs[k] @ (system.sigmas[i]
                                                      @ X_prev_pre[k]))
            X_new[k] = psis[k] @ acc
        step = float(np.max(np.abs(X_new - X_prev)))
        diffs.append(step)
        if not math.isfinite(step):
            raise DivergenceError("Picard iterate overflowed")
        if len(diffs) >= 2 and diffs[-1] > diffs[-2] and len(diffs) > hump:
            grow += 1
            if grow >= 3:
                raise DivergenceError("Picard differences grew for three "
                                      "consecutive iterates past the "
                                      "contraction threshold")
        else:
            grow = 0
        X_prev = X_new
        X_prev_pre = {k: v for k, v in X_new_pre.items()}
        for k in range(K):
            X_prev_pre.setdefault(k, X_prev[k])
    return PicardResult(value=X_prev[-1], diffs=diffs)


# -- diagnostics ----------------------------------------------------------------


def cocycle_residual(ev, s, t):
    """Hilbert-Schmidt defect of the cocycle law at (s, t):
    || phi(t+s) - phi(t, theta_s .) phi(s) ||."""
    direct = ev.matrix(s + t)
    composed = ev.shifted(s).matrix(t) @ ev.matrix(s)
    return _hs_norm(direct - composed)


def integrability_alpha(ev, grid):
    """sup over grid nodes and jump times of log+ ||phi(t)|| and of
    log+ ||phi(t)^(-1)|| on [0, t_end]; empirical one-path versions of the
    integrability functionals of the spectral theorem."""
    times = np.asarray(grid.times() if hasattr(grid, "times") else grid, float)
    if times[0] != 0.0:
        raise ConfigurationError("grid must start at 0")
    end = times[-1]
    extra = []
    for p in getattr(ev, "driver_paths", []):
        jt, _ = p.jumps_in(0.0, end)
        extra.append(jt)
    eval_times = np.unique(np.concatenate([times] + extra))
    M = np.eye(ev.d)
    a_plus = max(0.0, math.log(_hs_norm(M)))
    a_minus = a_plus
    prev = 0.0
    for tt in eval_times[1:]:
        M = ev.propagate(prev, tt) @ M
        det = np.linalg.det(M)
        if abs(det) < 1e-300:
            raise SingularityError("propagator numerically singular")
        a_plus = max(a_plus, math.log(_hs_norm(M)))
        a_minus = max(a_minus, math.log(_hs_norm(np.linalg.inv(M))))
        prev = tt
    return max(0.0, a_plus), max(0.0, a_minus)
