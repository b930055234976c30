"""Càdlàg Lévy path sampling for positive and negative time.

Paths are stored as a continuous skeleton on a node set (the uniform grid
plus every jump time, so Brownian increments are exact at jump times) plus
an explicit jump list.  Evaluation linearly interpolates the skeleton and
adds all jumps at times <= t (right-continuous convention); the value at
time 0 is exactly 0.

Negative-time paths are built by time-reflecting an independent forward
sample: for a forward path F, the backward path is t -> -F((-t)-), which is
càdlàg, vanishes at 0, and carries the re-timed jumps (-s_k, kappa_k).

Two-sided paths support the shift flow theta_t as a lazy view: shifting
adds an offset and re-anchors at the new origin, so the group law
theta_s theta_t = theta_{s+t} holds exactly.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, HorizonError, StructuralError


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid t_start + k*dt, k = 0..n_steps."""

    t_start: float
    t_end: float
    dt: float

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ConfigurationError("dt must be > 0")
        if not self.t_start < self.t_end:
            raise ConfigurationError("t_start must be < t_end")
        n = (self.t_end - self.t_start) / self.dt
        if abs(n - round(n)) > 4.0 * np.finfo(float).eps * max(1.0, abs(n)):
            raise ConfigurationError("(t_end - t_start)/dt must be an integer")

    @property
    def n_steps(self):
        return int(round((self.t_end - self.t_start) / self.dt))

    def times(self):
        return self.t_start + self.dt * np.arange(self.n_steps + 1)


class JumpPath:
    """One-sided path skeleton: continuous part at nodes + jump list.

    ``values`` (continuous part plus all jumps at times <= node) is what a
    càdlàg reader sees at the nodes; ``cont`` is the skeleton used for
    interpolation.  Node times include every jump time.
    """

    def __init__(self, grid, node_times, cont, jump_times, jump_sizes,
                 *, triplet=None, comp_rate=0.0, band=None):
        self.grid = grid
        self.node_times = np.asarray(node_times, float)
        cont = np.asarray(cont, float)
        if cont.ndim == 1:
            cont = cont[:, None]
        self.cont = cont
        self.jump_times = np.asarray(jump_times, float)
        sizes = np.asarray(jump_sizes, float)
        if sizes.ndim == 1:
            sizes = sizes[:, None]
        self.jump_sizes = sizes if sizes.size else np.empty((0, cont.shape[1]))
        self.triplet = triplet
        self.comp_rate = comp_rate
        self.band = band  # (eps_cut, delta) actually simulated
        if self.node_times.shape[0] != self.cont.shape[0]:
            raise StructuralError("node_times and cont length mismatch")
        self._jump_cum = np.vstack([np.zeros(self.d), np.cumsum(self.jump_sizes, axis=0)])

    @property
    def d(self):
        return self.cont.shape[1]

    @property
    def t_start(self):
        return float(self.node_times[0])

    @property
    def t_end(self):
        return float(self.node_times[-1])

    @property
    def horizon(self):
        return (self.t_start, self.t_end)

    @property
    def values(self):
        """Right-continuous path values at the nodes."""
        idx = np.searchsorted(self.jump_times, self.node_times, side="right")
        return self.cont + self._jump_cum[idx]

    def _check_in_horizon(self, t):
        if t < self.t_start - 1e-12 or t > self.t_end + 1e-12:
            raise HorizonError(f"t={t} outside sampled horizon "
                               f"[{self.t_start}, {self.t_end}]")

    def continuous_at(self, t):
        self._check_in_horizon(t)
        out = np.empty(self.d)
        for j in range(self.d):
            out[j] = np.interp(t, self.node_times, self.cont[:, j])
        return out

    def evaluate(self, t):
        """Path value at t: interpolated skeleton + jumps at times <= t."""
        idx = np.searchsorted(self.jump_times, t, side="right")
        return self.continuous_at(t) + self._jump_cum[idx]

    def continuous_increment(self, t0, t1):
        return self.continuous_at(t1) - self.continuous_at(t0)

    def jumps_in(self, a, b):
        """Jump times and sizes with a < s <= b."""
        i = np.searchsorted(self.jump_times, a, side="right")
        j = np.searchsorted(self.jump_times, b, side="right")
        return self.jump_times[i:j], self.jump_sizes[i:j]


def _as_rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def substream(master_seed, path_index=0, driver=0, leg=0):
    """Independent, reproducible RNG substream keyed by
    (master_seed, path_index, driver, leg)."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(path_index, driver, leg))
    return np.random.default_rng(ss)


def _draw_jumps(triplet, T, rng):
    """Marked-Poisson jump draw on (0, T): band [eps_cut, delta] plus the
    tail above delta.  Returns sorted times and sizes."""
    m = triplet.measure
    eps = triplet.effective_cut()
    times, sizes = [], []
    for lo, hi in ((eps, triplet.delta), (triplet.delta, math.inf)):
        rate = m.rate(lo, hi)
        if rate == 0.0:
            continue
        if not math.isfinite(rate):
            raise ConfigurationError(
                "infinite simulable jump rate; set eps_cut > 0 for "
                "infinite-activity measures"
            )
        if rate * T > 5e6:
            raise ConfigurationError(
                f"expected jump count {rate * T:.2e} exceeds the sampler "
                "budget; raise eps_cut (the default variance rule can demand "
                "unsimulably many small jumps for heavy small-jump activity)"
            )
        n = int(rng.poisson(rate * T))
        times.append(rng.uniform(0.0, T, n))
        sizes.append(m.sample_sizes(rng, n, lo, hi))
    if times:
        t = np.concatenate(times)
        s = np.concatenate(sizes)
        order = np.argsort(t)
        return t[order], s[order]
    return np.empty(0), np.empty(0)


def _sample_raw(triplet, T, dt, rng):
    """Forward-style sample on [0, T]: node times (grid + jump times),
    continuous skeleton, jump list."""
    grid = TimeGrid(0.0, T, dt)
    jt, js = _draw_jumps(triplet, T, rng)
    node_times = np.unique(np.concatenate([grid.times(), jt]))
    d = triplet.d
    comp = triplet.compensation_rate()
    cont = np.outer(node_times, triplet.drift)
    if not triplet.measure.is_empty:
        cont = cont - comp * node_times[:, None]
    if triplet.gaussian is not None:
        A = triplet.gaussian
        dW = rng.standard_normal((node_times.size - 1, A.shape[1]))
        dW *= np.sqrt(np.diff(node_times))[:, None]
        W = np.vstack([np.zeros(A.shape[1]), np.cumsum(dW, axis=0)])
        cont = cont + W @ A.T
    return grid, node_times, cont, jt, js, comp


def sample_forward(triplet, grid, rng_seed):
    """Sample a forward path on [0, T] from the Lévy–Itô decomposition:
    drift + Gaussian part + compensated small jumps on [eps_cut, delta]
    + raw jumps above delta.  Deterministic given the seed.
    """
    if triplet.direction != "forward":
        raise ConfigurationError("triplet is not tagged for forward sampling")
    if grid.t_start != 0.0:
        raise ConfigurationError("forward grid must start at 0")
    rng = _as_rng(rng_seed)
    g, nt, cont, jt, js, comp = _sample_raw(triplet, grid.t_end, grid.dt, rng)
    return JumpPath(g, nt, cont, jt, js, triplet=triplet, comp_rate=comp,
                    band=(triplet.effective_cut(), triplet.delta))


def sample_backward(triplet, grid, rng_seed):
    """Sample a negative-time path on [t_start, 0] by reflecting an
    independent forward-style sample: L(t) = -F((-t)-)."""
    if triplet.direction != "backward":
        raise ConfigurationError("triplet is not tagged for backward sampling")
    if grid.t_end != 0.0:
        raise ConfigurationError("backward grid must end at 0")
    rng = _as_rng(rng_seed)
    T = -grid.t_start
    _, nt, cont, jt, js, comp = _sample_raw(triplet, T, grid.dt, rng)
    node_times = -nt[::-1]
    jump_times = -jt[::-1]
    jump_sizes = js[::-1] if js.size else js
    if js.size:
        js2 = jump_sizes if jump_sizes.ndim == 2 else jump_sizes[:, None]
        # accumulate in evaluation order so the value at 0 cancels exactly
        total_jump = np.cumsum(js2, axis=0)[-1]
    else:
        total_jump = np.zeros(triplet.d)
    cont_b = -cont[::-1] - np.atleast_1d(total_jump)[None, :]
    return JumpPath(grid, node_times, cont_b, jump_times, jump_sizes,
                    triplet=triplet, comp_rate=comp,
                    band=(triplet.effective_cut(), triplet.delta))


class TwoSidedPath:
    """Forward leg on [0, T_f] glued to a backward leg on [-T_b, 0], both
    vanishing at 0.  ``offset`` realizes the shift flow lazily: this object
    evaluates s -> base(offset + s) - base(offset)."""

    def __init__(self, forward, backward, offset=0.0):
        if forward.d != backward.d:
            raise StructuralError("leg dimensions differ")
        if forward.t_start != 0.0 or backward.t_end != 0.0:
            raise StructuralError("legs must meet at 0")
        if np.any(forward.evaluate(0.0) != 0.0) or np.any(backward.evaluate(0.0) != 0.0):
            raise StructuralError("legs must vanish at the origin")
        lo, hi = backward.t_start, forward.t_end
        if not (lo <= offset <= hi):
            raise HorizonError("shift offset leaves the sampled horizon")
        self.forward = forward
        self.backward = backward
        self.offset = float(offset)
        self._anchor = self._base_eval(self.offset)

    @property
    def d(self):
        return self.forward.d

    @property
    def horizon(self):
        return (self.backward.t_start - self.offset,
                self.forward.t_end - self.offset)

    @property
    def triplet(self):
        return self.forward.triplet

    @property
    def comp_rate(self):
        return self.forward.comp_rate

    @property
    def band(self):
        return self.forward.band

    def _base_eval(self, s):
        return self.forward.evaluate(s) if s >= 0.0 else self.backward.evaluate(s)

    def evaluate(self, t):
        return self._base_eval(t + self.offset) - self._anchor

    def continuous_at(self, t):
        s = t + self.offset
        leg = self.forward if s >= 0.0 else self.backward
        return leg.continuous_at(s)

    def continuous_increment(self, t0, t1):
        s0, s1 = t0 + self.offset, t1 + self.offset
        if (s0 >= 0.0) == (s1 >= 0.0):
            leg = self.forward if s0 >= 0.0 else self.backward
            return leg.continuous_increment(s0, s1)
        sgn = 1.0 if s1 >= s0 else -1.0
        a, b = min(s0, s1), max(s0, s1)
        inc = (self.backward.continuous_increment(a, 0.0)
               + self.forward.continuous_increment(0.0, b))
        return sgn * inc

    def jumps_in(self, a, b):
        """Jump times and sizes with a < s <= b (shift-adjusted times)."""
        if a > b:
            a, b = b, a
        a, b = a + self.offset, b + self.offset
        tb, sb = self.backward.jumps_in(a, b)
        tf, sf = self.forward.jumps_in(a, b)
        times = np.concatenate([tb, tf]) - self.offset
        sizes = np.vstack([sb, sf]) if (sb.size or sf.size) else np.empty((0, self.d))
        return times, sizes

    def shift(self, t):
        """The shifted path s -> self(t + s) - self(t)."""
        return TwoSidedPath(self.forward, self.backward, self.offset + t)


def two_sided(fwd, bwd):
    """Glue a forward and an (independently sampled) backward leg."""
    return TwoSidedPath(fwd, bwd)


def shift(path, t):
    """Shift flow: (theta_t path)(s) = path(t + s) - path(t)."""
    return path.shift(t)


def evaluate(path, t):
    """Càdlàg evaluation of a JumpPath or TwoSidedPath."""
    return path.evaluate(t)


def sample_two_sided(triplet, T, dt, master_seed, path_index=0, driver=0):
    """Two-sided sample on [-T, T] from independent substreams keyed by
    (master_seed, path_index, driver, leg)."""
    fwd = sample_forward(triplet, TimeGrid(0.0, T, dt),
                         substream(master_seed, path_index, driver, 0))
    bwd = sample_backward(triplet.backward(), TimeGrid(-T, 0.0, dt),
                          substream(master_seed, path_index, driver, 1))
    return TwoSidedPath(fwd, bwd)


def with_drift(path, rate):
    """A copy of the path with an extra deterministic drift rate*t added to
    the continuous skeleton (both legs for two-sided paths)."""
    if isinstance(path, TwoSidedPath):
        return TwoSidedPath(with_drift(path.forward, rate),
                            with_drift(path.backward, rate), path.offset)
    cont = path.cont + np.asarray(rate, float) * path.node_times[:, None]
    return JumpPath(path.grid, path.node_times, cont, path.jump_times,
                    path.jump_sizes, triplet=path.triplet,
                    comp_rate=path.comp_rate, band=path.band)


def dump_path_csv(path, stream):
    """Debug dump: node rows `t,component_1..component_d,is_jump` with
    is_jump=0, plus one row per jump carrying its time and size."""
    d = path.d
    header = "t," + ",".join(f"component_{j+1}" for j in range(d)) + ",is_jump"
    stream.write(header + "\n")
    if isinstance(path, TwoSidedPath):
        legs = (path.backward, path.forward)
    else:
        legs = (path,)
    for leg in legs:
        vals = leg.values
        for i, t in enumerate(leg.node_times):
            row = [repr(float(t))] + [repr(float(v)) for v in vals[i]] + ["0"]
            stream.write(",".join(row) + "\n")
        for k, t in enumerate(leg.jump_times):
            row = [repr(float(t))] + [repr(float(v)) for v in leg.jump_sizes[k]] + ["1"]
            stream.write(",".join(row) + "\n")
