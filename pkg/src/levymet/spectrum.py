"""Spectral data of a linear cocycle: Lyapunov exponents with
multiplicities, filtration flags and their metric, backward spectra, and
the Oseledets splitting.

Exponents are estimated by window-wise QR renormalization: an orthonormal
frame is pushed through the propagator, re-orthonormalized with a
positive-diagonal QR after every window, and the per-direction logs of the
R diagonal accumulate the growth rates.  This is the overflow-free
equivalent of diagonalizing (phi^T phi)^(1/2t); the literal construction
is kept in :func:`sym_root_spectrum` as a small-horizon cross-check.

Flags follow the right-singular-subspace construction: blocks U_i collect
singular directions whose rates cluster at a common exponent; the nested
V_i = U_p + ... + U_i form the flag, and the metric is the largest
projector-product norm between blocks raised to h/|lambda_i - lambda_j|.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfigurationError,
    InstabilityError,
    ResolutionError,
    SingularityError,
    StructuralError,
)


# -- singular values and exterior powers -----------------------------------------


def singular_values(M, rank_tol=1e-13):
    """Singular values in descending order; raises if the smallest one
    indicates a numerically singular matrix."""
    M = np.asarray(M, float)
    if not np.all(np.isfinite(M)):
        raise SingularityError("matrix has non-finite entries")
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0.0 or s[-1] <= rank_tol * s[0]:
        raise SingularityError("matrix is numerically singular")
    return s


def exterior_power_norm(M, k):
    """Operator norm of the k-fold exterior power: the product of the k
    largest singular values (|det M| when k = d)."""
    M = np.asarray(M, float)
    d = M.shape[0]
    if not 1 <= k <= d:
        raise ConfigurationError(f"k must lie in 1..{d}")
    s = singular_values(M)
    return float(np.prod(s[:k]))


def sym_root_spectrum(M, t):
    """Rates and eigenvectors of (M^T M)^(1/2t): log sigma_i / t with the
    right singular directions.  Small-t cross-check for the QR estimates."""
    if t <= 0.0:
        raise ConfigurationError("t must be > 0")
    _, s, Vt = np.linalg.svd(np.asarray(M, float))
    return np.log(s) / t, Vt.T


def _qr_pos(Z):
    """QR factorization with the R diagonal forced positive, which makes
    frames unique and log R_kk well defined."""
    Q, R = np.linalg.qr(Z)
    sign = np.sign(np.diag(R))
    sign[sign == 0.0] = 1.0
    return Q * sign, np.abs(np.diag(R))


# -- spectrum estimation ----------------------------------------------------------


def group_spectrum(raw, group_tol):
    """Greedy clustering of a descending exponent list: adjacent values are
    merged while their gap is <= group_tol.  Returns (groups, gap) with
    groups = [(lambda_i, d_i)] strictly decreasing and gap the smallest
    inter-group separation (None for a single group)."""
    raw = np.asarray(raw, float)
    if raw.size == 0:
        raise ConfigurationError("empty exponent list")
    if np.any(np.diff(raw) > 0.0):
        raise ConfigurationError("raw exponents must be sorted descending")
    clusters = [[raw[0]]]
    for v in raw[1:]:
        if clusters[-1][-1] - v <= group_tol:
            clusters[-1].append(v)
        else:
            clusters.append([v])
    groups = [(float(np.mean(c)), len(c)) for c in clusters]
    if len(groups) == 1:
        return groups, None
    gap = float(min(groups[i][0] - groups[i + 1][0] for i in range(len(groups) - 1)))
    if gap <= group_tol:
        raise ResolutionError("inter-group gap does not exceed group_tol; "
                              "horizon too short to resolve the spectrum")
    return groups, gap


@dataclass
class SpectrumEstimate:
    """Sorted exponent estimates with grouping.

    raw: Lambda_1 >= ... >= Lambda_d (units 1/time); lambdas/multiplicities:
    the grouped distinct exponents; gap: smallest inter-group separation;
    horizon: signed time span used; logdet_over_T: independently accumulated
    (1/|T|) log|det phi|, which must match sum(raw).
    """

    raw: np.ndarray
    lambdas: tuple
    multiplicities: tuple
    gap: float | None
    horizon: float
    logdet_over_T: float
    group_tol: float

    def __post_init__(self):
        self.raw = np.asarray(self.raw, float)
        if sum(self.multiplicities) != self.raw.size:
            raise StructuralError("multiplicities must sum to d")
        if any(self.lambdas[i] <= self.lambdas[i + 1]
               for i in range(len(self.lambdas) - 1)):
            raise StructuralError("grouped exponents must be strictly decreasing")
        defect = abs(float(np.sum(self.raw)) - self.logdet_over_T)
        if defect > 1e-6 * max(1.0, abs(self.logdet_over_T)):
            raise StructuralError(
                f"sum rule violated: sum(raw) - logdet/T = {defect:.3e}"
            )

    @property
    def p(self):
        return len(self.lambdas)

    @property
    def grouped(self):
        return list(zip(self.lambdas, self.multiplicities))

    @property
    def d(self):
        return self.raw.size


def _run_qr(ev, T, renorm_step):
    """Push a frame over windows covering [0, T] (T may be negative);
    returns per-direction log growths, the final frame, and the
    independently accumulated log|det|."""
    span = abs(T)
    if span < 10.0 * renorm_step:
        raise ConfigurationError("horizon must be at least 10 renorm steps")
    n = int(math.ceil(span / renorm_step - 1e-9))
    edges = np.linspace(0.0, T, n + 1)
    d = ev.d
    Q = np.eye(d)
    logs = np.zeros(d)
    logdet = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        B = ev.propagate(a, b)
        sign, ld = np.linalg.slogdet(B)
        if sign == 0.0:
            raise SingularityError("window propagator is singular")
        logdet += ld
        Q, diag = _qr_pos(B @ Q)
        if np.any(diag < 1e-280):
            raise InstabilityError("frame degenerated; shorten renorm_step")
        logs += np.log(diag)
    return logs, Q, logdet


def spectrum_qr(ev, T, renorm_step=1.0, group_tol=None):
    """Lyapunov spectrum over [0, T] by QR renormalization.

    group_tol defaults to 10/T, so the grouping resolution scales with the
    horizon.  The sum rule sum(raw) = (1/T) log|det phi(T)| is checked with
    a determinant accumulated independently of the QR diagonal.
    """
    if T <= 0.0:
        raise ConfigurationError("T must be > 0")
    logs, _, logdet = _run_qr(ev, T, renorm_step)
    raw = np.sort(logs / T)[::-1]
    tol = 10.0 / T if group_tol is None else group_tol
    groups, gap = group_spectrum(raw, tol)
    return SpectrumEstimate(raw, tuple(g[0] for g in groups),
                            tuple(g[1] for g in groups), gap, T, logdet / T, tol)


def backward_spectrum(ev, T, renorm_step=1.0, group_tol=None):
    """Spectrum of the time-reversed cocycle: growth rates of phi(-t) per
    unit |t|.  For the forward exponents lambda_1 > ... > lambda_p the
    grouped result is lambda^-_k = -lambda_{p+1-k} with reversed
    multiplicities."""
    if T <= 0.0:
        raise ConfigurationError("T must be > 0")
    logs, _, logdet = _run_qr(ev, -T, renorm_step)
    raw = np.sort(logs / T)[::-1]
    tol = 10.0 / T if group_tol is None else group_tol
    groups, gap = group_spectrum(raw, tol)
    return SpectrumEstimate(raw, tuple(g[0] for g in groups),
                            tuple(g[1] for g in groups), gap, -T, logdet / T, tol)


def vector_exponent(ev, x, T, renorm_step=1.0):
    """(1/T) log |phi(T) x| with periodic renormalization of the vector."""
    x = np.asarray(x, float)
    nrm = np.linalg.norm(x)
    if nrm == 0.0:
        raise ConfigurationError("x must be nonzero")
    if T <= 0.0:
        raise ConfigurationError("T must be > 0")
    n = max(1, int(math.ceil(T / renorm_step - 1e-9)))
    edges = np.linspace(0.0, T, n + 1)
    v = x / nrm
    acc = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        v = ev.propagate(a, b) @ v
        nv = np.linalg.norm(v)
        if nv == 0.0 or not math.isfinite(nv):
            raise InstabilityError("vector norm under/overflowed")
        acc += math.log(nv)
        v /= nv
    return acc / T


# -- flags -------------------------------------------------------------------------


def _grouping(g):
    """Normalize a grouping argument: SpectrumEstimate or [(lambda, mult)]."""
    if isinstance(g, SpectrumEstimate):
        return tuple(g.lambdas), tuple(g.multiplicities)
    lams, dims = zip(*g)
    return tuple(float(v) for v in lams), tuple(int(m) for m in dims)


class Flag:
    """Nested subspaces V_p c ... c V_1 = R^d stored as orthonormal blocks
    U_1, ..., U_p ordered by decreasing exponent; V_i = U_p + ... + U_i."""

    def __init__(self, blocks):
        self.blocks = tuple(np.atleast_2d(np.asarray(b, float)) for b in blocks)
        basis = np.hstack(self.blocks)
        d = basis.shape[0]
        if basis.shape[1] != d:
            raise StructuralError("block dimensions must sum to d")
        gram = basis.T @ basis
        if np.max(np.abs(gram - np.eye(d))) > 1e-10:
            raise StructuralError("concatenated flag basis is not orthonormal")
        self.d = d

    @property
    def dims(self):
        return tuple(b.shape[1] for b in self.blocks)

    @property
    def p(self):
        return len(self.blocks)

    @property
    def tau(self):
        """Flag type: cumulative dimensions (dim V_p, ..., dim V_1 = d)."""
        dims = self.dims
        return tuple(int(sum(dims[i:])) for i in range(len(dims) - 1, -1, -1))

    def nested_basis(self, i):
        """Orthonormal basis of V_i (1-based block index)."""
        return np.hstack(self.blocks[i - 1:])


def coordinate_flag(dims):
    """Flag whose blocks are consecutive coordinate axes."""
    d = sum(dims)
    eye = np.eye(d)
    blocks, k = [], 0
    for m in dims:
        blocks.append(eye[:, k:k + m])
        k += m
    return Flag(blocks)


def random_flag(dims, rng):
    """Haar-random flag of the given block dimensions."""
    d = sum(dims)
    Q, _ = _qr_pos(rng.standard_normal((d, d)))
    blocks, k = [], 0
    for m in dims:
        blocks.append(Q[:, k:k + m])
        k += m
    return Flag(blocks)


def flag_at(ev, t, grouping, scale_window=1.0, check=True):
    """Flag of right singular subspaces of phi(t), clustered by the given
    grouping.  The matrix is formed in scaled form (scalar rescaling keeps
    singular directions intact), so long horizons do not overflow; singular
    values that underflow the scaled form are only excluded from the
    consistency check, their directions still come from the SVD."""
    lams, dims = _grouping(grouping)
    M, logscale = ev.matrix_scaled(t, scale_window)
    _, s, Vt = np.linalg.svd(M)
    if sum(dims) != M.shape[0]:
        raise StructuralError("grouping does not cover the dimension")
    if check and t != 0.0:
        resolvable = s > s[0] * 1e-13
        rates = np.full(s.shape, -np.inf)
        rates[resolvable] = (np.log(s[resolvable]) + logscale) / t
        if t < 0.0:
            rates = -rates  # growth per unit |t| for reversed time
        k = 0
        for lam_i, (lam, m) in enumerate(zip(lams, dims)):
            blk = rates[k:k + m]
            ok = np.isfinite(blk)
            if np.any(ok):
                others = [l for j, l in enumerate(lams) if j != lam_i]
                for r in blk[ok]:
                    if others and min(abs(r - l) for l in others) < abs(r - lam):
                        raise ResolutionError(
                            "singular-value clusters inconsistent with grouping"
                        )
            k += m
    blocks, k = [], 0
    for m in dims:
        blocks.append(Vt[k:k + m].T)
        k += m
    return Flag(blocks)


@dataclass(frozen=True)
class FlagMetricParams:
    """Exponent labels and gap parameter h of the flag metric; valid when
    |lambda_i - lambda_j| >= (d-1) h for every pair."""

    lambdas: tuple
    h: float
    dim: int

    def __post_init__(self):
        object.__setattr__(self, "lambdas", tuple(float(v) for v in self.lambdas))
        if self.h <= 0.0:
            raise ConfigurationError("h must be > 0")
        for i in range(len(self.lambdas)):
            for j in range(i + 1, len(self.lambdas)):
                diff = abs(self.lambdas[i] - self.lambdas[j])
                if diff == 0.0:
                    raise ConfigurationError("block exponents must be distinct")
                if diff / self.h < (self.dim - 1) - 1e-12:
                    raise ConfigurationError(
                        "metric parameters violate |l_i - l_j|/h >= d-1"
                    )

    @classmethod
    def from_spectrum(cls, est, h=None):
        """Default h = gap/(d-1) from a grouped spectrum estimate."""
        if est.gap is None:
            raise ResolutionError("single exponent: the flag metric needs a gap")
        d = est.d
        if h is None:
            h = est.gap / max(1, d - 1)
        return cls(tuple(est.lambdas), float(h), d)


def flag_distance(F, G, params):
    """max over i != j of ||P_i Ptilde_j||_HS^(h/|lambda_i - lambda_j|),
    with P_i the orthogonal projector onto block U_i.  Zero iff the flags
    agree blockwise; symmetric because ||U_i^T V_j|| = ||V_j^T U_i||."""
    if F.dims != G.dims:
        raise StructuralError("flags have different types")
    if len(params.lambdas) != F.p:
        raise StructuralError("metric params do not match the flag type")
    best = 0.0
    for i in range(F.p):
        for j in range(F.p):
            if i == j:
                continue
            prod = np.linalg.norm(F.blocks[i].T @ G.blocks[j])
            expo = params.h / abs(params.lambdas[i] - params.lambdas[j])
            best = max(best, float(prod) ** expo)
    return best


@dataclass
class FlagConvergence:
    """log flag distances along increasing times, with points at the
    floating-point floor excluded from the slope fit."""

    times: np.ndarray
    log_distances: np.ndarray
    included: np.ndarray
    slope: float | None
    h: float

    @property
    def floor_reached(self):
        return bool(np.any(~self.included))


def flag_convergence_rate(ev, grouping, params, t_list, frame=None,
                          target=None, floor=None, renorm_step=1.0):
    """Convergence of push-forward frame flags to the limit flag.

    The frame (default: identity; pass a rotation to see a nontrivial
    transient) is pushed through the cocycle and QR-orthonormalized; its
    leading blocks span the images of the leading frame directions, which
    align with the limiting flag at rate e^(-h(d-1) t) per adjacent pair.
    Returns the log-distance series and the fitted slope over the points
    above the floating-point floor.

    For a diagonal closed-form backend (d = 2) with the coordinate target,
    the log-distance is computed in the log domain, so the decay stays
    resolvable far below the float64 alignment floor of a generic frame
    computation (~1e-16).
    """
    t_list = np.asarray(sorted(t_list), float)
    if t_list.size < 2:
        raise ConfigurationError("need at least two times to fit a slope")
    lams, dims = _grouping(grouping)
    d = ev.d
    if frame is None:
        frame = np.eye(d)
    frame = np.asarray(frame, float)

    exact = (hasattr(ev, "log_growth") and d == 2 and len(lams) == 2
             and target is None)
    if floor is None:
        # generic frames saturate at the float alignment level; the log-domain
        # path resolves distances down to the exp underflow limit
        floor = 1e-300 if exact else 1e-13
    logs = np.empty(t_list.size)
    if exact:
        g00, g10 = abs(frame[0, 0]), abs(frame[1, 0])
        for k, t in enumerate(t_list):
            lg = ev.log_growth(t)
            a = lg[0] + (math.log(g00) if g00 > 0.0 else -math.inf)
            b = lg[1] + (math.log(g10) if g10 > 0.0 else -math.inf)
            if b == -math.inf:
                log_sin = -math.inf
            elif a == -math.inf:
                log_sin = 0.0
            else:
                hi, lo = max(a, b), min(a, b)
                log_sin = b - hi - 0.5 * math.log1p(math.exp(2.0 * (lo - hi)))
            expo = params.h / abs(params.lambdas[0] - params.lambdas[1])
            logs[k] = expo * log_sin
    else:
        frames = []
        Q = _qr_pos(frame)[0]
        prev = 0.0
        for t in t_list:
            n = max(1, int(math.ceil(abs(t - prev) / renorm_step - 1e-9)))
            for a, b in zip(np.linspace(prev, t, n + 1)[:-1],
                            np.linspace(prev, t, n + 1)[1:]):
                Q, _ = _qr_pos(ev.propagate(a, b) @ Q)
            frames.append(Q.copy())
            prev = t
        if target is None:
            target = _frame_flag(frames[-1], dims)
        with np.errstate(divide="ignore"):
            for k, Q in enumerate(frames):
                dist = flag_distance(_frame_flag(Q, dims), target, params)
                logs[k] = math.log(dist) if dist > 0.0 else -math.inf

    included = logs > math.log(floor)
    slope = None
    if int(np.sum(included)) >= 2:
        slope = float(np.polyfit(t_list[included], logs[included], 1)[0])
    return FlagConvergence(t_list, logs, included, slope, params.h)


def _frame_flag(Q, dims):
    blocks, k = [], 0
    for m in dims:
        blocks.append(Q[:, k:k + m])
        k += m
    return Flag(blocks)


# -- Oseledets splitting -------------------------------------------------------------


def principal_angles(A, B):
    """Principal angles between the column spans of A and B (radians)."""
    A = np.atleast_2d(np.asarray(A, float))
    B = np.atleast_2d(np.asarray(B, float))
    qa, _ = np.linalg.qr(A)
    qb, _ = np.linalg.qr(B)
    s = np.linalg.svd(qa.T @ qb, compute_uv=False)
    return np.arccos(np.clip(s, -1.0, 1.0))


def _intersect(A, B, angle_tol):
    """Orthonormal basis of span(A) and span(B)'s intersection: directions
    whose principal cosine is >= 1 - angle_tol."""
    M = A.T @ B
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    keep = s >= 1.0 - angle_tol
    basis = A @ U[:, keep]
    if basis.shape[1] == 0:
        return basis
    Q, _ = np.linalg.qr(basis)
    return Q


@dataclass
class OseledetsSplit:
    """Direct-sum decomposition R^d = E_1 + ... + E_p with orthonormal
    bases per summand, ordered by decreasing exponent."""

    subspaces: tuple
    dims: tuple

    @property
    def p(self):
        return len(self.subspaces)

    def stacked(self):
        return np.hstack(self.subspaces)

    def angles_to(self, targets):
        """Largest principal angle of each E_i against a target basis."""
        return [float(np.max(principal_angles(E, T_))) if E.size else math.inf
                for E, T_ in zip(self.subspaces, targets)]


def oseledets_spaces(F_fwd, F_bwd, angle_tol=1e-6, rank_tol=1e-8):
    """Oseledets spaces E_i = V_i  intersect  V^-_{p+1-i} from the forward
    and backward flags, via principal-angle intersections.  Checks the
    dimension of every intersection and the direct-sum property."""
    p = F_fwd.p
    if F_bwd.p != p:
        raise StructuralError("flags have different numbers of blocks")
    if F_fwd.dims != tuple(reversed(F_bwd.dims)):
        raise StructuralError("backward multiplicities must be the reversed "
                              "forward multiplicities")
    subspaces = []
    for i in range(1, p + 1):
        Vi = F_fwd.nested_basis(i)
        Vb = F_bwd.nested_basis(p + 1 - i)
        E = _intersect(Vi, Vb, angle_tol)
        if E.shape[1] != F_fwd.dims[i - 1]:
            raise ResolutionError(
                f"intersection {i} has dimension {E.shape[1]}, expected "
                f"{F_fwd.dims[i - 1]}; increase the horizon or angle_tol"
            )
        subspaces.append(E)
    stacked = np.hstack(subspaces)
    smin = np.linalg.svd(stacked, compute_uv=False)[-1]
    if smin <= rank_tol:
        raise ResolutionError("summands do not span: smallest singular value "
                              f"{smin:.3e}")
    return OseledetsSplit(tuple(subspaces), F_fwd.dims)
