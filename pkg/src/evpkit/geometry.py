"""Polyhedral geometry kernel: cones, polytopes, linear functionals, and the
small dense LP feasibility routine every order test reduces to.

Conventions
-----------
* Points are 1-D float ndarrays of a fixed ambient dimension ``m``.
* A cone is given in halfspace form ``{y : A y >= 0}`` (rows are inward
  normals); an optional generator list is cross-validated against ``A``.
* All membership predicates take an explicit tolerance ``tol`` and accept a
  slack of ``-tol`` on every inequality, so oracle comparisons are consistent.
* Everything here is immutable after construction and free of shared state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, LinearProgramError

DEFAULT_TOL = 1e-9

_PIVOT_EPS = 1e-11
_MAX_SIMPLEX_ITERATIONS = 5000


def as_point(y, m=None):
    """Coerce to a finite 1-D float array, optionally checking the dimension."""
    arr = np.asarray(y, dtype=float)
    if arr.ndim != 1:
        raise InputError(f"point must be 1-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError("point has non-finite entries")
    if m is not None and arr.shape[0] != m:
        raise InputError(f"dimension mismatch: expected {m}, got {arr.shape[0]}")
    return arr


def _as_matrix(rows, m=None, name="matrix"):
    arr = np.asarray(rows, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise InputError(f"{name} must be a nonempty 2-D array")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} has non-finite entries")
    if m is not None and arr.shape[1] != m:
        raise InputError(f"{name}: dimension mismatch (expected {m} columns)")
    return arr


# ---------------------------------------------------------------------------
# LP kernel: phase-1 simplex with Bland's rule.
# ---------------------------------------------------------------------------

def _phase1(M, rhs, tol):
    """Find ``z >= 0`` with ``M z = rhs`` or return None.

    Rows with negative right-hand side are flipped; one artificial variable
    per row forms the starting basis; Bland's rule (lowest entering index,
    lowest basic index on ratio ties) guarantees termination, with a hard
    iteration cap as a backstop.
    """
    M = np.array(M, dtype=float)
    rhs = np.array(rhs, dtype=float)
    m, n = M.shape
    flip = rhs < 0
    M[flip] *= -1.0
    rhs[flip] *= -1.0

    # tableau: [M | I | rhs] with the phase-1 objective row appended
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = M
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = rhs
    T[m, :n] = -M.sum(axis=0)
    T[m, -1] = -rhs.sum()
    basis = list(range(n, n + m))

    for _ in range(_MAX_SIMPLEX_ITERATIONS):
        reduced = T[m, :-1]
        entering = -1
        for j in range(n + m):
            if reduced[j] < -_PIVOT_EPS:
                entering = j
                break
        if entering < 0:
            break
        col = T[:m, entering]
        rows = np.nonzero(col > _PIVOT_EPS)[0]
        if rows.size == 0:
            return None
        ratios = T[rows, -1] / col[rows]
        best = ratios.min()
        ties = rows[ratios <= best + _PIVOT_EPS]
        leave = min(ties, key=lambda r: basis[r])
        piv = T[leave, entering]
        T[leave] /= piv
        for r in range(m + 1):
            if r != leave:
                f = T[r, entering]
                if f != 0.0:
                    T[r] -= f * T[leave]
        basis[leave] = entering
    else:
        raise LinearProgramError("phase-1 simplex exceeded its iteration cap")

    feas_tol = max(tol, 1e-10)
    if T[m, -1] < -feas_tol:
        return None
    z = np.zeros(n + m)
    for r, bv in enumerate(basis):
        z[bv] = max(T[r, -1], 0.0)
    if z[n:].sum() > feas_tol:
        return None
    return z[:n]


def _feasible_nonneg(A_eq, b_eq, A_ge, b_ge, tol):
    """Existence of ``z >= 0`` with ``A_eq z = b_eq`` and ``A_ge z >= b_ge``.

    Returns the witness ``z`` or None. Either block may be empty.
    """
    blocks = []
    rhs = []
    n = None
    n_ge = 0
    if A_ge is not None and len(A_ge) > 0:
        A_ge = np.asarray(A_ge, dtype=float)
        b_ge = np.asarray(b_ge, dtype=float)
        n = A_ge.shape[1]
        n_ge = A_ge.shape[0]
    if A_eq is not None and len(A_eq) > 0:
        A_eq = np.asarray(A_eq, dtype=float)
        b_eq = np.asarray(b_eq, dtype=float)
        n = A_eq.shape[1]
    if n is None:
        raise InputError("empty system")
    # surplus variables turn A_ge z >= b_ge into equalities
    if n_ge:
        top = np.hstack([A_ge, -np.eye(n_ge)])
        blocks.append(top)
        rhs.append(b_ge)
    if A_eq is not None and len(A_eq) > 0:
        blocks.append(np.hstack([A_eq, np.zeros((A_eq.shape[0], n_ge))]))
        rhs.append(b_eq)
    M = np.vstack(blocks)
    r = np.concatenate(rhs)
    z = _phase1(M, r, tol)
    if z is None:
        return None
    return z[:n]


def lp_feasible(ineqs, tol=DEFAULT_TOL):
    """Decide feasibility of ``a_i . x >= b_i`` over free variables.

    ``ineqs`` is a sequence of ``(coefficients, rhs)`` pairs. Returns
    ``(True, witness)`` with a witness satisfying every inequality within
    ``tol``, or ``(False, None)``. Deterministic for fixed input.
    """
    if not ineqs:
        raise InputError("no inequalities given")
    G = _as_matrix([a for a, _ in ineqs], name="inequality coefficients")
    h = np.asarray([b for _, b in ineqs], dtype=float)
    if not np.all(np.isfinite(h)):
        raise InputError("inequality rhs has non-finite entries")
    n = G.shape[1]
    # free x = u - v with u, v >= 0
    A_ge = np.hstack([G, -G])
    z = _feasible_nonneg(None, None, A_ge, h, tol)
    if z is None:
        return False, None
    x = z[:n] - z[n:]
    if np.min(G @ x - h) < -tol:
        # the tableau solution drifted past the caller's tolerance
        return False, None
    return True, x


# ---------------------------------------------------------------------------
# Domain types.
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PolyhedralCone:
    """Closed convex cone ``{y : halfspaces @ y >= 0}`` with optional generators.

    The cone must be nontrivial: neither ``{0}`` nor the whole space. When
    generators are supplied each must satisfy the halfspace rows (within the
    construction tolerance).
    """

    halfspaces: np.ndarray
    generators: np.ndarray | None = None

    def __post_init__(self):
        A = _as_matrix(self.halfspaces, name="halfspaces")
        object.__setattr__(self, "halfspaces", A)
        if self.generators is not None:
            G = _as_matrix(self.generators, m=A.shape[1], name="generators")
            object.__setattr__(self, "generators", G)

    @property
    def dim(self):
        return self.halfspaces.shape[1]

    def validate(self, tol=DEFAULT_TOL):
        """Check nontriviality and generator consistency; raise InputError."""
        A = self.halfspaces
        if np.all(np.abs(A) <= tol):
            raise InputError("cone is the whole space (all halfspace rows vanish)")
        if self.generators is not None:
            prods = A @ self.generators.T
            if prods.min() < -tol:
                i, j = np.unravel_index(np.argmin(prods), prods.shape)
                raise InputError(
                    f"generator {j} violates halfspace row {i} "
                    f"(value {prods[i, j]:.3g})"
                )
            if np.any(np.linalg.norm(self.generators, axis=1) > tol):
                return self
        # no nonzero generator certificate: look for any nonzero member
        m = self.dim
        for j in range(m):
            for sign in (1.0, -1.0):
                e = np.zeros(m)
                e[j] = sign
                ineqs = [(row, 0.0) for row in A] + [(e, 1.0)]
                ok, _ = lp_feasible(ineqs, tol)
                if ok:
                    return self
        raise InputError("cone is trivial ({0})")


def cone(halfspaces, generators=None, tol=DEFAULT_TOL):
    """Build and validate a PolyhedralCone."""
    return PolyhedralCone(halfspaces, generators).validate(tol)


def orthant(m):
    """The nonnegative orthant of dimension m."""
    return PolyhedralCone(np.eye(m), np.eye(m))


@dataclass(frozen=True, eq=False)
class Polytope:
    """Convex hull of a nonempty finite vertex list."""

    vertices: np.ndarray

    def __post_init__(self):
        V = _as_matrix(self.vertices, name="vertices")
        object.__setattr__(self, "vertices", V)

    @property
    def dim(self):
        return self.vertices.shape[1]

    def scaled(self, s):
        return Polytope(s * self.vertices)


def singleton(point):
    return Polytope(np.asarray(point, dtype=float).reshape(1, -1))


def validate_direction_set(H: Polytope, C: PolyhedralCone, tol=DEFAULT_TOL):
    """Check the perturbation-set role invariants: vertices in C, none zero."""
    if H.dim != C.dim:
        raise InputError("direction set dimension does not match the cone")
    for j, v in enumerate(H.vertices):
        if np.linalg.norm(v, ord=np.inf) <= tol:
            raise InputError(f"direction-set vertex {j} is zero")
        if not cone_contains(C, v, tol):
            raise InputError(f"direction-set vertex {j} lies outside the cone")
    return H


@dataclass(frozen=True, eq=False)
class LinearFunctional:
    """``y -> weights . y``, optionally carrying the positivity margin alpha
    certified on a direction set (min over its vertices)."""

    weights: np.ndarray
    alpha: float | None = None

    def __post_init__(self):
        w = as_point(self.weights)
        object.__setattr__(self, "weights", w)

    is_linear = True

    def value(self, y):
        return float(self.weights @ np.asarray(y, dtype=float))

    def scaled(self, s):
        return LinearFunctional(s * self.weights,
                                None if self.alpha is None else s * self.alpha)


# ---------------------------------------------------------------------------
# Membership operations.
# ---------------------------------------------------------------------------

def cone_contains(C: PolyhedralCone, y, tol=DEFAULT_TOL):
    """True iff every halfspace row of C evaluates to >= -tol at y."""
    y = as_point(y, C.dim)
    return bool(np.all(C.halfspaces @ y >= -tol))


def _cone_contains_many(C, Y, tol):
    """Row-wise cone membership for a stack of points (no validation)."""
    return np.all(Y @ C.halfspaces.T >= -tol, axis=1)


def minkowski_member(y, base, scale, H: Polytope | None, C: PolyhedralCone,
                     tol=DEFAULT_TOL):
    """Membership of ``y`` in ``base + scale*conv(H) + C``.

    True iff some base point ``b`` and convex weights over the vertices of H
    put ``y - b - scale * sum(w_j h_j)`` inside C. With H absent (or zero
    scale) this reduces to ``y - b in C``. Decided per base point: cheap
    single-vertex checks first, then exact LP feasibility.
    """
    y = as_point(y, C.dim)
    B = _as_matrix(base, m=C.dim, name="base") if len(base) else None
    if B is None:
        raise InputError("empty base set")
    if scale < 0:
        raise InputError("scale must be nonnegative")

    diffs = y[None, :] - B
    if H is None or scale <= tol:
        return bool(np.any(_cone_contains_many(C, diffs, tol)))

    V = H.vertices
    if V.shape[1] != C.dim:
        raise InputError("polytope dimension does not match the cone")
    # single-vertex sufficient check: y - b - scale*v in C for some vertex v
    for v in V:
        if np.any(_cone_contains_many(C, diffs - scale * v, tol)):
            return True
    if V.shape[0] == 1:
        return False
    # necessary filter when conv(H) sits inside C: then scale*H + C <= C
    if np.all(_cone_contains_many(C, V, tol)):
        candidate_rows = np.nonzero(_cone_contains_many(C, diffs, tol))[0]
        if candidate_rows.size == 0:
            return False
    else:
        candidate_rows = range(diffs.shape[0])

    A = C.halfspaces
    AV = A @ V.T  # k x J
    J = V.shape[0]
    ones = np.ones((1, J))
    for r in candidate_rows:
        target = A @ diffs[r]
        # weights w >= 0, sum w = 1, A(y-b) - scale*AV w >= -tol
        witness = _feasible_nonneg(
            A_eq=ones, b_eq=np.array([1.0]),
            A_ge=-scale * AV, b_ge=-(target + tol),
            tol=tol,
        )
        if witness is not None:
            return True
    return False


def polytope_contains(P: Polytope, y, tol=DEFAULT_TOL):
    """Exact membership of y in conv(P.vertices), via LP within tol."""
    y = as_point(y, P.dim)
    V = P.vertices
    if np.any(np.linalg.norm(V - y, ord=np.inf, axis=1) <= tol):
        return True
    J, m = V.shape
    if J == 1:
        return False
    A_eq = np.vstack([V.T, np.ones((1, J))])
    b_eq = np.concatenate([y, [1.0]])
    return _feasible_nonneg(A_eq, b_eq, None, None, tol) is not None


def strictly_positive_functional(H: Polytope, C: PolyhedralCone,
                                 tol=DEFAULT_TOL):
    """A functional in the dual cone of C that is >= 1 on every vertex of H.

    Searches ``w = A^T mu`` with ``mu >= 0`` (exactly the dual cone of a
    halfspace-form C) subject to ``w . h >= 1`` per vertex. Returns a
    LinearFunctional carrying ``alpha = min_H w . h``, or None when the LP is
    infeasible, which in the polyhedral setting certifies that 0 lies in the
    closure of H + C.
    """
    validate_direction_set(H, C, tol)
    A = C.halfspaces
    rows = H.vertices @ A.T  # per vertex h: coefficients (A h) . mu
    mu = _feasible_nonneg(None, None, rows, np.ones(rows.shape[0]), tol)
    if mu is None:
        return None
    w = A.T @ mu
    alpha = float(np.min(H.vertices @ w))
    return LinearFunctional(w, alpha=alpha)
