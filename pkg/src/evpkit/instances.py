"""Finite instances: metric space, set-valued objective, perturbation
families, the set-inclusion pre-order they induce, and the hypothesis
checkers used by the solvers.

The pre-order is ``x2 before x1`` iff every value of f at x1 lies in
``f(x2) + F(x2, x1) + cone`` for every member F of the perturbation family.
All order tests reduce to LP memberships from :mod:`evpkit.geometry`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .geometry import (DEFAULT_TOL, PolyhedralCone, Polytope, as_point,
                       cone_contains, minkowski_member, singleton,
                       validate_direction_set)


# ---------------------------------------------------------------------------
# Spaces and maps.
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MetricSpace:
    """Finite metric space given by labels and a distance matrix."""

    labels: tuple
    dist: np.ndarray

    def __post_init__(self):
        labels = tuple(self.labels)
        if len(labels) == 0:
            raise InputError("space needs at least one point")
        if len(set(labels)) != len(labels):
            raise InputError("duplicate labels")
        d = np.asarray(self.dist, dtype=float)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "dist", d)

    @property
    def n(self):
        return len(self.labels)

    def index(self, label):
        try:
            return self.labels.index(label)
        except ValueError:
            raise InputError(f"unknown label {label!r}") from None

    def d(self, a, b):
        return float(self.dist[self.index(a), self.index(b)])

    def validate(self, tol=DEFAULT_TOL):
        d = self.dist
        n = self.n
        if d.shape != (n, n):
            raise InputError(f"distance matrix must be {n}x{n}")
        if not np.all(np.isfinite(d)):
            raise InputError("distance matrix has non-finite entries")
        if np.any(np.abs(np.diag(d)) > tol):
            i = int(np.argmax(np.abs(np.diag(d))))
            raise InputError(f"nonzero self-distance at {self.labels[i]!r}")
        if np.max(np.abs(d - d.T)) > tol:
            i, j = np.unravel_index(np.argmax(np.abs(d - d.T)), d.shape)
            raise InputError(
                f"asymmetric distance between {self.labels[i]!r} and "
                f"{self.labels[j]!r}")
        off = d + np.diag([np.inf] * n)
        if np.min(off) <= tol:
            i, j = np.unravel_index(np.argmin(off), d.shape)
            raise InputError(
                f"distinct points {self.labels[i]!r}, {self.labels[j]!r} "
                f"at zero distance")
        # triangle inequality on all triples, vectorized:
        # viol[i, j, k] = d(i, k) - d(i, j) - d(j, k)
        viol = d[:, None, :] - d[:, :, None] - d[None, :, :]
        worst = np.unravel_index(np.argmax(viol), viol.shape)
        if viol[worst] > tol:
            i, j, k = worst
            raise InputError(
                "triangle inequality fails on "
                f"({self.labels[i]!r}, {self.labels[j]!r}, {self.labels[k]!r})")
        return self

    def min_positive_distance(self):
        if self.n == 1:
            return math.inf
        off = self.dist + np.diag([np.inf] * self.n)
        return float(np.min(off))


def metric_from_coordinates(labels, coords):
    """Euclidean metric induced by an embedding (axioms by construction)."""
    pts = np.asarray(coords, dtype=float)
    if pts.ndim != 2 or pts.shape[0] != len(labels):
        raise InputError("coordinates must be one row per label")
    diff = pts[:, None, :] - pts[None, :, :]
    return MetricSpace(tuple(labels), np.linalg.norm(diff, axis=2))


@dataclass(frozen=True, eq=False)
class QuasiMetric:
    """Nonnegative pair weight satisfying the directed triangle inequality
    and positivity off the diagonal. The Cauchy-style axiom is vacuous on
    finite spaces and is recorded, not checked."""

    mat: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mat", np.asarray(self.mat, dtype=float))

    def validate(self, tol=DEFAULT_TOL):
        p = self.mat
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise InputError("quasi-metric matrix must be square")
        if not np.all(np.isfinite(p)):
            raise InputError("quasi-metric has non-finite entries")
        if np.min(p) < -tol:
            raise InputError("quasi-metric has negative entries")
        n = p.shape[0]
        off = p + np.diag([np.inf] * n)
        if n > 1 and np.min(off) <= tol:
            i, j = np.unravel_index(np.argmin(off), p.shape)
            raise InputError(
                f"quasi-metric vanishes on distinct indices ({i}, {j})")
        viol = p[:, None, :] - p[:, :, None] - p[None, :, :]
        worst = np.unravel_index(np.argmax(viol), viol.shape)
        if viol[worst] > tol:
            raise InputError(
                f"directed triangle inequality fails on indices {worst}")
        return self


@dataclass(frozen=True, eq=False)
class SetValuedMap:
    """Label -> nonempty finite list of points, stored as row stacks."""

    values: dict

    def __post_init__(self):
        out = {}
        m = None
        for label, pts in self.values.items():
            arr = np.asarray(pts, dtype=float)
            if arr.size == 0:
                raise InputError(f"value set of {label!r} must be nonempty")
            if arr.ndim == 1:
                arr = arr.reshape(1, -1)
            if arr.ndim != 2:
                raise InputError(f"value set of {label!r} must be a point list")
            if not np.all(np.isfinite(arr)):
                raise InputError(f"value set of {label!r} has non-finite entries")
            if m is None:
                m = arr.shape[1]
            elif arr.shape[1] != m:
                raise InputError(f"value set of {label!r} has dimension "
                                 f"{arr.shape[1]}, expected {m}")
            out[label] = arr
        if not out:
            raise InputError("empty set-valued map")
        object.__setattr__(self, "values", out)
        object.__setattr__(self, "dim", m)

    def at(self, label):
        try:
            return self.values[label]
        except KeyError:
            raise InputError(f"no value set for label {label!r}") from None

    def all_points(self):
        return np.vstack(list(self.values.values()))


@dataclass(frozen=True, eq=False)
class FiniteInstance:
    """A metric space, a set-valued objective on it, and the ordering cone."""

    space: MetricSpace
    fmap: SetValuedMap
    cone: PolyhedralCone
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        if self.fmap.dim != self.cone.dim:
            raise InputError("value dimension does not match the cone")
        missing = [x for x in self.space.labels if x not in self.fmap.values]
        if missing:
            raise InputError(f"labels without value sets: {missing}")

    @property
    def labels(self):
        return self.space.labels


@dataclass(frozen=True)
class EvpParams:
    """Solver scalars; each supplied value must be strictly positive."""

    x0: object
    epsilon: float | None = None
    lam: float | None = None
    gamma: float | None = None
    tolerance: float = DEFAULT_TOL

    def __post_init__(self):
        for name in ("epsilon", "lam", "gamma"):
            v = getattr(self, name)
            if v is not None and not (v > 0):
                raise InputError(f"{name} must be strictly positive")
        if not (self.tolerance > 0):
            raise InputError("tolerance must be strictly positive")


# ---------------------------------------------------------------------------
# Perturbation families.  Each family enumerates, for an ordered pair of
# labels, the sets F(x2, x1) as (index, scale, polytope) triples meaning
# ``scale * conv(polytope)``.
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SingletonDirection:
    """F(x2, x1) = rate * d(x2, x1) * {k0}."""

    k0: np.ndarray
    rate: float

    def __post_init__(self):
        object.__setattr__(self, "k0", as_point(self.k0))
        if not self.rate > 0:
            raise InputError("rate must be strictly positive")
        object.__setattr__(self, "_H", singleton(self.k0))

    kind = "singleton"
    open_scaled = False

    def lambdas(self):
        return ("*",)

    def sets(self, space, x2, x1):
        return (("*", self.rate * space.d(x2, x1), self._H),)

    def validate(self, space, cone_, tol=DEFAULT_TOL):
        validate_direction_set(self._H, cone_, tol)
        return self


@dataclass(frozen=True, eq=False)
class PolytopeDirection:
    """F(x2, x1) = rate * d(x2, x1) * H for a fixed direction polytope H."""

    H: Polytope
    rate: float

    def __post_init__(self):
        if not self.rate > 0:
            raise InputError("rate must be strictly positive")

    kind = "polytope"
    open_scaled = False

    def lambdas(self):
        return ("*",)

    def sets(self, space, x2, x1):
        return (("*", self.rate * space.d(x2, x1), self.H),)

    def validate(self, space, cone_, tol=DEFAULT_TOL):
        validate_direction_set(self.H, cone_, tol)
        return self


@dataclass(frozen=True, eq=False)
class OpenPolytopeFamily(PolytopeDirection):
    """The family {rate' * d * H : 0 < rate' < rate}.

    For polyhedral data the feasible rates of any membership query form a
    closed interval starting at 0, so quantifying over the open interval is
    equivalent to testing the endpoint; the sets enumerated here are the
    endpoint sets and callers interpret conclusions accordingly.
    """

    kind = "open_polytope"
    open_scaled = True


@dataclass(frozen=True, eq=False)
class QuasiMetricDirection:
    """F(x2, x1) = p(x1, x2) * H (argument order per the quasi-metric form)."""

    H: Polytope
    p: QuasiMetric

    kind = "quasimetric"
    open_scaled = False

    def lambdas(self):
        return ("*",)

    def sets(self, space, x2, x1):
        scale = float(self.p.mat[space.index(x1), space.index(x2)])
        return (("*", scale, self.H),)

    def validate(self, space, cone_, tol=DEFAULT_TOL):
        validate_direction_set(self.H, cone_, tol)
        self.p.validate(tol)
        if self.p.mat.shape[0] != space.n:
            raise InputError("quasi-metric size does not match the space")
        return self


@dataclass(frozen=True, eq=False)
class ExtensionalFamily:
    """An explicit table (index, x2, x1) -> polytope over a finite index set."""

    indices: tuple
    table: dict  # (index, x2, x1) -> Polytope

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(self.indices))
        if not self.indices:
            raise InputError("extensional family needs at least one index")

    kind = "extensional"
    open_scaled = False

    def lambdas(self):
        return self.indices

    def sets(self, space, x2, x1):
        out = []
        for lam in self.indices:
            try:
                P = self.table[(lam, x2, x1)]
            except KeyError:
                raise InputError(
                    f"extensional family is not total: missing "
                    f"({lam!r}, {x2!r}, {x1!r})") from None
            out.append((lam, 1.0, P))
        return tuple(out)

    def validate(self, space, cone_, tol=DEFAULT_TOL):
        for x2 in space.labels:
            for x1 in space.labels:
                for lam, _, P in self.sets(space, x2, x1):
                    for v in P.vertices:
                        if not cone_contains(cone_, v, tol):
                            raise InputError(
                                f"family value for ({lam!r}, {x2!r}, {x1!r}) "
                                f"leaves the cone")
        return self


# ---------------------------------------------------------------------------
# The induced pre-order.
# ---------------------------------------------------------------------------

def _covered(inst, base_values, scale, H, y):
    return minkowski_member(y, base_values, scale, H, inst.cone, inst.tol)


def preceq(inst: FiniteInstance, fam, x2, x1):
    """True iff f(x1) lies in f(x2) + F(x2, x1) + cone for every family set."""
    vals1 = inst.fmap.at(x1)
    vals2 = inst.fmap.at(x2)
    for _, scale, H in fam.sets(inst.space, x2, x1):
        for y in vals1:
            if not _covered(inst, vals2, scale, H, y):
                return False
    return True


def relation_matrix(inst: FiniteInstance, fam):
    """rel[i, j] = True iff labels[i] precedes labels[j] in the order."""
    labels = inst.labels
    n = len(labels)
    rel = np.zeros((n, n), dtype=bool)
    for i, x2 in enumerate(labels):
        for j, x1 in enumerate(labels):
            rel[i, j] = preceq(inst, fam, x2, x1)
    return rel


def s_set(inst: FiniteInstance, fam, x):
    """The lower section of x: all labels that precede it."""
    return [x2 for x2 in inst.labels if preceq(inst, fam, x2, x)]


def ti_check(inst: FiniteInstance, fam):
    """Triangle-inclusion property of the family over all label triples.

    Structured distance-scaled families reduce to scaled-polytope inclusions
    per triple; an extensional family is searched exhaustively over its index
    set. Returns ``(True, None)`` or ``(False, witness_triple)``.
    """
    labels = inst.labels
    space = inst.space
    C = inst.cone
    tol = inst.tol
    if fam.kind == "extensional":
        for lam in fam.lambdas():
            for x1 in labels:
                for x3 in labels:
                    target = fam.table[(lam, x1, x3)]
                    for x2 in labels:
                        if not _ti_search(fam, space, C, tol, x1, x2, x3, target):
                            return False, (x1, x2, x3, lam)
        return True, None
    # distance-scaled: sum-scale polytope must embed in target-scale + cone
    for x1 in labels:
        for x2 in labels:
            for x3 in labels:
                (_, s12, H) = fam.sets(space, x1, x2)[0]
                (_, s23, _) = fam.sets(space, x2, x3)[0]
                (_, s13, _) = fam.sets(space, x1, x3)[0]
                s = s12 + s23
                if s <= tol and s13 <= tol:
                    continue
                for v in H.vertices:
                    if not minkowski_member(s * v, [np.zeros(C.dim)], s13, H,
                                            C, tol):
                        return False, (x1, x2, x3, "*")
    return True, None


def _ti_search(fam, space, C, tol, x1, x2, x3, target):
    zero = [np.zeros(C.dim)]
    for mu in fam.lambdas():
        for nu in fam.lambdas():
            F12 = fam.table[(mu, x1, x2)]
            F23 = fam.table[(nu, x2, x3)]
            ok = all(
                minkowski_member(u + v, zero, 1.0, target, C, tol)
                for u in F12.vertices for v in F23.vertices)
            if ok:
                return True
    return False


# ---------------------------------------------------------------------------
# Hypothesis checkers.
# ---------------------------------------------------------------------------

def scalar_inf(xi, values):
    """inf of the scalarization over a finite stack of value rows."""
    if getattr(xi, "is_linear", False):
        return float(np.min(values @ xi.weights))
    return min(xi.value(v) for v in values)


@dataclass
class AssumptionReport:
    """Per-hypothesis booleans with witness data.

    ``bounded``              finite scalar infimum over the start section
    ``strict_decrease``      the scalarized objective strictly drops along
                             every strict order step inside the section
    ``separated_pairs``      every distinct ordered pair admits a family set
                             with strictly positive scalar infimum
    ``separated_pointwise``  same with positivity at every point of the set
                             (coincides with the pair form on closed polytopes)
    ``separated_uniform``    a single family index is uniformly positive over
                             all pairs at any positive distance
    ``chains_stabilize``     recorded structurally: finite decreasing chains
                             of sections stabilize
    """

    start: object
    section: list
    bounded: bool
    inf_value: float
    strict_decrease: bool
    strict_decrease_witness: tuple | None
    separated_pairs: bool | None
    separated_pointwise: bool | None
    separated_uniform: bool | None
    separation_witness: dict | None
    chains_stabilize: str = "structural: finite instance"
    notes: tuple = ()

    def solvable(self):
        alternatives = [self.strict_decrease, self.separated_pairs,
                        self.separated_pointwise, self.separated_uniform]
        return self.bounded and any(a for a in alternatives if a is not None)

    def failed_name(self):
        if not self.bounded:
            return "bounded"
        return "strict_decrease"

    def to_dict(self):
        return {
            "start": self.start,
            "section": list(self.section),
            "bounded": self.bounded,
            "inf_value": self.inf_value,
            "strict_decrease": self.strict_decrease,
            "strict_decrease_witness": (
                list(self.strict_decrease_witness)
                if self.strict_decrease_witness else None),
            "separated_pairs": self.separated_pairs,
            "separated_pointwise": self.separated_pointwise,
            "separated_uniform": self.separated_uniform,
            "separation_witness": self.separation_witness,
            "chains_stabilize": self.chains_stabilize,
            "notes": list(self.notes),
        }


def check_assumptions(inst: FiniteInstance, fam, xi, x0):
    """Evaluate every named hypothesis by enumeration.

    Infima of a linear functional over polytopes are taken over vertices; the
    separation conditions are linear-functional-only and are reported as None
    for nonlinear scalarizations.
    """
    tol = inst.tol
    section = s_set(inst, fam, x0)
    if not section:
        return AssumptionReport(
            start=x0, section=[], bounded=False, inf_value=math.inf,
            strict_decrease=False, strict_decrease_witness=None,
            separated_pairs=None, separated_pointwise=None,
            separated_uniform=None, separation_witness=None,
            notes=("start section is empty",))

    eta = {x: scalar_inf(xi, inst.fmap.at(x)) for x in inst.labels}
    inf_value = min(eta[x] for x in section)
    bounded = math.isfinite(inf_value)

    strict = True
    strict_witness = None
    for x in section:
        if not math.isfinite(eta[x]):
            continue
        for xp in s_set(inst, fam, x):
            if xp == x:
                continue
            if not eta[x] - eta[xp] > tol:
                strict = False
                strict_witness = (x, xp, eta[x], eta[xp])
                break
        if not strict:
            break

    linear = getattr(xi, "is_linear", False)
    sep_pairs = sep_point = sep_uniform = None
    sep_witness = None
    notes = []
    if linear:
        sep_pairs, sep_point, pair_witness = _pairwise_separation(
            inst, fam, xi, section)
        sep_uniform, uniform_witness = _uniform_separation(inst, fam, xi)
        sep_witness = {"pairs": pair_witness, "uniform": uniform_witness}
        notes.append("pair separation: infimum over a closed polytope equals "
                     "its vertex minimum, so the pair and pointwise forms "
                     "coincide here")
    else:
        notes.append("separation conditions apply to linear functionals only")
    return AssumptionReport(
        start=x0, section=section, bounded=bounded, inf_value=inf_value,
        strict_decrease=strict, strict_decrease_witness=strict_witness,
        separated_pairs=sep_pairs, separated_pointwise=sep_point,
        separated_uniform=sep_uniform, separation_witness=sep_witness,
        notes=tuple(notes))


def _family_vertex_min(xi, scale, H):
    return float(scale * np.min(H.vertices @ xi.weights))


def _pairwise_separation(inst, fam, xi, section):
    tol = inst.tol
    witness = None
    ok = True
    for x in section:
        for xp in section:
            if x == xp:
                continue
            best = -math.inf
            for _, scale, H in fam.sets(inst.space, xp, x):
                best = max(best, _family_vertex_min(xi, scale, H))
            if not best > tol:
                ok = False
                witness = {"pair": [x, xp], "inf": best}
                return ok, ok, witness
    return ok, ok, witness


def _uniform_separation(inst, fam, xi):
    space = inst.space
    delta = space.min_positive_distance()
    if not math.isfinite(delta):
        return True, {"delta": None, "inf": math.inf,
                      "note": "no pairs at positive distance"}
    tol = inst.tol
    best_over_lams = -math.inf
    best_witness = None
    for lam in fam.lambdas():
        worst = math.inf
        for x in space.labels:
            for xp in space.labels:
                if space.d(x, xp) < delta:
                    continue
                for l2, scale, H in fam.sets(space, x, xp):
                    if l2 != lam:
                        continue
                    worst = min(worst, _family_vertex_min(xi, scale, H))
        if worst > best_over_lams:
            best_over_lams = worst
            best_witness = {"index": lam, "delta": delta, "inf": worst}
    return best_over_lams > tol, best_witness


# ---------------------------------------------------------------------------
# Probes and efficiency tests.
# ---------------------------------------------------------------------------

def _included_up_to_cone(fmap, a, b, C, tol):
    """f(a) subset of f(b) + cone."""
    base = fmap.at(b)
    return all(minkowski_member(y, base, 0.0, None, C, tol)
               for y in fmap.at(a))


def slm_probe(fmap: SetValuedMap, chain, limit, C: PolyhedralCone,
              tol=DEFAULT_TOL):
    """Sequential-lower-monotonicity probe along an explicit chain.

    True iff the decreasing premise ``f(x_n) subset f(x_{n+1}) + cone`` holds
    along the chain and every chain value set sits inside
    ``f(limit) + cone``; vacuously true when the premise already fails.
    """
    chain = list(chain)
    if len(chain) < 2:
        raise InputError("chain needs at least two elements")
    for a, b in zip(chain, chain[1:]):
        if not _included_up_to_cone(fmap, a, b, C, tol):
            return True  # premise fails: vacuous
    return all(_included_up_to_cone(fmap, a, limit, C, tol) for a in chain)


def epi_closed_probe(pairs, limit_pair, fmap: SetValuedMap,
                     C: PolyhedralCone, tol=DEFAULT_TOL):
    """Closedness probe for the cone-epigraph along a sampled sequence.

    Each chain pair must already lie in the epigraph (precondition, enforced);
    the probe reports whether the limit pair does too.
    """
    for x, y in pairs:
        if not minkowski_member(as_point(y), fmap.at(x), 0.0, None, C, tol):
            raise InputError(
                f"chain pair at {x!r} is not in the epigraph")
    xbar, ybar = limit_pair
    return minkowski_member(as_point(ybar), fmap.at(xbar), 0.0, None, C, tol)


def eps_h_efficient(inst: FiniteInstance, x0, epsilon, H: Polytope):
    """Approximate-efficiency test with direction set H.

    True iff some value of f at x0 escapes ``f(X) + epsilon*H + cone``; the
    escaping value is returned as the witness.
    """
    if not epsilon > 0:
        raise InputError("epsilon must be strictly positive")
    all_values = inst.fmap.all_points()
    for y0 in inst.fmap.at(x0):
        if not minkowski_member(y0, all_values, epsilon, H, inst.cone,
                                inst.tol):
            return True, y0
    return False, None


def d_bounded_certificate(inst: FiniteInstance):
    """A bounded set M with f(X) inside M + cone: the value points themselves."""
    return Polytope(inst.fmap.all_points())
