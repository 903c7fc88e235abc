"""Shared helpers for the test suite: deterministic random cones, instances,
and scalarizations."""

import os

import numpy as np

from evpkit.errors import PremiseError
from evpkit.geometry import Polytope, cone, singleton
from evpkit.io import generate, load_validate

FIXTURES = os.path.join(os.path.dirname(__file__), os.pardir, "fixtures")


def fixture_path(name):
    return os.path.join(FIXTURES, name)


def random_cone(rng, m, rows=None):
    """A validated random polyhedral cone plus a direction k0 inside it with
    -k0 outside (every row strictly positive on k0)."""
    k0 = rng.uniform(0.5, 1.5, size=m)
    rows = rows or int(rng.integers(m, m + 3))
    A = []
    while len(A) < rows:
        a = rng.normal(size=m)
        a /= np.linalg.norm(a)
        if abs(a @ k0) < 0.2:
            continue
        if a @ k0 < 0:
            a = -a
        A.append(a)
    return cone(np.array(A)), k0


def pointed_cone(rng, m):
    """Invertible-row cone: A y >= 0 and -A y >= 0 force y = 0."""
    while True:
        A = np.eye(m) + rng.uniform(-0.25, 0.25, size=(m, m))
        if abs(np.linalg.det(A)) > 0.1:
            return cone(A)


def sample_cone_member(rng, C, k0, scale=1.0):
    """Rejection-sample a cone member near the k0 direction."""
    for _ in range(200):
        d = scale * (rng.uniform(0.0, 1.0) * k0 +
                     rng.normal(scale=0.2 * scale, size=C.dim))
        if np.all(C.halfspaces @ d >= 0):
            return d
    return scale * rng.uniform(0.0, 1.0) * k0


VARIANT_CYCLE = ("singleton", "polytope", "open_polytope", "quasimetric",
                 "extensional")


def generated_bundle(seed, n=4, m=2, values_per_point=2, variant="singleton"):
    return load_validate(generate(seed, n=n, m=m,
                                  values_per_point=values_per_point,
                                  variant=variant))


def direction_polytope(bundle):
    spec = bundle.raw["perturbation"]
    if spec["variant"] == "singleton":
        return singleton(spec["k0"])
    if "vertices" in spec:
        return Polytope(spec["vertices"])
    rows = []
    fam = bundle.family
    space = bundle.instance.space
    for x2 in space.labels:
        for x1 in space.labels:
            if x1 == x2:
                continue
            for _, scale, H in fam.sets(space, x2, x1):
                rows.extend((scale * H.vertices).tolist())
    return Polytope(rows)


def random_cone_instance(rng, n=4, values=2):
    """Instance over a non-orthant random cone with a matching direction
    family and separating functional."""
    from evpkit.geometry import strictly_positive_functional
    from evpkit.instances import (FiniteInstance, SetValuedMap,
                                  SingletonDirection, metric_from_coordinates)
    m = int(rng.integers(1, 4))
    C, k0 = random_cone(rng, m)
    labels = tuple(f"r{i}" for i in range(n))
    coords = rng.uniform(0.0, 3.0, size=(n, 2))
    for i in range(1, n):
        while np.min(np.linalg.norm(coords[:i] - coords[i], axis=1)) < 0.05:
            coords[i] = rng.uniform(0.0, 3.0, size=2)
    space = metric_from_coordinates(labels, coords).validate()
    fmap = SetValuedMap({lab: rng.normal(size=(values, m)) * 2.0
                         for lab in labels})
    inst = FiniteInstance(space, fmap, C)
    fam = SingletonDirection(k0, float(rng.uniform(0.3, 1.2)))
    xi = strictly_positive_functional(singleton(k0), C)
    assert xi is not None
    return inst, fam, xi


def grow_epsilon(fn, start=0.25, cap=1e6):
    """Double epsilon until the premise-checking callable succeeds."""
    eps = start
    while eps < cap:
        try:
            return eps, fn(eps)
        except PremiseError:
            eps *= 2.0
    raise AssertionError("no epsilon satisfied the premise")
