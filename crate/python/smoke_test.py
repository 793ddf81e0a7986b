"""Smoke test for the flatspace Python extension.

Build and install first:  pip install --no-build-isolation -e crates/py
"""

import itertools
import json
import math
import random

import flatspace


def close(a, b, tol=1e-9):
    return abs(a - b) <= tol


def test_assignment():
    rng = random.Random(0)
    for n in range(1, 6):
        cost = [[rng.uniform(0, 10) for _ in range(n)] for _ in range(n)]
        perm, total = flatspace.solve_assignment(cost)
        brute = min(sum(cost[i][p[i]] for i in range(n)) for p in itertools.permutations(range(n)))
        assert sorted(perm) == list(range(n))
        assert close(total, brute), (total, brute)


def test_empirical_measure():
    rng = random.Random(1)
    x = [[rng.uniform(-1, 1), rng.uniform(-1, 1)] for _ in range(4)]
    y = [[rng.uniform(-1, 1), rng.uniform(-1, 1)] for _ in range(4)]
    q = flatspace.perm_quotient_distance(x, y, normalized=True)
    w = flatspace.w2_discrete(x, [0.25] * 4, y, [0.25] * 4)
    assert close(q, w), (q, w)


def test_metric_space():
    space = flatspace.FiniteMetricSpace([[0, 3, 4], [3, 0, 5], [4, 5, 0]], ["a", "b", "c"])
    assert len(space) == 3 and space.diameter() == 5
    assert close(space.scaled(2.0).distance(0, 2), 8.0)
    again = flatspace.FiniteMetricSpace.from_json(space.to_json())
    assert again.matrix == space.matrix
    try:
        flatspace.FiniteMetricSpace([[0, 1, 5], [1, 0, 1], [5, 1, 0]])
    except flatspace.FlatspaceError:
        pass
    else:
        raise AssertionError("triangle inequality violation accepted")


def test_groups_and_quotients():
    su2 = flatspace.Group.su2()
    a, b = su2.random(2, seed=3)
    assert close(su2.distance(a, b), su2.distance(su2.compose(a, a), su2.compose(a, b)))
    circle = flatspace.Group.circle()
    d = flatspace.diagonal_quotient_distance(circle, ([0.0], [1.0]), ([2.0], [2.5]), 1024)
    assert abs(d - 0.5) <= 2 * 2 * math.pi / 1024, d
    s3 = [list(p) for p in itertools.permutations(range(3))]
    x, y = [0.1, 0.7, -0.4], [0.6, -0.5, 0.2]
    brute = min(math.dist(x, [y[i] for i in p]) for p in s3)
    assert close(flatspace.euclidean_quotient_distance(x, y, s3), brute, 1e-12)
    assert flatspace.compactified_distance(x, y, s3, 1.0) <= brute + 1e-12
    assert close(circle.local_embedding_distortion(math.pi), 2 / math.pi)


def test_pipeline():
    config = json.dumps({"group": {"kind": "torus", "circumference": 2 * math.pi}, "depth": 2, "nets": [16, 16]})
    report = json.loads(flatspace.run_pipeline(config, [[0.0], [math.pi / 2], [math.pi]]))
    assert 1.0 <= report["distortion"] <= 1.2, report["distortion"]
    assert report["upper_bound_holds"] and report["projection_holds"]


def test_markov():
    p = 0.1
    pi, a = [0.5, 0.5], [[1 - p, p], [p, 1 - p]]
    for t in range(1, 11):
        r = flatspace.markov_ratio(pi, a, [[0, 1], [1, 0]], t)
        assert close(r, (1 - (1 - 2 * p) ** t) / (2 * t * p), 1e-12)
    assert flatspace.markov_ratio(pi, a, [[0, 0], [0, 0]], 3) is None
    report = json.loads(flatspace.verify_markov_type2("torus", trials=20, seed=4))
    assert report["pass"]
    assert not json.loads(flatspace.verify_markov_type2("sphere", trials=5, k=0.5))["pass"]


if __name__ == "__main__":
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_")]
    for test in tests:
        test()
        print(f"ok  {test.__name__}")
    print(f"{len(tests)} smoke tests passed")
