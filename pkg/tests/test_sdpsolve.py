import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from infnet.sdpsolve import (ProblemBuilder, SdpError, SdpProblem, smat, solve,
                             solve_feasibility_with_margin, svec, with_margin)


def build(dims, objective=(), constraints=(), n_free=0, free_obj=None):
    """Problem from dense data.

    objective: list of C_k per block.  constraints: list of (free_coefs, [A_k...], rhs).
    """
    pb = ProblemBuilder()
    free = pb.add_free(n_free) if n_free else np.zeros(0, dtype=int)
    ks = [pb.add_block(d) for d in dims]
    maps = [pb.block_entry_map(k) for k in ks]

    def expr(mats, free_coefs=None):
        e = {}
        for (coord, scale), M in zip(maps, mats):
            if M is None:
                continue
            M = np.asarray(M, dtype=float)
            for (i, j), v in np.ndenumerate(M):
                if v:
                    e[int(coord[i, j])] = e.get(int(coord[i, j]), 0.0) + v * scale[i, j]
        if free_coefs is not None:
            for f, v in zip(free, free_coefs):
                if v:
                    e[int(f)] = e.get(int(f), 0.0) + v
        return e

    pb.set_objective(expr(list(objective), free_obj))
    for fc, mats, rhs in constraints:
        pb.add_equality(expr(mats, fc), rhs)
    return pb.build()


def unit(d, i, j):
    E = np.zeros((d, d))
    E[i, j] = E[j, i] = 1.0 if i == j else 0.5
    return E


def _sym(rng, d):
    A = rng.standard_normal((d, d))
    return (A + A.T) / 2


# ---------------------------------------------------------------------------
# analytic suite
# ---------------------------------------------------------------------------


def _cases():
    rng = np.random.default_rng(7)
    cases = []

    C = _sym(rng, 3)
    cases.append(("min eigenvalue", build([3], [C], [(None, [np.eye(3)], 1.0)]), np.linalg.eigvalsh(C)[0]))
    cases.append(("max eigenvalue", build([3], [-C], [(None, [np.eye(3)], 1.0)]), -np.linalg.eigvalsh(C)[-1]))

    cases.append(("fixed diagonal trace", build([2], [np.eye(2)], [(None, [unit(2, 0, 0)], 1.0),
                                                                  (None, [unit(2, 1, 1)], 1.0)]), 2.0))
    cases.append(("most negative correlation",
                  build([2], [unit(2, 0, 1)], [(None, [unit(2, 0, 0)], 1.0), (None, [unit(2, 1, 1)], 1.0)]), -1.0))

    c = np.array([3.0, -1.0, 2.0])
    cases.append(("simplex lp", build([1, 1, 1], [[[ci]] for ci in c],
                                      [(None, [[[1.0]], [[1.0]], [[1.0]]], 1.0)]), c.min()))

    # X = [[x, b], [b, a]] >= 0 with a, b fixed: min x = b^2 / a
    a, bb = 2.0, 3.0
    cases.append(("schur 2x2", build([2], [unit(2, 0, 0)], [(None, [unit(2, 1, 1)], a),
                                                            (None, [unit(2, 0, 1)], bb)]), bb ** 2 / a))

    Apd = _sym(rng, 3) + 3 * np.eye(3)
    cases.append(("trace under linear constraint", build([3], [np.eye(3)], [(None, [Apd], 1.0)]),
                  1.0 / np.linalg.eigvalsh(Apd)[-1]))

    v = np.array([0.5, -1.5, 2.0])
    cons = [(None, [unit(4, i, j)], 1.0 if i == j else 0.0) for i in range(1, 4) for j in range(1, i + 1)]
    cons += [(None, [unit(4, 0, i + 1)], v[i]) for i in range(3)]
    cases.append(("norm squared", build([4], [unit(4, 0, 0)], cons), v @ v))

    C1, C2 = _sym(rng, 2), _sym(rng, 3)
    cases.append(("two blocks", build([2, 3], [C1, C2], [(None, [np.eye(2), np.eye(3)], 1.0)]),
                  min(np.linalg.eigvalsh(C1)[0], np.linalg.eigvalsh(C2)[0])))

    # Lovasz theta of the 5-cycle
    edges = [(i, (i + 1) % 5) for i in range(5)]
    cons = [(None, [np.eye(5)], 1.0)] + [(None, [unit(5, i, j)], 0.0) for i, j in edges]
    cases.append(("lovasz theta C5", build([5], [-np.ones((5, 5))], cons), -np.sqrt(5.0)))

    # min y  s.t.  y = X00,  X = [[X00, 1], [1, 4]] >= 0
    cons = [([1.0], [-unit(2, 0, 0)], 0.0), ([0.0], [unit(2, 0, 1)], 1.0), ([0.0], [unit(2, 1, 1)], 4.0)]
    cases.append(("free variable", build([2], [None], cons, n_free=1, free_obj=[1.0]), 0.25))

    # min y  s.t.  y - x = 1,  x >= 0
    cases.append(("free shift", build([1], [None], [([1.0], [[[-1.0]]], 1.0)], n_free=1, free_obj=[1.0]), 1.0))
    return cases


CASES = _cases()


@pytest.mark.parametrize("name,prob,expected", CASES, ids=[c[0] for c in CASES])
def test_analytic_optimum(name, prob, expected):
    sol = solve(prob)
    assert sol.status == "optimal"
    assert abs(sol.objective - expected) <= 1e-7 * max(1.0, abs(expected))
    assert sol.min_eig >= -1e-8
    assert sol.residual <= 1e-7


def test_analytic_suite_size():
    assert len(CASES) >= 10


# ---------------------------------------------------------------------------
# infeasibility
# ---------------------------------------------------------------------------


def test_negative_diagonal_infeasible():
    prob = build([1], [None], [(None, [[[1.0]]], -1.0)])
    sol = solve(prob)
    assert sol.status == "infeasible"
    y = sol.certificate
    assert y is not None and prob.b @ y > 0


def test_not_psd_completion_infeasible():
    cons = [(None, [unit(2, 0, 0)], 1.0), (None, [unit(2, 1, 1)], 1.0), (None, [unit(2, 0, 1)], 2.0)]
    sol = solve(build([2], [np.eye(2)], cons))
    assert sol.status == "infeasible"


def test_contradictory_equalities():
    cons = [(None, [unit(2, 0, 0)], 1.0), (None, [unit(2, 0, 0)], 2.0)]
    sol = solve_feasibility_with_margin(build([2], [None], cons))
    assert sol.status == "infeasible"
    assert sol.certificate is not None


# ---------------------------------------------------------------------------
# margin maximisation
# ---------------------------------------------------------------------------


def test_margin_equals_min_eigenvalue():
    X = np.array([[2.0, 1.0], [1.0, 2.0]])
    cons = [(None, [unit(2, i, j)], X[i, j]) for i in range(2) for j in range(i + 1)]
    sol = solve_feasibility_with_margin(build([2], [None], cons))
    assert sol.status == "optimal"
    assert sol.margin == pytest.approx(1.0, abs=1e-7)
    assert np.allclose(sol.blocks[0].to_array(), X, atol=1e-7)


def test_margin_is_capped():
    sol = solve_feasibility_with_margin(build([1], [None], [([1.0], [[[1.0]]], 0.0)], n_free=1), t_max=50.0)
    assert sol.margin == pytest.approx(50.0, rel=1e-6)


def test_margin_below_threshold_is_infeasible():
    # X = diag(1, 0) is the only solution, margin 0
    cons = [(None, [unit(2, 0, 0)], 1.0), (None, [unit(2, 1, 1)], 0.0), (None, [unit(2, 0, 1)], 0.0)]
    sol = solve_feasibility_with_margin(build([2], [None], cons))
    assert sol.status == "infeasible"
    assert abs(sol.margin) < 1e-6


def test_with_margin_layout():
    prob = build([2, 1], [None, None], [(None, [np.eye(2), [[1.0]]], 3.0)])
    aug = with_margin(prob)
    assert aug.n_free == prob.n_free + 1 and aug.margin_var == 0
    assert aug.A[0, 0] == pytest.approx(3.0)
    assert aug.c[0] == -1.0 and not aug.c[1:].any()


# ---------------------------------------------------------------------------
# containers
# ---------------------------------------------------------------------------


@given(st.integers(1, 6), st.integers(0, 2 ** 31))
def test_svec_roundtrip_and_inner_product(d, seed):
    rng = np.random.default_rng(seed)
    A, B = _sym(rng, d), _sym(rng, d)
    assert np.allclose(smat(svec(A), d), A)
    assert svec(A) @ svec(B) == pytest.approx(np.sum(A * B), abs=1e-10)


def test_dump_load_roundtrip(tmp_path):
    prob = CASES[-2][1]
    prob.dump(tmp_path / "p.txt")
    back = SdpProblem.load(tmp_path / "p.txt")
    assert back.blocks == prob.blocks and back.n_free == prob.n_free
    assert np.array_equal(back.b, prob.b) and np.array_equal(back.c, prob.c)
    assert (back.A != prob.A).nnz == 0


def test_inconsistent_dimensions_rejected():
    with pytest.raises(SdpError):
        SdpProblem(0, [2], np.zeros(2), np.zeros((1, 3)), np.zeros(1))
    with pytest.raises(SdpError):
        SdpProblem(0, [0], np.zeros(0), np.zeros((1, 0)), np.zeros(1))


# ---------------------------------------------------------------------------
# random strictly feasible problems
# ---------------------------------------------------------------------------


def _random_feasible(seed, dims, m):
    """Primal X0 > 0 and dual slack S0 > 0 guarantee a finite optimum."""
    rng = np.random.default_rng(seed)
    mats = [[_sym(rng, d) for d in dims] for _ in range(m)]
    X0 = [(lambda G: G @ G.T + np.eye(d))(rng.standard_normal((d, d))) for d in dims]
    S0 = [(lambda G: G @ G.T + np.eye(d))(rng.standard_normal((d, d))) for d in dims]
    y0 = rng.standard_normal(m)
    C = [S + sum(y0[i] * mats[i][k] for i in range(m)) for k, S in enumerate(S0)]
    cons = [(None, mats[i], sum(np.sum(A * X) for A, X in zip(mats[i], X0))) for i in range(m)]
    return build(dims, C, cons)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 31), st.lists(st.integers(1, 4), min_size=1, max_size=3), st.integers(1, 6))
def test_random_feasible_problems_close_the_gap(seed, dims, m):
    prob = _random_feasible(seed, dims, m)
    sol = solve(prob)
    assert sol.status == "optimal"
    scale = 1.0 + abs(sol.objective)
    # weak duality up to tolerance, and a closed gap at the optimum
    assert sol.objective >= sol.dual_objective - 1e-7 * scale
    assert sol.gap <= 1e-7 * scale
    for S in sol.slacks:
        assert np.linalg.eigvalsh(S)[0] >= -1e-7


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_row_permutation_invariance(seed):
    prob = _random_feasible(seed, [3, 2], 5)
    perm = np.random.default_rng(seed).permutation(prob.m)
    a, b = solve(prob), solve(prob.permuted(perm))
    assert a.objective == pytest.approx(b.objective, rel=1e-7, abs=1e-8)
