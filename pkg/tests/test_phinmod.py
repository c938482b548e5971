from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from filphin import instancegen as ig
from filphin import phinmod as pm
from filphin.exactlin import Matrix, Subspace

F = Fraction


def fix_a():
    return ig.fix_a()


def test_flag_construction_and_fil():
    fl = pm.WeightedFlag.from_generators([(1, F(-7, 3)), (0, 1)], (0, 2))
    assert fl.step(0) == Subspace.full(2)
    assert fl.step(1) == Subspace.span([(3, -7)], 2)
    assert fl.step(2).is_zero()
    assert fl.fil(0) == Subspace.full(2)
    assert fl.fil(1) == fl.step(1) == fl.fil(2)
    assert fl.fil(3).is_zero()


@pytest.mark.parametrize(
    "steps,weights,msg",
    [
        ((Subspace.full(2), Subspace.zero(2)), (0, 1), "needs 3 steps"),
        ((Subspace.full(2), Subspace.span([(1, 0)], 2), Subspace.zero(2)), (2, 1), "nondecreasing"),
        ((Subspace.full(2), Subspace.full(2), Subspace.zero(2)), (0, 1), "dimension"),
    ],
)
def test_flag_rejects(steps, weights, msg):
    with pytest.raises(pm.MalformedModuleError, match=msg):
        pm.WeightedFlag(steps, weights)


def test_module_shape_errors():
    fl = fix_a().flags
    with pytest.raises(pm.MalformedModuleError):
        pm.FilPhiNModule(5, Matrix.identity(2), Matrix.identity(3), fl)
    with pytest.raises(pm.MalformedModuleError):
        pm.FilPhiNModule(5, Matrix.identity(3), Matrix.zeros(3, 3), fl)
    with pytest.raises(pm.MalformedModuleError):
        pm.FilPhiNModule(1, Matrix.identity(2), Matrix.zeros(2, 2), fl)


def test_validate_needs_dimension_two():
    M = pm.rank_one(pm.RankOneData((1,), 1), 5)
    with pytest.raises(pm.MalformedModuleError):
        pm.validate(M, 0)


def test_fix_a_validates():
    rep = pm.validate(fix_a(), 1)
    assert rep.ok
    assert not rep.hypotheses_declared
    assert any("GB1: undeclared" in line for line in rep.lines())


def test_eigen_data_fix_a():
    M = fix_a()
    D = pm.eigenspace_decomposition(M, 1)
    assert D == [Subspace.span([(1, 0)], 2), Subspace.span([(0, 1)], 2)]
    fil = pm.frobenius_filtration(M, 1)
    assert [s.dim for s in fil] == [0, 1, 2]
    assert pm.regular_submodule(M, 1) == Subspace.span([(0, 1)], 2)


def test_rank_one_convention():
    R = pm.rank_one(pm.RankOneData((3, 1), -2), 5)
    assert R.phi == Matrix([[25]])
    assert [f.weights for f in R.flags] == [(-3,), (-1,)]


def test_twist_and_dual():
    M = fix_a()
    T = pm.tate_twist(M, 1)
    assert T.phi == Matrix.diag([1, F(1, 5)])
    assert T.flags[0].weights == (-1, 1)
    assert T.twist == 1
    Dv = pm.dual(M)
    assert Dv.phi == Matrix.diag([F(1, 5), 1])
    assert Dv.mono == Matrix([[0, -1], [0, 0]])
    assert Dv.flags[0].weights == (-2, 0)
    assert pm.dual(Dv) == M
    Dc = pm.dual_cyclotomic(M)
    assert Dc.phi == Matrix.diag([F(1, 25), F(1, 5)])
    assert Dc.flags[0].weights == (-3, -1)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**64 - 1), st.integers(-3, 3))
def test_dual_involution_and_twist_additivity(seed, t):
    spec = ig.random_spec(ig.SplitMix64(seed), m=0)
    M = ig.generate(spec)
    assert pm.dual(pm.dual(M)) == M
    assert pm.tate_twist(pm.tate_twist(M, t), -t) == M
    # the dual flag is the annihilator flag: <F_i, dual F_{n-i}> = 0
    for fl, dfl in zip(M.flags, pm.dual(M).flags):
        for i in range(M.n + 1):
            for u in fl.step(i).basis:
                for w in dfl.step(M.n - i).basis:
                    assert sum(a * b for a, b in zip(u, w)) == 0


def test_sub_and_quotient_fix_b():
    M = ig.fix_b()
    U = Subspace.span([(0, 1, 0), (0, 0, 1)], 3)
    S, inc = pm.submodule(M, U)
    assert S.phi == Matrix.diag([3, 1])
    assert S.mono == Matrix([[0, 0], [1, 0]])
    Q, proj = pm.quotient(M, U)
    assert Q.phi == Matrix([[9]])
    assert Q.flags[0].weights == (4,)
    assert (proj @ inc).is_zero()
    with pytest.raises(pm.AdmissibilityError):
        pm.submodule(M, Subspace.span([(1, 0, 0)], 3))


def test_induced_flag_weights_fix_b():
    M = ig.fix_b()
    U = Subspace.span([(0, 1, 0), (0, 0, 1)], 3)
    S, _ = pm.submodule(M, U)
    # F_1 meets U in span(v1 + v2); F_2 misses U
    assert S.flags[0].weights == (0, 1)
    assert S.flags[0].step(1) == Subspace.span([(1, 1)], 2)


def test_transform_preserves_validation():
    M = ig.fix_b()
    g = Matrix([[1, 2, 0], [0, 1, 3], [1, 0, 1]])
    T = pm.transform(M, g)
    assert pm.validate(T, 2).ok
    assert pm.transform(T, g.inverse()) == M


def test_five_step_filtration_fix_b():
    M = ig.fix_b()
    D = pm.regular_submodule(M, 2)
    steps = pm.gb_filtration(M, 2, D)
    fil = pm.frobenius_filtration(M, 2)
    assert steps == [Subspace.zero(3), fil[1], fil[2], Subspace.full(3), Subspace.full(3)]


def test_not_regular():
    M = fix_a()
    T = pm.tate_twist(M, 1)
    with pytest.raises(pm.NotRegularError):
        pm.gb_filtration(M, 1, Subspace.span([(1, 0)], 2))
    with pytest.raises(pm.NotRegularError):
        pm.check_regular(T, Subspace.span([(1, 1)], 2))


def test_exceptional_subquotient_fix_a():
    M = fix_a()
    W, lifts, D = pm.exceptional_presentation(M, 1, pm.regular_submodule(M, 1))
    assert W.phi == Matrix.diag([1, F(1, 5)])
    assert D == Subspace.span([(0, 1)], 2)
    assert W.flags[0].weights == (-1, 1)


def test_w_ranks_fix_a():
    M = fix_a()
    r = pm.w_ranks(M, 1, pm.regular_submodule(M, 1))
    assert r == (0, 0, 1, 1) and r.generic


# single-field mutations: each fails exactly the targeted axiom


def _fix_a_mutations():
    M = fix_a()
    fl = M.flags[0]
    return {
        "a": pm.mutate(M, phi=Matrix([[5, 1], [0, 1]])),
        "b": pm.mutate(M, phi=Matrix.diag([25, 5])),
        "c": pm.mutate(M, mono=Matrix.zeros(2, 2)),
        "d": pm.mutate(M, flags=(pm.WeightedFlag.from_generators([(0, 1), (1, 0)], fl.weights),)),
        "e": pm.mutate(M, flags=(pm.WeightedFlag(fl.steps, (0, 1)),)),
    }


@pytest.mark.parametrize("axiom", "abcde")
def test_mutation_fails_one_axiom(axiom):
    rep = pm.validate(_fix_a_mutations()[axiom], 1)
    assert rep.failed() == [axiom]
    assert rep.results[axiom].witness


def test_prerequisites_skip():
    rep = pm.validate(_fix_a_mutations()["a"], 1)
    assert rep.results["c"].status == "skipped"
    assert rep.results["f"].status == "skipped"
    assert rep.results["b"].status == "pass"


def test_full_monodromy_forces_gb4_local():
    # with N v0 != 0 the phi=1 line of W^dual(chi) is moved by N, so H^0 vanishes
    for M, m in ((fix_a(), 1), (ig.fix_b(), 2), (ig.fix_degenerate(), 1)):
        assert pm._gb4_local_h0(M, m) == 0
