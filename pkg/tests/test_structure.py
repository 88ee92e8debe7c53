import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from structbandit.exceptions import ConfigurationError, InputError
from structbandit.structure import (
    NormKind,
    StructureModel,
    compat_constant,
    eval_dual_norm,
    eval_norm,
    penalty,
    prox,
)

from conftest import all_models


def test_norm_examples():
    assert eval_norm(StructureModel("l1", 3), [1, -2, 3]) == 6
    group = StructureModel("group", 3, groups=[[0, 1], [2]])
    assert eval_norm(group, [3, 4, -2]) == pytest.approx(7)
    nuc = StructureModel("nuclear", 4, shape=(2, 2))
    assert eval_norm(nuc, np.diag([3.0, 1.0]).ravel()) == pytest.approx(4)


def test_dual_norm_examples():
    assert eval_dual_norm(StructureModel("l1", 3), [1, -3, 2]) == 3
    assert eval_dual_norm(StructureModel("l2", 2), [3, 4]) == pytest.approx(5)
    nuc = StructureModel("nuclear", 4, shape=(2, 2))
    assert eval_dual_norm(nuc, np.diag([3.0, 1.0]).ravel()) == pytest.approx(3)


def test_dimension_mismatch_is_input_error():
    with pytest.raises(InputError):
        eval_norm(StructureModel("l1", 3), [1, 2])
    with pytest.raises(InputError):
        eval_dual_norm(StructureModel("l2", 3), np.ones(4))
    with pytest.raises(InputError):
        prox(StructureModel("l2", 3), np.ones(2), 1.0)


def test_prox_examples():
    l1 = StructureModel("l1", 3)
    np.testing.assert_allclose(prox(l1, [2, -0.5, 0], 1.0), [1, 0, 0])
    nuc = StructureModel("nuclear", 4, shape=(2, 2))
    np.testing.assert_allclose(prox(nuc, np.diag([3.0, 1.0]).ravel(), 2.0),
                               np.diag([1.0, 0.0]).ravel(), atol=1e-12)
    group = StructureModel("group", 2, groups=[[0, 1]])
    np.testing.assert_allclose(prox(group, [3, 4], 5.0), [0, 0])
    np.testing.assert_allclose(prox(group, [3, 4], 2.5), [1.5, 2.0])


def test_group_prox_matches_grid_search():
    # dense grid over the 2-D objective as an independent check
    group = StructureModel("group", 2, groups=[[0, 1]])
    v = np.array([3.0, 4.0])
    axis = np.linspace(-1, 5, 1201)
    U = np.array(list(itertools.product(axis, axis)))
    obj = 0.5 * ((U - v) ** 2).sum(axis=1) + 2.5 * np.linalg.norm(U, axis=1)
    best = U[np.argmin(obj)]
    np.testing.assert_allclose(best, [1.5, 2.0], atol=0.01)


def test_ridge_prox_is_shrinkage():
    ridge = StructureModel("l2", 3)
    v = np.array([1.0, -2.0, 0.5])
    np.testing.assert_allclose(prox(ridge, v, 0.75), v / 2.5)
    assert penalty(ridge, v) == pytest.approx(v @ v)


def test_compat_constant_defaults():
    assert compat_constant(StructureModel("l1", 10, s=4)) == 2
    assert compat_constant(StructureModel("l2", 10)) == 1
    assert compat_constant(StructureModel("nuclear", 100, s=9, shape=(10, 10))) == 3
    assert compat_constant(StructureModel("l1", 10, s=4, psi=5.0)) == 5
    with pytest.raises(ConfigurationError):
        compat_constant(StructureModel("l1", 10))


def test_group_partition_invariant():
    with pytest.raises(ConfigurationError, match="partition"):
        StructureModel("group", 4, groups=[[0, 1], [1, 2, 3]])
    with pytest.raises(ConfigurationError, match="partition"):
        StructureModel("group", 4, groups=[[0, 1], [2]])
    with pytest.raises(ConfigurationError):
        StructureModel("group", 4, groups=[[0, 1, 2, 3], []])


def test_nuclear_shape_invariant():
    with pytest.raises(ConfigurationError):
        StructureModel("nuclear", 6, shape=(2, 2))


def test_json_roundtrip(model):
    blob = json.dumps(model.to_dict())
    back = StructureModel.from_dict(json.loads(blob))
    assert back == model
    assert back.kind is NormKind(model.kind)


def test_omega_diameter_is_one(model, rng):
    # no unit-norm point of any of these balls is longer than 1
    U = rng.standard_normal((2000, model.p))
    U /= eval_norm(model, U)[:, None]
    assert np.linalg.norm(U, axis=1).max() <= 1.0 + 1e-12
    assert model.omega_diameter == 1.0


def test_dual_norm_inequality(model, rng):
    U = rng.standard_normal((10_000, model.p)) * rng.exponential(size=(10_000, 1))
    V = rng.standard_normal((10_000, model.p)) * rng.exponential(size=(10_000, 1))
    inner = np.einsum("ij,ij->i", U, V)
    bound = eval_norm(model, U) * eval_dual_norm(model, V)
    assert np.all(inner <= bound + 1e-9)


def test_prox_optimality_by_perturbation(model, rng):
    for _ in range(20):
        v = rng.standard_normal(model.p) * 2
        tau = rng.uniform(0.05, 2.0)
        u = prox(model, v, tau)
        best = 0.5 * np.sum((u - v) ** 2) + tau * penalty(model, u)
        W = u + rng.standard_normal((100, model.p)) * rng.choice([1e-4, 1e-2, 1.0], size=(100, 1))
        others = 0.5 * ((W - v) ** 2).sum(axis=1) + tau * np.array([penalty(model, w) for w in W])
        assert np.all(best <= others + 1e-9)


@settings(max_examples=60, deadline=None)
@given(
    kind=st.sampled_from(["l1", "l2", "group", "nuclear"]),
    a=st.floats(-50, 50, allow_nan=False),
    seed=st.integers(0, 2**32 - 1),
)
def test_absolute_homogeneity(kind, a, seed):
    model = all_models()[kind]
    u = np.random.default_rng(seed).standard_normal(model.p)
    assert eval_norm(model, a * u) == pytest.approx(abs(a) * eval_norm(model, u), rel=1e-10, abs=1e-10)


def test_subadditivity(model, rng):
    U = rng.standard_normal((1000, model.p))
    V = rng.standard_normal((1000, model.p))
    assert np.all(eval_norm(model, U + V) <= eval_norm(model, U) + eval_norm(model, V) + 1e-12)


@pytest.mark.parametrize(
    "model",
    [
        StructureModel("l1", 3),
        StructureModel("l2", 3),
        StructureModel("group", 3, groups=[[0, 2], [1]]),
        StructureModel("nuclear", 3, shape=(1, 3)),
    ],
    ids=["l1", "l2", "group", "nuclear"],
)
def test_dual_of_dual_by_grid(model):
    # sup over a grid of the dual unit ball recovers the primal norm
    axis = np.linspace(-1, 1, 81)
    V = np.array(list(itertools.product(axis, repeat=3)))
    V = V[eval_dual_norm(model, V) <= 1.0]
    rng = np.random.default_rng(0)
    for u in rng.standard_normal((20, 3)):
        assert (V @ u).max() == pytest.approx(eval_norm(model, u), rel=0.03)
