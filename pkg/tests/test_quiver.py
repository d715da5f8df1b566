import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quiverdm.kernels import spectrum
from quiverdm.quiver import (
    SPECTRA,
    Category,
    QuiverMorphism,
    QuiverRep,
    all_edges,
    all_vertices,
    conjugate,
    direct_sum,
    dualize,
    dualize_morphism,
    generate,
    identity_morphism,
    scalar_rep,
    tensor_rep,
    validate,
    validate_morphism,
    zero_rep,
)


def test_hypercube_has_all_vertices_and_edges():
    assert len(all_vertices(3)) == 8
    assert len(all_edges(3)) == 3 * 4
    assert all_vertices(2) == [(), (1,), (2,), (1, 2)]


def test_constructor_requires_full_coverage():
    with pytest.raises(ValueError):
        QuiverRep(1, {(): 1}, {((), 1): [[1]]}, {((), 1): [[1]]})


def test_n1_rep_is_always_qui():
    rep = scalar_rep(3.0, -7.0 + 2j)
    assert validate(rep, "qui").passed


def test_shape_mismatch_is_reported():
    rep = QuiverRep(1, {(): 1, (1,): 2}, {((), 1): np.ones((1, 1))}, {((), 1): np.ones((1, 2))})
    report = validate(rep)
    assert not report.passed and report.tags() == {"shape"}


def test_single_broken_uu_relation_is_tagged():
    # forward-only rep so that only the u-u relation involves the perturbed map
    n = 2
    rng = np.random.default_rng(1)
    f1, f2 = rng.standard_normal((2, 2)), rng.standard_normal((2, 2))
    rep = tensor_rep(n, [(f1, np.zeros((2, 2))), (f2, np.zeros((2, 2)))])
    assert validate(rep).passed
    u = dict(rep.u)
    u[(), 1] = u[(), 1].copy()
    u[(), 1][0, 0] += 1
    report = validate(rep.replace(u=u))
    assert report.tags() == {"uu"}
    assert [v.where for v in report.violations] == ["{} i=1 j=2"]


def test_c_and_sigma1_checks():
    assert validate(scalar_rep(1, 0.3), "sigma1").passed
    assert not validate(scalar_rep(1, 1.3), "sigma1").passed
    assert validate(scalar_rep(1, -0.5), "c").passed
    report = validate(scalar_rep(1, -1.0), "c")
    assert report.tags() == {"c-invertible"}


def test_sigma1_lists_failing_eigenvalue():
    report = validate(scalar_rep(1, -0.25), "sigma1")
    assert not report.passed
    assert "-0.25" in report.violations[0].where


def test_dualize_examples():
    rep = scalar_rep(2.0, 0.3)
    dual = dualize(rep)
    assert dual.u[(), 1][0, 0] == 0.3 and dual.y[(), 1][0, 0] == 2.0
    rep = generate(2, [2, (1, 2)], "sigma1", seed=4, conjugated=True)
    twice = dualize(dualize(rep))
    assert all(np.array_equal(twice.u[e], rep.u[e]) and np.array_equal(twice.y[e], rep.y[e]) for e in rep.edges())
    assert validate(dualize(rep), "sigma1").passed


def test_dualize_morphism_examples():
    rep = generate(1, 2, "qui", seed=0)
    ident = identity_morphism(rep)
    assert all(np.array_equal(dualize_morphism(ident).h[v], ident.h[v]) for v in rep.vertices())
    a = scalar_rep(1.0, 0.3)
    b = scalar_rep(2.0, 0.15)
    two = QuiverMorphism({(): np.array([[2.0]]), (1,): np.array([[4.0]])})
    assert validate_morphism(a, b, two).passed
    assert validate_morphism(dualize(b), dualize(a), dualize_morphism(two)).passed


def test_dualize_reverses_composition():
    rep = generate(2, 1, "sigma1", seed=3)
    mid, h = conjugate(rep, 1)
    end, g = conjugate(mid, 2)
    gh = g.compose(h)
    assert validate_morphism(rep, end, gh).passed
    lhs = dualize_morphism(gh)
    rhs = dualize_morphism(h).compose(dualize_morphism(g))
    assert all(np.allclose(lhs.h[v], rhs.h[v]) for v in rep.vertices())
    assert validate_morphism(dualize(end), dualize(rep), lhs).passed


def test_morphism_examples():
    rep = generate(2, 2, "sigma1", seed=8)
    assert validate_morphism(rep, rep, identity_morphism(rep)).passed
    twin, r = conjugate(rep, 9)
    assert validate_morphism(rep, twin, r).passed
    rng = np.random.default_rng(0)
    rand = QuiverMorphism({v: rng.standard_normal((rep.dims[v],) * 2) for v in rep.vertices()})
    assert not validate_morphism(rep, rep, rand).passed


def test_conjugate_preserves_spectra():
    rep = generate(2, [2, 1], "sigma1", seed=5)
    twin, _ = conjugate(rep, 6)
    for e in rep.edges():
        a = np.sort_complex(spectrum(rep.y[e] @ rep.u[e]))
        b = np.sort_complex(spectrum(twin.y[e] @ twin.u[e]))
        assert np.allclose(a, b, atol=1e-10)


def test_conjugate_condition_number_bound():
    rep = generate(2, 2, "qui", seed=1)
    _, r = conjugate(rep, 3)
    assert max(np.linalg.cond(m) for m in r.h.values()) <= 100


def test_direct_sum_examples():
    rep = generate(2, [2, 1], "sigma1", seed=2)
    same = direct_sum(rep, zero_rep(2))
    assert all(np.array_equal(same.u[e], rep.u[e]) for e in rep.edges())
    other = generate(2, [1, 2], "sigma1", seed=3)
    s = direct_sum(rep, other)
    assert all(s.dims[v] == rep.dims[v] + other.dims[v] for v in rep.vertices())
    assert validate(s, "sigma1").passed
    with pytest.raises(ValueError):
        direct_sum(rep, generate(1, 1, "sigma1", seed=0))


def test_zero_rep_passes_everything():
    for cat in Category:
        assert validate(zero_rep(3), cat).passed


def test_generate_scalar_sigma1():
    rep = generate(1, 1, "sigma1", seed=11)
    assert rep.dims == {(): 1, (1,): 1}
    assert validate(rep, "sigma1").passed


def test_generate_rejects_bad_parameters():
    with pytest.raises(ValueError):
        generate(0, 1, "sigma1", 0)
    with pytest.raises(ValueError):
        generate(2, [1], "sigma1", 0)
    with pytest.raises(ValueError):
        generate(1, 0, "sigma1", 0)


def test_generate_is_reproducible():
    a = generate(2, [2, (1, 2)], "c", seed=42, conjugated=True, summands=2)
    b = generate(2, [2, (1, 2)], "c", seed=42, conjugated=True, summands=2)
    assert all(np.array_equal(a.u[e], b.u[e]) and np.array_equal(a.y[e], b.y[e]) for e in a.edges())


dims_strategy = st.lists(st.tuples(st.integers(1, 2), st.integers(1, 2)), min_size=1, max_size=3)


@settings(max_examples=40, deadline=None)
@given(dims_strategy, st.sampled_from(["qui", "c", "sigma1"]), st.sampled_from(SPECTRA), st.integers(0, 10**6),
       st.booleans())
def test_generated_objects_validate_and_categories_nest(dims, category, spec, seed, conj):
    rep = generate(len(dims), dims, category, seed, spectrum=spec, conjugated=conj)
    assert validate(rep, category).passed
    assert validate(rep, "qui").passed
    assert validate(dualize(rep), category).passed
    twin, _ = conjugate(rep, seed + 1)
    assert validate(twin, category).passed


@settings(max_examples=30, deadline=None)
@given(dims_strategy, st.integers(0, 10**6))
def test_yu_and_uy_verdicts_agree(dims, seed):
    rep = generate(len(dims), dims, "qui", seed)
    for e in rep.edges():
        u, y = rep.u[e], rep.y[e]
        a = np.linalg.svd(y @ u + np.eye(u.shape[1]), compute_uv=False)[-1] > 1e-10
        b = np.linalg.svd(u @ y + np.eye(u.shape[0]), compute_uv=False)[-1] > 1e-10
        assert a == b
    report = validate(rep, "sigma1")
    yu = {v.where.split(" ")[0] for v in report.violations if v.tag == "sigma1-yu"}
    uy = {v.where.split(" ")[0] for v in report.violations if v.tag == "sigma1-uy"}
    assert yu == uy
