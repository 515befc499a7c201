import math
from fractions import Fraction

import numpy as np
import pytest

from eigenbounds.bounds import (
    AssemblyCache,
    ConstantEnclosure,
    RunConfig,
    ch_constant,
    constant_enclosure_pipeline,
    liu_lower_bound,
    neumann_pipeline,
)
from eigenbounds.errors import ConfigurationError
from eigenbounds.mesh import DOMAIN_NAMES

# exact rational value of 12 / (1 + 12 * (0.1893 * sqrt 2)^2)
K1_HAND = 12 / (1 + 12 * Fraction("0.1893") ** 2 * 2)


def test_ch_constant_examples():
    assert ch_constant(2, 1.0) == 0.1893
    assert ch_constant(3, 1.0) == 0.3804
    up = ch_constant(2, math.sqrt(2), "rigorous")
    exact_lower = Fraction("0.1893") * Fraction(math.sqrt(2))
    assert Fraction(up) >= exact_lower
    assert up == pytest.approx(0.26771062735722, rel=1e-13)
    with pytest.raises(ConfigurationError):
        ch_constant(4, 1.0)
    with pytest.raises(ConfigurationError):
        ch_constant(2, 0.0)


def test_liu_examples():
    assert liu_lower_bound(10, 0.1) == pytest.approx(10 / 1.1, rel=1e-15)
    assert liu_lower_bound(0, 0.3) == 0.0
    assert liu_lower_bound(7.25, 0.0) == 7.25
    assert liu_lower_bound(7.25, 0.0, "rigorous") == 7.25
    with pytest.raises(ConfigurationError):
        liu_lower_bound(-1, 0.1)


def test_liu_hand_value():
    assert float(K1_HAND) == pytest.approx(6.4515166, rel=1e-7)
    c = 0.1893 * math.sqrt(2)
    assert liu_lower_bound(12, c) == pytest.approx(float(K1_HAND), abs=1e-3)
    r = liu_lower_bound(12, ch_constant(2, math.sqrt(2), "rigorous"), "rigorous")
    assert Fraction(r) <= K1_HAND and float(K1_HAND) - r < 1e-12


def test_liu_rigorous_is_below_exact():
    rng = np.random.default_rng(0)
    for lam, c in zip(rng.uniform(0.01, 1e4, 200), rng.uniform(0, 1, 200)):
        exact = Fraction(lam) / (1 + Fraction(lam) * Fraction(c) ** 2)
        assert Fraction(liu_lower_bound(lam, c, "rigorous")) <= exact


def test_liu_monotonicity_and_limits():
    grid = np.linspace(0, 200, 401)
    vals = [liu_lower_bound(x, 0.05) for x in grid]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    cs = np.linspace(0, 1, 101)
    vals = [liu_lower_bound(50.0, c) for c in cs]
    assert all(b <= a for a, b in zip(vals, vals[1:]))
    for lam in (0.5, 12.0, 1e4):
        assert liu_lower_bound(lam, 0.1) < lam
        assert liu_lower_bound(lam, 1e-12) == pytest.approx(lam, rel=1e-10)


def test_run_config_validation():
    with pytest.raises(ConfigurationError):
        RunConfig("K4")
    with pytest.raises(ConfigurationError):
        RunConfig("K1", degree=-1)
    with pytest.raises(ConfigurationError):
        RunConfig("K1", refine_level=-1)
    with pytest.raises(ConfigurationError):
        RunConfig("K1", mode="exact")
    with pytest.raises(ConfigurationError):
        RunConfig("K1", output_format="xml")


def test_enclosure_record_roundtrip():
    e = ConstantEnclosure("K1", "C_k", 0, 0.31829, 0.31861, 5, "rigorous", True, 0.0442, 0.0084)
    assert ConstantEnclosure.from_record(e.to_record()).to_record() == e.to_record()
    with pytest.raises(ValueError):
        ConstantEnclosure("K1", "C_k", 0, 0.4, 0.3, 5, "rigorous", True, 0.1, 0.1)


def test_k1_single_element_neumann():
    rows = neumann_pipeline(RunConfig("K1", refine_level=0, mode="rigorous"), count=3)
    assert [r.k for r in rows] == [1, 2, 3]
    assert rows[0].lo == rows[0].hi == 0.0 and rows[0].kernel_dim == 1
    assert all(r.certified for r in rows)
    lb = rows[1].lo
    assert Fraction(lb) <= K1_HAND and lb == pytest.approx(float(K1_HAND), abs=1e-3)
    # P2 upper bound of the second eigenvalue dominates the exact pi^2
    assert rows[1].hi >= math.pi ** 2


@pytest.mark.parametrize("domain", DOMAIN_NAMES)
def test_neumann_kernel_is_one_dimensional(domain):
    rows = neumann_pipeline(RunConfig(domain, refine_level=1, mode="fast"), count=2)
    assert rows[0].kernel_dim == 1 and rows[0].hi == 0.0
    assert rows[1].lo > 0 and rows[1].lo <= rows[1].hi
    assert not rows[0].certified and not rows[1].certified  # fast mode never certifies


def test_refinement_nesting_and_width_decrease():
    cache = AssemblyCache()
    prev = None
    for level in (1, 2, 3):
        e = constant_enclosure_pipeline(RunConfig("K1", 0, level, "rigorous"), cache)
        assert e.certified and e.lo <= e.hi
        assert e.contains(1 / math.pi)
        if prev is not None:
            assert e.intersects(prev.lo, prev.hi)
            assert e.width < prev.width
        prev = e


@pytest.mark.parametrize("domain, k", [("K2", 1), ("K3", 2), ("T1", 0), ("T4", 1)])
def test_conforming_dominance(domain, k):
    e = constant_enclosure_pipeline(RunConfig(domain, k, 1, "rigorous"))
    assert e.certified
    assert e.lambda_ub >= e.lambda_lb > 0
    assert e.lo == pytest.approx(e.lambda_ub ** -0.5, rel=1e-12)
    assert e.hi == pytest.approx(e.lambda_lb ** -0.5, rel=1e-12)
    # Ker(N) on the constrained CR space: the global affine functions with
    # zero boundary mean when k >= 1, nothing when k = 0
    dim = 2 if domain.startswith("K") else 3
    assert e.kernel_dim == (0 if k == 0 else dim)
    assert e.dofs_cr > 0 and e.dofs_p2 > e.dofs_cr // 2


def test_fast_mode_is_labelled():
    e = constant_enclosure_pipeline(RunConfig("K2", 0, 2, "fast"))
    assert e.mode == "fast" and not e.certified
    r = constant_enclosure_pipeline(RunConfig("K2", 0, 2, "rigorous"))
    assert r.certified
    assert r.lo <= e.lo and e.hi <= r.hi * (1 + 1e-6)


def test_kernel_only_space_gives_no_bound():
    # one tetrahedron: constrained CR and P2 spaces lie inside Ker(N) for k=2
    e = constant_enclosure_pipeline(RunConfig("T1", 2, 0, "rigorous"))
    assert not e.certified
    assert e.lo == 0.0 and e.hi == math.inf
    assert "CR space has no positive eigenvalue" in e.notes
    assert e.kernel_dim == 3
