"""Unit tests for the recovery diagnostics."""

import math

import numpy as np
import pytest

from clipped_mc.diagnostics import (
  SubspaceT,
  apply_p_star,
  coherence,
  compute_nu_b,
  diagnose,
  estimate_rho,
  evaluate_pmin,
  nu_b_operator,
  project_T,
  theorem2_bounds,
  unnormalized_coherence,
)
from clipped_mc.diagnostics.bounds import beta_floor
from clipped_mc.errors import RecoveryConditionError, SizeLimitError
from clipped_mc.linalg import inner, norm
from clipped_mc.models import ClipSpec
from clipped_mc.rng import make_rng


def _rank_one(n1: int, n2: int, seed: int) -> np.ndarray:
  rng = make_rng(seed)
  return np.outer(rng.uniform(1.0, 3.0, n1), rng.uniform(1.0, 3.0, n2))


class TestSubspace:
  """Tests for the tangent space projection."""

  def test_projection_is_idempotent(self) -> None:
    """Test P_T P_T = P_T."""
    t = SubspaceT.from_matrix(_rank_one(6, 5, 0))
    z = make_rng(1).standard_normal((6, 5))
    once = project_T(z, t)
    np.testing.assert_allclose(project_T(once, t), once, atol=1e-12)

  def test_complement(self) -> None:
    """Test that the projection and its complement add up to the input."""
    t = SubspaceT.from_matrix(_rank_one(4, 4, 2))
    z = make_rng(3).standard_normal((4, 4))
    total = project_T(z, t) + project_T(z, t, orthogonal=True)
    np.testing.assert_allclose(total, z, atol=1e-12)

  def test_zero_matrix(self) -> None:
    """Test that the zero matrix has no subspace."""
    with pytest.raises(ValueError):
      SubspaceT.from_matrix(np.zeros((3, 3)))


class TestCoherence:
  """Tests for coherence measures."""

  def test_constant_matrix_is_incoherent(self) -> None:
    """Test that the all-ones matrix has mu0 = mu1 = 1."""
    coh = coherence(np.ones((5, 5)))
    assert coh.mu0 == pytest.approx(1.0)
    assert coh.mu1 == pytest.approx(1.0)
    assert coh.mu_unnormalized == pytest.approx(0.2)

  def test_spike_is_coherent(self) -> None:
    """Test that a single nonzero entry has maximal mu0."""
    m = np.zeros((4, 4))
    m[0, 0] = 1.0
    assert coherence(m).mu0 == pytest.approx(4.0)


class TestInformationLoss:
  """Tests for P*, nu_B and the rho estimators."""

  def test_p_star(self) -> None:
    """Test the case split of P*."""
    m = np.array([[1.0, 5.0, 0.0]])
    spec = ClipSpec(ceiling=5.0, floor=0.0)
    out = apply_p_star(np.array([[-2.0, -3.0, -4.0]]), m, spec)
    assert out.tolist() == [[-2.0, 0.0, -4.0]]
    out = apply_p_star(np.array([[2.0, 3.0, 4.0]]), m, spec)
    assert out.tolist() == [[2.0, 3.0, 0.0]]

  def test_no_clipping_loses_nothing(self) -> None:
    """Test that nu_B and every rho vanish when nothing is clipped."""
    m = _rank_one(5, 4, 4)
    spec = ClipSpec(ceiling=100.0)
    assert compute_nu_b(m, spec) == pytest.approx(0.0, abs=1e-10)
    for which in ("fro", "inf", "op"):
      assert estimate_rho(m, spec, which, samples=5) == pytest.approx(0.0, abs=1e-10)

  def test_clipping_loses_something(self) -> None:
    """Test that clipping half the entries gives a positive nu_B."""
    m = _rank_one(5, 4, 5)
    spec = ClipSpec(ceiling=float(np.median(m)))
    assert 0.0 < compute_nu_b(m, spec) <= 1.0

  def test_nu_b_size_limit(self) -> None:
    """Test that nu_B refuses large matrices."""
    with pytest.raises(SizeLimitError):
      compute_nu_b(np.ones((70, 70)), ClipSpec(ceiling=2.0))

  def test_more_samples_never_lower(self) -> None:
    """Test that the Monte-Carlo lower bound grows with the sample count."""
    m = _rank_one(6, 6, 6)
    spec = ClipSpec(ceiling=float(np.quantile(m, 0.7)))
    few = estimate_rho(m, spec, "fro", samples=5, seed=3)
    many = estimate_rho(m, spec, "fro", samples=25, seed=3)
    assert many >= few

  def test_invalid_sample_count(self) -> None:
    """Test that at least one sample is required."""
    with pytest.raises(ValueError):
      estimate_rho(np.ones((2, 2)), ClipSpec(ceiling=2.0), "fro", samples=0)


class TestPmin:
  """Tests for the sampling requirement."""

  def test_violated_condition(self) -> None:
    """Test that rho_F = 1/2 leaves the bound undefined."""
    with pytest.raises(RecoveryConditionError, match="rho_fro"):
      evaluate_pmin(10, 10, 1, 1.0, 1.0, 0.5, 0.0, 0.0, 0.0)

  def test_beta_must_exceed_floor(self) -> None:
    """Test the beta validity check."""
    assert beta_floor(2, 2) == pytest.approx(1.5)
    with pytest.raises(ValueError, match="beta"):
      evaluate_pmin(2, 2, 1, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, beta=1.5)

  def test_capped_at_one(self) -> None:
    """Test that p_min never exceeds one while p_required may."""
    terms = evaluate_pmin(10, 10, 1, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0)
    assert terms.p_required > 1.0
    assert terms.p_min == 1.0

  def test_asymptotic_rate(self) -> None:
    """Test that p_required scales like n log^2 n / n^2 for square matrices."""
    ratios = []
    for n in (100, 1_000, 10_000):
      terms = evaluate_pmin(n, n, 1, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, beta=3.0)
      reference = 2 * n * math.log(n * n) ** 2 / (n * n)
      ratios.append(terms.p_required / reference)
    assert max(ratios) / min(ratios) < 2.0

  def test_worse_coherence_needs_more_samples(self) -> None:
    """Test that p_required grows with mu0."""
    low = evaluate_pmin(500, 400, 2, 1.0, 1.0, 0.1, 0.1, 0.1, 0.1)
    high = evaluate_pmin(500, 400, 2, 4.0, 1.0, 0.1, 0.1, 0.1, 0.1)
    assert high.p_required > low.p_required


class TestDiagnose:
  """Tests for the combined report and the error decomposition."""

  def test_report_fields(self) -> None:
    """Test that a small instance gets every diagnostic."""
    m = _rank_one(6, 5, 7)
    report = diagnose(m, ClipSpec(ceiling=float(np.quantile(m, 0.9))), samples=3)
    assert report.rank == 1
    assert report.nu_b is not None
    assert report.rho_is_lower_bound
    assert (report.pmin is None) == (report.condition_error is not None)

  def test_exact_estimate_has_no_estimation_error(self) -> None:
    """Test the decomposition when the estimate equals the truth."""
    m = _rank_one(6, 6, 8)
    spec = ClipSpec(ceiling=float(np.median(m)))
    bounds = theorem2_bounds(m, m.copy(), spec, beta1=1.0, beta2=1.0, k=1, p=0.5)
    assert bounds.lhs == 0.0
    assert bounds.b3 == 0.0
    assert bounds.b1 == pytest.approx(bounds.b2)
    assert bounds.b1 > 0.0


def _low_rank(seed: int, shape: tuple[int, int] = (7, 9)) -> np.ndarray:
  rng = make_rng(seed)
  r = 1 + seed % 3
  return rng.standard_normal((shape[0], r)) @ rng.standard_normal((r, shape[1]))


class TestTangentSpaceProperties:
  """Algebraic properties of P_T on random low-rank matrices."""

  @pytest.mark.parametrize("seed", range(20))
  def test_projector(self, seed: int) -> None:
    """Test idempotence, self-adjointness and P_T(M) = M."""
    m = _low_rank(seed)
    t = SubspaceT.from_matrix(m)
    rng = make_rng(seed + 50)
    x, y = rng.standard_normal(m.shape), rng.standard_normal(m.shape)
    px = project_T(x, t)
    np.testing.assert_allclose(project_T(px, t), px, atol=1e-10)
    assert inner(px, y) == pytest.approx(inner(x, project_T(y, t)), abs=1e-10)
    np.testing.assert_allclose(project_T(m, t), m, atol=1e-10)

  @pytest.mark.parametrize("seed", range(20))
  def test_basis_elements(self, seed: int) -> None:
    """Test ||P_T(e_i f_j^T)||_F^2 <= mu0 r (n1 + n2) / (n1 n2) for every (i, j)."""
    m = _low_rank(seed)
    n1, n2 = m.shape
    t = SubspaceT.from_matrix(m)
    limit = coherence(m).mu0 * t.rank * (n1 + n2) / (n1 * n2)
    for i, j in np.ndindex(n1, n2):
      e = np.zeros(m.shape)
      e[i, j] = 1.0
      assert norm(project_T(e, t), "frobenius") ** 2 <= limit + 1e-12


class TestHadamardBound:
  """Trace norm of an entrywise product against the coherence of one factor."""

  @pytest.mark.parametrize("seed", range(100))
  def test_random_pairs(self, seed: int) -> None:
    """Test ||X o Y||_tr <= mu(X) ||X||_tr ||Y||_tr."""
    rng = make_rng(seed)
    n1, n2 = int(rng.integers(2, 11)), int(rng.integers(2, 13))
    r = int(rng.integers(1, min(n1, n2) + 1))
    x = rng.standard_normal((n1, r)) @ rng.standard_normal((r, n2))
    y = rng.standard_normal((n1, n2))
    bound = unnormalized_coherence(x) * norm(x, "trace") * norm(y, "trace")
    assert norm(x * y, "trace") <= bound * (1 + 1e-9)

  def test_tight_for_constant_factor(self) -> None:
    """Test that the all-ones matrix times the identity attains the bound."""
    n = 5
    x, y = np.ones((n, n)), np.eye(n)
    bound = unnormalized_coherence(x) * norm(x, "trace") * norm(y, "trace")
    assert norm(x * y, "trace") == pytest.approx(bound)
    assert norm(x * y, "trace") > unnormalized_coherence(x) * bound


class TestOperatorProperties:
  """Properties of the nu_B operator and of P*."""

  @pytest.mark.parametrize("seed", range(10))
  def test_nu_b_operator_is_self_adjoint(self, seed: int) -> None:
    """Test that the assembled P_T P_B P_T - P_T is symmetric."""
    m = _low_rank(seed, (4, 5))
    spec = ClipSpec(ceiling=float(np.quantile(m, 0.75)))
    op = nu_b_operator(m, spec)
    np.testing.assert_allclose(op, op.T, atol=1e-10)
    assert 0.0 <= compute_nu_b(m, spec) <= 1.0

  @pytest.mark.parametrize("seed", range(10))
  def test_p_star_is_contractive(self, seed: int) -> None:
    """Test |P*(Z)_ij| <= |Z_ij| with a ceiling and a floor."""
    rng = make_rng(seed)
    m = np.round(rng.uniform(0.0, 6.0, (5, 6)))
    z = rng.standard_normal((5, 6))
    out = apply_p_star(z, m, ClipSpec(ceiling=4.0, floor=1.0))
    assert np.all(np.abs(out) <= np.abs(z))


class TestErrorDecomposition:
  """Consistency of the error decomposition terms."""

  @pytest.mark.parametrize("seed", range(100))
  def test_triangle_inequality(self, seed: int) -> None:
    """Test that the left side never exceeds b1 + b2 + b3."""
    rng = make_rng(seed)
    m = rng.uniform(0.0, 10.0, (6, 7))
    m_hat = m + rng.standard_normal((6, 7)) * rng.uniform(0.1, 3.0)
    spec = ClipSpec(ceiling=float(rng.uniform(2.0, 9.0)))
    b = theorem2_bounds(m, m_hat, spec, beta1=1.0, beta2=1.0, k=2, p=0.5)
    assert b.lhs <= b.b1 + b.b2 + b.b3 + 1e-12

  def test_inactive_clipping(self) -> None:
    """Test that b1 = b2 = 0 and lhs = b3 when nothing reaches C."""
    rng = make_rng(1)
    m = rng.uniform(0.0, 1.0, (4, 5))
    m_hat = m + 0.1 * rng.standard_normal((4, 5))
    b = theorem2_bounds(m, m_hat, ClipSpec(ceiling=10.0), 1.0, 1.0, 1, 0.5)
    assert b.b1 == 0.0 and b.b2 == 0.0
    assert b.lhs == pytest.approx(b.b3)


class TestConditionLimits:
  """Boundary values of the recovery conditions."""

  def test_rho_op_limit(self) -> None:
    """Test that rho_op = 1/4 violates the condition."""
    with pytest.raises(RecoveryConditionError, match="rho_op"):
      evaluate_pmin(10, 10, 1, 1.0, 1.0, 0.0, 0.0, 0.25, 0.0)

  def test_just_below_limits(self) -> None:
    """Test that values just under every limit give a bound."""
    terms = evaluate_pmin(50, 60, 1, 1.0, 1.0, 0.49, 0.49, 0.24, 0.49)
    assert terms.p_required > 0.0
