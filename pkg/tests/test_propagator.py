import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from conftest import expm_state
from raman_tuner import propagator as pr
from raman_tuner import damped_analytic as da
from raman_tuner.exact import evolve_lossless, grid_point, slow_half_period, target_for, target_state
from raman_tuner.model import ModeIndex, OperationKind, ParameterError, PulseShape, SystemParams
from raman_tuner.tuning import fidelity

TRAP = PulseShape.trapezium(0.1, 0.1)
SINE = PulseShape.sine_square()
RECT = PulseShape.rectangular()
SHAPES = [RECT, TRAP, SINE, PulseShape.trapezium(0.3, 0.05)]


def test_hamiltonian_layout():
    np.testing.assert_array_equal(
        pr.hamiltonian(SystemParams.internal()).matrix, [[0, 0, 0.5], [0, 0, 0.5], [0.5, 0.5, 0]]
    )
    m = pr.hamiltonian(SystemParams.internal(delta=2.0, kappa=0.1, gamma=0.3)).matrix
    assert m[2, 2] == 2.0 - 0.3j and m[1, 1] == -0.1j
    np.testing.assert_array_equal(m, m.T)
    assert pr.hamiltonian(SystemParams.internal(delta=1.0)).hermitian
    assert not pr.hamiltonian(SystemParams.internal(kappa=0.1)).hermitian


def test_evolve_numeric_examples():
    p = SystemParams.internal()
    t = grid_point(ModeIndex(1, 2)).op_time
    np.testing.assert_allclose(pr.evolve_numeric(p, t).vector, [0, -1, 0], atol=1e-10)
    psi0 = [0.3, 0.4j, math.sqrt(0.75)]
    pd = SystemParams.internal(delta=1.0, kappa=0.2)
    assert pr.evolve_numeric(pd, 0.0, psi0).vector.tolist() == np.asarray(psi0, complex).tolist()
    with pytest.raises(ParameterError):
        pr.evolve_numeric(pd, -1.0)


def test_evolve_numeric_large_kappa_reference():
    m = ModeIndex(31, 2)
    p = SystemParams.internal(delta=4.4491, kappa=0.05)
    t_op = slow_half_period(p, 2) * da.full_time_factor(OperationKind.Pi, 2, da.damped_slow_ratio(p))
    assert fidelity(pr.evolve_numeric(p, t_op), target_for(p, m)) == pytest.approx(0.9660, abs=1e-3)


@given(st.floats(0, 10), st.floats(0, 50))
def test_numeric_matches_closed_form(delta, t):
    p = SystemParams.internal(delta=delta)
    np.testing.assert_allclose(pr.evolve_numeric(p, t).vector, evolve_lossless(p, t).vector, atol=1e-10)


@given(st.floats(-10, 10), st.floats(0, 0.5), st.floats(0, 0.5), st.floats(0, 50))
def test_numeric_matches_expm_damped(delta, kappa, gamma, t):
    p = SystemParams.internal(delta=delta, kappa=kappa, gamma=gamma)
    prop = pr.SpectralPropagator(p)
    ref = expm_state(pr.hamiltonian(p).matrix, t)
    np.testing.assert_allclose(prop.apply(t), ref, atol=1e-10)
    if prop.method == "eig":
        assert prop.residual <= 1e-12


def test_expm_fallback(monkeypatch):
    p = SystemParams.internal(delta=3.0, kappa=0.05, gamma=0.03)
    eig = pr.SpectralPropagator(p)
    monkeypatch.setattr(pr, "COND_LIMIT", 0.0)
    fallback = pr.SpectralPropagator(p)
    assert eig.method == "eig" and fallback.method == "expm"
    ts = np.linspace(0, 30, 5)
    np.testing.assert_allclose(fallback.apply(ts), eig.apply(ts), atol=1e-11)


def test_defective_matrix_uses_expm():
    # exceptional point of the 2x2 block: kappa = 2 g for |0,1>,|2,0> with omega = 0
    p = SystemParams(g=0.5, omega=0.0, kappa=1.0)
    prop = pr.SpectralPropagator(p)
    ref = expm_state(pr.hamiltonian(p).matrix, 2.0, (0, 1, 0))
    np.testing.assert_allclose(prop.apply(2.0, [0, 1, 0]), ref, atol=1e-10)


@pytest.mark.parametrize("delta, kappa, gamma", [(5.43, 0.01, 0), (0, 0.0015, 0.03), (4.45, 0.05, 0.03), (1, 0.3, 0.3)])
def test_numeric_norm_monotone(delta, kappa, gamma):
    tr = pr.trajectory_numeric(SystemParams.internal(delta=delta, kappa=kappa, gamma=gamma), np.linspace(0, 60, 4000))
    assert np.all(np.diff(tr.norms) <= 1e-10)
    assert tr.meta["method"] in ("eig", "expm")


def test_trajectory_validation():
    with pytest.raises(ParameterError):
        pr.Trajectory(np.array([0.0, 0.0]), np.zeros((2, 3), complex))
    with pytest.raises(ParameterError):
        pr.Trajectory(np.array([0.0, 1.0]), np.zeros((3, 3), complex))
    tr = pr.trajectory_numeric(SystemParams.internal(), [0.0, 1.0])
    assert tr.final.vector.shape == (3,) and tr.state(0).a == 1


def test_pulse_value_examples():
    assert pr.pulse_value(SINE, 0.5, 1.0) == pytest.approx(2.0)
    assert pr.pulse_value(TRAP, 0.5, 1.0) == pytest.approx(1 / 0.9, abs=1e-12)
    assert pr.pulse_value(RECT, 0.3, 1.0) == 1.0
    with pytest.raises(ParameterError):
        pr.pulse_value(SINE, 1.5, 1.0)
    with pytest.raises(ParameterError):
        pr.pulse_value(SINE, 0.5, 0.0)


@pytest.mark.parametrize("shape", SHAPES)
@pytest.mark.parametrize("t_p", [1.0, 7.3])
def test_pulse_area_normalized(shape, t_p):
    pts = [shape.rise_frac * t_p, (1 - shape.fall_frac) * t_p]
    num, _ = quad(lambda t: pr.pulse_value(shape, t, t_p), 0, t_p, points=pts, epsabs=1e-13, epsrel=1e-13)
    assert abs(num / t_p - 1) <= 1e-10
    for t in np.linspace(0, t_p, 9):
        ref, _ = quad(lambda s: pr.pulse_value(shape, s, t_p), 0, t, points=[p for p in pts if p < t] or None,
                      epsabs=1e-13, epsrel=1e-13)
        assert pr.pulse_area(shape, t, t_p) == pytest.approx(ref, abs=1e-10)


def _msq_quad(shape):
    pts = [shape.rise_frac, 1 - shape.fall_frac]
    return quad(lambda t: pr.pulse_value(shape, t, 1.0) ** 2, 0, 1, points=pts, epsabs=1e-13, epsrel=1e-13, limit=200)[0]


def test_pulse_mean_square_examples():
    assert pr.pulse_mean_square(SINE) == 1.5
    assert pr.pulse_mean_square(RECT) == 1.0
    assert pr.pulse_mean_square(TRAP) == pytest.approx(1.0700, abs=1e-4)
    assert pr.pulse_mean_square(TRAP) == pytest.approx(_msq_quad(TRAP), abs=1e-10)
    assert pr.pulse_mean_square(SINE) == pytest.approx(_msq_quad(SINE), abs=1e-10)


@given(st.floats(0.0, 0.49), st.floats(0.0, 0.49))
def test_pulse_mean_square_random_trapezia(r, f):
    shape = PulseShape.trapezium(r, f)
    assert pr.pulse_mean_square(shape) == pytest.approx(_msq_quad(shape), abs=1e-10)


def test_pulse_grid_point():
    for m in (ModeIndex(3, 2), ModeIndex(31, 1)):
        assert pr.pulse_grid_point(m, RECT) == grid_point(m)
    gp = pr.pulse_grid_point(ModeIndex(3, 2), SINE)
    assert gp.theta == pytest.approx(math.sqrt(1.2649**2 + 3), abs=1e-4)
    gp = pr.pulse_grid_point(ModeIndex(31, 2), TRAP)
    assert gp.theta == pytest.approx(math.sqrt(5.4321**2 + 2.1400), abs=1e-4)
    assert gp.op_time == pytest.approx(pr.pulse_seed_time(gp.params(), gp.mode, TRAP))


def test_resonant_oracle_examples():
    p = SystemParams.internal()
    np.testing.assert_allclose(pr.resonant_oracle(SINE, 0.0, 3.0, p).vector, [1, 0, 0], atol=1e-15)
    t_p = math.sqrt(2) * math.pi
    np.testing.assert_allclose(pr.resonant_oracle(TRAP, t_p, t_p).vector, [0, -1, 0], atol=1e-15)
    np.testing.assert_allclose(pr.resonant_oracle(SINE, 2.0, 2.0).vector, pr.resonant_oracle(RECT, 2.0, 2.0).vector)
    with pytest.raises(ParameterError):
        pr.resonant_oracle(SINE, 1.0, 2.0, SystemParams.internal(delta=0.1))


@pytest.mark.parametrize("shape", SHAPES)
def test_pulsed_resonant_matches_oracle(shape):
    t_p = 7.0
    grid = np.linspace(0, t_p, 15)
    tr = pr.evolve_pulsed(SystemParams.internal(), shape, t_p, grid)
    for t, psi in zip(grid, tr.states):
        np.testing.assert_allclose(psi, pr.resonant_oracle(shape, t, t_p).vector, atol=1e-8)


def test_pulse_area_invariance_numeric():
    finals = [pr.evolve_pulsed(SystemParams.internal(), s, 9.1, [9.1]).states[-1] for s in SHAPES]
    for f in finals[1:]:
        np.testing.assert_allclose(f, finals[0], atol=1e-8)


@pytest.mark.parametrize("delta, kappa, gamma", [(1.3, 0, 0), (5.4, 0.05, 0.03)])
def test_rectangular_pulse_matches_spectral(delta, kappa, gamma):
    p = SystemParams.internal(delta=delta, kappa=kappa, gamma=gamma)
    grid = np.linspace(0, 20, 11)
    tr = pr.evolve_pulsed(p, RECT, 20.0, grid)
    np.testing.assert_allclose(tr.states, pr.trajectory_numeric(p, grid).states, atol=1e-8)


def test_pulsed_reference_fidelities():
    m = ModeIndex(3, 2)
    p = grid_point(m).params()
    tp = pr.pulse_seed_time(p, m, SINE)
    psi = pr.evolve_pulsed(p, SINE, tp, [tp]).final
    assert fidelity(psi, target_state(m)) == pytest.approx(0.9529, abs=2e-3)
    m = ModeIndex(31, 2)
    p = grid_point(m).params()
    tp = pr.pulse_seed_time(p, m, TRAP)
    assert fidelity(pr.evolve_pulsed(p, TRAP, tp, [tp]).final, target_state(m)) == pytest.approx(0.99994, abs=2e-4)


def test_shape_limit():
    m = ModeIndex(3, 2)
    p = grid_point(m).params()
    tp = grid_point(m).op_time
    thin = PulseShape.trapezium(1e-3, 1e-3)
    f_thin = fidelity(pr.evolve_pulsed(p, thin, tp, [tp]).final, target_state(m))
    f_rect = fidelity(pr.evolve_pulsed(p, RECT, tp, [tp]).final, target_state(m))
    assert abs(f_thin - f_rect) <= 1e-3


@pytest.mark.parametrize("shape", [TRAP, SINE])
def test_pulsed_norm_monotone(shape):
    p = SystemParams.internal(delta=5.43, kappa=0.05, gamma=0.03)
    tr = pr.evolve_pulsed(p, shape, 30.0, np.linspace(0, 30, 2000))
    assert np.all(np.diff(tr.norms) <= 1e-10)


def test_pulsed_validation():
    p = SystemParams.internal()
    with pytest.raises(ParameterError):
        pr.evolve_pulsed(p, SINE, 1.0, [0.5, 0.2])
    with pytest.raises(ParameterError):
        pr.evolve_pulsed(p, SINE, 1.0, [2.0])
    with pytest.raises(ParameterError):
        pr.evolve_pulsed(SystemParams(g=0.5, omega=0.3), SINE, 1.0, [1.0])


def test_pulsed_physical_units_consistent():
    phys = SystemParams(g=16.0, omega=16.0, delta=40.0)
    grid = np.linspace(0, 5, 6)
    a = pr.evolve_pulsed(phys, SINE, 5.0, grid).states
    b = pr.evolve_pulsed(SystemParams.internal(delta=40 / 32), SINE, 5.0, grid).states
    np.testing.assert_allclose(a, b, atol=1e-12)
