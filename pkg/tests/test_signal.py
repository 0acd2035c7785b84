"""Signal-model oracles: hand-computed constants, an independently coded
atom loop, FFT sub-atom columns, finite-difference gradients, synthesis."""
import cmath
import warnings

import numpy as np
import pytest

from radarpursuit.signal import (
    SPEED_OF_LIGHT,
    Measurement,
    RadarConfig,
    Scene,
    Target,
    atom_phase_gradients,
    distortion_term,
    exact_atom,
    exact_atom_batch,
    factorized_atom,
    range_sub_atom,
    range_sub_atom_deriv,
    speed_sub_atom,
    speed_sub_atom_deriv,
    synthesize,
)

BASE = dict(f0=24e9, B=200e6, Ts=5e-6)
CFG = RadarConfig(Ms=16, Mc=16, **BASE)


def reference_atom(cfg, r, v):
    """From-scratch scalar-loop evaluation of the sampled response."""
    c = SPEED_OF_LIGHT
    gamma = cfg.f0 * cfg.Ms * cfg.Ts / cfg.B
    out = np.empty(cfg.Ms * cfg.Mc, dtype=complex)
    for mc in range(cfg.Mc):
        for ms in range(cfg.Ms):
            t = mc * cfg.Tc + ms * cfg.Ts
            phase = (2 * np.pi * (cfg.B / cfg.Ms) * (2 * (r + gamma * v) / c)
                     * ms
                     + 2 * np.pi * cfg.f0 * cfg.Tc * (2 * v / c) * mc
                     + (2 * np.pi / c) * (cfg.B / cfg.Ms)
                     * (r / (c * cfg.Ts) + ms) * v * t
                     - np.pi * (cfg.B / (cfg.Ms * cfg.Ts)) * (v / c) ** 2
                     * t * t)
            out[mc * cfg.Ms + ms] = cmath.exp(-1j * phase)
    return out


def test_derived_constants_hand_computed():
    assert CFG.Tc == pytest.approx(80e-6)
    assert CFG.M == 256
    assert CFG.gamma == pytest.approx(9.6e-3, rel=1e-12)
    assert CFG.range_resolution == pytest.approx(0.749481145, rel=1e-12)
    assert CFG.speed_resolution == pytest.approx(2.439717268880208,
                                                 rel=1e-12)
    assert CFG.max_range == pytest.approx(16 * 0.749481145, rel=1e-12)
    assert CFG.max_speed == pytest.approx(39.03547630208333, rel=1e-12)
    # Mc scales only the speed resolution
    cfg2 = RadarConfig(Ms=16, Mc=32, **BASE)
    assert cfg2.speed_resolution == pytest.approx(CFG.speed_resolution / 2)
    assert cfg2.max_speed == pytest.approx(CFG.max_speed)


def test_config_validation():
    with pytest.raises(ValueError):
        RadarConfig(Ms=0, Mc=16, **BASE)
    with pytest.raises(ValueError):
        RadarConfig(Ms=16, Mc=16, f0=-1.0, B=200e6, Ts=5e-6)
    with pytest.raises(ValueError):
        RadarConfig(Ms=16, Mc=16, Tc=70e-6, **BASE)  # < Ms*Ts
    cfg = RadarConfig(Ms=16, Mc=16, Tc=100e-6, **BASE)
    assert cfg.Tc == 100e-6


def test_domains_half_open():
    assert not CFG.in_range_domain(0.0)
    assert CFG.in_range_domain(CFG.max_range)
    assert not CFG.in_range_domain(CFG.max_range * 1.0000001)
    assert not CFG.in_speed_domain(-CFG.max_speed)
    assert CFG.in_speed_domain(CFG.max_speed)


def test_exact_atom_matches_reference_loop():
    rng = np.random.default_rng(1)
    for _ in range(5):
        r = rng.uniform(0.1, CFG.max_range)
        v = rng.uniform(-CFG.max_speed + 0.1, CFG.max_speed)
        a = exact_atom(CFG, r, v)
        assert np.abs(a - reference_atom(CFG, r, v)).max() < 1e-12
        assert a[0] == 1.0 + 0.0j
        np.testing.assert_allclose(np.abs(a), 1.0, atol=1e-13)


def test_exact_atom_batch_matches_singles():
    rng = np.random.default_rng(2)
    r = rng.uniform(0.1, CFG.max_range, size=7)
    v = rng.uniform(-CFG.max_speed + 0.1, CFG.max_speed, size=7)
    batch = exact_atom_batch(CFG, r, v)
    assert batch.shape == (7, CFG.M)
    for i in range(7):
        assert np.abs(batch[i] - exact_atom(CFG, r[i], v[i])).max() < 1e-12
    with pytest.raises(ValueError):
        exact_atom_batch(CFG, r[:3], v)


def test_range_sub_atom_is_fft_column():
    # r' = rho_r advances the fast-time phase by exactly one DFT bin
    col = np.fft.fft(np.eye(CFG.Ms))[:, 1]
    psi = range_sub_atom(CFG, CFG.range_resolution)
    np.testing.assert_allclose(psi, col, atol=1e-12)


def test_speed_sub_atom_is_fft_column_and_symmetric():
    col = np.fft.fft(np.eye(CFG.Mc))[:, 1]
    phi = speed_sub_atom(CFG, 2 * CFG.speed_resolution)
    np.testing.assert_allclose(phi, col, atol=1e-12)
    v = 13.37
    np.testing.assert_allclose(speed_sub_atom(CFG, -v),
                               np.conj(speed_sub_atom(CFG, v)), atol=1e-13)


def test_sub_atom_derivs_match_finite_differences():
    h = 1e-6
    for f, fd_of in ((range_sub_atom_deriv, range_sub_atom),
                     (speed_sub_atom_deriv, speed_sub_atom)):
        x = 5.21
        fd = (fd_of(CFG, x + h) - fd_of(CFG, x - h)) / (2 * h)
        d = f(CFG, x)
        assert np.linalg.norm(fd - d) / np.linalg.norm(d) < 1e-8
        assert d[0] == 0.0  # derivative kills the constant entry


def test_distortion_identity_at_zero_speed():
    rng = np.random.default_rng(3)
    for _ in range(100):
        r = rng.uniform(1e-6, CFG.max_range)
        theta = distortion_term(CFG, r, 0.0)
        np.testing.assert_allclose(theta, 1.0, atol=1e-15)
        # exact atom reshaped equals the rank-1 atom when v = 0
        a = exact_atom(CFG, r, 0.0).reshape(CFG.Mc, CFG.Ms).T
        np.testing.assert_allclose(a, factorized_atom(CFG, r, 0.0),
                                   atol=1e-12)


def test_mismatch_grows_with_mc():
    r, v = 5.0, 25.0
    norms = []
    for mc in (8, 16, 32, 64):
        cfg = RadarConfig(Ms=16, Mc=mc, **BASE)
        a = exact_atom(cfg, r, v).reshape(cfg.Mc, cfg.Ms).T
        norms.append(np.linalg.norm(factorized_atom(cfg, r, v) - a)
                     / np.sqrt(cfg.M))
    assert all(b > a for a, b in zip(norms, norms[1:]))


def test_phase_gradients_match_central_differences():
    rng = np.random.default_rng(4)
    for _ in range(10):
        r = rng.uniform(0.5, CFG.max_range)
        v = rng.uniform(-CFG.max_speed + 0.5, CFG.max_speed - 0.5)
        dphi_dr, dphi_dv = atom_phase_gradients(CFG, r, v)
        hr = 1e-6 * CFG.range_resolution
        fd_r = np.angle(exact_atom(CFG, r + hr, v)
                        / exact_atom(CFG, r - hr, v)) / (-2 * hr)
        assert (np.abs(fd_r - dphi_dr).max()
                < 1e-6 * np.abs(dphi_dr).max())
        hv = 1e-6 * CFG.speed_resolution
        fd_v = np.angle(exact_atom(CFG, r, v + hv)
                        / exact_atom(CFG, r, v - hv)) / (-2 * hv)
        assert (np.abs(fd_v - dphi_dv).max()
                < 1e-6 * np.abs(dphi_dv).max())


def test_measurement_matrix_layout():
    samples = np.arange(CFG.M, dtype=np.complex128)
    meas = Measurement(samples, CFG.Ms, CFG.Mc)
    for ms, mc in ((0, 0), (3, 7), (15, 15), (1, 0), (0, 1)):
        assert meas.matrix[ms, mc] == samples[mc * CFG.Ms + ms]
    again = Measurement.from_matrix(meas.matrix)
    np.testing.assert_array_equal(again.samples, samples)
    with pytest.raises(ValueError):
        Measurement(samples[:-1], CFG.Ms, CFG.Mc)


def test_scene_validation():
    ok = Scene((Target(1.0, 0.0, 1.0), Target(2.0, -3.0, 1j)))
    ok.validate(CFG)
    bad = Scene((Target(1.0, 0.0, 1.0), Target(-1.0, 0.0, 1.0)))
    with pytest.raises(ValueError, match="1"):
        bad.validate(CFG)
    fast = Scene((Target(1.0, CFG.max_speed * 2, 1.0),))
    with pytest.raises(ValueError):
        fast.validate(CFG)
    twin = Scene((Target(1.0, 0.0, 1.0), Target(1.0, 0.0, 2.0)))
    with pytest.warns(UserWarning):
        twin.validate(CFG)


def test_synthesize_empty_scene_is_zero():
    meas = synthesize(CFG, Scene(()))
    assert meas.samples.shape == (CFG.M,)
    assert np.all(meas.samples == 0)


def test_synthesize_single_target_equals_atom():
    meas = synthesize(CFG, Scene((Target(3.3, -7.7, 1.0),)))
    np.testing.assert_allclose(meas.samples, exact_atom(CFG, 3.3, -7.7),
                               atol=1e-15)


def test_synthesize_linearity_and_models():
    t1, t2 = Target(3.3, -7.7, 0.5 + 1j), Target(9.1, 12.0, -0.25j)
    both = synthesize(CFG, Scene((t1, t2)))
    expect = (t1.alpha * exact_atom(CFG, t1.r, t1.v)
              + t2.alpha * exact_atom(CFG, t2.r, t2.v))
    np.testing.assert_allclose(both.samples, expect, atol=1e-12)
    fac = synthesize(CFG, Scene((t1, t2)), model="factorized")
    expect_fac = (t1.alpha * factorized_atom(CFG, t1.r, t1.v)
                  + t2.alpha * factorized_atom(CFG, t2.r, t2.v))
    np.testing.assert_allclose(fac.matrix, expect_fac, atol=1e-12)
    with pytest.raises(ValueError):
        synthesize(CFG, Scene((t1,)), model="exactish")


def test_synthesize_noise_seeded():
    scene = Scene((Target(3.3, -7.7, 1.0),))
    a = synthesize(CFG, scene, noise_sigma=0.3, seed=5)
    b = synthesize(CFG, scene, noise_sigma=0.3, seed=5)
    c = synthesize(CFG, scene, noise_sigma=0.3, seed=6)
    np.testing.assert_array_equal(a.samples, b.samples)
    assert np.any(a.samples != c.samples)
    clean = synthesize(CFG, scene)
    noise = a.samples - clean.samples
    # CN(0, sigma^2): E|n|^2 = sigma^2 split evenly over re/im
    assert np.mean(np.abs(noise) ** 2) == pytest.approx(0.09, rel=0.35)
    with pytest.raises(ValueError):
        synthesize(CFG, scene, noise_sigma=-0.1)


def test_synthesize_rejects_out_of_domain_scene():
    with pytest.raises(ValueError):
        synthesize(CFG, Scene((Target(-1.0, 0.0, 1.0),)))


def test_scene_from_arrays_round_trip():
    r = np.array([1.0, 2.0])
    v = np.array([-3.0, 4.0])
    a = np.array([1 + 2j, -0.5j])
    scene = Scene.from_arrays(r, v, a)
    assert scene.num_targets == 2
    assert scene.targets[1] == Target(2.0, 4.0, -0.5j)
