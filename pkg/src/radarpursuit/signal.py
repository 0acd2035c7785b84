"""FMCW chirp-train signal model: exact atoms, factorized atoms, synthesis.

A frame is Mc chirps of Ms fast-time samples, sample period Ts, chirp
period Tc >= Ms*Ts.  The sampled baseband response of a unit scatterer at
range r (m) and radial speed v (m/s) is, per fast-time index ms and
slow-time index mc (both 0-based, sample time t = mc*Tc + ms*Ts),

    a[mc*Ms + ms] = psi[ms] * phi[mc] * theta[ms, mc]

    psi[ms]       = exp(-2j*pi * (B/Ms) * (2*(r + gamma*v)/c) * ms)
    phi[mc]       = exp(-2j*pi * f0*Tc * (2*v/c) * mc)
    theta[ms, mc] = exp(-2j*pi/c * (B/Ms) * (r/(c*Ts) + ms) * v * t)
                  * exp( 1j*pi * (B/(Ms*Ts)) * (v/c)**2 * t**2)

where gamma = f0*Ms*Ts/B converts speed into an apparent range shift
(range/Doppler coupling).  theta collects the cross terms that a rank-1
model drops: with theta ~= 1 the matrix-shaped atom factorizes into

    A(r, v) = outer(psi(r + gamma*v), phi(v)),

which decouples the coupled range r' = r + gamma*v from v and is what the
factorized solvers exploit.  The size of |theta - 1| grows with Mc*B/f0,
so the factorization degrades as the frame gets longer relative to the
carrier period.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class RadarConfig:
    """Chirp and sampling parameters with derived constants.

    Tc defaults to Ms*Ts (back-to-back chirps); a larger Tc inserts idle
    time between chirps and only changes the slow-time phase rates.
    """

    f0: float
    B: float
    Ts: float
    Ms: int
    Mc: int
    Tc: float | None = None

    def __post_init__(self) -> None:
        if self.Tc is None:
            object.__setattr__(self, "Tc", self.Ms * self.Ts)
        if not (self.f0 > 0.0 and self.B > 0.0 and self.Ts > 0.0):
            raise ValueError("f0, B and Ts must be positive")
        if self.Ms < 1 or self.Mc < 1:
            raise ValueError("Ms and Mc must be at least 1")
        if self.Tc < self.Ms * self.Ts:
            raise ValueError("Tc must be at least Ms*Ts")

    @property
    def M(self) -> int:
        return self.Ms * self.Mc

    @property
    def gamma(self) -> float:
        """Speed-to-range coupling factor, gamma = f0*Ms*Ts/B (seconds)."""
        return self.f0 * self.Ms * self.Ts / self.B

    @property
    def range_resolution(self) -> float:
        return SPEED_OF_LIGHT / (2.0 * self.B)

    @property
    def speed_resolution(self) -> float:
        return SPEED_OF_LIGHT / (4.0 * self.f0 * self.Mc * self.Tc)

    @property
    def max_range(self) -> float:
        """Upper edge of the unambiguous range interval (0, max_range]."""
        return self.Ms * SPEED_OF_LIGHT / (2.0 * self.B)

    @property
    def max_speed(self) -> float:
        """Upper edge of the speed interval (-max_speed, max_speed]."""
        return SPEED_OF_LIGHT / (4.0 * self.f0 * self.Tc)

    def in_range_domain(self, r: float) -> bool:
        return 0.0 < r <= self.max_range

    def in_speed_domain(self, v: float) -> bool:
        return -self.max_speed < v <= self.max_speed

    def coupled_range_bounds(self) -> tuple[float, float]:
        """Bounds of r' = r + gamma*v over the admissible (r, v) domain."""
        shift = self.gamma * self.max_speed
        return -shift, self.max_range + shift


@dataclass(frozen=True)
class Target:
    r: float
    v: float
    alpha: complex

    def __post_init__(self) -> None:
        object.__setattr__(self, "r", float(self.r))
        object.__setattr__(self, "v", float(self.v))
        object.__setattr__(self, "alpha", complex(self.alpha))


@dataclass(frozen=True)
class Scene:
    targets: tuple[Target, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "targets", tuple(self.targets))

    @property
    def num_targets(self) -> int:
        return len(self.targets)

    @classmethod
    def from_arrays(cls, r: Iterable[float], v: Iterable[float],
                    alpha: Iterable[complex]) -> "Scene":
        return cls(tuple(Target(ri, vi, ai) for ri, vi, ai in zip(r, v, alpha)))

    def validate(self, cfg: RadarConfig) -> None:
        """Reject out-of-domain targets; warn on duplicated (r, v) pairs."""
        for k, tgt in enumerate(self.targets):
            if not cfg.in_range_domain(tgt.r):
                raise ValueError(
                    f"target {k} out of range domain: r={tgt.r!r} not in "
                    f"(0, {cfg.max_range!r}]")
            if not cfg.in_speed_domain(tgt.v):
                raise ValueError(
                    f"target {k} out of speed domain: v={tgt.v!r} not in "
                    f"({-cfg.max_speed!r}, {cfg.max_speed!r}]")
        seen: dict[tuple[float, float], int] = {}
        for k, tgt in enumerate(self.targets):
            key = (tgt.r, tgt.v)
            if key in seen:
                warnings.warn(
                    f"targets {seen[key]} and {k} share the same (r, v); "
                    "their amplitudes are indistinguishable", UserWarning,
                    stacklevel=2)
            else:
                seen[key] = k


@dataclass(frozen=True, eq=False)
class Measurement:
    """One frame of M = Ms*Mc complex samples.

    samples[mc*Ms + ms] and matrix[ms, mc] address the same value; the
    matrix is a re-indexed view of the sample vector.
    """

    samples: np.ndarray
    Ms: int
    Mc: int

    def __post_init__(self) -> None:
        arr = np.array(self.samples, dtype=np.complex128).reshape(-1)
        if arr.size != self.Ms * self.Mc:
            raise ValueError(
                f"expected {self.Ms * self.Mc} samples, got {arr.size}")
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)

    @property
    def matrix(self) -> np.ndarray:
        return self.samples.reshape(self.Mc, self.Ms).T

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> "Measurement":
        matrix = np.asarray(matrix, dtype=np.complex128)
        if matrix.ndim != 2:
            raise ValueError("measurement matrix must be 2-D (Ms, Mc)")
        ms, mc = matrix.shape
        return cls(matrix.T.reshape(-1), ms, mc)


def _phase_rates(cfg: RadarConfig) -> tuple[float, float, float, float]:
    """Constant phase-rate factors (kr, kv, q1, q2) of the atom phase.

    Writing the atom as exp(-1j*Phi(r, v)) per (ms, mc) entry,

        Phi = kr*(r + gamma*v)*ms + kv*v*mc
            + q1*(r/(c*Ts) + ms)*v*t - q2*v**2*t**2
    """
    c = SPEED_OF_LIGHT
    kr = 4.0 * np.pi * cfg.B / (cfg.Ms * c)
    kv = 4.0 * np.pi * cfg.f0 * cfg.Tc / c
    q1 = 2.0 * np.pi * cfg.B / (cfg.Ms * c)
    q2 = np.pi * cfg.B / (cfg.Ms * cfg.Ts * c * c)
    return kr, kv, q1, q2


def range_sub_atom(cfg: RadarConfig, r_coupled: float) -> np.ndarray:
    """Fast-time sub-atom psi evaluated at the coupled range r' = r + gamma*v.

    Returns an (Ms,) unit-modulus vector with entry 0 equal to 1.
    """
    kr, _, _, _ = _phase_rates(cfg)
    ms = np.arange(cfg.Ms)
    return np.exp(-1j * kr * float(r_coupled) * ms)


def range_sub_atom_deriv(cfg: RadarConfig, r_coupled: float) -> np.ndarray:
    """Derivative of psi with respect to the coupled range."""
    kr, _, _, _ = _phase_rates(cfg)
    ms = np.arange(cfg.Ms)
    return (-1j * kr * ms) * range_sub_atom(cfg, r_coupled)


def speed_sub_atom(cfg: RadarConfig, v: float) -> np.ndarray:
    """Slow-time sub-atom phi at speed v: (Mc,) unit-modulus, entry 0 is 1."""
    _, kv, _, _ = _phase_rates(cfg)
    mc = np.arange(cfg.Mc)
    return np.exp(-1j * kv * float(v) * mc)


def speed_sub_atom_deriv(cfg: RadarConfig, v: float) -> np.ndarray:
    """Derivative of phi with respect to speed."""
    _, kv, _, _ = _phase_rates(cfg)
    mc = np.arange(cfg.Mc)
    return (-1j * kv * mc) * speed_sub_atom(cfg, v)


def distortion_term(cfg: RadarConfig, r: float, v: float) -> np.ndarray:
    """(Ms, Mc) matrix theta of the phase terms the rank-1 model drops.

    theta == 1 exactly when v == 0; its deviation from 1 grows with the
    frame duration (larger Mc at fixed chirp timing).
    """
    c = SPEED_OF_LIGHT
    _, _, q1, q2 = _phase_rates(cfg)
    ms = np.arange(cfg.Ms).reshape(-1, 1)
    mc = np.arange(cfg.Mc).reshape(1, -1)
    t = mc * cfg.Tc + ms * cfg.Ts
    phase = q1 * (r / (c * cfg.Ts) + ms) * v * t - q2 * v * v * t * t
    return np.exp(-1j * phase)


def factorized_atom(cfg: RadarConfig, r: float, v: float) -> np.ndarray:
    """Rank-1 (Ms, Mc) atom outer(psi(r + gamma*v), phi(v))."""
    return np.outer(range_sub_atom(cfg, r + cfg.gamma * v),
                    speed_sub_atom(cfg, v))


def exact_atom(cfg: RadarConfig, r: float, v: float) -> np.ndarray:
    """Exact length-M atom, the entrywise product psi*phi*theta vectorized
    in sample order (index mc*Ms + ms)."""
    psi = range_sub_atom(cfg, r + cfg.gamma * v)
    phi = speed_sub_atom(cfg, v)
    theta = distortion_term(cfg, r, v)
    return (psi[:, None] * phi[None, :] * theta).T.reshape(-1)


def exact_atom_batch(cfg: RadarConfig, r: np.ndarray,
                     v: np.ndarray) -> np.ndarray:
    """Exact atoms for paired parameter vectors; returns (len(r), M) rows."""
    r = np.asarray(r, dtype=float).reshape(-1, 1, 1)
    v = np.asarray(v, dtype=float).reshape(-1, 1, 1)
    if r.shape[0] != v.shape[0]:
        raise ValueError("r and v must have equal length")
    c = SPEED_OF_LIGHT
    kr, kv, q1, q2 = _phase_rates(cfg)
    ms = np.arange(cfg.Ms).reshape(1, -1, 1)
    mc = np.arange(cfg.Mc).reshape(1, 1, -1)
    t = mc * cfg.Tc + ms * cfg.Ts
    phase = (kr * (r + cfg.gamma * v) * ms + kv * v * mc
             + q1 * (r / (c * cfg.Ts) + ms) * v * t - q2 * v * v * t * t)
    atoms = np.exp(-1j * phase)
    return atoms.transpose(0, 2, 1).reshape(r.shape[0], cfg.M)


def atom_phase_gradients(cfg: RadarConfig, r: float,
                         v: float) -> tuple[np.ndarray, np.ndarray]:
    """Partial derivatives of the atom phase Phi (where a = exp(-1j*Phi))
    with respect to r and v, vectorized in sample order.

    The exact atom derivatives are then d a/d r = -1j*dPhi_dr * a and
    d a/d v = -1j*dPhi_dv * a.
    """
    c = SPEED_OF_LIGHT
    kr, kv, q1, q2 = _phase_rates(cfg)
    ms = np.arange(cfg.Ms).reshape(-1, 1)
    mc = np.arange(cfg.Mc).reshape(1, -1)
    t = mc * cfg.Tc + ms * cfg.Ts
    dphi_dr = kr * ms + q1 * v * t / (c * cfg.Ts)
    dphi_dv = (kr * cfg.gamma * ms + kv * mc
               + q1 * (r / (c * cfg.Ts) + ms) * t - 2.0 * q2 * v * t * t)
    dphi_dr = np.broadcast_to(dphi_dr, (cfg.Ms, cfg.Mc))
    return dphi_dr.T.reshape(-1).copy(), dphi_dv.T.reshape(-1).copy()


def synthesize(cfg: RadarConfig, scene: Scene, model: str = "exact",
               noise_sigma: float = 0.0, seed=0) -> Measurement:
    """Sample one frame of the scene under the chosen signal model.

    model is "exact" (full psi*phi*theta atoms) or "factorized" (rank-1
    atoms, no distortion term).  Additive noise is i.i.d. circular complex
    normal with standard deviation noise_sigma; the draw is deterministic
    for a fixed (scene, model, noise_sigma, seed).
    """
    if model not in ("exact", "factorized"):
        raise ValueError(f"unknown synthesis model {model!r}")
    if noise_sigma < 0.0:
        raise ValueError("noise_sigma must be non-negative")
    scene.validate(cfg)
    y = np.zeros(cfg.M, dtype=np.complex128)
    if scene.num_targets:
        alphas = np.array([t.alpha for t in scene.targets])
        rs = np.array([t.r for t in scene.targets])
        vs = np.array([t.v for t in scene.targets])
        if model == "exact":
            y = alphas @ exact_atom_batch(cfg, rs, vs)
        else:
            psi = np.exp(-1j * _phase_rates(cfg)[0]
                         * np.outer(rs + cfg.gamma * vs, np.arange(cfg.Ms)))
            phi = np.exp(-1j * _phase_rates(cfg)[1]
                         * np.outer(vs, np.arange(cfg.Mc)))
            Y = np.einsum("k,ks,kc->sc", alphas, psi, phi)
            y = Y.T.reshape(-1)
    if noise_sigma > 0.0:
        rng = np.random.default_rng(seed)
        re_im = rng.standard_normal((2, cfg.M))
        y = y + noise_sigma * (re_im[0] + 1j * re_im[1]) / np.sqrt(2.0)
    return Measurement(y, cfg.Ms, cfg.Mc)
