"""
Direct transcription of the point-mass dynamics.

The decision vector stacks the accelerations at knots 0..N-2 (0-based), three
entries per knot. Acceleration is linear between consecutive knots and held at
the last knot over the final segment, so velocities and positions at every node
are affine in the decision vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..config import BoundaryConditions, VehicleParams
from ..errors import ArgumentError
from ..solver import AffineMap


@dataclass(frozen=True)
class Transcription:
    params: VehicleParams
    bc: BoundaryConditions
    times: np.ndarray
    # Scalar node-by-knot coefficients; the 3-D maps are kron(coeffs, I3).
    vel_coeffs: np.ndarray
    pos_coeffs: np.ndarray

    @property
    def N(self) -> int:
        return self.params.N

    @property
    def n(self) -> int:
        return 3 * (self.N - 1)

    @property
    def dt(self) -> float:
        return self.params.t_f / (self.N - 1)

    def _rows(self, coeffs: np.ndarray, i: int) -> np.ndarray:
        return np.kron(coeffs[i : i + 1], np.eye(3))

    def velocity_map(self, i: int) -> AffineMap:
        return AffineMap(self._rows(self.vel_coeffs, i), np.array(self.bc.rdot0))

    def position_map(self, i: int) -> AffineMap:
        drift = np.array(self.bc.r0) + np.array(self.bc.rdot0) * self.times[i]
        return AffineMap(self._rows(self.pos_coeffs, i), drift)

    def accel_map(self, i: int) -> AffineMap:
        """Acceleration at node i; the final node repeats the last knot."""
        knot = min(i, self.N - 2)
        A = np.zeros((3, self.n))
        A[:, 3 * knot : 3 * knot + 3] = np.eye(3)
        return AffineMap(A, np.zeros(3))

    def thrust_map(self, i: int) -> AffineMap:
        """x -> (velocity, acceleration) at node i."""
        vel, acc = self.velocity_map(i), self.accel_map(i)
        return AffineMap(np.vstack([vel.A, acc.A]), np.concatenate([vel.b, acc.b]))

    @property
    def eq_A(self) -> np.ndarray:
        last = self.N - 1
        return np.vstack(
            [self._rows(self.pos_coeffs, last), self._rows(self.vel_coeffs, last)]
        )

    @property
    def eq_b(self) -> np.ndarray:
        r0, v0 = np.array(self.bc.r0), np.array(self.bc.rdot0)
        rf, vf = np.array(self.bc.rf), np.array(self.bc.rdotf)
        return np.concatenate([rf - r0 - v0 * self.params.t_f, vf - v0])

    def states(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Positions, velocities and accelerations at every node (N x 3 each)."""
        acc = np.asarray(x, dtype=float).reshape(self.N - 1, 3)
        r0, v0 = np.array(self.bc.r0), np.array(self.bc.rdot0)
        vel = v0 + self.vel_coeffs @ acc
        pos = r0 + np.outer(self.times, v0) + self.pos_coeffs @ acc
        return pos, vel, np.vstack([acc, acc[-1]])


def build_transcription(
    params: VehicleParams, bc: BoundaryConditions
) -> Transcription:
    N = params.N
    dt = params.t_f / (N - 1)
    vel = np.zeros((N, N - 1))
    pos = np.zeros((N, N - 1))
    for i in range(N - 1):
        vel[i + 1] = vel[i]
        pos[i + 1] = pos[i] + dt * vel[i]
        if i < N - 2:
            vel[i + 1, i] += dt / 2.0
            vel[i + 1, i + 1] += dt / 2.0
            pos[i + 1, i] += dt**2 / 3.0
            pos[i + 1, i + 1] += dt**2 / 6.0
        else:
            vel[i + 1, i] += dt
            pos[i + 1, i] += dt**2 / 2.0
    times = dt * np.arange(N)
    return Transcription(params, bc, times, vel, pos)


def bang_bang_levels(
    bc: BoundaryConditions, t_f: float
) -> tuple[np.ndarray, np.ndarray]:
    """Two constant accelerations, one per half of [0, t_f], meeting bc exactly."""
    if t_f <= 0.0:
        raise ArgumentError(f"t_f must be > 0, got {t_f}")
    r0, v0 = np.array(bc.r0), np.array(bc.rdot0)
    rf, vf = np.array(bc.rf), np.array(bc.rdotf)
    a1 = 4.0 * (rf - r0 - v0 * t_f) / t_f**2 - (vf - v0) / t_f
    a2 = 2.0 * (vf - v0) / t_f - a1
    return a1, a2


def initial_guess(params: VehicleParams, bc: BoundaryConditions) -> np.ndarray:
    a1, a2 = bang_bang_levels(bc, params.t_f)
    dt = params.t_f / (params.N - 1)
    knots = [a1 if j * dt < params.t_f / 2.0 else a2 for j in range(params.N - 1)]
    return np.concatenate(knots)
