"""Data-driven consensus controller built from pure update functions.

Pieces, in the order the engine applies them each step:

* hold-based denial compensation of the neighborhood error,
* a projection-type update of the input-to-error sensitivity matrix
  (pseudo-partitioned Jacobian) with a safety reset,
* a four-part observer group estimating the compensated error, the lumped
  disturbance, the external disturbance, and the injected false data,
* the input update law, plus a conventional variant with the observer
  terms stripped for comparison runs.

Every function consumes explicit state and returns new state: replaying a
logged run through them reproduces the log bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DivergenceFault


def spectral_norm(matrix: np.ndarray) -> float:
    """Largest singular value (the 2-norm used in the update denominators)."""
    return float(np.linalg.norm(np.asarray(matrix, dtype=float), 2))


@dataclass(frozen=True)
class ControllerGains:
    """Step factors, regularizers, reset thresholds, and observer gains."""

    eta: float = 0.1
    rho: float = 0.1
    lam: float = 1.0
    mu: float = 1.0
    eps_norm: float = 1e-4   # reset when ||phi|| falls below this
    eps_input: float = 1e-4  # reset when ||du|| falls below this
    l1: float = 0.1
    l2: float = 0.1
    l3: float = 1.2
    l4: float = 0.1
    l5: float = 0.1
    l6: float = 1.2
    l7: float = 0.05
    l8: float = 0.05

    def __post_init__(self):
        if self.lam <= 0 or self.mu <= 0:
            raise ValueError("lambda and mu must be positive")
        if self.eps_norm <= 0 or self.eps_input <= 0:
            raise ValueError("reset thresholds must be positive")

    def range_warnings(self) -> list[str]:
        """Advisory stability-range checks; out-of-range gains stay runnable."""
        warns = []
        if not 0.0 < self.eta <= 1.0:
            warns.append(f"eta={self.eta} outside stability range (0, 1]")
        if not 0.0 < self.rho <= 1.0:
            warns.append(f"rho={self.rho} outside stability range (0, 1]")
        for name in ("l1", "l2", "l4", "l5", "l7", "l8"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                warns.append(f"{name}={v} outside stability range (0, 1]")
        for name in ("l3", "l6"):
            v = getattr(self, name)
            if not 1.0 < v <= 2.0:
                warns.append(f"{name}={v} outside stability range (1, 2]")
        return warns


def default_phi_init(n_y: int = 2, n_u: int = 2) -> np.ndarray:
    """Initial sensitivity estimate: -1 on the diagonal, -0.1 elsewhere.

    Raising an agent's own input raises its output, which lowers its
    disagreement error, so the true sensitivity diagonal is negative for
    the benchmark family; the reset rule keeps this sign pattern.
    """
    phi = np.full((n_y, n_u), -0.1)
    np.fill_diagonal(phi, -1.0)
    return phi


@dataclass(frozen=True)
class PpjmEstimate:
    """Sensitivity estimate with its reset target and reference sign pattern."""

    phi: np.ndarray
    phi_ref: np.ndarray
    sign_ref: np.ndarray

    @staticmethod
    def initial(phi0: np.ndarray) -> "PpjmEstimate":
        phi0 = np.array(phi0, dtype=float)
        return PpjmEstimate(phi=phi0, phi_ref=phi0.copy(), sign_ref=np.sign(phi0))


@dataclass(frozen=True)
class ObserverState:
    """Estimates of the compensated error, lumped and external disturbance, and injection."""

    chi_hat: np.ndarray
    theta_hat: np.ndarray
    d_hat: np.ndarray
    delta_hat: np.ndarray

    @staticmethod
    def zeros(n_y: int = 2) -> "ObserverState":
        return ObserverState(*(np.zeros(n_y) for _ in range(4)))


@dataclass
class CompensatedError:
    """Per-agent bookkeeping for the denial hold."""

    chi: np.ndarray
    chi_prev: np.ndarray
    xi_held: np.ndarray

    @staticmethod
    def zeros(n_y: int = 2) -> "CompensatedError":
        return CompensatedError(np.zeros(n_y), np.zeros(n_y), np.zeros(n_y))


def dos_compensate(xi_now: np.ndarray, xi_prev: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Per-channel hold: fresh error where delivered (h=1), last received where denied."""
    xi_now = np.asarray(xi_now, dtype=float)
    xi_prev = np.asarray(xi_prev, dtype=float)
    live = np.asarray(h).astype(bool)
    return np.where(live, xi_now, xi_prev)


def update_ppjm(
    est: PpjmEstimate,
    d_chi: np.ndarray,
    du_prev: np.ndarray,
    gains: ControllerGains,
) -> tuple[PpjmEstimate, bool]:
    """Projection step toward explaining the latest error increment, then reset.

    phi <- phi + rho (d_chi - phi du) du^T / (lam + ||du||^2)

    Returns the new estimate and whether the reset fired.
    """
    d_chi = np.asarray(d_chi, dtype=float)
    du = np.asarray(du_prev, dtype=float)
    denom = gains.lam + float(du @ du)
    innovation = d_chi - est.phi @ du
    phi = est.phi + gains.rho * np.outer(innovation, du) / denom
    return reset_ppjm(replace(est, phi=phi), du, gains)


def reset_ppjm(
    est: PpjmEstimate, du: np.ndarray, gains: ControllerGains
) -> tuple[PpjmEstimate, bool]:
    """Fall back to the first estimate on lost excitation, small norm, or sign flip."""
    du = np.asarray(du, dtype=float)
    fire = (
        spectral_norm(est.phi) < gains.eps_norm
        or float(np.linalg.norm(du)) < gains.eps_input
        or bool((np.sign(est.phi) != est.sign_ref).any())
    )
    if fire:
        return replace(est, phi=est.phi_ref.copy()), True
    return est, False


def observer_step(
    obs: ObserverState,
    phi: np.ndarray,
    du: np.ndarray,
    chi_tilde: np.ndarray,
    gains: ControllerGains,
) -> ObserverState:
    """Advance the observer group synchronously with step-k quantities.

    chi_hat+   = chi_hat + (phi du + theta_hat) + l1 delta_hat + l2 d_hat + l3 chi_tilde
    theta_hat+ = theta_hat + l4 d_hat + l5 delta_hat + l6 chi_tilde
    d_hat+     = d_hat + l7 (phi du + theta_hat)
    delta_hat+ = delta_hat + l8 (phi du + theta_hat)
    """
    phi = np.asarray(phi, dtype=float)
    du = np.asarray(du, dtype=float)
    chi_tilde = np.asarray(chi_tilde, dtype=float)
    drive = phi @ du + obs.theta_hat
    nxt = ObserverState(
        chi_hat=obs.chi_hat + drive + gains.l1 * obs.delta_hat + gains.l2 * obs.d_hat
        + gains.l3 * chi_tilde,
        theta_hat=obs.theta_hat + gains.l4 * obs.d_hat + gains.l5 * obs.delta_hat
        + gains.l6 * chi_tilde,
        d_hat=obs.d_hat + gains.l7 * drive,
        delta_hat=obs.delta_hat + gains.l8 * drive,
    )
    for part in (nxt.chi_hat, nxt.theta_hat, nxt.d_hat, nxt.delta_hat):
        if not np.isfinite(part).all():
            raise DivergenceFault("observer state non-finite")
    return nxt


def control_update(
    u_prev: np.ndarray,
    phi: np.ndarray,
    chi_hat: np.ndarray,
    chi_tilde: np.ndarray,
    delta_hat: np.ndarray,
    d_hat: np.ndarray,
    gains: ControllerGains,
) -> np.ndarray:
    """Input update with observer feedback and attack/disturbance compensation.

    u = u_prev - eta phi^T (chi_hat + l3 chi_tilde) / (mu + ||phi||^2)
               - eta phi^T (l1 delta_hat + l2 d_hat) / (mu + ||phi||^2)
    """
    phi = np.asarray(phi, dtype=float)
    denom = gains.mu + spectral_norm(phi) ** 2
    feedback = np.asarray(chi_hat, dtype=float) + gains.l3 * np.asarray(chi_tilde, dtype=float)
    compensation = gains.l1 * np.asarray(delta_hat, dtype=float) + gains.l2 * np.asarray(
        d_hat, dtype=float
    )
    return (
        np.asarray(u_prev, dtype=float)
        - gains.eta * (phi.T @ feedback) / denom
        - gains.eta * (phi.T @ compensation) / denom
    )


def baseline_mfac_update(
    u_prev: np.ndarray, phi: np.ndarray, chi: np.ndarray, gains: ControllerGains
) -> np.ndarray:
    """Conventional update: raw compensated error, no observer terms.

    u = u_prev - eta phi^T chi / (mu + ||phi||^2)
    """
    phi = np.asarray(phi, dtype=float)
    denom = gains.mu + spectral_norm(phi) ** 2
    return np.asarray(u_prev, dtype=float) - gains.eta * (
        phi.T @ np.asarray(chi, dtype=float)
    ) / denom


def gamma_matrix(phi: np.ndarray, eta: float, mu: float) -> tuple[np.ndarray, float]:
    """Closed-loop iteration matrix gamma = I - eta phi phi^T / (mu + ||phi||^2).

    Returns the matrix and its spectral radius; with eta in (0, 1] and
    mu > 0 every eigenvalue lies in (0, 1].
    """
    if mu <= 0:
        raise ValueError("mu must be positive")
    phi = np.asarray(phi, dtype=float)
    denom = mu + spectral_norm(phi) ** 2
    gamma = np.eye(phi.shape[0]) - eta * (phi @ phi.T) / denom
    radius = float(np.abs(np.linalg.eigvalsh(gamma)).max())
    return gamma, radius
