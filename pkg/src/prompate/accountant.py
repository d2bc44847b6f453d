"""Renyi-DP accounting for Confident-GNMax label release.

Each noisy step of the aggregator is a Gaussian mechanism over vote counts.
Its RDP curve is ``alpha * s**2 / (2 * sigma**2)`` for sensitivity ``s``;
curves compose additively over the ledger and are converted to an
``(epsilon, delta)`` guarantee by minimising

    rdp(alpha) + log(1 / delta) / (alpha - 1)

over a grid of orders.  Because every curve here is linear in ``alpha`` the
minimiser has a closed form, which is injected into the grid so the result
is exact up to float rounding.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    EmptyOrderGrid,
    InvalidDelta,
    NonPositiveSigma,
    OrderOutOfRange,
    PromPateError,
    ZeroCount,
)

DEFAULT_DELTA = 1e-5
MAX_ORDER = 512.0
GRID_SIZE = 200


class AccountingMode(str, enum.Enum):
    """Which aggregator steps are charged to the privacy budget.

    ``PER_STEP`` charges every confidence check at ``sigma1`` and every
    answered query at ``sigma2``.  ``PAPER_SIMPLE`` charges answered
    queries only.  ``OFF`` disables accounting (needed for noiseless runs,
    which have unbounded privacy loss).
    """

    PER_STEP = "per-step"
    PAPER_SIMPLE = "paper-simple"
    OFF = "off"

    @classmethod
    def parse(cls, value: "str | AccountingMode") -> "AccountingMode":
        if isinstance(value, cls):
            return value
        norm = str(value).strip().lower().replace("_", "").replace("-", "")
        for mode in cls:
            if mode.value.replace("-", "") == norm:
                return mode
        raise ValueError(f"unknown accounting mode {value!r}")


def check_order(alpha: float) -> float:
    alpha = float(alpha)
    if not math.isfinite(alpha) or alpha <= 1.0:
        raise OrderOutOfRange(f"RDP order must be finite and > 1, got {alpha}")
    return alpha


def check_delta(delta: float) -> float:
    delta = float(delta)
    if not (0.0 < delta < 1.0):
        raise InvalidDelta(f"delta must lie in (0, 1), got {delta}")
    return delta


@dataclass(frozen=True)
class GaussianMechanism:
    sigma: float
    sensitivity: float = 1.0

    def __post_init__(self):
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise NonPositiveSigma(f"sigma must be positive, got {self.sigma}")
        if not (self.sensitivity > 0 and math.isfinite(self.sensitivity)):
            raise NonPositiveSigma(
                f"sensitivity must be positive, got {self.sensitivity}")

    def rdp_coefficient(self) -> float:
        """Slope of the RDP curve in alpha."""
        return self.sensitivity ** 2 / (2.0 * self.sigma ** 2)


@dataclass
class PrivacyLedger:
    """Counts of noisy aggregator steps; the only input to epsilon.

    Counts only ever grow through :meth:`record`.
    """

    threshold_checks: int = 0
    answered: int = 0
    sigma1: float = 1.0
    sigma2: float = 1.0
    mode: AccountingMode = AccountingMode.PER_STEP
    sensitivity: float = 1.0

    def __post_init__(self):
        self.mode = AccountingMode.parse(self.mode)
        if self.threshold_checks < 0 or self.answered < 0:
            raise ValueError("ledger counts must be nonnegative")
        if self.answered > self.threshold_checks:
            raise ValueError(
                f"answered ({self.answered}) exceeds threshold checks "
                f"({self.threshold_checks})")

    def record(self, answered: bool) -> None:
        self.threshold_checks += 1
        if answered:
            self.answered += 1

    def copy(self) -> "PrivacyLedger":
        return PrivacyLedger(self.threshold_checks, self.answered, self.sigma1,
                             self.sigma2, self.mode, self.sensitivity)

    def to_dict(self) -> dict:
        return {
            "threshold_checks": self.threshold_checks,
            "answered": self.answered,
            "sigma1": self.sigma1,
            "sigma2": self.sigma2,
            "mode": self.mode.value,
            "sensitivity": self.sensitivity,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PrivacyLedger":
        return cls(int(d["threshold_checks"]), int(d["answered"]),
                   float(d["sigma1"]), float(d["sigma2"]),
                   AccountingMode.parse(d.get("mode", "per-step")),
                   float(d.get("sensitivity", 1.0)))

    def scaled(self, k: int) -> "PrivacyLedger":
        return PrivacyLedger(k * self.threshold_checks, k * self.answered,
                             self.sigma1, self.sigma2, self.mode,
                             self.sensitivity)


@dataclass(frozen=True)
class DpBudget:
    epsilon: float
    delta: float
    alpha_star: float


def gaussian_rdp(mech: GaussianMechanism, order: float) -> float:
    """RDP of one Gaussian-noised release at ``order``."""
    return check_order(order) * mech.rdp_coefficient()


def _ledger_slope(ledger: PrivacyLedger) -> float:
    """Total RDP per unit alpha.  Zero-count terms skip sigma validation."""
    if ledger.mode is AccountingMode.OFF:
        raise PromPateError("accounting is off for this ledger")
    slope = 0.0
    if ledger.mode is AccountingMode.PER_STEP and ledger.threshold_checks:
        mech = GaussianMechanism(ledger.sigma1, ledger.sensitivity)
        slope += ledger.threshold_checks * mech.rdp_coefficient()
    if ledger.answered:
        mech = GaussianMechanism(ledger.sigma2, ledger.sensitivity)
        slope += ledger.answered * mech.rdp_coefficient()
    return slope


def compose_ledger(ledger: PrivacyLedger, order: float) -> float:
    """Total RDP of every charged step in ``ledger`` at ``order``."""
    alpha = check_order(order)
    total = 0.0
    if ledger.mode is AccountingMode.PER_STEP and ledger.threshold_checks:
        total += ledger.threshold_checks * gaussian_rdp(
            GaussianMechanism(ledger.sigma1, ledger.sensitivity), alpha)
    if ledger.answered:
        total += ledger.answered * gaussian_rdp(
            GaussianMechanism(ledger.sigma2, ledger.sensitivity), alpha)
    return total


def default_orders(n: int = GRID_SIZE, max_order: float = MAX_ORDER) -> np.ndarray:
    """``n`` orders log-spaced in ``alpha - 1`` over (1, max_order]."""
    return 1.0 + np.logspace(-3.0, math.log10(max_order - 1.0), n)


def rdp_to_dp(
    ledger: PrivacyLedger,
    delta: float = DEFAULT_DELTA,
    orders: Sequence[float] | None = None,
    inject_optimum: bool = True,
) -> DpBudget:
    """Convert the ledger's composed RDP curve to an (epsilon, delta) bound.

    Args:
      ledger: the steps to charge.
      delta: target delta in (0, 1).
      orders: candidate RDP orders; defaults to :func:`default_orders`.
      inject_optimum: add the analytic minimiser to the candidate set.

    Returns:
      DpBudget with the smallest epsilon over the candidates and the order
      that attains it.  An empty ledger costs exactly zero.
    """
    delta = check_delta(delta)
    grid = default_orders() if orders is None else np.asarray(orders, dtype=np.float64)
    if grid.size == 0:
        raise EmptyOrderGrid("need at least one RDP order")
    for a in grid:
        check_order(a)
    slope = _ledger_slope(ledger)
    if slope == 0.0:
        return DpBudget(0.0, delta, float(grid.max()))
    log_inv_delta = math.log(1.0 / delta)
    candidates = [float(a) for a in grid]
    if inject_optimum:
        candidates.append(1.0 + math.sqrt(log_inv_delta / slope))
    best_eps, best_alpha = math.inf, candidates[0]
    for alpha in candidates:
        eps = compose_ledger(ledger, alpha) + log_inv_delta / (alpha - 1.0)
        if eps < best_eps:
            best_eps, best_alpha = eps, alpha
    return DpBudget(best_eps, delta, best_alpha)


def closed_form_eps(count: int, sigma: float, delta: float = DEFAULT_DELTA,
                    sensitivity: float = 1.0) -> tuple[float, float]:
    """Analytic epsilon for ``count`` Gaussian releases at one noise scale.

    Returns ``(epsilon, alpha_star)`` with
    ``alpha_star = 1 + sqrt(2 sigma^2 log(1/delta) / (count s^2))``.
    """
    if count < 1:
        raise ZeroCount("count must be at least 1")
    delta = check_delta(delta)
    slope = count * GaussianMechanism(sigma, sensitivity).rdp_coefficient()
    log_inv_delta = math.log(1.0 / delta)
    alpha_star = 1.0 + math.sqrt(log_inv_delta / slope)
    eps = slope + 2.0 * math.sqrt(slope * log_inv_delta)
    return eps, alpha_star


def account(ledger: PrivacyLedger, delta: float = DEFAULT_DELTA) -> dict:
    """JSON-ready summary of a ledger's privacy cost."""
    budget = rdp_to_dp(ledger, delta)
    return {
        "epsilon": round(budget.epsilon, 4),
        "alpha_star": round(budget.alpha_star, 4),
        "delta": delta,
        "mode": ledger.mode.value,
        "threshold_checks": ledger.threshold_checks,
        "answered": ledger.answered,
        "sigma1": ledger.sigma1,
        "sigma2": ledger.sigma2,
    }
