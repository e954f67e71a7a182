"""Copula-based changepoint detection for band-limited spectral magnitudes."""

from ._copulacp import (
    Copula,
    binomial_two_sided_p,
    clarke_test,
    detect,
    fourier_magnitudes,
    kendall_tau,
    select_family,
    simulate_dgp1,
    simulate_dgp2,
    tau_to_theta,
    version,
)

__version__ = version()

__all__ = [
    "Copula",
    "binomial_two_sided_p",
    "clarke_test",
    "detect",
    "fourier_magnitudes",
    "kendall_tau",
    "select_family",
    "simulate_dgp1",
    "simulate_dgp2",
    "tau_to_theta",
    "version",
]
