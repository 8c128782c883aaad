"""Generalized conditional gradient with gauge penalties and gap-safe screening."""

from ._gcgm import (
    AtomicSet,
    CertificateError,
    ContractViolation,
    DivergenceError,
    FormatError,
    InfeasibleGaugeError,
    Loss,
    Penalty,
    Problem,
    UnboundedStepError,
    delta,
    gauge,
    gauge_decomposition,
    gen_synthetic,
    identification_reached,
    lmo,
    load_mnist_pair,
    rate_slope,
    reference_solve,
    screen,
    solve,
    support_value,
)

__all__ = [
    "AtomicSet",
    "CertificateError",
    "ContractViolation",
    "DivergenceError",
    "FormatError",
    "InfeasibleGaugeError",
    "Loss",
    "Penalty",
    "Problem",
    "UnboundedStepError",
    "delta",
    "gauge",
    "gauge_decomposition",
    "gen_synthetic",
    "identification_reached",
    "lmo",
    "load_mnist_pair",
    "rate_slope",
    "reference_solve",
    "screen",
    "solve",
    "support_value",
]
