"""Python bindings for the qnet simulation core. Documents go in and out as JSON text."""

from ._qnet import (
    QnetError,
    default_templates,
    layout,
    normalize_simulation,
    normalize_templates,
    normalize_topology,
    propagation_delay,
    simulate,
    transmission_probability,
    validate,
)

__all__ = [
    "QnetError",
    "default_templates",
    "layout",
    "normalize_simulation",
    "normalize_templates",
    "normalize_topology",
    "propagation_delay",
    "simulate",
    "transmission_probability",
    "validate",
]
