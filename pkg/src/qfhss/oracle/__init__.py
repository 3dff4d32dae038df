"""Ideal curves, linear-complexity prediction and randomness checks."""

from qfhss.oracle.ideal import (
    CLOSED_FORM,
    ENUMERATION,
    MONTE_CARLO,
    IdealPoint,
    detection_closed_form,
    detection_monte_carlo,
    ideal_detection_probability,
    ideal_jamming_ser,
    ideal_series,
    jamming_enumeration,
    jamming_monte_carlo,
)
from qfhss.oracle.predict import (
    PredictabilityReport,
    berlekamp_massey,
    bytes_to_bits,
    lfsr_sequence,
    linear_complexity_predictor,
)
from qfhss.oracle.randomness import InsufficientDataError, RandomnessRecord, randomness_suite

__all__ = [
    "CLOSED_FORM",
    "ENUMERATION",
    "MONTE_CARLO",
    "IdealPoint",
    "InsufficientDataError",
    "PredictabilityReport",
    "RandomnessRecord",
    "berlekamp_massey",
    "bytes_to_bits",
    "detection_closed_form",
    "detection_monte_carlo",
    "ideal_detection_probability",
    "ideal_jamming_ser",
    "ideal_series",
    "jamming_enumeration",
    "jamming_monte_carlo",
    "lfsr_sequence",
    "linear_complexity_predictor",
    "randomness_suite",
]
