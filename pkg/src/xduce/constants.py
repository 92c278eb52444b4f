"""Physical constants (CODATA 2018, exact SI where defined)."""

import math

HBAR = 1.054571817e-34  # J s
C_LIGHT = 299792458.0  # m/s
K_B = 1.380649e-23  # J/K
TWO_PI = 2.0 * math.pi


def hz_to_rad(f):
    """Ordinary frequency (Hz) to angular frequency (rad/s)."""
    return f * TWO_PI


def rad_to_hz(w):
    return w / TWO_PI
