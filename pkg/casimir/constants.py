"""
Physical constants and the measured setup used as defaults throughout.
"""

import math

HBAR_C = 3.16152677e-26          # J·m
EPSILON0 = 8.8541878128e-12       # F/m

# Coefficients of the finite-conductivity expansion of the plate energy
C1 = -4.0
C2 = 72.0 / 5.0
C3 = -(320.0 / 7.0) * (1.0 - math.pi ** 2 / 210.0)
C4 = (400.0 / 3.0) * (1.0 - 163.0 * math.pi ** 2 / 7350.0)

# Measured setup (gold-coated sphere over an imprinted grating)
DEFAULT_PLASMA_WAVELENGTH = 1.36e-7   # m, assumed for gold
DEFAULT_SPHERE_RADIUS = 1.0e-4        # m
DEFAULT_PERIOD = 1.2e-6               # m
DEFAULT_AMPLITUDE_PLATE = 5.9e-8      # m
DEFAULT_AMPLITUDE_SPHERE = 8.0e-9     # m
DEFAULT_CLOSEST_SEPARATION = 2.21e-7   # m

# Measurement protocol
DEFAULT_SCAN_STEP = 4.6e-10           # m
DEFAULT_SCAN_COUNT = 60
DEFAULT_SEPARATION_STEP = 1.2e-8      # m, one z-piezo step between scan sets
DEFAULT_SEPARATION_COUNT = 4
DEFAULT_STUDENT_T = 2.0
DEFAULT_SYSTEMATIC_FRACTION = 0.05

# Calibration values reported for the cantilever
TORSIONAL_SPRING_CONSTANT = 0.138     # N/m
BENDING_SPRING_CONSTANT = 0.0052      # N/m
RESIDUAL_POTENTIAL = -0.135           # V

# Stated accuracies, carried as metadata on results
PFT_ACCURACY = 0.002
PLATE_ENERGY_ACCURACY = (0.01, 0.02)

TOOL_VERSION = "1.0.0"
