"""Physical constants (SI, CODATA 2018).

Values are hard-coded so that results do not depend on the installed
scipy version.
"""

HBAR = 1.054571817e-34  # J s
C = 299792458.0  # m/s
EPS0 = 8.8541878128e-12  # F/m
KB = 1.380649e-23  # J/K
