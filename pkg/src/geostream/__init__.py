"""Airborne survey payload data path.

Time-synchronized pose/image fusion, direct georeferencing, calibration
solvers, byte-budgeted analytics vectorization, and a blackout-tolerant
low-bandwidth downlink, exercised end to end against a synthetic flight
simulator with known ground truth.
"""

__version__ = "0.1.0"
