"""
magbill
Numerical workbench for quantum magnetic billiards: discrete magnetic
Laplacians, quantum boundary conditions, gauge covariance checks.
"""

__version__ = "0.3.0"
