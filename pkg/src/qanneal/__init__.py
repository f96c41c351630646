"""Desk-scale annealing laboratory.

Classical simulated annealing, path-integral Monte Carlo quantum annealing
and exact real-time adiabatic evolution for Ising-encoded problems, plus a
kinetically constrained chain annealer and the quench of the infinite-range
transverse Ising model.
"""

__version__ = "0.1.0"
