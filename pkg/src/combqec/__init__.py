"""combqec: desk-scale simulation of cavity QEC with a frequency-comb syndrome.

Subpackage map:
  core      truncated-Fock linear algebra (states, operators, Wigner)
  system    physical parameters, dispersive Hamiltonian, collapse operators
  dynamics  Lindblad / unitary / Monte-Carlo-trajectory evolution engines
  comb      frequency-comb parity mapping and its calibration
  code      lowest-order binomial code, recoveries, PASS condition
  grape     piecewise-constant optimal-control pulse synthesis
  tomography  logical process matrices and exponential decay fits
  protocol  full QEC cycles, repetitive runs, baselines, sweeps
  budget    analytic per-cycle error budget and predicted lifetimes
  cli       command-line front end and config handling
"""

__version__ = "0.1.0"
