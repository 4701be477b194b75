"""Measurement-driven (Zeno) unstructured-search simulation library.

Subpackages cover the two-level avoided-crossing model and its schedules
(`model`), the shared density-matrix state type (`state`), the discrete
channel families (`channels`), protocol runners and audits (`protocols`),
continuous-time Lindblad and adiabatic integrations (`continuum`), the
von Neumann pointer-measurement oracle (`pointer`), the hypercube search
Hamiltonian in its symmetric subspace (`hypercube`), the optical Zeno
blockade model (`blockade`), and the experiment runner CLI (`cli`).
"""

__version__ = "0.1.0"
