"""Numerical workbench for reproducing kernels on the symmetrized bidisc."""
