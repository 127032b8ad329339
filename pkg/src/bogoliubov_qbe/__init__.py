"""Radially symmetric quantum Boltzmann solver with the Bogoliubov dispersion."""
