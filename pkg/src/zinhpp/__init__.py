"""Zero-inflated, spatially correlated non-homogeneous Poisson process models
for recurrent events, fitted with Hamiltonian Monte Carlo."""

__version__ = "0.1.0"
