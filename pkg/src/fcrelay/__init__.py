"""Fountain-code transmission over two-relay cooperative networks.

Random linear fountain encoding over GF(2), closed-form transmission-count
distributions for direct / naive-relay / network-coded relay schemes,
seeded Monte Carlo protocol simulation, and two mappings onto Rayleigh
fading wireless links.
"""

__version__ = "0.1.0"
