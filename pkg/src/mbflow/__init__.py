"""Chain-level flow categories and their twisted-complex realizations.

The library computes with combinatorial shadows of Morse-Bott theory:
graded chain complexes over Z or F_p (homalg), twisted complexes with
totalization, quotients, cones, and the index-filtration spectral
sequence (twisted), flow categories with realization, duals, bimodules,
and relative modules (flowcat), fixture builders (examples), Morse-Bott
bounds (inequalities), and a JSON file format with a command line tool
(cli).
"""

__version__ = "0.1.0"
