"""Eulerian orientations of triangular-lattice graphs: lattice structure,
face-reversal and tower-move chains, exact analysis, counting and the
crossover reduction."""

__version__ = "0.1.0"
