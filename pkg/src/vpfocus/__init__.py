"""Focusing solutions of the spherically symmetric Vlasov-Poisson systems.

Subpackages and modules:

* :mod:`vpfocus.radial_kinetics`: characteristics and trajectory bounds;
* :mod:`vpfocus.initial_data`: profiles, parameter planning, sampling;
* :mod:`vpfocus.field_solver`: deposition, enclosed charge, field, norms;
* :mod:`vpfocus.simulation`: self-consistent runs and focusing experiments;
* :mod:`vpfocus.cli_io`: configuration, outputs and the command line.
"""

__version__ = "0.1.0"
