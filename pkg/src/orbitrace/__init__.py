"""Counting-trace toolkit for flat and hyperbolic 2-orbifolds.

Submodules:

- :mod:`orbitrace.permquilt` -- involution triples, braiding, transplantable pairs and quilts
- :mod:`orbitrace.flatspec` -- exact spectra of flat tori and wallpaper quotients
- :mod:`orbitrace.selberg` -- spectral and geometric sides of the counting trace
- :mod:`orbitrace.fuchsgeo` -- triangle reflection groups, glued orbifolds, geodesic census
- :mod:`orbitrace.cli` -- command line entry point
"""

__version__ = "0.1.0"
