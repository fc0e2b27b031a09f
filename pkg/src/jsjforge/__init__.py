"""jsjforge: desk-scale splittings of relatively hyperbolic groups.

Windows into cusped spaces, certified hyperbolicity constants, annulus
decompositions, boundary feature searches, virtually-cyclic subgroup
analysis, and graph-of-groups JSJ assembly, all with honest
exhausted/window-insufficient verdicts when the certified bounds exceed
what a finite window can check.
"""

__version__ = "0.1.0"
