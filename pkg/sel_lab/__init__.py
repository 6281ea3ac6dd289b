"""
sel_lab - A numerical laboratory for singular elliptic systems

    F(D2u, Du, u, x) = u^-p v^-q,   F(D2v, Dv, v, x) = u^-r v^-s   in a bounded domain,   u = v = 0 on its boundary,

with F of Pucci type: regime classification, scalar and coupled solvers, barrier profiles and boundary-rate fits.
"""

__version__ = "0.3.0"

from sel_lab.exceptions import SelLabError
from sel_lab.sel_path import SelPath
from sel_lab.geometry import Domain, Grid, GridFunction, build_grid
from sel_lab.operators import OperatorSpec
from sel_lab.classifier import ExponentQuad, RateSpec, classify
