"""poroshell: flexural shells saturated by a viscous fluid.

Midsurface bending of a thin inextensional shell coupled to pressure
diffusion across the thickness, with a semi-analytic spectral oracle and
energy diagnostics.
"""

__version__ = "0.1.0"

from .geometry import (SurfaceChart, build_chart, cylinder_chart, geometry_at,
                       plate_chart, wavy_chart)
from .material import (DimensionlessParams, FormCoefficients, MaterialParams,
                       nondimensionalize)
from .solver import (CoupledSolver, FluxTerm, LoadProgram, ShellState, TimeSeries,
                     TractionTerm)
from .thickness import ThicknessGrid

__all__ = [
    "SurfaceChart", "build_chart", "cylinder_chart", "plate_chart", "wavy_chart",
    "geometry_at", "MaterialParams", "DimensionlessParams", "FormCoefficients",
    "nondimensionalize", "CoupledSolver", "LoadProgram", "TractionTerm", "FluxTerm",
    "TimeSeries", "ShellState", "ThicknessGrid", "__version__",
]
