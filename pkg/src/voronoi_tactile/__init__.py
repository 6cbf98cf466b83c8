"""Tactile features from marker centroids via bounded Voronoi tessellation."""

from .calibration import CalibrationTable, apply_calibration, fit_calibration
from .errors import TactileError
from .geometry import (
    BoundaryRing,
    CellSet,
    CentroidFrame,
    area_deltas,
    build_boundary,
    cell_areas,
    tessellate,
)
from .pipeline import PipelineConfig, TactilePipeline, process_frame
from .render import RenderSpec, color_map, render_frame
from .shear import ShearField, global_shear, local_shears
from .simulator import ContactScenario, LayoutSpec, Press, generate_layout, run_protocol, simulate
from .surface import (
    ContactSet,
    DeformationSurface,
    detect_contacts,
    fit_surface,
    regional_maxima,
    surface_volume,
)

__version__ = "0.1.0"
