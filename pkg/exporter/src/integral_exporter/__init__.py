from .export import (
    ExportError,
    ExportRequest,
    export_from_integrals,
    export_supercell,
    load_geometry,
)

__version__ = "0.1.0"

__all__ = [
    "ExportError",
    "ExportRequest",
    "export_from_integrals",
    "export_supercell",
    "load_geometry",
]
