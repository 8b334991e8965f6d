from .grid import GridConfig, build_grid, extract_data_res, pilot_values
from .ldpc import LdpcCode, build_code, decode, encode, export_parity_check, syndrome
from .modulation import ModulationScheme, export_constellation, get_scheme, qam_map

__all__ = [
    "GridConfig",
    "build_grid",
    "extract_data_res",
    "pilot_values",
    "LdpcCode",
    "build_code",
    "decode",
    "encode",
    "export_parity_check",
    "syndrome",
    "ModulationScheme",
    "export_constellation",
    "get_scheme",
    "qam_map",
]
