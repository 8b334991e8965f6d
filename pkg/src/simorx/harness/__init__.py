from .bler import BlerCurve, BlerPoint, EvalConfig, GenieReceiver, NeuralReceiver, run_bler
from .genie import genie_lmmse_baseline, genie_lmmse_llrs, uncoded_qpsk_ber
from .results import (
    CSV_HEADER,
    curve_rows,
    emit_results,
    read_curve_csv,
    read_manifest,
    write_curve_csv,
    write_manifest,
)
from .sweep import SweepConfig, SweepResult, sweep

__all__ = [
    "BlerCurve",
    "BlerPoint",
    "EvalConfig",
    "GenieReceiver",
    "NeuralReceiver",
    "run_bler",
    "genie_lmmse_baseline",
    "genie_lmmse_llrs",
    "uncoded_qpsk_ber",
    "CSV_HEADER",
    "curve_rows",
    "emit_results",
    "read_curve_csv",
    "read_manifest",
    "write_curve_csv",
    "write_manifest",
    "SweepConfig",
    "SweepResult",
    "sweep",
]
