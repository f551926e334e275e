"""CLI entry point, trace logging, certification, and sample-size calculators."""

from .reporting import (
    RunTrace,
    StationarityCertificate,
    TraceRow,
    certify,
    report_to_dict,
    write_report_json,
)
from .samples import sample_sizes, sample_sizes_explicit, sncg_delta_prime

__all__ = [
    "RunTrace",
    "StationarityCertificate",
    "TraceRow",
    "certify",
    "report_to_dict",
    "write_report_json",
    "sample_sizes",
    "sample_sizes_explicit",
    "sncg_delta_prime",
]
