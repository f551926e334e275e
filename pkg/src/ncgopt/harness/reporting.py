"""Run traces, stationarity certificates, and result serialization.

The trace CSV is the plotting and regression interface: fixed column order,
floats at 17 significant digits, and deterministic content for a fixed
(config, seed) pair.  Wall-clock times are kept in memory and in the report
JSON; the CSV column is zeroed unless explicitly requested so that repeated
runs diff byte-identically.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from ..core import Point, ProblemOracle, dense_cap
from ..eigensolver import dense_min_eig
from ..errors import CertificationUnavailable

TRACE_COLUMNS = (
    "iter",
    "f",
    "grad_norm",
    "step_kind",
    "rayleigh",
    "noise_level",
    "hvp_cum",
    "grad_cum",
    "wall_ns",
)


def fmt17(v: float) -> str:
    return f"{float(v):.17g}"


@dataclass
class TraceRow:
    iter: int
    f: float
    grad_norm: float
    step_kind: str
    rayleigh: Optional[float]
    noise_level: Optional[float]
    hvp_cum: int
    grad_cum: int
    wall_ns: int


@dataclass
class RunTrace:
    rows: List[TraceRow] = field(default_factory=list)

    def append(self, row: TraceRow):
        self.rows.append(row)

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def f_values(self):
        return np.array([r.f for r in self.rows])

    def write_csv(self, path, include_wall: bool = False):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(TRACE_COLUMNS) + "\n")
            for r in self.rows:
                cells = [
                    str(r.iter),
                    fmt17(r.f),
                    fmt17(r.grad_norm),
                    r.step_kind,
                    "" if r.rayleigh is None else fmt17(r.rayleigh),
                    "" if r.noise_level is None else fmt17(r.noise_level),
                    str(r.hvp_cum),
                    str(r.grad_cum),
                    str(r.wall_ns if include_wall else 0),
                ]
                fh.write(",".join(cells) + "\n")

    @staticmethod
    def read_csv(path) -> "RunTrace":
        trace = RunTrace()
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip().split(",")
            if tuple(header) != TRACE_COLUMNS:
                raise ValueError(f"unexpected trace header {header}")
            for line in fh:
                cells = line.rstrip("\n").split(",")
                trace.append(
                    TraceRow(
                        iter=int(cells[0]),
                        f=float(cells[1]),
                        grad_norm=float(cells[2]),
                        step_kind=cells[3],
                        rayleigh=None if cells[4] == "" else float(cells[4]),
                        noise_level=None if cells[5] == "" else float(cells[5]),
                        hvp_cum=int(cells[6]),
                        grad_cum=int(cells[7]),
                        wall_ns=int(cells[8]),
                    )
                )
        return trace


@dataclass
class StationarityCertificate:
    """Dense-oracle check of first- and second-order stationarity targets."""

    grad_norm: float
    lambda_min: float
    eps1_target: float
    eps2_target: float
    passed_first_order: bool
    passed_second_order: bool

    def as_dict(self) -> dict:
        return {
            "grad_norm": self.grad_norm,
            "lambda_min": self.lambda_min,
            "eps1_target": self.eps1_target,
            "eps2_target": self.eps2_target,
            "passed_first_order": self.passed_first_order,
            "passed_second_order": self.passed_second_order,
        }


def certify(oracle: ProblemOracle, x: Point, eps1: float, eps2: float) -> StationarityCertificate:
    """Exact stationarity certificate from the dense Hessian oracle.

    Raises CertificationUnavailable above the dense dimension cap; callers
    should then carry a null certificate.
    """
    if oracle.dim > dense_cap():
        raise CertificationUnavailable(
            f"cannot certify: dim {oracle.dim} exceeds dense cap {dense_cap()}"
        )
    grad_norm = float(np.linalg.norm(oracle.gradient(x)))
    lam, _ = dense_min_eig(oracle.dense_hessian(x))
    return StationarityCertificate(
        grad_norm=grad_norm,
        lambda_min=lam,
        eps1_target=float(eps1),
        eps2_target=float(eps2),
        passed_first_order=grad_norm <= eps1,
        passed_second_order=lam >= -eps2,
    )


def report_to_dict(report, trace_ref: Optional[dict] = None) -> dict:
    """JSON-ready dictionary with every SolveReport field present.

    The trace field references the CSV serialization (the CSV is canonical);
    pass trace_ref to embed the file name written alongside the report.
    """
    cert = report.certificate
    return {
        "algorithm": report.algorithm,
        "x_final": [float(v) for v in report.x_final],
        "iters": report.iters,
        "trace": trace_ref if trace_ref is not None else {"csv": None, "rows": len(report.trace)},
        "counters": report.counters.as_dict(),
        "theoretical_iter_bound": report.theoretical_iter_bound,
        "certificate": None if cert is None else cert.as_dict(),
        "terminated": report.terminated,
        "flags": list(report.flags),
        "delta_gap_used": report.delta_gap_used,
        "seed": report.seed,
        "wall_time_s": report.wall_time_s,
    }


def write_report_json(report, path, trace_csv_name: Optional[str] = None):
    payload = report_to_dict(
        report,
        trace_ref={"csv": trace_csv_name, "rows": len(report.trace)},
    )
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
