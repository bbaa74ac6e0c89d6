"""Uncertainty relations for joint measurements as LHS / RHS / slack records.

Relation identifiers:

``robertson``
    ``dA dB >= |<[A,B]>| / 2`` (state preparation, no measurement involved).
``uvur``
    ``eps(A) eps(B) + |<[n_A,B]>|/2 + |<[A,n_B]>|/2 >= |<[A,B]>|/2``; universal.
``uvur_noise_std``
    the same with ``dN_A dN_B`` in place of ``eps(A) eps(B)``; universal.
``gur``
    ``eps(A) eps(B) + eps(A) dB + dA eps(B) >= |<[A,B]>|/2``; universal.
``chain_gur_uvur`` / ``chain_uvur_noise_std``
    ordering of the left-hand sides above; universal.
``noiseless_bound``
    ``dA eps(B) >= |<[A,B]>|/2`` when the A output is precise.
``heisenberg_product`` / ``heisenberg_noise_std``
    ``eps(A) eps(B)`` and ``dN_A dN_B`` against ``|<[A,B]>|/2``; guaranteed
    only for statistically independent noise on both axes.
``output_spread``
    ``dx dy >= |<[A,B]>|``; guaranteed only for independent noise.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from . import linalg as la
from . import metrics
from .povm import JointPovm, is_precise_for, marginal
from .process import Ancilla, Model, resolve_model
from .tolerances import Tolerances, resolve

UNIVERSAL = ("uvur", "uvur_noise_std", "gur", "chain_gur_uvur", "chain_uvur_noise_std")


@dataclass(frozen=True)
class RelationRecord:
    name: str
    lhs: float
    rhs: float
    slack: float
    holds: bool
    applicable: bool = True
    terms: dict = field(default_factory=dict)

    @classmethod
    def make(cls, name: str, lhs: float, rhs: float, tol: Tolerances, applicable: bool = True,
             **terms) -> "RelationRecord":
        slack = lhs - rhs
        return cls(name, float(lhs), float(rhs), float(slack), bool(slack >= -tol.slack), applicable,
                   {k: float(v) for k, v in terms.items()})

    @property
    def status(self) -> str:
        if not self.applicable:
            return "not_applicable"
        return "holds" if self.holds else "fails"

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "slack": self.slack,
            "holds": self.holds,
            "applicable": self.applicable,
            "status": self.status,
            "terms": dict(self.terms),
        }


def _half_comm(X: np.ndarray, Y: np.ndarray, psi: np.ndarray) -> float:
    return 0.5 * abs(la.expectation(X @ Y - Y @ X, psi))


def eval_robertson(A, B, psi, tol: Tolerances | None = None) -> RelationRecord:
    tol = resolve(tol)
    A = la.as_operator(A, hermitian=True, tol=tol)
    B = la.as_operator(B, hermitian=True, tol=tol)
    dA, dB = la.std_dev(A, psi, tol), la.std_dev(B, psi, tol)
    return RelationRecord.make("robertson", dA * dB, _half_comm(A, B, psi), tol, std_A=dA, std_B=dB)


class _Quantities:
    """Everything the relation evaluators share, computed once per (model, state)."""

    def __init__(self, p: JointPovm, A, B, psi, ancilla: Ancilla | None, tol: Tolerances):
        self.tol = tol
        self.A = la.as_operator(A, hermitian=True, tol=tol)
        self.B = la.as_operator(B, hermitian=True, tol=tol)
        self.psi = la.as_state(psi, tol=tol)
        self.p = p
        self.report_a = metrics.noise_report(p, self.A, self.psi, "A", ancilla, tol)
        self.report_b = metrics.noise_report(p, self.B, self.psi, "B", ancilla, tol)
        self.eps_a = self.report_a.rms_noise
        self.eps_b = self.report_b.rms_noise
        self.dn_a = self.report_a.noise_std
        self.dn_b = self.report_b.noise_std
        self.n_a = self.report_a.mean_noise_op
        self.n_b = self.report_b.mean_noise_op
        self.std_a = la.std_dev(self.A, self.psi, tol)
        self.std_b = la.std_dev(self.B, self.psi, tol)
        self.half_ab = _half_comm(self.A, self.B, self.psi)
        self.half_nab = _half_comm(self.n_a, self.B, self.psi)
        self.half_anb = _half_comm(self.A, self.n_b, self.psi)
        self.independent = self.report_a.stat_independent and self.report_b.stat_independent

    @property
    def uvur_lhs(self) -> float:
        return self.eps_a * self.eps_b + self.half_nab + self.half_anb

    @property
    def uvur_std_lhs(self) -> float:
        return self.dn_a * self.dn_b + self.half_nab + self.half_anb

    @property
    def gur_lhs(self) -> float:
        return self.eps_a * self.eps_b + self.eps_a * self.std_b + self.std_a * self.eps_b


def _quantities(p, A, B, psi, ancilla, tol) -> _Quantities:
    return _Quantities(p, A, B, psi, ancilla, resolve(tol))


def _uvur_records(q: _Quantities) -> list[RelationRecord]:
    common = dict(comm_nA_B=q.half_nab, comm_A_nB=q.half_anb)
    return [
        RelationRecord.make("uvur", q.uvur_lhs, q.half_ab, q.tol,
                            eps_product=q.eps_a * q.eps_b, **common),
        RelationRecord.make("uvur_noise_std", q.uvur_std_lhs, q.half_ab, q.tol,
                            noise_std_product=q.dn_a * q.dn_b, **common),
    ]


def eval_uvur(p: JointPovm, A, B, psi, ancilla: Ancilla | None = None,
              tol: Tolerances | None = None) -> list[RelationRecord]:
    """The universally valid relation and its noise-standard-deviation variant."""
    return _uvur_records(_quantities(p, A, B, psi, ancilla, tol))


def _gur_records(q: _Quantities) -> list[RelationRecord]:
    return [
        RelationRecord.make("gur", q.gur_lhs, q.half_ab, q.tol,
                            eps_product=q.eps_a * q.eps_b, eps_A_std_B=q.eps_a * q.std_b,
                            std_A_eps_B=q.std_a * q.eps_b),
        RelationRecord.make("chain_gur_uvur", q.gur_lhs, q.uvur_lhs, q.tol),
        RelationRecord.make("chain_uvur_noise_std", q.uvur_lhs, q.uvur_std_lhs, q.tol),
    ]


def eval_gur(p: JointPovm, A, B, psi, ancilla: Ancilla | None = None,
             tol: Tolerances | None = None) -> list[RelationRecord]:
    """Generalized relation plus the two chain-ordering records."""
    return _gur_records(_quantities(p, A, B, psi, ancilla, tol))


def _noiseless_record(q: _Quantities) -> RelationRecord:
    precise = is_precise_for(marginal(q.p, "A"), q.A, q.tol)
    return RelationRecord.make("noiseless_bound", q.std_a * q.eps_b, q.half_ab, q.tol,
                               applicable=precise.precise, precision_defect=precise.defect)


def eval_noiseless_bound(p: JointPovm, A, B, psi, ancilla: Ancilla | None = None,
                         tol: Tolerances | None = None) -> RelationRecord:
    return _noiseless_record(_quantities(p, A, B, psi, ancilla, tol))


def _heisenberg_records(q: _Quantities) -> list[RelationRecord]:
    return [
        RelationRecord.make("heisenberg_product", q.eps_a * q.eps_b, q.half_ab, q.tol,
                            applicable=q.independent,
                            noise_std_product=q.dn_a * q.dn_b,
                            eps_minus_noise_std=q.eps_a * q.eps_b - q.dn_a * q.dn_b),
        RelationRecord.make("heisenberg_noise_std", q.dn_a * q.dn_b, q.half_ab, q.tol,
                            applicable=q.independent),
    ]


def eval_independent_heisenberg(p: JointPovm, A, B, psi, ancilla: Ancilla | None = None,
                                tol: Tolerances | None = None) -> list[RelationRecord]:
    """Heisenberg-type product bounds, applicable only for independent noise on both axes.

    When not applicable the records are still filled in, so a violation of
    the naive product form can be read off directly.
    """
    return _heisenberg_records(_quantities(p, A, B, psi, ancilla, tol))


def _output_spread_record(q: _Quantities) -> RelationRecord:
    dx, dy = q.report_a.output_std, q.report_b.output_std
    return RelationRecord.make(
        "output_spread", dx * dy, 2 * q.half_ab, q.tol, applicable=q.independent,
        additivity_defect_A=dx**2 - q.std_a**2 - q.dn_a**2,
        additivity_defect_B=dy**2 - q.std_b**2 - q.dn_b**2,
    )


def eval_output_spread(p: JointPovm, A, B, psi, ancilla: Ancilla | None = None,
                       tol: Tolerances | None = None) -> RelationRecord:
    return _output_spread_record(_quantities(p, A, B, psi, ancilla, tol))


@dataclass(frozen=True)
class RelationReport:
    dim: int
    grid_shape: tuple[int, int]
    noise_A: metrics.NoiseReport
    noise_B: metrics.NoiseReport
    std_A: float
    std_B: float
    records: tuple[RelationRecord, ...]

    def __getitem__(self, name: str) -> RelationRecord:
        for r in self.records:
            if r.name == name:
                return r
        raise KeyError(name)

    @property
    def universal_hold(self) -> bool:
        return all(self[n].holds for n in UNIVERSAL)

    @property
    def heisenberg_violated(self) -> bool:
        """Whether ``eps(A) eps(B) < |<[A,B]>|/2`` (naive product form broken)."""
        return not self["heisenberg_product"].holds

    def to_dict(self) -> dict:
        return {
            "scenario": {"dim": self.dim, "grid_shape": list(self.grid_shape),
                         "std_A": self.std_A, "std_B": self.std_B},
            "noise": {"A": self.noise_A.to_dict(), "B": self.noise_B.to_dict()},
            "universal_hold": self.universal_hold,
            "heisenberg_violated": self.heisenberg_violated,
            "relations": [r.to_dict() for r in self.records],
        }


CSV_FIELDS = ("instance", "name", "lhs", "rhs", "slack", "holds", "applicable", "status")


def report_rows(report: RelationReport, instance: int | str = 0) -> list[dict]:
    return [
        {"instance": instance, "name": r.name, "lhs": r.lhs, "rhs": r.rhs, "slack": r.slack,
         "holds": r.holds, "applicable": r.applicable, "status": r.status}
        for r in report.records
    ]


def rows_to_csv(rows: list[dict], fields=CSV_FIELDS) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(fields), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def full_report(model: Model, A, B, psi, tol: Tolerances | None = None) -> RelationReport:
    """Evaluate every relation for a POVM, ancilla or measuring process."""
    tol = resolve(tol)
    p, ancilla = resolve_model(model, tol)
    q = _Quantities(p, A, B, psi, ancilla, tol)
    records = [eval_robertson(q.A, q.B, q.psi, tol)]
    records += _uvur_records(q)
    records += _gur_records(q)
    records.append(_noiseless_record(q))
    records += _heisenberg_records(q)
    records.append(_output_spread_record(q))
    return RelationReport(p.dim, p.grid.shape, q.report_a, q.report_b, q.std_a, q.std_b, tuple(records))
