import csv
import io
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, asdict
from typing import Any, Dict, Iterable, List, Optional

from verdicts import Agreement, EquivalenceBattery, InequalityReport, Verdict
from utils import format_float, witness_digest

logger = logging.getLogger(__name__)

REPORT_FIELDS = ('instance_id', 'check_name', 'lhs', 'rhs', 'margin', 'verdict', 'witness_digest', 'wall_time_ms')


@dataclass
class ReportRow:
    instance_id: int
    check_name: str
    lhs: Optional[float]
    rhs: Optional[float]
    margin: float
    verdict: str
    witness_digest: str = ''
    wall_time_ms: float = 0.0

    def sort_key(self):
        return self.instance_id, self.check_name

    def to_dict(self) -> Dict[str, Any]:
        row = asdict(self)
        for key in ('lhs', 'rhs', 'margin', 'wall_time_ms'):
            value = row[key]
            row[key] = float(value) if value is not None and math.isfinite(value) else None
        return row

    def to_csv(self) -> List[str]:
        return [str(self.instance_id), self.check_name, format_float(self.lhs), format_float(self.rhs),
                format_float(self.margin), self.verdict, self.witness_digest, format_float(self.wall_time_ms)]


class ReportService:
    """Service for turning verdicts into report rows and writing CSV/JSON reports."""

    def __init__(self):
        self.formats = ('csv', 'json')

    def rows_from_battery(self, instance_id: int, battery: EquivalenceBattery) -> List[ReportRow]:
        rows = [
            ReportRow(instance_id=instance_id, check_name=f"{battery.name}:{c.label}", lhs=c.lhs, rhs=c.rhs,
                      margin=c.margin, verdict=c.verdict.value,
                      witness_digest=witness_digest(c.witness.v if c.witness is not None else None))
            for c in battery.conditions
        ]
        rows.append(ReportRow(instance_id=instance_id, check_name=f"{battery.name}:consistent", lhs=None,
                              rhs=None, margin=0.0, verdict=battery.consistent.value))
        return rows

    def rows_from_inequalities(self, instance_id: int, reports: Iterable[InequalityReport]) -> List[ReportRow]:
        return [ReportRow(instance_id=instance_id, check_name=r.name, lhs=r.lhs, rhs=r.rhs,
                          margin=r.slack, verdict=r.verdict.value)
                for r in reports]

    def is_flagged(self, row: ReportRow, equivalence: bool) -> bool:
        """A row that breaks what the theory demands: a disagreement, or a failed inequality."""
        if row.verdict == Agreement.DISAGREE.value:
            return True
        return not equivalence and row.verdict == Verdict.FAILS.value

    def render(self, rows: List[ReportRow], fmt: str = 'csv') -> str:
        if fmt not in self.formats:
            raise ValueError(f"Unknown report format '{fmt}', expected one of {', '.join(self.formats)}")
        ordered = sorted(rows, key=ReportRow.sort_key)
        if fmt == 'json':
            return json.dumps([r.to_dict() for r in ordered], indent=2) + '\n'
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator='\n')
        writer.writerow(REPORT_FIELDS)
        for row in ordered:
            writer.writerow(row.to_csv())
        return buffer.getvalue()

    def emit_report(self, rows: List[ReportRow], fmt: str = 'csv', path: Optional[str] = None) -> None:
        """
        Write rows ordered by (instance_id, check_name).

        Args:
            rows: Report rows in any order
            fmt: 'csv' or 'json'
            path: Output file; stdout when None or '-'
        """
        text = self.render(rows, fmt)
        if path in (None, '-'):
            sys.stdout.write(text)
            return
        try:
            directory = os.path.dirname(path)
            if directory:
                os.makedirs(directory, exist_ok=True)
            with open(path, 'w', encoding='utf-8', newline='') as f:
                f.write(text)
        except OSError as e:
            logger.error(f"Error writing report to {path}: {e}")
            raise
        logger.info(f"Wrote {len(rows)} report rows to {path}")

    def summarize(self, rows: List[ReportRow]) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        for row in rows:
            counts[row.verdict] = counts.get(row.verdict, 0) + 1
        return counts
