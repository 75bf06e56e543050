import csv
import json
import logging
import os
from typing import Any, Dict, List, Optional

import numpy as np

from operator_core import MatrixFormatError, ensure_matrix
from utils import replay_filename

logger = logging.getLogger(__name__)


class MatrixIOService:
    """Service for reading and writing matrix files and persisting replay dumps."""

    def __init__(self, replay_dir: Optional[str] = None):
        self.replay_dir = replay_dir
        self.json_suffixes = ('.json',)
        self.csv_suffixes = ('.csv', '.txt')

    def load(self, path: str) -> np.ndarray:
        """
        Load a square complex matrix from a JSON or CSV file.

        Args:
            path: File path; the suffix selects the format (JSON unless .csv/.txt)

        Returns:
            n x n complex128 array
        """
        try:
            with open(path, 'r', encoding='utf-8') as f:
                text = f.read()
        except OSError as e:
            logger.error(f"Could not read matrix file {path}: {e}")
            raise
        if path.lower().endswith(self.csv_suffixes):
            return self.parse_csv(text, source=path)
        return self.parse_json(text, source=path)

    def parse_json(self, text: str, source: str = '<string>') -> np.ndarray:
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as e:
            raise MatrixFormatError(f"{source}: invalid JSON: {e}") from e
        if not isinstance(payload, dict) or 'entries' not in payload:
            raise MatrixFormatError(f"{source}: expected an object with 'n' and 'entries'")
        rows = payload['entries']
        if not isinstance(rows, list) or not rows:
            raise MatrixFormatError(f"{source}: 'entries' must be a non-empty list of rows")
        n = payload.get('n', len(rows))
        if not isinstance(n, int) or n != len(rows):
            raise MatrixFormatError(f"{source}: 'n' = {n} does not match {len(rows)} rows")

        A = np.empty((n, n), dtype=np.complex128)
        for i, row in enumerate(rows):
            if not isinstance(row, list) or len(row) != n:
                raise MatrixFormatError(f"{source}: row {i} must have {n} entries")
            for j, entry in enumerate(row):
                A[i, j] = self._parse_entry(entry, f"{source}: entry ({i}, {j})")
        return self._validated(A, source)

    def _parse_entry(self, entry: Any, where: str) -> complex:
        if isinstance(entry, bool):
            raise MatrixFormatError(f"{where} is not a number")
        if isinstance(entry, (int, float)):
            return complex(float(entry), 0.0)
        if isinstance(entry, list) and len(entry) == 2 and all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in entry):
            return complex(float(entry[0]), float(entry[1]))
        raise MatrixFormatError(f"{where} must be a number or a [re, im] pair, got {entry!r}")

    def parse_csv(self, text: str, source: str = '<string>') -> np.ndarray:
        """Rows of interleaved re,im values; lines starting with '#' are ignored."""
        rows = []
        for line in csv.reader(l for l in text.splitlines() if l.strip() and not l.lstrip().startswith('#')):
            try:
                rows.append([float(v) for v in line])
            except ValueError as e:
                raise MatrixFormatError(f"{source}: non-numeric CSV value: {e}") from e
        if not rows:
            raise MatrixFormatError(f"{source}: empty CSV matrix")
        n = len(rows)
        A = np.empty((n, n), dtype=np.complex128)
        for i, values in enumerate(rows):
            if len(values) != 2 * n:
                raise MatrixFormatError(f"{source}: row {i} has {len(values)} values, expected {2 * n} (re,im pairs)")
            A[i] = np.asarray(values[0::2]) + 1j * np.asarray(values[1::2])
        return self._validated(A, source)

    def _validated(self, A: np.ndarray, source: str) -> np.ndarray:
        if not np.all(np.isfinite(A)):
            raise MatrixFormatError(f"{source}: matrix has non-finite entries")
        return ensure_matrix(A)

    def to_json(self, T) -> Dict[str, Any]:
        A = ensure_matrix(T)
        return {'n': A.shape[0],
                'entries': [[[float(z.real), float(z.imag)] for z in row] for row in A]}

    def save(self, T, path: str) -> str:
        """Write T as JSON, or as interleaved CSV when the path ends in .csv."""
        A = ensure_matrix(T)
        try:
            directory = os.path.dirname(path)
            if directory:
                os.makedirs(directory, exist_ok=True)
            with open(path, 'w', encoding='utf-8', newline='') as f:
                if path.lower().endswith(self.csv_suffixes):
                    writer = csv.writer(f, lineterminator='\n')
                    for row in A:
                        writer.writerow([repr(float(v)) for z in row for v in (z.real, z.imag)])
                else:
                    json.dump(self.to_json(A), f)
                    f.write('\n')
        except OSError as e:
            logger.error(f"Could not write matrix file {path}: {e}")
            raise
        logger.debug(f"Wrote {A.shape[0]}x{A.shape[0]} matrix to {path}")
        return path

    def dump_replay(self, check_name: str, instance_id: int, matrices: Dict[str, np.ndarray]) -> List[str]:
        """
        Persist the operands of a failing or disagreeing instance so it can be
        replayed with `compute` or `check`.

        Args:
            check_name: Battery or check that flagged the instance
            instance_id: Index of the instance in its ensemble
            matrices: Role -> matrix, e.g. {'T': T, 'S': S}

        Returns:
            Paths written (empty when no replay directory is configured)
        """
        if not self.replay_dir:
            logger.warning(f"No replay directory configured; {check_name} instance {instance_id} not saved")
            return []
        paths = []
        for role, M in sorted(matrices.items()):
            path = os.path.join(self.replay_dir, replay_filename(check_name, instance_id, role))
            paths.append(self.save(M, path))
        logger.info(f"Saved replay data for {check_name} instance {instance_id}: {', '.join(paths)}")
        return paths
