import hashlib
import math
from typing import List, Optional

import numpy as np


def format_float(value: Optional[float]) -> str:
    """17 significant digits; empty string for a missing value."""
    if value is None:
        return ''
    value = float(value)
    if math.isnan(value):
        return 'nan'
    if math.isinf(value):
        return 'inf' if value > 0 else '-inf'
    return f"{value:.17g}"


def witness_digest(v: Optional[np.ndarray]) -> str:
    """
    SHA-256 prefix of a witness vector's bytes after fixing its global phase
    (largest-modulus entry made real positive), so equivalent witnesses hash alike.
    """
    if v is None:
        return ''
    x = np.ascontiguousarray(np.asarray(v, dtype=np.complex128))
    j = int(np.argmax(np.abs(x)))
    if abs(x[j]) > 0:
        x = x * (abs(x[j]) / x[j])
    return hashlib.sha256(x.tobytes()).hexdigest()[:16]


def parse_sizes(text: str) -> List[int]:
    """Parse '2,4,8' into [2, 4, 8]."""
    sizes = []
    for part in text.split(','):
        part = part.strip()
        if not part:
            continue
        try:
            sizes.append(int(part))
        except ValueError:
            raise ValueError(f"Could not parse size '{part}' in '{text}'")
    if not sizes:
        raise ValueError(f"No sizes given in '{text}'")
    return sizes


def sanitize_filename(filename: str) -> str:
    """Sanitize filename for safe storage."""
    unsafe_chars = '<>:"/\\|?* '
    for char in unsafe_chars:
        filename = filename.replace(char, '_')

    if len(filename) > 100:
        filename = filename[:100]

    return filename.strip()


def replay_filename(check_name: str, instance_id: int, role: str) -> str:
    return sanitize_filename(f"{check_name}_{int(instance_id):06d}_{role}.json")


def default_replay_dir(report_path: Optional[str] = None) -> str:
    """Side directory next to the report, or ./replay when the report goes to stdout."""
    return f"{report_path}.replay" if report_path else "replay"


def format_elapsed_ms(seconds: float) -> float:
    return round(seconds * 1000.0, 3)
