"""
Helpers shared by the library and the CLI: spin parsing, N grids, deterministic
CSV/JSON output and file digests.
"""

# SPDX-License-Identifier: Apache-2.0

import csv
import hashlib
import io
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Iterable, List, Sequence, TypeVar, Union

import numpy as np
from tqdm import tqdm

from lsv_metrology import CSV_FLOAT_FORMAT

log = logging.getLogger(__name__)

SpinLike = Union[str, int, float, Fraction]

T = TypeVar("T")
R = TypeVar("R")


def parse_spin(value: SpinLike, signed: bool = False) -> Fraction:
    """Parse a spin or magnetic quantum number such as 7/2, "3.5" or 1.

    Values must be multiples of 1/2; only signed values may be negative.
    """
    try:
        spin = Fraction(value.strip()) if isinstance(value, str) else Fraction(value)
    except (ValueError, TypeError, ZeroDivisionError) as e:
        raise ValueError(f"Cannot parse quantum number {value!r}") from e
    if (2 * spin).denominator != 1:
        raise ValueError(f"Quantum number must be a multiple of 1/2, got {value!r}")
    if not signed and spin < 0:
        raise ValueError(f"Spin must be non-negative, got {value!r}")
    return spin


def max_jobs() -> int:
    return max(1, int(os.environ.get("LSV_MAX_JOBS", 2)))


def parallel_map(func: Callable[[T], R], items: Sequence[T], desc: str = "Evaluating", pbar: bool = False) -> List[R]:
    """Apply func to all items in a thread pool, results in input order."""
    if not items:
        return []
    _max_workers = min(max_jobs(), len(items))
    with ThreadPoolExecutor(max_workers=_max_workers) as pool:
        return list(tqdm(pool.map(func, items), total=len(items), desc=desc, disable=not pbar))


def _round_even(value: float) -> int:
    return max(2, 2 * int(round(value / 2.0)))


def even_grid(n_min: int, n_max: int, points: int) -> List[int]:
    """Return strictly increasing, log-spaced even particle counts in [n_min, n_max].

    Yields exactly `points` values unless the range holds fewer even numbers.
    """
    if points < 1:
        raise ValueError(f"Grid needs at least one point, got {points}")
    first = n_min + (n_min % 2)
    last = n_max - (n_max % 2)
    first = max(first, 2)
    if first > last:
        raise ValueError(f"Empty range: no even N in [{n_min}, {n_max}]")
    if points == 1:
        return [first]

    grid: List[int] = []
    for value in np.geomspace(first, last, points):
        candidate = _round_even(value)
        if grid:
            candidate = max(candidate, grid[-1] + 2)
        if candidate > last:
            break
        grid.append(candidate)
    if len(grid) < points:
        log.warning("Range [%d, %d] only holds %d of %d requested even values", n_min, n_max, len(grid), points)
    return grid


def parse_sweep(value: str) -> List[int]:
    """Parse a sweep of particle counts.

    Accepted forms are "start:stop:even", "start:stop:step" and "n1,n2,...".
    """
    value = value.strip()
    if ":" in value:
        parts = value.split(":")
        if len(parts) != 3:
            raise ValueError(f"Sweep {value!r} must have the form start:stop:even or start:stop:step")
        start, stop = int(parts[0]), int(parts[1])
        if parts[2] == "even":
            sweep = [n for n in range(start, stop + 1) if n % 2 == 0]
        else:
            step = int(parts[2])
            if step < 1:
                raise ValueError(f"Sweep step must be positive, got {step}")
            sweep = list(range(start, stop + 1, step))
    else:
        sweep = [int(item) for item in value.split(",") if item.strip()]
    if not sweep:
        raise ValueError(f"Sweep {value!r} holds no particle counts")
    if len(set(sweep)) != len(sweep):
        raise ValueError(f"Sweep {value!r} repeats particle counts")
    return sweep


def format_number(value: Any) -> str:
    """Format a value for CSV; missing and non-finite numbers become an empty field."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), CSV_FLOAT_FORMAT) if math.isfinite(value) else ""
    return str(value)


def to_jsonable(value: Any) -> Any:
    """Convert numpy scalars and non-finite floats to plain JSON values (inf and nan become null)."""
    if isinstance(value, dict):
        return {str(key): to_jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(item) for item in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value) if math.isfinite(value) else None
    return value


def render_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """Render a CSV table with a header row and UNIX newlines."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_number(item) for item in row])
    return buffer.getvalue()


def dump_json(record: Any) -> str:
    return json.dumps(to_jsonable(record), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_text(path: Union[str, Path], text: str) -> Path:
    """Write text in UTF-8 without newline translation."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(text)
    log.debug("Wrote %d characters to %s", len(text), path)
    return path


def write_json(path: Union[str, Path], record: Any) -> Path:
    """Write one JSON record per file, keys sorted."""
    return write_text(path, dump_json(record))


def file_digest(path: Union[str, Path], chunk_size: int = 1 << 16) -> str:
    """Return the sha256 hex digest of a file."""
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(chunk_size), b""):
            digest.update(chunk)
    return digest.hexdigest()


def sibling_path(out: Union[str, Path], suffix: str) -> Path:
    """Return <out><suffix>, e.g. table.csv.manifest.json."""
    out = Path(out)
    return out.with_name(out.name + suffix)