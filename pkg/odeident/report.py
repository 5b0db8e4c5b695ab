"""
Report serialization: JSON with every float written with 17 significant
digits, and CSV plot data of the determinant and mininorm paths.
"""
import csv
import io
import json
import math
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional

import click
import numpy as np

FLOAT_FORMAT = '.17g'
CSV_COLUMNS = ('t', 'det', 'detB', 'mu')


def to_jsonable(value: Any) -> Any:
    """
    Plain JSON values; non-finite floats become the strings "inf", "-inf" and "nan".
    """
    if hasattr(value, 'as_dict'):
        return to_jsonable(value.as_dict())
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return 'nan'
        if math.isinf(value):
            return 'inf' if value > 0 else '-inf'
        return value
    return value


# Finite floats travel through json.dumps as marked strings and are unwrapped afterwards.
FLOAT_MARK = '\ue000'
FLOAT_PATTERN = re.compile(r'"\\ue000([^"]*)"')


def format_float(value: float) -> str:
    text = format(value, FLOAT_FORMAT)
    return text if any(c in text for c in '.en') else text + '.0'


def _mark_floats(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _mark_floats(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_mark_floats(v) for v in value]
    if isinstance(value, float):
        return FLOAT_MARK + format_float(value)
    return value


def dumps(payload: Any, indent: int = 2) -> str:
    text = json.dumps(_mark_floats(to_jsonable(payload)), indent=indent, sort_keys=True, ensure_ascii=True,
                      allow_nan=False)
    return FLOAT_PATTERN.sub(r'\1', text) + '\n'


@dataclass(frozen=True)
class PlotData:
    t: np.ndarray
    det: np.ndarray
    detB: np.ndarray
    mu: np.ndarray

    @classmethod
    def from_path(cls, path, mode) -> 'PlotData':
        from .linalg import mininorm
        from .zerofinder import Mode

        D = path.D_values
        detB = np.linalg.det(path.B_values)
        det = np.linalg.det(D) if mode is Mode.K else detB
        mu = np.array([mininorm(d) for d in D])
        return cls(t=path.grid.points, det=det, detB=detB, mu=mu)

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator='\n')
        writer.writerow(CSV_COLUMNS)
        for row in zip(self.t, self.det, self.detB, self.mu):
            writer.writerow([format(float(v), FLOAT_FORMAT) for v in row])
        return buffer.getvalue()


def write_output(text: str, out: Optional[Path]):
    if out is None:
        click.echo(text, nl=False)
        return
    Path(out).write_text(text, encoding='utf-8')


def strip_timings(report: Dict) -> Dict:
    return {k: v for k, v in report.items() if k != 'timings'}
