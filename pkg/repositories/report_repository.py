import csv
import io
import json
import logging
import math
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Any, Union

import numpy as np
from pydantic import BaseModel

from models.arith import CyclotomicTally
from models.run_config import OutputFormat, Report

logger = logging.getLogger(__name__)

SIGNIFICANT_DIGITS = 15
LEADING_COLUMNS = ("q",)
TRAILING_COLUMNS = ("re", "im", "magnitude", "emp_exponent", "theo_exponent", "ok")


class ReportRepository:
    """Encoding of run reports as JSON or CSV, and their files on disk"""

    def canonicalize(self, value: Any) -> Any:
        """Plain JSON types; floats to 15 significant digits, non-finite floats as strings"""
        if isinstance(value, CyclotomicTally):
            return self.canonicalize(value.to_dict())
        if isinstance(value, BaseModel):
            return {name: self.canonicalize(getattr(value, name)) for name in type(value).model_fields}
        if isinstance(value, Enum):
            return value.value
        if isinstance(value, (bool, np.bool_)):
            return bool(value)
        if isinstance(value, (int, np.integer)):
            return int(value)
        if isinstance(value, (float, np.floating)):
            return _round(float(value))
        if isinstance(value, (complex, np.complexfloating)):
            return {"re": _round(value.real), "im": _round(value.imag)}
        if isinstance(value, Fraction):
            return str(value)
        if isinstance(value, np.ndarray):
            return self.canonicalize(value.tolist())
        if isinstance(value, dict):
            return {str(key): self.canonicalize(item) for key, item in value.items()}
        if isinstance(value, (set, frozenset)):
            return [self.canonicalize(item) for item in sorted(value)]
        if isinstance(value, (list, tuple)):
            return [self.canonicalize(item) for item in value]
        return value

    def emit_report(self, report: Report, output_format: Union[OutputFormat, str] = OutputFormat.JSON) -> bytes:
        output_format = OutputFormat(output_format)
        if output_format is OutputFormat.CSV:
            return self.to_csv(report.results).encode()
        payload = self.canonicalize(report)
        return (json.dumps(payload, indent=2) + "\n").encode()

    def to_csv(self, rows: list[dict]) -> str:
        """Flat rows: q, a..., chi..., re, im, magnitude, emp_exponent, theo_exponent, ok, then the rest"""
        rows = [self._flatten(self.canonicalize(row)) for row in rows]
        columns = self.columns(rows)
        buffer = io.StringIO()
        writer = csv.DictWriter(buffer, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({key: _cell(row.get(key)) for key in columns})
        return buffer.getvalue()

    def columns(self, rows: list[dict]) -> list[str]:
        keys: list[str] = []
        for row in rows:
            keys.extend(key for key in row if key not in keys)
        a_columns = sorted((key for key in keys if _indexed(key, "a")), key=lambda key: int(key[1:]))
        chi_columns = sorted((key for key in keys if _indexed(key, "chi")), key=lambda key: int(key[3:]))
        fixed = [key for key in LEADING_COLUMNS if key in keys]
        fixed += a_columns + chi_columns
        fixed += [key for key in TRAILING_COLUMNS if key in keys]
        return fixed + [key for key in keys if key not in fixed]

    def save(self, report: Report, path: Union[str, Path], output_format: Union[OutputFormat, str] = OutputFormat.JSON) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(self.emit_report(report, output_format))
        logger.info("Report written to %s", path)
        return path

    def load(self, path: Union[str, Path]) -> Report:
        """Reload a JSON report; the RunConfig is validated back into its model"""
        return Report.model_validate(json.loads(Path(path).read_text()))

    def without_timing(self, payload: bytes) -> dict:
        data = json.loads(payload)
        data.pop("timing", None)
        return data

    def _flatten(self, row: dict) -> dict:
        flat = {}
        for key, value in row.items():
            if isinstance(value, dict):
                for inner, item in value.items():
                    flat[f"{key}_{inner}"] = item
            elif isinstance(value, list):
                flat[key] = json.dumps(value)
            else:
                flat[key] = value
        return flat


def _round(x: float) -> Union[float, str]:
    if not math.isfinite(x):
        return str(x)
    return float(f"{x:.{SIGNIFICANT_DIGITS}g}")


def _cell(value: Any) -> Any:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.{SIGNIFICANT_DIGITS}g}"
    return value


def _indexed(key: str, prefix: str) -> bool:
    return key.startswith(prefix) and key[len(prefix):].isdigit()
