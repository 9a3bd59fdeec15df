"""
Report schemas emitted by the command-line front end.

Every successful command prints a CommandReport. Text and CSV output are
renderings of the same payload.
"""

import csv
import io
from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field, field_validator

SCHEMA_VERSION = "1.0"


class OutputFormat(str, Enum):
    JSON = "json"
    CSV = "csv"
    TEXT = "text"


class RunConfig(BaseModel):
    """Numeric flags shared by the subcommands, validated before dispatch."""

    command: str
    output_format: OutputFormat = OutputFormat.JSON
    p: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    u: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    trials: Optional[int] = Field(default=None, ge=1)
    tol: Optional[float] = Field(default=None, gt=0.0)
    seed: Optional[int] = Field(default=None, ge=0)
    grid: Optional[int] = Field(default=None, ge=2)
    m: Optional[int] = Field(default=None, ge=1)
    ell: Optional[int] = Field(default=None, ge=0)
    axis: Optional[int] = Field(default=None, ge=1)
    L: Optional[int] = Field(default=None, ge=1)
    length: Optional[int] = Field(default=None, ge=1)
    target: Optional[float] = Field(default=None, gt=0.0, le=1.0)
    d: Optional[int] = Field(default=None, ge=2)
    r: Optional[int] = Field(default=None, ge=2)
    dmax: Optional[int] = Field(default=None, ge=2)

    @field_validator("output_format", mode="before")
    @classmethod
    def normalize_format(cls, v: Any) -> Any:
        return v.strip().lower() if isinstance(v, str) else v


class CommandReport(BaseModel):
    schema_version: str = SCHEMA_VERSION
    success: bool = True
    command: str
    master_seed: Optional[int] = None
    data: Dict[str, Any]

    def to_text(self) -> str:
        lines = [f"command: {self.command}"]
        if self.master_seed is not None:
            lines.append(f"master_seed: {self.master_seed}")
        lines.extend(_text_lines(self.data))
        return "\n".join(lines) + "\n"


def _text_lines(data: Dict[str, Any], prefix: str = "") -> List[str]:
    lines = []
    for key, value in data.items():
        if isinstance(value, dict):
            lines.extend(_text_lines(value, f"{prefix}{key}."))
        else:
            lines.append(f"{prefix}{key}: {value}")
    return lines


def rows_to_csv(header: List[str], rows: List[List[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def flat_csv(data: Dict[str, Any]) -> str:
    """key,value rows for payloads without a natural table layout."""
    rows = []
    for line in _text_lines(data):
        key, _, value = line.partition(": ")
        rows.append([key, value])
    return rows_to_csv(["key", "value"], rows)
