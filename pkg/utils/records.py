"""
Line-oriented report records.

A report is a sequence of `[section]` headers, `key = value` lines and CSV
table blocks:

    [manifest]
    command = certify
    begin-table values
    agent,state,value
    0,0,1.5
    end-table

Floats are written with `repr` and tables with `%.17g`, so a report is a
pure function of its inputs.
"""

import io
import logging
from enum import Enum
from pathlib import Path
from typing import TYPE_CHECKING, Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from models.design import Certificate
from models.report import CertificationReport, RunManifest, ValidationReport

if TYPE_CHECKING:
    from evaluators.oil import ObedienceExperiment

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
TABLE_BEGIN = "begin-table"
TABLE_END = "end-table"


def format_value(value: Any) -> str:
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if value is None:
        return "none"
    return str(value)


def table_frame(array: np.ndarray, axes: Sequence[str], value: str = "value") -> pd.DataFrame:
    """
    Long-format frame with one row per index tuple, C order.

    Args:
        array: Table to flatten
        axes: Column names for the index axes
        value: Column name for the entries
    """
    array = np.asarray(array)
    if array.ndim != len(axes):
        raise ValueError(f"table has {array.ndim} axes but {len(axes)} names were given")
    index = pd.MultiIndex.from_product([range(size) for size in array.shape], names=list(axes))
    return pd.Series(array.ravel(), index=index, name=value).reset_index()


class ReportWriter:
    """Accumulates sections and tables, then renders them in insertion order."""

    def __init__(self):
        self.lines: List[str] = []

    def section(self, name: str) -> "ReportWriter":
        if self.lines:
            self.lines.append("")
        self.lines.append(f"[{name}]")
        return self

    def field(self, key: str, value: Any) -> "ReportWriter":
        self.lines.append(f"{key} = {format_value(value)}")
        return self

    def fields(self, values: Dict[str, Any], prefix: str = "") -> "ReportWriter":
        for key, value in values.items():
            self.field(f"{prefix}{key}", value)
        return self

    def table(self, name: str, frame: pd.DataFrame) -> "ReportWriter":
        csv = frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        self.lines.append(f"{TABLE_BEGIN} {name}")
        self.lines.extend(csv.rstrip("\n").split("\n"))
        self.lines.append(TABLE_END)
        return self

    def manifest(self, manifest: RunManifest) -> "ReportWriter":
        self.section("manifest")
        self.field("command", manifest.command)
        for position, path in enumerate(manifest.inputs):
            self.field(f"input.{position}", path)
        self.fields(dict(sorted(manifest.options.items())), prefix="option.")
        self.field("seed", manifest.seed)
        self.field("version", manifest.version)
        if manifest.duration_seconds is not None:
            self.field("duration_seconds", manifest.duration_seconds)
        return self

    def certification(self, report: CertificationReport, name: str = "certification") -> "ReportWriter":
        """Write a report and, depth first, each of its children as `name.condition` sections."""
        self.section(name)
        self.field("condition", report.condition)
        self.field("verdict", report.verdict)
        self.field("violation", report.violation)
        self.field("tolerance", report.tolerance)
        for key, position in (report.witness or {}).items():
            self.field(f"witness.{key}", position)
        for child in report.children:
            self.certification(child, f"{name}.{child.condition}")
        return self

    def certificate(self, certificate: Certificate, name: str = "certificate") -> "ReportWriter":
        self.section(name)
        self.field("verdict", certificate.verdict)
        self.field("Z", certificate.z)
        self.field("ZFPA", certificate.zfpa)
        self.fields(certificate.constraints)
        self.fields(certificate.misalignments)
        self.field("nash_goal", certificate.nash_goal)
        self.field("admissible", certificate.admissible)
        self.field("oil_confirmed", certificate.oil_confirmed)
        for label in sorted(certificate.witnesses):
            for key, position in certificate.witnesses[label].items():
                self.field(f"witness.{label}.{key}", position)
        return self

    def experiment(self, experiment: "ObedienceExperiment", name: str = "experiment") -> "ReportWriter":
        """Direct-design measurement followed by its three certification trees."""
        self.section(name)
        self.field("total_variation", experiment.total_variation)
        self.field("counterexample", experiment.counterexample)
        self.certification(experiment.direct_obedience, f"{name}.direct_obedience")
        self.certification(experiment.direct_one_shot, f"{name}.direct_one_shot")
        self.certification(experiment.indirect_implementability, f"{name}.indirect_implementability")
        return self

    def validation(self, report: ValidationReport, name: str = "validation") -> "ReportWriter":
        self.section(name)
        self.field("valid", report.valid)
        self.field("violations", len(report.violations))
        if report.violations:
            frame = pd.DataFrame([v.model_dump() for v in report.violations], columns=["location", "message"])
            self.table("violations", frame)
        return self

    def render(self) -> str:
        return "\n".join(self.lines) + "\n"

    def write(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.render(), encoding="utf-8")
        logger.debug("wrote report %s", path)
        return path


class ReportParser:
    """Read reports written by ReportWriter."""

    @staticmethod
    def parse(text: str) -> Tuple[Dict[str, Dict[str, str]], Dict[str, pd.DataFrame]]:
        """
        Split a report into sections and tables.

        Returns:
            (section name → {key: raw value}, table name → DataFrame)

        Raises:
            ValueError: Unterminated table or a line outside any section
        """
        sections: Dict[str, Dict[str, str]] = {}
        tables: Dict[str, pd.DataFrame] = {}
        current: Optional[Dict[str, str]] = None
        lines = text.splitlines()
        position = 0
        while position < len(lines):
            line = lines[position]
            position += 1
            if not line.strip():
                continue
            if line.startswith(TABLE_BEGIN):
                name = line[len(TABLE_BEGIN):].strip()
                body = []
                while position < len(lines) and lines[position] != TABLE_END:
                    body.append(lines[position])
                    position += 1
                if position >= len(lines):
                    raise ValueError(f"table '{name}' is not terminated")
                position += 1
                tables[name] = pd.read_csv(io.StringIO("\n".join(body)))
                continue
            if line.startswith("[") and line.endswith("]"):
                current = sections.setdefault(line[1:-1], {})
                continue
            if current is None or " = " not in line:
                raise ValueError(f"line {position}: not a record: {line!r}")
            key, value = line.split(" = ", 1)
            current[key] = value
        return sections, tables

    @staticmethod
    def extract_section(text: str, section_name: str) -> Optional[Dict[str, str]]:
        return ReportParser.parse(text)[0].get(section_name)

    @staticmethod
    def validate_structure(text: str, required_sections: Sequence[str]) -> bool:
        """True if every required section is present."""
        sections, _ = ReportParser.parse(text)
        return all(name in sections for name in required_sections)
