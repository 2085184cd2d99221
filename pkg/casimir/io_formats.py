"""
File formats of the command-line frontend: the flat key/value run configuration,
CSV tables and native SVG plots.
"""

import csv
import io
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ValidationError

from exceptions import ConfigValidationError, OutputError, ParseError
from schemas import CalibrationSample, RunConfig, ScanSet

PathLike = Union[str, Path]

CALIBRATION_HEADER = ["v1_volts", "deflection"]
FORCE_CURVE_HEADER = ["z_m", "f_lateral_n", "bracket_factor", "beta", "flags"]
PHASE_CURVE_HEADER = ["phi_rad", "f_lateral_n", "bracket_factor", "beta", "flags"]
SLOPE_HEADER = ["z_m", "amplitude_n"]

# Keys derived at run time rather than configured
_HIDDEN_KEYS = {"scan.rng_seed"}


def format_float(value: float) -> str:
    """17 significant digits, enough to read every double back unchanged"""
    return f"{float(value):.17g}"


def format_flags(flags: Iterable[Any]) -> str:
    return "|".join(getattr(f, "value", str(f)) for f in flags)


# Configuration
def config_keys(model: type = RunConfig, prefix: str = "") -> List[str]:
    """Dotted keys of every configurable field, in declaration order"""
    keys = []
    for name, field in model.model_fields.items():
        key = f"{prefix}{name}"
        annotation = field.annotation
        if isinstance(annotation, type) and issubclass(annotation, BaseModel):
            keys.extend(config_keys(annotation, prefix=f"{key}."))
        elif key not in _HIDDEN_KEYS:
            keys.append(key)
    return keys


def _parse_value(key: str, raw: str) -> Any:
    if raw.lower() in ("none", "null", ""):
        return None
    if key == "separations":
        return [item.strip() for item in raw.split(",") if item.strip()]
    return raw


def validate_config(data: Dict[str, Any]) -> RunConfig:
    """Build a RunConfig, collecting every violated invariant into one error"""
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        violations = []
        for err in e.errors():
            location = ".".join(str(part) for part in err["loc"]) or "config"
            violations.append(f"{location}: {err['msg']}")
        raise ConfigValidationError(violations) from e


def parse_config(text: str) -> RunConfig:
    """
    Parse `key = value` lines with dotted keys and `#` comments into a RunConfig.
    """
    known = set(config_keys())
    data: Dict[str, Any] = {}
    violations = []
    for line_number, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ParseError(f"Line {line_number}: expected 'key = value'", line=line_number)
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in known:
            violations.append(f"{key}: unknown key (line {line_number})")
            continue
        value = _parse_value(key, raw)
        if value is None:
            continue
        section = data
        *parents, leaf = key.split(".")
        for parent in parents:
            section = section.setdefault(parent, {})
        section[leaf] = value
    if violations:
        raise ConfigValidationError(violations)
    return validate_config(data)


def load_config(path: Optional[PathLike]) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise OutputError(f"Cannot read config {path}: {e}") from e
    return parse_config(text)


def dump_config(config: RunConfig) -> str:
    """Serialise a RunConfig in the format parse_config reads back"""
    flat = config.model_dump()
    lines = ["# lateral Casimir run configuration"]
    for key in config_keys():
        value: Any = flat
        for part in key.split("."):
            value = value[part]
        if value is None:
            text = "none"
        elif isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, float):
            text = repr(value)
        elif isinstance(value, list):
            text = ", ".join(repr(float(v)) for v in value)
        else:
            text = str(value)
        lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"


def config_echo(config: RunConfig) -> Dict[str, Any]:
    return config.model_dump(mode="json")


# CSV
def write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Comma-separated, LF-terminated table with a mandatory header row"""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([format_float(v) if isinstance(v, (float, np.floating)) else v for v in row])
    except OSError as e:
        raise OutputError(f"Cannot write {path}: {e}") from e
    return path


def _read_table(path: PathLike, expected_header: Optional[Sequence[str]] = None) -> Tuple[List[str], List[List[float]]]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise OutputError(f"Cannot read {path}: {e}") from e

    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise ParseError(f"{path}: empty file, header row required", line=1)
    if expected_header is not None and header != list(expected_header):
        raise ParseError(f"{path}: expected header {','.join(expected_header)}, got {','.join(header)}", line=1)

    rows = []
    for line_number, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ParseError(
                f"{path}: line {line_number} has {len(row)} cells, expected {len(header)}", line=line_number)
        values = []
        for column, cell in zip(header, row):
            try:
                values.append(float(cell))
            except ValueError:
                raise ParseError(
                    f"{path}: line {line_number}, column '{column}': not a number: {cell!r}",
                    line=line_number, column=column,
                )
        rows.append(values)
    return header, rows


def read_calibration_csv(path: PathLike) -> List[CalibrationSample]:
    _, rows = _read_table(path, CALIBRATION_HEADER)
    samples = []
    for line_number, (voltage, deflection) in enumerate(rows, start=2):
        if not (math.isfinite(voltage) and math.isfinite(deflection)):
            raise ParseError(f"{path}: line {line_number}: values must be finite", line=line_number)
        samples.append(CalibrationSample(applied_voltage=voltage, deflection_signal=deflection))
    return samples


def write_calibration_csv(path: PathLike, samples: Sequence[CalibrationSample]) -> Path:
    return write_csv(path, CALIBRATION_HEADER,
                     ([s.applied_voltage, s.deflection_signal] for s in samples))


def scan_header(n_scans: int) -> List[str]:
    return ["displacement_m"] + [f"scan_{i}" for i in range(n_scans)] + ["mean"]


def write_scan_csv(path: PathLike, scan: ScanSet) -> Path:
    rows = (
        [float(x)] + [float(v) for v in scan.forces[:, j]] + [float(scan.mean_force[j])]
        for j, x in enumerate(scan.displacements)
    )
    return write_csv(path, scan_header(scan.n_scans), rows)


def read_scan_csv(path: PathLike) -> ScanSet:
    header, rows = _read_table(path)
    if len(header) < 3 or header[0] != "displacement_m" or header[-1] != "mean":
        raise ParseError(f"{path}: not a scan table", line=1)
    if header != scan_header(len(header) - 2):
        raise ParseError(f"{path}: scan columns must be scan_0..scan_{{n-1}}", line=1)
    table = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return ScanSet(
        displacements=table[:, 0].copy(),
        forces=table[:, 1:-1].T.copy(),
        mean_force=table[:, -1].copy(),
    )


def write_record_csv(path: PathLike, record: Dict[str, Any]) -> Path:
    """One header row and one value row"""
    return write_csv(path, list(record.keys()), [list(record.values())])


def read_record_csv(path: PathLike) -> Dict[str, float]:
    header, rows = _read_table(path)
    if len(rows) != 1:
        raise ParseError(f"{path}: expected exactly one record, got {len(rows)}")
    return dict(zip(header, rows[0]))


# SVG
SVG_WIDTH = 640
SVG_HEIGHT = 420
SVG_MARGIN = 60


class PlotSeries(BaseModel):
    label: str
    x: List[float]
    y: List[float]
    style: str = "line"   # "line" or "points"
    color: str = "#2563eb"


def _axis_transform(values: Sequence[float], log_scale: bool, lo_px: float, hi_px: float):
    data = np.log10(values) if log_scale else np.asarray(values, dtype=float)
    lo, hi = (float(np.min(data)), float(np.max(data))) if len(data) else (0.0, 1.0)
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5

    def transform(v: float) -> float:
        d = math.log10(v) if log_scale else v
        return lo_px + (d - lo) / (hi - lo) * (hi_px - lo_px)

    return transform, lo, hi


def svg_plot(series: Sequence[PlotSeries], title: str, x_label: str, y_label: str,
             log_x: bool = False, log_y: bool = False) -> str:
    """
    Plot one or more series as polylines or point markers, with axes and labels.

    Log axes drop non-positive values.
    """
    def usable(s: PlotSeries):
        pairs = [(x, y) for x, y in zip(s.x, s.y)
                 if (not log_x or x > 0) and (not log_y or y > 0)
                 and math.isfinite(x) and math.isfinite(y)]
        return pairs

    cleaned = [(s, usable(s)) for s in series]
    all_x = [x for _, pairs in cleaned for x, _ in pairs]
    all_y = [y for _, pairs in cleaned for _, y in pairs]
    left, right = SVG_MARGIN, SVG_WIDTH - SVG_MARGIN / 2
    top, bottom = SVG_MARGIN / 2, SVG_HEIGHT - SVG_MARGIN
    tx, x_lo, x_hi = _axis_transform(all_x or [1.0], log_x, left, right)
    ty, y_lo, y_hi = _axis_transform(all_y or [1.0], log_y, bottom, top)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" '
        f'viewBox="0 0 {SVG_WIDTH} {SVG_HEIGHT}">',
        f'<rect x="0" y="0" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" fill="white"/>',
        f'<text x="{SVG_WIDTH / 2:.1f}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="black"/>',
        f'<line x1="{left}" y1="{bottom}" x2="{left}" y2="{top}" stroke="black"/>',
        f'<text x="{(left + right) / 2:.1f}" y="{SVG_HEIGHT - 15}" text-anchor="middle" font-size="12">{x_label}</text>',
        f'<text x="15" y="{(top + bottom) / 2:.1f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 15 {(top + bottom) / 2:.1f})">{y_label}</text>',
    ]
    for value, anchor, x, y in (
        (x_lo, "start", left, bottom + 15), (x_hi, "end", right, bottom + 15),
    ):
        shown = 10 ** value if log_x else value
        parts.append(f'<text x="{x:.1f}" y="{y:.1f}" text-anchor="{anchor}" font-size="10">{shown:.3g}</text>')
    for value, y in ((y_lo, bottom), (y_hi, top + 10)):
        shown = 10 ** value if log_y else value
        parts.append(f'<text x="{left - 5:.1f}" y="{y:.1f}" text-anchor="end" font-size="10">{shown:.3g}</text>')

    for index, (s, pairs) in enumerate(cleaned):
        if not pairs:
            continue
        points = [(tx(x), ty(y)) for x, y in pairs]
        if s.style == "points":
            for px, py in points:
                parts.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="2.5" fill="{s.color}"/>')
        else:
            coords = " ".join(f"{px:.2f},{py:.2f}" for px, py in points)
            parts.append(f'<polyline points="{coords}" fill="none" stroke="{s.color}" stroke-width="1.5"/>')
        parts.append(
            f'<text x="{right - 5:.1f}" y="{top + 15 + 14 * index:.1f}" text-anchor="end" '
            f'font-size="11" fill="{s.color}">{s.label}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_text(path: PathLike, text: str) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8", newline="\n")
    except OSError as e:
        raise OutputError(f"Cannot write {path}: {e}") from e
    return path
