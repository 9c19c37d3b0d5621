"""MATPOWER case file (.m) parsing and emission.

Only the assignment subset used by the public case libraries is accepted::

    function mpc = case9
    mpc.baseMVA = 100;
    mpc.bus = [ 1 3 0 0 ...; 2 2 ...; ];

``%`` starts a line comment, rows are separated by ``;`` or newlines and
columns by whitespace or commas. Unknown assignments (``mpc.version``,
cell arrays such as ``mpc.bus_name``) are skipped. Columns beyond the
documented schema are kept verbatim so that files round-trip losslessly.

A structured mirror format (JSON with the same field names) is accepted
wherever a ``.m`` file is.
"""

from __future__ import annotations

import json
import logging
import math
import re
from dataclasses import dataclass, field
from typing import Any

from .errors import CaseFormatError, MalformedMatrix, MissingTable, NumericParse

_LOGGER = logging.getLogger(__name__)

# Minimum column counts per table
BUS_COLUMNS = 13
GEN_COLUMNS = 10
BRANCH_COLUMNS = 13
GENCOST_COLUMNS = 4

BUS_HEADER = ("bus_i", "type", "Pd", "Qd", "Gs", "Bs", "area", "Vm", "Va", "baseKV", "zone", "Vmax", "Vmin")
GEN_HEADER = ("bus", "Pg", "Qg", "Qmax", "Qmin", "Vg", "mBase", "status", "Pmax", "Pmin")
BRANCH_HEADER = ("fbus", "tbus", "r", "x", "b", "rateA", "rateB", "rateC", "ratio", "angle", "status", "angmin", "angmax")
GENCOST_HEADER = ("model", "startup", "shutdown", "n", "c(n-1)", "...", "c0")

_TABLES = {"bus": BUS_COLUMNS, "gen": GEN_COLUMNS, "branch": BRANCH_COLUMNS, "gencost": GENCOST_COLUMNS}

_ASSIGN_RE = re.compile(r"\b[A-Za-z_]\w*\.([A-Za-z_]\w*)\s*=")
_FUNCTION_RE = re.compile(r"^\s*function\s+[A-Za-z_]\w*\s*=\s*([A-Za-z_]\w*)", re.MULTILINE)
_NUMBER_RE = re.compile(r"^[+-]?(?:(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?|inf|nan)$", re.IGNORECASE)
_NAME_SANITIZE_RE = re.compile(r"\W")


@dataclass
class CaseData:
    """Raw case tables exactly as stored in a case file.

    Attributes:
        base_mva: System MVA base (> 0)
        bus_rows: Bus table, at least 13 columns
        gen_rows: Generator table, at least 10 columns
        branch_rows: Branch table, at least 13 columns
        gencost_rows: Generator cost table (may be empty)
        name: Case identifier
    """

    base_mva: float
    bus_rows: list[list[float]]
    gen_rows: list[list[float]]
    branch_rows: list[list[float]]
    gencost_rows: list[list[float]] = field(default_factory=list)
    name: str = "case"

    def __post_init__(self) -> None:
        _validate(self)


def _validate(case: CaseData) -> None:
    """Check the CaseData invariants, raising a CaseFormatError subclass."""
    if not math.isfinite(case.base_mva) or case.base_mva <= 0:
        raise CaseFormatError(f"baseMVA must be positive, got {case.base_mva}")

    for table, min_cols in _TABLES.items():
        rows = getattr(case, f"{table}_rows")
        if not rows:
            continue
        width = len(rows[0])
        if width < min_cols:
            raise MalformedMatrix(f"{table}: {width} columns, at least {min_cols} required")
        for i, row in enumerate(rows):
            if len(row) != width:
                raise MalformedMatrix(f"{table}: row {i + 1} has {len(row)} columns, expected {width}")

    seen: set[float] = set()
    for row in case.bus_rows:
        if row[0] in seen:
            raise CaseFormatError(f"bus: duplicate bus id {_fmt_number(row[0])}")
        seen.add(row[0])


def parse_case(text: str) -> CaseData:
    """Parse MATPOWER case source into CaseData.

    Args:
        text: Case file source

    Returns:
        CaseData with bus, gen and branch populated (gencost may be empty)

    Raises:
        MalformedMatrix: Unbalanced brackets or ragged rows
        MissingTable: bus, gen or branch absent
        NumericParse: A token that is not a number
    """
    source = _strip_comments(text)
    name_match = _FUNCTION_RE.search(source)
    name = name_match.group(1) if name_match else "case"

    tables: dict[str, list[list[float]]] = {}
    base_mva: float | None = None

    pos = 0
    while True:
        match = _ASSIGN_RE.search(source, pos)
        if match is None:
            break
        key = match.group(1)
        value, pos = _read_value(source, match.end(), key)

        if key == "baseMVA":
            base_mva = _parse_scalar(value, key)
        elif key in _TABLES:
            if not value.startswith("["):
                raise MalformedMatrix(f"{key}: expected a matrix literal")
            tables[key] = _parse_matrix(value[1:-1], key)
        else:
            _LOGGER.debug("Ignoring assignment to %s", key)

    missing = [key for key in ("bus", "gen", "branch") if key not in tables]
    if missing:
        raise MissingTable(f"Case is missing required table(s): {', '.join(missing)}")
    if base_mva is None:
        raise MissingTable("Case is missing baseMVA")

    case = CaseData(
        base_mva=base_mva,
        bus_rows=tables["bus"],
        gen_rows=tables["gen"],
        branch_rows=tables["branch"],
        gencost_rows=tables.get("gencost", []),
        name=name,
    )
    _LOGGER.debug(
        "Parsed case %s: %d buses, %d gens, %d branches",
        case.name,
        len(case.bus_rows),
        len(case.gen_rows),
        len(case.branch_rows),
    )
    return case


def _strip_comments(text: str) -> str:
    """Remove ``%`` line comments, leaving ``%`` inside quoted strings alone."""
    lines = []
    for line in text.splitlines():
        in_string = False
        cut = len(line)
        for i, ch in enumerate(line):
            if ch == "'":
                in_string = not in_string
            elif ch == "%" and not in_string:
                cut = i
                break
        lines.append(line[:cut])
    return "\n".join(lines)


def _read_value(source: str, start: int, key: str) -> tuple[str, int]:
    """Read the right-hand side of an assignment.

    Returns:
        ``(value, end)`` where value is stripped and matrices keep their brackets.
    """
    i = start
    while i < len(source) and source[i] in " \t\r\n":
        i += 1
    if i < len(source) and source[i] in "[{":
        opener = source[i]
        closer = "]" if opener == "[" else "}"
        depth = 0
        for j in range(i, len(source)):
            ch = source[j]
            if ch == opener:
                depth += 1
                if depth > 1 and opener == "[":
                    raise MalformedMatrix(f"{key}: nested brackets are not supported")
            elif ch == closer:
                depth -= 1
                if depth == 0:
                    return source[i : j + 1], j + 1
            elif opener == "[" and ch in "{}":
                raise MalformedMatrix(f"{key}: unbalanced brackets")
        raise MalformedMatrix(f"{key}: unterminated '{opener}'")

    end = i
    in_string = False
    while end < len(source) and source[end] != "\n" and (in_string or source[end] != ";"):
        ch = source[end]
        if ch == "'":
            in_string = not in_string
        elif ch in "[]{}" and not in_string:
            raise MalformedMatrix(f"{key}: unbalanced brackets")
        end += 1
    return source[i:end].strip(), end


def _parse_number(token: str, context: str) -> float:
    if not _NUMBER_RE.match(token):
        raise NumericParse(f"{context}: '{token}' is not a number")
    return float(token)


def _parse_scalar(value: str, key: str) -> float:
    if not value:
        raise NumericParse(f"{key}: missing value")
    return _parse_number(value, key)


def _parse_matrix(body: str, key: str) -> list[list[float]]:
    rows: list[list[float]] = []
    for raw_row in re.split(r"[;\n]", body):
        tokens = [t for t in re.split(r"[\s,]+", raw_row.strip()) if t]
        if not tokens:
            continue
        rows.append([_parse_number(t, f"{key} row {len(rows) + 1}") for t in tokens])

    if rows:
        width = len(rows[0])
        for i, row in enumerate(rows):
            if len(row) != width:
                raise MalformedMatrix(f"{key}: row {i + 1} has {len(row)} columns, expected {width}")
    return rows


def _fmt_number(v: float) -> str:
    """Format a number so that parsing it back yields the identical float.

    Whole numbers are written without a decimal point, infinities as
    ``Inf``/``-Inf`` and everything else with Python's shortest
    round-tripping representation.
    """
    if math.isnan(v):
        return "NaN"
    if math.isinf(v):
        return "Inf" if v > 0 else "-Inf"
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def _fmt_matrix(key: str, header: tuple[str, ...], rows: list[list[float]]) -> list[str]:
    lines = ["%\t" + "\t".join(header), f"mpc.{key} = ["]
    for row in rows:
        lines.append("\t" + "\t".join(_fmt_number(float(v)) for v in row) + ";")
    lines.append("];")
    return lines


def write_case(case: CaseData) -> str:
    """Emit CaseData as MATPOWER case source.

    ``parse_case(write_case(c)) == c`` holds for every valid CaseData.
    """
    name = _NAME_SANITIZE_RE.sub("_", case.name) or "case"
    if name[0].isdigit():
        name = f"case_{name}"

    lines = [
        f"function mpc = {name}",
        "",
        "%% MATPOWER Case Format : Version 2",
        "mpc.version = '2';",
        "",
        "%% system MVA base",
        f"mpc.baseMVA = {_fmt_number(float(case.base_mva))};",
        "",
        "%% bus data",
        *_fmt_matrix("bus", BUS_HEADER, case.bus_rows),
        "",
        "%% generator data",
        *_fmt_matrix("gen", GEN_HEADER, case.gen_rows),
        "",
        "%% branch data",
        *_fmt_matrix("branch", BRANCH_HEADER, case.branch_rows),
    ]
    if case.gencost_rows:
        lines += ["", "%% generator cost data", *_fmt_matrix("gencost", GENCOST_HEADER, case.gencost_rows)]
    return "\n".join(lines) + "\n"


def parse_mirror(text: str) -> CaseData:
    """Parse the JSON mirror format.

    Raises:
        CaseFormatError: Invalid JSON or wrong field types
        MissingTable: bus, gen, branch or baseMVA absent
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise CaseFormatError(f"Invalid mirror document: {err}") from err
    if not isinstance(doc, dict):
        raise CaseFormatError("Mirror document must be a JSON object")

    missing = [key for key in ("baseMVA", "bus", "gen", "branch") if key not in doc]
    if missing:
        raise MissingTable(f"Mirror document is missing: {', '.join(missing)}")

    def table(key: str) -> list[list[float]]:
        rows = doc.get(key, [])
        if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
            raise MalformedMatrix(f"{key}: expected a list of rows")
        return [[_coerce(v, key) for v in row] for row in rows]

    return CaseData(
        base_mva=_coerce(doc["baseMVA"], "baseMVA"),
        bus_rows=table("bus"),
        gen_rows=table("gen"),
        branch_rows=table("branch"),
        gencost_rows=table("gencost"),
        name=str(doc.get("name", "case")),
    )


def _coerce(value: Any, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise NumericParse(f"{key}: '{value}' is not a number")
    try:
        return float(value)
    except OverflowError as err:
        raise NumericParse(f"{key}: {value} is out of range") from err


def write_mirror(case: CaseData) -> str:
    """Emit CaseData in the JSON mirror format (deterministic output)."""
    doc = {
        "name": case.name,
        "baseMVA": case.base_mva,
        "bus": case.bus_rows,
        "gen": case.gen_rows,
        "branch": case.branch_rows,
        "gencost": case.gencost_rows,
    }
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"
