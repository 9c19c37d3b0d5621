from __future__ import annotations

import logging
from pathlib import Path
from typing import TYPE_CHECKING
from urllib.parse import urlparse

from .case_io import CaseData, parse_case, parse_mirror
from .errors import CaseFormatError

if TYPE_CHECKING:
    import aiohttp

_LOGGER = logging.getLogger(__name__)

MIRROR_SUFFIXES = (".json",)


async def load_case(
    source: str | Path | bytes | CaseData,
    session: aiohttp.ClientSession | None = None,
) -> CaseData:
    """Load a case from various sources.

    Args:
        source: Case source, can be:
                - CaseData object (returned as-is)
                - bytes (case file content, .m or mirror)
                - HTTP/HTTPS URL (fetched and parsed by URL suffix)
                - File path (.m or .json)
                - Case file source text
        session: Optional aiohttp ClientSession for HTTP requests.
                If provided, reuses existing session.
                If not provided, creates a temporary session for each request.

    Returns:
        CaseData

    Raises:
        ValueError: If a source is invalid or the case cannot be loaded
    """
    if isinstance(source, str) and (source.startswith("http://") or source.startswith("https://")):
        return await fetch_case(source, session)
    return read_case(source)


def read_case(source: str | Path | bytes | CaseData) -> CaseData:
    """Synchronous counterpart of :func:`load_case` for local sources."""
    # Already parsed - return as-is
    if isinstance(source, CaseData):
        return source

    if isinstance(source, bytes):
        try:
            text = source.decode("utf-8", errors="replace")
        except Exception as err:
            raise CaseFormatError(f"Failed to decode case bytes: {err}") from err
        return parse_case_text(text)

    if isinstance(source, Path):
        return _load_from_file(source)

    if not isinstance(source, str):
        raise CaseFormatError(f"Invalid case source type: {type(source)}")

    # Multi-line strings are case text, anything else is a path
    if "\n" in source or source.lstrip().startswith("{"):
        return parse_case_text(source)
    return _load_from_file(Path(source))


def parse_case_text(text: str, suffix: str | None = None) -> CaseData:
    """Parse case text, picking the mirror parser for JSON content or a mirror suffix."""
    if suffix in MIRROR_SUFFIXES or (suffix is None and text.lstrip().startswith("{")):
        return parse_mirror(text)
    return parse_case(text)


def _load_from_file(file_path: Path) -> CaseData:
    """Load a case from a file path.

    Raises:
        CaseFormatError: If the file doesn't exist or cannot be read
    """
    try:
        text = file_path.read_text(encoding="utf-8", errors="replace")
    except FileNotFoundError:
        raise CaseFormatError(f"Case file not found: {file_path}") from None
    except OSError as err:
        raise CaseFormatError(f"Failed to read case file {file_path}: {err}") from err

    case = parse_case_text(text, file_path.suffix.lower())
    if case.name == "case":
        case.name = file_path.stem
    return case


async def fetch_case(
    url: str,
    session: aiohttp.ClientSession | None = None,
) -> CaseData:
    """Load a case from an HTTP/HTTPS URL.

    Args:
        url: HTTP/HTTPS URL of a .m or .json case file
        session: Optional aiohttp session

    Returns:
        CaseData

    Raises:
        CaseFormatError: If the case cannot be fetched or parsed
    """
    try:
        text = await fetch_text(url, session)
    except Exception as err:
        raise CaseFormatError(f"Failed to load case from {url}: {err}") from err

    path = Path(urlparse(url).path)
    case = parse_case_text(text, path.suffix.lower())
    if case.name == "case":
        case.name = path.stem
    return case


async def fetch_text(url: str, session: aiohttp.ClientSession | None = None) -> str:
    """Download a text document, reusing the caller's session when given."""
    _LOGGER.debug("Fetching %s", url)
    if session:
        async with session.get(url) as response:
            response.raise_for_status()
            return await response.text()

    import aiohttp

    async with aiohttp.ClientSession() as temp_session:
        async with temp_session.get(url) as response:
            response.raise_for_status()
            return await response.text()
