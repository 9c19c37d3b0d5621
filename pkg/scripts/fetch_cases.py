"""Download public MATPOWER cases into the test cache.

Fetches every case named on the command line (default: the cases used by
the slow integration tests) into tests/.case_cache/<name>.m, sharing one
HTTP session, and prints the dimensions of each.
"""

from __future__ import annotations

import asyncio
import sys
from pathlib import Path

import aiohttp

sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from gridopt.case_io import parse_case
from gridopt.case_loader import fetch_text
from gridopt.network import build_network, case_statistics

CACHE_DIR = Path(__file__).parent.parent / "tests" / ".case_cache"
PUBLIC_CASE_URL = "https://raw.githubusercontent.com/MATPOWER/matpower/master/data/{name}.m"
DEFAULT_CASES = ("case30", "case118", "case2383wp")


async def fetch_one(name: str, session: aiohttp.ClientSession) -> None:
    target = CACHE_DIR / f"{name}.m"
    if target.exists():
        text = target.read_text(encoding="utf-8")
    else:
        text = await fetch_text(PUBLIC_CASE_URL.format(name=name), session)
        target.write_text(text, encoding="utf-8")
    stats = case_statistics(build_network(parse_case(text)))
    print(f"{name:<12} n_b={stats.n_b:<6} n_g={stats.n_g:<5} n_l={stats.n_l:<6} nvar={stats.nvar}")


async def main(names: list[str]) -> int:
    CACHE_DIR.mkdir(parents=True, exist_ok=True)
    async with aiohttp.ClientSession() as session:
        results = await asyncio.gather(*(fetch_one(n, session) for n in names), return_exceptions=True)
    failed = 0
    for name, result in zip(names, results):
        if isinstance(result, Exception):
            print(f"{name}: {result}", file=sys.stderr)
            failed += 1
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(asyncio.run(main(sys.argv[1:] or list(DEFAULT_CASES))))
