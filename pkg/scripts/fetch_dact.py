#!/usr/bin/env python3
"""Download the published DACT corpus (50 annotated trips) into data/dact/.

Needs outbound network access to figshare.  The corpus feeds the soft
corpus acceptance check and scripts/corpus_report.py; everything else in
the test suite runs without it.

Usage:
    python3 scripts/fetch_dact.py [--dest data/dact]
"""

from __future__ import annotations

import argparse
import json
import sys
import urllib.request
from pathlib import Path

FIGSHARE_ARTICLE = "https://api.figshare.com/v2/articles/5005289"


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--dest",
        type=Path,
        default=Path(__file__).resolve().parent.parent / "data" / "dact",
    )
    args = parser.parse_args()
    args.dest.mkdir(parents=True, exist_ok=True)

    try:
        with urllib.request.urlopen(FIGSHARE_ARTICLE, timeout=30) as response:
            article = json.load(response)
    except OSError as exc:
        print(f"cannot reach figshare: {exc}", file=sys.stderr)
        return 1

    files = article.get("files", [])
    if not files:
        print("figshare article lists no files", file=sys.stderr)
        return 1
    for entry in files:
        name = entry["name"]
        target = args.dest / name
        print(f"downloading {name} ({entry.get('size', '?')} bytes)")
        with urllib.request.urlopen(entry["download_url"], timeout=120) as response:
            target.write_bytes(response.read())
    print(f"done: {len(files)} file(s) in {args.dest}")
    print("run the corpus check with: pytest tests/test_acceptance.py -s -k corpus")
    return 0


if __name__ == "__main__":
    sys.exit(main())
