#!/usr/bin/env python3
"""Refresh tests/data/template_checksums.json from templates/*.txt.

Run after any deliberate template edit; remember to bump the edited asset's
version header so cached completions are invalidated.
"""
import hashlib
import json
import pathlib
import sys

root = pathlib.Path(__file__).resolve().parent.parent
templates = sorted((root / "templates").glob("*.txt"))
if not templates:
    sys.exit("no template assets found")

checksums = {
    path.name: hashlib.sha256(path.read_bytes()).hexdigest() for path in templates
}
out = root / "tests" / "data" / "template_checksums.json"
out.parent.mkdir(parents=True, exist_ok=True)
out.write_text(json.dumps(checksums, indent=2) + "\n")
print(f"wrote {out} ({len(checksums)} assets)")
