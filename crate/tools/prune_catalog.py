#!/usr/bin/env python3
"""Drop catalog entries whose renderings the GNU assembler rejects.

Renders every kept spec through `specswarm catalog --render`, assembles the
lines in one file and removes each failing iform from the catalog in place.

    cargo build -p specswarm-cli
    python3 tools/prune_catalog.py data/instructions.xml
"""

import re
import subprocess
import sys
import tempfile
from pathlib import Path

PRELUDE = """.intel_syntax noprefix
.text
specswarm_kernel:
"""
EPILOGUE = """.data
.p2align 6
specswarm_scratch:
    .zero 1024
"""


def failing_iforms(binary, catalog):
    out = subprocess.run([binary, "catalog", "--catalog", catalog, "--render"],
                         check=True, capture_output=True, text=True).stdout
    rows = [line.split("\t", 1) for line in out.splitlines() if "\t" in line]
    with tempfile.TemporaryDirectory() as d:
        src = Path(d) / "all.s"
        src.write_text(PRELUDE + "".join(f"    {asm}\n" for _, asm in rows) + EPILOGUE)
        res = subprocess.run(["as", "--64", "-o", str(Path(d) / "all.o"), str(src)],
                             capture_output=True, text=True)
    first = PRELUDE.count("\n")
    bad = set()
    for line in res.stderr.splitlines():
        m = re.match(r".*?:(\d+): Error:", line)
        if m:
            bad.add(rows[int(m.group(1)) - first - 1][0])
    return bad, len(rows)


def main():
    catalog = sys.argv[1] if len(sys.argv) > 1 else "data/instructions.xml"
    binary = sys.argv[2] if len(sys.argv) > 2 else "target/debug/specswarm"
    bad, n = failing_iforms(binary, catalog)
    text = Path(catalog).read_text()
    pattern = re.compile(r'  <instruction [^>]*iform="([^"]+)"[^>]*?(?:/>|>.*?</instruction>)\n', re.S)
    kept = pattern.sub(lambda m: "" if m.group(1) in bad else m.group(0), text)
    Path(catalog).write_text(kept)
    print(f"{n} renderings checked, {len(bad)} iforms removed", file=sys.stderr)


if __name__ == "__main__":
    main()
