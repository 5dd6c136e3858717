import argparse
import sys
from pathlib import Path

from harqgp.cli import metadata_lines, write_csv

RESULTS = Path(__file__).resolve().parents[1] / "results"


def parser(doc: str) -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(description=doc.splitlines()[0])
    ap.add_argument("--out", type=Path, default=None, help="CSV path (default results/<script>.csv)")
    ap.add_argument("--grid-points", type=int, default=4096)
    return ap


def save(name: str, out, cfg, header, rows):
    path = out or RESULTS / f"{name}.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        write_csv(fh, metadata_lines(cfg, " ".join(sys.argv)), header, rows)
    print(f"wrote {path}")


def table(header, rows, width=11):
    print(" ".join(f"{h:>{width}}" for h in header))
    for r in rows:
        print(" ".join(f"{v:>{width}.4g}" if isinstance(v, float) else f"{str(v):>{width}}" for v in r))
