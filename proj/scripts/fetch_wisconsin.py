#!/usr/bin/env python3
"""Fetch and convert the two UCI Wisconsin breast cancer datasets into the
CSV schema the CLI ingests (numeric feature columns plus a `label` column
holding +1 for malignant, -1 for benign).

  wisconsin_original.csv    699 x 9  (breast-cancer-wisconsin.data; the 16
                            rows with missing Bare Nuclei values are dropped,
                            leaving 683 examples)
  wisconsin_diagnostic.csv  569 x 30 (wdbc.data)

The diagnostic file can be produced offline from scikit-learn's bundled copy;
the original file needs network access to the UCI archive.

Usage: python3 scripts/fetch_wisconsin.py [out_dir]
"""

import csv
import io
import sys
import urllib.request
from pathlib import Path

UCI = "https://archive.ics.uci.edu/ml/machine-learning-databases/breast-cancer-wisconsin"
ORIGINAL_URL = f"{UCI}/breast-cancer-wisconsin.data"
DIAGNOSTIC_URL = f"{UCI}/wdbc.data"

ORIGINAL_FEATURES = [
    "clump_thickness", "uniformity_cell_size", "uniformity_cell_shape",
    "marginal_adhesion", "single_epithelial_cell_size", "bare_nuclei",
    "bland_chromatin", "normal_nucleoli", "mitoses",
]


def fetch(url: str) -> str:
    with urllib.request.urlopen(url, timeout=60) as response:
        return response.read().decode("utf-8")


def write_original(out_dir: Path) -> None:
    text = fetch(ORIGINAL_URL)
    rows, dropped = [], 0
    for line in text.splitlines():
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != 11:
            raise SystemExit(f"unexpected original-row width: {line!r}")
        if "?" in cells:
            dropped += 1
            continue
        features = cells[1:10]
        label = "+1" if cells[10] == "4" else "-1"
        rows.append(features + [label])
    path = out_dir / "wisconsin_original.csv"
    with path.open("w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(ORIGINAL_FEATURES + ["label"])
        writer.writerows(rows)
    print(f"wrote {path} ({len(rows)} rows, {dropped} rows with missing values dropped)")


def write_diagnostic(out_dir: Path) -> None:
    path = out_dir / "wisconsin_diagnostic.csv"
    try:
        from sklearn.datasets import load_breast_cancer  # offline source

        d = load_breast_cancer()
        names = [n.replace(" ", "_") for n in d.feature_names]
        with path.open("w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(names + ["label"])
            for x, y in zip(d.data, d.target):
                label = "+1" if d.target_names[y] == "malignant" else "-1"
                writer.writerow([repr(float(v)) for v in x] + [label])
        print(f"wrote {path} ({len(d.data)} rows, from scikit-learn's bundled copy)")
        return
    except ImportError:
        pass
    text = fetch(DIAGNOSTIC_URL)
    rows = []
    for line in text.splitlines():
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != 32:
            raise SystemExit(f"unexpected diagnostic-row width: {line!r}")
        label = "+1" if cells[1] == "M" else "-1"
        rows.append(cells[2:] + [label])
    names = [f"f{i + 1}" for i in range(30)]
    with path.open("w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(names + ["label"])
        writer.writerows(rows)
    print(f"wrote {path} ({len(rows)} rows)")


def main() -> None:
    out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("data")
    out_dir.mkdir(parents=True, exist_ok=True)
    write_diagnostic(out_dir)
    try:
        write_original(out_dir)
    except Exception as e:  # noqa: BLE001 - report and keep the diagnostic file
        print(f"could not fetch the original dataset: {e}", file=sys.stderr)
        print("provide data/wisconsin_original.csv manually to run the paired "
              "Wisconsin experiments", file=sys.stderr)
        sys.exit(1)


if __name__ == "__main__":
    main()
