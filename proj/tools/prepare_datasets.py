#!/usr/bin/env python3
"""Build the benchmark CSVs under data/ from UCI files bundled in PyPI wheels.

The sandbox has no route to the UCI archive, so the raw files are taken from
packages that redistribute them:

  keel-ds 0.2.5       crx, contraceptive (CMC), letter, magic   (KEEL exports)
  responsibly 0.1.2   german.data, adult.data, adult.test (original UCI files)

Usage: tools/prepare_datasets.py [--out data] [--wheel-dir /tmp/wheels]
"""

import argparse
import csv
import io
import pathlib
import subprocess
import sys
import zipfile

WHEELS = {
    "keel-ds": "keel_ds-0.2.5-py3-none-any.whl",
    "responsibly": "responsibly-0.1.2-py3-none-any.whl",
}


def fetch(wheel_dir: pathlib.Path, package: str) -> zipfile.ZipFile:
    path = wheel_dir / WHEELS[package]
    if not path.exists():
        version = WHEELS[package].split("-")[1]
        subprocess.run(
            [sys.executable, "-m", "pip", "download", "--no-deps", "-q",
             f"{package}=={version}", "-d", str(wheel_dir)],
            check=True)
    return zipfile.ZipFile(path)


def read_member(z: zipfile.ZipFile, suffix: str) -> str:
    for name in z.namelist():
        if name.endswith(suffix):
            return z.read(name).decode("utf-8")
    raise FileNotFoundError(suffix)


def write_csv(path: pathlib.Path, header, rows):
    with path.open("w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    print(f"{path}: {len(rows)} rows, {len(header) - 1} features")


def keel_rows(text: str):
    return [[c.strip() for c in line.split(",")]
            for line in text.splitlines()
            if line.strip() and not line.startswith("@")]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="data")
    ap.add_argument("--wheel-dir", default="/tmp/wheels")
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    wheel_dir = pathlib.Path(args.wheel_dir)
    wheel_dir.mkdir(parents=True, exist_ok=True)

    keel = fetch(wheel_dir, "keel-ds")
    resp = fetch(wheel_dir, "responsibly")

    # CRX: KEEL's complete-case export (653 of 690 rows; rows with '?' dropped).
    rows = keel_rows(read_member(keel, "raw/crx.dat"))
    write_csv(out / "crx.csv", [f"A{i}" for i in range(1, 16)] + ["class"], rows)

    # GERMAN: original space-separated UCI file, symbolic attribute codes.
    rows = [line.split() for line in
            read_member(resp, "german/german.data").splitlines() if line.strip()]
    write_csv(out / "german.csv", [f"A{i}" for i in range(1, 21)] + ["class"], rows)

    # CMC: all attributes already integer coded.
    rows = keel_rows(read_member(keel, "raw/contraceptive.dat"))
    header = ["wife_age", "wife_education", "husband_education", "children",
              "wife_religion", "wife_working", "husband_occupation",
              "living_index", "media_exposure", "method"]
    write_csv(out / "cmc.csv", header, rows)

    # LETTER
    rows = keel_rows(read_member(keel, "raw/letter.dat"))
    header = ["x_box", "y_box", "width", "high", "onpix", "x_bar", "y_bar",
              "x2bar", "y2bar", "xybar", "x2ybr", "xy2br", "x_ege", "xegvy",
              "y_ege", "yegvx", "letter"]
    write_csv(out / "letter.csv", header, rows)

    # MAGIC gamma telescope: all numeric, classes g / h.
    rows = keel_rows(read_member(keel, "raw/magic.dat"))
    header = ["fLength", "fWidth", "fSize", "fConc", "fConc1", "fAsym",
              "fM3Long", "fM3Trans", "fAlpha", "fDist", "class"]
    write_csv(out / "magic.csv", header, rows)

    # ADULT: train + test (48842 rows). '?' stays a literal category value.
    rows = []
    for member in ("adult/adult.data", "adult/adult.test"):
        for rec in csv.reader(io.StringIO(read_member(resp, member))):
            if len(rec) != 15:
                continue
            rec = [c.strip() for c in rec]
            rec[-1] = rec[-1].rstrip(".")
            rows.append(rec)
    header = ["age", "workclass", "fnlwgt", "education", "education_num",
              "marital_status", "occupation", "relationship", "race", "sex",
              "capital_gain", "capital_loss", "hours_per_week",
              "native_country", "income"]
    write_csv(out / "adult.csv", header, rows)


if __name__ == "__main__":
    main()
