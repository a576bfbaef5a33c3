"""Fetch the 1990 California census housing table into data/california_housing.csv.

Two sources are supported:

* ``--source sklearn`` (default) uses scikit-learn's downloader, which pulls
  the StatLib archive from its public mirror.
* ``--source wheel`` pulls the ``pytorch-widedeep`` wheel with pip and reads
  the parquet copy bundled inside it. Useful behind a package-only proxy.

Either way the output has the eight raw columns followed by MedHouseVal,
20640 rows, and is checked before it is written. Needs pandas (and pyarrow
for the wheel source); the package itself does not.
"""

import argparse
import io
import subprocess
import sys
import tempfile
import zipfile
from pathlib import Path

COLUMNS = ["MedInc", "HouseAge", "AveRooms", "AveBedrms", "Population", "AveOccup", "Latitude", "Longitude",
           "MedHouseVal"]
WHEEL = "pytorch-widedeep==1.7.0"
MEMBER = "pytorch_widedeep/datasets/data/california_housing.parquet.brotli"


def from_sklearn():
    from sklearn.datasets import fetch_california_housing

    return fetch_california_housing(as_frame=True).frame


def from_wheel(wheel=None):
    import pandas as pd

    with tempfile.TemporaryDirectory() as tmp:
        if wheel is None:
            subprocess.run([sys.executable, "-m", "pip", "download", "--no-deps", "--timeout", "300",
                            "-d", tmp, WHEEL], check=True)
            wheel = next(Path(tmp).glob("*.whl"))
        with zipfile.ZipFile(wheel) as z:
            return pd.read_parquet(io.BytesIO(z.read(MEMBER)))


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--source", choices=["sklearn", "wheel"], default="sklearn")
    p.add_argument("--wheel", help="already-downloaded pytorch-widedeep wheel (implies --source wheel)")
    p.add_argument("--out", default="data/california_housing.csv")
    args = p.parse_args(argv)

    df = from_wheel(args.wheel) if args.wheel or args.source == "wheel" else from_sklearn()
    df = df[COLUMNS]
    if df.shape != (20640, 9) or df.isna().any().any():
        sys.exit(f"unexpected table: shape {df.shape}")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(out, index=False)
    print(f"wrote {out} ({len(df)} rows)")


if __name__ == "__main__":
    main()
