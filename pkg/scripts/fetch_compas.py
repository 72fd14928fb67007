"""Download ProPublica's two-year COMPAS file into the fairtrack cache.

The first successful download writes a ``.sha256`` sidecar; later loads are checked
against it.  Pass ``--sha256`` to pin a known digest instead.
"""

import argparse
import sys
import urllib.request
from pathlib import Path

from fairtrack.data_io import COMPAS_URL, compas_cache_path, compas_frame, sha256_of


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--url", default=COMPAS_URL)
    ap.add_argument("--dest", type=Path, default=compas_cache_path())
    ap.add_argument("--sha256", help="expected digest; refuse the file if it differs")
    ap.add_argument("--force", action="store_true", help="re-download even if cached")
    args = ap.parse_args(argv)

    dest = args.dest
    sidecar = dest.with_suffix(dest.suffix + ".sha256")
    if dest.exists() and not args.force:
        print(f"{dest} already present")
    else:
        dest.parent.mkdir(parents=True, exist_ok=True)
        tmp = dest.with_suffix(".part")
        try:
            urllib.request.urlretrieve(args.url, tmp)
        except OSError as exc:
            print(f"download failed: {exc}", file=sys.stderr)
            return 1
        tmp.replace(dest)
        sidecar.unlink(missing_ok=True)

    digest = sha256_of(dest)
    if args.sha256 and digest != args.sha256.lower():
        print(f"checksum mismatch: got {digest}", file=sys.stderr)
        return 1
    if sidecar.exists() and sidecar.read_text().split()[0] != digest:
        print(f"{dest} does not match {sidecar}", file=sys.stderr)
        return 1
    sidecar.write_text(f"{digest}  {dest.name}\n")

    full, trimmed = len(compas_frame(dest)), len(compas_frame(dest, trim=True))
    print(f"{dest}\nsha256 {digest}\nfiltered rows {full}, trimmed {trimmed}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
