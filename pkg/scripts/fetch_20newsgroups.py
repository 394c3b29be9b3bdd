#!/usr/bin/env python3
"""Fetch the 20-Newsgroups corpus into the directory layout the pipeline
reads (one subdirectory per group, one file per post).

Tries scikit-learn's fetcher first, then the upstream tarball.  Needs
network access; on an offline machine, download 20news-bydate.tar.gz
elsewhere and pass --tarball.
"""

from __future__ import annotations

import argparse
import io
import sys
import tarfile
import urllib.request
from pathlib import Path

UPSTREAM = "http://qwone.com/~jason/20Newsgroups/20news-bydate.tar.gz"


def write_tree(out_dir: Path, posts) -> int:
    count = 0
    for group, name, text in posts:
        d = out_dir / group
        d.mkdir(parents=True, exist_ok=True)
        (d / name).write_text(text, encoding="latin-1", errors="replace")
        count += 1
    return count


def from_sklearn():
    from sklearn.datasets import fetch_20newsgroups

    bunch = fetch_20newsgroups(subset="all", shuffle=False)
    for i, (text, target) in enumerate(zip(bunch.data, bunch.target)):
        yield bunch.target_names[target], f"{i:06d}", text


def from_tarball(blob: bytes):
    with tarfile.open(fileobj=io.BytesIO(blob), mode="r:gz") as tar:
        for member in tar.getmembers():
            if not member.isfile():
                continue
            parts = Path(member.name).parts
            if len(parts) != 3:  # 20news-bydate-{train,test}/<group>/<id>
                continue
            _subset, group, name = parts
            fh = tar.extractfile(member)
            text = fh.read().decode("latin-1")
            yield group, name, text


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, required=True,
                        help="directory to write the group tree into")
    parser.add_argument("--tarball", type=Path, default=None,
                        help="use a local 20news-bydate.tar.gz instead of "
                             "downloading")
    args = parser.parse_args(argv)
    args.out.mkdir(parents=True, exist_ok=True)

    if args.tarball is not None:
        count = write_tree(args.out, from_tarball(args.tarball.read_bytes()))
        print(f"wrote {count} posts to {args.out}")
        return 0

    try:
        count = write_tree(args.out, from_sklearn())
        print(f"wrote {count} posts to {args.out} (via scikit-learn)")
        return 0
    except Exception as exc:
        print(f"scikit-learn fetch failed ({exc}); trying {UPSTREAM}",
              file=sys.stderr)
    try:
        blob = urllib.request.urlopen(UPSTREAM, timeout=120).read()
    except Exception as exc:
        print(f"download failed: {exc}", file=sys.stderr)
        print("fetch the tarball manually and re-run with --tarball",
              file=sys.stderr)
        return 1
    count = write_tree(args.out, from_tarball(blob))
    print(f"wrote {count} posts to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
