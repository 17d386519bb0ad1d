#!/usr/bin/env python3
"""Download Cora-ML and Citeseer and convert them to the text formats read by glace.

Writes data/<name>/{edges.txt,attrs.txt,labels.txt,SHA256SUMS}. Pass --npz-dir to
convert local copies of the .npz files instead of downloading.
"""

import argparse
import hashlib
import sys
import urllib.request
from pathlib import Path

import numpy as np
import scipy.sparse as sp

BASE_URL = "https://raw.githubusercontent.com/abojchevski/graph2gauss/master/data"
DATASETS = ("cora_ml", "citeseer")


def load_npz(path):
    with np.load(path, allow_pickle=True) as f:
        f = dict(f)
    adj = sp.csr_matrix((f["adj_data"], f["adj_indices"], f["adj_indptr"]), shape=f["adj_shape"])
    if "attr_data" in f:
        attrs = sp.csr_matrix((f["attr_data"], f["attr_indices"], f["attr_indptr"]), shape=f["attr_shape"])
    else:
        attrs = sp.csr_matrix(f["attr_matrix"])
    return adj, attrs, np.asarray(f["labels"])


def write_edges(adj, path):
    adj = adj.maximum(adj.T).tocoo()
    keep = adj.row < adj.col
    with open(path, "w") as out:
        for s, t in zip(adj.row[keep], adj.col[keep]):
            out.write(f"{s} {t}\n")
    return int(keep.sum())


def write_attrs(attrs, path):
    coo = attrs.tocoo()
    with open(path, "w") as out:
        out.write(f"{attrs.shape[0]} {attrs.shape[1]}\n")
        for r, c, v in zip(coo.row, coo.col, coo.data):
            out.write(f"{r} {c} {v:g}\n")


def write_labels(labels, path):
    with open(path, "w") as out:
        for i, y in enumerate(labels):
            out.write(f"{i} {y}\n")


def sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def convert(npz, dest):
    dest.mkdir(parents=True, exist_ok=True)
    adj, attrs, labels = load_npz(npz)
    files = {name: dest / name for name in ("edges.txt", "attrs.txt", "labels.txt")}
    m = write_edges(adj, files["edges.txt"])
    write_attrs(attrs, files["attrs.txt"])
    write_labels(labels, files["labels.txt"])
    with open(dest / "SHA256SUMS", "w") as out:
        for name, path in [("source.npz", npz)] + sorted(files.items()):
            out.write(f"{sha256(path)}  {name}\n")
    print(f"{dest}: {adj.shape[0]} nodes, {m} edges, {attrs.shape[1]} attributes, {len(set(labels.tolist()))} classes")


def main():
    root = Path(__file__).resolve().parent.parent
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=root / "data")
    ap.add_argument("--npz-dir", type=Path, help="directory holding <name>.npz; skips the download")
    ap.add_argument("datasets", nargs="*", default=list(DATASETS), choices=DATASETS)
    args = ap.parse_args()
    for name in args.datasets:
        dest = args.out / name
        if args.npz_dir:
            npz = args.npz_dir / f"{name}.npz"
        else:
            dest.mkdir(parents=True, exist_ok=True)
            npz = dest / "source.npz"
            if not npz.exists():
                url = f"{BASE_URL}/{name}.npz"
                print(f"downloading {url}", file=sys.stderr)
                urllib.request.urlretrieve(url, npz)
        convert(npz, dest)


if __name__ == "__main__":
    main()
