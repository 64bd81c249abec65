#!/usr/bin/env python3
"""Rebuild the MovieLens 100k `u.data`, `u.item` and `u.genre` files.

The GroupLens archive is the primary source. When it is unreachable, the
copy bundled in the `recbole` wheel on PyPI is converted back into the
original layouts. Ratings, ids, timestamps and genre flags are identical;
title/date/url metadata is approximated (the tool never reads it).

usage: scripts/fetch_ml100k.py [OUT_DIR]   (default: data/ml-100k)
"""
import io
import os
import subprocess
import sys
import tempfile
import urllib.request
import zipfile

GENRES = [
    "unknown", "Action", "Adventure", "Animation", "Children's", "Comedy",
    "Crime", "Documentary", "Drama", "Fantasy", "Film-Noir", "Horror",
    "Musical", "Mystery", "Romance", "Sci-Fi", "Thriller", "War", "Western",
]
GROUPLENS = "https://files.grouplens.org/datasets/movielens/ml-100k.zip"


def from_grouplens(out):
    with urllib.request.urlopen(GROUPLENS, timeout=20) as resp:
        z = zipfile.ZipFile(io.BytesIO(resp.read()))
    for name in ("u.data", "u.item", "u.genre"):
        with open(os.path.join(out, name), "wb") as f:
            f.write(z.read("ml-100k/" + name))


def from_recbole(out):
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(
            [sys.executable, "-m", "pip", "download", "recbole==1.2.1",
             "--no-deps", "-q", "-d", tmp],
            check=True,
        )
        wheel = next(os.path.join(tmp, f) for f in os.listdir(tmp) if f.endswith(".whl"))
        z = zipfile.ZipFile(wheel)
        base = "recbole/dataset_example/ml-100k/"
        inter = z.read(base + "ml-100k.inter").decode("latin-1").splitlines()
        items = z.read(base + "ml-100k.item").decode("latin-1").splitlines()

    with open(os.path.join(out, "u.data"), "w", newline="\n") as f:
        for line in inter[1:]:
            user, item, rating, ts = line.split("\t")
            f.write(f"{user}\t{item}\t{int(float(rating))}\t{int(float(ts))}\n")

    with open(os.path.join(out, "u.item"), "w", encoding="latin-1", newline="\n") as f:
        for line in items[1:]:
            item, title, year, classes = line.split("\t")
            flags = ["0"] * len(GENRES)
            for g in classes.split(" "):
                flags[GENRES.index(g)] = "1"
            if year.isdigit():
                title = f"{title} ({year})"
                date = f"01-Jan-{year}"
            else:
                title, date = "unknown", ""
            f.write("|".join([item, title, date, "", ""] + flags) + "\n")

    with open(os.path.join(out, "u.genre"), "w", newline="\n") as f:
        for i, g in enumerate(GENRES):
            f.write(f"{g}|{i}\n")
        f.write("\n")


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else "data/ml-100k"
    os.makedirs(out, exist_ok=True)
    try:
        from_grouplens(out)
        print(f"fetched GroupLens archive into {out}")
    except Exception as exc:  # noqa: BLE001
        print(f"GroupLens unreachable ({exc}); converting recbole copy", file=sys.stderr)
        from_recbole(out)
        print(f"wrote converted files into {out}")


if __name__ == "__main__":
    main()
