#!/usr/bin/env python3
"""Convert the public Hetionet v1.0 JSON dump into the TSV corpus the engine
loads.

Input: hetionet-v1.0.json or .json.bz2 from the hetio/hetionet repository
(hetnet/json/).  Writes into --out:

  graph.tsv   head<TAB>relation<TAB>tail, one line per directed edge
  types.tsv   entity<TAB>type
  split.tsv   compound<TAB>disease<TAB>{train|valid|test} over the treats pairs

Entities are named Kind::identifier.  Type and relation labels are the
Hetionet kinds with spaces replaced by underscores, so they stay single
tokens in rule files.  Edges marked direction 'both' (resembles, interacts,
covaries, ...) are emitted in both orientations; the engine additionally adds
^-1 inverse labels for every relation when it loads the graph.
"""

import argparse
import bz2
import collections
import json
import random
import sys
from pathlib import Path


def load(path: Path):
    opener = bz2.open if path.suffix == ".bz2" else open
    with opener(path, "rt", encoding="utf-8") as fh:
        return json.load(fh)


def main() -> None:
    ap = argparse.ArgumentParser(
        description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("json", type=Path, help="hetionet-v1.0.json or .json.bz2")
    ap.add_argument("--out", type=Path, default=Path("hetionet"), help="output directory")
    ap.add_argument("--seed", type=int, default=0, help="seed for the split shuffle")
    ap.add_argument("--train-fraction", type=float, default=0.8)
    ap.add_argument("--valid-fraction", type=float, default=0.1)
    args = ap.parse_args()

    data = load(args.json)
    args.out.mkdir(parents=True, exist_ok=True)

    def label(kind: str) -> str:
        return kind.replace(" ", "_")

    def ident(kind: str, identifier) -> str:
        return f"{label(kind)}::{identifier}"

    with open(args.out / "types.tsv", "w", encoding="utf-8") as fh:
        for n in data["nodes"]:
            fh.write(f"{ident(n['kind'], n['identifier'])}\t{label(n['kind'])}\n")

    rows = set()
    treats = set()
    for e in data["edges"]:
        head = ident(*e["source_id"])
        tail = ident(*e["target_id"])
        rel = label(e["kind"])
        rows.add((head, rel, tail))
        if e.get("direction") == "both":
            rows.add((tail, rel, head))
        if rel == "treats":
            treats.add((head, tail))
    with open(args.out / "graph.tsv", "w", encoding="utf-8") as fh:
        for head, rel, tail in sorted(rows):
            fh.write(f"{head}\t{rel}\t{tail}\n")

    pairs = sorted(treats)
    random.Random(args.seed).shuffle(pairs)
    n_train = int(args.train_fraction * len(pairs))
    n_valid = int(args.valid_fraction * len(pairs))
    with open(args.out / "split.tsv", "w", encoding="utf-8") as fh:
        for i, (c, d) in enumerate(pairs):
            part = "train" if i < n_train else "valid" if i < n_train + n_valid else "test"
            fh.write(f"{c}\t{d}\t{part}\n")

    print(f"entities = {len(data['nodes'])}", file=sys.stderr)
    print(f"edges = {len(rows)}", file=sys.stderr)
    print(f"treats pairs = {len(pairs)} (train {n_train}, valid {n_valid}, "
          f"test {len(pairs) - n_train - n_valid})", file=sys.stderr)
    for rel, count in sorted(collections.Counter(r for _, r, _ in rows).items()):
        print(f"edges.{rel} = {count}", file=sys.stderr)


if __name__ == "__main__":
    main()
