"""Writes a small deterministic word-vector table for the embedding matcher.

Words in the same group get nearby vectors; everything else is out of
vocabulary. Usage: python3 make_toy_embeddings.py > data/specs/toy_embeddings.txt
"""
import random

DIM = 16
GROUPS = [
    ["move", "shift", "relocate", "transfer", "displace", "drag", "push", "slide"],
    ["remove", "delete", "erase", "discard", "destroy", "rid", "away"],
    ["add", "insert", "create", "spawn", "put", "place", "new"],
    ["change", "set", "make", "turn", "update", "modify"],
    ["color", "colour", "paint", "recolor", "dye", "tint"],
    ["shape", "form"],
    ["rename", "name", "call", "label", "relabel"],
    ["units", "unit", "steps", "step", "cells", "spaces", "pixels"],
    ["along", "toward", "towards"],
    ["block", "blocks", "tile", "tiles"],
    ["write", "text", "type", "enter"],
    ["increase", "grow", "enlarge", "expand", "raise"],
    ["decrease", "reduce", "shrink", "lower"],
    ["font", "size"],
    ["location", "position", "spot"],
    ["element", "elements", "object", "objects", "item", "items"],
    ["get", "fetch", "find"],
    ["the", "a", "an", "to", "of", "at", "on", "by", "with", "and", "as", "in", "into"],
]


def main():
    rng = random.Random(7)
    for group in GROUPS:
        base = [rng.gauss(0.0, 1.0) for _ in range(DIM)]
        scale = 0.2 if group[0] == "the" else 1.0
        for word in group:
            vec = [scale * (b + rng.gauss(0.0, 0.15)) for b in base]
            print(word, " ".join(f"{x:.5f}" for x in vec))


if __name__ == "__main__":
    main()
