#!/usr/bin/env python3
"""Reference provider for the line-delimited JSON protocol.

Reads one request object per stdin line and answers one reply object per
stdout line. Candidates come from a phrase table (surface<TAB>score, # for
comments); the mock knows nothing about any grammar, so it proposes the
global top-k and leaves bundle filtering to the caller.

Usage: provider_mock.py TABLE [--fail-after N] [--garbage]
  --fail-after N  exit abruptly after answering N requests
  --garbage       answer every request with a non-JSON line
"""

import argparse
import json
import sys

PUNCT = ".,;:!?"


def normalize(token: str) -> str:
    token = token.strip(PUNCT)
    return token[:1].lower() + token[1:] if token else token


def load_table(path: str) -> dict:
    table = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            if "\t" not in line:
                sys.exit(f"{path}:{lineno}: no tab separator")
            surface, score = line.split("\t", 1)
            surface = surface.strip()
            if surface in table:
                sys.exit(f"{path}:{lineno}: duplicate surface {surface!r}")
            table[surface] = float(score.strip())
    return table


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("table")
    parser.add_argument("--fail-after", type=int, default=-1)
    parser.add_argument("--garbage", action="store_true")
    args = parser.parse_args()

    table = load_table(args.table)
    ranked = sorted(table.items(), key=lambda kv: (-kv[1], kv[0]))

    answered = 0
    for line in sys.stdin:
        if not line.strip():
            continue
        if args.fail_after >= 0 and answered >= args.fail_after:
            return
        if args.garbage:
            print("not json at all")
            sys.stdout.flush()
            answered += 1
            continue
        request = json.loads(line)
        k = int(request["k"])
        sentence = request["sentence"]
        score = sum(table.get(normalize(t), 0.0) for t in sentence.split())
        candidates = [
            {"score": s, "surface": surf} for surf, s in ranked[: max(k, 0)]
        ]
        print(json.dumps({"score": score, "candidates": candidates}))
        sys.stdout.flush()
        answered += 1


if __name__ == "__main__":
    main()
