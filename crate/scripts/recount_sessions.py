#!/usr/bin/env python3
"""Independent recount of the session metrics.

Reads a transcript JSONL (session headers, turns, verdicts) plus the
persona JSONL it was simulated from, and recomputes, with no code shared
with the Rust implementation:

  * success rate (percent, rounded half-up to 2 decimals)
  * average total turns of successful sessions
  * average user-utterance word count per communication type
  * top secondary goals / general interests by session outcome

Usage:
    recount_sessions.py SESSIONS_JSONL PERSONAS_JSONL
"""

import json
import math
import sys
from collections import Counter, defaultdict


def round2(x):
    return math.floor(x * 100 + 0.5) / 100


def read_jsonl(path):
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                yield json.loads(line)


def read_sessions(path):
    sessions = []
    for record in read_jsonl(path):
        kind = record.pop("type")
        if kind == "session":
            record["turns"] = []
            sessions.append(record)
        elif kind == "turn":
            sessions[-1]["turns"].append(record)
    return sessions


def main(argv):
    if len(argv) != 3:
        raise SystemExit(__doc__)
    sessions = read_sessions(argv[1])
    personas = {p["id"]: p for p in read_jsonl(argv[2])}

    successes = [s for s in sessions if s["outcome"]["kind"] == "success"]
    print(f"sessions:            {len(sessions)}")
    print(f"successful:          {len(successes)}")
    print(f"success_rate:        {round2(100 * len(successes) / len(sessions))}")
    total_turns = sum(len(s["turns"]) for s in successes)
    print(f"avg_turns_success:   {round2(total_turns / len(successes))}")

    words = defaultdict(int)
    turns = defaultdict(int)
    for s in sessions:
        comm = personas[s["persona_id"]]["communication_type"]
        for t in s["turns"]:
            if t["speaker"] == "user":
                turns[comm] += 1
                words[comm] += len(t["utterance"].split())
    for comm in sorted(turns):
        print(f"avg_words_{comm}:    {round2(words[comm] / turns[comm])} "
              f"({words[comm]} words / {turns[comm]} turns)")

    for facet, key in [("secondary_goals", lambda p: p["user_goals"]["secondary_goals"]),
                       ("general_interests", lambda p: p["general_interests"])]:
        for achieved in (True, False):
            counter = Counter()
            for s in sessions:
                if (s["outcome"]["kind"] == "success") != achieved:
                    continue
                for value in set(key(personas[s["persona_id"]])):
                    counter[value] += 1
            ranked = sorted(counter.items(), key=lambda kv: (-kv[1], kv[0]))
            print(f"{facet} achieved={achieved}: {ranked}")


if __name__ == "__main__":
    main(sys.argv)
