#!/usr/bin/env python3
"""Generates the golden evaluation fixture.

Builds a deterministic synthetic qrels/run pair and computes per-topic and
mean ndcg@10 / ndcg@20 / map with trec_eval-compatible semantics (runs sorted
by score descending with ties broken by doc id descending, linear-gain
ndcg_cut, MAP divided by the total number of relevant docs, topics judged but
absent from the run scoring 0 and staying in the mean). The expected values
are frozen into expected.json; the C++ acceptance suite must reproduce them
to 1e-4.

Usage: python3 gen_golden.py <output_dir>
"""

import json
import math
import random
import sys
from pathlib import Path


def build_collection(rng):
    qrels = {}   # topic -> {doc: grade}
    run = {}     # topic -> [(doc, score)]
    topics = [f"{700 + t}" for t in range(10)]
    for t, topic in enumerate(topics):
        docs = [f"G{t}-{d:03d}" for d in range(rng.randint(20, 45))]
        qrels[topic] = {doc: rng.choices([0, 1, 2], weights=[6, 3, 1])[0] for doc in docs}
        if t == 7:  # judged but missing from the run: scores 0, stays in the mean
            continue
        retrieved = [doc for doc in docs if rng.random() < 0.8]
        retrieved += [f"U{t}-{d}" for d in range(rng.randint(0, 5))]  # unjudged docs
        rng.shuffle(retrieved)
        # quantized scores force ties so the doc-id tie rule matters
        run[topic] = [(doc, round(rng.uniform(0.0, 8.0) * 4) / 4) for doc in retrieved]
    return qrels, run


def ranked_docs(entries):
    by_doc_desc = sorted(entries, key=lambda e: e[0], reverse=True)
    by_score_desc = sorted(by_doc_desc, key=lambda e: e[1], reverse=True)  # stable
    return [doc for doc, score in by_score_desc]


def ndcg_cut(ranking, judgments, k):
    gains = sorted((g for g in judgments.values() if g > 0), reverse=True)
    if not gains:
        return 0.0
    ideal = sum(g / math.log2(i + 2) for i, g in enumerate(gains[:k]))
    dcg = sum(judgments.get(doc, 0) / math.log2(i + 2) for i, doc in enumerate(ranking[:k]))
    return dcg / ideal


def average_precision(ranking, judgments):
    total_relevant = sum(1 for g in judgments.values() if g > 0)
    if total_relevant == 0:
        return 0.0
    hits, acc = 0, 0.0
    for i, doc in enumerate(ranking):
        if judgments.get(doc, 0) > 0:
            hits += 1
            acc += hits / (i + 1)
    return acc / total_relevant


def main():
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "fixtures/golden")
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(160920)
    qrels, run = build_collection(rng)

    qrels_lines = []
    for topic in sorted(qrels):
        for doc in sorted(qrels[topic]):
            qrels_lines.append(f"{topic} 0 {doc} {qrels[topic][doc]}")
    (out / "qrels.txt").write_text("\n".join(qrels_lines) + "\n")

    run_lines = []
    for topic in sorted(run):
        for rank, doc in enumerate(ranked_docs(run[topic]), start=1):
            score = dict(run[topic])[doc]
            run_lines.append(f"{topic} Q0 {doc} {rank} {score} golden")
    (out / "run.txt").write_text("\n".join(run_lines) + "\n")

    per_topic = {}
    means = {}
    metrics = {"ndcg@10": lambda r, j: ndcg_cut(r, j, 10),
               "ndcg@20": lambda r, j: ndcg_cut(r, j, 20),
               "map": average_precision}
    for name, fn in metrics.items():
        total = 0.0
        for topic in sorted(qrels):
            ranking = ranked_docs(run[topic]) if topic in run else []
            value = fn(ranking, qrels[topic])
            per_topic.setdefault(topic, {})[name] = value
            total += value
        means[name] = total / len(qrels)

    (out / "expected.json").write_text(json.dumps(
        {"generator": "gen_golden.py (trec_eval-compatible reference computation)",
         "per_topic": per_topic, "mean": means, "topic_count": len(qrels)},
        indent=2, sort_keys=True) + "\n")
    print(f"wrote fixture with {len(qrels)} topics to {out}")
    for name, value in sorted(means.items()):
        print(f"  mean {name} = {value:.6f}")


if __name__ == "__main__":
    main()
