#!/usr/bin/env python3
"""Headless annotation client: answers every query with ground truth.

Points at a running `ceal serve` instance, creates a session on the
synthetic dataset, and works through the query batches like a (perfect)
human annotator would, printing progress as the loop advances.
"""

import argparse
import time

import requests

from ceal import data, harness

SESSION_SPEC = {
    "dataset": {
        "kind": "synthetic",
        "class_count": 4,
        "per_class": 50,
        "dim": 16,
        "separation": 3.0,
        "seed": 7,
    },
    "ceal": {"query_size": 10, "seed": 0},
}


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--base-url", default="http://127.0.0.1:8080")
    args = parser.parse_args()

    spec = harness.spec_from_dict(
        {"dataset": SESSION_SPEC["dataset"], "ceal": SESSION_SPEC["ceal"]}
    )
    train_pool, _ = data.split(harness.load_source(spec.source), spec.split)

    created = requests.post(f"{args.base_url}/sessions", json=SESSION_SPEC).json()
    sid = created["session_id"]
    print(f"session {sid} created, phase={created['phase']}")

    while True:
        status = requests.get(f"{args.base_url}/sessions/{sid}/status").json()
        if status["phase"] == "finished":
            break
        if status["phase"] != "awaiting_labels":
            time.sleep(0.05)
            continue
        items = requests.get(f"{args.base_url}/sessions/{sid}/batch").json()["items"]
        labels = [
            {"sample_id": it["sample_id"], "label": int(train_pool.labels[it["sample_id"]])}
            for it in items
        ]
        requests.post(f"{args.base_url}/sessions/{sid}/labels", json={"labels": labels})
        print(
            f"iteration {status['iteration']}: labeled {len(labels)} samples, "
            f"pct={status['pct_labeled']:.2f} acc={status['test_accuracy']:.3f} "
            f"delta={status['delta']:.4f}"
        )

    print(f"finished: pct_labeled={status['pct_labeled']:.2f} "
          f"final accuracy={status['test_accuracy']:.3f}")


if __name__ == "__main__":
    main()
