"""Regenerates the pipeline fixture corpus in this directory."""
import json
import pathlib

HERE = pathlib.Path(__file__).resolve().parent

TOPICS = [
    ("c1", "real", "The city council approved the new bike lane budget on Tuesday."),
    ("c2", "fake", "Drinking hot water every hour cures all viral infections within a day."),
    ("c3", "real", "The national weather service issued a flood warning for the river valley."),
    ("c4", "fake", "A famous actor was secretly replaced by a body double in 2019."),
    ("c5", "real", "The university published its annual enrollment figures this morning."),
    ("c6", "fake", "Scientists confirmed the moon will disappear for three days next month."),
]

CHECKS = [
    ("Source check", "the post names an identifiable outlet for claim {cid}", 1.0),
    ("Statistic check", "the figures quoted in claim {cid} match public records", 0.8),
    ("Consistency check", "claim {cid} agrees with established knowledge", 0.6),
    ("Tone check", "the wording of claim {cid} is emotionally charged", -0.4),
    ("Date check", "the timeline in claim {cid} is plausible", 0.3),
]


def rationale(cid, steps, label):
    lines = [f"{i + 1}. {name}: {body.format(cid=cid)}." for i, (name, body, _) in enumerate(steps)]
    return "\n".join(lines) + f"\n\nFinal Answer: \\boxed{{{label}}}", lines


def main():
    claims, candidates, weights = [], [], {}
    for cid, label, text in TOPICS:
        claims.append({"id": cid, "text": text, "label": label, "source": "fixture", "split": "train"})
    # A rejected record and a prefix duplicate of c1.
    claims.insert(3, {"id": "c_empty", "text": "   ", "label": "real", "source": "fixture", "split": "train"})
    claims.append({"id": "c7", "text": TOPICS[0][2] + " Officials will review it next year.", "label": "real",
                   "source": "fixture", "split": "eval"})

    sign = {"real": 1.0, "fake": -1.0}
    for n, (cid, label, _) in enumerate(TOPICS):
        good = CHECKS[:3]
        mixed = CHECKS[(n % 2):(n % 2) + 4]
        for index, steps in ((1, good), (2, mixed)):
            raw, lines = rationale(cid + f"-{index}", steps, label)
            record = {"claim_id": cid, "generator": "fixture-gen", "raw_text": raw, "candidate_index": index}
            failing = index == 2 and n < 4
            if failing and n == 0:
                record["raw_text"] = raw.replace(f"\\boxed{{{label}}}", "\\boxed{fake}")
            elif failing and n == 1:
                record["raw_text"] = raw.replace(f"\\boxed{{{label}}}", "the claim looks doubtful")
            elif failing and n == 2:
                record["token_count"] = 5000
            elif failing and n == 3:
                record["raw_text"] = raw + "\n" + " ".join(["the claim is fake"] * 40)
            for line, (_, _, w) in zip(lines, steps):
                weights[line] = sign[label] * w
            candidates.append(record)

    def jsonl(name, rows):
        (HERE / name).write_text("".join(json.dumps(r) + "\n" for r in rows))

    jsonl("claims.jsonl", claims)
    jsonl("candidates.jsonl", candidates)
    (HERE / "weights.json").write_text(json.dumps({"bias": 0.25, "weights": weights}, indent=2, sort_keys=True) + "\n")
    config = {
        "claims": "claims.jsonl",
        "candidates": "candidates.jsonl",
        "output_dir": "out",
        "budget": 4,
        "per_claim_cap": 1,
        "M": 3,
        "seed": 7,
        "backend": {"kind": "synthetic", "weights": "weights.json"},
    }
    (HERE / "config.json").write_text(json.dumps(config, indent=2) + "\n")


if __name__ == "__main__":
    main()
