import json


def parse_labeling(text):
    """Parse labeling JSONL into {session_id: [label, ...]}."""
    out = {}
    for line in text.splitlines():
        if line.strip():
            row = json.loads(line)
            out[row["session_id"]] = row["labels"]
    return out
