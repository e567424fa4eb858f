"""JSONL corpus reading and writing.

One JSON object per line with exactly the fields id, text, label. Blank
lines are skipped. Errors carry 1-based line numbers.
"""

import json


class CorpusError(ValueError):
    pass


REQUIRED_FIELDS = ("id", "text", "label")


def read_corpus(path):
    """Return a list of {id, text, label} dicts in file order."""
    docs = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise CorpusError(f"{path}: line {lineno}: invalid JSON ({e.msg})")
            if not isinstance(obj, dict):
                raise CorpusError(f"{path}: line {lineno}: expected an object, "
                                  f"got {type(obj).__name__}")
            missing = [f for f in REQUIRED_FIELDS if f not in obj]
            if missing:
                raise CorpusError(f"{path}: line {lineno}: missing fields {missing}")
            docs.append({"id": str(obj["id"]), "text": str(obj["text"]),
                         "label": str(obj["label"])})
    return docs


def write_corpus(path, docs):
    with open(path, "w", encoding="utf-8") as fh:
        for d in docs:
            fh.write(json.dumps({"id": d["id"], "text": d["text"],
                                 "label": d["label"]}, ensure_ascii=False))
            fh.write("\n")
