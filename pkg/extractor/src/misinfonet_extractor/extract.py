"""Run pretrained encoders over a corpus and write embedding files.

Each checkpoint is loaded with AutoModel; encoder-decoder models
contribute their encoder (via get_encoder), encoder-only models are used
as-is. Documents are tokenized with truncation at max_length, run in
batches, and pooled to one vector per document. Output row order always
matches corpus order.
"""

import struct
import time

import numpy as np
import torch
from transformers import AutoModel, AutoTokenizer


class ExtractError(RuntimeError):
    pass


EMB_MAGIC = b"MREB"
EMB_VERSION = 1
POOLINGS = ("mean", "first")


def write_embeddings(path, matrix):
    """(n, dim) float matrix -> MREB file: magic, u32 version/n/dim, f32 LE."""
    matrix = np.asarray(matrix)
    if matrix.ndim != 2:
        raise ExtractError(f"embeddings must be 2-D, got shape {matrix.shape}")
    n, dim = matrix.shape
    with open(path, "wb") as fh:
        fh.write(EMB_MAGIC)
        fh.write(struct.pack("<III", EMB_VERSION, n, dim))
        fh.write(np.ascontiguousarray(matrix, dtype="<f4").tobytes())


def write_labels(path, ids, labels):
    """id,label CSV in corpus order."""
    if len(ids) != len(labels):
        raise ExtractError(f"{len(ids)} ids vs {len(labels)} labels")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("id,label\n")
        for i, lab in zip(ids, labels):
            fh.write(f"{i},{lab}\n")


def load_encoder(path):
    """Return (tokenizer, encoder module, hidden_size) for a checkpoint.

    get_encoder() is used only when it yields a standalone text encoder
    (one that embeds input_ids itself); on encoder-only models it returns
    the bare layer stack, in which case the full model is the encoder.
    """
    tokenizer = AutoTokenizer.from_pretrained(path)
    model = AutoModel.from_pretrained(path)
    model.eval()
    encoder = model
    get = getattr(model, "get_encoder", None)
    if callable(get):
        try:
            candidate = get()
        except NotImplementedError:
            candidate = None
        if candidate is not None and hasattr(candidate, "get_input_embeddings") \
                and candidate.get_input_embeddings() is not None:
            encoder = candidate
    return tokenizer, encoder, int(model.config.hidden_size)


def encode_documents(docs, tokenizer, encoder, batch_size=16, pooling="mean",
                     max_length=512):
    """One pooled vector per document, rows in corpus order.

    pooling "mean" averages final hidden states over non-padding positions;
    "first" takes the first position's state. A document that tokenizes to
    zero tokens cannot be pooled and is reported by id.
    """
    if pooling not in POOLINGS:
        raise ExtractError(f"unknown pooling {pooling!r}, expected one of {POOLINGS}")
    if batch_size < 1:
        raise ExtractError(f"batch_size {batch_size} < 1")
    rows = []
    with torch.no_grad():
        for lo in range(0, len(docs), batch_size):
            chunk = docs[lo:lo + batch_size]
            enc = tokenizer([d["text"] for d in chunk], padding=True,
                            truncation=True, max_length=max_length,
                            return_tensors="pt")
            mask = enc["attention_mask"]
            lengths = mask.sum(dim=1)
            for d, n in zip(chunk, lengths.tolist()):
                if n == 0:
                    raise ExtractError(
                        f"document {d['id']!r} tokenizes to zero tokens")
            out = encoder(input_ids=enc["input_ids"], attention_mask=mask)
            hidden = out.last_hidden_state
            if pooling == "mean":
                m = mask.unsqueeze(-1).to(hidden.dtype)
                pooled = (hidden * m).sum(dim=1) / m.sum(dim=1)
            else:
                pooled = hidden[:, 0, :]
            rows.append(pooled.to(torch.float32).cpu().numpy())
    if not rows:
        raise ExtractError("empty corpus")
    return np.concatenate(rows, axis=0)


def extract_corpus(docs, model_paths, out_dir, batch_size=16, pooling="mean",
                   max_length=512, log=None):
    """Write one .mreb per named checkpoint plus labels.csv into out_dir.

    model_paths maps output basename -> checkpoint path, e.g.
    {"bart": ..., "roberta": ...} produces bart.mreb and roberta.mreb.
    Returns {name: {"seconds": wall_clock, "dim": hidden_size}}.
    """
    if not docs:
        raise ExtractError("empty corpus")
    report = {}
    for name, path in model_paths.items():
        t0 = time.perf_counter()
        tokenizer, encoder, hidden = load_encoder(path)
        mat = encode_documents(docs, tokenizer, encoder, batch_size=batch_size,
                               pooling=pooling, max_length=max_length)
        if mat.shape != (len(docs), hidden):
            raise ExtractError(f"{name}: expected {(len(docs), hidden)} "
                               f"embeddings, got {mat.shape}")
        write_embeddings(f"{out_dir}/{name}.mreb", mat)
        seconds = time.perf_counter() - t0
        report[name] = {"seconds": seconds, "dim": hidden}
        if log is not None:
            log(f"{name}: {len(docs)} docs, dim {hidden}, {seconds:.1f}s")
    write_labels(f"{out_dir}/labels.csv", [d["id"] for d in docs],
                 [d["label"] for d in docs])
    return report
