"""Corpus analysis: token statistics, top unigrams, TFIDF, NMF topics.

Two tokenizer stages: the stats stage keeps punctuation as tokens and
preserves case (document-length statistics); the modeling stage lowercases
and drops punctuation and stopwords (unigram ranking, TFIDF, topics).
"""

import io
import re
from dataclasses import dataclass, field

import numpy as np

from .tensor import seeded_rng

_STATS_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)
_WORD_RE = re.compile(r"\w+", re.UNICODE)

# compact English stopword list; callers may pass their own set
DEFAULT_STOPWORDS = frozenset("""
a about above after again against all am an and any are aren as at be because
been before being below between both but by can cannot could couldn did didn
do does doesn doing don down during each few for from further had hadn has
hasn have haven having he her here hers herself him himself his how i if in
into is isn it its itself just ll m ma me mightn more most mustn my myself no
nor not now o of off on once only or other our ours ourselves out over own re
s same shan she should shouldn so some such t than that the their theirs them
themselves then there these they this those through to too under until up ve
very was wasn we were weren what when where which while who whom why will
with won would wouldn y you your yours yourself yourselves
""".split())


def tokenize(text, stage="stats", stopwords=None):
    if stage == "stats":
        return _STATS_RE.findall(text)
    if stage == "modeling":
        stop = DEFAULT_STOPWORDS if stopwords is None else stopwords
        return [t for t in (m.group(0).lower() for m in _WORD_RE.finditer(text))
                if t not in stop]
    raise ValueError(f"unknown tokenizer stage {stage!r}")


@dataclass
class ClassTokenStats:
    docs: int
    mean: float
    min: int
    max: int
    stddev: float      # population
    unique: int
    total: int


@dataclass
class TokenStats:
    per_class: dict
    overall: ClassTokenStats


def _stats_for(counts, uniq):
    arr = np.asarray(counts, dtype=np.float64)
    return ClassTokenStats(docs=len(counts), mean=float(arr.mean()),
                           min=int(arr.min()), max=int(arr.max()),
                           stddev=float(arr.std()), unique=len(uniq),
                           total=int(arr.sum()))


def token_stats(docs):
    """Stats-stage token statistics per class and over the whole corpus."""
    if not docs:
        raise ValueError("empty corpus")
    counts = {}
    uniq = {}
    all_counts = []
    all_uniq = set()
    for d in docs:
        toks = tokenize(d.text, "stats")
        counts.setdefault(d.label, []).append(len(toks))
        uniq.setdefault(d.label, set()).update(toks)
        all_counts.append(len(toks))
        all_uniq.update(toks)
    per_class = {lab: _stats_for(counts[lab], uniq[lab]) for lab in sorted(counts)}
    return TokenStats(per_class=per_class, overall=_stats_for(all_counts, all_uniq))


def _count_terms(docs, stopwords):
    freq = {}
    for d in docs:
        for t in tokenize(d.text, "modeling", stopwords):
            freq[t] = freq.get(t, 0) + 1
    return freq


def top_unigrams(docs, n=10, stopwords=None):
    """Modeling-stage terms by corpus frequency; ties break lexicographically."""
    freq = _count_terms(docs, stopwords)
    return [t for t, _ in sorted(freq.items(), key=lambda kv: (-kv[1], kv[0]))[:n]]


def top_unigrams_by_class(docs, n=10, stopwords=None):
    by_class = {}
    for d in docs:
        by_class.setdefault(d.label, []).append(d)
    return {lab: top_unigrams(by_class[lab], n, stopwords) for lab in sorted(by_class)}


@dataclass
class TfidfModel:
    vocabulary: dict     # term -> column
    idf: np.ndarray
    weights: np.ndarray  # (n_docs, n_terms), rows L2-normalized


def tfidf(docs, stopwords=None):
    """Raw term counts times smoothed idf = ln((1+N)/(1+df)) + 1, L2 rows."""
    token_lists = [tokenize(d.text, "modeling", stopwords) for d in docs]
    terms = sorted({t for toks in token_lists for t in toks})
    if not terms:
        raise ValueError("empty vocabulary after modeling-stage tokenization")
    vocab = {t: j for j, t in enumerate(terms)}
    N = len(docs)
    counts = np.zeros((N, len(terms)), dtype=np.float64)
    for i, toks in enumerate(token_lists):
        for t in toks:
            counts[i, vocab[t]] += 1.0
    df = (counts > 0).sum(axis=0)
    idf = np.log((1.0 + N) / (1.0 + df)) + 1.0
    W = counts * idf
    norms = np.linalg.norm(W, axis=1, keepdims=True)
    W = np.divide(W, norms, out=np.zeros_like(W), where=norms > 0)
    return TfidfModel(vocabulary=vocab, idf=idf, weights=W)


@dataclass
class NmfModel:
    W: np.ndarray
    H: np.ndarray
    k: int
    objective_history: list = field(default_factory=list)


def nmf_fit(V, k, iters=200, rng=None):
    """Multiplicative-update NMF minimizing the Frobenius objective.

    Entries stay positive via 1e-12 flooring; the recorded objective
    (Frobenius norm of the residual) is non-increasing per iteration.
    """
    V = np.asarray(V, dtype=np.float64)
    if V.size and V.min() < 0:
        raise ValueError(f"NMF input has negative entries (min {V.min()})")
    if k < 1:
        raise ValueError(f"rank {k} < 1")
    if rng is None:
        rng = seeded_rng(0)
    n, m = V.shape
    eps = 1e-12
    scale = np.sqrt(max(V.mean(), eps) / k)
    W = np.maximum(rng.random((n, k)) * scale, eps)
    H = np.maximum(rng.random((k, m)) * scale, eps)
    history = [float(np.linalg.norm(V - W @ H))]
    for _ in range(iters):
        H *= (W.T @ V) / np.maximum(W.T @ W @ H, eps)
        np.maximum(H, eps, out=H)
        W *= (V @ H.T) / np.maximum(W @ (H @ H.T), eps)
        np.maximum(W, eps, out=W)
        history.append(float(np.linalg.norm(V - W @ H)))
    return NmfModel(W=W, H=H, k=k, objective_history=history)


def top_topic_terms(model, vocabulary, n=10):
    """Top-n terms of the topic carrying the largest document mass."""
    if isinstance(vocabulary, dict):
        terms = [None] * len(vocabulary)
        for t, j in vocabulary.items():
            terms[j] = t
    else:
        terms = list(vocabulary)
    topic = int(np.argmax(model.W.sum(axis=0)))
    weights = model.H[topic]
    order = sorted(range(len(terms)), key=lambda j: (-weights[j], terms[j]))
    return [terms[j] for j in order[:n]]


def load_word_vectors(path):
    """Text table: one line per term, term then D space-separated decimals."""
    vecs = {}
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            term, vals = parts[0], parts[1:]
            if dim is None:
                dim = len(vals)
            if len(vals) != dim or dim == 0:
                raise ValueError(f"{path}: line {lineno}: expected {dim} values, "
                                 f"got {len(vals)}")
            vecs[term] = np.array([float(v) for v in vals], dtype=np.float64)
    if not vecs:
        raise ValueError(f"{path}: no vectors found")
    return vecs


def _cos(a, b):
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(a @ b / (na * nb))


def term_set_similarity(a, b, vecs):
    """Mean over a's terms of the best-match cosine against b's terms."""
    if not a or not b:
        raise ValueError("term sets must be non-empty")
    missing = [t for t in list(a) + list(b) if t not in vecs]
    if missing:
        raise ValueError(f"terms without vectors: {sorted(set(missing))}")
    best = [max(_cos(vecs[ta], vecs[tb]) for tb in b) for ta in a]
    return float(np.mean(best))


# ---- report emitters --------------------------------------------------------

def stats_to_csv(stats):
    buf = io.StringIO()
    buf.write("class,docs,mean,min,max,stddev,unique,total\n")

    def row(name, s):
        buf.write(f"{name},{s.docs},{s.mean:.2f},{s.min},{s.max},{s.stddev:.2f},"
                  f"{s.unique},{s.total}\n")

    for lab, s in stats.per_class.items():
        row(lab, s)
    row("all", stats.overall)
    return buf.getvalue()


def unigrams_to_csv(per_class, overall):
    buf = io.StringIO()
    buf.write("class,rank,term\n")
    for lab, terms in per_class.items():
        for r, t in enumerate(terms, start=1):
            buf.write(f"{lab},{r},{t}\n")
    for r, t in enumerate(overall, start=1):
        buf.write(f"all,{r},{t}\n")
    return buf.getvalue()


def topics_to_csv(per_class_terms):
    buf = io.StringIO()
    buf.write("class,rank,term\n")
    for lab, terms in per_class_terms.items():
        for r, t in enumerate(terms, start=1):
            buf.write(f"{lab},{r},{t}\n")
    return buf.getvalue()
