"""Per-class subsampling of a corpus, without replacement."""

import numpy as np


class SampleError(ValueError):
    pass


def sample_corpus(docs, per_class, seed=0):
    """Pick per_class documents from every class, without replacement.

    The result keeps the original corpus order. A class with fewer than
    per_class documents is an error naming that class.
    """
    if per_class < 1:
        raise SampleError(f"per_class {per_class} < 1")
    by_class = {}
    for pos, d in enumerate(docs):
        by_class.setdefault(d["label"], []).append(pos)
    rng = np.random.default_rng(seed)
    keep = []
    for label in sorted(by_class):
        positions = by_class[label]
        if len(positions) < per_class:
            raise SampleError(f"class {label!r} has {len(positions)} documents, "
                              f"need {per_class}")
        chosen = rng.choice(len(positions), size=per_class, replace=False)
        keep.extend(positions[i] for i in chosen)
    keep.sort()
    return [docs[i] for i in keep]
