"""Skip-gram pre-training of word vectors with negative sampling.

Each center word predicts its surrounding words (radius `window` per side).
Negatives are drawn from the unigram distribution raised to the 3/4 power.
The learning rate decays linearly over all updates, floored at 1% of the
initial rate. Training is single-threaded so seeded runs are bit-identical.
"""

import numpy as np

from .mathcore import DTYPE, make_rng, sigmoid

LR_FLOOR_FRAC = 0.01


def iter_pairs(indices, window):
    """Enumerate (center, context) positive pairs for one encoded sentence."""
    n = len(indices)
    for t in range(n):
        for j in range(max(0, t - window), min(n, t + window + 1)):
            if j != t:
                yield indices[t], indices[j]


def count_pairs(sentences, window):
    total = 0
    for s in sentences:
        n = len(s)
        for t in range(n):
            total += min(n, t + window + 1) - max(0, t - window) - 1
    return total


def build_noise_cdf(counts):
    """Cumulative noise distribution proportional to count^0.75.

    Falls back to uniform when fewer than two tokens have positive counts,
    so sampling an index different from the excluded one always terminates.
    """
    counts = np.asarray(counts, dtype=np.float64)
    if counts.size < 2:
        raise ValueError("noise distribution needs a vocabulary of at least 2")
    weights = counts ** 0.75
    if np.count_nonzero(weights) < 2:
        weights = np.ones_like(weights)
    cdf = np.cumsum(weights / weights.sum())
    cdf[-1] = 1.0
    return cdf


def negative_sample(rng, cdf, exclude):
    """Draw one index from the noise distribution, never equal to `exclude`."""
    while True:
        idx = int(np.searchsorted(cdf, rng.random(), side="right"))
        if idx != exclude:
            return idx


def linear_decay_lr(lr0, processed, total):
    """lr0 * (1 - processed/total), floored at lr0/100."""
    return max(lr0 * (1.0 - processed / total), lr0 * LR_FLOOR_FRAC)


class SkipGram:
    def __init__(self, vocab_size, dim=100, window=5, negatives=5, lr0=0.05,
                 epochs=5, seed=0):
        if vocab_size < 2:
            raise ValueError("vocabulary must have at least 2 tokens")
        self.vocab_size = vocab_size
        self.dim = dim
        self.window = window
        self.negatives = negatives
        self.lr0 = lr0
        self.epochs = epochs
        self.rng = make_rng(seed)
        bound = 0.5 / dim
        self.input_vectors = self.rng.uniform(
            -bound, bound, size=(vocab_size, dim)
        ).astype(DTYPE)
        self.output_vectors = np.zeros((vocab_size, dim), dtype=DTYPE)

    def train(self, sentences):
        """Train on encoded sentences (lists of token indices); returns the
        input vectors, one row per vocabulary word."""
        sentences = list(sentences)
        if not sentences:
            raise ValueError("empty pre-training corpus")
        counts = np.zeros(self.vocab_size, dtype=np.int64)
        for s in sentences:
            for idx in s:
                counts[idx] += 1
        cdf = build_noise_cdf(counts)
        total_updates = self.epochs * count_pairs(sentences, self.window)
        if total_updates == 0:
            raise ValueError("corpus yields no training pairs")

        inp, out = self.input_vectors, self.output_vectors
        processed = 0
        for _ in range(self.epochs):
            for s in sentences:
                for center, context in iter_pairs(s, self.window):
                    lr = linear_decay_lr(self.lr0, processed, total_updates)
                    processed += 1
                    center_vec = inp[center]
                    grad_center = np.zeros(self.dim, dtype=DTYPE)
                    # positive example plus k noise words
                    for sample, label in self._samples(context, cdf):
                        z = sigmoid(np.dot(center_vec, out[sample]))
                        g = DTYPE((label - z) * lr)
                        grad_center += g * out[sample]
                        out[sample] += g * center_vec
                    inp[center] += grad_center
        if not np.all(np.isfinite(inp)):
            raise FloatingPointError("non-finite word vectors after training")
        return inp

    def _samples(self, context, cdf):
        yield context, 1.0
        for _ in range(self.negatives):
            yield negative_sample(self.rng, cdf, context), 0.0


def train_skipgram(sentences, vocab_size, **kwargs):
    """Convenience wrapper; returns the trained word-vector matrix."""
    return SkipGram(vocab_size, **kwargs).train(sentences)
