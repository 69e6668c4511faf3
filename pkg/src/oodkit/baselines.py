"""Comparison methods: n-gram BoW and TF-IDF vectors, Neural BoW, nearest
neighbor distance scoring, and one-vs-rest linear classifiers for the
combination-of-binary-classifiers and in-domain-verification detectors.
"""

from dataclasses import dataclass

import numpy as np

from .mathcore import make_rng, sigmoid


def extract_ngrams(tokens, n_max):
    """All n-grams of the sentence for n = 1..n_max, as token tuples."""
    out = []
    for n in range(1, n_max + 1):
        out.extend(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))
    return out


class NgramIndex:
    """Column index and document frequencies of training-set n-grams."""

    def __init__(self, n_max=1):
        if n_max not in (1, 2, 3):
            raise ValueError("n_max must be 1, 2 or 3")
        self.n_max = n_max
        self.columns = {}
        self.df = None
        self.num_docs = 0

    def fit(self, token_lists):
        token_lists = list(token_lists)
        if not token_lists:
            raise ValueError("cannot index an empty corpus")
        self.num_docs = len(token_lists)
        doc_freq = {}
        for tokens in token_lists:
            for ng in set(extract_ngrams(tokens, self.n_max)):
                doc_freq[ng] = doc_freq.get(ng, 0) + 1
        ngrams = sorted(doc_freq)
        self.columns = {ng: i for i, ng in enumerate(ngrams)}
        self.df = np.array([doc_freq[ng] for ng in ngrams], dtype=np.int64)
        return self

    @property
    def dim(self):
        return len(self.columns)


@dataclass
class SparseVector:
    columns: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if len(self.columns) != len(self.values):
            raise ValueError("columns and values must have equal length")
        if len(self.columns) > 1 and not np.all(np.diff(self.columns) > 0):
            raise ValueError("columns must be strictly increasing")

    def to_dense(self, dim):
        out = np.zeros(dim, dtype=np.float64)
        out[self.columns] = self.values
        return out


def bow_vector(tokens, index):
    """Raw n-gram counts over the indexed columns; unseen n-grams are dropped."""
    counts = {}
    for ng in extract_ngrams(tokens, index.n_max):
        col = index.columns.get(ng)
        if col is not None:
            counts[col] = counts.get(col, 0) + 1
    cols = np.array(sorted(counts), dtype=np.int64)
    vals = np.array([counts[c] for c in cols], dtype=np.float64)
    return SparseVector(cols, vals)


def tfidf_vector(tokens, index):
    """tf * ln(N/df) weights; n-grams occurring in every document weigh 0 and
    are dropped along with unseen ones."""
    bow = bow_vector(tokens, index)
    idf = np.log(index.num_docs / index.df[bow.columns])
    weights = bow.values * idf
    keep = weights != 0.0
    return SparseVector(bow.columns[keep], weights[keep])


def neural_bow(tokens, word_vectors, vocab):
    """Element-wise average of the sentence's word vectors (UNK for unseen)."""
    if not tokens:
        raise ValueError("empty sentence")
    indices = vocab.encode_tokens(tokens)
    return np.mean(word_vectors[indices], axis=0)


def jaccard_distance(a, b):
    """1 - |a & b| / |a | b| over token sets."""
    a, b = set(a), set(b)
    if not a or not b:
        raise ValueError("jaccard distance needs nonempty sets")
    return 1.0 - len(a & b) / len(a | b)


def euclidean_distance(u, v):
    d = np.asarray(u, dtype=np.float64) - np.asarray(v, dtype=np.float64)
    return float(np.sqrt(np.dot(d, d)))


class NearestNeighborDetector:
    """Nearest-neighbor distance ratio: an item scores high (OOD-like) when
    it sits farther from its nearest training item than that item sits from
    its own nearest neighbor (its local density)."""

    def __init__(self, train_items, distance, eps=1e-9):
        self.items = list(train_items)
        if len(self.items) < 2:
            raise ValueError("need at least 2 training items")
        self.distance = distance
        self.eps = eps
        self._density = []
        for i, item in enumerate(self.items):
            self._density.append(min(
                distance(item, other)
                for j, other in enumerate(self.items) if j != i
            ))

    def score(self, item):
        dists = [self.distance(item, t) for t in self.items]
        nn = int(np.argmin(dists))  # first minimum on ties
        return dists[nn] / max(self.eps, self._density[nn])


def nn_d_score(item, train_items, distance=jaccard_distance, eps=1e-9):
    return NearestNeighborDetector(train_items, distance, eps).score(item)


class LinearOvrClassifier:
    """Per-domain linear classifiers trained with a hinge-loss subgradient;
    stands in for kernel machines at this scale."""

    def __init__(self, domains, dim, lr0=0.1, l2=1e-4, epochs=50, seed=0):
        if len(domains) < 2:
            raise ValueError("one-vs-rest needs at least 2 domains")
        self.domains = sorted(domains)
        self.domain_index = {d: i for i, d in enumerate(self.domains)}
        self.W = np.zeros((len(self.domains), dim), dtype=np.float64)
        self.b = np.zeros(len(self.domains), dtype=np.float64)
        self.lr0 = lr0
        self.l2 = l2
        self.epochs = epochs
        self.seed = seed

    def fit(self, X, labels):
        X = np.asarray(X, dtype=np.float64)
        if X.shape[0] != len(labels):
            raise ValueError("X rows and labels must align")
        y = np.full((len(self.domains), X.shape[0]), -1.0)
        for n, lab in enumerate(labels):
            y[self.domain_index[lab], n] = 1.0
        rng = make_rng(self.seed)
        for epoch in range(self.epochs):
            lr = self.lr0 / (1.0 + epoch)
            for n in rng.permutation(X.shape[0]):
                x = X[n]
                margins = self.W @ x + self.b
                for d in range(len(self.domains)):
                    yd = y[d, n]
                    if yd * margins[d] < 1.0:
                        self.W[d] += lr * (yd * x - self.l2 * self.W[d])
                        self.b[d] += lr * yd
                    else:
                        self.W[d] -= lr * self.l2 * self.W[d]
        return self

    def margins(self, x):
        return self.W @ np.asarray(x, dtype=np.float64) + self.b

    def cbc_score(self, x):
        """Max margin over domains; the sentence is rejected by the
        combination rule when every classifier rejects, i.e. when this falls
        below the swept threshold."""
        return float(np.max(self.margins(x)))

    def idv_score(self, x):
        """Max sigmoid-calibrated confidence over domains, in (0, 1)."""
        return float(np.max(sigmoid(self.margins(x))))


def train_ovr(X, labels, **kwargs):
    domains = sorted(set(labels))
    clf = LinearOvrClassifier(domains, np.asarray(X).shape[1], **kwargs)
    return clf.fit(X, labels)
