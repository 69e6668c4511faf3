"""Tokenization, vocabulary, dataset splits, corpus files, synthetic benchmark.

Corpus file format: UTF-8, one sentence per line. Labeled files use
``label<TAB>text`` (exactly one tab per line); unlabeled files are bare text.
Lines starting with ``#`` are ignored.
"""

import string
import warnings
from collections import Counter
from dataclasses import dataclass, field

from .mathcore import derive_seed, make_rng

UNK = "<unk>"
UNK_INDEX = 0
MAX_SENTENCE_TOKENS = 64

# Synthetic sentences mix domain keywords with shared function words at this
# rate, so domains are separable but share surface vocabulary.
KEYWORD_FRAC = 0.6


def tokenize(text):
    """Lowercased whitespace tokens with punctuation stripped from the edges."""
    tokens = [t.strip(string.punctuation) for t in text.lower().split()]
    tokens = [t for t in tokens if t]
    if not tokens:
        raise ValueError("no tokens in text: %r" % text)
    return tokens


class Vocabulary:
    """Bidirectional token/index map; index 0 is reserved for unknown tokens."""

    def __init__(self, tokens, min_count=1):
        self.min_count = min_count
        self.index_to_token = [UNK] + list(tokens)
        self.token_to_index = {t: i for i, t in enumerate(self.index_to_token)}
        if len(self.token_to_index) != len(self.index_to_token):
            raise ValueError("duplicate tokens in vocabulary")

    def __len__(self):
        return len(self.index_to_token)

    def __contains__(self, token):
        return token in self.token_to_index

    def encode(self, token):
        return self.token_to_index.get(token, UNK_INDEX)

    def encode_tokens(self, tokens):
        return [self.encode(t) for t in tokens]

    def decode(self, index):
        return self.index_to_token[index]


def build_vocab(sentences, min_count=1):
    """Index tokens with frequency >= min_count; everything else maps to UNK.

    Ordering is (frequency desc, token asc) so indices are stable across runs.
    """
    counts = Counter()
    n = 0
    for tokens in sentences:
        counts.update(tokens)
        n += 1
    if n == 0:
        raise ValueError("cannot build a vocabulary from zero sentences")
    kept = [t for t, c in counts.items() if c >= min_count]
    kept.sort(key=lambda t: (-counts[t], t))
    return Vocabulary(kept, min_count=min_count)


@dataclass
class LabeledSentence:
    tokens: list
    label: str = None
    origin: str = "ID"

    def __post_init__(self):
        if not self.tokens:
            raise ValueError("sentence has no tokens")
        if self.origin not in ("ID", "OOD"):
            raise ValueError(f"origin must be ID or OOD, got {self.origin!r}")
        if self.origin == "ID" and self.label is None:
            raise ValueError("ID sentences must carry a domain label")


@dataclass
class DatasetSplit:
    train: list
    test_id: list
    test_ood: list = field(default_factory=list)


def split_train_test(id_sentences, seed, train_frac=0.8):
    """Per-domain stratified split with a seeded shuffle (default 80/20)."""
    by_domain = {}
    for s in id_sentences:
        by_domain.setdefault(s.label, []).append(s)
    for domain, group in sorted(by_domain.items()):
        if len(group) < 5:
            raise ValueError(
                f"domain {domain!r} has only {len(group)} sentences; need at least 5"
            )
    rng = make_rng(seed)
    train, test = [], []
    for domain in sorted(by_domain):
        group = list(by_domain[domain])
        order = rng.permutation(len(group))
        n_train = int(round(len(group) * train_frac))
        n_train = min(max(n_train, 1), len(group) - 1)
        for rank, idx in enumerate(order):
            (train if rank < n_train else test).append(group[idx])
    return DatasetSplit(train=train, test_id=test)


@dataclass
class SyntheticSpec:
    """Recipe for the seeded multi-domain benchmark.

    ID and OOD domains draw keywords from disjoint pools; all domains share
    the function-word pool, so unseen keywords are what makes a sentence OOD.
    """

    num_domains: int
    ood_domains: int
    sentences_per_domain: int = 200
    keywords_per_domain: int = 25
    function_words: int = 30
    sentence_len: tuple = (4, 12)
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.sentence_len
        if self.num_domains < 1:
            raise ValueError("need at least one ID domain")
        if self.ood_domains < 0:
            raise ValueError("ood_domains must be >= 0")
        if self.sentences_per_domain < 5:
            raise ValueError("need at least 5 sentences per domain for splitting")
        if self.keywords_per_domain < 1 or self.function_words < 1:
            raise ValueError("keyword and function-word pools must be nonempty")
        if not (1 <= lo <= hi <= MAX_SENTENCE_TOKENS):
            raise ValueError(f"sentence_len must satisfy 1 <= lo <= hi <= {MAX_SENTENCE_TOKENS}")

    @classmethod
    def from_kv(cls, kv):
        def geti(key, default=None):
            if key in kv:
                return int(kv[key])
            if default is None:
                raise ValueError(f"synthetic spec is missing required key {key!r}")
            return default

        return cls(
            num_domains=geti("domains"),
            ood_domains=geti("ood_domains"),
            sentences_per_domain=geti("sentences_per_domain", 200),
            keywords_per_domain=geti("keywords_per_domain", 25),
            function_words=geti("function_words", 30),
            sentence_len=(geti("len_lo", 4), geti("len_hi", 12)),
            seed=geti("seed", 0),
        )

    def id_domain_labels(self):
        return [f"dom{d}" for d in range(self.num_domains)]

    def id_keyword_pool(self, d):
        return [f"k{d}_{i:02d}" for i in range(self.keywords_per_domain)]

    def ood_keyword_pool(self, j):
        return [f"q{j}_{i:02d}" for i in range(self.keywords_per_domain)]

    def function_word_pool(self):
        return [f"f{i:02d}" for i in range(self.function_words)]


def _synth_sentence(rng, keywords, function_words, len_range):
    lo, hi = len_range
    length = int(rng.integers(lo, hi + 1))
    tokens = []
    for _ in range(length):
        if rng.random() < KEYWORD_FRAC:
            tokens.append(keywords[int(rng.integers(len(keywords)))])
        else:
            tokens.append(function_words[int(rng.integers(len(function_words)))])
    return tokens


def synthesize_benchmark(spec):
    """Generate (ID sentences with labels, OOD sentences), deterministic under seed."""
    rng = make_rng(spec.seed)
    functions = spec.function_word_pool()
    id_sentences = []
    for d in range(spec.num_domains):
        keywords = spec.id_keyword_pool(d)
        label = spec.id_domain_labels()[d]
        for _ in range(spec.sentences_per_domain):
            tokens = _synth_sentence(rng, keywords, functions, spec.sentence_len)
            id_sentences.append(LabeledSentence(tokens, label=label, origin="ID"))
    ood_sentences = []
    for j in range(spec.ood_domains):
        keywords = spec.ood_keyword_pool(j)
        for _ in range(spec.sentences_per_domain):
            tokens = _synth_sentence(rng, keywords, functions, spec.sentence_len)
            ood_sentences.append(LabeledSentence(tokens, origin="OOD"))
    return id_sentences, ood_sentences


def synthesize_unlabeled(spec, sentences_per_pool=None):
    """Unlabeled pre-training text covering every keyword pool, ID and OOD alike.

    Stands in for a large generic corpus: word vectors get coverage of words
    that never occur in the ID training sentences.
    """
    rng = make_rng(derive_seed(spec.seed, "unlabeled"))
    n = sentences_per_pool or spec.sentences_per_domain
    functions = spec.function_word_pool()
    pools = [spec.id_keyword_pool(d) for d in range(spec.num_domains)]
    pools += [spec.ood_keyword_pool(j) for j in range(spec.ood_domains)]
    out = []
    for keywords in pools:
        for _ in range(n):
            out.append(_synth_sentence(rng, keywords, functions, spec.sentence_len))
    return out


def _truncate(tokens, counter):
    if len(tokens) > MAX_SENTENCE_TOKENS:
        counter[0] += 1
        return tokens[:MAX_SENTENCE_TOKENS]
    return tokens


def read_corpus_file(path, origin=None):
    """Read sentences from a corpus file; labeled and bare lines cannot mix.

    Labeled files yield origin="ID" sentences, bare files origin="OOD",
    unless overridden.
    """
    sentences = []
    labeled = None
    truncated = [0]
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            ntabs = line.count("\t")
            if labeled is None:
                labeled = ntabs > 0
            if labeled:
                if ntabs != 1:
                    raise ValueError(
                        f"{path}:{lineno}: labeled line must have exactly one tab, found {ntabs}"
                    )
                label, text = line.split("\t")
                if not label.strip():
                    raise ValueError(f"{path}:{lineno}: empty label")
                tokens = _truncate(tokenize(text), truncated)
                sentences.append(
                    LabeledSentence(tokens, label=label.strip(), origin=origin or "ID")
                )
            else:
                if ntabs != 0:
                    raise ValueError(
                        f"{path}:{lineno}: tab in an unlabeled file (labeled and bare lines cannot mix)"
                    )
                tokens = _truncate(tokenize(line), truncated)
                sentences.append(LabeledSentence(tokens, origin=origin or "OOD"))
    if truncated[0]:
        warnings.warn(
            f"{path}: truncated {truncated[0]} sentences to {MAX_SENTENCE_TOKENS} tokens"
        )
    return sentences


def write_corpus_file(path, sentences):
    with open(path, "w", encoding="utf-8") as fh:
        for s in sentences:
            text = " ".join(s.tokens)
            if s.label is not None:
                fh.write(f"{s.label}\t{text}\n")
            else:
                fh.write(text + "\n")


def write_text_file(path, token_lists):
    with open(path, "w", encoding="utf-8") as fh:
        for tokens in token_lists:
            fh.write(" ".join(tokens) + "\n")


def read_text_file(path):
    """Plain pre-training text: one sentence per line, tokenized."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            out.append(tokenize(line))
    if not out:
        raise ValueError(f"{path}: no sentences")
    return out


def parse_kv_file(path):
    """Flat key=value config file; '#' starts a comment line."""
    kv = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            kv[key.strip()] = value.strip()
    return kv
