"""Pipeline orchestration: configuration, stage artifacts, evaluation
reports, the baseline/grid harness, and the domain-count sweep.

Stage artifacts are content-named (a digest of the relevant configuration
plus the seed goes into the filename) so runs with different settings can
never silently reuse each other's models.
"""

import hashlib
import json
import os
from dataclasses import dataclass, fields as dataclass_fields

import numpy as np

from . import baselines, detector, embednet, persist, word2vec
from .corpus import (
    LabeledSentence,
    MAX_SENTENCE_TOKENS,
    build_vocab,
    read_corpus_file,
    read_text_file,
    split_train_test,
    synthesize_benchmark,
    synthesize_unlabeled,
    write_corpus_file,
    write_text_file,
)
from .embednet import TwoChannelEmbedding, train_classifier
from .mathcore import derive_seed, make_rng

LENGTH_GROUPS = (("short", 1, 8), ("medium", 9, 11), ("long", 12, MAX_SENTENCE_TOKENS))

REP_CHOICES_HELP = (
    "bow:N / tfidf:N (N in 1..3), neural-bow, tokens, "
    "dc-lstm:MODE / dc-rnn:MODE (MODE in random/static/non-static/two-channel)"
)
CLASSIFIER_CHOICES = ("autoencoder", "nn-d", "cbc", "idv")


class ConfigError(Exception):
    pass


class MissingArtifact(Exception):
    pass


@dataclass
class PipelineConfig:
    seed: int
    corpus: str = None
    ood: str = None
    pretrain_text: str = None
    model_dir: str = "models"
    report_dir: str = "reports"
    mode: str = "two-channel"
    cell: str = "lstm"
    hidden: int = 100
    v: int = 100
    optimizer: str = "adam"
    detect_optimizer: str = "adam"
    pretrain_epochs: int = 5
    embed_epochs: int = 20
    detect_epochs: int = 100
    batch_size: int = 16
    window: int = 5
    negatives: int = 5
    n_max: int = 3

    _INT_FIELDS = ("seed", "hidden", "v", "pretrain_epochs", "embed_epochs",
                   "detect_epochs", "batch_size", "window", "negatives", "n_max")

    @classmethod
    def from_kv(cls, kv, overrides=None):
        known = {f.name for f in dataclass_fields(cls)}
        values = {}
        for key, raw in kv.items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            values[key] = raw
        for key, val in (overrides or {}).items():
            if val is not None:
                values[key] = val
        if "seed" not in values:
            raise ConfigError("config must set a seed")
        for key in cls._INT_FIELDS:
            if key in values:
                try:
                    values[key] = int(values[key])
                except (TypeError, ValueError):
                    raise ConfigError(f"config key {key!r} must be an integer")
        cfg = cls(**values)
        cfg.validate()
        return cfg

    def validate(self):
        if self.mode not in embednet.EMBEDDING_MODES:
            raise ConfigError(f"mode must be one of {embednet.EMBEDDING_MODES}")
        if self.cell not in ("lstm", "rnn"):
            raise ConfigError("cell must be lstm or rnn")
        if self.optimizer not in ("adam", "adadelta", "rmsprop") or \
                self.detect_optimizer not in ("adam", "adadelta", "rmsprop"):
            raise ConfigError("optimizers must be adam, adadelta or rmsprop")
        if self.n_max not in (1, 2, 3):
            raise ConfigError("n_max must be 1, 2 or 3")
        for key in ("hidden", "v", "pretrain_epochs", "embed_epochs",
                    "detect_epochs", "batch_size", "window", "negatives"):
            if getattr(self, key) < 1:
                raise ConfigError(f"config key {key!r} must be positive")

    def echo(self):
        """Flat config dict embedded into manifests for audit."""
        return {f.name: getattr(self, f.name) for f in dataclass_fields(self)}


def _digest(fields):
    blob = json.dumps(fields, sort_keys=True).encode()
    return hashlib.blake2b(blob, digest_size=6).hexdigest()


def _pretrain_fields(cfg):
    return {"stage": "pretrain", "text": cfg.pretrain_text, "v": cfg.v,
            "window": cfg.window, "negatives": cfg.negatives,
            "epochs": cfg.pretrain_epochs, "seed": cfg.seed}


def _classifier_fields(cfg):
    fields = {"stage": "train-embed", "corpus": cfg.corpus, "mode": cfg.mode,
              "cell": cfg.cell, "hidden": cfg.hidden, "v": cfg.v,
              "optimizer": cfg.optimizer, "epochs": cfg.embed_epochs,
              "batch_size": cfg.batch_size, "seed": cfg.seed}
    if cfg.mode != "random":
        fields["pretrain"] = _digest(_pretrain_fields(cfg))
    return fields


def _detector_fields(cfg):
    return {"stage": "train-detect", "classifier": _digest(_classifier_fields(cfg)),
            "optimizer": cfg.detect_optimizer, "epochs": cfg.detect_epochs,
            "seed": cfg.seed}


def embedding_path(cfg):
    return os.path.join(cfg.model_dir, f"embedding-{_digest(_pretrain_fields(cfg))}.oodm")


def classifier_path(cfg):
    return os.path.join(cfg.model_dir, f"classifier-{_digest(_classifier_fields(cfg))}.oodm")


def detector_path(cfg):
    return os.path.join(cfg.model_dir, f"detector-{_digest(_detector_fields(cfg))}.oodm")


def reps_path(cfg, which):
    fields = dict(_classifier_fields(cfg), which=which, ood=cfg.ood)
    return os.path.join(cfg.model_dir, f"reps-{which}-{_digest(fields)}.oodm")


def _require(path, stage):
    if not os.path.exists(path):
        raise MissingArtifact(
            f"missing artifact for stage {stage!r}: {path} (run `oodkit {stage}` first)")
    return path


def _require_file(path, what):
    if path is None:
        raise ConfigError(f"config does not set a {what} file")
    if not os.path.exists(path):
        raise ConfigError(f"{what} file does not exist: {path}")
    return path


# ---------------------------------------------------------------------------
# stages
# ---------------------------------------------------------------------------

def stage_synth(spec, out_dir, log=None):
    """Write the synthetic benchmark: labeled ID corpus, bare OOD corpus, and
    an unlabeled pre-training text pool covering all keyword pools."""
    os.makedirs(out_dir, exist_ok=True)
    id_sentences, ood_sentences = synthesize_benchmark(spec)
    pretrain = synthesize_unlabeled(spec)
    paths = {
        "corpus": os.path.join(out_dir, "id.tsv"),
        "ood": os.path.join(out_dir, "ood.txt"),
        "pretrain_text": os.path.join(out_dir, "pretrain.txt"),
    }
    write_corpus_file(paths["corpus"], id_sentences)
    write_corpus_file(paths["ood"], ood_sentences)
    write_text_file(paths["pretrain_text"], pretrain)
    if log:
        log(f"wrote {len(id_sentences)} ID and {len(ood_sentences)} OOD sentences to {out_dir}")
    return paths


def pretrain_embeddings(token_lists, v, window, negatives, epochs, seed, min_count=2):
    vocab = build_vocab(token_lists, min_count=min_count)
    encoded = [vocab.encode_tokens(t) for t in token_lists]
    vectors = word2vec.train_skipgram(
        encoded, len(vocab), dim=v, window=window, negatives=negatives,
        epochs=epochs, seed=derive_seed(seed, "pretrain"))
    return vectors, vocab


def stage_pretrain(cfg, log=None):
    text = read_text_file(_require_file(cfg.pretrain_text, "pretrain_text"))
    vectors, vocab = pretrain_embeddings(
        text, cfg.v, cfg.window, cfg.negatives, cfg.pretrain_epochs, cfg.seed)
    os.makedirs(cfg.model_dir, exist_ok=True)
    path = embedding_path(cfg)
    persist.save_embedding(path, vectors, vocab, cfg.echo())
    if log:
        log(f"pre-trained {len(vocab)} x {cfg.v} word vectors -> {path}")
    return path


def _load_id_corpus(cfg):
    sentences = read_corpus_file(_require_file(cfg.corpus, "corpus"))
    for s in sentences:
        if s.origin != "ID" or s.label is None:
            raise ConfigError(
                f"{cfg.corpus}: training corpus must be labeled ID sentences")
    return sentences


def make_embedding(cfg, vocab_fallback_sentences=None):
    """Embedding channels per the configured mode. Non-random modes load the
    pre-training artifact and adopt its vocabulary."""
    if cfg.mode == "random":
        if vocab_fallback_sentences is None:
            raise ConfigError("random mode needs training sentences for its vocabulary")
        vocab = build_vocab([s.tokens for s in vocab_fallback_sentences], min_count=1)
        emb = TwoChannelEmbedding.random(len(vocab), cfg.v,
                                         seed=derive_seed(cfg.seed, "random-emb"))
        return emb, vocab
    path = _require(embedding_path(cfg), "pretrain")
    vectors, vocab, _ = persist.load_embedding(path)
    return TwoChannelEmbedding.from_pretrained(vectors, cfg.mode), vocab


def stage_train_embed(cfg, log=None):
    id_sentences = _load_id_corpus(cfg)
    split = split_train_test(id_sentences, derive_seed(cfg.seed, "split"))
    embedding, vocab = make_embedding(cfg, vocab_fallback_sentences=split.train)
    model = train_classifier(
        split.train, vocab, embedding, hidden=cfg.hidden, cell_kind=cfg.cell,
        optimizer=cfg.optimizer, epochs=cfg.embed_epochs,
        batch_size=cfg.batch_size, seed=cfg.seed, log=log)
    os.makedirs(cfg.model_dir, exist_ok=True)
    path = classifier_path(cfg)
    persist.save_classifier(path, model, cfg.echo())
    if log:
        test_acc = embednet.accuracy(model, split.test_id)
        log(f"held-out domain accuracy: {test_acc:.4f}")
        log(f"classifier -> {path}")
    return path


def compute_reps(model, sentences):
    return np.stack([model.embed_sentence(s.tokens) for s in sentences])


def _split_sentences(cfg, which):
    if which in ("train", "test-id"):
        split = split_train_test(_load_id_corpus(cfg), derive_seed(cfg.seed, "split"))
        return split.train if which == "train" else split.test_id
    if which == "ood":
        return read_corpus_file(_require_file(cfg.ood, "ood"), origin="OOD")
    raise ConfigError(f"unknown corpus selector {which!r}")


def stage_embed(cfg, which="train", log=None):
    model, _ = persist.load_classifier(_require(classifier_path(cfg), "train-embed"))
    sentences = _split_sentences(cfg, which)
    reps = compute_reps(model, sentences)
    os.makedirs(cfg.model_dir, exist_ok=True)
    path = reps_path(cfg, which)
    persist.save_representations(path, reps, sentences, cfg.echo())
    if log:
        log(f"embedded {reps.shape[0]} sentences ({which}) -> {path}")
    return path


def train_detector(reps, optimizer="adam", epochs=100, batch_size=16,
                   seed=0, val_frac=0.1, log=None):
    """Train the autoencoder and pick the deployment threshold as the 95th
    percentile of held-out ID reconstruction errors. OOD data never enters."""
    reps = np.asarray(reps)
    n = reps.shape[0]
    rng = make_rng(derive_seed(seed, "detect-val"))
    order = rng.permutation(n)
    n_val = int(round(n * val_frac)) if n >= 10 else 0
    val_idx, fit_idx = order[:n_val], order[n_val:]
    model = detector.train_autoencoder(
        reps[fit_idx], optimizer=optimizer, epochs=epochs,
        batch_size=batch_size, seed=seed, log=log)
    val_scores = model.score_many(reps[val_idx if n_val else fit_idx])
    threshold = detector.deployment_threshold(val_scores)
    return model, threshold


def stage_train_detect(cfg, log=None):
    model, _ = persist.load_classifier(_require(classifier_path(cfg), "train-embed"))
    train_sentences = _split_sentences(cfg, "train")
    for s in train_sentences:
        if s.origin != "ID":
            raise ConfigError("train-detect must not see OOD sentences")
    reps = compute_reps(model, train_sentences)
    ae, threshold = train_detector(
        reps, optimizer=cfg.detect_optimizer, epochs=cfg.detect_epochs,
        batch_size=cfg.batch_size, seed=cfg.seed, log=log)
    os.makedirs(cfg.model_dir, exist_ok=True)
    path = detector_path(cfg)
    persist.save_autoencoder(path, ae, threshold, cfg.echo())
    if log:
        log(f"autoencoder (deployment threshold {threshold:.6f}) -> {path}")
    return path


def group_eers(test_id, scores_id, test_ood, scores_ood):
    """Per-length-group EER; a group without both ID and OOD members is
    reported as None."""
    out = []
    for name, lo, hi in LENGTH_GROUPS:
        id_scores = [sc for s, sc in zip(test_id, scores_id) if lo <= len(s.tokens) <= hi]
        ood_scores = [sc for s, sc in zip(test_ood, scores_ood) if lo <= len(s.tokens) <= hi]
        if id_scores and ood_scores:
            eer = detector.find_eer(id_scores, ood_scores).eer
        else:
            eer = None
        out.append((name, lo, hi, eer, len(id_scores), len(ood_scores)))
    return out


def stage_eval(cfg, log=None, baseline=None):
    """Score the held-out ID and OOD test sets and write the curve CSV plus a
    flat summary. With `baseline`, a representation+classifier pair replaces
    the main embedder+autoencoder path."""
    split = split_train_test(_load_id_corpus(cfg), derive_seed(cfg.seed, "split"))
    test_ood = read_corpus_file(_require_file(cfg.ood, "ood"), origin="OOD")

    if baseline is None:
        model, _ = persist.load_classifier(_require(classifier_path(cfg), "train-embed"))
        ae, threshold, _ = persist.load_autoencoder(
            _require(detector_path(cfg), "train-detect"))
        scores_id = detector.score_sentences(model, ae, split.test_id)
        scores_ood = detector.score_sentences(model, ae, test_ood)
        tag = "main"
        extra = {"deployment_threshold": threshold}
    else:
        rep_name, clf_name = parse_baseline(baseline)
        scores_id, scores_ood = baseline_scores(cfg, rep_name, clf_name, split, test_ood)
        tag = baseline.replace(":", "").replace("+", "-")
        extra = {}

    curve = detector.find_eer(scores_id, scores_ood)
    os.makedirs(cfg.report_dir, exist_ok=True)
    digest = _digest(dict(_detector_fields(cfg), ood=cfg.ood, baseline=baseline))
    curve_path = os.path.join(cfg.report_dir, f"curve-{tag}-{digest}.csv")
    curve.to_csv(curve_path)

    lines = [
        f"sentences_id_test={len(split.test_id)}",
        f"sentences_ood_test={len(test_ood)}",
        f"eer={curve.eer:.10g}",
        f"eer_threshold={curve.eer_threshold:.10g}",
        f"mean_score_id={float(np.mean(scores_id)):.10g}",
        f"mean_score_ood={float(np.mean(scores_ood)):.10g}",
    ]
    for key, value in sorted(extra.items()):
        lines.append(f"{key}={value:.10g}")
    for name, lo, hi, eer, n_id, n_ood in group_eers(
            split.test_id, scores_id, test_ood, scores_ood):
        val = f"{eer:.10g}" if eer is not None else "n/a"
        lines.append(f"group_{name}_{lo}_{hi}_eer={val}")
        lines.append(f"group_{name}_{lo}_{hi}_counts={n_id}/{n_ood}")
    summary_path = os.path.join(cfg.report_dir, f"summary-{tag}-{digest}.txt")
    with open(summary_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    if log:
        log(f"eer={curve.eer:.4f} -> {curve_path}")
    return curve_path, summary_path


# ---------------------------------------------------------------------------
# baselines and the grid
# ---------------------------------------------------------------------------

def parse_baseline(spec):
    if "+" not in spec:
        raise ConfigError(
            f"baseline must look like <representation>+<classifier>, got {spec!r}")
    rep, clf = spec.split("+", 1)
    _validate_rep(rep)
    if clf not in CLASSIFIER_CHOICES:
        raise ConfigError(f"classifier must be one of {CLASSIFIER_CHOICES}, got {clf!r}")
    return rep, clf


def _validate_rep(rep):
    if rep in ("neural-bow", "tokens"):
        return
    kind, _, arg = rep.partition(":")
    if kind in ("bow", "tfidf") and arg in ("1", "2", "3"):
        return
    if kind in ("dc-lstm", "dc-rnn") and arg in embednet.EMBEDDING_MODES:
        return
    raise ConfigError(f"unknown representation {rep!r}; choose from {REP_CHOICES_HELP}")


def _dense_rep_provider(cfg, rep, split, test_ood):
    """Vectors for (train, test_id, ood) under the named representation, or
    token sets when rep == 'tokens'."""
    kind, _, arg = rep.partition(":")
    groups = (split.train, split.test_id, test_ood)
    if rep == "tokens":
        return [ [set(s.tokens) for s in grp] for grp in groups ], "sets"
    if kind in ("bow", "tfidf"):
        index = baselines.NgramIndex(int(arg)).fit([s.tokens for s in split.train])
        fn = baselines.bow_vector if kind == "bow" else baselines.tfidf_vector
        dense = [
            np.stack([fn(s.tokens, index).to_dense(index.dim) for s in grp])
            for grp in groups
        ]
        return dense, "dense"
    if rep == "neural-bow":
        path = _require(embedding_path(cfg), "pretrain")
        vectors, vocab, _ = persist.load_embedding(path)
        dense = [
            np.stack([baselines.neural_bow(s.tokens, vectors, vocab) for s in grp])
            for grp in groups
        ]
        return dense, "dense"
    # dc-lstm:MODE / dc-rnn:MODE -- train a supervised embedder for this cell
    cell = "lstm" if kind == "dc-lstm" else "rnn"
    sub = PipelineConfig(**dict(cfg.echo(), cell=cell, mode=arg))
    embedding, vocab = make_embedding(sub, vocab_fallback_sentences=split.train)
    model = train_classifier(
        split.train, vocab, embedding, hidden=sub.hidden, cell_kind=cell,
        optimizer=sub.optimizer, epochs=sub.embed_epochs,
        batch_size=sub.batch_size, seed=sub.seed)
    dense = [compute_reps(model, grp) for grp in groups]
    return dense, "dense"


def _pad_even(mat):
    if mat.shape[1] % 2 == 1:
        pad = np.zeros((mat.shape[0], 1), dtype=mat.dtype)
        return np.hstack([mat, pad])
    return mat


def _classifier_scores(cfg, clf, rep_data, kind, split):
    """OOD-oriented scores (higher = more OOD-like) for test_id and ood."""
    train_x, test_x, ood_x = rep_data
    if clf == "nn-d":
        distance = (baselines.jaccard_distance if kind == "sets"
                    else baselines.euclidean_distance)
        det = baselines.NearestNeighborDetector(train_x, distance)
        return ([det.score(x) for x in test_x], [det.score(x) for x in ood_x])
    if kind == "sets":
        raise ConfigError(f"classifier {clf!r} needs a vector representation")
    if clf == "autoencoder":
        train_m = _pad_even(np.asarray(train_x, dtype=np.float32))
        ae, _ = train_detector(
            train_m, optimizer=cfg.detect_optimizer, epochs=cfg.detect_epochs,
            batch_size=cfg.batch_size, seed=cfg.seed)
        return (ae.score_many(_pad_even(np.asarray(test_x, dtype=np.float32))),
                ae.score_many(_pad_even(np.asarray(ood_x, dtype=np.float32))))
    labels = [s.label for s in split.train]
    clf_model = baselines.train_ovr(train_x, labels,
                                    seed=derive_seed(cfg.seed, "ovr"))
    score = clf_model.cbc_score if clf == "cbc" else clf_model.idv_score
    # margins/confidences are ID-oriented; negate for the common sweep
    return ([-score(x) for x in test_x], [-score(x) for x in ood_x])


def baseline_scores(cfg, rep, clf, split, test_ood):
    rep_data, kind = _dense_rep_provider(cfg, rep, split, test_ood)
    return _classifier_scores(cfg, clf, rep_data, kind, split)


def stage_grid(cfg, reps, classifiers, log=None):
    """EER for every (representation, classifier) pair; one CSV row per cell."""
    split = split_train_test(_load_id_corpus(cfg), derive_seed(cfg.seed, "split"))
    test_ood = read_corpus_file(_require_file(cfg.ood, "ood"), origin="OOD")
    for rep in reps:
        _validate_rep(rep)
    for clf in classifiers:
        if clf not in CLASSIFIER_CHOICES:
            raise ConfigError(f"classifier must be one of {CLASSIFIER_CHOICES}")
    rows = []
    for rep in reps:
        rep_data, kind = _dense_rep_provider(cfg, rep, split, test_ood)
        for clf in classifiers:
            scores_id, scores_ood = _classifier_scores(cfg, clf, rep_data, kind, split)
            eer = detector.find_eer(scores_id, scores_ood).eer
            rows.append((rep, clf, eer))
            if log:
                log(f"{rep} + {clf}: eer={eer:.4f}")
    os.makedirs(cfg.report_dir, exist_ok=True)
    digest = _digest(dict(_classifier_fields(cfg), reps=reps, classifiers=classifiers))
    path = os.path.join(cfg.report_dir, f"grid-{digest}.csv")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("representation,classifier,eer\n")
        for rep, clf, eer in rows:
            fh.write(f"{rep},{clf},{eer:.10g}\n")
    return path, rows


# ---------------------------------------------------------------------------
# in-memory end-to-end runs (domain sweep, experiments, acceptance)
# ---------------------------------------------------------------------------

@dataclass
class RunResult:
    model: object
    autoencoder: object
    threshold: float
    split: object
    test_ood: list
    scores_id: np.ndarray
    scores_ood: np.ndarray
    curve: object
    vocab: object
    pretrained: np.ndarray


def run_end_to_end(id_sentences, ood_sentences, pretrain_tokens, *, seed,
                   v=100, hidden=100, mode="two-channel", cell="lstm",
                   optimizer="adam", pretrain_epochs=5, embed_epochs=20,
                   detect_epochs=100, batch_size=16, pretrained=None,
                   vocab=None, log=None):
    """Full pipeline in memory. `pretrained`/`vocab` can be passed to reuse
    word vectors across runs that share the pre-training corpus."""
    if mode != "random" and pretrained is None:
        pretrained, vocab = pretrain_embeddings(
            pretrain_tokens, v, window=5, negatives=5,
            epochs=pretrain_epochs, seed=seed)
    split = split_train_test(id_sentences, derive_seed(seed, "split"))
    if mode == "random":
        vocab = build_vocab([s.tokens for s in split.train], min_count=1)
        embedding = TwoChannelEmbedding.random(len(vocab), v,
                                               seed=derive_seed(seed, "random-emb"))
    else:
        embedding = TwoChannelEmbedding.from_pretrained(pretrained, mode)
    model = train_classifier(
        split.train, vocab, embedding, hidden=hidden, cell_kind=cell,
        optimizer=optimizer, epochs=embed_epochs, batch_size=batch_size,
        seed=seed, log=log)
    reps = compute_reps(model, split.train)
    ae, threshold = train_detector(reps, epochs=detect_epochs,
                                   batch_size=batch_size, seed=seed)
    scores_id = detector.score_sentences(model, ae, split.test_id)
    scores_ood = detector.score_sentences(model, ae, ood_sentences)
    curve = detector.find_eer(scores_id, scores_ood)
    return RunResult(model=model, autoencoder=ae, threshold=threshold,
                     split=split, test_ood=list(ood_sentences),
                     scores_id=scores_id, scores_ood=scores_ood, curve=curve,
                     vocab=vocab, pretrained=pretrained)


def stage_domain_sweep(cfg, spec, log=None):
    """Re-run the pipeline with the first d ID domains, d = 2..max; sentences
    of excluded domains join the OOD test set. Mirrors how detection gets
    harder as the number of covered domains grows."""
    if spec.num_domains < 2:
        raise ConfigError("domain sweep needs a benchmark with at least 2 ID domains")
    id_all, ood_all = synthesize_benchmark(spec)
    pretrain_tokens = synthesize_unlabeled(spec)
    pretrained, vocab = pretrain_embeddings(
        pretrain_tokens, cfg.v, cfg.window, cfg.negatives,
        cfg.pretrain_epochs, cfg.seed)
    labels = spec.id_domain_labels()
    rows = []
    for d in range(2, spec.num_domains + 1):
        keep = set(labels[:d])
        id_d = [s for s in id_all if s.label in keep]
        extra = [LabeledSentence(s.tokens, origin="OOD")
                 for s in id_all if s.label not in keep]
        result = run_end_to_end(
            id_d, ood_all + extra, None, seed=cfg.seed, v=cfg.v,
            hidden=cfg.hidden, mode=cfg.mode, cell=cfg.cell,
            optimizer=cfg.optimizer, embed_epochs=cfg.embed_epochs,
            detect_epochs=cfg.detect_epochs, batch_size=cfg.batch_size,
            pretrained=pretrained, vocab=vocab)
        rows.append((d, result.curve.eer))
        if log:
            log(f"|D|={d}: eer={result.curve.eer:.4f}")
    os.makedirs(cfg.report_dir, exist_ok=True)
    digest = _digest(dict(_classifier_fields(cfg), sweep="domains"))
    path = os.path.join(cfg.report_dir, f"domain-sweep-{digest}.csv")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("domain_count,eer\n")
        for d, eer in rows:
            fh.write(f"{d},{eer:.10g}\n")
    return path, rows
