"""Supervised sentence embedder: a bidirectional LSTM (or plain recurrent
cell) over two-channel word embeddings, trained to classify sentences into
domain categories. The concatenated final hidden states of both directions
are the sentence representation reused for out-of-domain detection.

All gradients are hand-derived backpropagation through time; there is no
autodiff anywhere.
"""

import math

import numpy as np

from .mathcore import (
    DTYPE,
    NumericError,
    derive_seed,
    glorot_uniform,
    make_rng,
    sigmoid,
    softmax,
)
from . import mathcore
from .corpus import split_train_test

EMBEDDING_MODES = ("random", "static", "non-static", "two-channel")
RANDOM_INIT_SCALE = 0.25


class TwoChannelEmbedding:
    """Word vectors split into a frozen (static) and a trainable (dynamic)
    channel. Single-channel modes hold only one of the two."""

    def __init__(self, mode, static=None, dynamic=None):
        if mode not in EMBEDDING_MODES:
            raise ValueError(f"mode must be one of {EMBEDDING_MODES}, got {mode!r}")
        if mode == "two-channel" and (static is None or dynamic is None):
            raise ValueError("two-channel mode needs both channels")
        if mode == "static" and (static is None or dynamic is not None):
            raise ValueError("static mode holds exactly the frozen channel")
        if mode in ("non-static", "random") and (dynamic is None or static is not None):
            raise ValueError(f"{mode} mode holds exactly the trainable channel")
        self.mode = mode
        self.static = static
        self.dynamic = dynamic

    @classmethod
    def from_pretrained(cls, vectors, mode):
        """Initialize channels from pre-trained vectors (one row per word)."""
        vectors = np.asarray(vectors, dtype=DTYPE)
        if mode == "two-channel":
            return cls(mode, static=vectors.copy(), dynamic=vectors.copy())
        if mode == "static":
            return cls(mode, static=vectors.copy())
        if mode == "non-static":
            return cls(mode, dynamic=vectors.copy())
        raise ValueError("random mode does not take pre-trained vectors")

    @classmethod
    def random(cls, vocab_size, dim, seed=0, scale=RANDOM_INIT_SCALE):
        rng = make_rng(seed)
        vecs = rng.uniform(-scale, scale, size=(vocab_size, dim)).astype(DTYPE)
        return cls("random", dynamic=vecs)

    @property
    def vocab_size(self):
        arr = self.static if self.static is not None else self.dynamic
        return arr.shape[0]

    @property
    def dim(self):
        arr = self.static if self.static is not None else self.dynamic
        return arr.shape[1]

    @property
    def width(self):
        """Input width seen by the recurrent cell: 2v in two-channel mode."""
        return 2 * self.dim if self.mode == "two-channel" else self.dim

    @property
    def trainable(self):
        return self.dynamic is not None

    def channel_rows(self, w):
        """Raw per-channel vectors for token index w (no dropout)."""
        if not 0 <= w < self.vocab_size:
            raise ValueError(f"token index {w} out of range [0, {self.vocab_size})")
        if self.mode == "two-channel":
            return self.static[w], self.dynamic[w]
        if self.mode == "static":
            return (self.static[w],)
        return (self.dynamic[w],)

    def vector(self, w):
        """Inference-time lookup: concatenation of the channels."""
        return np.concatenate(self.channel_rows(w))


def dropout_mask(rng, size, rate):
    """Binary keep mask; kept activations are later scaled by 1/(1-rate)."""
    return (rng.random(size) >= rate).astype(DTYPE)


def apply_dropout(vec, mask, rate):
    """Inverted dropout: scale kept coordinates at train time so inference
    needs no rescaling."""
    return vec * mask / (1.0 - rate)


class LstmParams:
    """One direction's gate weights; biases start at 0 except the forget
    gate, which starts at 1 so early training does not erase the cell state."""

    kind = "lstm"

    def __init__(self, hidden, input_dim, rng, dtype=DTYPE):
        z = hidden + input_dim
        self.hidden = hidden
        self.input_dim = input_dim
        self.W_i = glorot_uniform(rng, hidden, z, dtype)
        self.W_f = glorot_uniform(rng, hidden, z, dtype)
        self.W_C = glorot_uniform(rng, hidden, z, dtype)
        self.W_o = glorot_uniform(rng, hidden, z, dtype)
        self.b_i = np.zeros(hidden, dtype=dtype)
        self.b_f = np.ones(hidden, dtype=dtype)
        self.b_C = np.zeros(hidden, dtype=dtype)
        self.b_o = np.zeros(hidden, dtype=dtype)

    _names = ("W_i", "W_f", "W_C", "W_o", "b_i", "b_f", "b_C", "b_o")

    def params(self):
        return {name: getattr(self, name) for name in self._names}

    def zero_grads(self):
        return {name: np.zeros_like(getattr(self, name)) for name in self._names}


class RnnParams:
    """Elman cell: h_t = tanh(W [h_prev, v_t] + b)."""

    kind = "rnn"

    def __init__(self, hidden, input_dim, rng, dtype=DTYPE):
        z = hidden + input_dim
        self.hidden = hidden
        self.input_dim = input_dim
        self.W = glorot_uniform(rng, hidden, z, dtype)
        self.b = np.zeros(hidden, dtype=dtype)

    _names = ("W", "b")

    def params(self):
        return {name: getattr(self, name) for name in self._names}

    def zero_grads(self):
        return {name: np.zeros_like(getattr(self, name)) for name in self._names}


def lstm_step(params, v, h_prev, c_prev):
    """One LSTM unit update; returns (h, c, cache for backprop)."""
    x = np.concatenate([h_prev, v])
    i = sigmoid(params.W_i @ x + params.b_i)
    f = sigmoid(params.W_f @ x + params.b_f)
    g = np.tanh(params.W_C @ x + params.b_C)
    c = i * g + f * c_prev
    o = sigmoid(params.W_o @ x + params.b_o)
    tc = np.tanh(c)
    h = o * tc
    return h, c, (x, i, f, g, o, c_prev, tc)


def lstm_forward(params, inputs):
    """Run the cell over a sequence of input vectors; h and c start at 0."""
    dtype = params.W_i.dtype
    h = np.zeros(params.hidden, dtype=dtype)
    c = np.zeros(params.hidden, dtype=dtype)
    caches = []
    for v in inputs:
        h, c, cache = lstm_step(params, v, h, c)
        caches.append(cache)
    return h, caches


def lstm_backward(params, caches, dh_final):
    """BPTT through one direction. Returns (param grads, per-step input grads)."""
    hidden = params.hidden
    grads = params.zero_grads()
    dinputs = [None] * len(caches)
    dh = dh_final
    dc = np.zeros_like(dh_final)
    for t in range(len(caches) - 1, -1, -1):
        x, i, f, g, o, c_prev, tc = caches[t]
        do = dh * tc
        dc = dc + dh * o * (1.0 - tc * tc)
        di = dc * g
        dg = dc * i
        df = dc * c_prev
        dc_prev = dc * f
        # back through the gate nonlinearities
        dzi = di * i * (1.0 - i)
        dzf = df * f * (1.0 - f)
        dzo = do * o * (1.0 - o)
        dzg = dg * (1.0 - g * g)
        grads["W_i"] += np.outer(dzi, x)
        grads["W_f"] += np.outer(dzf, x)
        grads["W_C"] += np.outer(dzg, x)
        grads["W_o"] += np.outer(dzo, x)
        grads["b_i"] += dzi
        grads["b_f"] += dzf
        grads["b_C"] += dzg
        grads["b_o"] += dzo
        dx = params.W_i.T @ dzi + params.W_f.T @ dzf \
            + params.W_C.T @ dzg + params.W_o.T @ dzo
        dh = dx[:hidden]
        dinputs[t] = dx[hidden:]
        dc = dc_prev
    return grads, dinputs


def rnn_step(params, v, h_prev):
    x = np.concatenate([h_prev, v])
    h = np.tanh(params.W @ x + params.b)
    return h, (x, h)


def rnn_forward(params, inputs):
    h = np.zeros(params.hidden, dtype=params.W.dtype)
    caches = []
    for v in inputs:
        h, cache = rnn_step(params, v, h)
        caches.append(cache)
    return h, caches


def rnn_backward(params, caches, dh_final):
    hidden = params.hidden
    grads = params.zero_grads()
    dinputs = [None] * len(caches)
    dh = dh_final
    for t in range(len(caches) - 1, -1, -1):
        x, h = caches[t]
        dz = dh * (1.0 - h * h)
        grads["W"] += np.outer(dz, x)
        grads["b"] += dz
        dx = params.W.T @ dz
        dh = dx[:hidden]
        dinputs[t] = dx[hidden:]
    return grads, dinputs


_SEQ_FNS = {
    "lstm": (LstmParams, lstm_forward, lstm_backward),
    "rnn": (RnnParams, rnn_forward, rnn_backward),
}


class DomainClassifier:
    """Bidirectional recurrent domain-category classifier.

    Forward direction reads tokens left to right, backward right to left.
    The sentence representation is the concatenation of both directions'
    final hidden states; the output layer is a softmax over domain labels
    with 50% inverted dropout on the representation during training.
    """

    def __init__(self, vocab, labels, embedding, hidden=100, cell_kind="lstm",
                 dropout_rate=0.5, seed=0, dtype=DTYPE):
        if cell_kind not in _SEQ_FNS:
            raise ValueError(f"cell_kind must be lstm or rnn, got {cell_kind!r}")
        if not labels:
            raise ValueError("need at least one domain label")
        self.vocab = vocab
        self.labels = sorted(labels)
        self.label_index = {lab: i for i, lab in enumerate(self.labels)}
        self.embedding = embedding
        self.hidden = hidden
        self.cell_kind = cell_kind
        self.dropout_rate = dropout_rate
        rng = make_rng(seed)
        cell_cls, self._seq_forward, self._seq_backward = _SEQ_FNS[cell_kind]
        self.fwd = cell_cls(hidden, embedding.width, rng, dtype)
        self.bwd = cell_cls(hidden, embedding.width, rng, dtype)
        self.W_y = glorot_uniform(rng, len(self.labels), 2 * hidden, dtype)
        self.b_y = np.zeros(len(self.labels), dtype=dtype)
        self.history = []

    @property
    def rep_dim(self):
        return 2 * self.hidden

    def params(self):
        """Dense trainable parameters (embedding channels are handled apart)."""
        out = {}
        for prefix, cell in (("fwd.", self.fwd), ("bwd.", self.bwd)):
            for name, arr in cell.params().items():
                out[prefix + name] = arr
        out["W_y"] = self.W_y
        out["b_y"] = self.b_y
        return out

    def encode(self, tokens):
        indices = self.vocab.encode_tokens(tokens)
        if not indices:
            raise ValueError("empty sentence")
        return indices

    def _token_vectors(self, indices, train_mode, rng):
        """Per-token input vectors; in train mode each channel half gets an
        independent inverted-dropout mask."""
        vecs = []
        masks = []
        for w in indices:
            parts = self.embedding.channel_rows(w)
            if train_mode:
                pmasks = tuple(dropout_mask(rng, p.shape[0], self.dropout_rate)
                               for p in parts)
                dropped = [apply_dropout(p, m, self.dropout_rate)
                           for p, m in zip(parts, pmasks)]
                vecs.append(np.concatenate(dropped) if len(dropped) > 1 else dropped[0])
                masks.append(pmasks)
            else:
                vecs.append(np.concatenate(parts) if len(parts) > 1 else parts[0])
                masks.append(None)
        return vecs, masks

    def _forward_indices(self, indices, train_mode=False, rng=None):
        if not indices:
            raise ValueError("empty sentence")
        if train_mode and rng is None:
            raise ValueError("training-mode forward needs an rng for dropout")
        vecs, token_masks = self._token_vectors(indices, train_mode, rng)
        h_f, caches_f = self._seq_forward(self.fwd, vecs)
        h_b, caches_b = self._seq_forward(self.bwd, list(reversed(vecs)))
        rep = np.concatenate([h_f, h_b])
        if train_mode:
            rep_mask = dropout_mask(rng, rep.shape[0], self.dropout_rate)
            rep_used = apply_dropout(rep, rep_mask, self.dropout_rate)
        else:
            rep_mask = None
            rep_used = rep
        y = softmax(self.W_y @ rep_used + self.b_y)
        return {
            "y": y, "rep": rep, "rep_used": rep_used, "rep_mask": rep_mask,
            "caches_f": caches_f, "caches_b": caches_b,
            "token_masks": token_masks, "train_mode": train_mode,
        }

    def forward_classify(self, tokens, train_mode=False, rng=None):
        """Class probabilities and the sentence representation."""
        cache = self._forward_indices(self.encode(tokens), train_mode, rng)
        return cache["y"], cache["rep"]

    def embed_sentence(self, tokens):
        """Deterministic sentence representation (dropout disabled)."""
        _, rep = self.forward_classify(tokens, train_mode=False)
        return rep

    def predict_label(self, tokens):
        y, _ = self.forward_classify(tokens)
        return self.labels[int(np.argmax(y))]

    def loss(self, tokens, label):
        y, _ = self.forward_classify(tokens)
        return -math.log(max(float(y[self.label_index[label]]), 1e-12))

    def _backward(self, indices, label_idx, cache):
        """Gradients of the cross-entropy loss for one sentence.

        Returns (dense parameter grads, dynamic-embedding row grads keyed by
        token index). In static mode the row-grad dict is empty.
        """
        y = cache["y"]
        dz = y.copy()
        dz[label_idx] -= 1.0
        grads = {"W_y": np.outer(dz, cache["rep_used"]), "b_y": dz}
        drep = self.W_y.T @ dz
        if cache["train_mode"]:
            drep = drep * cache["rep_mask"] / (1.0 - self.dropout_rate)
        h = self.hidden
        grads_f, dins_f = self._seq_backward(self.fwd, cache["caches_f"], drep[:h])
        grads_b, dins_b = self._seq_backward(self.bwd, cache["caches_b"], drep[h:])
        for name, g in grads_f.items():
            grads["fwd." + name] = g
        for name, g in grads_b.items():
            grads["bwd." + name] = g

        emb_grads = {}
        if self.embedding.trainable:
            n = len(indices)
            v = self.embedding.dim
            two_channel = self.embedding.mode == "two-channel"
            for t, w in enumerate(indices):
                dv = dins_f[t] + dins_b[n - 1 - t]
                if two_channel:
                    dv = dv[v:]  # static half carries no gradient
                if cache["train_mode"]:
                    pmasks = cache["token_masks"][t]
                    mask = pmasks[-1]  # dynamic channel is last
                    dv = dv * mask / (1.0 - self.dropout_rate)
                if w in emb_grads:
                    emb_grads[w] = emb_grads[w] + dv
                else:
                    emb_grads[w] = dv
        return grads, emb_grads

    def sentence_gradients(self, tokens, label, train_mode=False, rng=None):
        """Loss and analytic gradients for one sentence (used for training
        and for finite-difference verification)."""
        indices = self.encode(tokens)
        label_idx = self.label_index[label]
        cache = self._forward_indices(indices, train_mode, rng)
        loss = -math.log(max(float(cache["y"][label_idx]), 1e-12))
        grads, emb_grads = self._backward(indices, label_idx, cache)
        return loss, grads, emb_grads


def train_classifier(sentences, vocab, embedding, hidden=100, cell_kind="lstm",
                     optimizer="adam", epochs=20, batch_size=16, seed=0,
                     patience=3, clip_norm=5.0, val_frac=0.1, log=None):
    """Train a domain classifier on labeled ID sentences.

    Performs full backpropagation through time per sentence, accumulates
    mean gradients over each minibatch, clips to a global norm and applies
    the configured optimizer. When every domain has at least 5 sentences, a
    stratified slice is held out to drive early stopping on domain accuracy
    (patience epochs without improvement; best parameters are restored).
    """
    sentences = list(sentences)
    if not sentences:
        raise ValueError("no training sentences")
    for s in sentences:
        if s.label is None:
            raise ValueError("every training sentence needs a domain label")
        if s.origin != "ID":
            raise ValueError("training data must be in-domain sentences only")
    labels = sorted({s.label for s in sentences})

    fit_set, val_set = sentences, None
    if val_frac > 0 and min(
        sum(1 for s in sentences if s.label == lab) for lab in labels
    ) >= 5:
        split = split_train_test(sentences, derive_seed(seed, "val"),
                                 train_frac=1.0 - val_frac)
        fit_set, val_set = split.train, split.test_id

    model = DomainClassifier(vocab, labels, embedding, hidden=hidden,
                             cell_kind=cell_kind, seed=derive_seed(seed, "init"))
    dense_params = model.params()
    opt = mathcore.make_optimizer(optimizer)
    rng = make_rng(derive_seed(seed, "dropout"))
    order_rng = make_rng(derive_seed(seed, "order"))

    best = None  # (val_acc, epoch, snapshot)
    for epoch in range(epochs):
        order = order_rng.permutation(len(fit_set))
        epoch_loss = 0.0
        for start in range(0, len(order), batch_size):
            batch = [fit_set[i] for i in order[start:start + batch_size]]
            acc_dense = {name: np.zeros_like(arr)
                         for name, arr in dense_params.items()}
            acc_emb = {}
            for s in batch:
                loss, grads, emb_grads = model.sentence_gradients(
                    s.tokens, s.label, train_mode=True, rng=rng)
                epoch_loss += loss
                for name, g in grads.items():
                    acc_dense[name] += g
                for w, g in emb_grads.items():
                    if w in acc_emb:
                        acc_emb[w] += g
                    else:
                        acc_emb[w] = g.copy()
            scale = DTYPE(1.0 / len(batch))
            for g in acc_dense.values():
                g *= scale
            rows = np.array(sorted(acc_emb), dtype=np.int64)
            row_grads = (np.stack([acc_emb[w] for w in rows]) * scale
                         if len(rows) else None)
            clip_list = list(acc_dense.values())
            if row_grads is not None:
                clip_list.append(row_grads)
            mathcore.clip_global_norm(clip_list, clip_norm)
            opt.start_step()
            for name, arr in dense_params.items():
                opt.update(name, arr, acc_dense[name])
            if row_grads is not None:
                opt.update_rows("emb.dynamic", model.embedding.dynamic,
                                rows, row_grads)
        mean_loss = epoch_loss / len(fit_set)
        if not np.isfinite(mean_loss):
            raise NumericError(f"training loss became non-finite at epoch {epoch}")

        val_acc = None
        if val_set is not None:
            val_acc = accuracy(model, val_set)
            if best is None or val_acc > best[0]:
                best = (val_acc, epoch, _snapshot(model))
        model.history.append({"epoch": epoch, "loss": mean_loss, "val_acc": val_acc})
        if log:
            log(f"epoch {epoch}: loss={mean_loss:.4f}"
                + (f" val_acc={val_acc:.4f}" if val_acc is not None else ""))
        if best is not None and epoch - best[1] >= patience:
            break

    if best is not None:
        _restore(model, best[2])
    return model


def _snapshot(model):
    snap = {name: arr.copy() for name, arr in model.params().items()}
    if model.embedding.trainable:
        snap["emb.dynamic"] = model.embedding.dynamic.copy()
    return snap


def _restore(model, snap):
    for name, arr in model.params().items():
        arr[...] = snap[name]
    if model.embedding.trainable:
        model.embedding.dynamic[...] = snap["emb.dynamic"]


def accuracy(model, sentences):
    """Fraction of sentences whose argmax domain matches the gold label."""
    sentences = list(sentences)
    if not sentences:
        raise ValueError("accuracy over an empty set")
    hits = sum(1 for s in sentences if model.predict_label(s.tokens) == s.label)
    return hits / len(sentences)
