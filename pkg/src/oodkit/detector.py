"""One-class OOD detection: an autoencoder over ID sentence representations,
reconstruction-error scoring with a threshold rule, and FAR/FRR/EER sweeps.

The score of a representation r is the unnormalized squared error
``||r - decode(encode(r))||^2``; a sentence is in-domain when its score is
strictly below the threshold. Threshold selection for deployment uses only
ID data (a percentile of validation reconstruction errors); EER is an
evaluation-time quantity that needs labeled OOD scores.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .mathcore import (
    DTYPE,
    NumericError,
    derive_seed,
    glorot_uniform,
    make_rng,
    make_optimizer,
)


def reconstruction_error(r, r_hat):
    """Sum of squared differences, accumulated in float64."""
    d = np.asarray(r, dtype=np.float64) - np.asarray(r_hat, dtype=np.float64)
    return float(np.dot(d, d))


class Autoencoder:
    """tanh encoder to an m/2 bottleneck and tanh decoder back to m."""

    def __init__(self, dim, seed=0, dtype=DTYPE):
        if dim % 2 != 0:
            raise ValueError(f"representation dim must be even, got {dim}")
        self.dim = dim
        self.code_dim = dim // 2
        rng = make_rng(seed)
        self.W_enc = glorot_uniform(rng, self.code_dim, dim, dtype)
        self.b_enc = np.zeros(self.code_dim, dtype=dtype)
        self.W_dec = glorot_uniform(rng, dim, self.code_dim, dtype)
        self.b_dec = np.zeros(dim, dtype=dtype)
        self.history = []

    def params(self):
        return {"W_enc": self.W_enc, "b_enc": self.b_enc,
                "W_dec": self.W_dec, "b_dec": self.b_dec}

    def forward(self, r):
        """Encode/decode one representation; returns (code, reconstruction, score)."""
        r = np.asarray(r)
        code = np.tanh(self.W_enc @ r + self.b_enc)
        recon = np.tanh(self.W_dec @ code + self.b_dec)
        return code, recon, reconstruction_error(r, recon)

    def score(self, r):
        return self.forward(r)[2]

    def score_many(self, reps):
        """Scores for a (n, dim) array of representations."""
        reps = np.asarray(reps)
        codes = np.tanh(reps @ self.W_enc.T + self.b_enc)
        recons = np.tanh(codes @ self.W_dec.T + self.b_dec)
        d = reps.astype(np.float64) - recons.astype(np.float64)
        return np.sum(d * d, axis=1)

    def batch_gradients(self, reps):
        """Mean squared-error loss over a batch and its analytic gradients."""
        reps = np.asarray(reps)
        z1 = reps @ self.W_enc.T + self.b_enc
        codes = np.tanh(z1)
        z2 = codes @ self.W_dec.T + self.b_dec
        recons = np.tanh(z2)
        diff = recons - reps
        loss = float(np.mean(np.sum(
            diff.astype(np.float64) ** 2, axis=1)))
        n = reps.shape[0]
        d_recon = 2.0 * diff / n
        dz2 = d_recon * (1.0 - recons * recons)
        d_codes = dz2 @ self.W_dec
        dz1 = d_codes * (1.0 - codes * codes)
        grads = {
            "W_dec": dz2.T @ codes,
            "b_dec": dz2.sum(axis=0),
            "W_enc": dz1.T @ reps,
            "b_enc": dz1.sum(axis=0),
        }
        return loss, grads


def train_autoencoder(reps, optimizer="adam", epochs=100, batch_size=16,
                      seed=0, patience=10, log=None):
    """Train an autoencoder on ID representations (rows of `reps`).

    Early-stops when the mean training reconstruction error has not improved
    for `patience` epochs; the best parameters are restored.
    """
    reps = np.asarray(reps, dtype=DTYPE)
    if reps.ndim != 2 or reps.shape[0] == 0:
        raise ValueError("need a nonempty (n, dim) array of representations")
    n, dim = reps.shape
    if n < dim // 2:
        warnings.warn(
            f"only {n} training vectors for a {dim // 2}-unit bottleneck; "
            "reconstruction quality may be poor"
        )
    model = Autoencoder(dim, seed=derive_seed(seed, "ae-init"))
    opt = make_optimizer(optimizer)
    order_rng = make_rng(derive_seed(seed, "ae-order"))
    params = model.params()

    best = None  # (mean_score, epoch, snapshot)
    for epoch in range(epochs):
        order = order_rng.permutation(n)
        for start in range(0, n, batch_size):
            batch = reps[order[start:start + batch_size]]
            loss, grads = model.batch_gradients(batch)
            if not np.isfinite(loss):
                raise NumericError(f"autoencoder loss non-finite at epoch {epoch}")
            opt.step(params, grads)
        mean_score = float(np.mean(model.score_many(reps)))
        model.history.append({"epoch": epoch, "mean_score": mean_score})
        if log:
            log(f"epoch {epoch}: mean_score={mean_score:.6f}")
        if best is None or mean_score < best[0]:
            best = (mean_score, epoch, {k: v.copy() for k, v in params.items()})
        elif epoch - best[1] >= patience:
            break
    for key, arr in params.items():
        arr[...] = best[2][key]
    return model


@dataclass
class DetectionResult:
    score: float
    verdict: str  # "ID" or "OOD"
    threshold: float


def classify(tokens, embedder, autoencoder, threshold):
    """Threshold rule: in-domain iff the reconstruction error of the sentence
    representation is strictly below the threshold."""
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    rep = embedder.embed_sentence(tokens)
    score = autoencoder.score(rep)
    verdict = "ID" if score < threshold else "OOD"
    return DetectionResult(score=score, verdict=verdict, threshold=threshold)


def far(scores_ood, threshold):
    """Fraction of OOD sentences accepted (score below threshold)."""
    scores_ood = np.asarray(scores_ood)
    if scores_ood.size == 0:
        raise ValueError("empty OOD score list")
    return float(np.count_nonzero(scores_ood < threshold)) / scores_ood.size


def frr(scores_id, threshold):
    """Fraction of ID sentences rejected (score at or above threshold)."""
    scores_id = np.asarray(scores_id)
    if scores_id.size == 0:
        raise ValueError("empty ID score list")
    return float(np.count_nonzero(scores_id >= threshold)) / scores_id.size


@dataclass
class ErrorRateCurve:
    thresholds: np.ndarray
    far: np.ndarray
    frr: np.ndarray
    eer: float
    eer_threshold: float

    def write_csv(self, fh):
        fh.write("threshold,far,frr\n")
        for t, fa, fr in zip(self.thresholds, self.far, self.frr):
            fh.write(f"{t:.10g},{fa:.10g},{fr:.10g}\n")
        fh.write(f"# eer={self.eer:.10g} at threshold={self.eer_threshold:.10g}\n")

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            self.write_csv(fh)


def sweep_thresholds(scores_id, scores_ood):
    """Candidate thresholds: every distinct score, midpoints between adjacent
    distinct scores, and one sentinel below/above everything (2n+1 total)."""
    values = np.unique(np.concatenate([
        np.asarray(scores_id, dtype=np.float64),
        np.asarray(scores_ood, dtype=np.float64),
    ]))
    mids = (values[:-1] + values[1:]) / 2.0
    return np.sort(np.concatenate([
        [values[0] - 1.0], values, mids, [values[-1] + 1.0]
    ]))


def find_eer(scores_id, scores_ood):
    """FAR/FRR curve over the candidate sweep and the equal error rate.

    If FAR equals FRR exactly at a candidate threshold, that value is the
    EER; otherwise EER is linearly interpolated between the two adjacent
    sweep points bracketing the sign change of FAR - FRR.
    """
    scores_id = np.asarray(scores_id, dtype=np.float64)
    scores_ood = np.asarray(scores_ood, dtype=np.float64)
    if scores_id.size == 0 or scores_ood.size == 0:
        raise ValueError("both score lists must be nonempty")
    thresholds = sweep_thresholds(scores_id, scores_ood)
    sorted_id = np.sort(scores_id)
    sorted_ood = np.sort(scores_ood)
    fars = np.searchsorted(sorted_ood, thresholds, side="left") / scores_ood.size
    n_rejected = scores_id.size - np.searchsorted(sorted_id, thresholds, side="left")
    frrs = n_rejected / scores_id.size
    diff = fars - frrs

    exact = np.nonzero(diff == 0.0)[0]
    if exact.size:
        i = int(exact[0])
        eer, eer_t = float(fars[i]), float(thresholds[i])
    else:
        i = int(np.argmax(diff > 0.0))  # first positive; diff[0] is always -1
        j = i - 1
        denom = (fars[i] - fars[j]) - (frrs[i] - frrs[j])
        t = (frrs[j] - fars[j]) / denom
        eer = float(fars[j] + t * (fars[i] - fars[j]))
        eer_t = float(thresholds[j] + t * (thresholds[i] - thresholds[j]))
    return ErrorRateCurve(thresholds=thresholds, far=fars, frr=frrs,
                          eer=eer, eer_threshold=eer_t)


def deployment_threshold(scores_id_validation, percentile=95.0):
    """Operating threshold from ID data alone: a percentile of validation
    reconstruction errors. OOD data is never consulted."""
    scores = np.asarray(scores_id_validation, dtype=np.float64)
    if scores.size == 0:
        raise ValueError("empty validation score list")
    return float(np.percentile(scores, percentile))


def score_sentences(embedder, autoencoder, sentences):
    """Reconstruction errors for a list of sentences; raises on non-finite."""
    scores = np.array([
        autoencoder.score(embedder.embed_sentence(s.tokens)) for s in sentences
    ])
    if not np.all(np.isfinite(scores)):
        raise NumericError("non-finite detection score")
    return scores
