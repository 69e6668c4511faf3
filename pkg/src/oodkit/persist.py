"""Model archive format shared by every pipeline stage.

Layout:

    bytes 0..3    magic ``OODM``
    bytes 4..7    format version, uint32 little-endian (currently 1)
    bytes 8..15   manifest length in bytes, uint64 little-endian
    manifest      UTF-8 JSON (human-readable; echoes the training config and
                  declares array names/shapes in payload order)
    payload       the arrays as little-endian float32, concatenated in the
                  declared order

Round-tripping is bit-exact: parameters are stored at their native float32
precision, so reloaded models score identically to the originals.
"""

import json

import numpy as np

from .corpus import UNK, Vocabulary
from .detector import Autoencoder
from .embednet import DomainClassifier, TwoChannelEmbedding
from .mathcore import DTYPE

MAGIC = b"OODM"
FORMAT_VERSION = 1


class ArchiveError(Exception):
    """Base class for model archive failures."""


class BadMagic(ArchiveError):
    pass


class VersionMismatch(ArchiveError):
    pass


class ShapeMismatch(ArchiveError):
    pass


def save_archive(path, stage, config, arrays, extra=None):
    """Write an archive; `arrays` is an ordered name -> float array dict."""
    manifest = {
        "format_version": FORMAT_VERSION,
        "stage": stage,
        "config": dict(config or {}),
        "arrays": [{"name": name, "shape": list(arr.shape)}
                   for name, arr in arrays.items()],
    }
    if extra:
        manifest.update(extra)
    mbytes = json.dumps(manifest, indent=2, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(np.array(FORMAT_VERSION, dtype="<u4").tobytes())
        fh.write(np.array(len(mbytes), dtype="<u8").tobytes())
        fh.write(mbytes)
        for arr in arrays.values():
            fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def load_archive(path):
    """Read an archive back as (manifest, arrays). The whole payload is
    validated against the declared shapes before anything is returned."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 4 or blob[:4] != MAGIC:
        raise BadMagic(f"{path}: not an OODM model archive")
    if len(blob) < 16:
        raise ShapeMismatch(f"{path}: truncated archive header")
    version = int(np.frombuffer(blob[4:8], dtype="<u4")[0])
    if version != FORMAT_VERSION:
        raise VersionMismatch(
            f"{path}: format version {version}, expected {FORMAT_VERSION}")
    mlen = int(np.frombuffer(blob[8:16], dtype="<u8")[0])
    if len(blob) < 16 + mlen:
        raise ShapeMismatch(f"{path}: truncated manifest")
    manifest = json.loads(blob[16:16 + mlen].decode("utf-8"))
    payload = blob[16 + mlen:]
    expected = sum(int(np.prod(spec["shape"])) for spec in manifest["arrays"])
    if len(payload) != expected * 4:
        raise ShapeMismatch(
            f"{path}: payload holds {len(payload)} bytes, manifest declares "
            f"{expected * 4}")
    arrays = {}
    offset = 0
    for spec in manifest["arrays"]:
        size = int(np.prod(spec["shape"]))
        flat = np.frombuffer(payload, dtype="<f4", count=size, offset=offset * 4)
        arrays[spec["name"]] = flat.reshape(spec["shape"]).astype(DTYPE)
        offset += size
    return manifest, arrays


def _vocab_from_manifest(manifest):
    tokens = manifest["vocabulary"]
    if not tokens or tokens[0] != UNK:
        raise ArchiveError("manifest vocabulary must start with the UNK token")
    return Vocabulary(tokens[1:])


def save_embedding(path, vectors, vocab, config):
    save_archive(path, "pretrain", config, {"vectors": vectors},
                 extra={"vocabulary": vocab.index_to_token})


def load_embedding(path):
    manifest, arrays = load_archive(path)
    _expect_stage(manifest, "pretrain", path)
    return arrays["vectors"], _vocab_from_manifest(manifest), manifest


def save_classifier(path, model, config):
    arrays = dict(model.params())
    emb = model.embedding
    if emb.static is not None:
        arrays["emb.static"] = emb.static
    if emb.dynamic is not None:
        arrays["emb.dynamic"] = emb.dynamic
    extra = {
        "vocabulary": model.vocab.index_to_token,
        "labels": model.labels,
        "cell_kind": model.cell_kind,
        "embedding_mode": emb.mode,
        "hidden": model.hidden,
        "embedding_dim": emb.dim,
    }
    save_archive(path, "train-embed", config, arrays, extra=extra)


def load_classifier(path):
    manifest, arrays = load_archive(path)
    _expect_stage(manifest, "train-embed", path)
    vocab = _vocab_from_manifest(manifest)
    mode = manifest["embedding_mode"]
    embedding = TwoChannelEmbedding(
        mode,
        static=arrays.get("emb.static"),
        dynamic=arrays.get("emb.dynamic"),
    )
    model = DomainClassifier(
        vocab, manifest["labels"], embedding,
        hidden=int(manifest["hidden"]), cell_kind=manifest["cell_kind"],
    )
    for name, arr in model.params().items():
        if name not in arrays:
            raise ShapeMismatch(f"{path}: missing array {name!r}")
        if arrays[name].shape != arr.shape:
            raise ShapeMismatch(
                f"{path}: array {name!r} has shape {arrays[name].shape}, "
                f"model expects {arr.shape}")
        arr[...] = arrays[name]
    return model, manifest


def save_autoencoder(path, model, threshold, config):
    save_archive(path, "train-detect", config, dict(model.params()),
                 extra={"dim": model.dim, "threshold": threshold})


def load_autoencoder(path):
    manifest, arrays = load_archive(path)
    _expect_stage(manifest, "train-detect", path)
    model = Autoencoder(int(manifest["dim"]))
    for name, arr in model.params().items():
        if arrays[name].shape != arr.shape:
            raise ShapeMismatch(f"{path}: array {name!r} shape mismatch")
        arr[...] = arrays[name]
    return model, float(manifest["threshold"]), manifest


def save_representations(path, reps, sentences, config):
    extra = {
        "count": int(reps.shape[0]),
        "dim": int(reps.shape[1]),
        "origins": [s.origin for s in sentences],
        "labels": [s.label for s in sentences],
        "lengths": [len(s.tokens) for s in sentences],
    }
    save_archive(path, "embed", config, {"reps": reps}, extra=extra)


def load_representations(path):
    manifest, arrays = load_archive(path)
    _expect_stage(manifest, "embed", path)
    return arrays["reps"], manifest


def _expect_stage(manifest, stage, path):
    if manifest.get("stage") != stage:
        raise ArchiveError(
            f"{path}: archive holds stage {manifest.get('stage')!r}, "
            f"expected {stage!r}")
