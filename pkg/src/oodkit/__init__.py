"""Out-of-domain sentence detection toolkit.

Trains a detector for multi-domain dialog systems using in-domain sentences
only: skip-gram word vectors, a bidirectional recurrent domain classifier
whose hidden states become sentence embeddings, and an autoencoder that
flags sentences by reconstruction error.
"""

__version__ = "0.1.0"
