from .layers import (Conv2d, Dense, Embedding, Flatten, IndexOutOfVocabulary,
                     Layer, Param, ReLU, ShapeMismatch)
from .heads import (ActionOutOfRange, clamp_log_std, cross_entropy, softmax,
                    tanh_gaussian_log_prob, tanh_gaussian_nll, tanh_gaussian_sample)
from .optim import Adam, cosine_lr
from .checkpoint import load_checkpoint, params_hash, save_checkpoint

__all__ = [
    "Conv2d", "Dense", "Embedding", "Flatten", "Layer", "Param", "ReLU",
    "ShapeMismatch", "IndexOutOfVocabulary", "ActionOutOfRange",
    "clamp_log_std", "cross_entropy", "softmax", "tanh_gaussian_log_prob",
    "tanh_gaussian_nll", "tanh_gaussian_sample", "Adam", "cosine_lr",
    "load_checkpoint", "save_checkpoint", "params_hash",
]
