"""Differentiable-computation substrate: tensors, layers, losses, RAdam."""

from .tensor import (
    Tensor,
    add,
    sub,
    mul,
    matmul,
    reshape,
    transpose_last2,
    concat_last,
    relu,
    softmax,
    layer_norm,
    conv1d_same,
    maxpool1d,
    global_maxpool,
    batchnorm_train,
    batchnorm_eval,
    mean_all,
    neg_log_pick_mean,
)
from .layers import (
    Layer,
    Dense,
    Conv1dSame,
    BatchNorm1d,
    ReLU,
    Softmax,
    MaxPool1d,
    GlobalMaxPool,
    Flatten,
    Dropout,
    LayerNorm,
    MultiHeadSelfAttention,
    TransformerBlock,
    glorot_uniform,
)
from .losses import (
    PROB_FLOOR,
    scce,
    scce_loss,
    mse,
    mse_loss,
    mape,
    mape_details,
    sparse_accuracy,
)
from .optim import RAdam
from .gradcheck import analytic_gradients, numeric_gradients, max_relative_error
from .checkpoint import save_arrays, load_arrays

__all__ = [
    "Tensor", "add", "sub", "mul", "matmul", "reshape", "transpose_last2",
    "concat_last", "relu", "softmax", "layer_norm", "conv1d_same", "maxpool1d",
    "global_maxpool", "batchnorm_train", "batchnorm_eval", "mean_all",
    "neg_log_pick_mean",
    "Layer", "Dense", "Conv1dSame", "BatchNorm1d", "ReLU", "Softmax",
    "MaxPool1d", "GlobalMaxPool", "Flatten", "Dropout", "LayerNorm",
    "MultiHeadSelfAttention", "TransformerBlock", "glorot_uniform",
    "PROB_FLOOR", "scce", "scce_loss", "mse", "mse_loss", "mape",
    "mape_details", "sparse_accuracy",
    "RAdam",
    "analytic_gradients", "numeric_gradients", "max_relative_error",
    "save_arrays", "load_arrays",
]
