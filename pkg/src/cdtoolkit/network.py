"""Feed-forward classifier engine: initialization, forward, backprop, training step.

Binarized networks keep the first and last weight matrices in full precision
and pass the middle weight matrices and every hidden activation through
``sign`` (with ``sign(0) = +1``). Gradients cross the sign function with the
straight-through estimator: identity where ``|x| <= STE_CLIP``, zero outside.
"""

from typing import NamedTuple

import numpy as np

from .errors import ConfigurationError, DivergenceError, ShapeError
from .models import Activation, Network, NetworkSpec, OptimizerConfig, OptimizerState, Precision
from .optim import OptimizerRegistry, default_registry
from .utils.logging import setup_logger
from .utils.seeding import make_rng

logger = setup_logger(__name__)

STE_CLIP = 1.0


class ForwardTrace(NamedTuple):
    """Intermediate values of one forward pass."""

    inputs: list[np.ndarray]
    """Input of each layer (the batch, then each hidden activation)."""
    pre_activations: list[np.ndarray]
    """``inputs[l] @ effective_weights[l] + biases[l]`` per layer; the last are logits."""
    effective_weights: list[np.ndarray]
    """Weights as used in the forward pass (binarized where applicable)."""
    probabilities: np.ndarray


def binarize(x: np.ndarray) -> np.ndarray:
    """Sign with the convention ``sign(0) = +1``."""
    return np.where(x >= 0, 1.0, -1.0)


def init_network(spec: NetworkSpec) -> Network:
    """Create a network with deterministic initial parameters.

    Every weight and bias of layer ``l`` is drawn uniformly from
    ``[-1/sqrt(fan_in), 1/sqrt(fan_in)]`` by a PCG64 generator seeded with
    ``spec.init_seed``, layer by layer, weights before biases.

    Args:
        spec: Network specification

    Returns:
        Initialized network

    Raises:
        ConfigurationError: If the layer sizes are invalid
    """
    sizes = list(spec.layer_sizes)
    if len(sizes) < 2 or any(size < 1 for size in sizes):
        raise ConfigurationError(f"Invalid layer sizes {sizes}: need >= 2 positive entries")

    rng = make_rng(spec.init_seed)
    weights: list[np.ndarray] = []
    biases: list[np.ndarray] = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:], strict=True):
        scale = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-scale, scale, size=(fan_in, fan_out)))
        biases.append(rng.uniform(-scale, scale, size=fan_out))

    logger.debug(f"Initialized network {sizes} ({spec.precision.value}, seed {spec.init_seed})")
    return Network(spec=spec, weights=weights, biases=biases)


def _binarized_weight(spec: NetworkSpec, layer: int) -> bool:
    layer_count = len(spec.layer_sizes) - 1
    return spec.precision == Precision.BINARIZED and 0 < layer < layer_count - 1


def _check_batch(net: Network, batch: np.ndarray) -> np.ndarray:
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 2:
        raise ShapeError(f"Batch must be 2-D, got {batch.ndim}-D")
    if batch.shape[1] != net.spec.input_dim:
        raise ShapeError(
            f"Batch has {batch.shape[1]} columns but the network expects {net.spec.input_dim}"
        )
    return batch


def _check_targets(batch: np.ndarray, targets: np.ndarray, class_count: int) -> np.ndarray:
    targets = np.asarray(targets)
    if targets.shape != (batch.shape[0],):
        raise ShapeError(f"Expected {batch.shape[0]} targets, got shape {targets.shape}")
    if targets.size and (int(targets.min()) < 0 or int(targets.max()) >= class_count):
        raise ShapeError(f"Targets must lie in [0, {class_count})")
    return targets.astype(np.int64)


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def forward_trace(net: Network, batch: np.ndarray, relaxed: bool = False) -> ForwardTrace:
    """Run a forward pass and keep every intermediate.

    Args:
        net: Network
        batch: Input rows, shape (n, input_dim)
        relaxed: Replace ``sign`` by ``clip(x, -1, 1)``. The straight-through
            masks are the exact derivatives of this relaxation, so gradients
            of a relaxed pass can be checked by finite differences.

    Returns:
        Forward trace

    Raises:
        ShapeError: If the batch does not match the input dimension
    """
    batch = _check_batch(net, batch)
    quantize = (lambda x: np.clip(x, -STE_CLIP, STE_CLIP)) if relaxed else binarize
    binarized = net.spec.precision == Precision.BINARIZED
    layer_count = len(net.weights)

    inputs: list[np.ndarray] = []
    pre_activations: list[np.ndarray] = []
    effective_weights: list[np.ndarray] = []
    activation = batch

    for layer, (w, b) in enumerate(zip(net.weights, net.biases, strict=True)):
        w_eff = quantize(w) if _binarized_weight(net.spec, layer) else w
        z = activation @ w_eff + b
        inputs.append(activation)
        effective_weights.append(w_eff)
        pre_activations.append(z)

        if layer < layer_count - 1:
            if binarized:
                activation = quantize(z)
            elif net.spec.activation == Activation.RELU:
                activation = np.maximum(z, 0.0)
            else:
                activation = np.tanh(z)

    return ForwardTrace(
        inputs=inputs,
        pre_activations=pre_activations,
        effective_weights=effective_weights,
        probabilities=_softmax(pre_activations[-1]),
    )


def forward(net: Network, batch: np.ndarray) -> np.ndarray:
    """Class probabilities for each row of ``batch``.

    Args:
        net: Network
        batch: Input rows, shape (n, input_dim)

    Returns:
        Array of shape (n, class_count); rows sum to 1
    """
    return forward_trace(net, batch).probabilities


def labels_from_probabilities(probabilities: np.ndarray) -> np.ndarray:
    """Argmax per row; exact ties go to the lowest class index."""
    return np.argmax(np.asarray(probabilities), axis=1).astype(np.int64)


def predict_labels(net: Network, batch: np.ndarray) -> np.ndarray:
    """Predicted class index for each row of ``batch``."""
    return labels_from_probabilities(forward(net, batch))


def training_loss(
    net: Network, batch: np.ndarray, targets: np.ndarray, relaxed: bool = False
) -> float:
    """Mean softmax cross-entropy of ``net`` on ``batch``."""
    trace = forward_trace(net, batch, relaxed=relaxed)
    targets = _check_targets(trace.inputs[0], targets, net.spec.class_count)
    log_probs = _log_softmax(trace.pre_activations[-1])
    return float(-log_probs[np.arange(targets.size), targets].mean())


def _activation_derivative(net: Network, z: np.ndarray) -> np.ndarray:
    if net.spec.precision == Precision.BINARIZED:
        return (np.abs(z) <= STE_CLIP).astype(np.float64)
    if net.spec.activation == Activation.RELU:
        return (z > 0).astype(np.float64)
    return 1.0 - np.tanh(z) ** 2


def loss_and_gradients(
    net: Network, batch: np.ndarray, targets: np.ndarray, relaxed: bool = False
) -> tuple[float, list[np.ndarray]]:
    """Cross-entropy loss and its gradients by backpropagation.

    The backward pass uses the straight-through masks for binarized layers.
    With ``relaxed`` the forward pass is the hard-tanh relaxation, and the
    result is then the exact gradient of that relaxed network.

    Args:
        net: Network
        batch: Input rows
        targets: Class index per row
        relaxed: Evaluate the relaxed forward pass

    Returns:
        Tuple of (loss, gradients in ``Network.parameters()`` order)
    """
    trace = forward_trace(net, batch, relaxed=relaxed)
    targets = _check_targets(trace.inputs[0], targets, net.spec.class_count)
    n = targets.size

    log_probs = _log_softmax(trace.pre_activations[-1])
    loss = float(-log_probs[np.arange(n), targets].mean())

    dz = trace.probabilities.copy()
    dz[np.arange(n), targets] -= 1.0
    dz /= n

    layer_count = len(net.weights)
    weight_grads: list[np.ndarray] = [np.empty(0)] * layer_count
    bias_grads: list[np.ndarray] = [np.empty(0)] * layer_count

    for layer in range(layer_count - 1, -1, -1):
        d_weight = trace.inputs[layer].T @ dz
        if _binarized_weight(net.spec, layer):
            d_weight = d_weight * (np.abs(net.weights[layer]) <= STE_CLIP)
        weight_grads[layer] = d_weight
        bias_grads[layer] = dz.sum(axis=0)

        if layer > 0:
            d_input = dz @ trace.effective_weights[layer].T
            dz = d_input * _activation_derivative(net, trace.pre_activations[layer - 1])

    grads: list[np.ndarray] = []
    for d_weight, d_bias in zip(weight_grads, bias_grads, strict=True):
        grads.extend([d_weight, d_bias])
    return loss, grads


def train_step(
    net: Network,
    batch: np.ndarray,
    targets: np.ndarray,
    opt: OptimizerConfig,
    opt_state: OptimizerState | None = None,
    *,
    epoch: int | None = None,
    batch_index: int | None = None,
    registry: OptimizerRegistry | None = None,
) -> tuple[Network, OptimizerState, float]:
    """One optimizer step on the softmax cross-entropy of a batch.

    Args:
        net: Network (not modified)
        batch: Input rows
        targets: Class index per row
        opt: Optimizer configuration
        opt_state: State from the previous step, or None on the first call
        epoch: Epoch number, used in divergence messages
        batch_index: Batch number within the epoch, used in divergence messages
        registry: Optimizer registry (defaults to the built-in rules)

    Returns:
        Tuple of (updated network, updated optimizer state, loss before the step)

    Raises:
        ShapeError: If batch or targets do not fit the network
        DivergenceError: If the loss or the updated parameters are not finite
        ConfigurationError: If ``opt_state`` belongs to a different optimizer
    """
    optimizer = (registry or default_registry()).get_optimizer(opt.kind)
    params = net.parameters()
    if opt_state is None:
        opt_state = optimizer.init_state(params, opt)
    else:
        optimizer.check_state(params, opt_state)

    loss, grads = loss_and_gradients(net, batch, targets)
    if not np.isfinite(loss):
        raise DivergenceError(f"Loss became {loss}", epoch=epoch, batch=batch_index)

    new_params, new_state = optimizer.update(params, grads, opt_state, opt)
    updated = Network.model_construct(
        spec=net.spec, weights=new_params[0::2], biases=new_params[1::2]
    )
    if not updated.is_finite():
        raise DivergenceError("Parameters became non-finite", epoch=epoch, batch=batch_index)

    return updated, new_state, loss
