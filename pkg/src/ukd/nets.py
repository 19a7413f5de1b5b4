"""Teacher and student networks: plain ReLU MLPs over the autodiff engine.

The teacher is the widest and deepest stack; the two students are smaller
and deliberately different from each other in depth and width so that each
can pick up complementary structure. Freezing a network drops its gradient
requirements permanently; the training harness never updates frozen
parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

import numpy as np

from .errors import ParameterError, ShapeError, SpecError
from .gradcore import Tensor, add, matmul, no_grad, relu

ACTIVATIONS = ("none", "relu")


@dataclass(frozen=True)
class LayerSpec:
    """One affine layer: in_dim -> out_dim followed by the named activation."""

    in_dim: int
    out_dim: int
    activation: str = "relu"


def _validate_spec(spec: list[LayerSpec]) -> None:
    if not spec:
        raise SpecError("network spec needs at least one layer")
    for i, layer in enumerate(spec):
        if layer.in_dim < 1 or layer.out_dim < 1:
            raise SpecError(f"layer {i} dims must be >= 1, got {layer.in_dim}->{layer.out_dim}")
        if layer.activation not in ACTIVATIONS:
            raise SpecError(f"layer {i} activation {layer.activation!r} not in {ACTIVATIONS}")
    for i in range(len(spec) - 1):
        if spec[i].out_dim != spec[i + 1].in_dim:
            raise SpecError(
                f"layer {i} out_dim {spec[i].out_dim} != layer {i + 1} in_dim {spec[i + 1].in_dim}"
            )
    if spec[-1].activation != "none":
        raise SpecError("final layer must have activation 'none' (emits logits)")


class Network:
    """Ordered affine+activation stack with named parameter tensors."""

    def __init__(self, layers: list[LayerSpec], params: dict[str, Tensor], frozen: bool = False):
        self.layers = list(layers)
        self.params = params
        self.frozen = frozen

    @property
    def parameters(self) -> list[Tensor]:
        """Parameters in layer order: weight_0, bias_0, weight_1, ..."""
        out = []
        for i in range(len(self.layers)):
            out.append(self.params[f"weight_{i}"])
            out.append(self.params[f"bias_{i}"])
        return out

    def freeze(self) -> "Network":
        """Permanently stop gradient tracking; parameters become read-only by contract."""
        self.frozen = True
        for p in self.parameters:
            p.requires_grad = False
            p.grad = None
        return self

    def __repr__(self):
        dims = [self.layers[0].in_dim] + [layer.out_dim for layer in self.layers]
        arrow = "->".join(str(d) for d in dims)
        state = "frozen" if self.frozen else "trainable"
        return f"Network({arrow}, {state}, {param_count(self)} params)"


def build(spec: list[LayerSpec], seed: int) -> Network:
    """He-initialized network: weights ~ N(0, 2/in_dim), biases zero."""
    _validate_spec(spec)
    rng = np.random.default_rng(seed)
    params: dict[str, Tensor] = {}
    for i, layer in enumerate(spec):
        std = math.sqrt(2.0 / layer.in_dim)
        w = rng.normal(0.0, std, (layer.in_dim, layer.out_dim))
        params[f"weight_{i}"] = Tensor(w, requires_grad=True)
        params[f"bias_{i}"] = Tensor(np.zeros(layer.out_dim), requires_grad=True)
    return Network(spec, params)


def forward(net: Network, x: Tensor) -> Tensor:
    """Logits for a [batch, in_dim] input; no graph is recorded for frozen nets."""
    if not isinstance(x, Tensor):
        x = Tensor(x)
    if x.data.ndim != 2 or x.shape[1] != net.layers[0].in_dim:
        raise ShapeError(
            f"input shape {x.shape} does not match first layer in_dim {net.layers[0].in_dim}"
        )
    if net.frozen:
        with no_grad():
            return _stack(net, x)
    return _stack(net, x)


def _stack(net: Network, x: Tensor) -> Tensor:
    h = x
    for i, layer in enumerate(net.layers):
        h = add(matmul(h, net.params[f"weight_{i}"]), net.params[f"bias_{i}"])
        if layer.activation == "relu":
            h = relu(h)
    return h


def param_count(net: Network) -> int:
    return sum(layer.in_dim * layer.out_dim + layer.out_dim for layer in net.layers)


def compression_ratio(teacher_params, student_params) -> float:
    """teacher/student parameter ratio, rounded half-up to 2 decimals."""
    if not teacher_params > 0 or not student_params > 0:
        raise ParameterError(
            f"parameter counts must be positive, got {teacher_params} and {student_params}"
        )
    ratio = Decimal(str(teacher_params)) / Decimal(str(student_params))
    return float(ratio.quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def default_teacher_spec(in_dim: int = 16, num_classes: int = 10) -> list[LayerSpec]:
    """Widest stack: three hidden layers of 128."""
    return [
        LayerSpec(in_dim, 128),
        LayerSpec(128, 128),
        LayerSpec(128, 128),
        LayerSpec(128, num_classes, "none"),
    ]


def default_student1_spec(in_dim: int = 16, num_classes: int = 10) -> list[LayerSpec]:
    """Mid-sized student: two hidden layers of 64."""
    return [
        LayerSpec(in_dim, 64),
        LayerSpec(64, 64),
        LayerSpec(64, num_classes, "none"),
    ]


def default_student2_spec(in_dim: int = 16, num_classes: int = 10) -> list[LayerSpec]:
    """Narrow student: one hidden layer of 32."""
    return [
        LayerSpec(in_dim, 32),
        LayerSpec(32, num_classes, "none"),
    ]
