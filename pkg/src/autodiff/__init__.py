"""反向模式自动微分"""

from src.autodiff.engine import (
    Node,
    Tensor,
    as_node,
    backward,
    constant,
    parameter,
    value_of,
)
from src.autodiff.gradcheck import grad_check
from src.autodiff.optim import Adam
from src.autodiff.primitives import PRIMITIVES, apply_primitive

__all__ = [
    "Adam",
    "Node",
    "PRIMITIVES",
    "Tensor",
    "apply_primitive",
    "as_node",
    "backward",
    "constant",
    "grad_check",
    "parameter",
    "value_of",
]
