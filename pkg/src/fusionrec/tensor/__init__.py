from .tensor import Tensor, Tape
from .optim import Adam
from .gradcheck import grad_check
from .checkpoint import save_params, load_params

__all__ = ["Tensor", "Tape", "Adam", "grad_check", "save_params", "load_params"]
