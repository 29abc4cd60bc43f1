"""Toy-scale solution-aware policy encoder with verified gradients."""

from .model import (
    EncoderParams,
    EncoderPolicy,
    PolicyOutput,
    encode_logical,
    encode_physical,
    forward,
    fuse_and_head,
    grad_check,
    load_params,
    save_params,
)

__all__ = [
    "EncoderParams",
    "EncoderPolicy",
    "PolicyOutput",
    "encode_logical",
    "encode_physical",
    "forward",
    "fuse_and_head",
    "grad_check",
    "load_params",
    "save_params",
]
