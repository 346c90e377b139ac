from .positional import positional_encoding
from .attention import batched_attention, multi_head, self_attention
from .encoder import EncoderConfig, EncoderLayerParams, encoder_forward, layer_forward, make_layer
from .model import (ClassifierHead, FusionModel, ModelConfig, N_CLASSES, SEQ_LEN,
                    classify, extract_cls, predict_rating)

__all__ = [
    "positional_encoding", "batched_attention", "multi_head", "self_attention",
    "EncoderConfig", "EncoderLayerParams", "encoder_forward", "layer_forward",
    "make_layer", "ClassifierHead", "FusionModel", "ModelConfig", "N_CLASSES",
    "SEQ_LEN", "classify", "extract_cls", "predict_rating",
]
