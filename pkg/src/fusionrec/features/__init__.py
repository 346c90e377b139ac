from .encode import FeatureSpec, encode_low, fnv1a64
from .store import EmbeddingStore, load_store, write_store, STORE_DIM, MODALITIES
from .embedder import FeatureEmbedder, FeatureTables, Upsampler, structured_feature_specs

__all__ = [
    "FeatureSpec", "encode_low", "fnv1a64",
    "EmbeddingStore", "load_store", "write_store", "STORE_DIM", "MODALITIES",
    "FeatureEmbedder", "FeatureTables", "Upsampler", "structured_feature_specs",
]
