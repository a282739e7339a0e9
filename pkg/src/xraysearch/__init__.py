"""Content-based image retrieval with stacked autoencoder features.

Images become normalized 32x32 pixel vectors, a stack of tied-weight
autoencoder layers compresses them into short feature vectors, and an
exact Euclidean nearest-neighbor scan answers queries. Retrieval quality
is scored by a hierarchy-aware distance between classification codes.
"""

from .autoencoder import (AutoencoderLayer, TrainConfig, TrainReport,
                          cross_entropy, decode, encode, gradients,
                          init_layer, rms_reconstruction_error, train_layer)
from .dataset import (CorpusStats, ManifestRecord, corpus_stats, decode_image,
                      generate_synthetic_corpus, load_manifest, load_vector,
                      load_vectors, preprocess, split_records, stats_csv)
from .errors import (CorruptIndex, CorruptModel, DecodeError, DegenerateImage,
                     DimensionMismatch, DuplicateId, EmptyIndex,
                     InvalidArchitecture, InvalidDimensions, MalformedCode,
                     MalformedManifest, MalformedTaxonomy, TaxonomyGap,
                     XraySearchError)
from .evaluation import (EvalReport, EvalRow, evaluate, report_csv,
                         summary_json)
from .irma import (IrmaCode, Taxonomy, Verdict, axis_error, axis_verdicts,
                   code_error, parse_code, position_verdicts)
from .search import (FeatureIndex, FeatureRecord, Hit, QueryResult, binarize,
                     build_index, euclidean, knn, load_index, save_index)
from .stacked import (StackedEncoder, compression_percent, encode_features,
                      encode_features_batch, full_unroll_rms, load_model,
                      save_model, train_stack)

__version__ = "0.1.0"

__all__ = [
    "AutoencoderLayer", "TrainConfig", "TrainReport", "cross_entropy",
    "decode", "encode", "gradients", "init_layer",
    "rms_reconstruction_error", "train_layer",
    "CorpusStats", "ManifestRecord", "corpus_stats", "decode_image",
    "generate_synthetic_corpus", "load_manifest", "load_vector",
    "load_vectors", "preprocess", "split_records", "stats_csv",
    "CorruptIndex", "CorruptModel", "DecodeError", "DegenerateImage",
    "DimensionMismatch", "DuplicateId", "EmptyIndex", "InvalidArchitecture",
    "InvalidDimensions", "MalformedCode", "MalformedManifest",
    "MalformedTaxonomy", "TaxonomyGap", "XraySearchError",
    "EvalReport", "EvalRow", "evaluate", "report_csv", "summary_json",
    "IrmaCode", "Taxonomy", "Verdict", "axis_error", "axis_verdicts",
    "code_error", "parse_code", "position_verdicts",
    "FeatureIndex", "FeatureRecord", "Hit", "QueryResult", "binarize",
    "build_index", "euclidean", "knn", "load_index", "save_index",
    "StackedEncoder", "compression_percent", "encode_features",
    "encode_features_batch", "full_unroll_rms", "load_model", "save_model",
    "train_stack",
]
