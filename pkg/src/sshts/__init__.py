"""Approximate similarity search for time series under dynamic time warping.

The pipeline hashes each series in three steps (random-filter bit sketch,
n-gram shingling, weighted minhash) into d hash tables whose collisions track
warp-tolerant similarity, then reranks hash candidates exactly with DTW
behind a cascade of cheap lower bounds. The same cascade over the full
dataset is the exact baseline the index is benchmarked against.
"""

from .core import (
    ConfigError,
    DataFormatError,
    Dataset,
    IndexLoadError,
    SshError,
    TimeSeries,
    extract_subsequences,
    generate_random_walk,
    load_dataset,
    load_recording,
    make_dataset,
    save_dataset,
    z_normalize,
    z_normalize_dataset,
)
from .sketch import BitSketch, RandomFilter, make_filter, num_sketch_bits, sketch_series
from .shingle import WeightedShingleSet, shingle_sketch, weighted_jaccard
from .wmh import MinHashSignature, signature, wmh_one
from .dtw import (
    Envelope,
    SearchResult,
    SearchStats,
    WarpingParams,
    build_envelope,
    dtw_distance,
    exact_search,
    lb_keogh,
    lb_keogh2,
    lb_kim,
)
from .index import (
    QueryResult,
    SshIndex,
    SshParams,
    build_index,
    load_index,
    query_index,
    save_index,
    srp_signature,
)
from .bench import (
    RankedResult,
    brute_force_topk,
    ndcg_at_k,
    parameter_sweep,
    precision_at_k,
    run_accuracy_experiment,
    run_pruning_experiment,
    run_timing_experiment,
)

__version__ = "0.1.0"
