"""Per-token adapter routing at desk scale.

Routes each token of a batch to its own low-rank adapter, executes the
batch as grouped matmuls driven by a dispatch plan, simulates the
serving-memory tradeoffs (hot-set slots vs LRU paging) with an
additive cost model, and trains a gated mixture of adapters whose
router discovers routing structure from data.
"""

from .bench import proportions_to_counts, tiled_cost
from .catalog import AdapterCatalog, LoraPair, random_catalog
from .compute import (WorkReport, count_work, lora_forward_per_token,
                      lora_forward_reference, per_sequence_simulate,
                      seq_needed_from_decision)
from .dispatch import DispatchPlan, build_dispatch, gather, scatter, select_tiles
from .errors import (CheckFailure, ConfigError, ContractViolation, FormatError,
                     ShapeError, TokrouteError, TrainingError)
from .linalg import frobenius_rel_err
from .memory import (CostModel, LatencyStats, PagerState, SlotTable, StepStructure,
                     gen_workload, hotset_access, measure_miss_rate,
                     pager_access, simulate_serving)
from .molora import (RouterParams, RoutingTask, TrainConfig, TrainHistory, ari,
                     aux_loss, confusion, evaluate, init_router, load_router,
                     make_cluster_task, make_labeled_task, molora_forward, nmi,
                     router_forward, routing_entropy, save_router, topk_softmax,
                     train_router)
from .routing import (RoutingDecision, TokenBatch, VocabBreaks,
                      comparison_counter, decompose_compositional,
                      modality_mask, route_batch_compositional,
                      route_batch_per_sequence, route_batch_vocab,
                      route_vocab, sort_permutation)

__version__ = "0.1.0"
