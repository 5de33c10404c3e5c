"""Editable rule explanations backed by trainable networks.

Core pipeline: compile user decision-tree rules into an equivalent network,
train it under behavior/structure constraints, and distill a faithful tree
back out for the user to inspect and edit.
"""

from .compile import ParseConfig, equivalence_check, parse
from .data import (AttributeSchema, DataError, Dataset, DistShiftReport,
                   SplitPredicate, accuracy, denormalize_threshold, dist_shift,
                   load_csv, partition)
from .distill import distill, faithfulness, tune_depth
from .enhance import (Constraints, EnhanceResult, ProxyModel, composite_loss,
                      diff_history, enhance_thresholds, enhance_topology,
                      finetune_baseline, fit_proxy, make_guideline_tree,
                      map_sliders, train_fresh_network)
from .network import (AdamState, Layer, Network, NetworkError, NodeBinding,
                      TrainConfig, adam_step, cross_entropy, random_network,
                      softmax, train_supervised)
from .synth import (adult_like, adult_task, heart_like, heart_task,
                    leaf_region_samples, random_tree)
from .ted import CostConfig, EditOp, TedResult, distance, node_label_cost, reconstruct_target
from .tree import (DecisionTree, Node, TreeError, from_jsonlogic, learn_cart,
                   single_leaf, to_jsonlogic)

__version__ = "0.1.0"
