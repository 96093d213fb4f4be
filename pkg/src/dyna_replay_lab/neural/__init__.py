from dyna_replay_lab.neural.adam import AdamState, adam_step
from dyna_replay_lab.neural.double_q import EmptyBatchException, TransitionBatch, double_q_targets, double_q_update
from dyna_replay_lab.neural.mlp import HIDDEN_WIDTHS, Mlp, forward, gradients
from dyna_replay_lab.neural.snapshot import SnapshotFormatException, load_parameters, save_parameters
