from dyna_replay_lab.replay.buffer import EmptyBufferException, ReplayBuffer, ReplayFormatException
from dyna_replay_lab.replay.empirical import EmpiricalModel, build_empirical_model
