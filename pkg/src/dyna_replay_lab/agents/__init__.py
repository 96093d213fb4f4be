from dyna_replay_lab.agents.agent import Agent, ComponentMismatchException, PlannerKind
from dyna_replay_lab.agents.loop import LoopConfig, LoopTrace, run_dyna_loop
from dyna_replay_lab.agents.neural_agent import NeuralQAgent
from dyna_replay_lab.agents.planning import (
    backward_plan_step,
    forward_plan_step,
    imagine_backward,
    imagine_forward,
    replay_plan_step,
)
from dyna_replay_lab.agents.policy import act
from dyna_replay_lab.agents.search import PlanValues, SearchDepthException, bfs_plan
from dyna_replay_lab.agents.tabular_agent import TabularAgent
from dyna_replay_lab.agents.tabular_q import TabularQ, q_learning_update
