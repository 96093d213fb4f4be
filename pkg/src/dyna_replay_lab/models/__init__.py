from dyna_replay_lab.models.neural_model import NeuralModel, NeuralModelLearner, neural_predict, train_step
from dyna_replay_lab.models.tabular import (
    DirichletTabularModel,
    ModelDirection,
    ModelDirectionException,
    ModelSupportException,
    model_update,
    sample_backward,
    sample_forward,
)
