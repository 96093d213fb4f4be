from dyna_replay_lab.core.exceptions import ShapeMismatchException
from dyna_replay_lab.stability.linear_td import (
    InvalidParameterException,
    LinearMrp,
    StabilityReport,
    TdIteration,
    Verdict,
    closed_form_key,
    iterate_expected_td,
    key_matrix,
    linear_mrp_from_empirical,
    stability_verdict,
    two_state_mrp,
)
from dyna_replay_lab.stability.lstd import (
    FeatureDataset,
    LinearSolution,
    SingularSystemException,
    fit_and_solve_linear_model,
    lstd_solve,
)
from dyna_replay_lab.stability.sweeps import (
    LikelihoodCurve,
    RegionSweep,
    divergence_region_sweep,
    empirical_divergence_likelihood,
)
