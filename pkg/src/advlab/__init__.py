"""advlab: adversarial training of linear classifiers on noisy mixtures.

The package studies full-batch gradient descent on the worst-case
exponential loss under lp-bounded test-time perturbations.  The inner
maximization over the perturbation ball has an exact closed form for linear
classifiers, so training, evaluation, and the induced margins can all be
computed without an attack loop; a two-layer ReLU baseline with projected
gradient ascent is included for contrast.

Layout:

- norms:        conjugate exponents, lp norms, q-norm subgradients, the
                closed-form worst-case perturbation, lp-ball projections
- data:         noisy mixture sampling with per-sample random streams
- margins:      best q-normalized and perturbation-adjusted margins
- training:     the full-batch trainer and its trajectory record
- risk:         analytic (gaussian) and Monte Carlo risk evaluators
- lemmas:       empirical checks of the trajectory inequalities
- network:      two-layer ReLU net, PGD attacks, adversarial training
- experiments:  sweep grids, CSV/SVG artifacts
- cli:          the ``advlab`` command
"""

from .data import (
    AssumptionReport,
    Dataset,
    MixtureSpec,
    check_assumptions,
    generate,
    load_dataset_csv,
    mu_from_scaling,
    save_dataset_csv,
)
from .experiments import ExperimentConfig, SweepRow, load_config_file, run_figure
from .lemmas import (
    LEMMA_IDS,
    LemmaReport,
    geometry_constant,
    run_seed_batch,
    run_suite,
)
from .margins import MarginResult, adversarial_margin, standard_margin
from .network import (
    NetTrainLog,
    PgdConfig,
    TwoLayerNet,
    adv_train_nn,
    evaluate_nn_risks,
    forward,
    init_network,
    loss_and_gradients,
    pgd_attack,
)
from .norms import (
    PerturbationModel,
    dual_exponent,
    lp_norm,
    norm_subgradient,
    project_onto_ball,
    worst_case_perturbation,
)
from .risk import RiskReport, analytic_risk, misclassified_adversarially, monte_carlo_risk
from .training import (
    TrainConfig,
    TrainRecord,
    TrainingDiverged,
    adversarial_log_loss,
    adversarial_loss,
    adversarial_loss_gradient,
    alignment,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "AssumptionReport",
    "Dataset",
    "ExperimentConfig",
    "LEMMA_IDS",
    "LemmaReport",
    "MarginResult",
    "MixtureSpec",
    "NetTrainLog",
    "PerturbationModel",
    "PgdConfig",
    "RiskReport",
    "SweepRow",
    "TrainConfig",
    "TrainRecord",
    "TrainingDiverged",
    "TwoLayerNet",
    "adv_train_nn",
    "adversarial_log_loss",
    "adversarial_loss",
    "adversarial_loss_gradient",
    "adversarial_margin",
    "alignment",
    "analytic_risk",
    "check_assumptions",
    "dual_exponent",
    "evaluate_nn_risks",
    "forward",
    "generate",
    "geometry_constant",
    "init_network",
    "load_config_file",
    "load_dataset_csv",
    "loss_and_gradients",
    "lp_norm",
    "misclassified_adversarially",
    "monte_carlo_risk",
    "mu_from_scaling",
    "norm_subgradient",
    "pgd_attack",
    "project_onto_ball",
    "run_figure",
    "run_seed_batch",
    "run_suite",
    "save_dataset_csv",
    "standard_margin",
    "train",
    "worst_case_perturbation",
]
