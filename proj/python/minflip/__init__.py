"""White-box L1-minimal adversarial attack pipeline for dense binary classifiers.

The heavy lifting lives in the compiled extension ``_minflip``; this package
re-exports its surface.
"""

try:
    from ._minflip import *  # noqa: F401,F403
    from ._minflip import __doc__ as _core_doc  # noqa: F401
except ImportError:  # running against a build tree, module on sys.path
    from _minflip import *  # noqa: F401,F403

__all__ = [
    "Activation",
    "ModelSpec",
    "Model",
    "GdConfig",
    "CampaignConfig",
    "AttackCandidate",
    "MetricsRecord",
    "forward",
    "predict",
    "bce",
    "input_gradient",
    "finite_diff_gradient",
    "train_surrogate",
    "generate_synthetic",
    "piecewise_loss",
    "loss_subgradient",
    "gd_attack",
    "follow_up",
    "core_baseline",
    "core_step_size",
    "step_bounds",
    "run_campaign",
    "fooling_ratio",
    "evaluate",
    "score",
    "load_model",
    "save_model",
    "load_dataset",
    "save_dataset",
    "save_adversarial",
    "load_adversarial",
]
