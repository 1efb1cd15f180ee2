"""Gamma distributional regression of tree diameter distributions."""

from ._dbhdist import (
    DomainError,
    NumericalError,
    ValidationError,
    cdf,
    compute_dic,
    compute_waic,
    fit,
    ks_statistic_normal,
    log_pdf,
    pdf,
    quantile,
    quantile_residual,
    retained_draws,
    run,
    sample,
    settings,
    size_class_probs,
)

__all__ = [
    "DomainError",
    "NumericalError",
    "ValidationError",
    "cdf",
    "compute_dic",
    "compute_waic",
    "fit",
    "ks_statistic_normal",
    "log_pdf",
    "pdf",
    "quantile",
    "quantile_residual",
    "retained_draws",
    "run",
    "run_command",
    "sample",
    "settings",
    "size_class_probs",
]


def run_command(command, settings=None, base_dir=".", **overrides):
    """Run a workflow step; keyword overrides are merged into ``settings``."""
    merged = {k: str(v) for k, v in (settings or {}).items()}
    merged.update({k: str(v) for k, v in overrides.items()})
    return run(command, merged, str(base_dir))
