from .fidelity import FidelityRecord, product_fidelity
from .msssim import ms_ssim
from .preference import PreferenceTally, preference_rate
from .stats import PairedTestResult, paired_t_test
from .report import evaluate_run, records_to_csv, summarize, summary_to_json

__all__ = [
    "FidelityRecord",
    "product_fidelity",
    "ms_ssim",
    "PreferenceTally",
    "preference_rate",
    "PairedTestResult",
    "paired_t_test",
    "evaluate_run",
    "records_to_csv",
    "summarize",
    "summary_to_json",
]
