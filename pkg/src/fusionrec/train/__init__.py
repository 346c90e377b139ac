from .loop import (EvalReport, TrainConfig, cross_entropy, evaluate_rmse,
                   record_arrays, train)
from .results import (CONFIG_SCHEMA_VERSION, RESULT_COLUMNS, append_results,
                      read_results, read_run_config, version_string,
                      write_run_config)
from .sweep import PAPER_LEARNING_RATES, lr_sweep, report_row

__all__ = [
    "EvalReport", "TrainConfig", "cross_entropy", "evaluate_rmse",
    "record_arrays", "train",
    "CONFIG_SCHEMA_VERSION", "RESULT_COLUMNS", "append_results", "read_results",
    "read_run_config", "version_string", "write_run_config",
    "PAPER_LEARNING_RATES", "lr_sweep", "report_row",
]
