"""Команды командной строки."""

from .commands import (
    cmd_eval,
    cmd_gen_data,
    cmd_perturb,
    cmd_pretrain_mlm,
    cmd_train,
    load_data_dir,
    vocab_path_for,
)
from .ablation import AblationFailedError, cmd_ablate, format_table

__all__ = [
    "cmd_eval",
    "cmd_gen_data",
    "cmd_perturb",
    "cmd_pretrain_mlm",
    "cmd_train",
    "load_data_dir",
    "vocab_path_for",
    "AblationFailedError",
    "cmd_ablate",
    "format_table",
]
