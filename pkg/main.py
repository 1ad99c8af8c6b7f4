"""Точка входа: консистентное обучение с виртуально-адверсариальной заменой токенов.

Подкоманды:
  gen-data      синтетический корпус → labeled/unlabeled/dev/test TSV + spec.json
  pretrain-mlm  словарь + предобучение контекстной MLM (дальше только читается)
  train         обучение классификатора (CE + согласованность) → чекпоинт + метрики
  eval          точность чекпоинта на TSV
  perturb       дамп возмущений для входного TSV
  ablate        сетка стратегия × S × seed → сводная таблица

Конфиг: --config <файл key=value> и --set key=value; явные флаги важнее
файла, файл важнее значений по умолчанию.

Коды выхода: 0 — успех, 1 — ошибка валидации, 2 — ошибка выполнения.
Итоговая запись команды печатается в stdout одной строкой JSON, логи — в stderr.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from cli import cmd_ablate, cmd_eval, cmd_gen_data, cmd_perturb, cmd_pretrain_mlm, cmd_train
from config.run_config import CE_ONLY, RunConfig
from config.settings import settings
from storage import dumps
from utils.logger import logger

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2

# dest аргумента → ключ RunConfig
_FLAG_KEYS: Dict[str, str] = {
    "seed": "seed",
    "data": "paths.data",
    "mlm": "paths.mlm",
    "checkpoint": "paths.checkpoint",
    "metrics_out": "paths.metrics",
    "out": "paths.out",
    "tau": "perturb.tau",
    "topk": "perturb.k",
    "temp": "perturb.T",
    "refine": "perturb.S",
    "steps": "train.total_steps",
    "epochs": "mlm.epochs",
}


# ---------------------------------------------------------------------------
# Аргументы
# ---------------------------------------------------------------------------

def _csv(kind):
    def parse(raw: str) -> List[Any]:
        try:
            return [kind(part.strip()) for part in raw.split(",") if part.strip()]
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected a comma-separated list of {kind.__name__}, got {raw!r}")
    return parse


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vatd", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run config file (dotted key=value lines)")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key, repeatable")
    common.add_argument("--seed", type=int)

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", parents=[common], help="generate the synthetic corpus")
    p.add_argument("--out", help="output directory")

    p = sub.add_parser("pretrain-mlm", parents=[common], help="pretrain and freeze the MLM")
    p.add_argument("--data", help="data directory")
    p.add_argument("--out", help="MLM checkpoint path")
    p.add_argument("--epochs", type=int)

    p = sub.add_parser("train", parents=[common], help="train the classifier")
    p.add_argument("--data")
    p.add_argument("--mlm", help="frozen MLM checkpoint")
    p.add_argument("--checkpoint", help="best classifier checkpoint path")
    p.add_argument("--metrics-out", dest="metrics_out", help="metrics log (JSONL)")
    p.add_argument("--strategy", help=f"candidate strategy or {CE_ONLY}")
    p.add_argument("--steps", type=int)
    p.add_argument("--refine", type=int, help="refinement steps S")

    p = sub.add_parser("eval", parents=[common], help="accuracy of a checkpoint on a TSV file")
    p.add_argument("--checkpoint")
    p.add_argument("--data", dest="eval_data", help="TSV file")

    p = sub.add_parser("perturb", parents=[common], help="dump perturbations of a TSV file")
    p.add_argument("--classifier", required=True)
    p.add_argument("--mlm")
    p.add_argument("--input", required=True)
    p.add_argument("--out")
    p.add_argument("--tau", type=float)
    p.add_argument("--topk", type=int)
    p.add_argument("--temp", type=float)
    p.add_argument("--refine", type=int)
    p.add_argument("--strategy")

    p = sub.add_parser("ablate", parents=[common], help="strategy × refinement × seed sweep")
    p.add_argument("--data")
    p.add_argument("--mlm")
    p.add_argument("--out", help="output directory")
    p.add_argument("--strategies", type=_csv(str), required=True)
    p.add_argument("--seeds", type=_csv(int), required=True)
    p.add_argument("--refine", dest="refine_list", type=_csv(int), help="comma-separated S values")
    p.add_argument("--steps", type=int)
    p.add_argument("--jobs", type=int, default=1)

    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """По умолчанию ← --config ← --set ← явные флаги."""
    overrides: Dict[str, Any] = {}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise ValueError(f"--set expects KEY=VALUE, got {item!r}")
        overrides[key.strip()] = value
    for dest, key in _FLAG_KEYS.items():
        value = getattr(args, dest, None)
        if value is not None:
            overrides[key] = value

    strategy = getattr(args, "strategy", None)
    if strategy is not None and strategy != CE_ONLY:
        overrides["perturb.strategy"] = strategy
    config = RunConfig.load(args.config, overrides)
    if strategy == CE_ONLY:
        config = config.with_strategy(CE_ONLY)
    return config


# ---------------------------------------------------------------------------
# Диспетчер
# ---------------------------------------------------------------------------

def _default_out(name: str) -> str:
    return str(Path(settings.OUTPUT_DIR) / name)


def dispatch(args: argparse.Namespace) -> Dict[str, Any]:
    if args.command == "eval":
        return cmd_eval(args.checkpoint, args.eval_data)

    config = resolve_config(args)
    if args.command == "gen-data":
        return cmd_gen_data(config, config["paths.out"] or config["paths.data"] or _default_out("data"))
    if args.command == "pretrain-mlm":
        return cmd_pretrain_mlm(config, config["paths.data"], config["paths.out"] or config["paths.mlm"])
    if args.command == "train":
        return cmd_train(config, config["paths.data"], config["paths.checkpoint"], config["paths.metrics"],
                         mlm_path=config["paths.mlm"] or None)
    if args.command == "perturb":
        return cmd_perturb(config, args.classifier, config["paths.mlm"], args.input, config["paths.out"])
    if args.command == "ablate":
        out = config["paths.out"] or _default_out("ablation")
        return cmd_ablate(config, config["paths.data"], out, args.strategies, args.seeds,
                          refine_steps=args.refine_list, mlm_path=config["paths.mlm"] or None, jobs=args.jobs)
    raise ValueError(f"unknown command {args.command!r}")


def run(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)

    try:
        settings.validate()
        if settings.LOG_LEVEL == "DEBUG":
            settings.display()
        result = dispatch(args)
    except KeyboardInterrupt:
        logger.warning("Interrupted by user")
        return EXIT_OK
    except (ValueError, FileNotFoundError) as exc:
        logger.error(f"{args.command}: {exc}")
        return EXIT_VALIDATION
    except Exception as exc:
        logger.error(f"{args.command} failed: {exc!r}")
        logger.debug("Traceback:", exc_info=True)
        return EXIT_RUNTIME

    sys.stdout.write(dumps(result).decode("utf-8") + "\n")
    sys.stdout.flush()
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(run())
