"""
Абляция стратегий выбора кандидатов: сетка стратегия × шаги refinement × seed.

Все ячейки разделяют один разрешённый конфиг, различаются только
стратегия, S и seed. Каждая ячейка пишет свой каталог
(<out>/<strategy>-S<S>-seed<seed>/checkpoint.bin, metrics.jsonl) и может
выполняться в отдельном процессе.

Сводка: строка на ключ "strategy/S" (для ce-only просто "ce-only") со
средней и стандартным отклонением лучшей dev-точности, суммарной
гистограммой рангов и средней кривой лосса согласованности.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from config.run_config import CE_ONLY, RunConfig
from perturb import STRATEGIES
from storage import JsonLinesSink, read_records
from utils.logger import logger

from .commands import cmd_train, require_path


class AblationFailedError(RuntimeError):
    """Часть ячеек упала; сводка по остальным записана."""


def _cell_key(strategy: str, S: int) -> str:
    return CE_ONLY if strategy == CE_ONLY else f"{strategy}/{S}"


def _cell_dir(out_dir: Path, strategy: str, S: int, seed: int) -> Path:
    return out_dir / f"{strategy}-S{S}-seed{seed}"


def run_cell(values: Dict[str, Any], data_dir: str, mlm_path: Optional[str], cell_dir: str) -> Dict[str, Any]:
    """Одна ячейка сетки. На верхнем уровне модуля, чтобы её можно было отдать в процесс."""
    config = RunConfig(values=values)
    cell = Path(cell_dir)
    base = {
        "strategy": config.strategy_label,
        "S": config["perturb.S"],
        "seed": config["seed"],
    }
    try:
        result = cmd_train(config, data_dir, cell / "checkpoint.bin", cell / "metrics.jsonl",
                           mlm_path=mlm_path)
    except Exception as exc:
        logger.error(f"Ablation cell {cell.name} failed: {exc!r}")
        return {**base, "status": "failed", "error": repr(exc)}

    evals = [r for r in read_records(cell / "metrics.jsonl") if r.get("record") == "eval"]
    k = config["perturb.k"]
    histogram = np.zeros(k, dtype=np.int64)
    for r in evals:
        if r["chosen_rank_histogram"]:
            histogram += np.asarray(r["chosen_rank_histogram"], dtype=np.int64)
    return {
        **base,
        "status": "ok",
        "best_dev_accuracy": result["best_dev_accuracy"],
        "rank_histogram": histogram.tolist(),
        "consistency_trace": [r["consistency_loss"] for r in evals],
        "steps": [r["step"] for r in evals],
    }


def _summarize(key: str, cells: List[Dict[str, Any]]) -> Dict[str, Any]:
    ok = [c for c in cells if c["status"] == "ok"]
    accs = np.asarray([c["best_dev_accuracy"] for c in ok], dtype=np.float64)
    row: Dict[str, Any] = {
        "record": "ablation-row",
        "key": key,
        "runs": len(ok),
        "failed": len(cells) - len(ok),
        "seeds": [c["seed"] for c in ok],
        "mean_accuracy": float(accs.mean()) if accs.size else None,
        "std_accuracy": float(accs.std(ddof=1)) if accs.size > 1 else 0.0,
        "accuracies": accs.tolist(),
    }
    if ok:
        row["rank_histogram"] = np.sum([c["rank_histogram"] for c in ok], axis=0).tolist()
        traces = [c["consistency_trace"] for c in ok]
        n = min(len(t) for t in traces)
        row["steps"] = ok[0]["steps"][:n]
        row["mean_consistency_trace"] = np.mean([t[:n] for t in traces], axis=0).tolist()
    return row


def format_table(rows: Sequence[Dict[str, Any]]) -> str:
    lines = [f"{'strategy':<16} {'runs':>4}  {'dev accuracy':>18}"]
    for row in rows:
        if row["mean_accuracy"] is None:
            acc = "n/a"
        else:
            acc = f"{row['mean_accuracy']:.4f} ± {row['std_accuracy']:.4f}"
        flag = f"  ({row['failed']} failed)" if row["failed"] else ""
        lines.append(f"{row['key']:<16} {row['runs']:>4}  {acc:>18}{flag}")
    return "\n".join(lines)


def cmd_ablate(
    config: RunConfig,
    data_dir: str | Path,
    out_dir: str | Path,
    strategies: Sequence[str],
    seeds: Sequence[int],
    refine_steps: Optional[Sequence[int]] = None,
    mlm_path: Optional[str | Path] = None,
    jobs: int = 1,
) -> Dict[str, Any]:
    """Прогон сетки и сводка: ablation.jsonl и таблица ablation.txt в out_dir, таблица же в лог."""
    if not strategies:
        raise ValueError("at least one strategy is required")
    if not seeds:
        raise ValueError("at least one seed is required")
    unknown = [s for s in strategies if s not in STRATEGIES and s != CE_ONLY]
    if unknown:
        raise ValueError(f"Unknown strategies: {', '.join(unknown)} (expected {', '.join((*STRATEGIES, CE_ONLY))})")
    if any(seed < 0 for seed in seeds):
        raise ValueError("seeds must be non-negative")
    refine_steps = list(refine_steps) if refine_steps else [config["perturb.S"]]
    if any(S < 0 for S in refine_steps):
        raise ValueError("refine steps must be >= 0")
    if any(s != CE_ONLY for s in strategies) and not mlm_path:
        raise ValueError("MLM checkpoint required")

    data_dir = str(require_path(data_dir, "data directory (--data)"))
    out_dir = require_path(out_dir, "output directory (--out)")

    jobs_args = []
    keys: List[str] = []
    for strategy in strategies:
        for S in (refine_steps if strategy != CE_ONLY else refine_steps[:1]):
            key = _cell_key(strategy, S)
            if key in keys:
                continue
            keys.append(key)
            for seed in seeds:
                cell = config.with_strategy(strategy)
                cell.values["perturb.S"] = S
                cell.values["seed"] = seed
                cell.validate()
                jobs_args.append((key, (cell.values, data_dir, str(mlm_path) if mlm_path else None,
                                        str(_cell_dir(out_dir, strategy, S, seed)))))

    logger.info(f"Ablation: {len(keys)} rows × {len(seeds)} seeds = {len(jobs_args)} runs, jobs={jobs}")
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            futures = [executor.submit(run_cell, *args) for _, args in jobs_args]
            results = [f.result() for f in futures]
    else:
        results = [run_cell(*args) for _, args in jobs_args]

    rows = [_summarize(key, [r for (k, _), r in zip(jobs_args, results) if k == key]) for key in keys]
    config_hash = config.config_hash()
    summary_path = out_dir / "ablation.jsonl"
    with JsonLinesSink(summary_path, extra={"config_hash": config_hash}) as sink:
        sink.write({"record": "header", "config": config.to_dict(), "strategies": list(strategies),
                    "seeds": list(seeds), "refine_steps": refine_steps})
        for row in rows:
            sink.write(row)

    table = format_table(rows)
    table_path = out_dir / "ablation.txt"
    table_path.write_text(table + "\n", encoding="utf-8")
    logger.info("Ablation summary:\n" + table)
    failed = sum(row["failed"] for row in rows)
    if failed:
        raise AblationFailedError(f"{failed} of {len(results)} ablation runs failed; partial results in {summary_path}")
    return {"record": "ablate", "rows": rows, "summary": str(summary_path), "table": str(table_path),
            "config_hash": config_hash}
