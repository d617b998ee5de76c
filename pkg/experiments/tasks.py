from __future__ import annotations

import logging
from dataclasses import replace

from celery import shared_task

from .config import parse_config
from .runner import run

logger = logging.getLogger(__name__)


@shared_task(name="experiments.run_suite")
def task_run_suite(config_text: str, seed: int | None = None, out: str | None = None, threads: int | None = None) -> dict:
    config = parse_config(config_text)
    if seed is not None:
        config = replace(config, seed=seed)
    rows = run(config, out=out, threads=threads)
    failed = [f"{r.experiment_id}:{r.check}" for r in rows if not r.passed]
    logger.info("Suite finished | rows=%s failed=%s", len(rows), len(failed))
    return {"rows": len(rows), "failed": failed, "output": str(out or config.output)}
