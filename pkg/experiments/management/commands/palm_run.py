from __future__ import annotations

import sys
from dataclasses import replace
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand

from patterns.rng import MAX_SEED
from experiments.config import parse_config
from experiments.exceptions import ConfigError
from experiments.runner import run


class Command(BaseCommand):
    help = "Run a Palm verification suite from a config file and write the results CSV"

    def add_arguments(self, parser):
        parser.add_argument("--config", required=True, help="Path to the experiment config")
        parser.add_argument("--seed", type=int, default=None, help="Override the master seed from the config")
        parser.add_argument("--out", default=None, help="CSV output path (default: [run] output)")
        parser.add_argument("--threads", type=int, default=None, help="Replicate worker threads (default: PALM_THREADS)")

    def handle(self, *args, **options):
        path = Path(options["config"])
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            self.stderr.write(self.style.ERROR(f"Cannot read config {path}: {e}"))
            sys.exit(2)

        try:
            config = parse_config(text)
        except ConfigError as e:
            self.stderr.write(self.style.ERROR(f"Invalid config {path}:"))
            for message in e.messages:
                self.stderr.write(f"  {message}")
            sys.exit(2)

        seed = options.get("seed")
        if seed is not None:
            if not 0 <= seed <= MAX_SEED:
                self.stderr.write(self.style.ERROR(f"--seed must be a 64-bit unsigned integer, got {seed}"))
                sys.exit(2)
            config = replace(config, seed=seed)
        threads = options.get("threads") or getattr(settings, "PALM_THREADS", 1)

        self.stdout.write(f"Running {len(config.experiments)} experiment(s) | seed={config.seed} threads={threads}")
        try:
            rows = run(config, out=options.get("out"), threads=threads)
        except OSError as e:
            self.stderr.write(self.style.ERROR(f"Cannot write results: {e}"))
            sys.exit(2)

        failed = [r for r in rows if not r.passed]
        for r in rows:
            line = f"  {r.experiment_id:<24} {r.check:<34} {'PASS' if r.passed else 'FAIL'}"
            if r.error:
                line += f"  {r.error}"
            self.stdout.write(line)

        if failed:
            self.stderr.write(self.style.ERROR(f"{len(failed)} of {len(rows)} check(s) failed"))
            sys.exit(1)
        self.stdout.write(self.style.SUCCESS(f"All {len(rows)} check(s) passed"))
