# File: controllers/replicate_runner.py

import logging
import os
from multiprocessing import Pool
from typing import List

import numpy as np
import pandas as pd

from controllers.replicate_tasks import TASKS
from models.ensemble import EnsembleSpec, SpectrumSample
from utils.errors import DomainError
from utils.sampler import EigenSolver, sample_batch

logger = logging.getLogger(__name__)

CHUNK_SIZE = 64


def _run_chunk(job) -> List[dict]:
    """Sample one fixed block of replicates and evaluate the task on it."""
    task, beta, n, master_seed, first, count, solver, params = job
    spec = EnsembleSpec(beta=beta, n=n)
    angles, seeds = sample_batch(spec, count, master_seed, first_replicate=first, solver=EigenSolver(solver))
    samples = [SpectrumSample(angles=angles[i].copy(), spec=spec.with_seed(seed)) for i, seed in enumerate(seeds)]
    rows = TASKS[task](samples, params)
    for i, row in enumerate(rows):
        row['replicate'] = first + i
        row['seed'] = np.uint64(seeds[i])
    return rows


class ReplicateRunner:
    """
    Runs a per-replicate task over a block of replicates.

    Replicates are cut into chunks of a fixed size and every replicate owns
    its stream, so results do not depend on the worker count. Chunks are
    mapped in order and concatenated in replicate order.
    """

    def __init__(self, workers: int = None, chunk_size: int = CHUNK_SIZE):
        self.workers = workers or os.cpu_count() or 1
        self.chunk_size = chunk_size
        if self.workers < 1:
            raise DomainError(f"workers must be positive, got {self.workers}")

    def run(self, task: str, beta: float, n: int, replicates: int, master_seed: int,
            params: dict = None, solver: str = 'prufer', first_replicate: int = 0) -> pd.DataFrame:
        """
        Evaluate a task on replicates first_replicate .. first_replicate + replicates - 1.

        Returns:
            pd.DataFrame: One row per replicate with 'replicate' and 'seed' columns.
        """
        if task not in TASKS:
            raise DomainError(f"unknown replicate task '{task}'")
        jobs = []
        for start in range(0, replicates, self.chunk_size):
            count = min(self.chunk_size, replicates - start)
            jobs.append((task, float(beta), int(n), int(master_seed), first_replicate + start, count,
                         solver, params or {}))
        logger.info(f"Running task '{task}' (beta={beta}, n={n}) on {replicates} replicates "
                    f"in {len(jobs)} chunks with {self.workers} workers")
        try:
            if self.workers == 1 or len(jobs) == 1:
                results = [_run_chunk(job) for job in jobs]
            else:
                with Pool(processes=min(self.workers, len(jobs))) as pool:
                    results = pool.map(_run_chunk, jobs)
        except Exception as e:
            logger.error(f"Replicate task '{task}' failed: {str(e)}")
            raise
        rows = [row for chunk in results for row in chunk]
        frame = pd.DataFrame(rows)
        columns = ['replicate', 'seed'] + [c for c in frame.columns if c not in ('replicate', 'seed')]
        return frame[columns]
