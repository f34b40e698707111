from concurrent.futures import ThreadPoolExecutor, as_completed
import hashlib
import time
import logging

import numpy as np


def fmt(value) -> str:
    """ Lossless float text (17 significant digits). """
    return format(float(value), '.17g')

def frobenius(a:np.ndarray, b:np.ndarray) -> float:
    """ Unweighted 2-norm of the node-wise difference of two surfaces. """
    return float(np.sqrt(np.sum((np.asarray(a) - np.asarray(b)) ** 2)))

def sha256_file(path:str) -> str:
    digest = hashlib.sha256()
    with open(path, 'rb') as f:
        for chunk in iter(lambda: f.read(1 << 16), b''):
            digest.update(chunk)
    return digest.hexdigest()

def path_rng(seed:int, stream:int, path:int) -> np.random.Generator:
    """ Independent generator of one simulated path, fixed by (seed, stream, path index). """
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(stream), int(path))))

def execute_tasks(func, task_args:dict, workers:int=1) -> dict:
    """
    Execute tasks (concurrently if several workers).

    Args:
        func: function to execute
        task_args: (dict) of keyword arguments for each task
        workers: (int) maximum number of threads, <= 1 runs inline
    Returns:
        results (dict): {task: output} in the key order of `task_args`
    """
    st = time.time()
    if workers <= 1 or len(task_args) <= 1:
        results = {task: func(**kwargs) for task, kwargs in task_args.items()}
    else:
        finished = {}
        with ThreadPoolExecutor(max_workers=min(workers, len(task_args))) as executor:
            futures = {
                executor.submit(func, **kwargs): task
                    for task, kwargs in task_args.items()
            }
            for future in as_completed(futures):
                finished[futures[future]] = future.result()
        # Completion order depends on scheduling, the returned order must not
        results = {task: finished[task] for task in task_args}

    logging.debug("{} task(s) of {} took {:.3f} seconds".format(
        len(task_args), getattr(func, '__name__', 'task'), time.time() - st
    ))
    return results
