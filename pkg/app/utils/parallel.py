"""Ordered map over a thread pool"""
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, TypeVar

from dotenv import load_dotenv

load_dotenv()

DEFAULT_WORKERS = int(os.getenv("UNIDIOPH_WORKERS", "1"))

T = TypeVar("T")
R = TypeVar("R")


def ordered_map(func: Callable[[T], R], items: Iterable[T], workers: int = 1) -> List[R]:
    """Map func over items, results in input order regardless of worker count"""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))
