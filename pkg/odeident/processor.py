from concurrent.futures.thread import ThreadPoolExecutor
from logging import Logger, getLogger
from typing import Callable, Iterable, List, Optional, TypeVar

Row = TypeVar('Row')
Result = TypeVar('Result')


class RowExecutor:
    """
    Evaluates independent experiment rows, inline for one worker or on a
    thread pool otherwise. Results always come back in row order.
    """

    def __init__(self,
                 workers: int = 1,
                 logger: Logger = None):
        if workers < 1:
            raise ValueError(f'Worker count must be positive, got {workers}')

        self._workers = workers
        self._pool: Optional[ThreadPoolExecutor] = None
        self.logger = logger or getLogger(__name__)

    @property
    def workers(self) -> int:
        return self._workers

    def start(self):
        if self._workers > 1 and self._pool is None:
            self._pool = ThreadPoolExecutor(max_workers=self._workers, thread_name_prefix='odeident-row')

    def shutdown(self):
        if self._pool is not None:
            self._pool.shutdown(wait=True)
            self._pool = None

    def __enter__(self):
        self.start()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.shutdown()

    def map(self, func: Callable[[Row], Result], rows: Iterable[Row]) -> List[Result]:
        rows = list(rows)
        self.logger.debug('Evaluating %d rows on %d worker(s)', len(rows), self._workers)

        if self._pool is None:
            return [func(row) for row in rows]

        futures = [self._pool.submit(func, row) for row in rows]
        return [future.result() for future in futures]
