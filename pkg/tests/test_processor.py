import threading
from unittest import TestCase

from odeident.processor import RowExecutor


class RowExecutorTests(TestCase):

    def test_inline(self):
        with RowExecutor() as executor:
            self.assertEqual(executor.map(lambda row: row * 2, range(5)), [0, 2, 4, 6, 8])

    def test_thread_pool_keeps_row_order(self):
        threads = set()

        def square(row):
            threads.add(threading.current_thread().name)
            return row * row

        with RowExecutor(workers=4) as executor:
            results = executor.map(square, range(50))

        self.assertEqual(results, [row * row for row in range(50)])
        self.assertTrue(all(name.startswith('odeident-row') for name in threads))

    def test_errors_propagate(self):
        def fail(row):
            raise KeyError(row)

        with RowExecutor(workers=2) as executor:
            with self.assertRaises(KeyError):
                executor.map(fail, [1, 2])

    def test_shutdown_is_idempotent(self):
        executor = RowExecutor(workers=2)
        executor.start()
        executor.shutdown()
        executor.shutdown()

        self.assertEqual(executor.map(str, [1]), ['1'])

    def test_worker_count(self):
        with self.assertRaises(ValueError):
            RowExecutor(workers=0)
