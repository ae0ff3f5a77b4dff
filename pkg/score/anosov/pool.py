# Copyright © 2017,2018 STRG.AT GmbH, Vienna, Austria
# Copyright © 2019-2023 Necdet Can Ateşman, Vienna, Austria
#
# This file is part of the The SCORE Framework.
#
# The SCORE Framework and all its parts are free software: you can redistribute
# them and/or modify them under the terms of the GNU Lesser General Public
# License version 3 as published by the Free Software Foundation which is in the
# file named COPYING.LESSER.txt.
#
# The SCORE Framework and all its parts are distributed without any WARRANTY;
# without even the implied warranty of MERCHANTABILITY or FITNESS FOR A
# PARTICULAR PURPOSE. For more details see the GNU Lesser General Public
# License.
#
# If you have not received a copy of the GNU Lesser General Public License see
# http://www.gnu.org/licenses/.
#
# The License-Agreement realised between you as Licensee and STRG.AT GmbH as
# Licenser including the issue of its valid conclusion and its pre- and
# post-contractual effects is governed by the laws of Austria. Any disputes
# concerning this License-Agreement including the issue of its valid conclusion
# and its pre- and post-contractual effects are exclusively decided by the
# competent court, in whose district STRG.AT GmbH has its registered seat, at
# the discretion of STRG.AT GmbH also the competent court, in whose district the
# Licensee has his registered seat, an establishment or assets.

import asyncio
import concurrent.futures
import logging


log = logging.getLogger(__name__)


class WorkerPool:
    """
    Runs blocking jobs on a private event loop through
    :meth:`loop.run_in_executor <asyncio.AbstractEventLoop.run_in_executor>`.

    Results are always returned in submission order, so callers merging them
    obtain the same output regardless of the number of *workers*. A pool with
    a single worker does not create a loop at all and maps sequentially.
    """

    def __init__(self, workers=1):
        workers = int(workers)
        if workers < 1:
            raise ValueError('Need at least one worker, got %d' % workers)
        self.workers = workers

    def map(self, func, jobs):
        """
        Calls *func* on every item of *jobs* and returns the list of results.
        The first exception raised by any job is re-raised.
        """
        jobs = list(jobs)
        if self.workers == 1 or len(jobs) < 2:
            return [func(job) for job in jobs]
        log.debug('Running %d jobs on %d workers', len(jobs), self.workers)
        loop = asyncio.new_event_loop()
        executor = concurrent.futures.ThreadPoolExecutor(
            max_workers=self.workers)
        try:
            return loop.run_until_complete(
                self._gather(loop, executor, func, jobs))
        finally:
            executor.shutdown(wait=True)
            loop.close()

    async def _gather(self, loop, executor, func, jobs):
        futures = [loop.run_in_executor(executor, func, job) for job in jobs]
        return await asyncio.gather(*futures)
