from multiprocessing import Queue

from typing import Optional

# Shared log queue, set by logger_init() in log_setup and passed explicitly to sweep and trajectory pool workers.
logger_queue: Optional[Queue] = None
