import re
import sys
import time
import logging

import nlrabi.globals

import logging.handlers

from pathlib import Path

from threading import Thread

from logging import Logger, Formatter

from configparser import ConfigParser

from typing import Optional, Tuple, Union

from multiprocessing import Queue, Manager, current_process

from nlrabi.configurations.config import get_config

from nlrabi.utils import create_dir_if_not_exists, delete_dir_contents_if_exists

RUN_TAG = re.compile(r'(RUN\(.*?\))')
RUN_NAME = re.compile(r'(?<=\()(.*)(?=\))')


class LoggerManager:

    def __init__(self, logger_thread: Thread):
        """
        This class manages the thread that replays records queued by worker processes.

        Args:
            logger_thread: The listener thread to manage.

        Returns:

        """
        self.logger_thread = logger_thread

    def terminate_logger(self):
        """
        This method terminates the listener thread. Call it once the run is complete.

        Returns:

        """
        # Trigger the listener to stop processing from the queue.
        nlrabi.globals.logger_queue.put(None)
        self.logger_thread.join()

        loggers = [logging.getLogger()] + [logging.getLogger(name) for name in list(logging.Logger.manager.loggerDict)
                                           if name.startswith('run.')]
        for instance in loggers:
            for handler in list(instance.handlers):
                handler.close()
                instance.removeHandler(handler)

        nlrabi.globals.logger_queue = None
        logging.shutdown()


class RunSegmentHandler(logging.Handler):

    def __init__(self, config: ConfigParser):
        """
        This handler copies records tagged RUN(<name>) into log_dir/<name>/logs.log, so each sweep or figure run
        gets its own log file next to the combined one.

        Args:
            config: A ConfigParser holding the LOGGING section.

        Returns:

        """
        super().__init__()
        self.config = config

    @staticmethod
    def split_run_tag(log_str: str) -> Tuple[str, Optional[str]]:
        """
        This method strips a RUN(<name>) tag from a message.

        Args:
            log_str: The message.

        Returns:
            A Tuple holding the message without the tag and the run name (None when untagged).

        """
        tags = RUN_TAG.findall(log_str)
        if not tags:
            return log_str, None
        run_name = RUN_NAME.findall(tags[0])[0]
        return RUN_TAG.sub('', log_str).lstrip(), run_name

    def emit(self, record):
        try:
            run_name = None
            if isinstance(record.msg, str):
                record.msg, run_name = self.split_run_tag(record.msg)
            if hasattr(record, 'message'):
                record.message, name = self.split_run_tag(record.message)
                run_name = name if name else run_name

            if run_name:
                logger = logging.getLogger(f'run.{run_name}')
                # Don't propagate to the root logger, this would cause infinite recursion.
                logger.propagate = False
                _add_file_handler(config=self.config, instance=logger, log_formatter=_get_log_formatter(),
                                  folder_name=run_name)
                logger.handle(record)
        except RecursionError:
            raise
        except Exception:
            self.handleError(record)


def _add_file_handler(
        config: ConfigParser,
        instance: Logger,
        log_formatter: Formatter,
        folder_name: Optional[str] = None
) -> None:
    """
    This function adds a rotating file handler to a logger instance, once per folder.

    Args:
        config: A ConfigParser holding the LOGGING section.
        instance: The logger instance to add the file handler to.
        log_formatter: The log formatter to use for the file handler.
        folder_name: Sub-folder of log_dir for run-segmented logs.

    Returns:

    """
    if folder_name and folder_name in [x.name for x in instance.handlers]:
        return
    base_log_path = config.get('LOGGING', 'log_dir')
    log_path = f'{base_log_path}/{folder_name}' if folder_name else base_log_path
    create_dir_if_not_exists(log_path)

    file_handler = logging.handlers.RotatingFileHandler(
        f"{log_path}/logs.log",
        maxBytes=config.getint('LOGGING', 'max_bytes'),
        backupCount=config.getint('LOGGING', 'backup_count')
    )
    file_handler.set_name(folder_name)
    file_handler.setFormatter(log_formatter)
    instance.addHandler(file_handler)


def _get_log_formatter() -> Formatter:
    formatter = logging.Formatter("%(asctime)s: %(levelname)7s > %(message)s")
    formatter.converter = time.gmtime
    return formatter


def _get_root_logger(level: Union[int, str] = logging.INFO) -> Logger:
    root = logging.getLogger()
    root.setLevel(level)
    return root


def _configure_logging_handlers(config: ConfigParser) -> Logger:
    """
    This function attaches the file, run-segment and console handlers to the root logger.

    Args:
        config: A ConfigParser holding the LOGGING section.

    Returns:
        The root Logger.

    """
    root = _get_root_logger(config.get('LOGGING', 'level').upper())
    log_formatter = _get_log_formatter()

    _add_file_handler(config, root, log_formatter)

    root.addHandler(RunSegmentHandler(config=config))

    if config.getboolean('LOGGING', 'console'):
        stderr_handler = logging.StreamHandler(sys.stderr)
        stderr_handler.setFormatter(log_formatter)
        root.addHandler(stderr_handler)

    return root


def _lt(queue: Queue):
    """
    This function is the listener thread: it replays records queued by worker processes on this process's loggers.

    Args:
        queue: A multiprocessing Queue, managed by a multiprocessing Manager.

    Returns:

    """
    while True:
        record = queue.get()
        if record is None:
            break
        logger = logging.getLogger(record.name)
        logger.handle(record)


def logger_init(config_file: Union[Path, str] = None) -> LoggerManager:
    """
    This function configures logging for a run and starts the thread that collects records from worker processes.
    Worker processes must receive nlrabi.globals.logger_queue explicitly.

    Args:
        config_file: Optional configuration file with a LOGGING section; defaults and NLRABI_* environment
            overrides apply otherwise.

    Returns:
        A LoggerManager instance which terminates the listener at cleanup time.

    """
    config = get_config(config_file=config_file)

    logger_dir = config.get('LOGGING', 'log_dir')
    if config.getboolean('LOGGING', 'pre_purge'):
        # The directory itself is kept since it may be a mounted volume.
        delete_dir_contents_if_exists(logger_dir)
    create_dir_if_not_exists(logger_dir)

    nlrabi.globals.logger_queue = Manager().Queue()

    _configure_logging_handlers(config)

    logger_thread = Thread(target=_lt, args=(nlrabi.globals.logger_queue,), daemon=True)
    logger_thread.start()

    return LoggerManager(logger_thread=logger_thread)


def get_logger(name: str, queue: Optional[Queue] = None) -> Logger:
    """
    This function gets a logger instance.

    Usage:
    1) The CLI calls logger_init() and keeps the LoggerManager for the life of the run.
    2) Modules call get_logger(__name__) at import time.
    3) Worker functions dispatched to a process pool receive nlrabi.globals.logger_queue as an argument and call
       get_logger(__name__, queue=queue); their records are forwarded to the parent through the queue.

    Args:
        name: The name for the logger.
        queue: The Queue created by logger_init(), passed explicitly to worker processes.

    Returns:
        The Logger.

    """
    logger = logging.getLogger(name=name)

    if queue is not None and current_process().name != 'MainProcess':
        queue_handler = logging.handlers.QueueHandler(queue)
        queue_handler.set_name(name=str(current_process().pid))

        root = _get_root_logger()

        # Inherited handlers (fork start method) would write to the parent's files directly.
        for handler in list(root.handlers):
            if handler.name != queue_handler.name:
                handler.close()
                root.removeHandler(handler)

        if queue_handler.name not in [x.name for x in root.handlers]:
            root.addHandler(queue_handler)

    return logger
