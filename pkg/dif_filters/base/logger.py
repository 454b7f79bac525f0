# SPDX-FileCopyrightText: 2024 dif-filters contributors
# SPDX-License-Identifier: Apache-2.0

import datetime
import os
from typing import Callable, Optional, TextIO  # noqa: F401

from .constants import DEFAULT_TIMESTAMP_FORMAT
from .output_helpers import error_print, note_print


class Logger:
    """
    Progress messages of a run. Each message goes to the console printer and, while
    logging is enabled, into the run log file. Log lines always carry a timestamp;
    console lines only when `timestamps` is set.
    """

    def __init__(self, console_printer=None, timestamps=False, timestamp_format=DEFAULT_TIMESTAMP_FORMAT):
        # type: (Optional[Callable[[str], None]], bool, str) -> None
        self._log_file = None  # type: Optional[TextIO]
        self.console_printer = console_printer or note_print
        self.timestamps = timestamps
        self.timestamp_format = timestamp_format

    def start_logging(self, path):  # type: (str) -> bool
        if self._log_file:
            return True
        try:
            directory = os.path.dirname(path)
            if directory:
                os.makedirs(directory, exist_ok=True)
            self._log_file = open(path, 'a', encoding='utf-8')
            note_print(f'Logging is enabled into file {path}')
            return True
        except OSError as e:
            error_print(f'Log file {path} cannot be created: {e}')
            return False

    def stop_logging(self):  # type: () -> None
        if self._log_file:
            try:
                name = self._log_file.name
                self._log_file.close()
                note_print(f'Logging is disabled and file {name} has been closed')
            except OSError as e:
                error_print(f'Log file cannot be closed: {e}')
            finally:
                self._log_file = None

    def _stamp(self, message):  # type: (str) -> str
        t = datetime.datetime.now().strftime(self.timestamp_format)
        return '\n'.join(f'{t} {line}' for line in message.splitlines())

    def print(self, message):  # type: (str) -> None
        message = message.rstrip('\n')
        self.console_printer(self._stamp(message) if self.timestamps else message)
        if self._log_file:
            try:
                self._log_file.write(self._stamp(message) + '\n')
                self._log_file.flush()
            except OSError as e:
                error_print(f'Cannot write to file: {e}')
                # consequent writes would most likely fail too
                self.stop_logging()

    def __enter__(self):  # type: () -> Logger
        return self

    def __exit__(self, *exc):  # type: (object) -> None
        self.stop_logging()
