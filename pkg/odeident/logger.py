import sys
from logging import DEBUG, INFO, Formatter, StreamHandler, getLevelName, getLogger

from .config import ConfigParser

LOGGER_NAME = 'odeident'


class StderrHandler(StreamHandler):
    """
    Stream handler bound to the current ``sys.stderr`` at emit time.
    """

    def __init__(self):
        super(StderrHandler, self).__init__(sys.stderr)

    @property
    def stream(self):
        return sys.stderr

    @stream.setter
    def stream(self, value):
        pass


def _level(value: str) -> int:
    if value.isdigit():
        return int(value)
    level = getLevelName(value.upper())
    return level if isinstance(level, int) else INFO


def build_logger(config, debug=False):
    try:
        config = config['logger']
    except (KeyError, TypeError):
        config = ConfigParser(default_sections=('logger',))
        config = config['logger']

    logger = getLogger(LOGGER_NAME)
    if not any(isinstance(handler, StderrHandler) for handler in logger.handlers):
        handler = StderrHandler()
        handler.setFormatter(Formatter(config.get('format', fallback='%(levelname)s %(name)s: %(message)s',
                                                  raw=True)))
        logger.addHandler(handler)

    if debug:
        logger.setLevel(DEBUG)
    else:
        logger.setLevel(_level(config.get('level', fallback=str(INFO))))

    return logger
