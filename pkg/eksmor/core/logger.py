import os
import logging
from logging.handlers import RotatingFileHandler

from eksmor.core.config import settings

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

os.makedirs(settings.LOG_DIR, exist_ok=True)

# console output for CLI runs; the package logger propagates to it
logging.basicConfig(
    level=getattr(logging, settings.LOG_LEVEL.upper(), logging.INFO),
    format=LOG_FORMAT,
    datefmt='%Y-%m-%d %H:%M:%S'
)

logger = logging.getLogger("eksmor")

run_log_handler = RotatingFileHandler(
    os.path.join(settings.LOG_DIR, settings.LOG_FILE),
    maxBytes=settings.LOG_MAX_BYTES,
    backupCount=settings.LOG_BACKUPS,
)
run_log_handler.set_name("eksmor-run-log")
run_log_handler.setFormatter(logging.Formatter(LOG_FORMAT))

if not any(h.get_name() == run_log_handler.get_name() for h in logger.handlers):
    logger.addHandler(run_log_handler)
else:
    run_log_handler.close()
