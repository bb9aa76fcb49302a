"""
Terminal output for the CLI: coloured status lines, boxed banners and
progress bars on stdout, plus a timestamped sidecar log file.
"""
import logging
import shutil
import sys
from pathlib import Path
from typing import List, Optional

from colorama import Fore, Style, init

init(autoreset=True)

STATUS_COLORS = {
    "INFO": Fore.CYAN,
    "SUCCESS": Fore.GREEN,
    "WARNING": Fore.YELLOW,
    "ERROR": Fore.RED,
    "PROCESSING": Fore.BLUE,
    "DEBUG": Fore.WHITE,
}

_HANDLER_TAG = "_pqa_handler"


class StatusFormatter(logging.Formatter):
    """`[STATUS] message`; the status is the `status` extra or the level name"""

    def format(self, record: logging.LogRecord) -> str:
        status = getattr(record, "status", None) or record.levelname
        color = STATUS_COLORS.get(status, Fore.WHITE)
        return f"{color}[{status}]{Style.RESET_ALL} {record.getMessage()}"


def reset_logging() -> None:
    """Detach and close the handlers installed by setup_logging"""
    root = logging.getLogger()
    for handler in [h for h in root.handlers if getattr(h, _HANDLER_TAG, False)]:
        root.removeHandler(handler)
        handler.close()


def setup_logging(log_file: Optional[str | Path] = "run.log", verbose: bool = False) -> None:
    reset_logging()
    root = logging.getLogger()

    console = logging.StreamHandler(sys.stdout)
    console.setLevel(logging.DEBUG if verbose else logging.INFO)
    console.setFormatter(StatusFormatter())
    setattr(console, _HANDLER_TAG, True)
    root.addHandler(console)

    # timestamps live only in the sidecar so result files stay reproducible
    if log_file:
        sidecar = logging.FileHandler(log_file, encoding="utf-8")
        sidecar.setLevel(logging.DEBUG)
        sidecar.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
        setattr(sidecar, _HANDLER_TAG, True)
        root.addHandler(sidecar)

    root.setLevel(logging.DEBUG)


def log_step(logger: logging.Logger, message: str, status: str = "INFO") -> None:
    level = {"ERROR": logging.ERROR, "WARNING": logging.WARNING}.get(status, logging.INFO)
    logger.log(level, message, extra={"status": status})


def terminal_width() -> int:
    return shutil.get_terminal_size().columns


def print_box(title: str, content: Optional[List[str]] = None, color: str = Fore.CYAN, width: Optional[int] = None) -> None:
    """Print a box with a centred title and one line per content entry"""
    if width is None:
        width = min(80, terminal_width() - 4)

    title_line = f" {title} "
    padding = width - len(title_line)
    left = padding // 2
    print(f"{color}┌{'─' * left}{title_line}{'─' * (padding - left)}┐{Style.RESET_ALL}")
    for line in content or []:
        print(f"{color}│{Style.RESET_ALL} {line}{' ' * max(0, width - len(line) - 2)} {color}│{Style.RESET_ALL}")
    print(f"{color}└{'─' * width}┘{Style.RESET_ALL}")


def print_progress_bar(current: int, total: int, title: str = "", width: int = 40) -> None:
    if total == 0:
        return
    fraction = current / total
    filled = int(width * fraction)
    bar = "█" * filled + "░" * (width - filled)
    print(f"{Fore.CYAN}│{Style.RESET_ALL} [{Fore.GREEN}{bar}{Style.RESET_ALL}] {current}/{total} ({fraction * 100:.1f}%) {title}")
