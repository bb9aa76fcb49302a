from typing import Any, Dict, Optional

from colorama import Fore, Style, init
from prettytable import PrettyTable

from src.utils import load_json_file

init(autoreset=True)


def _us(value: Optional[float]) -> str:
    if value is None or value == "inf":
        return "-"
    return f"{float(value):.4g}"


class SummaryTableViewer:
    """Terminal rendering of a sweep's summary.json"""

    def display_size_table(self, summary: Dict[str, Any]):
        print(f"\n{Fore.GREEN}{'=' * 100}")
        print("TIME-TO-SOLUTION BY PROBLEM SIZE")
        print(f"Solver: {summary.get('solver', 'unknown')}  Protocol: {summary.get('protocol', 'unknown')}")
        print(f"Success: {summary.get('success_definition', '-')}  alpha={summary.get('alpha', '-')}")
        print(f"{'=' * 100}{Style.RESET_ALL}")

        table = PrettyTable()
        table.field_names = ["N", "Instances", "Greedy solved", "Evaluated", "Unsolved", "p30 (us)", "Median (us)", "p70 (us)"]
        for column in table.field_names[1:]:
            table.align[column] = "r"

        for size in summary.get("sizes", []):
            unsolved = size.get("n_unsolved", 0)
            unsolved_text = size.get("unsolved", f"{unsolved} of {size.get('n_evaluated', 0)} unsolved")
            color = Fore.RED if unsolved else Fore.GREEN
            table.add_row([
                size["n"],
                size.get("n_instances", 0),
                size.get("n_solved_by_greedy", 0),
                size.get("n_evaluated", 0),
                f"{color}{unsolved_text}{Style.RESET_ALL}",
                _us(size.get("p30_tts_us")),
                _us(size.get("median_tts_us")),
                _us(size.get("p70_tts_us")),
            ])
        print(table)

        by_tau = [size for size in summary.get("sizes", []) if len(size.get("median_tts_by_tau") or {}) > 1]
        if by_tau:
            self.display_tau_table(by_tau)

    def display_tau_table(self, sizes):
        print(f"\n{Fore.CYAN}MEDIAN TTS BY ANNEALING TIME:{Style.RESET_ALL}")
        taus = sorted({tau for size in sizes for tau in size["median_tts_by_tau"]}, key=float)
        table = PrettyTable()
        table.field_names = ["N"] + [f"tau={tau} us" for tau in taus]
        for size in sizes:
            table.add_row([size["n"]] + [_us(size["median_tts_by_tau"].get(tau)) for tau in taus])
        print(table)

    def display_instance_table(self, summary: Dict[str, Any], limit: int = 50):
        instances = summary.get("instances", [])
        if not instances:
            return
        print(f"\n{Fore.CYAN}PER-INSTANCE BEST POINTS:{Style.RESET_ALL}")
        table = PrettyTable()
        table.field_names = ["Instance", "Best known", "Source", "J_F", "s_p", "rho (us)", "p", "TTS (us)"]
        table.align["Instance"] = "l"
        for item in instances[:limit]:
            point = item.get("best_point") or {}
            if item.get("skipped"):
                status = f"{Fore.BLUE}greedy{Style.RESET_ALL}"
            else:
                status = _us(item.get("min_tts_us"))
            table.add_row([
                item["instance_id"],
                f"{float(item['best_known']):.4f}",
                item.get("best_known_provenance", "-"),
                point.get("J_F", "-"),
                point.get("s_p") if point.get("s_p") is not None else "-",
                point.get("rho_us") if point.get("rho_us") is not None else "-",
                f"{point['p']:.4f}" if "p" in point else "-",
                status,
            ])
        print(table)
        if len(instances) > limit:
            print(f"(+{len(instances) - limit} more)")


def load_and_display_summary(json_file_path: str):
    """Load a summary.json and display it as tables"""
    summary = load_json_file(json_file_path)
    viewer = SummaryTableViewer()
    viewer.display_size_table(summary)
    viewer.display_instance_table(summary)
