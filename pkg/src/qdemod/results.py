"""Result persistence: the fixed-schema CSV and the run manifest."""

from __future__ import annotations

import datetime as _dt
from dataclasses import dataclass, field

CSV_COLUMNS = (
    "run_id", "seed", "variant", "mod_kind", "beta", "lambda", "n_photon",
    "r", "snr_empirical", "snr_stderr", "snr_analytic", "sigma0_sq",
    "sigma0_sq_empirical", "cycle_slips", "pass_threshold",
)

_FLOAT_COLUMNS = {
    "beta", "lambda", "n_photon", "r", "snr_empirical", "snr_stderr",
    "snr_analytic", "sigma0_sq", "sigma0_sq_empirical",
}


def _render(column: str, value) -> str:
    if value is None:
        return ""
    if column in _FLOAT_COLUMNS:
        return f"{float(value):.17e}"
    if column == "pass_threshold":
        return "true" if value else "false"
    return str(value)


def emit_results(rows, path) -> None:
    """Write rows (mappings keyed by CSV_COLUMNS) with the fixed header."""
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(CSV_COLUMNS) + "\n")
            for row in rows:
                fh.write(",".join(_render(c, row.get(c)) for c in CSV_COLUMNS) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc


@dataclass
class RunManifest:
    """Everything needed to reproduce a run bit-exactly with the same code."""

    command: str
    version: str
    seed: int | None
    config_text: str
    outputs: list = field(default_factory=list)
    started: str = ""
    finished: str = ""

    def start(self) -> None:
        self.started = _dt.datetime.now(_dt.timezone.utc).isoformat()

    def finish(self) -> None:
        self.finished = _dt.datetime.now(_dt.timezone.utc).isoformat()

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("[manifest]\n")
            fh.write(f"command = {self.command}\n")
            fh.write(f"version = {self.version}\n")
            if self.seed is not None:
                fh.write(f"master_seed = {self.seed}\n")
            fh.write(f"started = {self.started}\n")
            fh.write(f"finished = {self.finished}\n")
            for out in self.outputs:
                fh.write(f"output = {out}\n")
            fh.write("\n# resolved configuration\n")
            fh.write(self.config_text)
