import io
import json
import math
import sys
from pathlib import Path
from typing import Iterable, List, Optional, Union

import numpy as np
import pandas as pd

from rodeo_schedules.core import DiscreteSpectrum, Schedule
from rodeo_schedules.exceptions import DomainError, UsageError
from rodeo_schedules.qsim import PhysicalState
from rodeo_schedules.superiter import SuperIteration, SuperSchedule

FLOAT_FORMAT = "%.17g"

PathLike = Union[str, Path]


def records_to_csv(records: Iterable[dict], columns: List[str], float_format: str = FLOAT_FORMAT) -> str:
    """
    Render records as CSV text with full double precision and LF line endings

    Parameters:
        records (iterable of dict): rows keyed by column name
        columns (list): column order
        float_format (str): printf-style float format

    Returns:
        str: CSV text including the header
    """
    df = pd.DataFrame(list(records), columns=columns)
    buffer = io.StringIO()
    df.to_csv(buffer, index=False, float_format=float_format, lineterminator="\n")
    return buffer.getvalue()


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, np.generic):
        return value.item()
    return value


def to_json_text(payload) -> str:
    return json.dumps(_jsonable(payload), indent=2) + "\n"


def write_text(text: str, path: Optional[PathLike]) -> None:
    """Write to `path`, or to stdout when no path is given."""
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)


def write_records(
    records: Iterable[dict],
    columns: List[str],
    path: Optional[PathLike],
    fmt: str = "csv",
    float_format: str = FLOAT_FORMAT,
) -> None:
    records = list(records)
    if fmt == "csv":
        write_text(records_to_csv(records, columns, float_format), path)
    elif fmt == "json":
        write_text(to_json_text(records), path)
    else:
        raise UsageError(f"Unknown output format: {fmt}")


GROUND_WEIGHT_PREFIX = "ground_weight="


def _excited_pair(item) -> tuple:
    if isinstance(item, dict):
        return (item["x"], item["w"])
    x, w = item
    return (x, w)


def spectrum_from_json(data: dict, gap: float = 1.0) -> DiscreteSpectrum:
    """
    {"ground_weight": p, "excited": [{"x": .., "w": ..}, ...], "gap": g}.
    Excited entries may also be given as [x, w] pairs.
    """
    try:
        excited = tuple(_excited_pair(item) for item in data.get("excited", []))
        return DiscreteSpectrum(
            ground_weight=data["ground_weight"],
            excited=excited,
            gap=data.get("gap", gap),
        )
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, DomainError):
            raise
        raise UsageError(f"Malformed spectrum JSON: {e!r}")


def spectrum_to_json(spectrum: DiscreteSpectrum) -> dict:
    return {
        "ground_weight": spectrum.ground_weight,
        "excited": [{"x": x, "w": w} for x, w in spectrum.excited],
        "gap": spectrum.gap,
    }


def spectrum_to_csv(spectrum: DiscreteSpectrum, float_format: str = FLOAT_FORMAT) -> str:
    """`# ground_weight=<p>` followed by energy_ratio,weight rows for the excited components."""
    records = [{"energy_ratio": x, "weight": w} for x, w in spectrum.excited]
    header = f"# {GROUND_WEIGHT_PREFIX}{float_format % spectrum.ground_weight}\n"
    return header + records_to_csv(records, ["energy_ratio", "weight"], float_format)


def _ground_weight_comment(path: Path) -> Optional[float]:
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            text = line.strip()
            if not text.startswith("#"):
                continue
            text = text.lstrip("#").strip()
            if text.startswith(GROUND_WEIGHT_PREFIX):
                return float(text[len(GROUND_WEIGHT_PREFIX):])
    return None


def read_spectrum(path: PathLike, gap: float = 1.0) -> DiscreteSpectrum:
    """
    Load a spectrum from JSON or CSV.

    CSV: header energy_ratio,weight with one row per excited component and a
    `# ground_weight=<p>` comment line. Without the comment the ground weight
    is whatever the excited weights leave. Older files with columns x,weight
    and a ground row at x = 0 are read too.
    """
    path = Path(path)
    try:
        if path.suffix.lower() == ".json":
            with open(path, "r", encoding="utf-8") as f:
                return spectrum_from_json(json.load(f), gap)
        ground_weight = _ground_weight_comment(path)
        df = pd.read_csv(path, comment="#", float_precision="round_trip")
    except FileNotFoundError:
        raise UsageError(f"Spectrum file not found: {path}")
    except json.JSONDecodeError as e:
        raise UsageError(f"Malformed spectrum file {path}: {e}")
    except ValueError as e:
        if isinstance(e, (DomainError, UsageError)):
            raise
        raise UsageError(f"Malformed spectrum file {path}: {e}")

    if {"energy_ratio", "weight"} <= set(df.columns):
        excited = tuple(zip(df["energy_ratio"].astype(float), df["weight"].astype(float)))
        if ground_weight is None:
            ground_weight = 1.0 - math.fsum(w for _, w in excited)
        return DiscreteSpectrum(ground_weight=ground_weight, excited=excited, gap=gap)

    if {"x", "weight"} <= set(df.columns):
        ground = df[df["x"] == 0.0]
        excited = df[df["x"] != 0.0]
        return DiscreteSpectrum(
            ground_weight=float(ground["weight"].sum()),
            excited=tuple(zip(excited["x"].astype(float), excited["weight"].astype(float))),
            gap=gap,
        )
    raise UsageError(f"Spectrum CSV needs columns energy_ratio,weight, got {', '.join(map(str, df.columns))}")


def schedule_to_json(schedule: Schedule) -> dict:
    return {"times": list(schedule.times), "total": schedule.total}


def schedule_from_json(data: dict) -> Schedule:
    try:
        return Schedule(tuple(data["times"]))
    except KeyError:
        raise UsageError("Schedule JSON needs a 'times' list")


def super_schedule_to_json(super_schedule: SuperSchedule) -> dict:
    return {
        "supers": [{"base_time": s.base_time, "depth": s.depth} for s in super_schedule.supers],
        "total": super_schedule.total,
    }


def super_schedule_from_json(data: dict) -> SuperSchedule:
    """{"supers": [{"base_time", "depth"}], "total"}; the older {"bases", "depths"} form is accepted."""
    if "supers" in data:
        supers = data["supers"]
        if not supers:
            raise UsageError("Super schedule JSON needs a nonempty 'supers' list")
        try:
            return SuperSchedule(tuple(
                SuperIteration(s["base_time"]) if s.get("depth") is None else SuperIteration(s["base_time"], s["depth"])
                for s in supers
            ))
        except (KeyError, TypeError, AttributeError) as e:
            raise UsageError(f"Malformed super schedule JSON: {e!r}")

    bases = data.get("bases")
    if not bases:
        raise UsageError("Super schedule JSON needs a nonempty 'supers' list")
    depths = data.get("depths") or [None] * len(bases)
    return SuperSchedule(tuple(
        SuperIteration(b) if d is None else SuperIteration(b, d) for b, d in zip(bases, depths)
    ))


def state_to_json(state: PhysicalState) -> dict:
    return {
        "energies": state.energies.tolist(),
        "amplitudes": [[float(a.real), float(a.imag)] for a in state.amplitudes],
    }


def state_from_json(data: dict) -> PhysicalState:
    """PhysicalState from {"energies": [...], "amplitudes": [[re, im], ...]}; amplitudes are renormalized."""
    try:
        amplitudes = np.array([complex(re, im) for re, im in data["amplitudes"]])
        energies = np.asarray(data["energies"], dtype=float)
    except (KeyError, TypeError, ValueError) as e:
        raise UsageError(f"Malformed state JSON: {e}")
    return PhysicalState.from_unnormalized(amplitudes, energies)


def read_json(path: PathLike):
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except FileNotFoundError:
        raise UsageError(f"File not found: {path}")
    except json.JSONDecodeError as e:
        raise UsageError(f"Invalid JSON in {path}: {e}")
