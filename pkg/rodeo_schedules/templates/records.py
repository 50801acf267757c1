from typing import List, Sequence

PASS = "PASS"
FAIL = "FAIL"

# median and stderr_mean stay empty for closed-form-only rows
RRA_COLUMNS = ["zeta", "n", "mean", "geomean", "rms", "sigma_over_mean", "median", "stderr_mean"]
RRA_MONTE_CARLO_COLUMNS = ["mc_mean", "mc_geomean", "mc_rms", "mc_rms_stderr", "mc_sigma_over_mean"]
SEPARATRIX_COLUMNS = ["statistic", "alpha", "beta"]
SINGLE_RUN_COLUMNS = ["zeta", "s", "below_threshold"]
SUPER_COLUMNS = ["x", "super", "rra_mean_n3", "ratio"]
ENVELOPE_COLUMNS = ["x", "s_ub"]
SIMULATE_COLUMNS = ["trials", "success_rate", "stderr", "closed_form", "z_score"]


def get_wam_columns(max_n: int) -> List[str]:
    """n,Q,total_time followed by one column per super iteration time, t1..t<max_n>."""
    return ["n", "Q", "total_time"] + [f"t{k}" for k in range(1, max_n + 1)]


def get_wam_row(row, max_n: int) -> dict:
    record = {"n": row.n, "Q": row.q, "total_time": row.total_time}
    for k in range(1, max_n + 1):
        record[f"t{k}"] = row.times[k - 1] if k <= len(row.times) else None
    return record


def get_wam_json(row) -> dict:
    return {
        "n": row.n,
        "Q": row.q,
        "total_time": row.total_time,
        "times": list(row.times),
        "scale": row.scale,
    }


def get_rra_row(stats, mc=None) -> dict:
    record = {
        "zeta": stats.zeta,
        "n": stats.n,
        "mean": stats.arithmetic_mean,
        "geomean": stats.geometric_mean,
        "rms": stats.rms,
        "sigma_over_mean": stats.sigma_over_mean,
        "median": None,
        "stderr_mean": None,
    }
    if mc is not None:
        record.update({
            "median": mc.median,
            "stderr_mean": mc.stderr_mean,
            "mc_mean": mc.statistics.arithmetic_mean,
            "mc_geomean": mc.statistics.geometric_mean,
            "mc_rms": mc.statistics.rms,
            "mc_rms_stderr": mc.stderr_rms,
            "mc_sigma_over_mean": mc.statistics.sigma_over_mean,
        })
    return record


def get_separatrix_row(fit) -> dict:
    return {"statistic": fit.statistic.value, "alpha": fit.alpha, "beta": fit.beta}


def get_check_line(name: str, passed: bool, detail: str) -> str:
    status = PASS if passed else FAIL
    return f"[{status}] {name}: {detail}"


def get_summary_line(results: Sequence) -> str:
    passing = sum(1 for r in results if r.passed)
    total = len(results)
    percentage = (passing / total * 100) if total > 0 else 0
    return f"{passing}/{total} checks passed ({percentage:.0f}%)"
