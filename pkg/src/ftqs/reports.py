"""Report emission: provenance-stamped CSV/JSON files and adjacent figures.

Every file embeds the resolved configuration and master seed, so a report is
reproducible from its own header. CSV bytes are deterministic for a fixed
(config, seed): no timestamps, canonical key order, repr-stable floats.
Figures are rendered next to the delimited output with the same stem.
"""

import csv
import json

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _canonical(params: dict) -> str:
    return json.dumps(params, sort_keys=True, separators=(",", ":"))


def provenance_lines(subcommand: str, params: dict, seed: int):
    return [
        f"# subcommand: {subcommand}",
        f"# seed: {seed}",
        f"# config: {_canonical(params)}",
    ]


def write_csv(path, columns, rows, *, subcommand, params, seed):
    """Delimited table with leading provenance comments."""
    with open(path, "w", newline="") as handle:
        for line in provenance_lines(subcommand, params, seed):
            handle.write(line + "\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    return path


def _cell(value):
    """Stable text for one CSV cell; floats through repr, numpy unwrapped."""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return int(value)
    return value


def read_csv(path):
    """Inverse of write_csv: returns (provenance dict, columns, string rows)."""
    meta = {}
    rows = []
    columns = None
    with open(path, newline="") as handle:
        for line in handle:
            if line.startswith("#"):
                key, _, value = line[1:].partition(":")
                meta[key.strip()] = value.strip()
                continue
            record = next(csv.reader([line]))
            if columns is None:
                columns = record
            else:
                rows.append(record)
    return meta, columns, rows


def _json_default(value):
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"not JSON serializable: {type(value)}")


def write_json(path, results, *, subcommand, params, seed):
    payload = {
        "subcommand": subcommand,
        "seed": seed,
        "config": params,
        "results": results,
    }
    with open(path, "w") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True, default=_json_default)
        handle.write("\n")
    return path


def write_text(path, body, *, subcommand, params, seed):
    with open(path, "w") as handle:
        for line in provenance_lines(subcommand, params, seed):
            handle.write(line + "\n")
        handle.write(body)
        if not body.endswith("\n"):
            handle.write("\n")
    return path


def figure_path(csv_path) -> str:
    base = str(csv_path)
    return (base[:-4] if base.endswith(".csv") else base) + ".png"


def render_distribution_figure(path, labels, probabilities, empirical=None):
    """Bar chart of an outcome distribution, optionally vs empirical rates."""
    fig, ax = plt.subplots(figsize=(max(4.0, 0.4 * len(labels)), 3.2))
    positions = np.arange(len(labels))
    width = 0.4 if empirical is not None else 0.8
    ax.bar(positions, probabilities, width=width, label="exact")
    if empirical is not None:
        ax.bar(positions + width, empirical, width=width, label="empirical")
        ax.legend()
    ax.set_xticks(positions)
    ax.set_xticklabels(labels, rotation=90, fontsize=7)
    ax.set_ylabel("probability")
    ax.set_xlabel("outcome (s,x)")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def render_decode_figure(path, rows):
    """Logical failure rate vs distance, one line per physical rate."""
    fig, ax = plt.subplots(figsize=(4.4, 3.2))
    by_rate = {}
    for distance, _, p, _, p_l, lo, hi in rows:
        by_rate.setdefault(p, []).append((distance, p_l, lo, hi))
    for p, points in sorted(by_rate.items()):
        points.sort()
        ds = [pt[0] for pt in points]
        pls = [pt[1] for pt in points]
        errs = [
            [max(0.0, pt[1] - pt[2]) for pt in points],
            [max(0.0, pt[3] - pt[1]) for pt in points],
        ]
        ax.errorbar(ds, pls, yerr=errs, marker="o", capsize=3, label=f"p={p:g}")
    ax.set_yscale("log")
    ax.set_xlabel("distance")
    ax.set_ylabel("logical failure rate")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def render_msd_figure(path, rows):
    """Output infidelity and acceptance against input infidelity."""
    eps = [r[0] for r in rows]
    accept = [r[2] for r in rows]
    infid = [r[3] for r in rows]
    fig, (left, right) = plt.subplots(1, 2, figsize=(7.2, 3.2))
    positive = [(e, i) for e, i in zip(eps, infid) if i > 0]
    if positive:
        left.loglog([e for e, _ in positive], [i for _, i in positive], marker="o")
    left.set_xlabel("input infidelity")
    left.set_ylabel("output infidelity")
    right.plot(eps, accept, marker="o")
    right.set_xlabel("input infidelity")
    right.set_ylabel("acceptance rate")
    right.set_ylim(0.0, 1.05)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path
