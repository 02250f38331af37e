"""Batch command-line entry point.

Commands: presets, orbit, walk, ps, green, diagnose. Every run writes a
`resolved-config` echo into the output directory; rerunning any command with
the same resolved config reproduces every file byte-for-byte, independent of
--workers. CSV schemas are documented in the README's reference section.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ExperimentConfig, load_config, resolve_group, resolved_text, with_overrides
from .conformal import critical_exponent_fit, ps_boundary_sample
from .errors import KleinwalkError
from .green import (
    green_estimate_tree,
    green_F_montecarlo_all,
    green_series,
    tree_first_passage_solve,
)
from .groups import PRESET_NAMES, Word, enumerate_orbit, load_preset
from .output import write_csv, write_meta
from .singularity import lemma_exp_sequence, local_dimension, overlap_statistic, proof_gap_series
from .walks import StepDistribution, drift_estimates, entropy_estimate, harmonic_sample

_LETTER_NAMES = "aAbBcCdDeEfF"


def _word_name(letters) -> str:
    return "".join(_LETTER_NAMES[s] for s in letters) if len(letters) else "e"


def _write_resolved(cfg: ExperimentConfig, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "resolved-config").write_text(resolved_text(cfg), encoding="utf-8")


def _sample_rows(sample):
    for p, w in zip(sample.points, sample.weights):
        yield (float(p[0]), float(p[1]), float(p[2]), float(w))


def _write_sample(sample, out: Path, stem: str) -> None:
    write_csv(out / f"{stem}.csv", ["x", "y", "z", "weight"], _sample_rows(sample))
    write_meta(out / f"{stem}.meta.json", sample.meta)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_presets(cfg: ExperimentConfig) -> tuple[int, list[str]]:
    for name in PRESET_NAMES:
        spec = load_preset(name)
        kinds = ",".join(spec.generator_kinds())
        print(f"{name}: rank {spec.rank}, ambient H^{spec.ambient_dim}, generators {kinds}")
    return 0, []


def cmd_orbit(cfg: ExperimentConfig) -> tuple[int, list[str]]:
    spec, _ = resolve_group(cfg)
    out = Path(cfg.out)
    _write_resolved(cfg, out)
    warnings: list[str] = []
    orbit = enumerate_orbit(spec, cfg.orbit_depth, cfg.orbit_cap)
    fit = critical_exponent_fit(orbit, cfg.fit_window, cfg.fit_points)
    if len(orbit) <= cfg.orbit_csv_max_rows:
        names = [""] * len(orbit)
        names[0] = "e"
        rows = [("e", 0, 0.0, 0.0, 0.0, 0.0)]
        for i in range(1, len(orbit)):
            prefix = names[orbit.parent[i]]
            names[i] = ("" if prefix == "e" else prefix) + _LETTER_NAMES[orbit.letter[i]]
            d = orbit.dirs[i]
            rows.append((names[i], int(orbit.length[i]), float(orbit.radii[i]),
                         float(d[0]), float(d[1]), float(d[2])))
        write_csv(out / "orbit.csv",
                  ["word", "word_length", "hyp_radius", "dir_x", "dir_y", "dir_z"], rows)
    else:
        warnings.append(f"orbit.csv skipped: {len(orbit)} rows above orbit_csv_max_rows")
    write_csv(out / "growth.csv", ["r", "count"],
              zip(fit.radii.tolist(), fit.counts.tolist()))
    write_meta(out / "orbit.meta.json", {
        "preset": spec.name, "depth": cfg.orbit_depth, "entries": len(orbit),
        "reliable_radius": orbit.reliable_radius(), "delta_hat": fit.delta_hat,
        "intercept": fit.intercept, "fit_window": list(fit.fit_window),
        "fit_residual": fit.residual, "warnings": warnings,
    })
    return 0, warnings


def cmd_walk(cfg: ExperimentConfig) -> tuple[int, list[str]]:
    spec, mu = resolve_group(cfg)
    out = Path(cfg.out)
    _write_resolved(cfg, out)
    warnings: list[str] = []
    sample = harmonic_sample(spec, mu, cfg.walk_paths, cfg.eps_stop, cfg.max_steps,
                             cfg.seed, cfg.workers)
    _write_sample(sample, out, "harmonic")
    if sample.meta["maxsteps_warning"]:
        warnings.append("more than 1% of paths hit max_steps before escaping")
    drift = drift_estimates(spec, mu, cfg.walk_paths, cfg.walk_length, cfg.seed)
    entropy = entropy_estimate(spec, mu, cfg.walk_paths, cfg.walk_length, cfg.seed)
    write_csv(out / "drift.csv", ["quantity", "value", "stderr"], [
        ("ell_word", drift.ell_word, drift.se_word),
        ("ell_hyp", drift.ell_hyp, drift.se_hyp),
        ("entropy_green_drift", entropy.value, entropy.stderr),
    ])
    return 0, warnings


def cmd_ps(cfg: ExperimentConfig) -> tuple[int, list[str]]:
    spec, _ = resolve_group(cfg)
    out = Path(cfg.out)
    _write_resolved(cfg, out)
    orbit = enumerate_orbit(spec, cfg.orbit_depth, cfg.orbit_cap)
    fit = critical_exponent_fit(orbit, cfg.fit_window, cfg.fit_points)
    for offset in cfg.ps_offsets:
        sample = ps_boundary_sample(orbit, fit.delta_hat + offset, cfg.ps_min_radius, fit)
        _write_sample(sample, out, f"ps_offset{offset:g}")
    write_meta(out / "ps.meta.json", {
        "preset": spec.name, "delta_hat": fit.delta_hat, "offsets": list(cfg.ps_offsets),
        "min_radius": cfg.ps_min_radius, "orbit_depth": cfg.orbit_depth,
    })
    return 0, []


def cmd_green(cfg: ExperimentConfig) -> tuple[int, list[str]]:
    spec, mu = resolve_group(cfg)
    out = Path(cfg.out)
    _write_resolved(cfg, out)
    fp = tree_first_passage_solve(spec, mu)
    rows = []
    words: list[tuple[int, ...]] = [()]
    frontier: list[tuple[int, ...]] = [()]
    for _ in range(cfg.green_words_max_len):
        nxt = []
        for w in frontier:
            for s in range(len(spec.generators)):
                if w and w[-1] == (s ^ 1):
                    continue
                nxt.append(w + (s,))
        words.extend(nxt)
        frontier = nxt
    mc = green_F_montecarlo_all(spec, mu, cfg.green_words_max_len, cfg.green_trials,
                                cfg.green_horizon, cfg.seed)
    for w in words:
        tree = green_estimate_tree(spec, mu, Word(w, True))
        rows.append((_word_name(w), tree.F_hat, 0.0, tree.dG, "tree-exact", 0, 0))
        if w in mc:
            est = mc[w]
            rows.append((_word_name(w), est.F_hat, est.stderr, est.dG, "montecarlo",
                         est.trials, est.horizon))
    g_id = green_series(spec, mu, Word(()), cfg.green_series_n_max)
    write_csv(out / "green.csv",
              ["word", "F_hat", "stderr", "dG", "method", "trials", "horizon"], rows)
    write_meta(out / "green.meta.json", {
        "preset": spec.name, "mu": list(mu.weights), "Fs": list(fp.Fs),
        "solver_iterations": fp.iterations, "solver_residual": fp.residual,
        "green_series_identity": g_id, "green_series_n_max": cfg.green_series_n_max,
        "trials": cfg.green_trials, "horizon": cfg.green_horizon, "seed": cfg.seed,
    })
    return 0, []


def cmd_diagnose(cfg: ExperimentConfig) -> tuple[int, list[str]]:
    spec, mu = resolve_group(cfg)
    out = Path(cfg.out)
    _write_resolved(cfg, out)
    warnings: list[str] = []

    orbit = enumerate_orbit(spec, cfg.orbit_depth, cfg.orbit_cap)
    fit = critical_exponent_fit(orbit, cfg.fit_window, cfg.fit_points)
    write_csv(out / "growth.csv", ["r", "count"], zip(fit.radii.tolist(), fit.counts.tolist()))

    harm = harmonic_sample(spec, mu, cfg.walk_paths, cfg.eps_stop, cfg.max_steps,
                           cfg.seed, cfg.workers)
    harm_b = harmonic_sample(spec, mu, cfg.walk_paths, cfg.eps_stop, cfg.max_steps,
                             cfg.seed + 1, cfg.workers)
    _write_sample(harm, out, "harmonic")
    _write_sample(harm_b, out, "harmonic_b")
    if harm.meta["maxsteps_warning"] or harm_b.meta["maxsteps_warning"]:
        warnings.append("more than 1% of paths hit max_steps before escaping")

    ps = ps_boundary_sample(orbit, fit.delta_hat + cfg.ps_offsets[-1], cfg.ps_min_radius, fit)
    if cfg.ps_resample > 0:
        ps = ps.resample(cfg.ps_resample, cfg.seed)
    _write_sample(ps, out, "ps")

    lemma = lemma_exp_sequence(spec, cfg.lemma_D, cfg.lemma_n_max)
    write_csv(out / "lemma.csv", ["n", "word_length", "hyp_dist", "defect"],
              zip(lemma.n.tolist(), lemma.word_len.tolist(),
                  lemma.hyp_dist.tolist(), lemma.defect.tolist()))

    gap = proof_gap_series(spec, mu, fit.delta_hat, range(1, cfg.gap_n_max + 1))
    write_csv(out / "gap.csv", ["n", "word_length", "hyp_dist", "d_green", "gap"],
              zip(gap.n.tolist(), gap.word_len.tolist(), gap.hyp_dist.tolist(),
                  gap.d_green.tolist(), gap.gap.tolist()))

    dim_h = local_dimension(harm, cfg.scales, cfg.probe_count, cfg.seed, cfg.bootstrap)
    dim_p = local_dimension(ps, cfg.scales, cfg.probe_count, cfg.seed + 1, cfg.bootstrap)
    for report, stem in ((dim_h, "dimension_harmonic"), (dim_p, "dimension_ps")):
        write_csv(out / f"{stem}.csv", ["probe", "slope"],
                  ((i, float(s)) for i, s in enumerate(report.slopes)))
        if report.reliability_warning:
            warnings.append(f"{stem}: over 20% of probes isolated at the smallest scale")

    overlap_rows = []
    for k in cfg.bin_counts:
        overlap_rows.append((k, overlap_statistic(harm, ps, k),
                             overlap_statistic(harm, harm_b, k)))
    write_csv(out / "overlap.csv", ["bin_count", "overlap", "baseline_overlap"], overlap_rows)

    write_meta(out / "diagnose.meta.json", {
        "preset": spec.name, "mu": list(mu.weights), "seed": cfg.seed,
        "delta_hat": fit.delta_hat, "fit_residual": fit.residual,
        "orbit_depth": cfg.orbit_depth, "orbit_entries": len(orbit),
        "gap_crossings": {str(k): v for k, v in gap.crossings.items()},
        "lemma_first_exceeding_10": lemma.first_exceeding(10.0),
        "dimension_harmonic": {"mean": dim_h.mean, "ci": [dim_h.ci_low, dim_h.ci_high]},
        "dimension_ps": {"mean": dim_p.mean, "ci": [dim_p.ci_low, dim_p.ci_high]},
        "overlap_separation_finest": overlap_rows[-1][2] - overlap_rows[-1][1],
        "warnings": warnings,
    })
    return 0, warnings


_COMMANDS = {
    "presets": cmd_presets,
    "orbit": cmd_orbit,
    "walk": cmd_walk,
    "ps": cmd_ps,
    "green": cmd_green,
    "diagnose": cmd_diagnose,
}


def run_experiment(cfg: ExperimentConfig, command: str) -> int:
    """Run one command; nonzero exit when --strict is set and warnings fired."""
    if command not in _COMMANDS:
        raise KleinwalkError(f"unknown command {command!r}")
    code, warnings = _COMMANDS[command](cfg)
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    if cfg.strict and warnings:
        return 1
    return code


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="kleinwalk",
        description="Kleinian group random walks, conformal densities, and "
                    "singularity diagnostics",
    )
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", type=Path, default=None, help="experiment config file")
    parser.add_argument("--seed", type=int, default=None, help="override master seed")
    parser.add_argument("--workers", type=int, default=None, help="parallel sampling workers")
    parser.add_argument("--out", type=str, default=None, help="output directory")
    parser.add_argument("--strict", action="store_true", help="exit nonzero on warnings")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else ExperimentConfig()
        cfg = with_overrides(cfg, seed=args.seed, workers=args.workers, out=args.out,
                             strict=True if args.strict else None)
        return run_experiment(cfg, args.command)
    except KleinwalkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
