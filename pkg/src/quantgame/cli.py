"""Command-line experiment runner.

Subcommands: solve, simulate, chains, analyze, verify. All read a YAML
experiment config; everything downstream of solve additionally needs the
state file it wrote. Outputs are CSV (header row, fixed column order) and
JSON. Exit codes: 0 success, 2 validation error, 3 non-convergence,
4 missing prerequisite state.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import montecarlo
from .config import ConfigError, ExperimentConfig, load_config, load_state, save_state
from .densities import hellinger_beta
from .game import bootstrap, check_social_stability, sweep, verify_nash
from .networks import detect_acyclic

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NO_CONVERGENCE = 3
EXIT_MISSING_STATE = 4


def _write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=1, default=_jsonable))


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _load(args) -> ExperimentConfig:
    return load_config(args.config)


def _state_or_exit(args, cfg):
    path = Path(args.state) if args.state else _outdir(args, cfg) / "state.json"
    if not path.exists():
        print(f"state file {path} not found; run 'solve' first", file=sys.stderr)
        raise SystemExit(EXIT_MISSING_STATE)
    return load_state(path, cfg.game())


def _outdir(args, cfg) -> Path:
    out = Path(args.out) if args.out else Path(cfg.outputs.directory)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _snapshot_rows(sweep_no, cfg, state):
    rows = []
    for i, agent in enumerate(cfg.agents):
        q = state.quantizers[i]
        for k, v in enumerate(q.words):
            rows.append([sweep_no, agent.id, "word", k + 1, repr(float(v))])
        for k, v in enumerate(q.boundaries):
            rows.append([sweep_no, agent.id, "boundary", k, repr(float(v))])
        for k, v in enumerate(state.usage[i]):
            rows.append([sweep_no, agent.id, "usage", k + 1, repr(float(v))])
    return rows


def cmd_solve(args) -> int:
    cfg = _load(args)
    out = _outdir(args, cfg)
    game = cfg.game()
    tol = args.tol if args.tol is not None else cfg.solver.tol
    max_sweeps = args.max_sweeps if args.max_sweeps is not None else cfg.solver.max_sweeps

    schedule = list(range(game.n_agents))
    if cfg.solver.schedule_policy == "topological_if_acyclic":
        is_forest, order = detect_acyclic(game.comm)
        if is_forest:
            schedule = order

    state = bootstrap(game, n_starts=cfg.solver.n_starts)
    rows = _snapshot_rows(0, cfg, state)
    converged = False
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        starts = cfg.solver.n_starts if sweeps == 1 else 1
        state, move = sweep(state, game, schedule, n_starts=starts)
        rows.extend(_snapshot_rows(sweeps, cfg, state))
        if move < tol:
            converged = True
            break

    save_state(state, cfg.agent_ids, out / "state.json")
    _write_csv(out / "sweeps.csv", ["sweep", "agent", "kind", "index", "value"], rows)

    from .game import _quick_report
    report = _quick_report(state, game, converged, sweeps, cfg.solver.n_starts)
    payload = {
        "converged": converged,
        "sweeps": sweeps,
        "last_max_move": state.last_max_move,
        "observed_residuals": report.observed_residuals,
        "br_distances": report.br_distances,
        "agents": cfg.agent_ids,
    }
    _write_json(out / "report.json", payload)
    _write_csv(
        out / "report.csv",
        ["agent", "observed_residual", "br_distance"],
        [
            [cfg.agent_ids[i], repr(float(report.observed_residuals[i])),
             repr(float(report.br_distances[i]))]
            for i in range(game.n_agents)
        ],
    )
    if not converged:
        print(f"did not converge within {max_sweeps} sweeps "
              f"(last move {state.last_max_move:.3g})", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    print(f"converged in {sweeps} sweeps; state written to {out / 'state.json'}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _load(args)
    if args.samples is not None and args.samples < 1:
        print("sample count must be positive", file=sys.stderr)
        return EXIT_CONFIG
    out = _outdir(args, cfg)
    game = cfg.game()
    state = _state_or_exit(args, cfg)
    n = args.samples if args.samples is not None else cfg.montecarlo.n_samples
    seed = args.seed if args.seed is not None else cfg.montecarlo.seed
    reports = [
        montecarlo.estimate_losses(i, state, game, n, seed=seed + i)
        for i in range(game.n_agents)
    ]
    header = ["agent", "total", "quantization", "communication", "cross",
              "total_se", "quantization_se", "communication_se", "cross_se",
              "n_samples", "n_truncated", "n_clamped"]
    rows = [
        [cfg.agent_ids[i]] + [repr(getattr(r, f)) if isinstance(getattr(r, f), float)
                              else getattr(r, f) for f in header[1:]]
        for i, r in enumerate(reports)
    ]
    _write_csv(out / "losses.csv", header, rows)
    _write_json(out / "losses.json",
                {"agents": cfg.agent_ids, "reports": [asdict(r) for r in reports]})
    print(f"loss reports for {game.n_agents} agents written to {out}")
    return EXIT_OK


def cmd_chains(args) -> int:
    cfg = _load(args)
    out = _outdir(args, cfg)
    game = cfg.game()
    state = _state_or_exit(args, cfg)
    shared, witnesses = montecarlo.shared_vocabulary(state.quantizers)
    rows = []
    probes = []
    for i in range(game.n_agents):
        for j in range(game.n_agents):
            if i == j:
                continue
            try:
                rep = montecarlo.path_dependence_probe(
                    state.quantizers, game.comm, i, j,
                    max_len=args.max_len, n_inputs=args.inputs)
            except montecarlo.NoChainError:
                continue
            probes.append(rep)
            rows.append([cfg.agent_ids[i], cfg.agent_ids[j], rep.n_chains,
                         repr(rep.spread), repr(rep.worst_input)])
    _write_csv(out / "probes.csv",
               ["source", "target", "n_chains", "spread", "worst_input"], rows)
    payload = {
        "shared_vocabulary": shared,
        "witness_intervals": witnesses,
        "probes": [
            {"source": cfg.agent_ids[p.source], "target": cfg.agent_ids[p.target],
             "n_chains": p.n_chains, "spread": p.spread,
             "worst_input": p.worst_input}
            for p in probes
        ],
    }
    if args.chain:
        idx = {aid: i for i, aid in enumerate(cfg.agent_ids)}
        chain = [idx[int(t)] for t in args.chain.split(",")]
        grid = np.linspace(0.0, 1.0, args.inputs + 2)[1:-1]
        rng = np.random.default_rng(args.seed or 0)
        chain_rows = []
        for x in grid:
            rep = montecarlo.chain_translate(state.quantizers, chain, float(x),
                                             noise=game.noise, rng=rng)
            chain_rows.append([repr(rep.x), repr(rep.final_word),
                               repr(rep.translation_loss), repr(rep.word_drift),
                               rep.cell_index + 1,
                               "" if rep.bound is None else repr(rep.bound)])
        _write_csv(out / "chain.csv",
                   ["x", "final_word", "translation_loss", "word_drift",
                    "cell", "bound"], chain_rows)
    _write_json(out / "chains.json", payload)
    print(f"{len(probes)} pair probes written to {out}; "
          f"shared vocabulary: {shared}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    cfg = _load(args)
    out = _outdir(args, cfg)
    game = cfg.game()
    state = _state_or_exit(args, cfg)
    base = bootstrap(game, n_starts=cfg.solver.n_starts)
    rows = []
    skipped = []
    for i in range(game.n_agents):
        for j in range(i + 1, game.n_agents):
            if cfg.agents[i].levels != cfg.agents[j].levels:
                skipped.append((cfg.agent_ids[i], cfg.agent_ids[j]))
                continue
            h = hellinger_beta(cfg.agents[i].physical, cfg.agents[j].physical)
            msd_phys = float(np.mean(
                (base.quantizers[i].words - base.quantizers[j].words) ** 2))
            msd_eq = float(np.mean(
                (state.quantizers[i].words - state.quantizers[j].words) ** 2))
            rows.append([cfg.agent_ids[i], cfg.agent_ids[j],
                         repr(h), repr(msd_phys), repr(msd_eq)])
    for pair in skipped:
        print(f"skipping pair {pair}: unequal word counts", file=sys.stderr)
    _write_csv(out / "pairs.csv",
               ["agent_i", "agent_j", "hellinger", "msd_physical",
                "msd_equilibrium"], rows)
    _write_json(out / "pairs.json", {
        "pairs": [
            {"agent_i": r[0], "agent_j": r[1], "hellinger": float(r[2]),
             "msd_physical": float(r[3]), "msd_equilibrium": float(r[4])}
            for r in rows
        ]
    })
    print(f"{len(rows)} agent pairs written to {out / 'pairs.csv'}")
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = _load(args)
    out = _outdir(args, cfg)
    game = cfg.game()
    state = _state_or_exit(args, cfg)
    n = args.samples if args.samples is not None else cfg.montecarlo.n_samples
    seed = args.seed if args.seed is not None else cfg.montecarlo.seed
    tol = args.tol if args.tol is not None else cfg.solver.tol
    report = verify_nash(state, game, tol=tol, n_samples=n, seed=seed,
                         n_starts=cfg.solver.n_starts)
    stability = check_social_stability(state, game, n_starts=cfg.solver.n_starts)
    _write_csv(
        out / "verify.csv",
        ["agent", "observed_residual", "br_distance",
         "true_residual", "true_residual_se"],
        [
            [cfg.agent_ids[i], repr(float(report.observed_residuals[i])),
             repr(float(report.br_distances[i])),
             repr(float(report.true_residuals[i])),
             repr(float(report.true_residual_ses[i]))]
            for i in range(game.n_agents)
        ],
    )
    _write_json(out / "verify.json", {
        "agents": cfg.agent_ids,
        "observed_residuals": report.observed_residuals,
        "br_distances": report.br_distances,
        "true_residuals": report.true_residuals,
        "true_residual_ses": report.true_residual_ses,
        "converged": report.converged,
        "sweeps": report.sweeps,
        "stability": asdict(stability),
    })
    print(f"verification written to {out / 'verify.json'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quantgame",
        description="Nash-equilibrium quantizer design on communication networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_state=False):
        p.add_argument("--config", required=True, help="experiment config (YAML)")
        p.add_argument("--out", help="output directory (default from config)")
        if needs_state:
            p.add_argument("--state", help="state file from 'solve' "
                                           "(default <out>/state.json)")

    p = sub.add_parser("solve", help="run distributed Lloyd-Max to equilibrium")
    common(p)
    p.add_argument("--tol", type=float, help="sweep convergence tolerance")
    p.add_argument("--max-sweeps", type=int, dest="max_sweeps")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("simulate", help="Monte-Carlo loss decomposition")
    common(p, needs_state=True)
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("chains", help="translation chains and path-dependence probes")
    common(p, needs_state=True)
    p.add_argument("--max-len", type=int, default=5, dest="max_len")
    p.add_argument("--inputs", type=int, default=101)
    p.add_argument("--chain", help="comma-separated agent ids to translate through")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_chains)

    p = sub.add_parser("analyze", help="pairwise Hellinger vs word-distance table")
    common(p, needs_state=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("verify", help="Nash equilibrium certificate")
    common(p, needs_state=True)
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--tol", type=float)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
