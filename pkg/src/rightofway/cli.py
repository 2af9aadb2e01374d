"""Command-line front end: run scenarios, run standalone auctions, verify.

Scenario configs are flat ``key = value`` files with dotted agent
sections (``agents.1.x0 = -1.5``). Unknown keys are fatal so typos never
pass silently. All numeric output is written with 12 significant digits
and is byte-stable across repeated runs on the same platform.

Exit codes: 0 success, 2 configuration error, 3 simulation fault,
4 verification failure.
"""

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

from . import __version__
from .backend import active_backend
from .auction import ValuationParams, run_auction
from .engine import AgentSpec, ScenarioConfig, SimulationFault, effort_summary, run_scenario
from .verify import SUITES, run_suite


class ConfigError(Exception):
    pass


_BOOL_WORDS = {"true": True, "yes": True, "1": True,
               "false": False, "no": False, "0": False}

_SCALAR_KEYS = {
    "controller": str,
    "v": float,
    "d": float,
    "dt": float,
    "duration": float,
    "stop_at_goals": bool,
    "lambda": float,
    "kappa1": float,
    "kappa2": float,
    "kx": float,
    "ky": float,
    "ktheta": float,
    "gamma": float,
    "k": float,
    "eps": float,
    "grid_step": float,
    "max_rounds": int,
    "omega_max": float,
}

_AGENT_KEYS = {
    "x0": (float, True),
    "y0": (float, True),
    "goal_x": (float, True),
    "y_ref": (float, True),
    "alpha": (float, False),
    "theta0": (float, False),
}


def _coerce(key, raw, typ):
    if typ is str:
        return raw
    if typ is bool:
        word = raw.strip().lower()
        if word not in _BOOL_WORDS:
            raise ConfigError(f"key '{key}': expected a boolean, got {raw!r}")
        return _BOOL_WORDS[word]
    try:
        if typ is int:
            return int(raw)
        return float(raw)
    except ValueError:
        raise ConfigError(f"key '{key}': expected {typ.__name__}, got {raw!r}")


def parse_scenario_text(text):
    """Parse config text into (ScenarioConfig, canonical key/value dict)."""
    scalars = {}
    agents = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key in _SCALAR_KEYS:
            if key in scalars:
                raise ConfigError(f"duplicate key '{key}'")
            scalars[key] = _coerce(key, raw, _SCALAR_KEYS[key])
            continue
        parts = key.split(".")
        if len(parts) == 3 and parts[0] == "agents":
            try:
                idx = int(parts[1])
            except ValueError:
                raise ConfigError(f"unknown key '{key}'")
            field = parts[2]
            if field not in _AGENT_KEYS:
                raise ConfigError(f"unknown key '{key}'")
            slot = agents.setdefault(idx, {})
            if field in slot:
                raise ConfigError(f"duplicate key '{key}'")
            slot[field] = _coerce(key, raw, _AGENT_KEYS[field][0])
            continue
        raise ConfigError(f"unknown key '{key}'")

    if not agents:
        raise ConfigError("no agents defined (need agents.N.* keys)")
    indices = sorted(agents)
    if indices != list(range(1, len(indices) + 1)):
        raise ConfigError(f"agent indices must be 1..N contiguous, got {indices}")
    specs = []
    for idx in indices:
        slot = agents[idx]
        for field, (_, required) in _AGENT_KEYS.items():
            if required and field not in slot:
                raise ConfigError(f"agent {idx}: missing key 'agents.{idx}.{field}'")
        specs.append(AgentSpec(
            x0=slot["x0"], y0=slot["y0"], goal_x=slot["goal_x"],
            y_ref=slot["y_ref"], alpha=slot.get("alpha", 1.0),
            theta0=slot.get("theta0")))

    kwargs = {"agents": specs}
    rename = {"lambda": "lam"}
    for key, value in scalars.items():
        kwargs[rename.get(key, key)] = value
    config = ScenarioConfig(**kwargs)
    try:
        config.validate()
    except ValueError as exc:
        raise ConfigError(str(exc))

    canonical = dict(sorted(scalars.items()))
    for idx in indices:
        for field in sorted(agents[idx]):
            canonical[f"agents.{idx}.{field}"] = agents[idx][field]
    return config, canonical


def load_scenario(path):
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_scenario_text(p.read_text())


def config_hash(canonical):
    h = hashlib.sha256()
    for key, value in canonical.items():
        if isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, float):
            text = fmt12(value)
        else:
            text = str(value)
        h.update(f"{key}={text}\n".encode())
    return h.hexdigest()


def fmt12(x):
    """12 significant digits; the fixed numeric format of all outputs."""
    return "%.12g" % float(x)


def _round12(obj):
    if isinstance(obj, float):
        return float(fmt12(obj))
    if isinstance(obj, dict):
        return {k: _round12(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round12(v) for v in obj]
    return obj


def write_json(path, payload):
    with open(path, "w", newline="\n") as fh:
        json.dump(_round12(payload), fh, indent=2)
        fh.write("\n")


def write_trajectory_csv(path, log):
    n = log.n_agents
    header = ["t"]
    for i in range(1, n + 1):
        header += [f"x_{i}", f"y_{i}", f"theta_{i}",
                   f"omega_nom_{i}", f"omega_app_{i}"]
    header += ["h_tilde", "deficit", "active_set", "event_id"]
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for r in range(log.t.shape[0]):
            row = [fmt12(log.t[r])]
            for i in range(n):
                row += [fmt12(log.states[r, i, 0]), fmt12(log.states[r, i, 1]),
                        fmt12(log.states[r, i, 2]), fmt12(log.omega_nom[r, i]),
                        fmt12(log.omega_app[r, i])]
            row += [fmt12(log.h_tilde[r]), fmt12(log.deficit[r]),
                    ";".join(str(i + 1) for i in log.active_sets[r]),
                    str(int(log.event_ids[r]))]
            fh.write(",".join(row) + "\n")


def events_payload(events):
    payload = []
    for ev in events:
        payload.append({
            "t": ev.t,
            "reason": ev.reason,
            "agents": [i + 1 for i in ev.agents],
            "n": list(ev.n),
            "bids": [{"beta": b.beta, "d": b.demand} for b in ev.bids],
            "credits": list(ev.credits),
            "payments": list(ev.payments),
            "iterations": ev.iterations,
            "converged": ev.converged,
        })
    return payload


def cmd_run(args):
    try:
        config, canonical = load_scenario(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.controller:
        config.controller = args.controller
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    try:
        log, events = run_scenario(config)
    except SimulationFault as exc:
        print(f"simulation fault: {exc}", file=sys.stderr)
        return 3
    wall = time.perf_counter() - started

    for message in log.warnings:
        print(f"warning: {message}", file=sys.stderr)

    traj_path = outdir / "trajectory.csv"
    events_path = outdir / "events.json"
    summary_path = outdir / "summary.json"
    manifest_path = outdir / "manifest.json"
    write_trajectory_csv(traj_path, log)
    write_json(events_path, events_payload(events))
    efforts = effort_summary(log)
    write_json(summary_path, {
        "per_agent_effort": efforts["per_agent"],
        "total_effort": efforts["total"],
        "min_distance": log.min_distance,
        "min_h_tilde": log.min_h_tilde,
        "feasibility_violations": log.feasibility_violations,
    })
    write_json(manifest_path, {
        "config_hash": config_hash(canonical),
        "version": __version__,
        "backend": active_backend(),
        "controller": config.controller,
        "outputs": {
            "trajectory": traj_path.name,
            "events": events_path.name,
            "summary": summary_path.name,
        },
        "wall_time_s": wall,
    })
    print(f"{config.controller} run: {log.t.shape[0]} steps, "
          f"{len(events)} auction events, total effort "
          f"{fmt12(efforts['total'])} rad, min distance "
          f"{fmt12(log.min_distance)} m")
    print(f"outputs written to {outdir}")
    return 0


def _parse_agent_spec(spec):
    agents = []
    for chunk in spec.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        fields = {}
        for item in chunk.split(","):
            if "=" not in item:
                raise ConfigError(f"bad agent spec item {item!r} "
                                  "(expected key=value)")
            key, raw = (part.strip() for part in item.split("=", 1))
            if key not in ("alpha", "n", "gamma", "k"):
                raise ConfigError(f"unknown agent spec key {key!r}")
            fields[key] = raw
        agents.append(fields)
    if len(agents) < 2:
        raise ConfigError("auction needs at least two agents in --agents")
    return agents


def cmd_auction(args):
    try:
        raw_agents = _parse_agent_spec(args.agents)
        vals = []
        for fields in raw_agents:
            vals.append(ValuationParams(
                alpha=float(fields.get("alpha", 1.0)),
                gamma=float(fields.get("gamma", args.gamma)),
                k=float(fields.get("k", args.k)),
                n=int(fields.get("n", 0))))
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    outcome = run_auction(vals, eps=args.eps, grid_step=args.grid,
                          max_rounds=args.max_rounds)
    payload = {
        "credits": [float(c) for c in outcome.credits],
        "payments": [float(p) for p in outcome.payments],
        "iterations": outcome.iterations,
        "converged": outcome.converged,
    }
    print(json.dumps(_round12(payload), indent=2))
    return 0


def cmd_verify(args):
    if args.suite not in SUITES:
        print(f"config error: unknown suite {args.suite!r}; "
              f"choose from {', '.join(SUITES)}", file=sys.stderr)
        return 2
    result = run_suite(args.suite, samples=args.samples, seed=args.seed)
    status = "PASS" if result.passed else "FAIL"
    print(f"{result.name}: worst error {result.worst:.3e} "
          f"(tolerance {result.tolerance:.3e}) {status} [{result.detail}]")
    return 0 if result.passed else 4


def build_parser():
    parser = argparse.ArgumentParser(
        prog="rightofway",
        description="Multi-agent safety filtering with auctioned "
                    "avoidance credit")
    parser.add_argument("--version", action="version",
                        version=f"rightofway {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate a scenario config")
    p_run.add_argument("--config", required=True, help="scenario config path")
    p_run.add_argument("--controller", choices=["auction", "qp"],
                       help="override the controller in the config")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.set_defaults(fn=cmd_run)

    p_auc = sub.add_parser("auction", help="run one standalone credit auction")
    p_auc.add_argument("--agents", required=True,
                       help="semicolon-separated agents, e.g. "
                            "'alpha=1,n=1;alpha=1,n=0'")
    p_auc.add_argument("--gamma", type=float, default=8.0,
                       help="escalation base for agents without gamma=")
    p_auc.add_argument("--k", type=float, default=5.0,
                       help="valuation shape for agents without k=")
    p_auc.add_argument("--eps", type=float, default=1e-6,
                       help="best-response improvement threshold")
    p_auc.add_argument("--grid", type=float, default=1e-4,
                       help="finest demand grid step")
    p_auc.add_argument("--max-rounds", type=int, default=200)
    p_auc.set_defaults(fn=cmd_auction)

    p_ver = sub.add_parser("verify", help="run a numerical oracle suite")
    p_ver.add_argument("suite", help=f"one of: {', '.join(SUITES)}")
    p_ver.add_argument("--samples", type=int, default=None)
    p_ver.add_argument("--seed", type=int, default=7)
    p_ver.set_defaults(fn=cmd_verify)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except SimulationFault as exc:
        print(f"simulation fault: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
