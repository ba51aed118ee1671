"""Command line entry points for training, evaluation, and simulation."""

from __future__ import annotations

import argparse
import sys

from lamp.orchestrator import ABLATIONS, BACKENDS, POLICIES, RunConfig, run_eval, run_simulation, run_training


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", default="s1", help="preset name (s1, s2, s3) or a scenario file path")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--episodes", type=int, default=20)
    p.add_argument("--steps", type=int, default=100, help="periods per episode (max 300)")
    p.add_argument("--backend", choices=BACKENDS, default="scripted")
    p.add_argument("--policy", choices=POLICIES, default="lamp")
    p.add_argument(
        "--ablate",
        default="",
        metavar="NAMES",
        help=f"comma-separated subset of {sorted(ABLATIONS)}",
    )
    p.add_argument("--out", default=None, metavar="DIR", help="run directory for csv/log/json artifacts")
    p.add_argument("--checkpoint", default=None, metavar="FILE", help="network weights to start from")
    p.add_argument("--pool-file", default=None, metavar="FILE", help="experience pools to load and save")
    p.add_argument("--embed-endpoint", default=None, metavar="URL", help="remote embeddings service")
    p.add_argument("--embed-sources", choices=("union", "think", "algorithm"), default="union")
    p.add_argument("--batch-size", type=int, default=256)
    p.add_argument("--warmup-factor", type=int, default=2, help="replay warmup in batches")
    p.add_argument("--long-interval", type=int, default=20, help="periods between scheduled checkpoints")
    p.add_argument("--sigma", type=float, default=0.4, help="relative indicator change that triggers short news")
    p.add_argument("--noise-std", type=float, default=0.1)
    p.add_argument("--d-lang", type=int, default=5, help="projected message dimension")
    p.add_argument("--d-e", type=int, default=256, help="raw embedding dimension")
    p.add_argument("--fallback-to-scripted", action="store_true", help="fall back when the remote backend fails")
    p.add_argument("--random-short-rate", type=float, default=None, help="short-news rate for the random trigger ablation")
    p.add_argument("--random-government", action="store_true", help="redraw the fiscal schedule every period")


def _config_from(args: argparse.Namespace) -> RunConfig:
    ablations = frozenset(x.strip() for x in args.ablate.split(",") if x.strip())
    return RunConfig(
        scenario=args.scenario,
        seed=args.seed,
        episodes=args.episodes,
        steps=args.steps,
        backend=args.backend,
        policy=args.policy,
        ablations=ablations,
        out_dir=args.out,
        batch_size=args.batch_size,
        warmup_factor=args.warmup_factor,
        long_interval=args.long_interval,
        sigma=args.sigma,
        noise_std=args.noise_std,
        d_lang=args.d_lang,
        d_e=args.d_e,
        embed_mode=args.embed_sources,
        embed_endpoint=args.embed_endpoint,
        train_selector=getattr(args, "train_selector", False),
        eval_harvest=getattr(args, "eval_harvest", False),
        pool_file=args.pool_file,
        fallback_to_scripted=args.fallback_to_scripted,
        random_government=args.random_government,
        random_short_rate=args.random_short_rate,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lamp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train actors and critic, then write artifacts")
    _add_common(p_train)
    p_train.add_argument("--train-selector", action="store_true", help="also train the statement selector")

    p_eval = sub.add_parser("eval", help="exploration-free rollouts, aggregated over seeds")
    _add_common(p_eval)
    p_eval.add_argument("--seeds", default=None, metavar="LIST", help="comma-separated seeds, e.g. 1,2,3")
    p_eval.add_argument("--eval-harvest", action="store_true", help="let eval episodes feed the long-term pool")

    p_sim = sub.add_parser("simulate", help="roll out a policy without training updates")
    _add_common(p_sim)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _config_from(args)
        if args.command == "train":
            metrics, _ = run_training(config, checkpoint=args.checkpoint)
        elif args.command == "eval":
            seeds = None
            if args.seeds:
                seeds = [int(x) for x in args.seeds.split(",") if x.strip()]
            metrics, summary = run_eval(config, checkpoint=args.checkpoint, seeds=seeds)
            for row in summary["per_seed"]:
                print(
                    f"seed {row['seed']}: reward {row['mean_reward']:.6f} "
                    f"years {row['mean_years']:.1f} welfare {row['mean_welfare']:.6f}"
                )
            agg = summary["aggregate"]
            print(
                "aggregate: reward {mean:.6f} +- {sd:.6f}".format(**agg["mean_reward"])
                + " | welfare {mean:.6f} +- {sd:.6f}".format(**agg["mean_welfare"])
            )
        else:
            metrics = run_simulation(config, checkpoint=args.checkpoint)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    episodes = metrics.episodes
    rewards = [e.avg_household_reward for e in episodes]
    years = [e.years for e in episodes]
    print(
        f"{args.command}: {len(episodes)} episodes, "
        f"mean reward {sum(rewards) / len(rewards):.6f}, "
        f"mean years {sum(years) / len(years):.1f}"
    )
    if args.out:
        print(f"artifacts written to {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
