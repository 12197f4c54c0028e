"""Command-line interface.

Subcommands cover the full pipeline: trajectory generation, internal-weight
sampling, classification, ridge training, forecast scoring, invariant
histograms, the gradient-descent baseline, and config-driven experiment
sweeps.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from goodweights import __version__, dynamics, forecast, nnbaseline, sampler, train, weights
from goodweights.experiments import ExperimentConfig, run_experiment, write_outputs
from goodweights.weights import ClassBounds


def _integrator_args(p: argparse.ArgumentParser):
    p.add_argument("--dt", type=float, default=0.02, help="sampling interval")
    p.add_argument("--substeps", type=int, default=10, help="RK4 steps per sample")
    p.add_argument("--transient", type=float, default=40.0,
                   help="settle time discarded before recording")


def _bounds_args(p: argparse.ArgumentParser):
    p.add_argument("--l0", type=float, default=0.4, help="linear-range bound")
    p.add_argument("--l1", type=float, default=3.5, help="saturation bound")


def _counts_json(iw, traj, bounds) -> str:
    n_good, n_linear, n_saturated, n_mixed = weights.row_class_counts(iw, traj, bounds)
    return json.dumps({"d_r": iw.d_r, "n_good": n_good, "n_linear": n_linear,
                       "n_saturated": n_saturated, "n_mixed": n_mixed})


def cmd_generate(args) -> int:
    cfg = dynamics.IntegratorConfig(dt_sample=args.dt, substeps=args.substeps,
                                    transient_time=args.transient)
    traj, _ = dynamics.generate_dataset(args.seed, args.n, 1, cfg)
    dynamics.trajectory_to_csv(traj, args.out)
    print(json.dumps({"samples": traj.n_states, "dt": traj.dt, "out": args.out}))
    return 0


def cmd_sample(args) -> int:
    traj = dynamics.trajectory_from_csv(args.data)
    cfg = sampler.SamplerConfig(bounds=ClassBounds(l0=args.l0, l1=args.l1),
                                k_decorrelation=args.k)
    algorithm = {"oneshot": "one-shot"}.get(args.algorithm, args.algorithm)
    iw = sampler.sample_internal_weights(traj, args.dr, args.pg, cfg,
                                         algorithm=algorithm,
                                         bad_mix=args.bad_mix, seed=args.seed)
    weights.save_weights(iw, args.out)
    print(_counts_json(iw, traj, cfg.bounds))
    return 0


def cmd_classify(args) -> int:
    iw = weights.load_weights(args.weights)
    traj = dynamics.trajectory_from_csv(args.data)
    print(_counts_json(iw, traj, ClassBounds(l0=args.l0, l1=args.l1)))
    return 0


def cmd_train(args) -> int:
    iw = weights.load_weights(args.weights)
    traj = dynamics.trajectory_from_csv(args.data)
    model = train.train_model(iw, traj, train.RidgeConfig(beta=args.beta),
                              provenance={"weights": args.weights, "data": args.data})
    train.save_model(model, args.out)
    print(json.dumps({"loss": model.train_loss,
                      "w_norm": float(np.linalg.norm(model.w_out)),
                      "out": args.out}))
    return 0


def cmd_forecast(args) -> int:
    model = train.load_model(args.model)
    validation = dynamics.trajectory_from_csv(args.data)
    cfg = forecast.ForecastConfig(theta=args.theta, lambda_max=args.lambda_max,
                                  horizon_steps=args.horizon)
    outcome = forecast.evaluate_model(model, validation, cfg)
    print(json.dumps({"tau_f": outcome.tau_f, "censored": outcome.censored,
                      "steps": outcome.steps}))
    return 0


def _write_histogram_csv(hist, path) -> None:
    import csv
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["coord", "bin_left", "bin_right", "count"])
        for coord in range(len(hist.edges)):
            edges = hist.edges[coord]
            for k, count in enumerate(hist.counts[coord]):
                writer.writerow(["xyz"[coord], format(float(edges[k]), ".17g"),
                                 format(float(edges[k + 1]), ".17g"), int(count)])


def cmd_histogram(args) -> int:
    model = train.load_model(args.model)
    u0 = dynamics.trajectory_from_csv(args.data).states[:, 0]
    truth = forecast.invariant_histograms(None, u0, args.total_time,
                                          bins=args.bins, burn_in=args.burn_in,
                                          dt=args.dt, substeps=args.substeps)
    hist = forecast.invariant_histograms(model, u0, args.total_time,
                                         bins=args.bins, burn_in=args.burn_in,
                                         dt=args.dt, edges=truth.edges)
    _write_histogram_csv(hist, args.out_csv)
    if args.out_truth_csv:
        _write_histogram_csv(truth, args.out_truth_csv)
    if args.out_svg:
        try:
            import matplotlib
            matplotlib.use("Agg", force=True)
            import matplotlib.pyplot as plt
            fig, axes = plt.subplots(1, 3, figsize=(10, 3))
            for coord in range(3):
                centers = 0.5 * (truth.edges[coord][:-1] + truth.edges[coord][1:])
                axes[coord].plot(centers, truth.counts[coord] / max(truth.total, 1),
                                 "k-", label="truth", lw=1)
                axes[coord].plot(centers, hist.counts[coord] / max(hist.total, 1),
                                 "C0--", label="model", lw=1)
                axes[coord].set_xlabel("xyz"[coord])
            axes[0].legend(fontsize=7)
            fig.savefig(args.out_svg, format="svg", bbox_inches="tight")
        except Exception as exc:
            sys.stderr.write(f"WARNING: SVG plot failed ({exc}); CSV written\n")
    print(json.dumps({"total": hist.total, "valid": hist.valid}))
    return 0


def cmd_nn_train(args) -> int:
    traj = dynamics.trajectory_from_csv(args.data)
    ts = train.TrainingSet.from_trajectory(traj)
    root = np.random.SeedSequence(args.seed)
    init_ss, valid_ss, net_ss = root.spawn(3)
    icfg = dynamics.IntegratorConfig()
    validation = [dynamics.generate_dataset(child, args.horizon, 1, icfg)[0]
                  for child in valid_ss.spawn(args.valid_count)]
    if args.init == "goodrows":
        scfg = sampler.SamplerConfig()
        iw = sampler.sample_internal_weights(traj, args.dr, 1.0, scfg, seed=init_ss)
        model = train.train_model(iw, traj, train.RidgeConfig(beta=args.beta))
        init = nnbaseline.NetParams(w_in=iw.w_in, b_in=iw.b_in, w=model.w_out)
    else:
        init = "glorot"
    _, history = nnbaseline.train_network(
        ts, validation, args.dr, args.beta, args.steps,
        checkpoint_every=args.checkpoint_every,
        rng=np.random.default_rng(net_ss), init=init,
        scheduler=nnbaseline.SchedulerState(eta=args.eta0),
        dtype=np.dtype(args.dtype).type)
    nnbaseline.history_to_csv(history, args.out)
    last = history[-1]
    print(json.dumps({"steps": last.step, "loss": last.loss,
                      "mean_tauf": last.mean_tau_f, "n_good": last.n_good,
                      "out": args.out}))
    return 0


def cmd_run(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    result = run_experiment(cfg, workers=args.workers, keep_going=args.keep_going)
    write_outputs(result, args.out)
    print(json.dumps({"kind": cfg.kind, "records": len(result.records),
                      "errors": len(result.errors), "out": args.out}))
    # without --keep-going a realization failure raises before this point
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="goodweights",
        description="Random feature map surrogates with hit-and-run sampled weights")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="integrate a Lorenz-63 trajectory to CSV")
    p.add_argument("--n", type=int, default=20000, help="recorded samples")
    p.add_argument("--seed", type=int, default=0)
    _integrator_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("sample", help="draw internal weights from a trajectory")
    p.add_argument("--data", required=True, help="trajectory CSV")
    p.add_argument("--dr", type=int, required=True, help="feature dimension")
    p.add_argument("--pg", type=float, default=1.0, help="fraction of good rows")
    p.add_argument("--algorithm", choices=["standard", "oneshot"], default="oneshot")
    p.add_argument("--bad-mix", choices=["balanced", "linear", "saturated"],
                   default="balanced")
    _bounds_args(p)
    p.add_argument("--k", type=int, default=10, help="decorrelation iterations")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="weights container path")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("classify", help="print row class counts as JSON")
    p.add_argument("--weights", required=True)
    p.add_argument("--data", required=True)
    _bounds_args(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("train", help="fit outer weights by ridge regression")
    p.add_argument("--weights", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--out", required=True, help="model container path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("forecast", help="score a model against validation data")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True, help="validation trajectory CSV")
    p.add_argument("--theta", type=float, default=0.05)
    p.add_argument("--lambda-max", type=float, default=0.91)
    p.add_argument("--horizon", type=int, default=1500)
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("histogram", help="long-run marginal histograms vs truth")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True, help="trajectory CSV; first state seeds the runs")
    p.add_argument("--total-time", type=float, default=2000.0)
    p.add_argument("--burn-in", type=float, default=40.0)
    p.add_argument("--bins", type=int, default=100)
    p.add_argument("--dt", type=float, default=0.02)
    p.add_argument("--substeps", type=int, default=10)
    p.add_argument("--out-csv", required=True)
    p.add_argument("--out-truth-csv")
    p.add_argument("--out-svg")
    p.set_defaults(func=cmd_histogram)

    p = sub.add_parser("nn-train", help="gradient-descent single-layer baseline")
    p.add_argument("--data", required=True, help="training trajectory CSV")
    p.add_argument("--dr", type=int, default=300)
    p.add_argument("--beta", type=float, default=4e-5)
    p.add_argument("--steps", type=int, default=50000)
    p.add_argument("--checkpoint-every", type=int, default=10000)
    p.add_argument("--init", choices=["glorot", "goodrows"], default="glorot")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eta0", type=float, default=1e-3)
    p.add_argument("--dtype", choices=["float32", "float64"], default="float32")
    p.add_argument("--valid-count", type=int, default=25)
    p.add_argument("--horizon", type=int, default=1500)
    p.add_argument("--out", required=True, help="history CSV path")
    p.set_defaults(func=cmd_nn_train)

    p = sub.add_parser("run", help="run a config-driven experiment sweep")
    p.add_argument("--config", required=True, help="experiment JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--keep-going", action="store_true",
                   help="record realization errors instead of aborting")
    p.set_defaults(func=cmd_run)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
