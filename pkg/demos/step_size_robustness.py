"""Step-size robustness: the adaptive method tolerates a far wider band.

Sweeps the step size for the grouped scalar-adaptive optimizer and plain
zeroth-order SGD on the same 9-dimensional ill-conditioned quadratic (block
coordinate mode, early stopping at the loss threshold), then reports the
width in decades of the band where the mean final loss stays within 10x of
the method's own best.

Run: python3 demos/step_size_robustness.py   (about half a minute)
"""

from zoptim import ExperimentConfig, coarse_fine_sweep, robust_log_width


def sweep_for(name):
    cfg = ExperimentConfig.from_dict(
        {
            "objective": {"kind": "quadratic", "d": 9, "regime": "heterogeneous", "seed": 0},
            "optimizer": {"name": name},
            "partition": [[0, 3], [3, 6], [6, 9]],
            "T": 3000,
            "q": 1,
            "threshold": 1e-3,
            "stop_at_threshold": True,
            "seeds": [0, 1, 2],
        }
    )
    return coarse_fine_sweep(cfg)


def main():
    for name in ("meazo-grouped", "zo-sgd"):
        sweep = sweep_for(name)
        width = robust_log_width(sweep, factor=10.0)
        print(f"{name}:")
        print(f"  best step size    {sweep.best_eta:.0e}")
        print(f"  usable band       [{width['lo_eta']:.0e}, {width['hi_eta']:.0e}]"
              f"  ({width['log10_width']:.2f} decades)")
        print("  mean final loss by step size:")
        for row in sweep.rows:
            marker = " <-- best" if row["eta"] == sweep.best_eta else ""
            print(f"    {row['eta']:>8.0e}  {row['mean_metric']:.3e}{marker}")
        print()
    print("SGD only converges inside a narrow band below its stability limit,")
    print("while the scalar-normalized update keeps the effective step bounded,")
    print("so over- and under-shooting cost far less.")


if __name__ == "__main__":
    main()
