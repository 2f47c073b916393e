"""A desk-scale run of the statistical-rate experiment.

Full-size runs (eight values of n up to 2^17, 200 trials) go through the CLI:

    singular-em rates --dim 1 --fit isotropic --trials 200 --seed 101 --out r.csv

This demo uses a reduced grid so it finishes in about a minute and still
shows the n^(-1/8)-ish univariate decay next to the faster d=2 rate.
"""

from singular_em.harness import ExperimentSpec, run_rate_experiment

for dims, fit in (((1,), "isotropic"), ((2,), "isotropic"), ((2,), "tied_diagonal")):
    spec = ExperimentSpec(experiment="rates", fit=fit, dims=dims,
                          ns=(1024, 2048, 4096, 8192), trials=12, master_seed=5,
                          init_radius=0.1)
    result = run_rate_experiment(spec)
    d = dims[0]
    print(f"\n{fit} fit, d={d}:")
    for agg in result.aggregates:
        print(f"  n={agg['n']:>6}: mean location error {agg['mean_loc_error']:.4f} "
              f"(+/- {agg['stderr']:.4f}), scale error {agg['mean_scale_error']:.4f}")
    fit_loc = result.loc_fits[d]
    print(f"  fitted location slope {fit_loc.slope:+.3f} "
          f"(stderr {fit_loc.stderr_slope:.3f})")
    if d in result.scale_fits:
        print(f"  fitted scale slope    {result.scale_fits[d].slope:+.3f}")

print("\nreference exponents: -1/8 = -0.125 (slow), -1/4 = -0.25, -1/2 = -0.5")
print("small trial counts make these noisy; the acceptance suite runs the "
      "full grid")
