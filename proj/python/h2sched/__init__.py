from h2sched._core import (
    PlantConfig,
    Tariff,
    baseline_jit,
    clean_trips,
    estimate_fleet,
    fit_fleet,
    is_peak,
    offpeak_dispatch,
    peak_dispatch,
    quarter_demand_kg,
    rate_cents_per_kwh,
    simulate,
    step,
    train_forecaster,
)

__all__ = [
    "PlantConfig",
    "Tariff",
    "baseline_jit",
    "clean_trips",
    "estimate_fleet",
    "fit_fleet",
    "is_peak",
    "offpeak_dispatch",
    "peak_dispatch",
    "quarter_demand_kg",
    "rate_cents_per_kwh",
    "simulate",
    "step",
    "train_forecaster",
]
