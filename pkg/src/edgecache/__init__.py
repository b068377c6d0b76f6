"""Mean-field modeling, simulation, and cache optimization for offloading
content delivery through small cells and device-to-device relays."""

from .model import (
    ContentClass,
    CostParams,
    EffectiveState,
    Placement,
    Scenario,
    ScenarioConfig,
    ScenarioError,
    effective_state,
    integerize,
    load_scenario,
    save_scenario,
    validate_scenario,
)
from .analytics import (
    ArrivalSchedule,
    Trajectory,
    content_cost,
    content_cost_phases,
    delivery_probability,
    effective_meeting_rate,
    expected_delay,
    holders_requesters_at,
    integrate_generalized,
    relative_cost_decrease,
    sc_delivery_fraction,
    total_cost,
    write_trajectory_csv,
)
from .mctrace import (
    ContactEvent,
    ContactTrace,
    RateMatrix,
    TraceStats,
    generate_community_trace,
    generate_poisson_trace,
    load_trace,
    sample_rate_matrix,
    save_trace,
    trace_stats,
)
from .sim import (
    DisseminationResult,
    EmpiricalCurves,
    exact_ctmc_delivery,
    replication_seeds,
    run_dissemination,
    run_replications,
    write_curves_csv,
)
from .optimizer import (
    SCAllocationParams,
    grid_search_oracle,
    lambda0_from_density,
    optimal_mn_allocation,
    optimal_sc_allocation,
    solve_problem1_numeric,
    write_allocation_csv,
)
from .workload import (
    IntensityProfile,
    PopularityModel,
    bounded_pareto_mean,
    build_diurnal_scenario,
    sample_popularity,
    write_profile_csv,
)

__version__ = "0.1.0"
