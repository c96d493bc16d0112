from .fooling import (
    NO_OVER,
    NO_UNDER,
    AttackRecord,
    FoolingCertificate,
    attack_sketch,
    dual_certificate_under,
    fool_no_over,
    fool_no_over_index,
    fool_no_under,
    spike_reference,
    uniform_reference,
    verify_certificate,
    verify_dual_under,
)
from .lp import INFEASIBLE, OPTIMAL, UNBOUNDED, LPError, LPResult, enumerate_vertices, lp_solve
from .rank import (
    RankCertificate,
    greedy_pivots,
    greedy_rank_certificate,
    numerical_rank,
    rank_bound_trace_frobenius,
)
