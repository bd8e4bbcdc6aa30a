"""Clustered uplink scheduling requests: closed-form analytics, Monte-Carlo
validation, and golden-section delay self-optimization."""

from .analytics import (AnalyticReport, analytic_report, cluster_mean,
                        cluster_pmf, delay, efficiency, p_c_d2d, p_ra,
                        p_ra_cgbc, p_ra_rbc)
from .model import (CGBC, RBC, VORONOI_C, ClusteringScheme, DerivedParams,
                    SystemParams, cgbc, db_to_linear, dbm_to_mw, derive,
                    rbc, reference_params)
from .optimize import (GOLDEN, OptimizationResult, golden_section_minimize,
                       iteration_bound, optimize_delta, select_scheme)
from .simulate import (ANALYSIS_MATCHED, PHYSICAL, EmpiricalEstimate,
                       NetworkRealization, PerformanceReport, Region,
                       associate, build_realization, d2d_snapshot, elect_chs,
                       empirical_cluster_pmf, estimate_report, ra_snapshot,
                       run_campaign, sample_ppp)
from .specmath import (AggregateInterferenceLT, gil_pelaez_cdf,
                       hyp2f1_interference, improper_quad, intercell_exponent,
                       log_gamma, lt_aggregate_interference)

__version__ = "0.1.0"
